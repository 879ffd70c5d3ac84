use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use tpflow::fields::{Field, PeriodicGrid, Region};
use tpflow::nonlinear::{
    assemble_rhs_oscillatory, assemble_rhs_steady, nonlinear_residual, picard_solve, picard_step, InitialState,
    NonlinearState, PicardConfig, PicardSolver,
};
use tpflow::norms::lq_norm;
use tpflow::oseen::{ExteriorOptions, OseenParams, Pressure};
use tpflow::verify::{band_limited_field, manufactured_case, CaseKind, TimeContent};

fn grid() -> Arc<PeriodicGrid> {
    PeriodicGrid::spectral(2.0, 8, [8, 8, 8], 2.0 * PI).unwrap().into_shared()
}

/// Steady vector fields `a`, `b` with their Jacobians `d_i a_j`, at wavenumber one.
fn a_field(x: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let v = [x[1].sin(), x[2].cos(), (x[0] + x[1]).sin()];
    let mut j = [[0.0; 3]; 3];
    j[1][0] = x[1].cos();
    j[2][1] = -x[2].sin();
    j[0][2] = (x[0] + x[1]).cos();
    j[1][2] = (x[0] + x[1]).cos();
    (v, j)
}

fn b_field(x: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let v = [x[2].cos(), (x[0] - x[2]).sin(), x[1].cos()];
    let mut j = [[0.0; 3]; 3];
    j[2][0] = -x[2].sin();
    j[0][1] = (x[0] - x[2]).cos();
    j[2][1] = -(x[0] - x[2]).cos();
    j[1][2] = -x[1].sin();
    (v, j)
}

/// `(c . grad) d` from the values and Jacobians.
fn convect(c: [f64; 3], jd: [[f64; 3]; 3]) -> [f64; 3] {
    std::array::from_fn(|k| (0..3).map(|i| c[i] * jd[i][k]).sum())
}

/// `W = cos(omega t) a + sin(omega t) b`.
fn one_mode(g: &Arc<PeriodicGrid>) -> Field {
    let om = g.omega();
    Field::from_fn(g, 3, |t, x, o| {
        let (a, _) = a_field(x);
        let (b, _) = b_field(x);
        for c in 0..3 {
            o[c] = (om * t).cos() * a[c] + (om * t).sin() * b[c];
        }
    })
}

fn small_forcing(g: &Arc<PeriodicGrid>, amplitude: f64, seed: u64) -> Field {
    let f = band_limited_field(g, 3, TimeContent::Full, seed);
    f.scaled(amplitude / f.max_abs())
}

#[test]
fn steady_self_interaction_matches_the_time_average() {
    let g = grid();
    let params = OseenParams::uniform(1.0, 0.5, g.nt()).unwrap();
    let mut state = NonlinearState::zeros(&g);
    state.w = one_mode(&g);
    let got = assemble_rhs_steady(&state, &Field::zeros(&g, 3), &params);
    // P[(w.grad)w] = ((a.grad)a + (b.grad)b)/2, the cross terms average out
    let want = Field::from_fn(&g, 3, |_, x, o| {
        let (a, ja) = a_field(x);
        let (b, jb) = b_field(x);
        let (aa, bb) = (convect(a, ja), convect(b, jb));
        for c in 0..3 {
            o[c] = -0.5 * (aa[c] + bb[c]);
        }
    });
    assert!(got.max_abs_diff(&want) < 1e-11, "{}", got.max_abs_diff(&want));
}

#[test]
fn oscillatory_lift_terms_match_a_direct_assembly() {
    let g = grid();
    let lambda = 0.75;
    let params = OseenParams::uniform(1.0, lambda, g.nt()).unwrap();
    let om = g.omega();
    let mut state = NonlinearState::zeros(&g);
    state.lift_w = one_mode(&g);
    let f = band_limited_field(&g, 3, TimeContent::Oscillatory, 12);
    let got = assemble_rhs_oscillatory(&state, &f, &params);
    let want = Field::from_fn(&g, 3, |t, x, o| {
        let (a, ja) = a_field(x);
        let (b, jb) = b_field(x);
        let (c, s) = ((om * t).cos(), (om * t).sin());
        let w: [f64; 3] = std::array::from_fn(|k| c * a[k] + s * b[k]);
        let dt: [f64; 3] = std::array::from_fn(|k| om * (-s * a[k] + c * b[k]));
        let d1: [f64; 3] = std::array::from_fn(|k| c * ja[0][k] + s * jb[0][k]);
        let jw: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|k| c * ja[i][k] + s * jb[i][k]));
        let full = convect(w, jw);
        let (aa, bb) = (convect(a, ja), convect(b, jb));
        for k in 0..3 {
            let osc = full[k] - 0.5 * (aa[k] + bb[k]);
            o[k] = -dt[k] - w[k] - lambda * d1[k] - osc;
        }
    });
    let want = &want + &f;
    assert!(got.max_abs_diff(&want) < 1e-11, "{}", got.max_abs_diff(&want));
}

#[test]
fn residual_grows_linearly_with_a_perturbation() {
    let g = PeriodicGrid::spectral(1.0, 12, [12, 12, 12], 2.0 * PI).unwrap().into_shared();
    let params = OseenParams::uniform(1.0, 1.0, g.nt()).unwrap();
    let case = manufactured_case(CaseKind::Nonlinear, &g, &params, 5, 0.05).unwrap();
    let p = Pressure::from_field(case.p.clone());
    let noise = band_limited_field(&g, 3, TimeContent::Full, 99);
    let noise = noise.scaled(case.u.max_abs() / noise.max_abs());
    let q = 1.25;
    let base = nonlinear_residual(&case.u, &p, &case.forcing, None, &params, q).equation;
    let r = |delta: f64| nonlinear_residual(&case.u.axpy(delta, &noise), &p, &case.forcing, None, &params, q).equation;
    let (r4, r3) = (r(1e-4), r(1e-3));
    assert!(base < 1e-3 * r4, "unperturbed residual {base} vs {r4}");
    let ratio = r3 / r4;
    assert!((8.0..=12.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn solution_scales_linearly_with_small_data() {
    let g = grid();
    let params = OseenParams::uniform(1.0, 1.0, g.nt()).unwrap();
    let cfg = PicardConfig {
        tol: 1e-11,
        ..PicardConfig::default()
    };
    let norm = |amp: f64| {
        let f = small_forcing(&g, amp, 3);
        let sol = picard_solve(&f, None, &params, &cfg, InitialState::Zero, &ExteriorOptions::default()).unwrap();
        lq_norm(&sol.u, 2.0, Region::All)
    };
    let (big, small) = (1e-2, 5e-3);
    let slope = (norm(big) / norm(small)).ln() / (big / small).ln();
    assert!((0.9..=1.1).contains(&slope), "slope {slope}");
}

#[test]
fn contraction_improves_as_data_shrinks() {
    let g = grid();
    let params = OseenParams::uniform(1.0, 0.5, g.nt()).unwrap();
    let cfg = PicardConfig {
        tol: 1e-12,
        ..PicardConfig::default()
    };
    let worst = |amp: f64| {
        let f = small_forcing(&g, amp, 8);
        let sol = picard_solve(&f, None, &params, &cfg, InitialState::Zero, &ExteriorOptions::default()).unwrap();
        sol.report.max_ratio_from(2)
    };
    let (big, small) = (worst(0.2), worst(0.05));
    assert!(big < 1.0 && small < big, "{big} {small}");
}

#[test]
fn different_starting_points_reach_the_same_solution() {
    let g = grid();
    let params = OseenParams::uniform(1.0, 0.5, g.nt()).unwrap();
    let cfg = PicardConfig {
        tol: 1e-10,
        ..PicardConfig::default()
    };
    let f = small_forcing(&g, 0.05, 21);
    let opts = ExteriorOptions::default();
    let a = picard_solve(&f, None, &params, &cfg, InitialState::Zero, &opts).unwrap();
    let b = picard_solve(&f, None, &params, &cfg, InitialState::Random { seed: 4, amplitude: 0.05 }, &opts).unwrap();
    let diff = lq_norm(&(&a.u - &b.u), 2.0, Region::All) / lq_norm(&a.u, 2.0, Region::All);
    assert!(diff < 10.0 * cfg.tol, "{diff}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn steps_preserve_the_splitting(seed in any::<u64>(), omega in 0.3f64..=1.0) {
        let g = grid();
        let params = OseenParams::uniform(1.0, 0.5, g.nt()).unwrap();
        let solver = PicardSolver { params: &params, exterior: ExteriorOptions::default() };
        let f = small_forcing(&g, 0.1, seed);
        let mut state = NonlinearState::zeros(&g);
        for _ in 0..3 {
            state = picard_step(&state, &f, &solver, omega).unwrap();
            prop_assert!(state.splitting_defect() <= 1e-11, "{}", state.splitting_defect());
        }
    }

    #[test]
    fn zero_is_a_fixed_point(seed in any::<u64>()) {
        let g = grid();
        let lambda = 0.25 + (seed % 4) as f64 * 0.25;
        let params = OseenParams::uniform(1.0, lambda, g.nt()).unwrap();
        let solver = PicardSolver { params: &params, exterior: ExteriorOptions::default() };
        let state = NonlinearState::zeros(&g);
        let next = picard_step(&state, &Field::zeros(&g, 3), &solver, 1.0).unwrap();
        prop_assert!(next.v.is_zero() && next.w.is_zero());
    }
}
