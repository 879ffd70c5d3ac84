//! Acceptance run: one `criterion N: PASS|FAIL` line per criterion.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use tpflow::fields::io::{field_to_bytes, read_field_standalone};
use tpflow::fields::{project_oscillatory, project_steady};
use tpflow::nonlinear::{picard_solve, InitialState, NonlinearSolution, PicardConfig};
use tpflow::norms::lq_spacetime_norm;
use tpflow::oseen::{solve_steady_diagnostic, BoundaryData, ExteriorOptions, OseenParams};
use tpflow::verify::{
    audit_embedding, audit_lambda_sweep, audit_linear_estimate, audit_modewise, audit_nonlinear_term,
    band_limited_field, case_from_potential, default_cutoff, manufactured_case, nonlinear_term_sides,
    oseen_wake_ratio, random_steady_solenoidal, recover, wake_diagnostic, CaseKind, Potential, TimeContent,
};
use tpflow::{Field, PeriodicGrid};
use tpflow_cli::{parse_config, run, Subcommand, EXIT_OK};

type Outcome = (bool, String);

fn criterion_1() -> Outcome {
    let g = PeriodicGrid::spectral(1.0, 16, [32; 3], 2.0 * PI).unwrap().into_shared();
    let params = OseenParams::uniform(1.0, 1.0, 16).unwrap();
    let start = Instant::now();
    let case = manufactured_case(CaseKind::WholespaceLinear, &g, &params, 42, 1.0).unwrap();
    let rec = recover(&case, &PicardConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    (
        rec.relative_error < 1e-10 && secs < 10.0,
        format!("relative error {:.2e}, {secs:.1} s", rec.relative_error),
    )
}

fn criterion_2() -> Outcome {
    let (l, nt) = (8.0, 16);
    let start = Instant::now();
    let coarse = PeriodicGrid::exterior(2.0, nt, [16; 3], l, 1.0, 2.0).unwrap();
    let potential = Potential::draw(CaseKind::ExteriorLinear, 1, 1.0, l).with_cutoff(default_cutoff(&coarse).unwrap());
    let params = OseenParams::uniform(1.0, 0.5, nt).unwrap();
    let mut errors = Vec::new();
    for n in [16usize, 32, 48] {
        let g = PeriodicGrid::exterior(2.0, nt, [n; 3], l, 1.0, 2.0).unwrap().into_shared();
        let case = case_from_potential(CaseKind::ExteriorLinear, &g, &params, potential.clone(), 1, 1.0).unwrap();
        errors.push((l / n as f64, recover(&case, &PicardConfig::default()).unwrap().relative_error));
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect();
    let secs = start.elapsed().as_secs_f64();
    let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
    (
        worst >= 1.7 && secs < 600.0,
        format!(
            "errors {:.2e} {:.2e} {:.2e}, orders {:.2} {:.2}, {secs:.0} s",
            errors[0].1, errors[1].1, errors[2].1, orders[0], orders[1]
        ),
    )
}

fn criterion_3() -> Outcome {
    let g = PeriodicGrid::spectral(1.5, 8, [8; 3], 2.0 * PI).unwrap().into_shared();
    let (mut proj, mut parseval) = (0.0f64, 0.0f64);
    for seed in 0..50 {
        let f = band_limited_field(&g, 3, TimeContent::Full, seed);
        let scale = f.max_abs();
        let p = project_steady(&f);
        let q = project_oscillatory(&f);
        proj = proj
            .max(project_steady(&p).max_abs_diff(&p) / scale)
            .max((&p + &q).max_abs_diff(&f) / scale)
            .max(project_steady(&q).max_abs() / scale)
            .max(project_oscillatory(&p).max_abs() / scale);
        let sampled = lq_spacetime_norm(&f, 2.0).powi(2);
        let coeffs: f64 = f.to_spectral().spectrum().unwrap().iter().map(|c| c.norm_sqr()).sum();
        parseval = parseval.max((sampled - coeffs * g.box_len().powi(3)).abs() / sampled);
    }
    (
        proj <= 1e-13 && parseval <= 1e-10,
        format!("projection defect {proj:.1e}, Parseval defect {parseval:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let g = PeriodicGrid::exterior(2.0, 18, [16; 3], 8.0, 1.0, 2.0).unwrap().into_shared();
    let params = OseenParams::uniform(1.0, 0.5, 18).unwrap();
    let r = audit_modewise(&g, &params, 8, 1).unwrap();
    let d = r.stats.dispersion();
    (d <= 4.0 && r.rows.len() == 8, format!("max c_k / min c_k = {d:.3} over k = 1..8"))
}

fn criterion_5() -> Outcome {
    let g = PeriodicGrid::exterior(2.0, 8, [16; 3], 8.0, 1.0, 2.0).unwrap().into_shared();
    let params = OseenParams::uniform(1.0, 0.5, 8).unwrap();
    let est = audit_linear_estimate(&g, &params, 1.25, 30, 100).unwrap();
    let sweep = audit_lambda_sweep(&g, &params, &[0.25, 0.5, 1.0], 1.25, 30, 100).unwrap();
    let (d, s) = (est.stats.dispersion(), sweep.stats.dispersion());
    (
        d <= 20.0 && s <= 3.0,
        format!("ensemble dispersion {d:.3}, constant spread across lambda {s:.3}"),
    )
}

fn criterion_6() -> Outcome {
    let g = PeriodicGrid::spectral(2.0 * PI, 8, [16; 3], 2.0 * PI).unwrap().into_shared();
    let mut pass = true;
    let mut detail = Vec::new();
    for (alpha, beta) in [(0.5, 0.5), (0.5, 1.0)] {
        let r = audit_embedding(&g, 2.0, alpha, beta, 20, 100, 7).unwrap();
        let v = r.note("violations").unwrap();
        pass &= v == 0.0;
        detail.push(format!("(alpha, beta) = ({alpha}, {beta}): {v} violations"));
    }
    (pass, detail.join(", "))
}

fn towed_case(n: usize, l: f64, lambda: f64, amp: f64) -> (Arc<PeriodicGrid>, OseenParams, BoundaryData) {
    let nt = 8;
    let g = PeriodicGrid::exterior(2.0, nt, [n; 3], l, 1.2, 2.5).unwrap().into_shared();
    let params = OseenParams::from_fourier(1.0, lambda, &[(0.1 * lambda, 0.0)], nt, 1.0).unwrap();
    let zmax = params.zeta().iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let profile: Vec<f64> = params.zeta().iter().map(|z| amp * z / zmax).collect();
    let bc = BoundaryData::towed(&g, &profile).unwrap();
    (g, params, bc)
}

fn towed_solve(
    case: &(Arc<PeriodicGrid>, OseenParams, BoundaryData),
    init: InitialState,
    max_iter: usize,
) -> tpflow::Result<NonlinearSolution> {
    let (g, params, bc) = case;
    let cfg = PicardConfig {
        max_iter,
        ..PicardConfig::default()
    };
    picard_solve(&Field::zeros(g, 3), Some(bc), params, &cfg, init, &ExteriorOptions::default())
}

fn criterion_7() -> (Outcome, NonlinearSolution) {
    let lambda = 0.5;
    let amp = lambda * lambda;
    let case = towed_case(16, 8.0, lambda, amp);
    let start = Instant::now();
    let a = towed_solve(&case, InitialState::Zero, 20).unwrap();
    let b = towed_solve(&case, InitialState::Random { seed: 3, amplitude: amp }, 20).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ratio = a.report.max_ratio_from(2).max(b.report.max_ratio_from(2));
    let residual = a.report.final_residual();
    let agree = a.u.max_abs_diff(&b.u) / a.u.max_abs();
    let pass = ratio <= 0.5 && residual < 1e-8 && a.report.iterations() <= 20 && agree <= 1e-6 && secs < 900.0;
    let detail = format!(
        "{} iterations, max ratio from 2 {ratio:.3}, residual {residual:.1e}, init disagreement {agree:.1e}, {secs:.1} s",
        a.report.iterations()
    );
    ((pass, detail), a)
}

fn criterion_8() -> Outcome {
    let mut thresholds = Vec::new();
    for lambda in [0.25, 0.5, 1.0] {
        let mut largest = 0.0;
        for j in 0..24 {
            let amp = 2.0 * 2f64.powf(j as f64 / 4.0);
            let case = towed_case(16, 8.0, lambda, amp);
            match towed_solve(&case, InitialState::Zero, 60) {
                Ok(_) => largest = amp,
                Err(_) => break,
            }
        }
        thresholds.push(largest);
    }
    let pass = thresholds[0] > 0.0 && thresholds.windows(2).all(|w| w[1] >= w[0]);
    (
        pass,
        format!(
            "largest convergent amplitude {:.3} {:.3} {:.3} at lambda 1/4 1/2 1",
            thresholds[0], thresholds[1], thresholds[2]
        ),
    )
}

fn criterion_9() -> Outcome {
    let (l, nu) = (16.0, 1.0);
    let g = PeriodicGrid::exterior(2.0, 2, [32; 3], l, 1.0, 2.0).unwrap().into_shared();
    let bc = BoundaryData::towed(&g, &[1.0, 1.0]).unwrap();
    let opts = ExteriorOptions::default();
    let r = l / 3.0;
    let (u, _) = solve_steady_diagnostic(&bc, nu, 1.0, &opts).unwrap();
    let (u0, _) = solve_steady_diagnostic(&bc, nu, 0.0, &opts).unwrap();
    let wake = wake_diagnostic(&u, r).unwrap().ratio;
    let control = wake_diagnostic(&u0, r).unwrap().ratio;
    let oracle = oseen_wake_ratio(r, nu, 1.0);
    let pass = wake >= 2.0 && (0.8..=1.25).contains(&control) && wake > 1.0 && oracle > 1.0;
    (
        pass,
        format!("ratio {wake:.3} (need >= 2), control {control:.3}, oracle {oracle:.3}"),
    )
}

fn criterion_10() -> Outcome {
    let g = PeriodicGrid::spectral(2.0 * PI, 2, [16; 3], 2.0 * PI).unwrap().into_shared();
    let lambdas = [0.25, 0.5, 1.0];
    let mut pass = true;
    let mut detail = Vec::new();
    for q in [1.2, 1.25, 4.0 / 3.0] {
        let v = random_steady_solenoidal(&g, 11).unwrap();
        let (l1, r1) = nonlinear_term_sides(&v, q, 0.5).unwrap();
        let (l2, r2) = nonlinear_term_sides(&v.scaled(7.0), q, 0.5).unwrap();
        let drift = ((l2 / r2) / (l1 / r1) - 1.0).abs();
        let r = audit_nonlinear_term(&g, q, &lambdas, 10, 3).unwrap();
        let v = r.note("violations").unwrap();
        pass &= r.pass && drift < 1e-12;
        detail.push(format!("q {q:.3}: {v} violations, scale drift {drift:.0e}"));
    }
    (pass, detail.join(", "))
}

fn criterion_11(small: &NonlinearSolution) -> Outcome {
    let lambda = 0.5;
    let large = towed_solve(&towed_case(32, 16.0, lambda, lambda * lambda), InitialState::Zero, 20).unwrap();
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for label in ["u_steady_xoseen_q", "u_oscillatory_sobolev_q"] {
        let a = small.report.final_norms.get(label).unwrap();
        let b = large.report.final_norms.get(label).unwrap();
        let change = (b - a).abs() / a;
        worst = worst.max(change);
        detail.push(format!("{label} {a:.4} -> {b:.4} ({:.1}%)", 100.0 * change));
    }
    (worst < 0.15, detail.join(", "))
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("tpof" | "csv")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let text = "backend=exterior\ngrid.nt=4\ngrid.n=12\ngrid.box=6\ngrid.period=1\nnu=1\nlambda=0.5\n\
                obstacle.radius_star=1\nobstacle.radius_zero=2\nforcing=random\nforcing.amplitude=0.05\nseed=17\n";
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let cfg = parse_config(text).unwrap().with_overrides(Some(dir.path().join(name)), None);
        let m = run(Subcommand::SolveNonlinear, &cfg);
        assert_eq!(m.exit_code, EXIT_OK, "{:?}", m.errors);
        outputs.push(read_outputs(&dir.path().join(name)));
    }
    let identical = outputs[0] == outputs[1] && outputs[0].len() >= 4;

    let mut round_trip = true;
    for (name, bytes) in &outputs[0] {
        if name.ends_with(".tpof") {
            let f = read_field_standalone(bytes.as_slice()).unwrap();
            round_trip &= &field_to_bytes(&f) == bytes;
        }
    }
    let g = PeriodicGrid::spectral(1.0, 4, [6, 8, 4], 3.0).unwrap().into_shared();
    let f = band_limited_field(&g, 3, TimeContent::Full, 5);
    let back = read_field_standalone(field_to_bytes(&f).as_slice()).unwrap();
    round_trip &= back.samples().iter().zip(f.samples()).all(|(a, b)| a.to_bits() == b.to_bits());
    (
        identical && round_trip,
        format!(
            "{} TPOF/CSV files bit-identical: {identical}, round trip bit-exact: {round_trip}",
            outputs[0].len()
        ),
    )
}

#[test]
fn acceptance() {
    let mut results: Vec<Outcome> = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5(), criterion_6()];
    let (c7, towed) = criterion_7();
    results.push(c7);
    results.push(criterion_8());
    results.push(criterion_9());
    results.push(criterion_10());
    results.push(criterion_11(&towed));
    results.push(criterion_12());

    let mut failed = Vec::new();
    for (i, (pass, detail)) in results.iter().enumerate() {
        println!("criterion {}: {} {detail}", i + 1, if *pass { "PASS" } else { "FAIL" });
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
