use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{assemble_rhs_oscillatory, assemble_rhs_steady, nonlinear_residual, smallness_advisor, NonlinearState};
use crate::error::{invalid, Error, Result};
use crate::fields::{project_oscillatory, project_steady, Backend, Field, Region};
use crate::norms::{format_sig17, lq_norm, sobolev_norm_12q, xoseen_norm, NormReport};
use crate::oseen::{
    solve_exterior_with_options, solve_wholespace_tp_oseen, BoundaryData, ExteriorOptions, OseenParams, Pressure,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Stop when the normalized residual drops to this value.
    pub tol: f64,
    pub max_iter: usize,
    /// Under-relaxation `state' = omega new + (1 - omega) old`.
    pub omega: f64,
    /// Exponent of the residual and of the reported norms, in `[6/5, 4/3]`.
    pub q: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50,
            omega: 1.0,
            q: 1.25,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(invalid("picard.tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(invalid("picard.max_iter", "must be at least 1"));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(invalid("picard.omega", format!("must lie in (0, 1], got {}", self.omega)));
        }
        if !(6.0 / 5.0 - 1e-12..=4.0 / 3.0 + 1e-12).contains(&self.q) {
            return Err(invalid("q", format!("must lie in [6/5, 4/3], got {}", self.q)));
        }
        Ok(())
    }
}

/// Where the iteration starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Zero,
    /// `v`, `w` set to the linear response to a random forcing of the given max amplitude.
    Random { seed: u64, amplitude: f64 },
}

/// Iteration history and final diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub residuals: Vec<f64>,
    /// `||x_n - x_{n-1}|| / ||x_{n-1} - x_{n-2}||` (NaN at the first iteration).
    pub contraction_ratios: Vec<f64>,
    /// Boundary-data mismatch of the final iterate (max norm).
    pub boundary_mismatch: f64,
    /// Residual normalization.
    pub data_norm: f64,
    pub final_norms: NormReport,
    pub epsilon: f64,
    pub rho: f64,
    pub lambda: f64,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }

    /// Largest contraction ratio from iteration `from` (1-based) on.
    pub fn max_ratio_from(&self, from: usize) -> f64 {
        self.contraction_ratios
            .iter()
            .skip(from.saturating_sub(1))
            .filter(|r| r.is_finite())
            .fold(0.0, |m, r| m.max(*r))
    }

    /// CSV `iter,residual,contraction_ratio`, then labeled rows `label,value,`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,residual,contraction_ratio\n");
        for (i, (r, c)) in self.residuals.iter().zip(&self.contraction_ratios).enumerate() {
            let _ = writeln!(out, "{},{},{}", i + 1, format_sig17(*r), format_sig17(*c));
        }
        for (label, value) in &self.final_norms.entries {
            let _ = writeln!(out, "{label},{},", format_sig17(*value));
        }
        for (label, value) in [
            ("boundary_mismatch", self.boundary_mismatch),
            ("data_norm", self.data_norm),
            ("epsilon", self.epsilon),
            ("rho", self.rho),
            ("lambda", self.lambda),
        ] {
            let _ = writeln!(out, "{label},{},", format_sig17(value));
        }
        out
    }
}

/// Converged fields and the run history.
#[derive(Debug, Clone)]
pub struct NonlinearSolution {
    pub u: Field,
    pub p: Pressure,
    pub state: NonlinearState,
    pub report: SolveReport,
}

/// The linear map of one Picard step, bound to a grid's backend.
pub struct PicardSolver<'a> {
    pub params: &'a OseenParams,
    pub exterior: ExteriorOptions,
}

impl PicardSolver<'_> {
    /// Time-periodic Oseen solve with homogeneous boundary values.
    fn solve(&self, rhs: &Field) -> Result<(Field, Pressure)> {
        match rhs.grid().backend() {
            Backend::Spectral => {
                let (u, p, _) = solve_wholespace_tp_oseen(rhs, self.params)?;
                Ok((u, p))
            }
            Backend::Exterior => {
                let zero = BoundaryData::zeros(rhs.grid());
                let (u, p, _) = solve_exterior_with_options(rhs, &zero, self.params, &self.exterior)?;
                Ok((u, p))
            }
        }
    }
}

fn split(u: Field, p: Pressure) -> (Field, Pressure, Field, Pressure) {
    let v = project_steady(&u);
    let w = project_oscillatory(&u);
    let p_v = Pressure {
        field: project_steady(&p.field),
        mean_gradient: p.mean_gradient,
    };
    let p_w = Pressure::from_field(project_oscillatory(&p.field));
    (v, p_v, w, p_w)
}

/// One application of the fixed-point map, relaxed by `omega`.
pub fn picard_step(state: &NonlinearState, f: &Field, solver: &PicardSolver, omega: f64) -> Result<NonlinearState> {
    let params = solver.params;
    let rhs = &assemble_rhs_steady(state, f, params) + &assemble_rhs_oscillatory(state, f, params);
    let (u, p) = solver.solve(&rhs)?;
    let (v, p_v, w, p_w) = split(u, p);
    if omega == 1.0 {
        return Ok(state.with_unknowns(v, p_v, w, p_w));
    }
    let mix = |new: &Field, old: &Field| new.scaled(omega).axpy(1.0 - omega, old);
    let mixp = |new: &Pressure, old: &Pressure| new.scaled(omega).add(&old.scaled(1.0 - omega));
    Ok(state.with_unknowns(
        mix(&v, &state.v),
        mixp(&p_v, &state.p_v),
        mix(&w, &state.w),
        mixp(&p_w, &state.p_w),
    ))
}

fn initial_state(lifted: &NonlinearState, init: InitialState, solver: &PicardSolver) -> Result<NonlinearState> {
    match init {
        InitialState::Zero => Ok(lifted.clone()),
        InitialState::Random { seed, amplitude } => {
            let grid = lifted.grid();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let coeffs: Vec<[f64; 6]> = (0..3).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
            let l = grid.box_len();
            let om = grid.omega();
            let g = Field::from_fn(grid, 3, |t, x, o| {
                let k = 2.0 * std::f64::consts::PI / l;
                for (c, a) in coeffs.iter().enumerate() {
                    o[c] = a[0] * (k * x[(c + 1) % 3] + a[1]).sin()
                        + a[2] * (om * t + k * x[(c + 2) % 3] + a[3]).cos()
                        + a[4] * (k * x[c] + a[5]).sin();
                }
            });
            let (u, p) = solver.solve(&g)?;
            let s = if u.max_abs() > 0.0 { amplitude / u.max_abs() } else { 0.0 };
            let (v, p_v, w, p_w) = split(u.scaled(s), p.scaled(s));
            Ok(lifted.with_unknowns(v, p_v, w, p_w))
        }
    }
}

fn unknowns_distance(a: &NonlinearState, b: &NonlinearState) -> f64 {
    let d = &(&a.v - &b.v) + &(&a.w - &b.w);
    lq_norm(&d, 2.0, Region::Interior)
}

/// Picard iteration for the nonlinear problem with frozen lifts.
///
/// The residual is normalized by `max(||f||_q, r_lift, 1e-30)` where `r_lift`
/// is the residual of the lifts alone, so pure boundary-driven runs are
/// measured relative to their data.
pub fn picard_solve(
    f: &Field,
    bc: Option<&BoundaryData>,
    params: &OseenParams,
    cfg: &PicardConfig,
    init: InitialState,
    exterior: &ExteriorOptions,
) -> Result<NonlinearSolution> {
    cfg.validate()?;
    let lambda = params.lambda();
    if !(lambda > 0.0) {
        return Err(invalid("lambda", "the nonlinear problem needs a nonzero mean translation"));
    }
    let advice = smallness_advisor(lambda, cfg.q)?;
    let grid = f.grid();
    let solver = PicardSolver {
        params,
        exterior: *exterior,
    };
    let lifted = match bc {
        Some(bc) => NonlinearState::with_lifts(bc, params, exterior)?,
        None => NonlinearState::zeros(grid),
    };
    let lift_residual = nonlinear_residual(&lifted.velocity(), &lifted.pressure(), f, bc, params, cfg.q).equation;
    let data_norm = lq_norm(f, cfg.q, Region::Interior).max(lift_residual).max(1e-30);
    let mut state = initial_state(&lifted, init, &solver)?;
    let mut residuals = Vec::new();
    let mut ratios = Vec::new();
    let mut last_step = f64::NAN;
    let mut increases = 0;
    loop {
        let next = picard_step(&state, f, &solver, cfg.omega)?;
        let step = unknowns_distance(&next, &state);
        state = next;
        let res = nonlinear_residual(&state.velocity(), &state.pressure(), f, bc, params, cfg.q);
        let r = res.equation / data_norm;
        ratios.push(if last_step > 0.0 { step / last_step } else { f64::NAN });
        last_step = step;
        if let Some(prev) = residuals.last() {
            increases = if r > *prev { increases + 1 } else { 0 };
        }
        residuals.push(r);
        if !r.is_finite() || increases >= 3 {
            return Err(Error::Diverged {
                iteration: residuals.len(),
                residual: r,
                advised_epsilon: advice.epsilon,
            });
        }
        if r <= cfg.tol {
            let report = SolveReport {
                residuals,
                contraction_ratios: ratios,
                boundary_mismatch: res.boundary,
                data_norm,
                final_norms: final_norms(&state, cfg.q, lambda),
                epsilon: advice.epsilon,
                rho: advice.rho,
                lambda,
            };
            return Ok(NonlinearSolution {
                u: state.velocity(),
                p: state.pressure(),
                state,
                report,
            });
        }
        if residuals.len() >= cfg.max_iter {
            return Err(Error::MaxIterations {
                max_iter: cfg.max_iter,
                residual: r,
            });
        }
    }
}

fn final_norms(state: &NonlinearState, q: f64, lambda: f64) -> NormReport {
    let s = 3.0 * q / (3.0 - q);
    let mut r = NormReport::new();
    r.push("v_xoseen_q", xoseen_norm(&state.v, q, lambda).expect("validated exponent"));
    r.push("w_sobolev_q", sobolev_norm_12q(&state.w, q));
    r.push("w_sobolev_3q", sobolev_norm_12q(&state.w, s));
    r.push("u_steady_xoseen_q", xoseen_norm(&state.steady_velocity(), q, lambda).expect("validated exponent"));
    r.push("u_oscillatory_sobolev_q", sobolev_norm_12q(&state.oscillatory_velocity(), q));
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::PeriodicGrid;
    use std::f64::consts::PI;

    #[test]
    fn zero_data_converges_in_one_step() {
        let g = PeriodicGrid::spectral(2.0, 8, [8, 8, 8], 2.0 * PI).unwrap().into_shared();
        let params = OseenParams::uniform(1.0, 0.5, 8).unwrap();
        let sol = picard_solve(
            &Field::zeros(&g, 3),
            None,
            &params,
            &PicardConfig::default(),
            InitialState::Zero,
            &ExteriorOptions::default(),
        )
        .unwrap();
        assert!(sol.u.is_zero() && sol.p.field.is_zero());
        assert_eq!(sol.report.iterations(), 1);
    }

    #[test]
    fn first_step_is_the_linear_response() {
        let g = PeriodicGrid::spectral(2.0, 8, [8, 8, 8], 2.0 * PI).unwrap().into_shared();
        let params = OseenParams::uniform(1.0, 0.5, 8).unwrap();
        let f = Field::from_fn(&g, 3, |t, x, o| {
            o[0] = 1e-3 * x[1].sin();
            o[1] = 1e-3 * (PI * t).cos() * x[2].cos();
        });
        let solver = PicardSolver {
            params: &params,
            exterior: ExteriorOptions::default(),
        };
        let s = picard_step(&NonlinearState::zeros(&g), &f, &solver, 1.0).unwrap();
        let (u, _, _) = solve_wholespace_tp_oseen(&f, &params).unwrap();
        assert!(s.v.max_abs_diff(&project_steady(&u)) < 1e-15);
        assert!(s.w.max_abs_diff(&project_oscillatory(&u)) < 1e-15);
        assert!(s.splitting_defect() < 1e-11);
    }

    #[test]
    fn config_validation() {
        let bad = PicardConfig {
            omega: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PicardConfig {
            q: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
