//! Fixed-point construction for the time-periodic Navier–Stokes problem
//! `d_t u + ((u + zeta e_1) . grad) u - nu Delta u + grad p = f`, `u = u_*` on the body.
//!
//! The unknown is split as `u = v + V + w + W`: steady and oscillatory parts
//! with homogeneous boundary values plus two frozen lifts carrying the data.
//! Each Picard step solves one time-periodic Oseen system whose steady and
//! oscillatory right-hand sides are assembled here.

mod advisor;
mod picard;

pub use advisor::{smallness_advisor, SmallnessAdvice};
pub use picard::{
    picard_solve, picard_step, InitialState, NonlinearSolution, PicardConfig, PicardSolver, SolveReport,
};

use crate::error::{Error, Result};
use crate::fields::{
    advect, diff, filter_time_nyquist, oscillatory_profile, profile_product, project_oscillatory, project_steady,
    Axis, Backend, Field, PeriodicGrid, Region,
};
use crate::norms::lq_norm;
use crate::oseen::{
    forward_apply, solve_lift_oscillatory, solve_lift_steady, BoundaryData, ExteriorOptions, OseenParams, Pressure,
};
use std::sync::Arc;

/// The four pairs of the ansatz `u = v + V + w + W`, `p = p_v + p_V + p_w + p_W`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearState {
    pub v: Field,
    pub p_v: Pressure,
    pub w: Field,
    pub p_w: Pressure,
    pub lift_v: Field,
    pub p_lift_v: Pressure,
    pub lift_w: Field,
    pub p_lift_w: Field,
}

impl NonlinearState {
    pub fn zeros(grid: &Arc<PeriodicGrid>) -> Self {
        Self {
            v: Field::zeros(grid, 3),
            p_v: Pressure::zeros(grid),
            w: Field::zeros(grid, 3),
            p_w: Pressure::zeros(grid),
            lift_v: Field::zeros(grid, 3),
            p_lift_v: Pressure::zeros(grid),
            lift_w: Field::zeros(grid, 3),
            p_lift_w: Field::zeros(grid, 1),
        }
    }

    /// Zero `v`, `w` with the lifts of `bc` (computed once; they stay frozen).
    pub fn with_lifts(bc: &BoundaryData, params: &OseenParams, opts: &ExteriorOptions) -> Result<Self> {
        let grid = bc.grid();
        let mut state = Self::zeros(grid);
        if bc.is_zero() {
            return Ok(state);
        }
        if grid.backend() != Backend::Exterior {
            return Err(Error::UnsupportedBackend { required: "exterior" });
        }
        let steady = bc.steady();
        if !steady.is_zero() {
            let (v, p) = solve_lift_steady(&steady, params, opts)?;
            state.lift_v = v;
            state.p_lift_v = p;
        }
        let osc = bc.oscillatory();
        if !osc.is_zero() {
            let (w, p) = solve_lift_oscillatory(&osc, params, opts)?;
            state.lift_w = w;
            state.p_lift_w = p;
        }
        Ok(state)
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        self.v.grid()
    }

    /// Steady velocity `v + V`.
    pub fn steady_velocity(&self) -> Field {
        &self.v + &self.lift_v
    }

    /// Oscillatory velocity `w + W`.
    pub fn oscillatory_velocity(&self) -> Field {
        &self.w + &self.lift_w
    }

    pub fn velocity(&self) -> Field {
        &self.steady_velocity() + &self.oscillatory_velocity()
    }

    pub fn pressure(&self) -> Pressure {
        self.p_v
            .add(&self.p_lift_v)
            .add(&self.p_w)
            .add(&Pressure::from_field(self.p_lift_w.clone()))
    }

    /// The same lifts with `v`, `w` and their pressures replaced.
    pub fn with_unknowns(&self, v: Field, p_v: Pressure, w: Field, p_w: Pressure) -> Self {
        Self {
            v,
            p_v,
            w,
            p_w,
            ..self.clone()
        }
    }

    /// Largest violation of the steady/oscillatory splitting.
    pub fn splitting_defect(&self) -> f64 {
        [
            project_oscillatory(&self.v).max_abs(),
            project_steady(&self.w).max_abs(),
            project_oscillatory(&self.p_v.field).max_abs(),
            project_steady(&self.p_w.field).max_abs(),
            project_oscillatory(&self.lift_v).max_abs(),
            project_steady(&self.lift_w).max_abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Steady right-hand side `R_v`.
///
/// Bilinearity groups the products: with `s = v + V` and `o = w + W`,
/// `R_v = -(s.grad)s - P[(o.grad)o] - P[zeta' d_1 o] + P f` where
/// `zeta' = P-perp zeta`.
pub fn assemble_rhs_steady(state: &NonlinearState, f: &Field, params: &OseenParams) -> Field {
    let s = state.steady_velocity();
    let o = state.oscillatory_velocity();
    let zeta_osc = oscillatory_profile(params.zeta());
    let mut acc = advect(&s, &s);
    acc = &acc + &advect(&o, &o);
    acc = &acc + &profile_product(&zeta_osc, &diff(&o, Axis::X));
    project_steady(&(&f.clone() - &acc))
}

/// Oscillatory right-hand side `R_w`.
///
/// With `s = v + V`, `o = w + W`:
/// `R_w = -P-perp[(o.grad)o] - (s.grad)o - (o.grad)s - zeta' d_1 s - P-perp[zeta' d_1 o]
/// - d_t W - W - lambda d_1 W + P-perp f`.
/// The lift terms follow from `-nu Delta W + grad p_W = W`.
pub fn assemble_rhs_oscillatory(state: &NonlinearState, f: &Field, params: &OseenParams) -> Field {
    let s = state.steady_velocity();
    let o = state.oscillatory_velocity();
    let zeta_osc = oscillatory_profile(params.zeta());
    let mut acc = advect(&o, &o);
    acc = &acc + &advect(&s, &o);
    acc = &acc + &advect(&o, &s);
    acc = &acc + &profile_product(&zeta_osc, &diff(&s, Axis::X));
    acc = &acc + &profile_product(&zeta_osc, &diff(&o, Axis::X));
    let lift = &state.lift_w;
    if !lift.is_zero() {
        acc = &acc + &diff(lift, Axis::T);
        acc = &acc + lift;
        acc = acc.axpy(params.lambda(), &diff(lift, Axis::X));
    }
    project_oscillatory(&(&f.clone() - &acc))
}

/// Residual of the nonlinear system, split into the equation part and the boundary mismatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearResidual {
    /// `L^q` norm over the cells where the equations hold (temporal Nyquist mode removed).
    pub equation: f64,
    /// Max-norm mismatch with the boundary data (0 without an obstacle).
    pub boundary: f64,
}

/// `d_t u + ((u + zeta e_1).grad)u - nu Delta u + grad p - f`.
pub fn nonlinear_operator(u: &Field, p: &Pressure, params: &OseenParams) -> Field {
    let zeta_osc = oscillatory_profile(params.zeta());
    let mut out = forward_apply(u, p, params);
    out = &out + &advect(u, u);
    if zeta_osc.iter().any(|z| *z != 0.0) {
        out = &out + &profile_product(&zeta_osc, &diff(u, Axis::X));
    }
    out
}

pub fn nonlinear_residual(
    u: &Field,
    p: &Pressure,
    f: &Field,
    bc: Option<&BoundaryData>,
    params: &OseenParams,
    q: f64,
) -> NonlinearResidual {
    let r = filter_time_nyquist(&(&nonlinear_operator(u, p, params) - f));
    let equation = lq_norm(&r, q, Region::Interior);
    let boundary = match (bc, u.grid().obstacle()) {
        (Some(bc), Some(obstacle)) => {
            let mut m = 0.0_f64;
            for t in 0..u.grid().nt() {
                for (b, value) in obstacle.boundary.iter().zip(bc.slice(t)) {
                    for c in 0..3 {
                        m = m.max((u.get(t, c, b.cell) - value[c]).abs());
                    }
                }
            }
            m
        }
        _ => 0.0,
    };
    NonlinearResidual { equation, boundary }
}
