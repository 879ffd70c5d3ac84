//! Time-periodic Oseen solvers.
//!
//! The system `d_t u - nu Delta u + lambda d_1 u + grad p = F`, `div u = 0` is
//! solved one temporal Fourier mode at a time. The whole-space backend divides
//! by the Fourier symbol exactly. The exterior backend uses a fictitious-domain
//! formulation: the periodic finite-difference operator is inverted by FFT and
//! point forces on the boundary cells, found by GMRES, enforce the Dirichlet
//! data.
//!
//! In a periodic box the steady mean forcing cannot be balanced by a decaying
//! velocity. The box-mean velocity of the `k = 0` mode is fixed to zero and the
//! mean forcing is carried by a uniform pressure gradient, stored in
//! [`Pressure::mean_gradient`].

mod exterior;
pub mod gmres;
mod modes;
mod params;
mod periodic;
mod wholespace;

use std::fmt::Write as _;

pub use exterior::{
    solve_exterior_tp_oseen, solve_exterior_with_options, solve_lift_oscillatory, solve_lift_steady,
    solve_mode_exterior, solve_steady_diagnostic, ExteriorOptions, InitialGuess, ModeSolution,
};
pub use modes::{from_time_modes, l2_norm_parts, time_modes, ModeField};
pub use params::{BoundaryData, ModeSymbol, OseenParams};
pub use wholespace::solve_wholespace_tp_oseen;

use crate::fields::{diff, gradient, laplacian, Axis, Backend, Field, Region};
use crate::norms::format_sig17;

/// Pressure field plus the uniform steady gradient balancing the mean forcing.
#[derive(Debug, Clone, PartialEq)]
pub struct Pressure {
    pub field: Field,
    pub mean_gradient: [f64; 3],
}

impl Pressure {
    pub fn zeros(grid: &std::sync::Arc<crate::fields::PeriodicGrid>) -> Self {
        Self {
            field: Field::zeros(grid, 1),
            mean_gradient: [0.0; 3],
        }
    }

    pub fn from_field(field: Field) -> Self {
        assert_eq!(field.ncomp(), 1);
        Self {
            field,
            mean_gradient: [0.0; 3],
        }
    }

    /// `grad p` including the uniform part.
    pub fn gradient(&self) -> Field {
        let mut g = gradient(&self.field);
        if self.mean_gradient != [0.0; 3] {
            let grid = g.grid().clone();
            let uniform = Field::from_fn(&grid, 3, |_, _, o| o.copy_from_slice(&self.mean_gradient));
            g = &g + &uniform;
        }
        g
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            field: self.field.scaled(s),
            mean_gradient: self.mean_gradient.map(|g| g * s),
        }
    }

    pub fn add(&self, other: &Pressure) -> Self {
        Self {
            field: &self.field + &other.field,
            mean_gradient: [0, 1, 2].map(|i| self.mean_gradient[i] + other.mean_gradient[i]),
        }
    }
}

/// `d_t u - nu Delta u + lambda d_1 u + grad p` with the grid backend's operators.
pub fn forward_apply(u: &Field, p: &Pressure, params: &OseenParams) -> Field {
    assert_eq!(u.ncomp(), 3);
    let nu = params.nu();
    let lambda = params.lambda();
    let mut out = diff(u, Axis::T);
    out = out.axpy(-nu, &laplacian(u));
    if lambda != 0.0 {
        out = out.axpy(lambda, &diff(u, Axis::X));
    }
    &out + &p.gradient()
}

/// Per-mode statistics of a linear solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub k: i64,
    pub residual: f64,
    /// `((2 pi/T)|k| ||u_k|| + ||grad^2 u_k|| + ||grad p_k||) / ||F_k||` in L^2; NaN when `F_k = 0`.
    pub c_k: f64,
    pub seconds: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSolveReport {
    pub backend: Backend,
    pub modes: Vec<ModeReport>,
}

impl LinearSolveReport {
    pub fn max_residual(&self) -> f64 {
        self.modes.iter().fold(0.0, |m, r| m.max(r.residual))
    }

    pub fn mode(&self, k: i64) -> Option<&ModeReport> {
        self.modes.iter().find(|m| m.k == k)
    }

    /// CSV with columns `k,residual,c_k,seconds`, sorted by `k`.
    pub fn to_csv(&self) -> String {
        let mut modes = self.modes.clone();
        modes.sort_by_key(|m| m.k);
        let mut out = String::from("k,residual,c_k,seconds\n");
        for m in &modes {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                m.k,
                format_sig17(m.residual),
                format_sig17(m.c_k),
                format_sig17(m.seconds)
            );
        }
        out
    }
}

/// The mode constant `c_k` measured over `region`.
pub fn mode_constant(u: &ModeField, p: &ModeField, f: &ModeField, omega: f64, region: Region) -> f64 {
    let fnorm = f.l2_norm(region);
    if fnorm == 0.0 {
        return f64::NAN;
    }
    let hess = u.hessian();
    let hess_refs: Vec<&ModeField> = hess.iter().collect();
    let num = omega * u.k().abs() as f64 * u.l2_norm(region)
        + l2_norm_parts(&hess_refs, region)
        + p.gradient().l2_norm(region);
    num / fnorm
}
