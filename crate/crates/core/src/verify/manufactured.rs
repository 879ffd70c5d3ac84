//! Manufactured time-periodic solutions.
//!
//! The velocity is `u = curl psi` with
//! `psi = chi(x) sum_m a_m cos(k_m omega t + xi_m . x + phi_m)`, where `chi`
//! is a smooth cutoff vanishing near the obstacle (identically 1 without
//! one). Derivatives are taken exactly with [`Jet`] arithmetic, so the forcing
//! is the continuous operator applied to `u`, not its discretization.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::jet::Jet;
use crate::error::{invalid, Error, Result};
use crate::fields::{Backend, Field, PeriodicGrid, Region};
use crate::nonlinear::{picard_solve, InitialState, PicardConfig};
use crate::norms::lq_norm;
use crate::oseen::{
    solve_exterior_with_options, solve_wholespace_tp_oseen, BoundaryData, ExteriorOptions, OseenParams, Pressure,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    /// Time-periodic Oseen system on the spectral backend.
    WholespaceLinear,
    /// Time-periodic Oseen system around the obstacle, zero data on the body.
    ExteriorLinear,
    /// Full nonlinear system with the `zeta` profile of the parameters.
    Nonlinear,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::WholespaceLinear => "wholespace-linear",
            CaseKind::ExteriorLinear => "exterior-linear",
            CaseKind::Nonlinear => "nonlinear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wholespace-linear" => Some(CaseKind::WholespaceLinear),
            "exterior-linear" => Some(CaseKind::ExteriorLinear),
            "nonlinear" => Some(CaseKind::Nonlinear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Wave {
    /// Vector amplitude (potential) or scalar amplitude in slot 0 (pressure).
    amp: [f64; 3],
    xi: [f64; 3],
    k: i64,
    phase: f64,
}

/// Smooth step from 0 (for `|x - c| <= r1`) to 1 (for `|x - c| >= r2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub center: [f64; 3],
    pub r1: f64,
    pub r2: f64,
}

impl Cutoff {
    fn jet(&self, x: &[Jet; 3]) -> Jet {
        let mut r2 = Jet::constant(0.0);
        for a in 0..3 {
            let d = x[a] - Jet::constant(self.center[a]);
            r2 = r2 + d * d;
        }
        let s = (r2 - Jet::constant(self.r1 * self.r1)).scale(1.0 / (self.r2 * self.r2 - self.r1 * self.r1));
        let sv = s.value();
        if sv <= 0.0 {
            return Jet::constant(0.0);
        }
        if sv >= 1.0 {
            return Jet::constant(1.0);
        }
        let bump = |s: Jet| s.recip().scale(-1.0).exp();
        let g = bump(s);
        let h = bump(Jet::constant(1.0) - s);
        g * (g + h).recip()
    }
}

/// Random potential and pressure coefficients; evaluated on any grid with the same box and period.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    waves: Vec<Wave>,
    pressure: Vec<Wave>,
    pub cutoff: Option<Cutoff>,
}

/// Largest spatial and temporal integer wavenumbers per kind.
fn band(kind: CaseKind) -> (i64, i64) {
    match kind {
        CaseKind::WholespaceLinear => (2, 2),
        CaseKind::ExteriorLinear => (1, 2),
        CaseKind::Nonlinear => (1, 1),
    }
}

impl Potential {
    /// Draws four velocity waves and two pressure waves from `seed`.
    pub fn draw(kind: CaseKind, seed: u64, amplitude: f64, box_len: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (kmax, tmax) = band(kind);
        let base = 2.0 * PI / box_len;
        let wave = |rng: &mut ChaCha8Rng, scalar: bool| {
            let idx = loop {
                let i: [i64; 3] = std::array::from_fn(|_| rng.random_range(-kmax..=kmax));
                if i != [0, 0, 0] {
                    break i;
                }
            };
            let xi = idx.map(|i| i as f64 * base);
            let kappa = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut amp: [f64; 3] = std::array::from_fn(|_| {
                let z: f64 = StandardNormal.sample(rng);
                amplitude * z / kappa
            });
            if scalar {
                let z: f64 = StandardNormal.sample(rng);
                amp = [amplitude * z, 0.0, 0.0];
            }
            Wave {
                amp,
                xi,
                k: rng.random_range(0..=tmax),
                phase: rng.random_range(0.0..2.0 * PI),
            }
        };
        let waves = (0..4).map(|_| wave(&mut rng, false)).collect();
        let pressure = (0..2).map(|_| wave(&mut rng, true)).collect();
        Self {
            waves,
            pressure,
            cutoff: None,
        }
    }

    pub fn with_cutoff(mut self, cutoff: Cutoff) -> Self {
        self.cutoff = Some(cutoff);
        self
    }
}

/// Exact solution of a manufactured problem and its data.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedCase {
    pub kind: CaseKind,
    pub seed: u64,
    pub amplitude: f64,
    pub params: OseenParams,
    pub u: Field,
    /// Exact mean-free pressure.
    pub p: Field,
    /// `F` (linear kinds) or `f` (nonlinear kind).
    pub forcing: Field,
    /// Values of `u` on the boundary cells (zero data when `chi` hides the body).
    pub bc: BoundaryData,
    /// Largest pointwise `|div u|` from the exact derivatives.
    pub divergence_defect: f64,
    pub potential: Potential,
}

/// Point values of the velocity and its derivatives at one space-time point.
struct Local {
    u: [f64; 3],
    du: [[f64; 3]; 3],
    lap: [f64; 3],
    dt: [f64; 3],
}

fn curl_jets(psi: &[Jet; 3]) -> [Jet; 3] {
    let d = |c: usize, a: usize| psi[c].derivative(a);
    [d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)]
}

fn unit(a: usize) -> [u8; 3] {
    let mut e = [0; 3];
    e[a] = 1;
    e
}

fn twice(a: usize) -> [u8; 3] {
    let mut e = [0; 3];
    e[a] = 2;
    e
}

impl Potential {
    /// Per-wave jets `chi cos(xi.x + phi)` and `chi sin(xi.x + phi)` at `x`.
    fn spatial_jets(&self, x: [f64; 3]) -> Vec<(Jet, Jet)> {
        let xj = [Jet::variable(0, x[0]), Jet::variable(1, x[1]), Jet::variable(2, x[2])];
        let chi = self.cutoff.map(|c| c.jet(&xj)).unwrap_or(Jet::constant(1.0));
        self.waves
            .iter()
            .map(|w| {
                let mut theta = Jet::constant(w.phase);
                for a in 0..3 {
                    theta = theta + xj[a].scale(w.xi[a]);
                }
                (chi * theta.cos(), chi * theta.sin())
            })
            .collect()
    }

    fn local(&self, jets: &[(Jet, Jet)], omega: f64, t: f64) -> Local {
        let mut psi = [Jet::constant(0.0); 3];
        let mut psi_t = [Jet::constant(0.0); 3];
        for (w, (c, s)) in self.waves.iter().zip(jets) {
            let kw = w.k as f64 * omega;
            let (st, ct) = (kw * t).sin_cos();
            // cos(kwt + theta) = cos(kwt) cos(theta) - sin(kwt) sin(theta)
            let value = c.scale(ct) - s.scale(st);
            let rate = (c.scale(-st) - s.scale(ct)).scale(kw);
            for comp in 0..3 {
                psi[comp] = psi[comp] + value.scale(w.amp[comp]);
                psi_t[comp] = psi_t[comp] + rate.scale(w.amp[comp]);
            }
        }
        let u = curl_jets(&psi);
        let ut = curl_jets(&psi_t);
        Local {
            u: u.map(|j| j.value()),
            du: std::array::from_fn(|i| std::array::from_fn(|a| u[i].partial(unit(a)))),
            lap: u.map(|j| (0..3).map(|a| j.partial(twice(a))).sum()),
            dt: ut.map(|j| j.value()),
        }
    }

    fn pressure_at(&self, omega: f64, t: f64, x: [f64; 3]) -> (f64, [f64; 3]) {
        let mut p = 0.0;
        let mut g = [0.0; 3];
        for w in &self.pressure {
            let theta = w.k as f64 * omega * t + w.xi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w.phase;
            let (s, c) = theta.sin_cos();
            p += w.amp[0] * c;
            for a in 0..3 {
                g[a] -= w.amp[0] * s * w.xi[a];
            }
        }
        (p, g)
    }

    /// Samples `u`, `p` and the forcing on `grid`.
    ///
    /// The linear forcing is `d_t u - nu Delta u + lambda d_1 u + grad p`; with
    /// `nonlinear` it is `d_t u + ((u + zeta e_1).grad)u - nu Delta u + grad p`.
    pub fn evaluate(&self, grid: &Arc<PeriodicGrid>, params: &OseenParams, nonlinear: bool) -> (Field, Field, Field, f64) {
        let nt = grid.nt();
        let cells = grid.cells();
        let omega = grid.omega();
        let nu = params.nu();
        let mut u = vec![0.0; nt * 3 * cells];
        let mut p = vec![0.0; nt * cells];
        let mut f = vec![0.0; nt * 3 * cells];
        let mut div = 0.0_f64;
        for cell in 0..cells {
            let x = grid.position(cell);
            let jets = self.spatial_jets(x);
            for ti in 0..nt {
                let t = ti as f64 * grid.dt();
                let l = self.local(&jets, omega, t);
                let (pv, gp) = self.pressure_at(omega, t, x);
                p[ti * cells + cell] = pv;
                div = div.max((l.du[0][0] + l.du[1][1] + l.du[2][2]).abs());
                let drift = if nonlinear { params.zeta()[ti] } else { params.lambda() };
                for c in 0..3 {
                    let mut v = l.dt[c] - nu * l.lap[c] + drift * l.du[c][0] + gp[c];
                    if nonlinear {
                        v += (0..3).map(|a| l.u[a] * l.du[c][a]).sum::<f64>();
                    }
                    u[(ti * 3 + c) * cells + cell] = l.u[c];
                    f[(ti * 3 + c) * cells + cell] = v;
                }
            }
        }
        let field = |data, ncomp| Field::from_samples(grid, ncomp, data).expect("finite samples");
        (field(u, 3), field(p, 1), field(f, 3), div)
    }
}

/// Default cutoff for an exterior grid: `r1 = R* + 3 h`, `r2 = L/2`.
pub fn default_cutoff(grid: &PeriodicGrid) -> Option<Cutoff> {
    grid.obstacle().map(|o| {
        let h = (0..3).map(|a| grid.spacing(a)).fold(0.0, f64::max);
        Cutoff {
            center: o.center,
            r1: o.r_star + 3.0 * h,
            r2: 0.5 * grid.box_len(),
        }
    })
}

fn check_band(kind: CaseKind, grid: &PeriodicGrid) -> Result<()> {
    let (kmax, tmax) = band(kind);
    let n_min = grid.n().into_iter().min().unwrap_or(0) as i64;
    let nt = grid.nt() as i64;
    let ok = match kind {
        // Products stay inside the dealiased band `3|k| < n`.
        CaseKind::Nonlinear => 6 * kmax < n_min && 6 * tmax < nt,
        _ => 2 * kmax < n_min && 2 * tmax < nt,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!(
            "{} case needs more than {} samples per axis",
            kind.name(),
            if kind == CaseKind::Nonlinear { 6 * kmax.max(tmax) } else { 2 * kmax.max(tmax) }
        )))
    }
}

/// Builds the case for `potential` on `grid`.
pub fn case_from_potential(
    kind: CaseKind,
    grid: &Arc<PeriodicGrid>,
    params: &OseenParams,
    potential: Potential,
    seed: u64,
    amplitude: f64,
) -> Result<ManufacturedCase> {
    match (kind, grid.backend()) {
        (CaseKind::WholespaceLinear, Backend::Exterior) => return Err(Error::UnsupportedBackend { required: "spectral" }),
        (CaseKind::ExteriorLinear, Backend::Spectral) => return Err(Error::UnsupportedBackend { required: "exterior" }),
        _ => {}
    }
    check_band(kind, grid)?;
    params.check_grid(grid)?;
    let (u, p, forcing, divergence_defect) = potential.evaluate(grid, params, kind == CaseKind::Nonlinear);
    let bc = match grid.obstacle() {
        Some(o) => {
            let mut values = Vec::with_capacity(grid.nt() * o.boundary.len());
            for t in 0..grid.nt() {
                for b in &o.boundary {
                    values.push([0, 1, 2].map(|c| u.get(t, c, b.cell)));
                }
            }
            BoundaryData::new(grid, values)?
        }
        None => BoundaryData::zeros(grid),
    };
    Ok(ManufacturedCase {
        kind,
        seed,
        amplitude,
        params: params.clone(),
        u,
        p,
        forcing,
        bc,
        divergence_defect,
        potential,
    })
}

/// Draws a manufactured case from `seed`.
///
/// Linear kinds use spatial wavenumbers up to 2 (1 around the obstacle) and
/// temporal modes up to 2; the nonlinear kind stays at 1 so that quadratic
/// terms are resolved exactly by the dealiased product.
pub fn manufactured_case(
    kind: CaseKind,
    grid: &Arc<PeriodicGrid>,
    params: &OseenParams,
    seed: u64,
    amplitude: f64,
) -> Result<ManufacturedCase> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(invalid("amplitude", format!("must be nonnegative, got {amplitude}")));
    }
    let mut potential = Potential::draw(kind, seed, amplitude, grid.box_len());
    if let Some(c) = default_cutoff(grid) {
        potential = potential.with_cutoff(c);
    }
    case_from_potential(kind, grid, params, potential, seed, amplitude)
}

/// A solver run against a manufactured case.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub u: Field,
    pub p: Pressure,
    /// `||u_h - u||_2 / ||u||_2` over the cells where the equations hold.
    pub relative_error: f64,
    pub seconds: f64,
}

/// Solves the case with the matching solver and compares with the exact velocity.
pub fn recover(case: &ManufacturedCase, picard: &PicardConfig) -> Result<Recovery> {
    let start = Instant::now();
    let grid = case.u.grid();
    let (u, p) = match case.kind {
        CaseKind::WholespaceLinear => {
            let (u, p, _) = solve_wholespace_tp_oseen(&case.forcing, &case.params)?;
            (u, p)
        }
        CaseKind::ExteriorLinear => {
            let (u, p, _) = solve_exterior_with_options(&case.forcing, &case.bc, &case.params, &ExteriorOptions::default())?;
            (u, p)
        }
        CaseKind::Nonlinear => {
            let bc = grid.obstacle().map(|_| &case.bc);
            let sol = picard_solve(&case.forcing, bc, &case.params, picard, InitialState::Zero, &ExteriorOptions::default())?;
            (sol.u, sol.p)
        }
    };
    let region = if grid.obstacle().is_some() { Region::Interior } else { Region::All };
    let exact = lq_norm(&case.u, 2.0, region);
    let err = lq_norm(&(&u - &case.u), 2.0, region);
    let relative_error = if exact > 0.0 { err / exact } else { err };
    Ok(Recovery {
        u,
        p,
        relative_error,
        seconds: start.elapsed().as_secs_f64(),
    })
}
