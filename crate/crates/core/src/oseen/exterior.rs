//! Exterior-domain solves on a periodic box with a voxelized obstacle.
//!
//! The finite-difference Oseen system holds on every cell except the
//! boundary cells, where the Dirichlet rows apply. Each boundary cell carries
//! an unknown point force; the velocity generated by the forcing plus these
//! forces (through the FFT-based periodic inverse) must equal the data on the
//! boundary cells. This small capacitance system is solved by GMRES. Solid
//! cells hold a fictitious interior flow that norms and diagnostics ignore.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::gmres::{gmres, GmresOptions};
use super::modes::{from_time_modes, time_modes, ModeField};
use super::periodic::PeriodicInverse;
use super::{mode_constant, BoundaryData, LinearSolveReport, ModeReport, OseenParams, Pressure};
use crate::error::{invalid, Error, Result};
use crate::fields::{Backend, Field, PeriodicGrid, Region};

/// Starting point for the boundary-force iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialGuess {
    Zero,
    /// Pseudo-random forces drawn from the given seed.
    Random(u64),
}

#[derive(Debug, Clone, Copy)]
pub struct ExteriorOptions {
    pub gmres: GmresOptions,
    pub initial_guess: InitialGuess,
}

impl Default for ExteriorOptions {
    fn default() -> Self {
        Self {
            gmres: GmresOptions::default(),
            initial_guess: InitialGuess::Zero,
        }
    }
}

/// One solved temporal mode.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub u: ModeField,
    /// Pressure with zero mean over the annulus `Omega_R0`.
    pub p: ModeField,
    pub mean_gradient: [Complex64; 3],
    /// Boundary-cell forces, `3 * b + component`.
    pub forces: Vec<Complex64>,
    /// Relative residual of the boundary rows.
    pub residual: f64,
    /// Relative size of the boundary data component that no discretely
    /// solenoidal field can match (removed before the solve).
    pub incompatibility: f64,
    pub iterations: usize,
    pub seconds: f64,
}

/// A single mode system `(sigma + nu(-Delta_h) + lambda D_1) u + G p = F`, `D.u = 0`.
pub(crate) struct ModeProblem<'a> {
    pub k: i64,
    pub sigma: Complex64,
    pub nu: f64,
    pub lambda: f64,
    pub forcing: Option<&'a ModeField>,
    pub bc: Option<&'a [[Complex64; 3]]>,
    pub guess: Option<&'a [Complex64]>,
}

fn boundary_cells(grid: &PeriodicGrid) -> Vec<usize> {
    grid.obstacle().map(|o| o.boundary.iter().map(|b| b.cell).collect()).unwrap_or_default()
}

fn place(cells: usize, bcells: &[usize], x: &[Complex64]) -> [Vec<Complex64>; 3] {
    let mut out = [0, 1, 2].map(|_| vec![Complex64::default(); cells]);
    for (j, &cell) in bcells.iter().enumerate() {
        for c in 0..3 {
            out[c][cell] += x[3 * j + c];
        }
    }
    out
}

fn gather(u: &[Vec<Complex64>; 3], bcells: &[usize]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(3 * bcells.len());
    for &cell in bcells {
        for comp in u {
            out.push(comp[cell]);
        }
    }
    out
}

/// Compatibility conditions on boundary data imposed by the centered divergence.
///
/// Centered differences only couple cells of equal coordinate parity along each
/// axis. Summing the discrete divergence over the solid cells of one parity
/// class telescopes to a combination of values on the neighbors of that class;
/// when all of them are boundary cells, every discretely solenoidal field
/// satisfies a linear condition on its boundary values. Returned as unit
/// vectors in the `3 * b + component` layout (supports are disjoint).
pub(crate) fn parity_constraints(grid: &PeriodicGrid, bcells: &[usize]) -> Vec<Vec<Complex64>> {
    let Some(obstacle) = grid.obstacle() else {
        return Vec::new();
    };
    let mut index = vec![usize::MAX; grid.cells()];
    for (j, &c) in bcells.iter().enumerate() {
        index[c] = j;
    }
    let mut out = Vec::new();
    for parity in 0..8usize {
        let mut w = vec![0.0_f64; 3 * bcells.len()];
        let mut compatible = true;
        let mut any = false;
        'cells: for cell in 0..grid.cells() {
            if !obstacle.solid[cell] {
                continue;
            }
            let xyz = grid.cell_coords(cell);
            if (0..3).any(|a| (xyz[a] % 2) != (parity >> a) & 1) {
                continue;
            }
            any = true;
            for a in 0..3 {
                for (step, sign) in [(1isize, 1.0), (-1, -1.0)] {
                    let d = grid.neighbor(cell, a, step);
                    let other = grid.neighbor(d, a, step);
                    if obstacle.solid[other] && grid.cell_coords(other) != xyz {
                        // interior pair: both neighbors belong to the class
                        let oc = grid.cell_coords(other);
                        if (0..3).all(|b| oc[b] % 2 == (parity >> b) & 1) {
                            continue;
                        }
                    }
                    if index[d] == usize::MAX {
                        compatible = false;
                        break 'cells;
                    }
                    w[3 * index[d] + a] += sign;
                }
            }
        }
        if !any || !compatible {
            continue;
        }
        let n = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.0 {
            out.push(w.into_iter().map(|v| Complex64::new(v / n, 0.0)).collect());
        }
    }
    out
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn solve_mode(grid: &Arc<PeriodicGrid>, prob: &ModeProblem, opts: &ExteriorOptions) -> Result<ModeSolution> {
    let start = Instant::now();
    let cells = grid.cells();
    let bcells = boundary_cells(grid);
    let nb = bcells.len();
    let inv = PeriodicInverse::new(grid, prob.sigma, prob.nu, prob.lambda);
    let forcing: [Vec<Complex64>; 3] = match prob.forcing {
        Some(f) => [0, 1, 2].map(|c| f.component(c).to_vec()),
        None => [0, 1, 2].map(|_| vec![Complex64::default(); cells]),
    };
    let has_forcing = forcing.iter().flatten().any(|v| v.norm() != 0.0);
    let mut rhs: Vec<Complex64> = match prob.bc {
        Some(bc) => bc.iter().flat_map(|v| v.iter().copied()).collect(),
        None => vec![Complex64::default(); 3 * nb],
    };
    if rhs.len() != 3 * nb {
        return Err(Error::ShapeMismatch(format!("boundary data for {} cells, grid has {nb}", rhs.len() / 3)));
    }
    if has_forcing && nb > 0 {
        let u0 = inv.solve(forcing.clone(), false).u;
        for (r, v) in rhs.iter_mut().zip(gather(&u0, &bcells)) {
            *r -= v;
        }
    }
    // Remove the incompatible part of the data and deflate the matching
    // gradient forces, which generate no velocity.
    let constraints = parity_constraints(grid, &bcells);
    let data_norm = norm(&rhs);
    let mut defect2 = 0.0;
    for l in &constraints {
        let dot: Complex64 = l.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        defect2 += dot.norm_sqr();
        for (r, a) in rhs.iter_mut().zip(l) {
            *r -= dot * a;
        }
    }
    let incompatibility = if data_norm > 0.0 { defect2.sqrt() / data_norm } else { 0.0 };
    let raw_apply = |x: &[Complex64]| gather(&inv.solve(place(cells, &bcells, x), false).u, &bcells);
    let shift = if constraints.is_empty() || nb == 0 {
        0.0
    } else {
        let mut e = vec![Complex64::default(); 3 * nb];
        e[0] = Complex64::new(1.0, 0.0);
        raw_apply(&e)[0].norm()
    };
    let apply = |x: &[Complex64]| {
        let mut y = raw_apply(x);
        for l in &constraints {
            let dot: Complex64 = l.iter().zip(x).map(|(a, b)| a * b).sum();
            for (v, a) in y.iter_mut().zip(l) {
                *v += shift * dot * a;
            }
        }
        y
    };
    let x0 = match (prob.guess, opts.initial_guess) {
        (Some(g), _) if g.len() == 3 * nb => g.to_vec(),
        (_, InitialGuess::Zero) => vec![Complex64::default(); 3 * nb],
        (_, InitialGuess::Random(seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (prob.k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let raw: Vec<Complex64> = (0..3 * nb)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let image = norm(&apply(&raw));
            let s = if image > 0.0 { norm(&rhs) / image } else { 0.0 };
            raw.into_iter().map(|v| v * s).collect()
        }
    };
    let (forces, residual, iterations) = if nb == 0 {
        (Vec::new(), 0.0, 0)
    } else {
        let out = gmres(apply, &rhs, x0, opts.gmres);
        if !out.converged {
            return Err(Error::NotConverged {
                k: prob.k,
                residual: out.relative_residual,
                iterations: out.iterations,
            });
        }
        (out.x, out.relative_residual, out.iterations)
    };
    let mut total = forcing;
    let extra = place(cells, &bcells, &forces);
    for c in 0..3 {
        for (t, e) in total[c].iter_mut().zip(&extra[c]) {
            *t += e;
        }
    }
    let sol = inv.solve(total, true);
    let mut p = sol.p.expect("pressure requested");
    let mask = grid.region_mask(Region::Annulus);
    let count = mask.iter().filter(|m| **m).count();
    if count > 0 {
        let mean = p.iter().zip(&mask).filter(|(_, m)| **m).map(|(v, _)| *v).sum::<Complex64>() / count as f64;
        p.iter_mut().for_each(|v| *v -= mean);
    }
    let mut udata = Vec::with_capacity(3 * cells);
    for comp in sol.u {
        udata.extend(comp);
    }
    Ok(ModeSolution {
        u: ModeField::from_data(grid, prob.k, 3, udata),
        p: ModeField::from_data(grid, prob.k, 1, p),
        mean_gradient: sol.mean_gradient,
        forces,
        residual,
        incompatibility,
        iterations,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Solves independent mode problems in parallel; results keep the input order.
pub(crate) fn solve_modes(
    grid: &Arc<PeriodicGrid>,
    problems: &[ModeProblem],
    opts: &ExteriorOptions,
) -> Result<Vec<ModeSolution>> {
    problems.par_iter().map(|p| solve_mode(grid, p, opts)).collect()
}

fn check_exterior(grid: &PeriodicGrid) -> Result<()> {
    if grid.backend() != Backend::Exterior {
        return Err(Error::UnsupportedBackend { required: "exterior" });
    }
    Ok(())
}

fn omega(grid: &PeriodicGrid) -> f64 {
    2.0 * PI / grid.period()
}

fn reject_steady_stokes(k: i64, params: &OseenParams) -> Result<()> {
    if k == 0 && params.lambda() == 0.0 {
        return Err(invalid("lambda", "the steady mode needs lambda > 0 on the exterior backend"));
    }
    Ok(())
}

/// Solves mode `f_k.k()` with zero Dirichlet data on the obstacle.
pub fn solve_mode_exterior(f_k: &ModeField, params: &OseenParams, opts: &ExteriorOptions) -> Result<ModeSolution> {
    let grid = f_k.grid();
    check_exterior(grid)?;
    if f_k.ncomp() != 3 {
        return Err(Error::ShapeMismatch("mode forcing must have 3 components".into()));
    }
    reject_steady_stokes(f_k.k(), params)?;
    let prob = ModeProblem {
        k: f_k.k(),
        sigma: Complex64::new(0.0, omega(grid) * f_k.k() as f64),
        nu: params.nu(),
        lambda: params.lambda(),
        forcing: Some(f_k),
        bc: None,
        guess: None,
    };
    solve_mode(grid, &prob, opts)
}

/// Time-periodic exterior solve with default solver options.
pub fn solve_exterior_tp_oseen(
    f: &Field,
    bc: &BoundaryData,
    params: &OseenParams,
) -> Result<(Field, Pressure, LinearSolveReport)> {
    solve_exterior_with_options(f, bc, params, &ExteriorOptions::default())
}

pub fn solve_exterior_with_options(
    f: &Field,
    bc: &BoundaryData,
    params: &OseenParams,
    opts: &ExteriorOptions,
) -> Result<(Field, Pressure, LinearSolveReport)> {
    let grid = f.grid();
    check_exterior(grid)?;
    params.check_grid(grid)?;
    if f.ncomp() != 3 {
        return Err(Error::ShapeMismatch("forcing must have 3 components".into()));
    }
    if bc.grid().as_ref() != grid.as_ref() {
        return Err(Error::ShapeMismatch("boundary data lives on a different grid".into()));
    }
    reject_steady_stokes(0, params)?;
    let f_modes = time_modes(f);
    let bc_modes = bc.time_modes();
    let w = omega(grid);
    let problems: Vec<ModeProblem> = f_modes
        .iter()
        .zip(&bc_modes)
        .map(|(fm, bm)| ModeProblem {
            k: fm.k(),
            sigma: Complex64::new(0.0, w * fm.k() as f64),
            nu: params.nu(),
            lambda: params.lambda(),
            forcing: Some(fm),
            bc: Some(bm),
            guess: None,
        })
        .collect();
    let sols = solve_modes(grid, &problems, opts)?;
    let report = LinearSolveReport {
        backend: Backend::Exterior,
        modes: sols
            .iter()
            .zip(&f_modes)
            .map(|(s, fm)| ModeReport {
                k: s.u.k(),
                residual: s.residual,
                c_k: mode_constant(&s.u, &s.p, fm, w, Region::Interior),
                seconds: s.seconds,
                iterations: s.iterations,
            })
            .collect(),
    };
    Ok(assemble(grid, &sols, report))
}

fn assemble(grid: &Arc<PeriodicGrid>, sols: &[ModeSolution], report: LinearSolveReport) -> (Field, Pressure, LinearSolveReport) {
    let us: Vec<ModeField> = sols.iter().map(|s| s.u.clone()).collect();
    let ps: Vec<ModeField> = sols.iter().map(|s| s.p.clone()).collect();
    let mean_gradient = sols
        .iter()
        .find(|s| s.u.k() == 0)
        .map(|s| s.mean_gradient.map(|g| g.re))
        .unwrap_or([0.0; 3]);
    let u = from_time_modes(grid, 3, &us);
    let p = Pressure {
        field: from_time_modes(grid, 1, &ps),
        mean_gradient,
    };
    (u, p, report)
}

fn steady_solve(bc: &BoundaryData, nu: f64, lambda: f64, opts: &ExteriorOptions) -> Result<(Field, Pressure)> {
    let grid = bc.grid();
    check_exterior(grid)?;
    let modes = bc.steady().time_modes();
    let prob = ModeProblem {
        k: 0,
        sigma: Complex64::default(),
        nu,
        lambda,
        forcing: None,
        bc: Some(&modes[0]),
        guess: None,
    };
    let sol = solve_mode(grid, &prob, opts)?;
    let report = LinearSolveReport {
        backend: Backend::Exterior,
        modes: Vec::new(),
    };
    let (u, p, _) = assemble(grid, &[sol], report);
    Ok((u, p))
}

/// Steady Oseen lift: zero forcing, Dirichlet data equal to the time average of `bc`.
pub fn solve_lift_steady(bc: &BoundaryData, params: &OseenParams, opts: &ExteriorOptions) -> Result<(Field, Pressure)> {
    params.check_grid(bc.grid())?;
    reject_steady_stokes(0, params)?;
    steady_solve(bc, params.nu(), params.lambda(), opts)
}

/// Steady solve that also admits `lambda = 0` (drift-free control runs).
pub fn solve_steady_diagnostic(
    bc: &BoundaryData,
    nu: f64,
    lambda: f64,
    opts: &ExteriorOptions,
) -> Result<(Field, Pressure)> {
    if !(nu > 0.0) || !(lambda >= 0.0) {
        return Err(invalid("nu", "viscosity must be positive and lambda nonnegative"));
    }
    steady_solve(bc, nu, lambda, opts)
}

/// Oscillatory lift `-nu Delta W - W + grad p_W = 0`, `div W = 0`, `W = P-perp bc`
/// on the obstacle, solved per time slice (equivalently per temporal mode).
pub fn solve_lift_oscillatory(bc: &BoundaryData, params: &OseenParams, opts: &ExteriorOptions) -> Result<(Field, Field)> {
    let grid = bc.grid();
    check_exterior(grid)?;
    let modes = bc.oscillatory().time_modes();
    let problems: Vec<ModeProblem> = modes
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, m)| m.iter().flatten().any(|v| v.norm() != 0.0))
        .map(|(k, m)| ModeProblem {
            k: k as i64,
            sigma: Complex64::new(-1.0, 0.0),
            nu: params.nu(),
            lambda: 0.0,
            forcing: None,
            bc: Some(m),
            guess: None,
        })
        .collect();
    let sols = solve_modes(grid, &problems, opts)?;
    let report = LinearSolveReport {
        backend: Backend::Exterior,
        modes: Vec::new(),
    };
    let (w, p, _) = assemble(grid, &sols, report);
    Ok((w, p.field))
}
