use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;

use super::{LinearSolveReport, ModeReport, OseenParams, Pressure};
use crate::error::{Error, Result};
use crate::fft::signed_index;
use crate::fields::ops::{derivative_symbol, second_derivative_symbol};
use crate::fields::{Backend, Field};

/// Exact inversion of the time-periodic Oseen system on an obstacle-free spectral grid.
///
/// Per coefficient `(k, xi)`: `p = -i (xi . F)/|xi|^2`, `u = (F - i xi p)/symbol`.
/// The temporal Nyquist mode is dropped. At `(0, 0)` the velocity is zero and
/// the mean forcing goes to [`Pressure::mean_gradient`].
pub fn solve_wholespace_tp_oseen(f: &Field, params: &OseenParams) -> Result<(Field, Pressure, LinearSolveReport)> {
    let grid = f.grid();
    if grid.backend() != Backend::Spectral || grid.obstacle().is_some() {
        return Err(Error::UnsupportedBackend { required: "spectral" });
    }
    if f.ncomp() != 3 {
        return Err(Error::ShapeMismatch(format!("forcing has {} components, expected 3", f.ncomp())));
    }
    params.check_grid(grid)?;
    let nu = params.nu();
    let lambda = params.lambda();
    let nt = grid.nt();
    let cells = grid.cells();
    let block = nt * cells;
    let omega = 2.0 * PI / grid.period();
    let [nz, ny, nx] = grid.space_shape();
    let s: [Vec<f64>; 3] = [0, 1, 2].map(|a| derivative_symbol(grid, a));
    let l: [Vec<f64>; 3] = [0, 1, 2].map(|a| second_derivative_symbol(grid, a));

    let fhat = f.compute_spectrum();
    let scale = fhat.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let mean = [fhat[0], fhat[block], fhat[2 * block]];
    let mean_abs = (mean[0].norm_sqr() + mean[1].norm_sqr() + mean[2].norm_sqr()).sqrt();
    if lambda == 0.0 && mean_abs > 1e-13 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SteadyUnsolvable(mean_abs));
    }
    let mut uhat = vec![Complex64::default(); 3 * block];
    let mut phat = vec![Complex64::default(); block];
    let mut reports = Vec::new();
    for kt in 0..nt {
        let k = signed_index(kt, nt);
        if k.unsigned_abs() as usize > grid.max_mode() {
            continue;
        }
        let start = Instant::now();
        let sigma = Complex64::new(0.0, omega * k as f64);
        // Parseval sums for the residual and the mode constant.
        let (mut res2, mut f2, mut u2, mut h2, mut gp2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let cell = (z * ny + y) * nx + x;
                    let i = kt * cells + cell;
                    let d = [s[0][x], s[1][y], s[2][z]];
                    let dd = [l[0][x], l[1][y], l[2][z]];
                    let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                    let fv = [fhat[i], fhat[block + i], fhat[2 * block + i]];
                    let a = sigma + Complex64::new(nu * (dd[0] + dd[1] + dd[2]), lambda * d[0]);
                    let p = if d2 > 0.0 {
                        Complex64::new(0.0, -1.0) * (fv[0] * d[0] + fv[1] * d[1] + fv[2] * d[2]) / d2
                    } else {
                        Complex64::default()
                    };
                    let mut u = [Complex64::default(); 3];
                    if a.norm() > 0.0 {
                        for c in 0..3 {
                            u[c] = (fv[c] - Complex64::new(0.0, d[c]) * p) / a;
                        }
                    }
                    for c in 0..3 {
                        uhat[c * block + i] = u[c];
                        let mut r = a * u[c] + Complex64::new(0.0, d[c]) * p - fv[c];
                        if a.norm() == 0.0 {
                            r += fv[c];
                        }
                        res2 += r.norm_sqr();
                        f2 += fv[c].norm_sqr();
                        u2 += u[c].norm_sqr();
                        let mut hc = dd[0] * dd[0] + dd[1] * dd[1] + dd[2] * dd[2];
                        hc += (d[0] * d[1]).powi(2) + (d[0] * d[2]).powi(2) + (d[1] * d[2]).powi(2);
                        h2 += hc * u[c].norm_sqr();
                    }
                    phat[i] = p;
                    gp2 += d2 * p.norm_sqr();
                }
            }
        }
        if k < 0 {
            continue;
        }
        let vol = grid.box_len().powi(3);
        let c_k = if f2 > 0.0 {
            (omega * k as f64 * (vol * u2).sqrt() + (vol * h2).sqrt() + (vol * gp2).sqrt()) / (vol * f2).sqrt()
        } else {
            f64::NAN
        };
        reports.push(ModeReport {
            k,
            residual: if f2 > 0.0 { (res2 / f2).sqrt() } else { res2.sqrt() },
            c_k,
            seconds: start.elapsed().as_secs_f64(),
            iterations: 0,
        });
    }
    let u = Field::from_spectral(grid, 3, &uhat)?;
    let p = Field::from_spectral(grid, 1, &phat)?;
    let mean_gradient = [mean[0].re, mean[1].re, mean[2].re];
    Ok((
        u,
        Pressure {
            field: p,
            mean_gradient,
        },
        LinearSolveReport {
            backend: Backend::Spectral,
            modes: reports,
        },
    ))
}
