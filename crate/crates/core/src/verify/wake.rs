//! Wake diagnostic for steady flows past the towed body, and the classical
//! steady Oseen fundamental solution used as its oracle.

use std::f64::consts::PI;

use super::jet::Jet;
use crate::error::{invalid, Result};
use crate::fields::Field;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WakeDiagnostic {
    pub radius: f64,
    /// `|u|` at `c + r e_1` (behind the body).
    pub downstream: f64,
    /// `|u|` at `c - r e_1`.
    pub upstream: f64,
    /// Mean of `|u|` at `c +- r e_2`.
    pub lateral: f64,
    /// `downstream / upstream`.
    pub ratio: f64,
}

/// Trilinear interpolation of the time-averaged `u` at `x` (periodic wrap).
fn sample(u: &Field, x: [f64; 3]) -> [f64; 3] {
    let grid = u.grid();
    let n = grid.n();
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for a in 0..3 {
        let s = x[a] / grid.spacing(a);
        let f = s.floor();
        base[a] = (f as i64).rem_euclid(n[a] as i64) as usize;
        frac[a] = s - f;
    }
    let mut out = [0.0; 3];
    let nt = grid.nt();
    for corner in 0..8 {
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let up = (corner >> a) & 1 == 1;
            w *= if up { frac[a] } else { 1.0 - frac[a] };
            idx[a] = (base[a] + up as usize) % n[a];
        }
        if w == 0.0 {
            continue;
        }
        let cell = grid.cell_index(idx[0], idx[1], idx[2]);
        for (c, o) in out.iter_mut().enumerate() {
            let mean = (0..nt).map(|t| u.get(t, c, cell)).sum::<f64>() / nt as f64;
            *o += w * mean;
        }
    }
    out
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Samples `|u|` on the axes through the box center at distance `r`.
///
/// `r` must exceed the annulus radius `R0` (when there is an obstacle) and
/// stay two cells inside the half-width of the box.
pub fn wake_diagnostic(u_steady: &Field, r: f64) -> Result<WakeDiagnostic> {
    let grid = u_steady.grid();
    if u_steady.ncomp() != 3 {
        return Err(invalid("u", "the wake diagnostic needs a velocity field"));
    }
    let h = (0..3).map(|a| grid.spacing(a)).fold(0.0, f64::max);
    let lower = grid.obstacle().map(|o| o.r_zero).unwrap_or(0.0);
    let upper = 0.5 * grid.box_len() - 2.0 * h;
    if !(r > lower && r <= upper) {
        return Err(invalid("radius", format!("must lie in ({lower}, {upper}], got {r}")));
    }
    let c = grid.center();
    let at = |d: [f64; 3]| norm(sample(u_steady, [c[0] + d[0], c[1] + d[1], c[2] + d[2]]));
    let downstream = at([r, 0.0, 0.0]);
    let upstream = at([-r, 0.0, 0.0]);
    let lateral = 0.5 * (at([0.0, r, 0.0]) + at([0.0, -r, 0.0]));
    Ok(WakeDiagnostic {
        radius: r,
        downstream,
        upstream,
        lateral,
        ratio: downstream / upstream,
    })
}

/// `[f', f'', f''']` of `f(s) = int_0^s (1 - e^-t)/t dt`.
fn ein_derivatives(s: f64) -> [f64; 3] {
    if s.abs() < 1.0 {
        // f'(s) = sum_n (-s)^n/(n+1)!
        let mut d = [0.0; 3];
        let mut fact = 1.0;
        for n in 0..40 {
            fact *= (n + 1) as f64;
            let c = if n % 2 == 0 { 1.0 } else { -1.0 } / fact;
            d[0] += c * s.powi(n);
            if n >= 1 {
                d[1] += c * n as f64 * s.powi(n - 1);
            }
            if n >= 2 {
                d[2] += c * (n * (n - 1)) as f64 * s.powi(n - 2);
            }
        }
        return d;
    }
    let e = (-s).exp();
    [
        (1.0 - e) / s,
        (e * (1.0 + s) - 1.0) / (s * s),
        (2.0 - e * (s * s + 2.0 * s + 2.0)) / (s * s * s),
    ]
}

/// Velocity tensor `E_ij(x)` of the steady Oseen system
/// `-nu Delta u + lambda d_1 u + grad p = delta e_j`, `div u = 0`:
/// `E = (I Delta - grad grad) Phi` with
/// `Phi = (1/(4 pi lambda)) int_0^s (1 - e^-t)/t dt`, `s = lambda(|x| - x_1)/(2 nu)`.
/// For `lambda = 0` the Stokeslet is returned.
pub fn oseen_tensor(x: [f64; 3], nu: f64, lambda: f64) -> [[f64; 3]; 3] {
    let r = norm(x);
    if lambda == 0.0 {
        let mut e = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                e[i][j] = (d / r + x[i] * x[j] / (r * r * r)) / (8.0 * PI * nu);
            }
        }
        return e;
    }
    let xj = [Jet::variable(0, x[0]), Jet::variable(1, x[1]), Jet::variable(2, x[2])];
    let rj = (xj[0] * xj[0] + xj[1] * xj[1] + xj[2] * xj[2]).sqrt();
    let k = lambda / (2.0 * nu);
    let s = (rj - xj[0]).scale(k);
    let [d1, d2, d3] = ein_derivatives(s.value());
    let phi = s.compose([0.0, d1, d2, d3]).scale(1.0 / (4.0 * PI * lambda));
    let mut hess = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut e = [0u8; 3];
            e[i] += 1;
            e[j] += 1;
            hess[i][j] = phi.partial(e);
        }
    }
    let lap = hess[0][0] + hess[1][1] + hess[2][2];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = if i == j { lap } else { 0.0 } - hess[i][j];
        }
    }
    out
}

/// `|E(r e_1) e_1| / |E(-r e_1) e_1|` for a point force along the translation axis.
pub fn oseen_wake_ratio(r: f64, nu: f64, lambda: f64) -> f64 {
    let col = |x: [f64; 3]| {
        let e = oseen_tensor(x, nu, lambda);
        norm([e[0][0], e[1][0], e[2][0]])
    };
    col([r, 0.0, 0.0]) / col([-r, 0.0, 0.0])
}
