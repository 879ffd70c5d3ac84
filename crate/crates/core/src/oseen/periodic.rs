//! Inverse of the shifted Oseen operator `sigma + nu(-Delta) + lambda d_1` with
//! incompressibility on the periodic box, by Fourier symbol division.
//!
//! The box-mean velocity is zero; the mean of the forcing is balanced by a
//! uniform pressure gradient (returned separately, since it is not periodic).

use std::sync::Arc;

use num_complex::Complex64;

use crate::fields::ops::{derivative_symbol, second_derivative_symbol};
use crate::fields::PeriodicGrid;

pub(crate) struct PeriodicInverse {
    grid: Arc<PeriodicGrid>,
    /// Reciprocal operator symbol per cell; zero where the symbol vanishes.
    inv_symbol: Vec<Complex64>,
    s: [Vec<f64>; 3],
}

pub(crate) struct PeriodicSolution {
    pub u: [Vec<Complex64>; 3],
    pub p: Option<Vec<Complex64>>,
    pub mean_gradient: [Complex64; 3],
}

impl PeriodicInverse {
    pub fn new(grid: &Arc<PeriodicGrid>, sigma: Complex64, nu: f64, lambda: f64) -> Self {
        let s: [Vec<f64>; 3] = [0, 1, 2].map(|a| derivative_symbol(grid, a));
        let l: [Vec<f64>; 3] = [0, 1, 2].map(|a| second_derivative_symbol(grid, a));
        let [nz, ny, nx] = grid.space_shape();
        let mut inv_symbol = Vec::with_capacity(grid.cells());
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let a = sigma + Complex64::new(nu * (l[0][x] + l[1][y] + l[2][z]), lambda * s[0][x]);
                    inv_symbol.push(if a.norm() == 0.0 { Complex64::default() } else { 1.0 / a });
                }
            }
        }
        Self {
            grid: grid.clone(),
            inv_symbol,
            s,
        }
    }

    /// Solves for `u` (and optionally `p`) given the forcing components.
    pub fn solve(&self, mut rhs: [Vec<Complex64>; 3], want_pressure: bool) -> PeriodicSolution {
        let grid = &self.grid;
        let fft = grid.space_fft();
        let [nz, ny, nx] = grid.space_shape();
        for c in rhs.iter_mut() {
            fft.forward(c);
        }
        let mean_gradient = [rhs[0][0], rhs[1][0], rhs[2][0]];
        let mut p = if want_pressure {
            Some(vec![Complex64::default(); grid.cells()])
        } else {
            None
        };
        let mut cell = 0;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let d = [self.s[0][x], self.s[1][y], self.s[2][z]];
                    let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                    let f = [rhs[0][cell], rhs[1][cell], rhs[2][cell]];
                    // i s p = s (s.F)/|s|^2 is the gradient part of F.
                    let dot = f[0] * d[0] + f[1] * d[1] + f[2] * d[2];
                    let inv = self.inv_symbol[cell];
                    if d2 > 0.0 {
                        for a in 0..3 {
                            rhs[a][cell] = (f[a] - dot * (d[a] / d2)) * inv;
                        }
                        if let Some(p) = p.as_mut() {
                            p[cell] = Complex64::new(0.0, -1.0) * dot / d2;
                        }
                    } else {
                        for a in 0..3 {
                            rhs[a][cell] = f[a] * inv;
                        }
                    }
                    cell += 1;
                }
            }
        }
        for c in rhs.iter_mut() {
            fft.inverse(c);
        }
        if let Some(p) = p.as_mut() {
            fft.inverse(p);
        }
        PeriodicSolution {
            u: rhs,
            p,
            // Only the zero symbol leaves the mean forcing unbalanced by velocity.
            mean_gradient: if self.inv_symbol[0].norm() == 0.0 {
                mean_gradient
            } else {
                [Complex64::default(); 3]
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oseen::ModeField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inverse_satisfies_the_mode_system() {
        let grid = PeriodicGrid::exterior(2.0, 4, [8, 6, 10], 8.0, 1.2, 2.5).unwrap().into_shared();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = grid.cells();
        let mut f = [0, 1, 2].map(|_| vec![Complex64::default(); n]);
        for c in f.iter_mut().flatten() {
            *c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let (sigma, nu, lambda) = (Complex64::new(0.0, 2.0), 0.7, 0.4);
        let sol = PeriodicInverse::new(&grid, sigma, nu, lambda).solve(f.clone(), true);
        let mut udata = Vec::new();
        for c in &sol.u {
            udata.extend_from_slice(c);
        }
        let u = ModeField::from_data(&grid, 1, 3, udata);
        let p = ModeField::from_data(&grid, 1, 1, sol.p.unwrap());
        let gp = p.gradient();
        assert!(u.divergence().max_abs() < 1e-12);
        for c in 0..3 {
            let lap: Vec<Complex64> = (0..3)
                .map(|a| u.diff2(a, a))
                .fold(vec![Complex64::default(); n], |acc, d| acc.iter().zip(d.component(c)).map(|(x, y)| x + y).collect());
            let dx = u.diff(0);
            for i in 0..n {
                let r = sigma * u.component(c)[i] - nu * lap[i] + lambda * dx.component(c)[i] + gp.component(c)[i] - f[c][i];
                assert!(r.norm() < 1e-12, "c{c} i{i} {r}");
            }
        }
    }
}
