use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fields::PeriodicGrid;

/// Viscosity, translation profile and drift bound.
#[derive(Debug, Clone, PartialEq)]
pub struct OseenParams {
    nu: f64,
    lambda: f64,
    zeta: Vec<f64>,
    lambda0: f64,
}

impl OseenParams {
    /// `zeta` holds one translation speed per time sample; `lambda` is its mean.
    pub fn new(nu: f64, zeta: Vec<f64>, lambda0: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(invalid("nu", format!("must be positive, got {nu}")));
        }
        if zeta.is_empty() || zeta.iter().any(|z| !z.is_finite()) {
            return Err(invalid("zeta", "profile must be nonempty and finite"));
        }
        let lambda = zeta.iter().sum::<f64>() / zeta.len() as f64;
        if lambda < -1e-13 {
            return Err(invalid("lambda", format!("mean translation must be nonnegative, got {lambda}")));
        }
        let lambda = lambda.max(0.0);
        if !(lambda0 > 0.0) {
            return Err(invalid("lambda0", format!("must be positive, got {lambda0}")));
        }
        if lambda > lambda0 * (1.0 + 1e-13) {
            return Err(invalid("lambda", format!("{lambda} exceeds the bound lambda0 = {lambda0}")));
        }
        Ok(Self {
            nu,
            lambda,
            zeta,
            lambda0,
        })
    }

    /// Constant translation `lambda`; the bound is `lambda` itself (or 1 when `lambda = 0`).
    pub fn uniform(nu: f64, lambda: f64, nt: usize) -> Result<Self> {
        let lambda0 = if lambda > 0.0 { lambda } else { 1.0 };
        Self::new(nu, vec![lambda; nt], lambda0)
    }

    /// `zeta(t) = lambda + sum_k a_k cos(2 pi k t/T) + b_k sin(2 pi k t/T)` sampled at `t = j T/nt`.
    pub fn from_fourier(nu: f64, lambda: f64, coeffs: &[(f64, f64)], nt: usize, lambda0: f64) -> Result<Self> {
        if nt == 0 {
            return Err(invalid("nt", "must be positive"));
        }
        if 2 * coeffs.len() >= nt {
            return Err(invalid("zeta", format!("{} modes are not resolved by {nt} samples", coeffs.len())));
        }
        let zeta = (0..nt)
            .map(|j| {
                let s = 2.0 * PI * j as f64 / nt as f64;
                coeffs.iter().enumerate().fold(lambda, |acc, (i, (a, b))| {
                    let k = (i + 1) as f64;
                    acc + a * (k * s).cos() + b * (k * s).sin()
                })
            })
            .collect();
        let p = Self::new(nu, zeta, lambda0)?;
        if (p.lambda - lambda).abs() > 1e-13 * lambda.abs().max(1.0) {
            return Err(invalid("zeta", "profile mean differs from lambda"));
        }
        Ok(Self { lambda, ..p })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// The same physics with a different constant translation.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let shift = lambda - self.lambda;
        Self::new(self.nu, self.zeta.iter().map(|z| z + shift).collect(), self.lambda0.max(lambda))
    }

    pub(crate) fn check_grid(&self, grid: &PeriodicGrid) -> Result<()> {
        if self.zeta.len() != grid.nt() {
            return Err(Error::ShapeMismatch(format!(
                "translation profile has {} samples, grid has n_t = {}",
                self.zeta.len(),
                grid.nt()
            )));
        }
        Ok(())
    }
}

/// The resolvent symbol `nu |xi|^2 + i lambda xi_1 + i (2 pi / T) k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSymbol {
    pub k: i64,
    pub xi: [f64; 3],
    pub value: Complex64,
}

impl ModeSymbol {
    pub fn new(k: i64, xi: [f64; 3], nu: f64, lambda: f64, period: f64) -> Self {
        let xi2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
        let value = Complex64::new(nu * xi2, lambda * xi[0] + 2.0 * PI * k as f64 / period);
        Self { k, xi, value }
    }

    pub fn is_origin(&self) -> bool {
        self.k == 0 && self.xi == [0.0; 3]
    }
}

/// Velocity prescribed on the obstacle's boundary cells at every time sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    grid: Arc<PeriodicGrid>,
    /// `values[t * nb + b]` for boundary cell `b`.
    values: Vec<[f64; 3]>,
}

impl BoundaryData {
    /// Validates shape, finiteness and the zero-net-flux condition per time slice.
    pub fn new(grid: &Arc<PeriodicGrid>, values: Vec<[f64; 3]>) -> Result<Self> {
        let nb = grid.boundary_len();
        if values.len() != nb * grid.nt() {
            return Err(Error::ShapeMismatch(format!(
                "boundary data has {} entries, expected {} ({} cells x {} samples)",
                values.len(),
                nb * grid.nt(),
                nb,
                grid.nt()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("bc", "boundary values must be finite"));
        }
        let data = Self {
            grid: grid.clone(),
            values,
        };
        data.check_flux()?;
        Ok(data)
    }

    pub fn zeros(grid: &Arc<PeriodicGrid>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![[0.0; 3]; grid.boundary_len() * grid.nt()],
        }
    }

    /// Rigid translation `profile(t) * e_1` on every boundary cell.
    pub fn towed(grid: &Arc<PeriodicGrid>, profile: &[f64]) -> Result<Self> {
        if profile.len() != grid.nt() {
            return Err(Error::ShapeMismatch("towing profile length differs from n_t".into()));
        }
        let nb = grid.boundary_len();
        let values = (0..grid.nt() * nb).map(|i| [profile[i / nb.max(1)], 0.0, 0.0]).collect();
        Self::new(grid, values)
    }

    /// Samples `g(t, x, normal)` on the boundary cells.
    pub fn from_fn(grid: &Arc<PeriodicGrid>, g: impl Fn(f64, [f64; 3], [f64; 3]) -> [f64; 3]) -> Result<Self> {
        let cells = grid.obstacle().map(|o| o.boundary.clone()).unwrap_or_default();
        let mut values = Vec::with_capacity(cells.len() * grid.nt());
        for t in 0..grid.nt() {
            let time = t as f64 * grid.dt();
            for b in &cells {
                values.push(g(time, grid.position(b.cell), b.normal));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    pub fn slice(&self, t: usize) -> &[[f64; 3]] {
        let nb = self.grid.boundary_len();
        &self.values[t * nb..(t + 1) * nb]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().flatten().all(|v| *v == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| [s * v[0], s * v[1], s * v[2]]).collect(),
        }
    }

    /// Net discrete flux `sum u . n dS` of each time slice.
    pub fn fluxes(&self) -> Vec<f64> {
        let area = self.grid.boundary_face_area();
        let normals: Vec<[f64; 3]> = self
            .grid
            .obstacle()
            .map(|o| o.boundary.iter().map(|b| b.normal).collect())
            .unwrap_or_default();
        (0..self.grid.nt())
            .map(|t| {
                self.slice(t)
                    .iter()
                    .zip(&normals)
                    .map(|(u, n)| (u[0] * n[0] + u[1] * n[1] + u[2] * n[2]) * area)
                    .sum()
            })
            .collect()
    }

    fn check_flux(&self) -> Result<()> {
        let area = self.grid.boundary_face_area() * self.grid.boundary_len() as f64;
        let scale = self.values.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
        for (t, flux) in self.fluxes().into_iter().enumerate() {
            if flux.abs() > 1e-10 * area * scale {
                return Err(Error::BoundaryFlux { t, flux, area });
            }
        }
        Ok(())
    }

    /// Time average, replicated over all samples.
    pub fn steady(&self) -> Self {
        let nb = self.grid.boundary_len();
        let nt = self.grid.nt();
        let mut mean = vec![[0.0; 3]; nb];
        for t in 0..nt {
            for (m, v) in mean.iter_mut().zip(self.slice(t)) {
                for c in 0..3 {
                    m[c] += v[c] / nt as f64;
                }
            }
        }
        Self {
            grid: self.grid.clone(),
            values: (0..nt).flat_map(|_| mean.iter().copied()).collect(),
        }
    }

    pub fn oscillatory(&self) -> Self {
        let mean = self.steady();
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&mean.values)
                .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
                .collect(),
        }
    }

    /// Temporal Fourier coefficients `k = 0..=max_mode`, normalized by `1/n_t`.
    pub(crate) fn time_modes(&self) -> Vec<Vec<[Complex64; 3]>> {
        let nb = self.grid.boundary_len();
        let nt = self.grid.nt();
        (0..=self.grid.max_mode())
            .map(|k| {
                let mut out = vec![[Complex64::default(); 3]; nb];
                for t in 0..nt {
                    let phase = Complex64::from_polar(1.0 / nt as f64, -2.0 * PI * (k * t) as f64 / nt as f64);
                    for (o, v) in out.iter_mut().zip(self.slice(t)) {
                        for c in 0..3 {
                            o[c] += phase * v[c];
                        }
                    }
                }
                out
            })
            .collect()
    }
}
