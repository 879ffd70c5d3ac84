use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use super::grid::PeriodicGrid;
use crate::error::{Error, Result};

/// Real, T-periodic grid function with 1 or 3 components.
///
/// Samples are stored in `(t, component, z, y, x)` order, `t` slowest.
/// Fields are immutable; every operation returns a new field.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<PeriodicGrid>,
    ncomp: usize,
    data: Vec<f64>,
    spectrum: Option<Arc<Vec<Complex64>>>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.ncomp == other.ncomp && *self.grid == *other.grid && self.data == other.data
    }
}

impl Field {
    pub fn zeros(grid: &Arc<PeriodicGrid>, ncomp: usize) -> Self {
        assert!(ncomp == 1 || ncomp == 3, "fields have 1 or 3 components");
        Self {
            grid: Arc::clone(grid),
            ncomp,
            data: vec![0.0; grid.nt() * ncomp * grid.cells()],
            spectrum: None,
        }
    }

    pub fn from_samples(grid: &Arc<PeriodicGrid>, ncomp: usize, data: Vec<f64>) -> Result<Self> {
        if ncomp != 1 && ncomp != 3 {
            return Err(Error::ShapeMismatch(format!("component count must be 1 or 3, got {ncomp}")));
        }
        let expected = grid.nt() * ncomp * grid.cells();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "expected {expected} samples, got {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(format!("sample {i} is not finite")));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            ncomp,
            data,
            spectrum: None,
        })
    }

    /// Samples `f(t, x, out)` at every grid point; `out` has `ncomp` entries.
    pub fn from_fn(
        grid: &Arc<PeriodicGrid>,
        ncomp: usize,
        f: impl Fn(f64, [f64; 3], &mut [f64]),
    ) -> Self {
        let mut field = Self::zeros(grid, ncomp);
        let cells = grid.cells();
        let mut out = vec![0.0; ncomp];
        for t in 0..grid.nt() {
            let time = t as f64 * grid.dt();
            for cell in 0..cells {
                out.iter_mut().for_each(|v| *v = 0.0);
                f(time, grid.position(cell), &mut out);
                for (c, v) in out.iter().enumerate() {
                    field.data[(t * ncomp + c) * cells + cell] = *v;
                }
            }
        }
        field
    }

    pub(crate) fn from_parts(grid: &Arc<PeriodicGrid>, ncomp: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.nt() * ncomp * grid.cells());
        Self {
            grid: Arc::clone(grid),
            ncomp,
            data,
            spectrum: None,
        }
    }

    /// Stacks three scalar fields into a vector field.
    pub fn from_components(parts: [&Field; 3]) -> Self {
        let grid = parts[0].grid();
        let cells = grid.cells();
        let mut out = Self::zeros(grid, 3);
        for (c, part) in parts.iter().enumerate() {
            assert_eq!(part.ncomp, 1);
            for t in 0..grid.nt() {
                out.slice_mut(t, c).copy_from_slice(&part.data[t * cells..(t + 1) * cells]);
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }
    pub fn ncomp(&self) -> usize {
        self.ncomp
    }
    pub fn samples(&self) -> &[f64] {
        &self.data
    }
    pub fn into_samples(self) -> Vec<f64> {
        self.data
    }

    pub fn slice(&self, t: usize, c: usize) -> &[f64] {
        let cells = self.grid.cells();
        let start = (t * self.ncomp + c) * cells;
        &self.data[start..start + cells]
    }

    pub(crate) fn slice_mut(&mut self, t: usize, c: usize) -> &mut [f64] {
        self.spectrum = None;
        let cells = self.grid.cells();
        let start = (t * self.ncomp + c) * cells;
        &mut self.data[start..start + cells]
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        self.spectrum = None;
        &mut self.data
    }

    pub fn get(&self, t: usize, c: usize, cell: usize) -> f64 {
        self.data[(t * self.ncomp + c) * self.grid.cells() + cell]
    }

    pub fn component(&self, c: usize) -> Field {
        assert!(c < self.ncomp);
        let grid = &self.grid;
        let mut out = Self::zeros(grid, 1);
        for t in 0..grid.nt() {
            out.slice_mut(t, 0).copy_from_slice(self.slice(t, c));
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest pointwise difference to another field on the same grid.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.assert_compatible(other);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == 0.0)
    }

    pub(crate) fn assert_compatible(&self, other: &Field) {
        assert!(
            Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid,
            "fields live on different grids"
        );
        assert_eq!(self.ncomp, other.ncomp, "component count mismatch");
    }

    pub fn scaled(&self, s: f64) -> Field {
        Self::from_parts(&self.grid, self.ncomp, self.data.iter().map(|v| v * s).collect())
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Field) -> Field {
        self.assert_compatible(other);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect();
        Self::from_parts(&self.grid, self.ncomp, data)
    }

    /// Multiplies each time slice by `profile[t]`.
    pub fn times_profile(&self, profile: &[f64]) -> Field {
        assert_eq!(profile.len(), self.grid.nt());
        let block = self.ncomp * self.grid.cells();
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, v)| v * profile[i / block])
            .collect();
        Self::from_parts(&self.grid, self.ncomp, data)
    }

    /// Pointwise product with a scalar field (broadcast over components).
    pub fn times_scalar_field(&self, s: &Field) -> Field {
        assert_eq!(s.ncomp, 1);
        let cells = self.grid.cells();
        let mut out = self.clone();
        out.spectrum = None;
        for t in 0..self.grid.nt() {
            let sv = s.slice(t, 0);
            for c in 0..self.ncomp {
                for (o, f) in out.slice_mut(t, c).iter_mut().zip(sv) {
                    *o *= f;
                }
            }
        }
        let _ = cells;
        out
    }

    /// Returns a copy with the spectral cache filled.
    pub fn to_spectral(&self) -> Field {
        if self.spectrum.is_some() {
            return self.clone();
        }
        let mut out = self.clone();
        out.spectrum = Some(Arc::new(self.compute_spectrum()));
        out
    }

    /// Cached coefficients in `(component, k, z, y, x)` order, if computed.
    pub fn spectrum(&self) -> Option<&[Complex64]> {
        self.spectrum.as_deref().map(|v| v.as_slice())
    }

    /// Coefficients of `(t, z, y, x)` transforms per component, normalized so
    /// the zero coefficient is the space-time mean.
    pub(crate) fn compute_spectrum(&self) -> Vec<Complex64> {
        let grid = &self.grid;
        let cells = grid.cells();
        let nt = grid.nt();
        let block = nt * cells;
        let mut out = vec![Complex64::default(); self.ncomp * block];
        for c in 0..self.ncomp {
            let buf = &mut out[c * block..(c + 1) * block];
            for t in 0..nt {
                for (dst, src) in buf[t * cells..(t + 1) * cells].iter_mut().zip(self.slice(t, c)) {
                    *dst = Complex64::new(*src, 0.0);
                }
            }
            grid.full_fft().forward(buf);
        }
        out
    }

    /// Rebuilds samples from `(component, k, z, y, x)` coefficients; the
    /// imaginary residue of the inverse transform is discarded.
    pub fn from_spectral(grid: &Arc<PeriodicGrid>, ncomp: usize, coeffs: &[Complex64]) -> Result<Field> {
        let cells = grid.cells();
        let nt = grid.nt();
        let block = nt * cells;
        if coeffs.len() != ncomp * block {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                ncomp * block,
                coeffs.len()
            )));
        }
        let mut field = Self::zeros(grid, ncomp);
        let mut buf = vec![Complex64::default(); block];
        for c in 0..ncomp {
            buf.copy_from_slice(&coeffs[c * block..(c + 1) * block]);
            grid.full_fft().inverse(&mut buf);
            for t in 0..nt {
                for (dst, src) in field.slice_mut(t, c).iter_mut().zip(&buf[t * cells..(t + 1) * cells]) {
                    *dst = src.re;
                }
            }
        }
        field.spectrum = Some(Arc::new(coeffs.to_vec()));
        Ok(field)
    }

    /// Checks `c(-k,-xi) = conj(c(k,xi))` on the cached (or freshly computed) spectrum.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        let owned;
        let spec = match self.spectrum() {
            Some(s) => s,
            None => {
                owned = self.compute_spectrum();
                &owned
            }
        };
        let grid = &self.grid;
        let [nz, ny, nx] = grid.space_shape();
        let nt = grid.nt();
        let block = nt * grid.cells();
        let idx = |k: usize, z: usize, y: usize, x: usize| ((k * nz + z) * ny + y) * nx + x;
        let scale = spec.iter().fold(0.0_f64, |m, v| m.max(v.norm())).max(1e-300);
        for c in 0..self.ncomp {
            let s = &spec[c * block..(c + 1) * block];
            for k in 0..nt {
                for z in 0..nz {
                    for y in 0..ny {
                        for x in 0..nx {
                            let a = s[idx(k, z, y, x)];
                            let b = s[idx((nt - k) % nt, (nz - z) % nz, (ny - y) % ny, (nx - x) % nx)];
                            if (a - b.conj()).norm() > tol * scale {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scaled(rhs)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scaled(-1.0)
    }
}
