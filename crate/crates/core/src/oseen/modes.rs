//! Complex spatial fields holding one temporal Fourier coefficient.

use std::sync::Arc;

use num_complex::Complex64;

use crate::fields::ops::{derivative_symbol, second_derivative_symbol};
use crate::fields::{Backend, Field, PeriodicGrid, Region};

/// Coefficient `k` of a time-periodic field, stored as `(component, z, y, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    grid: Arc<PeriodicGrid>,
    k: i64,
    ncomp: usize,
    data: Vec<Complex64>,
}

impl ModeField {
    pub fn zeros(grid: &Arc<PeriodicGrid>, k: i64, ncomp: usize) -> Self {
        Self {
            grid: grid.clone(),
            k,
            ncomp,
            data: vec![Complex64::default(); ncomp * grid.cells()],
        }
    }

    pub fn from_data(grid: &Arc<PeriodicGrid>, k: i64, ncomp: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), ncomp * grid.cells(), "mode field length");
        Self {
            grid: grid.clone(),
            k,
            ncomp,
            data,
        }
    }

    pub fn grid(&self) -> &Arc<PeriodicGrid> {
        &self.grid
    }
    pub fn k(&self) -> i64 {
        self.k
    }
    pub fn ncomp(&self) -> usize {
        self.ncomp
    }
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }
    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.cells();
        &self.data[c * n..(c + 1) * n]
    }
    pub(crate) fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let n = self.grid.cells();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `(int_region |f|^2 dx)^(1/2)` over all components.
    pub fn l2_norm(&self, region: Region) -> f64 {
        l2_norm_parts(&[self], region)
    }

    /// First spatial derivative along `axis` (0 = x) with the backend's operator.
    pub fn diff(&self, axis: usize) -> ModeField {
        self.map_components(|g, d| space_derivative(g, d, axis, 1))
    }

    /// Second derivative `d_a d_b`; the pure case uses the compact stencil.
    pub fn diff2(&self, a: usize, b: usize) -> ModeField {
        if a == b {
            self.map_components(|g, d| space_derivative(g, d, a, 2))
        } else {
            self.diff(a).diff(b)
        }
    }

    fn map_components(&self, op: impl Fn(&PeriodicGrid, &[Complex64]) -> Vec<Complex64>) -> ModeField {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.ncomp {
            data.extend(op(&self.grid, self.component(c)));
        }
        Self {
            data,
            ..self.clone()
        }
    }

    /// The six distinct second derivatives `d_i d_j`, `i <= j`.
    pub fn hessian(&self) -> Vec<ModeField> {
        let mut out = Vec::with_capacity(6);
        for i in 0..3 {
            for j in i..3 {
                out.push(self.diff2(i, j));
            }
        }
        out
    }

    pub fn gradient(&self) -> ModeField {
        assert_eq!(self.ncomp, 1);
        let parts: Vec<ModeField> = (0..3).map(|a| self.diff(a)).collect();
        let mut data = Vec::with_capacity(3 * self.grid.cells());
        for p in &parts {
            data.extend_from_slice(&p.data);
        }
        Self::from_data(&self.grid, self.k, 3, data)
    }

    pub fn divergence(&self) -> ModeField {
        assert_eq!(self.ncomp, 3);
        let n = self.grid.cells();
        let mut out = vec![Complex64::default(); n];
        for a in 0..3 {
            let d = space_derivative(&self.grid, self.component(a), a, 1);
            for (o, v) in out.iter_mut().zip(d) {
                *o += v;
            }
        }
        Self::from_data(&self.grid, self.k, 1, out)
    }
}

pub fn l2_norm_parts(parts: &[&ModeField], region: Region) -> f64 {
    let grid = parts[0].grid();
    let mask = grid.region_mask(region);
    let mut s = 0.0;
    for p in parts {
        for c in 0..p.ncomp {
            for (v, m) in p.component(c).iter().zip(&mask) {
                if *m {
                    s += v.norm_sqr();
                }
            }
        }
    }
    (s * grid.cell_volume()).sqrt()
}

/// Spatial derivative of one complex component.
pub(crate) fn space_derivative(grid: &PeriodicGrid, data: &[Complex64], axis: usize, order: u32) -> Vec<Complex64> {
    match grid.backend() {
        Backend::Spectral => {
            let symbol: Vec<Complex64> = if order == 1 {
                derivative_symbol(grid, axis).into_iter().map(|s| Complex64::new(0.0, s)).collect()
            } else {
                second_derivative_symbol(grid, axis).into_iter().map(|s| Complex64::new(-s, 0.0)).collect()
            };
            let fft = grid.space_fft();
            let storage = 2 - axis;
            let inner: usize = fft.shape()[storage + 1..].iter().product();
            let n = grid.n()[axis];
            let mut buf = data.to_vec();
            fft.transform_axis(&mut buf, storage, false);
            for (i, v) in buf.iter_mut().enumerate() {
                *v *= symbol[(i / inner) % n] / n as f64;
            }
            fft.transform_axis(&mut buf, storage, true);
            buf
        }
        Backend::Exterior => {
            let h = grid.spacing(axis);
            (0..data.len())
                .map(|cell| {
                    let up = data[grid.neighbor(cell, axis, 1)];
                    let down = data[grid.neighbor(cell, axis, -1)];
                    match order {
                        1 => (up - down) / (2.0 * h),
                        _ => (up - data[cell] * 2.0 + down) / (h * h),
                    }
                })
                .collect()
        }
    }
}

/// Temporal coefficients `k = 0..=max_mode` of a real field (normalized by `1/n_t`).
pub fn time_modes(f: &Field) -> Vec<ModeField> {
    let grid = f.grid();
    let nt = grid.nt();
    let cells = grid.cells();
    let kmax = grid.max_mode();
    let mut modes: Vec<ModeField> = (0..=kmax).map(|k| ModeField::zeros(grid, k as i64, f.ncomp())).collect();
    let fft = crate::fft::FftNd::new(&[nt, cells]);
    let mut buf = vec![Complex64::default(); nt * cells];
    for c in 0..f.ncomp() {
        for t in 0..nt {
            for (d, s) in buf[t * cells..(t + 1) * cells].iter_mut().zip(f.slice(t, c)) {
                *d = Complex64::new(*s, 0.0);
            }
        }
        fft.transform_axis(&mut buf, 0, false);
        for (k, m) in modes.iter_mut().enumerate() {
            for (d, s) in m.component_mut(c).iter_mut().zip(&buf[k * cells..(k + 1) * cells]) {
                *d = s / nt as f64;
            }
        }
    }
    modes
}

/// Real field from coefficients `k = 0..=max_mode` (missing modes are zero).
///
/// The imaginary part of the `k = 0` coefficient is discarded.
pub fn from_time_modes(grid: &Arc<PeriodicGrid>, ncomp: usize, modes: &[ModeField]) -> Field {
    let nt = grid.nt();
    let cells = grid.cells();
    let mut out = Field::zeros(grid, ncomp);
    for t in 0..nt {
        for m in modes {
            let k = m.k();
            assert!(k >= 0 && (k as usize) < nt / 2, "mode index {k} out of range");
            let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k as usize * t) as f64 / nt as f64);
            for c in 0..ncomp {
                let src = m.component(c);
                let dst = out.slice_mut(t, c);
                if k == 0 {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += s.re;
                    }
                } else {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += 2.0 * (s * phase).re;
                    }
                }
            }
        }
    }
    debug_assert_eq!(out.samples().len(), nt * ncomp * cells);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{diff, diff2, filter_time_nyquist, Axis};
    use std::f64::consts::PI;

    #[test]
    fn mode_round_trip_drops_only_nyquist() {
        let g = PeriodicGrid::spectral(2.0, 6, [4, 4, 4], 1.0).unwrap().into_shared();
        let f = Field::from_fn(&g, 3, |t, x, o| {
            o[0] = (PI * t).sin() * x[0] + 0.3 * (2.0 * PI * t).cos();
            o[1] = (3.0 * PI * t).cos() + x[2];
        });
        let back = from_time_modes(&g, 3, &time_modes(&f));
        assert!(back.max_abs_diff(&filter_time_nyquist(&f)) < 1e-13);
    }

    #[test]
    fn derivatives_match_real_operators() {
        for g in [
            PeriodicGrid::spectral(1.0, 2, [8, 6, 4], 2.0).unwrap().into_shared(),
            PeriodicGrid::exterior(1.0, 2, [8, 8, 8], 8.0, 1.1, 2.0).unwrap().into_shared(),
        ] {
            let f = Field::from_fn(&g, 1, |_, x, o| o[0] = (PI * x[0]).sin() * (PI * x[1]).cos() + (PI * x[2]).sin());
            let m = &time_modes(&f)[0];
            for a in 0..3 {
                let want = diff(&f, Axis::spatial(a));
                let got = m.diff(a);
                for (w, v) in want.slice(0, 0).iter().zip(got.component(0)) {
                    assert!((w - v.re).abs() < 1e-12 && v.im.abs() < 1e-12);
                }
                for b in a..3 {
                    let want = diff2(&f, a, b);
                    let got = m.diff2(a, b);
                    for (w, v) in want.slice(0, 0).iter().zip(got.component(0)) {
                        assert!((w - v.re).abs() < 1e-11);
                    }
                }
            }
        }
    }
}
