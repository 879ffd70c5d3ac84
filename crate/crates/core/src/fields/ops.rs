//! Differential operators, projections and products on [`Field`]s.
//!
//! The time axis is always differentiated spectrally. Spatial axes follow the
//! grid backend: Fourier multipliers for [`Backend::Spectral`], centered
//! second-order differences with periodic wrap for [`Backend::Exterior`].

use num_complex::Complex64;

use super::field::Field;
use super::grid::{Backend, PeriodicGrid};
use crate::error::{Error, Result};
use crate::fft::signed_index;

/// Differentiation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    T,
    X,
    Y,
    Z,
}

impl Axis {
    pub const SPACE: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn spatial(i: usize) -> Axis {
        Self::SPACE[i]
    }

    fn space_index(self) -> Option<usize> {
        match self {
            Axis::T => None,
            Axis::X => Some(0),
            Axis::Y => Some(1),
            Axis::Z => Some(2),
        }
    }

    /// Axis position in the `[t, z, y, x]` transform shape.
    fn storage_axis(self) -> usize {
        match self {
            Axis::T => 0,
            Axis::Z => 1,
            Axis::Y => 2,
            Axis::X => 3,
        }
    }
}

fn axis_len(grid: &PeriodicGrid, axis: Axis) -> usize {
    match axis.space_index() {
        Some(a) => grid.n()[a],
        None => grid.nt(),
    }
}

fn axis_extent(grid: &PeriodicGrid, axis: Axis) -> f64 {
    match axis.space_index() {
        Some(_) => grid.box_len(),
        None => grid.period(),
    }
}

/// Multiplies the one-dimensional spectrum along `axis` by `symbol(signed index)`.
fn apply_axis_symbol(f: &Field, axis: Axis, symbol: impl Fn(i64) -> Complex64) -> Field {
    let grid = f.grid();
    let cells = grid.cells();
    let nt = grid.nt();
    let n = axis_len(grid, axis);
    let saxis = axis.storage_axis();
    let fft = grid.full_fft();
    let shape = fft.shape().to_vec();
    let inner: usize = shape[saxis + 1..].iter().product();
    let factors: Vec<Complex64> = (0..n).map(|i| symbol(signed_index(i, n)) / n as f64).collect();

    let mut out = Field::zeros(grid, f.ncomp());
    let mut buf = vec![Complex64::default(); nt * cells];
    for c in 0..f.ncomp() {
        for t in 0..nt {
            for (dst, src) in buf[t * cells..(t + 1) * cells].iter_mut().zip(f.slice(t, c)) {
                *dst = Complex64::new(*src, 0.0);
            }
        }
        fft.transform_axis(&mut buf, saxis, false);
        for (i, v) in buf.iter_mut().enumerate() {
            *v *= factors[(i / inner) % n];
        }
        fft.transform_axis(&mut buf, saxis, true);
        for t in 0..nt {
            for (dst, src) in out.slice_mut(t, c).iter_mut().zip(&buf[t * cells..(t + 1) * cells]) {
                *dst = src.re;
            }
        }
    }
    out
}

fn spectral_derivative(f: &Field, axis: Axis, order: u32) -> Field {
    let grid = f.grid();
    let n = axis_len(grid, axis) as i64;
    let scale = 2.0 * std::f64::consts::PI / axis_extent(grid, axis);
    apply_axis_symbol(f, axis, |k| {
        if order % 2 == 1 && 2 * k.abs() == n {
            return Complex64::default();
        }
        Complex64::new(0.0, scale * k as f64).powu(order)
    })
}

/// Centered stencil `(f[i+1] - f[i-1]) / 2h` (order 1) or `(f[i+1] - 2f[i] + f[i-1]) / h^2` (order 2).
fn fd_derivative(f: &Field, axis: usize, order: u32) -> Field {
    let grid = f.grid();
    let h = grid.spacing(axis);
    let [nx, ny, nz] = grid.n();
    let stride = match axis {
        0 => 1,
        1 => nx,
        _ => nx * ny,
    };
    let len = grid.n()[axis];
    let mut out = Field::zeros(grid, f.ncomp());
    for t in 0..grid.nt() {
        for c in 0..f.ncomp() {
            let src = f.slice(t, c);
            let dst = out.slice_mut(t, c);
            for z in 0..nz {
                for y in 0..ny {
                    for x in 0..nx {
                        let cell = (z * ny + y) * nx + x;
                        let pos = [x, y, z][axis];
                        let up = if pos + 1 == len { cell + stride - len * stride } else { cell + stride };
                        let down = if pos == 0 { cell + (len - 1) * stride } else { cell - stride };
                        dst[cell] = match order {
                            1 => (src[up] - src[down]) / (2.0 * h),
                            _ => (src[up] - 2.0 * src[cell] + src[down]) / (h * h),
                        };
                    }
                }
            }
        }
    }
    out
}

/// First partial derivative along `axis`.
pub fn diff(f: &Field, axis: Axis) -> Field {
    match (axis.space_index(), f.grid().backend()) {
        (None, _) | (Some(_), Backend::Spectral) => spectral_derivative(f, axis, 1),
        (Some(a), Backend::Exterior) => fd_derivative(f, a, 1),
    }
}

/// Second spatial derivative `d_a d_b` (`a`, `b` in 0..3).
///
/// On the exterior backend the pure second derivative uses the compact
/// three-point stencil, matching the 7-point Laplacian of the solvers.
pub fn diff2(f: &Field, a: usize, b: usize) -> Field {
    match f.grid().backend() {
        Backend::Spectral if a == b => spectral_derivative(f, Axis::spatial(a), 2),
        Backend::Exterior if a == b => fd_derivative(f, a, 2),
        _ => diff(&diff(f, Axis::spatial(a)), Axis::spatial(b)),
    }
}

pub fn divergence(u: &Field) -> Field {
    assert_eq!(u.ncomp(), 3, "divergence needs a vector field");
    let mut acc = diff(&u.component(0), Axis::X);
    acc = &acc + &diff(&u.component(1), Axis::Y);
    &acc + &diff(&u.component(2), Axis::Z)
}

pub fn gradient(p: &Field) -> Field {
    assert_eq!(p.ncomp(), 1, "gradient needs a scalar field");
    let parts = [diff(p, Axis::X), diff(p, Axis::Y), diff(p, Axis::Z)];
    Field::from_components([&parts[0], &parts[1], &parts[2]])
}

pub fn laplacian(f: &Field) -> Field {
    let mut acc = diff2(f, 0, 0);
    acc = &acc + &diff2(f, 1, 1);
    &acc + &diff2(f, 2, 2)
}

pub fn curl(psi: &Field) -> Field {
    assert_eq!(psi.ncomp(), 3);
    let d = |c: usize, a: Axis| diff(&psi.component(c), a);
    let x = &d(2, Axis::Y) - &d(1, Axis::Z);
    let y = &d(0, Axis::Z) - &d(2, Axis::X);
    let z = &d(1, Axis::X) - &d(0, Axis::Y);
    Field::from_components([&x, &y, &z])
}

/// Truncates a field to the band `3|k| < n` on every axis (time included).
pub fn dealias(f: &Field) -> Field {
    let grid = f.grid();
    let [nz, ny, nx] = grid.space_shape();
    let nt = grid.nt();
    let keep = |i: usize, n: usize| 3 * signed_index(i, n).unsigned_abs() < n as u64;
    let mut coeffs = f.compute_spectrum();
    let block = nt * grid.cells();
    for c in 0..f.ncomp() {
        let s = &mut coeffs[c * block..(c + 1) * block];
        let mut i = 0;
        for k in 0..nt {
            for z in 0..nz {
                for y in 0..ny {
                    for x in 0..nx {
                        if !(keep(k, nt) && keep(z, nz) && keep(y, ny) && keep(x, nx)) {
                            s[i] = Complex64::default();
                        }
                        i += 1;
                    }
                }
            }
        }
    }
    Field::from_spectral(grid, f.ncomp(), &coeffs).expect("shape preserved")
}

/// Pointwise product of a vector-field component sum, dealiased on the spectral backend.
fn finish_product(f: Field) -> Field {
    match f.grid().backend() {
        Backend::Spectral => dealias(&f),
        Backend::Exterior => f,
    }
}

/// Convective term `(u . grad) v`, evaluated in physical space.
pub fn advect(u: &Field, v: &Field) -> Field {
    assert_eq!(u.ncomp(), 3);
    assert_eq!(v.ncomp(), 3);
    u.assert_compatible(v);
    if u.is_zero() || v.is_zero() {
        return Field::zeros(u.grid(), 3);
    }
    let grads: Vec<Field> = Axis::SPACE.iter().map(|&a| diff(v, a)).collect();
    let grid = u.grid();
    let mut out = Field::zeros(grid, 3);
    for t in 0..grid.nt() {
        for j in 0..3 {
            let dst = out.slice_mut(t, j);
            for (i, g) in grads.iter().enumerate() {
                let ui = u.slice(t, i);
                let dv = g.slice(t, j);
                for ((o, a), b) in dst.iter_mut().zip(ui).zip(dv) {
                    *o += a * b;
                }
            }
        }
    }
    finish_product(out)
}

/// Product of a time profile with a field, dealiased like [`advect`].
pub fn profile_product(profile: &[f64], f: &Field) -> Field {
    finish_product(f.times_profile(profile))
}

/// Helmholtz projection onto (discretely) divergence-free fields.
///
/// Uses the backend's first-derivative symbol, so the output has zero
/// discrete divergence. Unavailable on grids carrying an obstacle.
pub fn leray_project(u: &Field) -> Result<Field> {
    assert_eq!(u.ncomp(), 3);
    let grid = u.grid();
    if grid.obstacle().is_some() {
        return Err(Error::UnsupportedBackend { required: "spectral" });
    }
    let [nz, ny, nx] = grid.space_shape();
    let nt = grid.nt();
    let cells = grid.cells();
    let block = nt * cells;
    let symbols: Vec<Vec<f64>> = (0..3).map(|a| derivative_symbol(grid, a)).collect();
    let mut coeffs = u.compute_spectrum();
    for k in 0..nt {
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let cell = (z * ny + y) * nx + x;
                    let d = [symbols[0][x], symbols[1][y], symbols[2][z]];
                    let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                    if d2 == 0.0 {
                        continue;
                    }
                    let i = k * cells + cell;
                    let dot = (0..3).fold(Complex64::default(), |acc, a| acc + coeffs[a * block + i] * d[a]);
                    for (a, da) in d.iter().enumerate() {
                        coeffs[a * block + i] -= dot * (*da / d2);
                    }
                }
            }
        }
    }
    Field::from_spectral(grid, 3, &coeffs)
}

/// Real symbol `s` with `d/dx_a <-> i s` for the grid backend, per storage index.
pub(crate) fn derivative_symbol(grid: &PeriodicGrid, axis: usize) -> Vec<f64> {
    let n = grid.n()[axis];
    let h = grid.spacing(axis);
    (0..n)
        .map(|i| {
            let xi = grid.wavenumber(axis, i);
            if 2 * signed_index(i, n).unsigned_abs() as usize == n {
                return 0.0;
            }
            match grid.backend() {
                Backend::Spectral => xi,
                Backend::Exterior => (xi * h).sin() / h,
            }
        })
        .collect()
}

/// Nonnegative symbol of `-d^2/dx_a^2` for the grid backend.
pub(crate) fn second_derivative_symbol(grid: &PeriodicGrid, axis: usize) -> Vec<f64> {
    let n = grid.n()[axis];
    let h = grid.spacing(axis);
    (0..n)
        .map(|i| {
            let xi = grid.wavenumber(axis, i);
            match grid.backend() {
                Backend::Spectral => xi * xi,
                Backend::Exterior => (2.0 - 2.0 * (xi * h).cos()) / (h * h),
            }
        })
        .collect()
}

/// Per-point time average, replicated over all time samples.
pub fn project_steady(f: &Field) -> Field {
    let grid = f.grid();
    let nt = grid.nt();
    let mut out = Field::zeros(grid, f.ncomp());
    for c in 0..f.ncomp() {
        let mut mean = vec![0.0; grid.cells()];
        for t in 0..nt {
            for (m, v) in mean.iter_mut().zip(f.slice(t, c)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= nt as f64);
        for t in 0..nt {
            out.slice_mut(t, c).copy_from_slice(&mean);
        }
    }
    out
}

/// `f - project_steady(f)`: zero time average at every point.
pub fn project_oscillatory(f: &Field) -> Field {
    f - &project_steady(f)
}

/// Removes the temporal Nyquist component `(-1)^t` (dropped by every solver).
pub fn filter_time_nyquist(f: &Field) -> Field {
    let grid = f.grid();
    let nt = grid.nt();
    let mut out = f.clone();
    for c in 0..f.ncomp() {
        let mut coef = vec![0.0; grid.cells()];
        for t in 0..nt {
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            for (m, v) in coef.iter_mut().zip(f.slice(t, c)) {
                *m += sign * v;
            }
        }
        coef.iter_mut().for_each(|m| *m /= nt as f64);
        for t in 0..nt {
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            for (o, m) in out.slice_mut(t, c).iter_mut().zip(&coef) {
                *o -= sign * m;
            }
        }
    }
    out
}

/// Time profile `P-perp zeta`: the profile minus its mean.
pub fn oscillatory_profile(profile: &[f64]) -> Vec<f64> {
    let mean = profile.iter().sum::<f64>() / profile.len() as f64;
    profile.iter().map(|z| z - mean).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn spectral_grid(n: usize) -> Arc<PeriodicGrid> {
        PeriodicGrid::spectral(1.5, 4, [n, n, n], 2.0).unwrap().into_shared()
    }

    #[test]
    fn spectral_derivative_of_sine() {
        let g = spectral_grid(8);
        let l = g.box_len();
        let k = 2.0 * PI / l;
        let f = Field::from_fn(&g, 1, |_, x, o| o[0] = (k * x[0]).sin());
        let exact = Field::from_fn(&g, 1, |_, x, o| o[0] = k * (k * x[0]).cos());
        assert!(diff(&f, Axis::X).max_abs_diff(&exact) < 1e-12);
        let lap = Field::from_fn(&g, 1, |_, x, o| o[0] = -k * k * (k * x[0]).sin());
        assert!(laplacian(&f).max_abs_diff(&lap) < 1e-11);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        for backend in [Backend::Spectral, Backend::Exterior] {
            let g = PeriodicGrid::new(1.0, 4, [6, 8, 4], 3.0, backend).unwrap().into_shared();
            let f = Field::from_fn(&g, 3, |_, _, o| o.iter_mut().for_each(|v| *v = 4.2));
            for a in [Axis::T, Axis::X, Axis::Y, Axis::Z] {
                assert!(diff(&f, a).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn centered_difference_stencil() {
        let g = PeriodicGrid::new(1.0, 2, [8, 4, 4], 8.0, Backend::Exterior).unwrap().into_shared();
        let f = Field::from_fn(&g, 1, |_, x, o| o[0] = x[0] * x[0]);
        let d = diff(&f, Axis::X);
        // interior points: ((x+1)^2 - (x-1)^2)/2 = 2x
        let cell = g.cell_index(3, 1, 1);
        assert!((d.get(0, 0, cell) - 6.0).abs() < 1e-14);
        let d2 = diff2(&f, 0, 0);
        assert!((d2.get(0, 0, cell) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn leray_single_coefficient() {
        let g = spectral_grid(8);
        let k = 2.0 * PI / g.box_len();
        // u = (cos(k(x+y)), 0, 0): coefficient (1,0,0) at xi = k(1,1,0) and its mirror
        let u = Field::from_fn(&g, 3, |_, x, o| o[0] = (k * (x[0] + x[1])).cos());
        let p = leray_project(&u).unwrap();
        let expected = Field::from_fn(&g, 3, |_, x, o| {
            let c = (k * (x[0] + x[1])).cos();
            o[0] = 0.5 * c;
            o[1] = -0.5 * c;
        });
        assert!(p.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn leray_rejects_obstacle_grids() {
        let g = PeriodicGrid::exterior(1.0, 2, [8, 8, 8], 8.0, 1.2, 2.0).unwrap().into_shared();
        assert!(leray_project(&Field::zeros(&g, 3)).is_err());
    }

    #[test]
    fn projections_on_simple_profiles() {
        let g = spectral_grid(4);
        let period = g.period();
        let f = Field::from_fn(&g, 1, |t, x, o| o[0] = 2.0 + 3.0 * (2.0 * PI * t / period).cos() * x[1]);
        let steady = project_steady(&f);
        let a = Field::from_fn(&g, 1, |_, _, o| o[0] = 2.0);
        assert!(steady.max_abs_diff(&a) < 1e-14);
        let s = Field::from_fn(&g, 1, |t, x, o| o[0] = (2.0 * PI * t / period).sin() * x[2]);
        assert!(project_steady(&s).max_abs() < 1e-15);
        assert!(project_oscillatory(&s).max_abs_diff(&s) < 1e-15);
    }

    #[test]
    fn time_nyquist_filter_removes_alternating_component() {
        let g = spectral_grid(4);
        let f = Field::from_fn(&g, 1, |t, _, o| {
            let idx = (t / g.dt()).round() as usize;
            o[0] = if idx % 2 == 0 { 1.0 } else { -1.0 };
        });
        assert!(filter_time_nyquist(&f).max_abs() < 1e-15);
    }
}
