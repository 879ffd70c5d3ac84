//! Function-space norms on the space-time grid.
//!
//! Every integral is a rectangle rule over fluid cells with weight
//! `cell volume * dt / T`, so a norm of a time-independent field equals its
//! spatial norm. Reductions run in a fixed order (time slice, then cell).

mod exponents;
mod report;

pub use exponents::{
    admissible_exponents, exponent_map, exponent_map_f64, AdmissibleExponents, ExponentBound,
    ExponentMap,
};
pub use report::{format_sig17, NormReport};

use crate::error::{invalid, Result};
use crate::fields::{diff, diff2, gradient, Axis, Field, Region};

/// Exponents and drift parameter attached to a norm evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSpec {
    pub q: f64,
    pub r: Option<f64>,
    pub mixed: Option<(f64, f64)>,
    pub lambda: Option<f64>,
}

impl NormSpec {
    pub fn new(q: f64) -> Result<Self> {
        let spec = Self {
            q,
            r: None,
            mixed: None,
            lambda: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, v: f64| {
            if v > 1.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("exponent must exceed 1, got {v}")))
            }
        };
        check("q", self.q)?;
        if let Some(r) = self.r {
            check("r", r)?;
        }
        if let Some((rt, ps)) = self.mixed {
            check("r_time", rt)?;
            check("p_space", ps)?;
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) {
                return Err(invalid("lambda", format!("must be nonnegative, got {l}")));
            }
        }
        Ok(())
    }
}

/// Pointwise Euclidean magnitude over all components of all parts at `(t, cell)`.
fn magnitude(parts: &[&Field], t: usize, cell: usize) -> f64 {
    let mut s = 0.0;
    for p in parts {
        for c in 0..p.ncomp() {
            let v = p.get(t, c, cell);
            s += v * v;
        }
    }
    s.sqrt()
}

/// Per-time-slice sums of `|f|^q` over `region` (or maxima for `q = inf`).
fn slice_sums(parts: &[&Field], q: f64, region: Region) -> Vec<f64> {
    let grid = parts[0].grid();
    let mask = grid.region_mask(region);
    (0..grid.nt())
        .map(|t| {
            let mut acc = 0.0_f64;
            for (cell, inside) in mask.iter().enumerate() {
                if !inside {
                    continue;
                }
                let m = magnitude(parts, t, cell);
                if q.is_infinite() {
                    acc = acc.max(m);
                } else {
                    acc += m.powf(q);
                }
            }
            acc
        })
        .collect()
}

/// `( (1/T) int |f|^q )` before the final root, for summing Sobolev terms.
fn lq_power(parts: &[&Field], q: f64, region: Region) -> f64 {
    let grid = parts[0].grid();
    let sums = slice_sums(parts, q, region);
    sums.iter().sum::<f64>() * grid.cell_volume() / grid.nt() as f64
}

/// L^q norm of the pointwise magnitude of several fields taken together.
pub fn lq_norm_parts(parts: &[&Field], q: f64, region: Region) -> f64 {
    if q.is_infinite() {
        return slice_sums(parts, q, region).into_iter().fold(0.0, f64::max);
    }
    lq_power(parts, q, region).powf(1.0 / q)
}

pub fn lq_norm(f: &Field, q: f64, region: Region) -> f64 {
    lq_norm_parts(&[f], q, region)
}

/// `((1/T) int_0^T int_Omega |f|^q dx dt)^(1/q)` over fluid cells.
pub fn lq_spacetime_norm(f: &Field, q: f64) -> f64 {
    lq_norm(f, q, Region::Fluid)
}

/// Spatial L^p norm of each time slice.
pub fn slice_norms(parts: &[&Field], p: f64, region: Region) -> Vec<f64> {
    let grid = parts[0].grid();
    let sums = slice_sums(parts, p, region);
    if p.is_infinite() {
        return sums;
    }
    sums.iter().map(|s| (s * grid.cell_volume()).powf(1.0 / p)).collect()
}

/// `L^{r_time}(L^{p_space})` with the same `1/T` convention; `inf` is a max.
pub fn mixed_rp_norm(f: &Field, r_time: f64, p_space: f64) -> f64 {
    mixed_rp_norm_parts(&[f], r_time, p_space, Region::Fluid)
}

pub fn mixed_rp_norm_parts(parts: &[&Field], r_time: f64, p_space: f64, region: Region) -> f64 {
    if r_time == p_space {
        return lq_norm_parts(parts, r_time, region);
    }
    let slices = slice_norms(parts, p_space, region);
    if r_time.is_infinite() {
        return slices.into_iter().fold(0.0, f64::max);
    }
    let nt = slices.len() as f64;
    (slices.iter().map(|s| s.powf(r_time)).sum::<f64>() / nt).powf(1.0 / r_time)
}

/// The three spatial first derivatives of `u`.
pub fn spatial_gradient(u: &Field) -> [Field; 3] {
    [diff(u, Axis::X), diff(u, Axis::Y), diff(u, Axis::Z)]
}

/// The six distinct second spatial derivatives `d_i d_j`, `i <= j`.
pub fn spatial_hessian(u: &Field) -> Vec<Field> {
    let mut out = Vec::with_capacity(6);
    for i in 0..3 {
        for j in i..3 {
            out.push(diff2(u, i, j));
        }
    }
    out
}

/// `W^{1,2,q}` norm; the zero-order term is counted once.
pub fn sobolev_norm_12q(u: &Field, q: f64) -> f64 {
    sobolev_norm_12q_region(u, q, Region::Fluid)
}

pub fn sobolev_norm_12q_region(u: &Field, q: f64, region: Region) -> f64 {
    let mut total = lq_power(&[u], q, region);
    total += lq_power(&[&diff(u, Axis::T)], q, region);
    for g in spatial_gradient(u) {
        total += lq_power(&[&g], q, region);
    }
    for h in spatial_hessian(u) {
        total += lq_power(&[&h], q, region);
    }
    total.powf(1.0 / q)
}

/// `||grad p||_q + (1/T) int_0^T | int_{Omega_R0} p dx | dt`.
pub fn homogeneous_d1q_norm(p: &Field, q: f64) -> f64 {
    assert_eq!(p.ncomp(), 1);
    let grid = p.grid();
    let grad = gradient(p);
    let grad_norm = lq_spacetime_norm(&grad, q);
    let mask = grid.region_mask(Region::Annulus);
    let mut mean_term = 0.0;
    for t in 0..grid.nt() {
        let s: f64 = p
            .slice(t, 0)
            .iter()
            .zip(&mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| v)
            .sum();
        mean_term += (s * grid.cell_volume()).abs();
    }
    grad_norm + mean_term / grid.nt() as f64
}

/// The four terms of the steady Oseen-space norm, before weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XOseenTerms {
    pub velocity: f64,
    pub gradient: f64,
    pub drift: f64,
    pub hessian: f64,
}

pub fn xoseen_terms(v: &Field, q: f64) -> XOseenTerms {
    let grads = spatial_gradient(v);
    let hess = spatial_hessian(v);
    let grad_refs: Vec<&Field> = grads.iter().collect();
    let hess_refs: Vec<&Field> = hess.iter().collect();
    XOseenTerms {
        velocity: lq_spacetime_norm(v, 2.0 * q / (2.0 - q)),
        gradient: lq_norm_parts(&grad_refs, 4.0 * q / (4.0 - q), Region::Fluid),
        drift: lq_spacetime_norm(&grads[0], q),
        hessian: lq_norm_parts(&hess_refs, q, Region::Fluid),
    }
}

/// `lambda^(1/2)||v||_{2q/(2-q)} + lambda^(1/4)||grad v||_{4q/(4-q)} + lambda||d_1 v||_q + ||grad^2 v||_q`.
pub fn xoseen_norm(v: &Field, q: f64, lambda: f64) -> Result<f64> {
    if !(q > 1.0 && q < 2.0) {
        return Err(invalid("q", format!("Oseen-space exponent must lie in (1,2), got {q}")));
    }
    if !(lambda > 0.0) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let t = xoseen_terms(v, q);
    Ok(lambda.sqrt() * t.velocity + lambda.powf(0.25) * t.gradient + lambda * t.drift + t.hessian)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Backend, PeriodicGrid};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid() -> Arc<PeriodicGrid> {
        PeriodicGrid::spectral(3.0, 4, [4, 4, 4], 1.0).unwrap().into_shared()
    }

    #[test]
    fn constant_field_norm() {
        let g = PeriodicGrid::spectral(7.0, 4, [4, 4, 4], 2.0).unwrap().into_shared();
        let f = Field::from_fn(&g, 1, |_, _, o| o[0] = -3.0);
        let v: f64 = 8.0;
        for q in [1.0, 1.5, 2.0, 3.7] {
            assert!((lq_spacetime_norm(&f, q) - 3.0 * v.powf(1.0 / q)).abs() < 1e-12);
        }
        assert!((sobolev_norm_12q(&f, 1.5) - 3.0 * v.powf(1.0 / 1.5)).abs() < 1e-12);
        assert!((mixed_rp_norm(&f, 4.0, 3.0) - 3.0 * v.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((homogeneous_d1q_norm(&f, 1.5) - 3.0 * v).abs() < 1e-12);
    }

    #[test]
    fn sine_in_time_on_unit_volume() {
        let g = grid();
        let f = Field::from_fn(&g, 1, |t, _, o| o[0] = (2.0 * PI * t / 3.0).sin());
        assert!((lq_spacetime_norm(&f, 2.0) - 0.5_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn xoseen_rejects_bad_inputs() {
        let g = grid();
        let v = Field::zeros(&g, 3);
        assert!(xoseen_norm(&v, 2.0, 1.0).is_err());
        assert!(xoseen_norm(&v, 1.0, 1.0).is_err());
        assert!(xoseen_norm(&v, 1.5, 0.0).is_err());
        assert_eq!(xoseen_norm(&v, 1.5, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn solid_cells_are_excluded() {
        let g = PeriodicGrid::exterior(1.0, 2, [8, 8, 8], 8.0, 1.1, 2.0).unwrap().into_shared();
        assert_eq!(g.backend(), Backend::Exterior);
        let f = Field::from_fn(&g, 1, |_, _, o| o[0] = 1.0);
        let fluid = g.region_volume(Region::Fluid);
        assert!(fluid < 512.0);
        assert!((lq_spacetime_norm(&f, 2.0) - fluid.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn infinity_exponent_is_grid_max() {
        let g = grid();
        let f = Field::from_fn(&g, 1, |t, x, o| o[0] = t - 2.0 * x[1]);
        let max = f.max_abs();
        assert_eq!(lq_spacetime_norm(&f, f64::INFINITY), max);
        assert_eq!(mixed_rp_norm(&f, f64::INFINITY, f64::INFINITY), max);
    }
}
