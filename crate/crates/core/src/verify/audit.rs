//! Numerical audits of the a priori estimates.
//!
//! Each audit evaluates both sides of an inequality on an ensemble of inputs
//! and reports the fitted constants `left / right`. The constants in the
//! estimates are existential, so the checks are structural: dispersion of the
//! fitted constants, or a constant calibrated on one set and checked on a
//! fresh one.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use super::random::{band_limited_field, TimeContent};
use crate::error::{invalid, Error, Result};
use crate::fields::{leray_project, Backend, Field, PeriodicGrid, Region};
use crate::norms::{
    admissible_exponents, format_sig17, lq_norm, lq_norm_parts, mixed_rp_norm_parts, slice_norms,
    sobolev_norm_12q_region, spatial_gradient, spatial_hessian, xoseen_norm,
};
use crate::oseen::{
    mode_constant, solve_exterior_with_options, solve_mode_exterior, solve_wholespace_tp_oseen, BoundaryData,
    ExteriorOptions, ModeField, OseenParams, Pressure,
};

/// One evaluated instance of an inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub label: String,
    pub left: f64,
    pub right: f64,
    pub fitted_constant: f64,
    /// `left <= constant * right` for the report constant.
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

impl EnsembleStats {
    /// Statistics of the finite values; NaN entries when there are none.
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Self {
                min: f64::NAN,
                max: f64::NAN,
                median: f64::NAN,
            };
        }
        v.sort_by(f64::total_cmp);
        let m = v.len();
        let median = if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) };
        Self {
            min: v[0],
            max: v[m - 1],
            median,
        }
    }

    /// `max / min`, or 1 when every constant is zero.
    pub fn dispersion(&self) -> f64 {
        if self.max == 0.0 {
            1.0
        } else {
            self.max / self.min
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    /// The audited inequality.
    pub label: String,
    pub rows: Vec<AuditRow>,
    /// Fitted or calibrated constant the rows are checked against.
    pub constant: f64,
    pub stats: EnsembleStats,
    pub pass: bool,
    /// Extra labeled values (thresholds, exponents, dispersion).
    pub notes: Vec<(String, f64)>,
}

impl AuditReport {
    /// Report whose constant is the largest fitted constant; passes when the
    /// dispersion `max / min` is at most `max_dispersion`.
    pub fn dispersion(label: impl Into<String>, rows: Vec<(String, f64, f64)>, max_dispersion: f64) -> Self {
        let fitted: Vec<f64> = rows.iter().map(|r| ratio(r.1, r.2)).collect();
        let stats = EnsembleStats::of(&fitted);
        let constant = if stats.max.is_finite() { stats.max } else { 0.0 };
        let rows: Vec<AuditRow> = rows
            .into_iter()
            .zip(&fitted)
            .map(|((label, left, right), c)| AuditRow {
                label,
                left,
                right,
                fitted_constant: *c,
                pass: left <= constant * right * (1.0 + 1e-12),
            })
            .collect();
        let d = stats.dispersion();
        let pass = rows.iter().all(|r| r.pass) && (d.is_nan() || d <= max_dispersion);
        Self {
            label: label.into(),
            rows,
            constant,
            stats,
            pass,
            notes: vec![("dispersion".into(), d), ("max_dispersion".into(), max_dispersion)],
        }
    }

    /// Calibrate-then-check: the constant is `margin` times the largest fitted
    /// constant of `calibration`; passes when no row of `check` exceeds it.
    pub fn calibrated(
        label: impl Into<String>,
        calibration: Vec<(String, f64, f64)>,
        check: Vec<(String, f64, f64)>,
        margin: f64,
    ) -> Self {
        let cal: Vec<f64> = calibration.iter().map(|r| ratio(r.1, r.2)).collect();
        let constant = margin * EnsembleStats::of(&cal).max.max(0.0);
        let mut all: Vec<f64> = cal.clone();
        let mut rows = Vec::new();
        for (label, left, right) in calibration {
            let c = ratio(left, right);
            rows.push(AuditRow {
                label: format!("calibration {label}"),
                left,
                right,
                fitted_constant: c,
                pass: left <= constant * right,
            });
        }
        let mut violations = 0;
        for (label, left, right) in check {
            let c = ratio(left, right);
            all.push(c);
            let pass = left <= constant * right;
            if !pass {
                violations += 1;
            }
            rows.push(AuditRow {
                label: format!("check {label}"),
                left,
                right,
                fitted_constant: c,
                pass,
            });
        }
        Self {
            label: label.into(),
            rows,
            constant,
            stats: EnsembleStats::of(&all),
            pass: violations == 0,
            notes: vec![("margin".into(), margin), ("violations".into(), violations as f64)],
        }
    }

    pub fn note(&self, label: &str) -> Option<f64> {
        self.notes.iter().find(|n| n.0 == label).map(|n| n.1)
    }

    /// CSV `label,left,right,fitted_constant,pass` followed by the statistics rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,left,right,fitted_constant,pass\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.label,
                format_sig17(r.left),
                format_sig17(r.right),
                format_sig17(r.fitted_constant),
                r.pass
            );
        }
        for (name, v) in [
            ("ensemble_min", self.stats.min),
            ("ensemble_max", self.stats.max),
            ("ensemble_median", self.stats.median),
            ("constant", self.constant),
        ] {
            let _ = writeln!(out, "{name},,,{},", format_sig17(v));
        }
        for (name, v) in &self.notes {
            let _ = writeln!(out, "{name},,,{},", format_sig17(*v));
        }
        let _ = writeln!(out, "audit {},,,,{}", self.label, self.pass);
        out
    }
}

fn ratio(left: f64, right: f64) -> f64 {
    if right > 0.0 {
        left / right
    } else if left == 0.0 {
        f64::NAN
    } else {
        f64::INFINITY
    }
}

/// Region where the equations hold on `grid`.
pub fn equation_region(grid: &PeriodicGrid) -> Region {
    if grid.obstacle().is_some() {
        Region::Interior
    } else {
        Region::All
    }
}

/// Linear solve with zero boundary data on whichever backend `f` lives on.
pub fn solve_linear(f: &Field, params: &OseenParams, opts: &ExteriorOptions) -> Result<(Field, Pressure)> {
    let grid = f.grid();
    match grid.backend() {
        Backend::Spectral => solve_wholespace_tp_oseen(f, params).map(|(u, p, _)| (u, p)),
        Backend::Exterior => {
            solve_exterior_with_options(f, &BoundaryData::zeros(grid), params, opts).map(|(u, p, _)| (u, p))
        }
    }
}

/// Both sides of the maximal-regularity estimate for one solve.
pub fn linear_estimate_sides(u: &Field, p: &Pressure, f: &Field, q: f64) -> (f64, f64) {
    let region = equation_region(u.grid());
    let left = sobolev_norm_12q_region(u, q, region) + lq_norm(&p.gradient(), q, region);
    (left, lq_norm(f, q, region))
}

fn check_q(q: f64) -> Result<()> {
    if q > 1.0 && q.is_finite() {
        Ok(())
    } else {
        Err(invalid("q", format!("must lie in (1,inf), got {q}")))
    }
}

fn linear_ratios(
    grid: &Arc<PeriodicGrid>,
    params: &OseenParams,
    q: f64,
    ensemble_size: usize,
    seed: u64,
) -> Result<Vec<(String, f64, f64)>> {
    (0..ensemble_size)
        .into_par_iter()
        .map(|i| {
            let f = band_limited_field(grid, 3, TimeContent::Oscillatory, seed.wrapping_add(i as u64));
            let (u, p) = solve_linear(&f, params, &ExteriorOptions::default())?;
            let (l, r) = linear_estimate_sides(&u, &p, &f, q);
            Ok((format!("sample {i}"), l, r))
        })
        .collect()
}

/// `||u||_{1,2,q} + ||grad p||_q <= C ||F||_q` over random oscillatory forcings;
/// passes when the fitted constants spread by at most a factor 20.
pub fn audit_linear_estimate(
    grid: &Arc<PeriodicGrid>,
    params: &OseenParams,
    q: f64,
    ensemble_size: usize,
    seed: u64,
) -> Result<AuditReport> {
    check_q(q)?;
    let rows = linear_ratios(grid, params, q, ensemble_size, seed)?;
    let mut report = AuditReport::dispersion("maximal regularity", rows, 20.0);
    report.notes.push(("q".into(), q));
    report.notes.push(("lambda".into(), params.lambda()));
    Ok(report)
}

/// The fitted constant of [`audit_linear_estimate`] for each `lambda` on one
/// forcing ensemble; passes when it varies by at most a factor 3.
pub fn audit_lambda_sweep(
    grid: &Arc<PeriodicGrid>,
    params: &OseenParams,
    lambdas: &[f64],
    q: f64,
    ensemble_size: usize,
    seed: u64,
) -> Result<AuditReport> {
    check_q(q)?;
    let lambda0 = lambdas.iter().copied().fold(params.lambda0(), f64::max);
    let mut fitted = Vec::new();
    for &lambda in lambdas {
        let base = OseenParams::new(params.nu(), params.zeta().to_vec(), lambda0)?;
        let p = base.with_lambda(lambda)?;
        let rows = linear_ratios(grid, &p, q, ensemble_size, seed)?;
        let c = rows.iter().map(|r| ratio(r.1, r.2)).fold(0.0, f64::max);
        fitted.push((lambda, c));
    }
    let floor = fitted.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let rows = fitted
        .iter()
        .map(|(lambda, c)| (format!("lambda={lambda}"), *c, floor))
        .collect();
    let mut report = AuditReport::dispersion("maximal regularity constant across lambda", rows, 3.0);
    report.notes.push(("q".into(), q));
    report.notes.push(("lambda0".into(), lambda0));
    Ok(report)
}

/// Mode constants `c_k`, `k = 1..=k_max`, for one spatial forcing pattern with
/// the same norm in every mode; passes when `max c_k / min c_k <= 4`.
pub fn audit_modewise(grid: &Arc<PeriodicGrid>, params: &OseenParams, k_max: usize, seed: u64) -> Result<AuditReport> {
    if k_max < 1 {
        return Err(invalid("k_max", "must be at least 1"));
    }
    let pattern = band_limited_field(grid, 3, TimeContent::Steady, seed);
    let region = equation_region(grid);
    let omega = grid.omega();
    let rows: Vec<(String, f64, f64)> = match grid.backend() {
        Backend::Exterior => (1..=k_max as i64)
            .into_par_iter()
            .map(|k| {
                let data = (0..3)
                    .flat_map(|c| pattern.slice(0, c).iter().map(|v| num_complex::Complex64::new(*v, 0.0)))
                    .collect();
                let f = ModeField::from_data(grid, k, 3, data);
                let sol = solve_mode_exterior(&f, params, &ExteriorOptions::default())?;
                let right = f.l2_norm(region);
                let c = mode_constant(&sol.u, &sol.p, &f, omega, region);
                Ok((format!("k={k}"), c * right, right))
            })
            .collect::<Result<_>>()?,
        Backend::Spectral => {
            if k_max > grid.max_mode() || 2 * k_max >= grid.nt() {
                return Err(invalid("k_max", format!("mode {k_max} is not resolved by n_t = {}", grid.nt())));
            }
            let mut rows = Vec::new();
            let cells = grid.cells();
            for k in 1..=k_max {
                let mut data = Vec::with_capacity(grid.nt() * 3 * cells);
                for t in 0..grid.nt() {
                    let c = (omega * k as f64 * t as f64 * grid.dt()).cos();
                    for comp in 0..3 {
                        data.extend(pattern.slice(0, comp).iter().map(|v| c * v));
                    }
                }
                let f = Field::from_samples(grid, 3, data)?;
                let (_, _, report) = solve_wholespace_tp_oseen(&f, params)?;
                let m = report
                    .mode(k as i64)
                    .ok_or_else(|| Error::ShapeMismatch(format!("mode {k} missing from the solve")))?;
                rows.push((format!("k={k}"), m.c_k, 1.0));
            }
            rows
        }
    };
    let mut report = AuditReport::dispersion("mode constants", rows, 4.0);
    report.notes.push(("k_max".into(), k_max as f64));
    Ok(report)
}

/// Target exponents of the embedding estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingTargets {
    pub r0: f64,
    pub p0: f64,
    pub r1: f64,
    pub p1: f64,
}

/// Exponent used for an unbounded admissible range.
pub fn infinite_exponent_surrogate(q: f64) -> f64 {
    8.0 * q
}

/// Largest probed exponents for `(alpha, beta, q)` in three dimensions:
/// closed finite bounds as is, open finite bounds at 0.9x, infinite bounds at `8q`.
pub fn embedding_targets(alpha: f64, beta: f64, q: f64) -> Result<EmbeddingTargets> {
    let ex = admissible_exponents(alpha, beta, q, 3)?;
    let s = infinite_exponent_surrogate(q);
    let t = EmbeddingTargets {
        r0: ex.r0.probe(s),
        p0: ex.p0.probe(s),
        r1: ex.r1.probe(s),
        p1: ex.p1.probe(s),
    };
    ex.check(t.r0, t.p0, t.r1, t.p1)?;
    Ok(t)
}

/// Both sides of the embedding estimate for one field.
pub fn embedding_sides(u: &Field, q: f64, t: &EmbeddingTargets) -> (f64, f64) {
    let region = Region::Fluid;
    let grads = spatial_gradient(u);
    let grad_refs: Vec<&Field> = grads.iter().collect();
    let left = mixed_rp_norm_parts(&[u], t.r0, t.p0, region) + mixed_rp_norm_parts(&grad_refs, t.r1, t.p1, region);
    (left, sobolev_norm_12q_region(u, q, region))
}

/// Calibrate-then-check run of the embedding estimate on random band-limited fields.
pub fn audit_embedding(
    grid: &Arc<PeriodicGrid>,
    q: f64,
    alpha: f64,
    beta: f64,
    calibration: usize,
    fresh: usize,
    seed: u64,
) -> Result<AuditReport> {
    let targets = embedding_targets(alpha, beta, q)?;
    audit_embedding_with_targets(grid, q, alpha, beta, targets, calibration, fresh, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn audit_embedding_with_targets(
    grid: &Arc<PeriodicGrid>,
    q: f64,
    alpha: f64,
    beta: f64,
    targets: EmbeddingTargets,
    calibration: usize,
    fresh: usize,
    seed: u64,
) -> Result<AuditReport> {
    let ex = admissible_exponents(alpha, beta, q, 3)?;
    ex.check(targets.r0, targets.p0, targets.r1, targets.p1)?;
    let sides = |i: usize| {
        let u = band_limited_field(grid, 1, TimeContent::Full, seed.wrapping_add(i as u64));
        let (l, r) = embedding_sides(&u, q, &targets);
        (format!("field {i}"), l, r)
    };
    let cal: Vec<_> = (0..calibration).into_par_iter().map(sides).collect();
    let chk: Vec<_> = (calibration..calibration + fresh).into_par_iter().map(sides).collect();
    let mut report = AuditReport::calibrated("embedding", cal, chk, 1.2);
    for (name, v) in [
        ("q", q),
        ("alpha", alpha),
        ("beta", beta),
        ("r0", targets.r0),
        ("p0", targets.p0),
        ("r1", targets.r1),
        ("p1", targets.p1),
    ] {
        report.notes.push((name.into(), v));
    }
    Ok(report)
}

/// Per-slice fitted constants of the two local pressure estimates for one solve.
///
/// Annulus estimate: `||p||_{3s/2, Omega_R0}` against
/// `||F||_s + ||grad u||_{s,Omega_R0} + ||grad u||^{(s-1)/s}_{s,Omega_R0} ||grad u||^{1/s}_{1,s,Omega_R0}`.
/// Far-field estimate: `||grad p||_{s, |x|>rho}` against `||F||_s + ||p||_{s, |x|<rho}`.
pub fn pressure_local_sides(u: &Field, p: &Pressure, f: &Field, s: f64, rho: f64) -> Result<[(f64, f64); 2]> {
    let grid = u.grid();
    if grid.obstacle().is_none() {
        return Err(Error::UnsupportedBackend { required: "exterior" });
    }
    let grads = spatial_gradient(u);
    let grad_refs: Vec<&Field> = grads.iter().collect();
    let hess = spatial_hessian(u);
    let hess_refs: Vec<&Field> = hess.iter().collect();
    let gp = p.gradient();
    let f_s = slice_norms(&[f], s, Region::Interior);
    let p_ann = slice_norms(&[&p.field], 1.5 * s, Region::Annulus);
    let g_ann = slice_norms(&grad_refs, s, Region::Annulus);
    let h_ann = slice_norms(&hess_refs, s, Region::Annulus);
    let gp_far = slice_norms(&[&gp], s, Region::Beyond(rho));
    let p_near = slice_norms(&[&p.field], s, Region::Within(rho));
    let mut worst = [(0.0, 0.0, f64::NEG_INFINITY); 2];
    for t in 0..grid.nt() {
        let w1 = g_ann[t] + h_ann[t];
        let r1 = f_s[t] + g_ann[t] + g_ann[t].powf((s - 1.0) / s) * w1.powf(1.0 / s);
        let r2 = f_s[t] + p_near[t];
        for (slot, (l, r)) in [(p_ann[t], r1), (gp_far[t], r2)].into_iter().enumerate() {
            let c = ratio(l, r);
            if c.is_finite() && c > worst[slot].2 {
                worst[slot] = (l, r, c);
            }
        }
    }
    Ok(worst.map(|(l, r, _)| (l, r)))
}

/// Local pressure estimates over an ensemble of exterior solves with random
/// forcing; passes when each estimate's fitted constants spread by at most 20.
pub fn audit_pressure_local(
    grid: &Arc<PeriodicGrid>,
    params: &OseenParams,
    s: f64,
    rho: f64,
    ensemble_size: usize,
    seed: u64,
) -> Result<[AuditReport; 2]> {
    check_q(s)?;
    let samples: Vec<(Field, Pressure, Field)> = (0..ensemble_size)
        .map(|i| {
            let f = band_limited_field(grid, 3, TimeContent::Full, seed.wrapping_add(i as u64));
            let (u, p) = solve_linear(&f, params, &ExteriorOptions::default())?;
            Ok((u, p, f))
        })
        .collect::<Result<_>>()?;
    pressure_reports(&samples, s, rho)
}

/// [`audit_pressure_local`] on given solutions `(u, p, F)`.
pub fn pressure_reports(samples: &[(Field, Pressure, Field)], s: f64, rho: f64) -> Result<[AuditReport; 2]> {
    let mut annulus = Vec::new();
    let mut far = Vec::new();
    for (i, (u, p, f)) in samples.iter().enumerate() {
        let [a, b] = pressure_local_sides(u, p, f, s, rho)?;
        annulus.push((format!("sample {i}"), a.0, a.1));
        far.push((format!("sample {i}"), b.0, b.1));
    }
    let mut a = AuditReport::dispersion("local pressure on the annulus", annulus, 20.0);
    let mut b = AuditReport::dispersion("pressure gradient away from the body", far, 20.0);
    for r in [&mut a, &mut b] {
        r.notes.push(("s".into(), s));
        r.notes.push(("rho".into(), rho));
    }
    Ok([a, b])
}

/// `||(v.grad)v||_q` and `lambda^{-(3q-3)/q} ||v||_{X^q}^2` for a steady field.
///
/// The product is taken pointwise on the grid, without dealiasing.
pub fn nonlinear_term_sides(v: &Field, q: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(6.0 / 5.0 - 1e-12..=4.0 / 3.0 + 1e-12).contains(&q) {
        return Err(invalid("q", format!("must lie in [6/5, 4/3], got {q}")));
    }
    let xn = xoseen_norm(v, q, lambda)?;
    let grid = v.grid();
    let grads = spatial_gradient(v);
    let mut conv = Field::zeros(grid, 3);
    let cells = grid.cells();
    let data = conv.data_mut();
    for t in 0..grid.nt() {
        for j in 0..3 {
            for (a, g) in grads.iter().enumerate() {
                let va = v.slice(t, a);
                let dv = g.slice(t, j);
                let dst = &mut data[(t * 3 + j) * cells..(t * 3 + j + 1) * cells];
                for ((o, x), y) in dst.iter_mut().zip(va).zip(dv) {
                    *o += x * y;
                }
            }
        }
    }
    let left = lq_norm_parts(&[&conv], q, Region::Fluid);
    let right = lambda.powf(-(3.0 * q - 3.0) / q) * xn * xn;
    Ok((left, right))
}

/// Random steady divergence-free field.
pub fn random_steady_solenoidal(grid: &Arc<PeriodicGrid>, seed: u64) -> Result<Field> {
    leray_project(&band_limited_field(grid, 3, TimeContent::Steady, seed))
}

/// Calibrate-then-check run of the nonlinear-term bound: `ensemble_size`
/// calibration fields and as many fresh fields, each at every `lambda`.
pub fn audit_nonlinear_term(
    grid: &Arc<PeriodicGrid>,
    q: f64,
    lambdas: &[f64],
    ensemble_size: usize,
    seed: u64,
) -> Result<AuditReport> {
    let rows = |offset: usize| -> Result<Vec<(String, f64, f64)>> {
        let mut out = Vec::new();
        for i in 0..ensemble_size {
            let v = random_steady_solenoidal(grid, seed.wrapping_add((offset + i) as u64))?;
            for &lambda in lambdas {
                let (l, r) = nonlinear_term_sides(&v, q, lambda)?;
                out.push((format!("field {i} lambda={lambda}"), l, r));
            }
        }
        Ok(out)
    };
    let cal = rows(0)?;
    let chk = rows(ensemble_size)?;
    let mut report = AuditReport::calibrated("nonlinear term", cal, chk, 1.2);
    report.notes.push(("q".into(), q));
    report.notes.push(("lambda_power".into(), (3.0 * q - 3.0) / q));
    Ok(report)
}
