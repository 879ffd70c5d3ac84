//! Subcommand dispatch and artifact emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use tpflow::fields::io::{read_field, read_field_standalone, write_field};
use tpflow::fields::{project_oscillatory, project_steady, Backend, Field, PeriodicGrid, Region};
use tpflow::nonlinear::picard_solve;
use tpflow::norms::{
    format_sig17, homogeneous_d1q_norm, lq_norm, mixed_rp_norm, sobolev_norm_12q, xoseen_norm, NormReport,
};
use tpflow::oseen::{
    solve_exterior_with_options, solve_steady_diagnostic, solve_wholespace_tp_oseen, BoundaryData, ExteriorOptions,
    LinearSolveReport,
};
use tpflow::verify::{
    audit_embedding_with_targets, audit_lambda_sweep, audit_linear_estimate, audit_modewise, audit_nonlinear_term,
    audit_pressure_local, band_limited_field, embedding_targets, manufactured_case, oseen_wake_ratio, recover,
    wake_diagnostic, AuditReport, CaseKind, EmbeddingTargets,
};
use tpflow::Error;

use crate::config::{BoundarySpec, ConfigError, ForcingSpec, RunConfig};
use crate::manifest::RunManifest;
use crate::vtk::export_vtk;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_AUDIT: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    SolveLinear,
    SolveNonlinear,
    Mms,
    AuditEstimate,
    AuditModewise,
    AuditEmbedding,
    AuditPressure,
    AuditNonlinearTerm,
    Wake,
    Norms,
    ExportVtk,
}

impl Subcommand {
    pub const ALL: [Subcommand; 11] = [
        Subcommand::SolveLinear,
        Subcommand::SolveNonlinear,
        Subcommand::Mms,
        Subcommand::AuditEstimate,
        Subcommand::AuditModewise,
        Subcommand::AuditEmbedding,
        Subcommand::AuditPressure,
        Subcommand::AuditNonlinearTerm,
        Subcommand::Wake,
        Subcommand::Norms,
        Subcommand::ExportVtk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::SolveLinear => "solve-linear",
            Subcommand::SolveNonlinear => "solve-nonlinear",
            Subcommand::Mms => "mms",
            Subcommand::AuditEstimate => "audit-estimate",
            Subcommand::AuditModewise => "audit-modewise",
            Subcommand::AuditEmbedding => "audit-embedding",
            Subcommand::AuditPressure => "audit-pressure",
            Subcommand::AuditNonlinearTerm => "audit-nonlinear-term",
            Subcommand::Wake => "wake",
            Subcommand::Norms => "norms",
            Subcommand::ExportVtk => "export-vtk",
        }
    }
}

impl FromStr for Subcommand {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown subcommand `{s}`"))
    }
}

/// Why a run stopped early.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(Error::Diverged { .. } | Error::MaxIterations { .. } | Error::NotConverged { .. }) => {
                EXIT_DIVERGED
            }
            _ => EXIT_CONFIG,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    manifest: RunManifest,
    /// Set when an audit or acceptance check fails.
    failed: bool,
    phase_start: Instant,
}

impl Ctx<'_> {
    fn phase(&mut self, name: &str) {
        let now = Instant::now();
        let secs = (now - self.phase_start).as_secs_f64();
        self.manifest.phases.push((name.into(), secs));
        self.phase_start = now;
    }

    fn out(&self) -> &Path {
        &self.cfg.out
    }

    fn register(&mut self, path: &Path) -> Result<(), RunError> {
        let out = self.cfg.out.clone();
        self.manifest.add_artifact(&out, path).map_err(io_err(path))
    }

    fn field(&mut self, name: &str, field: &Field) -> Result<(), RunError> {
        if self.cfg.formats.tpof {
            let path = self.out().join(format!("{name}.tpof"));
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            write_field(field, std::io::BufWriter::new(file))?;
            self.register(&path)?;
        }
        if self.cfg.formats.vtk {
            let out = self.out().to_path_buf();
            for p in export_vtk(field, &out, name).map_err(io_err(&out))? {
                self.register(&p)?;
            }
        }
        Ok(())
    }

    fn csv(&mut self, name: &str, text: &str) -> Result<(), RunError> {
        if self.cfg.formats.csv {
            let path = self.out().join(format!("{name}.csv"));
            fs::write(&path, text).map_err(io_err(&path))?;
            self.register(&path)?;
        }
        Ok(())
    }

    fn audit(&mut self, name: &str, report: &AuditReport) -> Result<(), RunError> {
        self.failed |= !report.pass;
        self.csv(name, &report.to_csv())
    }
}

fn build_forcing(cfg: &RunConfig, grid: &Arc<PeriodicGrid>) -> Result<Field, RunError> {
    Ok(match &cfg.forcing {
        ForcingSpec::Zero => Field::zeros(grid, 3),
        ForcingSpec::Random { amplitude, content } => {
            let f = band_limited_field(grid, 3, *content, cfg.seed);
            let m = f.max_abs();
            if m > 0.0 {
                f.scaled(amplitude / m)
            } else {
                f
            }
        }
        ForcingSpec::File(path) => {
            let file = fs::File::open(path).map_err(io_err(path))?;
            let f = read_field(std::io::BufReader::new(file), grid)?;
            if f.ncomp() != 3 {
                return Err(RunError::Usage(format!("forcing file {} is not a vector field", path.display())));
            }
            f
        }
    })
}

fn build_bc(cfg: &RunConfig, grid: &Arc<PeriodicGrid>, zeta: &[f64]) -> Result<BoundaryData, RunError> {
    Ok(match cfg.bc {
        BoundarySpec::Zero => BoundaryData::zeros(grid),
        BoundarySpec::Towed { amplitude } => {
            let m = zeta.iter().fold(0.0_f64, |m, z| m.max(z.abs()));
            let profile: Vec<f64> = if m > 0.0 {
                zeta.iter().map(|z| amplitude * z / m).collect()
            } else {
                vec![amplitude; zeta.len()]
            };
            BoundaryData::towed(grid, &profile)?
        }
    })
}

fn linear_csv(report: &LinearSolveReport, timings: bool) -> String {
    let mut r = report.clone();
    if !timings {
        for m in &mut r.modes {
            m.seconds = 0.0;
        }
    }
    r.to_csv()
}

fn labeled_csv(rows: &[(&str, String)]) -> String {
    let mut out = String::from("label,value\n");
    for (label, value) in rows {
        let _ = writeln!(out, "{label},{value}");
    }
    out
}

fn velocity_norms(u: &Field, cfg: &RunConfig) -> NormReport {
    let q = cfg.q;
    let mut r = NormReport::new();
    r.push(format!("u_l{q}"), lq_norm(u, q, Region::Fluid));
    r.push("u_linf", lq_norm(u, f64::INFINITY, Region::Fluid));
    r.push(format!("u_sobolev_{q}"), sobolev_norm_12q(u, q));
    r.push(format!("steady_l{q}"), lq_norm(&project_steady(u), q, Region::Fluid));
    r.push(format!("oscillatory_sobolev_{q}"), sobolev_norm_12q(&project_oscillatory(u), q));
    if cfg.lambda > 0.0 && q > 1.0 && q < 2.0 {
        let x = xoseen_norm(&project_steady(u), q, cfg.lambda).expect("checked exponent and lambda");
        r.push(format!("steady_xoseen_{q}"), x);
    }
    if let Some(rt) = cfg.r {
        r.push(format!("u_l{rt}_l{q}"), mixed_rp_norm(u, rt, q));
    }
    echo_grid(&mut r, u.grid());
    r
}

fn echo_grid(r: &mut NormReport, g: &PeriodicGrid) {
    let n = g.n();
    r.echo("backend", g.backend().name());
    r.echo("nt", g.nt());
    r.echo("nx", n[0]);
    r.echo("ny", n[1]);
    r.echo("nz", n[2]);
    r.echo("box", format_sig17(g.box_len()));
    r.echo("period", format_sig17(g.period()));
}

fn solve_linear(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let grid = cfg.build_grid()?;
    let params = cfg.params()?;
    let f = build_forcing(cfg, &grid)?;
    let bc = build_bc(cfg, &grid, params.zeta())?;
    ctx.phase("setup");
    let (u, p, report) = match cfg.backend {
        Backend::Spectral => solve_wholespace_tp_oseen(&f, &params)?,
        Backend::Exterior => solve_exterior_with_options(&f, &bc, &params, &ExteriorOptions::default())?,
    };
    ctx.phase("solve");
    ctx.field("u", &u)?;
    ctx.field("p", &p.field)?;
    ctx.csv("linear_report", &linear_csv(&report, cfg.timings))?;
    ctx.csv("norms", &velocity_norms(&u, cfg).to_csv())?;
    ctx.phase("write");
    Ok(())
}

fn solve_nonlinear(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let picard = cfg.nonlinear_picard()?;
    let grid = cfg.build_grid()?;
    let params = cfg.params()?;
    let f = build_forcing(cfg, &grid)?;
    let bc = build_bc(cfg, &grid, params.zeta())?;
    let bc_ref = (grid.obstacle().is_some() && !bc.is_zero()).then_some(&bc);
    ctx.phase("setup");
    let sol = picard_solve(&f, bc_ref, &params, &picard, cfg.initial_state(), &ExteriorOptions::default())?;
    ctx.phase("solve");
    ctx.field("u", &sol.u)?;
    ctx.field("p", &sol.p.field)?;
    ctx.csv("picard_report", &sol.report.to_csv())?;
    ctx.csv("norms", &velocity_norms(&sol.u, cfg).to_csv())?;
    ctx.phase("write");
    Ok(())
}

fn mms(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let picard = match cfg.mms.kind {
        CaseKind::Nonlinear => cfg.nonlinear_picard()?,
        _ => cfg.picard,
    };
    let grid = cfg.build_grid()?;
    let params = cfg.params()?;
    let case = manufactured_case(cfg.mms.kind, &grid, &params, cfg.seed, cfg.mms.amplitude)?;
    ctx.phase("setup");
    let rec = recover(&case, &picard)?;
    ctx.phase("solve");
    let pass = cfg.mms.tol.is_none_or(|tol| rec.relative_error < tol);
    ctx.failed |= !pass;
    let mut rows = vec![
        ("kind", cfg.mms.kind.name().to_string()),
        ("relative_error", format_sig17(rec.relative_error)),
        ("divergence_defect", format_sig17(case.divergence_defect)),
        ("amplitude", format_sig17(cfg.mms.amplitude)),
    ];
    if let Some(tol) = cfg.mms.tol {
        rows.push(("tolerance", format_sig17(tol)));
    }
    if cfg.timings {
        rows.push(("seconds", format_sig17(rec.seconds)));
    }
    rows.push(("pass", pass.to_string()));
    ctx.csv("mms", &labeled_csv(&rows))?;
    ctx.field("u", &rec.u)?;
    ctx.field("u_exact", &case.u)?;
    ctx.phase("write");
    Ok(())
}

fn audit_estimate(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let grid = cfg.build_grid()?;
    let params = cfg.params()?;
    ctx.phase("setup");
    let report = audit_linear_estimate(&grid, &params, cfg.q, cfg.audit.samples, cfg.seed)?;
    let sweep = if cfg.audit.lambdas.is_empty() {
        None
    } else {
        Some(audit_lambda_sweep(&grid, &params, &cfg.audit.lambdas, cfg.q, cfg.audit.samples, cfg.seed)?)
    };
    ctx.phase("audit");
    ctx.audit("audit_estimate", &report)?;
    if let Some(s) = sweep {
        ctx.audit("audit_lambda", &s)?;
    }
    ctx.phase("write");
    Ok(())
}

fn audit_modes(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let grid = cfg.build_grid()?;
    let params = cfg.params()?;
    ctx.phase("setup");
    let report = audit_modewise(&grid, &params, cfg.audit.k_max, cfg.seed)?;
    ctx.phase("audit");
    ctx.audit("audit_modewise", &report)?;
    ctx.phase("write");
    Ok(())
}

fn audit_embedding(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let e = cfg.embedding;
    let targets = match e.exponents {
        Some([r0, p0, r1, p1]) => EmbeddingTargets { r0, p0, r1, p1 },
        None => embedding_targets(e.alpha, e.beta, cfg.q)?,
    };
    let grid = cfg.build_grid()?;
    ctx.phase("setup");
    let report = audit_embedding_with_targets(
        &grid,
        cfg.q,
        e.alpha,
        e.beta,
        targets,
        cfg.audit.calibration,
        cfg.audit.fresh,
        cfg.seed,
    )?;
    ctx.phase("audit");
    ctx.audit("audit_embedding", &report)?;
    ctx.phase("write");
    Ok(())
}

fn audit_pressure(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let grid = cfg.build_grid()?;
    let params = cfg.params()?;
    ctx.phase("setup");
    let [annulus, far] = audit_pressure_local(&grid, &params, cfg.pressure_s, cfg.pressure_rho, cfg.audit.samples, cfg.seed)?;
    ctx.phase("audit");
    ctx.audit("audit_pressure_annulus", &annulus)?;
    ctx.audit("audit_pressure_far", &far)?;
    ctx.phase("write");
    Ok(())
}

fn audit_nonlinear(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let lambdas = if cfg.audit.lambdas.is_empty() {
        vec![cfg.lambda]
    } else {
        cfg.audit.lambdas.clone()
    };
    let grid = cfg.build_grid()?;
    ctx.phase("setup");
    let report = audit_nonlinear_term(&grid, cfg.q, &lambdas, cfg.audit.samples, cfg.seed)?;
    ctx.phase("audit");
    ctx.audit("audit_nonlinear_term", &report)?;
    ctx.phase("write");
    Ok(())
}

fn wake(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let grid = cfg.build_grid()?;
    if grid.obstacle().is_none() {
        return Err(Error::UnsupportedBackend { required: "exterior" }.into());
    }
    let bc = BoundaryData::towed(&grid, &vec![1.0; grid.nt()])?;
    ctx.phase("setup");
    let (u, _) = solve_steady_diagnostic(&bc, cfg.nu, cfg.lambda, &ExteriorOptions::default())?;
    ctx.phase("solve");
    let w = wake_diagnostic(&u, cfg.wake_radius)?;
    let oracle = oseen_wake_ratio(cfg.wake_radius, cfg.nu, cfg.lambda);
    let pass = if cfg.lambda > 0.0 {
        w.ratio >= cfg.wake_min_ratio && (w.ratio > 1.0) == (oracle > 1.0)
    } else {
        (0.8..=1.25).contains(&w.ratio)
    };
    ctx.failed |= !pass;
    let rows = [
        ("radius", format_sig17(w.radius)),
        ("lambda", format_sig17(cfg.lambda)),
        ("downstream", format_sig17(w.downstream)),
        ("upstream", format_sig17(w.upstream)),
        ("lateral", format_sig17(w.lateral)),
        ("ratio", format_sig17(w.ratio)),
        ("oracle_ratio", format_sig17(oracle)),
        ("min_ratio", format_sig17(if cfg.lambda > 0.0 { cfg.wake_min_ratio } else { 0.8 })),
        ("pass", pass.to_string()),
    ];
    ctx.csv("wake", &labeled_csv(&rows))?;
    ctx.field("u_steady", &u)?;
    ctx.phase("write");
    Ok(())
}

fn input_path(cfg: &RunConfig) -> Result<&Path, RunError> {
    cfg.input_field
        .as_deref()
        .ok_or_else(|| ConfigError::Missing { key: "input.field".into() }.into())
}

fn norms(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let path = input_path(cfg)?;
    let grid = cfg.build_grid()?;
    let file = fs::File::open(path).map_err(io_err(path))?;
    let f = read_field(std::io::BufReader::new(file), &grid)?;
    ctx.phase("read");
    let report = if f.ncomp() == 3 {
        velocity_norms(&f, cfg)
    } else {
        let mut r = NormReport::new();
        r.push(format!("p_l{}", cfg.q), lq_norm(&f, cfg.q, Region::Fluid));
        r.push(format!("p_d1_{}", cfg.q), homogeneous_d1q_norm(&f, cfg.q));
        if let Some(rt) = cfg.r {
            r.push(format!("p_l{rt}_l{}", cfg.q), mixed_rp_norm(&f, rt, cfg.q));
        }
        echo_grid(&mut r, &grid);
        r
    };
    ctx.phase("norms");
    ctx.csv("norms", &report.to_csv())?;
    ctx.phase("write");
    Ok(())
}

fn export(ctx: &mut Ctx) -> Result<(), RunError> {
    let cfg = ctx.cfg;
    let path = input_path(cfg)?;
    let file = fs::File::open(path).map_err(io_err(path))?;
    let f = read_field_standalone(std::io::BufReader::new(file))?;
    ctx.phase("read");
    let out = ctx.out().to_path_buf();
    for p in export_vtk(&f, &out, &cfg.vtk_prefix).map_err(io_err(&out))? {
        ctx.register(&p)?;
    }
    ctx.phase("write");
    Ok(())
}

/// Runs one subcommand and writes its manifest; the exit code is in the manifest.
pub fn run(sub: Subcommand, cfg: &RunConfig) -> RunManifest {
    let mut ctx = Ctx {
        cfg,
        manifest: RunManifest::new(sub.name()),
        failed: false,
        phase_start: Instant::now(),
    };
    ctx.manifest.config = cfg.echo.clone();
    let result = fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out)).and_then(|_| match sub {
        Subcommand::SolveLinear => solve_linear(&mut ctx),
        Subcommand::SolveNonlinear => solve_nonlinear(&mut ctx),
        Subcommand::Mms => mms(&mut ctx),
        Subcommand::AuditEstimate => audit_estimate(&mut ctx),
        Subcommand::AuditModewise => audit_modes(&mut ctx),
        Subcommand::AuditEmbedding => audit_embedding(&mut ctx),
        Subcommand::AuditPressure => audit_pressure(&mut ctx),
        Subcommand::AuditNonlinearTerm => audit_nonlinear(&mut ctx),
        Subcommand::Wake => wake(&mut ctx),
        Subcommand::Norms => norms(&mut ctx),
        Subcommand::ExportVtk => export(&mut ctx),
    });
    let mut manifest = ctx.manifest;
    manifest.exit_code = match result {
        Ok(()) if ctx.failed => {
            manifest.errors.push(format!("{}: check failed", sub.name()));
            EXIT_AUDIT
        }
        Ok(()) => EXIT_OK,
        Err(e) => {
            manifest.errors.push(e.to_string());
            e.exit_code()
        }
    };
    if let Err(e) = manifest.write(&cfg.out) {
        manifest.errors.push(format!("cannot write manifest: {e}"));
        manifest.exit_code = manifest.exit_code.max(EXIT_CONFIG);
    }
    manifest
}

/// Writes a manifest for a run that failed before a configuration existed.
pub fn config_failure(sub: &str, out: &Path, error: &str) -> RunManifest {
    let mut manifest = RunManifest::new(sub);
    manifest.errors.push(error.into());
    manifest.exit_code = EXIT_CONFIG;
    let _ = manifest.write(out);
    manifest
}
