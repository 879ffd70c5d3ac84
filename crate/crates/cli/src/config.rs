//! The line-based `key=value` run configuration.
//!
//! Blank lines and `#` comments are ignored; keys use dotted namespaces
//! (`picard.tol=1e-8`). Every key is checked against the table in
//! [`KEYS`], and every value is range-checked before a run starts.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;
use tpflow::fields::{Backend, PeriodicGrid};
use tpflow::nonlinear::{InitialState, PicardConfig};
use tpflow::oseen::OseenParams;
use tpflow::verify::{CaseKind, TimeContent};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("missing required key `{key}`")]
    Missing { key: String },
}

/// Recognized keys and whether they are required.
pub const KEYS: &[(&str, bool)] = &[
    ("backend", true),
    ("grid.nt", true),
    ("grid.n", false),
    ("grid.nx", false),
    ("grid.ny", false),
    ("grid.nz", false),
    ("grid.box", true),
    ("grid.period", true),
    ("nu", true),
    ("lambda", true),
    ("lambda0", false),
    ("zeta", false),
    ("q", false),
    ("r", false),
    ("obstacle.radius_star", false),
    ("obstacle.radius_zero", false),
    ("picard.tol", false),
    ("picard.max_iter", false),
    ("picard.omega", false),
    ("picard.init", false),
    ("picard.init_amplitude", false),
    ("forcing", false),
    ("forcing.amplitude", false),
    ("forcing.content", false),
    ("forcing.file", false),
    ("bc", false),
    ("bc.amplitude", false),
    ("mms.kind", false),
    ("mms.amplitude", false),
    ("mms.tol", false),
    ("audit.samples", false),
    ("audit.lambdas", false),
    ("audit.k_max", false),
    ("audit.calibration", false),
    ("audit.fresh", false),
    ("embedding.alpha", false),
    ("embedding.beta", false),
    ("embedding.r0", false),
    ("embedding.p0", false),
    ("embedding.r1", false),
    ("embedding.p1", false),
    ("pressure.s", false),
    ("pressure.rho", false),
    ("wake.radius", false),
    ("wake.min_ratio", false),
    ("input.field", false),
    ("vtk.prefix", false),
    ("io.out", false),
    ("io.formats", false),
    ("io.timings", false),
    ("seed", false),
];

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub nt: usize,
    pub n: [usize; 3],
    pub box_len: f64,
    pub period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObstacleConfig {
    pub radius_star: f64,
    pub radius_zero: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Zero,
    Random { amplitude: f64, content: TimeContent },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundarySpec {
    Zero,
    /// `amplitude * zeta(t) / max |zeta| * e_1` on the body.
    Towed { amplitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputFormats {
    pub tpof: bool,
    pub csv: bool,
    pub vtk: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsConfig {
    pub kind: CaseKind,
    pub amplitude: f64,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub samples: usize,
    pub lambdas: Vec<f64>,
    pub k_max: usize,
    pub calibration: usize,
    pub fresh: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddingConfig {
    pub alpha: f64,
    pub beta: f64,
    /// Explicit `(r0, p0, r1, p1)`; all four or none.
    pub exponents: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub backend: Backend,
    pub grid: GridConfig,
    pub nu: f64,
    pub lambda: f64,
    pub lambda0: f64,
    /// `(a_k, b_k)` of `zeta = lambda + sum a_k cos + b_k sin`.
    pub zeta_modes: Vec<(f64, f64)>,
    pub q: f64,
    pub r: Option<f64>,
    pub obstacle: ObstacleConfig,
    pub picard: PicardConfig,
    pub init: InitialState,
    pub forcing: ForcingSpec,
    pub bc: BoundarySpec,
    pub mms: MmsConfig,
    pub audit: AuditConfig,
    pub embedding: EmbeddingConfig,
    pub pressure_s: f64,
    pub pressure_rho: f64,
    pub wake_radius: f64,
    pub wake_min_ratio: f64,
    pub input_field: Option<PathBuf>,
    pub vtk_prefix: String,
    pub out: PathBuf,
    pub formats: OutputFormats,
    pub timings: bool,
    pub seed: u64,
    /// Resolved `key=value` pairs in key order, for the manifest.
    pub echo: Vec<(String, String)>,
}

struct Entries {
    map: BTreeMap<String, (String, usize)>,
    echo: Vec<(String, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.map.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map(|(_, l)| *l).unwrap_or(0)
    }

    fn value_error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Value {
            line: self.line(key),
            key: key.into(),
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: Option<T>) -> Result<T, ConfigError>
    where
        T: ToString,
    {
        let v = match self.raw(key) {
            Some((s, line)) => s.parse::<T>().map_err(|_| ConfigError::Value {
                line,
                key: key.into(),
                message: format!("cannot parse `{s}`"),
            })?,
            None => default.ok_or_else(|| ConfigError::Missing { key: key.into() })?,
        };
        self.echo.push((key.into(), v.to_string()));
        Ok(v)
    }

    fn optional<T: std::str::FromStr + ToString>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        if self.raw(key).is_none() {
            return Ok(None);
        }
        self.parse(key, None).map(Some)
    }

    fn float(&mut self, key: &str, default: Option<f64>, ok: impl Fn(f64) -> bool, rule: &str) -> Result<f64, ConfigError> {
        let v: f64 = self.parse(key, default)?;
        if !v.is_finite() || !ok(v) {
            return Err(self.value_error(key, format!("{v} violates {rule}")));
        }
        Ok(v)
    }

    fn list(&mut self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let Some((s, line)) = self.raw(key) else {
            return Ok(Vec::new());
        };
        let vals = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| ConfigError::Value {
                line,
                key: key.into(),
                message: format!("expected a comma-separated list of numbers, got `{s}`"),
            })?;
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(self.value_error(key, "entries must be finite"));
        }
        self.echo.push((key.into(), s.to_string()));
        Ok(vals)
    }

    fn word(&mut self, key: &str, default: &str, allowed: &[&str]) -> Result<String, ConfigError> {
        let v = self.raw(key).map(|(s, _)| s.to_string()).unwrap_or_else(|| default.to_string());
        if !allowed.contains(&v.as_str()) {
            return Err(self.value_error(key, format!("`{v}` is not one of {}", allowed.join(", "))));
        }
        self.echo.push((key.into(), v.clone()));
        Ok(v)
    }
}

fn split_lines(text: &str) -> Result<BTreeMap<String, (String, usize)>, ConfigError> {
    let mut map: BTreeMap<String, (String, usize)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key=value`, got `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let valid_key = !key.is_empty()
            && key.split('.').all(|part| {
                !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            });
        if !valid_key {
            return Err(ConfigError::Syntax {
                line,
                message: format!("malformed key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: format!("empty value for `{key}`"),
            });
        }
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::UnknownKey { line, key: key.into() });
        }
        if let Some((_, first)) = map.get(key) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.into(),
                first: *first,
            });
        }
        map.insert(key.to_string(), (value.to_string(), line));
    }
    Ok(map)
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut e = Entries {
        map: split_lines(text)?,
        echo: Vec::new(),
    };
    for (key, required) in KEYS {
        if *required && e.raw(key).is_none() {
            return Err(ConfigError::Missing { key: (*key).into() });
        }
    }
    let backend = match e.word("backend", "", &["spectral", "exterior"])?.as_str() {
        "spectral" => Backend::Spectral,
        _ => Backend::Exterior,
    };

    let nt: usize = e.parse("grid.nt", None)?;
    if nt < 2 || nt % 2 != 0 {
        return Err(e.value_error("grid.nt", format!("{nt} must be even and at least 2")));
    }
    let n_all: Option<usize> = e.optional("grid.n")?;
    let mut n = [0usize; 3];
    for (a, key) in ["grid.nx", "grid.ny", "grid.nz"].iter().enumerate() {
        let v: Option<usize> = e.optional(key)?;
        n[a] = match (v, n_all) {
            (Some(v), _) => v,
            (None, Some(v)) => v,
            (None, None) => return Err(ConfigError::Missing { key: (*key).into() }),
        };
        if n[a] < 4 || n[a] % 2 != 0 {
            let k = if v.is_some() { *key } else { "grid.n" };
            return Err(e.value_error(k, format!("{} must be even and at least 4", n[a])));
        }
    }
    let box_len = e.float("grid.box", None, |v| v > 0.0, "grid.box > 0")?;
    let period = e.float("grid.period", None, |v| v > 0.0, "grid.period > 0")?;
    let nu = e.float("nu", None, |v| v > 0.0, "nu > 0")?;
    let lambda = e.float("lambda", None, |v| v >= 0.0, "lambda >= 0")?;
    let lambda0 = e.float(
        "lambda0",
        Some(if lambda > 0.0 { lambda } else { 1.0 }),
        |v| v > 0.0 && v >= lambda,
        "0 < lambda0 and lambda <= lambda0",
    )?;

    let zeta = e.list("zeta")?;
    let zeta_modes = if zeta.is_empty() {
        Vec::new()
    } else {
        if (zeta[0] - lambda).abs() > 1e-12 * lambda.max(1.0) {
            return Err(e.value_error("zeta", format!("leading entry {} must equal lambda = {lambda}", zeta[0])));
        }
        if zeta.len() % 2 != 1 {
            return Err(e.value_error("zeta", "expected lambda followed by (a_k, b_k) pairs"));
        }
        let modes: Vec<(f64, f64)> = zeta[1..].chunks(2).map(|c| (c[0], c[1])).collect();
        if 2 * modes.len() >= nt {
            return Err(e.value_error("zeta", format!("{} modes are not resolved by grid.nt = {nt}", modes.len())));
        }
        modes
    };

    let q = e.float("q", Some(1.25), |v| v > 1.0, "q > 1")?;
    let r = match e.optional::<f64>("r")? {
        Some(v) if !(v >= 1.0) => return Err(e.value_error("r", format!("{v} violates r >= 1"))),
        other => other,
    };
    let radius_star = e.float("obstacle.radius_star", Some(box_len / 8.0), |v| v > 0.0, "radius_star > 0")?;
    let radius_zero = e.float(
        "obstacle.radius_zero",
        Some(2.0 * radius_star),
        |v| v > radius_star && v < box_len / 2.0,
        "radius_star < radius_zero < grid.box/2",
    )?;

    let picard = PicardConfig {
        tol: e.float("picard.tol", Some(1e-8), |v| v > 0.0, "picard.tol > 0")?,
        max_iter: e.parse("picard.max_iter", Some(50usize))?,
        omega: e.float("picard.omega", Some(1.0), |v| v > 0.0 && v <= 1.0, "0 < picard.omega <= 1")?,
        q: q.clamp(1.2, 4.0 / 3.0),
    };
    if picard.max_iter == 0 {
        return Err(e.value_error("picard.max_iter", "must be at least 1"));
    }
    let init_amplitude = e.float("picard.init_amplitude", Some(0.1), |v| v >= 0.0, "picard.init_amplitude >= 0")?;
    let init = match e.word("picard.init", "zero", &["zero", "random"])?.as_str() {
        "zero" => InitialState::Zero,
        _ => InitialState::Random {
            seed: 0,
            amplitude: init_amplitude,
        },
    };

    let forcing_kind = e.word("forcing", "zero", &["zero", "random", "file"])?;
    let forcing_amp = e.float("forcing.amplitude", Some(1.0), |v| v >= 0.0, "forcing.amplitude >= 0")?;
    let content = match e.word("forcing.content", "full", &["full", "steady", "oscillatory"])?.as_str() {
        "steady" => TimeContent::Steady,
        "oscillatory" => TimeContent::Oscillatory,
        _ => TimeContent::Full,
    };
    let forcing_file: Option<String> = e.optional("forcing.file")?;
    let forcing = match forcing_kind.as_str() {
        "zero" => ForcingSpec::Zero,
        "random" => ForcingSpec::Random {
            amplitude: forcing_amp,
            content,
        },
        _ => match forcing_file {
            Some(p) => ForcingSpec::File(PathBuf::from(p)),
            None => return Err(ConfigError::Missing { key: "forcing.file".into() }),
        },
    };

    let bc_kind = e.word("bc", "zero", &["zero", "towed"])?;
    let zeta_max = lambda + zeta_modes.iter().map(|(a, b)| a.hypot(*b)).sum::<f64>();
    let bc_amp = e.float("bc.amplitude", Some(zeta_max), |v| v >= 0.0, "bc.amplitude >= 0")?;
    let bc = match bc_kind.as_str() {
        "zero" => BoundarySpec::Zero,
        _ => {
            if backend != Backend::Exterior {
                return Err(e.value_error("bc", "boundary data needs backend=exterior"));
            }
            BoundarySpec::Towed { amplitude: bc_amp }
        }
    };

    let default_kind = match backend {
        Backend::Spectral => "wholespace-linear",
        Backend::Exterior => "exterior-linear",
    };
    let kind = e.word("mms.kind", default_kind, &["wholespace-linear", "exterior-linear", "nonlinear"])?;
    let mms = MmsConfig {
        kind: CaseKind::parse(&kind).expect("checked against the allowed names"),
        amplitude: e.float("mms.amplitude", Some(1.0), |v| v >= 0.0, "mms.amplitude >= 0")?,
        tol: match e.optional::<f64>("mms.tol")? {
            Some(v) if !(v > 0.0) => return Err(e.value_error("mms.tol", format!("{v} violates mms.tol > 0"))),
            other => other,
        },
    };

    let count = |e: &mut Entries, key: &str, default: usize| -> Result<usize, ConfigError> {
        let v: usize = e.parse(key, Some(default))?;
        if v == 0 {
            return Err(e.value_error(key, "must be at least 1"));
        }
        Ok(v)
    };
    let lambdas = e.list("audit.lambdas")?;
    if lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(e.value_error("audit.lambdas", "entries must be positive"));
    }
    let audit = AuditConfig {
        samples: count(&mut e, "audit.samples", 30)?,
        lambdas,
        k_max: count(&mut e, "audit.k_max", 8)?,
        calibration: count(&mut e, "audit.calibration", 20)?,
        fresh: count(&mut e, "audit.fresh", 100)?,
    };

    let alpha = e.float("embedding.alpha", Some(0.5), |v| (0.0..=2.0).contains(&v), "0 <= embedding.alpha <= 2")?;
    let beta = e.float("embedding.beta", Some(0.5), |v| (0.0..=1.0).contains(&v), "0 <= embedding.beta <= 1")?;
    let keys = ["embedding.r0", "embedding.p0", "embedding.r1", "embedding.p1"];
    let given: Vec<Option<f64>> = keys.iter().map(|k| e.optional::<f64>(k)).collect::<Result<_, _>>()?;
    let exponents = match given.iter().filter(|v| v.is_some()).count() {
        0 => None,
        4 => Some([given[0].unwrap(), given[1].unwrap(), given[2].unwrap(), given[3].unwrap()]),
        _ => {
            let missing = keys.iter().zip(&given).find(|(_, v)| v.is_none()).map(|(k, _)| *k).unwrap();
            return Err(ConfigError::Missing { key: missing.into() });
        }
    };

    let pressure_s = e.float("pressure.s", Some(2.0), |v| v > 1.0, "pressure.s > 1")?;
    let pressure_rho = e.float("pressure.rho", Some(radius_zero), |v| v > 0.0, "pressure.rho > 0")?;
    let wake_radius = e.float("wake.radius", Some(box_len / 3.0), |v| v > 0.0, "wake.radius > 0")?;
    let wake_min_ratio = e.float("wake.min_ratio", Some(2.0), |v| v > 0.0, "wake.min_ratio > 0")?;
    let input_field: Option<String> = e.optional("input.field")?;
    let vtk_prefix: String = e.parse("vtk.prefix", Some("field".to_string()))?;
    if vtk_prefix.contains('/') {
        return Err(e.value_error("vtk.prefix", "must be a file name prefix without directories"));
    }
    let out: String = e.parse("io.out", Some("out".to_string()))?;
    let formats_raw = e.raw("io.formats").map(|(s, _)| s.to_string()).unwrap_or_else(|| "tpof,csv".into());
    let mut formats = OutputFormats {
        tpof: false,
        csv: false,
        vtk: false,
    };
    for f in formats_raw.split(',').map(str::trim) {
        match f {
            "tpof" => formats.tpof = true,
            "csv" => formats.csv = true,
            "vtk" => formats.vtk = true,
            other => return Err(e.value_error("io.formats", format!("unknown format `{other}`"))),
        }
    }
    e.echo.push(("io.formats".into(), formats_raw));
    let timings: bool = e.parse("io.timings", Some(false))?;
    let seed: u64 = e.parse("seed", Some(0))?;

    if backend == Backend::Exterior && radius_zero >= box_len / 2.0 {
        return Err(e.value_error("obstacle.radius_zero", "must stay inside the box"));
    }
    let mut echo = e.echo;
    echo.sort();
    Ok(RunConfig {
        backend,
        grid: GridConfig { nt, n, box_len, period },
        nu,
        lambda,
        lambda0,
        zeta_modes,
        q,
        r,
        obstacle: ObstacleConfig {
            radius_star,
            radius_zero,
        },
        picard,
        init,
        forcing,
        bc,
        mms,
        audit,
        embedding: EmbeddingConfig { alpha, beta, exponents },
        pressure_s,
        pressure_rho,
        wake_radius,
        wake_min_ratio,
        input_field: input_field.map(PathBuf::from),
        vtk_prefix,
        out: PathBuf::from(out),
        formats,
        timings,
        seed,
        echo,
    })
}

impl RunConfig {
    pub fn build_grid(&self) -> tpflow::Result<Arc<PeriodicGrid>> {
        let g = &self.grid;
        let grid = match self.backend {
            Backend::Spectral => PeriodicGrid::spectral(g.period, g.nt, g.n, g.box_len)?,
            Backend::Exterior => PeriodicGrid::exterior(
                g.period,
                g.nt,
                g.n,
                g.box_len,
                self.obstacle.radius_star,
                self.obstacle.radius_zero,
            )?,
        };
        Ok(grid.into_shared())
    }

    pub fn params(&self) -> tpflow::Result<OseenParams> {
        OseenParams::from_fourier(self.nu, self.lambda, &self.zeta_modes, self.grid.nt, self.lambda0)
    }

    /// The Picard settings for a nonlinear run; `q` must lie in `[6/5, 4/3]`.
    pub fn nonlinear_picard(&self) -> tpflow::Result<PicardConfig> {
        let cfg = PicardConfig { q: self.q, ..self.picard };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The starting state, seeded from the run seed.
    pub fn initial_state(&self) -> InitialState {
        match self.init {
            InitialState::Zero => InitialState::Zero,
            InitialState::Random { amplitude, .. } => InitialState::Random {
                seed: self.seed,
                amplitude,
            },
        }
    }

    /// Applies the `--out` and `--seed` command-line overrides.
    pub fn with_overrides(mut self, out: Option<PathBuf>, seed: Option<u64>) -> Self {
        if let Some(out) = out {
            self.out = out;
            set_echo(&mut self.echo, "io.out", self.out.display().to_string());
        }
        if let Some(seed) = seed {
            self.seed = seed;
            set_echo(&mut self.echo, "seed", seed.to_string());
        }
        self
    }
}

fn set_echo(echo: &mut [(String, String)], key: &str, value: String) {
    if let Some(entry) = echo.iter_mut().find(|(k, _)| k == key) {
        entry.1 = value;
    }
}
