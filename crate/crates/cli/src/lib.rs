//! Batch front end: configuration parsing, run orchestration and file emission.

pub mod config;
pub mod manifest;
pub mod run;
pub mod vtk;

pub use config::{parse_config, ConfigError, RunConfig};
pub use manifest::RunManifest;
pub use run::{run, Subcommand, EXIT_AUDIT, EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK};

/// Worker count requested by `TPFLOW_THREADS`; `0` or unset means automatic.
pub fn threads_from_env(value: Option<&str>) -> Result<usize, String> {
    match value.map(str::trim) {
        None | Some("") => Ok(0),
        Some(v) => v
            .parse::<usize>()
            .map_err(|_| format!("TPFLOW_THREADS must be a nonnegative integer, got `{v}`")),
    }
}

/// Installs the global worker pool; `0` leaves the automatic default.
pub fn init_threads(n: usize) -> Result<(), String> {
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
