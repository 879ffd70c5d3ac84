use std::fs;
use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use tpflow::fields::io::{field_to_bytes, read_field_standalone};
use tpflow::verify::{band_limited_field, TimeContent};
use tpflow::PeriodicGrid;
use tpflow_cli::config::{BoundarySpec, ForcingSpec};
use tpflow_cli::{parse_config, run, threads_from_env, ConfigError, Subcommand, EXIT_AUDIT, EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK};

const MINIMAL: &str = "backend=spectral\ngrid.nt=4\ngrid.n=8\ngrid.box=6.283185307179586\ngrid.period=1\nnu=1\nlambda=0.5\n";

const TOWED: &str = "backend=exterior\ngrid.nt=4\ngrid.n=16\ngrid.box=8\ngrid.period=2\nnu=1\nlambda=0.5\n\
zeta=0.5,0.05,0\nobstacle.radius_star=1.2\nobstacle.radius_zero=2.5\nbc=towed\n";

fn config(text: &str, out: &Path) -> tpflow_cli::RunConfig {
    parse_config(text).unwrap().with_overrides(Some(out.to_path_buf()), None)
}

#[test]
fn minimal_file_gets_the_documented_defaults() {
    let c = parse_config(MINIMAL).unwrap();
    assert_eq!(c.grid.n, [8, 8, 8]);
    assert_eq!(c.q, 1.25);
    assert_eq!(c.picard.tol, 1e-8);
    assert_eq!(c.picard.max_iter, 50);
    assert_eq!(c.picard.omega, 1.0);
    assert_eq!(c.seed, 0);
    assert_eq!(c.forcing, ForcingSpec::Zero);
    assert_eq!(c.bc, BoundarySpec::Zero);
    assert_eq!(c.audit.samples, 30);
    assert_eq!(c.audit.calibration, 20);
    assert_eq!(c.audit.fresh, 100);
    assert_eq!(c.obstacle.radius_star, c.grid.box_len / 8.0);
    assert!(c.formats.tpof && c.formats.csv && !c.formats.vtk);
    assert!(c.zeta_modes.is_empty());
}

#[test]
fn range_errors_name_the_key_and_line() {
    let text = MINIMAL.replace("lambda=0.5", "lambda=-1");
    match parse_config(&text) {
        Err(ConfigError::Value { key, line, .. }) => {
            assert_eq!(key, "lambda");
            assert_eq!(line, 7);
        }
        other => panic!("{other:?}"),
    }
    let err = parse_config(&text).unwrap_err().to_string();
    assert!(err.contains("lambda") && err.contains("line 7"), "{err}");
}

#[test]
fn syntax_unknown_and_duplicate_keys_are_errors() {
    let bad = format!("{MINIMAL}# comment\nnot a pair\n");
    assert!(matches!(parse_config(&bad), Err(ConfigError::Syntax { line: 9, .. })));
    let typo = format!("{MINIMAL}picard.tolerance=1e-9\n");
    assert!(matches!(parse_config(&typo), Err(ConfigError::UnknownKey { line: 8, .. })));
    let dup = format!("{MINIMAL}nu=2\n");
    assert!(matches!(parse_config(&dup), Err(ConfigError::Duplicate { line: 8, first: 6, .. })));
    let missing = MINIMAL.replace("nu=1\n", "");
    assert_eq!(parse_config(&missing), Err(ConfigError::Missing { key: "nu".into() }));
}

#[test]
fn zeta_profile_and_exponents() {
    let c = parse_config(&format!("{MINIMAL}zeta=0.5,0.1,-0.2\n")).unwrap();
    assert_eq!(c.zeta_modes, vec![(0.1, -0.2)]);
    let p = c.params().unwrap();
    assert!((p.lambda() - 0.5).abs() < 1e-15);
    assert!((p.zeta()[0] - 0.6).abs() < 1e-15);
    assert!(parse_config(&format!("{MINIMAL}zeta=0.4,0.1,0\n")).is_err());

    let ext = parse_config(&format!("{TOWED}q=1.25\n")).unwrap();
    assert!(ext.nonlinear_picard().is_ok());
    let wide = parse_config(&format!("{TOWED}q=1.5\n")).unwrap();
    assert!(wide.nonlinear_picard().is_err());
}

#[test]
fn zero_forcing_gives_zero_fields_listed_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(Subcommand::SolveLinear, &config(MINIMAL, dir.path()));
    assert_eq!(m.exit_code, EXIT_OK, "{:?}", m.errors);
    let names: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
    assert_eq!(names, ["u.tpof", "p.tpof", "linear_report.csv", "norms.csv"]);
    let u = read_field_standalone(fs::read(dir.path().join("u.tpof")).unwrap().as_slice()).unwrap();
    assert!(u.is_zero());
    assert!(m.verify(dir.path()).unwrap());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn spectral_mms_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{MINIMAL}mms.tol=1e-10\n").replace("grid.nt=4", "grid.nt=8");
    let m = run(Subcommand::Mms, &config(&text, dir.path()));
    assert_eq!(m.exit_code, EXIT_OK, "{:?}", m.errors);
    let csv = fs::read_to_string(dir.path().join("mms.csv")).unwrap();
    let err: f64 = csv
        .lines()
        .find_map(|l| l.strip_prefix("relative_error,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-10);
}

#[test]
fn inadmissible_exponents_exit_with_the_table_row() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{MINIMAL}q=2\nembedding.r0=5\nembedding.p0=2\nembedding.r1=2\nembedding.p1=2\n");
    let m = run(Subcommand::AuditEmbedding, &config(&text, dir.path()));
    assert_eq!(m.exit_code, EXIT_CONFIG);
    assert!(m.errors[0].contains("table row r0"), "{:?}", m.errors);
    let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("table row r0"));

    let out_of_range = format!("{MINIMAL}embedding.alpha=3\n");
    let err = parse_config(&out_of_range).unwrap_err().to_string();
    assert!(err.contains("embedding.alpha"), "{err}");
}

#[test]
fn audit_failure_and_divergence_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // a single sample per side of a calibrated audit with an impossible tolerance
    let mms = format!("{MINIMAL}mms.kind=nonlinear\nmms.amplitude=0.01\nmms.tol=1e-300\n").replace("grid.nt=4", "grid.nt=8");
    let m = run(Subcommand::Mms, &config(&mms, dir.path()));
    assert_eq!(m.exit_code, EXIT_AUDIT, "{:?}", m.errors);

    let big = format!("{TOWED}bc.amplitude=40\npicard.max_iter=30\n");
    let m = run(Subcommand::SolveNonlinear, &config(&big, &dir.path().join("big")));
    assert_eq!(m.exit_code, EXIT_DIVERGED, "{:?}", m.errors);
    assert!(!m.errors.is_empty());
}

#[test]
fn export_writes_one_scalar_file_per_time_sample() {
    let dir = tempfile::tempdir().unwrap();
    let g = PeriodicGrid::spectral(1.0, 2, [4, 6, 8], 2.0).unwrap().into_shared();
    let f = band_limited_field(&g, 1, TimeContent::Full, 3);
    let input = dir.path().join("in.tpof");
    fs::write(&input, field_to_bytes(&f)).unwrap();
    let text = format!("{MINIMAL}input.field={}\nvtk.prefix=pressure\n", input.display());
    let out = dir.path().join("vtk");
    let m = run(Subcommand::ExportVtk, &config(&text, &out));
    assert_eq!(m.exit_code, EXIT_OK, "{:?}", m.errors);
    assert_eq!(m.artifacts.len(), 2);
    for t in 0..2 {
        let body = fs::read_to_string(out.join(format!("pressure_t{t:04}.vtk"))).unwrap();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[2], "ASCII");
        assert_eq!(lines[3], "DATASET STRUCTURED_POINTS");
        assert_eq!(lines[4], "DIMENSIONS 4 6 8");
        assert_eq!(lines[5], "ORIGIN 0 0 0");
        assert!(lines[6].starts_with("SPACING 5.0"));
        assert_eq!(lines[7], "POINT_DATA 192");
        assert_eq!(lines[8], "SCALARS pressure double 1");
        assert_eq!(lines.len(), 10 + 192);
        let first: f64 = lines[10].parse().unwrap();
        assert_eq!(first, f.get(t, 0, 0));
    }

    let broken = dir.path().join("broken.tpof");
    let mut bytes = field_to_bytes(&f);
    bytes[0] = b'X';
    fs::write(&broken, bytes).unwrap();
    let text = format!("{MINIMAL}input.field={}\n", broken.display());
    let m = run(Subcommand::ExportVtk, &config(&text, &dir.path().join("bad")));
    assert_eq!(m.exit_code, EXIT_CONFIG);
    assert!(m.errors[0].contains("magic"), "{:?}", m.errors);
}

#[test]
fn vector_export_uses_vectors_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{MINIMAL}forcing=random\nio.formats=vtk\n");
    let m = run(Subcommand::SolveLinear, &config(&text, dir.path()));
    assert_eq!(m.exit_code, EXIT_OK);
    let body = fs::read_to_string(dir.path().join("u_t0003.vtk")).unwrap();
    assert!(body.lines().any(|l| l == "VECTORS u double"));
    assert!(!dir.path().join("u.tpof").exists());
}

#[test]
fn runs_are_bit_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{MINIMAL}forcing=random\nseed=9\n");
    let a = run(Subcommand::SolveNonlinear, &config(&text, &dir.path().join("a")));
    let b = run(Subcommand::SolveNonlinear, &config(&text, &dir.path().join("b")));
    assert_eq!(a.exit_code, EXIT_OK, "{:?}", a.errors);
    assert_eq!(a.artifacts, b.artifacts);
    let c = run(
        Subcommand::SolveNonlinear,
        &parse_config(&text).unwrap().with_overrides(Some(dir.path().join("c")), Some(10)),
    );
    assert_ne!(a.artifacts[0].sha256, c.artifacts[0].sha256);
}

#[test]
fn norms_of_a_stored_field() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(Subcommand::SolveLinear, &config(&format!("{MINIMAL}forcing=random\n"), dir.path()));
    assert_eq!(m.exit_code, EXIT_OK);
    let text = format!("{MINIMAL}input.field={}\nr=4\n", dir.path().join("p.tpof").display());
    let m = run(Subcommand::Norms, &config(&text, &dir.path().join("n")));
    assert_eq!(m.exit_code, EXIT_OK, "{:?}", m.errors);
    let csv = fs::read_to_string(dir.path().join("n/norms.csv")).unwrap();
    assert!(csv.starts_with("label,value\np_l1.25,"));
    assert!(csv.contains("p_l4_l1.25,"));
    assert!(csv.contains("grid.nt,4"));
}

#[test]
fn thread_variable_parsing() {
    assert_eq!(threads_from_env(None), Ok(0));
    assert_eq!(threads_from_env(Some("0")), Ok(0));
    assert_eq!(threads_from_env(Some(" 3 ")), Ok(3));
    assert!(threads_from_env(Some("-1")).is_err());
    assert!(threads_from_env(Some("many")).is_err());
}

#[test]
fn binary_honors_flags_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, MINIMAL).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_tpflow"))
        .args(["solve-linear", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--seed", "4"])
        .env("TPFLOW_THREADS", "1")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": \"4\""));

    fs::write(&cfg, MINIMAL.replace("nu=1", "nu=0")).unwrap();
    let bad_out = dir.path().join("bad");
    let output = Command::new(env!("CARGO_BIN_EXE_tpflow"))
        .args(["norms", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&bad_out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&output.stderr).contains("`nu`"));
    assert!(fs::read_to_string(bad_out.join("manifest.json")).unwrap().contains("nu"));

    let status = Command::new(env!("CARGO_BIN_EXE_tpflow"))
        .args(["solve-linear", "--config"])
        .arg(&cfg)
        .env("TPFLOW_THREADS", "lots")
        .current_dir(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_CONFIG));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn valid_values_round_trip_through_the_echo(nu in 1e-3f64..1e3, lambda in 0.0f64..5.0, seed in any::<u64>()) {
        let text = format!(
            "backend=spectral\ngrid.nt=4\ngrid.n=8\ngrid.box=1\ngrid.period=1\nnu={nu}\nlambda={lambda}\nseed={seed}\n"
        );
        let c = parse_config(&text).unwrap();
        prop_assert_eq!(c.nu, nu);
        prop_assert_eq!(c.lambda, lambda);
        prop_assert_eq!(c.seed, seed);
        let echo = |k: &str| c.echo.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone()).unwrap();
        prop_assert_eq!(echo("nu").parse::<f64>().unwrap(), nu);
        prop_assert_eq!(echo("seed"), seed.to_string());
    }

    #[test]
    fn syntax_errors_report_their_line(pad in 0usize..6, junk in "[a-z]{1,8}") {
        let text = format!("{}{MINIMAL}{junk}\n", "# c\n".repeat(pad));
        let line = pad + 8;
        match parse_config(&text) {
            Err(ConfigError::Syntax { line: l, .. }) => prop_assert_eq!(l, line),
            other => prop_assert!(false, "{:?}", other),
        }
    }
}
