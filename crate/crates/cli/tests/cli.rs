use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use shrinkdim_cli::config::{build_counterexample, parse_document, SystemSection};
use tempfile::TempDir;

fn shrinkdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shrinkdim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_ok(command: &str, config: &Path, extra: &[&str]) -> String {
    let mut args = vec![command, "--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = shrinkdim(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// CSV body without the manifest, as (header, rows).
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn spectrum_on_doubling_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "s.toml",
        "[system]\nkind = \"doubling\"\n\n[run]\nalphas = [0.5, 1.0, 2.0]\nn_max = 2\ntol = 1e-9\n",
    );
    let (header, rows) = csv_rows(&run_ok("spectrum", &cfg, &[]));
    assert_eq!(rows.len(), 3);
    let (a, v, c) = (
        column(&header, "alpha"),
        column(&header, "value"),
        column(&header, "certified"),
    );
    for row in rows {
        let alpha: f64 = row[a].parse().unwrap();
        let value: f64 = row[v].parse().unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!(
            (value - ln2 / (ln2 + alpha)).abs() <= 1e-9,
            "alpha {alpha}: {value}"
        );
        assert_eq!(row[c], "true");
    }
}

#[test]
fn pressure_of_zero_potential_is_log_eight_at_depth_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "p.toml",
        "[system]\nkind = \"doubling\"\n[potential]\nexpr = \"const 0\"\n[run]\nn = 3\n",
    );
    let (header, rows) = csv_rows(&run_ok("pressure", &cfg, &[]));
    assert_eq!(rows.len(), 1);
    let eight = 8f64.ln();
    for name in ["log_z_inf", "log_z_sup"] {
        let v: f64 = rows[0][column(&header, name)].parse().unwrap();
        assert!((v - eight).abs() <= 4.0 * f64::EPSILON, "{name} = {v}");
    }
}

#[test]
fn build_then_verify_counterexample() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "[system]\nkind = \"counterexample\"\nbeta = 0.5\nphi = { kind = \"power\", p = 1.0 }\n",
    );
    let built = dir.path().join("built.toml");
    run_ok(
        "counterexample-build",
        &cfg,
        &["--out", built.to_str().unwrap()],
    );
    let (header, rows) = csv_rows(&run_ok("counterexample-verify", &built, &[]));
    let (check, value, pass) = (
        column(&header, "check"),
        column(&header, "value"),
        column(&header, "pass"),
    );
    let residual = rows
        .iter()
        .find(|r| r[check] == "moran_residual")
        .expect("residual row");
    assert!(residual[value].parse::<f64>().unwrap() <= 1e-10);
    assert!(rows.iter().all(|r| r[pass] == "true"), "{rows:?}");
}

#[test]
fn rebuilt_width_tables_are_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "[system]\nkind = \"counterexample\"\nbeta = 0.9\nphi = { kind = \"exp\", rate = 0.1 }\n",
    );
    let first = dir.path().join("first.toml");
    run_ok(
        "counterexample-build",
        &cfg,
        &["--out", first.to_str().unwrap()],
    );
    let by_path = write(
        &dir,
        "ref.toml",
        "[system]\nkind = \"counterexample\"\npath = \"first.toml\"\n",
    );
    let second = dir.path().join("second.toml");
    run_ok(
        "counterexample-build",
        &by_path,
        &["--out", second.to_str().unwrap()],
    );
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());

    let load = |p: &Path| {
        let text = fs::read_to_string(p).unwrap();
        match parse_document(&text, p).unwrap().system {
            Some(SystemSection::Counterexample(c)) => build_counterexample(&c, dir.path()).unwrap(),
            other => panic!("unexpected {other:?}"),
        }
    };
    let original = load(&cfg);
    let reloaded = load(&first);
    let bits = |t: Vec<f64>| t.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    assert_eq!(bits(original.width_table()), bits(reloaded.width_table()));
    assert_eq!(
        original.log_r12().map(f64::to_bits),
        reloaded.log_r12().map(f64::to_bits)
    );
    assert_eq!(original.n0(), reloaded.n0());
}

#[test]
fn sequential_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "d.toml",
        "[system]\nkind = \"gauss\"\ntruncation = 12\n[potential]\nexpr = \"scale 0.5 psi\"\n[run]\nmode = \"potential\"\nn_max = 3\ntol = 1e-6\n",
    );
    let a = run_ok("dimension", &cfg, &["--seq"]);
    let b = run_ok("dimension", &cfg, &["--seq"]);
    assert_eq!(a, b);
    assert!(a.contains("# reduction: sequential"));
    let par = run_ok("dimension", &cfg, &[]);
    assert_eq!(csv_rows(&a), csv_rows(&par));
}

#[test]
fn parse_errors_report_line_and_column() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "bad.toml",
        "[system]\nkind = \"doubling\"\n\n[run]\ntol = = 3\nn_max = 2\n",
    );
    let out = shrinkdim(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml:5:7:"), "{err}");
}

#[test]
fn unexpected_sections_and_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let extra_section = write(
        &dir,
        "a.toml",
        "[system]\nkind = \"doubling\"\n[target]\ny = 0.1\nalpha = 1.0\n[run]\nalphas = [1.0]\nn_max = 2\ntol = 1e-6\n",
    );
    let out = shrinkdim(&["spectrum", "--config", extra_section.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not use a [target] section"));

    let extra_key = write(
        &dir,
        "b.toml",
        "[system]\nkind = \"doubling\"\n[run]\nalphas = [1.0]\nn_max = 2\ntol = 1e-6\nsteps = 4\n",
    );
    let out = shrinkdim(&["spectrum", "--config", extra_key.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("b.toml:7:1") && err.contains("steps"), "{err}");

    let missing = write(
        &dir,
        "c.toml",
        "[system]\nkind = \"doubling\"\n[run]\nn = 2\n",
    );
    let out = shrinkdim(&["pressure", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("needs a [potential] section"));
}

#[test]
fn budget_overflow_names_the_budget_key() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "b.toml",
        "[system]\nkind = \"doubling\"\n[potential]\nexpr = \"psi\"\n[run]\nn = 30\nbudget = 1000\n",
    );
    let out = shrinkdim(&["pressure", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("run.budget") && err.contains("--budget"),
        "{err}"
    );
    // The flag overrides the document.
    let out = shrinkdim(&[
        "pressure",
        "--config",
        cfg.to_str().unwrap(),
        "--budget",
        "10",
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget of 10"));
}

#[test]
fn uncertified_results_exit_zero_with_flag_cleared() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "g.toml",
        "[system]\nkind = \"gauss\"\n[run]\nladder = [8]\nn_max = 2\ntol = 1e-6\n",
    );
    let text = run_ok("dimension", &cfg, &[]);
    let (header, rows) = csv_rows(&text);
    assert_eq!(rows[0][column(&header, "certified")], "false");
    assert!(text.contains("# certified: false"));
}

#[test]
fn command_and_output_can_come_from_the_document() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "h.toml",
        "[system]\nkind = \"doubling\"\n[target]\ny = 0.0\nalpha = 1.0\n[run]\ncommand = \"hits\"\nout = \"hits.csv\"\ncode = [1]\nhorizon = 10\n",
    );
    let out = shrinkdim(&["--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = csv_rows(&fs::read_to_string(dir.path().join("hits.csv")).unwrap());
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r[column(&header, "status")] == "hit"));

    let out = shrinkdim(&["cover", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not match"));
}

#[test]
fn shipped_configs_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in [
        "doubling_spectrum",
        "doubling_pressure",
        "doubling_cover",
        "doubling_hits",
        "gauss_density",
    ] {
        let p = dir.join(format!("{name}.toml"));
        let out = shrinkdim(&["--config", p.to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
