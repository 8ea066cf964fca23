use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use piezowave_harness::config::SweepConfig;
use piezowave_harness::{run, sweep, HarnessError, RunConfig};

fn piezowave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piezowave"))
        .args(args)
        .env_remove(sweep::THREADS_ENV)
        .output()
        .expect("spawn piezowave")
}

fn config_text(out: &Path, m: f64, n: f64, v0: f64, t_end: f64) -> String {
    format!(
        "[exponents]\nm1 = {m:?}\nm2 = {m:?}\nn1 = {n:?}\nn2 = {n:?}\n\n\
         [integrator]\ndt = 1e-3\n\n[initial]\nv0 = [{v0:?}]\n\n\
         [run]\nt_end = {t_end:?}\nrecord_every = 10\n\n[output]\ndir = {:?}\n",
        out.display().to_string()
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_horizon_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "c.toml", &config_text(&out, 2.0, 3.0, 0.5, 0.0));
    let res = piezowave(&["simulate", cfg.to_str().unwrap()]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let csv = std::fs::read_to_string(out.join("energy.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "t,E,J,Etot,damping_cum,residual,sign_fn,Q,vnorm_n1,pnorm_n2"
    );
    for f in ["well.json", "blowup.json", "summary.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn stable_run_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "c.toml", &config_text(&out, 1.0, 2.0, 0.1, 5.0));
    assert!(piezowave(&["simulate", cfg.to_str().unwrap()])
        .status
        .success());
    let s = json(&out.join("summary.json"));
    assert_eq!(s["outcome"], "completed");
    assert_eq!(s["classification"], "global-predicted");
    assert!(s["t_detect"].is_null());
}

#[test]
fn blowup_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &config_text(&out, 2.0, 3.0, 4.0, 20.0),
    );
    let res = piezowave(&["simulate", cfg.to_str().unwrap()]);
    assert!(res.status.success());
    let s = json(&out.join("summary.json"));
    assert_eq!(s["outcome"], "blowup");
    assert_eq!(s["classification"], "blowup-predicted-negative");
    assert!(s["t_detect"].as_f64().unwrap() > 0.0);
    let b = json(&out.join("blowup.json"));
    assert_eq!(b["detected"], true);
    assert_eq!(b["criterion"], "negative-energy");
}

#[test]
fn malformed_config_reports_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = config_text(&dir.path().join("out"), 1.0, 2.0, 0.1, 1.0)
        .replace("t_end = 1.0", "t_end = \"soon\"");
    let cfg = write_config(dir.path(), "bad.toml", &text);
    let res = piezowave(&["simulate", cfg.to_str().unwrap()]);
    assert!(!res.status.success());
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(
        err.contains("config parse error") && err.contains("bad.toml"),
        "{err}"
    );
    assert!(err.contains("line") && err.contains("t_end"), "{err}");

    match RunConfig::from_toml_str(&text, "bad.toml") {
        Err(HarnessError::ConfigParse { path, .. }) => assert_eq!(path, "bad.toml"),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn missing_config_is_io_failure() {
    let res = piezowave(&["simulate", "/nonexistent/config.toml"]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("I/O failure"));
    assert!(matches!(
        RunConfig::load(Path::new("/nonexistent/c.toml")),
        Err(HarnessError::IoFailure { .. })
    ));
}

#[test]
fn classify_zero_and_scaled_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero");
    let cfg = write_config(
        dir.path(),
        "zero.toml",
        &config_text(&out, 2.0, 3.0, 0.0, 1.0),
    );
    assert!(piezowave(&["classify", cfg.to_str().unwrap()])
        .status
        .success());
    assert_eq!(
        json(&out.join("well.json"))["classification"],
        "global-predicted"
    );
    assert!(!out.join("energy.csv").exists());

    let out = dir.path().join("big");
    let cfg = write_config(
        dir.path(),
        "big.toml",
        &config_text(&out, 2.0, 3.0, 1e3 * 0.5, 1.0),
    );
    assert!(piezowave(&["classify", cfg.to_str().unwrap()])
        .status
        .success());
    let label = json(&out.join("well.json"))["classification"]
        .as_str()
        .unwrap()
        .to_string();
    assert!(
        label == "blowup-predicted" || label == "blowup-predicted-negative",
        "{label}"
    );
}

#[test]
fn classify_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), "c.toml", &config_text(&out, 2.0, 3.0, 0.7, 1.0));
    assert!(piezowave(&["classify", cfg.to_str().unwrap()])
        .status
        .success());
    let first = std::fs::read(out.join("well.json")).unwrap();
    assert!(piezowave(&["classify", cfg.to_str().unwrap()])
        .status
        .success());
    assert_eq!(first, std::fs::read(out.join("well.json")).unwrap());
}

#[test]
fn one_by_one_sweep_matches_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let run_text = config_text(&dir.path().join("single"), 1.0, 2.0, 0.1, 10.0)
        .replace("record_every", "fit = \"exp\"\nrecord_every");
    let single = RunConfig::from_toml_str(&run_text, "single").unwrap();
    let s = run::simulate(&single).unwrap().summary;

    let sweep_text = format!(
        "output_dir = {:?}\n[axes]\n\"initial.scale\" = [1.0]\n[base]\n{}",
        dir.path().join("sweep").display().to_string(),
        run_text
            .replace("[exponents]", "[base.exponents]")
            .replace("[integrator]", "[base.integrator]")
            .replace("[initial]", "[base.initial]")
            .replace("[run]", "[base.run]")
            .replace("[output]", "[base.output]")
    );
    let cfg = write_config(dir.path(), "sweep.toml", &sweep_text);
    assert!(piezowave(&["sweep", cfg.to_str().unwrap()])
        .status
        .success());
    let csv = std::fs::read_to_string(dir.path().join("sweep/sweep.csv")).unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "initial.scale",
            "classification",
            "outcome",
            "t_detect",
            "tmax_bound",
            "omega",
            "error"
        ]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][1], s.classification.label());
    assert_eq!(&rows[0][2], s.outcome);
    assert_eq!(rows[0][5].parse::<f64>().unwrap(), s.omega().unwrap());
    assert_eq!(&rows[0][3], "");
}

#[test]
fn sweep_rows_sorted_and_failures_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let base = config_text(&dir.path().join("unused"), 2.0, 3.0, 0.5, 0.5)
        .replace("[exponents]", "[base.exponents]")
        .replace("[integrator]", "[base.integrator]")
        .replace("[initial]", "[base.initial]")
        .replace("[run]", "[base.run]")
        .replace("[output]", "[base.output]");
    let text = format!(
        "max_parallel = 3\noutput_dir = {:?}\n[axes]\n\"initial.scale\" = [2.0, 0.5, 1.0]\n\"exponents.n1\" = [3.0, 9.0]\n[base]\n{base}",
        dir.path().join("s").display().to_string()
    );
    let cfg = SweepConfig::from_toml_str(&text, "sweep").unwrap();
    let result = sweep::execute(&cfg).unwrap();
    assert_eq!(result.rows.len(), 6);
    let keys: Vec<(f64, f64)> = result
        .rows
        .iter()
        .map(|r| (r.axes[0].as_float().unwrap(), r.axes[1].as_float().unwrap()))
        .collect();
    assert_eq!(
        keys,
        [
            (3.0, 0.5),
            (3.0, 1.0),
            (3.0, 2.0),
            (9.0, 0.5),
            (9.0, 1.0),
            (9.0, 2.0)
        ]
    );
    // n₁ = 9 violates the exponent admissibility condition.
    assert!(result.rows[..3].iter().all(|r| !r.failed()));
    assert!(result.rows[3..].iter().all(|r| r.failed()));
    assert!(!result.all_failed());
}

#[test]
fn all_failed_sweep_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let base = config_text(&dir.path().join("unused"), 2.0, 3.0, 0.5, 0.5)
        .replace("[exponents]", "[base.exponents]")
        .replace("[integrator]", "[base.integrator]")
        .replace("[initial]", "[base.initial]")
        .replace("[run]", "[base.run]")
        .replace("[output]", "[base.output]");
    let text = format!(
        "output_dir = {:?}\n[axes]\n\"exponents.n1\" = [9.0, 10.0]\n[base]\n{base}",
        dir.path().join("s").display().to_string()
    );
    let cfg = write_config(dir.path(), "sweep.toml", &text);
    let res = piezowave(&["sweep", cfg.to_str().unwrap()]);
    assert!(!res.status.success());
    let csv = std::fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn fit_subcommand_reads_energy_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &config_text(&out, 1.0, 2.0, 0.1, 10.0),
    );
    assert!(piezowave(&["simulate", cfg.to_str().unwrap()])
        .status
        .success());
    let csv = out.join("energy.csv");
    let res = piezowave(&["fit", csv.to_str().unwrap(), "--model", "exp"]);
    assert!(res.status.success());
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["model"], "exponential");
    assert!(v["omega"].as_f64().unwrap() > 0.0);

    let res = piezowave(&[
        "fit",
        csv.to_str().unwrap(),
        "--model",
        "log",
        "--C",
        "2",
        "--eta",
        "0.5",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["model"], "logarithmic");
    assert_eq!(v["c"].as_f64(), Some(2.0));

    let res = piezowave(&["fit", csv.to_str().unwrap(), "--model", "poly"]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("--eta"));
}

#[test]
fn bounds_prints_both_conventions() {
    let dir = tempfile::tempdir().unwrap();
    let text = config_text(&dir.path().join("out"), 1.0, 2.5, 6.0, 1.0)
        .replace("v0 = [6.0]", "v0 = [6.0]\nv1 = [8.4]");
    let cfg = write_config(dir.path(), "c.toml", &text);
    let res = piezowave(&["bounds", cfg.to_str().unwrap()]);
    assert!(res.status.success());
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let conv = v["conventions"].as_array().unwrap();
    assert_eq!(conv.len(), 2);
    assert_eq!(conv[0]["convention"], "poincare-consistent");
    assert_eq!(conv[1]["convention"], "paper-literal");
    assert!(conv[0]["bound"]["kappa"].as_f64().unwrap() > 0.0);
    assert!(conv[0]["bound"]["bound"].as_f64().unwrap().is_finite());
}

#[test]
fn normalized_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        RunConfig::from_toml_str(&config_text(&dir.path().join("o"), 2.0, 3.0, 0.3, 1.0), "c")
            .unwrap();
    let normalized = cfg.to_toml_string();
    let again = RunConfig::from_toml_str(&normalized, "normalized").unwrap();
    assert_eq!(cfg, again);
    assert_eq!(normalized, again.to_toml_string());
}
