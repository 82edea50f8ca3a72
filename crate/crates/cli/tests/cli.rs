use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn wmc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmc"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const HARMONIC: &str = "potential = harmonic\npotential.omega = 1\nbackground = harmonic\n\
                        background.omega = 0.75\nmethod = subtracted\nn_paths = 1500\nn_points = 400\n\
                        seed = 9\ntime = 8\nt_grid = 5:15:6\n";

#[test]
fn estimate_prints_one_json_line() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "run.conf", HARMONIC);
    let out = wmc(tmp.path(), &["estimate", "--config", "run.conf"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(v["method"], "subtracted");
    assert!(v["value"].as_f64().unwrap() > 0.0);
    // no files without an output directory
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
}

#[test]
fn estimate_dumps_paths_with_manifest() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "run.conf", HARMONIC);
    let out = wmc(tmp.path(), &["estimate", "--config", "run.conf", "--out", "o", "--dump-paths", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let paths = fs::read_to_string(tmp.path().join("o/paths.csv")).unwrap();
    assert_eq!(paths.lines().next().unwrap(), "trajectory_id,k,u_k,x_1");
    assert_eq!(paths.lines().count(), 1 + 3 * 401);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("o/estimate.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "estimate");
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn sweep_is_reproducible_from_manifest_and_worker_independent() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "run.conf", HARMONIC);
    let first = wmc(tmp.path(), &["sweep", "--config", "run.conf", "--out", "a", "--workers", "3"]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let again = wmc(tmp.path(), &["sweep", "--config", "a/sweep.manifest.json", "--out", "b", "--workers", "1"]);
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
    let a = fs::read(tmp.path().join("a/sweep.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/sweep.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 7);

    let reseeded = wmc(tmp.path(), &["sweep", "--config", "run.conf", "--out", "c", "--seed", "10"]);
    assert_eq!(reseeded.status.code(), Some(0));
    assert_ne!(fs::read(tmp.path().join("c/sweep.csv")).unwrap(), b);
}

#[test]
fn fit_energy_reads_a_sweep_table() {
    let tmp = TempDir::new().unwrap();
    write(tmp.path(), "run.conf", HARMONIC);
    assert_eq!(wmc(tmp.path(), &["sweep", "--config", "run.conf"]).status.code(), Some(0));
    let out = wmc(tmp.path(), &["fit-energy", "--table", "sweep.csv", "--window", "5:15"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let fit: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    let e0 = fit["e0"].as_f64().unwrap();
    assert!((e0 - 0.5).abs() < 0.02, "e0 = {e0}");
    assert!(tmp.path().join("energy_fit.json").exists());
    assert!(tmp.path().join("fit-energy.manifest.json").exists());

    let bad = wmc(tmp.path(), &["fit-energy", "--table", "sweep.csv", "--window", "100:200"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(stderr(&bad).contains("at least 3"));
}

#[test]
fn pap_hist_writes_overlay_and_report() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "pap.conf",
        "potential = linear\npotential.k = 0.5\nbackground = linear\nbackground.kappa = 0.45\n\
         method = compensated\ntime = 15\nn_paths = 4000\nn_points = 500\nseed = 2\npap.bins = 40\n",
    );
    let out = wmc(tmp.path(), &["pap-hist", "--config", "pap.conf", "--dump-samples"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["sample_size"], 4000);
    let overlay = fs::read_to_string(tmp.path().join("pap_overlay.csv")).unwrap();
    assert_eq!(overlay.lines().next().unwrap(), "v,empirical_density,analytic_density");
    assert_eq!(overlay.lines().count(), 41);
    assert_eq!(fs::read_to_string(tmp.path().join("pap_samples.csv")).unwrap().lines().count(), 4001);
}

#[test]
fn singular_family_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    write(
        tmp.path(),
        "pap.conf",
        "potential = harmonic\npotential.omega = 1\nbackground = harmonic\nbackground.omega = 1\n\
         method = subtracted\ntime = 5\nn_paths = 10\nn_points = 10\n",
    );
    let out = wmc(tmp.path(), &["pap-hist", "--config", "pap.conf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("singular"));
}

#[test]
fn configuration_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("mystery = 3\n", "unknown key `mystery`"),
        ("potential = harmonic\ntime = 1\n", "potential.omega"),
        ("time = -1\n", "time"),
        ("method = subtracted\ntime = 1\n", "background"),
        ("time = 1\nn_points = 1\n", "n_points"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let name = format!("c{i}.conf");
        write(tmp.path(), &name, text);
        let out = wmc(tmp.path(), &["estimate", "--config", &name]);
        assert_eq!(out.status.code(), Some(1), "case {i}: {}", stderr(&out));
        assert!(stderr(&out).contains(needle), "case {i}: {}", stderr(&out));
    }
    assert_eq!(wmc(tmp.path(), &["sweep"]).status.code(), Some(1));
    write(tmp.path(), "nogrid.conf", "time = 1\n");
    let out = wmc(tmp.path(), &["sweep", "--config", "nogrid.conf"]);
    assert!(stderr(&out).contains("t_grid"));
    assert_eq!(wmc(tmp.path(), &["frobnicate"]).status.code(), Some(1));
}

#[test]
fn selfcheck_passes() {
    let tmp = TempDir::new().unwrap();
    let out = wmc(tmp.path(), &["selfcheck"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert_eq!(stdout(&out).lines().filter(|l| l.contains(": ok")).count(), 5);
}
