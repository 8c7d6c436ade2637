use std::path::{Path, PathBuf};
use std::process::Command;

use pooled_saa::experiments::{load_spec, BacktestSpec, SimSpec};

const SIM: &str = r#"
K = 40
d = 6
reps = 2
seed = 5
policies = ["SAA", "KS", "JS-GM", "S-SAA-GM", "S-SAA-Fixed-CV3", "Oracle-GM"]
alpha_grid = { n = 20, max = 40 }

[cost]
kind = "newsvendor"
s = 0.8

[data_model]
kind = "poisson_n"
n = 8

[truth_model]
kind = "dirichlet_uniform"
"#;

const BACKTEST: &str = r#"
d = 8
s = 0.9
n_train = 6
n_test = 10
reps = 2
seed = 1
policies = ["SAA", "S-SAA-GM", "JS-GM"]
alpha_grid = [0, 1, 5, 20, "inf"]

[cleaning]
drop_weekends = true
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pooled-saa"))
}

fn run(args: &[&str]) -> std::process::Output {
    let out = bin().args(args).env("RUST_LOG", "warn").output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_reproducible_across_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sim.toml", SIM);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    run(&["simulate", "--spec", s(&spec), "--out", s(&a)]);
    run(&["--serial", "simulate", "--spec", s(&spec), "--out", s(&b)]);
    let body = std::fs::read_to_string(&a).unwrap();
    assert_eq!(body, std::fs::read_to_string(&b).unwrap());
    assert!(body.starts_with("rep,K,policy,alpha,metric,value\n"));
    assert!(body.contains("\nall,40,S-SAA-GM,,z_perf_mean,"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["spec_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn diagnose_emits_curves() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sim.toml", SIM);
    let out = dir.path().join("d.csv");
    run(&["diagnose", "--spec", s(&spec), "--out", s(&out)]);
    let body = std::fs::read_to_string(&out).unwrap();
    for metric in ["saa_subopt", "instability", "saa0", "loo_scaled", "z_perf"] {
        assert!(body.contains(&format!(",{metric},")), "{metric}");
    }
    // 2 reps x 21 alphas x 5 metrics, plus the header.
    assert_eq!(body.lines().count(), 1 + 2 * 21 * 5);
}

#[test]
fn backtest_and_solve_on_generated_demand() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("demand.csv");
    run(&["gen-demand", "--out", s(&data), "--stores", "6", "--days", "120"]);
    let spec = write(dir.path(), "bt.toml", BACKTEST);
    let out = dir.path().join("bt.csv");
    run(&["backtest", "--spec", s(&spec), "--data", s(&data), "--out", s(&out)]);
    let body = std::fs::read_to_string(&out).unwrap();
    assert!(body.contains("\n0,6,SAA,0,benefit_pct,0\n"), "{body}");
    assert!(body.contains(",test_cost,"));

    for (anchor, d) in [("gm", "10"), ("uniform", "inf")] {
        let out = dir.path().join(format!("solve-{anchor}.csv"));
        run(&["solve", "--data", s(&data), "--anchor", anchor, "--d", d, "--out", s(&out)]);
        let body = std::fs::read_to_string(&out).unwrap();
        let rows: Vec<&str> = body.lines().skip(1).collect();
        assert_eq!(rows.len(), 6);
        assert!(rows[0].contains(",decision:0001,"), "{}", rows[0]);
    }
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.toml", &SIM.replace("K = 40", "K = 0"));
    let out = bin().args(["simulate", "--spec", s(&spec), "--out", s(&dir.path().join("x.csv"))]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("K must be at least 1"));

    let data = write(dir.path(), "d.csv", "store_id,date,demand\na,2020-01-02,3\na,2020-01-01,4\n");
    let out = bin().args(["solve", "--data", s(&data), "--out", s(&dir.path().join("y.csv"))]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

#[test]
fn shipped_specs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        if name.starts_with("backtest") {
            load_spec::<BacktestSpec>(&path).unwrap().validate().unwrap();
        } else {
            load_spec::<SimSpec>(&path).unwrap().validate().unwrap();
        }
        seen += 1;
    }
    assert!(seen >= 4);
}
