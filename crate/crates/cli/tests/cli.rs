use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cs-bandits"));
    cmd.env_remove("CS_BANDITS_OUT");
    cmd
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

#[test]
fn run_smoke_writes_both_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = run(&[
        "run", "--instance", "toy:0.6", "--alpha", "0.2", "--runs", "1", "--horizon", "1000",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["results.csv", "traces.csv", "config.toml"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.starts_with("# cs-bandits results schema v1\n"));
    // header plus one row per default policy
    assert_eq!(data_lines(&out.join("results.csv")).len(), 1 + 4);
    assert!(fs::read_to_string(out.join("traces.csv")).unwrap().starts_with("# cs-bandits trace schema v1"));
}

#[test]
fn config_echo_reproduces_results() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let o = run(&[
        "run", "--config", data("asymmetric_pe_known_ell.toml").to_str().unwrap(),
        "--instance", data("asymmetric_pe.csv").to_str().unwrap(),
        "--runs", "3", "--horizon", "3000", "--out", first.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let second = dir.path().join("b");
    let o = run(&[
        "run", "--config", first.join("config.toml").to_str().unwrap(),
        "--out", second.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["results.csv", "traces.csv"] {
        assert_eq!(
            fs::read(first.join(name)).unwrap(),
            fs::read(second.join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn sweep_row_count_and_point_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = run(&[
        "sweep", "--instance", "toy:0.6", "--alpha", "0.2", "--axis", "mu1", "--values", "0.6,0.7,0.93",
        "--policies", "pe-cs,etc-cs", "--runs", "2", "--horizon", "2000", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_lines(&out.join("sweep.csv")).len(), 1 + 3 * 2 * 2);
    for v in ["0.6", "0.7", "0.93"] {
        assert!(out.join(format!("mu1={v}")).join("results.csv").exists());
    }
}

#[test]
fn sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let go = |name: &str| {
        let out = dir.path().join(name);
        let o = run(&[
            "sweep", "--instance", "toy:0.6", "--alpha", "0.2", "--axis", "alpha", "--values", "0.1,0.3",
            "--runs", "2", "--horizon", "1500", "--jobs", "2", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(out.join("sweep.csv")).unwrap()
    };
    assert_eq!(go("x"), go("y"));
}

#[test]
fn output_dir_falls_back_to_env() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["run", "--instance", "toy:0.6", "--alpha", "0.2", "--runs", "1", "--horizon", "500"])
        .env("CS_BANDITS_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("results.csv").exists());
}

#[test]
fn bounds_prints_json_report() {
    let o = run(&["bounds", "--instance", "toy:0.6", "--setting", "known-ell", "--ell", "3", "--alpha", "0.2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let coeffs = report["lower"]["coefficients"].as_array().unwrap();
    assert!((coeffs[0].as_f64().unwrap() - 78.125).abs() < 1e-9);
    assert!((coeffs[2].as_f64().unwrap() - 512.0).abs() < 1e-9);
    assert_eq!(report["a_star"], 2);
}

#[test]
fn gen_instance_writes_sorted_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("genres.csv");
    let o = run(&[
        "gen-instance", "--summary", data("genre_summary_sample.csv").to_str().unwrap(),
        "--cost-seed", "7", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines = data_lines(&out);
    assert_eq!(lines[0], "label,mean,cost");
    assert_eq!(lines.len(), 1 + 18);
    let costs: Vec<f64> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(costs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn errors_are_distinct_and_nonzero() {
    let unknown = run(&["run", "--instance", "toy:0.6", "--alpha", "0.2", "--policies", "greedy"]);
    assert!(!unknown.status.success());
    assert!(stderr(&unknown).contains("unknown policy id `greedy`"));

    let missing = run(&["run", "--instance", "/no/such/instance.csv", "--alpha", "0.2"]);
    assert!(!missing.status.success());
    assert!(stderr(&missing).contains("/no/such/instance.csv"));

    let infeasible = run(&["bounds", "--instance", "toy:0.6", "--setting", "fixed", "--mu0", "0.99"]);
    assert!(!infeasible.status.success());
    assert!(stderr(&infeasible).contains("infeasible instance"));

    let no_alpha = run(&["run", "--instance", "toy:0.6"]);
    assert!(!no_alpha.status.success());
    assert!(stderr(&no_alpha).contains("needs --alpha"));
}
