use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str], out: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_infreg"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(t) = threads {
        cmd.env("INFREG_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn records(dir: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(dir.join("report.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn passing_check_exits_zero_with_record() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("projection.toml");
    let o = run(&["rg-plus", "--scenario", s.to_str().unwrap()], dir.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = records(dir.path());
    assert_eq!(r.len(), 1);
    assert_eq!(r[0]["check"], "rg-plus");
    assert_eq!(r[0]["status"], "PASS");
    assert_eq!(r[0]["inputs_digest"].as_str().unwrap().len(), 64);
    let v = r[0]["values"]["rg_plus"]["value"].as_f64().unwrap();
    assert!((v - 1.0).abs() < 1e-9);
    assert_eq!(r[0]["values"]["rg_plus"]["method"], "exact face enumeration");
}

#[test]
fn failing_check_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("projection.toml");
    let o = run(&["strong-check", "--scenario", s.to_str().unwrap(), "--budget", "100"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(records(dir.path())[0]["status"], "FAIL");
}

#[test]
fn computation_error_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("identity.toml");
    std::fs::write(&file, "name = \"id\"\nybar = [0.0]\n[map]\nkind = \"fixture\"\nname = \"identity\"\n").unwrap();
    let o = run(&["rg-plus", "--scenario", file.to_str().unwrap()], &dir.path().join("out"), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Jelonek"));
}

#[test]
fn parse_errors_exit_three_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    std::fs::write(&file, "name = \"bad\"\nybar = [0.0\n").unwrap();
    let o = run(&["jelonek", "--scenario", file.to_str().unwrap()], &dir.path().join("out"), None);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    std::fs::write(
        &file,
        "name = \"bad\"\nybar = [0.0, 1.0]\n[map]\nkind = \"fixture\"\nname = \"projection\"\nparams = [1.0]\n",
    )
    .unwrap();
    let o = run(&["jelonek", "--scenario", file.to_str().unwrap()], &dir.path().join("out"), None);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`ybar`"));

    std::fs::write(&file, "name = \"bad\"\nybar = [0.0]\n[map]\nkind = \"fixture\"\n").unwrap();
    let o = run(&["jelonek", "--scenario", file.to_str().unwrap()], &dir.path().join("out"), None);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("name"));
}

#[test]
fn infinite_values_are_strings() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("horizontal_ray.toml");
    let o = run(&["reg-estimate", "--scenario", s.to_str().unwrap(), "--budget", "300"], dir.path(), None);
    assert_eq!(o.status.code(), Some(0));
    let r = records(dir.path());
    assert_eq!(r[0]["values"]["reg"]["value"], "inf");
    assert!(dir.path().join("ratios.csv").exists());
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let s = scenario("projection.toml");
    let args = ["all", "--scenario", s.to_str().unwrap(), "--budget", "1500", "--seed", "9"];
    let oa = run(&args, a.path(), Some("1"));
    let ob = run(&args, b.path(), Some("4"));
    assert_eq!(oa.status.code(), ob.status.code());
    for f in ["report.jsonl", "ratios.csv", "residuals.csv", "perturbation.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn solver_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("projection.toml");
    let o = run(&["solve-lg", "--scenario", s.to_str().unwrap()], dir.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = records(dir.path());
    assert_eq!(r[0]["values"]["converged"]["value"], 100);
    let csv = std::fs::read_to_string(dir.path().join("residuals.csv")).unwrap();
    assert!(csv.starts_with("start,iter,step,ratio,residual"));
}

#[test]
fn criterion_and_radius_pass_on_scenarios() {
    for name in ["projection.toml", "projection_double.toml", "piecewise.toml", "horizontal_ray.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let s = scenario(name);
        for cmd in ["criterion-check", "radius-report", "normal-cone"] {
            let o = run(&[cmd, "--scenario", s.to_str().unwrap(), "--budget", "2000"], dir.path(), None);
            assert_eq!(o.status.code(), Some(0), "{name} {cmd}");
        }
    }
}

#[test]
fn strong_radius_on_chain_fails() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("chain_strong.toml");
    let o = run(&["radius-report", "--scenario", s.to_str().unwrap(), "--budget", "500"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2));
    let r = records(dir.path());
    assert_eq!(r[0]["values"]["strong_base"]["value"], false);
}
