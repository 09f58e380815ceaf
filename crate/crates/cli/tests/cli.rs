use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn opmp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opmp"))
        .args(args)
        .env("OPMP_THREADS", "2")
        .output()
        .expect("spawn opmp")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.toml"))
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("golden");
    let o = opmp(&["run", "--config", arg(&cfg), "--out", arg(dir.path())]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = stdout(&o);
    let regret: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("regret"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((regret + 1.7666666666666666).abs() < 1e-6, "{regret}");
    let rounds = std::fs::read_to_string(dir.path().join("golden_T3_s0_rounds.csv")).unwrap();
    assert_eq!(rounds.lines().count(), 4);
    assert!(dir.path().join("golden_T3_s0_violations.csv").exists());
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("scenario_id,T,regret"));
}

#[test]
fn rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = scenario("alternating");
    for d in [&a, &b] {
        let o = opmp(&[
            "run",
            "--config",
            arg(&cfg),
            "--seed",
            "3",
            "--out",
            arg(d.path()),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let name = "alternating_T10000_s3_rounds.csv";
    let x = std::fs::read(a.path().join(name)).unwrap();
    let y = std::fs::read(b.path().join(name)).unwrap();
    assert!(!x.is_empty());
    assert_eq!(x, y);
}

#[test]
fn sweep_reports_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("slow_drift");
    let o = opmp(&[
        "sweep",
        "--config",
        arg(&cfg),
        "--T",
        "100,1000",
        "--seeds",
        "0..2",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("regret slope"));
    assert!(dir.path().join("sweep_summary.csv").exists());
    assert!(dir.path().join("slow_drift_T1000_s1_rounds.csv").exists());
}

#[test]
fn check_passes_on_shipped_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("golden");
    let o = opmp(&[
        "check",
        "--config",
        arg(&cfg),
        "--lemmas",
        "all",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("golden_checks.csv")).unwrap();
    assert!(csv.contains("dpp_bound"));
}

#[test]
fn failed_check_exits_one() {
    // Understated curvature constant: the descent check must fail.
    let text = std::fs::read_to_string(scenario("fixed_quadratic")).unwrap();
    let text = format!("{text}\n[constants]\nl_f = 0.1\n");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("understated.toml");
    std::fs::write(&path, text).unwrap();
    let o = opmp(&["check", "--config", arg(&path), "--lemmas", "descent"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(opmp(&["bogus"]).status.code(), Some(2));
    assert_eq!(opmp(&["run"]).status.code(), Some(2));
    assert_eq!(
        opmp(&["run", "--config", "/does/not/exist.toml"])
            .status
            .code(),
        Some(2)
    );
    let cfg = scenario("golden");
    let o = opmp(&["check", "--config", arg(&cfg), "--lemmas", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    let o = opmp(&[
        "sweep",
        "--config",
        arg(&cfg),
        "--T",
        "10",
        "--seeds",
        "a..b",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_config_lists_problems() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenario("golden"))
        .unwrap()
        .replace("horizon = 3", "horizon = 0");
    std::fs::write(&path, text).unwrap();
    let o = opmp(&["run", "--config", arg(&path)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("horizon"));
}
