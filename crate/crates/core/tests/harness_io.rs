use std::fs;
use std::path::{Path, PathBuf};

use opmp_core::harness::{self, ScenarioConfig, SweepSpec};

fn scenarios() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    v.sort();
    v
}

#[test]
fn shipped_configs_round_trip_and_validate() {
    for p in scenarios() {
        let c = ScenarioConfig::load(&p).unwrap();
        c.validate().unwrap();
        let again = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again, "{}", p.display());
        assert_eq!(c.fingerprint().unwrap(), again.fingerprint().unwrap());
    }
}

#[test]
fn run_scenario_appends_summary_rows() {
    let dir = tempfile::tempdir().unwrap();
    let base = ScenarioConfig::load(&scenarios()[0])
        .unwrap()
        .with_run(50, 0);
    for seed in 0..3 {
        harness::run_scenario(&base.with_run(50, seed), Some(dir.path())).unwrap();
    }
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("scenario_id,T,"));
    let rounds = dir
        .path()
        .join(format!("{}_T50_s2_rounds.csv", base.scenario_id));
    assert_eq!(fs::read_to_string(rounds).unwrap().lines().count(), 51);
}

#[test]
fn sweep_writes_cells_and_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let base = ScenarioConfig::load(&scenarios()[0]).unwrap();
    let spec = SweepSpec {
        base: base.clone(),
        horizons: vec![40, 80],
        seeds: vec![0, 1],
    };
    let s = harness::sweep(&spec, Some(dir.path())).unwrap();
    assert_eq!(s.rows.len(), 4);
    assert_eq!(
        s.mean_regret.iter().map(|p| p.0).collect::<Vec<_>>(),
        vec![40, 80]
    );
    assert!(s.violation_offset >= 1.0);
    let table = fs::read_to_string(dir.path().join("sweep_summary.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert!(table.lines().next().unwrap().contains(",seed,"));
    let slopes = fs::read_to_string(dir.path().join("sweep_slopes.csv")).unwrap();
    assert!(slopes.starts_with("metric,slope,offset"));
    for (t, seed) in [(40, 0), (40, 1), (80, 0), (80, 1)] {
        let cell = dir
            .path()
            .join(format!("{}_T{t}_s{seed}_violations.csv", base.scenario_id));
        assert!(cell.exists(), "{}", cell.display());
    }

    // Same cells, same bytes.
    let again = tempfile::tempdir().unwrap();
    harness::sweep(&spec, Some(again.path())).unwrap();
    for name in ["sweep_summary.csv", "sweep_slopes.csv"] {
        assert_eq!(
            fs::read(dir.path().join(name)).unwrap(),
            fs::read(again.path().join(name)).unwrap()
        );
    }
}

#[test]
fn empty_sweep_is_rejected() {
    let base = ScenarioConfig::load(&scenarios()[0]).unwrap();
    let spec = SweepSpec {
        base,
        horizons: vec![],
        seeds: vec![0],
    };
    assert!(harness::sweep(&spec, None).is_err());
}
