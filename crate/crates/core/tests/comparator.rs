//! Hindsight comparator on short runs of the shipped scenarios, including
//! corner solutions where the penalty weight grows large.

use std::path::Path;

use opmp_core::harness::{self, ScenarioConfig};
use opmp_core::problem::COMPARATOR_FEAS_TOL;

fn load(name: &str) -> ScenarioConfig {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    ScenarioConfig::load(&dir.join(format!("{name}.toml"))).unwrap()
}

#[test]
fn converges_on_corner_cells() {
    let cells = [
        ("slow_drift", 100, 1),
        ("box_multi", 50, 5),
        ("box_multi", 100, 1),
        ("box_multi", 300, 2),
        ("box_multi", 700, 4),
        ("simplex", 10, 8),
        ("simplex", 300, 2),
    ];
    for (name, t, seed) in cells {
        let cfg = load(name).with_run(t, seed);
        let problem = cfg.build_problem().unwrap();
        let o = harness::execute(&cfg).unwrap_or_else(|e| panic!("{name} T{t} s{seed}: {e}"));
        let worst = problem
            .constraints
            .values(&o.comparator)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(worst <= COMPARATOR_FEAS_TOL, "{name}: g = {worst}");
        assert!(problem.domain.base().contains(&o.comparator, 1e-9));
    }
}

#[test]
fn comparator_is_no_worse_than_the_slater_point() {
    for name in ["slow_drift", "alternating", "box_multi", "simplex"] {
        let cfg = load(name).with_run(200, 3);
        let problem = cfg.build_problem().unwrap();
        let o = harness::execute(&cfg).unwrap();
        let total = |x: &[f64]| (1..=200).map(|t| problem.losses.value(t, x)).sum::<f64>();
        let slater = &cfg.slater.as_ref().unwrap().point;
        assert!(total(&o.comparator) <= total(slater) + 1e-9, "{name}");
    }
}
