//! Shared fixtures for the benchmarks.

use std::path::Path;

use opmp_core::harness::ScenarioConfig;
use opmp_core::{BaseSet, Domain, Problem};

/// Loads a shipped scenario by file stem.
pub fn scenario(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.toml"));
    ScenarioConfig::load(&path).expect("shipped scenario")
}

pub fn problem(name: &str) -> Problem {
    scenario(name).build_problem().expect("valid scenario")
}

/// Domains the mirror step is benchmarked on, with a label.
pub fn domains(dim: usize) -> Vec<(&'static str, Domain)> {
    vec![
        (
            "ball",
            Domain::euclidean(BaseSet::unit_ball(dim).unwrap()).unwrap(),
        ),
        (
            "box",
            Domain::euclidean(BaseSet::boxed(vec![-1.0; dim], vec![1.0; dim]).unwrap()).unwrap(),
        ),
        ("entropic", Domain::entropic_simplex(dim).unwrap()),
    ]
}
