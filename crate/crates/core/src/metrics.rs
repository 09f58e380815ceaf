//! Regret, cumulative violation, gradient variation estimates and the CSV
//! artifacts written for each run.

use std::io::Write;

use rand::RngCore;
use serde::Serialize;

use crate::algorithm::Variant;
use crate::error::{check_dim, Error, Result};
use crate::geometry::MirrorDomain;
use crate::linalg;
use crate::problem::{self, LossSequence, Problem};

/// Identifies the configuration and seed a trace came from.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Fingerprint {
    pub config_hash: String,
    pub seed: u64,
}

/// Everything observable about round t.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: usize,
    /// x_t
    pub decision: Vec<f64>,
    /// fᵗ(x_t)
    pub loss: f64,
    /// g(x_t)
    pub g_values: Vec<f64>,
    /// Q(t), computed from g(x_{t−1})
    pub queue: Vec<f64>,
    pub q_l1: f64,
    pub q_l2: f64,
    pub alpha: f64,
    pub xi: f64,
    /// x̃_t
    pub x_tilde: Vec<f64>,
    /// Anchor of both mirror steps (x̃_t, or ỹ_t with mixing).
    pub anchor: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub variant: Variant,
    pub gamma: f64,
    pub eta: f64,
    pub nu: Option<f64>,
    /// g(x₀), the input to the first queue update.
    pub g_initial: Vec<f64>,
    pub records: Vec<RoundRecord>,
    /// Q(T+1)
    pub final_queue: Vec<f64>,
    pub fingerprint: Fingerprint,
}

impl RunTrace {
    pub fn horizon(&self) -> usize {
        self.records.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.g_initial.len()
    }

    /// g-vector fed to the queue update of round t (1-based): g(x_{t−1}).
    pub fn queue_input(&self, t: usize) -> &[f64] {
        if t <= 1 {
            &self.g_initial
        } else {
            &self.records[t - 2].g_values
        }
    }

    /// ‖Q(T+1)‖₂ / γ
    pub fn queue_bound(&self) -> f64 {
        linalg::norm_l2(&self.final_queue) / self.gamma
    }
}

/// Σₜ fᵗ(x_t) − Σₜ fᵗ(x*).
pub fn regret(trace: &RunTrace, comparator: &[f64], problem: &Problem) -> Result<f64> {
    check_dim(problem.dim(), comparator.len())?;
    let worst = problem
        .constraints
        .values(comparator)
        .into_iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |acc, (k, v)| match acc {
            Some((_, m)) if m >= v => acc,
            _ => Some((k, v)),
        });
    if let Some((k, v)) = worst {
        if v > 1e-6 {
            return Err(Error::Infeasible {
                constraint: k,
                violation: v,
            });
        }
    }
    Ok(regret_against(trace, comparator, &problem.losses))
}

pub(crate) fn regret_against(trace: &RunTrace, comparator: &[f64], seq: &LossSequence) -> f64 {
    trace
        .records
        .iter()
        .map(|r| r.loss - seq.value(r.t, comparator))
        .sum()
}

/// Σₜ g_k(x_t), unclipped. `k` is 0-based.
pub fn violation(trace: &RunTrace, k: usize) -> Result<f64> {
    if k >= trace.num_constraints() {
        return Err(Error::Argument(format!(
            "constraint index {k} out of range (K = {})",
            trace.num_constraints()
        )));
    }
    Ok(trace.records.iter().map(|r| r.g_values[k]).sum())
}

pub fn violations(trace: &RunTrace) -> Vec<f64> {
    (0..trace.num_constraints())
        .map(|k| trace.records.iter().map(|r| r.g_values[k]).sum())
        .collect()
}

/// Σₜ max{g_k(x_t), 0}
pub fn clipped_violations(trace: &RunTrace) -> Vec<f64> {
    (0..trace.num_constraints())
        .map(|k| trace.records.iter().map(|r| r.g_values[k].max(0.0)).sum())
        .collect()
}

/// max_k violation, or 0 without constraints.
pub fn max_violation(trace: &RunTrace) -> f64 {
    violations(trace)
        .into_iter()
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub holds: bool,
    /// bound − max violation
    pub slack: f64,
    pub bound: f64,
    pub max_violation: f64,
}

/// max_k Violation(T, k) ≤ ‖Q(T+1)‖₂/γ + 1e−9.
pub fn violation_bound_check(trace: &RunTrace, gamma: f64) -> Result<BoundCheck> {
    if !(gamma > 0.0) {
        return Err(Error::Argument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let bound = linalg::norm_l2(&trace.final_queue) / gamma;
    let mv = max_violation(trace);
    Ok(BoundCheck {
        holds: mv <= bound + 1e-9,
        slack: bound - mv,
        bound,
        max_violation: mv,
    })
}

/// Lower estimate of V_*(T) over the trace's horizon, with the max over the
/// domain replaced by a max over `budget` uniform samples.
pub fn empirical_variation(
    trace: &RunTrace,
    seq: &LossSequence,
    domain: &dyn MirrorDomain,
    budget: usize,
    rng: &mut dyn RngCore,
) -> f64 {
    let points: Vec<Vec<f64>> = (0..budget.max(1)).map(|_| domain.sample(rng)).collect();
    problem::variation_over_points(seq, domain.dual_norm(), &points, trace.horizon())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub scenario_id: String,
    pub horizon: usize,
    pub regret: f64,
    pub violation: Vec<f64>,
    pub clipped_violation: Vec<f64>,
    pub max_violation: f64,
    pub queue_bound: f64,
    pub v_cap: f64,
    pub v_empirical: f64,
}

/// Shortest decimal string that reads back to the same f64.
pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn io_err(e: std::io::Error) -> Error {
    Error::Csv(csv::Error::from(e))
}

/// Per-round CSV: t, loss, cum_loss, g_1..g_K, cum_g_1..cum_g_K, q_l1, q_l2, alpha, xi.
pub fn write_rounds_csv<W: Write>(trace: &RunTrace, out: W) -> Result<()> {
    let k = trace.num_constraints();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = vec!["t".into(), "loss".into(), "cum_loss".into()];
    header.extend((1..=k).map(|i| format!("g_{i}")));
    header.extend((1..=k).map(|i| format!("cum_g_{i}")));
    header.extend(["q_l1", "q_l2", "alpha", "xi"].map(String::from));
    w.write_record(&header)?;
    let mut cum_loss = 0.0;
    let mut cum_g = vec![0.0; k];
    for r in &trace.records {
        cum_loss += r.loss;
        linalg::axpy(1.0, &r.g_values, &mut cum_g);
        let mut row = vec![r.t.to_string(), fmt_num(r.loss), fmt_num(cum_loss)];
        row.extend(r.g_values.iter().map(|v| fmt_num(*v)));
        row.extend(cum_g.iter().map(|v| fmt_num(*v)));
        row.extend([r.q_l1, r.q_l2, r.alpha, r.xi].map(fmt_num));
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 7] = [
    "scenario_id",
    "T",
    "regret",
    "max_violation",
    "queue_bound",
    "V_cap",
    "V_empirical",
];

pub fn summary_row(m: &MetricsReport) -> Vec<String> {
    vec![
        m.scenario_id.clone(),
        m.horizon.to_string(),
        fmt_num(m.regret),
        fmt_num(m.max_violation),
        fmt_num(m.queue_bound),
        fmt_num(m.v_cap),
        fmt_num(m.v_empirical),
    ]
}

/// Per-constraint totals: k, violation, clipped_violation.
pub fn write_violations_csv<W: Write>(m: &MetricsReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "violation", "clipped_violation"])?;
    for (i, (v, c)) in m.violation.iter().zip(&m.clipped_violation).enumerate() {
        w.write_record([(i + 1).to_string(), fmt_num(*v), fmt_num(*c)])?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}
