//! Numerical checks of the inequalities the method relies on, evaluated on
//! live runs and random instances. Each check reports the largest amount by
//! which a left-hand side exceeded its right-hand side.

use std::io::Write;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::algorithm::{self, AlgoState};
use crate::error::{Error, Result};
use crate::geometry::{Domain, MirrorDomain, Norm};
use crate::linalg;
use crate::metrics::{fmt_num, RunTrace};
use crate::problem::{ConstraintBlock, ConstraintFn, LossFamily, LossSequence, Problem};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub rounds: usize,
    pub samples: usize,
    /// Evaluations skipped because the inequality was vacuous.
    pub skipped: usize,
    /// max(LHS − RHS); negative when every instance had slack.
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            rounds: 0,
            samples: 0,
            skipped: 0,
            max_residual: f64::NEG_INFINITY,
            tolerance,
            pass: true,
        }
    }

    pub fn observe(&mut self, residual: f64) {
        self.samples += 1;
        if residual > self.max_residual || residual.is_nan() {
            self.max_residual = residual;
        }
        self.pass = self.max_residual <= self.tolerance;
    }

    fn merge(&mut self, other: &CheckReport) {
        self.rounds += other.rounds;
        self.samples += other.samples;
        self.skipped += other.skipped;
        if other.max_residual > self.max_residual || other.max_residual.is_nan() {
            self.max_residual = other.max_residual;
        }
        self.pass = self.max_residual <= self.tolerance;
    }
}

/// Queue properties on every update of a trace, Q(t) → Q(t+1) from the input
/// g(x_t) actually consumed by the update:
/// (a) Q(t+1) ≥ 0 and Q(t+1) + γg(x_t) ≥ 0, exactly;
/// (b) ½(‖Q(t+1)‖² − ‖Q(t)‖²) ≤ γ⟨Q(t), g⟩ + γ²‖g‖²;
/// (c) ‖Q(t+1)‖₂ ≤ ‖Q(t)‖₂ + γ‖g‖₂;
/// (d) |‖Q(t+1)‖₁ − ‖Q(t)‖₁| ≤ γ‖g‖₁.
pub fn check_queue_lemma(trace: &RunTrace) -> Result<Vec<CheckReport>> {
    let k = trace.num_constraints();
    let gamma = trace.gamma;
    let mut a = CheckReport::new("queue_nonnegative", 0.0);
    let mut b = CheckReport::new("queue_drift", 1e-9);
    let mut c = CheckReport::new("queue_l2_growth", 1e-9);
    let mut d = CheckReport::new("queue_l1_change", 1e-9);
    let zero = vec![0.0; k];
    let horizon = trace.horizon();
    for t in 0..=horizon {
        let q = if t == 0 {
            &zero
        } else {
            &trace.records[t - 1].queue
        };
        let q_next = if t == horizon {
            &trace.final_queue
        } else {
            &trace.records[t].queue
        };
        let g = trace.queue_input(t + 1);
        if q.len() != k || q_next.len() != k || g.len() != k {
            return Err(Error::Data {
                oracle: format!("trace queue record at round {t}"),
            });
        }
        let sg: Vec<f64> = g.iter().map(|v| gamma * v).collect();
        let worst = q_next
            .iter()
            .zip(&sg)
            .map(|(qn, s)| (-qn).max(-(qn + s)))
            .fold(f64::NEG_INFINITY, f64::max);
        a.observe(if k == 0 { 0.0 } else { worst });
        b.observe(
            0.5 * (linalg::norm_sq(q_next) - linalg::norm_sq(q))
                - gamma * linalg::dot(q, g)
                - gamma * gamma * linalg::norm_sq(g),
        );
        c.observe(linalg::norm_l2(q_next) - linalg::norm_l2(q) - gamma * linalg::norm_l2(g));
        d.observe(
            (linalg::norm_l1(q_next) - linalg::norm_l1(q)).abs() - gamma * linalg::norm_l1(g),
        );
    }
    let mut out = vec![a, b, c, d];
    for r in out.iter_mut() {
        r.rounds = horizon;
    }
    Ok(out)
}

/// The quantities of one mirror-prox round needed by the drift-plus-penalty
/// bound and the per-round pushback checks.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSnapshot {
    pub t: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub xi: f64,
    /// x_{t−1}, x_t
    pub x_prev: Vec<f64>,
    pub x: Vec<f64>,
    /// x̃_t (or ỹ_t) and x̃_{t+1}
    pub anchor: Vec<f64>,
    pub x_tilde_next: Vec<f64>,
    /// Q(t), Q(t+1)
    pub q: Vec<f64>,
    pub q_next: Vec<f64>,
    /// ∇f^{t−1}(x_{t−1}), ∇fᵗ(x_t)
    pub grad_prev: Vec<f64>,
    pub grad: Vec<f64>,
    /// g and ∇g at x_{t−1}; g at x_t
    pub g_prev: Vec<f64>,
    pub jac_prev: Vec<Vec<f64>>,
    pub g: Vec<f64>,
}

impl RoundSnapshot {
    pub fn capture(before: &AlgoState, after: &AlgoState, gamma: f64) -> Self {
        Self {
            t: after.t,
            gamma,
            alpha: after.alpha,
            xi: after.xi,
            x_prev: before.x_prev.clone(),
            x: after.x_prev.clone(),
            anchor: after.anchor.clone(),
            x_tilde_next: after.x_tilde.clone(),
            q: after.q.clone(),
            q_next: algorithm::queue_update(&after.q, &after.g_prev, gamma),
            grad_prev: before.grad_prev.clone(),
            grad: after.grad_prev.clone(),
            g_prev: before.g_prev.clone(),
            jac_prev: before.jac_prev.clone(),
            g: after.g_prev.clone(),
        }
    }

    /// γΣ_k (Q_k(t) + γg_k(x_{t−1}))∇g_k(x_{t−1})
    pub fn constraint_term(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.x.len()];
        for ((q, g), row) in self.q.iter().zip(&self.g_prev).zip(&self.jac_prev) {
            linalg::axpy(self.gamma * (q + self.gamma * g), row, &mut out);
        }
        out
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }
}

/// Runs `rounds` rounds and captures a snapshot of each.
pub fn snapshots(
    problem: &Problem,
    hp: &algorithm::HyperParams,
    variant: algorithm::Variant,
    rounds: usize,
) -> Result<Vec<RoundSnapshot>> {
    let mut state = AlgoState::init(problem)?;
    let mut out = Vec::with_capacity(rounds);
    for t in 1..=rounds {
        let (next, _) = algorithm::step(variant, &state, problem, hp).map_err(|e| e.at_round(t))?;
        out.push(RoundSnapshot::capture(&state, &next, hp.gamma));
        state = next;
    }
    Ok(out)
}

/// Residual LHS − RHS of the per-round drift-plus-penalty bound at `z`.
pub fn dpp_residual(
    s: &RoundSnapshot,
    domain: &dyn MirrorDomain,
    block: &ConstraintBlock,
    z: &[f64],
) -> Result<f64> {
    let a = s.alpha;
    let gz = block.values(z);
    let lhs = 0.5 * (linalg::norm_sq(&s.q_next) - linalg::norm_sq(&s.q))
        + linalg::dot(&s.grad_prev, &s.x)
        + a * domain.bregman(&s.x, &s.anchor)?;
    let step = domain.norm().eval(&linalg::sub(&s.x, &s.x_prev));
    let weights: Vec<f64> =
        s.q.iter()
            .zip(&s.g_prev)
            .map(|(q, g)| q + s.gamma * g)
            .collect();
    let rhs = 0.5 * s.xi * step * step
        + 0.5 * s.gamma * s.gamma * (linalg::norm_sq(&s.g) - linalg::norm_sq(&s.g_prev))
        + linalg::dot(&s.grad, z)
        + a * domain.bregman(z, &s.anchor)?
        - a * domain.bregman(z, &s.x_tilde_next)?
        + linalg::dot(&linalg::sub(&s.grad_prev, &s.grad), &s.x_tilde_next)
        - a * domain.bregman(&s.x_tilde_next, &s.x)?
        + s.gamma * linalg::dot(&weights, &gz);
    Ok(lhs - rhs)
}

/// Drift-plus-penalty bound for one round against every z, tolerance 1e−8.
pub fn check_dpp_bound(
    s: &RoundSnapshot,
    domain: &dyn MirrorDomain,
    block: &ConstraintBlock,
    z_samples: &[Vec<f64>],
) -> Result<CheckReport> {
    let n = domain.dim();
    for v in [
        &s.x_prev,
        &s.x,
        &s.anchor,
        &s.x_tilde_next,
        &s.grad_prev,
        &s.grad,
    ] {
        if v.len() != n {
            return Err(Error::Data {
                oracle: "incomplete round snapshot".into(),
            });
        }
    }
    if s.q.len() != block.len() || s.q_next.len() != block.len() || s.g_prev.len() != block.len() {
        return Err(Error::Data {
            oracle: "incomplete round snapshot".into(),
        });
    }
    let mut r = CheckReport::new("dpp_bound", 1e-8);
    r.rounds = 1;
    for z in z_samples {
        r.observe(dpp_residual(s, domain, block, z)?);
    }
    Ok(r)
}

/// Residual of h(x*) + αD(x*, a) ≤ h(z) + αD(z, a) − αD(z, x*) for linear h.
pub fn pushback_residual(
    domain: &dyn MirrorDomain,
    anchor: &[f64],
    h: &[f64],
    alpha: f64,
    x_opt: &[f64],
    z: &[f64],
) -> Result<f64> {
    let lhs = linalg::dot(h, x_opt) + alpha * domain.bregman(x_opt, anchor)?;
    let rhs = linalg::dot(h, z) + alpha * domain.bregman(z, anchor)?
        - alpha * domain.bregman(z, x_opt)?;
    Ok(lhs - rhs)
}

/// Pushback of the mirror step on `instances` random (anchor, h, α), each
/// against `z_per_instance` sampled z plus z = x*.
pub fn check_pushback(
    domain: &dyn MirrorDomain,
    instances: usize,
    z_per_instance: usize,
    rng: &mut dyn RngCore,
) -> Result<CheckReport> {
    let mut r = CheckReport::new("pushback", 1e-8);
    for _ in 0..instances {
        let anchor = domain.sample(rng);
        let scale = 10f64.powf(rng.random_range(-1.0..1.0));
        let h: Vec<f64> = (0..domain.dim())
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let alpha = 10f64.powf(rng.random_range(-1.0..1.5));
        let x = domain.mirror_step(&anchor, &h, alpha)?;
        r.rounds += 1;
        r.observe(pushback_residual(domain, &anchor, &h, alpha, &x, &x)?);
        for _ in 0..z_per_instance {
            let z = domain.sample(rng);
            r.observe(pushback_residual(domain, &anchor, &h, alpha, &x, &z)?);
        }
    }
    Ok(r)
}

/// Pushback of both mirror steps of a recorded round.
pub fn check_round_pushback(
    s: &RoundSnapshot,
    domain: &dyn MirrorDomain,
    z_samples: &[Vec<f64>],
) -> Result<CheckReport> {
    let cgrad = s.constraint_term();
    let h1 = linalg::add(&s.grad_prev, &cgrad);
    let h2 = linalg::add(&s.grad, &cgrad);
    let mut r = CheckReport::new("round_pushback", 1e-8);
    r.rounds = 1;
    for z in z_samples {
        r.observe(pushback_residual(domain, &s.anchor, &h1, s.alpha, &s.x, z)?);
        r.observe(pushback_residual(
            domain,
            &s.anchor,
            &h2,
            s.alpha,
            &s.x_tilde_next,
            z,
        )?);
    }
    Ok(r)
}

fn kl(x: &[f64], y: &[f64]) -> Option<f64> {
    let mut s = 0.0;
    for (a, b) in x.iter().zip(y) {
        if *a > 0.0 {
            if *b <= 0.0 {
                return None;
            }
            s += a * (a / b).ln();
        }
    }
    Some(s)
}

/// Mixing inequalities for ỹ = (1 − ν)x̃ + ν/d:
/// KL(z, ỹ) − KL(z, x̃) ≤ ν ln d (skipped when KL(z, x̃) = ∞),
/// KL(z, ỹ) ≤ ln(d/ν), and ‖ỹ − x̃‖₁ ≤ 2ν. Tolerance 1e−9.
pub fn check_mixing(x_tilde: &[f64], nu: f64, z_samples: &[Vec<f64>]) -> CheckReport {
    let d = x_tilde.len() as f64;
    let y = algorithm::mix(x_tilde, nu);
    let mut r = CheckReport::new("mixing", 1e-9);
    r.rounds = 1;
    r.observe(linalg::norm_l1(&linalg::sub(&y, x_tilde)) - 2.0 * nu);
    for z in z_samples {
        let kzy = kl(z, &y).unwrap_or(f64::INFINITY);
        r.observe(kzy - (d / nu).ln());
        match kl(z, x_tilde) {
            Some(kzx) => r.observe(kzy - kzx - nu * d.ln()),
            None => r.skipped += 1,
        }
    }
    r
}

/// Mixing checks on every round of a simplex trace, plus ỹ_t ≥ ν/d exactly.
pub fn check_trace_mixing(
    trace: &RunTrace,
    z_per_round: usize,
    rng: &mut dyn RngCore,
    domain: &dyn MirrorDomain,
) -> Result<Vec<CheckReport>> {
    let nu = trace
        .nu
        .ok_or_else(|| Error::Argument("trace has no mixing weight".into()))?;
    let mut mixing = CheckReport::new("mixing", 1e-9);
    let mut floor = CheckReport::new("mixing_floor", 0.0);
    for rec in &trace.records {
        let d = rec.anchor.len() as f64;
        let zs: Vec<Vec<f64>> = (0..z_per_round).map(|_| domain.sample(rng)).collect();
        mixing.merge(&check_mixing(&rec.x_tilde, nu, &zs));
        let lo = nu / d;
        floor.rounds += 1;
        floor.observe(
            rec.anchor
                .iter()
                .map(|y| lo - y)
                .fold(f64::NEG_INFINITY, f64::max),
        );
    }
    Ok(vec![mixing, floor])
}

/// Residual of h(x) ≤ h(y) + ⟨∇h(y), x − y⟩ + (L/2)‖x − y‖² over pairs.
pub fn check_descent_lemma(
    name: &str,
    value: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    lipschitz: f64,
    norm: Norm,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> CheckReport {
    let mut r = CheckReport::new(name, 1e-9);
    for (x, y) in pairs {
        let diff = linalg::sub(x, y);
        let n = norm.eval(&diff);
        let res = value(x) - value(y) - linalg::dot(&grad(y), &diff) - 0.5 * lipschitz * n * n;
        r.observe(res);
    }
    r.rounds = 1;
    r
}

fn sample_pairs(
    domain: &dyn MirrorDomain,
    n: usize,
    rng: &mut dyn RngCore,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..n)
        .map(|_| (domain.sample(rng), domain.sample(rng)))
        .collect()
}

/// Descent-lemma checks for the declared L_f (at a spread of rounds) and
/// L_g (each built-in constraint). `understate` scales the declared
/// constants, for negative controls.
pub fn check_descent_for_problem(
    problem: &Problem,
    pairs: usize,
    understate: f64,
    rng: &mut dyn RngCore,
) -> Vec<CheckReport> {
    let dom: &Domain = &problem.domain;
    let norm = dom.norm();
    let pts = sample_pairs(dom, pairs, rng);
    let mut out = Vec::new();
    let seq: &LossSequence = &problem.losses;
    if !matches!(seq.family(), LossFamily::Custom(_)) {
        let l_f = seq.constants().l_f * understate;
        let horizon = seq.horizon().max(1);
        let rounds: Vec<usize> = [1, horizon / 3, horizon / 2, horizon]
            .into_iter()
            .map(|t| t.max(1))
            .collect();
        let mut rep = CheckReport::new(format!("descent_loss_{}", seq.family().name()), 1e-9);
        for t in rounds {
            let v = |x: &[f64]| seq.value(t, x);
            let g = |x: &[f64]| seq.grad(t, x);
            rep.merge(&check_descent_lemma("", &v, &g, l_f, norm, &pts));
        }
        out.push(rep);
    }
    let l_g = problem.constraints.constants().l_g * understate;
    for (k, f) in problem.constraints.functions().iter().enumerate() {
        if matches!(f, ConstraintFn::Custom(_)) {
            continue;
        }
        let v = |x: &[f64]| f.value(x);
        let g = |x: &[f64]| f.grad(x);
        out.push(check_descent_lemma(
            &format!("descent_constraint_{}", k + 1),
            &v,
            &g,
            l_g,
            norm,
            &pts,
        ));
    }
    out
}

pub const CHECKS_HEADER: [&str; 5] = ["check", "rounds", "samples", "max_residual", "pass"];

pub fn write_checks_csv<W: Write>(reports: &[CheckReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CHECKS_HEADER)?;
    for r in reports {
        w.write_record([
            r.name.clone(),
            r.rounds.to_string(),
            r.samples.to_string(),
            fmt_num(r.max_residual),
            r.pass.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
