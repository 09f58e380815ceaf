//! Online primal-dual mirror prox: the general-geometry method, the simplex
//! method with iterate mixing, and a gradient-update primal-dual baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MirrorDomain;
use crate::linalg;
use crate::metrics::{Fingerprint, RoundRecord, RunTrace};
use crate::problem::{Problem, ScheduleConstants};

/// What each round emits; also the per-round trace record.
pub type RoundOutput = RoundRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Mirror prox in a general geometry.
    Ompd,
    /// Entropic mirror prox on the simplex with mixing towards uniform.
    OmpdSimplex,
    /// Projected-gradient primal step plus dual ascent.
    PdBaseline,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Ompd => "ompd",
            Variant::OmpdSimplex => "ompd-simplex",
            Variant::PdBaseline => "pd-baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub eta: f64,
    pub gamma: f64,
    /// Mixing weight, simplex variant only.
    pub nu: Option<f64>,
    pub v_cap: f64,
}

impl HyperParams {
    /// η = max{V, L_f²}^{−1/2}, γ = max{V, L_f²}^{1/4}, ν = 1/T on the simplex.
    pub fn from_variation(v_cap: f64, l_f: f64, horizon: usize, variant: Variant) -> Result<Self> {
        if !(l_f > 0.0 && l_f.is_finite()) {
            return Err(Error::Argument(format!("L_f must be positive, got {l_f}")));
        }
        if !(v_cap >= 0.0 && v_cap.is_finite()) {
            return Err(Error::Argument(format!(
                "V_cap must be finite and nonnegative, got {v_cap}"
            )));
        }
        if horizon == 0 {
            return Err(Error::Argument("horizon must be at least 1".into()));
        }
        let m = v_cap.max(l_f * l_f);
        Ok(Self {
            eta: m.powf(-0.5),
            gamma: m.powf(0.25),
            nu: (variant == Variant::OmpdSimplex).then(|| 1.0 / horizon as f64),
            v_cap,
        })
    }
}

/// Q_k ← max{−γg_k, Q_k + γg_k}, with `scaled_g` = γ·g.
pub(crate) fn queue_update_scaled(q: &[f64], scaled_g: &[f64]) -> Vec<f64> {
    q.iter()
        .zip(scaled_g)
        .map(|(qk, sg)| (-sg).max(qk + sg))
        .collect()
}

pub fn queue_update(q: &[f64], g_prev: &[f64], gamma: f64) -> Vec<f64> {
    let scaled: Vec<f64> = g_prev.iter().map(|g| gamma * g).collect();
    queue_update_scaled(q, &scaled)
}

/// ξ = γL_g‖Q‖₁ + γ²(L_gG + H²).
pub fn xi_value(q: &[f64], gamma: f64, l_g: f64, g: f64, h: f64) -> f64 {
    gamma * l_g * linalg::norm_l1(q) + gamma * gamma * (l_g * g + h * h)
}

pub fn alpha_update(
    alpha_prev: f64,
    xi: f64,
    eta: f64,
    gamma: f64,
    c: &ScheduleConstants,
    variant: Variant,
) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Argument(format!("eta must be positive, got {eta}")));
    }
    let base = gamma * gamma * c.l_g * c.g + eta * c.l_f * c.l_f;
    let branch = match variant {
        Variant::OmpdSimplex => 3.0 * base + 2.0 / eta + 3.0 * xi,
        _ => (2.0 / c.rho) * (base + 1.0 / eta + xi),
    };
    Ok(branch.max(alpha_prev))
}

/// Non-recursive form of the α schedule, given max_{t′≤t} ‖Q(t′)‖₁.
pub fn alpha_closed_form(
    max_q_l1: f64,
    eta: f64,
    gamma: f64,
    c: &ScheduleConstants,
    variant: Variant,
) -> f64 {
    let bulk = eta * c.l_f * c.l_f + gamma * gamma * (2.0 * c.l_g * c.g + c.h * c.h);
    match variant {
        Variant::OmpdSimplex => 3.0 * bulk + 2.0 / eta + 3.0 * gamma * c.l_g * max_q_l1,
        _ => (2.0 / c.rho) * bulk + 2.0 / (c.rho * eta) + (2.0 * gamma * c.l_g / c.rho) * max_q_l1,
    }
}

/// ỹ = (1 − ν)x̃ + ν/d.
pub fn mix(x_tilde: &[f64], nu: f64) -> Vec<f64> {
    let d = x_tilde.len() as f64;
    x_tilde.iter().map(|v| (1.0 - nu) * v + nu / d).collect()
}

/// State after `t` completed rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoState {
    pub t: usize,
    /// x_t, the last decision (x₀ before any round).
    pub x_prev: Vec<f64>,
    /// x̃_{t+1}; the baseline leaves it equal to x_prev.
    pub x_tilde: Vec<f64>,
    /// Anchor used by the last round's mirror steps.
    pub anchor: Vec<f64>,
    /// Q(t), or the multipliers λ for the baseline.
    pub q: Vec<f64>,
    pub alpha: f64,
    pub xi: f64,
    pub max_q_l1: f64,
    /// g(x_t), ∇g(x_t), ∇fᵗ(x_t)
    pub g_prev: Vec<f64>,
    pub jac_prev: Vec<Vec<f64>>,
    pub grad_prev: Vec<f64>,
}

impl AlgoState {
    /// x₀ = x̃₁ = base-set center, Q(0) = 0, α₀ = 0, ∇f⁰ ≡ ∇f¹.
    pub fn init(problem: &Problem) -> Result<Self> {
        let x0 = problem.domain.initial_point();
        let (g, jac) = problem.constraints.eval(&x0)?;
        let grad = checked_grad(problem, 0, &x0)?;
        Ok(Self {
            t: 0,
            x_prev: x0.clone(),
            x_tilde: x0.clone(),
            anchor: x0,
            q: vec![0.0; problem.constraints.len()],
            alpha: 0.0,
            xi: 0.0,
            max_q_l1: 0.0,
            g_prev: g,
            jac_prev: jac,
            grad_prev: grad,
        })
    }
}

fn checked_grad(problem: &Problem, t: usize, x: &[f64]) -> Result<Vec<f64>> {
    let g = problem.losses.grad(t, x);
    if g.len() != x.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            found: g.len(),
        });
    }
    if !linalg::all_finite(&g) {
        return Err(Error::Data {
            oracle: "loss gradient".into(),
        });
    }
    Ok(g)
}

fn checked_loss(problem: &Problem, t: usize, x: &[f64]) -> Result<f64> {
    let v = problem.losses.value(t, x);
    if !v.is_finite() {
        return Err(Error::Data {
            oracle: "loss value".into(),
        });
    }
    Ok(v)
}

/// One mirror-prox round; `mixing` is ν for the simplex method.
fn prox_round(
    prev: &AlgoState,
    problem: &Problem,
    hp: &HyperParams,
    variant: Variant,
    mixing: Option<f64>,
) -> Result<(AlgoState, RoundOutput)> {
    let t = prev.t + 1;
    let gamma = hp.gamma;
    let mut c = problem.schedule_constants();
    if variant == Variant::OmpdSimplex {
        c.rho = 1.0;
    }
    let scaled_g: Vec<f64> = prev.g_prev.iter().map(|g| gamma * g).collect();
    let q = queue_update_scaled(&prev.q, &scaled_g);
    let q_l1 = linalg::norm_l1(&q);
    let xi = xi_value(&q, gamma, c.l_g, c.g, c.h);
    let alpha = alpha_update(prev.alpha, xi, hp.eta, gamma, &c, variant)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Internal(format!(
            "step-size schedule produced alpha = {alpha}"
        )));
    }

    let anchor = match mixing {
        Some(nu) => mix(&prev.x_tilde, nu),
        None => prev.x_tilde.clone(),
    };
    let mut cgrad = vec![0.0; anchor.len()];
    for ((qk, sg), row) in q.iter().zip(&scaled_g).zip(&prev.jac_prev) {
        linalg::axpy(gamma * (qk + sg), row, &mut cgrad);
    }
    let dom = &problem.domain;
    let x = dom.mirror_step(&anchor, &linalg::add(&prev.grad_prev, &cgrad), alpha)?;
    let loss = checked_loss(problem, t, &x)?;
    let grad = checked_grad(problem, t, &x)?;
    let x_tilde_next = dom.mirror_step(&anchor, &linalg::add(&grad, &cgrad), alpha)?;
    let (g_now, jac_now) = problem.constraints.eval(&x)?;

    let record = RoundRecord {
        t,
        decision: x.clone(),
        loss,
        g_values: g_now.clone(),
        q_l1,
        q_l2: linalg::norm_l2(&q),
        queue: q.clone(),
        alpha,
        xi,
        x_tilde: prev.x_tilde.clone(),
        anchor: anchor.clone(),
    };
    let state = AlgoState {
        t,
        x_prev: x,
        x_tilde: x_tilde_next,
        anchor,
        q,
        alpha,
        xi,
        max_q_l1: prev.max_q_l1.max(q_l1),
        g_prev: g_now,
        jac_prev: jac_now,
        grad_prev: grad,
    };
    Ok((state, record))
}

pub fn round_general(
    state: &AlgoState,
    problem: &Problem,
    hp: &HyperParams,
) -> Result<(AlgoState, RoundOutput)> {
    prox_round(state, problem, hp, Variant::Ompd, None)
}

pub fn round_simplex(
    state: &AlgoState,
    problem: &Problem,
    hp: &HyperParams,
) -> Result<(AlgoState, RoundOutput)> {
    let nu = hp
        .nu
        .ok_or_else(|| Error::Argument("simplex variant needs a mixing weight".into()))?;
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::Argument(format!(
            "mixing weight must lie in (0, 1], got {nu}"
        )));
    }
    prox_round(state, problem, hp, Variant::OmpdSimplex, Some(nu))
}

/// x_t = step from x_{t−1} along ∇f^{t−1}(x_{t−1}) + Σλ_k∇g_k(x_{t−1}) with
/// step size η/√t, then λ ← max{0, λ + γg(x_t)}.
pub fn baseline_pd_round(
    state: &AlgoState,
    problem: &Problem,
    hp: &HyperParams,
) -> Result<(AlgoState, RoundOutput)> {
    let t = state.t + 1;
    let alpha = (t as f64).sqrt() / hp.eta;
    let mut h = state.grad_prev.clone();
    for (l, row) in state.q.iter().zip(&state.jac_prev) {
        linalg::axpy(*l, row, &mut h);
    }
    let x = problem.domain.mirror_step(&state.x_prev, &h, alpha)?;
    let loss = checked_loss(problem, t, &x)?;
    let grad = checked_grad(problem, t, &x)?;
    let (g_now, jac_now) = problem.constraints.eval(&x)?;
    let lambda: Vec<f64> = state
        .q
        .iter()
        .zip(&g_now)
        .map(|(l, g)| (l + hp.gamma * g).max(0.0))
        .collect();
    let q_l1 = linalg::norm_l1(&lambda);
    let record = RoundRecord {
        t,
        decision: x.clone(),
        loss,
        g_values: g_now.clone(),
        q_l1,
        q_l2: linalg::norm_l2(&lambda),
        queue: lambda.clone(),
        alpha,
        xi: 0.0,
        x_tilde: state.x_prev.clone(),
        anchor: state.x_prev.clone(),
    };
    let next = AlgoState {
        t,
        x_prev: x.clone(),
        x_tilde: x.clone(),
        anchor: state.x_prev.clone(),
        q: lambda,
        alpha,
        xi: 0.0,
        max_q_l1: state.max_q_l1.max(q_l1),
        g_prev: g_now,
        jac_prev: jac_now,
        grad_prev: grad,
    };
    Ok((next, record))
}

pub fn step(
    variant: Variant,
    state: &AlgoState,
    problem: &Problem,
    hp: &HyperParams,
) -> Result<(AlgoState, RoundOutput)> {
    match variant {
        Variant::Ompd => round_general(state, problem, hp),
        Variant::OmpdSimplex => round_simplex(state, problem, hp),
        Variant::PdBaseline => baseline_pd_round(state, problem, hp),
    }
}

/// Runs `horizon` rounds from the initial state.
pub fn run(
    variant: Variant,
    problem: &Problem,
    hp: &HyperParams,
    horizon: usize,
) -> Result<RunTrace> {
    let mut state = AlgoState::init(problem)?;
    let g_initial = state.g_prev.clone();
    let mut records = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let (next, rec) = step(variant, &state, problem, hp).map_err(|e| e.at_round(t))?;
        state = next;
        records.push(rec);
    }
    let final_queue = match variant {
        Variant::PdBaseline => state.q.clone(),
        _ => queue_update(&state.q, &state.g_prev, hp.gamma),
    };
    Ok(RunTrace {
        variant,
        gamma: hp.gamma,
        eta: hp.eta,
        nu: hp.nu,
        g_initial,
        records,
        final_queue,
        fingerprint: Fingerprint::default(),
    })
}
