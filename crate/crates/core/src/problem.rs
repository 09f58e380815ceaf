//! Constraint blocks, loss sequences, their regularity constants, gradient
//! variation and the best fixed decision in hindsight.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{check_dim, Error, Result};
use crate::geometry::{BaseSet, Domain, GeometryKind, MirrorDomain, Norm};
use crate::linalg;

/// A user-supplied convex function with a gradient oracle.
pub trait ScalarOracle: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
}

/// A user-supplied time-indexed loss. `t` ranges over `1..=T`.
pub trait LossOracle: Send + Sync {
    fn value(&self, t: usize, x: &[f64]) -> f64;
    fn grad(&self, t: usize, x: &[f64]) -> Vec<f64>;
}

/// One long-term constraint g_k(x) ≤ 0.
#[derive(Clone)]
pub enum ConstraintFn {
    /// ⟨a, x⟩ − b
    Linear {
        a: Vec<f64>,
        b: f64,
    },
    /// ‖x − center‖₂² − radius²
    Quadratic {
        center: Vec<f64>,
        radius: f64,
    },
    Custom(Arc<dyn ScalarOracle>),
}

impl fmt::Debug for ConstraintFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintFn::Linear { a, b } => f
                .debug_struct("Linear")
                .field("a", a)
                .field("b", b)
                .finish(),
            ConstraintFn::Quadratic { center, radius } => f
                .debug_struct("Quadratic")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            ConstraintFn::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl ConstraintFn {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ConstraintFn::Linear { a, b } => linalg::dot(a, x) - b,
            ConstraintFn::Quadratic { center, radius } => {
                linalg::norm_sq(&linalg::sub(x, center)) - radius * radius
            }
            ConstraintFn::Custom(o) => o.value(x),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ConstraintFn::Linear { a, .. } => a.clone(),
            ConstraintFn::Quadratic { center, .. } => x
                .iter()
                .zip(center)
                .map(|(xi, ci)| 2.0 * (xi - ci))
                .collect(),
            ConstraintFn::Custom(o) => o.grad(x),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            ConstraintFn::Linear { a, .. } => Some(a.len()),
            ConstraintFn::Quadratic { center, .. } => Some(center.len()),
            ConstraintFn::Custom(_) => None,
        }
    }
}

/// Regularity constants of a constraint block: G bounds Σₖ|gₖ|, H = Σₖ Hₖ
/// bounds the Lipschitz constants, L_g bounds the gradient Lipschitz
/// constants. Overestimates are valid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintConstants {
    pub g: f64,
    pub h: f64,
    pub l_g: f64,
}

impl ConstraintConstants {
    pub const ZERO: ConstraintConstants = ConstraintConstants {
        g: 0.0,
        h: 0.0,
        l_g: 0.0,
    };
}

/// A strictly feasible point: gₖ(point) ≤ −margin for every k.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaterPoint {
    pub point: Vec<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct ConstraintBlock {
    dim: usize,
    fns: Vec<ConstraintFn>,
    constants: ConstraintConstants,
    slater: Option<SlaterPoint>,
}

impl ConstraintBlock {
    /// Block of built-in constraints with constants derived in closed form.
    pub fn new(domain: &Domain, fns: Vec<ConstraintFn>) -> Result<Self> {
        let constants = builtin_constants(&fns, domain.base(), domain.geometry().norm())?;
        Self::with_constants(domain.dim(), fns, constants)
    }

    /// Block with caller-declared constants (required for custom constraints).
    pub fn with_constants(
        dim: usize,
        fns: Vec<ConstraintFn>,
        constants: ConstraintConstants,
    ) -> Result<Self> {
        for f in &fns {
            if let Some(d) = f.dim() {
                check_dim(dim, d)?;
            }
        }
        for (name, v) in [
            ("G", constants.g),
            ("H", constants.h),
            ("L_g", constants.l_g),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Argument(format!(
                    "constraint constant {name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self {
            dim,
            fns,
            constants,
            slater: None,
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            fns: Vec::new(),
            constants: ConstraintConstants::ZERO,
            slater: None,
        }
    }

    /// Attach a Slater certificate after checking it.
    pub fn with_slater(mut self, point: Vec<f64>, margin: f64) -> Result<Self> {
        check_dim(self.dim, point.len())?;
        if !(margin > 0.0) {
            return Err(Error::Argument("Slater margin must be positive".into()));
        }
        for (k, f) in self.fns.iter().enumerate() {
            let v = f.value(&point);
            if v > -margin {
                return Err(Error::Argument(format!(
                    "Slater point fails constraint {k}: g = {v} > -{margin}"
                )));
            }
        }
        self.slater = Some(SlaterPoint { point, margin });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.fns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fns.is_empty()
    }

    pub fn functions(&self) -> &[ConstraintFn] {
        &self.fns
    }

    pub fn constants(&self) -> ConstraintConstants {
        self.constants
    }

    pub fn slater(&self) -> Option<&SlaterPoint> {
        self.slater.as_ref()
    }

    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        self.fns.iter().map(|f| f.value(x)).collect()
    }

    /// (g(x), Jacobian rows ∇gₖ(x)).
    pub fn eval(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        check_dim(self.dim, x.len())?;
        let values = self.values(x);
        let jac: Vec<Vec<f64>> = self.fns.iter().map(|f| f.grad(x)).collect();
        if !linalg::all_finite(&values) || !jac.iter().all(|r| linalg::all_finite(r)) {
            return Err(Error::Data {
                oracle: "constraint".into(),
            });
        }
        for r in &jac {
            check_dim(self.dim, r.len())?;
        }
        Ok((values, jac))
    }
}

pub fn constraint_eval(block: &ConstraintBlock, x: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    block.eval(x)
}

/// Closed-form (G, H, L_g) for built-in constraints over a base set, with
/// Lipschitz constants measured in `norm` (dual norm for gradients).
///
/// Gₖ is sup |gₖ| over the set and G = Σ Gₖ.
pub fn builtin_constants(
    fns: &[ConstraintFn],
    base: &BaseSet,
    norm: Norm,
) -> Result<ConstraintConstants> {
    let dual = norm.dual();
    let mut out = ConstraintConstants::ZERO;
    for (k, f) in fns.iter().enumerate() {
        match f {
            ConstraintFn::Linear { a, b } => {
                let (lo, hi) = base.linear_range(a)?;
                out.g += (lo - b).abs().max((hi - b).abs());
                out.h += dual.eval(a);
            }
            ConstraintFn::Quadratic { center, radius } => {
                check_dim(base.dim(), center.len())?;
                let r2 = radius * radius;
                let far = base.max_dist_from(center, Norm::L2);
                let near = base.dist_to(center)?;
                out.g += (far * far - r2).abs().max((near * near - r2).abs());
                // |g(x) − g(y)| ≤ sup‖∇g‖_* ‖x − y‖ with ∇g = 2(x − c)
                out.h += 2.0 * base.max_dist_from(center, dual);
                // ‖2(x − y)‖_* ≤ 2‖x − y‖ for (ℓ2, ℓ2) and (ℓ1, ℓ∞)
                out.l_g = out.l_g.max(2.0);
            }
            ConstraintFn::Custom(_) => {
                return Err(Error::Unsupported(format!(
                    "constraint {k} is custom; its constants must be supplied"
                )))
            }
        }
    }
    Ok(out)
}

/// Built-in objective shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// ⟨c, x⟩
    Linear { c: Vec<f64> },
    /// (x − center)ᵀ A (x − center), A symmetric positive semidefinite.
    Quadratic {
        matrix: Vec<Vec<f64>>,
        center: Vec<f64>,
    },
}

#[derive(Clone)]
pub enum LossFamily {
    Fixed(Objective),
    /// cᵗ = c + τₜ·u with τₜ = tri((t + phase)/period), tri a unit triangle
    /// wave. With period = T and phase = 0 this is c + (t/T)·u.
    LinearDrift {
        c: Vec<f64>,
        u: Vec<f64>,
        period: f64,
        phase: f64,
    },
    /// `first` on rounds where t + phase is odd, `second` otherwise.
    Alternating {
        first: Vec<f64>,
        second: Vec<f64>,
        phase: usize,
    },
    /// (x − mₜ)ᵀ Aₜ (x − mₜ) with Aₜ = A + τₜB and mₜ = m + τₜu.
    QuadraticDrift {
        matrix: Vec<Vec<f64>>,
        matrix_drift: Vec<Vec<f64>>,
        center: Vec<f64>,
        center_drift: Vec<f64>,
        period: f64,
        phase: f64,
    },
    Custom(Arc<dyn LossOracle>),
}

impl fmt::Debug for LossFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl LossFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LossFamily::Fixed(_) => "fixed",
            LossFamily::LinearDrift { .. } => "linear-drift",
            LossFamily::Alternating { .. } => "alternating",
            LossFamily::QuadraticDrift { .. } => "quadratic-drift",
            LossFamily::Custom(_) => "custom",
        }
    }
}

/// Gradient bound F and gradient Lipschitz constant L_f.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConstants {
    pub f: f64,
    pub l_f: f64,
}

/// Unit triangle wave: 0 at even integers, 1 at odd integers.
pub fn triangle(s: f64) -> f64 {
    let r = s.rem_euclid(2.0);
    if r <= 1.0 {
        r
    } else {
        2.0 - r
    }
}

#[derive(Clone)]
pub struct LossSequence {
    dim: usize,
    horizon: usize,
    family: LossFamily,
    constants: LossConstants,
    declared_variation: Option<f64>,
}

impl fmt::Debug for LossSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossSequence")
            .field("family", &self.family.name())
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("constants", &self.constants)
            .finish()
    }
}

impl LossSequence {
    /// Built-in family with constants derived for the domain's geometry.
    pub fn new(domain: &Domain, family: LossFamily, horizon: usize) -> Result<Self> {
        validate_family(&family, domain.dim())?;
        let constants = builtin_loss_constants(&family, domain)?;
        Ok(Self {
            dim: domain.dim(),
            horizon,
            family,
            constants,
            declared_variation: None,
        })
    }

    /// Any family with caller-declared constants.
    pub fn with_constants(
        dim: usize,
        family: LossFamily,
        horizon: usize,
        constants: LossConstants,
    ) -> Result<Self> {
        validate_family(&family, dim)?;
        Ok(Self {
            dim,
            horizon,
            family,
            constants,
            declared_variation: None,
        })
    }

    /// Declare V_*(T) for families without a closed form.
    pub fn with_declared_variation(mut self, v: f64) -> Self {
        self.declared_variation = Some(v);
        self
    }

    pub fn override_constants(mut self, constants: LossConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn family(&self) -> &LossFamily {
        &self.family
    }

    pub fn constants(&self) -> LossConstants {
        self.constants
    }

    /// f⁰ is identified with f¹.
    fn effective(t: usize) -> usize {
        t.max(1)
    }

    fn drift_level(t: usize, period: f64, phase: f64) -> f64 {
        triangle((t as f64 + phase) / period)
    }

    /// Gradient vector of a linear-in-x family at round t.
    fn linear_coeffs(&self, t: usize) -> Option<Vec<f64>> {
        let t = Self::effective(t);
        match &self.family {
            LossFamily::Fixed(Objective::Linear { c }) => Some(c.clone()),
            LossFamily::LinearDrift {
                c,
                u,
                period,
                phase,
            } => {
                let tau = Self::drift_level(t, *period, *phase);
                Some(c.iter().zip(u).map(|(ci, ui)| ci + tau * ui).collect())
            }
            LossFamily::Alternating {
                first,
                second,
                phase,
            } => Some(if (t + phase) % 2 == 1 {
                first.clone()
            } else {
                second.clone()
            }),
            _ => None,
        }
    }

    /// (Aₜ, mₜ) of a quadratic family at round t.
    fn quadratic_terms(&self, t: usize) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        let t = Self::effective(t);
        match &self.family {
            LossFamily::Fixed(Objective::Quadratic { matrix, center }) => {
                Some((matrix.clone(), center.clone()))
            }
            LossFamily::QuadraticDrift {
                matrix,
                matrix_drift,
                center,
                center_drift,
                period,
                phase,
            } => {
                let tau = Self::drift_level(t, *period, *phase);
                let a = linalg::mat_add_scaled(matrix, tau, matrix_drift);
                let m = center
                    .iter()
                    .zip(center_drift)
                    .map(|(c, u)| c + tau * u)
                    .collect();
                Some((a, m))
            }
            _ => None,
        }
    }

    pub fn value(&self, t: usize, x: &[f64]) -> f64 {
        if let Some(c) = self.linear_coeffs(t) {
            return linalg::dot(&c, x);
        }
        if let Some((a, m)) = self.quadratic_terms(t) {
            let d = linalg::sub(x, &m);
            return linalg::dot(&d, &linalg::mat_vec(&a, &d));
        }
        match &self.family {
            LossFamily::Custom(o) => o.value(Self::effective(t), x),
            _ => unreachable!("every built-in family is linear or quadratic"),
        }
    }

    pub fn grad(&self, t: usize, x: &[f64]) -> Vec<f64> {
        if let Some(c) = self.linear_coeffs(t) {
            return c;
        }
        if let Some((a, m)) = self.quadratic_terms(t) {
            let d = linalg::sub(x, &m);
            return linalg::scale(2.0, &linalg::mat_vec(&a, &d));
        }
        match &self.family {
            LossFamily::Custom(o) => o.grad(Self::effective(t), x),
            _ => unreachable!("every built-in family is linear or quadratic"),
        }
    }

    /// Σ_{t=1}^{T} fᵗ as an explicit quadratic form, for built-in families.
    pub fn cumulative_form(&self) -> Option<QuadraticForm> {
        if matches!(self.family, LossFamily::Custom(_)) {
            return None;
        }
        let d = self.dim;
        let mut form = QuadraticForm::zero(d);
        if let LossFamily::Fixed(obj) = &self.family {
            form.add_objective(obj, self.horizon as f64);
            return Some(form);
        }
        for t in 1..=self.horizon {
            if let Some(c) = self.linear_coeffs(t) {
                linalg::axpy(1.0, &c, &mut form.linear);
            } else if let Some((a, m)) = self.quadratic_terms(t) {
                form.add_objective(
                    &Objective::Quadratic {
                        matrix: a,
                        center: m,
                    },
                    1.0,
                );
            }
        }
        Some(form)
    }
}

fn validate_family(family: &LossFamily, dim: usize) -> Result<()> {
    let square = |m: &Vec<Vec<f64>>| -> Result<()> {
        check_dim(dim, m.len())?;
        for r in m {
            check_dim(dim, r.len())?;
        }
        if !linalg::is_symmetric(m, 1e-12) {
            return Err(Error::Argument("loss matrix must be symmetric".into()));
        }
        Ok(())
    };
    let psd = |m: &Vec<Vec<f64>>| -> Result<()> {
        let lo = linalg::sym_eigenvalues(m).first().copied().unwrap_or(0.0);
        if lo < -1e-12 {
            return Err(Error::Argument(format!(
                "loss matrix must be positive semidefinite (min eigenvalue {lo})"
            )));
        }
        Ok(())
    };
    let period_ok = |p: f64| -> Result<()> {
        if p.is_finite() && p > 0.0 {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "drift period must be positive, got {p}"
            )))
        }
    };
    match family {
        LossFamily::Fixed(Objective::Linear { c }) => check_dim(dim, c.len()),
        LossFamily::Fixed(Objective::Quadratic { matrix, center }) => {
            check_dim(dim, center.len())?;
            square(matrix)?;
            psd(matrix)
        }
        LossFamily::LinearDrift { c, u, period, .. } => {
            check_dim(dim, c.len())?;
            check_dim(dim, u.len())?;
            period_ok(*period)
        }
        LossFamily::Alternating { first, second, .. } => {
            check_dim(dim, first.len())?;
            check_dim(dim, second.len())
        }
        LossFamily::QuadraticDrift {
            matrix,
            matrix_drift,
            center,
            center_drift,
            period,
            ..
        } => {
            check_dim(dim, center.len())?;
            check_dim(dim, center_drift.len())?;
            square(matrix)?;
            square(matrix_drift)?;
            period_ok(*period)?;
            // Aₜ is a convex combination of A and A + B
            psd(matrix)?;
            psd(&linalg::mat_add_scaled(matrix, 1.0, matrix_drift))
        }
        LossFamily::Custom(_) => Ok(()),
    }
}

/// Operator norm of a symmetric matrix from `norm` to its dual.
fn op_norm(m: &[Vec<f64>], norm: Norm) -> f64 {
    match norm {
        Norm::L2 => linalg::sym_spectral_norm(m),
        // ‖Mv‖∞ ≤ max|Mᵢⱼ|·‖v‖₁
        Norm::L1 => linalg::max_abs_entry(m),
        // ‖Mv‖₁ ≤ (Σ|Mᵢⱼ|)·‖v‖∞
        Norm::LInf => m.iter().flatten().map(|v| v.abs()).sum(),
    }
}

fn builtin_loss_constants(family: &LossFamily, domain: &Domain) -> Result<LossConstants> {
    let norm = domain.geometry().norm();
    let dual = norm.dual();
    let base = domain.base();
    Ok(match family {
        LossFamily::Fixed(Objective::Linear { c }) => LossConstants {
            f: dual.eval(c),
            l_f: 0.0,
        },
        LossFamily::LinearDrift { c, u, .. } => LossConstants {
            // ‖c + τu‖ is convex in τ ∈ [0, 1]
            f: dual.eval(c).max(dual.eval(&linalg::add(c, u))),
            l_f: 0.0,
        },
        LossFamily::Alternating { first, second, .. } => LossConstants {
            f: dual.eval(first).max(dual.eval(second)),
            l_f: 0.0,
        },
        LossFamily::Fixed(Objective::Quadratic { matrix, center }) => {
            let op = op_norm(matrix, norm);
            let f = if matches!(base, BaseSet::Simplex { .. }) {
                // convex in x, so the sup over the simplex is at a vertex
                (0..domain.dim())
                    .map(|i| {
                        let mut e = linalg::scale(-1.0, center);
                        e[i] += 1.0;
                        dual.eval(&linalg::scale(2.0, &linalg::mat_vec(matrix, &e)))
                    })
                    .fold(0.0, f64::max)
            } else {
                2.0 * op * base.max_dist_from(center, norm)
            };
            LossConstants { f, l_f: 2.0 * op }
        }
        LossFamily::QuadraticDrift {
            matrix,
            matrix_drift,
            center,
            center_drift,
            ..
        } => {
            // the operator norm is convex in τ, so its max over [0, 1] is at an end
            let op = op_norm(matrix, norm).max(op_norm(
                &linalg::mat_add_scaled(matrix, 1.0, matrix_drift),
                norm,
            ));
            let reach = base.max_dist_from(center, norm) + norm.eval(center_drift);
            LossConstants {
                f: 2.0 * op * reach,
                l_f: 2.0 * op,
            }
        }
        LossFamily::Custom(_) => {
            return Err(Error::Unsupported(
                "custom loss family: constants must be supplied".into(),
            ))
        }
    })
}

/// V_*(T) = Σ_{t=1}^{T} max_x ‖∇fᵗ(x) − ∇fᵗ⁻¹(x)‖_*², with f⁰ ≡ f¹.
///
/// Exact for families whose gradient difference does not depend on x; a
/// certified overestimate for quadratic drift with a moving curvature.
pub fn gradient_variation(seq: &LossSequence, domain: &Domain) -> Result<f64> {
    let dual = domain.geometry().dual_norm();
    let norm = domain.geometry().norm();
    let horizon = seq.horizon();
    match seq.family() {
        LossFamily::Fixed(_) => Ok(0.0),
        LossFamily::LinearDrift { .. } | LossFamily::Alternating { .. } => {
            let mut v = 0.0;
            let mut prev = seq.linear_coeffs(1).expect("linear family");
            for t in 2..=horizon {
                let cur = seq.linear_coeffs(t).expect("linear family");
                let n = dual.eval(&linalg::sub(&cur, &prev));
                v += n * n;
                prev = cur;
            }
            Ok(v)
        }
        LossFamily::QuadraticDrift { matrix_drift, .. } => {
            // ∇fᵗ − ∇fᵗ⁻¹ = 2Δτ·B x − 2(Aₜmₜ − Aₜ₋₁mₜ₋₁)
            let op_b = op_norm(matrix_drift, norm);
            let reach = domain.base().max_norm(norm);
            let mut v = 0.0;
            let (mut a_prev, mut m_prev) = seq.quadratic_terms(1).expect("quadratic family");
            let mut tau_prev = level_of(seq, 1);
            for t in 2..=horizon {
                let (a, m) = seq.quadratic_terms(t).expect("quadratic family");
                let tau = level_of(seq, t);
                let w = linalg::sub(&linalg::mat_vec(&a, &m), &linalg::mat_vec(&a_prev, &m_prev));
                let bound = 2.0 * (tau - tau_prev).abs() * op_b * reach + 2.0 * dual.eval(&w);
                v += bound * bound;
                a_prev = a;
                m_prev = m;
                tau_prev = tau;
            }
            Ok(v)
        }
        LossFamily::Custom(_) => seq.declared_variation.ok_or_else(|| {
            Error::Unsupported("custom loss family without a declared gradient variation".into())
        }),
    }
}

fn level_of(seq: &LossSequence, t: usize) -> f64 {
    match seq.family() {
        LossFamily::QuadraticDrift { period, phase, .. }
        | LossFamily::LinearDrift { period, phase, .. } => {
            LossSequence::drift_level(LossSequence::effective(t), *period, *phase)
        }
        _ => 0.0,
    }
}

/// Lower estimate of V_*(T): the max over x is replaced by a max over
/// `budget` sampled points.
pub fn sampled_variation(
    seq: &LossSequence,
    domain: &dyn MirrorDomain,
    budget: usize,
    rng: &mut dyn RngCore,
) -> f64 {
    let points: Vec<Vec<f64>> = (0..budget.max(1)).map(|_| domain.sample(rng)).collect();
    variation_over_points(seq, domain.dual_norm(), &points, seq.horizon())
}

pub(crate) fn variation_over_points(
    seq: &LossSequence,
    dual: Norm,
    points: &[Vec<f64>],
    horizon: usize,
) -> f64 {
    let mut v = 0.0;
    for t in 2..=horizon {
        let m = points
            .iter()
            .map(|x| {
                let n = dual.eval(&linalg::sub(&seq.grad(t, x), &seq.grad(t - 1, x)));
                n * n
            })
            .fold(0.0, f64::max);
        v += m;
    }
    v
}

/// D(x, y) ≤ R² over the base set; `None` when unbounded (KL on the simplex).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBound {
    pub r: f64,
}

impl DomainBound {
    pub fn of(domain: &Domain) -> Option<Self> {
        if domain.geometry().kind() == GeometryKind::Entropic {
            return None;
        }
        let r2 = match domain.base() {
            BaseSet::Ball { radius, .. } => 2.0 * radius * radius,
            BaseSet::Boxed { lower, upper } => {
                0.5 * lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| (u - l) * (u - l))
                    .sum::<f64>()
            }
            BaseSet::Simplex { .. } => 1.0,
        };
        Some(DomainBound { r: r2.sqrt() })
    }

    /// sup ‖x − y‖ implied by the bound: √(2R²/ρ).
    pub fn diameter(&self, rho: f64) -> f64 {
        (2.0 * self.r * self.r / rho).sqrt()
    }
}

/// xᵀMx + ⟨q, x⟩ + c with M symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub quad: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl QuadraticForm {
    pub fn zero(d: usize) -> Self {
        Self {
            quad: vec![vec![0.0; d]; d],
            linear: vec![0.0; d],
            constant: 0.0,
        }
    }

    fn add_objective(&mut self, obj: &Objective, weight: f64) {
        match obj {
            Objective::Linear { c } => linalg::axpy(weight, c, &mut self.linear),
            Objective::Quadratic { matrix, center } => {
                // (x − m)ᵀA(x − m) = xᵀAx − 2⟨Am, x⟩ + mᵀAm
                let am = linalg::mat_vec(matrix, center);
                for (row, arow) in self.quad.iter_mut().zip(matrix) {
                    linalg::axpy(weight, arow, row);
                }
                linalg::axpy(-2.0 * weight, &am, &mut self.linear);
                self.constant += weight * linalg::dot(center, &am);
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        linalg::dot(x, &linalg::mat_vec(&self.quad, x))
            + linalg::dot(&self.linear, x)
            + self.constant
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = linalg::scale(2.0, &linalg::mat_vec(&self.quad, x));
        linalg::axpy(1.0, &self.linear, &mut g);
        g
    }

    fn scaled(mut self, s: f64) -> Self {
        for r in self.quad.iter_mut() {
            for v in r.iter_mut() {
                *v *= s;
            }
        }
        for v in self.linear.iter_mut() {
            *v *= s;
        }
        self.constant *= s;
        self
    }
}

/// Averaged objective (1/T)·Σₜ fᵗ used by the comparator solver.
enum Averaged<'a> {
    Form(QuadraticForm),
    Oracle(&'a LossSequence),
}

impl Averaged<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Averaged::Form(q) => q.value(x),
            Averaged::Oracle(s) => {
                let t = s.horizon().max(1);
                (1..=t).map(|i| s.value(i, x)).sum::<f64>() / t as f64
            }
        }
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Averaged::Form(q) => q.grad(x),
            Averaged::Oracle(s) => {
                let t = s.horizon().max(1);
                let mut g = vec![0.0; x.len()];
                for i in 1..=t {
                    linalg::axpy(1.0 / t as f64, &s.grad(i, x), &mut g);
                }
                g
            }
        }
    }
}

/// Feasibility tolerance of the comparator.
pub const COMPARATOR_FEAS_TOL: f64 = 1e-8;

/// x* ∈ argmin over base ∩ {g ≤ 0} of Σₜ fᵗ(x).
///
/// Solved by an augmented-Lagrangian outer loop over accelerated projected
/// gradient inner solves on the averaged loss. A slightly infeasible result
/// is pulled back by bisection on the segment towards the Slater point.
pub fn hindsight_comparator(
    seq: &LossSequence,
    block: &ConstraintBlock,
    domain: &dyn MirrorDomain,
) -> Result<Vec<f64>> {
    check_dim(domain.dim(), seq.dim())?;
    check_dim(domain.dim(), block.dim())?;
    let objective = match seq.cumulative_form() {
        Some(f) => Averaged::Form(f.scaled(1.0 / seq.horizon().max(1) as f64)),
        None => Averaged::Oracle(seq),
    };
    let mut x = domain.initial_point();
    if let Some(s) = block.slater() {
        x = s.point.clone();
    }
    let k = block.len();
    let mut lambda = vec![0.0; k];
    let mut mu = 10.0;
    let mut prev_viol = f64::INFINITY;
    let max_viol =
        |x: &[f64]| -> (usize, f64) {
            block.values(x).iter().copied().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            )
        };

    let mut inner_residual = f64::INFINITY;
    for _outer in 0..80 {
        let (xn, res) = {
            let lam = lambda.clone();
            let f = |z: &[f64]| -> f64 {
                let mut v = objective.value(z);
                for (f, l) in block.functions().iter().zip(&lam) {
                    let s = (l + mu * f.value(z)).max(0.0);
                    v += (s * s - l * l) / (2.0 * mu);
                }
                v
            };
            let g = |z: &[f64]| -> Vec<f64> {
                let mut gr = objective.grad(z);
                for (f, l) in block.functions().iter().zip(&lam) {
                    let s = (l + mu * f.value(z)).max(0.0);
                    if s > 0.0 {
                        linalg::axpy(s, &f.grad(z), &mut gr);
                    }
                }
                gr
            };
            accelerated_projected_gradient(&f, &g, domain, x.clone(), 1e-11, 20_000)?
        };
        x = xn;
        inner_residual = res;
        if k == 0 {
            break;
        }
        let gv = block.values(&x);
        let viol = gv.iter().fold(0.0f64, |m, v| m.max(*v));
        let comp = gv
            .iter()
            .zip(&lambda)
            .map(|(g, l)| (l * g).abs())
            .fold(0.0, f64::max);
        for (l, g) in lambda.iter_mut().zip(&gv) {
            *l = (*l + mu * g).max(0.0);
        }
        if viol <= 1e-9 && comp <= 1e-8 && inner_residual <= 1e-7 {
            break;
        }
        if viol > 1e-9 && viol > 0.25 * prev_viol {
            mu = (mu * 10.0).min(1e6);
        }
        prev_viol = viol;
    }
    if inner_residual > 1e-6 {
        return Err(Error::NonConvergence {
            residual: inner_residual,
        });
    }

    let (worst, v) = max_viol(&x);
    if k == 0 || v <= 0.0 {
        return Ok(x);
    }
    if v > 1e-6 {
        return Err(Error::Infeasible {
            constraint: worst,
            violation: v,
        });
    }
    match block.slater() {
        Some(s) => Ok(pull_back_to_feasible(block, &s.point, &x)),
        None if v <= COMPARATOR_FEAS_TOL => Ok(x),
        None => Err(Error::Infeasible {
            constraint: worst,
            violation: v,
        }),
    }
}

/// Largest θ ∈ [0, 1] with g(x̌ + θ(x − x̌)) ≤ 0, found by bisection (the
/// feasible θ form an interval containing 0 by convexity).
fn pull_back_to_feasible(block: &ConstraintBlock, slater: &[f64], x: &[f64]) -> Vec<f64> {
    let at = |th: f64| -> Vec<f64> {
        slater
            .iter()
            .zip(x)
            .map(|(s, xi)| s + th * (xi - s))
            .collect()
    };
    let feasible = |p: &[f64]| block.values(p).iter().all(|v| *v <= 0.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if feasible(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

/// FISTA with backtracking and adaptive restart over the domain's Euclidean
/// projection. Returns the iterate and its gradient-mapping norm.
fn accelerated_projected_gradient(
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    domain: &dyn MirrorDomain,
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64)> {
    let mut x = domain.project(&x0)?;
    let mut y = x.clone();
    let mut tk: f64 = 1.0;
    let mut lip = 1.0;
    let mut fx = f(&x);
    let mut residual = f64::INFINITY;
    let mut momentum_reset = true;
    for _ in 0..max_iter {
        let gy = grad(&y);
        let fy = f(&y);
        if !linalg::all_finite(&gy) || !fy.is_finite() {
            return Err(Error::Data {
                oracle: "comparator objective".into(),
            });
        }
        let (xn, fxn) = loop {
            let cand = domain.project(&linalg::sub(&y, &linalg::scale(1.0 / lip, &gy)))?;
            let d = linalg::sub(&cand, &y);
            let fc = f(&cand);
            let model = fy + linalg::dot(&gy, &d) + 0.5 * lip * linalg::norm_sq(&d);
            if fc <= model + 1e-14 * (1.0 + fy.abs()) || lip > 1e14 {
                break (cand, fc);
            }
            lip *= 2.0;
        };
        residual = lip * linalg::norm_l2(&linalg::sub(&xn, &y));
        // A rise after a momentum step restarts; a rise after a plain step
        // is rounding noise and the step is taken anyway.
        if fxn > fx && !momentum_reset {
            y = x.clone();
            tk = 1.0;
            momentum_reset = true;
            if residual <= tol {
                break;
            }
            continue;
        }
        momentum_reset = false;
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        let beta = (tk - 1.0) / tn;
        y = xn.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        let step = linalg::norm_l2(&linalg::sub(&xn, &x));
        x = xn;
        fx = fxn;
        tk = tn;
        lip = (lip * 0.9).max(1e-12);
        if residual <= tol || (step <= 1e-16 && residual <= 1e3 * tol) {
            break;
        }
    }
    // residual at the returned point
    let gx = grad(&x);
    let px = domain.project(&linalg::sub(&x, &linalg::scale(1.0 / lip, &gx)))?;
    let res = lip * linalg::norm_l2(&linalg::sub(&px, &x));
    Ok((x, res.min(residual.max(res))))
}

/// Declared constants driving the step-size schedule. ρ is the strong
/// convexity modulus of the geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConstants {
    pub rho: f64,
    pub l_f: f64,
    pub l_g: f64,
    pub g: f64,
    pub h: f64,
}

/// Domain, losses and constraints of one instance.
#[derive(Debug, Clone)]
pub struct Problem {
    pub domain: Domain,
    pub losses: LossSequence,
    pub constraints: ConstraintBlock,
}

impl Problem {
    pub fn new(domain: Domain, losses: LossSequence, constraints: ConstraintBlock) -> Result<Self> {
        check_dim(domain.dim(), losses.dim())?;
        check_dim(domain.dim(), constraints.dim())?;
        Ok(Self {
            domain,
            losses,
            constraints,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn horizon(&self) -> usize {
        self.losses.horizon()
    }

    /// Schedule constants. A linear loss has L_f = 0; any positive value is
    /// then a valid Lipschitz constant and 1 is used.
    pub fn schedule_constants(&self) -> ScheduleConstants {
        let c = self.constraints.constants();
        let l_f = self.losses.constants().l_f;
        ScheduleConstants {
            rho: self.domain.modulus(),
            l_f: if l_f > 0.0 { l_f } else { 1.0 },
            l_g: c.l_g,
            g: c.g,
            h: c.h,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ball2() -> Domain {
        Domain::euclidean(BaseSet::unit_ball(2).unwrap()).unwrap()
    }

    fn lin(a: &[f64], b: f64) -> ConstraintFn {
        ConstraintFn::Linear { a: a.to_vec(), b }
    }

    fn central_diff(f: &ConstraintFn, x: &[f64], h: f64) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut p = x.to_vec();
                let mut m = x.to_vec();
                p[i] += h;
                m[i] -= h;
                (f.value(&p) - f.value(&m)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn linear_constraint_eval() {
        let dom = ball2();
        let block = ConstraintBlock::new(&dom, vec![lin(&[1.0, 1.0], 1.0)]).unwrap();
        let (v, j) = constraint_eval(&block, &[0.5, 0.5]).unwrap();
        assert_eq!(v, vec![0.0]);
        assert_eq!(j, vec![vec![1.0, 1.0]]);
        let (v, _) = constraint_eval(&block, &[0.0, 0.0]).unwrap();
        assert_eq!(v, vec![-1.0]);
        assert!(matches!(
            constraint_eval(&block, &[0.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn quadratic_constraint_eval_matches_finite_differences() {
        let f = ConstraintFn::Quadratic {
            center: vec![0.0, 0.0],
            radius: 0.5,
        };
        let x = [0.5, 0.0];
        assert_eq!(f.value(&x), 0.0);
        assert_eq!(f.grad(&x), vec![1.0, 0.0]);
        let fd = central_diff(&f, &x, 1e-6);
        for (a, b) in fd.iter().zip(f.grad(&x)) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn builtin_constants_examples() {
        let base = BaseSet::unit_ball(2).unwrap();
        let c = builtin_constants(&[lin(&[1.0, 0.0], 0.3)], &base, Norm::L2).unwrap();
        assert!((c.g - 1.3).abs() < 1e-15);
        assert_eq!(c.h, 1.0);
        assert_eq!(c.l_g, 0.0);

        let c = builtin_constants(&[lin(&[0.0, 0.0], 0.0)], &base, Norm::L2).unwrap();
        assert_eq!(c, ConstraintConstants::ZERO);

        let r = 0.8;
        let base = BaseSet::ball(vec![0.0, 0.0], r).unwrap();
        let q = ConstraintFn::Quadratic {
            center: vec![0.0, 0.0],
            radius: r,
        };
        let c = builtin_constants(&[q], &base, Norm::L2).unwrap();
        assert_eq!(c.l_g, 2.0);
    }

    #[test]
    fn builtin_constants_reject_custom() {
        struct Zero;
        impl ScalarOracle for Zero {
            fn value(&self, _: &[f64]) -> f64 {
                0.0
            }
            fn grad(&self, x: &[f64]) -> Vec<f64> {
                vec![0.0; x.len()]
            }
        }
        let base = BaseSet::unit_ball(2).unwrap();
        let r = builtin_constants(&[ConstraintFn::Custom(Arc::new(Zero))], &base, Norm::L2);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    /// Sampled validation of declared constants over each built-in family and base.
    #[test]
    fn constraint_constants_hold_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cases: Vec<(Domain, Vec<ConstraintFn>)> = vec![
            (
                Domain::euclidean(BaseSet::ball(vec![0.3, -0.2, 0.1], 1.3).unwrap()).unwrap(),
                vec![
                    lin(&[1.0, -2.0, 0.5], 0.3),
                    ConstraintFn::Quadratic {
                        center: vec![0.5, 0.5, 0.0],
                        radius: 0.7,
                    },
                ],
            ),
            (
                Domain::euclidean(BaseSet::boxed(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap())
                    .unwrap(),
                vec![
                    lin(&[0.5, 1.0], 1.0),
                    ConstraintFn::Quadratic {
                        center: vec![3.0, 0.0],
                        radius: 1.0,
                    },
                ],
            ),
            (
                Domain::entropic_simplex(4).unwrap(),
                vec![
                    lin(&[1.0, -1.0, 0.5, 0.0], 0.2),
                    ConstraintFn::Quadratic {
                        center: vec![0.25; 4],
                        radius: 0.3,
                    },
                ],
            ),
        ];
        for (dom, fns) in cases {
            let block = ConstraintBlock::new(&dom, fns.clone()).unwrap();
            let c = block.constants();
            let norm = dom.geometry().norm();
            let dual = norm.dual();
            for _ in 0..1000 {
                let x = dom.sample(&mut rng);
                let y = dom.sample(&mut rng);
                let gx = block.values(&x);
                let gy = block.values(&y);
                assert!(gx.iter().map(|v| v.abs()).sum::<f64>() <= c.g * (1.0 + 1e-9));
                let dist = norm.eval(&linalg::sub(&x, &y));
                let hk = builtin_constants(&fns[..1], dom.base(), norm).unwrap().h;
                assert!((gx[0] - gy[0]).abs() <= hk * dist * (1.0 + 1e-9) + 1e-15);
                let hk = builtin_constants(&fns[1..], dom.base(), norm).unwrap().h;
                assert!((gx[1] - gy[1]).abs() <= hk * dist * (1.0 + 1e-9) + 1e-15);
                for f in &fns {
                    let d = dual.eval(&linalg::sub(&f.grad(&x), &f.grad(&y)));
                    assert!(d <= c.l_g * dist * (1.0 + 1e-9) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn slater_certificate_checked() {
        let dom = ball2();
        let block = ConstraintBlock::new(&dom, vec![lin(&[1.0, 0.0], 0.3)]).unwrap();
        assert!(block.clone().with_slater(vec![0.0, 0.0], 0.3).is_ok());
        assert!(block.with_slater(vec![0.1, 0.0], 0.3).is_err());
    }

    fn seq(dom: &Domain, fam: LossFamily, t: usize) -> LossSequence {
        LossSequence::new(dom, fam, t).unwrap()
    }

    #[test]
    fn variation_of_fixed_is_zero() {
        let dom = ball2();
        let s = seq(
            &dom,
            LossFamily::Fixed(Objective::Linear { c: vec![1.0, 2.0] }),
            50,
        );
        assert_eq!(gradient_variation(&s, &dom).unwrap(), 0.0);
    }

    /// Brute-force oracle: per-step max over sampled x of the squared dual
    /// gradient difference.
    fn brute_force_variation(s: &LossSequence, dom: &Domain, n: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| dom.sample(&mut rng)).collect();
        let dual = dom.geometry().dual_norm();
        let mut v = 0.0;
        for t in 2..=s.horizon() {
            let mut m: f64 = 0.0;
            for x in &pts {
                let d = dual.eval(&linalg::sub(&s.grad(t, x), &s.grad(t - 1, x)));
                m = m.max(d * d);
            }
            v += m;
        }
        v
    }

    #[test]
    fn variation_of_alternating_linear() {
        let dom = ball2();
        let c = vec![1.0, 0.0];
        let c2 = vec![0.0, -1.0];
        let s = seq(
            &dom,
            LossFamily::Alternating {
                first: c.clone(),
                second: c2.clone(),
                phase: 0,
            },
            10,
        );
        let v = gradient_variation(&s, &dom).unwrap();
        // 9 · ‖c − c′‖² = 9 · 2
        assert!((v - 18.0).abs() < 1e-12);
        assert!((brute_force_variation(&s, &dom, 50) - 18.0).abs() < 1e-12);
    }

    #[test]
    fn variation_of_linear_drift() {
        let dom = ball2();
        let t = 40;
        let u = vec![2.0, -1.0];
        let s = seq(
            &dom,
            LossFamily::LinearDrift {
                c: vec![0.5, 0.5],
                u: u.clone(),
                period: t as f64,
                phase: 0.0,
            },
            t,
        );
        let v = gradient_variation(&s, &dom).unwrap();
        let expect = (t - 1) as f64 * linalg::norm_sq(&u) / (t * t) as f64;
        assert!((v - expect).abs() < 1e-12, "{v} vs {expect}");
        assert!((brute_force_variation(&s, &dom, 20) - expect).abs() < 1e-12);
        // gradient at round t is c + (t/T)u
        let g = s.grad(10, &[0.0, 0.0]);
        assert!((g[0] - (0.5 + 0.25 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn variation_is_additive_over_concatenation() {
        // alternating over T = 12 equals the sum over [1..6] and [6..12]
        let dom = ball2();
        let fam = |phase| LossFamily::Alternating {
            first: vec![1.0, 0.0],
            second: vec![0.3, 0.4],
            phase,
        };
        let whole = gradient_variation(&seq(&dom, fam(0), 12), &dom).unwrap();
        let head = gradient_variation(&seq(&dom, fam(0), 6), &dom).unwrap();
        // second half starts at t = 6 (shift by 5 keeps parity: phase 5)
        let tail = gradient_variation(&seq(&dom, fam(5), 7), &dom).unwrap();
        assert!((whole - head - tail).abs() < 1e-12);
    }

    #[test]
    fn quadratic_drift_variation_is_an_overestimate() {
        let dom = Domain::euclidean(BaseSet::unit_ball(2).unwrap()).unwrap();
        let fam = LossFamily::QuadraticDrift {
            matrix: vec![vec![1.0, 0.2], vec![0.2, 0.5]],
            matrix_drift: vec![vec![0.5, 0.0], vec![0.0, -0.2]],
            center: vec![0.1, 0.0],
            center_drift: vec![0.0, 0.4],
            period: 7.0,
            phase: 0.0,
        };
        let s = seq(&dom, fam, 30);
        let over = gradient_variation(&s, &dom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let under = sampled_variation(&s, &dom, 1000, &mut rng);
        assert!(under > 0.0);
        assert!(under <= over + 1e-12, "{under} > {over}");
    }

    #[test]
    fn loss_constants_hold_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let euclid = Domain::euclidean(BaseSet::ball(vec![0.1, 0.0, -0.1], 1.2).unwrap()).unwrap();
        let simplex = Domain::entropic_simplex(3).unwrap();
        let fams = || {
            vec![
                LossFamily::Fixed(Objective::Quadratic {
                    matrix: vec![
                        vec![2.0, 0.5, 0.0],
                        vec![0.5, 1.0, 0.1],
                        vec![0.0, 0.1, 0.3],
                    ],
                    center: vec![0.3, -0.2, 0.5],
                }),
                LossFamily::LinearDrift {
                    c: vec![1.0, -1.0, 0.0],
                    u: vec![0.0, 2.0, 1.0],
                    period: 5.0,
                    phase: 0.0,
                },
                LossFamily::QuadraticDrift {
                    matrix: vec![
                        vec![1.0, 0.0, 0.0],
                        vec![0.0, 1.0, 0.0],
                        vec![0.0, 0.0, 1.0],
                    ],
                    matrix_drift: vec![
                        vec![0.5, 0.2, 0.0],
                        vec![0.2, -0.5, 0.0],
                        vec![0.0, 0.0, 0.0],
                    ],
                    center: vec![0.2, 0.2, 0.2],
                    center_drift: vec![0.5, 0.0, -0.5],
                    period: 9.0,
                    phase: 1.5,
                },
            ]
        };
        for dom in [euclid, simplex] {
            for fam in fams() {
                let s = seq(&dom, fam, 20);
                let c = s.constants();
                let norm = dom.geometry().norm();
                let dual = norm.dual();
                for _ in 0..1000 {
                    let t = rng.random_range(1..=20);
                    let x = dom.sample(&mut rng);
                    let y = dom.sample(&mut rng);
                    let gx = s.grad(t, &x);
                    assert!(dual.eval(&gx) <= c.f * (1.0 + 1e-9) + 1e-15);
                    let d = dual.eval(&linalg::sub(&gx, &s.grad(t, &y)));
                    let dist = norm.eval(&linalg::sub(&x, &y));
                    assert!(d <= c.l_f * dist * (1.0 + 1e-9) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn non_psd_matrix_rejected() {
        let dom = ball2();
        let r = LossSequence::new(
            &dom,
            LossFamily::Fixed(Objective::Quadratic {
                matrix: vec![vec![1.0, 0.0], vec![0.0, -1.0]],
                center: vec![0.0, 0.0],
            }),
            3,
        );
        assert!(matches!(r, Err(Error::Argument(_))));
    }

    #[test]
    fn cumulative_form_matches_oracle_sum() {
        let dom = ball2();
        let s = seq(
            &dom,
            LossFamily::QuadraticDrift {
                matrix: vec![vec![1.0, 0.1], vec![0.1, 0.5]],
                matrix_drift: vec![vec![0.3, 0.0], vec![0.0, 0.2]],
                center: vec![0.2, -0.3],
                center_drift: vec![0.1, 0.4],
                period: 3.0,
                phase: 0.5,
            },
            11,
        );
        let form = s.cumulative_form().unwrap();
        let x = [0.3, -0.7];
        let direct: f64 = (1..=11).map(|t| s.value(t, &x)).sum();
        assert!((form.value(&x) - direct).abs() < 1e-12);
    }

    #[test]
    fn domain_bounds() {
        let dom = ball2();
        let b = DomainBound::of(&dom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x = dom.sample(&mut rng);
            let y = dom.sample(&mut rng);
            assert!(dom.bregman(&x, &y).unwrap() <= b.r * b.r * (1.0 + 1e-9));
        }
        assert!((b.diameter(1.0) - 2.0).abs() < 1e-12);
        assert!(DomainBound::of(&Domain::entropic_simplex(3).unwrap()).is_none());
    }

    #[test]
    fn comparator_radial_projection() {
        let dom = ball2();
        let s = seq(
            &dom,
            LossFamily::Fixed(Objective::Quadratic {
                matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                center: vec![2.0, 0.0],
            }),
            10,
        );
        let x = hindsight_comparator(&s, &ConstraintBlock::empty(2), &dom).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-6 && x[1].abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn comparator_with_active_linear_constraint() {
        let dom = ball2();
        let s = seq(
            &dom,
            LossFamily::Fixed(Objective::Linear { c: vec![-1.0, 0.0] }),
            10,
        );
        let block = ConstraintBlock::new(&dom, vec![lin(&[1.0, 0.0], 0.3)])
            .unwrap()
            .with_slater(vec![0.0, 0.0], 0.3)
            .unwrap();
        let x = hindsight_comparator(&s, &block, &dom).unwrap();
        assert!(block.values(&x)[0] <= COMPARATOR_FEAS_TOL);
        // grid-search oracle at resolution 1e-3 gives x₁ = 0.3
        assert!((x[0] - 0.3).abs() < 1e-4, "{x:?}");
    }

    #[test]
    fn comparator_inactive_constraint_symmetric() {
        let dom = ball2();
        let s = seq(
            &dom,
            LossFamily::Fixed(Objective::Quadratic {
                matrix: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                center: vec![0.0, 0.0],
            }),
            5,
        );
        let block = ConstraintBlock::with_constants(
            2,
            vec![lin(&[0.0, 0.0], 1.0)],
            ConstraintConstants {
                g: 1.0,
                h: 0.0,
                l_g: 0.0,
            },
        )
        .unwrap();
        let x = hindsight_comparator(&s, &block, &dom).unwrap();
        assert!(x[0].abs() < 1e-6 && x[1].abs() < 1e-6);
    }

    #[test]
    fn comparator_reports_infeasibility() {
        let dom = ball2();
        let s = seq(
            &dom,
            LossFamily::Fixed(Objective::Linear { c: vec![1.0, 0.0] }),
            5,
        );
        // x₂ ≥ 2 is impossible on the unit ball; constraint 1 is the culprit
        let block =
            ConstraintBlock::new(&dom, vec![lin(&[1.0, 0.0], 5.0), lin(&[0.0, -1.0], -2.0)])
                .unwrap();
        match hindsight_comparator(&s, &block, &dom) {
            Err(Error::Infeasible { constraint, .. }) => assert_eq!(constraint, 1),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn triangle_wave() {
        assert_eq!(triangle(0.0), 0.0);
        assert_eq!(triangle(0.25), 0.25);
        assert_eq!(triangle(1.0), 1.0);
        assert_eq!(triangle(1.5), 0.5);
        assert_eq!(triangle(2.0), 0.0);
    }
}
