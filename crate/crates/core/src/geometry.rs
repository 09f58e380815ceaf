//! Bregman geometries and closed-form mirror steps.
//!
//! Two distance-generating functions are built in:
//!
//! | kind        | ω(x)            | norm / dual | modulus |
//! |-------------|-----------------|-------------|---------|
//! | `Euclidean` | ½‖x‖₂²          | ℓ2 / ℓ2     | 1       |
//! | `Entropic`  | Σ xᵢ ln xᵢ      | ℓ1 / ℓ∞     | 1       |
//!
//! A mirror step solves `argmin_{x ∈ base} ⟨h, x⟩ + α·D(x, anchor)`. The Euclidean
//! case is a projected gradient step; the entropic case over the simplex is a
//! softmax reweighting of the anchor. Other feasible sets plug in through
//! [`MirrorDomain`].

use rand::{Rng, RngCore};
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Euclidean,
    Entropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    LInf,
}

impl Norm {
    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => linalg::norm_l1(v),
            Norm::L2 => linalg::norm_l2(v),
            Norm::LInf => linalg::norm_linf(v),
        }
    }

    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::LInf,
            Norm::L2 => Norm::L2,
            Norm::LInf => Norm::L1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    kind: GeometryKind,
    dim: usize,
}

impl Geometry {
    pub fn new(kind: GeometryKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("dimension must be positive".into()));
        }
        Ok(Self { kind, dim })
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(GeometryKind::Euclidean, dim)
    }

    pub fn entropic(dim: usize) -> Result<Self> {
        Self::new(GeometryKind::Entropic, dim)
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Strong-convexity modulus ρ of ω with respect to [`Geometry::norm`].
    pub fn modulus(&self) -> f64 {
        1.0
    }

    pub fn norm(&self) -> Norm {
        match self.kind {
            GeometryKind::Euclidean => Norm::L2,
            GeometryKind::Entropic => Norm::L1,
        }
    }

    pub fn dual_norm(&self) -> Norm {
        self.norm().dual()
    }

    /// D(x, y) = ω(x) − ω(y) − ⟨∇ω(y), x − y⟩.
    ///
    /// For the entropic geometry this is the generalized KL divergence
    /// Σ xᵢ ln(xᵢ/yᵢ) − xᵢ + yᵢ, which reduces to KL on the simplex. Terms with
    /// xᵢ = 0 contribute yᵢ (0·ln 0 = 0); yᵢ = 0 with xᵢ > 0 is a domain error.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, y.len())?;
        match self.kind {
            GeometryKind::Euclidean => Ok(0.5 * sq_dist(x, y)),
            GeometryKind::Entropic => {
                let mut acc = 0.0;
                for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
                    if xi < 0.0 || yi < 0.0 {
                        return Err(Error::Domain(format!(
                            "negative coordinate {i} in KL divergence"
                        )));
                    }
                    if xi == 0.0 {
                        acc += yi;
                    } else if yi == 0.0 {
                        return Err(Error::Domain(format!(
                            "KL divergence infinite: y[{i}] = 0 while x[{i}] = {xi}"
                        )));
                    } else {
                        acc += xi * (xi / yi).ln() - xi + yi;
                    }
                }
                Ok(acc)
            }
        }
    }
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Feasible base set 𝒳₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseSet {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    #[serde(rename = "box")]
    Boxed {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Simplex {
        dim: usize,
    },
}

impl BaseSet {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let s = BaseSet::Ball { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::ball(vec![0.0; dim], 1.0)
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let s = BaseSet::Boxed { lower, upper };
        s.validate()?;
        Ok(s)
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        let s = BaseSet::Simplex { dim };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BaseSet::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(Error::Argument("ball dimension must be positive".into()));
                }
                if !linalg::all_finite(center) {
                    return Err(Error::Argument("ball center must be finite".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Argument(format!(
                        "ball radius must be positive, got {radius}"
                    )));
                }
            }
            BaseSet::Boxed { lower, upper } => {
                check_dim(lower.len(), upper.len())?;
                if lower.is_empty() {
                    return Err(Error::Argument("box dimension must be positive".into()));
                }
                for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if !(l.is_finite() && u.is_finite() && l <= u) {
                        return Err(Error::Argument(format!(
                            "box bounds invalid at coordinate {i}: [{l}, {u}]"
                        )));
                    }
                }
            }
            BaseSet::Simplex { dim } => {
                if *dim == 0 {
                    return Err(Error::Argument("simplex dimension must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            BaseSet::Ball { center, .. } => center.len(),
            BaseSet::Boxed { lower, .. } => lower.len(),
            BaseSet::Simplex { dim } => *dim,
        }
    }

    /// Ball/box center or the uniform distribution.
    pub fn center(&self) -> Vec<f64> {
        match self {
            BaseSet::Ball { center, .. } => center.clone(),
            BaseSet::Boxed { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
            BaseSet::Simplex { dim } => vec![1.0 / *dim as f64; *dim],
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() || !linalg::all_finite(x) {
            return false;
        }
        match self {
            BaseSet::Ball { center, radius } => sq_dist(x, center).sqrt() <= radius + tol,
            BaseSet::Boxed { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            BaseSet::Simplex { .. } => {
                x.iter().all(|v| *v >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol
            }
        }
    }

    /// Euclidean projection.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), y.len())?;
        match self {
            BaseSet::Ball { center, radius } => {
                let diff = linalg::sub(y, center);
                let n = linalg::norm_l2(&diff);
                if n <= *radius {
                    Ok(y.to_vec())
                } else {
                    let s = radius / n;
                    Ok(center.iter().zip(&diff).map(|(c, d)| c + s * d).collect())
                }
            }
            BaseSet::Boxed { lower, upper } => Ok(y
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect()),
            BaseSet::Simplex { .. } => Ok(project_simplex(y)),
        }
    }

    /// Uniform sample from a ball or box; Dirichlet(1, …, 1) on the simplex.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            BaseSet::Ball { center, radius } => {
                let d = center.len();
                let mut dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let n = linalg::norm_l2(&dir);
                if n == 0.0 {
                    return center.clone();
                }
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                for v in dir.iter_mut() {
                    *v *= r / n;
                }
                linalg::add(center, &dir)
            }
            BaseSet::Boxed { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                .collect(),
            BaseSet::Simplex { dim } => {
                let e: Vec<f64> = (0..*dim).map(|_| rng.sample::<f64, _>(Exp1)).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            }
        }
    }

    /// sup over the set of ‖x‖ in the given norm.
    pub fn max_norm(&self, norm: Norm) -> f64 {
        self.max_dist_from(&vec![0.0; self.dim()], norm)
    }

    /// sup over the set of ‖x − c‖ in the given norm (exact for ℓ2 on
    /// balls/boxes and every norm on the simplex; a valid upper bound otherwise).
    pub fn max_dist_from(&self, c: &[f64], norm: Norm) -> f64 {
        match self {
            BaseSet::Ball { center, radius } => {
                let off = linalg::sub(center, c);
                let scale = match norm {
                    Norm::L2 => 1.0,
                    Norm::LInf => 1.0,
                    Norm::L1 => (self.dim() as f64).sqrt(),
                };
                norm.eval(&off) + radius * scale
            }
            BaseSet::Boxed { lower, upper } => {
                let far: Vec<f64> = lower
                    .iter()
                    .zip(upper)
                    .zip(c)
                    .map(|((l, u), ci)| (l - ci).abs().max((u - ci).abs()))
                    .collect();
                norm.eval(&far)
            }
            BaseSet::Simplex { dim } => (0..*dim)
                .map(|i| {
                    let mut v = linalg::scale(-1.0, c);
                    v[i] += 1.0;
                    norm.eval(&v)
                })
                .fold(0.0, f64::max),
        }
    }

    /// Euclidean distance from `c` to the set.
    pub fn dist_to(&self, c: &[f64]) -> Result<f64> {
        let p = self.project(c)?;
        Ok(sq_dist(&p, c).sqrt())
    }

    /// (inf, sup) of ⟨a, x⟩ over the set.
    pub fn linear_range(&self, a: &[f64]) -> Result<(f64, f64)> {
        check_dim(self.dim(), a.len())?;
        Ok(match self {
            BaseSet::Ball { center, radius } => {
                let m = linalg::dot(a, center);
                let r = radius * linalg::norm_l2(a);
                (m - r, m + r)
            }
            BaseSet::Boxed { lower, upper } => {
                let mut lo = 0.0;
                let mut hi = 0.0;
                for ((ai, l), u) in a.iter().zip(lower).zip(upper) {
                    lo += (ai * l).min(ai * u);
                    hi += (ai * l).max(ai * u);
                }
                (lo, hi)
            }
            BaseSet::Simplex { .. } => (
                a.iter().copied().fold(f64::INFINITY, f64::min),
                a.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
        })
    }
}

/// Euclidean projection onto the probability simplex by sorting and
/// thresholding.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// A feasible set with a Bregman geometry and a solver for its mirror step.
///
/// The built-in [`Domain`] covers Euclidean balls/boxes and the entropic
/// simplex. Implement this trait to run the algorithms over another set.
pub trait MirrorDomain: Send + Sync {
    fn dim(&self) -> usize;

    fn modulus(&self) -> f64;

    fn norm(&self) -> Norm;

    fn dual_norm(&self) -> Norm {
        self.norm().dual()
    }

    fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64>;

    /// argmin over the set of ⟨h, x⟩ + α·D(x, anchor).
    fn mirror_step(&self, anchor: &[f64], h: &[f64], alpha: f64) -> Result<Vec<f64>>;

    /// Euclidean projection, used by the comparator solver and the baseline.
    fn project(&self, y: &[f64]) -> Result<Vec<f64>>;

    fn initial_point(&self) -> Vec<f64>;

    fn contains(&self, x: &[f64], tol: f64) -> bool;

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Whether D is bounded over the set (required by the general-geometry
    /// algorithm).
    fn has_bounded_divergence(&self) -> bool;
}

/// A compatible (geometry, base set) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    geometry: Geometry,
    base: BaseSet,
}

impl Domain {
    pub fn new(geometry: Geometry, base: BaseSet) -> Result<Self> {
        base.validate()?;
        check_dim(geometry.dim(), base.dim())?;
        match (geometry.kind(), &base) {
            (GeometryKind::Entropic, BaseSet::Simplex { .. }) => {}
            (GeometryKind::Euclidean, BaseSet::Ball { .. } | BaseSet::Boxed { .. }) => {}
            (kind, base) => {
                return Err(Error::Argument(format!(
                    "{kind:?} geometry is not compatible with base set {}",
                    base_name(base)
                )))
            }
        }
        Ok(Self { geometry, base })
    }

    pub fn euclidean(base: BaseSet) -> Result<Self> {
        Self::new(Geometry::euclidean(base.dim())?, base)
    }

    pub fn entropic_simplex(dim: usize) -> Result<Self> {
        Self::new(Geometry::entropic(dim)?, BaseSet::simplex(dim)?)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn base(&self) -> &BaseSet {
        &self.base
    }
}

fn base_name(b: &BaseSet) -> &'static str {
    match b {
        BaseSet::Ball { .. } => "ball",
        BaseSet::Boxed { .. } => "box",
        BaseSet::Simplex { .. } => "simplex",
    }
}

impl MirrorDomain for Domain {
    fn dim(&self) -> usize {
        self.geometry.dim()
    }

    fn modulus(&self) -> f64 {
        self.geometry.modulus()
    }

    fn norm(&self) -> Norm {
        self.geometry.norm()
    }

    fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.geometry.bregman(x, y)
    }

    fn mirror_step(&self, anchor: &[f64], h: &[f64], alpha: f64) -> Result<Vec<f64>> {
        mirror_step(&self.geometry, &self.base, anchor, h, alpha)
    }

    fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.base.project(y)
    }

    fn initial_point(&self) -> Vec<f64> {
        self.base.center()
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.base.contains(x, tol)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.base.sample(rng)
    }

    fn has_bounded_divergence(&self) -> bool {
        self.geometry.kind() == GeometryKind::Euclidean
    }
}

pub fn bregman(geom: &Geometry, base: &BaseSet, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(base.dim(), geom.dim())?;
    geom.bregman(x, y)
}

pub fn project(base: &BaseSet, y: &[f64]) -> Result<Vec<f64>> {
    base.project(y)
}

/// argmin_{x ∈ base} ⟨h, x⟩ + α·D(x, anchor).
pub fn mirror_step(
    geom: &Geometry,
    base: &BaseSet,
    anchor: &[f64],
    h: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    check_dim(geom.dim(), base.dim())?;
    check_dim(geom.dim(), anchor.len())?;
    check_dim(geom.dim(), h.len())?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Argument(format!(
            "mirror step weight must be positive, got {alpha}"
        )));
    }
    if !linalg::all_finite(h) {
        return Err(Error::Data {
            oracle: "mirror step direction".into(),
        });
    }
    match geom.kind() {
        GeometryKind::Euclidean => {
            let y: Vec<f64> = anchor.iter().zip(h).map(|(a, g)| a - g / alpha).collect();
            base.project(&y)
        }
        GeometryKind::Entropic => {
            if !matches!(base, BaseSet::Simplex { .. }) {
                return Err(Error::Unsupported(
                    "entropic mirror step is only available on the simplex".into(),
                ));
            }
            softmax_step(anchor, h, alpha)
        }
    }
}

/// xᵢ ∝ anchorᵢ · exp(−hᵢ/α), evaluated in log space.
fn softmax_step(anchor: &[f64], h: &[f64], alpha: f64) -> Result<Vec<f64>> {
    let mut logits = Vec::with_capacity(anchor.len());
    for (i, (&a, &g)) in anchor.iter().zip(h).enumerate() {
        if !(a >= 0.0) {
            return Err(Error::Domain(format!(
                "entropic anchor has negative coordinate {i}"
            )));
        }
        logits.push(if a == 0.0 {
            f64::NEG_INFINITY
        } else {
            a.ln() - g / alpha
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Domain("entropic anchor is identically zero".into()));
    }
    let mut out: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = out.iter().sum();
    for v in out.iter_mut() {
        *v /= s;
    }
    Ok(out)
}
