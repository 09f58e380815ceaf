//! Online primal-dual mirror prox for online convex optimization with
//! long-term constraints.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithm;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod problem;
pub mod theory_checks;

pub use algorithm::{AlgoState, HyperParams, RoundOutput, Variant};
pub use error::{Error, Result};
pub use geometry::{BaseSet, Domain, Geometry, GeometryKind, MirrorDomain, Norm};
pub use metrics::{MetricsReport, RoundRecord, RunTrace};
pub use problem::{
    ConstraintBlock, ConstraintConstants, ConstraintFn, LossConstants, LossFamily, LossSequence,
    Objective, Problem, ScheduleConstants,
};
