//! Finite sample spaces with a flow, measures on them, and invariant random measures.

mod flow;
mod generators;
mod measures;

pub use flow::{FlowSpace, OrbitDecomposition, Outcome};
pub use generators::{
    exactly_k_points, make_mark_field, product_space, translation_space, trivial_flow_space,
    MarkField, ProductSpace, DEFAULT_OUTCOME_CAP,
};
pub use measures::{InvarianceWitness, OmegaMeasure, RandomMeasure, StationarityWitness};

use thiserror::Error;

use crate::algebra::{AlgebraError, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("flow table has {found} rows, expected one per group element ({expected})")]
    FlowRows { expected: usize, found: usize },
    #[error("flow row for element {element} has {found} entries, expected {expected}")]
    FlowRowLength {
        element: usize,
        expected: usize,
        found: usize,
    },
    #[error(
        "flow maps outcome {outcome} under element {element} to {target}, outside the outcome set"
    )]
    FlowOutOfRange {
        element: usize,
        outcome: Outcome,
        target: usize,
    },
    #[error("flow of the neutral element moves outcome {0}")]
    FlowNotIdentity(Outcome),
    #[error("flow does not compose at s={s}, t={t}, outcome {outcome}")]
    FlowNotComposing {
        s: usize,
        t: usize,
        outcome: Outcome,
    },
    #[error("duplicate outcome label {0:?}")]
    DuplicateLabel(String),
    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("negative weight {weight} at outcome {outcome}")]
    NegativeWeight { outcome: Outcome, weight: Scalar },
    #[error("objects live on different spaces or groups")]
    SpaceMismatch,
    #[error("outcome count {count} exceeds the exact-mode cap of {cap}")]
    TooManyOutcomes { count: u128, cap: usize },
    #[error("mark law is not a probability vector: {0}")]
    NotProbability(String),
    #[error("no outcome labelled {0:?}")]
    UnknownLabel(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
