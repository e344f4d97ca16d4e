//! Invariant weighted transport-kernels, allocation rules, balancing and the
//! Palm-level identities they satisfy.

mod balance;
mod identities;
mod kernel;

pub use balance::{
    check_relation, inverse_kernel, is_balancing, push, BalancingWitness, RelationWitness,
};
pub use identities::{
    check_allocation_coupling, check_exchange, check_exchange_basis,
    check_mass_transport_principle, check_modified_palm_transport, check_neveu, check_neveu_basis,
    check_palm_transport, EquivalenceReport, OutcomeWitness, SumReport,
};
pub use kernel::{
    AllocationRule, CovarianceWitness, Kappa, KappaWitness, KernelInvarianceWitness,
    TransportKernel,
};

use thiserror::Error;

use crate::palm::PalmError;
use crate::space::SpaceError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("kernel is not invariant at outcome {}, s={}, t={}, b={}", .0.outcome, .0.s, .0.t, .0.element)]
    KernelNotInvariant(KernelInvarianceWitness),
    #[error("allocation rule is not covariant at outcome {}, s={}, t={}", .0.outcome, .0.s, .0.t)]
    NotCovariant(CovarianceWitness),
    #[error("mass function is not invariant at outcome {}, r={}, s={}, t={}", .0.outcome, .0.r, .0.s, .0.t)]
    KappaNotInvariant(KappaWitness),
    #[error("kernel is not balancing at outcome {}, element {}", .0.outcome, .0.element)]
    NotBalancing(BalancingWitness),
    #[error("relation measures differ at outcome {}, s={}, t={}", .0.outcome, .0.s, .0.t)]
    RelationFails(RelationWitness),
    #[error("sets must have equal size, got {0} and {1}")]
    SizeMismatch(usize, usize),
    #[error("objects live on different spaces")]
    SpaceMismatch,
    #[error("kernel table has wrong shape: {0}")]
    Shape(String),
    #[error("negative kernel mass at outcome {outcome}, s={s}, t={t}")]
    NegativeMass { outcome: usize, s: usize, t: usize },
    #[error(transparent)]
    Palm(#[from] PalmError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}
