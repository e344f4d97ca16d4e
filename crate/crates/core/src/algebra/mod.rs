//! Finite Abelian groups, exact scalars in Q(√2), and measures on the group.

mod approx;
mod group;
mod measure;
mod scalar;

pub use group::{Element, FiniteAbelianGroup, Subset};
pub use measure::GMeasure;
pub use scalar::{Rational, Scalar, ScalarError};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("group moduli must be at least 1")]
    ZeroModulus,
    #[error("group of order {0} exceeds the exact-mode limit of 4096 elements")]
    GroupTooLarge(usize),
    #[error("malformed group element {0:?}")]
    BadElement(String),
    #[error("negative mass {mass} at element {element}")]
    NegativeMass { element: Element, mass: Scalar },
    #[error("scaling factor {0} is negative")]
    NegativeScale(Scalar),
    #[error("set must be nonempty")]
    EmptySet,
}
