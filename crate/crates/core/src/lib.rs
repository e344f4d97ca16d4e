//! Exact Palm calculus and invariant transport kernels on finite Abelian groups.

// Errors and verdicts carry exact scalars as witnesses and are produced once per check.
#![allow(clippy::result_large_err, clippy::large_enum_variant)]

pub mod algebra;
pub mod existence;
pub mod fleet;
pub mod massstat;
pub mod palm;
pub mod serial;
pub mod space;
pub mod transport;
pub mod verdict;
