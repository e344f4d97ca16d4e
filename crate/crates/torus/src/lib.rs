//! Floating-point experiments on the discrete torus `Z_n^d`: quota stable-marriage
//! allocation of sites to points and Monte Carlo checks of shift-coupling and
//! mass-stationarity identities.

mod allocate;
mod config;
mod coupling;
mod geometry;

pub use allocate::{stable_marriage_allocate, AllocationMap, BlockingPair};
pub use config::{PointLaw, TorusConfig, TorusError};
pub use coupling::{
    sample_configuration, verify_shift_coupling, verify_window_coupling_mc, CouplingReport,
    OriginSampling, WindowReport,
};
pub use geometry::Torus;
