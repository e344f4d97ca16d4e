//! Existence of balancing invariant kernels: the sample-intensity criterion and an
//! explicit orbit-by-orbit construction.

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{GMeasure, Scalar};
use crate::palm::{self, PalmError};
use crate::space::{OmegaMeasure, Outcome, RandomMeasure};
use crate::transport::{check_palm_transport, TransportError, TransportKernel};
use crate::verdict::Verdict;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExistenceError {
    #[error("the stationary measure has zero total mass")]
    ZeroMeasure,
    #[error("random measure `{0}` has zero intensity")]
    ZeroIntensity(&'static str),
    #[error("constructed kernel failed verification: {0}")]
    Defect(String),
    #[error(transparent)]
    Palm(#[from] PalmError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// An orbit charged by P on which the sample intensities of ξ and η differ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitWitness {
    pub orbit: usize,
    pub members: Vec<Outcome>,
    pub xi_intensity: Scalar,
    pub eta_intensity: Scalar,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExistenceVerdict {
    Exists { kernel: TransportKernel },
    Fails { witness: OrbitWitness },
}

impl ExistenceVerdict {
    pub fn exists(&self) -> bool {
        matches!(self, ExistenceVerdict::Exists { .. })
    }

    pub fn kernel(&self) -> Option<&TransportKernel> {
        match self {
            ExistenceVerdict::Exists { kernel } => Some(kernel),
            ExistenceVerdict::Fails { .. } => None,
        }
    }

    pub fn witness(&self) -> Option<&OrbitWitness> {
        match self {
            ExistenceVerdict::Exists { .. } => None,
            ExistenceVerdict::Fails { witness } => Some(witness),
        }
    }
}

/// `E_P[ξ{0} | I] = E_P[η{0} | I]` on every P-charged orbit, with P normalized first.
pub fn check_equal_sample_intensities(
    p: &OmegaMeasure,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
) -> Result<Verdict<OrbitWitness>, ExistenceError> {
    let p = p.normalized().ok_or(ExistenceError::ZeroMeasure)?;
    let origin = p.space().group().singleton(0);
    let xi_hat = palm::sample_intensity(&p, xi, &origin)?;
    let eta_hat = palm::sample_intensity(&p, eta, &origin)?;
    if p.expectation(|w| xi.mass(w, 0).clone()).is_zero() {
        return Err(ExistenceError::ZeroIntensity("xi"));
    }
    if p.expectation(|w| eta.mass(w, 0).clone()).is_zero() {
        return Err(ExistenceError::ZeroIntensity("eta"));
    }
    let orbits = p.space().orbits();
    for (id, members) in orbits.iter().enumerate() {
        let w = members[0];
        if p.weight(w).is_zero() {
            continue;
        }
        if xi_hat[w] != eta_hat[w] {
            return Ok(Verdict::Fails(OrbitWitness {
                orbit: id,
                members: members.to_vec(),
                xi_intensity: xi_hat[w].clone(),
                eta_intensity: eta_hat[w].clone(),
            }));
        }
    }
    Ok(Verdict::Holds)
}

/// Builds a Markovian invariant kernel that is P-a.e. `(ξ, η)`-balancing, or reports
/// the orbit where the sample intensities differ.
///
/// On each P-charged orbit O, `T̃(ω) = Σ_{ω′∈O} ℙ_η(ω′ | O)·Unif{s : θ_s ω = ω′}`
/// and `T(ω, s){b} = T̃(θ_s ω){b − s}`. Orbits without P-mass or without η-mass stay put.
pub fn construct_balancing_kernel(
    p: &OmegaMeasure,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
) -> Result<ExistenceVerdict, ExistenceError> {
    if let Verdict::Fails(witness) = check_equal_sample_intensities(p, xi, eta)? {
        return Ok(ExistenceVerdict::Fails { witness });
    }
    let sp = p.space();
    let g = sp.group();
    let palm_eta = palm::palm(p, eta)?.measure;
    let orbits = sp.orbits();
    let mut base: Vec<GMeasure> = sp.outcomes().map(|_| GMeasure::dirac(g, 0)).collect();
    for members in orbits.iter() {
        let orbit_mass: Scalar = members.iter().map(|&w| palm_eta.weight(w)).sum();
        if p.weight(members[0]).is_zero() || orbit_mass.is_zero() {
            continue;
        }
        for &w in members {
            let stabilizer = g.elements().filter(|&s| sp.flow(s, w) == w).count();
            let share = Scalar::ratio(1, stabilizer as i64) / &orbit_mass;
            let masses = g
                .elements()
                .map(|s| palm_eta.weight(sp.flow(s, w)) * &share)
                .collect();
            base[w] = GMeasure::new(masses).map_err(|e| ExistenceError::Defect(e.to_string()))?;
        }
    }
    let kernel = TransportKernel::from_base(sp.clone(), &base)?;
    let report = check_palm_transport(&kernel, xi, eta, p)?;
    if !report.balancing.holds() || !report.agree || !kernel.is_markovian() {
        return Err(ExistenceError::Defect(format!("{report:?}")));
    }
    Ok(ExistenceVerdict::Exists { kernel })
}
