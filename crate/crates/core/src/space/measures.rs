use std::sync::{Arc, OnceLock};

use serde::Serialize;

use super::{FlowSpace, Outcome, SpaceError};
use crate::algebra::{Element, GMeasure, Scalar};
use crate::verdict::Verdict;

/// A nonnegative weight on each outcome of a flow space.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OmegaMeasure {
    space: Arc<FlowSpace>,
    weights: Vec<Scalar>,
}

/// `P{θ_s ω} ≠ P{ω}`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct StationarityWitness {
    pub shift: Element,
    pub outcome: Outcome,
    pub weight: Scalar,
    pub shifted_weight: Scalar,
}

/// `ξ(θ_s ω){b} ≠ ξ(ω){b + s}`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct InvarianceWitness {
    pub outcome: Outcome,
    pub shift: Element,
    pub element: Element,
    pub shifted: Scalar,
    pub expected: Scalar,
}

impl OmegaMeasure {
    pub fn new(space: Arc<FlowSpace>, weights: Vec<Scalar>) -> Result<Self, SpaceError> {
        if weights.len() != space.len() {
            return Err(SpaceError::LengthMismatch {
                expected: space.len(),
                found: weights.len(),
            });
        }
        if let Some(w) = weights.iter().position(Scalar::is_negative) {
            return Err(SpaceError::NegativeWeight {
                outcome: w,
                weight: weights[w].clone(),
            });
        }
        Ok(OmegaMeasure { space, weights })
    }

    pub(crate) fn from_vec_unchecked(space: Arc<FlowSpace>, weights: Vec<Scalar>) -> Self {
        debug_assert!(weights.len() == space.len() && weights.iter().all(|w| !w.is_negative()));
        OmegaMeasure { space, weights }
    }

    pub fn zero(space: Arc<FlowSpace>) -> Self {
        let n = space.len();
        OmegaMeasure {
            space,
            weights: vec![Scalar::zero(); n],
        }
    }

    /// Probability measure putting `1/|Ω|` on each outcome.
    pub fn uniform(space: Arc<FlowSpace>) -> Self {
        let w = Scalar::ratio(1, space.len() as i64);
        let n = space.len();
        OmegaMeasure {
            space,
            weights: vec![w; n],
        }
    }

    pub fn space(&self) -> &Arc<FlowSpace> {
        &self.space
    }

    #[inline]
    pub fn weight(&self, w: Outcome) -> &Scalar {
        &self.weights[w]
    }

    pub fn weights(&self) -> &[Scalar] {
        &self.weights
    }

    pub fn total(&self) -> Scalar {
        self.weights.iter().sum()
    }

    pub fn mass_of(&self, mut event: impl FnMut(Outcome) -> bool) -> Scalar {
        self.space
            .outcomes()
            .filter(|&w| event(w))
            .map(|w| &self.weights[w])
            .sum()
    }

    /// `Σ_ω P{ω} f(ω)`.
    pub fn expectation(&self, mut f: impl FnMut(Outcome) -> Scalar) -> Scalar {
        let mut acc = Scalar::zero();
        for w in self.space.outcomes() {
            if !self.weights[w].is_zero() {
                acc += &(&self.weights[w] * &f(w));
            }
        }
        acc
    }

    pub fn support(&self) -> Vec<Outcome> {
        self.space
            .outcomes()
            .filter(|&w| !self.weights[w].is_zero())
            .collect()
    }

    /// `P / P(Ω)`, or `None` for the zero measure.
    pub fn normalized(&self) -> Option<OmegaMeasure> {
        let total = self.total();
        if total.is_zero() {
            return None;
        }
        let inv = total.recip().expect("nonzero total");
        Some(OmegaMeasure {
            space: self.space.clone(),
            weights: self.weights.iter().map(|w| w * &inv).collect(),
        })
    }

    /// `P(· ∩ A)`.
    pub fn restricted(&self, mut event: impl FnMut(Outcome) -> bool) -> OmegaMeasure {
        let weights = self
            .space
            .outcomes()
            .map(|w| {
                if event(w) {
                    self.weights[w].clone()
                } else {
                    Scalar::zero()
                }
            })
            .collect();
        OmegaMeasure {
            space: self.space.clone(),
            weights,
        }
    }

    /// `c·P`; rejects negative `c`.
    pub fn scaled(&self, c: &Scalar) -> Result<OmegaMeasure, SpaceError> {
        if c.is_negative() {
            return Err(SpaceError::NegativeWeight {
                outcome: 0,
                weight: c.clone(),
            });
        }
        Ok(OmegaMeasure {
            space: self.space.clone(),
            weights: self.weights.iter().map(|w| w * c).collect(),
        })
    }

    pub fn same_space(&self, other: &Arc<FlowSpace>) -> bool {
        Arc::ptr_eq(&self.space, other) || *self.space == **other
    }

    /// `P ∘ θ_s = P` for every `s`; the witness is the first `(s, ω)` with `P{θ_s ω} ≠ P{ω}`.
    pub fn is_stationary(&self) -> Verdict<StationarityWitness> {
        let sp = &self.space;
        for s in sp.group().elements().skip(1) {
            for w in sp.outcomes() {
                let shifted = &self.weights[sp.flow(s, w)];
                if *shifted != self.weights[w] {
                    return Verdict::Fails(StationarityWitness {
                        shift: s,
                        outcome: w,
                        weight: self.weights[w].clone(),
                        shifted_weight: shifted.clone(),
                    });
                }
            }
        }
        Verdict::Holds
    }

    /// `E_P[f | I]` computed orbit by orbit; 0 on P-null orbits.
    pub fn conditional_on_invariant(&self, mut f: impl FnMut(Outcome) -> Scalar) -> Vec<Scalar> {
        let orbits = self.space.orbits();
        let mut out = vec![Scalar::zero(); self.space.len()];
        for orbit in orbits.iter() {
            let mass: Scalar = orbit.iter().map(|&w| &self.weights[w]).sum();
            if mass.is_zero() {
                continue;
            }
            let mut acc = Scalar::zero();
            for &w in orbit {
                if !self.weights[w].is_zero() {
                    acc += &(&self.weights[w] * &f(w));
                }
            }
            let value = acc / mass;
            for &w in orbit {
                out[w] = value.clone();
            }
        }
        out
    }
}

/// A random measure ξ on G: one finite measure per outcome.
#[derive(Clone, Debug)]
pub struct RandomMeasure {
    space: Arc<FlowSpace>,
    per_outcome: Vec<GMeasure>,
    invariant: OnceLock<bool>,
}

impl PartialEq for RandomMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.per_outcome == other.per_outcome
            && (Arc::ptr_eq(&self.space, &other.space) || self.space == other.space)
    }
}

impl Eq for RandomMeasure {}

impl RandomMeasure {
    pub fn new(space: Arc<FlowSpace>, per_outcome: Vec<GMeasure>) -> Result<Self, SpaceError> {
        if per_outcome.len() != space.len() {
            return Err(SpaceError::LengthMismatch {
                expected: space.len(),
                found: per_outcome.len(),
            });
        }
        let n = space.group().order();
        if let Some(m) = per_outcome.iter().find(|m| m.len() != n) {
            return Err(SpaceError::LengthMismatch {
                expected: n,
                found: m.len(),
            });
        }
        Ok(RandomMeasure {
            space,
            per_outcome,
            invariant: OnceLock::new(),
        })
    }

    pub(crate) fn from_vec_unchecked(space: Arc<FlowSpace>, per_outcome: Vec<GMeasure>) -> Self {
        RandomMeasure {
            space,
            per_outcome,
            invariant: OnceLock::new(),
        }
    }

    /// `ξ(ω) = λ` for every ω.
    pub fn haar(space: Arc<FlowSpace>) -> Self {
        let lambda = GMeasure::haar(space.group());
        let per_outcome = vec![lambda; space.len()];
        RandomMeasure {
            space,
            per_outcome,
            invariant: OnceLock::new(),
        }
    }

    pub fn space(&self) -> &Arc<FlowSpace> {
        &self.space
    }

    #[inline]
    pub fn at(&self, w: Outcome) -> &GMeasure {
        &self.per_outcome[w]
    }

    /// ξ(ω){b}.
    #[inline]
    pub fn mass(&self, w: Outcome, b: Element) -> &Scalar {
        self.per_outcome[w].mass(b)
    }

    /// ξ(ω)(G).
    pub fn total_mass(&self, w: Outcome) -> Scalar {
        self.per_outcome[w].total()
    }

    pub fn is_null_at(&self, w: Outcome) -> bool {
        self.per_outcome[w].is_null()
    }

    pub fn per_outcome(&self) -> &[GMeasure] {
        &self.per_outcome
    }

    pub fn add(&self, other: &RandomMeasure) -> Result<RandomMeasure, SpaceError> {
        if *self.space != *other.space {
            return Err(SpaceError::SpaceMismatch);
        }
        let per_outcome = self
            .per_outcome
            .iter()
            .zip(&other.per_outcome)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(RandomMeasure::from_vec_unchecked(
            self.space.clone(),
            per_outcome,
        ))
    }

    /// `ω ↦ f(ω)·ξ(ω)`; rejects negative factors.
    pub fn scaled_by_outcome(&self, factor: &[Scalar]) -> Result<RandomMeasure, SpaceError> {
        if factor.len() != self.space.len() {
            return Err(SpaceError::LengthMismatch {
                expected: self.space.len(),
                found: factor.len(),
            });
        }
        let per_outcome = self
            .per_outcome
            .iter()
            .zip(factor)
            .map(|(m, c)| m.scale(c))
            .collect::<Result<_, _>>()?;
        Ok(RandomMeasure::from_vec_unchecked(
            self.space.clone(),
            per_outcome,
        ))
    }

    /// Cached form of [`Self::is_invariant`] for repeated precondition checks.
    pub(crate) fn invariant_flag(&self) -> bool {
        *self.invariant.get_or_init(|| self.is_invariant().holds())
    }

    /// Covariance `ξ(θ_s ω){b} = ξ(ω){b + s}` over all `(ω, s, b)`.
    pub fn is_invariant(&self) -> Verdict<InvarianceWitness> {
        let sp = &self.space;
        let g = sp.group();
        for w in sp.outcomes() {
            for s in g.elements() {
                let shifted = &self.per_outcome[sp.flow(s, w)];
                for b in g.elements() {
                    let expected = self.per_outcome[w].mass(g.add(b, s));
                    if shifted.mass(b) != expected {
                        return Verdict::Fails(InvarianceWitness {
                            outcome: w,
                            shift: s,
                            element: b,
                            shifted: shifted.mass(b).clone(),
                            expected: expected.clone(),
                        });
                    }
                }
            }
        }
        Verdict::Holds
    }
}
