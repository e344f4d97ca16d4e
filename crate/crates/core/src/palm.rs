//! Palm measures: definition, refined Campbell, inversion, Mecke, sample intensity.

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{Element, Scalar, Subset};
use crate::space::{
    InvarianceWitness, OmegaMeasure, Outcome, RandomMeasure, SpaceError, StationarityWitness,
};
use crate::verdict::Verdict;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PalmError {
    #[error("the averaging set must be nonempty")]
    EmptySet,
    #[error("sample intensity needs a singleton set, got {0} elements")]
    NotSingleton(usize),
    #[error("measure is not stationary: P{{θ_{} ω{}}} = {} but P{{ω}} = {}", .0.shift, .0.outcome, .0.shifted_weight, .0.weight)]
    NotStationary(StationarityWitness),
    #[error("random measure is not invariant at outcome {}, shift {}, element {}", .0.outcome, .0.shift, .0.element)]
    NotInvariant(InvarianceWitness),
    #[error("measure and random measure live on different spaces")]
    SpaceMismatch,
    #[error("measure charges outcome {0} where the random measure vanishes")]
    ChargesZeroMass(Outcome),
    #[error("orbit of outcome {0} carries mass but has zero sample intensity")]
    ZeroSampleIntensity(Outcome),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// ℙ_ξ together with its total mass and, when positive, its normalization ℙ^0_ξ.
#[derive(Clone, Debug, PartialEq)]
pub struct PalmResult {
    pub measure: OmegaMeasure,
    pub intensity: Scalar,
    pub normalized: Option<OmegaMeasure>,
}

/// A basis pair `(ω′, s′)` where two sides of an identity disagree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasisWitness {
    pub outcome: Outcome,
    pub element: Element,
    pub lhs: Scalar,
    pub rhs: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeckeWitness {
    /// Q puts mass on an outcome with ξ(ω) = 0, so Q cannot be a Palm measure of ξ.
    ChargesZeroMass {
        outcome: Outcome,
    },
    Basis(BasisWitness),
}

/// Both sides of the refined Campbell identity for one test function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CampbellReport {
    pub lhs: Scalar,
    pub rhs: Scalar,
}

impl CampbellReport {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

pub(crate) fn require_same_space(p: &OmegaMeasure, xi: &RandomMeasure) -> Result<(), PalmError> {
    if p.same_space(xi.space()) {
        Ok(())
    } else {
        Err(PalmError::SpaceMismatch)
    }
}

pub(crate) fn require_stationary(p: &OmegaMeasure) -> Result<(), PalmError> {
    match p.is_stationary() {
        Verdict::Holds => Ok(()),
        Verdict::Fails(w) => Err(PalmError::NotStationary(w)),
    }
}

pub(crate) fn require_invariant(xi: &RandomMeasure) -> Result<(), PalmError> {
    if xi.invariant_flag() {
        return Ok(());
    }
    match xi.is_invariant() {
        Verdict::Holds => Ok(()),
        Verdict::Fails(w) => Err(PalmError::NotInvariant(w)),
    }
}

/// ℙ_ξ{ω′} = |B|⁻¹ Σ_ω Σ_{s∈B} P{ω} ξ(ω){s} 1{θ_s ω = ω′}.
pub fn palm_measure(
    p: &OmegaMeasure,
    xi: &RandomMeasure,
    b: &Subset,
) -> Result<PalmResult, PalmError> {
    require_same_space(p, xi)?;
    if b.is_empty() {
        return Err(PalmError::EmptySet);
    }
    require_stationary(p)?;
    require_invariant(xi)?;
    let sp = p.space();
    let mut acc = vec![Scalar::zero(); sp.len()];
    for s in b.iter() {
        for w in sp.outcomes() {
            let m = xi.mass(w, s);
            if m.is_zero() || p.weight(w).is_zero() {
                continue;
            }
            acc[sp.flow(s, w)] += &(p.weight(w) * m);
        }
    }
    let inv = Scalar::ratio(1, b.len() as i64);
    for a in &mut acc {
        *a *= &inv;
    }
    let measure = OmegaMeasure::new(sp.clone(), acc)?;
    let intensity = measure.total();
    let normalized = measure.normalized();
    Ok(PalmResult {
        measure,
        intensity,
        normalized,
    })
}

/// Palm measure with `B = {0}`.
pub fn palm(p: &OmegaMeasure, xi: &RandomMeasure) -> Result<PalmResult, PalmError> {
    palm_measure(p, xi, &p.space().group().singleton(0))
}

/// `E_P[Σ_s f(θ_s ω, s) ξ(ω){s}]` against `E_{ℙ_ξ}[Σ_s f(ω, s)]`.
pub fn check_campbell(
    p: &OmegaMeasure,
    xi: &RandomMeasure,
    f: impl Fn(Outcome, Element) -> Scalar,
) -> Result<CampbellReport, PalmError> {
    let palm = palm(p, xi)?;
    let sp = p.space();
    let g = sp.group();
    let lhs = p.expectation(|w| {
        g.elements()
            .filter(|&s| !xi.mass(w, s).is_zero())
            .map(|s| f(sp.flow(s, w), s) * xi.mass(w, s))
            .sum()
    });
    let rhs = palm
        .measure
        .expectation(|w| g.elements().map(|s| f(w, s)).sum());
    Ok(CampbellReport { lhs, rhs })
}

/// Refined Campbell over every indicator `f = 1{ω′} ⊗ 1{s′}`; first failing pair in
/// `(ω′, s′)` order.
pub fn check_campbell_basis(
    p: &OmegaMeasure,
    xi: &RandomMeasure,
) -> Result<Verdict<BasisWitness>, PalmError> {
    let palm = palm(p, xi)?;
    let sp = p.space();
    let n = sp.group().order();
    let mut lhs = vec![Scalar::zero(); sp.len() * n];
    for w in sp.outcomes() {
        for s in sp.group().elements() {
            let m = xi.mass(w, s);
            if !m.is_zero() && !p.weight(w).is_zero() {
                lhs[sp.flow(s, w) * n + s] += &(p.weight(w) * m);
            }
        }
    }
    Ok(first_mismatch(&lhs, n, |w, _| {
        palm.measure.weight(w).clone()
    }))
}

fn first_mismatch(
    lhs: &[Scalar],
    n: usize,
    rhs: impl Fn(Outcome, Element) -> Scalar,
) -> Verdict<BasisWitness> {
    for (i, l) in lhs.iter().enumerate() {
        let (w, s) = (i / n, i % n);
        let r = rhs(w, s);
        if *l != r {
            return Verdict::Fails(BasisWitness {
                outcome: w,
                element: s,
                lhs: l.clone(),
                rhs: r,
            });
        }
    }
    Verdict::Holds
}

fn zero_mass_charged(q: &OmegaMeasure, xi: &RandomMeasure) -> Option<Outcome> {
    q.space()
        .outcomes()
        .find(|&w| !q.weight(w).is_zero() && xi.is_null_at(w))
}

/// Recovers P on `{ξ(G) > 0}` from a Palm measure Q via
/// `P{ω*} = Σ_ω Q{ω} Σ_s h̃(ξ(θ_{-s} ω), s) 1{θ_{-s} ω = ω*}` with
/// `h̃(μ, s) = μ{s} / Σ_t μ{t}²`.
pub fn inversion(q: &OmegaMeasure, xi: &RandomMeasure) -> Result<OmegaMeasure, PalmError> {
    require_same_space(q, xi)?;
    if let Some(w) = zero_mass_charged(q, xi) {
        return Err(PalmError::ChargesZeroMass(w));
    }
    let sp = q.space();
    let g = sp.group();
    let square_mass: Vec<Scalar> = sp
        .outcomes()
        .map(|w| xi.at(w).masses().iter().map(|m| m * m).sum())
        .collect();
    let mut out = vec![Scalar::zero(); sp.len()];
    for w in q.support() {
        for s in g.elements() {
            let target = sp.flow(g.neg(s), w);
            let mu_s = xi.mass(target, s);
            if mu_s.is_zero() {
                continue;
            }
            out[target] += &(q.weight(w) * mu_s / &square_mass[target]);
        }
    }
    Ok(OmegaMeasure::new(sp.clone(), out)?)
}

/// Mecke identity over the indicator basis `g = 1{ω′} ⊗ 1{s′}`:
/// `Σ_ω Q{ω} ξ(ω){-s′} 1{θ_{-s′} ω = ω′} = Q{ω′} ξ(ω′){s′}`.
///
/// Fails with [`MeckeWitness::ChargesZeroMass`] when Q charges an outcome where ξ vanishes.
pub fn check_mecke(
    q: &OmegaMeasure,
    xi: &RandomMeasure,
) -> Result<Verdict<MeckeWitness>, PalmError> {
    require_same_space(q, xi)?;
    if let Some(w) = zero_mass_charged(q, xi) {
        return Ok(Verdict::Fails(MeckeWitness::ChargesZeroMass { outcome: w }));
    }
    let sp = q.space();
    let g = sp.group();
    let n = g.order();
    let mut lhs = vec![Scalar::zero(); sp.len() * n];
    for w in q.support() {
        for s in g.elements() {
            let m = xi.mass(w, s);
            if !m.is_zero() {
                lhs[sp.flow(s, w) * n + g.neg(s)] += &(q.weight(w) * m);
            }
        }
    }
    Ok(first_mismatch(&lhs, n, |w, s| q.weight(w) * xi.mass(w, s)).map(MeckeWitness::Basis))
}

/// ξ̂ = E_P[ξ(B) | I] for a singleton `B`.
pub fn sample_intensity(
    p: &OmegaMeasure,
    xi: &RandomMeasure,
    b: &Subset,
) -> Result<Vec<Scalar>, PalmError> {
    require_same_space(p, xi)?;
    if b.len() != 1 {
        return Err(PalmError::NotSingleton(b.len()));
    }
    require_stationary(p)?;
    require_invariant(xi)?;
    Ok(p.conditional_on_invariant(|w| xi.at(w).measure_of(b)))
}

/// ξ′ = ξ̂⁻¹ ξ, taken as 0 where ξ̂ = 0.
pub fn normalize_by_sample_intensity(
    p: &OmegaMeasure,
    xi: &RandomMeasure,
) -> Result<RandomMeasure, PalmError> {
    let hat = sample_intensity(p, xi, &p.space().group().singleton(0))?;
    let factor: Vec<Scalar> = hat
        .iter()
        .map(|h| {
            if h.is_zero() {
                Scalar::zero()
            } else {
                h.recip().expect("nonzero")
            }
        })
        .collect();
    Ok(xi.scaled_by_outcome(&factor)?)
}

/// ℙ*{ω} = ℙ_ξ{ω} / ξ̂(ω).
pub fn modified_palm(p: &OmegaMeasure, xi: &RandomMeasure) -> Result<OmegaMeasure, PalmError> {
    let hat = sample_intensity(p, xi, &p.space().group().singleton(0))?;
    if let Some(w) = p.support().into_iter().find(|&w| hat[w].is_zero()) {
        return Err(PalmError::ZeroSampleIntensity(w));
    }
    let palm = palm(p, xi)?;
    let weights = palm
        .measure
        .weights()
        .iter()
        .zip(&hat)
        .map(|(m, h)| if m.is_zero() { Scalar::zero() } else { m / h })
        .collect();
    Ok(OmegaMeasure::new(p.space().clone(), weights)?)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebra::{FiniteAbelianGroup, GMeasure};
    use crate::space::{
        make_mark_field, translation_space, trivial_flow_space, MarkField, DEFAULT_OUTCOME_CAP,
    };

    fn z(n: usize) -> Arc<FiniteAbelianGroup> {
        Arc::new(FiniteAbelianGroup::cyclic(n).unwrap())
    }

    fn bernoulli(n: usize, p: Scalar) -> MarkField {
        let law = vec![Scalar::one() - &p, p];
        make_mark_field(
            z(n),
            &[Scalar::zero(), Scalar::one()],
            &law,
            DEFAULT_OUTCOME_CAP,
        )
        .unwrap()
    }

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    #[test]
    fn fair_bernoulli_palm_forces_origin() {
        let mf = bernoulli(3, q(1, 2));
        let r = palm(&mf.p, &mf.xi).unwrap();
        assert_eq!(r.intensity, q(1, 2));
        let norm = r.normalized.unwrap();
        for w in mf.space().outcomes() {
            let expect = if mf.configs[w][0] == 1 {
                q(1, 4)
            } else {
                Scalar::zero()
            };
            assert_eq!(*norm.weight(w), expect, "{}", mf.space().label(w));
        }
    }

    #[test]
    fn palm_of_shifted_probability_vector() {
        // Ω = G, P = counting, ξ(ω){b} = P′{b + ω}
        let g = z(5);
        let sp = Arc::new(translation_space(g.clone()).unwrap());
        let pp = [q(1, 10), q(2, 10), Scalar::zero(), q(3, 10), q(4, 10)];
        let per = sp
            .outcomes()
            .map(|w| {
                GMeasure::new(g.elements().map(|b| pp[g.add(b, w)].clone()).collect()).unwrap()
            })
            .collect();
        let xi = RandomMeasure::new(sp.clone(), per).unwrap();
        let p = OmegaMeasure::new(sp.clone(), vec![Scalar::one(); 5]).unwrap();
        let r = palm(&p, &xi).unwrap();
        assert_eq!(r.measure.weights(), &pp);
        assert_eq!(r.intensity, Scalar::one());
    }

    #[test]
    fn haar_palm_is_p() {
        let mf = bernoulli(3, q(1, 3));
        let r = palm(&mf.p, &RandomMeasure::haar(mf.space().clone())).unwrap();
        assert_eq!(r.measure, mf.p);
    }

    #[test]
    fn palm_independent_of_averaging_set() {
        let mf = bernoulli(3, q(2, 5));
        let g = mf.space().group().clone();
        let base = palm(&mf.p, &mf.xi).unwrap();
        for b in g.nonempty_subsets() {
            assert_eq!(palm_measure(&mf.p, &mf.xi, &b).unwrap(), base);
        }
    }

    #[test]
    fn palm_rejects_bad_inputs() {
        let mf = bernoulli(2, q(1, 2));
        let g = mf.space().group().clone();
        assert_eq!(
            palm_measure(&mf.p, &mf.xi, &g.empty_set()),
            Err(PalmError::EmptySet)
        );
        let skew = OmegaMeasure::new(
            mf.space().clone(),
            vec![q(1, 4), q(1, 4), q(1, 2), Scalar::zero()],
        )
        .unwrap();
        assert!(matches!(
            palm(&skew, &mf.xi),
            Err(PalmError::NotStationary(_))
        ));
    }

    #[test]
    fn campbell_for_constants_and_indicators() {
        let mf = bernoulli(3, q(1, 2));
        let r = check_campbell(&mf.p, &mf.xi, |_, _| Scalar::one()).unwrap();
        assert!(r.holds());
        assert_eq!(r.lhs, q(3, 2));
        let sp = mf.space().clone();
        let cfg = mf.configs.clone();
        let r = check_campbell(&mf.p, &mf.xi, move |w, s| {
            if cfg[w][1] == 1 && s == 0 {
                Scalar::one()
            } else {
                Scalar::zero()
            }
        })
        .unwrap();
        // E_P[1{ω_1 = 1} ξ{0}] = 1/4 on both sides
        assert_eq!(r.lhs, q(1, 4));
        assert!(r.holds());
        assert!(check_campbell_basis(&mf.p, &mf.xi).unwrap().holds());
        drop(sp);
    }

    #[test]
    fn inversion_recovers_p_off_the_empty_configuration() {
        let mf = bernoulli(3, q(1, 2));
        let r = palm(&mf.p, &mf.xi).unwrap();
        let back = inversion(&r.measure, &mf.xi).unwrap();
        assert!(back.weight(0).is_zero());
        assert!(back.weights()[1..].iter().all(|w| *w == q(1, 8)));

        let mf = bernoulli(2, q(1, 3));
        let back = inversion(&palm(&mf.p, &mf.xi).unwrap().measure, &mf.xi).unwrap();
        assert_eq!(back.weights(), &[Scalar::zero(), q(2, 9), q(2, 9), q(1, 9)]);
    }

    #[test]
    fn inversion_on_single_outcome() {
        let g = z(1);
        let sp = Arc::new(trivial_flow_space(g.clone(), vec!["o".into()]).unwrap());
        let xi = RandomMeasure::new(sp.clone(), vec![GMeasure::dirac(&g, 0)]).unwrap();
        let q1 = OmegaMeasure::new(sp, vec![Scalar::one()]).unwrap();
        assert_eq!(inversion(&q1, &xi).unwrap().weights(), &[Scalar::one()]);
    }

    #[test]
    fn inversion_rejects_zero_mass_outcomes() {
        let mf = bernoulli(2, q(1, 2));
        assert_eq!(inversion(&mf.p, &mf.xi), Err(PalmError::ChargesZeroMass(0)));
    }

    #[test]
    fn mecke_accepts_palm_and_rejects_uniform() {
        let mf = bernoulli(3, q(1, 2));
        let r = palm(&mf.p, &mf.xi).unwrap();
        assert!(check_mecke(&r.measure, &mf.xi).unwrap().holds());
        let uniform = OmegaMeasure::uniform(mf.space().clone());
        assert_eq!(
            check_mecke(&uniform, &mf.xi).unwrap().into_witness(),
            Some(MeckeWitness::ChargesZeroMass { outcome: 0 })
        );
        let seven = uniform.restricted(|w| w != 0).normalized().unwrap();
        let w = check_mecke(&seven, &mf.xi).unwrap().into_witness().unwrap();
        let MeckeWitness::Basis(b) = w else {
            panic!("expected basis witness")
        };
        // ω′ = "100", s′ = 1: Q{θ_1 ω′} ξ(θ_1 ω′){-1} = Q{"001"}·1 vs Q{"100"} ξ("100"){1} = 0
        assert_eq!((mf.space().label(b.outcome), b.element), ("100", 1));
        assert_eq!((b.lhs, b.rhs), (q(1, 7), Scalar::zero()));
    }

    #[test]
    fn mecke_trivial_flow_dirac() {
        let g = z(3);
        let sp = Arc::new(trivial_flow_space(g.clone(), vec!["a".into(), "b".into()]).unwrap());
        let xi = RandomMeasure::new(sp.clone(), vec![GMeasure::dirac(&g, 0); 2]).unwrap();
        let q1 = OmegaMeasure::new(sp, vec![q(1, 3), q(5, 7)]).unwrap();
        assert!(check_mecke(&q1, &xi).unwrap().holds());
    }

    #[test]
    fn sample_intensities() {
        let mf = bernoulli(2, q(1, 2));
        let g = mf.space().group().clone();
        let hat = sample_intensity(&mf.p, &mf.xi, &g.singleton(0)).unwrap();
        assert_eq!(hat, vec![Scalar::zero(), q(1, 2), q(1, 2), Scalar::one()]);
        assert_eq!(
            sample_intensity(&mf.p, &mf.xi, &g.singleton(1)).unwrap(),
            hat
        );
        assert_eq!(
            sample_intensity(&mf.p, &mf.xi, &g.full_set()),
            Err(PalmError::NotSingleton(2))
        );

        let mf = bernoulli(3, q(1, 2));
        let hat = sample_intensity(&mf.p, &mf.xi, &g_single(&mf)).unwrap();
        for w in mf.space().outcomes() {
            let k = mf.configs[w].iter().sum::<usize>() as i64;
            assert_eq!(hat[w], q(k, 3));
        }
    }

    fn g_single(mf: &MarkField) -> Subset {
        mf.space().group().singleton(0)
    }

    #[test]
    fn modified_palm_two_ways() {
        let mf = bernoulli(2, q(1, 2));
        let p = mf.p.restricted(|w| w != 0).normalized().unwrap();
        let direct = modified_palm(&p, &mf.xi).unwrap();
        let xi2 = normalize_by_sample_intensity(&p, &mf.xi).unwrap();
        assert_eq!(direct, palm(&p, &xi2).unwrap().measure);
        assert_eq!(direct.total(), Scalar::one());
        assert!(matches!(
            modified_palm(&mf.p, &mf.xi),
            Err(PalmError::ZeroSampleIntensity(0))
        ));
    }

    #[test]
    fn modified_palm_single_orbit_is_normalized_palm() {
        let g = z(4);
        let sp = Arc::new(translation_space(g.clone()).unwrap());
        let pp = [q(1, 2), q(1, 4), q(1, 4), Scalar::zero()];
        let per = sp
            .outcomes()
            .map(|w| {
                GMeasure::new(
                    g.elements()
                        .map(|b| pp[g.add(b, w)].clone() * Scalar::from_integer(3))
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let xi = RandomMeasure::new(sp.clone(), per).unwrap();
        let p = OmegaMeasure::uniform(sp);
        let r = palm(&p, &xi).unwrap();
        assert_eq!(modified_palm(&p, &xi).unwrap(), r.normalized.unwrap());
    }
}
