//! Mass-stationarity: window kernels `T_C`, the randomized-window identity, the
//! split kernels `T_{C,D}` and the preserving-kernel characterization.

mod battery;
mod examples;

pub use battery::{check_preserving_battery, BatteryOptions, BatteryReport, BatteryWitness};
pub use examples::{
    fair_bernoulli_palm, irrational_marks_example, irrational_marks_model, single_window_example,
    single_window_identity, IrrationalMarksModel, IrrationalMarksReport, OrbitRuleFailure,
};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{Element, FiniteAbelianGroup, GMeasure, Scalar, Subset};
use crate::palm::PalmError;
use crate::space::{OmegaMeasure, Outcome, RandomMeasure, SpaceError};
use crate::transport::{BalancingWitness, TransportError, TransportKernel};
use crate::verdict::Verdict;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MassStatError {
    #[error("window set must be nonempty")]
    EmptySet,
    #[error("measure charges outcome {0} where the random measure vanishes")]
    ChargesZeroMass(Outcome),
    #[error("measure and random measure live on different spaces")]
    SpaceMismatch,
    #[error("mark probability must lie strictly between 0 and 1, got {0}")]
    BadProbability(Scalar),
    #[error(transparent)]
    Palm(#[from] PalmError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// What `T_C(ω, t, ·)` does when the window `C + t` carries no ξ-mass.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// `δ_t`.
    #[default]
    StayPut,
    /// Uniform distribution on G.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MassStatOptions {
    pub fallback: Fallback,
    /// Largest group order for which every nonempty window set is checked by default.
    pub all_subsets_up_to: usize,
}

impl Default for MassStatOptions {
    fn default() -> Self {
        MassStatOptions {
            fallback: Fallback::StayPut,
            all_subsets_up_to: 12,
        }
    }
}

/// First failing `(C, ω′, g′)` of the randomized-window identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MassStatWitness {
    pub set: Vec<Element>,
    pub outcome: Outcome,
    pub element: Element,
    pub lhs: Scalar,
    pub rhs: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MassStatReport {
    pub holds: bool,
    pub witness: Option<MassStatWitness>,
    pub sets_checked: usize,
}

/// All nonempty subsets when `|G| <= all_subsets_up_to`, otherwise singletons and boxes.
pub fn default_window_sets(group: &FiniteAbelianGroup, all_subsets_up_to: usize) -> Vec<Subset> {
    if group.order() <= all_subsets_up_to.min(20) {
        return group.nonempty_subsets().collect();
    }
    let mut sets: Vec<Subset> = group.elements().map(|x| group.singleton(x)).collect();
    for b in group.boxes() {
        if !sets.contains(&b) {
            sets.push(b);
        }
    }
    sets
}

/// `T_C(ω, t, ·)`: ξ(ω) restricted to `C + t` and normalized, or the fallback.
pub fn window_row(
    xi: &RandomMeasure,
    w: Outcome,
    c: &Subset,
    t: Element,
    fallback: Fallback,
) -> GMeasure {
    let g = xi.space().group();
    let window = g.translate(c, t);
    let m = xi.at(w).measure_of(&window);
    if m.is_zero() {
        return match fallback {
            Fallback::StayPut => GMeasure::dirac(g, t),
            Fallback::Uniform => GMeasure::uniform_on(g, &g.full_set()).expect("G is nonempty"),
        };
    }
    let inv = m.recip().expect("nonzero window mass");
    GMeasure::new(
        g.elements()
            .map(|s| {
                if window.contains(s) {
                    xi.mass(w, s) * &inv
                } else {
                    Scalar::zero()
                }
            })
            .collect(),
    )
    .expect("nonnegative masses")
}

/// The kernel `T_C`.
pub fn window_kernel(
    xi: &RandomMeasure,
    c: &Subset,
    fallback: Fallback,
) -> Result<TransportKernel, MassStatError> {
    if c.is_empty() {
        return Err(MassStatError::EmptySet);
    }
    let sp = xi.space();
    let g = sp.group();
    let rows = sp
        .outcomes()
        .map(|w| {
            g.elements()
                .map(|t| window_row(xi, w, c, t, fallback))
                .collect()
        })
        .collect();
    Ok(TransportKernel::new(sp.clone(), rows)?)
}

/// `T_{C,D}(ω, t){s} = Σ_{r∈C} |C|⁻¹ 1_D(s − t + r) T_C(ω, t − r){s}`.
pub fn split_window_kernel(
    xi: &RandomMeasure,
    c: &Subset,
    d: &Subset,
    fallback: Fallback,
) -> Result<TransportKernel, MassStatError> {
    if c.is_empty() {
        return Err(MassStatError::EmptySet);
    }
    let sp = xi.space();
    let g = sp.group();
    let inv_c = Scalar::ratio(1, c.len() as i64);
    let rows = sp
        .outcomes()
        .map(|w| {
            g.elements()
                .map(|t| {
                    let mut acc = GMeasure::zero(g);
                    for r in c.iter() {
                        let row = window_row(xi, w, c, g.sub(t, r), fallback);
                        let masked = GMeasure::new(
                            g.elements()
                                .map(|s| {
                                    if d.contains(g.add(g.sub(s, t), r)) {
                                        row.mass(s).clone()
                                    } else {
                                        Scalar::zero()
                                    }
                                })
                                .collect(),
                        )
                        .expect("nonnegative masses");
                        acc.add_scaled(&masked, &inv_c);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(TransportKernel::new(sp.clone(), rows)?)
}

/// `Σ_t ξ(ω){t} T_{C,D}(ω, t, ·) = λ_C(D)·ξ(ω)` on every outcome.
pub fn check_split_push(
    xi: &RandomMeasure,
    c: &Subset,
    d: &Subset,
) -> Result<Verdict<BalancingWitness>, MassStatError> {
    let k = split_window_kernel(xi, c, d, Fallback::StayPut)?;
    let share = Scalar::ratio(c.intersection(d).len() as i64, c.len() as i64);
    let pushed = crate::transport::push(xi, &k)?;
    let sp = xi.space();
    for w in sp.outcomes() {
        for b in sp.group().elements() {
            let target = xi.mass(w, b) * &share;
            if *pushed.mass(w, b) != target {
                return Ok(Verdict::Fails(BalancingWitness {
                    outcome: w,
                    element: b,
                    pushed: pushed.mass(w, b).clone(),
                    target,
                }));
            }
        }
    }
    Ok(Verdict::Holds)
}

pub(crate) fn require_charged_mass(
    q: &OmegaMeasure,
    xi: &RandomMeasure,
) -> Result<(), MassStatError> {
    if !q.same_space(xi.space()) {
        return Err(MassStatError::SpaceMismatch);
    }
    match q.support().into_iter().find(|&w| xi.is_null_at(w)) {
        Some(w) => Err(MassStatError::ChargesZeroMass(w)),
        None => Ok(()),
    }
}

/// Randomized-window identity for one set C over the basis `1{ω′} ⊗ 1{g′}`.
fn window_identity_witness(
    q: &OmegaMeasure,
    xi: &RandomMeasure,
    c: &Subset,
    fallback: Fallback,
) -> Option<MassStatWitness> {
    let sp = q.space();
    let g = sp.group();
    let n = g.order();
    let inv_c = Scalar::ratio(1, c.len() as i64);
    let members = c.to_vec();
    let mut lhs = vec![Scalar::zero(); sp.len() * n];
    for w in q.support() {
        let qw = q.weight(w) * &inv_c;
        for &r in &members {
            let shift = g.neg(r);
            let m: Scalar = members.iter().map(|&x| xi.mass(w, g.add(x, shift))).sum();
            if m.is_zero() {
                match fallback {
                    Fallback::StayPut => lhs[sp.flow(shift, w) * n] += &qw,
                    Fallback::Uniform => {
                        let share = &qw * &Scalar::ratio(1, n as i64);
                        for s in g.elements() {
                            lhs[sp.flow(s, w) * n + g.add(s, r)] += &share;
                        }
                    }
                }
                continue;
            }
            let scale = &qw / &m;
            for &x in &members {
                let s = g.add(x, shift);
                let mass = xi.mass(w, s);
                if !mass.is_zero() {
                    lhs[sp.flow(s, w) * n + x] += &(mass * &scale);
                }
            }
        }
    }
    for (i, l) in lhs.into_iter().enumerate() {
        let (w, e) = (i / n, i % n);
        let rhs = if c.contains(e) {
            q.weight(w) * &inv_c
        } else {
            Scalar::zero()
        };
        if l != rhs {
            return Some(MassStatWitness {
                set: members,
                outcome: w,
                element: e,
                lhs: l,
                rhs,
            });
        }
    }
    None
}

/// Checks `E_Q[Σ_r Σ_s 1{(θ_s ω, s + r) ∈ A} T_C(ω, −r){s} λ_C{r}] = (Q ⊗ λ_C)(A)` for every
/// set C in `sets` (or the default universe) and every indicator `A = 1{ω′} ⊗ 1{g′}`.
pub fn is_mass_stationary(
    q: &OmegaMeasure,
    xi: &RandomMeasure,
    sets: Option<&[Subset]>,
) -> Result<MassStatReport, MassStatError> {
    is_mass_stationary_with(q, xi, sets, &MassStatOptions::default())
}

pub fn is_mass_stationary_with(
    q: &OmegaMeasure,
    xi: &RandomMeasure,
    sets: Option<&[Subset]>,
    options: &MassStatOptions,
) -> Result<MassStatReport, MassStatError> {
    require_charged_mass(q, xi)?;
    let owned;
    let sets = match sets {
        Some(s) => s,
        None => {
            owned = default_window_sets(q.space().group(), options.all_subsets_up_to);
            &owned
        }
    };
    if sets.iter().any(Subset::is_empty) {
        return Err(MassStatError::EmptySet);
    }
    let witness = sets
        .par_iter()
        .find_map_first(|c| window_identity_witness(q, xi, c, options.fallback));
    Ok(MassStatReport {
        holds: witness.is_none(),
        witness,
        sets_checked: sets.len(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::palm::check_mecke;
    use crate::space::trivial_flow_space;

    fn ex() -> (OmegaMeasure, RandomMeasure) {
        let (mf, q) = fair_bernoulli_palm(3).unwrap();
        (q, mf.xi)
    }

    #[test]
    fn window_rows() {
        let (q, xi) = ex();
        let sp = q.space().clone();
        let g = sp.group().clone();
        let c = g.subset(&[0, 1]);
        let w = sp.outcome_by_label("110").unwrap();
        let half = Scalar::ratio(1, 2);
        let expect = GMeasure::new(vec![half.clone(), half.clone(), Scalar::zero()]).unwrap();
        assert_eq!(window_row(&xi, w, &c, 0, Fallback::StayPut), expect);
        let w = sp.outcome_by_label("101").unwrap();
        let full = window_row(&xi, w, &g.full_set(), 2, Fallback::StayPut);
        assert_eq!(full, xi.at(w).scale(&half).unwrap());
        let w = sp.outcome_by_label("001").unwrap();
        assert_eq!(
            window_row(&xi, w, &c, 0, Fallback::StayPut),
            GMeasure::dirac(&g, 0)
        );
        assert_eq!(
            window_row(&xi, w, &c, 1, Fallback::StayPut),
            GMeasure::dirac(&g, 2)
        );
        let k = window_kernel(&xi, &c, Fallback::StayPut).unwrap();
        assert!(k.is_invariant().holds());
        assert!(window_kernel(&xi, &c, Fallback::Uniform)
            .unwrap()
            .is_invariant()
            .holds());
        assert_eq!(
            window_kernel(&xi, &g.empty_set(), Fallback::StayPut),
            Err(MassStatError::EmptySet)
        );
    }

    #[test]
    fn palm_is_mass_stationary_and_uniform_is_not() {
        let (q, xi) = ex();
        let r = is_mass_stationary(&q, &xi, None).unwrap();
        assert!(r.holds);
        assert_eq!(r.sets_checked, 7);
        let seven = OmegaMeasure::uniform(q.space().clone())
            .restricted(|w| w != 0)
            .normalized()
            .unwrap();
        let r = is_mass_stationary(&seven, &xi, None).unwrap();
        assert!(!r.holds);
        let w = r.witness.unwrap();
        assert_ne!(w.lhs, w.rhs);
        assert!(matches!(
            is_mass_stationary(&OmegaMeasure::uniform(q.space().clone()), &xi, None),
            Err(MassStatError::ChargesZeroMass(0))
        ));
    }

    #[test]
    fn trivial_group_is_always_mass_stationary() {
        let g = Arc::new(FiniteAbelianGroup::trivial());
        let sp = Arc::new(trivial_flow_space(g.clone(), vec!["a".into(), "b".into()]).unwrap());
        let xi = RandomMeasure::new(sp.clone(), vec![GMeasure::dirac(&g, 0); 2]).unwrap();
        let q = OmegaMeasure::new(sp, vec![Scalar::ratio(1, 3), Scalar::from_integer(5)]).unwrap();
        assert!(is_mass_stationary(&q, &xi, None).unwrap().holds);
    }

    #[test]
    fn split_kernels_push_a_fraction_of_xi() {
        let (_, xi) = ex();
        let g = xi.space().group().clone();
        let c = g.subset(&[0, 1]);
        for d in g.nonempty_subsets().chain(std::iter::once(g.empty_set())) {
            assert!(check_split_push(&xi, &c, &d).unwrap().holds(), "{d:?}");
        }
        let all = split_window_kernel(&xi, &c, &g.full_set(), Fallback::StayPut).unwrap();
        assert_eq!(crate::transport::push(&xi, &all).unwrap(), xi);
        let none = split_window_kernel(&xi, &c, &g.empty_set(), Fallback::StayPut).unwrap();
        assert!(crate::transport::push(&xi, &none)
            .unwrap()
            .per_outcome()
            .iter()
            .all(GMeasure::is_null));
        let half = split_window_kernel(&xi, &c, &g.singleton(0), Fallback::StayPut).unwrap();
        let pushed = crate::transport::push(&xi, &half).unwrap();
        assert_eq!(
            pushed,
            xi.scaled_by_outcome(&vec![Scalar::ratio(1, 2); 8]).unwrap()
        );
    }

    #[test]
    fn fallback_choice_does_not_change_verdicts() {
        let (q, xi) = ex();
        let seven = OmegaMeasure::uniform(q.space().clone())
            .restricted(|w| w != 0)
            .normalized()
            .unwrap();
        for qq in [&q, &seven] {
            let a = is_mass_stationary_with(qq, &xi, None, &MassStatOptions::default()).unwrap();
            let b = is_mass_stationary_with(
                qq,
                &xi,
                None,
                &MassStatOptions {
                    fallback: Fallback::Uniform,
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(a.holds, b.holds);
            assert_eq!(a.holds, check_mecke(qq, &xi).unwrap().holds());
        }
    }
}
