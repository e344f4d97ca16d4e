use serde::Serialize;

use super::{TransportError, TransportKernel};
use crate::algebra::{Element, GMeasure, Scalar};
use crate::space::{OmegaMeasure, Outcome, RandomMeasure};
use crate::verdict::Verdict;

/// `Σ_s ξ(ω){s} T(ω, s){b} ≠ η(ω){b}` at a P-charged outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BalancingWitness {
    pub outcome: Outcome,
    pub element: Element,
    pub pushed: Scalar,
    pub target: Scalar,
}

/// `ξ(ω){s} T(ω, s){t} ≠ η(ω){t} T*(ω, t){s}` at a P-charged outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RelationWitness {
    pub outcome: Outcome,
    pub s: Element,
    pub t: Element,
    pub forward: Scalar,
    pub backward: Scalar,
}

fn same_space(t: &TransportKernel, xi: &RandomMeasure) -> Result<(), TransportError> {
    if **t.space() == **xi.space() {
        Ok(())
    } else {
        Err(TransportError::SpaceMismatch)
    }
}

/// `ω ↦ Σ_s ξ(ω){s} T(ω, s, ·)`.
pub fn push(xi: &RandomMeasure, t: &TransportKernel) -> Result<RandomMeasure, TransportError> {
    same_space(t, xi)?;
    let sp = xi.space();
    let g = sp.group();
    let per = sp
        .outcomes()
        .map(|w| {
            let mut acc = GMeasure::zero(g);
            for s in g.elements() {
                acc.add_scaled(t.at(w, s), xi.mass(w, s));
            }
            acc
        })
        .collect();
    Ok(RandomMeasure::from_vec_unchecked(sp.clone(), per))
}

/// P-a.e. `(ξ, η)`-balancing: the push of ξ equals η on every outcome charged by P.
pub fn is_balancing(
    t: &TransportKernel,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
) -> Result<Verdict<BalancingWitness>, TransportError> {
    same_space(t, xi)?;
    same_space(t, eta)?;
    if !p.same_space(t.space()) {
        return Err(TransportError::SpaceMismatch);
    }
    let pushed = push(xi, t)?;
    for w in p.support() {
        for b in t.space().group().elements() {
            if pushed.mass(w, b) != eta.mass(w, b) {
                return Ok(Verdict::Fails(BalancingWitness {
                    outcome: w,
                    element: b,
                    pushed: pushed.mass(w, b).clone(),
                    target: eta.mass(w, b).clone(),
                }));
            }
        }
    }
    Ok(Verdict::Holds)
}

/// Compares the relation measures `ξ(ds) T(s, dt)` and `η(dt) T*(t, ds)` on every
/// outcome charged by P.
pub fn check_relation(
    t: &TransportKernel,
    t_star: &TransportKernel,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
) -> Result<Verdict<RelationWitness>, TransportError> {
    same_space(t, xi)?;
    same_space(t, eta)?;
    same_space(t_star, xi)?;
    if !p.same_space(t.space()) {
        return Err(TransportError::SpaceMismatch);
    }
    let g = t.space().group();
    for w in p.support() {
        for s in g.elements() {
            for u in g.elements() {
                let forward = xi.mass(w, s) * t.mass(w, s, u);
                let backward = eta.mass(w, u) * t_star.mass(w, u, s);
                if forward != backward {
                    return Ok(Verdict::Fails(RelationWitness {
                        outcome: w,
                        s,
                        t: u,
                        forward,
                        backward,
                    }));
                }
            }
        }
    }
    Ok(Verdict::Holds)
}

/// The dual kernel `T*(ω, t){s} = T(ω, s){t} ξ(ω){s} / η(ω){t}`, with `δ_t` where
/// `η(ω){t} = 0`.
///
/// Requires T invariant and P-a.e. `(ξ, η)`-balancing; the relation identity is
/// re-checked before returning.
pub fn inverse_kernel(
    t: &TransportKernel,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
) -> Result<TransportKernel, TransportError> {
    if let Verdict::Fails(w) = t.is_invariant() {
        return Err(TransportError::KernelNotInvariant(w));
    }
    if let Verdict::Fails(w) = is_balancing(t, xi, eta, p)? {
        return Err(TransportError::NotBalancing(w));
    }
    let sp = t.space();
    let g = sp.group();
    let mut rows = Vec::with_capacity(sp.len() * g.order());
    for w in sp.outcomes() {
        for u in g.elements() {
            let e = eta.mass(w, u);
            if e.is_zero() {
                rows.push(GMeasure::dirac(g, u));
                continue;
            }
            let masses = g
                .elements()
                .map(|s| {
                    let x = xi.mass(w, s);
                    if x.is_zero() {
                        Scalar::zero()
                    } else {
                        t.mass(w, s, u) * x / e
                    }
                })
                .collect();
            rows.push(GMeasure::from_vec_unchecked(masses));
        }
    }
    let t_star = TransportKernel::from_flat_unchecked(sp.clone(), rows);
    if let Verdict::Fails(w) = check_relation(t, &t_star, xi, eta, p)? {
        return Err(TransportError::RelationFails(w));
    }
    Ok(t_star)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::algebra::FiniteAbelianGroup;
    use crate::space::{exactly_k_points, make_mark_field, MarkField, DEFAULT_OUTCOME_CAP};
    use crate::transport::{AllocationRule, Kappa};

    fn field(n: usize) -> MarkField {
        let g = Arc::new(FiniteAbelianGroup::cyclic(n).unwrap());
        let half = Scalar::ratio(1, 2);
        make_mark_field(
            g,
            &[Scalar::zero(), Scalar::one()],
            &[half.clone(), half],
            DEFAULT_OUTCOME_CAP,
        )
        .unwrap()
    }

    fn next_site(sp: &Arc<crate::space::FlowSpace>) -> TransportKernel {
        let g = sp.group().clone();
        let k = Kappa::from_fn(sp.clone(), |_, s, t| {
            if g.sub(t, s) == 1 {
                Scalar::one()
            } else {
                Scalar::zero()
            }
        })
        .unwrap();
        TransportKernel::from_kappa(&k, &RandomMeasure::haar(sp.clone())).unwrap()
    }

    #[test]
    fn stay_put_preserves() {
        let mf = field(3);
        let id = TransportKernel::identity(mf.space().clone());
        assert_eq!(push(&mf.xi, &id).unwrap(), mf.xi);
        assert!(is_balancing(&id, &mf.xi, &mf.xi, &mf.p).unwrap().holds());
        assert_eq!(inverse_kernel(&id, &mf.xi, &mf.xi, &mf.p).unwrap(), id);
    }

    #[test]
    fn one_point_configuration_moves_forward() {
        let mf = exactly_k_points(Arc::new(FiniteAbelianGroup::cyclic(3).unwrap()), 1).unwrap();
        let sp = mf.space().clone();
        let g = sp.group().clone();
        let t = next_site(&sp);
        let pos = |w: usize| mf.configs[w].iter().position(|&m| m == 1).unwrap();
        let eta = RandomMeasure::new(
            sp.clone(),
            sp.outcomes()
                .map(|w| GMeasure::dirac(&g, g.add(pos(w), 1)))
                .collect(),
        )
        .unwrap();
        assert!(eta.is_invariant().holds());
        assert!(is_balancing(&t, &mf.xi, &eta, &mf.p).unwrap().holds());
        assert!(!is_balancing(&t, &mf.xi, &mf.xi, &mf.p).unwrap().holds());
    }

    #[test]
    fn shift_inverse_under_haar() {
        let mf = field(3);
        let sp = mf.space().clone();
        let g = sp.group().clone();
        let haar = RandomMeasure::haar(sp.clone());
        let t = next_site(&sp);
        let ts = inverse_kernel(&t, &haar, &haar, &mf.p).unwrap();
        for w in sp.outcomes() {
            for u in g.elements() {
                assert_eq!(*ts.at(w, u), GMeasure::dirac(&g, g.sub(u, 1)));
            }
        }
        assert!(ts.is_invariant().holds());
    }

    #[test]
    fn inverse_needs_balancing() {
        let mf = field(3);
        let t = next_site(mf.space());
        assert!(matches!(
            inverse_kernel(&t, &mf.xi, &mf.xi, &mf.p),
            Err(TransportError::NotBalancing(_))
        ));
    }

    #[test]
    fn bijective_point_allocation_inverse() {
        // next marked site strictly after s, for marked s; stay put otherwise
        let mf = field(4);
        let sp = mf.space().clone();
        let g = sp.group().clone();
        let pi: Vec<usize> = sp
            .outcomes()
            .map(|w| {
                if mf.configs[w][0] == 0 {
                    0
                } else {
                    (1..=4)
                        .map(|d| d % 4)
                        .find(|&b| mf.configs[w][b] == 1)
                        .unwrap()
                }
            })
            .collect();
        let tau = AllocationRule::from_origin_map(sp.clone(), &pi).unwrap();
        let t = tau.to_kernel();
        assert!(is_balancing(&t, &mf.xi, &mf.xi, &mf.p).unwrap().holds());
        let ts = inverse_kernel(&t, &mf.xi, &mf.xi, &mf.p).unwrap();
        assert!(ts.is_invariant().holds());
        // T* is the previous-point map on marked sites
        let w = sp.outcome_by_label("1101").unwrap();
        assert_eq!(*ts.at(w, 0), GMeasure::dirac(&g, 3));
        assert_eq!(*ts.at(w, 1), GMeasure::dirac(&g, 0));
        assert_eq!(*ts.at(w, 2), GMeasure::dirac(&g, 2));
        let back = inverse_kernel(&ts, &mf.xi, &mf.xi, &mf.p).unwrap();
        for w in sp.outcomes() {
            for s in g.elements().filter(|&s| !mf.xi.mass(w, s).is_zero()) {
                assert_eq!(back.at(w, s), t.at(w, s));
            }
        }
    }
}
