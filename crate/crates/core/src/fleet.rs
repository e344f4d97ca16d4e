//! Deterministic generators of test instances: stationary models on small groups,
//! perturbed non-Palm measures and random invariant kernels.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{FiniteAbelianGroup, GMeasure, Scalar};
use crate::space::{
    exactly_k_points, make_mark_field, MarkField, OmegaMeasure, Outcome, RandomMeasure,
};
use crate::transport::TransportKernel;

/// One stationary model `(P, ξ)`.
#[derive(Clone, Debug)]
pub struct FleetInstance {
    pub name: String,
    pub p: OmegaMeasure,
    pub xi: RandomMeasure,
}

impl FleetInstance {
    pub fn group(&self) -> &FiniteAbelianGroup {
        self.p.space().group()
    }
}

/// Groups of order at most 8 used for full mark fields.
pub fn small_groups() -> Vec<Vec<usize>> {
    vec![
        vec![1],
        vec![2],
        vec![3],
        vec![4],
        vec![5],
        vec![6],
        vec![7],
        vec![8],
        vec![2, 2],
        vec![2, 3],
        vec![2, 4],
        vec![2, 2, 2],
    ]
}

pub fn mark_sets() -> Vec<(&'static str, Vec<Scalar>)> {
    let r = Scalar::ratio;
    vec![
        ("{0,1}", vec![Scalar::zero(), Scalar::one()]),
        ("{1,2}", vec![Scalar::one(), r(2, 1)]),
        ("{0,1,2}", vec![Scalar::zero(), Scalar::one(), r(2, 1)]),
        (
            "{0,1,√2}",
            vec![Scalar::zero(), Scalar::one(), Scalar::sqrt2()],
        ),
        ("{0,1/2,3}", vec![Scalar::zero(), r(1, 2), r(3, 1)]),
    ]
}

fn group_name(moduli: &[usize]) -> String {
    moduli
        .iter()
        .map(|m| format!("Z{m}"))
        .collect::<Vec<_>>()
        .join("x")
}

fn random_law(rng: &mut ChaCha8Rng, k: usize) -> Vec<Scalar> {
    let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = raw.iter().sum();
    raw.into_iter().map(|x| Scalar::ratio(x, total)).collect()
}

fn mixture(a: &OmegaMeasure, b: &OmegaMeasure, wa: &Scalar) -> OmegaMeasure {
    let wb = Scalar::one() - wa;
    let weights = a
        .weights()
        .iter()
        .zip(b.weights())
        .map(|(x, y)| x * wa + y * &wb)
        .collect();
    OmegaMeasure::new(a.space().clone(), weights).expect("convex combination")
}

/// Weights constant on orbits, some orbits null, not normalized. The orbit of
/// `keep` is always charged.
fn orbit_weights(rng: &mut ChaCha8Rng, mf: &MarkField, keep: Outcome) -> OmegaMeasure {
    let sp = mf.space();
    let orbits = sp.orbits();
    let mut weights = vec![Scalar::zero(); sp.len()];
    for members in orbits.iter() {
        let forced = members.contains(&keep);
        let v = if !forced && rng.gen_ratio(1, 3) {
            0
        } else {
            rng.gen_range(1..=4)
        };
        for &w in members {
            weights[w] = Scalar::ratio(v, 3);
        }
    }
    OmegaMeasure::new(sp.clone(), weights).expect("nonnegative weights")
}

fn with_half_haar(xi: &RandomMeasure) -> RandomMeasure {
    let half = Scalar::ratio(1, 2);
    let sp = xi.space();
    let extra = RandomMeasure::haar(sp.clone())
        .scaled_by_outcome(&vec![half; sp.len()])
        .expect("positive");
    xi.add(&extra).expect("same space")
}

/// The standard fleet: full mark fields on groups of order ≤ 8 (at most 729 outcomes)
/// under product laws, mixtures of product laws and orbit-constant weights, plus
/// exactly-k point sets on groups of order 9 to 12.
pub fn standard_fleet(seed: u64) -> Vec<FleetInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for moduli in small_groups() {
        let g = Arc::new(FiniteAbelianGroup::new(&moduli).expect("valid moduli"));
        let n = g.order();
        for (mark_name, marks) in mark_sets() {
            let k = marks.len();
            if (k as u128).pow(n as u32) > 729 {
                continue;
            }
            let gname = group_name(&moduli);
            let law = random_law(&mut rng, k);
            let mf = make_mark_field(g.clone(), &marks, &law, 1 << 12).expect("small field");
            let other_law = random_law(&mut rng, k);
            let other =
                make_mark_field(g.clone(), &marks, &other_law, 1 << 12).expect("small field");
            let wa = Scalar::ratio(rng.gen_range(1..=3), 4);
            let keep = mf.space().len() - 1;
            out.push(FleetInstance {
                name: format!("{gname} marks{mark_name} product"),
                p: mf.p.clone(),
                xi: mf.xi.clone(),
            });
            out.push(FleetInstance {
                name: format!("{gname} marks{mark_name} mixture"),
                p: mixture(&mf.p, &other.p, &wa),
                xi: mf.xi.clone(),
            });
            out.push(FleetInstance {
                name: format!("{gname} marks{mark_name} orbit-weights"),
                p: orbit_weights(&mut rng, &mf, keep),
                xi: mf.xi.clone(),
            });
            if k == 2 {
                out.push(FleetInstance {
                    name: format!("{gname} marks{mark_name} product +haar/2"),
                    p: mf.p.clone(),
                    xi: with_half_haar(&mf.xi),
                });
            }
        }
    }
    for moduli in [vec![9], vec![10], vec![11], vec![12], vec![3, 3]] {
        let g = Arc::new(FiniteAbelianGroup::new(&moduli).expect("valid moduli"));
        for k in 1..=3 {
            let mf = exactly_k_points(g.clone(), k).expect("small field");
            out.push(FleetInstance {
                name: format!("{} exactly-{k}", group_name(&moduli)),
                p: mf.p,
                xi: mf.xi,
            });
        }
    }
    out
}

/// Multiplies every charged weight of Q by a random factor in `[1/2, 2]` and rescales to
/// the original total. The support is unchanged, so outcomes with `ξ(ω) = 0` stay uncharged.
pub fn jitter(q: &OmegaMeasure, rng: &mut ChaCha8Rng) -> OmegaMeasure {
    let total = q.total();
    let weights: Vec<Scalar> = q
        .weights()
        .iter()
        .map(|w| {
            if w.is_zero() {
                Scalar::zero()
            } else {
                w * &Scalar::ratio(rng.gen_range(4..=16), 8)
            }
        })
        .collect();
    let jittered = OmegaMeasure::new(q.space().clone(), weights).expect("nonnegative");
    let scale = &total / &jittered.total();
    jittered.scaled(&scale).expect("positive scale")
}

/// A random nonnegative measure on G with at most three atoms and small denominators.
fn random_row(g: &FiniteAbelianGroup, rng: &mut ChaCha8Rng, markovian: bool) -> GMeasure {
    let atoms = rng.gen_range(1..=3.min(g.order()));
    let mut sites: Vec<usize> = g.elements().collect();
    sites.shuffle(rng);
    let raw: Vec<i64> = (0..atoms).map(|_| rng.gen_range(1..=3)).collect();
    let total: i64 = if markovian {
        raw.iter().sum()
    } else {
        rng.gen_range(2..=4)
    };
    let mut masses = vec![Scalar::zero(); g.order()];
    for (&s, &x) in sites.iter().zip(&raw) {
        masses[s] = Scalar::ratio(x, total);
    }
    GMeasure::new(masses).expect("nonnegative")
}

/// An invariant kernel `T(ω, s){b} = T̃(θ_s ω){b − s}` with random origin rows.
pub fn random_invariant_kernel(
    xi: &RandomMeasure,
    rng: &mut ChaCha8Rng,
    markovian: bool,
) -> TransportKernel {
    let sp = xi.space();
    let g = sp.group();
    let base: Vec<GMeasure> = sp
        .outcomes()
        .map(|_| random_row(g, rng, markovian))
        .collect();
    TransportKernel::from_base(sp.clone(), &base).expect("valid rows")
}

/// Adds positive mass to the origin row at an outcome charged by P with `ξ(ω){0} > 0`.
/// The result is still invariant but pushes strictly more mass at that outcome.
pub fn corrupt_kernel(
    t: &TransportKernel,
    p: &OmegaMeasure,
    xi: &RandomMeasure,
    rng: &mut ChaCha8Rng,
) -> Option<TransportKernel> {
    let sp = t.space();
    let g = sp.group();
    let candidates: Vec<Outcome> = p
        .support()
        .into_iter()
        .filter(|&w| !xi.mass(w, 0).is_zero())
        .collect();
    let &w0 = candidates.choose(rng)?;
    let mut base = t.origin_rows();
    let extra = GMeasure::dirac(g, rng.gen_range(0..g.order()))
        .scale(&Scalar::ratio(1, rng.gen_range(2..=5)))
        .ok()?;
    base[w0] = base[w0].add(&extra);
    TransportKernel::from_base(sp.clone(), &base).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{is_balancing, push};

    #[test]
    fn fleet_is_large_and_valid() {
        let fleet = standard_fleet(7);
        assert!(fleet.len() >= 100, "{}", fleet.len());
        for inst in &fleet {
            assert!(inst.group().order() <= 12);
            assert!(inst.p.space().len() <= 4096);
            assert!(inst.p.is_stationary().holds(), "{}", inst.name);
            assert!(inst.xi.is_invariant().holds(), "{}", inst.name);
            assert!(
                inst.p.support().iter().any(|&w| !inst.xi.is_null_at(w)),
                "{}",
                inst.name
            );
        }
    }

    #[test]
    fn fleet_is_deterministic() {
        let a = standard_fleet(3);
        let b = standard_fleet(3);
        assert!(a
            .iter()
            .zip(&b)
            .all(|(x, y)| x.name == y.name && x.p == y.p && x.xi == y.xi));
    }

    #[test]
    fn jitter_keeps_support_and_total() {
        let fleet = standard_fleet(1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for inst in fleet.iter().take(20) {
            let j = jitter(&inst.p, &mut rng);
            assert_eq!(j.total(), inst.p.total());
            assert_eq!(j.support(), inst.p.support());
        }
    }

    #[test]
    fn corruption_breaks_balancing() {
        let fleet = standard_fleet(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for inst in fleet.iter().step_by(9) {
            let markovian = rng.gen_ratio(1, 2);
            let t = random_invariant_kernel(&inst.xi, &mut rng, markovian);
            assert!(t.is_invariant().holds());
            let eta = push(&inst.xi, &t).unwrap();
            assert!(is_balancing(&t, &inst.xi, &eta, &inst.p).unwrap().holds());
            let bad = corrupt_kernel(&t, &inst.p, &inst.xi, &mut rng).unwrap();
            assert!(bad.is_invariant().holds());
            assert!(
                !is_balancing(&bad, &inst.xi, &eta, &inst.p).unwrap().holds(),
                "{}",
                inst.name
            );
        }
    }
}
