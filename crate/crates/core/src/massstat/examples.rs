use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{is_mass_stationary, window_row, Fallback, MassStatError, MassStatReport};
use crate::algebra::{Element, FiniteAbelianGroup, Scalar, Subset};
use crate::palm::palm;
use crate::space::{
    make_mark_field, product_space, MarkField, OmegaMeasure, Outcome, RandomMeasure, SpaceError,
    DEFAULT_OUTCOME_CAP,
};

/// Candidate origin maps per orbit are enumerated exhaustively up to this many.
const EXHAUSTIVE_LIMIT: u128 = 1 << 16;
const SAMPLED_CANDIDATES: usize = 4096;

fn bernoulli_field(group: Arc<FiniteAbelianGroup>, p: &Scalar) -> Result<MarkField, MassStatError> {
    if !p.is_positive() || *p >= Scalar::one() {
        return Err(MassStatError::BadProbability(p.clone()));
    }
    let law = [Scalar::one() - p, p.clone()];
    Ok(make_mark_field(
        group,
        &[Scalar::zero(), Scalar::one()],
        &law,
        DEFAULT_OUTCOME_CAP,
    )?)
}

/// Fair Bernoulli marks on `Z_n` together with the Palm probability of the configuration measure.
pub fn fair_bernoulli_palm(n: usize) -> Result<(MarkField, OmegaMeasure), MassStatError> {
    let g = Arc::new(FiniteAbelianGroup::cyclic(n).map_err(SpaceError::from)?);
    let mf = bernoulli_field(g, &Scalar::ratio(1, 2))?;
    let q = palm(&mf.p, &mf.xi)?.normalized.expect("positive intensity");
    Ok((mf, q))
}

/// `E_Q[Σ_s 1_A(θ_s ω) T_C(ω, 0){s}]` and `Q(A)`.
pub fn single_window_identity(
    q: &OmegaMeasure,
    xi: &RandomMeasure,
    c: &Subset,
    event: impl Fn(Outcome) -> bool,
) -> Result<(Scalar, Scalar), MassStatError> {
    if c.is_empty() {
        return Err(MassStatError::EmptySet);
    }
    if !q.same_space(xi.space()) {
        return Err(MassStatError::SpaceMismatch);
    }
    let sp = q.space();
    let lhs = q.expectation(|w| {
        let row = window_row(xi, w, c, 0, Fallback::StayPut);
        row.masses()
            .iter()
            .enumerate()
            .filter(|&(s, m)| !m.is_zero() && event(sp.flow(s, w)))
            .map(|(_, m)| m.clone())
            .sum()
    });
    let rhs = q.expectation(|w| {
        if event(w) {
            Scalar::one()
        } else {
            Scalar::zero()
        }
    });
    Ok((lhs, rhs))
}

/// Fair Bernoulli marks on `Z_3`, Q the Palm probability, `C = {0, 1}` and
/// `A = {ξ{1} = 1}`: returns `(3/8, 1/2)`.
pub fn single_window_example() -> Result<(Scalar, Scalar), MassStatError> {
    let (mf, q) = fair_bernoulli_palm(3)?;
    let g = mf.space().group();
    let c = g.subset(&[0, 1]);
    single_window_identity(&q, &mf.xi, &c, |w| mf.configs[w][1] == 1)
}

/// Pairs of Bernoulli(p) configurations with the diagonal shift; Q is the first factor
/// with a point adjoined at 0 times the second factor; `ξ = ξ₁ + √2·ξ₂`.
#[derive(Clone, Debug)]
pub struct IrrationalMarksModel {
    pub q: OmegaMeasure,
    pub product_law: OmegaMeasure,
    pub xi: RandomMeasure,
    pub xi_first: RandomMeasure,
    pub xi_second: RandomMeasure,
}

pub fn irrational_marks_model(
    group: Arc<FiniteAbelianGroup>,
    p: &Scalar,
) -> Result<IrrationalMarksModel, MassStatError> {
    let mf = bernoulli_field(group, p)?;
    let count = (mf.p.space().len() as u128).pow(2);
    if count > DEFAULT_OUTCOME_CAP as u128 {
        return Err(SpaceError::TooManyOutcomes {
            count,
            cap: DEFAULT_OUTCOME_CAP,
        }
        .into());
    }
    let adjoined = palm(&mf.p, &mf.xi)?.normalized.expect("positive intensity");
    let q = product_space(&adjoined, &mf.p)?;
    let law = product_space(&mf.p, &mf.p)?;
    let xi_first = q.lift_first(&mf.xi);
    let xi_second = q.lift_second(&mf.xi);
    let sqrt2 = Scalar::sqrt2();
    let per = xi_first
        .per_outcome()
        .iter()
        .zip(xi_second.per_outcome())
        .map(|(a, b)| a.add(&b.scale(&sqrt2).expect("positive scale")))
        .collect();
    let xi = RandomMeasure::new(q.space().clone(), per)?;
    let product_law = OmegaMeasure::new(q.space().clone(), law.p.weights().to_vec())?;
    Ok(IrrationalMarksModel {
        q: q.p,
        product_law,
        xi,
        xi_first,
        xi_second,
    })
}

/// An orbit on which some ξ-preserving allocation rule is not ξ₁-preserving or moves Q.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrbitRuleFailure {
    pub orbit: usize,
    pub origin_map: Vec<(Outcome, Element)>,
    pub first_preserving: bool,
    pub invariant: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IrrationalMarksReport {
    pub outcomes: usize,
    pub q_is_palm_of_first: bool,
    /// False when some orbit had too many candidate maps and was sampled.
    pub exhaustive: bool,
    pub candidates_checked: u128,
    /// Number of ξ-preserving allocation rules found (saturating).
    pub preserving_rules: u128,
    pub all_first_preserving: bool,
    pub all_invariant: bool,
    pub failures: Vec<OrbitRuleFailure>,
    pub mass_stationary: MassStatReport,
}

/// Position of `θ_s ω_i` inside the orbit list, for every member i and shift s.
fn orbit_flow(model: &IrrationalMarksModel, members: &[Outcome]) -> Vec<Vec<usize>> {
    let sp = model.q.space();
    members
        .iter()
        .map(|&w| {
            sp.group()
                .elements()
                .map(|s| {
                    members
                        .iter()
                        .position(|&x| x == sp.flow(s, w))
                        .expect("orbit is flow-closed")
                })
                .collect()
        })
        .collect()
}

/// `Σ_s μ(ω_i){s} 1{π(θ_s ω_i) + s = t} = μ(ω_i){t}` for every member and t.
fn preserves(
    g: &FiniteAbelianGroup,
    mu: &RandomMeasure,
    members: &[Outcome],
    flow: &[Vec<usize>],
    pi: &[Element],
) -> bool {
    members.iter().enumerate().all(|(i, &w)| {
        let mut pushed = vec![Scalar::zero(); g.order()];
        for s in g.elements() {
            let m = mu.mass(w, s);
            if !m.is_zero() {
                pushed[g.add(pi[flow[i][s]], s)] += m;
            }
        }
        pushed.iter().zip(mu.at(w).masses()).all(|(a, b)| a == b)
    })
}

/// `Σ_i Q{ω_i} 1{θ_{π(ω_i)} ω_i = ω′} = Q{ω′}` for ω′ in the orbit.
fn keeps_q(q: &OmegaMeasure, members: &[Outcome], flow: &[Vec<usize>], pi: &[Element]) -> bool {
    let mut image = vec![Scalar::zero(); members.len()];
    for (i, &w) in members.iter().enumerate() {
        image[flow[i][pi[i]]] += q.weight(w);
    }
    image.iter().zip(members).all(|(a, &w)| a == q.weight(w))
}

/// Enumerates covariant allocation rules orbit by orbit (a rule is determined by its
/// origin map π, and preservation on an orbit only involves π restricted to it),
/// keeps the ξ-preserving ones and checks that each is ξ₁-preserving and leaves Q
/// invariant under `θ_τ`; then runs the mass-stationarity check.
pub fn irrational_marks_example(
    group: Arc<FiniteAbelianGroup>,
    p: &Scalar,
) -> Result<IrrationalMarksReport, MassStatError> {
    let model = irrational_marks_model(group.clone(), p)?;
    let sp = model.q.space().clone();
    let g = sp.group();
    let n = g.order();
    let palm_first = palm(&model.product_law, &model.xi_first)?.normalized;
    let q_is_palm_of_first = palm_first.as_ref() == Some(&model.q);

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0071);
    let mut exhaustive = true;
    let mut candidates_checked: u128 = 0;
    let mut preserving_rules: u128 = 1;
    let mut failures = Vec::new();
    for (id, members) in sp.orbits().iter().enumerate() {
        let flow = orbit_flow(&model, members);
        let m = members.len();
        let total = (n as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
        let candidates: Box<dyn Iterator<Item = Vec<Element>>> = if total <= EXHAUSTIVE_LIMIT {
            Box::new((0..total).map(move |mut idx| {
                (0..m)
                    .map(|_| {
                        let d = (idx % n as u128) as usize;
                        idx /= n as u128;
                        d
                    })
                    .collect()
            }))
        } else {
            exhaustive = false;
            let mut sampled = vec![vec![0; m]];
            sampled.extend(
                (0..SAMPLED_CANDIDATES).map(|_| (0..m).map(|_| rng.gen_range(0..n)).collect()),
            );
            Box::new(sampled.into_iter())
        };
        let mut found: u128 = 0;
        for pi in candidates {
            candidates_checked += 1;
            if !preserves(g, &model.xi, members, &flow, &pi) {
                continue;
            }
            found += 1;
            let first_preserving = preserves(g, &model.xi_first, members, &flow, &pi);
            let invariant = keeps_q(&model.q, members, &flow, &pi);
            if !(first_preserving && invariant) {
                failures.push(OrbitRuleFailure {
                    orbit: id,
                    origin_map: members.iter().copied().zip(pi).collect(),
                    first_preserving,
                    invariant,
                });
            }
        }
        preserving_rules = preserving_rules.saturating_mul(found);
    }
    let all_first_preserving = failures.iter().all(|f| f.first_preserving);
    let all_invariant = failures.iter().all(|f| f.invariant);
    let mass_stationary = is_mass_stationary(&model.q, &model.xi, None)?;
    Ok(IrrationalMarksReport {
        outcomes: sp.len(),
        q_is_palm_of_first,
        exhaustive,
        candidates_checked,
        preserving_rules,
        all_first_preserving,
        all_invariant,
        failures,
        mass_stationary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::palm::check_mecke;

    fn z(n: usize) -> Arc<FiniteAbelianGroup> {
        Arc::new(FiniteAbelianGroup::cyclic(n).unwrap())
    }

    #[test]
    fn window_example_numbers() {
        assert_eq!(
            single_window_example().unwrap(),
            (Scalar::ratio(3, 8), Scalar::ratio(1, 2))
        );
    }

    #[test]
    fn window_identity_by_hand() {
        // outcomes with ω_0 = 1, each of weight 1/4; T_C(ω, 0) splits over {0,1} when ω_1 = 1
        let (mf, q) = fair_bernoulli_palm(3).unwrap();
        let mut lhs = Scalar::zero();
        for w in q.support() {
            let c = &mf.configs[w];
            let quarter = Scalar::ratio(1, 4);
            if c[1] == 1 {
                // s = 0 lands on ω (ξ{1} = 1), s = 1 lands on θ_1 ω (needs ω_2 = 1)
                lhs += &(&quarter * &Scalar::ratio(1, 2));
                if c[2] == 1 {
                    lhs += &(&quarter * &Scalar::ratio(1, 2));
                }
            }
        }
        assert_eq!(lhs, Scalar::ratio(3, 8));
    }

    #[test]
    fn irrational_marks_on_small_groups() {
        for n in [2, 3] {
            let r = irrational_marks_example(z(n), &Scalar::ratio(1, 2)).unwrap();
            assert_eq!(r.outcomes, 1 << (2 * n));
            assert!(r.q_is_palm_of_first && r.exhaustive);
            assert!(r.preserving_rules >= 1);
            assert!(
                r.all_first_preserving && r.all_invariant,
                "{:?}",
                r.failures
            );
            assert!(!r.mass_stationary.holds);
            assert!(r.mass_stationary.witness.is_some());
        }
    }

    #[test]
    fn without_second_component_q_is_mass_stationary() {
        let model = irrational_marks_model(z(2), &Scalar::ratio(1, 3)).unwrap();
        assert!(
            is_mass_stationary(&model.q, &model.xi_first, None)
                .unwrap()
                .holds
        );
        assert!(check_mecke(&model.q, &model.xi_first).unwrap().holds());
        assert!(!check_mecke(&model.q, &model.xi).unwrap().holds());
    }

    #[test]
    fn bad_probability() {
        assert!(matches!(
            irrational_marks_model(z(2), &Scalar::one()),
            Err(MassStatError::BadProbability(_))
        ));
        assert!(matches!(
            irrational_marks_model(z(2), &Scalar::zero()),
            Err(MassStatError::BadProbability(_))
        ));
    }

    /// Every origin map on the 16-outcome space, without the orbit factorization.
    #[test]
    fn brute_force_all_rules_on_z2() {
        let model = irrational_marks_model(z(2), &Scalar::ratio(1, 2)).unwrap();
        let sp = model.q.space().clone();
        let g = sp.group().clone();
        let all: Vec<Outcome> = sp.outcomes().collect();
        let flow: Vec<Vec<usize>> = all
            .iter()
            .map(|&w| g.elements().map(|s| sp.flow(s, w)).collect())
            .collect();
        let mut count = 0u32;
        for mask in 0u32..(1 << 16) {
            let pi: Vec<Element> = (0..16).map(|i| ((mask >> i) & 1) as usize).collect();
            if !preserves(&g, &model.xi, &all, &flow, &pi) {
                continue;
            }
            count += 1;
            assert!(preserves(&g, &model.xi_first, &all, &flow, &pi));
            assert!(keeps_q(&model.q, &all, &flow, &pi));
        }
        let r = irrational_marks_example(z(2), &Scalar::ratio(1, 2)).unwrap();
        assert_eq!(r.preserving_rules, count as u128);
    }
}
