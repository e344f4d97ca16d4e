use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    default_window_sets, is_mass_stationary_with, require_charged_mass, Fallback, MassStatError,
    MassStatOptions, MassStatReport,
};
use crate::algebra::{Element, FiniteAbelianGroup, GMeasure, Scalar, Subset};
use crate::space::{OmegaMeasure, Outcome, RandomMeasure};
use crate::verdict::Verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BatteryOptions {
    /// Extra kernels built as mixtures and compositions of the family.
    pub random_kernels: usize,
    pub seed: u64,
    pub mass: MassStatOptions,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        BatteryOptions {
            random_kernels: 50,
            seed: 0,
            mass: MassStatOptions::default(),
        }
    }
}

/// A ξ-preserving kernel under which Q is not invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BatteryWitness {
    pub kernel: String,
    pub outcome: Outcome,
    pub lhs: Scalar,
    pub rhs: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BatteryReport {
    pub mass_stationary: MassStatReport,
    pub kernels_checked: usize,
    pub invariance: Verdict<BatteryWitness>,
    /// Whether invariance under the whole battery matches the mass-stationarity verdict.
    pub agree: bool,
}

fn format_set(g: &FiniteAbelianGroup, s: &Subset) -> String {
    let parts: Vec<String> = s.iter().map(|x| g.format_element(x)).collect();
    format!("{{{}}}", parts.join(","))
}

fn window_targets(g: &FiniteAbelianGroup, c: &Subset) -> Vec<Subset> {
    if g.order() <= 4 {
        g.nonempty_subsets()
            .filter(|d| !d.intersection(c).is_empty())
            .collect()
    } else {
        c.iter().map(|d| g.singleton(d)).collect()
    }
}

/// Sparse origin rows: `rows[ω]` lists the atoms `(s, T(ω, 0){s})`, possibly with repeats.
type SparseRows = Vec<Vec<(Element, Scalar)>>;

/// Origin rows of `T′_{C,D} = λ_C(D)⁻¹ T_{C,D}` for every D in `targets`, at the listed
/// outcomes (other rows are left empty).
///
/// `T_{C,D}(ω, 0){s} = |C|⁻¹ Σ_{r∈C} 1_D(s + r) T_C(ω, −r){s}`, so each window
/// `T_C(ω, −r)` is computed once and its atoms are routed to the targets containing `s + r`.
fn preserving_rows(
    xi: &RandomMeasure,
    c: &Subset,
    targets: &[Subset],
    outcomes: &[Outcome],
    options: &MassStatOptions,
) -> Vec<SparseRows> {
    let sp = xi.space();
    let g = sp.group();
    let n = g.order();
    let members = c.to_vec();
    let containing: Vec<Vec<usize>> = g
        .elements()
        .map(|x| {
            (0..targets.len())
                .filter(|&i| targets[i].contains(x))
                .collect()
        })
        .collect();
    let scales: Vec<Scalar> = targets
        .iter()
        .map(|d| Scalar::ratio(1, c.intersection(d).len() as i64))
        .collect();
    let mut rows: Vec<SparseRows> = vec![vec![Vec::new(); sp.len()]; targets.len()];
    for &w in outcomes {
        for &r in &members {
            let shift = g.neg(r);
            let m: Scalar = members.iter().map(|&x| xi.mass(w, g.add(x, shift))).sum();
            let mut route = |s: usize, mass: &Scalar| {
                for &i in &containing[g.add(s, r)] {
                    rows[i][w].push((s, mass * &scales[i]));
                }
            };
            if m.is_zero() {
                match options.fallback {
                    Fallback::StayPut => route(shift, &Scalar::one()),
                    Fallback::Uniform => {
                        let share = Scalar::ratio(1, n as i64);
                        for s in g.elements() {
                            route(s, &share);
                        }
                    }
                }
                continue;
            }
            let inv = m.recip().expect("nonzero window mass");
            for &x in &members {
                let s = g.add(x, shift);
                let mass = xi.mass(w, s);
                if !mass.is_zero() {
                    route(s, &(mass * &inv));
                }
            }
        }
    }
    rows
}

fn densify(g: &FiniteAbelianGroup, rows: SparseRows) -> Vec<GMeasure> {
    rows.into_iter()
        .map(|atoms| {
            let mut row = vec![Scalar::zero(); g.order()];
            for (s, m) in atoms {
                row[s] += &m;
            }
            GMeasure::from_vec_unchecked(row)
        })
        .collect()
}

fn sparsify(rows: &[GMeasure]) -> SparseRows {
    rows.iter()
        .map(|r| {
            r.masses()
                .iter()
                .enumerate()
                .filter(|(_, m)| !m.is_zero())
                .map(|(s, m)| (s, m.clone()))
                .collect()
        })
        .collect()
}

/// Origin rows of the composition `T₁T₂`: `Σ_u T₁(ω, 0){u} T₂(θ_u ω, 0){t − u}`.
fn compose_rows(xi: &RandomMeasure, first: &[GMeasure], second: &[GMeasure]) -> Vec<GMeasure> {
    let sp = xi.space();
    let g = sp.group();
    sp.outcomes()
        .map(|w| {
            let mut row = vec![Scalar::zero(); g.order()];
            for (u, m) in first[w].masses().iter().enumerate() {
                if m.is_zero() {
                    continue;
                }
                for (v, m2) in second[sp.flow(u, w)].masses().iter().enumerate() {
                    if !m2.is_zero() {
                        row[g.add(u, v)] += &(m * m2);
                    }
                }
            }
            GMeasure::from_vec_unchecked(row)
        })
        .collect()
}

/// `Σ_ω Q{ω} Σ_t T(ω, 0){t} 1{θ_t ω = ω′}` against `Q{ω′}`.
fn invariance_mismatch(q: &OmegaMeasure, rows: &SparseRows) -> Option<(Outcome, Scalar, Scalar)> {
    let sp = q.space();
    let mut image = vec![Scalar::zero(); sp.len()];
    for w in q.support() {
        for (t, m) in &rows[w] {
            image[sp.flow(*t, w)] += &(q.weight(w) * m);
        }
    }
    image
        .into_iter()
        .enumerate()
        .find_map(|(w, l)| (l != *q.weight(w)).then(|| (w, l, q.weight(w).clone())))
}

/// Invariance of Q under the ξ-preserving kernels `T′_{C,D}` and random mixtures and
/// compositions of them, set against [`is_mass_stationary_with`] on the same window sets.
pub fn check_preserving_battery(
    q: &OmegaMeasure,
    xi: &RandomMeasure,
    sets: Option<&[Subset]>,
    options: &BatteryOptions,
) -> Result<BatteryReport, MassStatError> {
    require_charged_mass(q, xi)?;
    let g = q.space().group();
    let owned;
    let sets = match sets {
        Some(s) => s,
        None => {
            owned = default_window_sets(g, options.mass.all_subsets_up_to);
            &owned
        }
    };
    let mass_stationary = is_mass_stationary_with(q, xi, Some(sets), &options.mass)?;
    let family: Vec<(Subset, Subset)> = sets
        .iter()
        .flat_map(|c| {
            window_targets(g, c)
                .into_iter()
                .map(move |d| (c.clone(), d))
        })
        .collect();
    let describe =
        |c: &Subset, d: &Subset| format!("C={} D={}", format_set(g, c), format_set(g, d));
    let all: Vec<Outcome> = q.space().outcomes().collect();
    let support = q.support();
    let single = |c: &Subset, d: &Subset| {
        let rows = preserving_rows(xi, c, std::slice::from_ref(d), &all, &options.mass);
        densify(g, rows.into_iter().next().expect("one target"))
    };

    let mut invariance = sets
        .par_iter()
        .find_map_first(|c| {
            let targets = window_targets(g, c);
            let rows = preserving_rows(xi, c, &targets, &support, &options.mass);
            targets.iter().zip(&rows).find_map(|(d, k)| {
                invariance_mismatch(q, k).map(|(outcome, lhs, rhs)| BatteryWitness {
                    kernel: describe(c, d),
                    outcome,
                    lhs,
                    rhs,
                })
            })
        })
        .map_or(Verdict::Holds, Verdict::Fails);

    let mut checked = family.len();
    if invariance.holds() && !family.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let identity: Vec<GMeasure> = q
            .space()
            .outcomes()
            .map(|_| GMeasure::dirac(g, 0))
            .collect();
        for i in 0..options.random_kernels {
            let parts = rng.gen_range(1..=3usize);
            let weights: Vec<i64> = (0..parts).map(|_| rng.gen_range(1..=5)).collect();
            let total: i64 = weights.iter().sum();
            let mut rows: Vec<GMeasure> = q.space().outcomes().map(|_| GMeasure::zero(g)).collect();
            let mut names = Vec::new();
            for &wt in &weights {
                let (c, d) = family.choose(&mut rng).expect("nonempty family");
                let share = Scalar::ratio(wt, total);
                for (acc, r) in rows.iter_mut().zip(single(c, d)) {
                    acc.add_scaled(&r, &share);
                }
                names.push(format!("{wt}/{total}·[{}]", describe(c, d)));
            }
            let mut name = names.join(" + ");
            if rng.gen_ratio(1, 2) {
                let (c, d) = family.choose(&mut rng).expect("nonempty family");
                let second = if rng.gen_ratio(1, 4) {
                    identity.clone()
                } else {
                    single(c, d)
                };
                rows = compose_rows(xi, &rows, &second);
                name = format!("({name}) then [{}]", describe(c, d));
            }
            checked += 1;
            if let Some((outcome, lhs, rhs)) = invariance_mismatch(q, &sparsify(&rows)) {
                invariance = Verdict::Fails(BatteryWitness {
                    kernel: format!("random #{i}: {name}"),
                    outcome,
                    lhs,
                    rhs,
                });
                break;
            }
        }
    }
    let agree = invariance.holds() == mass_stationary.holds;
    Ok(BatteryReport {
        mass_stationary,
        kernels_checked: checked,
        invariance,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::massstat::{fair_bernoulli_palm, split_window_kernel};
    use crate::transport::{push, TransportKernel};

    #[test]
    fn family_rows_are_xi_preserving() {
        let (mf, _) = fair_bernoulli_palm(3).unwrap();
        let g = mf.space().group().clone();
        let all: Vec<Outcome> = mf.space().outcomes().collect();
        for fallback in [Fallback::StayPut, Fallback::Uniform] {
            let opts = MassStatOptions {
                fallback,
                ..Default::default()
            };
            for c in g.nonempty_subsets() {
                let targets = window_targets(&g, &c);
                for (d, rows) in targets
                    .iter()
                    .zip(preserving_rows(&mf.xi, &c, &targets, &all, &opts))
                {
                    let rows = densify(&g, rows);
                    let k = TransportKernel::from_base(mf.space().clone(), &rows).unwrap();
                    assert_eq!(push(&mf.xi, &k).unwrap(), mf.xi);
                    let direct = split_window_kernel(&mf.xi, &c, d, opts.fallback).unwrap();
                    let lambda = Scalar::ratio(c.intersection(d).len() as i64, c.len() as i64);
                    assert_eq!(k.scaled(&lambda).unwrap(), direct);
                }
            }
        }
    }

    #[test]
    fn composition_matches_kernel_composition() {
        let (mf, _) = fair_bernoulli_palm(3).unwrap();
        let g = mf.space().group().clone();
        let opts = MassStatOptions::default();
        let all: Vec<Outcome> = mf.space().outcomes().collect();
        let one = |c: &Subset, d: Subset| {
            densify(
                &g,
                preserving_rows(&mf.xi, c, &[d], &all, &opts).pop().unwrap(),
            )
        };
        let a = one(&g.subset(&[0, 1]), g.singleton(1));
        let b = one(&g.full_set(), g.subset(&[0, 2]));
        let ka = TransportKernel::from_base(mf.space().clone(), &a).unwrap();
        let kb = TransportKernel::from_base(mf.space().clone(), &b).unwrap();
        assert_eq!(
            compose_rows(&mf.xi, &a, &b),
            ka.compose(&kb).unwrap().origin_rows()
        );
    }

    #[test]
    fn battery_agrees_on_palm_and_non_palm() {
        let (mf, q) = fair_bernoulli_palm(3).unwrap();
        let r = check_preserving_battery(&q, &mf.xi, None, &BatteryOptions::default()).unwrap();
        assert!(r.mass_stationary.holds && r.invariance.holds() && r.agree);
        assert_eq!(r.kernels_checked, family_size(3) + 50);
        let seven = mf.p.restricted(|w| w != 0).normalized().unwrap();
        let r = check_preserving_battery(&seven, &mf.xi, None, &BatteryOptions::default()).unwrap();
        assert!(!r.mass_stationary.holds && !r.invariance.holds() && r.agree);
    }

    fn family_size(n: usize) -> usize {
        let g = FiniteAbelianGroup::cyclic(n).unwrap();
        g.nonempty_subsets()
            .map(|c| window_targets(&g, &c).len())
            .sum()
    }
}
