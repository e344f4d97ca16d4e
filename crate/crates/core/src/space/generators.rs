use std::collections::HashMap;
use std::sync::Arc;

use super::{FlowSpace, OmegaMeasure, Outcome, RandomMeasure, SpaceError};
use crate::algebra::{FiniteAbelianGroup, GMeasure, Scalar};

pub const DEFAULT_OUTCOME_CAP: usize = 1 << 20;

/// A stationary marked configuration model on G.
///
/// `configs[ω][b]` is the index into `marks` of the mark at site `b`, and
/// `ξ(ω) = Σ_b marks[configs[ω][b]]·δ_b`.
#[derive(Clone, Debug)]
pub struct MarkField {
    pub p: OmegaMeasure,
    pub xi: RandomMeasure,
    pub marks: Vec<Scalar>,
    pub configs: Vec<Vec<usize>>,
}

impl MarkField {
    pub fn space(&self) -> &Arc<FlowSpace> {
        self.p.space()
    }
}

/// Ω = marks^G with coordinate shift `(θ_s ω)_b = ω_{b+s}`, product law, and the
/// configuration measure. Outcome `ω` has index `Σ_b ω_b·K^b` where `K = |marks|`.
pub fn make_mark_field(
    group: Arc<FiniteAbelianGroup>,
    marks: &[Scalar],
    law: &[Scalar],
    cap: usize,
) -> Result<MarkField, SpaceError> {
    if marks.len() != law.len() || marks.is_empty() {
        return Err(SpaceError::NotProbability(format!(
            "{} marks but {} law entries",
            marks.len(),
            law.len()
        )));
    }
    if let Some(p) = law.iter().find(|p| p.is_negative()) {
        return Err(SpaceError::NotProbability(format!("negative entry {p}")));
    }
    let total: Scalar = law.iter().sum();
    if !total.is_one() {
        return Err(SpaceError::NotProbability(format!(
            "entries sum to {total}"
        )));
    }
    if let Some(m) = marks.iter().find(|m| m.is_negative()) {
        return Err(SpaceError::NotProbability(format!(
            "negative mark value {m}"
        )));
    }
    let n = group.order();
    let k = marks.len();
    let count = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(SpaceError::TooManyOutcomes { count, cap });
    }
    let m = count as usize;
    let configs: Vec<Vec<usize>> = (0..m)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let d = idx % k;
                    idx /= k;
                    d
                })
                .collect()
        })
        .collect();
    let index = |c: &[usize]| c.iter().rev().fold(0usize, |acc, &d| acc * k + d);
    let flow: Vec<Vec<Outcome>> = group
        .elements()
        .map(|s| {
            configs
                .iter()
                .map(|c| index(&shift_config(&group, c, s)))
                .collect()
        })
        .collect();
    let labels = configs.iter().map(|c| config_label(c, k)).collect();
    let space = Arc::new(FlowSpace::new(group.clone(), labels, flow)?);
    let weights = configs
        .iter()
        .map(|c| c.iter().map(|&d| &law[d]).product())
        .collect();
    let p = OmegaMeasure::from_vec_unchecked(space.clone(), weights);
    let xi = configuration_measure(&space, marks, &configs);
    Ok(MarkField {
        p,
        xi,
        marks: marks.to_vec(),
        configs,
    })
}

/// Uniformly placed sets of exactly `k` points: 0/1 configurations with `k` ones,
/// each with probability `1/C(N, k)`. Outcomes are ordered as in the full 0/1 mark field.
pub fn exactly_k_points(group: Arc<FiniteAbelianGroup>, k: usize) -> Result<MarkField, SpaceError> {
    let n = group.order();
    if n > 24 || k > n {
        return Err(SpaceError::TooManyOutcomes {
            count: u128::MAX,
            cap: DEFAULT_OUTCOME_CAP,
        });
    }
    let configs: Vec<Vec<usize>> = (0u64..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).map(|b| (m >> b & 1) as usize).collect())
        .collect();
    let lookup: HashMap<&[usize], Outcome> = configs
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_slice(), i))
        .collect();
    let flow: Vec<Vec<Outcome>> = group
        .elements()
        .map(|s| {
            configs
                .iter()
                .map(|c| lookup[shift_config(&group, c, s).as_slice()])
                .collect()
        })
        .collect();
    let labels = configs.iter().map(|c| config_label(c, 2)).collect();
    let space = Arc::new(FlowSpace::new(group.clone(), labels, flow)?);
    let p = OmegaMeasure::uniform(space.clone());
    let marks = vec![Scalar::zero(), Scalar::one()];
    let xi = configuration_measure(&space, &marks, &configs);
    Ok(MarkField {
        p,
        xi,
        marks,
        configs,
    })
}

/// Ω = G with `θ_s ω = ω + s`.
pub fn translation_space(group: Arc<FiniteAbelianGroup>) -> Result<FlowSpace, SpaceError> {
    let labels = group.elements().map(|x| group.format_element(x)).collect();
    let flow = group
        .elements()
        .map(|s| group.elements().map(|w| group.add(w, s)).collect())
        .collect();
    FlowSpace::new(group, labels, flow)
}

/// `θ_s = id` for every `s`.
pub fn trivial_flow_space(
    group: Arc<FiniteAbelianGroup>,
    labels: Vec<String>,
) -> Result<FlowSpace, SpaceError> {
    let m = labels.len();
    let flow = group.elements().map(|_| (0..m).collect()).collect();
    FlowSpace::new(group, labels, flow)
}

/// Ω_A × Ω_B with the diagonal flow and the product weight.
///
/// Outcome `(a, b)` has index `a·|Ω_B| + b` and label `"{a}|{b}"`.
#[derive(Clone, Debug)]
pub struct ProductSpace {
    pub p: OmegaMeasure,
    pub first: Vec<Outcome>,
    pub second: Vec<Outcome>,
}

pub fn product_space(a: &OmegaMeasure, b: &OmegaMeasure) -> Result<ProductSpace, SpaceError> {
    let (sa, sb) = (a.space(), b.space());
    if sa.group() != sb.group() {
        return Err(SpaceError::SpaceMismatch);
    }
    let mb = sb.len();
    let pairs: Vec<(Outcome, Outcome)> = sa
        .outcomes()
        .flat_map(|x| sb.outcomes().map(move |y| (x, y)))
        .collect();
    let labels = pairs
        .iter()
        .map(|&(x, y)| format!("{}|{}", sa.label(x), sb.label(y)))
        .collect();
    let flow = sa
        .group()
        .elements()
        .map(|s| {
            pairs
                .iter()
                .map(|&(x, y)| sa.flow(s, x) * mb + sb.flow(s, y))
                .collect()
        })
        .collect();
    let space = Arc::new(FlowSpace::new(sa.group_arc().clone(), labels, flow)?);
    let weights = pairs
        .iter()
        .map(|&(x, y)| a.weight(x) * b.weight(y))
        .collect();
    Ok(ProductSpace {
        p: OmegaMeasure::from_vec_unchecked(space, weights),
        first: pairs.iter().map(|p| p.0).collect(),
        second: pairs.iter().map(|p| p.1).collect(),
    })
}

impl ProductSpace {
    pub fn space(&self) -> &Arc<FlowSpace> {
        self.p.space()
    }

    /// `(ω_A, ω_B) ↦ ξ(ω_A)` for ξ on the first factor.
    pub fn lift_first(&self, xi: &RandomMeasure) -> RandomMeasure {
        let per = self.first.iter().map(|&x| xi.at(x).clone()).collect();
        RandomMeasure::from_vec_unchecked(self.space().clone(), per)
    }

    /// `(ω_A, ω_B) ↦ ξ(ω_B)` for ξ on the second factor.
    pub fn lift_second(&self, xi: &RandomMeasure) -> RandomMeasure {
        let per = self.second.iter().map(|&y| xi.at(y).clone()).collect();
        RandomMeasure::from_vec_unchecked(self.space().clone(), per)
    }
}

fn shift_config(group: &FiniteAbelianGroup, c: &[usize], s: usize) -> Vec<usize> {
    group.elements().map(|b| c[group.add(b, s)]).collect()
}

fn config_label(c: &[usize], k: usize) -> String {
    if k <= 10 {
        c.iter().map(|d| char::from(b'0' + *d as u8)).collect()
    } else {
        c.iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn configuration_measure(
    space: &Arc<FlowSpace>,
    marks: &[Scalar],
    configs: &[Vec<usize>],
) -> RandomMeasure {
    let per = configs
        .iter()
        .map(|c| GMeasure::from_vec_unchecked(c.iter().map(|&d| marks[d].clone()).collect()))
        .collect();
    RandomMeasure::from_vec_unchecked(space.clone(), per)
}
