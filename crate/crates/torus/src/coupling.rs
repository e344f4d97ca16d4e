use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocate::stable_marriage_allocate;
use crate::config::{PointLaw, TorusConfig, TorusError};
use crate::geometry::Torus;

/// Blocking pairs are searched exhaustively on tori with at most this many sites.
const STABILITY_CHECK_SITES: usize = 4096;

/// How the origin of the left-hand sample is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OriginSampling {
    /// The construction under test: allocated point, or a Palm-distributed configuration.
    #[default]
    Palm,
    /// Negative control: a uniformly chosen site, or the configuration as sampled.
    Stationary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingReport {
    pub replicates: usize,
    pub quota: usize,
    pub tv_distance: f64,
    pub bins: usize,
    pub quota_violations: usize,
    pub stability_checked: usize,
    pub blocking_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowReport {
    pub replicates: usize,
    pub tv_distance: f64,
    pub bins: usize,
}

type Histogram = BTreeMap<Vec<u32>, u64>;

fn replicate_rng(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

/// The point configuration that replicate `replicate` of a coupling run starts from.
pub fn sample_configuration(
    config: &TorusConfig,
    replicate: usize,
) -> Result<Vec<usize>, TorusError> {
    let torus = Torus::new(config.n, config.d)?;
    config.validate(torus.size())?;
    Ok(config.sample_points(torus.size(), &mut replicate_rng(config.seed, replicate)))
}

/// Counts of points in the sup-norm boxes of radius `1..=radii` around `center`.
fn box_counts(torus: &Torus, points: &[usize], center: usize, radii: usize) -> Vec<u32> {
    let mut counts = vec![0u32; radii];
    for &x in points {
        let r = torus.sup_distance(x, center) as usize;
        for c in counts.iter_mut().skip(r.max(1) - 1) {
            *c += 1;
        }
    }
    counts
}

fn merge(mut a: Histogram, b: Histogram) -> Histogram {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

fn total_variation(left: &Histogram, right: &Histogram, n: usize) -> (f64, usize) {
    let mut keys: Vec<&Vec<u32>> = left.keys().chain(right.keys()).collect();
    keys.sort();
    keys.dedup();
    let diff: u64 = keys
        .iter()
        .map(|k| {
            let (a, b) = (
                left.get(*k).copied().unwrap_or(0),
                right.get(*k).copied().unwrap_or(0),
            );
            a.abs_diff(b)
        })
        .sum();
    (diff as f64 / (2.0 * n as f64), keys.len())
}

#[derive(Default)]
struct Tally {
    left: Histogram,
    right: Histogram,
    quota_violations: usize,
    stability_checked: usize,
    blocking_pairs: usize,
}

impl Tally {
    fn merge(self, other: Tally) -> Tally {
        Tally {
            left: merge(self.left, other.left),
            right: merge(self.right, other.right),
            quota_violations: self.quota_violations + other.quota_violations,
            stability_checked: self.stability_checked + other.stability_checked,
            blocking_pairs: self.blocking_pairs + other.blocking_pairs,
        }
    }
}

/// Monte Carlo comparison of the configuration seen from the allocated point `τ(0)` of a
/// uniformly placed origin with the configuration seen from a uniformly chosen point.
///
/// Statistic: point counts in the boxes of radius `1..=radii`. Every allocation is
/// checked for exact quota, and for stability when the torus has at most 4096 sites.
pub fn verify_shift_coupling(
    config: &TorusConfig,
    radii: usize,
    origin: OriginSampling,
) -> Result<CouplingReport, TorusError> {
    let torus = Torus::new(config.n, config.d)?;
    config.validate(torus.size())?;
    let k = match config.points {
        PointLaw::ExactlyK { k } => k,
        PointLaw::Bernoulli { .. } => return Err(TorusError::NeedsExactlyK),
    };
    if k == 0 || torus.size() % k != 0 {
        return Err(TorusError::QuotaIndivisible {
            k,
            sites: torus.size(),
        });
    }
    let check_stability = torus.size() <= STABILITY_CHECK_SITES;
    let tally = (0..config.replicates)
        .into_par_iter()
        .fold(Tally::default, |mut t, i| {
            let mut rng = replicate_rng(config.seed, i);
            let points = config.sample_points(torus.size(), &mut rng);
            let alloc =
                stable_marriage_allocate(&torus, &points).expect("k divides the number of sites");
            if !alloc.quota_exact() {
                t.quota_violations += 1;
            }
            if check_stability {
                t.stability_checked += 1;
                if alloc.blocking_pair(&torus).is_some() {
                    t.blocking_pairs += 1;
                }
            }
            let site = rng.gen_range(0..torus.size());
            let center = match origin {
                OriginSampling::Palm => alloc.point_of(site),
                OriginSampling::Stationary => site,
            };
            let palm_center = points[rng.gen_range(0..points.len())];
            *t.left
                .entry(box_counts(&torus, &points, center, radii))
                .or_insert(0) += 1;
            *t.right
                .entry(box_counts(&torus, &points, palm_center, radii))
                .or_insert(0) += 1;
            t
        })
        .reduce(Tally::default, Tally::merge);
    let (tv_distance, bins) = total_variation(&tally.left, &tally.right, config.replicates.max(1));
    Ok(CouplingReport {
        replicates: config.replicates,
        quota: torus.size() / k,
        tv_distance,
        bins,
        quota_violations: tally.quota_violations,
        stability_checked: tally.stability_checked,
        blocking_pairs: tally.blocking_pairs,
    })
}

/// Monte Carlo comparison of `(statistic(θ_V ω), U + V)` with `(statistic(ω), U)`, where
/// `U` is uniform on the window C and V is a uniformly chosen point of ω in `C − U`
/// (or `−U` when that window is empty).
///
/// With [`OriginSampling::Palm`], ω has a point at the origin: for exactly-k processes a
/// uniformly chosen point is moved to the origin, for Bernoulli sites the origin is
/// occupied and the other sites are left independent. Both sides use the same draw.
pub fn verify_window_coupling_mc(
    config: &TorusConfig,
    window: &[usize],
    radii: usize,
    origin: OriginSampling,
) -> Result<WindowReport, TorusError> {
    let torus = Torus::new(config.n, config.d)?;
    config.validate(torus.size())?;
    if window.is_empty() || window.iter().any(|&c| c >= torus.size()) {
        return Err(TorusError::BadWindow);
    }
    if origin == OriginSampling::Palm && config.points == (PointLaw::ExactlyK { k: 0 }) {
        return Err(TorusError::TooManyPoints {
            k: 0,
            sites: torus.size(),
        });
    }
    let tally = (0..config.replicates)
        .into_par_iter()
        .fold(Tally::default, |mut t, i| {
            let mut rng = replicate_rng(config.seed, i);
            let mut points = config.sample_points(torus.size(), &mut rng);
            if origin == OriginSampling::Palm {
                match config.points {
                    PointLaw::ExactlyK { .. } => {
                        let c = points[rng.gen_range(0..points.len())];
                        points = points.iter().map(|&x| torus.sub(x, c)).collect();
                    }
                    PointLaw::Bernoulli { .. } => {
                        if points.first() != Some(&0) {
                            points.insert(0, 0);
                        }
                    }
                }
            }
            let mut occupied = vec![false; torus.size()];
            for &x in &points {
                occupied[x] = true;
            }
            let u = window[rng.gen_range(0..window.len())];
            let candidates: Vec<usize> = window
                .iter()
                .map(|&c| torus.sub(c, u))
                .filter(|&s| occupied[s])
                .collect();
            let v = if candidates.is_empty() {
                torus.neg(u)
            } else {
                candidates[rng.gen_range(0..candidates.len())]
            };
            let mut left = box_counts(&torus, &points, v, radii);
            left.push(torus.add(u, v) as u32);
            let mut right = box_counts(&torus, &points, 0, radii);
            right.push(u as u32);
            *t.left.entry(left).or_insert(0) += 1;
            *t.right.entry(right).or_insert(0) += 1;
            t
        })
        .reduce(Tally::default, Tally::merge);
    let (tv_distance, bins) = total_variation(&tally.left, &tally.right, config.replicates.max(1));
    Ok(WindowReport {
        replicates: config.replicates,
        tv_distance,
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_counts_nest() {
        let t = Torus::new(8, 2).unwrap();
        let pts = [
            0,
            t.index(&[1, 0]),
            t.index(&[7, 7]),
            t.index(&[3, 0]),
            t.index(&[4, 4]),
        ];
        assert_eq!(box_counts(&t, &pts, 0, 4), vec![3, 3, 4, 5]);
        assert_eq!(box_counts(&t, &pts, t.index(&[4, 4]), 1), vec![1]);
    }

    #[test]
    fn total_variation_of_histograms() {
        let a: Histogram = [(vec![0], 3), (vec![1], 1)].into_iter().collect();
        let b: Histogram = [(vec![1], 2), (vec![2], 2)].into_iter().collect();
        assert_eq!(total_variation(&a, &b, 4), (0.75, 3));
        assert_eq!(total_variation(&a, &a, 4), (0.0, 2));
    }
}
