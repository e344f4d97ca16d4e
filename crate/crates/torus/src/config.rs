use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("torus side and dimension must be positive (n = {n}, d = {d})")]
    Shape { n: usize, d: usize },
    #[error("torus Z_{n}^{d} has too many sites")]
    TooLarge { n: usize, d: usize },
    #[error("{k} points do not divide {sites} sites")]
    QuotaIndivisible { k: usize, sites: usize },
    #[error("cannot place {k} points on {sites} sites")]
    TooManyPoints { k: usize, sites: usize },
    #[error("Bernoulli parameter must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("point {0} is not a site of the torus or is repeated")]
    BadPoint(usize),
    #[error("quota allocation needs exactly-k points")]
    NeedsExactlyK,
    #[error("window must be a nonempty set of sites")]
    BadWindow,
    #[error("csv export failed: {0}")]
    Csv(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum PointLaw {
    /// Each site independently occupied with probability `q`.
    Bernoulli { q: f64 },
    /// `k` distinct sites chosen uniformly.
    ExactlyK { k: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusConfig {
    pub n: usize,
    pub d: usize,
    pub points: PointLaw,
    pub seed: u64,
    pub replicates: usize,
}

impl TorusConfig {
    pub fn exactly_k(n: usize, d: usize, k: usize, seed: u64, replicates: usize) -> Self {
        TorusConfig {
            n,
            d,
            points: PointLaw::ExactlyK { k },
            seed,
            replicates,
        }
    }

    pub fn bernoulli(n: usize, d: usize, q: f64, seed: u64, replicates: usize) -> Self {
        TorusConfig {
            n,
            d,
            points: PointLaw::Bernoulli { q },
            seed,
            replicates,
        }
    }

    pub(crate) fn validate(&self, sites: usize) -> Result<(), TorusError> {
        match self.points {
            PointLaw::Bernoulli { q } if !(0.0..=1.0).contains(&q) => {
                Err(TorusError::BadProbability(q))
            }
            PointLaw::ExactlyK { k } if k > sites => Err(TorusError::TooManyPoints { k, sites }),
            _ => Ok(()),
        }
    }

    /// Occupied sites in increasing order.
    pub(crate) fn sample_points(&self, sites: usize, rng: &mut impl Rng) -> Vec<usize> {
        match self.points {
            PointLaw::Bernoulli { q } => (0..sites).filter(|_| rng.gen_bool(q)).collect(),
            PointLaw::ExactlyK { k } => {
                let mut pts = index::sample(rng, sites, k).into_vec();
                pts.sort_unstable();
                pts
            }
        }
    }
}
