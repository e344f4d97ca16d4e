use std::path::PathBuf;
use std::sync::Arc;

use palmlab_core::algebra::{FiniteAbelianGroup, Scalar};
use palmlab_core::fleet::jitter;
use palmlab_core::palm::palm;
use palmlab_core::serial::SpaceDocument;
use palmlab_core::space::{
    exactly_k_points, make_mark_field, OmegaMeasure, RandomMeasure, DEFAULT_OUTCOME_CAP,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{invalid, CliError};

pub const CONFIG_SCHEMA: &str = "palmlab-config-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Palm,
    Campbell,
    Mecke,
    Inversion,
    Massstat,
    Battery,
    Transport,
    Exists,
    Example65,
    Example71,
}

impl CheckName {
    pub const ALL: [CheckName; 10] = [
        CheckName::Palm,
        CheckName::Campbell,
        CheckName::Mecke,
        CheckName::Inversion,
        CheckName::Massstat,
        CheckName::Battery,
        CheckName::Transport,
        CheckName::Exists,
        CheckName::Example65,
        CheckName::Example71,
    ];
}

/// Where `(Ω, θ, P, ξ)` comes from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    /// I.i.d. marks with the given law on every site of the group.
    MarkField {
        group: Vec<usize>,
        marks: Vec<Scalar>,
        law: Vec<Scalar>,
    },
    /// k points placed uniformly on distinct sites.
    ExactlyK { group: Vec<usize>, k: usize },
    /// A serialized space carrying both `weights` and `xi`.
    Inline { document: SpaceDocument },
}

/// The measure Q handed to the Mecke, mass-stationarity and battery checkers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// The Palm probability of P (the Palm measure when ξ has zero intensity).
    #[default]
    Palm,
    /// The Palm probability with every charged weight multiplied by a random factor.
    Jitter { seed: u64 },
    /// Explicit weights in outcome order.
    Given { weights: Vec<Scalar> },
}

fn default_cap() -> usize {
    DEFAULT_OUTCOME_CAP
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub space: SpaceSpec,
    #[serde(default)]
    pub measure: MeasureSpec,
    #[serde(default)]
    pub suite: Vec<CheckName>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Largest outcome count a generator may enumerate.
    #[serde(default = "default_cap")]
    pub exact_cap: usize,
    #[serde(default)]
    pub seed: u64,
    /// Adds wall-clock times to the report, which then stops being reproducible.
    #[serde(default)]
    pub timings: bool,
}

/// The objects a configuration describes.
#[derive(Clone, Debug)]
pub struct Model {
    pub p: OmegaMeasure,
    pub xi: RandomMeasure,
    pub q: OmegaMeasure,
}

impl RunConfig {
    pub fn new(space: SpaceSpec, suite: Vec<CheckName>) -> Self {
        RunConfig {
            schema: CONFIG_SCHEMA.to_string(),
            space,
            measure: MeasureSpec::Palm,
            suite,
            output: None,
            exact_cap: DEFAULT_OUTCOME_CAP,
            seed: 0,
            timings: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(invalid)?;
        if config.schema != CONFIG_SCHEMA {
            return Err(CliError::Config(format!(
                "expected schema {CONFIG_SCHEMA:?}, found {:?}",
                config.schema
            )));
        }
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build(&self) -> Result<Model, CliError> {
        let (p, xi) = match &self.space {
            SpaceSpec::MarkField { group, marks, law } => {
                let g = FiniteAbelianGroup::new(group).map_err(invalid)?;
                let mf =
                    make_mark_field(Arc::new(g), marks, law, self.exact_cap).map_err(invalid)?;
                (mf.p, mf.xi)
            }
            SpaceSpec::ExactlyK { group, k } => {
                let g = FiniteAbelianGroup::new(group).map_err(invalid)?;
                if binomial(g.order(), *k) > self.exact_cap as u128 {
                    return Err(CliError::Config(format!(
                        "{k} points on {} sites exceed the outcome cap {}",
                        g.order(),
                        self.exact_cap
                    )));
                }
                let mf = exactly_k_points(Arc::new(g), *k).map_err(invalid)?;
                (mf.p, mf.xi)
            }
            SpaceSpec::Inline { document } => {
                let parts = document.parts().map_err(invalid)?;
                if parts.space.len() > self.exact_cap {
                    return Err(CliError::Config(
                        "inline space exceeds the outcome cap".into(),
                    ));
                }
                match (parts.p, parts.xi) {
                    (Some(p), Some(xi)) => (p, xi),
                    _ => {
                        return Err(CliError::Config(
                            "inline space needs both `weights` and `xi`".into(),
                        ))
                    }
                }
            }
        };
        let palm_result = palm(&p, &xi).map_err(invalid)?;
        let palm_q = palm_result.normalized.unwrap_or(palm_result.measure);
        let q = match &self.measure {
            MeasureSpec::Palm => palm_q,
            MeasureSpec::Jitter { seed } => jitter(&palm_q, &mut ChaCha8Rng::seed_from_u64(*seed)),
            MeasureSpec::Given { weights } => {
                OmegaMeasure::new(p.space().clone(), weights.clone()).map_err(invalid)?
            }
        };
        Ok(Model { p, xi, q })
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| {
        acc.saturating_mul((n - i) as u128) / (i as u128 + 1)
    })
}

/// Group moduli from text such as `z3`, `Z2xZ2`, `2x3` or `2,2`.
pub fn parse_group(text: &str) -> Result<Vec<usize>, CliError> {
    let moduli: Result<Vec<usize>, _> = text
        .split(['x', ','])
        .map(|part| part.trim().trim_start_matches(['z', 'Z']).parse::<usize>())
        .collect();
    match moduli {
        Ok(m) if !m.is_empty() && m.iter().all(|&n| n > 0) => Ok(m),
        _ => Err(CliError::Config(format!("cannot read group {text:?}"))),
    }
}
