use std::time::Instant;

use palmlab_core::algebra::Scalar;
use palmlab_core::existence::{construct_balancing_kernel, ExistenceError};
use palmlab_core::fleet::random_invariant_kernel;
use palmlab_core::massstat::{
    check_preserving_battery, default_window_sets, is_mass_stationary, single_window_example,
    BatteryOptions, MassStatError,
};
use palmlab_core::palm::{
    check_campbell_basis, check_mecke, inversion, palm, palm_measure, sample_intensity,
};
use palmlab_core::serial::KernelDocument;
use palmlab_core::space::RandomMeasure;
use palmlab_core::transport::{
    check_exchange_basis, check_neveu_basis, check_palm_transport, check_relation, inverse_kernel,
    push,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CheckName, Model, RunConfig};
use crate::report::{CheckReport, SuiteReport, REPORT_SCHEMA};
use crate::repro::{example71_reports, EXAMPLE65_EXPECTED};
use crate::{invalid, CliError};

/// Largest group order for which the Palm check averages over every nonempty set.
const ALL_SETS_UP_TO: usize = 12;

struct Outcome {
    holds: bool,
    detail: Value,
}

fn to_value(x: &impl Serialize) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

fn zero_mass(outcome: usize) -> Outcome {
    Outcome {
        holds: false,
        detail: json!({ "verdict": "fails", "witness": { "kind": "charges_zero_mass", "outcome": outcome } }),
    }
}

fn check_palm(m: &Model) -> Result<Outcome, CliError> {
    let base = palm(&m.p, &m.xi).map_err(invalid)?;
    let sets = default_window_sets(m.p.space().group(), ALL_SETS_UP_TO);
    let g = m.p.space().group();
    for b in &sets {
        let r = palm_measure(&m.p, &m.xi, b).map_err(invalid)?;
        if r.measure != base.measure {
            let set: Vec<String> = b.iter().map(|x| g.format_element(x)).collect();
            return Ok(Outcome {
                holds: false,
                detail: json!({ "palm": base, "sets_checked": sets.len(), "differs_for": set }),
            });
        }
    }
    Ok(Outcome {
        holds: true,
        detail: json!({ "palm": base, "sets_checked": sets.len() }),
    })
}

fn check_inversion(m: &Model) -> Result<Outcome, CliError> {
    let q = palm(&m.p, &m.xi).map_err(invalid)?.measure;
    let recovered = inversion(&q, &m.xi).map_err(invalid)?;
    let expected = m.p.restricted(|w| !m.xi.is_null_at(w));
    let mismatch =
        m.p.space()
            .outcomes()
            .find(|&w| recovered.weight(w) != expected.weight(w));
    let detail = match mismatch {
        None => json!({ "verdict": "holds", "recovered": recovered }),
        Some(w) => json!({
            "verdict": "fails",
            "witness": { "outcome": w, "recovered": recovered.weight(w), "expected": expected.weight(w) },
        }),
    };
    Ok(Outcome {
        holds: mismatch.is_none(),
        detail,
    })
}

fn check_transport(m: &Model, seed: u64) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_invariant_kernel(&m.xi, &mut rng, true);
    let eta = push(&m.xi, &t).map_err(invalid)?;
    let equivalence = check_palm_transport(&t, &m.xi, &eta, &m.p).map_err(invalid)?;
    let t_star = inverse_kernel(&t, &m.xi, &eta, &m.p).map_err(invalid)?;
    let relation = check_relation(&t, &t_star, &m.xi, &eta, &m.p).map_err(invalid)?;
    let exchange = check_exchange_basis(&t, &t_star, &m.xi, &eta, &m.p).map_err(invalid)?;
    let neveu = check_neveu_basis(&m.xi, &eta, &m.p).map_err(invalid)?;
    let holds = equivalence.balancing.holds()
        && equivalence.palm_identity.holds()
        && relation.holds()
        && exchange.holds()
        && neveu.holds();
    Ok(Outcome {
        holds,
        detail: json!({
            "kernel": KernelDocument::new(&t),
            "balancing": equivalence.balancing,
            "palm_identity": equivalence.palm_identity,
            "inverse_relation": relation,
            "exchange": exchange,
            "neveu": neveu,
        }),
    })
}

/// Existence of a kernel balancing ξ against `ξ̂ λ`.
fn check_exists(m: &Model) -> Result<Outcome, CliError> {
    let sp = m.p.space();
    let hat = sample_intensity(&m.p, &m.xi, &sp.group().singleton(0)).map_err(invalid)?;
    let eta = RandomMeasure::haar(sp.clone())
        .scaled_by_outcome(&hat)
        .map_err(invalid)?;
    let verdict = match construct_balancing_kernel(&m.p, &m.xi, &eta) {
        Ok(v) => v,
        Err(ExistenceError::Defect(e)) => return Err(CliError::Defect(e)),
        Err(e) => return Err(invalid(e)),
    };
    Ok(Outcome {
        holds: verdict.exists(),
        detail: to_value(&verdict),
    })
}

fn run_check(name: CheckName, m: &Model, seed: u64) -> Result<Outcome, CliError> {
    Ok(match name {
        CheckName::Palm => check_palm(m)?,
        CheckName::Campbell => {
            let v = check_campbell_basis(&m.p, &m.xi).map_err(invalid)?;
            Outcome {
                holds: v.holds(),
                detail: to_value(&v),
            }
        }
        CheckName::Mecke => {
            let v = check_mecke(&m.q, &m.xi).map_err(invalid)?;
            Outcome {
                holds: v.holds(),
                detail: to_value(&v),
            }
        }
        CheckName::Inversion => check_inversion(m)?,
        CheckName::Massstat => match is_mass_stationary(&m.q, &m.xi, None) {
            Ok(r) => Outcome {
                holds: r.holds,
                detail: to_value(&r),
            },
            Err(MassStatError::ChargesZeroMass(w)) => zero_mass(w),
            Err(e) => return Err(invalid(e)),
        },
        CheckName::Battery => {
            let options = BatteryOptions {
                seed,
                ..BatteryOptions::default()
            };
            match check_preserving_battery(&m.q, &m.xi, None, &options) {
                Ok(r) => Outcome {
                    holds: r.agree,
                    detail: to_value(&r),
                },
                Err(MassStatError::ChargesZeroMass(w)) => zero_mass(w),
                Err(e) => return Err(invalid(e)),
            }
        }
        CheckName::Transport => check_transport(m, seed)?,
        CheckName::Exists => check_exists(m)?,
        CheckName::Example65 => {
            let (lhs, rhs) =
                single_window_example().map_err(|e| CliError::Defect(e.to_string()))?;
            let (el, er) = EXAMPLE65_EXPECTED;
            let holds = lhs == Scalar::ratio(el.0, el.1) && rhs == Scalar::ratio(er.0, er.1);
            Outcome {
                holds,
                detail: json!({ "lhs": lhs, "rhs": rhs }),
            }
        }
        CheckName::Example71 => {
            let reports = example71_reports()?;
            Outcome {
                holds: reports.iter().all(|(_, _, ok)| *ok),
                detail: Value::Array(
                    reports
                        .iter()
                        .map(|(g, r, _)| json!({ "group": g, "report": r }))
                        .collect(),
                ),
            }
        }
    })
}

/// Builds the configured model and runs the selected checkers in order.
pub fn run_suite(config: &RunConfig) -> Result<SuiteReport, CliError> {
    let model = config.build()?;
    let mut checks = Vec::with_capacity(config.suite.len());
    for &name in &config.suite {
        let start = Instant::now();
        let outcome = run_check(name, &model, config.seed)?;
        checks.push(CheckReport {
            name,
            holds: outcome.holds,
            detail: outcome.detail,
            elapsed_ms: config.timings.then(|| start.elapsed().as_millis() as u64),
        });
    }
    Ok(SuiteReport {
        schema: REPORT_SCHEMA.to_string(),
        seed: config.seed,
        group: model.p.space().group().moduli().to_vec(),
        outcomes: model.p.space().len(),
        all_hold: checks.iter().all(|c| c.holds),
        checks,
    })
}
