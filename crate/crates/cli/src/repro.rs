use std::fmt::Write;
use std::str::FromStr;
use std::sync::Arc;

use palmlab_core::algebra::{FiniteAbelianGroup, Scalar};
use palmlab_core::massstat::{
    irrational_marks_example, single_window_example, IrrationalMarksReport,
};
use palmlab_torus::{verify_shift_coupling, CouplingReport, OriginSampling, TorusConfig};
use serde::Serialize;
use serde_json::{json, Value};

use crate::report::{decimal12, round_floats, REPORT_SCHEMA};
use crate::{invalid, CliError};

/// Published values of the single-window identity on fair Bernoulli marks on `Z_3`,
/// as (numerator, denominator) pairs.
pub const EXAMPLE65_EXPECTED: ((i64, i64), (i64, i64)) = ((3, 8), (1, 2));

pub const COUPLING_SEED: u64 = 42;
pub const COUPLING_REPLICATES: [usize; 3] = [1_000, 10_000, 100_000];
const COUPLING_SIDE: usize = 16;
const COUPLING_POINTS: usize = 16;
const COUPLING_RADII: usize = 3;
const COUPLING_TV_BOUND: f64 = 0.05;
const CONTROL_TV_BOUND: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReproName {
    Example65,
    Example71,
    Coupling,
}

impl FromStr for ReproName {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "example65" => Ok(ReproName::Example65),
            "example71" => Ok(ReproName::Example71),
            "coupling" => Ok(ReproName::Coupling),
            other => Err(CliError::Config(format!("unknown reproduction {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReproReport {
    pub schema: String,
    pub name: ReproName,
    pub reproduced: bool,
    pub table: String,
    pub detail: Value,
}

impl ReproReport {
    pub fn exit_code(&self) -> i32 {
        if self.reproduced {
            0
        } else {
            3
        }
    }
}

/// The model on `group` with mark probability `p`, and whether it exhibits the
/// counterexample: every ξ-preserving rule is ξ₁-preserving and leaves Q invariant,
/// yet Q is not mass-stationary.
pub fn example71(group: &[usize], p: &Scalar) -> Result<(IrrationalMarksReport, bool), CliError> {
    let g = Arc::new(FiniteAbelianGroup::new(group).map_err(invalid)?);
    let r = irrational_marks_example(g, p).map_err(invalid)?;
    let ok = r.q_is_palm_of_first
        && r.exhaustive
        && r.all_first_preserving
        && r.all_invariant
        && r.failures.is_empty()
        && !r.mass_stationary.holds
        && r.mass_stationary.witness.is_some();
    Ok((r, ok))
}

pub(crate) fn example71_reports() -> Result<Vec<(String, IrrationalMarksReport, bool)>, CliError> {
    let half = Scalar::ratio(1, 2);
    [2usize, 3]
        .iter()
        .map(|&n| {
            let (r, ok) = example71(&[n], &half)?;
            Ok((format!("Z{n}"), r, ok))
        })
        .collect()
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn repro_example65() -> Result<ReproReport, CliError> {
    let (lhs, rhs) = single_window_example().map_err(|e| CliError::Defect(e.to_string()))?;
    let ((a, b), (c, d)) = EXAMPLE65_EXPECTED;
    let (el, er) = (Scalar::ratio(a, b), Scalar::ratio(c, d));
    let ok = lhs == el && rhs == er;
    let verdict = if ok {
        "MATCHES-REFERENCE"
    } else {
        "DIFFERS-FROM-REFERENCE"
    };
    let mut table = String::from("example    lhs    rhs    reference    verdict\n");
    writeln!(
        table,
        "example65  lhs={lhs}  rhs={rhs}  lhs={el} rhs={er}  verdict={verdict}"
    )
    .unwrap();
    Ok(ReproReport {
        schema: REPORT_SCHEMA.to_string(),
        name: ReproName::Example65,
        reproduced: ok,
        table,
        detail: json!({ "lhs": lhs, "rhs": rhs, "reference_lhs": el, "reference_rhs": er, "verdict": verdict }),
    })
}

fn repro_example71() -> Result<ReproReport, CliError> {
    let reports = example71_reports()?;
    let mut table = String::from(
        "group  outcomes  preserving_rules  xi1_preserving  invariance  mass_stationary  verdict\n",
    );
    for (g, r, ok) in &reports {
        let verdict = if *ok {
            "NOT-MASS-STATIONARY"
        } else {
            "NOT-REPRODUCED"
        };
        writeln!(
            table,
            "{g}  {}  {}  {}  {}  {}  verdict={verdict}",
            r.outcomes,
            r.preserving_rules,
            pass(r.all_first_preserving),
            pass(r.all_invariant),
            pass(r.mass_stationary.holds),
        )
        .unwrap();
        if let Some(w) = &r.mass_stationary.witness {
            writeln!(
                table,
                "  witness: C={:?} outcome={} element={} lhs={} rhs={}",
                w.set, w.outcome, w.element, w.lhs, w.rhs
            )
            .unwrap();
        }
    }
    Ok(ReproReport {
        schema: REPORT_SCHEMA.to_string(),
        name: ReproName::Example71,
        reproduced: reports.iter().all(|(_, _, ok)| *ok),
        table,
        detail: Value::Array(
            reports
                .iter()
                .map(|(g, r, _)| json!({ "group": g, "report": r }))
                .collect(),
        ),
    })
}

fn coupling_run(
    replicates: usize,
    seed: u64,
    origin: OriginSampling,
) -> Result<CouplingReport, CliError> {
    let config = TorusConfig::exactly_k(COUPLING_SIDE, 2, COUPLING_POINTS, seed, replicates);
    verify_shift_coupling(&config, COUPLING_RADII, origin)
        .map_err(|e| CliError::Defect(e.to_string()))
}

fn repro_coupling(seed: u64) -> Result<ReproReport, CliError> {
    let mut table =
        String::from("replicates  tv_allocated  tv_control  quota_violations  blocking_pairs\n");
    let mut rows = Vec::new();
    let mut ok = true;
    for (i, &n) in COUPLING_REPLICATES.iter().enumerate() {
        let palm = coupling_run(n, seed, OriginSampling::Palm)?;
        let control = coupling_run(n, seed, OriginSampling::Stationary)?;
        ok &= palm.quota_violations == 0 && palm.blocking_pairs == 0;
        if i + 1 == COUPLING_REPLICATES.len() {
            ok &= palm.tv_distance < COUPLING_TV_BOUND && control.tv_distance > CONTROL_TV_BOUND;
        }
        writeln!(
            table,
            "{n}  {}  {}  {}  {}",
            decimal12(palm.tv_distance),
            decimal12(control.tv_distance),
            palm.quota_violations,
            palm.blocking_pairs
        )
        .unwrap();
        rows.push(json!({ "replicates": n, "allocated": palm, "control": control }));
    }
    let mut detail = json!({
        "torus": { "n": COUPLING_SIDE, "d": 2, "k": COUPLING_POINTS, "radii": COUPLING_RADII, "seed": seed },
        "rows": rows,
    });
    round_floats(&mut detail);
    Ok(ReproReport {
        schema: REPORT_SCHEMA.to_string(),
        name: ReproName::Coupling,
        reproduced: ok,
        table,
        detail,
    })
}

/// Runs a named reproduction with its pinned parameters. `seed` only affects `coupling`.
pub fn repro(name: ReproName, seed: Option<u64>) -> Result<ReproReport, CliError> {
    match name {
        ReproName::Example65 => repro_example65(),
        ReproName::Example71 => repro_example71(),
        ReproName::Coupling => repro_coupling(seed.unwrap_or(COUPLING_SEED)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        assert_eq!(
            "coupling".parse::<ReproName>().unwrap(),
            ReproName::Coupling
        );
        assert!(matches!(
            "example72".parse::<ReproName>(),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn example65_row() {
        let r = repro(ReproName::Example65, None).unwrap();
        assert!(r.reproduced);
        assert!(r.table.contains("lhs=3/8  rhs=1/2"));
        assert!(r.table.contains("verdict=MATCHES-REFERENCE"));
    }
}
