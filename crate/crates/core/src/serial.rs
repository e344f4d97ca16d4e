//! Versioned JSON documents for spaces, measures and kernels.
//!
//! Scalars use their canonical text form and group elements the `(x1,…,xk)` syntax,
//! so documents round-trip exactly.

use std::sync::Arc;

use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::algebra::{AlgebraError, FiniteAbelianGroup, GMeasure, Scalar};
use crate::existence::ExistenceVerdict;
use crate::palm::PalmResult;
use crate::space::{FlowSpace, OmegaMeasure, RandomMeasure, SpaceError};
use crate::transport::{TransportError, TransportKernel};

pub const SPACE_SCHEMA: &str = "palmlab-space-v1";
pub const KERNEL_SCHEMA: &str = "palmlab-kernel-v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SerialError {
    #[error("expected schema {expected:?}, found {found:?}")]
    Schema {
        expected: &'static str,
        found: String,
    },
    #[error("malformed document: {0}")]
    Json(String),
    #[error("document does not match its space: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

impl From<serde_json::Error> for SerialError {
    fn from(e: serde_json::Error) -> Self {
        SerialError::Json(e.to_string())
    }
}

fn check_schema(found: &str, expected: &'static str) -> Result<(), SerialError> {
    if found == expected {
        Ok(())
    } else {
        Err(SerialError::Schema {
            expected,
            found: found.to_string(),
        })
    }
}

/// A flow space with optional P and ξ. Rows of `flow` and entries of `xi` follow the
/// order of `elements`; `weights` and `xi` follow the order of `outcomes`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDocument {
    pub schema: String,
    pub group: Vec<usize>,
    pub elements: Vec<String>,
    pub outcomes: Vec<String>,
    pub flow: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Scalar>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<Vec<Scalar>>>,
}

/// The objects a [`SpaceDocument`] describes.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceParts {
    pub space: Arc<FlowSpace>,
    pub p: Option<OmegaMeasure>,
    pub xi: Option<RandomMeasure>,
}

impl SpaceDocument {
    pub fn new(space: &FlowSpace, p: Option<&OmegaMeasure>, xi: Option<&RandomMeasure>) -> Self {
        let g = space.group();
        SpaceDocument {
            schema: SPACE_SCHEMA.to_string(),
            group: g.moduli().to_vec(),
            elements: g.elements().map(|x| g.format_element(x)).collect(),
            outcomes: space.labels().to_vec(),
            flow: space.flow_rows(),
            weights: p.map(|p| p.weights().to_vec()),
            xi: xi.map(|xi| {
                xi.per_outcome()
                    .iter()
                    .map(|m| m.masses().to_vec())
                    .collect()
            }),
        }
    }

    pub fn parts(&self) -> Result<SpaceParts, SerialError> {
        check_schema(&self.schema, SPACE_SCHEMA)?;
        let group = FiniteAbelianGroup::new(&self.group)?;
        let expected: Vec<String> = group.elements().map(|x| group.format_element(x)).collect();
        if expected != self.elements {
            return Err(SerialError::Mismatch(
                "element list differs from the group enumeration".into(),
            ));
        }
        let space = Arc::new(FlowSpace::new(
            Arc::new(group),
            self.outcomes.clone(),
            self.flow.clone(),
        )?);
        let p = match &self.weights {
            Some(w) => Some(OmegaMeasure::new(space.clone(), w.clone())?),
            None => None,
        };
        let xi = match &self.xi {
            Some(rows) => {
                let per = rows
                    .iter()
                    .map(|r| GMeasure::new(r.clone()))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(RandomMeasure::new(space.clone(), per)?)
            }
            None => None,
        };
        Ok(SpaceParts { space, p, xi })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SerialError> {
        let doc: SpaceDocument = serde_json::from_str(text)?;
        check_schema(&doc.schema, SPACE_SCHEMA)?;
        Ok(doc)
    }
}

/// A kernel as sparse `(ω, s, t, mass)` quadruples, with ω given by label and
/// `s`, `t` in element syntax. Absent quadruples carry mass zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDocument {
    pub schema: String,
    pub group: Vec<usize>,
    pub outcomes: usize,
    pub entries: Vec<(String, String, String, Scalar)>,
}

impl KernelDocument {
    pub fn new(t: &TransportKernel) -> Self {
        KernelDocument {
            schema: KERNEL_SCHEMA.to_string(),
            group: t.space().group().moduli().to_vec(),
            outcomes: t.space().len(),
            entries: sparse_entries(t),
        }
    }

    /// Rebuilds the kernel on `space`, which must be the space it was written from.
    pub fn kernel(&self, space: Arc<FlowSpace>) -> Result<TransportKernel, SerialError> {
        check_schema(&self.schema, KERNEL_SCHEMA)?;
        let g = space.group();
        if g.moduli() != self.group.as_slice() || space.len() != self.outcomes {
            return Err(SerialError::Mismatch(format!(
                "kernel is on {:?} with {} outcomes",
                self.group, self.outcomes
            )));
        }
        let n = g.order();
        let mut rows = vec![vec![vec![Scalar::zero(); n]; n]; space.len()];
        for (label, s, t, mass) in &self.entries {
            let w = space.outcome_by_label(label)?;
            let (s, t) = (g.parse_element(s)?, g.parse_element(t)?);
            rows[w][s][t] = mass.clone();
        }
        let rows = rows
            .into_iter()
            .map(|per| {
                per.into_iter()
                    .map(GMeasure::new)
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TransportKernel::new(space, rows)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SerialError> {
        let doc: KernelDocument = serde_json::from_str(text)?;
        check_schema(&doc.schema, KERNEL_SCHEMA)?;
        Ok(doc)
    }
}

fn sparse_entries(t: &TransportKernel) -> Vec<(String, String, String, Scalar)> {
    let space = t.space();
    let g = space.group();
    let mut out = Vec::new();
    for w in space.outcomes() {
        for s in g.elements() {
            for (b, m) in t.at(w, s).masses().iter().enumerate() {
                if !m.is_zero() {
                    out.push((
                        space.label(w).to_string(),
                        g.format_element(s),
                        g.format_element(b),
                        m.clone(),
                    ));
                }
            }
        }
    }
    out
}

/// Weights in outcome order.
impl Serialize for OmegaMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.weights().len()))?;
        for w in self.weights() {
            seq.serialize_element(w)?;
        }
        seq.end()
    }
}

/// One mass vector per outcome, in element order.
impl Serialize for RandomMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.per_outcome().len()))?;
        for m in self.per_outcome() {
            seq.serialize_element(m.masses())?;
        }
        seq.end()
    }
}

/// The sparse quadruple list of [`KernelDocument`].
impl Serialize for TransportKernel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        sparse_entries(self).serialize(serializer)
    }
}

impl Serialize for PalmResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("PalmResult", 3)?;
        st.serialize_field("measure", &self.measure)?;
        st.serialize_field("intensity", &self.intensity)?;
        st.serialize_field("normalized", &self.normalized)?;
        st.end()
    }
}

impl Serialize for ExistenceVerdict {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("ExistenceVerdict", 2)?;
        match self {
            ExistenceVerdict::Exists { kernel } => {
                st.serialize_field("verdict", "exists")?;
                st.serialize_field("kernel", kernel)?;
            }
            ExistenceVerdict::Fails { witness } => {
                st.serialize_field("verdict", "fails")?;
                st.serialize_field("witness", witness)?;
            }
        }
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::palm::palm;
    use crate::space::make_mark_field;
    use crate::transport::AllocationRule;

    fn z3_field() -> crate::space::MarkField {
        let g = Arc::new(FiniteAbelianGroup::cyclic(3).unwrap());
        let half = Scalar::ratio(1, 2);
        make_mark_field(
            g,
            &[Scalar::zero(), Scalar::one()],
            &[half.clone(), half],
            crate::space::DEFAULT_OUTCOME_CAP,
        )
        .unwrap()
    }

    #[test]
    fn space_round_trip() {
        let f = z3_field();
        let doc = SpaceDocument::new(f.space(), Some(&f.p), Some(&f.xi));
        let text = doc.to_json();
        let back = SpaceDocument::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_json(), text);
        let parts = back.parts().unwrap();
        assert_eq!(*parts.space, **f.space());
        assert_eq!(parts.p.unwrap().weights(), f.p.weights());
        assert_eq!(parts.xi.unwrap().per_outcome(), f.xi.per_outcome());
    }

    #[test]
    fn space_without_measures() {
        let f = z3_field();
        let doc = SpaceDocument::new(f.space(), None, None);
        let text = doc.to_json();
        assert!(!text.contains("weights"));
        let parts = SpaceDocument::from_json(&text).unwrap().parts().unwrap();
        assert!(parts.p.is_none() && parts.xi.is_none());
    }

    #[test]
    fn rejects_unknown_fields_and_schema() {
        let f = z3_field();
        let text = SpaceDocument::new(f.space(), None, None).to_json();
        let extra = text.replacen('{', "{\"extra\": 1,", 1);
        assert!(matches!(
            SpaceDocument::from_json(&extra),
            Err(SerialError::Json(_))
        ));
        let other = text.replace(SPACE_SCHEMA, "palmlab-space-v0");
        assert!(matches!(
            SpaceDocument::from_json(&other),
            Err(SerialError::Schema { .. })
        ));
        let bad_flow = text.replacen(
            "\"flow\": [\n    [\n      0",
            "\"flow\": [\n    [\n      1",
            1,
        );
        assert_ne!(bad_flow, text);
        assert!(SpaceDocument::from_json(&bad_flow)
            .unwrap()
            .parts()
            .is_err());
    }

    #[test]
    fn kernel_round_trip() {
        let f = z3_field();
        let space = f.space().clone();
        let g = space.group();
        let pi: Vec<usize> = space.outcomes().map(|w| w % g.order()).collect();
        let rule = AllocationRule::from_origin_map(space.clone(), &pi).unwrap();
        let t = TransportKernel::mixture(&[
            (Scalar::ratio(1, 3), &rule.to_kernel()),
            (Scalar::sqrt2(), &TransportKernel::identity(space.clone())),
        ])
        .unwrap();
        let doc = KernelDocument::new(&t);
        assert!(doc.entries.iter().all(|e| !e.3.is_zero()));
        let back = KernelDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back.kernel(space.clone()).unwrap(), t);
        let json = serde_json::to_value(&t).unwrap();
        assert_eq!(json, serde_json::to_value(&doc.entries).unwrap());

        let other = Arc::new(
            crate::space::translation_space(Arc::new(FiniteAbelianGroup::cyclic(3).unwrap()))
                .unwrap(),
        );
        assert!(matches!(back.kernel(other), Err(SerialError::Mismatch(_))));
    }

    #[test]
    fn palm_result_uses_canonical_text() {
        let f = z3_field();
        let r = palm(&f.p, &f.xi).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["intensity"], "1/2");
        assert_eq!(v["measure"].as_array().unwrap().len(), 8);
    }
}
