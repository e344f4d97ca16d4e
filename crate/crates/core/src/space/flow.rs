use std::collections::HashMap;
use std::sync::Arc;

use super::SpaceError;
use crate::algebra::{Element, FiniteAbelianGroup};

/// Index of an outcome ω in Ω.
pub type Outcome = usize;

/// A finite outcome set Ω with a flow θ of the group G acting on it.
///
/// The flow is stored as a dense table and validated on construction:
/// θ_0 = id and θ_s ∘ θ_t = θ_{s+t}.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FlowSpace {
    group: Arc<FiniteAbelianGroup>,
    labels: Vec<String>,
    flow: Vec<Outcome>,
}

impl FlowSpace {
    /// `flow[s][ω]` is θ_s ω.
    pub fn new(
        group: Arc<FiniteAbelianGroup>,
        labels: Vec<String>,
        flow: Vec<Vec<Outcome>>,
    ) -> Result<Self, SpaceError> {
        let n = group.order();
        let m = labels.len();
        if flow.len() != n {
            return Err(SpaceError::FlowRows {
                expected: n,
                found: flow.len(),
            });
        }
        let mut table = Vec::with_capacity(n * m);
        for (s, row) in flow.into_iter().enumerate() {
            if row.len() != m {
                return Err(SpaceError::FlowRowLength {
                    element: s,
                    expected: m,
                    found: row.len(),
                });
            }
            if let Some((w, &t)) = row.iter().enumerate().find(|(_, &t)| t >= m) {
                return Err(SpaceError::FlowOutOfRange {
                    element: s,
                    outcome: w,
                    target: t,
                });
            }
            table.extend(row);
        }
        let mut seen = HashMap::with_capacity(m);
        for l in &labels {
            if seen.insert(l.as_str(), ()).is_some() {
                return Err(SpaceError::DuplicateLabel(l.clone()));
            }
        }
        let space = FlowSpace {
            group,
            labels,
            flow: table,
        };
        space.validate()?;
        Ok(space)
    }

    fn validate(&self) -> Result<(), SpaceError> {
        let g = &*self.group;
        if let Some(w) = self.outcomes().find(|&w| self.flow(g.zero(), w) != w) {
            return Err(SpaceError::FlowNotIdentity(w));
        }
        for s in g.elements() {
            for t in g.elements() {
                let st = g.add(s, t);
                for w in self.outcomes() {
                    if self.flow(s, self.flow(t, w)) != self.flow(st, w) {
                        return Err(SpaceError::FlowNotComposing { s, t, outcome: w });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.group
    }

    pub fn group_arc(&self) -> &Arc<FiniteAbelianGroup> {
        &self.group
    }

    /// |Ω|.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn outcomes(&self) -> std::ops::Range<Outcome> {
        0..self.labels.len()
    }

    /// θ_s ω.
    #[inline]
    pub fn flow(&self, s: Element, w: Outcome) -> Outcome {
        self.flow[s * self.labels.len() + w]
    }

    pub fn label(&self, w: Outcome) -> &str {
        &self.labels[w]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn outcome_by_label(&self, label: &str) -> Result<Outcome, SpaceError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| SpaceError::UnknownLabel(label.to_string()))
    }

    /// Flow table as rows `θ_s(·)`, one per group element.
    pub fn flow_rows(&self) -> Vec<Vec<Outcome>> {
        self.flow
            .chunks(self.labels.len().max(1))
            .map(<[_]>::to_vec)
            .collect()
    }

    pub fn orbits(&self) -> OrbitDecomposition {
        let mut orbit_of = vec![usize::MAX; self.len()];
        let mut members = Vec::new();
        for w in self.outcomes() {
            if orbit_of[w] != usize::MAX {
                continue;
            }
            let id = members.len();
            let mut orbit: Vec<Outcome> = self.group.elements().map(|s| self.flow(s, w)).collect();
            orbit.sort_unstable();
            orbit.dedup();
            for &v in &orbit {
                orbit_of[v] = id;
            }
            members.push(orbit);
        }
        OrbitDecomposition { orbit_of, members }
    }
}

/// Partition of Ω into flow orbits, the atoms of the invariant σ-field.
///
/// Orbits are numbered by their smallest member and list members in increasing order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OrbitDecomposition {
    orbit_of: Vec<usize>,
    members: Vec<Vec<Outcome>>,
}

impl OrbitDecomposition {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn orbit_of(&self, w: Outcome) -> usize {
        self.orbit_of[w]
    }

    pub fn members(&self, orbit: usize) -> &[Outcome] {
        &self.members[orbit]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Outcome]> {
        self.members.iter().map(Vec::as_slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> Arc<FiniteAbelianGroup> {
        Arc::new(FiniteAbelianGroup::cyclic(2).unwrap())
    }

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rejects_broken_flows() {
        let l = labels(&["a", "b"]);
        assert!(matches!(
            FlowSpace::new(z2(), l.clone(), vec![vec![1, 0], vec![1, 0]]),
            Err(SpaceError::FlowNotIdentity(0))
        ));
        assert!(matches!(
            FlowSpace::new(z2(), l.clone(), vec![vec![0, 1], vec![0, 0]]),
            Err(SpaceError::FlowNotComposing { .. })
        ));
        assert!(FlowSpace::new(z2(), l.clone(), vec![vec![0, 1], vec![0, 2]]).is_err());
        assert!(FlowSpace::new(z2(), l.clone(), vec![vec![0, 1]]).is_err());
        assert!(FlowSpace::new(z2(), labels(&["a", "a"]), vec![vec![0, 1], vec![1, 0]]).is_err());
        assert!(FlowSpace::new(z2(), l, vec![vec![0, 1], vec![1, 0]]).is_ok());
    }

    #[test]
    fn composition_failure_detected_on_z3() {
        // θ_1 is a transposition, so θ_1∘θ_1 = id ≠ θ_2
        let g = Arc::new(FiniteAbelianGroup::cyclic(3).unwrap());
        let r = FlowSpace::new(
            g,
            labels(&["a", "b", "c"]),
            vec![vec![0, 1, 2], vec![1, 0, 2], vec![1, 0, 2]],
        );
        assert!(matches!(r, Err(SpaceError::FlowNotComposing { .. })));
    }
}
