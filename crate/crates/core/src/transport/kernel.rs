use std::sync::Arc;

use serde::Serialize;

use super::TransportError;
use crate::algebra::{Element, GMeasure, Scalar};
use crate::space::{FlowSpace, Outcome, RandomMeasure};
use crate::verdict::Verdict;

/// A weighted transport-kernel: a finite measure `T(ω, s, ·)` on G for every
/// outcome and location.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransportKernel {
    space: Arc<FlowSpace>,
    rows: Vec<GMeasure>,
}

/// `T(θ_t ω, s − t){b − t} ≠ T(ω, s){b}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KernelInvarianceWitness {
    pub outcome: Outcome,
    pub s: Element,
    pub t: Element,
    pub element: Element,
    pub shifted: Scalar,
    pub expected: Scalar,
}

impl TransportKernel {
    /// `rows[ω][s]` is `T(ω, s, ·)`.
    pub fn new(space: Arc<FlowSpace>, rows: Vec<Vec<GMeasure>>) -> Result<Self, TransportError> {
        let n = space.group().order();
        if rows.len() != space.len() {
            return Err(TransportError::Shape(format!(
                "{} outcome rows, expected {}",
                rows.len(),
                space.len()
            )));
        }
        let mut flat = Vec::with_capacity(space.len() * n);
        for (w, per) in rows.into_iter().enumerate() {
            if per.len() != n {
                return Err(TransportError::Shape(format!(
                    "outcome {w} has {} location rows",
                    per.len()
                )));
            }
            for (s, m) in per.into_iter().enumerate() {
                if m.len() != n {
                    return Err(TransportError::Shape(format!(
                        "row ({w}, {s}) has {} masses",
                        m.len()
                    )));
                }
                if let Some(t) = m.masses().iter().position(Scalar::is_negative) {
                    return Err(TransportError::NegativeMass { outcome: w, s, t });
                }
                flat.push(m);
            }
        }
        Ok(TransportKernel { space, rows: flat })
    }

    pub(crate) fn from_flat_unchecked(space: Arc<FlowSpace>, rows: Vec<GMeasure>) -> Self {
        debug_assert_eq!(rows.len(), space.len() * space.group().order());
        TransportKernel { space, rows }
    }

    /// Stay put: `T(ω, s, ·) = δ_s`.
    pub fn identity(space: Arc<FlowSpace>) -> Self {
        let g = space.group();
        let rows = space
            .outcomes()
            .flat_map(|_| g.elements().map(|s| GMeasure::dirac(g, s)))
            .collect();
        TransportKernel { space, rows }
    }

    /// `T(ω, s, ·) = η(ω)` for every `s`.
    pub fn from_random_measure(eta: &RandomMeasure) -> Self {
        let space = eta.space().clone();
        let n = space.group().order();
        let rows = space
            .outcomes()
            .flat_map(|w| std::iter::repeat_n(eta.at(w).clone(), n))
            .collect();
        TransportKernel { space, rows }
    }

    /// Invariant extension `T(ω, s){b} = T̃(θ_s ω){b − s}` of a base kernel `T̃(ω) = T(ω, 0)`.
    pub fn from_base(space: Arc<FlowSpace>, base: &[GMeasure]) -> Result<Self, TransportError> {
        let g = space.group();
        if base.len() != space.len() || base.iter().any(|m| m.len() != g.order()) {
            return Err(TransportError::Shape(
                "base kernel needs one measure on G per outcome".into(),
            ));
        }
        if let Some((w, t)) = base.iter().enumerate().find_map(|(w, m)| {
            m.masses()
                .iter()
                .position(Scalar::is_negative)
                .map(|t| (w, t))
        }) {
            return Err(TransportError::NegativeMass {
                outcome: w,
                s: 0,
                t,
            });
        }
        let mut rows = Vec::with_capacity(space.len() * g.order());
        for w in space.outcomes() {
            for s in g.elements() {
                let src = &base[space.flow(s, w)];
                rows.push(GMeasure::from_vec_unchecked(
                    g.elements()
                        .map(|b| src.mass(g.sub(b, s)).clone())
                        .collect(),
                ));
            }
        }
        Ok(TransportKernel { space, rows })
    }

    /// `T(ω, s){t} = κ(ω, s, t)·η(ω){t}` for invariant κ and η.
    pub fn from_kappa(kappa: &Kappa, eta: &RandomMeasure) -> Result<Self, TransportError> {
        if *kappa.space() != **eta.space() {
            return Err(TransportError::SpaceMismatch);
        }
        if let Verdict::Fails(w) = kappa.is_invariant() {
            return Err(TransportError::KappaNotInvariant(w));
        }
        crate::palm::require_invariant(eta)?;
        let space = eta.space().clone();
        let g = space.group();
        let mut rows = Vec::with_capacity(space.len() * g.order());
        for w in space.outcomes() {
            for s in g.elements() {
                rows.push(GMeasure::from_vec_unchecked(
                    g.elements()
                        .map(|t| kappa.value(w, s, t) * eta.mass(w, t))
                        .collect(),
                ));
            }
        }
        Ok(TransportKernel { space, rows })
    }

    pub fn space(&self) -> &Arc<FlowSpace> {
        &self.space
    }

    /// `T(ω, s, ·)`.
    #[inline]
    pub fn at(&self, w: Outcome, s: Element) -> &GMeasure {
        &self.rows[w * self.space.group().order() + s]
    }

    /// `T(ω, s){t}`.
    #[inline]
    pub fn mass(&self, w: Outcome, s: Element, t: Element) -> &Scalar {
        self.at(w, s).mass(t)
    }

    /// `T(ω, 0, ·)` for every ω.
    pub fn origin_rows(&self) -> Vec<GMeasure> {
        self.space
            .outcomes()
            .map(|w| self.at(w, 0).clone())
            .collect()
    }

    /// Every row is a probability measure.
    pub fn is_markovian(&self) -> bool {
        self.rows.iter().all(|m| m.total().is_one())
    }

    /// `sup_{ω,s} T(ω, s, G)`.
    pub fn sup_total(&self) -> Scalar {
        self.rows
            .iter()
            .map(GMeasure::total)
            .fold(Scalar::zero(), |a, b| a.max(b))
    }

    pub fn scaled(&self, c: &Scalar) -> Result<Self, TransportError> {
        if c.is_negative() {
            return Err(TransportError::NegativeMass {
                outcome: 0,
                s: 0,
                t: 0,
            });
        }
        let rows = self.rows.iter().map(|m| m.scale_unchecked(c)).collect();
        Ok(TransportKernel {
            space: self.space.clone(),
            rows,
        })
    }

    /// `Σ_i c_i T_i` over kernels on the same space.
    pub fn mixture(parts: &[(Scalar, &TransportKernel)]) -> Result<Self, TransportError> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| TransportError::Shape("empty mixture".into()))?;
        let space = first.space.clone();
        let mut rows: Vec<GMeasure> = first
            .rows
            .iter()
            .map(|m| GMeasure::from_vec_unchecked(vec![Scalar::zero(); m.len()]))
            .collect();
        for (c, k) in parts {
            if *k.space != *space {
                return Err(TransportError::SpaceMismatch);
            }
            if c.is_negative() {
                return Err(TransportError::NegativeMass {
                    outcome: 0,
                    s: 0,
                    t: 0,
                });
            }
            for (acc, m) in rows.iter_mut().zip(&k.rows) {
                acc.add_scaled(m, c);
            }
        }
        Ok(TransportKernel { space, rows })
    }

    /// `(T₁T₂)(ω, s){t} = Σ_u T₁(ω, s){u} T₂(ω, u){t}`.
    pub fn compose(&self, other: &TransportKernel) -> Result<Self, TransportError> {
        if *self.space != *other.space {
            return Err(TransportError::SpaceMismatch);
        }
        let g = self.space.group();
        let n = g.order();
        let mut rows = Vec::with_capacity(self.rows.len());
        for w in self.space.outcomes() {
            for s in g.elements() {
                let mut acc = GMeasure::from_vec_unchecked(vec![Scalar::zero(); n]);
                for (u, c) in self.at(w, s).masses().iter().enumerate() {
                    acc.add_scaled(other.at(w, u), c);
                }
                rows.push(acc);
            }
        }
        Ok(TransportKernel {
            space: self.space.clone(),
            rows,
        })
    }

    /// Joint-shift invariance over all `(ω, s, t, b)`.
    pub fn is_invariant(&self) -> Verdict<KernelInvarianceWitness> {
        let sp = &self.space;
        let g = sp.group();
        for w in sp.outcomes() {
            for s in g.elements() {
                let row = self.at(w, s);
                for t in g.elements() {
                    let shifted = self.at(sp.flow(t, w), g.sub(s, t));
                    for b in g.elements() {
                        let lhs = shifted.mass(g.sub(b, t));
                        if lhs != row.mass(b) {
                            return Verdict::Fails(KernelInvarianceWitness {
                                outcome: w,
                                s,
                                t,
                                element: b,
                                shifted: lhs.clone(),
                                expected: row.mass(b).clone(),
                            });
                        }
                    }
                }
            }
        }
        Verdict::Holds
    }
}

/// An allocation rule τ(ω, s) ∈ G.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AllocationRule {
    space: Arc<FlowSpace>,
    map: Vec<Element>,
}

/// `τ(θ_t ω, s − t) ≠ τ(ω, s) − t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CovarianceWitness {
    pub outcome: Outcome,
    pub s: Element,
    pub t: Element,
}

impl AllocationRule {
    /// `map[ω][s]` is `τ(ω, s)`.
    pub fn new(space: Arc<FlowSpace>, map: Vec<Vec<Element>>) -> Result<Self, TransportError> {
        let n = space.group().order();
        if map.len() != space.len()
            || map
                .iter()
                .any(|r| r.len() != n || r.iter().any(|&x| x >= n))
        {
            return Err(TransportError::Shape(
                "allocation needs one element of G per (outcome, location)".into(),
            ));
        }
        Ok(AllocationRule {
            space,
            map: map.into_iter().flatten().collect(),
        })
    }

    /// Covariant extension `τ(ω, s) = π(θ_s ω) + s` of `π = τ(·, 0)`.
    pub fn from_origin_map(space: Arc<FlowSpace>, pi: &[Element]) -> Result<Self, TransportError> {
        let g = space.group();
        if pi.len() != space.len() || pi.iter().any(|&x| x >= g.order()) {
            return Err(TransportError::Shape(
                "origin map needs one element of G per outcome".into(),
            ));
        }
        let map = space
            .outcomes()
            .flat_map(|w| g.elements().map(move |s| (w, s)))
            .map(|(w, s)| g.add(pi[space.flow(s, w)], s))
            .collect();
        Ok(AllocationRule { space, map })
    }

    pub fn identity(space: Arc<FlowSpace>) -> Self {
        let n = space.group().order();
        let map = space.outcomes().flat_map(|_| 0..n).collect();
        AllocationRule { space, map }
    }

    pub fn space(&self) -> &Arc<FlowSpace> {
        &self.space
    }

    #[inline]
    pub fn at(&self, w: Outcome, s: Element) -> Element {
        self.map[w * self.space.group().order() + s]
    }

    /// π(ω) = τ(ω, 0).
    pub fn origin_map(&self) -> Vec<Element> {
        self.space.outcomes().map(|w| self.at(w, 0)).collect()
    }

    /// θ_τ(ω) = θ_{τ(ω, 0)} ω.
    pub fn shift_by_alloc(&self) -> Vec<Outcome> {
        self.space
            .outcomes()
            .map(|w| self.space.flow(self.at(w, 0), w))
            .collect()
    }

    /// `T(ω, s, ·) = δ_{τ(ω, s)}`.
    pub fn to_kernel(&self) -> TransportKernel {
        let g = self.space.group();
        let rows = self.map.iter().map(|&x| GMeasure::dirac(g, x)).collect();
        TransportKernel {
            space: self.space.clone(),
            rows,
        }
    }

    pub fn is_covariant(&self) -> Verdict<CovarianceWitness> {
        let sp = &self.space;
        let g = sp.group();
        for w in sp.outcomes() {
            for s in g.elements() {
                for t in g.elements() {
                    if self.at(sp.flow(t, w), g.sub(s, t)) != g.sub(self.at(w, s), t) {
                        return Verdict::Fails(CovarianceWitness { outcome: w, s, t });
                    }
                }
            }
        }
        Verdict::Holds
    }
}

/// A mass function κ(ω, s, t) ≥ 0.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Kappa {
    space: Arc<FlowSpace>,
    values: Vec<Scalar>,
}

/// `κ(θ_r ω, s − r, t − r) ≠ κ(ω, s, t)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KappaWitness {
    pub outcome: Outcome,
    pub r: Element,
    pub s: Element,
    pub t: Element,
}

impl Kappa {
    pub fn from_fn(
        space: Arc<FlowSpace>,
        mut f: impl FnMut(Outcome, Element, Element) -> Scalar,
    ) -> Result<Self, TransportError> {
        let n = space.group().order();
        let mut values = Vec::with_capacity(space.len() * n * n);
        for w in space.outcomes() {
            for s in 0..n {
                for t in 0..n {
                    let v = f(w, s, t);
                    if v.is_negative() {
                        return Err(TransportError::NegativeMass { outcome: w, s, t });
                    }
                    values.push(v);
                }
            }
        }
        Ok(Kappa { space, values })
    }

    pub fn space(&self) -> &FlowSpace {
        &self.space
    }

    #[inline]
    pub fn value(&self, w: Outcome, s: Element, t: Element) -> &Scalar {
        let n = self.space.group().order();
        &self.values[(w * n + s) * n + t]
    }

    pub fn is_invariant(&self) -> Verdict<KappaWitness> {
        let sp = &self.space;
        let g = sp.group();
        for w in sp.outcomes() {
            for r in g.elements() {
                let wr = sp.flow(r, w);
                for s in g.elements() {
                    for t in g.elements() {
                        if self.value(wr, g.sub(s, r), g.sub(t, r)) != self.value(w, s, t) {
                            return Verdict::Fails(KappaWitness {
                                outcome: w,
                                r,
                                s,
                                t,
                            });
                        }
                    }
                }
            }
        }
        Verdict::Holds
    }
}
