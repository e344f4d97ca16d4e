use serde::Serialize;

use super::{
    check_relation, is_balancing, AllocationRule, BalancingWitness, Kappa, TransportError,
    TransportKernel,
};
use crate::algebra::{Element, Scalar, Subset};
use crate::palm::{self, modified_palm, normalize_by_sample_intensity, BasisWitness};
use crate::space::{OmegaMeasure, Outcome, RandomMeasure};
use crate::verdict::Verdict;

/// Two exact sums that an identity claims are equal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SumReport {
    pub lhs: Scalar,
    pub rhs: Scalar,
}

impl SumReport {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// Two measures on Ω disagree at `outcome`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutcomeWitness {
    pub outcome: Outcome,
    pub lhs: Scalar,
    pub rhs: Scalar,
}

/// A balancing verdict next to the Palm-level identity that should be equivalent to it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EquivalenceReport {
    pub balancing: Verdict<BalancingWitness>,
    pub palm_identity: Verdict<OutcomeWitness>,
    pub agree: bool,
}

impl EquivalenceReport {
    fn new(balancing: Verdict<BalancingWitness>, palm_identity: Verdict<OutcomeWitness>) -> Self {
        let agree = balancing.holds() == palm_identity.holds();
        EquivalenceReport {
            balancing,
            palm_identity,
            agree,
        }
    }
}

fn require_relation(
    t: &TransportKernel,
    t_star: &TransportKernel,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
) -> Result<(), TransportError> {
    match check_relation(t, t_star, xi, eta, p)? {
        Verdict::Holds => Ok(()),
        Verdict::Fails(w) => Err(TransportError::RelationFails(w)),
    }
}

/// `E_{ℙ_ξ}[Σ_t h(θ_t, −t) T(0){t}]` against `E_{ℙ_η}[Σ_t h(θ_0, t) T*(0){t}]`.
pub fn check_exchange(
    t: &TransportKernel,
    t_star: &TransportKernel,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
    h: impl Fn(Outcome, Element) -> Scalar,
) -> Result<SumReport, TransportError> {
    require_relation(t, t_star, xi, eta, p)?;
    let px = palm::palm(p, xi)?.measure;
    let pe = palm::palm(p, eta)?.measure;
    let sp = p.space();
    let g = sp.group();
    let lhs = px.expectation(|w| {
        g.elements()
            .filter(|&u| !t.mass(w, 0, u).is_zero())
            .map(|u| h(sp.flow(u, w), g.neg(u)) * t.mass(w, 0, u))
            .sum()
    });
    let rhs = pe.expectation(|w| {
        g.elements()
            .filter(|&u| !t_star.mass(w, 0, u).is_zero())
            .map(|u| h(w, u) * t_star.mass(w, 0, u))
            .sum()
    });
    Ok(SumReport { lhs, rhs })
}

/// The exchange formula over every indicator `h = 1{ω′} ⊗ 1{g′}`.
pub fn check_exchange_basis(
    t: &TransportKernel,
    t_star: &TransportKernel,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
) -> Result<Verdict<BasisWitness>, TransportError> {
    require_relation(t, t_star, xi, eta, p)?;
    let px = palm::palm(p, xi)?.measure;
    let pe = palm::palm(p, eta)?.measure;
    let sp = p.space();
    let g = sp.group();
    let n = g.order();
    let mut lhs = vec![Scalar::zero(); sp.len() * n];
    for w in px.support() {
        for u in g.elements() {
            let m = t.mass(w, 0, u);
            if !m.is_zero() {
                lhs[sp.flow(u, w) * n + g.neg(u)] += &(px.weight(w) * m);
            }
        }
    }
    for (i, l) in lhs.iter().enumerate() {
        let (w, u) = (i / n, i % n);
        let r = pe.weight(w) * t_star.mass(w, 0, u);
        if *l != r {
            return Ok(Verdict::Fails(BasisWitness {
                outcome: w,
                element: u,
                lhs: l.clone(),
                rhs: r,
            }));
        }
    }
    Ok(Verdict::Holds)
}

/// The exchange formula with `T(s, ·) = η` and `T*(s, ·) = ξ`.
pub fn check_neveu(
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
    h: impl Fn(Outcome, Element) -> Scalar,
) -> Result<SumReport, TransportError> {
    let t = TransportKernel::from_random_measure(eta);
    let t_star = TransportKernel::from_random_measure(xi);
    check_exchange(&t, &t_star, xi, eta, p, h)
}

pub fn check_neveu_basis(
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
) -> Result<Verdict<BasisWitness>, TransportError> {
    let t = TransportKernel::from_random_measure(eta);
    let t_star = TransportKernel::from_random_measure(xi);
    check_exchange_basis(&t, &t_star, xi, eta, p)
}

/// `E_P[Σ_{s,t} 1_B(t) κ(s, t) η{s} ξ{t}]` against `E_P[Σ_{s,t} 1_{B′}(s) κ(s, t) η{s} ξ{t}]`
/// for invariant κ and `|B| = |B′|`.
pub fn check_mass_transport_principle(
    kappa: &Kappa,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
    b: &Subset,
    b_prime: &Subset,
) -> Result<SumReport, TransportError> {
    if b.len() != b_prime.len() {
        return Err(TransportError::SizeMismatch(b.len(), b_prime.len()));
    }
    if *kappa.space() != **p.space() || !p.same_space(xi.space()) || !p.same_space(eta.space()) {
        return Err(TransportError::SpaceMismatch);
    }
    if let Verdict::Fails(w) = kappa.is_invariant() {
        return Err(TransportError::KappaNotInvariant(w));
    }
    palm::require_stationary(p)?;
    palm::require_invariant(xi)?;
    palm::require_invariant(eta)?;
    let g = p.space().group();
    let side = |in_b: &dyn Fn(Element, Element) -> bool| {
        p.expectation(|w| {
            let mut acc = Scalar::zero();
            for s in g.elements() {
                let e = eta.mass(w, s);
                if e.is_zero() {
                    continue;
                }
                for u in g.elements() {
                    let x = xi.mass(w, u);
                    if !x.is_zero() && in_b(s, u) {
                        acc += &(kappa.value(w, s, u) * e * x);
                    }
                }
            }
            acc
        })
    };
    let lhs = side(&|_, u| b.contains(u));
    let rhs = side(&|s, _| b_prime.contains(s));
    Ok(SumReport { lhs, rhs })
}

/// `ω′ ↦ Σ_ω Q{ω} Σ_t T(ω, 0){t} 1{θ_t ω = ω′}` compared with `target`.
fn transported_palm_mismatch(
    t: &TransportKernel,
    source: &OmegaMeasure,
    target: &OmegaMeasure,
) -> Verdict<OutcomeWitness> {
    let sp = source.space();
    let mut lhs = vec![Scalar::zero(); sp.len()];
    for w in source.support() {
        for (u, m) in t.at(w, 0).masses().iter().enumerate() {
            if !m.is_zero() {
                lhs[sp.flow(u, w)] += &(source.weight(w) * m);
            }
        }
    }
    for (w, l) in lhs.into_iter().enumerate() {
        if l != *target.weight(w) {
            return Verdict::Fails(OutcomeWitness {
                outcome: w,
                lhs: l,
                rhs: target.weight(w).clone(),
            });
        }
    }
    Verdict::Holds
}

fn require_kernel_setting(
    t: &TransportKernel,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
) -> Result<(), TransportError> {
    if !p.same_space(t.space()) || !p.same_space(xi.space()) || !p.same_space(eta.space()) {
        return Err(TransportError::SpaceMismatch);
    }
    if let Verdict::Fails(w) = t.is_invariant() {
        return Err(TransportError::KernelNotInvariant(w));
    }
    Ok(())
}

/// P-a.e. `(ξ, η)`-balancing of an invariant kernel, side by side with
/// `E_{ℙ_ξ}[Σ_t f(θ_t) T(0){t}] = E_{ℙ_η}[f]` over every indicator `f = 1{ω′}`.
pub fn check_palm_transport(
    t: &TransportKernel,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
) -> Result<EquivalenceReport, TransportError> {
    require_kernel_setting(t, xi, eta, p)?;
    let px = palm::palm(p, xi)?.measure;
    let pe = palm::palm(p, eta)?.measure;
    let balancing = is_balancing(t, xi, eta, p)?;
    Ok(EquivalenceReport::new(
        balancing,
        transported_palm_mismatch(t, &px, &pe),
    ))
}

/// For an allocation rule: balancing of `δ_{τ(s)}` against `ℙ_ξ ∘ θ_τ⁻¹ = ℙ_η`.
pub fn check_allocation_coupling(
    tau: &AllocationRule,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
) -> Result<EquivalenceReport, TransportError> {
    if let Verdict::Fails(w) = tau.is_covariant() {
        return Err(TransportError::NotCovariant(w));
    }
    if !p.same_space(tau.space()) || !p.same_space(xi.space()) || !p.same_space(eta.space()) {
        return Err(TransportError::SpaceMismatch);
    }
    let px = palm::palm(p, xi)?.measure;
    let pe = palm::palm(p, eta)?.measure;
    let sp = p.space();
    let mut image = vec![Scalar::zero(); sp.len()];
    for (w, target) in tau.shift_by_alloc().into_iter().enumerate() {
        image[target] += px.weight(w);
    }
    let mut coupling = Verdict::Holds;
    for (w, l) in image.into_iter().enumerate() {
        if l != *pe.weight(w) {
            coupling = Verdict::Fails(OutcomeWitness {
                outcome: w,
                lhs: l,
                rhs: pe.weight(w).clone(),
            });
            break;
        }
    }
    let balancing = is_balancing(&tau.to_kernel(), xi, eta, p)?;
    Ok(EquivalenceReport::new(balancing, coupling))
}

/// Balancing of `(ξ̂⁻¹ξ, η̂⁻¹η)` side by side with
/// `E_{ℙ*_ξ}[Σ_t f(θ_t) T(0){t}] = E_{ℙ*_η}[f]` over every indicator `f = 1{ω′}`.
pub fn check_modified_palm_transport(
    t: &TransportKernel,
    xi: &RandomMeasure,
    eta: &RandomMeasure,
    p: &OmegaMeasure,
) -> Result<EquivalenceReport, TransportError> {
    require_kernel_setting(t, xi, eta, p)?;
    let star_xi = modified_palm(p, xi)?;
    let star_eta = modified_palm(p, eta)?;
    let xi_n = normalize_by_sample_intensity(p, xi)?;
    let eta_n = normalize_by_sample_intensity(p, eta)?;
    let balancing = is_balancing(t, &xi_n, &eta_n, p)?;
    Ok(EquivalenceReport::new(
        balancing,
        transported_palm_mismatch(t, &star_xi, &star_eta),
    ))
}
