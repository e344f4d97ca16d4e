use std::sync::Arc;

use palmlab_core::algebra::{FiniteAbelianGroup, GMeasure, Scalar};
use palmlab_core::existence::{
    check_equal_sample_intensities, construct_balancing_kernel, ExistenceError, ExistenceVerdict,
};
use palmlab_core::fleet::{random_invariant_kernel, standard_fleet};
use palmlab_core::palm::sample_intensity;
use palmlab_core::space::{
    exactly_k_points, make_mark_field, MarkField, OmegaMeasure, RandomMeasure, DEFAULT_OUTCOME_CAP,
};
use palmlab_core::transport::{check_palm_transport, is_balancing, push};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fair(n: usize) -> MarkField {
    let half = Scalar::ratio(1, 2);
    make_mark_field(
        Arc::new(FiniteAbelianGroup::cyclic(n).unwrap()),
        &[Scalar::zero(), Scalar::one()],
        &[half.clone(), half],
        DEFAULT_OUTCOME_CAP,
    )
    .unwrap()
}

/// `Σ_{ω∈O} P{ω} μ(ω){0} / Σ_{ω∈O} P{ω}` by direct summation.
fn orbit_average(p: &OmegaMeasure, mu: &RandomMeasure, members: &[usize]) -> Scalar {
    let mass: Scalar = members.iter().map(|&w| p.weight(w)).sum();
    let total: Scalar = members.iter().map(|&w| p.weight(w) * mu.mass(w, 0)).sum();
    &total / &mass
}

/// η = ξ̂ λ.
fn intensity_times_haar(p: &OmegaMeasure, xi: &RandomMeasure) -> RandomMeasure {
    let hat = sample_intensity(p, xi, &p.space().group().singleton(0)).unwrap();
    RandomMeasure::haar(p.space().clone())
        .scaled_by_outcome(&hat)
        .unwrap()
}

#[test]
fn equal_measures_balance() {
    let mf = fair(3);
    let v = construct_balancing_kernel(&mf.p, &mf.xi, &mf.xi).unwrap();
    let t = v.kernel().unwrap();
    assert!(t.is_invariant().holds() && t.is_markovian());
    assert!(is_balancing(t, &mf.xi, &mf.xi, &mf.p).unwrap().holds());
}

#[test]
fn intensity_times_haar_on_z2() {
    let mf = fair(2);
    let eta = intensity_times_haar(&mf.p, &mf.xi);
    assert!(check_equal_sample_intensities(&mf.p, &mf.xi, &eta)
        .unwrap()
        .holds());
    let v = construct_balancing_kernel(&mf.p, &mf.xi, &eta).unwrap();
    assert!(is_balancing(v.kernel().unwrap(), &mf.xi, &eta, &mf.p)
        .unwrap()
        .holds());
}

#[test]
fn haar_target_fails_with_orbit_witness() {
    let mf = fair(2);
    let haar = RandomMeasure::haar(mf.space().clone());
    let v = construct_balancing_kernel(&mf.p, &mf.xi, &haar).unwrap();
    let w = v.witness().expect("condition fails");
    let labels: Vec<&str> = w.members.iter().map(|&o| mf.space().label(o)).collect();
    assert_eq!(w.xi_intensity, orbit_average(&mf.p, &mf.xi, &w.members));
    assert_eq!(w.eta_intensity, orbit_average(&mf.p, &haar, &w.members));
    assert_ne!(w.xi_intensity, w.eta_intensity);
    assert_eq!(labels, ["00"]);
    assert_eq!(w.xi_intensity, Scalar::zero());
}

/// Ω = {10, 01} with P uniform: the kernel splits the point's mass over p and p + 1.
#[test]
fn single_orbit_two_outcomes() {
    let mf = exactly_k_points(Arc::new(FiniteAbelianGroup::cyclic(2).unwrap()), 1).unwrap();
    let sp = mf.space().clone();
    let g = sp.group();
    let eta = RandomMeasure::haar(sp.clone())
        .scaled_by_outcome(&vec![Scalar::ratio(1, 2); 2])
        .unwrap();
    let v = construct_balancing_kernel(&mf.p, &mf.xi, &eta).unwrap();
    let t = v.kernel().unwrap();
    let half = GMeasure::haar(g).scale(&Scalar::ratio(1, 2)).unwrap();
    for w in sp.outcomes() {
        let p = mf.configs[w].iter().position(|&c| c == 1).unwrap();
        assert_eq!(*t.at(w, p), half);
    }
    assert_eq!(push(&mf.xi, t).unwrap(), eta);
}

#[test]
fn zero_intensity_is_rejected() {
    let mf = fair(2);
    let zero = RandomMeasure::haar(mf.space().clone())
        .scaled_by_outcome(&vec![Scalar::zero(); 4])
        .unwrap();
    assert!(matches!(
        construct_balancing_kernel(&mf.p, &mf.xi, &zero),
        Err(ExistenceError::ZeroIntensity(_))
    ));
}

/// Constructed kernels on the fleet, including non-ergodic measures, and the verdict
/// under orbit-wise rescaling of both measures.
#[test]
fn fleet_construction_and_rescaling() {
    let mut constructed = 0;
    let mut multi_orbit = 0;
    for inst in standard_fleet(11).iter().step_by(3) {
        let eta = intensity_times_haar(&inst.p, &inst.xi);
        let v = construct_balancing_kernel(&inst.p, &inst.xi, &eta).unwrap();
        let t = v.kernel().expect("condition holds by construction");
        assert!(
            t.is_invariant().holds() && t.is_markovian(),
            "{}",
            inst.name
        );
        assert!(is_balancing(t, &inst.xi, &eta, &inst.p).unwrap().holds());
        constructed += 1;
        let orbits = inst.p.space().orbits();
        if orbits
            .iter()
            .filter(|o| !inst.p.weight(o[0]).is_zero())
            .count()
            > 1
        {
            multi_orbit += 1;
        }
        let factor: Vec<Scalar> = inst
            .p
            .space()
            .outcomes()
            .map(|w| Scalar::from_integer(orbits.orbit_of(w) as i64 % 3 + 1))
            .collect();
        let xi2 = inst.xi.scaled_by_outcome(&factor).unwrap();
        let eta2 = eta.scaled_by_outcome(&factor).unwrap();
        let v2 = construct_balancing_kernel(&inst.p, &xi2, &eta2).unwrap();
        assert!(v2.exists(), "{}", inst.name);
    }
    assert!(constructed >= 50, "{constructed}");
    assert!(multi_orbit >= 10, "{multi_orbit}");
}

/// Markovian invariant kernels keep sample intensities, so the condition holds for the
/// pushed measure; against Haar on non-ergodic spaces no sampled kernel balances.
#[test]
fn condition_matches_sampled_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for inst in standard_fleet(3).iter().step_by(7) {
        let t = random_invariant_kernel(&inst.xi, &mut rng, true);
        let eta = push(&inst.xi, &t).unwrap();
        assert!(
            check_equal_sample_intensities(&inst.p, &inst.xi, &eta)
                .unwrap()
                .holds(),
            "{}",
            inst.name
        );
        let haar = RandomMeasure::haar(inst.p.space().clone());
        if let ExistenceVerdict::Fails { .. } =
            construct_balancing_kernel(&inst.p, &inst.xi, &haar).unwrap()
        {
            for _ in 0..5 {
                let cand = random_invariant_kernel(&inst.xi, &mut rng, true);
                let r = check_palm_transport(&cand, &inst.xi, &haar, &inst.p).unwrap();
                assert!(!r.balancing.holds() && r.agree, "{}", inst.name);
            }
        }
    }
}
