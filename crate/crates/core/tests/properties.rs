use std::sync::Arc;

use palmlab_core::algebra::{FiniteAbelianGroup, Scalar};
use palmlab_core::fleet::{jitter, random_invariant_kernel};
use palmlab_core::massstat::is_mass_stationary;
use palmlab_core::palm::{check_campbell_basis, check_mecke, inversion, palm, palm_measure};
use palmlab_core::serial::SpaceDocument;
use palmlab_core::space::{make_mark_field, MarkField};
use palmlab_core::transport::{check_palm_transport, inverse_kernel, push};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GROUPS: &[&[usize]] = &[&[1], &[2], &[3], &[4], &[5], &[2, 2], &[6]];

fn marks(choice: usize) -> Vec<Scalar> {
    match choice {
        0 => vec![Scalar::zero(), Scalar::one()],
        1 => vec![Scalar::one(), Scalar::from_integer(2)],
        _ => vec![Scalar::zero(), Scalar::one(), Scalar::sqrt2()],
    }
}

fn field(group: usize, mark_choice: usize, raw_law: &[i64]) -> Option<MarkField> {
    let g = Arc::new(FiniteAbelianGroup::new(GROUPS[group]).unwrap());
    let m = marks(mark_choice);
    if (m.len() as u32).pow(g.order() as u32) > 243 {
        return None;
    }
    let raw = &raw_law[..m.len()];
    let total: i64 = raw.iter().sum();
    let law: Vec<Scalar> = raw.iter().map(|&x| Scalar::ratio(x, total)).collect();
    make_mark_field(g, &m, &law, 1 << 12).ok()
}

fn model() -> impl Strategy<Value = MarkField> {
    (
        0..GROUPS.len(),
        0..3usize,
        prop::collection::vec(1i64..6, 3),
    )
        .prop_filter_map("too many outcomes", |(g, m, law)| field(g, m, &law))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// ℙ_ξ{ω} = P{ω} ξ(ω){0}, and the same table for every averaging set.
    #[test]
    fn palm_matches_direct_formula(mf in model(), mask in 1u64..64) {
        let g = mf.space().group();
        let direct: Vec<Scalar> = mf.space().outcomes().map(|w| mf.p.weight(w) * mf.xi.mass(w, 0)).collect();
        let r = palm(&mf.p, &mf.xi).unwrap();
        prop_assert_eq!(r.measure.weights(), direct.as_slice());
        let bits = mask & ((1u64 << g.order()) - 1);
        if bits != 0 {
            let b = g.subset_from_mask(bits);
            prop_assert_eq!(palm_measure(&mf.p, &mf.xi, &b).unwrap().measure, r.measure);
        }
    }

    #[test]
    fn palm_satisfies_mecke_and_campbell(mf in model()) {
        let q = palm(&mf.p, &mf.xi).unwrap().measure;
        prop_assert!(check_mecke(&q, &mf.xi).unwrap().holds());
        prop_assert!(check_campbell_basis(&mf.p, &mf.xi).unwrap().holds());
        prop_assert!(is_mass_stationary(&q, &mf.xi, None).unwrap().holds);
    }

    #[test]
    fn inversion_recovers_p_where_xi_charges(mf in model()) {
        let q = palm(&mf.p, &mf.xi).unwrap().measure;
        let back = inversion(&q, &mf.xi).unwrap();
        let expected = mf.p.restricted(|w| !mf.xi.is_null_at(w));
        prop_assert_eq!(back, expected);
    }

    /// The Mecke checker, the mass-stationarity checker and the inversion-based Palm
    /// test classify jittered measures alike.
    #[test]
    fn jittered_measures_are_classified_alike(mf in model(), seed in 0u64..1000) {
        let q = palm(&mf.p, &mf.xi).unwrap().measure;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jq = jitter(&q, &mut rng);
        let mecke = check_mecke(&jq, &mf.xi).unwrap();
        let ms = is_mass_stationary(&jq, &mf.xi, None).unwrap();
        prop_assert_eq!(mecke.holds(), ms.holds);
        let recovered = inversion(&jq, &mf.xi).unwrap();
        let is_palm = recovered.is_stationary().holds()
            && palm(&recovered, &mf.xi).unwrap().measure == jq;
        prop_assert_eq!(is_palm, mecke.holds());
    }

    #[test]
    fn random_kernels_are_invariant_and_balance_their_push(mf in model(), seed in 0u64..1000, markovian: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_invariant_kernel(&mf.xi, &mut rng, markovian);
        prop_assert!(t.is_invariant().holds());
        let eta = push(&mf.xi, &t).unwrap();
        prop_assert!(eta.is_invariant().holds());
        let r = check_palm_transport(&t, &mf.xi, &eta, &mf.p).unwrap();
        prop_assert!(r.balancing.holds() && r.palm_identity.holds());
        let t_star = inverse_kernel(&t, &mf.xi, &eta, &mf.p).unwrap();
        prop_assert!(t_star.is_invariant().holds());
    }

    #[test]
    fn space_documents_round_trip(mf in model()) {
        let doc = SpaceDocument::new(mf.space(), Some(&mf.p), Some(&mf.xi));
        let parts = SpaceDocument::from_json(&doc.to_json()).unwrap().parts().unwrap();
        let (p, xi) = (parts.p.unwrap(), parts.xi.unwrap());
        prop_assert_eq!(p.weights(), mf.p.weights());
        prop_assert_eq!(xi.per_outcome(), mf.xi.per_outcome());
    }
}
