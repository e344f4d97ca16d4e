use palmlab_torus::*;

#[test]
fn same_seed_same_report() {
    let c = TorusConfig::exactly_k(8, 2, 8, 7, 2000);
    let a = verify_shift_coupling(&c, 3, OriginSampling::Palm).unwrap();
    let b = verify_shift_coupling(&c, 3, OriginSampling::Palm).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.tv_distance.to_bits(), b.tv_distance.to_bits());
    let other =
        verify_shift_coupling(&TorusConfig { seed: 8, ..c }, 3, OriginSampling::Palm).unwrap();
    assert_ne!(a.tv_distance.to_bits(), other.tv_distance.to_bits());
}

#[test]
fn every_site_a_point_has_zero_distance() {
    let c = TorusConfig::exactly_k(4, 2, 16, 1, 500);
    let r = verify_shift_coupling(&c, 2, OriginSampling::Palm).unwrap();
    assert_eq!(r.tv_distance, 0.0);
    assert_eq!(r.quota, 1);
}

#[test]
fn quota_and_stability_on_every_run() {
    for (n, d, k) in [(16, 2, 16), (12, 1, 3), (6, 2, 12), (4, 3, 8)] {
        let c = TorusConfig::exactly_k(n, d, k, 3, 1000);
        let r = verify_shift_coupling(&c, 2, OriginSampling::Palm).unwrap();
        assert_eq!(r.quota * k, c.n.pow(c.d as u32));
        assert_eq!(r.quota_violations, 0);
        assert_eq!(r.stability_checked, 1000);
        assert_eq!(r.blocking_pairs, 0);
    }
}

#[test]
fn distance_shrinks_with_replicates() {
    let tv = |reps| {
        let c = TorusConfig::exactly_k(16, 2, 16, 42, reps);
        verify_shift_coupling(&c, 3, OriginSampling::Palm)
            .unwrap()
            .tv_distance
    };
    let (small, large) = (tv(1000), tv(20000));
    assert!(large < small, "{large} vs {small}");
    assert!(large < 0.05, "{large}");
}

#[test]
fn uniform_origin_is_detected() {
    let c = TorusConfig::exactly_k(16, 2, 16, 42, 10000);
    let r = verify_shift_coupling(&c, 3, OriginSampling::Stationary).unwrap();
    assert!(r.tv_distance > 0.1, "{}", r.tv_distance);
}

#[test]
fn shift_coupling_rejects_bernoulli_and_indivisible() {
    let b = TorusConfig::bernoulli(8, 1, 0.5, 0, 10);
    assert_eq!(
        verify_shift_coupling(&b, 2, OriginSampling::Palm),
        Err(TorusError::NeedsExactlyK)
    );
    let c = TorusConfig::exactly_k(8, 1, 3, 0, 10);
    assert!(matches!(
        verify_shift_coupling(&c, 2, OriginSampling::Palm),
        Err(TorusError::QuotaIndivisible { k: 3, sites: 8 })
    ));
    let c = TorusConfig::exactly_k(2, 1, 3, 0, 10);
    assert!(verify_shift_coupling(&c, 2, OriginSampling::Palm).is_err());
    let bad = TorusConfig::bernoulli(4, 1, 1.5, 0, 10);
    assert!(matches!(
        verify_window_coupling_mc(&bad, &[0], 1, OriginSampling::Palm),
        Err(TorusError::BadProbability(_))
    ));
}

#[test]
fn single_site_window_is_exact() {
    let c = TorusConfig::bernoulli(8, 1, 0.3, 5, 2000);
    let r = verify_window_coupling_mc(&c, &[0], 3, OriginSampling::Palm).unwrap();
    assert_eq!(r.tv_distance, 0.0);
}

#[test]
fn window_coupling_palm_vs_control() {
    let c = TorusConfig::bernoulli(3, 1, 0.5, 11, 50000);
    let palm = verify_window_coupling_mc(&c, &[0, 1], 3, OriginSampling::Palm).unwrap();
    let ctrl = verify_window_coupling_mc(&c, &[0, 1], 3, OriginSampling::Stationary).unwrap();
    assert!(palm.tv_distance < 0.02, "{}", palm.tv_distance);
    assert!(ctrl.tv_distance > 0.1, "{}", ctrl.tv_distance);

    let t = Torus::new(6, 2).unwrap();
    let k = TorusConfig::exactly_k(6, 2, 5, 2, 50000);
    let palm = verify_window_coupling_mc(&k, &t.box_window(2), 2, OriginSampling::Palm).unwrap();
    assert!(palm.tv_distance < 0.03, "{}", palm.tv_distance);
    assert!(verify_window_coupling_mc(&k, &[], 2, OriginSampling::Palm).is_err());
    assert!(verify_window_coupling_mc(&k, &[36], 2, OriginSampling::Palm).is_err());
}

#[test]
fn config_round_trips_and_rejects_unknown_fields() {
    let c = TorusConfig::exactly_k(16, 2, 16, 42, 100000);
    let json = serde_json::to_string(&c).unwrap();
    assert_eq!(serde_json::from_str::<TorusConfig>(&json).unwrap(), c);
    let extra = json.replace("\"seed\"", "\"colour\":1,\"seed\"");
    assert!(serde_json::from_str::<TorusConfig>(&extra).is_err());
}

#[test]
fn allocation_csv_has_a_row_per_site() {
    let t = Torus::new(4, 2).unwrap();
    let a = stable_marriage_allocate(&t, &[0, 5, 10, 15]).unwrap();
    let mut buf = Vec::new();
    a.write_csv(&t, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(text.starts_with("site_0,site_1,point_0,point_1\n0,0,0,0\n"));
}
