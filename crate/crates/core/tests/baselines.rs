use tilecache::model::Point;
use tilecache::{generate_scenario, run_scheme, validate_policies, ScenarioConfig, SchemeKind, Source};

fn small(cache_fraction: f64) -> ScenarioConfig {
    ScenarioConfig {
        seed: 3,
        sbs: 2,
        users: 6,
        videos: 3,
        gops: 3,
        cache_fraction,
        ..ScenarioConfig::default()
    }
}

#[test]
fn without_overlap_collaboration_changes_nothing() {
    let mut cfg = small(0.1);
    // two cells 2 km apart, users spread over both
    cfg.sbs_positions = vec![Point::new(-1000.0, 0.0), Point::new(1000.0, 0.0)];
    cfg.mbs_radius = 2000.0;
    let s = generate_scenario(&cfg).unwrap();
    for u in 0..s.association.users() {
        assert!(s.association.sbs_of(u).count() <= 1);
    }
    let params = &s.solver;
    let joint = run_scheme(&s, SchemeKind::Proposed, params, false, 50).unwrap();
    let alone = run_scheme(&s, SchemeKind::Ic, params, false, 50).unwrap();
    assert!(
        (joint.metrics.d - alone.metrics.d).abs() <= 1e-9,
        "proposed {} ic {}",
        joint.metrics.d,
        alone.metrics.d
    );
}

#[test]
fn nothing_fits_means_backhaul_only() {
    // a fast backhaul, so that whole versions can be fetched within a GoP
    let mut cfg = small(1e-5);
    cfg.sbs_delay = 0.5;
    cfg.backhaul_delay = 1.0;
    let s = generate_scenario(&cfg).unwrap();
    let run = run_scheme(&s, SchemeKind::Icnt, &s.solver, false, 50).unwrap();
    assert!(run.policies.cache.gops.iter().all(|c| c.cached.iter().flatten().all(|&x| !x)));
    let routed = run.policies.routing.gops.iter().flat_map(|r| &r.source);
    assert!(routed.clone().all(|s| matches!(s, Source::Mbs | Source::None)));
    assert!(routed.clone().any(|s| *s == Source::Mbs));
    assert_eq!(run.metrics.chr, 0.0);
}

#[test]
fn every_scheme_is_valid_on_a_small_network() {
    let s = generate_scenario(&small(0.1)).unwrap();
    for kind in SchemeKind::ALL {
        for whole_frame in [false, true] {
            let run = run_scheme(&s, kind, &s.solver, whole_frame, 50).unwrap();
            let v = validate_policies(&run.instance, &run.policies);
            assert!(v.is_empty(), "{kind}: {v:?}");
            assert!(run.metrics.d > 0.0 && run.metrics.d <= 1.0);
        }
    }
}

#[test]
fn spare_cache_does_not_reshuffle_equal_versions() {
    // past 20% every video's best version already fits; the extra space
    // must not change which of the equally popular versions is kept
    let runs: Vec<_> = [0.20, 0.25]
        .iter()
        .map(|&cache_fraction| {
            let s = generate_scenario(&ScenarioConfig {
                cache_fraction,
                ..ScenarioConfig::default()
            })
            .unwrap();
            run_scheme(&s, SchemeKind::Icnt, &s.solver, false, 10).unwrap()
        })
        .collect();
    let objective = |k: usize| runs[k].reports.iter().map(|r| r.objective).sum::<f64>();
    assert!((objective(0) - objective(1)).abs() <= 1e-12);
    assert_eq!(runs[0].policies.routing, runs[1].policies.routing);
    assert_eq!(runs[0].metrics.d, runs[1].metrics.d);
}
