mod common;

use common::{first_gop_budgets, relative_error, tiny_config};
use tilecache::lagrangian::routing_objective;
use tilecache::oracle::brute_force_joint;
use tilecache::scheduler::{gop_cache_budget, gop_delay_budget, playback_deadline};
use tilecache::{generate_scenario, solve_full, solve_subproblem, validate_policies, Instance};

#[test]
fn single_gop_is_one_subproblem() {
    let inst = Instance::tiled(&generate_scenario(&tiny_config(4)).unwrap()).unwrap();
    let params = Default::default();
    let full = solve_full(&inst, &params).unwrap();
    let (capacity, budgets) = first_gop_budgets(&inst);
    let one = solve_subproblem(&inst, 0, &capacity, &budgets, &params).unwrap();
    assert_eq!(full.policies.cache.gops[0], one.cache);
    assert_eq!(full.policies.routing.gops[0], one.routing);
    assert_eq!(full.report.objective, routing_objective(&inst, &one.routing));
}

#[test]
fn ample_budgets_repeat_the_same_caches() {
    let mut cfg = tiny_config(1);
    cfg.gops = 4;
    cfg.class_mix = [1.0, 0.0, 0.0];
    cfg.cache_fraction = 1.0;
    cfg.t_app = 100.0;
    let inst = Instance::tiled(&generate_scenario(&cfg).unwrap()).unwrap();
    let full = solve_full(&inst, &Default::default()).unwrap();
    let caches = &full.policies.cache.gops;
    assert!(caches[0].cached.iter().flatten().any(|&c| c));
    for g in 1..caches.len() {
        assert_eq!(caches[g], caches[0], "GoP {g}");
    }
    assert!(validate_policies(&inst, &full.policies).is_empty());
}

/// Brute force of every GoP in turn, carrying unused cache and the slack of
/// the slowest user forward exactly as the schedule does.
fn decomposed_optimum(inst: &Instance) -> f64 {
    let (users, videos, gops) = (inst.users(), inst.videos, inst.gops);
    let mut rem = vec![0u64; inst.sbs()];
    let mut t_rem = 0.0;
    let mut consumed = vec![0.0; users * videos];
    let mut total = 0.0;
    for g in 0..gops {
        let capacity: Vec<u64> = (0..inst.sbs())
            .map(|n| gop_cache_budget(inst.capacity[n], gops, rem[n]))
            .collect();
        let t_g = gop_delay_budget(inst.timing.t_app, inst.timing.t_disp, gops, t_rem);
        let deadline = playback_deadline(&inst.timing, g);
        let budgets: Vec<f64> = consumed.iter().map(|c| t_g.min(deadline - c).max(0.0)).collect();
        let best = brute_force_joint(inst, &capacity, &budgets).unwrap();
        total += best.value;
        for n in 0..inst.sbs() {
            rem[n] = capacity[n] - best.cache.used_kbit(inst, n);
        }
        let mut slack = t_g;
        for u in 0..users {
            for v in 0..videos {
                let d = best.routing.video_delay(inst, u, v);
                consumed[u * videos + v] += d;
                slack = slack.min(t_g - d);
            }
        }
        t_rem = if users == 0 { t_g } else { slack.max(0.0) };
    }
    total
}

#[test]
fn two_gops_match_the_decomposed_oracle() {
    for k in [1, 2, 5] {
        let mut cfg = tiny_config(k);
        cfg.gops = 2;
        let inst = Instance::tiled(&generate_scenario(&cfg).unwrap()).unwrap();
        let exact = decomposed_optimum(&inst);
        let full = solve_full(&inst, &Default::default()).unwrap();
        assert!(
            relative_error(full.report.objective, exact) <= 0.01,
            "instance {k}: solver {} oracle {exact}",
            full.report.objective
        );
        assert!(validate_policies(&inst, &full.policies).is_empty());
    }
}
