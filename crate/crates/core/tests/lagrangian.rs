mod common;

use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{first_gop_budgets, relative_error, single_cell, tiny};
use tilecache::knapsack::solve_caching_component;
use tilecache::lagrangian::{
    lagrangian_value, routing_objective, subgradient, LambdaInit, Multipliers, SubgradientRule,
};
use tilecache::oracle::brute_force_joint;
use tilecache::policy::{GopCache, GopRouting};
use tilecache::routing::{solve_routing_component, Gains, Sources};
use tilecache::{generate_scenario, solve_subproblem, Instance, Source};

fn one_item() -> Instance {
    // one tile, one layer: a single item with z = 1 and δ equal to the normalizer
    Instance::tiled(&generate_scenario(&single_cell(1, 1, 1)).unwrap()).unwrap()
}

#[test]
fn lagrangian_value_hand_examples() {
    let inst = one_item();
    assert_eq!(inst.len(), 1);
    assert_relative_eq!(inst.unit_gain(0), 1.0);

    let zero = Multipliers::new(&inst, 0.0, LambdaInit::Absolute);
    let mut x = GopCache::empty(1, 1);
    x.cached[0][0] = true;
    let mut y = GopRouting::empty(1, 1);
    assert_eq!(lagrangian_value(&inst, &zero, &x, &y), 0.0);

    y.set(0, 0, Source::Mbs);
    assert_relative_eq!(lagrangian_value(&inst, &zero, &x, &y), routing_objective(&inst, &y));

    let mut lambda = zero.clone();
    lambda.set(0, 0, 0, 0.2);
    y.set(0, 0, Source::Sbs(0));
    // (1 − 0.2) from the routing term plus 0.2 from the cached item
    assert_relative_eq!(lagrangian_value(&inst, &lambda, &x, &y), 1.0, epsilon = 1e-12);
}

#[test]
fn subgradient_signs() {
    let inst = one_item();
    let lambda = Multipliers::new(&inst, 0.0, LambdaInit::Absolute);
    let mut phi = Vec::new();
    let cases = [(true, true, 0.0), (false, true, -1.0), (true, false, 1.0)];
    for (cached, routed, expected) in cases {
        let mut x = GopCache::empty(1, 1);
        x.cached[0][0] = cached;
        let mut y = GopRouting::empty(1, 1);
        if routed {
            y.set(0, 0, Source::Sbs(0));
        }
        subgradient(&inst, &lambda, &x, &y, SubgradientRule::Exact, &mut phi);
        assert_eq!(phi, vec![expected]);
    }
}

#[test]
fn zero_demand_converges_at_once() {
    let mut inst = Instance::tiled(&tiny(1)).unwrap();
    for it in &mut inst.items {
        it.z = 0.0;
    }
    let (capacity, budgets) = first_gop_budgets(&inst);
    let sol = solve_subproblem(&inst, 0, &capacity, &budgets, &Default::default()).unwrap();
    assert_eq!(sol.report.iterations, 1);
    assert_eq!(sol.report.lb, 0.0);
    assert_eq!(sol.report.ub, 0.0);
    assert!(sol.cache.cached.iter().flatten().all(|c| !c));
    assert!(sol.routing.source.iter().all(|s| *s == Source::None));
}

#[test]
fn single_tile_full_service() {
    let mut cfg = single_cell(1, 1, 2);
    cfg.cache_fraction = 1.0;
    cfg.t_app = 50.0;
    let inst = Instance::tiled(&generate_scenario(&cfg).unwrap()).unwrap();
    let (capacity, budgets) = first_gop_budgets(&inst);
    let sol = solve_subproblem(&inst, 0, &capacity, &budgets, &Default::default()).unwrap();
    assert!(sol.cache.cached[0].iter().all(|&c| c));
    assert!(sol.routing.source.iter().all(|s| *s == Source::Sbs(0)));
    assert_relative_eq!(sol.report.lb, 1.0, epsilon = 1e-12);
    let exact = brute_force_joint(&inst, &capacity, &budgets).unwrap();
    assert_relative_eq!(exact.value, 1.0, epsilon = 1e-12);
    // the loop stops once the gap drops under ε; the primal is already exact
    assert!(sol.report.converged && sol.report.gap <= 0.01);
    assert_relative_eq!(routing_objective(&inst, &sol.routing), 1.0, epsilon = 1e-12);
}

#[test]
fn tiny_instances_match_the_oracle() {
    for k in [1, 2, 4, 5, 7, 8] {
        let inst = Instance::tiled(&tiny(k)).unwrap();
        let (capacity, budgets) = first_gop_budgets(&inst);
        let exact = brute_force_joint(&inst, &capacity, &budgets).unwrap();
        let sol = solve_subproblem(&inst, 0, &capacity, &budgets, &Default::default()).unwrap();
        assert!(
            relative_error(sol.report.lb, exact.value) <= 0.01,
            "instance {k}: lb {} optimum {}",
            sol.report.lb,
            exact.value
        );
        assert!(sol.report.lb <= exact.value + 1e-12);
        assert!(sol.report.ub >= exact.value - 1e-12);
    }
}

#[test]
fn relaxation_bounds_the_optimum_at_any_multipliers() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..6 {
        let inst = Instance::tiled(&tiny(k)).unwrap();
        let (capacity, budgets) = first_gop_budgets(&inst);
        let exact = brute_force_joint(&inst, &capacity, &budgets).unwrap();
        let mut knapsack = Default::default();
        let mut router = Default::default();
        for _ in 0..5 {
            let mut lambda = Multipliers::new(&inst, 0.0, LambdaInit::Absolute);
            for l in lambda.values_mut() {
                *l = rng.gen_range(0.0..0.05);
            }
            let (x, cache_value) = solve_caching_component(&inst, &lambda, &capacity, &mut knapsack);
            let (y, route_value) =
                solve_routing_component(&inst, Gains::Lagrangian(&lambda), Sources::Covered, &budgets, &mut router)
                    .unwrap();
            let dual = cache_value + route_value;
            assert_relative_eq!(dual, lagrangian_value(&inst, &lambda, &x, &y), epsilon = 1e-12);
            assert!(dual >= exact.value - 1e-12, "instance {k}: dual {dual} below {}", exact.value);
        }
    }
}
