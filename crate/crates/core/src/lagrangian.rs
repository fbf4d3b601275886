//! Primal-dual subgradient loop for one GoP subproblem.
//!
//! The coupling `y ≤ α x` between routing and caching is relaxed with one
//! multiplier per covered (SBS, user, item) triple. Each iteration solves the
//! caching component (per-SBS knapsacks) and the routing component (per
//! user/video bundles), repairs a feasible point by re-routing against the
//! chosen caches, and takes a Polyak step on the multipliers.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::knapsack::{solve_caching_component, Item, KnapsackSolver};
use crate::model::Source;
use crate::policy::{GopCache, GopRouting};
use crate::routing::{
    apply_solution, build_bundle, solve_routing_component, Bundle, BundleSolution, Gains, RoutingSolver, Sources,
};
use crate::scalar::Real;

/// Which subgradient drives the multiplier update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgradientRule {
    /// `α x − y`, the gradient of the Lagrangian.
    #[default]
    Exact,
    /// `−y + z δ α x`, the cache term weighted by the item value.
    Weighted,
}

impl std::str::FromStr for SubgradientRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "weighted" => Ok(Self::Weighted),
            other => Err(Error::config("subgradient", format!("unknown rule `{other}`"))),
        }
    }
}

/// How the initial multiplier value is interpreted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaInit {
    /// Every multiplier starts at `lambda0`.
    Absolute,
    /// Each multiplier starts at `lambda0` times the unit gain of its item.
    #[default]
    RelativeToGain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Polyak step scale, in `(0, 2]`.
    pub w: f64,
    /// Relative gap target.
    pub epsilon: f64,
    pub tau_max: usize,
    pub lambda0: f64,
    pub lambda_init: LambdaInit,
    pub subgradient: SubgradientRule,
    /// Halve the step scale after this many iterations without a better
    /// dual value; 0 keeps it fixed.
    pub stall_limit: usize,
    /// Start each GoP from the previous GoP's multipliers and routing.
    pub warm_start: bool,
    /// Initial step scale of a warm-started GoP.
    pub warm_w: f64,
    /// Local-search passes over the caches of the best feasible point,
    /// run whenever the step scale is halved and once at the end.
    pub polish_rounds: usize,
    /// Stop once the halved step scale falls below this value.
    pub w_floor: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            w: 1.0,
            epsilon: 0.01,
            tau_max: 1000,
            lambda0: 0.2,
            lambda_init: LambdaInit::RelativeToGain,
            subgradient: SubgradientRule::Exact,
            stall_limit: 5,
            warm_start: true,
            warm_w: 0.1,
            polish_rounds: 3,
            w_floor: 1e-2,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.w > 0.0 && self.w <= 2.0) {
            return Err(Error::config("w", "step scale must lie in (0, 2]"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("epsilon", "gap target must be > 0"));
        }
        if self.tau_max == 0 {
            return Err(Error::config("tau_max", "must be at least 1"));
        }
        if !(self.lambda0 >= 0.0 && self.lambda0.is_finite()) {
            return Err(Error::config("lambda0", "must be finite and >= 0"));
        }
        if !(self.w_floor >= 0.0 && self.w_floor < self.w) {
            return Err(Error::config("w_floor", "must lie in [0, w)"));
        }
        if !(self.warm_w > self.w_floor && self.warm_w <= 2.0) {
            return Err(Error::config("warm_w", "must lie in (w_floor, 2]"));
        }
        Ok(())
    }
}

/// Multipliers over covered (SBS, user) pairs, dense over items. Items
/// nobody requests are pinned at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Multipliers {
    items: usize,
    users: usize,
    pairs: Vec<(usize, usize)>,
    pair_of: Vec<Option<usize>>,
    by_sbs: Vec<Vec<usize>>,
    active: Vec<bool>,
    values: Vec<f64>,
}

impl Multipliers {
    pub fn new(inst: &Instance, lambda0: f64, init: LambdaInit) -> Self {
        let (sbs, users, items) = (inst.sbs(), inst.users(), inst.len());
        let mut pairs = Vec::new();
        let mut pair_of = vec![None; sbs * users];
        let mut by_sbs = vec![Vec::new(); sbs];
        for (n, list) in by_sbs.iter_mut().enumerate() {
            for u in inst.association.users_of(n) {
                pair_of[n * users + u] = Some(pairs.len());
                list.push(pairs.len());
                pairs.push((n, u));
            }
        }
        let active: Vec<bool> = (0..items).map(|i| inst.unit_gain(i) > 0.0).collect();
        let row: Vec<f64> = (0..items)
            .map(|i| match (active[i], init) {
                (false, _) => 0.0,
                (true, LambdaInit::Absolute) => lambda0,
                (true, LambdaInit::RelativeToGain) => lambda0 * inst.unit_gain(i),
            })
            .collect();
        let values = row.repeat(pairs.len());
        Multipliers {
            items,
            users,
            pairs,
            pair_of,
            by_sbs,
            active,
            values,
        }
    }

    pub fn items(&self) -> usize {
        self.items
    }

    /// Whether these multipliers have the shape of `inst`'s.
    pub fn fits(&self, inst: &Instance) -> bool {
        self.items == inst.len()
            && self.users == inst.users()
            && self.by_sbs.len() == inst.sbs()
            && self
                .pairs
                .iter()
                .all(|&(n, u)| inst.association.covers(n, u))
            && self.pairs.len() == (0..inst.sbs()).map(|n| inst.association.users_of(n).count()).sum::<usize>()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pairs_of_sbs(&self, n: usize) -> &[usize] {
        &self.by_sbs[n]
    }

    pub fn pair_of(&self, n: usize, u: usize) -> Option<usize> {
        self.pair_of[n * self.users + u]
    }

    pub fn row(&self, p: usize) -> &[f64] {
        &self.values[p * self.items..(p + 1) * self.items]
    }

    /// `λ^{nu}_i`, zero for uncovered pairs.
    pub fn get(&self, n: usize, u: usize, i: usize) -> f64 {
        self.pair_of(n, u).map_or(0.0, |p| self.values[p * self.items + i])
    }

    pub fn set(&mut self, n: usize, u: usize, i: usize, value: f64) {
        if let Some(p) = self.pair_of(n, u) {
            self.values[p * self.items + i] = value;
        }
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Lagrangian function at `λ` for an arbitrary (possibly infeasible) `(x, y)`.
pub fn lagrangian_value(inst: &Instance, lambda: &Multipliers, x: &GopCache, y: &GopRouting) -> f64 {
    let mut value = 0.0;
    for u in 0..inst.users() {
        for i in 0..inst.len() {
            match y.get(u, i) {
                Source::None => {}
                Source::Mbs => value += inst.unit_gain(i),
                Source::Sbs(n) => {
                    let alpha = if inst.association.covers(n, u) { 1.0 } else { 0.0 };
                    value += alpha * inst.unit_gain(i) - lambda.get(n, u, i);
                }
            }
        }
    }
    for (p, &(n, _)) in lambda.pairs().iter().enumerate() {
        for (i, l) in lambda.row(p).iter().enumerate() {
            if x.is_cached(n, i) {
                value += l;
            }
        }
    }
    value
}

/// True objective of a routing: `Σ z δ α y / Δ`.
pub fn routing_objective(inst: &Instance, y: &GopRouting) -> f64 {
    let mut value = 0.0;
    for u in 0..inst.users() {
        for i in 0..inst.len() {
            match y.get(u, i) {
                Source::None => {}
                Source::Mbs => value += inst.unit_gain(i),
                Source::Sbs(n) if inst.association.covers(n, u) => value += inst.unit_gain(i),
                Source::Sbs(_) => {}
            }
        }
    }
    value
}

/// Subgradient of the dual at the component solutions, laid out like
/// [`Multipliers::values`]. Inactive items get zero.
pub fn subgradient(
    inst: &Instance,
    lambda: &Multipliers,
    x: &GopCache,
    y: &GopRouting,
    rule: SubgradientRule,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.resize(lambda.values().len(), 0.0);
    let items = lambda.items();
    for (p, &(n, u)) in lambda.pairs().iter().enumerate() {
        for i in 0..items {
            if !lambda.is_active(i) {
                continue;
            }
            let xv = if x.is_cached(n, i) { 1.0 } else { 0.0 };
            let yv = if y.get(u, i) == Source::Sbs(n) { 1.0 } else { 0.0 };
            out[p * items + i] = match rule {
                SubgradientRule::Exact => xv - yv,
                SubgradientRule::Weighted => {
                    let it = &inst.items[i];
                    it.z * it.delta * xv - yv
                }
            };
        }
    }
}

/// Polyak step `w (UB − LB) / ‖φ‖²`; `None` when the subgradient vanishes.
pub fn step_size<S: Real>(ub: S, lb: S, norm_sq: S, w: S) -> Option<S> {
    if norm_sq <= S::zero() {
        return None;
    }
    Some((w * (ub - lb) / norm_sq).max(S::zero()))
}

/// Projected update `λ ← max(0, λ − σ φ)`.
pub fn update_multipliers<S: Real>(lambda: &mut [S], sigma: S, phi: &[S]) {
    for (l, &p) in lambda.iter_mut().zip(phi) {
        *l = (*l - sigma * p).max(S::zero());
    }
}

/// Relative gap, or the absolute one when the lower bound is not positive.
pub fn duality_gap(ub: f64, lb: f64) -> f64 {
    if lb > 0.0 {
        ((ub - lb) / lb).abs()
    } else {
        (ub - lb).abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tau: usize,
    /// Best Lagrangian value so far.
    pub ub: f64,
    /// Best feasible objective so far.
    pub lb: f64,
    pub gap: f64,
    /// Step taken after this iteration (0 on the last one).
    pub sigma: f64,
}

/// Outcome of one GoP subproblem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GopReport {
    pub gop: usize,
    pub iterations: usize,
    pub ub: f64,
    pub lb: f64,
    pub gap: f64,
    pub converged: bool,
    pub capacity_kbit: Vec<u64>,
    pub trace: Vec<TraceRow>,
}

/// Loop state of the subgradient method.
#[derive(Clone, Debug)]
pub struct DualState {
    pub lambda: Multipliers,
    pub best_lambda: Multipliers,
    pub tau: usize,
    pub ub: f64,
    pub lb: f64,
    pub best_primal: (GopCache, GopRouting),
    pub trace: Vec<TraceRow>,
}

#[derive(Clone, Debug)]
pub struct SubproblemSolution {
    pub cache: GopCache,
    pub routing: GopRouting,
    pub report: GopReport,
    /// Multipliers of the best dual value.
    pub lambda: Multipliers,
}

/// What a GoP solve inherits from the one before it.
#[derive(Clone, Copy, Debug)]
pub struct WarmStart<'a> {
    pub lambda: &'a Multipliers,
    pub routing: &'a GopRouting,
}

/// Cached bundle solutions kept before the memo is flushed.
const MEMO_LIMIT: usize = 1 << 18;

/// Re-routes every (user, video) pair against fixed caches, memoizing on
/// the bundle contents: users with the same coverage and cache pattern share
/// one solve.
struct Repairer {
    bundle: Bundle<f64>,
    key: Vec<u64>,
    memo: HashMap<Vec<u64>, BundleSolution<f64>>,
}

impl Repairer {
    fn new() -> Self {
        Repairer {
            bundle: Bundle::new(),
            key: Vec::new(),
            memo: HashMap::new(),
        }
    }

    /// Best routing of one (user, video) pair against `cache`, left in
    /// `self.bundle` order.
    fn solve_pair(
        &mut self,
        inst: &Instance,
        cache: &GopCache,
        budgets: &[f64],
        u: usize,
        v: usize,
        solver: &mut RoutingSolver<f64>,
    ) -> Result<BundleSolution<f64>> {
        let budget = budgets[u * inst.videos + v];
        build_bundle(inst, u, v, Gains::Objective, Sources::Cached(cache), &mut self.bundle);
        self.fingerprint(v, budget);
        if let Some(sol) = self.memo.get(&self.key) {
            return Ok(sol.clone());
        }
        if self.memo.len() >= MEMO_LIMIT {
            self.memo.clear();
        }
        let sol = solver.solve(&self.bundle, budget)?;
        self.memo.insert(self.key.clone(), sol.clone());
        Ok(sol)
    }

    fn repair(
        &mut self,
        inst: &Instance,
        cache: &GopCache,
        budgets: &[f64],
        solver: &mut RoutingSolver<f64>,
    ) -> Result<(GopRouting, f64)> {
        let mut routing = GopRouting::empty(inst.users(), inst.len());
        let mut total = 0.0;
        for u in 0..inst.users() {
            for v in 0..inst.videos {
                let sol = self.solve_pair(inst, cache, budgets, u, v, solver)?;
                apply_solution(&self.bundle, &sol, inst, u, v, &mut routing);
                total += sol.gain;
            }
        }
        Ok((routing, total))
    }

    /// Objective of every (user, video) pair against `cache`.
    fn pair_values(
        &mut self,
        inst: &Instance,
        cache: &GopCache,
        budgets: &[f64],
        solver: &mut RoutingSolver<f64>,
    ) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(inst.users() * inst.videos);
        for u in 0..inst.users() {
            for v in 0..inst.videos {
                out.push(self.solve_pair(inst, cache, budgets, u, v, solver)?.gain);
            }
        }
        Ok(out)
    }

    fn fingerprint(&mut self, v: usize, budget: f64) {
        self.key.clear();
        self.key.push(v as u64);
        self.key.push(budget.to_bits());
        for item in 0..self.bundle.item_count() {
            self.key.push(u64::MAX);
            for c in self.bundle.options(item) {
                self.key.push(match c.source {
                    Source::Sbs(n) => n as u64,
                    Source::Mbs => u64::MAX - 1,
                    Source::None => u64::MAX - 2,
                });
                self.key.push(c.delay.to_bits());
            }
        }
    }
}

/// Local search on a feasible cache. For one SBS at a time, every item is
/// valued by the exact objective change of toggling it alone. The most
/// promising additions are then tried one by one, each making room by
/// dropping the held items that are cheapest to lose, and a move is kept
/// only if re-routing confirms an improvement. Returns the improved cache
/// and its objective, or `None` when nothing helped.
#[allow(clippy::too_many_arguments)]
fn polish(
    inst: &Instance,
    start: &GopCache,
    capacity_kbit: &[u64],
    budgets: &[f64],
    rounds: usize,
    repairer: &mut Repairer,
    router: &mut RoutingSolver<f64>,
) -> Result<Option<(GopCache, f64)>> {
    let videos = inst.videos;
    let mut cache = start.clone();
    let mut values = repairer.pair_values(inst, &cache, budgets, router)?;
    let mut total: f64 = values.iter().sum();
    let initial = total;
    for _ in 0..rounds {
        let mut improved = false;
        for n in 0..inst.sbs() {
            let users: Vec<usize> = inst.association.users_of(n).collect();
            if users.is_empty() {
                continue;
            }
            // exact value of toggling each item alone
            let mut adds = Vec::new();
            let mut keeps = Vec::new();
            for i in 0..inst.len() {
                let held = cache.cached[n][i];
                if inst.unit_gain(i) <= 0.0 || (!held && inst.items[i].size_kbit > capacity_kbit[n]) {
                    continue;
                }
                let v = inst.items[i].video;
                cache.cached[n][i] = !held;
                let mut delta = 0.0;
                for &u in &users {
                    delta += repairer.solve_pair(inst, &cache, budgets, u, v, router)?.gain - values[u * videos + v];
                }
                cache.cached[n][i] = held;
                if held {
                    keeps.push((i, -delta));
                } else if delta > 0.0 {
                    adds.push((i, delta));
                }
            }
            let per_kbit = |&(i, value): &(usize, f64)| value / inst.items[i].size_kbit.max(1) as f64;
            adds.sort_by(|a, b| per_kbit(b).total_cmp(&per_kbit(a)).then(a.0.cmp(&b.0)));
            keeps.sort_by(|a, b| per_kbit(a).total_cmp(&per_kbit(b)).then(a.0.cmp(&b.0)));

            for &(i, gain) in adds.iter().take(POLISH_CANDIDATES) {
                if cache.cached[n][i] {
                    continue;
                }
                let mut free = capacity_kbit[n] - cache.used_kbit(inst, n);
                let mut dropped = Vec::new();
                let mut lost = 0.0;
                for &(j, value) in &keeps {
                    if free >= inst.items[i].size_kbit {
                        break;
                    }
                    if cache.cached[n][j] {
                        dropped.push(j);
                        lost += value;
                        free += inst.items[j].size_kbit;
                    }
                }
                if free < inst.items[i].size_kbit || lost >= gain {
                    continue;
                }
                for &j in &dropped {
                    cache.cached[n][j] = false;
                }
                cache.cached[n][i] = true;
                let mut touched: Vec<usize> = dropped.iter().chain([&i]).map(|&k| inst.items[k].video).collect();
                touched.sort_unstable();
                touched.dedup();
                let mut fresh = Vec::new();
                let mut change = 0.0;
                for &u in &users {
                    for &v in &touched {
                        let g = repairer.solve_pair(inst, &cache, budgets, u, v, router)?.gain;
                        change += g - values[u * videos + v];
                        fresh.push((u * videos + v, g));
                    }
                }
                if change > POLISH_TOLERANCE * total.abs().max(f64::MIN_POSITIVE) {
                    for (k, g) in fresh {
                        values[k] = g;
                    }
                    total += change;
                    improved = true;
                } else {
                    for &j in &dropped {
                        cache.cached[n][j] = true;
                    }
                    cache.cached[n][i] = false;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok((total > initial).then_some((cache, total)))
}

/// Polishes the best feasible point in place.
fn polish_best(
    state: &mut DualState,
    inst: &Instance,
    capacity_kbit: &[u64],
    budgets: &[f64],
    params: &SolverParams,
    repairer: &mut Repairer,
    router: &mut RoutingSolver<f64>,
) -> Result<()> {
    if params.polish_rounds == 0 {
        return Ok(());
    }
    let before = state.lb;
    let found = polish(
        inst,
        &state.best_primal.0,
        capacity_kbit,
        budgets,
        params.polish_rounds,
        repairer,
        router,
    )?;
    if let Some((cache, value)) = found {
        if value > state.lb {
            let (routing, value) = repairer.repair(inst, &cache, budgets, router)?;
            state.lb = value;
            state.best_primal = (prune_unused(inst, &cache, &routing), routing);
        }
    }
    log::trace!("tau {}: polish {before:.6e} -> {:.6e}", state.tau, state.lb);
    Ok(())
}

/// Replaces cached items by lower-indexed twins (same video, size and unit
/// gain) whenever the repaired value does not drop. Among caches of equal
/// value this settles on the same one whatever path the multipliers took,
/// so results do not flip between equivalent optima as budgets change.
fn canonicalize_best(
    state: &mut DualState,
    inst: &Instance,
    budgets: &[f64],
    repairer: &mut Repairer,
    router: &mut RoutingSolver<f64>,
) -> Result<()> {
    let videos = inst.videos;
    let mut cache = state.best_primal.0.clone();
    let mut values = repairer.pair_values(inst, &cache, budgets, router)?;
    let total: f64 = values.iter().sum();
    let slack = POLISH_TOLERANCE * total.abs().max(f64::MIN_POSITIVE);
    let twins = |i: usize, j: usize| {
        let (a, b) = (&inst.items[i], &inst.items[j]);
        let (ga, gb) = (inst.unit_gain(i), inst.unit_gain(j));
        a.video == b.video && a.size_kbit == b.size_kbit && (ga - gb).abs() <= 1e-12 * ga.abs().max(gb.abs())
    };
    let mut swapped = false;
    for n in 0..inst.sbs() {
        let users: Vec<usize> = inst.association.users_of(n).collect();
        for i in 0..inst.len() {
            if !cache.cached[n][i] || inst.unit_gain(i) <= 0.0 {
                continue;
            }
            let v = inst.items[i].video;
            for j in 0..i {
                if cache.cached[n][j] || !twins(i, j) {
                    continue;
                }
                cache.cached[n][i] = false;
                cache.cached[n][j] = true;
                let mut change = 0.0;
                let mut fresh = Vec::with_capacity(users.len());
                for &u in &users {
                    let g = repairer.solve_pair(inst, &cache, budgets, u, v, router)?.gain;
                    change += g - values[u * videos + v];
                    fresh.push(g);
                }
                if change >= -slack {
                    for (&u, g) in users.iter().zip(fresh) {
                        values[u * videos + v] = g;
                    }
                    swapped = true;
                    break;
                }
                cache.cached[n][j] = false;
                cache.cached[n][i] = true;
            }
        }
    }
    if swapped {
        let (routing, value) = repairer.repair(inst, &cache, budgets, router)?;
        state.lb = value;
        state.best_primal = (prune_unused(inst, &cache, &routing), routing);
    }
    Ok(())
}

/// Relative dual improvement that still counts as progress of the step.
const STALL_TOLERANCE: f64 = 1e-5;

/// Additions tried per SBS and polish round.
const POLISH_CANDIDATES: usize = 32;

/// Relative improvement below which a polish step is not worth keeping.
const POLISH_TOLERANCE: f64 = 1e-12;

/// Drops cached items no user is routed from, keeping the objective and
/// freeing capacity for later GoPs.
pub fn prune_unused(inst: &Instance, cache: &GopCache, routing: &GopRouting) -> GopCache {
    let mut used = GopCache::empty(inst.sbs(), inst.len());
    for u in 0..inst.users() {
        for i in 0..inst.len() {
            if let Source::Sbs(n) = routing.get(u, i) {
                if cache.is_cached(n, i) {
                    used.cached[n][i] = true;
                }
            }
        }
    }
    used
}

/// Marks, per multiplier slot, whether `y` fetches the item from that SBS.
fn route_usage(inst: &Instance, lambda: &Multipliers, y: &GopRouting, out: &mut Vec<f64>) {
    out.clear();
    out.resize(lambda.values().len(), 0.0);
    let items = lambda.items();
    for (p, &(n, u)) in lambda.pairs().iter().enumerate() {
        for i in 0..inst.len() {
            if y.get(u, i) == Source::Sbs(n) {
                out[p * items + i] = 1.0;
            }
        }
    }
}

/// Caches, per SBS, the items whose (possibly fractional) use by the
/// routing is worth most, valuing each use at the item's gain.
fn usage_cache(
    inst: &Instance,
    lambda: &Multipliers,
    usage: &[f64],
    capacity_kbit: &[u64],
    knapsack: &mut KnapsackSolver<f64>,
) -> GopCache {
    let items = lambda.items();
    let mut cache = GopCache::empty(inst.sbs(), inst.len());
    let mut profit = vec![0.0; items];
    let mut list = Vec::new();
    for n in 0..inst.sbs() {
        profit.iter_mut().for_each(|p| *p = 0.0);
        for &p in lambda.pairs_of_sbs(n) {
            for (acc, &f) in profit.iter_mut().zip(&usage[p * items..(p + 1) * items]) {
                *acc += f;
            }
        }
        list.clear();
        list.extend(
            profit
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(i, &p)| Item {
                    id: i,
                    weight: inst.items[i].size_kbit,
                    profit: p * inst.unit_gain(i),
                }),
        );
        for i in knapsack.solve(&list, capacity_kbit[n]).ids {
            cache.cached[n][i] = true;
        }
    }
    cache
}

/// Runs the subgradient method on one GoP with per-SBS capacities in kbit
/// and per-(user, video) delay budgets (`budgets[u * videos + v]`).
pub fn solve_subproblem(
    inst: &Instance,
    gop: usize,
    capacity_kbit: &[u64],
    budgets: &[f64],
    params: &SolverParams,
) -> Result<SubproblemSolution> {
    solve_subproblem_from(inst, gop, capacity_kbit, budgets, params, None)
}

/// [`solve_subproblem`] starting from inherited multipliers, with the
/// inherited routing's favourite items as the first primal candidate.
pub fn solve_subproblem_from(
    inst: &Instance,
    gop: usize,
    capacity_kbit: &[u64],
    budgets: &[f64],
    params: &SolverParams,
    warm: Option<WarmStart<'_>>,
) -> Result<SubproblemSolution> {
    params.validate()?;
    if capacity_kbit.len() != inst.sbs() || budgets.len() != inst.users() * inst.videos {
        return Err(Error::Invalid("budget vectors do not match the instance".into()));
    }
    let lambda = match warm {
        Some(w) if w.lambda.fits(inst) => w.lambda.clone(),
        Some(_) => return Err(Error::Invalid("inherited multipliers do not match the instance".into())),
        None => Multipliers::new(inst, params.lambda0, params.lambda_init),
    };
    let mut state = DualState {
        best_lambda: lambda.clone(),
        lambda,
        tau: 0,
        ub: f64::INFINITY,
        lb: f64::NEG_INFINITY,
        best_primal: (
            GopCache::empty(inst.sbs(), inst.len()),
            GopRouting::empty(inst.users(), inst.len()),
        ),
        trace: Vec::new(),
    };
    let mut knapsack = KnapsackSolver::new();
    let mut router = RoutingSolver::new();
    let mut repairer = Repairer::new();
    let mut phi = Vec::new();
    let mut converged = false;
    let mut w = if warm.is_some() { params.warm_w } else { params.w };
    let mut stall = 0usize;
    let mut usage = Vec::new();
    let mut halved = false;
    let mut polished = false;

    if let Some(start) = warm {
        route_usage(inst, &state.lambda, start.routing, &mut usage);
        let candidate = usage_cache(inst, &state.lambda, &usage, capacity_kbit, &mut knapsack);
        let (repaired, value) = repairer.repair(inst, &candidate, budgets, &mut router)?;
        state.lb = value;
        state.best_primal = (prune_unused(inst, &candidate, &repaired), repaired);
    }

    while state.tau < params.tau_max {
        state.tau += 1;
        let (x, cache_value) = solve_caching_component(inst, &state.lambda, capacity_kbit, &mut knapsack);
        let (y, route_value) = solve_routing_component(
            inst,
            Gains::Lagrangian(&state.lambda),
            Sources::Covered,
            budgets,
            &mut router,
        )?;
        let dual = cache_value + route_value;
        let progress = dual < state.ub - STALL_TOLERANCE * state.ub.abs();
        if dual < state.ub {
            state.ub = dual;
            state.best_lambda.clone_from(&state.lambda);
        }
        if progress {
            stall = 0;
        } else {
            stall += 1;
            if params.stall_limit > 0 && stall >= params.stall_limit {
                w /= 2.0;
                stall = 0;
                halved = true;
            }
        }

        route_usage(inst, &state.lambda, &y, &mut usage);
        let candidates = [
            x.clone(),
            usage_cache(inst, &state.lambda, &usage, capacity_kbit, &mut knapsack),
        ];
        for candidate in candidates {
            let (repaired, value) = repairer.repair(inst, &candidate, budgets, &mut router)?;
            if value > state.lb {
                state.lb = value;
                state.best_primal = (prune_unused(inst, &candidate, &repaired), repaired);
                polished = false;
            }
        }
        if halved && !polished {
            polish_best(&mut state, inst, capacity_kbit, budgets, params, &mut repairer, &mut router)?;
            polished = true;
        }
        let stalled = halved && w < params.w_floor;
        halved = false;

        let gap = duality_gap(state.ub, state.lb);
        let mut row = TraceRow {
            tau: state.tau,
            ub: state.ub,
            lb: state.lb,
            gap,
            sigma: 0.0,
        };
        if gap < params.epsilon {
            converged = true;
            state.trace.push(row);
            break;
        }
        if stalled {
            state.trace.push(row);
            break;
        }
        subgradient(inst, &state.lambda, &x, &y, params.subgradient, &mut phi);
        let norm_sq: f64 = phi.iter().map(|p| p * p).sum();
        match step_size(dual, state.lb, norm_sq, w) {
            Some(sigma) => {
                row.sigma = sigma;
                state.trace.push(row);
                update_multipliers(state.lambda.values_mut(), sigma, &phi);
            }
            None => {
                // y = αx: the relaxed optimum is feasible
                state.trace.push(row);
                converged = true;
                break;
            }
        }
        log::trace!("gop {gop} tau {} ub {:.6e} lb {:.6e} gap {:.4}", state.tau, state.ub, state.lb, gap);
    }

    if !converged && !polished {
        polish_best(&mut state, inst, capacity_kbit, budgets, params, &mut repairer, &mut router)?;
    }
    canonicalize_best(&mut state, inst, budgets, &mut repairer, &mut router)?;
    let gap = duality_gap(state.ub, state.lb);
    converged |= gap < params.epsilon;
    let (cache, routing) = state.best_primal;
    let report = GopReport {
        gop,
        iterations: state.tau,
        ub: state.ub,
        lb: state.lb,
        gap,
        converged,
        capacity_kbit: capacity_kbit.to_vec(),
        trace: state.trace,
    };
    log::debug!(
        "gop {gop}: {} iterations, gap {:.4}, lb {:.6e}",
        report.iterations,
        report.gap,
        report.lb
    );
    Ok(SubproblemSolution {
        cache,
        routing,
        report,
        lambda: state.best_lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn step_size_examples() {
        assert_relative_eq!(step_size(10.0, 8.0, 4.0, 0.02).unwrap(), 0.01);
        assert_eq!(step_size(5.0, 5.0, 3.0, 1.0), Some(0.0));
        assert_eq!(step_size(2.0, 1.0, 1.0, 2.0), Some(2.0));
        assert_eq!(step_size(2.0, 1.0, 0.0, 2.0), None);
        assert_eq!(step_size(2.0f32, 1.0, 1.0, 2.0), Some(2.0f32));
    }

    #[test]
    fn update_examples() {
        let mut l = [0.2, 0.5, 0.7];
        update_multipliers(&mut l, 0.1, &[3.0, -1.0, 0.0]);
        assert_eq!(l[0], 0.0);
        assert_relative_eq!(l[1], 0.6);
        assert_eq!(l[2], 0.7);
        let mut l = [0.3f64];
        update_multipliers(&mut l, 0.0, &[5.0]);
        assert_eq!(l[0], 0.3);
    }

    #[test]
    fn gap_falls_back_to_absolute() {
        assert_relative_eq!(duality_gap(1.1, 1.0), 0.1, epsilon = 1e-12);
        assert_relative_eq!(duality_gap(0.005, 0.0), 0.005);
    }

    #[test]
    fn params_validation() {
        assert!(SolverParams::default().validate().is_ok());
        for bad in [
            SolverParams { w: 0.0, ..Default::default() },
            SolverParams { w: 2.5, ..Default::default() },
            SolverParams { epsilon: 0.0, ..Default::default() },
            SolverParams { tau_max: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert_eq!("weighted".parse::<SubgradientRule>().unwrap(), SubgradientRule::Weighted);
    }
}
