//! Exhaustive reference solvers for tiny instances. Size limits are checked
//! up front and reported as errors; nothing is ever truncated.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::knapsack::{Item, Selection};
use crate::lagrangian::prune_unused;
use crate::model::Source;
use crate::policy::{GopCache, GopRouting};
use crate::routing::{apply_solution, build_bundle, with_slack, Bundle, BundleSolution, Gains, Sources};
use crate::scalar::Real;

pub const MAX_KNAPSACK_ITEMS: usize = 20;
/// Tile chains (or root plus chains) per routing bundle.
pub const MAX_ROUTING_DECISIONS: usize = 12;
pub const MAX_CACHE_SLOTS: usize = 16;

/// Best subset by enumerating all `2^n` of them; the first optimum in
/// binary counting order wins.
pub fn brute_force_knapsack<S: Real>(items: &[Item<S>], capacity: u64) -> Result<Selection<S>> {
    if items.len() > MAX_KNAPSACK_ITEMS {
        return Err(Error::OracleBound(format!(
            "{} knapsack items, limit {MAX_KNAPSACK_ITEMS}",
            items.len()
        )));
    }
    let mut best = (S::zero(), 0u64, 0u32);
    for mask in 0u32..(1u32 << items.len()) {
        let mut w = 0u64;
        let mut p = S::zero();
        for (k, it) in items.iter().enumerate() {
            if mask >> k & 1 == 1 {
                w += it.weight;
                p = p + it.profit;
            }
        }
        if w <= capacity && p > best.0 {
            best = (p, w, mask);
        }
    }
    let ids = (0..items.len())
        .filter(|k| best.2 >> k & 1 == 1)
        .map(|k| items[k].id)
        .collect();
    Ok(Selection {
        ids,
        profit: best.0,
        weight: best.1,
    })
}

#[derive(Clone, Copy)]
struct State<S> {
    delay: S,
    gain: S,
    bits: S,
    prev: usize,
    choice: usize,
}

/// Every prefix/source combination of one chain, including "nothing".
fn chain_combinations<S: Real>(bundle: &Bundle<S>, chain: std::ops::Range<usize>) -> Vec<(S, S, S, Vec<usize>)> {
    let mut out = vec![(S::zero(), S::zero(), S::zero(), Vec::new())];
    let mut frontier = vec![(S::zero(), S::zero(), S::zero(), Vec::new())];
    for item in chain {
        let mut next = Vec::new();
        for (d, g, b, picks) in &frontier {
            for (k, c) in bundle.options(item).iter().enumerate() {
                let mut p = picks.clone();
                p.push(k);
                next.push((*d + c.delay, *g + c.gain, *b + c.bits, p));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Exact optimum of a routing bundle: all per-chain combinations, merged
/// chain by chain keeping every non-dominated (delay, gain) state.
pub fn brute_force_routing<S: Real>(bundle: &Bundle<S>, budget: S) -> Result<BundleSolution<S>> {
    let decisions = bundle.chains().count() + usize::from(bundle.has_root());
    if decisions > MAX_ROUTING_DECISIONS {
        return Err(Error::OracleBound(format!(
            "{decisions} routing decisions, limit {MAX_ROUTING_DECISIONS}"
        )));
    }
    if budget < S::zero() {
        return Err(Error::Invalid("routing budget must be >= 0".into()));
    }
    let budget = with_slack(budget);
    let chains: Vec<_> = bundle.chains().collect();
    let combos: Vec<_> = chains.iter().map(|c| chain_combinations(bundle, c.clone())).collect();
    let tol = S::epsilon() * S::lit(1024.0);

    let roots: Vec<Option<usize>> = if bundle.has_root() {
        std::iter::once(None)
            .chain((0..bundle.options(0).len()).map(Some))
            .collect()
    } else {
        vec![None]
    };

    let mut best: Option<(S, S, Vec<Option<usize>>)> = None;
    for root in roots {
        let mut picks = vec![None; bundle.item_count()];
        let start = match root {
            Some(k) => {
                picks[0] = Some(k);
                let c = bundle.options(0)[k];
                (c.delay, c.gain, c.bits)
            }
            None => (S::zero(), S::zero(), S::zero()),
        };
        if start.0 > budget {
            continue;
        }
        let gated = bundle.has_root() && root.is_none();
        let mut layers: Vec<Vec<State<S>>> = vec![vec![State {
            delay: start.0,
            gain: start.1,
            bits: start.2,
            prev: 0,
            choice: 0,
        }]];
        for combo in &combos {
            let prev = layers.last().unwrap();
            let mut next = Vec::new();
            for (si, s) in prev.iter().enumerate() {
                for (ci, c) in combo.iter().enumerate() {
                    if gated && ci > 0 {
                        break;
                    }
                    let d = s.delay + c.0;
                    if d > budget {
                        continue;
                    }
                    next.push(State {
                        delay: d,
                        gain: s.gain + c.1,
                        bits: s.bits + c.2,
                        prev: si,
                        choice: ci,
                    });
                }
            }
            // keep states no other state beats on both delay and gain
            next.sort_by(|a, b| {
                a.delay
                    .partial_cmp(&b.delay)
                    .unwrap()
                    .then(b.gain.partial_cmp(&a.gain).unwrap())
                    .then(a.bits.partial_cmp(&b.bits).unwrap())
            });
            let mut kept: Vec<State<S>> = Vec::new();
            for s in next {
                match kept.last() {
                    Some(last) if s.gain <= last.gain => {}
                    _ => kept.push(s),
                }
            }
            layers.push(kept);
        }
        let last = layers.last().unwrap();
        let Some((idx, top)) = last
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.gain.partial_cmp(&b.1.gain).unwrap().then(b.0.cmp(&a.0)))
        else {
            continue;
        };
        let mut at = idx;
        for (k, chain) in chains.iter().enumerate().rev() {
            let s = layers[k + 1][at];
            for (d, &o) in combos[k][s.choice].3.iter().enumerate() {
                picks[chain.start + d] = Some(o);
            }
            at = s.prev;
        }
        let better = match &best {
            None => true,
            Some((g, b, _)) => top.gain > *g + tol || (top.gain >= *g - tol && top.bits < *b),
        };
        if better {
            best = Some((top.gain, top.bits, picks));
        }
    }
    let picks = best.map_or_else(|| vec![None; bundle.item_count()], |b| b.2);
    // the empty assignment is always feasible
    let (gain, delay, bits) = bundle.evaluate(&picks);
    if gain < S::zero() {
        return Ok(BundleSolution {
            picks: vec![None; bundle.item_count()],
            gain: S::zero(),
            delay: S::zero(),
            bits: S::zero(),
        });
    }
    Ok(BundleSolution {
        picks,
        gain,
        delay,
        bits,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointOptimum {
    pub cache: GopCache,
    pub routing: GopRouting,
    /// Objective `Σ z δ α y / Δ` of the GoP.
    pub value: f64,
    /// Cache placements enumerated (feasible ones).
    pub placements: u64,
}

/// Exact optimum of one GoP subproblem: every capacity-feasible cache
/// placement, each routed exactly. Only slots an SBS could ever serve from
/// (a covered user requests the item) are enumerated; other slots never
/// help. Ties keep the first placement in enumeration order, and the
/// returned caches hold only items actually served.
pub fn brute_force_joint(inst: &Instance, capacity_kbit: &[u64], budgets: &[f64]) -> Result<JointOptimum> {
    if capacity_kbit.len() != inst.sbs() || budgets.len() != inst.users() * inst.videos {
        return Err(Error::Invalid("budget vectors do not match the instance".into()));
    }
    let slots: Vec<(usize, usize)> = (0..inst.sbs())
        .flat_map(|n| (0..inst.len()).map(move |i| (n, i)))
        .filter(|&(n, i)| {
            inst.unit_gain(i) > 0.0
                && inst.association.users_of(n).next().is_some()
                && inst.items[i].size_kbit <= capacity_kbit[n]
        })
        .collect();
    if slots.len() > MAX_CACHE_SLOTS {
        return Err(Error::OracleBound(format!(
            "{} cacheable item-slots, limit {MAX_CACHE_SLOTS}",
            slots.len()
        )));
    }
    for v in 0..inst.videos {
        let layout = &inst.layout[v];
        let decisions = layout.chains.len() + usize::from(layout.root.is_some());
        if decisions > MAX_ROUTING_DECISIONS {
            return Err(Error::OracleBound(format!(
                "video {v} has {decisions} routing decisions, limit {MAX_ROUTING_DECISIONS}"
            )));
        }
    }

    let mut bundle = Bundle::new();
    let mut memo: HashMap<Vec<u64>, BundleSolution<f64>> = HashMap::new();
    let mut best: Option<(f64, u32)> = None;
    let mut placements = 0u64;
    for mask in 0u32..(1u32 << slots.len()) {
        let mut used = vec![0u64; inst.sbs()];
        for (k, &(n, i)) in slots.iter().enumerate() {
            if mask >> k & 1 == 1 {
                used[n] += inst.items[i].size_kbit;
            }
        }
        if used.iter().zip(capacity_kbit).any(|(u, c)| u > c) {
            continue;
        }
        placements += 1;
        let cache = placement(inst, &slots, mask);
        let mut value = 0.0;
        for u in 0..inst.users() {
            for v in 0..inst.videos {
                let budget = budgets[u * inst.videos + v];
                build_bundle(inst, u, v, Gains::Objective, Sources::Cached(&cache), &mut bundle);
                let key = routing_key(&bundle, v, budget);
                let sol = match memo.get(&key) {
                    Some(s) => s.clone(),
                    None => {
                        let s = brute_force_routing(&bundle, budget)?;
                        memo.insert(key, s.clone());
                        s
                    }
                };
                value += sol.gain;
            }
        }
        let tol = 1e-12 * (1.0 + value.abs());
        if best.is_none_or(|(b, _)| value > b + tol) {
            best = Some((value, mask));
        }
    }
    let (_, mask) = best.unwrap_or((0.0, 0));
    let cache = placement(inst, &slots, mask);
    let mut routing = GopRouting::empty(inst.users(), inst.len());
    let mut value = 0.0;
    for u in 0..inst.users() {
        for v in 0..inst.videos {
            let budget = budgets[u * inst.videos + v];
            build_bundle(inst, u, v, Gains::Objective, Sources::Cached(&cache), &mut bundle);
            let sol = brute_force_routing(&bundle, budget)?;
            apply_solution(&bundle, &sol, inst, u, v, &mut routing);
            value += sol.gain;
        }
    }
    Ok(JointOptimum {
        cache: prune_unused(inst, &cache, &routing),
        routing,
        value,
        placements,
    })
}

fn placement(inst: &Instance, slots: &[(usize, usize)], mask: u32) -> GopCache {
    let mut cache = GopCache::empty(inst.sbs(), inst.len());
    for (k, &(n, i)) in slots.iter().enumerate() {
        if mask >> k & 1 == 1 {
            cache.cached[n][i] = true;
        }
    }
    cache
}

fn routing_key(bundle: &Bundle<f64>, v: usize, budget: f64) -> Vec<u64> {
    let mut key = vec![v as u64, budget.to_bits()];
    for item in 0..bundle.item_count() {
        key.push(u64::MAX);
        for c in bundle.options(item) {
            key.push(match c.source {
                Source::Sbs(n) => n as u64,
                _ => u64::MAX - 1,
            });
            key.push(c.delay.to_bits());
            key.push(c.gain.to_bits());
        }
    }
    key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Source;
    use crate::routing::Choice;

    #[test]
    fn empty_knapsack() {
        let sel = brute_force_knapsack::<f64>(&[], 10).unwrap();
        assert!(sel.ids.is_empty());
        assert_eq!(sel.profit, 0.0);
    }

    #[test]
    fn knapsack_size_bound_is_enforced() {
        let items: Vec<Item<f64>> = (0..21).map(|id| Item { id, weight: 1, profit: 1.0 }).collect();
        assert!(matches!(brute_force_knapsack(&items, 5), Err(Error::OracleBound(_))));
    }

    #[test]
    fn routing_size_bound_is_enforced() {
        let mut b: Bundle<f64> = Bundle::new();
        for _ in 0..13 {
            b.begin_chain();
            b.push_item([Choice {
                source: Source::Mbs,
                gain: 1.0,
                delay: 0.1,
                bits: 0.1,
            }]);
        }
        assert!(matches!(brute_force_routing(&b, 1.0), Err(Error::OracleBound(_))));
    }

    #[test]
    fn knapsack_permutation_invariant() {
        let items = vec![
            Item { id: 0, weight: 3, profit: 4.0 },
            Item { id: 1, weight: 2, profit: 3.0 },
            Item { id: 2, weight: 4, profit: 5.0 },
            Item { id: 3, weight: 1, profit: 1.5 },
        ];
        let a = brute_force_knapsack(&items, 6).unwrap();
        let mut rev = items.clone();
        rev.reverse();
        let b = brute_force_knapsack(&rev, 6).unwrap();
        assert_eq!(a.profit, b.profit);
    }
}
