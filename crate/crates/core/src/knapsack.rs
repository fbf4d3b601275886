//! Exact 0-1 knapsack by dynamic programming, and the caching component:
//! one knapsack per SBS whose profits are the summed multipliers of the
//! users it covers.

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::lagrangian::Multipliers;
use crate::policy::GopCache;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Item<S> {
    pub id: usize,
    /// Integer weight units (kilobits for cache items).
    pub weight: u64,
    pub profit: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection<S> {
    /// Selected ids in input order.
    pub ids: Vec<usize>,
    pub profit: S,
    pub weight: u64,
}

impl<S: Real> Selection<S> {
    fn empty() -> Self {
        Selection {
            ids: Vec::new(),
            profit: S::zero(),
            weight: 0,
        }
    }
}

/// Reusable DP buffers.
#[derive(Debug, Default)]
pub struct KnapsackSolver<S> {
    best: Vec<S>,
    next: Vec<S>,
    keep: Vec<u8>,
    eligible: Vec<usize>,
}

impl<S: Real> KnapsackSolver<S> {
    pub fn new() -> Self {
        KnapsackSolver {
            best: Vec::new(),
            next: Vec::new(),
            keep: Vec::new(),
            eligible: Vec::new(),
        }
    }

    /// Profit-maximal subset with total weight at most `capacity`.
    ///
    /// An item is only taken when it strictly improves the table, and the
    /// backtrack walks items from last to first, so among optimal subsets the
    /// one returned avoids later items and zero-profit items.
    pub fn solve(&mut self, items: &[Item<S>], capacity: u64) -> Selection<S> {
        self.eligible.clear();
        let mut total_weight = 0u64;
        for (k, it) in items.iter().enumerate() {
            if it.profit > S::zero() && it.weight <= capacity {
                self.eligible.push(k);
                total_weight = total_weight.saturating_add(it.weight);
            }
        }
        if self.eligible.is_empty() {
            return Selection::empty();
        }
        // a common divisor of all weights shrinks the table without changing the optimum
        let unit = self
            .eligible
            .iter()
            .fold(0u64, |g, &k| gcd(g, items[k].weight))
            .max(1);
        let cap = (capacity.min(total_weight) / unit) as usize;
        let width = cap + 1;
        self.best.clear();
        self.best.resize(width, S::zero());
        self.next.clear();
        self.next.resize(width, S::zero());
        self.keep.clear();
        self.keep.resize(width * self.eligible.len(), 0);

        for (row, &k) in self.eligible.iter().enumerate() {
            let w = (items[k].weight / unit) as usize;
            let p = items[k].profit;
            let keep = &mut self.keep[row * width..(row + 1) * width];
            let (old, new) = (&self.best, &mut self.next);
            new[..w].copy_from_slice(&old[..w]);
            // two buffers keep the row update free of loop-carried dependencies
            for (((n, kp), &o), &from) in new[w..]
                .iter_mut()
                .zip(&mut keep[w..])
                .zip(&old[w..])
                .zip(&old[..width - w])
            {
                let cand = from + p;
                let take = cand > o;
                *n = if take { cand } else { o };
                *kp = take as u8;
            }
            std::mem::swap(&mut self.best, &mut self.next);
        }

        let mut c = cap;
        let mut ids = Vec::new();
        let mut weight = 0u64;
        let mut profit = S::zero();
        for (row, &k) in self.eligible.iter().enumerate().rev() {
            if self.keep[row * width + c] == 1 {
                ids.push(items[k].id);
                weight += items[k].weight;
                profit = profit + items[k].profit;
                c -= (items[k].weight / unit) as usize;
            }
        }
        ids.reverse();
        Selection { ids, profit, weight }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Convenience wrapper around [`KnapsackSolver::solve`].
pub fn solve_01_knapsack<S: Real>(items: &[Item<S>], capacity: u64) -> Selection<S> {
    KnapsackSolver::new().solve(items, capacity)
}

/// Caching profit of each item at SBS `n`: `Σ_u λ^{nu} α_nu`.
pub fn caching_profits(lambda: &Multipliers, n: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(lambda.items(), 0.0);
    for &p in lambda.pairs_of_sbs(n) {
        for (acc, &l) in out.iter_mut().zip(lambda.row(p)) {
            *acc += l;
        }
    }
}

/// Solves the caching component: an independent knapsack per SBS with
/// capacity `capacity_kbit[n]`. Zero-profit items are never cached.
pub fn solve_caching_component(
    inst: &Instance,
    lambda: &Multipliers,
    capacity_kbit: &[u64],
    solver: &mut KnapsackSolver<f64>,
) -> (GopCache, f64) {
    let mut cache = GopCache::empty(inst.sbs(), inst.len());
    let mut profits = Vec::new();
    let mut items = Vec::with_capacity(inst.len());
    let mut total = 0.0;
    for n in 0..inst.sbs() {
        caching_profits(lambda, n, &mut profits);
        items.clear();
        items.extend(
            profits
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(i, &p)| Item {
                    id: i,
                    weight: inst.items[i].size_kbit,
                    profit: p,
                }),
        );
        let sel = solver.solve(&items, capacity_kbit[n]);
        for &i in &sel.ids {
            cache.cached[n][i] = true;
        }
        total += sel.profit;
    }
    (cache, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force_knapsack;
    use proptest::prelude::*;

    fn items(spec: &[(u64, f64)]) -> Vec<Item<f64>> {
        spec.iter()
            .enumerate()
            .map(|(k, &(weight, profit))| Item {
                id: k + 1,
                weight,
                profit,
            })
            .collect()
    }

    #[test]
    fn zero_capacity_is_empty() {
        let sel = solve_01_knapsack(&items(&[(1, 5.0), (2, 3.0)]), 0);
        assert!(sel.ids.is_empty());
        assert_eq!(sel.profit, 0.0);
    }

    #[test]
    fn three_item_example() {
        // brute force over the 8 subsets: {1,2} weighs 5 and earns 7
        let its = items(&[(2, 3.0), (3, 4.0), (4, 5.0)]);
        let sel = solve_01_knapsack(&its, 5);
        assert_eq!(sel.ids, vec![1, 2]);
        assert_eq!(sel.profit, 7.0);
        assert_eq!(sel.weight, 5);
        assert_eq!(brute_force_knapsack(&its, 5).unwrap().profit, 7.0);
    }

    #[test]
    fn everything_fits() {
        let its = items(&[(2, 1.0), (3, 2.0), (1, 0.5)]);
        let sel = solve_01_knapsack(&its, 6);
        assert_eq!(sel.ids, vec![1, 2, 3]);
    }

    #[test]
    fn zero_profit_never_taken() {
        let its = items(&[(1, 0.0), (1, 2.0)]);
        let sel = solve_01_knapsack(&its, 10);
        assert_eq!(sel.ids, vec![2]);
    }

    #[test]
    fn ties_prefer_earlier_items() {
        let its = items(&[(1, 1.0), (1, 1.0), (1, 1.0)]);
        let sel = solve_01_knapsack(&its, 2);
        assert_eq!(sel.ids, vec![1, 2]);
    }

    #[test]
    fn works_in_single_precision() {
        let its: Vec<Item<f32>> = [(2u64, 3.0f32), (3, 4.0), (4, 5.0)]
            .iter()
            .enumerate()
            .map(|(k, &(weight, profit))| Item { id: k, weight, profit })
            .collect();
        let sel = solve_01_knapsack(&its, 5);
        assert_eq!(sel.ids, vec![0, 1]);
        assert_eq!(sel.profit, 7.0f32);
    }

    fn arb_items() -> impl Strategy<Value = (Vec<(u64, f64)>, u64)> {
        (
            prop::collection::vec((0u64..40, 0.0f64..10.0), 0..14),
            0u64..120,
        )
    }

    proptest! {
        #[test]
        fn matches_enumeration((spec, cap) in arb_items()) {
            let its = items(&spec);
            let dp = solve_01_knapsack(&its, cap);
            let bf = brute_force_knapsack(&its, cap).unwrap();
            prop_assert!((dp.profit - bf.profit).abs() <= 1e-9);
            prop_assert!(dp.weight <= cap);
        }

        #[test]
        fn profit_monotone_in_capacity((spec, cap) in arb_items()) {
            let its = items(&spec);
            let a = solve_01_knapsack(&its, cap).profit;
            let b = solve_01_knapsack(&its, cap + 7).profit;
            prop_assert!(b >= a - 1e-12);
        }
    }
}
