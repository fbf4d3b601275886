//! Routing component. Each (user, video) pair is an independent
//! multiple-choice knapsack: every tile chain picks a delivered depth and a
//! source per delivered layer, and the whole bundle shares one delay budget.
//!
//! [`RoutingSolver`] solves a [`Bundle`] exactly by depth-first branch and
//! bound over chain options, pruning with the linear relaxation of the
//! multiple-choice knapsack. [`solve_quantized`] is an independent dynamic
//! program over a delay grid used to cross-check it.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lagrangian::Multipliers;
use crate::model::Source;
use crate::policy::{GopCache, GopRouting};
use crate::scalar::Real;

/// One way of delivering one item.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Choice<S> {
    pub source: Source,
    pub gain: S,
    pub delay: S,
    /// Delivered size, used only to break ties.
    pub bits: S,
}

/// A (user, video) routing problem: an optional shared root item followed by
/// chains of items, each item usable only after its predecessor (or the root,
/// for chain heads) is delivered.
#[derive(Clone, Debug, Default)]
pub struct Bundle<S> {
    options: Vec<Choice<S>>,
    items: Vec<Range<usize>>,
    chains: Vec<Range<usize>>,
    has_root: bool,
}

impl<S: Real> Bundle<S> {
    pub fn new() -> Self {
        Bundle {
            options: Vec::new(),
            items: Vec::new(),
            chains: Vec::new(),
            has_root: false,
        }
    }

    pub fn clear(&mut self) {
        self.options.clear();
        self.items.clear();
        self.chains.clear();
        self.has_root = false;
    }

    /// Adds the root item. Must precede every chain.
    pub fn set_root(&mut self, options: impl IntoIterator<Item = Choice<S>>) {
        assert!(self.items.is_empty(), "root must be the first item");
        self.push_options(options);
        self.has_root = true;
    }

    pub fn begin_chain(&mut self) {
        let at = self.items.len();
        self.chains.push(at..at);
    }

    /// Appends an item to the current chain and returns its index.
    pub fn push_item(&mut self, options: impl IntoIterator<Item = Choice<S>>) -> usize {
        let idx = self.push_options(options);
        self.chains
            .last_mut()
            .expect("begin_chain before push_item")
            .end = idx + 1;
        idx
    }

    fn push_options(&mut self, options: impl IntoIterator<Item = Choice<S>>) -> usize {
        let start = self.options.len();
        self.options.extend(options);
        self.items.push(start..self.options.len());
        self.items.len() - 1
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn has_root(&self) -> bool {
        self.has_root
    }

    pub fn options(&self, item: usize) -> &[Choice<S>] {
        &self.options[self.items[item].clone()]
    }

    pub fn chains(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.chains.iter().cloned()
    }

    /// Predecessor of an item, if it has one.
    pub fn parent(&self, item: usize) -> Option<usize> {
        for ch in &self.chains {
            if ch.contains(&item) {
                return if item > ch.start {
                    Some(item - 1)
                } else if self.has_root {
                    Some(0)
                } else {
                    None
                };
            }
        }
        None
    }

    /// Objective, delay and bits of an assignment (one pick per item).
    pub fn evaluate(&self, picks: &[Option<usize>]) -> (S, S, S) {
        let mut acc = (S::zero(), S::zero(), S::zero());
        for (item, p) in picks.iter().enumerate() {
            if let Some(k) = p {
                let c = self.options(item)[*k];
                acc = (acc.0 + c.gain, acc.1 + c.delay, acc.2 + c.bits);
            }
        }
        acc
    }

    /// Whether an assignment respects prefixes and the budget.
    pub fn is_feasible(&self, picks: &[Option<usize>], budget: S) -> bool {
        if picks.len() != self.item_count() {
            return false;
        }
        for item in 0..picks.len() {
            if let Some(k) = picks[item] {
                if k >= self.options(item).len() {
                    return false;
                }
                if let Some(p) = self.parent(item) {
                    if picks[p].is_none() {
                        return false;
                    }
                }
            }
        }
        let (_, delay, _) = self.evaluate(picks);
        delay <= with_slack(budget)
    }
}

/// The budget widened by a few ulps, so that delays summing to it exactly in
/// real arithmetic are not rejected over rounding.
pub fn with_slack<S: Real>(budget: S) -> S {
    budget * (S::one() + S::epsilon() * S::lit(16.0)) + S::epsilon()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BundleSolution<S> {
    /// Option index per item, `None` when not delivered.
    pub picks: Vec<Option<usize>>,
    pub gain: S,
    pub delay: S,
    pub bits: S,
}

impl<S: Real> BundleSolution<S> {
    fn nothing(items: usize) -> Self {
        BundleSolution {
            picks: vec![None; items],
            gain: S::zero(),
            delay: S::zero(),
            bits: S::zero(),
        }
    }
}

/// Aggregated option of a whole chain: a delivered depth plus one source
/// per delivered item.
#[derive(Clone, Copy, Debug)]
struct GroupOption<S> {
    gain: S,
    delay: S,
    bits: S,
    /// Offset of this option's picks in the pick arena.
    picks: usize,
    depth: usize,
}

#[derive(Clone, Copy, Debug)]
struct Increment<S> {
    delay: S,
    gain: S,
    group: usize,
    /// Option reached by taking this increment.
    to: usize,
}

/// Branch-and-bound solver with reusable scratch space.
#[derive(Debug, Default)]
pub struct RoutingSolver<S> {
    item_opts: Vec<Vec<usize>>,
    raw: Vec<GroupOption<S>>,
    raw_picks: Vec<usize>,
    group_opts: Vec<Vec<GroupOption<S>>>,
    order: Vec<usize>,
    twin: Vec<bool>,
    closed: Vec<bool>,
    greedy: Vec<Option<usize>>,
    seen: Vec<Vec<(S, S, S)>>,
    increments: Vec<Increment<S>>,
    suffix: Vec<Increment<S>>,
    suffix_start: Vec<usize>,
    current: Vec<Option<usize>>,
    best: Vec<Option<usize>>,
    best_gain: S,
    best_bits: S,
    tol: S,
    nodes: u64,
}

impl<S: Real> RoutingSolver<S> {
    pub fn new() -> Self {
        RoutingSolver {
            item_opts: Vec::new(),
            raw: Vec::new(),
            raw_picks: Vec::new(),
            group_opts: Vec::new(),
            order: Vec::new(),
            twin: Vec::new(),
            closed: Vec::new(),
            greedy: Vec::new(),
            seen: Vec::new(),
            increments: Vec::new(),
            suffix: Vec::new(),
            suffix_start: Vec::new(),
            current: Vec::new(),
            best: Vec::new(),
            best_gain: S::zero(),
            best_bits: S::zero(),
            tol: S::zero(),
            nodes: 0,
        }
    }

    /// Search nodes visited by the last solve.
    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    /// Maximizes the bundle objective within `budget`.
    ///
    /// Ties (within floating tolerance) go to the solution with fewer
    /// delivered bits, then to the one found first, which prefers lower
    /// source indices.
    pub fn solve(&mut self, bundle: &Bundle<S>, budget: S) -> Result<BundleSolution<S>> {
        if budget < S::zero() || budget.is_nan() {
            return Err(Error::Invalid("routing budget must be >= 0".into()));
        }
        let budget = with_slack(budget);
        self.nodes = 0;
        self.filter_items(bundle, budget);
        self.build_groups(bundle, budget);

        let mut out = BundleSolution::nothing(bundle.item_count());
        if !bundle.has_root() {
            self.search(budget);
            self.write_picks(bundle, &mut out.picks);
        } else {
            // root not delivered: nothing downstream is usable
            let mut best: Option<(S, S, Vec<Option<usize>>)> = None;
            let root_opts = self.item_opts[0].clone();
            for &k in &root_opts {
                let root = bundle.options(0)[k];
                if root.delay > budget {
                    continue;
                }
                self.search(budget - root.delay);
                let gain = root.gain + self.best_gain;
                let bits = root.bits + self.best_bits;
                let improves = match &best {
                    None => gain > self.tol || (gain >= -self.tol && bits < S::zero()),
                    Some((bg, bb, _)) => {
                        gain > *bg + self.tol || (gain >= *bg - self.tol && bits < *bb)
                    }
                };
                if improves {
                    let mut picks = vec![None; bundle.item_count()];
                    picks[0] = Some(k);
                    self.write_picks(bundle, &mut picks);
                    best = Some((gain, bits, picks));
                }
            }
            if let Some((_, _, picks)) = best {
                out.picks = picks;
            }
        }
        let (gain, delay, bits) = bundle.evaluate(&out.picks);
        out.gain = gain;
        out.delay = delay;
        out.bits = bits;
        Ok(out)
    }

    /// Pareto-filters the options of every item: ascending delay with
    /// strictly increasing gain, dropping anything over budget.
    fn filter_items(&mut self, bundle: &Bundle<S>, budget: S) {
        let n = bundle.item_count();
        if self.item_opts.len() < n {
            self.item_opts.resize_with(n, Vec::new);
        }
        for item in 0..n {
            let opts = bundle.options(item);
            let list = &mut self.item_opts[item];
            list.clear();
            list.extend((0..opts.len()).filter(|&k| opts[k].delay <= budget));
            list.sort_by(|&a, &b| {
                let (x, y) = (&opts[a], &opts[b]);
                x.delay
                    .partial_cmp(&y.delay)
                    .unwrap()
                    .then(y.gain.partial_cmp(&x.gain).unwrap())
                    .then(x.bits.partial_cmp(&y.bits).unwrap())
                    .then(a.cmp(&b))
            });
            let mut last = S::neg_infinity();
            list.retain(|&k| {
                if opts[k].gain > last {
                    last = opts[k].gain;
                    true
                } else {
                    false
                }
            });
        }
    }

    /// Enumerates depth/source combinations per chain and keeps the
    /// Pareto-optimal ones that beat delivering nothing.
    fn build_groups(&mut self, bundle: &Bundle<S>, budget: S) {
        let chains: Vec<Range<usize>> = bundle.chains().collect();
        self.group_opts.resize_with(chains.len(), Vec::new);
        self.group_opts.truncate(chains.len());
        self.raw_picks.clear();
        for (gi, chain) in chains.iter().enumerate() {
            self.raw.clear();
            let mut stack: Vec<usize> = Vec::with_capacity(chain.len());
            Self::expand(
                bundle,
                &self.item_opts,
                chain.start,
                chain.end,
                budget,
                (S::zero(), S::zero(), S::zero()),
                &mut stack,
                &mut self.raw,
                &mut self.raw_picks,
            );
            self.raw.sort_by(|x, y| {
                x.delay
                    .partial_cmp(&y.delay)
                    .unwrap()
                    .then(y.gain.partial_cmp(&x.gain).unwrap())
                    .then(x.bits.partial_cmp(&y.bits).unwrap())
                    .then(x.picks.cmp(&y.picks))
            });
            let group = &mut self.group_opts[gi];
            group.clear();
            let mut last = S::zero();
            for o in &self.raw {
                if o.gain > last {
                    last = o.gain;
                    group.push(*o);
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn expand(
        bundle: &Bundle<S>,
        item_opts: &[Vec<usize>],
        item: usize,
        end: usize,
        budget: S,
        acc: (S, S, S),
        stack: &mut Vec<usize>,
        raw: &mut Vec<GroupOption<S>>,
        picks: &mut Vec<usize>,
    ) {
        if item == end {
            return;
        }
        for &k in &item_opts[item] {
            let c = bundle.options(item)[k];
            let next = (acc.0 + c.gain, acc.1 + c.delay, acc.2 + c.bits);
            if next.1 > budget {
                continue;
            }
            stack.push(k);
            raw.push(GroupOption {
                gain: next.0,
                delay: next.1,
                bits: next.2,
                picks: picks.len(),
                depth: stack.len(),
            });
            picks.extend_from_slice(stack);
            Self::expand(bundle, item_opts, item + 1, end, budget, next, stack, raw, picks);
            stack.pop();
        }
    }

    /// Multiple-choice knapsack over the prepared groups.
    fn search(&mut self, budget: S) {
        let m = self.group_opts.len();
        self.current.clear();
        self.current.resize(m, None);
        self.best.clear();
        self.best.resize(m, None);
        self.best_gain = S::zero();
        self.best_bits = S::zero();

        let usable = |g: &Vec<GroupOption<S>>| g.iter().rposition(|o| o.delay <= budget);
        let mut scale = S::one();
        let mut all_delay = S::zero();
        let mut all_fit = true;
        for g in &self.group_opts {
            match usable(g) {
                Some(k) => {
                    scale = scale + g[k].gain;
                    all_delay = all_delay + g[k].delay;
                    if k + 1 != g.len() {
                        all_fit = false;
                    }
                }
                None if !g.is_empty() => all_fit = false,
                None => {}
            }
        }
        self.tol = scale * S::epsilon() * S::lit(1024.0);
        if all_fit && all_delay <= budget {
            for (gi, g) in self.group_opts.iter().enumerate() {
                if let Some(top) = g.last() {
                    self.best[gi] = Some(g.len() - 1);
                    self.best_gain = self.best_gain + top.gain;
                    self.best_bits = self.best_bits + top.bits;
                }
            }
            return;
        }

        // branch on the most valuable groups first
        self.order.clear();
        self.order.extend((0..m).filter(|&g| usable(&self.group_opts[g]).is_some()));
        let gopts = &self.group_opts;
        let key = |o: &GroupOption<S>| [o.gain, o.delay, o.bits];
        self.order.sort_by(|&a, &b| {
            let ga = gopts[a].last().unwrap().gain;
            let gb = gopts[b].last().unwrap().gain;
            gb.partial_cmp(&ga)
                .unwrap()
                .then_with(|| {
                    let ka = gopts[a].iter().map(key);
                    let kb = gopts[b].iter().map(key);
                    ka.partial_cmp(kb).unwrap()
                })
                .then(a.cmp(&b))
        });
        // interchangeable groups only need non-increasing choices
        self.twin.clear();
        self.twin.push(false);
        for w in self.order.windows(2) {
            let (a, b) = (&gopts[w[0]], &gopts[w[1]]);
            self.twin
                .push(a.len() == b.len() && a.iter().zip(b).all(|(x, y)| key(x) == key(y)));
        }

        // upper concave hull increments of every group, by position in `order`
        self.increments.clear();
        for (pos, &g) in self.order.iter().enumerate() {
            let mut px = S::zero();
            let mut py = S::zero();
            let opts = &self.group_opts[g];
            let mut k = 0;
            while k < opts.len() && opts[k].delay <= budget {
                // next hull vertex: steepest slope from the current point
                let mut pick = k;
                let mut slope = S::neg_infinity();
                for j in k..opts.len() {
                    if opts[j].delay > budget {
                        break;
                    }
                    let dx = opts[j].delay - px;
                    let dy = opts[j].gain - py;
                    let s = if dx > S::zero() { dy / dx } else { S::infinity() };
                    if s >= slope {
                        slope = s;
                        pick = j;
                    }
                }
                self.increments.push(Increment {
                    delay: opts[pick].delay - px,
                    gain: opts[pick].gain - py,
                    group: pos,
                    to: pick,
                });
                px = opts[pick].delay;
                py = opts[pick].gain;
                k = pick + 1;
            }
        }
        self.increments.sort_by(|a, b| {
            let sa = if a.delay > S::zero() { a.gain / a.delay } else { S::infinity() };
            let sb = if b.delay > S::zero() { b.gain / b.delay } else { S::infinity() };
            sb.partial_cmp(&sa).unwrap()
        });

        // the increments of groups at or after each position, in slope order
        self.suffix.clear();
        self.suffix_start.clear();
        for pos in 0..=self.order.len() {
            self.suffix_start.push(self.suffix.len());
            let incs = &self.increments;
            self.suffix.extend(incs.iter().filter(|inc| inc.group >= pos));
        }
        self.suffix_start.push(self.suffix.len());
        // a greedy pass over the increments, then a fill of the leftover
        // budget, gives a first value to beat
        let mut cap = budget;
        self.closed.clear();
        self.closed.resize(self.order.len(), false);
        self.greedy.clear();
        self.greedy.resize(self.order.len(), None);
        for inc in &self.increments {
            if self.closed[inc.group] {
                continue;
            }
            if inc.delay <= cap {
                cap = cap - inc.delay;
                self.greedy[inc.group] = Some(inc.to);
            } else {
                self.closed[inc.group] = true;
            }
        }
        let mut seed = S::zero();
        for (pos, &g) in self.order.iter().enumerate() {
            let opts = &self.group_opts[g];
            let (d0, g0) = self.greedy[pos].map_or((S::zero(), S::zero()), |k| (opts[k].delay, opts[k].gain));
            let mut gain = g0;
            let mut delay = d0;
            for o in opts {
                if o.delay - d0 <= cap && o.gain > gain {
                    gain = o.gain;
                    delay = o.delay;
                }
            }
            cap = cap - (delay - d0);
            seed = seed + gain;
        }
        let seeded = seed > self.tol;
        if seeded {
            self.best_gain = seed;
            self.best_bits = S::infinity();
        }
        self.run_dfs(budget);
        if seeded && self.best_bits == S::infinity() {
            self.best_gain = S::zero();
            self.best_bits = S::zero();
            self.run_dfs(budget);
        }
    }

    fn run_dfs(&mut self, budget: S) {
        self.seen.resize_with(self.order.len(), Vec::new);
        for level in &mut self.seen {
            level.clear();
        }
        self.dfs(0, budget, S::zero(), S::zero());
    }

    fn bound(&self, from: usize, cap: S) -> S {
        let mut cap = cap;
        let mut gain = S::zero();
        let list = &self.suffix[self.suffix_start[from]..self.suffix_start[from + 1]];
        for inc in list {
            if inc.delay <= cap {
                cap = cap - inc.delay;
                gain = gain + inc.gain;
            } else {
                if inc.delay > S::zero() {
                    gain = gain + inc.gain * cap / inc.delay;
                }
                break;
            }
        }
        gain
    }

    fn dfs(&mut self, pos: usize, cap: S, gain: S, bits: S) {
        self.nodes += 1;
        if pos == self.order.len() {
            if gain > self.best_gain + self.tol
                || (gain >= self.best_gain - self.tol && bits < self.best_bits)
            {
                self.best_gain = gain;
                self.best_bits = bits;
                self.best.clone_from(&self.current);
            }
            return;
        }
        let ub = gain + self.bound(pos, cap);
        if ub < self.best_gain - self.tol || (ub <= self.best_gain + self.tol && bits >= self.best_bits) {
            return;
        }
        // a node reached earlier with no less capacity, gain and no more
        // bits has already settled everything this one could reach
        if self.seen[pos]
            .iter()
            .any(|&(c, g, b)| c >= cap && g >= gain && b <= bits)
        {
            return;
        }
        self.seen[pos].push((cap, gain, bits));
        let g = self.order[pos];
        let top = if self.twin[pos] {
            self.current[self.order[pos - 1]].map_or(0, |k| k + 1)
        } else {
            self.group_opts[g].len()
        };
        for k in (0..top).rev() {
            let o = self.group_opts[g][k];
            if o.delay <= cap {
                self.current[g] = Some(k);
                self.dfs(pos + 1, cap - o.delay, gain + o.gain, bits + o.bits);
            }
        }
        self.current[g] = None;
        self.dfs(pos + 1, cap, gain, bits);
    }

    fn write_picks(&self, bundle: &Bundle<S>, picks: &mut [Option<usize>]) {
        for (gi, chain) in bundle.chains().enumerate() {
            for item in chain.clone() {
                picks[item] = None;
            }
            if let Some(k) = self.best[gi] {
                let o = self.group_opts[gi][k];
                for d in 0..o.depth {
                    picks[chain.start + d] = Some(self.raw_picks[o.picks + d]);
                }
            }
        }
    }
}

/// Exact dynamic program over delays rounded to multiples of `quantum`.
/// Matches [`RoutingSolver`] whenever every delay is a multiple of the
/// quantum; otherwise it is a close approximation.
pub fn solve_quantized<S: Real>(
    bundle: &Bundle<S>,
    budget: S,
    quantum: S,
) -> Result<BundleSolution<S>> {
    if budget < S::zero() || !(quantum > S::zero()) {
        return Err(Error::Invalid("budget must be >= 0 and quantum > 0".into()));
    }
    let units = |d: S| (d / quantum).round().to_usize().unwrap_or(usize::MAX);
    let cap = (budget / quantum + S::lit(1e-9)).floor().to_usize().unwrap_or(0);

    // every prefix/source combination of every chain
    struct Opt<S> {
        gain: S,
        bits: S,
        units: usize,
        picks: Vec<usize>,
    }
    let mut groups: Vec<(Range<usize>, Vec<Opt<S>>)> = Vec::new();
    for chain in bundle.chains() {
        let mut opts: Vec<Opt<S>> = Vec::new();
        let mut frontier: Vec<Opt<S>> = vec![Opt {
            gain: S::zero(),
            bits: S::zero(),
            units: 0,
            picks: Vec::new(),
        }];
        for item in chain.clone() {
            let mut next = Vec::new();
            for f in &frontier {
                for (k, c) in bundle.options(item).iter().enumerate() {
                    let u = f.units.saturating_add(units(c.delay));
                    if u > cap {
                        continue;
                    }
                    let mut picks = f.picks.clone();
                    picks.push(k);
                    next.push(Opt {
                        gain: f.gain + c.gain,
                        bits: f.bits + c.bits,
                        units: u,
                        picks,
                    });
                }
            }
            opts.extend(next.iter().map(|o| Opt {
                gain: o.gain,
                bits: o.bits,
                units: o.units,
                picks: o.picks.clone(),
            }));
            frontier = next;
        }
        groups.push((chain, opts));
    }

    let solve_groups = |cap: usize| -> (S, S, Vec<Option<usize>>) {
        // table[g][c]: best (gain, bits) using groups ..g within c units
        let m = groups.len();
        let mut table = vec![vec![(S::zero(), S::zero()); cap + 1]; m + 1];
        let mut choice = vec![vec![None::<usize>; cap + 1]; m];
        for (g, (_, opts)) in groups.iter().enumerate() {
            for c in 0..=cap {
                let mut best = table[g][c];
                let mut pick = None;
                for (k, o) in opts.iter().enumerate() {
                    if o.units <= c {
                        let prev = table[g][c - o.units];
                        let cand = (prev.0 + o.gain, prev.1 + o.bits);
                        let tol = S::epsilon() * S::lit(1024.0) * (S::one() + cand.0.abs());
                        if cand.0 > best.0 + tol || (cand.0 >= best.0 - tol && cand.1 < best.1) {
                            best = cand;
                            pick = Some(k);
                        }
                    }
                }
                table[g + 1][c] = best;
                choice[g][c] = pick;
            }
        }
        let mut c = cap;
        let mut picks = vec![None; m];
        for g in (0..m).rev() {
            if let Some(k) = choice[g][c] {
                picks[g] = Some(k);
                c -= groups[g].1[k].units;
            }
        }
        (table[m][cap].0, table[m][cap].1, picks)
    };

    let assemble = |root: Option<usize>, group_picks: &[Option<usize>]| {
        let mut picks = vec![None; bundle.item_count()];
        if bundle.has_root() {
            picks[0] = root;
        }
        for ((chain, opts), p) in groups.iter().zip(group_picks) {
            if let Some(k) = p {
                for (d, &o) in opts[*k].picks.iter().enumerate() {
                    picks[chain.start + d] = Some(o);
                }
            }
        }
        picks
    };

    let picks = if bundle.has_root() {
        let mut best: (S, S, Vec<Option<usize>>) = (S::zero(), S::zero(), vec![None; bundle.item_count()]);
        for (k, c) in bundle.options(0).iter().enumerate() {
            let u = units(c.delay);
            if u > cap {
                continue;
            }
            let (g, b, gp) = solve_groups(cap - u);
            let gain = g + c.gain;
            let bits = b + c.bits;
            let tol = S::epsilon() * S::lit(1024.0) * (S::one() + gain.abs());
            if gain > best.0 + tol || (gain >= best.0 - tol && bits < best.1 && gain > tol) {
                best = (gain, bits, assemble(Some(k), &gp));
            }
        }
        best.2
    } else {
        let (_, _, gp) = solve_groups(cap);
        assemble(None, &gp)
    };
    let (gain, delay, bits) = bundle.evaluate(&picks);
    Ok(BundleSolution {
        picks,
        gain,
        delay,
        bits,
    })
}

/// Objective coefficients of the routing variables.
#[derive(Clone, Copy, Debug)]
pub enum Gains<'a> {
    /// `z δ / Δ` for every source.
    Objective,
    /// `z δ α / Δ − λ` for SBS sources, `z δ / Δ` for the MBS.
    Lagrangian(&'a Multipliers),
}

/// Which SBSs may serve a user.
#[derive(Clone, Copy, Debug)]
pub enum Sources<'a> {
    /// Any covering SBS (the coupling with the cache is relaxed).
    Covered,
    /// Covering SBSs that hold the item.
    Cached(&'a GopCache),
}

/// Fills `bundle` with the routing problem of user `u` and video `v`.
pub fn build_bundle(
    inst: &Instance,
    u: usize,
    v: usize,
    gains: Gains<'_>,
    sources: Sources<'_>,
    bundle: &mut Bundle<f64>,
) {
    bundle.clear();
    let layout = &inst.layout[v];
    let options = |i: usize| {
        let base = inst.unit_gain(i);
        let size = inst.items[i].size;
        let mbs = Choice {
            source: Source::Mbs,
            gain: base,
            delay: inst.delay(u, None, i),
            bits: size,
        };
        inst.association
            .sbs_of(u)
            .filter(move |&n| match sources {
                Sources::Covered => true,
                Sources::Cached(c) => c.is_cached(n, i),
            })
            .map(move |n| Choice {
                source: Source::Sbs(n),
                gain: match gains {
                    Gains::Objective => base,
                    Gains::Lagrangian(l) => base - l.get(n, u, i),
                },
                delay: inst.delay(u, Some(n), i),
                bits: size,
            })
            .chain(std::iter::once(mbs))
    };
    if let Some(r) = layout.root {
        bundle.set_root(options(r));
    }
    for chain in &layout.chains {
        bundle.begin_chain();
        for &i in chain {
            bundle.push_item(options(i));
        }
    }
}

/// Item indices of a video in bundle order.
pub fn bundle_items(inst: &Instance, v: usize) -> impl Iterator<Item = usize> + '_ {
    let layout = &inst.layout[v];
    layout
        .root
        .into_iter()
        .chain(layout.chains.iter().flatten().copied())
}

/// Routing of one (user, video) pair.
#[allow(clippy::too_many_arguments)]
pub fn solve_user_video_routing(
    inst: &Instance,
    u: usize,
    v: usize,
    gains: Gains<'_>,
    sources: Sources<'_>,
    budget: f64,
    bundle: &mut Bundle<f64>,
    solver: &mut RoutingSolver<f64>,
) -> Result<BundleSolution<f64>> {
    build_bundle(inst, u, v, gains, sources, bundle);
    solver.solve(bundle, budget)
}

/// Solves every (user, video) pair of one GoP. `budgets[u * videos + v]` is
/// the delay budget of each pair. Returns the routing and its objective.
pub fn solve_routing_component(
    inst: &Instance,
    gains: Gains<'_>,
    sources: Sources<'_>,
    budgets: &[f64],
    solver: &mut RoutingSolver<f64>,
) -> Result<(GopRouting, f64)> {
    let mut routing = GopRouting::empty(inst.users(), inst.len());
    let mut bundle = Bundle::new();
    let mut total = 0.0;
    for u in 0..inst.users() {
        for v in 0..inst.videos {
            let sol = solve_user_video_routing(
                inst,
                u,
                v,
                gains,
                sources,
                budgets[u * inst.videos + v],
                &mut bundle,
                solver,
            )?;
            apply_solution(&bundle, &sol, inst, u, v, &mut routing);
            total += sol.gain;
        }
    }
    Ok((routing, total))
}

/// Writes a bundle solution into the GoP routing table.
pub fn apply_solution(
    bundle: &Bundle<f64>,
    sol: &BundleSolution<f64>,
    inst: &Instance,
    u: usize,
    v: usize,
    routing: &mut GopRouting,
) {
    for (item, i) in bundle_items(inst, v).enumerate() {
        let s = sol.picks[item].map_or(Source::None, |k| bundle.options(item)[k].source);
        routing.set(u, i, s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute_force_routing;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mbs(gain: f64, size: f64, d: f64) -> Choice<f64> {
        Choice {
            source: Source::Mbs,
            gain,
            delay: size * d,
            bits: size,
        }
    }

    fn sbs(n: usize, gain: f64, size: f64, d: f64) -> Choice<f64> {
        Choice {
            source: Source::Sbs(n),
            gain,
            delay: size * d,
            bits: size,
        }
    }

    /// One Hog Rider tile with two layers, reachable only over the backhaul.
    fn hog_tile_over_backhaul() -> Bundle<f64> {
        let mut b = Bundle::new();
        b.begin_chain();
        b.push_item([mbs(118.0 / 243.0, 0.010, 5.0)]);
        b.push_item([mbs(125.0 / 243.0, 0.125, 5.0)]);
        b
    }

    #[test]
    fn empty_budget_delivers_nothing() {
        let b = hog_tile_over_backhaul();
        let sol = RoutingSolver::new().solve(&b, 0.0).unwrap();
        assert_eq!(sol.picks, vec![None, None]);
        assert_eq!(sol.gain, 0.0);
    }

    #[test]
    fn generous_budget_delivers_both_layers() {
        let b = hog_tile_over_backhaul();
        let sol = RoutingSolver::new().solve(&b, 1.0).unwrap();
        assert_eq!(sol.picks, vec![Some(0), Some(0)]);
        assert_relative_eq!(sol.delay, 0.675, epsilon = 1e-12);
        assert_relative_eq!(sol.gain, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tight_budget_keeps_base_layer() {
        let b = hog_tile_over_backhaul();
        let sol = RoutingSolver::new().solve(&b, 0.1).unwrap();
        assert_eq!(sol.picks, vec![Some(0), None]);
        assert_relative_eq!(sol.gain, 118.0 / 243.0, epsilon = 1e-12);
        let bf = brute_force_routing(&b, 0.1).unwrap();
        assert_eq!(bf.picks, sol.picks);
    }

    #[test]
    fn negative_budget_is_an_error() {
        let b = hog_tile_over_backhaul();
        assert!(RoutingSolver::new().solve(&b, -1.0).is_err());
    }

    #[test]
    fn no_sources_means_no_delivery() {
        let mut b: Bundle<f64> = Bundle::new();
        b.begin_chain();
        b.push_item([]);
        b.push_item([]);
        let sol = RoutingSolver::new().solve(&b, 10.0).unwrap();
        assert_eq!(sol.picks, vec![None, None]);
    }

    #[test]
    fn negative_base_delivered_for_valuable_enhancement() {
        let mut b = Bundle::new();
        b.begin_chain();
        b.push_item([sbs(0, -0.2, 0.01, 1.0)]);
        b.push_item([sbs(0, 0.5, 0.1, 1.0)]);
        let sol = RoutingSolver::new().solve(&b, 1.0).unwrap();
        assert_eq!(sol.picks, vec![Some(0), Some(0)]);
        assert_relative_eq!(sol.gain, 0.3, epsilon = 1e-12);

        let mut b = Bundle::new();
        b.begin_chain();
        b.push_item([sbs(0, -0.6, 0.01, 1.0)]);
        b.push_item([sbs(0, 0.5, 0.1, 1.0)]);
        let sol = RoutingSolver::new().solve(&b, 1.0).unwrap();
        assert_eq!(sol.picks, vec![None, None]);
    }

    #[test]
    fn equal_gain_prefers_cheaper_source() {
        let mut b = Bundle::new();
        b.begin_chain();
        b.push_item([sbs(0, 1.0, 0.1, 1.0), sbs(1, 1.0, 0.1, 1.0), mbs(1.0, 0.1, 5.0)]);
        let sol = RoutingSolver::new().solve(&b, 1.0).unwrap();
        assert_eq!(sol.picks, vec![Some(0)]);
    }

    #[test]
    fn root_gates_chains() {
        let mut b = Bundle::new();
        b.set_root([sbs(0, 0.1, 1.0, 1.0)]);
        b.begin_chain();
        b.push_item([sbs(0, 0.5, 0.5, 1.0)]);
        b.begin_chain();
        b.push_item([sbs(0, 0.4, 0.5, 1.0)]);
        // root alone fits, root plus one chain fits
        let sol = RoutingSolver::new().solve(&b, 1.6).unwrap();
        assert_eq!(sol.picks, vec![Some(0), Some(0), None]);
        // chains cannot be delivered without the root
        let sol = RoutingSolver::new().solve(&b, 0.9).unwrap();
        assert_eq!(sol.picks, vec![None, None, None]);
        let dp = solve_quantized(&b, 1.6, 0.001).unwrap();
        assert_eq!(dp.picks, vec![Some(0), Some(0), None]);
    }

    /// Random (tiles, layers, sources) bundle with millisecond-grid delays,
    /// sometimes behind a shared root.
    fn arb_bundle() -> impl Strategy<Value = (Bundle<f64>, f64)> {
        (1usize..=4, 1usize..=2, 1usize..=3, 0u64..3000).prop_flat_map(|(tiles, layers, srcs, budget)| {
            let item = prop::collection::vec((-1.0f64..4.0, 1u64..400), srcs..=srcs);
            (
                prop::option::of(item.clone()),
                prop::collection::vec(prop::collection::vec(item, layers..=layers), tiles..=tiles),
                Just(budget),
            )
                .prop_map(move |(root, spec, budget)| {
                    let choices = |opts: Vec<(f64, u64)>| {
                        opts.into_iter()
                            .enumerate()
                            .map(|(k, (gain, ms))| Choice {
                                source: if k == 0 { Source::Mbs } else { Source::Sbs(k - 1) },
                                gain,
                                delay: ms as f64 / 1000.0,
                                bits: ms as f64,
                            })
                            .collect::<Vec<_>>()
                    };
                    let mut b = Bundle::new();
                    if let Some(r) = root {
                        b.set_root(choices(r));
                    }
                    for chain in spec {
                        b.begin_chain();
                        b.push_item(Vec::new());
                        b.chains.last_mut().unwrap().end -= 1;
                        b.items.pop();
                        for opts in chain {
                            b.push_item(choices(opts));
                        }
                    }
                    (b, budget as f64 / 1000.0)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn branch_and_bound_is_exact((b, budget) in arb_bundle()) {
            let bb = RoutingSolver::new().solve(&b, budget).unwrap();
            let bf = brute_force_routing(&b, budget).unwrap();
            let dp = solve_quantized(&b, budget, 0.001).unwrap();
            prop_assert!(b.is_feasible(&bb.picks, budget));
            prop_assert!((bb.gain - bf.gain).abs() <= 1e-9, "bb {} bf {}", bb.gain, bf.gain);
            prop_assert!((dp.gain - bf.gain).abs() <= 1e-9, "dp {} bf {}", dp.gain, bf.gain);
        }
    }
}
