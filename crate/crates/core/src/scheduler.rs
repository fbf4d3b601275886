//! Sequential per-GoP solving with cache and delay carryover.
//!
//! Each GoP gets an equal share of every SBS cache plus whatever the
//! previous GoP left unused, and a delay budget of one display period plus
//! its share of the start-up delay plus the previous GoP's slack. The delay
//! budget of each (user, video) pair is further clamped so that cumulative
//! delivery never outruns playback.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::{to_kbit, Instance};
use crate::lagrangian::{routing_objective, solve_subproblem_from, GopReport, Multipliers, SolverParams, WarmStart};
use crate::policy::GopRouting;
use crate::model::Timing;
use crate::policy::Policies;

/// Unused resources handed from one GoP to the next.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CarryoverState {
    /// Unused cache per SBS, in kbit.
    pub cache_rem_kbit: Vec<u64>,
    /// Unused delay in seconds.
    pub t_rem: f64,
}

impl CarryoverState {
    pub fn new(sbs: usize) -> Self {
        CarryoverState {
            cache_rem_kbit: vec![0; sbs],
            t_rem: 0.0,
        }
    }
}

/// `⌊C_n / G + C_rem⌋` at kilobit granularity.
pub fn gop_cache_budget(capacity_mbit: f64, gops: usize, rem_kbit: u64) -> u64 {
    let share = capacity_mbit.max(0.0) * 1000.0 / gops.max(1) as f64;
    // absorb representation error before flooring
    (share + 1e-7).floor() as u64 + rem_kbit
}

/// `t_app / G + t_disp + t_rem`.
pub fn gop_delay_budget(t_app: f64, t_disp: f64, gops: usize, t_rem: f64) -> f64 {
    t_app / gops.max(1) as f64 + t_disp + t_rem
}

/// Latest cumulative delivery time allowed by the end of GoP `g` (0-based).
pub fn playback_deadline(timing: &Timing, g: usize) -> f64 {
    timing.t_app + g as f64 * timing.t_disp
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub gops: Vec<GopReport>,
    pub carryover: Vec<CarryoverState>,
    /// Objective of the assembled policies, normalized by the instance's Δ.
    pub objective: f64,
    pub max_gap: f64,
    pub total_iterations: usize,
}

impl SolveReport {
    pub fn median_iterations(&self) -> f64 {
        let mut it: Vec<usize> = self.gops.iter().map(|r| r.iterations).collect();
        if it.is_empty() {
            return 0.0;
        }
        it.sort_unstable();
        let m = it.len() / 2;
        if it.len() % 2 == 1 {
            it[m] as f64
        } else {
            (it[m - 1] + it[m]) as f64 / 2.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct FullSolution {
    pub policies: Policies,
    pub report: SolveReport,
}

/// Solves every GoP in order and assembles the global policies.
pub fn solve_full(inst: &Instance, params: &SolverParams) -> Result<FullSolution> {
    let (users, videos, gops) = (inst.users(), inst.videos, inst.gops);
    let mut policies = Policies::empty(inst);
    let mut carry = CarryoverState::new(inst.sbs());
    let mut consumed = vec![0.0; users * videos];
    let mut reports = Vec::with_capacity(gops);
    let mut carryover = Vec::with_capacity(gops);
    let mut objective = 0.0;
    let mut previous: Option<(Multipliers, GopRouting)> = None;

    for g in 0..gops {
        let capacity: Vec<u64> = (0..inst.sbs())
            .map(|n| gop_cache_budget(inst.capacity[n], gops, carry.cache_rem_kbit[n]))
            .collect();
        let t_g = gop_delay_budget(inst.timing.t_app, inst.timing.t_disp, gops, carry.t_rem);
        let deadline = playback_deadline(&inst.timing, g);
        let budgets: Vec<f64> = consumed.iter().map(|c| t_g.min(deadline - c).max(0.0)).collect();

        let warm = match (params.warm_start, &previous) {
            (true, Some((lambda, routing))) => Some(WarmStart { lambda, routing }),
            _ => None,
        };
        let sol = solve_subproblem_from(inst, g, &capacity, &budgets, params, warm)?;

        let mut next = CarryoverState::new(inst.sbs());
        for (n, rem) in next.cache_rem_kbit.iter_mut().enumerate() {
            *rem = capacity[n].saturating_sub(sol.cache.used_kbit(inst, n));
        }
        let mut t_rem = f64::INFINITY;
        for u in 0..users {
            let mut worst: f64 = 0.0;
            for v in 0..videos {
                let d = sol.routing.video_delay(inst, u, v);
                consumed[u * videos + v] += d;
                worst = worst.max(d);
            }
            t_rem = t_rem.min(t_g - worst);
        }
        next.t_rem = if t_rem.is_finite() { t_rem.max(0.0) } else { t_g };

        objective += routing_objective(inst, &sol.routing);
        previous = Some((sol.lambda, sol.routing.clone()));
        policies.cache.gops[g] = sol.cache;
        policies.routing.gops[g] = sol.routing;
        reports.push(sol.report);
        carryover.push(next.clone());
        carry = next;
    }
    let max_gap = reports.iter().map(|r| r.gap).fold(0.0, f64::max);
    let total_iterations = reports.iter().map(|r| r.iterations).sum();
    Ok(FullSolution {
        policies,
        report: SolveReport {
            gops: reports,
            carryover,
            objective,
            max_gap,
            total_iterations,
        },
    })
}

/// Kilobit form of a capacity, for callers that bypass the scheduler.
pub fn capacity_kbit(inst: &Instance) -> Vec<u64> {
    inst.capacity.iter().map(|&c| to_kbit(c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cache_budget_examples() {
        assert_eq!(gop_cache_budget(100.0, 30, 0), 3333);
        assert_eq!(gop_cache_budget(92.772, 1, 0), 92772);
        assert_eq!(gop_cache_budget(0.0, 30, 0), 0);
        assert_eq!(gop_cache_budget(0.0, 30, 17), 17);
        // exact shares are not lost to rounding
        assert_eq!(gop_cache_budget(3.0, 3, 0), 1000);
    }

    #[test]
    fn delay_budget_examples() {
        assert_relative_eq!(gop_delay_budget(1.0, 1.0, 30, 0.0), 31.0 / 30.0, epsilon = 1e-12);
        assert_relative_eq!(gop_delay_budget(1.0, 1.0, 30, 0.5), 1.0 / 30.0 + 1.5, epsilon = 1e-12);
        assert_relative_eq!(gop_delay_budget(1.0, 1.0, 1, 0.0), 2.0);
    }

    #[test]
    fn deadline_grows_by_display_time() {
        let t = Timing::default();
        assert_eq!(playback_deadline(&t, 0), 1.0);
        assert_eq!(playback_deadline(&t, 4), 5.0);
    }
}
