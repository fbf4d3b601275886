//! The comparison schemes. Each is a choice of item granularity plus a
//! choice of association, solved with the same machinery; the independent
//! schemes split the network into one problem per SBS.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Granularity, Instance};
use crate::lagrangian::SolverParams;
use crate::metrics::{evaluate, Metrics};
use crate::model::{restrict_to_nearest, Scenario};
use crate::policy::Policies;
use crate::scheduler::{solve_full, SolveReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Versions, nearest SBS only.
    Icnt,
    /// Versions, collaborative.
    Jcnt,
    /// Single-tile layers, collaborative.
    Jcl,
    /// Tiles and layers, nearest SBS only.
    Ic,
    /// Tiles and layers, collaborative.
    Proposed,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 5] = [
        SchemeKind::Proposed,
        SchemeKind::Ic,
        SchemeKind::Jcl,
        SchemeKind::Jcnt,
        SchemeKind::Icnt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Icnt => "icnt",
            SchemeKind::Jcnt => "jcnt",
            SchemeKind::Jcl => "jcl",
            SchemeKind::Ic => "ic",
            SchemeKind::Proposed => "proposed",
        }
    }

    /// Whether users talk only to their nearest SBS.
    pub fn is_independent(self) -> bool {
        matches!(self, SchemeKind::Icnt | SchemeKind::Ic)
    }

    pub fn granularity(self, whole_frame_layers: bool) -> Granularity {
        match self {
            SchemeKind::Icnt | SchemeKind::Jcnt => Granularity::Versioned,
            SchemeKind::Jcl if whole_frame_layers => Granularity::LayeredWholeFrame,
            SchemeKind::Jcl => Granularity::Layered,
            SchemeKind::Ic | SchemeKind::Proposed => Granularity::TileLayer,
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "icnt" => Ok(SchemeKind::Icnt),
            "jcnt" => Ok(SchemeKind::Jcnt),
            "jcl" => Ok(SchemeKind::Jcl),
            "ic" => Ok(SchemeKind::Ic),
            "proposed" => Ok(SchemeKind::Proposed),
            other => Err(Error::config("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

/// The instance a scheme optimizes over.
pub fn transform_scenario(scenario: &Scenario, kind: SchemeKind, whole_frame_layers: bool) -> Result<Instance> {
    let association = if kind.is_independent() {
        restrict_to_nearest(&scenario.association, &scenario.network, &scenario.users)
    } else {
        scenario.association.clone()
    };
    Instance::build(scenario, kind.granularity(whole_frame_layers), association)
}

#[derive(Clone, Debug)]
pub struct SchemeRun {
    pub kind: SchemeKind,
    pub instance: Instance,
    pub policies: Policies,
    /// One report per independently solved part (a single one for joint schemes).
    pub reports: Vec<SolveReport>,
    pub metrics: Metrics,
}

impl SchemeRun {
    pub fn max_gap(&self) -> f64 {
        self.reports.iter().map(|r| r.max_gap).fold(0.0, f64::max)
    }

    pub fn iterations(&self) -> usize {
        self.reports.iter().map(|r| r.total_iterations).sum()
    }
}

/// Solves a scheme and evaluates its policies at tile level.
pub fn run_scheme(
    scenario: &Scenario,
    kind: SchemeKind,
    params: &SolverParams,
    whole_frame_layers: bool,
    realizations: usize,
) -> Result<SchemeRun> {
    let inst = transform_scenario(scenario, kind, whole_frame_layers)?;
    let (policies, reports) = if kind.is_independent() {
        solve_independent(&inst, params)?
    } else {
        let sol = solve_full(&inst, params)?;
        (sol.policies, vec![sol.report])
    };
    let metrics = evaluate(scenario, &inst, &policies, realizations, scenario.seed)?;
    Ok(SchemeRun {
        kind,
        instance: inst,
        policies,
        reports,
        metrics,
    })
}

/// One problem per SBS with the users attached to it, plus one MBS-only
/// problem for uncovered users; results are merged into global policies.
pub fn solve_independent(inst: &Instance, params: &SolverParams) -> Result<(Policies, Vec<SolveReport>)> {
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); inst.sbs() + 1];
    for u in 0..inst.users() {
        let mut covering = inst.association.sbs_of(u);
        let n = covering.next().unwrap_or(inst.sbs());
        if covering.next().is_some() {
            return Err(Error::Invalid(format!("user {u} is attached to more than one SBS")));
        }
        groups[n].push(u);
    }
    let mut policies = Policies::empty(inst);
    let mut reports = Vec::new();
    for (n, users) in groups.iter().enumerate() {
        if users.is_empty() {
            continue;
        }
        let sbs: Vec<usize> = if n < inst.sbs() { vec![n] } else { Vec::new() };
        let sub = inst.restrict(users, &sbs)?;
        let sol = solve_full(&sub, params)?;
        for g in 0..inst.gops {
            if n < inst.sbs() {
                policies.cache.gops[g].cached[n] = sol.policies.cache.gops[g].cached[0].clone();
            }
            let sub_routing = &sol.policies.routing.gops[g];
            for (local, &u) in users.iter().enumerate() {
                for i in 0..inst.len() {
                    let s = match sub_routing.get(local, i) {
                        crate::model::Source::Sbs(_) => crate::model::Source::Sbs(n),
                        other => other,
                    };
                    policies.routing.gops[g].set(u, i, s);
                }
            }
        }
        reports.push(sol.report);
    }
    Ok((policies, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{generate_scenario, ScenarioConfig};

    #[test]
    fn names_round_trip() {
        for k in SchemeKind::ALL {
            assert_eq!(k.name().parse::<SchemeKind>().unwrap(), k);
        }
        assert!("jlt".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn independent_transform_keeps_one_sbs_per_user() {
        let s = generate_scenario(&ScenarioConfig {
            videos: 2,
            gops: 1,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let ic = transform_scenario(&s, SchemeKind::Ic, false).unwrap();
        let prop = transform_scenario(&s, SchemeKind::Proposed, false).unwrap();
        assert_eq!(ic.items, prop.items);
        for u in 0..ic.users() {
            assert!(ic.association.sbs_of(u).count() <= 1);
            for n in ic.association.sbs_of(u) {
                assert!(prop.association.covers(n, u));
            }
        }
    }
}
