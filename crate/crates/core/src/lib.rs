//! Joint cache placement and request routing for tiled, layered 360° video
//! served by collaborating small-cell base stations (SBSs) with a macro
//! cell (MBS) backhaul.
//!
//! The optimization is split per group of pictures (GoP). Each GoP is solved
//! by Lagrangian relaxation of the coupling between routing and caching:
//! per-SBS 0-1 knapsacks pick the caches, per-(user, video) multiple-choice
//! knapsacks pick sources and delivered layers, and a subgradient method
//! drives the multipliers while a repair step keeps the best feasible point.
//!
//! ```no_run
//! use tilecache::{generate_scenario, run_scheme, ScenarioConfig, SchemeKind};
//!
//! let scenario = generate_scenario(&ScenarioConfig::default())?;
//! let run = run_scheme(&scenario, SchemeKind::Proposed, &scenario.solver, false, 1000)?;
//! println!("D = {:.3}", run.metrics.d);
//! # Ok::<(), tilecache::Error>(())
//! ```

// `!(x > 0.0)` also rejects NaN; index loops mirror the math
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod demand;
pub mod error;
pub mod experiments;
pub mod instance;
pub mod knapsack;
pub mod lagrangian;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod routing;
pub mod scalar;
pub mod scheduler;

pub use baselines::{run_scheme, transform_scenario, SchemeKind, SchemeRun};
pub use error::{Error, Result};
pub use experiments::{generate_scenario, run_sweep, Axis, ScenarioConfig, SweepConfig};
pub use instance::{Granularity, Instance};
pub use lagrangian::{solve_subproblem, SolverParams, SubgradientRule};
pub use metrics::{evaluate, validate_policies, Metrics, Violation};
pub use model::{ItemKey, Scenario, Source};
pub use policy::{CachePolicy, Policies, PolicyDocument, RoutingPolicy};
pub use scalar::Real;
pub use scheduler::{solve_full, SolveReport};


/// Double-precision routing bundle.
pub type Bundle = routing::Bundle<f64>;
/// Double-precision knapsack item.
pub type KnapsackItem = knapsack::Item<f64>;
/// Double-precision routing solver.
pub type RoutingSolver = routing::RoutingSolver<f64>;
/// Double-precision knapsack solver.
pub type KnapsackSolver = knapsack::KnapsackSolver<f64>;
