use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tilecache::experiments::{convergence_trace, summarize, write_rows, write_summary, write_trace};
use tilecache::instance::Instance;
use tilecache::lagrangian::solve_subproblem;
use tilecache::oracle::brute_force_joint;
use tilecache::scheduler::{gop_cache_budget, gop_delay_budget};
use tilecache::{
    generate_scenario, run_scheme, run_sweep, transform_scenario, validate_policies, Axis, PolicyDocument,
    Scenario, ScenarioConfig, SchemeKind, SubgradientRule, SweepConfig,
};

/// Joint caching and routing of tiled 360-degree video at edge base stations.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML scenario configuration (defaults to the reference setup).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Subgradient rule of the multiplier update.
    #[arg(long, value_parser = ["exact", "weighted"])]
    subgradient: Option<String>,
}

impl Common {
    fn config(&self) -> anyhow::Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::from_toml(&read(p)?)?,
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(rule) = &self.subgradient {
            cfg.solver.subgradient = rule.parse::<SubgradientRule>()?;
        }
        Ok(cfg)
    }

    /// A scenario file if given, otherwise one generated from the config.
    fn scenario(&self, path: Option<&Path>) -> anyhow::Result<Scenario> {
        let mut s = match path {
            Some(p) => Scenario::from_json(&read(p)?)?,
            None => generate_scenario(&self.config()?)?,
        };
        if let Some(rule) = &self.subgradient {
            s.solver.subgradient = rule.parse::<SubgradientRule>()?;
        }
        Ok(s)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a scenario JSON generated from a configuration.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one scheme and print its metrics as JSON.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "proposed")]
        scheme: SchemeKind,
        /// Where to write the policies document.
        #[arg(long)]
        policies: Option<PathBuf>,
        /// Monte Carlo realizations of the soft hit ratio.
        #[arg(long, default_value_t = 1000)]
        realizations: usize,
        /// Single whole-frame enhancement items for the layered scheme.
        #[arg(long)]
        whole_frame: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one parameter over several schemes and seeds into a CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: Axis,
        /// Comma-separated values (percent for cache, names for viewport).
        #[arg(long)]
        values: String,
        /// Comma-separated schemes.
        #[arg(long, default_value = "proposed,ic,jcl,jcnt,icnt")]
        scheme: String,
        /// Seeds per point, counting up from the configured seed.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value_t = 1000)]
        realizations: usize,
        #[arg(long)]
        whole_frame: bool,
        /// Per-row CSV; a `.summary.csv` sibling gets means and standard errors.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a policies document against every constraint.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "proposed")]
        scheme: SchemeKind,
        #[arg(long)]
        policies: PathBuf,
        #[arg(long)]
        whole_frame: bool,
    },
    /// Exact optimum of the first GoP by enumeration, next to the solver's value.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Per-iteration bounds of the first GoP as CSV.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(p: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate { common, out } => {
            let s = generate_scenario(&common.config()?)?;
            writeln!(output(out.as_deref())?, "{}", s.to_json()?)?;
        }
        Command::Solve {
            common,
            scenario,
            scheme,
            policies,
            realizations,
            whole_frame,
            out,
        } => {
            let s = common.scenario(scenario.as_deref())?;
            let r = run_scheme(&s, scheme, &s.solver, whole_frame, realizations)?;
            let violations = validate_policies(&r.instance, &r.policies);
            if let Some(p) = policies {
                let doc = PolicyDocument::from_policies(&r.instance, &r.policies);
                serde_json::to_writer(BufWriter::new(File::create(&p)?), &doc)?;
            }
            let report = json!({
                "scheme": scheme.name(),
                "D": r.metrics.d,
                "chr": r.metrics.chr,
                "soft_chr": r.metrics.soft_chr,
                "realized_chr": r.metrics.realized_chr,
                "gap": r.max_gap(),
                "iterations": r.iterations(),
                "violations": violations.len(),
            });
            writeln!(output(out.as_deref())?, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Sweep {
            common,
            axis,
            values,
            scheme,
            seeds,
            jobs,
            realizations,
            whole_frame,
            out,
        } => {
            let base = common.config()?;
            let mut cfg = SweepConfig::new(axis, axis.parse_values(&values)?, base.clone());
            cfg.schemes = scheme
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<tilecache::Result<_>>()?;
            cfg.seeds = (0..seeds).map(|k| base.seed + k).collect();
            cfg.jobs = jobs;
            cfg.realizations = realizations;
            cfg.whole_frame_layers = whole_frame;
            let rows = run_sweep(&cfg)?;
            write_rows(&rows, output(out.as_deref())?)?;
            if let Some(p) = out {
                let summary = p.with_extension("summary.csv");
                write_summary(&summarize(&rows), File::create(summary)?)?;
            }
        }
        Command::Validate {
            common,
            scenario,
            scheme,
            policies,
            whole_frame,
        } => {
            let s = common.scenario(scenario.as_deref())?;
            let inst = transform_scenario(&s, scheme, whole_frame)?;
            let doc: PolicyDocument = serde_json::from_str(&read(&policies)?)?;
            let p = doc.to_policies(&inst)?;
            let violations = validate_policies(&inst, &p);
            println!("{}", serde_json::to_string_pretty(&violations)?);
            if !violations.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Oracle { common, scenario } => {
            let s = common.scenario(scenario.as_deref())?;
            let inst = Instance::tiled(&s)?;
            let capacity: Vec<u64> = inst
                .capacity
                .iter()
                .map(|&c| gop_cache_budget(c, inst.gops, 0))
                .collect();
            let t = gop_delay_budget(s.timing.t_app, s.timing.t_disp, inst.gops, 0.0).min(s.timing.t_app);
            let budgets = vec![t; inst.users() * inst.videos];
            let exact = brute_force_joint(&inst, &capacity, &budgets)?;
            let solved = solve_subproblem(&inst, 0, &capacity, &budgets, &s.solver)?;
            let rel = if exact.value > 0.0 {
                (exact.value - solved.report.lb).abs() / exact.value
            } else {
                (exact.value - solved.report.lb).abs()
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "optimum": exact.value,
                    "placements": exact.placements,
                    "solver_lb": solved.report.lb,
                    "solver_ub": solved.report.ub,
                    "relative_difference": rel,
                }))?
            );
        }
        Command::Trace { common, scenario, out } => {
            let s = common.scenario(scenario.as_deref())?;
            let trace = convergence_trace(&s, &s.solver)?;
            write_trace(&trace, output(out.as_deref())?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TILECACHE_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

