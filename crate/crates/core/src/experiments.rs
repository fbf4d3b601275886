//! Scenario generation and parameter sweeps.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_scheme, SchemeKind};
use crate::demand::{build_demand, viewport_pmf, viewport_set, zipf_pmf, ViewportDistribution};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lagrangian::{solve_subproblem, SolverParams, TraceRow};
use crate::model::{
    build_association, Network, Point, Scenario, TileGrid, Timing, UserPopulation, VideoClass, VideoLibrary,
};
use crate::demand::anchored_viewports;
use crate::scheduler::{gop_cache_budget, gop_delay_budget};

/// Everything needed to generate a [`Scenario`]. Defaults reproduce the
/// reference setup: 5 SBSs of radius 300 m on a 250 m ring, 30 users,
/// 10 videos of 30 GoPs on a 3x4 grid with 2 layers, caches of 10% of the
/// library, 1 s/Mbit to SBSs and 5 s/Mbit over the backhaul.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub sbs: usize,
    /// Coverage radius of every SBS, meters.
    pub sbs_radius: f64,
    /// Radius of the ring SBSs are placed on, meters.
    pub ring_radius: f64,
    pub mbs_radius: f64,
    /// Per-SBS cache as a fraction of the library size.
    pub cache_fraction: f64,
    pub users: usize,
    /// Users are drawn uniformly from the union of disks of this radius
    /// around the SBSs; defaults to the coverage radius.
    pub user_placement_radius: Option<f64>,
    /// s/Mbit.
    pub sbs_delay: f64,
    /// s/Mbit.
    pub backhaul_delay: f64,
    pub videos: usize,
    pub gops: usize,
    pub layers: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub viewport_rows: usize,
    pub viewport_cols: usize,
    pub viewport_distribution: ViewportDistribution,
    pub zipf_eta: f64,
    /// Share of videos per class (Hog Rider, Roller Coaster, Chariot Racer),
    /// assigned by video index.
    pub class_mix: [f64; 3],
    pub t_app: f64,
    pub t_disp: f64,
    /// Explicit SBS positions; empty places them on the ring.
    pub sbs_positions: Vec<Point>,
    /// Explicit user positions; empty draws them at random.
    pub user_positions: Vec<Point>,
    pub solver: SolverParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            sbs: 5,
            sbs_radius: 300.0,
            ring_radius: 250.0,
            mbs_radius: 1000.0,
            cache_fraction: 0.10,
            users: 30,
            user_placement_radius: None,
            sbs_delay: 1.0,
            backhaul_delay: 5.0,
            videos: 10,
            gops: 30,
            layers: 2,
            grid_rows: 3,
            grid_cols: 4,
            viewport_rows: 2,
            viewport_cols: 2,
            viewport_distribution: ViewportDistribution::BiGauss,
            zipf_eta: 1.0,
            class_mix: [0.4, 0.3, 0.3],
            t_app: 1.0,
            t_disp: 1.0,
            sbs_positions: Vec::new(),
            user_positions: Vec::new(),
            solver: SolverParams::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("sbs_radius", self.sbs_radius),
            ("mbs_radius", self.mbs_radius),
            ("sbs_delay", self.sbs_delay),
            ("backhaul_delay", self.backhaul_delay),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be finite and > 0"));
            }
        }
        if self.backhaul_delay <= self.sbs_delay {
            return Err(Error::config("backhaul_delay", "must exceed sbs_delay"));
        }
        if !(self.cache_fraction >= 0.0) {
            return Err(Error::config("cache_fraction", "must be >= 0"));
        }
        if self.videos == 0 {
            return Err(Error::config("videos", "must be at least 1"));
        }
        if self.layers == 0 || self.layers > 2 {
            return Err(Error::config("layers", "the measured classes have 1 or 2 layers"));
        }
        if self.viewport_rows > self.grid_rows || self.viewport_rows == 0 {
            return Err(Error::config("viewport_rows", "viewport must fit the grid"));
        }
        if self.viewport_cols > self.grid_cols || self.viewport_cols == 0 {
            return Err(Error::config("viewport_cols", "viewport must fit the grid"));
        }
        if self.class_mix.iter().any(|s| !(*s >= 0.0)) || self.class_mix.iter().sum::<f64>() <= 0.0 {
            return Err(Error::config("class_mix", "shares must be >= 0 and not all zero"));
        }
        if !self.sbs_positions.is_empty() && self.sbs_positions.len() != self.sbs {
            return Err(Error::config("sbs_positions", "length must equal sbs"));
        }
        if !self.user_positions.is_empty() && self.user_positions.len() != self.users {
            return Err(Error::config("user_positions", "length must equal users"));
        }
        if let Some(r) = self.user_placement_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::config("user_placement_radius", "must be finite and > 0"));
            }
        }
        self.solver.validate()
    }
}

/// Class of every video: contiguous index blocks sized by the mix.
pub fn class_assignment(videos: usize, mix: &[f64; 3]) -> Vec<usize> {
    let total: f64 = mix.iter().sum();
    let b1 = (mix[0] / total * videos as f64).round() as usize;
    let b2 = ((mix[0] + mix[1]) / total * videos as f64).round() as usize;
    (0..videos)
        .map(|v| if v < b1 { 0 } else if v < b2 { 1 } else { 2 })
        .collect()
}

/// Builds a scenario deterministically from its configuration.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let grid = TileGrid::new(cfg.grid_rows, cfg.grid_cols)?;
    let classes: Vec<VideoClass> = VideoClass::measured()
        .into_iter()
        .map(|c| {
            VideoClass::new(
                &c.name,
                c.size_per_tile[..cfg.layers].to_vec(),
                c.delta_per_tile[..cfg.layers].to_vec(),
            )
        })
        .collect::<Result<_>>()?;
    let vp_size = (cfg.viewport_rows, cfg.viewport_cols);
    let anchors = anchored_viewports(&grid, vp_size)?;
    let library = VideoLibrary::new(
        grid,
        cfg.gops,
        classes,
        class_assignment(cfg.videos, &cfg.class_mix),
        anchors,
    )?;

    let sbs_pos: Vec<Point> = if cfg.sbs_positions.is_empty() {
        (0..cfg.sbs)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / cfg.sbs as f64;
                Point::new(cfg.ring_radius * a.cos(), cfg.ring_radius * a.sin())
            })
            .collect()
    } else {
        cfg.sbs_positions.clone()
    };
    let mbs_pos = Point::new(0.0, 0.0);

    let positions = if cfg.user_positions.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let rho = cfg.user_placement_radius.unwrap_or(cfg.sbs_radius);
        (0..cfg.users)
            .map(|_| sample_user(&mut rng, &sbs_pos, rho, &mbs_pos, cfg.mbs_radius))
            .collect()
    } else {
        cfg.user_positions.clone()
    };
    let users = UserPopulation { positions };
    let network = Network {
        sbs_radius: vec![cfg.sbs_radius; sbs_pos.len()],
        cache_capacity: vec![cfg.cache_fraction * library.total_size(); sbs_pos.len()],
        sbs_delay: vec![vec![cfg.sbs_delay; sbs_pos.len()]; users.len()],
        backhaul_delay: vec![cfg.backhaul_delay; users.len()],
        sbs_pos,
        mbs_pos,
        mbs_radius: cfg.mbs_radius,
    };
    let association = build_association(&network, &users);

    let video_pmf = zipf_pmf(cfg.videos, cfg.zipf_eta)?;
    let viewports = viewport_set(cfg.viewport_distribution, &library, vp_size)?;
    let vp_pmf = (0..cfg.videos)
        .map(|v| viewport_pmf(cfg.viewport_distribution, &viewports, v, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    let demand = build_demand(
        &library,
        users.len(),
        &video_pmf,
        cfg.viewport_distribution,
        viewports,
        vp_pmf,
    )?;
    let scenario = Scenario {
        library,
        network,
        users,
        association,
        demand,
        timing: Timing {
            t_app: cfg.t_app,
            t_disp: cfg.t_disp,
        },
        seed: cfg.seed,
        solver: cfg.solver.clone(),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Uniform point in the union of disks (rejection sampling from the
/// bounding box). Without SBSs, uniform in the MBS disk.
fn sample_user(rng: &mut ChaCha8Rng, sbs: &[Point], rho: f64, mbs: &Point, mbs_radius: f64) -> Point {
    let (centers, r): (Vec<Point>, f64) = if sbs.is_empty() {
        (vec![*mbs], mbs_radius)
    } else {
        (sbs.to_vec(), rho)
    };
    let min_x = centers.iter().map(|p| p.x).fold(f64::INFINITY, f64::min) - r;
    let max_x = centers.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max) + r;
    let min_y = centers.iter().map(|p| p.y).fold(f64::INFINITY, f64::min) - r;
    let max_y = centers.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max) + r;
    loop {
        let p = Point::new(rng.gen_range(min_x..max_x), rng.gen_range(min_y..max_y));
        if centers.iter().any(|c| p.distance(c) <= r) {
            return p;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Cache size, percent of the library.
    Cache,
    /// SBS coverage radius, meters.
    Radius,
    /// SBS delay, s/Mbit.
    SbsDelay,
    /// Backhaul delay, s/Mbit.
    Backhaul,
    /// Zipf shape.
    Zipf,
    /// Viewport popularity distribution.
    Viewport,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Cache => "cache",
            Axis::Radius => "radius",
            Axis::SbsDelay => "sbs_delay",
            Axis::Backhaul => "backhaul",
            Axis::Zipf => "zipf",
            Axis::Viewport => "viewport",
        }
    }

    /// Documented range of the axis, used to flag extrapolation.
    pub fn range(self) -> Option<(f64, f64)> {
        match self {
            Axis::Cache => Some((5.0, 25.0)),
            Axis::Radius => Some((200.0, 300.0)),
            Axis::SbsDelay => Some((0.5, 2.5)),
            Axis::Backhaul => Some((5.0, 15.0)),
            Axis::Zipf => Some((0.5, 2.5)),
            Axis::Viewport => None,
        }
    }

    pub fn parse_values(self, text: &str) -> Result<Vec<AxisValue>> {
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| match self {
                Axis::Viewport => s.parse().map(AxisValue::Viewport),
                _ => s
                    .parse::<f64>()
                    .map(AxisValue::Number)
                    .map_err(|_| Error::config("values", format!("`{s}` is not a number"))),
            })
            .collect()
    }

    /// Applies one value to a base configuration.
    pub fn apply(self, base: &ScenarioConfig, value: AxisValue) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        match (self, value) {
            (Axis::Cache, AxisValue::Number(x)) => cfg.cache_fraction = x / 100.0,
            (Axis::Radius, AxisValue::Number(x)) => cfg.sbs_radius = x,
            (Axis::SbsDelay, AxisValue::Number(x)) => cfg.sbs_delay = x,
            (Axis::Backhaul, AxisValue::Number(x)) => cfg.backhaul_delay = x,
            (Axis::Zipf, AxisValue::Number(x)) => cfg.zipf_eta = x,
            (Axis::Viewport, AxisValue::Viewport(d)) => cfg.viewport_distribution = d,
            _ => return Err(Error::config("values", format!("value does not fit axis {}", self.name()))),
        }
        Ok(cfg)
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cache" => Ok(Axis::Cache),
            "radius" => Ok(Axis::Radius),
            "sbs_delay" | "sbs-delay" => Ok(Axis::SbsDelay),
            "backhaul" => Ok(Axis::Backhaul),
            "zipf" => Ok(Axis::Zipf),
            "viewport" => Ok(Axis::Viewport),
            other => Err(Error::config("axis", format!("unknown axis `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AxisValue {
    Number(f64),
    Viewport(ViewportDistribution),
}

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisValue::Number(x) => write!(f, "{x}"),
            AxisValue::Viewport(d) => write!(f, "{d}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub axis: Axis,
    pub values: Vec<AxisValue>,
    pub schemes: Vec<SchemeKind>,
    pub seeds: Vec<u64>,
    pub base: ScenarioConfig,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub realizations: usize,
    pub whole_frame_layers: bool,
}

impl SweepConfig {
    pub fn new(axis: Axis, values: Vec<AxisValue>, base: ScenarioConfig) -> Self {
        SweepConfig {
            axis,
            values,
            schemes: SchemeKind::ALL.to_vec(),
            seeds: (1..=10).collect(),
            base,
            jobs: 0,
            realizations: 1000,
            whole_frame_layers: false,
        }
    }

    /// Base configuration with the user population pinned across values:
    /// a radius sweep draws users within the smallest radius so every
    /// value sees the same users.
    fn pinned_base(&self) -> ScenarioConfig {
        let mut base = self.base.clone();
        if self.axis == Axis::Radius && base.user_placement_radius.is_none() {
            let min = self
                .values
                .iter()
                .filter_map(|v| match v {
                    AxisValue::Number(x) => Some(*x),
                    _ => None,
                })
                .fold(f64::INFINITY, f64::min);
            if min.is_finite() {
                base.user_placement_radius = Some(min);
            }
        }
        base
    }
}

/// One result row: a scheme at one axis value and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: String,
    pub axis: String,
    pub value: String,
    pub seed: u64,
    #[serde(rename = "D")]
    pub d: f64,
    pub chr: f64,
    pub soft_chr: f64,
    pub gap: f64,
    pub iters: usize,
    pub time_s: f64,
}

/// Runs every (scheme, value, seed) job and returns rows ordered by
/// scheme, value (as given) and seed.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if let Some((lo, hi)) = cfg.axis.range() {
        for v in &cfg.values {
            if let AxisValue::Number(x) = v {
                if *x < lo || *x > hi {
                    log::warn!("{} = {x} extrapolates beyond [{lo}, {hi}]", cfg.axis.name());
                }
            }
        }
    }
    let base = cfg.pinned_base();
    let mut jobs = Vec::new();
    for (si, &scheme) in cfg.schemes.iter().enumerate() {
        for (vi, &value) in cfg.values.iter().enumerate() {
            for &seed in &cfg.seeds {
                jobs.push((si, vi, seed, scheme, value));
            }
        }
    }
    let run = |&(si, vi, seed, scheme, value): &(usize, usize, u64, SchemeKind, AxisValue)| -> Result<((usize, usize, u64), SweepRow)> {
        let mut scfg = cfg.axis.apply(&base, value)?;
        scfg.seed = seed;
        let scenario = generate_scenario(&scfg)?;
        let start = Instant::now();
        let out = run_scheme(&scenario, scheme, &scfg.solver, cfg.whole_frame_layers, cfg.realizations)?;
        let time_s = start.elapsed().as_secs_f64();
        log::info!("{scheme} {}={value} seed {seed}: D {:.4} in {time_s:.2}s", cfg.axis.name(), out.metrics.d);
        Ok((
            (si, vi, seed),
            SweepRow {
                scheme: scheme.name().to_string(),
                axis: cfg.axis.name().to_string(),
                value: value.to_string(),
                seed,
                d: out.metrics.d,
                chr: out.metrics.chr,
                soft_chr: out.metrics.soft_chr,
                gap: out.max_gap(),
                iters: out.iterations(),
                time_s,
            },
        ))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let mut rows: Vec<((usize, usize, u64), SweepRow)> =
        pool.install(|| jobs.par_iter().map(run).collect::<Result<_>>())?;
    rows.sort_by_key(|r| r.0);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn write_rows<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and standard error over seeds of one (scheme, value) point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: String,
    pub axis: String,
    pub value: String,
    pub seeds: usize,
    pub d_mean: f64,
    pub d_se: f64,
    pub chr_mean: f64,
    pub chr_se: f64,
    pub soft_chr_mean: f64,
    pub soft_chr_se: f64,
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Groups rows by (scheme, value) in first-seen order.
pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, String, String)> = Vec::new();
    for r in rows {
        let k = (r.scheme.clone(), r.axis.clone(), r.value.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(scheme, axis, value)| {
            let group: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.scheme == scheme && r.value == value)
                .collect();
            let col = |f: fn(&SweepRow) -> f64| mean_se(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (d_mean, d_se) = col(|r| r.d);
            let (chr_mean, chr_se) = col(|r| r.chr);
            let (soft_chr_mean, soft_chr_se) = col(|r| r.soft_chr);
            SummaryRow {
                seeds: group.len(),
                scheme,
                axis,
                value,
                d_mean,
                d_se,
                chr_mean,
                chr_se,
                soft_chr_mean,
                soft_chr_se,
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-iteration bounds of the first GoP subproblem of the tile-level,
/// collaborative problem.
pub fn convergence_trace(scenario: &Scenario, params: &SolverParams) -> Result<Vec<TraceRow>> {
    let inst = Instance::tiled(scenario)?;
    let capacity: Vec<u64> = inst
        .capacity
        .iter()
        .map(|&c| gop_cache_budget(c, inst.gops, 0))
        .collect();
    let t = gop_delay_budget(inst.timing.t_app, inst.timing.t_disp, inst.gops, 0.0).min(inst.timing.t_app);
    let budgets = vec![t; inst.users() * inst.videos];
    Ok(solve_subproblem(&inst, 0, &capacity, &budgets, params)?.report.trace)
}

pub fn write_trace<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau", "UB", "LB", "gap", "sigma"])?;
    for r in trace {
        w.write_record([
            r.tau.to_string(),
            r.ub.to_string(),
            r.lb.to_string(),
            r.gap.to_string(),
            r.sigma.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_library_and_cache() {
        let s = generate_scenario(&ScenarioConfig::default()).unwrap();
        // 4 Hog Rider, 3 Roller Coaster, 3 Chariot Racer videos
        let per_gop = 4.0 * 12.0 * 0.135 + 3.0 * 12.0 * 0.375 + 3.0 * 12.0 * 0.304;
        assert_relative_eq!(s.library.total_size(), 30.0 * per_gop, epsilon = 1e-9);
        assert_relative_eq!(s.library.total_size(), 927.72, epsilon = 1e-9);
        for c in &s.network.cache_capacity {
            assert_relative_eq!(*c, 92.772, epsilon = 1e-9);
        }
        assert_eq!(s.users.len(), 30);
        assert_eq!(s.network.sbs_count(), 5);
        assert_eq!(s.library.class_of, vec![0, 0, 0, 0, 1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn users_lie_in_coverage() {
        let s = generate_scenario(&ScenarioConfig::default()).unwrap();
        for u in 0..s.users.len() {
            assert!(s.association.sbs_of(u).next().is_some());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = generate_scenario(&cfg).unwrap().to_json().unwrap();
        let b = generate_scenario(&cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = generate_scenario(&ScenarioConfig { seed: 2, ..cfg }).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_population_is_valid() {
        let s = generate_scenario(&ScenarioConfig { users: 0, ..Default::default() }).unwrap();
        assert!(s.users.is_empty());
    }

    #[test]
    fn bad_viewport_names_field() {
        let err = generate_scenario(&ScenarioConfig {
            viewport_cols: 5,
            ..Default::default()
        })
        .unwrap_err();
        assert!(err.to_string().contains("viewport_cols"));
    }

    #[test]
    fn axis_values_parse() {
        let v = Axis::Cache.parse_values("5, 10,15").unwrap();
        assert_eq!(v.len(), 3);
        let base = ScenarioConfig::default();
        assert_relative_eq!(Axis::Cache.apply(&base, v[1]).unwrap().cache_fraction, 0.10);
        let vp = Axis::Viewport.parse_values("bigauss,uniform,selective").unwrap();
        assert_eq!(vp[2], AxisValue::Viewport(ViewportDistribution::Selective));
        assert!("speed".parse::<Axis>().is_err());
        assert!(Axis::Zipf.parse_values("fast").is_err());
    }

    #[test]
    fn standard_error() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0]);
        assert_relative_eq!(m, 2.0);
        assert_relative_eq!(se, (1.0f64 / 3.0).sqrt());
    }

    #[test]
    fn class_blocks() {
        assert_eq!(class_assignment(3, &[0.4, 0.3, 0.3]), vec![0, 1, 2]);
        assert_eq!(class_assignment(1, &[1.0, 0.0, 0.0]), vec![0]);
    }
}
