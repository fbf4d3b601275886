#![allow(dead_code)]

use tilecache::model::Point;
use tilecache::scheduler::{gop_cache_budget, gop_delay_budget, playback_deadline};
use tilecache::{generate_scenario, Instance, Scenario, ScenarioConfig};

/// Small instances the joint oracle can enumerate. Three shapes keep the
/// cacheable slots at 16 or fewer: one SBS with two 4-tile videos, two SBSs
/// with one 4-tile video, and two SBSs with two 2-tile videos.
pub fn tiny_config(k: u64) -> ScenarioConfig {
    let (sbs, videos, rows) = match k % 3 {
        0 => (1, 2, 2),
        1 => (2, 1, 2),
        _ => (2, 2, 1),
    };
    let fractions = [0.08, 0.15, 0.25, 0.4, 0.6];
    ScenarioConfig {
        seed: 1000 + k,
        sbs,
        ring_radius: 150.0,
        sbs_radius: 300.0,
        users: 2 + (k % 2) as usize,
        videos,
        gops: 1,
        layers: 2,
        grid_rows: rows,
        grid_cols: 2,
        viewport_rows: 1,
        viewport_cols: 1,
        cache_fraction: fractions[(k / 3) as usize % fractions.len()],
        ..ScenarioConfig::default()
    }
}

pub fn tiny(k: u64) -> Scenario {
    generate_scenario(&tiny_config(k)).unwrap()
}

/// One SBS at the origin and users on top of it, with a single-tile grid of
/// Hog Rider videos.
pub fn single_cell(users: usize, videos: usize, layers: usize) -> ScenarioConfig {
    ScenarioConfig {
        seed: 7,
        sbs: 1,
        sbs_positions: vec![Point::new(0.0, 0.0)],
        user_positions: vec![Point::new(10.0, 0.0); users],
        users,
        videos,
        gops: 1,
        layers,
        grid_rows: 1,
        grid_cols: 1,
        viewport_rows: 1,
        viewport_cols: 1,
        class_mix: [1.0, 0.0, 0.0],
        ..ScenarioConfig::default()
    }
}

/// Cache and delay budgets of the first GoP of a fresh schedule.
pub fn first_gop_budgets(inst: &Instance) -> (Vec<u64>, Vec<f64>) {
    let capacity = inst
        .capacity
        .iter()
        .map(|&c| gop_cache_budget(c, inst.gops, 0))
        .collect();
    let t = gop_delay_budget(inst.timing.t_app, inst.timing.t_disp, inst.gops, 0.0)
        .min(playback_deadline(&inst.timing, 0));
    (capacity, vec![t; inst.users() * inst.videos])
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        (value - reference).abs() / reference
    } else {
        (value - reference).abs()
    }
}
