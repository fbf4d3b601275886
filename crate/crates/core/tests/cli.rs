mod common;

use std::path::Path;
use std::process::Command;

use common::tiny_config;
use tilecache::experiments::AxisValue;
use tilecache::{generate_scenario, run_scheme, run_sweep, Axis, ScenarioConfig, SchemeKind, SweepConfig};

fn tilecache(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_tilecache"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn small_toml(dir: &Path) -> String {
    let text = "seed = 4\nsbs = 2\nusers = 5\nvideos = 2\ngops = 3\n";
    std::fs::write(dir.join("small.toml"), text).unwrap();
    "small.toml".into()
}

#[test]
fn solve_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_toml(dir.path());
    let out = tilecache(&["generate", "--config", &cfg, "--out", "s.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = tilecache(
        &["solve", "--scenario", "s.json", "--policies", "p.json", "--realizations", "20"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["D", "chr", "soft_chr", "gap"] {
        assert!(report[key].is_f64(), "missing {key}");
    }
    assert_eq!(report["violations"], 0);

    let out = tilecache(&["validate", "--scenario", "s.json", "--policies", "p.json"], dir.path());
    assert!(out.status.success());
    let violations: Vec<serde_json::Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert!(violations.is_empty());
}

#[test]
fn oracle_agrees_with_the_solver_on_a_tiny_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let s = generate_scenario(&tiny_config(2)).unwrap();
    std::fs::write(dir.path().join("tiny.json"), s.to_json().unwrap()).unwrap();
    let out = tilecache(&["oracle", "--scenario", "tiny.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r["relative_difference"].as_f64().unwrap() <= 0.01, "{r}");
}

#[test]
fn trace_writes_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_toml(dir.path());
    let out = tilecache(&["trace", "--config", &cfg, "--out", "t.csv"], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,UB,LB,gap,sigma"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!(!rows.is_empty());
    for r in &rows {
        assert!(r[1] >= r[2] - 1e-12, "UB below LB: {r:?}");
    }
}

#[test]
fn sweep_is_deterministic_apart_from_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_toml(dir.path());
    let args = [
        "sweep", "--config", &cfg, "--axis", "cache", "--values", "5,10", "--seeds", "2", "--realizations", "20",
        "--out",
    ];
    let mut csvs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let mut a = args.to_vec();
        a.push(name);
        let out = tilecache(&a, dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
        let time = header.iter().position(|h| *h == "time_s").unwrap();
        let stripped: Vec<String> = text
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(time);
                f.join(",")
            })
            .collect();
        csvs.push(stripped);
    }
    assert_eq!(csvs[0], csvs[1]);
    // five schemes, two values, two seeds, plus the header
    assert_eq!(csvs[0].len(), 21);
    assert!(dir.path().join("a.summary.csv").exists());
}

fn quick_base() -> ScenarioConfig {
    ScenarioConfig {
        seed: 2,
        sbs: 3,
        users: 8,
        videos: 3,
        gops: 2,
        ..ScenarioConfig::default()
    }
}

#[test]
fn cache_axis_has_one_row_per_value() {
    let values = Axis::Cache.parse_values("5,10,15,20,25").unwrap();
    let mut cfg = SweepConfig::new(Axis::Cache, values, quick_base());
    cfg.schemes = vec![SchemeKind::Jcnt, SchemeKind::Icnt];
    cfg.seeds = vec![2, 3];
    cfg.realizations = 10;
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 2 * 5 * 2);
    for scheme in ["jcnt", "icnt"] {
        for seed in [2, 3] {
            let n = rows.iter().filter(|r| r.scheme == scheme && r.seed == seed).count();
            assert_eq!(n, 5);
        }
    }
}

#[test]
fn independent_schemes_ignore_the_radius() {
    let values = vec![AxisValue::Number(200.0), AxisValue::Number(250.0), AxisValue::Number(300.0)];
    let mut cfg = SweepConfig::new(Axis::Radius, values, quick_base());
    cfg.schemes = vec![SchemeKind::Ic, SchemeKind::Icnt];
    cfg.seeds = vec![2];
    cfg.realizations = 10;
    let rows = run_sweep(&cfg).unwrap();
    for scheme in ["ic", "icnt"] {
        let d: Vec<f64> = rows.iter().filter(|r| r.scheme == scheme).map(|r| r.d).collect();
        assert_eq!(d.len(), 3);
        assert!(d.iter().all(|&x| x == d[0]), "{scheme}: {d:?}");
    }
}

#[test]
fn empty_population_has_no_metrics() {
    let s = generate_scenario(&ScenarioConfig {
        users: 0,
        ..quick_base()
    })
    .unwrap();
    assert!(run_scheme(&s, SchemeKind::Proposed, &s.solver, false, 10).is_err());
}
