//! Evaluation of policies at tile level: distortion reduction, cache hit
//! ratio, soft cache hit ratio, and an independent constraint checker.
//!
//! Coarse-grained schemes are mapped back to tiles per request. A request
//! for viewport `w` of video `v` wants every tile at the base layer and the
//! tiles of `w` at every enhancement layer. When the item carrying the
//! requested viewport is not delivered, an overlapping item of the same
//! video that the user receives from an SBS substitutes for it, covering the
//! overlap (largest overlap first, lowest viewport id on ties).

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Granularity, Instance};
use crate::model::{Scenario, Source};
use crate::policy::{GopRouting, Policies};
use crate::scheduler::playback_deadline;

/// Tile counts of one realized request, or a sum of them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoftCounts {
    pub delivered_base: u64,
    pub delivered_enh: u64,
    pub requested_base: u64,
    pub requested_enh: u64,
}

impl std::ops::AddAssign for SoftCounts {
    fn add_assign(&mut self, o: Self) {
        self.delivered_base += o.delivered_base;
        self.delivered_enh += o.delivered_enh;
        self.requested_base += o.requested_base;
        self.requested_enh += o.requested_enh;
    }
}

/// `(nd_b + nd_e) / (nr_b + nr_e)` over the pooled counts.
pub fn soft_cache_hit_ratio(counts: &[SoftCounts]) -> Result<f64> {
    let mut total = SoftCounts::default();
    for &c in counts {
        total += c;
    }
    let requested = total.requested_base + total.requested_enh;
    if requested == 0 {
        return Err(Error::Degenerate("no requested tiles".into()));
    }
    Ok((total.delivered_base + total.delivered_enh) as f64 / requested as f64)
}

/// Source of every (layer, tile) chunk, laid out `l * tiles + t`.
pub type TileSources = Vec<Source>;

/// Maps one user's routing of video `v` to the chunks that serve a request
/// for viewport `w`. Only requested chunks are meaningful.
#[allow(clippy::too_many_arguments)]
pub fn served_tiles(
    inst: &Instance,
    viewports: &[crate::model::Viewport],
    routing: &GopRouting,
    u: usize,
    v: usize,
    w: usize,
    substitute: bool,
    out: &mut TileSources,
) {
    let (tiles, layers) = (inst.tiles, inst.layers);
    out.clear();
    out.resize(tiles * layers, Source::None);
    let layout = &inst.layout[v];
    let vp = &viewports[w];
    match inst.granularity {
        Granularity::TileLayer => {
            for chain in &layout.chains {
                for &i in chain {
                    let it = &inst.items[i];
                    out[it.layer * tiles + it.slot] = routing.get(u, i);
                }
            }
        }
        Granularity::Versioned => {
            let own = routing.get(u, layout.chains[w][0]);
            let (src, with) = if own.is_delivered() {
                (own, Some(w))
            } else if substitute {
                best_substitute(viewports, w, |k| routing.get(u, layout.chains[k][0]))
                    .map_or((Source::None, None), |k| (routing.get(u, layout.chains[k][0]), Some(k)))
            } else {
                (Source::None, None)
            };
            if let Some(k) = with {
                for t in 0..tiles {
                    out[t] = src;
                }
                for &t in vp.tiles.iter().filter(|t| viewports[k].contains(**t)) {
                    for l in 1..layers {
                        out[l * tiles + t] = src;
                    }
                }
            }
        }
        Granularity::Layered => {
            let root = routing.get(u, layout.root.expect("layered videos have a root"));
            if !root.is_delivered() {
                return;
            }
            for t in 0..tiles {
                out[t] = root;
            }
            if layout.chains.is_empty() {
                return;
            }
            let with = if routing.get(u, layout.chains[w][0]).is_delivered() {
                Some(w)
            } else if substitute {
                best_substitute(viewports, w, |k| routing.get(u, layout.chains[k][0]))
            } else {
                None
            };
            if let Some(k) = with {
                for &i in &layout.chains[k] {
                    let s = routing.get(u, i);
                    if !s.is_delivered() {
                        break;
                    }
                    let l = inst.items[i].layer;
                    for &t in vp.tiles.iter().filter(|t| viewports[k].contains(**t)) {
                        out[l * tiles + t] = s;
                    }
                }
            }
        }
        Granularity::LayeredWholeFrame => {
            for &i in &layout.chains[0] {
                let s = routing.get(u, i);
                if !s.is_delivered() {
                    break;
                }
                let l = inst.items[i].layer;
                if l == 0 {
                    for t in 0..tiles {
                        out[t] = s;
                    }
                } else {
                    for &t in &vp.tiles {
                        out[l * tiles + t] = s;
                    }
                }
            }
        }
    }
}

/// The SBS-delivered item with the largest overlap with viewport `w`.
fn best_substitute(
    viewports: &[crate::model::Viewport],
    w: usize,
    source_of: impl Fn(usize) -> Source,
) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (k, vp) in viewports.iter().enumerate() {
        if k == w || !matches!(source_of(k), Source::Sbs(_)) {
            continue;
        }
        let overlap = vp.overlap(&viewports[w]);
        if overlap >= 1 && best.is_none_or(|(_, o)| overlap > o) {
            best = Some((k, overlap));
        }
    }
    best.map(|(k, _)| k)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Normalized expected distortion reduction.
    pub d: f64,
    /// Demand-weighted share of items served from an SBS.
    pub chr: f64,
    /// Realized tile hit ratio with substitution.
    pub soft_chr: f64,
    /// Realized tile hit ratio without substitution.
    pub realized_chr: f64,
}

/// Expected normalized distortion reduction of tile-level service.
pub fn distortion_reduction(scenario: &Scenario, inst: &Instance, policies: &Policies) -> Result<f64> {
    Ok(Evaluator::new(scenario, inst, policies)?.d)
}

/// Demand-weighted fraction of items (at the instance's granularity)
/// delivered from an SBS.
pub fn cache_hit_ratio(inst: &Instance, policies: &Policies) -> Result<f64> {
    let (mut hit, mut total) = (0.0, 0.0);
    for gr in &policies.routing.gops {
        for u in 0..inst.users() {
            for (i, it) in inst.items.iter().enumerate() {
                total += it.z;
                if matches!(gr.get(u, i), Source::Sbs(_)) {
                    hit += it.z;
                }
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::Degenerate("zero total demand".into()));
    }
    Ok(hit / total)
}

/// Per-request aggregates over GoPs: SBS-served tile counts with and
/// without substitution, indexed `[u][v][w]`.
struct Evaluator {
    d: f64,
    soft: Vec<Vec<Vec<(u64, u64)>>>,
    plain: Vec<Vec<Vec<(u64, u64)>>>,
}

impl Evaluator {
    fn new(scenario: &Scenario, inst: &Instance, policies: &Policies) -> Result<Self> {
        let demand = &scenario.demand;
        if !(demand.delta_total > 0.0) {
            return Err(Error::Degenerate("the normalizer is zero".into()));
        }
        let viewports = &demand.viewports;
        let (tiles, layers) = (inst.tiles, inst.layers);
        let users = inst.users();
        let mut soft = vec![vec![vec![(0u64, 0u64); viewports.len()]; inst.videos]; users];
        let mut plain = soft.clone();
        let mut served = Vec::new();
        let mut plain_served = Vec::new();
        let mut gain = 0.0;
        for gr in &policies.routing.gops {
            for u in 0..users {
                for v in 0..inst.videos {
                    let class = scenario.library.class(v);
                    let pv = demand.video_pmf[v];
                    for (w, vp) in viewports.iter().enumerate() {
                        let pw = demand.viewport_pmf[v][w];
                        served_tiles(inst, viewports, gr, u, v, w, true, &mut served);
                        served_tiles(inst, viewports, gr, u, v, w, false, &mut plain_served);
                        let mut useful = 0.0;
                        let count = |s: &TileSources, l: usize, t: usize| -> (bool, bool) {
                            let src = s[l * tiles + t];
                            (src.is_delivered(), matches!(src, Source::Sbs(_)))
                        };
                        let (mut sb, mut se, mut pb, mut pe) = (0, 0, 0, 0);
                        for t in 0..tiles {
                            let (d, h) = count(&served, 0, t);
                            if d {
                                useful += class.delta_per_tile[0];
                            }
                            sb += u64::from(h);
                            pb += u64::from(count(&plain_served, 0, t).1);
                        }
                        for &t in &vp.tiles {
                            for l in 1..layers {
                                let (d, h) = count(&served, l, t);
                                if d {
                                    useful += class.delta_per_tile[l];
                                }
                                se += u64::from(h);
                                pe += u64::from(count(&plain_served, l, t).1);
                            }
                        }
                        gain += pv * pw * useful;
                        let s = &mut soft[u][v][w];
                        s.0 += sb;
                        s.1 += se;
                        let p = &mut plain[u][v][w];
                        p.0 += pb;
                        p.1 += pe;
                    }
                }
            }
        }
        Ok(Evaluator {
            d: gain / demand.delta_total,
            soft,
            plain,
        })
    }
}

/// All metrics of one solved scheme. `realizations` random request
/// patterns (one video and viewport per user, held for every GoP) feed the
/// realized hit ratios.
pub fn evaluate(
    scenario: &Scenario,
    inst: &Instance,
    policies: &Policies,
    realizations: usize,
    seed: u64,
) -> Result<Metrics> {
    if inst.users() == 0 {
        return Err(Error::Degenerate("no users".into()));
    }
    let ev = Evaluator::new(scenario, inst, policies)?;
    let chr = cache_hit_ratio(inst, policies)?;
    let demand = &scenario.demand;
    let gops = inst.gops as u64;
    let tiles = inst.tiles as u64;
    let enh_layers = (inst.layers - 1) as u64;

    let videos = WeightedIndex::new(&demand.video_pmf)
        .map_err(|e| Error::Degenerate(format!("video popularity: {e}")))?;
    let viewports: Vec<WeightedIndex<f64>> = demand
        .viewport_pmf
        .iter()
        .map(|p| WeightedIndex::new(p).map_err(|e| Error::Degenerate(format!("viewport popularity: {e}"))))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x50f7_c4a2);
    let (mut soft_sum, mut plain_sum) = (0.0, 0.0);
    for _ in 0..realizations {
        let mut soft = SoftCounts::default();
        let mut plain = SoftCounts::default();
        for u in 0..inst.users() {
            let v = videos.sample(&mut rng);
            let w = viewports[v].sample(&mut rng);
            let requested_enh = gops * demand.viewports[w].tiles.len() as u64 * enh_layers;
            let (sb, se) = ev.soft[u][v][w];
            let (pb, pe) = ev.plain[u][v][w];
            soft += SoftCounts {
                delivered_base: sb,
                delivered_enh: se,
                requested_base: gops * tiles,
                requested_enh,
            };
            plain += SoftCounts {
                delivered_base: pb,
                delivered_enh: pe,
                requested_base: gops * tiles,
                requested_enh,
            };
        }
        soft_sum += soft_cache_hit_ratio(&[soft])?;
        plain_sum += soft_cache_hit_ratio(&[plain])?;
    }
    let r = realizations.max(1) as f64;
    Ok(Metrics {
        d: ev.d,
        chr,
        soft_chr: if realizations == 0 { 0.0 } else { soft_sum / r },
        realized_chr: if realizations == 0 { 0.0 } else { plain_sum / r },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Total cached size per SBS within its capacity.
    Capacity,
    /// SBS delivery needs coverage and a cached copy.
    CachedAndCovered,
    /// Every chunk comes from at most one known source.
    Unsplittable,
    /// A layer only with all lower layers.
    LayerPrefix,
    /// Cumulative delivery keeps up with playback.
    Timing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub detail: String,
    /// How far the constraint is exceeded (positive).
    pub excess: f64,
}

/// Checks every constraint family on assembled policies.
pub fn validate_policies(inst: &Instance, policies: &Policies) -> Vec<Violation> {
    let mut out = Vec::new();
    let gops = policies.cache.gops.len().min(policies.routing.gops.len());
    if policies.cache.gops.len() != inst.gops || policies.routing.gops.len() != inst.gops {
        out.push(Violation {
            constraint: Constraint::Unsplittable,
            detail: format!("policies cover {gops} GoPs, instance has {}", inst.gops),
            excess: 0.0,
        });
    }
    for n in 0..inst.sbs() {
        let used: f64 = policies.cache.gops.iter().map(|c| c.used_mbit(inst, n)).sum();
        if used > inst.capacity[n] + 1e-9 * (1.0 + inst.capacity[n]) {
            out.push(Violation {
                constraint: Constraint::Capacity,
                detail: format!("SBS {} caches {used:.6} Mbit of {:.6}", inst.sbs_ids[n], inst.capacity[n]),
                excess: used - inst.capacity[n],
            });
        }
    }
    let mut cumulative = vec![0.0; inst.users() * inst.videos];
    for g in 0..gops {
        let cache = &policies.cache.gops[g];
        let routing = &policies.routing.gops[g];
        for u in 0..inst.users() {
            for i in 0..inst.len() {
                let s = routing.get(u, i);
                let key = inst.key(g, i);
                if let Source::Sbs(n) = s {
                    if n >= inst.sbs() {
                        out.push(Violation {
                            constraint: Constraint::Unsplittable,
                            detail: format!("user {} gets {key:?} from unknown SBS {n}", inst.user_ids[u]),
                            excess: 1.0,
                        });
                        continue;
                    }
                    if !inst.association.covers(n, u) || !cache.is_cached(n, i) {
                        out.push(Violation {
                            constraint: Constraint::CachedAndCovered,
                            detail: format!(
                                "user {} gets {key:?} from SBS {} (covered {}, cached {})",
                                inst.user_ids[u],
                                inst.sbs_ids[n],
                                inst.association.covers(n, u),
                                cache.is_cached(n, i)
                            ),
                            excess: 1.0,
                        });
                    }
                }
                if s.is_delivered() {
                    if let Some(p) = inst.items[i].parent {
                        if !routing.get(u, p).is_delivered() {
                            out.push(Violation {
                                constraint: Constraint::LayerPrefix,
                                detail: format!(
                                    "user {} gets {key:?} without {:?}",
                                    inst.user_ids[u],
                                    inst.key(g, p)
                                ),
                                excess: 1.0,
                            });
                        }
                    }
                }
            }
            for v in 0..inst.videos {
                let c = &mut cumulative[u * inst.videos + v];
                *c += routing.video_delay(inst, u, v);
                let deadline = playback_deadline(&inst.timing, g);
                if *c > deadline + 1e-9 {
                    out.push(Violation {
                        constraint: Constraint::Timing,
                        detail: format!(
                            "user {} video {v}: {:.6} s delivered by GoP {g}, deadline {deadline:.6} s",
                            inst.user_ids[u], *c
                        ),
                        excess: *c - deadline,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_soft_hit_ratio() {
        let c = SoftCounts {
            delivered_base: 12,
            delivered_enh: 2,
            requested_base: 12,
            requested_enh: 4,
        };
        assert_eq!(soft_cache_hit_ratio(&[c]).unwrap(), 0.875);
        let base_only = SoftCounts { delivered_enh: 0, ..c };
        assert_eq!(soft_cache_hit_ratio(&[base_only]).unwrap(), 0.75);
        let all = SoftCounts { delivered_enh: 4, ..c };
        assert_eq!(soft_cache_hit_ratio(&[all]).unwrap(), 1.0);
        assert!(soft_cache_hit_ratio(&[SoftCounts::default()]).is_err());
    }
}
