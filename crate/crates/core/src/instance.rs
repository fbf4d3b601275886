//! Solver-facing view of a scenario: a per-GoP item catalog at a chosen
//! encoding granularity, together with the association and delay tables the
//! solvers read.
//!
//! Items are identical across GoPs (class-uniform sizes and deltas, and a
//! demand model that does not drift), so one catalog describes every GoP and
//! an item is addressed by `(g, index)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AssociationMatrix, ItemKey, Scenario, Timing};

/// How videos are cut into cacheable items.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// One item per (layer, tile).
    #[default]
    TileLayer,
    /// One single-tile item per viewport: the whole scene at base quality
    /// plus the viewport at full quality.
    Versioned,
    /// Single-tile layers: a whole-scene base item plus one enhancement item
    /// per (layer, viewport).
    Layered,
    /// Single-tile layers with whole-frame enhancement items.
    LayeredWholeFrame,
}

/// One cacheable item of a GoP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogItem {
    pub video: usize,
    /// `l` of the item key.
    pub layer: usize,
    /// `t` of the item key (tile, or viewport id for coarse encodings).
    pub slot: usize,
    /// Size in Mbits.
    pub size: f64,
    /// Size in integer kilobits.
    pub size_kbit: u64,
    pub delta: f64,
    /// Request probability (identical for every user).
    pub z: f64,
    /// Item that must be delivered before this one can be used.
    pub parent: Option<usize>,
    /// (layer, tile) chunks this item carries.
    pub carries: Vec<(usize, usize)>,
}

/// Routing structure of one video: an optional shared root followed by
/// chains whose heads depend on the root.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VideoLayout {
    pub items: Vec<usize>,
    pub root: Option<usize>,
    pub chains: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub granularity: Granularity,
    pub videos: usize,
    pub gops: usize,
    pub layers: usize,
    pub tiles: usize,
    pub items: Vec<CatalogItem>,
    pub layout: Vec<VideoLayout>,
    /// Scenario index of each local user.
    pub user_ids: Vec<usize>,
    /// Scenario index of each local SBS.
    pub sbs_ids: Vec<usize>,
    pub association: AssociationMatrix,
    /// s/Mbit, `[user][sbs]`.
    pub sbs_delay: Vec<Vec<f64>>,
    /// s/Mbit per user.
    pub backhaul_delay: Vec<f64>,
    /// Mbits per SBS.
    pub capacity: Vec<f64>,
    pub timing: Timing,
    /// Global normalizer of the distortion objective.
    pub delta_total: f64,
    #[serde(skip)]
    index: HashMap<(usize, usize, usize), usize>,
}

pub(crate) fn to_kbit(mbit: f64) -> u64 {
    (mbit * 1000.0).round().max(0.0) as u64
}

impl Instance {
    /// Tile/layer catalog with the scenario's own association.
    pub fn tiled(scenario: &Scenario) -> Result<Self> {
        Self::build(scenario, Granularity::TileLayer, scenario.association.clone())
    }

    pub fn build(
        scenario: &Scenario,
        granularity: Granularity,
        association: AssociationMatrix,
    ) -> Result<Self> {
        let lib = &scenario.library;
        let demand = &scenario.demand;
        let tiles = lib.tiles();
        let layers = lib.layers;
        let mut items = Vec::new();
        let mut layout = Vec::with_capacity(lib.videos);
        for v in 0..lib.videos {
            let class = lib.class(v);
            let pv = demand.video_pmf[v];
            let mut vl = VideoLayout::default();
            let push = |items: &mut Vec<CatalogItem>, item: CatalogItem| {
                items.push(item);
                items.len() - 1
            };
            match granularity {
                Granularity::TileLayer => {
                    for t in 0..tiles {
                        let mut chain = Vec::with_capacity(layers);
                        for l in 0..layers {
                            let parent = chain.last().copied();
                            let idx = push(
                                &mut items,
                                CatalogItem {
                                    video: v,
                                    layer: l,
                                    slot: t,
                                    size: class.size_per_tile[l],
                                    size_kbit: to_kbit(class.size_per_tile[l]),
                                    delta: class.delta_per_tile[l],
                                    z: demand.z[v][l][t],
                                    parent,
                                    carries: vec![(l, t)],
                                },
                            );
                            chain.push(idx);
                        }
                        vl.chains.push(chain);
                    }
                }
                Granularity::Versioned => {
                    for (w, vp) in demand.viewports.iter().enumerate() {
                        let enh_size: f64 = class.size_per_tile[1..].iter().sum();
                        let enh_delta: f64 = class.delta_per_tile[1..].iter().sum();
                        let k = vp.tiles.len() as f64;
                        let size = tiles as f64 * class.size_per_tile[0] + k * enh_size;
                        let mut carries: Vec<(usize, usize)> = (0..tiles).map(|t| (0, t)).collect();
                        for l in 1..layers {
                            carries.extend(vp.tiles.iter().map(|&t| (l, t)));
                        }
                        let idx = push(
                            &mut items,
                            CatalogItem {
                                video: v,
                                layer: 0,
                                slot: w,
                                size,
                                size_kbit: to_kbit(size),
                                delta: tiles as f64 * class.delta_per_tile[0] + k * enh_delta,
                                z: pv * demand.viewport_pmf[v][w],
                                parent: None,
                                carries,
                            },
                        );
                        vl.chains.push(vec![idx]);
                    }
                }
                Granularity::Layered | Granularity::LayeredWholeFrame => {
                    let base_size = tiles as f64 * class.size_per_tile[0];
                    let base = push(
                        &mut items,
                        CatalogItem {
                            video: v,
                            layer: 0,
                            slot: 0,
                            size: base_size,
                            size_kbit: to_kbit(base_size),
                            delta: tiles as f64 * class.delta_per_tile[0],
                            z: pv,
                            parent: None,
                            carries: (0..tiles).map(|t| (0, t)).collect(),
                        },
                    );
                    if granularity == Granularity::Layered {
                        vl.root = Some(base);
                        for (w, vp) in demand.viewports.iter().enumerate() {
                            let k = vp.tiles.len() as f64;
                            let mut chain = Vec::with_capacity(layers - 1);
                            for l in 1..layers {
                                let size = k * class.size_per_tile[l];
                                let parent = Some(chain.last().copied().unwrap_or(base));
                                let idx = push(
                                    &mut items,
                                    CatalogItem {
                                        video: v,
                                        layer: l,
                                        slot: w,
                                        size,
                                        size_kbit: to_kbit(size),
                                        delta: k * class.delta_per_tile[l],
                                        z: pv * demand.viewport_pmf[v][w],
                                        parent,
                                        carries: vp.tiles.iter().map(|&t| (l, t)).collect(),
                                    },
                                );
                                chain.push(idx);
                            }
                            if !chain.is_empty() {
                                vl.chains.push(chain);
                            }
                        }
                    } else {
                        // expected number of viewport tiles a request covers
                        let covered: f64 = demand
                            .viewports
                            .iter()
                            .zip(&demand.viewport_pmf[v])
                            .map(|(vp, p)| p * vp.tiles.len() as f64)
                            .sum();
                        let mut chain = vec![base];
                        for l in 1..layers {
                            let size = tiles as f64 * class.size_per_tile[l];
                            let parent = chain.last().copied();
                            let idx = push(
                                &mut items,
                                CatalogItem {
                                    video: v,
                                    layer: l,
                                    slot: 0,
                                    size,
                                    size_kbit: to_kbit(size),
                                    delta: covered * class.delta_per_tile[l],
                                    z: pv,
                                    parent,
                                    carries: (0..tiles).map(|t| (l, t)).collect(),
                                },
                            );
                            chain.push(idx);
                        }
                        vl.chains.push(chain);
                    }
                }
            }
            vl.items = (layout_start(&layout)..items.len()).collect();
            layout.push(vl);
        }
        let users = scenario.users.len();
        let mut inst = Instance {
            granularity,
            videos: lib.videos,
            gops: lib.gops,
            layers,
            tiles,
            items,
            layout,
            user_ids: (0..users).collect(),
            sbs_ids: (0..scenario.network.sbs_count()).collect(),
            association,
            sbs_delay: scenario.network.sbs_delay.clone(),
            backhaul_delay: scenario.network.backhaul_delay.clone(),
            capacity: scenario.network.cache_capacity.clone(),
            timing: scenario.timing,
            delta_total: scenario.demand.delta_total,
            index: HashMap::new(),
        };
        inst.rebuild_index();
        Ok(inst)
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .items
            .iter()
            .enumerate()
            .map(|(i, it)| ((it.video, it.layer, it.slot), i))
            .collect();
    }

    pub fn sbs(&self) -> usize {
        self.capacity.len()
    }

    pub fn users(&self) -> usize {
        self.user_ids.len()
    }

    /// Items per GoP.
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn key(&self, g: usize, i: usize) -> ItemKey {
        let it = &self.items[i];
        ItemKey::new(it.video, g, it.layer, it.slot)
    }

    /// Per-GoP index of a key, if the catalog has it.
    pub fn index_of(&self, key: &ItemKey) -> Option<usize> {
        if key.g >= self.gops {
            return None;
        }
        if self.index.is_empty() && !self.items.is_empty() {
            // deserialized instances carry no index
            return self
                .items
                .iter()
                .position(|it| (it.video, it.layer, it.slot) == (key.v, key.l, key.t));
        }
        self.index.get(&(key.v, key.l, key.t)).copied()
    }

    /// `z δ / Δ`, the objective weight of delivering item `i` to one user.
    pub fn unit_gain(&self, i: usize) -> f64 {
        let it = &self.items[i];
        if self.delta_total > 0.0 {
            it.z * it.delta / self.delta_total
        } else {
            0.0
        }
    }

    /// Delay of sending item `i` to user `u` from SBS `n` (or the MBS when `None`).
    pub fn delay(&self, u: usize, n: Option<usize>, i: usize) -> f64 {
        let d = match n {
            Some(n) => self.sbs_delay[u][n],
            None => self.backhaul_delay[u],
        };
        self.items[i].size * d
    }

    /// Keeps only the given local users and SBSs, preserving the normalizer.
    pub fn restrict(&self, users: &[usize], sbs: &[usize]) -> Result<Self> {
        if users.iter().any(|&u| u >= self.users()) || sbs.iter().any(|&n| n >= self.sbs()) {
            return Err(Error::OutOfBounds("restriction names unknown users or SBSs".into()));
        }
        let alpha = users
            .iter()
            .map(|&u| sbs.iter().map(|&n| self.association.alpha[u][n]).collect())
            .collect();
        let mut out = Instance {
            granularity: self.granularity,
            videos: self.videos,
            gops: self.gops,
            layers: self.layers,
            tiles: self.tiles,
            items: self.items.clone(),
            layout: self.layout.clone(),
            user_ids: users.iter().map(|&u| self.user_ids[u]).collect(),
            sbs_ids: sbs.iter().map(|&n| self.sbs_ids[n]).collect(),
            association: AssociationMatrix { sbs: sbs.len(), alpha },
            sbs_delay: users
                .iter()
                .map(|&u| sbs.iter().map(|&n| self.sbs_delay[u][n]).collect())
                .collect(),
            backhaul_delay: users.iter().map(|&u| self.backhaul_delay[u]).collect(),
            capacity: sbs.iter().map(|&n| self.capacity[n]).collect(),
            timing: self.timing,
            delta_total: self.delta_total,
            index: HashMap::new(),
        };
        out.rebuild_index();
        Ok(out)
    }

    /// Total tile-level size of one GoP of the catalog, in Mbits.
    pub fn gop_size(&self) -> f64 {
        self.items.iter().map(|it| it.size).sum()
    }
}

fn layout_start(layout: &[VideoLayout]) -> usize {
    layout
        .last()
        .and_then(|l| l.items.last())
        .map_or(0, |&i| i + 1)
}
