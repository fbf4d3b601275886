//! Domain vocabulary: tile grids, viewports, video classes, network geometry,
//! user association and the assembled [`Scenario`].

use serde::{Deserialize, Serialize};

use crate::demand::DemandModel;
use crate::error::{Error, Result};
use crate::lagrangian::SolverParams;

/// Rectangular tiling of an equirectangular frame. Tiles are numbered
/// row-major starting at 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileGrid {
    pub rows: usize,
    pub cols: usize,
}

impl TileGrid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::config("grid", "rows and cols must be at least 1"));
        }
        Ok(TileGrid { rows, cols })
    }

    pub fn tiles(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn row_col(&self, tile: usize) -> (usize, usize) {
        (tile / self.cols, tile % self.cols)
    }
}

/// A set of tiles a user watches.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Viewport {
    pub id: usize,
    /// Sorted, deduplicated tile indices.
    pub tiles: Vec<usize>,
}

impl Viewport {
    pub fn new(id: usize, mut tiles: Vec<usize>, grid: &TileGrid) -> Result<Self> {
        tiles.sort_unstable();
        tiles.dedup();
        if tiles.is_empty() {
            return Err(Error::Invalid(format!("viewport {id} has no tiles")));
        }
        if let Some(&t) = tiles.iter().find(|&&t| t >= grid.tiles()) {
            return Err(Error::OutOfBounds(format!(
                "viewport {id} tile {t} outside grid of {} tiles",
                grid.tiles()
            )));
        }
        Ok(Viewport { id, tiles })
    }

    /// A `height` x `width` block anchored at (`row`, `col`), wrapping around
    /// the grid edges. Blocks larger than the grid are rejected.
    pub fn block(
        id: usize,
        grid: &TileGrid,
        anchor: (usize, usize),
        size: (usize, usize),
    ) -> Result<Self> {
        let (height, width) = size;
        if height == 0 || width == 0 || height > grid.rows || width > grid.cols {
            return Err(Error::config(
                "viewport_size",
                format!(
                    "{height}x{width} viewport does not fit a {}x{} grid",
                    grid.rows, grid.cols
                ),
            ));
        }
        if anchor.0 >= grid.rows || anchor.1 >= grid.cols {
            return Err(Error::config(
                "viewport_anchors",
                format!("anchor {:?} outside the grid", anchor),
            ));
        }
        let mut tiles = Vec::with_capacity(height * width);
        for dr in 0..height {
            for dc in 0..width {
                let r = (anchor.0 + dr) % grid.rows;
                let c = (anchor.1 + dc) % grid.cols;
                tiles.push(grid.index(r, c));
            }
        }
        Viewport::new(id, tiles, grid)
    }

    pub fn contains(&self, tile: usize) -> bool {
        self.tiles.binary_search(&tile).is_ok()
    }

    pub fn overlap(&self, other: &Viewport) -> usize {
        self.tiles.iter().filter(|t| other.contains(**t)).count()
    }
}

/// Per-tile encoding statistics shared by every video of a class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoClass {
    pub name: String,
    /// Size of one tile of each layer, in Mbits.
    pub size_per_tile: Vec<f64>,
    /// Distortion reduction of one tile of each layer.
    pub delta_per_tile: Vec<f64>,
}

impl VideoClass {
    pub fn new(name: &str, size_per_tile: Vec<f64>, delta_per_tile: Vec<f64>) -> Result<Self> {
        if size_per_tile.is_empty() || size_per_tile.len() != delta_per_tile.len() {
            return Err(Error::config(
                "classes",
                format!("class `{name}` needs one size and one delta per layer"),
            ));
        }
        if size_per_tile.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::config("classes", format!("class `{name}` sizes must be > 0")));
        }
        if delta_per_tile.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::config("classes", format!("class `{name}` deltas must be >= 0")));
        }
        Ok(VideoClass {
            name: name.to_string(),
            size_per_tile,
            delta_per_tile,
        })
    }

    pub fn layers(&self) -> usize {
        self.size_per_tile.len()
    }

    pub fn hog_rider() -> Self {
        VideoClass::new("Hog Rider", vec![0.010, 0.125], vec![118.0, 125.0]).unwrap()
    }

    pub fn roller_coaster() -> Self {
        VideoClass::new("Roller Coaster", vec![0.208, 0.167], vec![292.0, 298.0]).unwrap()
    }

    pub fn chariot_racer() -> Self {
        VideoClass::new("Chariot Racer", vec![0.029, 0.275], vec![187.0, 192.0]).unwrap()
    }

    /// The three measured sequences, in the order used by the default class mix.
    pub fn measured() -> Vec<Self> {
        vec![Self::hog_rider(), Self::roller_coaster(), Self::chariot_racer()]
    }
}

/// Identity of a cacheable chunk: video, GoP, layer and tile (all 0-based).
///
/// Coarser encodings reuse the same key space: a whole-scene version of
/// viewport `w` is `(v, g, 0, w)`, a single-tile base layer is `(v, g, 0, 0)`
/// and the viewport enhancement of layer `l` is `(v, g, l, w)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemKey {
    pub v: usize,
    pub g: usize,
    pub l: usize,
    pub t: usize,
}

impl ItemKey {
    pub fn new(v: usize, g: usize, l: usize, t: usize) -> Self {
        ItemKey { v, g, l, t }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoLibrary {
    pub videos: usize,
    pub gops: usize,
    pub layers: usize,
    pub grid: TileGrid,
    pub classes: Vec<VideoClass>,
    /// Class index of every video.
    pub class_of: Vec<usize>,
    /// Candidate viewports (the configured anchor set).
    pub viewports: Vec<Viewport>,
}

impl VideoLibrary {
    pub fn new(
        grid: TileGrid,
        gops: usize,
        classes: Vec<VideoClass>,
        class_of: Vec<usize>,
        viewports: Vec<Viewport>,
    ) -> Result<Self> {
        if gops == 0 {
            return Err(Error::config("gops", "must be at least 1"));
        }
        let layers = classes
            .first()
            .map(VideoClass::layers)
            .ok_or_else(|| Error::config("classes", "at least one class is required"))?;
        if classes.iter().any(|c| c.layers() != layers) {
            return Err(Error::config("classes", "all classes must have the same layer count"));
        }
        if let Some(&c) = class_of.iter().find(|&&c| c >= classes.len()) {
            return Err(Error::config("class_of", format!("unknown class index {c}")));
        }
        for w in &viewports {
            if w.tiles.iter().any(|&t| t >= grid.tiles()) {
                return Err(Error::config("viewports", format!("viewport {} exceeds grid", w.id)));
            }
        }
        Ok(VideoLibrary {
            videos: class_of.len(),
            gops,
            layers,
            grid,
            classes,
            class_of,
            viewports,
        })
    }

    pub fn tiles(&self) -> usize {
        self.grid.tiles()
    }

    pub fn class(&self, v: usize) -> &VideoClass {
        &self.classes[self.class_of[v]]
    }

    fn check(&self, key: &ItemKey) -> Result<()> {
        if key.v >= self.videos || key.g >= self.gops || key.l >= self.layers || key.t >= self.tiles() {
            return Err(Error::OutOfBounds(format!(
                "{key:?} outside library of {} videos, {} GoPs, {} layers, {} tiles",
                self.videos,
                self.gops,
                self.layers,
                self.tiles()
            )));
        }
        Ok(())
    }

    /// Size of a tile-layer chunk in Mbits.
    pub fn item_size(&self, key: &ItemKey) -> Result<f64> {
        self.check(key)?;
        Ok(self.class(key.v).size_per_tile[key.l])
    }

    /// Distortion reduction of a tile-layer chunk.
    pub fn item_delta(&self, key: &ItemKey) -> Result<f64> {
        self.check(key)?;
        Ok(self.class(key.v).delta_per_tile[key.l])
    }

    /// Size of one GoP of video `v` at all layers and tiles, in Mbits.
    pub fn gop_size(&self, v: usize) -> f64 {
        self.class(v).size_per_tile.iter().sum::<f64>() * self.tiles() as f64
    }

    /// Total library size in Mbits.
    pub fn total_size(&self) -> f64 {
        (0..self.videos).map(|v| self.gop_size(v)).sum::<f64>() * self.gops as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub sbs_pos: Vec<Point>,
    /// Coverage radius of each SBS in meters.
    pub sbs_radius: Vec<f64>,
    pub mbs_pos: Point,
    pub mbs_radius: f64,
    /// Cache capacity of each SBS in Mbits.
    pub cache_capacity: Vec<f64>,
    /// Transmission delay in s/Mbit, indexed `[user][sbs]`.
    pub sbs_delay: Vec<Vec<f64>>,
    /// Backhaul delay in s/Mbit per user.
    pub backhaul_delay: Vec<f64>,
}

impl Network {
    pub fn sbs_count(&self) -> usize {
        self.sbs_pos.len()
    }

    /// Checks dimensions and the delay ordering (backhaul strictly slower).
    pub fn validate(&self, users: usize) -> Result<()> {
        let n = self.sbs_count();
        if self.sbs_radius.len() != n || self.cache_capacity.len() != n {
            return Err(Error::Invalid("per-SBS vectors disagree on SBS count".into()));
        }
        if self.sbs_delay.len() != users || self.backhaul_delay.len() != users {
            return Err(Error::Invalid("delay tables disagree on user count".into()));
        }
        if self.cache_capacity.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::config("cache_capacity", "must be >= 0"));
        }
        if self.sbs_radius.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::config("sbs_radius", "must be finite and >= 0"));
        }
        for (u, row) in self.sbs_delay.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Invalid(format!("sbs_delay row {u} has wrong length")));
            }
            if row.iter().any(|d| !(*d > 0.0) || *d >= self.backhaul_delay[u]) {
                return Err(Error::config(
                    "backhaul_delay",
                    format!("user {u}: backhaul delay must exceed every positive SBS delay"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UserPopulation {
    pub positions: Vec<Point>,
}

impl UserPopulation {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Binary user/SBS coverage. The MBS column is implicit: every user reaches it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationMatrix {
    pub sbs: usize,
    /// `alpha[u][n]` for SBS `n`.
    pub alpha: Vec<Vec<bool>>,
}

impl AssociationMatrix {
    pub fn users(&self) -> usize {
        self.alpha.len()
    }

    pub fn covers(&self, n: usize, u: usize) -> bool {
        self.alpha[u][n]
    }

    /// SBSs covering user `u`, in index order.
    pub fn sbs_of(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.alpha[u]
            .iter()
            .enumerate()
            .filter_map(|(n, &a)| a.then_some(n))
    }

    /// Users covered by SBS `n`.
    pub fn users_of(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.alpha
            .iter()
            .enumerate()
            .filter_map(move |(u, row)| row[n].then_some(u))
    }

    /// Entry of the full `(N+1)`-column matrix; column `N` is the MBS.
    pub fn alpha_full(&self, n: usize, u: usize) -> bool {
        n == self.sbs || self.alpha[u][n]
    }
}

/// Coverage by distance: `alpha[u][n] = 1` iff the user lies within `r_n`.
pub fn build_association(network: &Network, users: &UserPopulation) -> AssociationMatrix {
    let alpha = users
        .positions
        .iter()
        .map(|p| {
            network
                .sbs_pos
                .iter()
                .zip(&network.sbs_radius)
                .map(|(s, &r)| p.distance(s) <= r)
                .collect()
        })
        .collect();
    AssociationMatrix {
        sbs: network.sbs_count(),
        alpha,
    }
}

/// Keeps, for each user, only the nearest covering SBS (lowest index on ties).
pub fn restrict_to_nearest(
    association: &AssociationMatrix,
    network: &Network,
    users: &UserPopulation,
) -> AssociationMatrix {
    let alpha = association
        .alpha
        .iter()
        .zip(&users.positions)
        .map(|(row, p)| {
            let mut best: Option<(usize, f64)> = None;
            for (n, _) in row.iter().enumerate().filter(|(_, &a)| a) {
                let d = p.distance(&network.sbs_pos[n]);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((n, d));
                }
            }
            (0..row.len()).map(|n| best.is_some_and(|(b, _)| b == n)).collect()
        })
        .collect();
    AssociationMatrix {
        sbs: association.sbs,
        alpha,
    }
}

/// Delivery source of one chunk to one user.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    #[default]
    None,
    Sbs(usize),
    Mbs,
}

impl Source {
    pub fn is_delivered(self) -> bool {
        !matches!(self, Source::None)
    }

    pub fn sbs(self) -> Option<usize> {
        match self {
            Source::Sbs(n) => Some(n),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Playback (start-up) delay in seconds.
    pub t_app: f64,
    /// Display time of one GoP in seconds.
    pub t_disp: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            t_app: 1.0,
            t_disp: 1.0,
        }
    }
}

/// One complete experiment input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub library: VideoLibrary,
    pub network: Network,
    pub users: UserPopulation,
    pub association: AssociationMatrix,
    pub demand: DemandModel,
    pub timing: Timing,
    pub seed: u64,
    pub solver: SolverParams,
}

impl Scenario {
    /// Checks that every component agrees on dimensions.
    pub fn validate(&self) -> Result<()> {
        let users = self.users.len();
        self.network.validate(users)?;
        if self.association.users() != users || self.association.sbs != self.network.sbs_count() {
            return Err(Error::Invalid("association matrix has wrong dimensions".into()));
        }
        if self.demand.video_pmf.len() != self.library.videos {
            return Err(Error::Invalid("demand video pmf has wrong length".into()));
        }
        if self.timing.t_app < 0.0 || self.timing.t_disp < 0.0 {
            return Err(Error::config("timing", "t_app and t_disp must be >= 0"));
        }
        self.solver.validate()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }
}
