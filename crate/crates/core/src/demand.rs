//! Request probabilities: video popularity times viewport popularity folded
//! into a per-item request probability `z` and the normalizer `Δ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ItemKey, TileGrid, VideoLibrary, Viewport};

/// Zipf popularity `p_v ∝ 1 / v^eta` over videos ranked `1..=videos`.
pub fn zipf_pmf(videos: usize, eta: f64) -> Result<Vec<f64>> {
    if videos == 0 {
        return Err(Error::config("videos", "Zipf popularity needs at least one video"));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::config("zipf_eta", "shape must be finite and >= 0"));
    }
    let weights: Vec<f64> = (1..=videos).map(|v| (v as f64).powf(-eta)).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewportDistribution {
    /// Uniform over the configured anchor set; overlaps concentrate mass on
    /// central tiles.
    #[default]
    BiGauss,
    /// Uniform over every anchor position, wrapping in both directions, so
    /// every tile is equally popular.
    Uniform,
    /// Every user requests one seeded viewport per video.
    Selective,
}

impl std::str::FromStr for ViewportDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bigauss" | "bi_gauss" => Ok(Self::BiGauss),
            "uniform" => Ok(Self::Uniform),
            "selective" => Ok(Self::Selective),
            other => Err(Error::config("viewport_distribution", format!("unknown `{other}`"))),
        }
    }
}

impl std::fmt::Display for ViewportDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::BiGauss => "bigauss",
            Self::Uniform => "uniform",
            Self::Selective => "selective",
        })
    }
}

/// All non-wrapping blocks of the given size, row-major. On a 3x4 grid with
/// 2x2 blocks these are the six overlapping default viewports.
pub fn anchored_viewports(grid: &TileGrid, size: (usize, usize)) -> Result<Vec<Viewport>> {
    let (h, w) = size;
    if h == 0 || w == 0 || h > grid.rows || w > grid.cols {
        return Err(Error::config("viewport_size", "viewport does not fit the grid"));
    }
    let mut out = Vec::new();
    for r in 0..=grid.rows - h {
        for c in 0..=grid.cols - w {
            out.push(Viewport::block(out.len(), grid, (r, c), size)?);
        }
    }
    Ok(out)
}

/// Blocks anchored at every tile, wrapping around both edges.
pub fn wraparound_viewports(grid: &TileGrid, size: (usize, usize)) -> Result<Vec<Viewport>> {
    let mut out = Vec::with_capacity(grid.tiles());
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            out.push(Viewport::block(out.len(), grid, (r, c), size)?);
        }
    }
    Ok(out)
}

/// The viewport set a distribution draws from.
pub fn viewport_set(
    kind: ViewportDistribution,
    library: &VideoLibrary,
    size: (usize, usize),
) -> Result<Vec<Viewport>> {
    match kind {
        ViewportDistribution::BiGauss | ViewportDistribution::Selective => Ok(library.viewports.clone()),
        ViewportDistribution::Uniform => wraparound_viewports(&library.grid, size),
    }
}

/// Viewport popularity of one video over `viewports`.
pub fn viewport_pmf(
    kind: ViewportDistribution,
    viewports: &[Viewport],
    video: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if viewports.is_empty() {
        return Err(Error::Invalid(format!("{kind} viewport popularity needs viewports")));
    }
    let k = viewports.len();
    match kind {
        ViewportDistribution::BiGauss | ViewportDistribution::Uniform => Ok(vec![1.0 / k as f64; k]),
        ViewportDistribution::Selective => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e1e_c7ed);
            rng.set_stream(video as u64);
            let pick = rng.gen_range(0..k);
            let mut pmf = vec![0.0; k];
            pmf[pick] = 1.0;
            Ok(pmf)
        }
    }
}

/// Population-wide request model. `z` is identical for every user and GoP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub video_pmf: Vec<f64>,
    pub distribution: ViewportDistribution,
    pub viewports: Vec<Viewport>,
    /// `viewport_pmf[v][w]`.
    pub viewport_pmf: Vec<Vec<f64>>,
    /// `z[v][l][t]`: probability a user requests layer `l` of tile `t` of video `v`.
    pub z: Vec<Vec<Vec<f64>>>,
    pub users: usize,
    pub gops: usize,
    /// Expected achievable cumulative distortion reduction.
    pub delta_total: f64,
}

impl DemandModel {
    pub fn z(&self, _user: usize, key: &ItemKey) -> f64 {
        self.z[key.v][key.l][key.t]
    }

    /// Per-tile `z` of one video and layer laid out on the grid, for plotting.
    pub fn heatmap(&self, grid: &TileGrid, v: usize, l: usize) -> Vec<Vec<f64>> {
        (0..grid.rows)
            .map(|r| (0..grid.cols).map(|c| self.z[v][l][grid.index(r, c)]).collect())
            .collect()
    }
}

/// Folds video and viewport popularity into `z` and `Δ`.
///
/// A request for viewport `w` of video `v` asks for every tile at the base
/// layer and for the tiles of `w` at every enhancement layer.
pub fn build_demand(
    library: &VideoLibrary,
    users: usize,
    video_pmf: &[f64],
    distribution: ViewportDistribution,
    viewports: Vec<Viewport>,
    viewport_pmf: Vec<Vec<f64>>,
) -> Result<DemandModel> {
    if video_pmf.len() != library.videos || viewport_pmf.len() != library.videos {
        return Err(Error::Invalid("popularity vectors must cover every video".into()));
    }
    let tiles = library.tiles();
    let mut z = vec![vec![vec![0.0; tiles]; library.layers]; library.videos];
    for v in 0..library.videos {
        let pv = video_pmf[v];
        if viewport_pmf[v].len() != viewports.len() {
            return Err(Error::Invalid(format!("viewport pmf of video {v} has wrong length")));
        }
        let mut tile_mass = vec![0.0; tiles];
        for (w, &pw) in viewports.iter().zip(&viewport_pmf[v]) {
            for &t in &w.tiles {
                tile_mass[t] += pw;
            }
        }
        for t in 0..tiles {
            z[v][0][t] = pv;
            for l in 1..library.layers {
                z[v][l][t] = pv * tile_mass[t].min(1.0);
            }
        }
    }
    let mut per_gop = 0.0;
    for (v, zv) in z.iter().enumerate() {
        let class = library.class(v);
        for (l, zl) in zv.iter().enumerate() {
            per_gop += zl.iter().sum::<f64>() * class.delta_per_tile[l];
        }
    }
    Ok(DemandModel {
        video_pmf: video_pmf.to_vec(),
        distribution,
        viewports,
        viewport_pmf,
        z,
        users,
        gops: library.gops,
        delta_total: per_gop * (users * library.gops) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VideoClass;
    use approx::assert_relative_eq;

    fn library(videos: usize) -> VideoLibrary {
        let grid = TileGrid::new(3, 4).unwrap();
        let viewports = anchored_viewports(&grid, (2, 2)).unwrap();
        VideoLibrary::new(grid, 2, VideoClass::measured(), vec![0; videos], viewports).unwrap()
    }

    #[test]
    fn zipf_values() {
        assert_eq!(zipf_pmf(1, 2.0).unwrap(), vec![1.0]);
        let p = zipf_pmf(3, 1.0).unwrap();
        assert_relative_eq!(p[0], 6.0 / 11.0, epsilon = 1e-15);
        assert_relative_eq!(p[1], 3.0 / 11.0, epsilon = 1e-15);
        assert_relative_eq!(p[2], 2.0 / 11.0, epsilon = 1e-15);
        let h10: f64 = (1..=10).map(|k| 1.0 / k as f64).sum();
        assert_relative_eq!(h10, 2.928_968, epsilon = 1e-6);
        let p = zipf_pmf(10, 1.0).unwrap();
        assert_relative_eq!(p[0], 1.0 / h10, epsilon = 1e-15);
        assert_relative_eq!(p[0], 0.34142, epsilon = 1e-5);
        assert!(zipf_pmf(0, 1.0).is_err());
    }

    #[test]
    fn zipf_flat_at_zero_shape() {
        let p = zipf_pmf(4, 0.0).unwrap();
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn default_anchor_set() {
        let grid = TileGrid::new(3, 4).unwrap();
        let vps = anchored_viewports(&grid, (2, 2)).unwrap();
        assert_eq!(vps.len(), 6);
        assert_eq!(vps[0].tiles, vec![0, 1, 4, 5]);
        assert_eq!(vps[1].tiles, vec![1, 2, 5, 6]);
        // neighbouring viewports share two tiles
        assert_eq!(vps[0].overlap(&vps[1]), 2);
        assert_eq!(vps[5].tiles, vec![6, 7, 10, 11]);
    }

    #[test]
    fn pmf_kinds() {
        let lib = library(2);
        let six = viewport_pmf(ViewportDistribution::BiGauss, &lib.viewports, 0, 1).unwrap();
        assert!(six.iter().all(|&p| (p - 1.0 / 6.0).abs() < 1e-15));

        let sel = viewport_pmf(ViewportDistribution::Selective, &lib.viewports, 1, 7).unwrap();
        assert_eq!(sel.iter().filter(|&&p| p == 1.0).count(), 1);
        assert_eq!(sel.iter().filter(|&&p| p == 0.0).count(), 5);
        assert!(viewport_pmf(ViewportDistribution::Selective, &[], 0, 1).is_err());

        let all = viewport_set(ViewportDistribution::Uniform, &lib, (2, 2)).unwrap();
        assert_eq!(all.len(), 12);
        let uni = viewport_pmf(ViewportDistribution::Uniform, &all, 0, 1).unwrap();
        assert!(uni.iter().all(|&p| (p - 1.0 / 12.0).abs() < 1e-15));
        // every tile belongs to exactly four wrapped 2x2 blocks
        for t in 0..12 {
            assert_eq!(all.iter().filter(|w| w.contains(t)).count(), 4);
        }
    }

    #[test]
    fn z_from_overlap_counts() {
        let lib = library(2);
        let pmf = vec![vec![1.0 / 6.0; 6]; 2];
        let d = build_demand(
            &lib,
            3,
            &[0.5, 0.5],
            ViewportDistribution::BiGauss,
            lib.viewports.clone(),
            pmf,
        )
        .unwrap();
        // tile 1 (row 0, col 1) lies in viewports 0 and 1 only
        let key = ItemKey::new(0, 0, 1, 1);
        assert_relative_eq!(d.z(0, &key), 1.0 / 6.0, epsilon = 1e-15);
        for t in 0..12 {
            assert_eq!(d.z(2, &ItemKey::new(1, 1, 0, t)), 0.5);
        }
        // middle row, middle columns: four viewports
        assert_relative_eq!(d.z(0, &ItemKey::new(0, 0, 1, 5)), 0.5 * 4.0 / 6.0, epsilon = 1e-15);
        // corner: one viewport
        assert_relative_eq!(d.z(0, &ItemKey::new(0, 0, 1, 0)), 0.5 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn single_item_normalizer() {
        let grid = TileGrid::new(1, 1).unwrap();
        let vps = anchored_viewports(&grid, (1, 1)).unwrap();
        let lib = VideoLibrary::new(grid, 1, vec![VideoClass::hog_rider()], vec![0], vps.clone()).unwrap();
        let d = build_demand(&lib, 1, &[1.0], ViewportDistribution::BiGauss, vps, vec![vec![1.0]]).unwrap();
        assert_eq!(d.z[0][0][0], 1.0);
        assert_eq!(d.z[0][1][0], 1.0);
        assert_eq!(d.delta_total, 243.0);
    }

    #[test]
    fn enhancement_never_exceeds_base_and_center_dominates() {
        let lib = library(3);
        let p = zipf_pmf(3, 1.0).unwrap();
        let d = build_demand(
            &lib,
            1,
            &p,
            ViewportDistribution::BiGauss,
            lib.viewports.clone(),
            vec![vec![1.0 / 6.0; 6]; 3],
        )
        .unwrap();
        for v in 0..3 {
            for t in 0..12 {
                assert!(d.z[v][1][t] <= d.z[v][0][t]);
            }
            let count = |t: usize| lib.viewports.iter().filter(|w| w.contains(t)).count();
            for a in 0..12 {
                for b in 0..12 {
                    if count(a) > count(b) {
                        assert!(d.z[v][1][a] > d.z[v][1][b]);
                    }
                }
            }
        }
        let hm = d.heatmap(&lib.grid, 0, 1);
        assert_eq!(hm.len(), 3);
        assert_eq!(hm[1][1], d.z[0][1][5]);
    }
}
