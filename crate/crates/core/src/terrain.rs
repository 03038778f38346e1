//! Heightmaps, procedural terrain and foothold queries.
//!
//! Heights are samples on a regular grid: sample `(row, col)` sits at
//! `origin + (col * resolution, row * resolution)`, so columns run along x and rows
//! along y. Gap samples are flagged in a separate mask and never support a foot.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lip::Vec2;

// Grid coordinates within this distance of the map edge still count as inside.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HeightmapFile", into = "HeightmapFile")]
pub struct Heightmap {
    origin: Vec2,
    resolution: f64,
    rows: usize,
    cols: usize,
    heights: Vec<f64>,
    mask: Vec<bool>,
}

/// On-disk layout: `{origin:[x,y], resolution, rows, cols, heights:[...], mask:[...]}`,
/// row-major. `mask[i] == true` marks a non-supporting (gap) sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct HeightmapFile {
    origin: [f64; 2],
    resolution: f64,
    rows: usize,
    cols: usize,
    heights: Vec<f64>,
    #[serde(default)]
    mask: Vec<bool>,
}

impl TryFrom<HeightmapFile> for Heightmap {
    type Error = Error;

    fn try_from(f: HeightmapFile) -> Result<Self> {
        let mask = if f.mask.is_empty() {
            vec![false; f.heights.len()]
        } else {
            f.mask
        };
        Heightmap::with_mask(Vec2::new(f.origin[0], f.origin[1]), f.resolution, f.rows, f.cols, f.heights, mask)
    }
}

impl From<Heightmap> for HeightmapFile {
    fn from(h: Heightmap) -> Self {
        Self {
            origin: [h.origin.x, h.origin.y],
            resolution: h.resolution,
            rows: h.rows,
            cols: h.cols,
            heights: h.heights,
            mask: h.mask,
        }
    }
}

/// Foothold acceptance: the ground within `radius` of the foot must stay within
/// `max_deviation` of the height under its center, and snapping searches at most
/// `search_budget` away.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootholdCriteria {
    pub radius: f64,
    pub max_deviation: f64,
    pub search_budget: f64,
}

impl Default for FootholdCriteria {
    fn default() -> Self {
        Self {
            radius: 0.07,
            max_deviation: 0.03,
            search_budget: 0.5,
        }
    }
}

impl Heightmap {
    pub fn new(origin: Vec2, resolution: f64, rows: usize, cols: usize, heights: Vec<f64>) -> Result<Self> {
        let n = heights.len();
        Self::with_mask(origin, resolution, rows, cols, heights, vec![false; n])
    }

    pub fn with_mask(
        origin: Vec2,
        resolution: f64,
        rows: usize,
        cols: usize,
        heights: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::InvalidHeightmap(format!("resolution {resolution}")));
        }
        if !(origin.x.is_finite() && origin.y.is_finite()) {
            return Err(Error::InvalidHeightmap("non-finite origin".into()));
        }
        if rows == 0 || cols == 0 || rows.checked_mul(cols) != Some(heights.len()) {
            return Err(Error::InvalidHeightmap(format!(
                "{rows} x {cols} grid with {} heights",
                heights.len()
            )));
        }
        if mask.len() != heights.len() {
            return Err(Error::InvalidHeightmap(format!(
                "mask has {} entries for {} heights",
                mask.len(),
                heights.len()
            )));
        }
        if heights.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidHeightmap("non-finite height".into()));
        }
        Ok(Self {
            origin,
            resolution,
            rows,
            cols,
            heights,
            mask,
        })
    }

    pub fn flat(origin: Vec2, resolution: f64, rows: usize, cols: usize) -> Result<Self> {
        Self::new(origin, resolution, rows, cols, vec![0.0; rows * cols])
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn sample(&self, row: usize, col: usize) -> f64 {
        self.heights[row * self.cols + col]
    }

    pub fn is_gap(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.cols + col]
    }

    pub fn point(&self, row: usize, col: usize) -> Vec2 {
        self.origin + Vec2::new(col as f64 * self.resolution, row as f64 * self.resolution)
    }

    /// Continuous grid coordinates `(col, row)` of `p`, if inside the map.
    fn grid_coords(&self, p: Vec2) -> Option<(f64, f64)> {
        let u = (p.x - self.origin.x) / self.resolution;
        let v = (p.y - self.origin.y) / self.resolution;
        let inside = |c: f64, n: usize| c >= -EDGE_EPS && c <= (n - 1) as f64 + EDGE_EPS;
        if inside(u, self.cols) && inside(v, self.rows) {
            Some((u.clamp(0.0, (self.cols - 1) as f64), v.clamp(0.0, (self.rows - 1) as f64)))
        } else {
            None
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.grid_coords(p).is_some()
    }

    /// Bilinear interpolation of the four surrounding samples.
    pub fn height_at(&self, p: Vec2) -> Result<f64> {
        let (u, v) = self.grid_coords(p).ok_or(Error::OutOfBounds { x: p.x, y: p.y })?;
        let (c0, fx) = split_cell(u, self.cols);
        let (r0, fy) = split_cell(v, self.rows);
        let c1 = (c0 + 1).min(self.cols - 1);
        let r1 = (r0 + 1).min(self.rows - 1);
        let bottom = self.sample(r0, c0) * (1.0 - fx) + self.sample(r0, c1) * fx;
        let top = self.sample(r1, c0) * (1.0 - fx) + self.sample(r1, c1) * fx;
        Ok(bottom * (1.0 - fy) + top * fy)
    }

    /// True if the nearest sample to `p` is a gap.
    pub fn in_gap(&self, p: Vec2) -> bool {
        match self.grid_coords(p) {
            Some((u, v)) => self.is_gap(v.round() as usize, u.round() as usize),
            None => false,
        }
    }

    pub fn is_steppable(&self, p: Vec2, radius: f64, max_deviation: f64) -> bool {
        let Ok(center) = self.height_at(p) else {
            return false;
        };
        if self.in_gap(p) {
            return false;
        }
        // the whole foot disc has to be on the map
        let corners = [
            p + Vec2::new(-radius, -radius),
            p + Vec2::new(radius, radius),
        ];
        if !corners.iter().all(|c| self.contains(*c)) {
            return false;
        }
        let res = self.resolution;
        let c_lo = ((p.x - radius - self.origin.x) / res).ceil().max(0.0) as usize;
        let c_hi = (((p.x + radius - self.origin.x) / res).floor() as usize).min(self.cols - 1);
        let r_lo = ((p.y - radius - self.origin.y) / res).ceil().max(0.0) as usize;
        let r_hi = (((p.y + radius - self.origin.y) / res).floor() as usize).min(self.rows - 1);
        for r in r_lo..=r_hi {
            for c in c_lo..=c_hi {
                if (self.point(r, c) - p).norm() > radius {
                    continue;
                }
                if self.is_gap(r, c) || (self.sample(r, c) - center).abs() >= max_deviation {
                    return false;
                }
            }
        }
        true
    }

    /// Closest steppable point to `p`: `p` itself when already steppable, otherwise
    /// the nearest steppable grid sample within the search budget. Ties go to the
    /// smaller x, then the smaller y.
    pub fn nearest_steppable(&self, p: Vec2, criteria: &FootholdCriteria) -> Result<Vec2> {
        let FootholdCriteria {
            radius,
            max_deviation,
            search_budget,
        } = *criteria;
        if self.is_steppable(p, radius, max_deviation) {
            return Ok(p);
        }
        let res = self.resolution;
        let span = |lo: f64, origin: f64| ((lo - origin) / res).floor();
        let c_lo = span(p.x - search_budget, self.origin.x).max(0.0) as usize;
        let r_lo = span(p.y - search_budget, self.origin.y).max(0.0) as usize;
        let c_hi = span(p.x + search_budget, self.origin.x) + 1.0;
        let r_hi = span(p.y + search_budget, self.origin.y) + 1.0;
        let mut candidates = Vec::new();
        if c_hi >= 0.0 && r_hi >= 0.0 {
            let c_hi = (c_hi as usize).min(self.cols - 1);
            let r_hi = (r_hi as usize).min(self.rows - 1);
            for r in r_lo..=r_hi {
                for c in c_lo..=c_hi {
                    let q = self.point(r, c);
                    let d = (q - p).norm();
                    if d <= search_budget {
                        candidates.push((tie_key(d), q));
                    }
                }
            }
        }
        candidates.sort_by(|a, b| {
            a.0.cmp(&b.0)
                .then(a.1.x.total_cmp(&b.1.x))
                .then(a.1.y.total_cmp(&b.1.y))
        });
        candidates
            .into_iter()
            .map(|(_, q)| q)
            .find(|q| self.is_steppable(*q, radius, max_deviation))
            .ok_or(Error::NoSteppableGround {
                x: p.x,
                y: p.y,
                budget: search_budget,
            })
    }
}

// Distances closer than a nanometre compare equal so mirror-image candidates tie.
fn tie_key(d: f64) -> i64 {
    (d * 1e9).round() as i64
}

fn split_cell(u: f64, n: usize) -> (usize, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    let i = (u.floor() as usize).min(n - 2);
    (i, u - i as f64)
}

/// Axis-aligned region covered by a generated map (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Extent {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TerrainSpec {
    Flat,
    /// Smoothed value noise with heights in `[-amplitude, amplitude]`.
    Rough {
        amplitude: f64,
        correlation_length: f64,
        seed: u64,
    },
    /// Flat ground with non-supporting strips `[offset + k period, offset + k period + width)`
    /// along x. A width of at least one period leaves no ground past `offset`.
    Gap { width: f64, period: f64, offset: f64 },
}

pub const DEFAULT_GAP_OFFSET: f64 = 1.0;
pub const DEFAULT_ROUGH_AMPLITUDE: f64 = 0.05;
pub const DEFAULT_CORRELATION_LENGTH: f64 = 0.5;

impl TerrainSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidTerrain(msg));
        match *self {
            TerrainSpec::Flat => Ok(()),
            TerrainSpec::Rough {
                amplitude,
                correlation_length,
                ..
            } => {
                if !(amplitude.is_finite() && amplitude >= 0.0) {
                    return bad(format!("amplitude {amplitude}"));
                }
                if !(correlation_length.is_finite() && correlation_length > 0.0) {
                    return bad(format!("correlation length {correlation_length}"));
                }
                Ok(())
            }
            TerrainSpec::Gap { width, period, offset } => {
                if !(width.is_finite() && width > 0.0) {
                    return bad(format!("gap width {width}"));
                }
                if !(period.is_finite() && period > 0.0) {
                    return bad(format!("gap period {period}"));
                }
                if !offset.is_finite() {
                    return bad(format!("gap offset {offset}"));
                }
                Ok(())
            }
        }
    }

    /// Per-trial variant: rough terrain gets seed `seed + trial`, other kinds are unchanged.
    pub fn reseeded(&self, trial: u64) -> Self {
        match *self {
            TerrainSpec::Rough {
                amplitude,
                correlation_length,
                seed,
            } => TerrainSpec::Rough {
                amplitude,
                correlation_length,
                seed: seed.wrapping_add(trial),
            },
            other => other,
        }
    }

    /// Scalar severity used in sweep tables: amplitude for rough, width for gaps.
    pub fn severity(&self) -> f64 {
        match *self {
            TerrainSpec::Flat => 0.0,
            TerrainSpec::Rough { amplitude, .. } => amplitude,
            TerrainSpec::Gap { width, .. } => width,
        }
    }
}

impl fmt::Display for TerrainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TerrainSpec::Flat => write!(f, "flat"),
            TerrainSpec::Rough {
                amplitude,
                correlation_length,
                seed,
            } => write!(f, "rough:{amplitude}:{correlation_length}:{seed}"),
            TerrainSpec::Gap { width, period, offset } => write!(f, "gap:{width}:{period}:{offset}"),
        }
    }
}

impl FromStr for TerrainSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts[i]
                .parse::<f64>()
                .map_err(|_| Error::InvalidTerrain(format!("bad number {:?} in {s:?}", parts[i])))
        };
        let spec = match (parts[0], parts.len()) {
            ("flat", 1) => TerrainSpec::Flat,
            ("rough", 4) => TerrainSpec::Rough {
                amplitude: num(1)?,
                correlation_length: num(2)?,
                seed: parts[3]
                    .parse()
                    .map_err(|_| Error::InvalidTerrain(format!("bad seed {:?}", parts[3])))?,
            },
            ("gap", 3) | ("gap", 4) => TerrainSpec::Gap {
                width: num(1)?,
                period: num(2)?,
                offset: if parts.len() == 4 { num(3)? } else { DEFAULT_GAP_OFFSET },
            },
            _ => {
                return Err(Error::InvalidTerrain(format!(
                    "{s:?}; expected flat | rough:<amp>:<corr>:<seed> | gap:<width>:<period>[:<offset>]"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Build a heightmap covering `extent` at `resolution`. Deterministic in its inputs.
pub fn generate(spec: &TerrainSpec, extent: &Extent, resolution: f64) -> Result<Heightmap> {
    spec.validate()?;
    if !(resolution.is_finite() && resolution > 0.0) || !(extent.x_max > extent.x_min && extent.y_max > extent.y_min) {
        return Err(Error::InvalidHeightmap(format!("extent {extent:?} at resolution {resolution}")));
    }
    let cols = ((extent.x_max - extent.x_min) / resolution + 1e-9).floor() as usize + 1;
    let rows = ((extent.y_max - extent.y_min) / resolution + 1e-9).floor() as usize + 1;
    let origin = Vec2::new(extent.x_min, extent.y_min);
    let point = |r: usize, c: usize| origin + Vec2::new(c as f64 * resolution, r as f64 * resolution);

    match *spec {
        TerrainSpec::Flat => Heightmap::flat(origin, resolution, rows, cols),
        TerrainSpec::Rough {
            amplitude,
            correlation_length,
            seed,
        } => {
            let noise = ValueNoise::new(extent, correlation_length, seed);
            let mut heights = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    heights.push(amplitude * noise.at(point(r, c)));
                }
            }
            Heightmap::new(origin, resolution, rows, cols, heights)
        }
        TerrainSpec::Gap { width, period, offset } => {
            let mut mask = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    let x = point(r, c).x - offset;
                    mask.push(x >= 0.0 && (width >= period || x.rem_euclid(period) < width));
                }
            }
            Heightmap::with_mask(origin, resolution, rows, cols, vec![0.0; rows * cols], mask)
        }
    }
}

/// Lattice of uniform values in `[-1, 1]` spaced one correlation length apart,
/// blended with a smoothstep so the surface is C1 between lattice nodes.
struct ValueNoise {
    origin: Vec2,
    spacing: f64,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl ValueNoise {
    fn new(extent: &Extent, spacing: f64, seed: u64) -> Self {
        let nx = ((extent.x_max - extent.x_min) / spacing).ceil() as usize + 2;
        let ny = ((extent.y_max - extent.y_min) / spacing).ceil() as usize + 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..nx * ny).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self {
            origin: Vec2::new(extent.x_min, extent.y_min),
            spacing,
            nx,
            ny,
            values,
        }
    }

    fn at(&self, p: Vec2) -> f64 {
        let u = ((p.x - self.origin.x) / self.spacing).max(0.0);
        let v = ((p.y - self.origin.y) / self.spacing).max(0.0);
        let i = (u.floor() as usize).min(self.nx - 2);
        let j = (v.floor() as usize).min(self.ny - 2);
        let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
        let (fx, fy) = (smooth(u - i as f64), smooth(v - j as f64));
        let val = |i: usize, j: usize| self.values[j * self.nx + i];
        let bottom = val(i, j) * (1.0 - fx) + val(i + 1, j) * fx;
        let top = val(i, j + 1) * (1.0 - fx) + val(i + 1, j + 1) * fx;
        bottom * (1.0 - fy) + top * fy
    }
}
