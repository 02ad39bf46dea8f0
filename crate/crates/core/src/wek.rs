//! Wireless environment knowledge matrices.
//!
//! A material map is partitioned into B×B blocks; each block collapses to a
//! single permittivity-weighted value, and the Tx–Rx great-circle distance
//! rides along as a side input. A 960×540 image shrinks to a matrix of a few
//! hundred cells, which is what makes the downstream network lightweight.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::seeds;
use crate::taxonomy::{Material, MaterialMap};

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Upper bound of the uniform draw used for unknown-material pixels.
pub const OTHER_MAX: f64 = 0.1;

/// Relative permittivity per material class.
///
/// Point values sit mid-range of the published per-material spans; override
/// them through the config file when a different reading is wanted.
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivityTable {
    /// Indexed by `Material::known_index`.
    eps: [f64; 4],
}

impl Default for PermittivityTable {
    fn default() -> PermittivityTable {
        PermittivityTable { eps: [1.8, 7.85, 4.0, 2.6] }
    }
}

impl PermittivityTable {
    /// All ε_r must exceed 1 (free space is the reference medium).
    pub fn new(cement: f64, metal: f64, wood: f64, asphalt: f64) -> Result<PermittivityTable> {
        let eps = [cement, metal, wood, asphalt];
        for (e, m) in eps.iter().zip(Material::KNOWN) {
            if !(e.is_finite() && *e > 1.0) {
                return Err(Error::config(format!("permittivity for {m} must be > 1, got {e}")));
            }
        }
        Ok(PermittivityTable { eps })
    }

    /// ε_r for a known material; `Material::None` has no permittivity.
    pub fn get(&self, material: Material) -> Result<f64> {
        material
            .known_index()
            .map(|i| self.eps[i])
            .ok_or_else(|| Error::domain("no permittivity for material \"none\""))
    }

    pub fn min_eps(&self) -> f64 {
        self.eps.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eps(&self) -> f64 {
        self.eps.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Deserialize)]
struct PermittivityFile {
    cement: Option<f64>,
    metal: Option<f64>,
    wood: Option<f64>,
    asphalt: Option<f64>,
}

/// Parses a `material = eps` file; absent materials keep their defaults.
pub fn parse_permittivity(text: &str) -> Result<PermittivityTable> {
    let file: PermittivityFile =
        toml::from_str(text).map_err(|e| Error::config(format!("permittivity: {e}")))?;
    let d = PermittivityTable::default();
    PermittivityTable::new(
        file.cement.unwrap_or(d.eps[0]),
        file.metal.unwrap_or(d.eps[1]),
        file.wood.unwrap_or(d.eps[2]),
        file.asphalt.unwrap_or(d.eps[3]),
    )
}

pub fn load_permittivity(path: &Path) -> Result<PermittivityTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_permittivity(&text)
}

/// Block partition of an H×W image: side length and block counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGrid {
    pub block: usize,
    pub ny: usize,
    pub nx: usize,
}

/// Floor partition; trailing pixels that do not fill a block are discarded.
pub fn partition(height: usize, width: usize, block: usize) -> Result<BlockGrid> {
    if block == 0 || block > height || block > width {
        return Err(Error::domain(format!(
            "block size {block} out of range for {height}x{width} image"
        )));
    }
    Ok(BlockGrid { block, ny: height / block, nx: width / block })
}

/// Latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
pub struct GeoCoord {
    pub lat: f64,
    pub lon: f64,
}

impl GeoCoord {
    pub fn new(lat: f64, lon: f64) -> Result<GeoCoord> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::domain(format!("coordinate ({lat}, {lon}) out of range")));
        }
        Ok(GeoCoord { lat, lon })
    }
}

/// Great-circle distance in meters between two coordinates.
pub fn haversine(p1: GeoCoord, p2: GeoCoord) -> f64 {
    let phi1 = p1.lat.to_radians();
    let phi2 = p2.lat.to_radians();
    let dphi = (p2.lat - p1.lat).to_radians();
    let dlam = (p2.lon - p1.lon).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlam / 2.0).sin().powi(2);
    // Rounding can push a marginally outside [0, 1] near antipodes.
    let a = a.clamp(0.0, 1.0);
    EARTH_RADIUS_M * 2.0 * a.sqrt().asin()
}

/// Pixel counts of one block: known materials plus the unknown remainder.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlockCounts {
    /// Indexed by `Material::known_index`.
    pub known: [usize; 4],
    pub other: usize,
}

impl BlockCounts {
    pub fn get(&self, material: Material) -> usize {
        match material.known_index() {
            Some(i) => self.known[i],
            None => self.other,
        }
    }

    pub fn total(&self) -> usize {
        self.known.iter().sum::<usize>() + self.other
    }
}

/// Pixel counts over the B×B window at block row `i`, block column `j`.
pub fn block_counts(map: &MaterialMap, grid: BlockGrid, i: usize, j: usize) -> Result<BlockCounts> {
    if i >= grid.ny || j >= grid.nx {
        return Err(Error::domain(format!(
            "block ({i}, {j}) outside {}x{} grid",
            grid.ny, grid.nx
        )));
    }
    let mut counts = BlockCounts::default();
    for r in i * grid.block..(i + 1) * grid.block {
        for c in j * grid.block..(j + 1) * grid.block {
            match map.get(r, c).known_index() {
                Some(k) => counts.known[k] += 1,
                None => counts.other += 1,
            }
        }
    }
    Ok(counts)
}

/// Permittivity-weighted block value.
///
/// V = Σ_k (count_k / total)·ε_k + (other / total)·r, where `r` is the
/// block's uniform draw from [0, 0.1). Blocks without unknown pixels ignore
/// `r` entirely, so their value is seed-independent.
pub fn block_value(
    counts: &BlockCounts,
    total: usize,
    eps: &PermittivityTable,
    r: f64,
) -> Result<f64> {
    if total == 0 {
        return Err(Error::domain("block total must be positive"));
    }
    if counts.total() != total {
        return Err(Error::domain(format!(
            "block counts sum to {}, expected {total}",
            counts.total()
        )));
    }
    debug_assert!((0.0..OTHER_MAX).contains(&r), "draw {r} outside [0, {OTHER_MAX})");
    let mut v = 0.0;
    for (k, material) in Material::KNOWN.into_iter().enumerate() {
        if counts.known[k] > 0 {
            v += counts.known[k] as f64 / total as f64 * eps.get(material)?;
        }
    }
    Ok(v + counts.other as f64 / total as f64 * r)
}

/// The network's environment input: block values plus Tx–Rx distance.
#[derive(Debug, Clone, PartialEq)]
pub struct WekMatrix {
    pub ny: usize,
    pub nx: usize,
    /// Row-major, `ny * nx` entries.
    pub values: Vec<f64>,
    pub block: usize,
    pub source_height: usize,
    pub source_width: usize,
    pub distance_m: f64,
    pub seed: u64,
}

impl WekMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nx + j]
    }
}

/// Uniform draw in [0, 0.1) for block counter `index`, independent of
/// evaluation order.
fn other_draw(seed: u64, index: u64) -> f64 {
    seeds::unit_f64(seeds::derive(seed, "wek-other", index)) * OTHER_MAX
}

/// Builds the full matrix: one value per block, one independent draw per
/// block for unknown pixels, distance from the Haversine formula.
pub fn build_wek(
    map: &MaterialMap,
    block: usize,
    eps: &PermittivityTable,
    tx: GeoCoord,
    rx: GeoCoord,
    seed: u64,
) -> Result<WekMatrix> {
    let grid = partition(map.height, map.width, block)?;
    let mut values = Vec::with_capacity(grid.ny * grid.nx);
    for i in 0..grid.ny {
        for j in 0..grid.nx {
            let counts = block_counts(map, grid, i, j)?;
            let r = other_draw(seed, (i * grid.nx + j) as u64);
            values.push(block_value(&counts, block * block, eps, r)?);
        }
    }
    Ok(WekMatrix {
        ny: grid.ny,
        nx: grid.nx,
        values,
        block,
        source_height: map.height,
        source_width: map.width,
        distance_m: haversine(tx, rx),
        seed,
    })
}

/// Element-count reduction from image to matrix, in percent.
pub fn eir3(height: usize, width: usize, grid: BlockGrid) -> f64 {
    debug_assert_eq!(grid.ny, height / grid.block);
    debug_assert_eq!(grid.nx, width / grid.block);
    (1.0 - (grid.ny * grid.nx) as f64 / (height * width) as f64) * 100.0
}

/// Reflection coefficient conventions exposed side by side.
///
/// `Standard` is the textbook Fresnel form and the default everywhere.
/// `AsPrinted` reproduces the source formulas verbatim, including their
/// horizontal-polarization sum (which is not a ratio and not bounded by 1);
/// it exists for comparison, nothing downstream consumes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FresnelConvention {
    Standard,
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    Horizontal,
    Vertical,
}

/// Lookup query for a material's reflection coefficient.
#[derive(Debug, Clone, Copy)]
pub struct ReflectionQuery {
    pub material: Material,
    /// Incidence angle from the surface normal, radians in [0, π/2).
    pub theta: f64,
    pub polarization: Polarization,
    pub convention: FresnelConvention,
}

/// Real reflection coefficient for relative permittivity `eps_r` at
/// incidence angle `theta` (radians from the normal).
pub fn fresnel(
    theta: f64,
    eps_r: f64,
    polarization: Polarization,
    convention: FresnelConvention,
) -> Result<f64> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::domain(format!("incidence angle {theta} outside [0, pi/2)")));
    }
    if !(eps_r.is_finite() && eps_r >= 1.0) {
        return Err(Error::domain(format!("relative permittivity {eps_r} below 1")));
    }
    let cos = theta.cos();
    let root = (eps_r - theta.sin().powi(2)).sqrt();
    Ok(match (convention, polarization) {
        (FresnelConvention::Standard, Polarization::Horizontal) => (cos - root) / (cos + root),
        (FresnelConvention::Standard, Polarization::Vertical) => {
            (eps_r * cos - root) / (eps_r * cos + root)
        }
        (FresnelConvention::AsPrinted, Polarization::Horizontal) => eps_r * cos + root,
        (FresnelConvention::AsPrinted, Polarization::Vertical) => (cos + root) / (cos - root),
    })
}

pub fn reflection_coeff(q: &ReflectionQuery, eps: &PermittivityTable) -> Result<f64> {
    fresnel(q.theta, eps.get(q.material)?, q.polarization, q.convention)
}

// --- matrix files -----------------------------------------------------------

impl WekMatrix {
    /// Serializes as CSV: one metadata line `ny,nx,B,H,W,distance_m,seed`,
    /// then `ny` rows of `nx` floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            self.ny,
            self.nx,
            self.block,
            self.source_height,
            self.source_width,
            self.distance_m,
            self.seed
        );
        for i in 0..self.ny {
            let row: Vec<String> =
                (0..self.nx).map(|j| format!("{}", self.get(i, j))).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<WekMatrix> {
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| Error::Dataset("empty matrix file".into()))?;
        let fields: Vec<&str> = head.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::Dataset(format!(
                "matrix metadata has {} fields, expected 7",
                fields.len()
            )));
        }
        fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
            s.trim()
                .parse()
                .map_err(|_| Error::Dataset(format!("bad {what} field {s:?} in matrix file")))
        }
        let ny: usize = num(fields[0], "ny")?;
        let nx: usize = num(fields[1], "nx")?;
        let block: usize = num(fields[2], "B")?;
        let source_height: usize = num(fields[3], "H")?;
        let source_width: usize = num(fields[4], "W")?;
        let distance_m: f64 = num(fields[5], "distance")?;
        let seed: u64 = num(fields[6], "seed")?;
        let mut values = Vec::with_capacity(ny * nx);
        for (r, line) in lines.enumerate() {
            let row: Vec<&str> = line.split(',').collect();
            if row.len() != nx {
                return Err(Error::Dataset(format!(
                    "matrix row {r} has {} values, expected {nx}",
                    row.len()
                )));
            }
            for s in row {
                values.push(num::<f64>(s, "value")?);
            }
        }
        if values.len() != ny * nx {
            return Err(Error::Dataset(format!(
                "matrix has {} values, expected {}x{}",
                values.len(),
                ny,
                nx
            )));
        }
        Ok(WekMatrix { ny, nx, values, block, source_height, source_width, distance_m, seed })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<WekMatrix> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        WekMatrix::from_csv(&text)
    }
}
