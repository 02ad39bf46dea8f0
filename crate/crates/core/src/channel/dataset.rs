//! Randomized V2I scene generation and labeled dataset emission.
//!
//! Every sample gets its own counter-derived RNG, so samples are
//! independent of each other and of generation order; the whole dataset is
//! a pure function of (config, seed).

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::geometry::{Rect, Vec2};
use crate::channel::scene::{render_label_map, world_to_geo, Scene, Vehicle};
use crate::channel::trace::{trace_paths, TraceConfig};
use crate::channel::{beam_rates, codebook_gen, optimal_beam, ArrayConfig};
use crate::error::{Error, Result};
use crate::seeds;
use crate::taxonomy::urban;
use crate::wek::GeoCoord;

/// Scene/dataset generation parameters. All fields have working defaults;
/// override selectively from the run config.
#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub count: usize,
    /// World width (east-west) in meters.
    pub extent_w: f64,
    /// World height (north-south) in meters.
    pub extent_h: f64,
    /// Meters per rendered pixel.
    pub pixel_scale: f64,
    /// Geodetic anchor of the RSU.
    pub rsu_geo: GeoCoord,
    /// Inclusive vehicle count range per scene.
    pub vehicles: (usize, usize),
    pub speed_mps: (f64, f64),
    pub north_buildings: (usize, usize),
    pub south_buildings: (usize, usize),
    pub vegetation: (usize, usize),
    /// Poles and pedestrians: rendered, dropped by the taxonomy.
    pub clutter: (usize, usize),
    /// Chance of an extra building between the RSU and the road.
    pub obstacle_prob: f64,
    /// Transmit power over noise, dB.
    pub snr_db: f64,
    pub array: ArrayConfig,
    pub trace: TraceConfig,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            count: 100,
            extent_w: 96.0,
            extent_h: 54.0,
            pixel_scale: 0.1,
            rsu_geo: GeoCoord { lat: 22.543, lon: 114.058 },
            vehicles: (1, 4),
            speed_mps: (8.0, 12.0),
            north_buildings: (2, 4),
            south_buildings: (1, 3),
            vegetation: (0, 2),
            clutter: (0, 4),
            obstacle_prob: 0.15,
            snr_db: 30.0,
            array: ArrayConfig::default_60ghz(),
            trace: TraceConfig::default(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if !(self.extent_w > 0.0 && self.extent_h > 0.0 && self.pixel_scale > 0.0) {
            return Err(Error::config("extent and pixel scale must be positive"));
        }
        for (lo, hi, what) in [
            (self.vehicles.0, self.vehicles.1, "vehicles"),
            (self.north_buildings.0, self.north_buildings.1, "north_buildings"),
            (self.south_buildings.0, self.south_buildings.1, "south_buildings"),
            (self.vegetation.0, self.vegetation.1, "vegetation"),
            (self.clutter.0, self.clutter.1, "clutter"),
        ] {
            if lo > hi {
                return Err(Error::config(format!("{what} range is inverted")));
            }
        }
        if self.vehicles.0 < 1 {
            return Err(Error::config("every scene needs at least one vehicle"));
        }
        if !(self.speed_mps.0 <= self.speed_mps.1 && self.speed_mps.0 >= 0.0) {
            return Err(Error::config("bad speed range"));
        }
        if !(0.0..=1.0).contains(&self.obstacle_prob) {
            return Err(Error::config("obstacle_prob must be in [0, 1]"));
        }
        GeoCoord::new(self.rsu_geo.lat, self.rsu_geo.lon)?;
        Ok(())
    }
}

// Street layout as fractions of the world height, south to north: buildings
// behind the RSU, open ground with the RSU, sidewalk, road, sidewalk,
// buildings. Vegetation bands line both sidewalks.
const SOUTH_BUILDING_BAND: (f64, f64) = (0.010, 0.055);
const OBSTACLE_BAND: (f64, f64) = (0.20, 0.30);
const VEG_SOUTH_BAND: (f64, f64) = (0.30, 0.333);
const SIDEWALK_SOUTH: (f64, f64) = (0.333, 0.370);
const ROAD_BAND: (f64, f64) = (0.370, 0.555);
const SIDEWALK_NORTH: (f64, f64) = (0.555, 0.592);
const VEG_NORTH_BAND: (f64, f64) = (0.592, 0.630);
const NORTH_BUILDING_BAND: (f64, f64) = (0.630, 0.960);
const LANE_CENTERS: (f64, f64) = (0.417, 0.510);
const RSU_Y: f64 = 0.0926;

fn uni(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn count_in(rng: &mut ChaCha8Rng, range: (usize, usize)) -> usize {
    rng.gen_range(range.0..=range.1)
}

/// One randomized scene. Draw order is fixed; identical (config, rng state)
/// gives an identical scene.
pub fn random_scene(cfg: &GenConfig, rng: &mut ChaCha8Rng) -> Scene {
    let (w, h) = (cfg.extent_w, cfg.extent_h);
    let mut scene = Scene::bare(w, h, cfg.pixel_scale);
    scene.rsu_geo = cfg.rsu_geo;
    scene.rsu_pos = Vec2::new(w / 2.0, RSU_Y * h);
    scene.road = Some(Rect::new(0.0, ROAD_BAND.0 * h, w, ROAD_BAND.1 * h));
    scene.sidewalks = vec![
        Rect::new(0.0, SIDEWALK_SOUTH.0 * h, w, SIDEWALK_SOUTH.1 * h),
        Rect::new(0.0, SIDEWALK_NORTH.0 * h, w, SIDEWALK_NORTH.1 * h),
    ];

    for _ in 0..count_in(rng, cfg.north_buildings) {
        let bw = uni(rng, 8.0, 20.0).min(w);
        let x0 = uni(rng, 0.0, w - bw);
        let depth = uni(rng, 6.0, 12.0);
        let y0 = uni(rng, NORTH_BUILDING_BAND.0 * h, NORTH_BUILDING_BAND.1 * h - depth);
        scene.buildings.push(Rect::new(x0, y0, x0 + bw, y0 + depth));
    }
    for _ in 0..count_in(rng, cfg.south_buildings) {
        let bw = uni(rng, 10.0, 24.0).min(w);
        let x0 = uni(rng, 0.0, w - bw);
        let y0 = SOUTH_BUILDING_BAND.0 * h;
        let depth = uni(rng, 0.5 * (SOUTH_BUILDING_BAND.1 - SOUTH_BUILDING_BAND.0) * h,
                        (SOUTH_BUILDING_BAND.1 - SOUTH_BUILDING_BAND.0) * h);
        scene.buildings.push(Rect::new(x0, y0, x0 + bw, y0 + depth));
    }
    if rng.gen::<f64>() < cfg.obstacle_prob {
        let bw = uni(rng, 4.0, 8.0);
        let x0 = (scene.rsu_pos.x + uni(rng, -12.0, 12.0) - bw / 2.0).clamp(0.0, w - bw);
        let depth = uni(rng, 2.0, 4.0);
        let y0 = uni(rng, OBSTACLE_BAND.0 * h, OBSTACLE_BAND.1 * h - depth);
        scene.buildings.push(Rect::new(x0, y0, x0 + bw, y0 + depth));
    }
    for _ in 0..count_in(rng, cfg.vegetation) {
        let vw = uni(rng, 8.0, 30.0).min(w);
        let x0 = uni(rng, 0.0, w - vw);
        let band = if rng.gen::<bool>() { VEG_NORTH_BAND } else { VEG_SOUTH_BAND };
        scene.vegetation.push(Rect::new(x0, band.0 * h, x0 + vw, band.1 * h));
    }
    for _ in 0..count_in(rng, cfg.clutter) {
        let (size, cat) = if rng.gen::<bool>() {
            (0.5, urban::POLE)
        } else {
            (0.6, urban::PERSON)
        };
        let band = if rng.gen::<bool>() { SIDEWALK_SOUTH } else { SIDEWALK_NORTH };
        let x0 = uni(rng, 0.0, w - size);
        let y0 = uni(rng, band.0 * h, band.1 * h - size);
        scene.clutter.push((Rect::new(x0, y0, x0 + size, y0 + size), cat));
    }

    let n_vehicles = count_in(rng, cfg.vehicles);
    let mut lane_spans: [Vec<(f64, f64)>; 2] = [vec![], vec![]];
    for _ in 0..n_vehicles {
        let (len, width, cat) = match rng.gen_range(0..10) {
            0..=6 => (4.5, 2.0, urban::CAR),
            7..=8 => (7.0, 2.5, urban::TRUCK),
            _ => (11.0, 2.6, urban::BUS),
        };
        let lane = rng.gen_range(0..2usize);
        let margin = len / 2.0 + 1.0;
        let mut cx = uni(rng, margin, w - margin);
        for _ in 0..12 {
            let span = (cx - len / 2.0 - 1.0, cx + len / 2.0 + 1.0);
            if lane_spans[lane].iter().all(|&(a, b)| span.1 <= a || b <= span.0) {
                break;
            }
            cx = uni(rng, margin, w - margin);
        }
        lane_spans[lane].push((cx - len / 2.0 - 1.0, cx + len / 2.0 + 1.0));
        let cy = if lane == 0 { LANE_CENTERS.0 * h } else { LANE_CENTERS.1 * h };
        let heading = if lane == 0 { Vec2::new(1.0, 0.0) } else { Vec2::new(-1.0, 0.0) };
        scene.vehicles.push(Vehicle {
            rect: Rect::new(cx - len / 2.0, cy - width / 2.0, cx + len / 2.0, cy + width / 2.0),
            category: cat,
            speed_mps: uni(rng, cfg.speed_mps.0, cfg.speed_mps.1),
            heading,
        });
    }
    scene.rx_index = rng.gen_range(0..n_vehicles);
    scene
}

/// One labeled sample of the emitted dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub sample_id: u64,
    /// Label map path relative to the dataset directory.
    pub labelmap: String,
    pub tx_geo: GeoCoord,
    pub rx_geo: GeoCoord,
    pub beam_label: usize,
    pub rates: Vec<f64>,
}

/// Manifest row: everything but the per-beam rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub sample_id: u64,
    pub labelmap: String,
    pub tx_geo: GeoCoord,
    pub rx_geo: GeoCoord,
    pub beam_label: usize,
}

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const RATES_FILE: &str = "rates.csv";
const MANIFEST_HEADER: &str = "sample_id,labelmap,tx_lat,tx_lon,rx_lat,rx_lon,beam_label";

/// Generates `cfg.count` samples under `out_dir`: label map PGMs plus
/// `manifest.csv` and the per-beam `rates.csv` sidecar.
pub fn generate_dataset(cfg: &GenConfig, seed: u64, out_dir: &Path) -> Result<Vec<DatasetRecord>> {
    cfg.validate()?;
    let maps_dir = out_dir.join("labelmaps");
    std::fs::create_dir_all(&maps_dir).map_err(|e| Error::io(&maps_dir, e))?;
    let cb = codebook_gen(&cfg.array);
    let eps = crate::wek::PermittivityTable::default();
    let power = 10f64.powf(cfg.snr_db / 10.0);
    let mut records = Vec::with_capacity(cfg.count);
    for id in 0..cfg.count as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, "sample", id));
        let scene = random_scene(cfg, &mut rng);
        let map = render_label_map(&scene)?;
        let rel = format!("labelmaps/sample_{id:06}.pgm");
        map.save(&out_dir.join(&rel))?;
        let ch = trace_paths(&scene, &cfg.array, &cfg.trace, &eps)?;
        let rates = beam_rates(&ch, &cfg.array, &cb, power, 1.0);
        let beam_label = optimal_beam(&ch, &cfg.array, &cb, power, 1.0)?;
        records.push(DatasetRecord {
            sample_id: id,
            labelmap: rel,
            tx_geo: world_to_geo(&scene, scene.rsu_pos)?,
            rx_geo: world_to_geo(&scene, scene.rx()?.antenna())?,
            beam_label,
            rates,
        });
    }
    write_manifest(&records, cfg.array.n_beams, out_dir)?;
    Ok(records)
}

/// Writes `manifest.csv` and `rates.csv` for the records.
pub fn write_manifest(records: &[DatasetRecord], n_beams: usize, out_dir: &Path) -> Result<()> {
    let mut manifest = String::from(MANIFEST_HEADER);
    manifest.push('\n');
    let mut rates = String::from("sample_id");
    for b in 0..n_beams {
        let _ = write!(rates, ",beam_{b}");
    }
    rates.push('\n');
    for r in records {
        let _ = writeln!(
            manifest,
            "{},{},{},{},{},{},{}",
            r.sample_id, r.labelmap, r.tx_geo.lat, r.tx_geo.lon, r.rx_geo.lat, r.rx_geo.lon,
            r.beam_label
        );
        let _ = write!(rates, "{}", r.sample_id);
        for v in &r.rates {
            let _ = write!(rates, ",{v}");
        }
        rates.push('\n');
    }
    let mpath = out_dir.join(MANIFEST_FILE);
    std::fs::write(&mpath, manifest).map_err(|e| Error::io(&mpath, e))?;
    let rpath = out_dir.join(RATES_FILE);
    std::fs::write(&rpath, rates).map_err(|e| Error::io(&rpath, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == MANIFEST_HEADER => {}
        _ => return Err(Error::Dataset(format!("{}: bad or missing manifest header", path.display()))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Dataset(format!("manifest row {i} has {} fields", f.len())));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Dataset(format!("manifest row {i}: bad {what} {s:?}")))
        };
        rows.push(ManifestRow {
            sample_id: f[0]
                .parse()
                .map_err(|_| Error::Dataset(format!("manifest row {i}: bad sample id")))?,
            labelmap: f[1].to_string(),
            tx_geo: GeoCoord::new(parse_f64(f[2], "tx_lat")?, parse_f64(f[3], "tx_lon")?)?,
            rx_geo: GeoCoord::new(parse_f64(f[4], "rx_lat")?, parse_f64(f[5], "rx_lon")?)?,
            beam_label: f[6]
                .parse()
                .map_err(|_| Error::Dataset(format!("manifest row {i}: bad beam label")))?,
        });
    }
    Ok(rows)
}

pub fn read_rates(path: &Path) -> Result<Vec<(u64, Vec<f64>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Dataset(format!("{}: empty rates file", path.display())))?;
    if !header.starts_with("sample_id") {
        return Err(Error::Dataset(format!("{}: bad rates header", path.display())));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let id = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Dataset(format!("rates row {i}: bad sample id")))?;
        let rates: Result<Vec<f64>> = fields
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Dataset(format!("rates row {i}: bad rate {s:?}")))
            })
            .collect();
        rows.push((id, rates?));
    }
    Ok(rows)
}
