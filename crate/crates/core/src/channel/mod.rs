//! Geometric mmWave channel simulator.
//!
//! Scenes are planar: an RSU with a uniform linear array at a fixed point,
//! vehicles on a road, buildings and vegetation around it. `trace` finds the
//! line-of-sight and first-order specular paths, this module turns the path
//! set into array responses, per-beam achievable rates, and the ground-truth
//! optimal beam index that the network learns to predict.

pub mod dataset;
pub mod geometry;
pub mod scene;
pub mod trace;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::taxonomy::Material;

pub use dataset::{generate_dataset, DatasetRecord, GenConfig};
pub use scene::{pixel_to_geo, render_label_map, Scene, Vehicle};
pub use trace::{trace_paths, TraceConfig};

/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;

/// Transmit array and codebook geometry.
#[derive(Debug, Clone, Copy, PartialEq, serde::Deserialize)]
#[serde(default)]
pub struct ArrayConfig {
    pub n_t: usize,
    /// Element spacing in meters.
    pub spacing_m: f64,
    pub carrier_hz: f64,
    pub n_beams: usize,
}

impl Default for ArrayConfig {
    fn default() -> ArrayConfig {
        ArrayConfig::default_60ghz()
    }
}

impl ArrayConfig {
    /// 16 half-wavelength elements at 60 GHz with a 64-beam codebook.
    pub fn default_60ghz() -> ArrayConfig {
        let carrier_hz = 60e9;
        ArrayConfig { n_t: 16, spacing_m: C_LIGHT / carrier_hz / 2.0, carrier_hz, n_beams: 64 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t < 1 || self.n_beams < 1 {
            return Err(Error::config("array needs n_t >= 1 and n_beams >= 1"));
        }
        if !(self.spacing_m > 0.0 && self.carrier_hz > 0.0) {
            return Err(Error::config("array spacing and carrier must be positive"));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        C_LIGHT / self.carrier_hz
    }

    /// Phase constant 2πd/λ.
    pub fn beta(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.spacing_m / self.wavelength_m()
    }
}

/// One propagation path between the array and the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    /// Linear amplitude, free-space factor times any bounce or penetration
    /// losses.
    pub gain: f64,
    pub phase_rad: f64,
    pub delay_s: f64,
    pub doppler_hz: f64,
    /// Departure azimuth relative to the array boresight.
    pub az_rad: f64,
    pub el_rad: f64,
    /// `None` for the line-of-sight path.
    pub bounce_material: Option<Material>,
}

/// A traced multipath channel observed over `n_samples` time samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub paths: Vec<Path>,
    pub n_samples: usize,
    pub sample_period_s: f64,
    /// True when a building blocks the direct Tx–Rx segment.
    pub nlos: bool,
}

/// Array response for departure azimuth `az` and elevation `el`: element m
/// carries phase m·(2πd/λ)·sin(az)·cos(el) with 1/n_t amplitude.
pub fn steering_vector(cfg: &ArrayConfig, az: f64, el: f64) -> Vec<Complex64> {
    let step = cfg.beta() * az.sin() * el.cos();
    let amp = 1.0 / cfg.n_t as f64;
    (0..cfg.n_t)
        .map(|m| Complex64::from_polar(amp, m as f64 * step))
        .collect()
}

/// Beamforming codebook: `n_beams` steering directions uniform in sin-space.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub vectors: Vec<Vec<Complex64>>,
    /// sin of each beam's steering angle.
    pub sines: Vec<f64>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Generates the codebook. Beam n steers to sinθ_n = −1 + (2n+1)/n_beams,
/// the cell centers of a uniform grid over [−1, 1); weights are conjugated
/// steering phases so that `hᵀf` peaks when a path azimuth hits the grid
/// angle.
pub fn codebook_gen(cfg: &ArrayConfig) -> Codebook {
    let amp = 1.0 / cfg.n_t as f64;
    let mut vectors = Vec::with_capacity(cfg.n_beams);
    let mut sines = Vec::with_capacity(cfg.n_beams);
    for n in 0..cfg.n_beams {
        let sin_n = -1.0 + (2 * n + 1) as f64 / cfg.n_beams as f64;
        let step = -cfg.beta() * sin_n;
        vectors.push(
            (0..cfg.n_t)
                .map(|m| Complex64::from_polar(amp, m as f64 * step))
                .collect(),
        );
        sines.push(sin_n);
    }
    Codebook { vectors, sines }
}

/// Channel vector at time sample `k`:
/// h[k] = Σ_l a_l·exp(j(2π·f_D,l·k·Δt + φ_l))·a(az_l, el_l).
pub fn channel_response(ch: &Channel, cfg: &ArrayConfig, k: usize) -> Vec<Complex64> {
    assert!(k < ch.n_samples, "sample index {k} out of {} samples", ch.n_samples);
    let t = k as f64 * ch.sample_period_s;
    let mut h = vec![Complex64::new(0.0, 0.0); cfg.n_t];
    for p in &ch.paths {
        let rot = Complex64::from_polar(
            p.gain,
            2.0 * std::f64::consts::PI * p.doppler_hz * t + p.phase_rad,
        );
        for (hm, am) in h.iter_mut().zip(steering_vector(cfg, p.az_rad, p.el_rad)) {
            *hm += rot * am;
        }
    }
    h
}

/// Time-averaged spectral efficiency of beam `f` in bits/s/Hz:
/// (1/K)·Σ_k log2(1 + (P/σ²)·|h[k]ᵀf|²).
pub fn achievable_rate(
    ch: &Channel,
    cfg: &ArrayConfig,
    f: &[Complex64],
    power: f64,
    noise: f64,
) -> f64 {
    assert!(power > 0.0 && noise > 0.0, "power and noise must be positive");
    assert_eq!(f.len(), cfg.n_t, "beam length does not match array");
    let snr = power / noise;
    let mut acc = 0.0;
    for k in 0..ch.n_samples {
        let h = channel_response(ch, cfg, k);
        let g: Complex64 = h.iter().zip(f).map(|(hm, fm)| hm * fm).sum();
        // Path gains are tiny (λ/4πd at mmWave), so go through ln_1p instead
        // of log2(1 + x) to keep precision.
        acc += (snr * g.norm_sqr()).ln_1p() / std::f64::consts::LN_2;
    }
    acc / ch.n_samples as f64
}

/// Rate of every codebook beam, in codebook order.
pub fn beam_rates(
    ch: &Channel,
    cfg: &ArrayConfig,
    cb: &Codebook,
    power: f64,
    noise: f64,
) -> Vec<f64> {
    cb.vectors.iter().map(|f| achievable_rate(ch, cfg, f, power, noise)).collect()
}

/// Index of the rate-maximizing beam; ties resolve to the lowest index.
pub fn optimal_beam(
    ch: &Channel,
    cfg: &ArrayConfig,
    cb: &Codebook,
    power: f64,
    noise: f64,
) -> Result<usize> {
    if cb.is_empty() {
        return Err(Error::domain("empty codebook"));
    }
    let rates = beam_rates(ch, cfg, cb, power, noise);
    let mut best = 0;
    for (i, &r) in rates.iter().enumerate() {
        if r > rates[best] {
            best = i;
        }
    }
    Ok(best)
}
