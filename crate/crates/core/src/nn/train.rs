//! Mini-batch SGD over labeled block-value matrices, plus timed scoring.
//!
//! Every stochastic choice (shuffle order, dropout masks) is re-derived from
//! the run seed, so a repeated run reproduces the loss curve and the final
//! parameters bit for bit; only the wall-clock record differs.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metrics::{Phase, TimingRecord};
use crate::seeds;

use super::data::LabeledSample;
use super::{
    backward, forward_eval, forward_train, rank_beams, sgd_step, topk_accuracy,
    update_running_stats, BeamNet, NetConfig,
};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Accuracy depths to report, e.g. [1, 2, 3, 4, 5].
    pub k_list: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            learning_rate: 0.005,
            epochs: 30,
            seed: 0,
            k_list: vec![1, 2, 3, 4, 5],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n_beams: usize) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::config("need at least one epoch"));
        }
        // Zero is allowed: a dry run that measures without moving.
        if self.learning_rate < 0.0 {
            return Err(Error::config(format!("negative learning rate {}", self.learning_rate)));
        }
        if self.k_list.is_empty() || self.k_list.iter().any(|&k| k == 0 || k > n_beams) {
            return Err(Error::config(format!("accuracy depths must lie in 1..={n_beams}")));
        }
        Ok(())
    }
}

pub struct TrainResult {
    pub net: BeamNet,
    /// Mean per-sample loss after each epoch.
    pub loss_curve: Vec<f64>,
    /// Per-epoch wall clock.
    pub timing: TimingRecord,
    /// (depth, accuracy percent) on the training set.
    pub topk: Vec<(usize, f64)>,
}

pub struct EvalResult {
    pub topk: Vec<(usize, f64)>,
    pub timing: TimingRecord,
}

pub fn train(cfg: &NetConfig, tc: &TrainConfig, samples: &[LabeledSample]) -> Result<TrainResult> {
    cfg.validate()?;
    tc.validate(cfg.n_beams)?;
    if samples.is_empty() {
        return Err(Error::Dataset("no training samples".into()));
    }
    let hw = cfg.positions();
    for s in samples {
        if s.wek.ny != cfg.input_h || s.wek.nx != cfg.input_w {
            return Err(Error::Shape(format!(
                "sample {} is {}x{} but the net expects {}x{}",
                s.id, s.wek.ny, s.wek.nx, cfg.input_h, cfg.input_w
            )));
        }
        if s.label >= cfg.n_beams {
            return Err(Error::Dataset(format!(
                "sample {}: beam {} out of range for {} beams",
                s.id, s.label, cfg.n_beams
            )));
        }
    }

    let mut net = BeamNet::init(cfg, tc.seed)?;
    let nall = samples.len();
    let mean = samples.iter().map(|s| s.wek.distance_m).sum::<f64>() / nall as f64;
    let std = (samples.iter().map(|s| (s.wek.distance_m - mean).powi(2)).sum::<f64>()
        / nall as f64)
        .sqrt();
    net.d_mean = mean;
    net.d_std = if std > 0.0 { std } else { 1.0 };

    let mut idx: Vec<usize> = (0..nall).collect();
    let n_batches = nall.div_ceil(tc.batch_size);
    let mut loss_curve = Vec::with_capacity(tc.epochs);
    let mut epoch_times = Vec::with_capacity(tc.epochs);
    let mut xs = Vec::new();
    let mut ds = Vec::new();
    let mut labels = Vec::new();
    for epoch in 0..tc.epochs {
        let t0 = Instant::now();
        let mut order_rng =
            ChaCha8Rng::seed_from_u64(seeds::derive(tc.seed, "shuffle", epoch as u64));
        idx.shuffle(&mut order_rng);
        let mut total = 0.0;
        for (bi, chunk) in idx.chunks(tc.batch_size).enumerate() {
            xs.clear();
            ds.clear();
            labels.clear();
            for &i in chunk {
                xs.extend_from_slice(&samples[i].wek.values);
                ds.push(samples[i].wek.distance_m);
                labels.push(samples[i].label);
            }
            debug_assert_eq!(xs.len(), chunk.len() * hw);
            let mut drop_rng = ChaCha8Rng::seed_from_u64(seeds::derive(
                tc.seed,
                "dropout",
                (epoch * n_batches + bi) as u64,
            ));
            let cache = forward_train(&net, &xs, &ds, &labels, &mut drop_rng)?;
            total += cache.loss();
            let grads = backward(&net, &cache);
            sgd_step(&mut net, &grads, tc.learning_rate, chunk.len());
            update_running_stats(&mut net, &cache);
        }
        loss_curve.push(total / nall as f64);
        epoch_times.push(t0.elapsed().as_secs_f64());
    }
    let timing = TimingRecord::from_samples(Phase::Train, epoch_times);
    let topk = score(&net, samples, &tc.k_list)?;
    Ok(TrainResult { net, loss_curve, timing, topk })
}

fn score(net: &BeamNet, samples: &[LabeledSample], k_list: &[usize]) -> Result<Vec<(usize, f64)>> {
    let kmax = k_list.iter().copied().max().unwrap_or(1);
    let mut preds = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for s in samples {
        let logits = forward_eval(net, &s.wek)?;
        let mut ranked = rank_beams(&logits);
        ranked.truncate(kmax);
        preds.push(ranked);
        labels.push(s.label);
    }
    k_list.iter().map(|&k| Ok((k, topk_accuracy(&preds, &labels, k)?))).collect()
}

/// Ranks every sample once and reports accuracy at each requested depth,
/// with the whole pass wall-clocked as a single timing sample.
pub fn evaluate(net: &BeamNet, samples: &[LabeledSample], k_list: &[usize]) -> Result<EvalResult> {
    if samples.is_empty() {
        return Err(Error::Dataset("no evaluation samples".into()));
    }
    if k_list.is_empty() || k_list.iter().any(|&k| k == 0 || k > net.cfg.n_beams) {
        return Err(Error::config(format!(
            "accuracy depths must lie in 1..={}",
            net.cfg.n_beams
        )));
    }
    let t0 = Instant::now();
    let topk = score(net, samples, k_list)?;
    let total = t0.elapsed().as_secs_f64();
    Ok(EvalResult {
        topk,
        timing: TimingRecord { phase: Phase::Test, samples_s: vec![total], total_s: total },
    })
}
