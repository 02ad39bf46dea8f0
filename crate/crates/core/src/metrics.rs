//! Timing capture, the PCEI accuracy/efficiency index, and report assembly.
//!
//! PCEI trades prediction accuracy against time cost and run-to-run
//! stability: score = P / ln(T+1) · exp(−α·σ_T). The natural log is part of
//! the contract; see the acceptance suite for the consistency argument that
//! pins it down.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Test,
}

/// Wall-clock record of one phase: per-epoch samples for training, a single
/// whole-run sample for testing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub phase: Phase,
    pub samples_s: Vec<f64>,
    pub total_s: f64,
}

impl TimingRecord {
    pub fn from_samples(phase: Phase, samples_s: Vec<f64>) -> TimingRecord {
        let total_s = samples_s.iter().sum();
        TimingRecord { phase, samples_s, total_s }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMode {
    /// Population standard deviation of the samples.
    Std,
    /// Standard deviation divided by the mean (coefficient of variation).
    Cv,
}

/// Time-stability measure of a series of wall-clock samples.
pub fn sigma_t(times: &[f64], mode: SigmaMode) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::domain("sigma_t needs at least one sample"));
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    match mode {
        SigmaMode::Std => Ok(std),
        SigmaMode::Cv => {
            if mean <= 0.0 {
                return Err(Error::domain("coefficient of variation needs a positive mean"));
            }
            Ok(std / mean)
        }
    }
}

/// PCEI score: P / ln(T+1) · exp(−α·σ_T).
pub fn pcei(p: f64, t_s: f64, alpha: f64, sigma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("accuracy {p} outside [0, 1]")));
    }
    if !(t_s > 0.0) {
        return Err(Error::domain(format!("time {t_s} must be positive")));
    }
    if alpha < 0.0 || sigma < 0.0 {
        return Err(Error::domain("alpha and sigma must be non-negative"));
    }
    Ok(p / (t_s + 1.0).ln() * (-alpha * sigma).exp())
}

/// A scored accuracy/time trade-off.
#[derive(Debug, Clone, PartialEq)]
pub struct PceiReport {
    pub accuracy_p: f64,
    pub total_s: f64,
    pub alpha: f64,
    pub sigma_t: f64,
    pub score: f64,
}

impl PceiReport {
    pub fn new(accuracy_p: f64, total_s: f64, alpha: f64, sigma_t: f64) -> Result<PceiReport> {
        let score = pcei(accuracy_p, total_s, alpha, sigma_t)?;
        Ok(PceiReport { accuracy_p, total_s, alpha, sigma_t, score })
    }

    /// Score recomputed from the stored fields, for consistency checks.
    pub fn recompute(&self) -> Result<f64> {
        pcei(self.accuracy_p, self.total_s, self.alpha, self.sigma_t)
    }
}

/// One report row: a full train+eval cycle at one block size.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    /// Free-form run descriptor (seed, split, net shape).
    pub config: String,
    pub b: usize,
    pub ny: usize,
    pub nx: usize,
    /// Training iterations (epochs).
    pub iters: usize,
    /// Smallest per-sample mean loss over the run.
    pub min_loss: f64,
    /// Accuracies are fractions in [0, 1].
    pub top1_train: f64,
    pub train_s: f64,
    pub pcei_train: f64,
    pub test_s: f64,
    /// Top-1 through Top-5 test accuracy fractions.
    pub topk_test: [f64; 5],
    pub pcei_test: f64,
    pub alpha: f64,
    pub sigma_train: f64,
    pub sigma_test: f64,
}

pub const REPORT_VERSION_LINE: &str = "# beamwek report v1";
pub const REPORT_HEADER: &str = "config,B,ny,nx,iters,min_loss,top1_train,train_s,pcei_train,\
test_s,top1,top2,top3,top4,top5,pcei_test,alpha,sigma_train,sigma_test";

/// Assembles the report CSV: a versioned comment line, the header, then one
/// row per configuration sorted by block size.
pub fn build_report(rows: &[RunRow]) -> Result<String> {
    for r in rows {
        if r.config.contains(',') || r.config.contains('\n') {
            return Err(Error::domain(format!("config label {:?} breaks the CSV", r.config)));
        }
        let want = pcei(r.top1_train, r.train_s, r.alpha, r.sigma_train)?;
        if (want - r.pcei_train).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "row B={}: stored train score {} disagrees with its own columns",
                r.b, r.pcei_train
            )));
        }
        let want = pcei(r.topk_test[0], r.test_s, r.alpha, r.sigma_test)?;
        if (want - r.pcei_test).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "row B={}: stored test score {} disagrees with its own columns",
                r.b, r.pcei_test
            )));
        }
    }
    let mut sorted: Vec<&RunRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.b);
    let mut out = format!("{REPORT_VERSION_LINE}\n{REPORT_HEADER}\n");
    for r in sorted {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.config, r.b, r.ny, r.nx, r.iters, r.min_loss, r.top1_train, r.train_s,
            r.pcei_train, r.test_s
        );
        for v in r.topk_test {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{},{},{},{}", r.pcei_test, r.alpha, r.sigma_train, r.sigma_test);
    }
    Ok(out)
}

/// Parses a report produced by `build_report`.
pub fn parse_report(text: &str) -> Result<Vec<RunRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l == REPORT_VERSION_LINE => {}
        other => return Err(Error::Dataset(format!("bad report version line {other:?}"))),
    }
    match lines.next() {
        Some(l) if l == REPORT_HEADER => {}
        other => return Err(Error::Dataset(format!("bad report header {other:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 19 {
            return Err(Error::Dataset(format!("report row {i} has {} fields", f.len())));
        }
        let fl = |j: usize| -> Result<f64> {
            f[j].parse()
                .map_err(|_| Error::Dataset(format!("report row {i}: bad float {:?}", f[j])))
        };
        let us = |j: usize| -> Result<usize> {
            f[j].parse()
                .map_err(|_| Error::Dataset(format!("report row {i}: bad count {:?}", f[j])))
        };
        rows.push(RunRow {
            config: f[0].to_string(),
            b: us(1)?,
            ny: us(2)?,
            nx: us(3)?,
            iters: us(4)?,
            min_loss: fl(5)?,
            top1_train: fl(6)?,
            train_s: fl(7)?,
            pcei_train: fl(8)?,
            test_s: fl(9)?,
            topk_test: [fl(10)?, fl(11)?, fl(12)?, fl(13)?, fl(14)?],
            pcei_test: fl(15)?,
            alpha: fl(16)?,
            sigma_train: fl(17)?,
            sigma_test: fl(18)?,
        });
    }
    Ok(rows)
}
