//! Labeled dataset assembly: manifest rows joined with their stored
//! block-value matrices, and the deterministic train/test split.

use std::path::Path;

use crate::channel::dataset::read_manifest;
use crate::error::{Error, Result};
use crate::seeds;
use crate::wek::WekMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub id: u64,
    pub wek: WekMatrix,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WekDataset {
    pub samples: Vec<LabeledSample>,
    pub ny: usize,
    pub nx: usize,
}

/// Joins a scene manifest with per-sample matrices stored as
/// `sample_NNNNNN.csv` under `wek_dir`. Every matrix must share one shape.
pub fn load_dataset(manifest: &Path, wek_dir: &Path, n_beams: usize) -> Result<WekDataset> {
    let rows = read_manifest(manifest)?;
    if rows.is_empty() {
        return Err(Error::Dataset(format!("{}: no samples listed", manifest.display())));
    }
    let mut samples = Vec::with_capacity(rows.len());
    let mut dims: Option<(usize, usize)> = None;
    for row in rows {
        let path = wek_dir.join(format!("sample_{:06}.csv", row.sample_id));
        if !path.exists() {
            return Err(Error::MissingArtifact(format!(
                "no block-value matrix for sample {} at {}",
                row.sample_id,
                path.display()
            )));
        }
        let wek = WekMatrix::load(&path)?;
        match dims {
            None => dims = Some((wek.ny, wek.nx)),
            Some((ny, nx)) if ny == wek.ny && nx == wek.nx => {}
            Some((ny, nx)) => {
                return Err(Error::Dataset(format!(
                    "sample {} is {}x{} but the dataset started as {ny}x{nx}",
                    row.sample_id, wek.ny, wek.nx
                )));
            }
        }
        if row.beam_label >= n_beams {
            return Err(Error::Dataset(format!(
                "sample {}: beam {} out of range for {n_beams} beams",
                row.sample_id, row.beam_label
            )));
        }
        samples.push(LabeledSample { id: row.sample_id, wek, label: row.beam_label });
    }
    let (ny, nx) = dims.expect("at least one sample");
    Ok(WekDataset { samples, ny, nx })
}

/// Hash-based split: a sample's side depends only on the seed and its id,
/// never on dataset size or order.
pub fn split_dataset(
    ds: &WekDataset,
    seed: u64,
    train_fraction: f64,
) -> (Vec<LabeledSample>, Vec<LabeledSample>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for s in &ds.samples {
        if seeds::in_train_split(seed, s.id, train_fraction) {
            train.push(s.clone());
        } else {
            test.push(s.clone());
        }
    }
    (train, test)
}
