//! Material- and location-aware wireless environment knowledge for mmWave
//! beam prediction.
//!
//! The pipeline: semantic label maps are reduced to propagation-relevant
//! material maps (`taxonomy`), compressed into permittivity-weighted block
//! matrices (`wek`), paired with beam labels from a geometric channel
//! simulator (`channel`), and fed to a small CNN+attention classifier (`nn`)
//! whose quality and cost are summarized by `metrics`.

pub mod channel;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod pgm;
pub mod seeds;
pub mod taxonomy;
pub mod wek;

pub use error::{Error, Result};
pub use metrics::{PceiReport, Phase, RunRow, SigmaMode, TimingRecord};
pub use nn::{BeamNet, LabeledSample, NetConfig, TrainConfig, WekDataset};
pub use taxonomy::{CategoryId, CategoryRegistry, LabelMap, Material, MaterialMap, Taxonomy};
pub use wek::{BlockGrid, GeoCoord, PermittivityTable, WekMatrix};
