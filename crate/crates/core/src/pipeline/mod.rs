//! Dataset ingestion, drug-wise splits, the label codec, teacher-forced
//! training, set-based evaluation, multi-seed runs and motif contribution
//! analysis.

mod codec;
mod config;
mod contrib;
mod dataset;
mod metrics;
mod prepare;
mod run;
mod split;
mod train;

pub use codec::{clean_sequence, encode_targets, LabelCodec, LabelOrder, CODEC_VERSION, SPECIAL_TOKENS};
pub use config::{OrderChoice, RunConfig};
pub use contrib::{contribution_analysis, write_contrib_csv, ContributionMatrix, Explainer, CONTRIB_HEADER};
pub use dataset::{
    load_dataset, parse_dataset, parse_labels, Dataset, DatasetRecord, RowError, Structure,
    DATASET_HEADER,
};
pub use metrics::{evaluate, format_pm, mean_std, MetricsReport, SeedSummary};
pub use prepare::{prepare_records, prepare_structure, restrict_to_vocab, Artifacts, PreparedDrug};
pub use run::{
    load_run, run_experiment, run_seeds, save_run, truth_set, write_metrics_json, RunManifest,
    RunResult, MANIFEST_VERSION,
};
pub use split::{split_dataset, split_sizes, Split, MIN_SPLIT_RECORDS};
pub use train::{train, EpochLog, Predictor, TrainOutcome};

use std::path::PathBuf;

use thiserror::Error;

use crate::autodiff::TensorError;
use crate::graph::GraphError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("header mismatch: expected drug_id<TAB>structure<TAB>labels, found {0:?}")]
    HeaderMismatch(String),
    #[error("dataset has no usable records")]
    EmptyDataset,
    #[error("{found} records, at least {min} needed for a split")]
    TooFewRecords { found: usize, min: usize },
    #[error("duplicate drug id in split input")]
    DuplicateDrug,
    #[error("{predictions} predictions but {truths} truths")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("malformed file: {0}")]
    Format(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{drug_id}: {message}")]
    Structure { drug_id: String, message: String },
    #[error("unknown drug {0:?}")]
    UnknownDrug(String),
    #[error("non-finite loss {loss} at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: u64, loss: f64 },
    #[error("seed {seed}: {source}")]
    Seed {
        seed: u64,
        #[source]
        source: Box<PipelineError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

impl PipelineError {
    /// True for failures of the numerics rather than of the input data.
    pub fn is_numeric(&self) -> bool {
        match self {
            PipelineError::NonFiniteLoss { .. } | PipelineError::Tensor(_) => true,
            PipelineError::Model(e) => matches!(e, ModelError::NonFinite | ModelError::Tensor(_)),
            PipelineError::Seed { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

/// Rounds to 10 decimals so JSON outputs are stable across reruns.
pub fn fixed(x: f64) -> f64 {
    (x * 1e10).round() / 1e10
}
