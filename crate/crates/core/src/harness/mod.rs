//! Dataset ingestion, synthetic fixtures, experiment drivers and reports.

mod csv_load;
mod dataset;
mod experiments;
mod report;
mod synthetic;

pub use csv_load::{load_csv, read_csv, CsvSchema, LabelRule, LoadStats};
pub use dataset::{AttributeKind, AttributeMeta, Dataset};
pub use experiments::{
    cross_validate, linear_fit, run_block_bench, run_dp_sweep, run_iota_sweep, run_train_compare,
    BlockBenchConfig, CvSummary, DpSweepConfig, IotaSweepConfig, LinearFit, TrainCompareConfig,
    TrainMode,
};
pub use report::{ExperimentKind, ExperimentReport, ReportRow, RunParams};
pub use synthetic::{discrete_dataset, gaussian_classes, separable_dataset, uniform_dataset};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("csv error: {0}")]
    Csv(String),
    #[error("dataset shape error: {0}")]
    Shape(String),
    #[error("label values are not binary: {0}")]
    NonBinaryLabel(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Dp(#[from] crate::dp::DpError),
    #[error(transparent)]
    Features(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Training(#[from] crate::training::TrainingError),
    #[error(transparent)]
    Protocol(#[from] crate::protocols::ProtocolError),
    #[error(transparent)]
    Crypto(#[from] crate::crypto::CryptoError),
}
