//! Change-detection evaluation: dataset loading, synthetic scenes, scoring,
//! metrics, ranking and report files.

mod cdnet;
mod gt;
mod metrics;
mod ranking;
mod report;
mod synth;

pub use cdnet::{export_cdnet, load_cdnet, CdnetSequence};
pub use gt::{GtFrame, GtLabel};
pub use metrics::{
    compute_metrics, score_binary, score_frame, ConfusionCounts, Fraction, Metric, MetricsReport,
};
pub use ranking::{rank_methods, RankTable};
pub use report::{emit_report, parse_report_csv, ReportRow, ReportSummary};
pub use synth::{synth_generate, Background, Shape, SyntheticSceneSpec, SyntheticSequence};

use crate::imaging::ImagingError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("missing directory {0}")]
    MissingDir(PathBuf),
    #[error("{inputs} input frames but {truths} ground-truth frames")]
    CountMismatch { inputs: usize, truths: usize },
    #[error("missing ground truth for frame {index}")]
    MissingGt { index: usize },
    #[error("unparseable temporal ROI: {0}")]
    BadTemporalRoi(String),
    #[error("unrecognised ground-truth code {value} at pixel {index}")]
    BadGtCode { value: u8, index: usize },
    #[error("mask is {got_w}x{got_h}, ground truth is {want_w}x{want_h}")]
    DimensionMismatch {
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("reports are ragged: {0}")]
    Ragged(String),
    #[error("invalid scene: {0}")]
    BadScene(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> BenchError {
    let path = path.into();
    move |source| BenchError::Io { path, source }
}
