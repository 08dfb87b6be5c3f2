//! Hybrid motion detector: background subtraction feeding a three-layer
//! spiking chain per pixel, followed by smoothing and binarization.

mod backend;
mod pipeline;
mod postprocess;
mod snn;

pub use backend::{Backend, BackendKind, BackendParams, BsBackendState};
pub use pipeline::{frame_paths, mean_fps, FrameTiming, Pipeline, PipelineOutput, StageTimes};
pub use postprocess::{postprocess, MotionMask};
pub use snn::{encode_currents, FrameSpikes, SnnState};

use crate::imaging::ImagingError;
use crate::lif::{LifError, LifParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HsmdError {
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("frame is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("invalid config value {key}: {reason}")]
    BadConfig { key: &'static str, reason: String },
    #[error("no frames")]
    NoFrames,
    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: ImagingError,
    },
    #[error(transparent)]
    Lif(#[from] LifError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

pub type Result<T> = std::result::Result<T, HsmdError>;

/// How the per-pixel neuron chains are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ComputeMode {
    /// Every pixel, every frame.
    #[default]
    Dense,
    /// Pixels with zero input whose chain is at rest are skipped.
    Sparse,
}

impl ComputeMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dense" => Some(Self::Dense),
            "sparse" => Some(Self::Sparse),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Dense => "dense",
            Self::Sparse => "sparse",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HsmdConfig {
    /// Pixel-to-current gain (nA per unit intensity).
    pub c_p2c: f64,
    pub w_l2_l3: f64,
    pub w_l2_l4: f64,
    pub w_l3_l4: f64,
    pub steps_per_frame: u32,
    /// Inner simulation step (ms).
    pub dt: f64,
    pub mask_threshold: f64,
    pub filter_u: usize,
    pub filter_v: usize,
    pub lif: LifParams,
    pub mode: ComputeMode,
    /// Worker threads for the per-pixel stage; 1 runs inline.
    pub workers: usize,
}

impl Default for HsmdConfig {
    fn default() -> Self {
        Self {
            c_p2c: 17.5,
            w_l2_l3: 1370.0,
            w_l2_l4: 1370.0,
            w_l3_l4: 1370.0,
            steps_per_frame: 10,
            dt: 10.0,
            mask_threshold: 0.5,
            filter_u: 3,
            filter_v: 3,
            lif: LifParams::default(),
            mode: ComputeMode::Dense,
            workers: 1,
        }
    }
}

impl HsmdConfig {
    pub fn validate(&self) -> Result<()> {
        fn non_negative(key: &'static str, v: f64) -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(HsmdError::BadConfig {
                    key,
                    reason: format!("{v} must be finite and >= 0"),
                })
            }
        }
        non_negative("c_p2c", self.c_p2c)?;
        non_negative("w_l2_l3", self.w_l2_l3)?;
        non_negative("w_l2_l4", self.w_l2_l4)?;
        non_negative("w_l3_l4", self.w_l3_l4)?;
        if self.steps_per_frame == 0 {
            return Err(HsmdError::BadConfig {
                key: "steps_per_frame",
                reason: "must be >= 1".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.mask_threshold) {
            return Err(HsmdError::BadConfig {
                key: "mask_threshold",
                reason: format!("{} is outside [0, 1]", self.mask_threshold),
            });
        }
        for (key, n) in [("filter_u", self.filter_u), ("filter_v", self.filter_v)] {
            if n == 0 || n % 2 == 0 {
                return Err(HsmdError::BadConfig {
                    key,
                    reason: format!("{n} must be odd and >= 1"),
                });
            }
        }
        if self.workers == 0 {
            return Err(HsmdError::BadConfig {
                key: "workers",
                reason: "must be >= 1".into(),
            });
        }
        self.lif.validate()?;
        self.lif.check_dt(self.dt)?;
        Ok(())
    }

    /// Highest L4 count a pixel can reach in one frame.
    pub fn max_count(&self) -> u32 {
        self.lif.max_spikes(self.steps_per_frame, self.dt).max(1)
    }
}
