//! Direction-sensitive spiking network: binarized input, a DoG edge layer,
//! four directional feature maps, delay-coincidence populations and four
//! trained direction cells. Also the centre-of-mass baseline and the
//! correct/wrong classification percentages.

mod codd;
mod dataset;
mod network;
mod resume;
mod topology;
mod train;
mod weights;

pub use codd::{
    backend_masks, codd_direction, codd_direction_binary, codd_track, pcc_pwc, CoddOutput,
};
pub use dataset::{direction_suite, LabelledSequence, SuiteSpec};
pub use network::{l3_stencil, MhsnnNetwork, StencilTap, StepRaster, Synapse, SynapseLayer};
pub use resume::{resume_delta, resume_step, resume_window, ResumeParams, SynapseKind};
pub use topology::{topology_counts, Topology};
pub use train::{
    classify, decide, evaluate, train, DirectionLabel, DirectionScore, TrainLog, TrainOptions,
};
pub use weights::{export_weights_csv, load_weights, save_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};

use crate::bench::BenchError;
use crate::imaging::{Direction, ImagingError};
use crate::lif::{LifError, LifParams};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MhsnnError {
    #[error("image {l}x{w} is too small, need at least 5x5")]
    TooSmall { l: usize, w: usize },
    #[error("feature count {0} must be between 0 and 4")]
    BadFeatureCount(usize),
    #[error("frame is {got_w}x{got_h}, network expects {want_w}x{want_h}")]
    SizeMismatch {
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("sequence {0} has no direction label")]
    Unlabelled(usize),
    #[error("no classifications to score")]
    EmptyScore,
    #[error("invalid parameter {name}: {reason}")]
    BadParam { name: &'static str, reason: String },
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("bad weights file: {0}")]
    BadWeightsFile(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Lif(#[from] LifError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, MhsnnError>;

/// Memoryless LIF constants: with `tau_m == dt` the potential after a step
/// is `e_l + r_m * I`, so each layer fires on the current frame's input only.
fn memoryless(v_th: f64, dt: f64) -> LifParams {
    LifParams {
        c_m: 1.0,
        r_m: 1.0,
        e_l: 0.0,
        v_reset: -1.0,
        v_min: -1.0,
        v_th,
        tau_m: dt,
        t_ref: 0.0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MhsnnParams {
    /// Number of movement features, taken in the order left, right, up, down.
    pub m_f: usize,
    /// Input pixels at or above this intensity spike.
    pub binarize_threshold: f64,
    pub dog_size: usize,
    pub dog_sigma: f64,
    pub dog_ratio: f64,
    pub direction_size: usize,
    /// Scale from receptive-field sums to input current.
    pub l1_gain: f64,
    pub l2_gain: f64,
    pub l3_gain: f64,
    pub l4_gain: f64,
    pub l1: LifParams,
    pub l2: LifParams,
    pub l3: LifParams,
    pub l4: LifParams,
    /// Simulation step per frame (ms).
    pub dt: f64,
}

impl Default for MhsnnParams {
    fn default() -> Self {
        let dt = 1.0;
        Self {
            m_f: 4,
            binarize_threshold: 0.85,
            dog_size: 3,
            dog_sigma: 0.5,
            dog_ratio: crate::imaging::DEFAULT_DOG_RATIO,
            direction_size: 3,
            l1_gain: 10.0,
            l2_gain: 1.0,
            l3_gain: 1.0,
            l4_gain: 1.0,
            l1: memoryless(0.5, dt),
            l2: memoryless(0.5, dt),
            l3: memoryless(3.5, dt),
            l4: memoryless(30.0, dt),
            dt,
        }
    }
}

impl MhsnnParams {
    pub fn validate(&self) -> Result<()> {
        if self.m_f > 4 {
            return Err(MhsnnError::BadFeatureCount(self.m_f));
        }
        if !(0.0..=1.0).contains(&self.binarize_threshold) {
            return Err(MhsnnError::BadParam {
                name: "binarize_threshold",
                reason: format!("{} is outside [0, 1]", self.binarize_threshold),
            });
        }
        if self.dog_size != 3 || self.direction_size != 3 {
            return Err(MhsnnError::BadParam {
                name: "filter size",
                reason: "layer sizes assume 3x3 receptive fields".into(),
            });
        }
        for (name, g) in [
            ("l1_gain", self.l1_gain),
            ("l2_gain", self.l2_gain),
            ("l3_gain", self.l3_gain),
            ("l4_gain", self.l4_gain),
        ] {
            if !(g.is_finite() && g > 0.0) {
                return Err(MhsnnError::BadParam {
                    name,
                    reason: format!("{g} must be > 0"),
                });
            }
        }
        for p in [&self.l1, &self.l2, &self.l3, &self.l4] {
            p.validate()?;
            p.check_dt(self.dt)?;
        }
        Ok(())
    }

    /// The movement features in use.
    pub fn features(&self) -> &'static [Direction] {
        &Direction::ALL[..self.m_f.min(4)]
    }

    /// Index of the feature whose cell inhibits feature `k`'s cell: the
    /// opposite direction when present, otherwise `k` itself.
    pub fn pair(&self, k: usize) -> usize {
        let p = k ^ 1;
        if p < self.m_f {
            p
        } else {
            k
        }
    }
}
