use super::{HsmdError, Result};
use crate::imaging::GrayFrame;

/// A background-subtraction stage: consumes frames in order and returns the
/// foreground intensity of each.
pub trait Backend {
    fn apply(&mut self, frame: &GrayFrame) -> Result<GrayFrame>;
    fn name(&self) -> &str;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    FrameDiff,
    RunningGaussian,
}

impl BackendKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "diff" | "frame_diff" => Some(Self::FrameDiff),
            "gauss" | "running_gaussian" => Some(Self::RunningGaussian),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BackendParams {
    /// Exponential learning rate of the running model.
    pub alpha: f64,
    /// Frame-diff cut-off; smaller absolute differences are zeroed.
    pub diff_threshold: f64,
    /// Deviation multiplier for the running model.
    pub k_sigma: f64,
    /// Floor on the standard deviation used in the deviation test.
    pub min_std: f64,
}

impl Default for BackendParams {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            diff_threshold: 0.1,
            k_sigma: 2.5,
            min_std: 0.02,
        }
    }
}

impl BackendParams {
    pub fn validate(&self) -> Result<()> {
        // alpha = 1 is allowed: it is the full-replacement limit
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(bad("alpha", format!("{} is outside (0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.diff_threshold) {
            return Err(bad(
                "diff_threshold",
                format!("{} is outside [0, 1]", self.diff_threshold),
            ));
        }
        if !(self.k_sigma.is_finite() && self.k_sigma >= 0.0) {
            return Err(bad("k_sigma", format!("{} must be >= 0", self.k_sigma)));
        }
        if !(self.min_std.is_finite() && self.min_std >= 0.0) {
            return Err(bad("min_std", format!("{} must be >= 0", self.min_std)));
        }
        Ok(())
    }
}

fn bad(key: &'static str, reason: String) -> HsmdError {
    HsmdError::BadConfig { key, reason }
}

/// State of one of the built-in backends.
#[derive(Clone, Debug)]
pub struct BsBackendState {
    kind: BackendKind,
    params: BackendParams,
    dims: Option<(usize, usize)>,
    previous: Option<GrayFrame>,
    mean: Vec<f64>,
    variance: Vec<f64>,
    seen: u64,
}

impl BsBackendState {
    pub fn new(kind: BackendKind, params: BackendParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            kind,
            params,
            dims: None,
            previous: None,
            mean: Vec::new(),
            variance: Vec::new(),
            seen: 0,
        })
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn params(&self) -> &BackendParams {
        &self.params
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> &[f64] {
        &self.variance
    }

    /// Returns true on the first frame, after fixing the dimensions.
    fn check_dims(&mut self, frame: &GrayFrame) -> Result<bool> {
        let (w, h) = frame.dims();
        match self.dims {
            None => {
                self.dims = Some((w, h));
                Ok(true)
            }
            Some((want_w, want_h)) if (want_w, want_h) != (w, h) => {
                Err(HsmdError::DimensionMismatch {
                    want_w,
                    want_h,
                    got_w: w,
                    got_h: h,
                })
            }
            Some(_) => Ok(false),
        }
    }

    /// `|frame - previous|`, zeroed below the threshold. The first frame
    /// yields all zeros.
    pub fn frame_diff(&mut self, frame: &GrayFrame) -> Result<GrayFrame> {
        let first = self.check_dims(frame)?;
        let (w, h) = frame.dims();
        let out = match (&self.previous, first) {
            (Some(prev), false) => {
                let t = self.params.diff_threshold;
                let data = frame
                    .data()
                    .iter()
                    .zip(prev.data())
                    .map(|(&a, &b)| {
                        let d = (a - b).abs();
                        if d < t {
                            0.0
                        } else {
                            d
                        }
                    })
                    .collect();
                GrayFrame::from_clamped(w, h, data)
            }
            _ => GrayFrame::filled(w, h, 0.0),
        };
        self.previous = Some(frame.clone());
        Ok(out)
    }

    /// Per-pixel Gaussian model. A pixel is foreground (keeping its own
    /// intensity) when it deviates from the running mean by more than
    /// `k_sigma` standard deviations; the model is then updated.
    ///
    /// The effective rate is `max(alpha, 1 / (n + 1))` after `n` frames, so
    /// the model starts as the plain running average and only settles into
    /// exponential forgetting once `1 / (n + 1)` drops below `alpha`. An
    /// object present in the first frame is therefore not frozen into the
    /// background.
    pub fn running_gaussian(&mut self, frame: &GrayFrame) -> Result<GrayFrame> {
        let first = self.check_dims(frame)?;
        let (w, h) = frame.dims();
        let p = self.params;
        if first {
            self.mean = frame.data().to_vec();
            self.variance = vec![p.min_std * p.min_std; frame.len()];
            self.seen = 1;
            return Ok(GrayFrame::filled(w, h, 0.0));
        }
        let alpha = p.alpha.max(1.0 / (self.seen + 1) as f64);
        self.seen += 1;
        let min_var = p.min_std * p.min_std;
        let mut out = vec![0.0; frame.len()];
        for (i, &x) in frame.data().iter().enumerate() {
            let mean = &mut self.mean[i];
            let var = &mut self.variance[i];
            let d = x - *mean;
            let limit = p.k_sigma * var.max(min_var).sqrt();
            if d.abs() > limit {
                out[i] = x;
            }
            *mean += alpha * d;
            *var = (1.0 - alpha) * (*var + alpha * d * d);
        }
        Ok(GrayFrame::from_clamped(w, h, out))
    }
}

impl Backend for BsBackendState {
    fn apply(&mut self, frame: &GrayFrame) -> Result<GrayFrame> {
        match self.kind {
            BackendKind::FrameDiff => self.frame_diff(frame),
            BackendKind::RunningGaussian => self.running_gaussian(frame),
        }
    }

    fn name(&self) -> &str {
        match self.kind {
            BackendKind::FrameDiff => "frame_diff",
            BackendKind::RunningGaussian => "running_gaussian",
        }
    }
}
