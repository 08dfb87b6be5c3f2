use super::{BenchError, GtFrame, GtLabel, Result};
use crate::hsmd::MotionMask;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn add(&mut self, other: &ConfusionCounts) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

impl std::ops::AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.add(&rhs);
    }
}

/// Scores a binary mask against labelled ground truth. Non-ROI and unknown
/// pixels are skipped; shadows count as background.
pub fn score_binary(
    width: usize,
    height: usize,
    mask: &[bool],
    gt: &GtFrame,
) -> Result<ConfusionCounts> {
    if (width, height) != (gt.width, gt.height) || mask.len() != gt.labels.len() {
        return Err(BenchError::DimensionMismatch {
            want_w: gt.width,
            want_h: gt.height,
            got_w: width,
            got_h: height,
        });
    }
    let mut c = ConfusionCounts::default();
    for (&m, &label) in mask.iter().zip(&gt.labels) {
        if label.is_excluded() {
            continue;
        }
        let positive = label == GtLabel::Moving;
        match (m, positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn score_frame(mask: &MotionMask, gt: &GtFrame) -> Result<ConfusionCounts> {
    score_binary(mask.width, mask.height, &mask.binary, gt)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    Re,
    Sp,
    Fpr,
    Fnr,
    Wcr,
    Ccr,
    Pr,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Re,
        Metric::Sp,
        Metric::Fpr,
        Metric::Fnr,
        Metric::Wcr,
        Metric::Ccr,
        Metric::Pr,
        Metric::F1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Re => "re",
            Metric::Sp => "sp",
            Metric::Fpr => "fpr",
            Metric::Fnr => "fnr",
            Metric::Wcr => "wcr",
            Metric::Ccr => "ccr",
            Metric::Pr => "pr",
            Metric::F1 => "f1",
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Fpr | Metric::Fnr | Metric::Wcr)
    }
}

/// An unreduced ratio of counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    /// Correctly rounded value; 0 for an empty denominator.
    pub fn value(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }
}

impl ConfusionCounts {
    /// Each metric as a ratio of counts.
    pub fn fraction(&self, m: Metric) -> Fraction {
        let ConfusionCounts { tp, tn, fp, fn_ } = *self;
        let f = |num, den| Fraction { num, den };
        match m {
            Metric::Re => f(tp, tp + fn_),
            Metric::Sp => f(tn, tn + fp),
            Metric::Fpr => f(fp, fp + tn),
            Metric::Fnr => f(fn_, tp + fn_),
            Metric::Wcr => f(fp + fn_, self.total()),
            Metric::Ccr => f(tp + tn, self.total()),
            Metric::Pr => f(tp, tp + fp),
            // harmonic mean of Pr and Re, simplified; with tp = 0 both are
            // zero (or undefined) and so is the mean's denominator
            Metric::F1 => {
                if tp == 0 {
                    f(0, 0)
                } else {
                    f(2 * tp, 2 * tp + fp + fn_)
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub category: String,
    pub re: f64,
    pub sp: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub wcr: f64,
    pub ccr: f64,
    pub pr: f64,
    pub f1: f64,
    /// Metrics whose denominator was zero and were reported as 0.
    pub undefined: Vec<Metric>,
}

impl MetricsReport {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Re => self.re,
            Metric::Sp => self.sp,
            Metric::Fpr => self.fpr,
            Metric::Fnr => self.fnr,
            Metric::Wcr => self.wcr,
            Metric::Ccr => self.ccr,
            Metric::Pr => self.pr,
            Metric::F1 => self.f1,
        }
    }

    pub fn set(&mut self, m: Metric, v: f64) {
        match m {
            Metric::Re => self.re = v,
            Metric::Sp => self.sp = v,
            Metric::Fpr => self.fpr = v,
            Metric::Fnr => self.fnr = v,
            Metric::Wcr => self.wcr = v,
            Metric::Ccr => self.ccr = v,
            Metric::Pr => self.pr = v,
            Metric::F1 => self.f1 = v,
        }
    }

    pub fn with_labels(mut self, method: &str, category: &str) -> Self {
        self.method = method.to_string();
        self.category = category.to_string();
        self
    }
}

pub fn compute_metrics(c: &ConfusionCounts) -> MetricsReport {
    let mut r = MetricsReport {
        method: String::new(),
        category: String::new(),
        re: 0.0,
        sp: 0.0,
        fpr: 0.0,
        fnr: 0.0,
        wcr: 0.0,
        ccr: 0.0,
        pr: 0.0,
        f1: 0.0,
        undefined: Vec::new(),
    };
    for m in Metric::ALL {
        let f = c.fraction(m);
        let undefined = f.den == 0;
        if undefined {
            r.undefined.push(m);
        }
        r.set(m, if undefined { 0.0 } else { f.value() });
    }
    r
}
