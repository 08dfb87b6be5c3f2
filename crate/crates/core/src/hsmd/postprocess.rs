use super::{HsmdConfig, HsmdError, Result};
use crate::imaging::{box_filter_plane, GrayFrame};

#[derive(Clone, Debug, PartialEq)]
pub struct MotionMask {
    pub width: usize,
    pub height: usize,
    pub spike_sums: Vec<u32>,
    /// Smoothed sums divided by the per-frame ceiling, in [0, 1].
    pub normalized: Vec<f64>,
    pub binary: Vec<bool>,
}

impl MotionMask {
    /// Wraps an already binary mask (oracle masks, loaded results).
    pub fn from_binary(width: usize, height: usize, binary: Vec<bool>) -> Result<Self> {
        if binary.len() != width * height {
            return Err(HsmdError::LengthMismatch {
                expected: width * height,
                got: binary.len(),
            });
        }
        Ok(Self {
            width,
            height,
            spike_sums: binary.iter().map(|&b| b as u32).collect(),
            normalized: binary.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            binary,
        })
    }

    pub fn foreground_count(&self) -> usize {
        self.binary.iter().filter(|&&b| b).count()
    }

    /// 0/255 bytes, row-major.
    pub fn to_u8(&self) -> Vec<u8> {
        self.binary
            .iter()
            .map(|&b| if b { 255 } else { 0 })
            .collect()
    }

    pub fn normalized_frame(&self) -> GrayFrame {
        GrayFrame::from_clamped(self.width, self.height, self.normalized.clone())
    }
}

/// Smooths spike sums with the configured box window, scales by the highest
/// reachable count and thresholds.
pub fn postprocess(
    spike_sums: &[u32],
    width: usize,
    height: usize,
    cfg: &HsmdConfig,
) -> Result<MotionMask> {
    if spike_sums.len() != width * height {
        return Err(HsmdError::LengthMismatch {
            expected: width * height,
            got: spike_sums.len(),
        });
    }
    let sums: Vec<f64> = spike_sums.iter().map(|&s| s as f64).collect();
    let smoothed = box_filter_plane(&sums, width, height, cfg.filter_u, cfg.filter_v)?;
    let ceiling = cfg.max_count() as f64;
    let normalized: Vec<f64> = smoothed
        .into_iter()
        .map(|s| (s / ceiling).clamp(0.0, 1.0))
        .collect();
    let binary = normalized
        .iter()
        .map(|&x| x >= cfg.mask_threshold)
        .collect();
    Ok(MotionMask {
        width,
        height,
        spike_sums: spike_sums.to_vec(),
        normalized,
        binary,
    })
}
