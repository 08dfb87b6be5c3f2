use super::{DirectionLabel, MhsnnError, Result};
use crate::hsmd::{Backend, BackendKind, BackendParams, BsBackendState, MotionMask};
use crate::imaging::GrayFrame;

/// Result of the centre-of-mass direction estimate for one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoddOutput {
    pub horizontal: DirectionLabel,
    pub vertical: DirectionLabel,
    /// The component with the larger displacement; `None` on a tie or when
    /// either centroid is missing.
    pub label: DirectionLabel,
    /// Centroid (row, col) to pass to the next frame. Carried over from the
    /// previous frame when the mask is empty.
    pub cm: Option<(f64, f64)>,
}

fn centroid(width: usize, mask: &[bool]) -> Option<(f64, f64)> {
    let (mut sr, mut sc, mut n) = (0.0, 0.0, 0usize);
    for (i, _) in mask.iter().enumerate().filter(|(_, &b)| b) {
        sr += (i / width) as f64;
        sc += (i % width) as f64;
        n += 1;
    }
    (n > 0).then(|| (sr / n as f64, sc / n as f64))
}

/// Direction from the shift of the mask centroid since the previous frame.
pub fn codd_direction_binary(
    width: usize,
    mask: &[bool],
    prev_cm: Option<(f64, f64)>,
) -> CoddOutput {
    let cm = centroid(width.max(1), mask);
    let (Some((r1, c1)), Some((r0, c0))) = (cm, prev_cm) else {
        return CoddOutput {
            horizontal: DirectionLabel::None,
            vertical: DirectionLabel::None,
            label: DirectionLabel::None,
            cm: cm.or(prev_cm),
        };
    };
    let (di, dj) = (r1 - r0, c1 - c0);
    let horizontal = if dj > 0.0 {
        DirectionLabel::Rightwards
    } else if dj < 0.0 {
        DirectionLabel::Leftwards
    } else {
        DirectionLabel::None
    };
    let vertical = if di > 0.0 {
        DirectionLabel::Downwards
    } else if di < 0.0 {
        DirectionLabel::Upwards
    } else {
        DirectionLabel::None
    };
    let label = match dj.abs().partial_cmp(&di.abs()) {
        Some(std::cmp::Ordering::Greater) => horizontal,
        Some(std::cmp::Ordering::Less) => vertical,
        _ => DirectionLabel::None,
    };
    CoddOutput {
        horizontal,
        vertical,
        label,
        cm,
    }
}

pub fn codd_direction(mask: &MotionMask, prev_cm: Option<(f64, f64)>) -> CoddOutput {
    codd_direction_binary(mask.width, &mask.binary, prev_cm)
}

/// Runs the estimate over a whole sequence of masks, threading the
/// centroid from frame to frame.
pub fn codd_track<'a, I>(width: usize, masks: I) -> Vec<CoddOutput>
where
    I: IntoIterator<Item = &'a [bool]>,
{
    let mut cm = None;
    masks
        .into_iter()
        .map(|m| {
            let out = codd_direction_binary(width, m, cm);
            cm = out.cm;
            out
        })
        .collect()
}

/// Foreground masks (any non-zero output) of a fresh background model run
/// over `frames`.
pub fn backend_masks(
    kind: BackendKind,
    params: BackendParams,
    frames: &[GrayFrame],
) -> Result<Vec<Vec<bool>>> {
    let mut bs = BsBackendState::new(kind, params).map_err(|e| MhsnnError::BadParam {
        name: "backend",
        reason: e.to_string(),
    })?;
    frames
        .iter()
        .map(|f| {
            let fg = bs.apply(f).map_err(|e| MhsnnError::BadParam {
                name: "backend",
                reason: e.to_string(),
            })?;
            Ok(fg.data().iter().map(|&v| v > 0.0).collect())
        })
        .collect()
}

/// Percentages of correct and wrong classifications.
pub fn pcc_pwc(correct: u64, wrong: u64) -> Result<(f64, f64)> {
    let total = correct + wrong;
    if total == 0 {
        return Err(MhsnnError::EmptyScore);
    }
    let t = total as f64;
    Ok((100.0 * correct as f64 / t, 100.0 * wrong as f64 / t))
}
