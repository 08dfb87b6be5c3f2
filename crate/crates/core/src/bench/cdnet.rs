use super::{io_err, BenchError, GtFrame, GtLabel, Result, SyntheticSequence};
use crate::imaging::{read_gray_u8, read_raw, write_gray_png, write_raw_png, RawFrame};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// A sequence in the change-detection layout:
///
/// ```text
/// input/in000001.jpg ...
/// groundtruth/gt000001.png ...
/// temporalROI.txt        "first last" (1-based frame numbers)
/// ROI.bmp                optional spatial mask, white = evaluated
/// ```
///
/// Frames are read on demand.
#[derive(Clone, Debug)]
pub struct CdnetSequence {
    pub root: PathBuf,
    numbers: Vec<usize>,
    inputs: Vec<PathBuf>,
    truths: Vec<PathBuf>,
    pub temporal_roi: (usize, usize),
    roi: Option<(usize, usize, Vec<bool>)>,
}

fn numbered_files(dir: &Path, prefix: &str) -> Result<BTreeMap<usize, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if let Some(n) = stem
            .strip_prefix(prefix)
            .and_then(|d| d.parse::<usize>().ok())
        {
            out.insert(n, path);
        }
    }
    Ok(out)
}

fn parse_temporal_roi(text: &str) -> Result<(usize, usize)> {
    let nums: Vec<&str> = text.split_whitespace().collect();
    let parsed: Option<Vec<usize>> = nums.iter().map(|s| s.parse().ok()).collect();
    match parsed.as_deref() {
        Some([a, b]) if a <= b => Ok((*a, *b)),
        _ => Err(BenchError::BadTemporalRoi(text.trim().to_string())),
    }
}

pub fn load_cdnet(path: &Path) -> Result<CdnetSequence> {
    let input_dir = path.join("input");
    let gt_dir = path.join("groundtruth");
    for d in [&input_dir, &gt_dir] {
        if !d.is_dir() {
            return Err(BenchError::MissingDir(d.clone()));
        }
    }
    let inputs = numbered_files(&input_dir, "in")?;
    let truths = numbered_files(&gt_dir, "gt")?;
    let mut numbers = Vec::with_capacity(inputs.len());
    let mut in_paths = Vec::with_capacity(inputs.len());
    let mut gt_paths = Vec::with_capacity(inputs.len());
    for (&n, p) in &inputs {
        let gt = truths.get(&n).ok_or(BenchError::MissingGt { index: n })?;
        numbers.push(n);
        in_paths.push(p.clone());
        gt_paths.push(gt.clone());
    }
    if truths.len() != inputs.len() {
        return Err(BenchError::CountMismatch {
            inputs: inputs.len(),
            truths: truths.len(),
        });
    }

    let roi_file = path.join("temporalROI.txt");
    let temporal_roi = if roi_file.exists() {
        parse_temporal_roi(&std::fs::read_to_string(&roi_file).map_err(io_err(&roi_file))?)?
    } else {
        (
            numbers.first().copied().unwrap_or(1),
            numbers.last().copied().unwrap_or(0),
        )
    };

    let mut roi = None;
    for name in ["ROI.bmp", "ROI.png", "ROI.jpg"] {
        let p = path.join(name);
        if p.exists() {
            let (w, h, px) = read_gray_u8(&p)?;
            roi = Some((w, h, px.into_iter().map(|v| v > 127).collect()));
            break;
        }
    }

    Ok(CdnetSequence {
        root: path.to_path_buf(),
        numbers,
        inputs: in_paths,
        truths: gt_paths,
        temporal_roi,
        roi,
    })
}

impl CdnetSequence {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// 1-based number encoded in the file name of frame `i`.
    pub fn frame_number(&self, i: usize) -> usize {
        self.numbers[i]
    }

    pub fn input_paths(&self) -> &[PathBuf] {
        &self.inputs
    }

    pub fn in_temporal_roi(&self, i: usize) -> bool {
        let n = self.numbers[i];
        n >= self.temporal_roi.0 && n <= self.temporal_roi.1
    }

    pub fn load_frame(&self, i: usize) -> Result<RawFrame> {
        Ok(read_raw(&self.inputs[i])?)
    }

    /// Ground truth for frame `i`; pixels outside the spatial ROI become
    /// [`GtLabel::NonRoi`].
    pub fn load_gt(&self, i: usize) -> Result<GtFrame> {
        let (w, h, codes) = read_gray_u8(&self.truths[i])?;
        let mut gt = GtFrame::from_codes(w, h, &codes)?;
        if let Some((rw, rh, mask)) = &self.roi {
            if (*rw, *rh) != (w, h) {
                return Err(BenchError::DimensionMismatch {
                    want_w: w,
                    want_h: h,
                    got_w: *rw,
                    got_h: *rh,
                });
            }
            for (l, &inside) in gt.labels.iter_mut().zip(mask) {
                if !inside {
                    *l = GtLabel::NonRoi;
                }
            }
        }
        Ok(gt)
    }
}

/// Writes a generated sequence in the layout read by [`load_cdnet`], with
/// lossless PNG inputs. Frame numbers start at 1.
pub fn export_cdnet(
    dir: &Path,
    seq: &SyntheticSequence,
    temporal_roi: Option<(usize, usize)>,
) -> Result<()> {
    let input_dir = dir.join("input");
    let gt_dir = dir.join("groundtruth");
    for d in [&input_dir, &gt_dir] {
        std::fs::create_dir_all(d).map_err(io_err(d))?;
    }
    for (i, (frame, gt)) in seq.frames.iter().zip(&seq.gt).enumerate() {
        let n = i + 1;
        write_raw_png(&input_dir.join(format!("in{n:06}.png")), frame)?;
        write_gray_png(
            &gt_dir.join(format!("gt{n:06}.png")),
            gt.width,
            gt.height,
            &gt.to_codes(),
        )?;
    }
    let (a, b) = temporal_roi.unwrap_or((1, seq.frames.len()));
    let roi_file = dir.join("temporalROI.txt");
    std::fs::write(&roi_file, format!("{a} {b}\n")).map_err(io_err(&roi_file))?;
    Ok(())
}
