use super::{
    encode_currents, postprocess, Backend, HsmdConfig, HsmdError, MotionMask, Result, SnnState,
};
use crate::imaging::{read_raw, to_grayscale, GrayFrame, RawFrame};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Wall-clock milliseconds spent in each stage for one frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageTimes {
    pub grayscale: f64,
    pub backend: f64,
    pub encode: f64,
    pub snn: f64,
    pub postprocess: f64,
}

impl StageTimes {
    pub fn total(&self) -> f64 {
        self.grayscale + self.backend + self.encode + self.snn + self.postprocess
    }

    pub fn add(&mut self, other: &StageTimes) {
        self.grayscale += other.grayscale;
        self.backend += other.backend;
        self.encode += other.encode;
        self.snn += other.snn;
        self.postprocess += other.postprocess;
    }

    pub fn scaled(&self, k: f64) -> StageTimes {
        StageTimes {
            grayscale: self.grayscale * k,
            backend: self.backend * k,
            encode: self.encode * k,
            snn: self.snn * k,
            postprocess: self.postprocess * k,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrameTiming {
    pub index: usize,
    pub stages: StageTimes,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub mask: MotionMask,
    pub timing: FrameTiming,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Frames are consumed strictly in order; the SNN state is created on the
/// first frame and fixes the expected dimensions.
pub struct Pipeline {
    cfg: HsmdConfig,
    backend: Box<dyn Backend + Send>,
    snn: Option<(usize, usize, SnnState)>,
    frames: usize,
}

impl Pipeline {
    pub fn new(cfg: HsmdConfig, backend: Box<dyn Backend + Send>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            backend,
            snn: None,
            frames: 0,
        })
    }

    pub fn config(&self) -> &HsmdConfig {
        &self.cfg
    }

    pub fn frames_processed(&self) -> usize {
        self.frames
    }

    pub fn process_raw(&mut self, frame: &RawFrame) -> Result<PipelineOutput> {
        let t = Instant::now();
        let gray = to_grayscale(frame);
        let grayscale = ms_since(t);
        let mut out = self.process_gray(&gray)?;
        out.timing.stages.grayscale = grayscale;
        Ok(out)
    }

    pub fn process_gray(&mut self, frame: &GrayFrame) -> Result<PipelineOutput> {
        let (w, h) = frame.dims();
        let mut stages = StageTimes::default();

        let t = Instant::now();
        let fg = self.backend.apply(frame)?;
        stages.backend = ms_since(t);

        let t = Instant::now();
        let currents = encode_currents(&fg, &self.cfg);
        stages.encode = ms_since(t);

        let t = Instant::now();
        if self.snn.is_none() {
            self.snn = Some((w, h, SnnState::new(w * h, self.cfg.lif)?));
        }
        let (sw, sh, snn) = self.snn.as_mut().expect("initialized above");
        if (*sw, *sh) != (w, h) {
            return Err(HsmdError::DimensionMismatch {
                want_w: *sw,
                want_h: *sh,
                got_w: w,
                got_h: h,
            });
        }
        let spikes = snn.process_frame(&currents, &self.cfg)?;
        stages.snn = ms_since(t);

        let t = Instant::now();
        let mask = postprocess(&spikes.l4, w, h, &self.cfg)?;
        stages.postprocess = ms_since(t);

        let index = self.frames;
        self.frames += 1;
        Ok(PipelineOutput {
            mask,
            timing: FrameTiming { index, stages },
        })
    }

    /// Reads and processes each path in order, handing every result to
    /// `sink`. Returns the per-frame timings.
    pub fn run_paths<F>(&mut self, paths: &[PathBuf], mut sink: F) -> Result<Vec<FrameTiming>>
    where
        F: FnMut(&PipelineOutput) -> Result<()>,
    {
        if paths.is_empty() {
            return Err(HsmdError::NoFrames);
        }
        let mut timings = Vec::with_capacity(paths.len());
        for (index, path) in paths.iter().enumerate() {
            let raw = read_raw(path).map_err(|source| HsmdError::Frame { index, source })?;
            let out = self.process_raw(&raw)?;
            sink(&out)?;
            timings.push(out.timing);
        }
        Ok(timings)
    }
}

/// Image files in `dir`, sorted by file name.
pub fn frame_paths(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| {
                        matches!(
                            e.to_ascii_lowercase().as_str(),
                            "png" | "jpg" | "jpeg" | "bmp"
                        )
                    })
                    .unwrap_or(false)
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Frames per second implied by the summed stage times.
pub fn mean_fps(timings: &[FrameTiming]) -> f64 {
    let total: f64 = timings.iter().map(|t| t.stages.total()).sum();
    if total <= 0.0 {
        0.0
    } else {
        timings.len() as f64 / (total / 1e3)
    }
}
