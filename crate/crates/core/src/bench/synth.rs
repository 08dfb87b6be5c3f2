use super::{BenchError, GtFrame, GtLabel, Result};
use crate::imaging::RawFrame;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Rect { width: usize, height: usize },
    Disc { radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Background {
    Constant(f64),
    /// Intensity `start + per_frame * t`, clamped to [0, 1].
    Drifting {
        start: f64,
        per_frame: f64,
    },
}

impl Background {
    fn at(self, t: usize) -> f64 {
        match self {
            Background::Constant(v) => v,
            Background::Drifting { start, per_frame } => {
                (start + per_frame * t as f64).clamp(0.0, 1.0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSceneSpec {
    pub width: usize,
    pub height: usize,
    pub shape: Shape,
    pub object_intensity: f64,
    /// Top-left corner of the object's bounding box at frame 0, (row, col).
    pub start: (f64, f64),
    /// Displacement per frame, (rows, cols).
    pub velocity: (f64, f64),
    pub n_frames: usize,
    pub background: Background,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Objects leaving one edge re-enter at the opposite edge.
    pub wrap: bool,
}

impl Default for SyntheticSceneSpec {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            shape: Shape::Rect {
                width: 20,
                height: 20,
            },
            object_intensity: 0.9,
            start: (110.0, 0.0),
            velocity: (0.0, 2.0),
            n_frames: 200,
            background: Background::Constant(0.2),
            noise_sigma: 0.01,
            seed: 1,
            wrap: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSequence {
    pub frames: Vec<RawFrame>,
    pub gt: Vec<GtFrame>,
}

impl SyntheticSceneSpec {
    fn extent(&self) -> (f64, f64) {
        match self.shape {
            Shape::Rect { width, height } => (height as f64, width as f64),
            Shape::Disc { radius } => (2.0 * radius, 2.0 * radius),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(BenchError::BadScene(m.to_string()));
        if self.width < 3 || self.height < 3 {
            return bad("frame must be at least 3x3");
        }
        if let Shape::Disc { radius } = self.shape {
            if !(radius > 0.0 && radius.is_finite()) {
                return bad("disc radius must be positive");
            }
        }
        if let Shape::Rect { width, height } = self.shape {
            if width == 0 || height == 0 {
                return bad("object must be non-empty");
            }
        }
        let (eh, ew) = self.extent();
        if eh > self.height as f64 || ew > self.width as f64 {
            return bad("object larger than frame");
        }
        for v in [self.object_intensity, self.background.at(0)] {
            if !(0.0..=1.0).contains(&v) {
                return bad("intensities must lie in [0, 1]");
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise sigma must be >= 0");
        }
        if !self.wrap {
            for t in 0..self.n_frames {
                let (r, c) = self.position(t);
                if r < 0.0 || c < 0.0 || r + eh > self.height as f64 || c + ew > self.width as f64 {
                    return bad("object leaves the frame");
                }
            }
        }
        Ok(())
    }

    /// Top-left corner at frame `t`.
    pub fn position(&self, t: usize) -> (f64, f64) {
        (
            self.start.0 + self.velocity.0 * t as f64,
            self.start.1 + self.velocity.1 * t as f64,
        )
    }

    /// Object membership for every pixel at frame `t`.
    pub fn object_mask(&self, t: usize) -> Vec<bool> {
        let (w, h) = (self.width, self.height);
        let mut mask = vec![false; w * h];
        let (pr, pc) = self.position(t);
        match self.shape {
            Shape::Rect { width, height } => {
                let (r0, c0) = (pr.floor() as i64, pc.floor() as i64);
                for dr in 0..height as i64 {
                    for dc in 0..width as i64 {
                        if let Some(i) = self.index(r0 + dr, c0 + dc) {
                            mask[i] = true;
                        }
                    }
                }
            }
            Shape::Disc { radius } => {
                let (cy, cx) = (pr + radius, pc + radius);
                let r0 = (pr.floor() as i64) - 1;
                let c0 = (pc.floor() as i64) - 1;
                let span = (2.0 * radius).ceil() as i64 + 2;
                for r in r0..r0 + span {
                    for c in c0..c0 + span {
                        let dy = r as f64 + 0.5 - cy;
                        let dx = c as f64 + 0.5 - cx;
                        if dy * dy + dx * dx <= radius * radius {
                            if let Some(i) = self.index(r, c) {
                                mask[i] = true;
                            }
                        }
                    }
                }
            }
        }
        mask
    }

    fn index(&self, r: i64, c: i64) -> Option<usize> {
        let (w, h) = (self.width as i64, self.height as i64);
        let (r, c) = if self.wrap {
            (r.rem_euclid(h), c.rem_euclid(w))
        } else {
            (r, c)
        };
        (r >= 0 && r < h && c >= 0 && c < w).then(|| (r * w + c) as usize)
    }

    /// Renders frame `t`. Each frame draws its noise from its own stream so
    /// frames can be produced in any order.
    pub fn render(&self, t: usize) -> (RawFrame, GtFrame) {
        let mask = self.object_mask(t);
        let bg = self.background.at(t);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t as u64);
        let noise = Normal::new(0.0, self.noise_sigma.max(0.0)).expect("sigma validated");
        let gray: Vec<u8> = mask
            .iter()
            .map(|&m| {
                let base = if m { self.object_intensity } else { bg };
                let v = if self.noise_sigma > 0.0 {
                    base + noise.sample(&mut rng)
                } else {
                    base
                };
                (v.clamp(0.0, 1.0) * 255.0).round() as u8
            })
            .collect();
        let frame = RawFrame::from_gray_u8(self.width, self.height, &gray).expect("size validated");
        let labels = mask
            .iter()
            .map(|&m| if m { GtLabel::Moving } else { GtLabel::Static })
            .collect();
        let gt = GtFrame {
            width: self.width,
            height: self.height,
            labels,
        };
        (frame, gt)
    }
}

pub fn synth_generate(spec: &SyntheticSceneSpec) -> Result<SyntheticSequence> {
    spec.validate()?;
    let (frames, gt) = (0..spec.n_frames).map(|t| spec.render(t)).unzip();
    Ok(SyntheticSequence { frames, gt })
}
