use super::{MhsnnError, Result};
use crate::bench::{synth_generate, Background, GtFrame, Shape, SyntheticSceneSpec};
use crate::imaging::{to_grayscale, Direction, GrayFrame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A clip with one moving object and the direction it moves in.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelledSequence {
    pub label: Option<Direction>,
    pub frames: Vec<GrayFrame>,
    pub gt: Vec<GtFrame>,
}

impl LabelledSequence {
    /// The same clip mirrored left-right, with the label mirrored too.
    pub fn flip_horizontal(&self) -> Self {
        Self {
            label: self
                .label
                .map(|d| if d.is_horizontal() { d.opposite() } else { d }),
            frames: self.frames.iter().map(GrayFrame::flip_horizontal).collect(),
            gt: self.gt.iter().map(flip_gt).collect(),
        }
    }

    /// Rows and columns swapped: rightwards becomes downwards and so on.
    pub fn transpose(&self) -> Self {
        Self {
            label: self.label.map(|d| match d {
                Direction::Left => Direction::Up,
                Direction::Right => Direction::Down,
                Direction::Up => Direction::Left,
                Direction::Down => Direction::Right,
            }),
            frames: self.frames.iter().map(GrayFrame::transpose).collect(),
            gt: self.gt.iter().map(transpose_gt).collect(),
        }
    }
}

fn flip_gt(g: &GtFrame) -> GtFrame {
    let mut labels = Vec::with_capacity(g.labels.len());
    for row in g.labels.chunks(g.width) {
        labels.extend(row.iter().rev());
    }
    GtFrame {
        labels,
        ..g.clone()
    }
}

fn transpose_gt(g: &GtFrame) -> GtFrame {
    let mut labels = g.labels.clone();
    for r in 0..g.height {
        for c in 0..g.width {
            labels[c * g.height + r] = g.labels[r * g.width + c];
        }
    }
    GtFrame {
        width: g.height,
        height: g.width,
        labels,
    }
}

/// Square clips of a dark disc crossing a bright background.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteSpec {
    pub size: usize,
    pub n_frames: usize,
    pub per_direction: usize,
    /// Share of each direction's clips used for training.
    pub train_fraction: f64,
    pub radius: (f64, f64),
    /// Pixels per frame.
    pub speed: f64,
    pub object_intensity: f64,
    pub background: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            size: 40,
            n_frames: 16,
            per_direction: 100,
            train_fraction: 0.75,
            radius: (4.0, 7.0),
            speed: 1.0,
            object_intensity: 0.1,
            background: 0.95,
            noise_sigma: 0.01,
            seed: 7,
        }
    }
}

impl SuiteSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(MhsnnError::BadParam {
                name,
                reason: reason.to_string(),
            })
        };
        if !(0.0..=1.0).contains(&self.train_fraction) {
            return bad("train_fraction", "must lie in [0, 1]");
        }
        if !(self.radius.0 > 0.0 && self.radius.0 <= self.radius.1) {
            return bad("radius", "need 0 < min <= max");
        }
        if !(self.speed >= 0.0 && self.speed.is_finite()) {
            return bad("speed", "must be >= 0");
        }
        let travel = self.speed * self.n_frames.saturating_sub(1) as f64;
        if 2.0 * self.radius.1 + travel > self.size as f64 {
            return bad("size", "largest disc cannot cross the frame");
        }
        Ok(())
    }

    fn rightward(&self, rng: &mut ChaCha8Rng, seed: u64) -> Result<LabelledSequence> {
        let radius = rng.gen_range(self.radius.0..=self.radius.1);
        let span = 2.0 * radius;
        let travel = self.speed * self.n_frames.saturating_sub(1) as f64;
        let row = rng.gen_range(0.0..=self.size as f64 - span);
        let col = rng.gen_range(0.0..=self.size as f64 - span - travel);
        let scene = SyntheticSceneSpec {
            width: self.size,
            height: self.size,
            shape: Shape::Disc { radius },
            object_intensity: self.object_intensity,
            start: (row, col),
            velocity: (0.0, self.speed),
            n_frames: self.n_frames,
            background: Background::Constant(self.background),
            noise_sigma: self.noise_sigma,
            seed,
            wrap: false,
        };
        let seq = synth_generate(&scene)?;
        Ok(LabelledSequence {
            label: Some(Direction::Right),
            frames: seq.frames.iter().map(to_grayscale).collect(),
            gt: seq.gt,
        })
    }
}

/// Builds `per_direction` clips for each direction and splits them into
/// training and test sets, interleaved right, left, down, up.
pub fn direction_suite(spec: &SuiteSpec) -> Result<(Vec<LabelledSequence>, Vec<LabelledSequence>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_train = (spec.per_direction as f64 * spec.train_fraction).round() as usize;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for i in 0..spec.per_direction {
        let mut make = |k: u64| {
            spec.rightward(
                &mut rng,
                spec.seed.wrapping_mul(1000).wrapping_add(4 * i as u64 + k),
            )
        };
        let right = make(0)?;
        let left = make(1)?.flip_horizontal();
        let down = make(2)?.transpose();
        let up = make(3)?.flip_horizontal().transpose();
        let dest = if i < n_train { &mut train } else { &mut test };
        dest.extend([right, left, down, up]);
    }
    Ok((train, test))
}
