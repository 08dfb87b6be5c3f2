use super::network::GROUPS;
use super::{
    pcc_pwc, LabelledSequence, MhsnnError, MhsnnNetwork, Result, ResumeParams, SynapseKind,
};
use crate::imaging::{Direction, GrayFrame};
use crate::lif::integrate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DirectionLabel {
    Leftwards,
    Rightwards,
    Upwards,
    Downwards,
    None,
}

impl DirectionLabel {
    pub fn direction(self) -> Option<Direction> {
        match self {
            Self::Leftwards => Some(Direction::Left),
            Self::Rightwards => Some(Direction::Right),
            Self::Upwards => Some(Direction::Up),
            Self::Downwards => Some(Direction::Down),
            Self::None => None,
        }
    }

    pub fn name(self) -> &'static str {
        self.direction().map_or("none", Direction::name)
    }

    /// The label seen in a horizontally mirrored scene.
    pub fn mirrored(self) -> Self {
        match self {
            Self::Leftwards => Self::Rightwards,
            Self::Rightwards => Self::Leftwards,
            other => other,
        }
    }
}

impl From<Direction> for DirectionLabel {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Left => Self::Leftwards,
            Direction::Right => Self::Rightwards,
            Direction::Up => Self::Upwards,
            Direction::Down => Self::Downwards,
        }
    }
}

/// Picks a label from per-cell spike counts (left, right, up, down; missing
/// cells count as 0). Each opposing pair is decided on its own, then the
/// stronger winner is kept. Any tie, including all-zero, gives `None`.
pub fn decide(counts: &[u32]) -> DirectionLabel {
    let c = |k: usize| counts.get(k).copied().unwrap_or(0);
    let pair = |a: usize, b: usize| -> Option<(Direction, u32)> {
        let (x, y) = (c(a), c(b));
        match x.cmp(&y) {
            std::cmp::Ordering::Greater => Some((Direction::ALL[a], x)),
            std::cmp::Ordering::Less => Some((Direction::ALL[b], y)),
            std::cmp::Ordering::Equal => None,
        }
    };
    match (pair(0, 1), pair(2, 3)) {
        (Some((d, _)), None) | (None, Some((d, _))) => d.into(),
        (Some((h, x)), Some((v, y))) => match x.cmp(&y) {
            std::cmp::Ordering::Greater => h.into(),
            std::cmp::Ordering::Less => v.into(),
            std::cmp::Ordering::Equal => DirectionLabel::None,
        },
        (None, None) => DirectionLabel::None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainOptions {
    /// Passes over the training set.
    pub iterations: usize,
    pub resume: ResumeParams,
    /// Train the horizontal cells to completion before the vertical ones
    /// instead of all cells together. Cells learn independently, so both
    /// schedules give the same weights.
    pub sequential: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            resume: ResumeParams::default(),
            sequential: false,
        }
    }
}

/// Mean signed weight of each output cell after every pass.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub mean_weights: Vec<Vec<f64>>,
    /// Steps on which some cell's output disagreed with its teacher.
    pub corrections: u64,
}

/// Active neuron indices per step and population (`2k` = A, `2k+1` = B).
type Activity = Vec<Vec<Vec<u32>>>;

fn record_activity(net: &mut MhsnnNetwork, frames: &[GrayFrame]) -> Result<Activity> {
    let rasters = net.forward(frames)?;
    Ok(rasters
        .into_iter()
        .map(|r| {
            let mut pops = Vec::with_capacity(2 * r.l3a.len());
            for (a, b) in r.l3a.iter().zip(&r.l3b) {
                for pop in [a, b] {
                    pops.push(
                        pop.iter()
                            .enumerate()
                            .filter(|(_, &s)| s)
                            .map(|(j, _)| j as u32)
                            .collect(),
                    );
                }
            }
            pops
        })
        .collect())
}

/// Per-neuron eligibility traces `sum exp(-(t - t_pre) dt / tau)` over
/// earlier spikes, stored at the time of the neuron's latest spike.
struct Traces {
    val_ex: Vec<f64>,
    val_ih: Vec<f64>,
    last: Vec<usize>,
    stamp: Vec<u32>,
    epoch: u32,
}

impl Traces {
    fn new(pops: usize, n: usize) -> Self {
        Self {
            val_ex: vec![0.0; pops * n],
            val_ih: vec![0.0; pops * n],
            last: vec![0; pops * n],
            stamp: vec![0; pops * n],
            epoch: 0,
        }
    }

    fn clear(&mut self) {
        self.epoch += 1;
    }

    fn get(&self, i: usize, t: usize, decay_ex: &[f64], decay_ih: &[f64]) -> (f64, f64) {
        if self.stamp[i] != self.epoch {
            return (0.0, 0.0);
        }
        let d = t - self.last[i];
        (self.val_ex[i] * decay_ex[d], self.val_ih[i] * decay_ih[d])
    }

    fn spike(&mut self, i: usize, t: usize, decay_ex: &[f64], decay_ih: &[f64]) {
        let (ex, ih) = self.get(i, t, decay_ex, decay_ih);
        self.val_ex[i] = ex + 1.0;
        self.val_ih[i] = ih + 1.0;
        self.last[i] = t;
        self.stamp[i] = self.epoch;
    }
}

/// Trains the output weights with remote supervision: each cell's teacher
/// fires on every step after the first of sequences carrying its label.
/// Earlier layers are fixed, so their activity is recorded once up front.
pub fn train(
    net: &mut MhsnnNetwork,
    sequences: &[LabelledSequence],
    opts: &TrainOptions,
) -> Result<TrainLog> {
    opts.resume.validate()?;
    for (i, s) in sequences.iter().enumerate() {
        if s.label.is_none() {
            return Err(MhsnnError::Unlabelled(i));
        }
    }
    let m_f = net.m_f();
    let n = net.map_len();
    let params = net.params().clone();
    let dt = params.dt;
    let activity = sequences
        .iter()
        .map(|s| record_activity(net, &s.frames))
        .collect::<Result<Vec<_>>>()?;
    net.reset();

    let longest = sequences.iter().map(|s| s.frames.len()).max().unwrap_or(0);
    let table = |tau: f64| -> Vec<f64> {
        (0..=longest)
            .map(|d| (-(d as f64) * dt / tau).exp())
            .collect()
    };
    let decay_ex = table(opts.resume.tau_ex);
    let decay_ih = table(opts.resume.tau_ih);

    let phases: Vec<Vec<usize>> = if opts.sequential {
        let horiz: Vec<usize> = (0..m_f)
            .filter(|&k| Direction::ALL[k].is_horizontal())
            .collect();
        let vert: Vec<usize> = (0..m_f)
            .filter(|&k| !Direction::ALL[k].is_horizontal())
            .collect();
        vec![horiz, vert]
    } else {
        vec![(0..m_f).collect()]
    };

    let mut weights = net.weights().to_vec();
    let mut traces = Traces::new(2 * m_f, n);
    let mut log = TrainLog::default();
    let rp = opts.resume;
    for cells in phases.iter().filter(|c| !c.is_empty()) {
        for _ in 0..opts.iterations {
            for (seq, act) in sequences.iter().zip(&activity) {
                let label = seq.label.expect("checked above");
                traces.clear();
                let mut v = vec![params.l4.e_l; m_f];
                let mut r = vec![0.0; m_f];
                for (t, pops) in act.iter().enumerate() {
                    for &cell in cells {
                        let pair = params.pair(cell);
                        let group_pop = [2 * cell, 2 * cell + 1, 2 * pair, 2 * pair + 1];
                        let mut input = 0.0;
                        for (g, &pop) in group_pop.iter().enumerate() {
                            let w = &weights[(cell * GROUPS + g) * n..];
                            let s: f64 = pops[pop].iter().map(|&j| w[j as usize]).sum();
                            input += if g < 2 { s } else { -s };
                        }
                        let out = integrate(
                            &params.l4,
                            &mut v[cell],
                            &mut r[cell],
                            input * params.l4_gain,
                            dt,
                        );
                        let teacher = t >= 1 && Direction::ALL[cell] == label;
                        if out == teacher {
                            continue;
                        }
                        log.corrections += 1;
                        let err = if teacher { 1.0 } else { -1.0 };
                        for (g, &pop) in group_pop.iter().enumerate() {
                            let kind = if g < 2 {
                                SynapseKind::Excitatory
                            } else {
                                SynapseKind::Inhibitory
                            };
                            let amp = rp.amplitude(kind);
                            let bias = kind.sign() * rp.a_bias;
                            let base = (cell * GROUPS + g) * n;
                            for j in 0..n {
                                let (ex, ih) = traces.get(pop * n + j, t, &decay_ex, &decay_ih);
                                let tr = if g < 2 { ex } else { ih };
                                let w = &mut weights[base + j];
                                *w = (*w + rp.lr * err * (bias + amp * tr)).max(0.0);
                            }
                        }
                    }
                    for (pop, active) in pops.iter().enumerate() {
                        for &j in active {
                            traces.spike(pop * n + j as usize, t, &decay_ex, &decay_ih);
                        }
                    }
                }
            }
            net.set_weights(weights.clone())?;
            log.mean_weights
                .push((0..m_f).map(|k| net.mean_signed_weight(k)).collect());
        }
    }
    net.set_weights(weights)?;
    Ok(log)
}

/// Labels for consecutive windows of `window` frames (the last window may
/// be shorter). `window = 0` classifies the whole sequence at once.
pub fn classify(
    net: &mut MhsnnNetwork,
    frames: &[GrayFrame],
    window: usize,
) -> Result<Vec<DirectionLabel>> {
    let rasters = net.forward(frames)?;
    let size = if window == 0 {
        rasters.len().max(1)
    } else {
        window
    };
    Ok(rasters
        .chunks(size)
        .map(|chunk| {
            let mut counts = vec![0u32; net.m_f()];
            for r in chunk {
                for (c, &s) in counts.iter_mut().zip(&r.l4) {
                    *c += s as u32;
                }
            }
            decide(&counts)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionScore {
    pub direction: Direction,
    pub correct: u64,
    pub wrong: u64,
    pub pcc: f64,
    pub pwc: f64,
}

/// Classifies every sequence window by window and tallies, per true
/// direction, how many windows received the right label.
pub fn evaluate(
    net: &mut MhsnnNetwork,
    sequences: &[LabelledSequence],
    window: usize,
) -> Result<Vec<DirectionScore>> {
    let mut tally = [(0u64, 0u64); 4];
    for (i, s) in sequences.iter().enumerate() {
        let label = s.label.ok_or(MhsnnError::Unlabelled(i))?;
        let k = Direction::ALL
            .iter()
            .position(|&d| d == label)
            .expect("four directions");
        for got in classify(net, &s.frames, window)? {
            if got == label.into() {
                tally[k].0 += 1;
            } else {
                tally[k].1 += 1;
            }
        }
    }
    Direction::ALL
        .iter()
        .zip(tally)
        .filter(|(_, (c, w))| c + w > 0)
        .map(|(&direction, (correct, wrong))| {
            let (pcc, pwc) = pcc_pwc(correct, wrong)?;
            Ok(DirectionScore {
                direction,
                correct,
                wrong,
                pcc,
                pwc,
            })
        })
        .collect()
}
