use super::{MhsnnError, MhsnnParams, Result};
use crate::imaging::{
    convolve_valid, directional_kernel, dog_kernel, Direction, GrayFrame, Kernel2D,
};
use crate::lif::LifLayer;
use std::collections::VecDeque;

/// One input of a delay-coincidence neuron, relative to its own position in
/// the feature map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilTap {
    pub dr: isize,
    pub dc: isize,
    /// Reads the map as it was `delay` steps ago instead of now.
    pub delayed: bool,
    pub weight: f64,
}

const CENTRE: f64 = 3.0;
const UPSTREAM: f64 = 1.0;
const AGAINST: f64 = -2.0;

/// The 3x3 input pattern of a population tuned to motion along `d`.
///
/// The centre is read undelayed and must fire: the three delayed upstream
/// taps together stay below threshold, centre alone too, but centre plus
/// any upstream tap crosses it. The delayed taps on the far side and the
/// two delayed side neighbours inhibit, which cancels static contours and
/// motion the other way.
pub fn l3_stencil(d: Direction) -> [StencilTap; 9] {
    let (ur, uc) = d.step();
    let (pr, pc) = (uc, ur); // perpendicular
    let tap = |dr, dc, delayed, weight| StencilTap {
        dr,
        dc,
        delayed,
        weight,
    };
    let mut out = [tap(0, 0, false, CENTRE); 9];
    let mut i = 1;
    for k in -1..=1 {
        out[i] = tap(-ur + k * pr, -uc + k * pc, true, UPSTREAM);
        out[i + 1] = tap(ur + k * pr, uc + k * pc, true, AGAINST);
        i += 2;
    }
    out[7] = tap(pr, pc, true, AGAINST);
    out[8] = tap(-pr, -pc, true, AGAINST);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynapseLayer {
    L1,
    L2,
    L3A,
    L3B,
    L4,
}

/// A single connection, as enumerated by [`MhsnnNetwork::synapses`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Synapse {
    pub layer: SynapseLayer,
    /// Feature map (or cell) of the target neuron.
    pub map: usize,
    pub post: usize,
    /// Feature map of the source neuron, where applicable.
    pub pre_map: usize,
    pub pre: usize,
    pub weight: f64,
    pub delay: u32,
}

/// Spikes of every layer for one simulation step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepRaster {
    pub input: Vec<bool>,
    pub l1: Vec<bool>,
    pub l2: Vec<Vec<bool>>,
    pub l3a: Vec<Vec<bool>>,
    pub l3b: Vec<Vec<bool>>,
    pub l4: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct MhsnnNetwork {
    params: MhsnnParams,
    rows: usize,
    cols: usize,
    dog: Kernel2D,
    dir_kernels: Vec<Kernel2D>,
    l1: LifLayer,
    l2: Vec<LifLayer>,
    l3a: Vec<LifLayer>,
    l3b: Vec<LifLayer>,
    l4: Option<LifLayer>,
    /// Output weight magnitudes, indexed by [`MhsnnNetwork::weight_index`].
    weights: Vec<f64>,
    /// Previous layer-2 rasters, most recent first.
    history: VecDeque<Vec<Vec<bool>>>,
}

/// Population groups feeding each output cell: own A, own B (excitatory),
/// paired A, paired B (inhibitory).
pub(crate) const GROUPS: usize = 4;

impl MhsnnNetwork {
    /// A network for `rows x cols` frames with all output weights at 1.
    pub fn new(rows: usize, cols: usize, params: MhsnnParams) -> Result<Self> {
        if rows < 5 || cols < 5 {
            return Err(MhsnnError::TooSmall { l: rows, w: cols });
        }
        params.validate()?;
        let dog = dog_kernel(params.dog_size, params.dog_sigma, params.dog_ratio)?;
        let features = params.features();
        let dir_kernels = features
            .iter()
            .map(|&d| directional_kernel(d, params.direction_size))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let n1 = (rows - 2) * (cols - 2);
        let n3 = (rows - 4) * (cols - 4);
        let maps = |p| -> Result<Vec<LifLayer>> {
            features.iter().map(|_| Ok(LifLayer::new(n3, p)?)).collect()
        };
        let m_f = features.len();
        Ok(Self {
            l1: LifLayer::new(n1, params.l1)?,
            l2: maps(params.l2)?,
            l3a: maps(params.l3)?,
            l3b: maps(params.l3)?,
            l4: if m_f > 0 {
                Some(LifLayer::new(m_f, params.l4)?)
            } else {
                None
            },
            weights: vec![1.0; m_f * GROUPS * n3],
            history: VecDeque::with_capacity(3),
            dog,
            dir_kernels,
            params,
            rows,
            cols,
        })
    }

    pub fn params(&self) -> &MhsnnParams {
        &self.params
    }

    /// `(rows, cols)` of the input frames.
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn m_f(&self) -> usize {
        self.l2.len()
    }

    /// Neurons per feature map.
    pub fn map_len(&self) -> usize {
        (self.rows - 4) * (self.cols - 4)
    }

    pub fn map_dims(&self) -> (usize, usize) {
        (self.rows - 4, self.cols - 4)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn set_weights(&mut self, w: Vec<f64>) -> Result<()> {
        if w.len() != self.weights.len() {
            return Err(MhsnnError::WeightCount {
                expected: self.weights.len(),
                got: w.len(),
            });
        }
        if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(MhsnnError::BadParam {
                name: "weights",
                reason: format!("{bad} is not a finite non-negative magnitude"),
            });
        }
        self.weights = w;
        Ok(())
    }

    /// Position of the weight from neuron `j` of `group` onto `cell`.
    pub fn weight_index(&self, cell: usize, group: usize, j: usize) -> usize {
        (cell * GROUPS + group) * self.map_len() + j
    }

    /// Mean signed weight of one output cell.
    pub fn mean_signed_weight(&self, cell: usize) -> f64 {
        let n = self.map_len();
        let base = cell * GROUPS * n;
        let block = &self.weights[base..base + GROUPS * n];
        let exc: f64 = block[..2 * n].iter().sum();
        let inh: f64 = block[2 * n..].iter().sum();
        (exc - inh) / block.len() as f64
    }

    /// Clears all potentials and delay lines; weights are kept.
    pub fn reset(&mut self) {
        self.l1.reset();
        for l in self.l2.iter_mut().chain(&mut self.l3a).chain(&mut self.l3b) {
            l.reset();
        }
        if let Some(l4) = &mut self.l4 {
            l4.reset();
        }
        self.history.clear();
    }

    /// Input spikes: intensity at or above the threshold.
    pub fn encode_input(&self, frame: &GrayFrame) -> Vec<bool> {
        encode(frame, self.params.binarize_threshold)
    }

    fn check_frame(&self, frame: &GrayFrame) -> Result<()> {
        if (frame.height(), frame.width()) != (self.rows, self.cols) {
            return Err(MhsnnError::SizeMismatch {
                want_w: self.cols,
                want_h: self.rows,
                got_w: frame.width(),
                got_h: frame.height(),
            });
        }
        Ok(())
    }

    /// Advances every layer by one step on `frame`.
    pub fn step(&mut self, frame: &GrayFrame) -> Result<StepRaster> {
        self.check_frame(frame)?;
        let dt = self.params.dt;
        let input = self.encode_input(frame);

        let plane: Vec<f64> = input.iter().map(|&s| s as u8 as f64).collect();
        let (conv, _, _) = convolve_valid(&plane, self.cols, self.rows, &self.dog);
        let cur: Vec<f64> = conv.iter().map(|x| x * self.params.l1_gain).collect();
        let l1 = self.l1.step(&cur, dt)?;

        let l1_plane: Vec<f64> = l1.iter().map(|&s| s as u8 as f64).collect();
        let mut l2 = Vec::with_capacity(self.m_f());
        for (k, kernel) in self.dir_kernels.iter().enumerate() {
            let (conv, _, _) = convolve_valid(&l1_plane, self.cols - 2, self.rows - 2, kernel);
            let cur: Vec<f64> = conv.iter().map(|x| x * self.params.l2_gain).collect();
            l2.push(self.l2[k].step(&cur, dt)?);
        }

        let mut l3a = Vec::with_capacity(self.m_f());
        let mut l3b = Vec::with_capacity(self.m_f());
        for (k, &d) in self.params.features().iter().enumerate() {
            let cur = self.l3_currents(d, &l2[k], k, 1);
            l3a.push(self.l3a[k].step(&cur, dt)?);
            let cur = self.l3_currents(d, &l2[k], k, 2);
            l3b.push(self.l3b[k].step(&cur, dt)?);
        }
        self.history.push_front(l2.clone());
        self.history.truncate(2);

        let l4 = match self.l4.as_mut() {
            Some(_) => {
                let cur = l4_currents(&self.params, &self.weights, self.map_len(), &l3a, &l3b);
                self.l4.as_mut().expect("checked").step(&cur, dt)?
            }
            None => Vec::new(),
        };

        Ok(StepRaster {
            input,
            l1,
            l2,
            l3a,
            l3b,
            l4,
        })
    }

    fn l3_currents(&self, d: Direction, now: &[bool], k: usize, delay: usize) -> Vec<f64> {
        let (mr, mc) = self.map_dims();
        let past = self.history.get(delay - 1).map(|h| h[k].as_slice());
        let stencil = l3_stencil(d);
        let mut out = vec![0.0; mr * mc];
        for r in 0..mr {
            for c in 0..mc {
                let mut sum = 0.0;
                for t in &stencil {
                    let idx = clamp_index(r, c, t.dr, t.dc, mr, mc);
                    let spike = if t.delayed {
                        past.map(|p| p[idx]).unwrap_or(false)
                    } else {
                        now[idx]
                    };
                    if spike {
                        sum += t.weight;
                    }
                }
                out[r * mc + c] = sum * self.params.l3_gain;
            }
        }
        out
    }

    /// Runs a whole sequence from rest; the network is reset first.
    pub fn forward(&mut self, frames: &[GrayFrame]) -> Result<Vec<StepRaster>> {
        self.reset();
        frames.iter().map(|f| self.step(f)).collect()
    }

    /// Total neurons actually instantiated (input plane excluded).
    pub fn neuron_count(&self) -> usize {
        self.l1.len()
            + self
                .l2
                .iter()
                .chain(&self.l3a)
                .chain(&self.l3b)
                .map(LifLayer::len)
                .sum::<usize>()
            + self.l4.as_ref().map_or(0, LifLayer::len)
    }

    /// Every connection of the network, built from the same kernels and
    /// stencils the forward pass uses.
    pub fn synapses(&self) -> Vec<Synapse> {
        let mut out = Vec::new();
        let (r1, c1) = (self.rows - 2, self.cols - 2);
        let (mr, mc) = self.map_dims();
        let syn = |layer, map, post, pre_map, pre, weight, delay| Synapse {
            layer,
            map,
            post,
            pre_map,
            pre,
            weight,
            delay,
        };
        for r in 0..r1 {
            for c in 0..c1 {
                for a in 0..3 {
                    for b in 0..3 {
                        let pre = (r + a) * self.cols + (c + b);
                        let w = self.dog.at(2 - a, 2 - b);
                        out.push(syn(SynapseLayer::L1, 0, r * c1 + c, 0, pre, w, 0));
                    }
                }
            }
        }
        for (k, kernel) in self.dir_kernels.iter().enumerate() {
            for r in 0..mr {
                for c in 0..mc {
                    for a in 0..3 {
                        for b in 0..3 {
                            let pre = (r + a) * c1 + (c + b);
                            let w = kernel.at(2 - a, 2 - b);
                            out.push(syn(SynapseLayer::L2, k, r * mc + c, k, pre, w, 0));
                        }
                    }
                }
            }
        }
        for (k, &d) in self.params.features().iter().enumerate() {
            for (layer, delay) in [(SynapseLayer::L3A, 1), (SynapseLayer::L3B, 2)] {
                for r in 0..mr {
                    for c in 0..mc {
                        for t in l3_stencil(d) {
                            let pre = clamp_index(r, c, t.dr, t.dc, mr, mc);
                            let dl = if t.delayed { delay } else { 0 };
                            out.push(syn(layer, k, r * mc + c, k, pre, t.weight, dl));
                        }
                    }
                }
            }
        }
        for cell in 0..self.m_f() {
            let pair = self.params.pair(cell);
            for group in 0..GROUPS {
                let (pre_map, sign) = if group < 2 { (cell, 1.0) } else { (pair, -1.0) };
                for j in 0..self.map_len() {
                    let w = sign * self.weights[self.weight_index(cell, group, j)];
                    // groups 0/2 read population A, 1/3 population B
                    let pre = (group % 2) * self.map_len() + j;
                    out.push(syn(SynapseLayer::L4, cell, cell, pre_map, pre, w, 0));
                }
            }
        }
        out
    }
}

fn clamp_index(r: usize, c: usize, dr: isize, dc: isize, rows: usize, cols: usize) -> usize {
    let rr = (r as isize + dr).clamp(0, rows as isize - 1) as usize;
    let cc = (c as isize + dc).clamp(0, cols as isize - 1) as usize;
    rr * cols + cc
}

pub(crate) fn encode(frame: &GrayFrame, threshold: f64) -> Vec<bool> {
    frame.data().iter().map(|&x| x >= threshold).collect()
}

/// Output-cell currents from the delay populations of one step.
pub(crate) fn l4_currents(
    params: &MhsnnParams,
    weights: &[f64],
    n: usize,
    l3a: &[Vec<bool>],
    l3b: &[Vec<bool>],
) -> Vec<f64> {
    let m_f = l3a.len();
    (0..m_f)
        .map(|cell| {
            let pair = params.pair(cell);
            let pops = [&l3a[cell], &l3b[cell], &l3a[pair], &l3b[pair]];
            let mut sum = 0.0;
            for (g, pop) in pops.iter().enumerate() {
                let w = &weights[(cell * GROUPS + g) * n..(cell * GROUPS + g + 1) * n];
                let sign = if g < 2 { 1.0 } else { -1.0 };
                for (j, &s) in pop.iter().enumerate() {
                    if s {
                        sum += sign * w[j];
                    }
                }
            }
            sum * params.l4_gain
        })
        .collect()
}
