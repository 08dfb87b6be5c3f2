use super::{ComputeMode, HsmdConfig, HsmdError, Result};
use crate::imaging::GrayFrame;
use crate::lif::{integrate, LifLayer, LifParams};
use rayon::prelude::*;

/// Pixel intensities scaled to input currents (nA).
pub fn encode_currents(foreground: &GrayFrame, cfg: &HsmdConfig) -> Vec<f64> {
    foreground.data().iter().map(|&x| x * cfg.c_p2c).collect()
}

/// Per-layer spike tallies for one frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameSpikes {
    pub l2: Vec<u32>,
    pub l3: Vec<u32>,
    pub l4: Vec<u32>,
}

/// One L2 -> L3 -> L4 chain per pixel. L3 sees L2 spikes one inner step
/// late; L4 sees L2 directly and through L3.
#[derive(Clone, Debug, PartialEq)]
pub struct SnnState {
    l2: LifLayer,
    l3: LifLayer,
    l4: LifLayer,
    l2_spike_buffer: Vec<bool>,
    /// False once every neuron of the chain is back at rest with an empty
    /// buffer; such a chain is a fixed point under zero input.
    active: Vec<bool>,
}

#[derive(Clone, Copy)]
struct ChainConsts {
    p: LifParams,
    w23: f64,
    w24: f64,
    w34: f64,
    steps: u32,
    dt: f64,
}

/// Mutable views over a contiguous pixel range.
struct Chains<'a> {
    cur: &'a [f64],
    v: [&'a mut [f64]; 3],
    r: [&'a mut [f64]; 3],
    n: [&'a mut [u32]; 3],
    buf: &'a mut [bool],
    active: &'a mut [bool],
}

impl<'a> Chains<'a> {
    fn len(&self) -> usize {
        self.cur.len()
    }

    fn split_at(self, mid: usize) -> (Chains<'a>, Chains<'a>) {
        let (c0, c1) = self.cur.split_at(mid);
        let [v2, v3, v4] = self.v;
        let [r2, r3, r4] = self.r;
        let [n2, n3, n4] = self.n;
        let (v2a, v2b) = v2.split_at_mut(mid);
        let (v3a, v3b) = v3.split_at_mut(mid);
        let (v4a, v4b) = v4.split_at_mut(mid);
        let (r2a, r2b) = r2.split_at_mut(mid);
        let (r3a, r3b) = r3.split_at_mut(mid);
        let (r4a, r4b) = r4.split_at_mut(mid);
        let (n2a, n2b) = n2.split_at_mut(mid);
        let (n3a, n3b) = n3.split_at_mut(mid);
        let (n4a, n4b) = n4.split_at_mut(mid);
        let (ba, bb) = self.buf.split_at_mut(mid);
        let (aa, ab) = self.active.split_at_mut(mid);
        (
            Chains {
                cur: c0,
                v: [v2a, v3a, v4a],
                r: [r2a, r3a, r4a],
                n: [n2a, n3a, n4a],
                buf: ba,
                active: aa,
            },
            Chains {
                cur: c1,
                v: [v2b, v3b, v4b],
                r: [r2b, r3b, r4b],
                n: [n2b, n3b, n4b],
                buf: bb,
                active: ab,
            },
        )
    }

    fn run(self, k: &ChainConsts, sparse: bool) {
        let Chains {
            cur,
            v: [v2, v3, v4],
            r: [r2, r3, r4],
            n: [n2, n3, n4],
            buf,
            active,
        } = self;
        let p = &k.p;
        for i in 0..cur.len() {
            let input = cur[i];
            if sparse && !active[i] && input == 0.0 {
                continue;
            }
            let mut b = buf[i];
            for _ in 0..k.steps {
                let s2 = integrate(p, &mut v2[i], &mut r2[i], input, k.dt);
                let i3 = if b { k.w23 } else { 0.0 };
                let s3 = integrate(p, &mut v3[i], &mut r3[i], i3, k.dt);
                let i4 = if s2 { k.w24 } else { 0.0 } + if s3 { k.w34 } else { 0.0 };
                let s4 = integrate(p, &mut v4[i], &mut r4[i], i4, k.dt);
                n2[i] += s2 as u32;
                n3[i] += s3 as u32;
                n4[i] += s4 as u32;
                b = s2;
            }
            buf[i] = b;
            active[i] = b
                || v2[i] != p.e_l
                || v3[i] != p.e_l
                || v4[i] != p.e_l
                || r2[i] != 0.0
                || r3[i] != 0.0
                || r4[i] != 0.0;
        }
    }
}

impl SnnState {
    pub fn new(n: usize, params: LifParams) -> Result<Self> {
        Ok(Self {
            l2: LifLayer::new(n, params)?,
            l3: LifLayer::new(n, params)?,
            l4: LifLayer::new(n, params)?,
            l2_spike_buffer: vec![false; n],
            active: vec![false; n],
        })
    }

    pub fn len(&self) -> usize {
        self.l2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l2.is_empty()
    }

    pub fn layers(&self) -> [&LifLayer; 3] {
        [&self.l2, &self.l3, &self.l4]
    }

    pub fn l2_spike_buffer(&self) -> &[bool] {
        &self.l2_spike_buffer
    }

    /// Number of pixels whose chain is not at rest.
    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Runs one frame using the mode selected in `cfg`.
    pub fn process_frame(&mut self, currents: &[f64], cfg: &HsmdConfig) -> Result<FrameSpikes> {
        self.process(currents, cfg, cfg.mode)
    }

    /// Runs one frame evaluating every pixel.
    pub fn process_dense(&mut self, currents: &[f64], cfg: &HsmdConfig) -> Result<FrameSpikes> {
        self.process(currents, cfg, ComputeMode::Dense)
    }

    /// Runs one frame skipping resting pixels without input. Results are
    /// identical to [`SnnState::process_dense`].
    pub fn process_sparse(&mut self, currents: &[f64], cfg: &HsmdConfig) -> Result<FrameSpikes> {
        self.process(currents, cfg, ComputeMode::Sparse)
    }

    fn process(
        &mut self,
        currents: &[f64],
        cfg: &HsmdConfig,
        mode: ComputeMode,
    ) -> Result<FrameSpikes> {
        if currents.len() != self.len() {
            return Err(HsmdError::LengthMismatch {
                expected: self.len(),
                got: currents.len(),
            });
        }
        let p = *self.l2.params();
        p.check_dt(cfg.dt)?;
        let k = ChainConsts {
            p,
            w23: cfg.w_l2_l3,
            w24: cfg.w_l2_l4,
            w34: cfg.w_l3_l4,
            steps: cfg.steps_per_frame,
            dt: cfg.dt,
        };
        let sparse = mode == ComputeMode::Sparse;
        let (_, v2, r2, n2) = self.l2.state_mut();
        let (_, v3, r3, n3) = self.l3.state_mut();
        let (_, v4, r4, n4) = self.l4.state_mut();
        let all = Chains {
            cur: currents,
            v: [v2, v3, v4],
            r: [r2, r3, r4],
            n: [n2, n3, n4],
            buf: &mut self.l2_spike_buffer,
            active: &mut self.active,
        };
        if cfg.workers <= 1 {
            all.run(&k, sparse);
        } else {
            let chunk = all.len().div_ceil(cfg.workers).max(1);
            let mut parts = Vec::with_capacity(cfg.workers);
            let mut rest = all;
            while rest.len() > chunk {
                let (a, b) = rest.split_at(chunk);
                parts.push(a);
                rest = b;
            }
            parts.push(rest);
            parts.into_par_iter().for_each(|c| c.run(&k, sparse));
        }
        Ok(FrameSpikes {
            l2: self.l2.take_spike_counts(),
            l3: self.l3.take_spike_counts(),
            l4: self.l4.take_spike_counts(),
        })
    }
}
