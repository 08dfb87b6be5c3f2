//! Leaky integrate-and-fire populations.
//!
//! Membrane dynamics are `tau * dV/dt = (E_L - V) + R * I`, integrated with
//! explicit Euler. Units are mV, ms, MΩ and nA, so `R * I` is in mV.

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LifError {
    #[error("layer must contain at least one neuron")]
    EmptyLayer,
    #[error("expected {expected} input currents, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("time step must satisfy 0 < dt <= tau_m ({tau_m} ms), got {dt}")]
    BadTimeStep { dt: f64, tau_m: f64 },
    #[error("invalid parameter {name}: {reason}")]
    BadParam { name: &'static str, reason: String },
}

/// Neuron constants shared by every neuron of a layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LifParams {
    /// Membrane capacitance (pF). Informational; `tau_m` drives the dynamics.
    pub c_m: f64,
    /// Membrane resistance (MΩ).
    pub r_m: f64,
    /// Resting potential (mV).
    pub e_l: f64,
    /// Potential after a spike (mV).
    pub v_reset: f64,
    /// Floor below which the potential is clamped (mV).
    pub v_min: f64,
    /// Firing threshold (mV).
    pub v_th: f64,
    /// Membrane time constant (ms).
    pub tau_m: f64,
    /// Refractory period (ms).
    pub t_ref: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            c_m: 10.0,
            r_m: 1.0,
            e_l: -55.0,
            v_reset: -70.0,
            v_min: -70.0,
            v_th: -50.0,
            tau_m: 10.0,
            t_ref: 2.0,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<(), LifError> {
        let fields = [
            ("c_m", self.c_m),
            ("r_m", self.r_m),
            ("e_l", self.e_l),
            ("v_reset", self.v_reset),
            ("v_min", self.v_min),
            ("v_th", self.v_th),
            ("tau_m", self.tau_m),
            ("t_ref", self.t_ref),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(bad(name, format!("{value} is not finite")));
            }
        }
        if self.tau_m <= 0.0 {
            return Err(bad("tau_m", "must be > 0".into()));
        }
        if self.r_m <= 0.0 {
            return Err(bad("r_m", "must be > 0".into()));
        }
        if self.t_ref < 0.0 {
            return Err(bad("t_ref", "must be >= 0".into()));
        }
        if self.v_min > self.v_reset {
            return Err(bad("v_min", "must be <= v_reset".into()));
        }
        if self.v_reset > self.e_l {
            return Err(bad("v_reset", "must be <= e_l".into()));
        }
        if self.e_l >= self.v_th {
            return Err(bad("v_th", "must be > e_l".into()));
        }
        Ok(())
    }

    pub fn check_dt(&self, dt: f64) -> Result<(), LifError> {
        if !(dt > 0.0 && dt <= self.tau_m) {
            return Err(LifError::BadTimeStep {
                dt,
                tau_m: self.tau_m,
            });
        }
        Ok(())
    }

    /// Number of whole steps a neuron stays silent after a spike.
    pub fn refractory_steps(&self, dt: f64) -> u32 {
        if self.t_ref <= 0.0 {
            0
        } else {
            (self.t_ref / dt - 1e-9).ceil() as u32
        }
    }

    /// Upper bound on spikes over `steps` consecutive steps of length `dt`.
    pub fn max_spikes(&self, steps: u32, dt: f64) -> u32 {
        steps.div_ceil(1 + self.refractory_steps(dt))
    }
}

fn bad(name: &'static str, reason: String) -> LifError {
    LifError::BadParam { name, reason }
}

/// Advances one neuron by `dt`. Returns whether it fired.
///
/// A refractory neuron only counts down its refractory time and ignores
/// `current`.
#[inline]
pub fn integrate(p: &LifParams, v: &mut f64, refractory: &mut f64, current: f64, dt: f64) -> bool {
    if *refractory > 0.0 {
        let left = *refractory - dt;
        *refractory = if left <= 1e-9 * dt { 0.0 } else { left };
        return false;
    }
    let next = *v + (dt / p.tau_m) * (p.e_l - *v + p.r_m * current);
    if next >= p.v_th {
        *v = p.v_reset;
        *refractory = p.t_ref;
        true
    } else {
        *v = next.max(p.v_min);
        false
    }
}

/// A homogeneous population of LIF neurons.
#[derive(Clone, Debug, PartialEq)]
pub struct LifLayer {
    params: LifParams,
    v: Vec<f64>,
    refractory_left: Vec<f64>,
    spike_count: Vec<u32>,
}

impl LifLayer {
    pub fn new(n: usize, params: LifParams) -> Result<Self, LifError> {
        if n == 0 {
            return Err(LifError::EmptyLayer);
        }
        params.validate()?;
        Ok(Self {
            params,
            v: vec![params.e_l; n],
            refractory_left: vec![0.0; n],
            spike_count: vec![0; n],
        })
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn params(&self) -> &LifParams {
        &self.params
    }

    pub fn potentials(&self) -> &[f64] {
        &self.v
    }

    pub fn refractory_left(&self) -> &[f64] {
        &self.refractory_left
    }

    pub fn spike_counts(&self) -> &[u32] {
        &self.spike_count
    }

    /// True when neuron `i` sits exactly at rest with no pending refractory
    /// time; with zero input such a neuron is a fixed point of [`integrate`].
    pub fn is_at_rest(&self, i: usize) -> bool {
        self.v[i] == self.params.e_l && self.refractory_left[i] == 0.0
    }

    /// Mutable views of the per-neuron state, for callers that drive several
    /// layers neuron by neuron.
    pub fn state_mut(&mut self) -> (&LifParams, &mut [f64], &mut [f64], &mut [u32]) {
        (
            &self.params,
            &mut self.v,
            &mut self.refractory_left,
            &mut self.spike_count,
        )
    }

    fn check_step(&self, currents: &[f64], dt: f64) -> Result<(), LifError> {
        if currents.len() != self.v.len() {
            return Err(LifError::LengthMismatch {
                expected: self.v.len(),
                got: currents.len(),
            });
        }
        self.params.check_dt(dt)
    }

    pub fn step(&mut self, currents: &[f64], dt: f64) -> Result<Vec<bool>, LifError> {
        let mut spikes = vec![false; self.v.len()];
        self.step_into(currents, dt, &mut spikes)?;
        Ok(spikes)
    }

    pub fn step_into(
        &mut self,
        currents: &[f64],
        dt: f64,
        spikes: &mut [bool],
    ) -> Result<(), LifError> {
        self.check_step(currents, dt)?;
        let p = self.params;
        for i in 0..self.v.len() {
            let fired = integrate(
                &p,
                &mut self.v[i],
                &mut self.refractory_left[i],
                currents[i],
                dt,
            );
            if fired {
                self.spike_count[i] += 1;
            }
            spikes[i] = fired;
        }
        Ok(())
    }

    /// Same as [`LifLayer::step`] with the neuron range split into
    /// `workers` contiguous chunks processed in parallel.
    pub fn step_partitioned(
        &mut self,
        currents: &[f64],
        dt: f64,
        workers: usize,
    ) -> Result<Vec<bool>, LifError> {
        self.check_step(currents, dt)?;
        let n = self.v.len();
        let chunk = n.div_ceil(workers.max(1)).max(1);
        let p = self.params;
        let mut spikes = vec![false; n];
        self.v
            .par_chunks_mut(chunk)
            .zip(self.refractory_left.par_chunks_mut(chunk))
            .zip(self.spike_count.par_chunks_mut(chunk))
            .zip(spikes.par_chunks_mut(chunk))
            .zip(currents.par_chunks(chunk))
            .for_each(|((((v, r), count), out), cur)| {
                for i in 0..v.len() {
                    let fired = integrate(&p, &mut v[i], &mut r[i], cur[i], dt);
                    if fired {
                        count[i] += 1;
                    }
                    out[i] = fired;
                }
            });
        Ok(spikes)
    }

    /// Returns the spike tallies since the previous call and zeroes them.
    pub fn take_spike_counts(&mut self) -> Vec<u32> {
        let out = self.spike_count.clone();
        self.spike_count.iter_mut().for_each(|c| *c = 0);
        out
    }

    /// Puts every neuron back at rest and clears tallies.
    pub fn reset(&mut self) {
        self.v.iter_mut().for_each(|v| *v = self.params.e_l);
        self.refractory_left.iter_mut().for_each(|r| *r = 0.0);
        self.spike_count.iter_mut().for_each(|c| *c = 0);
    }
}
