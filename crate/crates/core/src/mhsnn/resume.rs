use super::{MhsnnError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynapseKind {
    Excitatory,
    Inhibitory,
}

impl SynapseKind {
    pub fn sign(self) -> f64 {
        match self {
            SynapseKind::Excitatory => 1.0,
            SynapseKind::Inhibitory => -1.0,
        }
    }
}

/// Remote-supervision learning constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResumeParams {
    /// Window amplitude for excitatory synapses (> 0).
    pub a_ex: f64,
    /// Window amplitude for inhibitory synapses (< 0).
    pub a_ih: f64,
    /// Window time constants (ms).
    pub tau_ex: f64,
    pub tau_ih: f64,
    /// Activity-independent term.
    pub a_bias: f64,
    pub lr: f64,
}

impl Default for ResumeParams {
    fn default() -> Self {
        Self {
            a_ex: 0.01,
            a_ih: -0.01,
            tau_ex: 20.0,
            tau_ih: 20.0,
            a_bias: 0.01,
            lr: 1.0,
        }
    }
}

impl ResumeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| {
            Err(MhsnnError::BadParam {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.tau_ex > 0.0 && self.tau_ex.is_finite()) {
            return bad("tau_ex", "must be > 0");
        }
        if !(self.tau_ih > 0.0 && self.tau_ih.is_finite()) {
            return bad("tau_ih", "must be > 0");
        }
        if !(self.a_ex >= 0.0 && self.a_ex.is_finite()) {
            return bad("a_ex", "must be >= 0");
        }
        if !(self.a_ih <= 0.0 && self.a_ih.is_finite()) {
            return bad("a_ih", "must be <= 0");
        }
        if !(self.a_bias.is_finite() && self.lr.is_finite() && self.lr >= 0.0) {
            return bad("lr", "a_bias and lr must be finite, lr >= 0");
        }
        Ok(())
    }

    pub fn amplitude(&self, kind: SynapseKind) -> f64 {
        match kind {
            SynapseKind::Excitatory => self.a_ex,
            SynapseKind::Inhibitory => self.a_ih,
        }
    }

    pub fn tau(&self, kind: SynapseKind) -> f64 {
        match kind {
            SynapseKind::Excitatory => self.tau_ex,
            SynapseKind::Inhibitory => self.tau_ih,
        }
    }
}

/// Learning window `A exp(-s / tau)` for `s > 0`, else 0.
pub fn resume_window(s: f64, kind: SynapseKind, p: &ResumeParams) -> f64 {
    if s > 0.0 {
        p.amplitude(kind) * (-s / p.tau(kind)).exp()
    } else {
        0.0
    }
}

/// Change of one weight magnitude at time `now` (ms).
///
/// Weights are stored as magnitudes whose sign comes from the synapse kind,
/// so the bias term carries that sign too: a missed target spike strengthens
/// excitation and weakens inhibition, a spurious output spike does the
/// reverse.
pub fn resume_delta(
    pre_spike_times: &[f64],
    now: f64,
    kind: SynapseKind,
    out: bool,
    teacher: bool,
    p: &ResumeParams,
) -> f64 {
    let err = teacher as i32 as f64 - out as i32 as f64;
    if err == 0.0 {
        return 0.0;
    }
    let hebb: f64 = pre_spike_times
        .iter()
        .map(|&t| resume_window(now - t, kind, p))
        .sum();
    p.lr * err * (kind.sign() * p.a_bias + hebb)
}

/// Applies [`resume_delta`] to every synapse of one output neuron, keeping
/// magnitudes non-negative.
pub fn resume_step(
    weights: &mut [f64],
    kinds: &[SynapseKind],
    pre_spike_times: &[Vec<f64>],
    now: f64,
    out: bool,
    teacher: bool,
    p: &ResumeParams,
) {
    for ((w, &kind), times) in weights.iter_mut().zip(kinds).zip(pre_spike_times) {
        *w = (*w + resume_delta(times, now, kind, out, teacher, p)).max(0.0);
    }
}
