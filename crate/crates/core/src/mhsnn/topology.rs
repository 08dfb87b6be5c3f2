use super::{MhsnnError, Result};

/// Neuron and synapse totals of a network over an `l x w` image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Topology {
    pub l: usize,
    pub w: usize,
    pub m_f: usize,
    pub f_l: usize,
    pub f_w: usize,
    pub n_neurons: u64,
    pub n_synapses: u64,
}

/// Layer 1 has `(l-2)(w-2)` neurons; every feature adds a directional map
/// and two delay populations of `(l-4)(w-4)` each, plus one output cell.
/// All but the output cells read an `f_l x f_w` field; each output cell
/// reads four populations.
pub fn topology_counts(l: usize, w: usize, m_f: usize, f_l: usize, f_w: usize) -> Result<Topology> {
    if l < 5 || w < 5 {
        return Err(MhsnnError::TooSmall { l, w });
    }
    let edge = ((l - 2) * (w - 2)) as u64;
    let inner = ((l - 4) * (w - 4)) as u64;
    let m = m_f as u64;
    let fields = edge + 3 * m * inner;
    Ok(Topology {
        l,
        w,
        m_f,
        f_l,
        f_w,
        n_neurons: fields + m,
        n_synapses: (f_l * f_w) as u64 * fields + 4 * m * inner,
    })
}
