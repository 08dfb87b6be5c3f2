use super::{MhsnnError, MhsnnNetwork, Result};
use std::io::{Read, Write};
use std::path::Path;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"MHSN";
pub const WEIGHTS_VERSION: u32 = 1;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MhsnnError + '_ {
    move |source| MhsnnError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Binary layout: magic, `u32` version, `u64` count, then little-endian
/// `f64` magnitudes in the network's weight order.
pub fn save_weights(net: &MhsnnNetwork, path: &Path) -> Result<()> {
    let w = net.weights();
    let mut buf = Vec::with_capacity(16 + 8 * w.len());
    buf.extend_from_slice(WEIGHTS_MAGIC);
    buf.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    buf.extend_from_slice(&(w.len() as u64).to_le_bytes());
    for v in w {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&buf).map_err(io_err(path))
}

pub fn load_weights(net: &mut MhsnnNetwork, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(io_err(path))?;
    if buf.len() < 16 || &buf[..4] != WEIGHTS_MAGIC {
        return Err(MhsnnError::BadWeightsFile("missing header".into()));
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes"));
    if version != WEIGHTS_VERSION {
        return Err(MhsnnError::BadWeightsFile(format!(
            "unsupported version {version}"
        )));
    }
    let n = u64::from_le_bytes(buf[8..16].try_into().expect("8 bytes")) as usize;
    let body = &buf[16..];
    if body.len() != n.saturating_mul(8) {
        return Err(MhsnnError::BadWeightsFile(format!(
            "header says {n} values, body holds {} bytes",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    net.set_weights(values)
}

/// One row per synapse: cell, group, presynaptic index, signed weight.
pub fn export_weights_csv(net: &MhsnnNetwork, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["cell", "group", "pre", "weight"])?;
    let n = net.map_len();
    for cell in 0..net.m_f() {
        for group in 0..super::network::GROUPS {
            let sign = if group < 2 { 1.0 } else { -1.0 };
            for j in 0..n {
                let v = sign * net.weights()[net.weight_index(cell, group, j)];
                w.write_record([
                    cell.to_string(),
                    group.to_string(),
                    j.to_string(),
                    v.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::MhsnnParams;
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.bin");
        let mut net = MhsnnNetwork::new(8, 9, MhsnnParams::default()).unwrap();
        let values: Vec<f64> = (0..net.weights().len()).map(|i| i as f64 * 0.25).collect();
        net.set_weights(values.clone()).unwrap();
        save_weights(&net, &path).unwrap();
        let mut other = MhsnnNetwork::new(8, 9, MhsnnParams::default()).unwrap();
        load_weights(&mut other, &path).unwrap();
        assert_eq!(other.weights(), &values[..]);

        let mut bytes = std::fs::read(&path).unwrap();
        bytes.pop();
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_weights(&mut other, &path),
            Err(MhsnnError::BadWeightsFile(_))
        ));
        std::fs::write(&path, b"nope").unwrap();
        assert!(load_weights(&mut other, &path).is_err());

        let small = MhsnnNetwork::new(7, 7, MhsnnParams::default()).unwrap();
        save_weights(&small, &path).unwrap();
        assert!(matches!(
            load_weights(&mut other, &path),
            Err(MhsnnError::WeightCount { .. })
        ));
    }

    #[test]
    fn csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let net = MhsnnNetwork::new(7, 7, MhsnnParams::default()).unwrap();
        export_weights_csv(&net, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 * 4 * 9);
        assert!(text.lines().nth(1).unwrap().ends_with(",1"));
    }
}
