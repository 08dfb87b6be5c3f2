use super::{BenchError, Result};

/// Ground-truth pixel classes and their grayscale codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GtLabel {
    Static,
    Shadow,
    NonRoi,
    Unknown,
    Moving,
}

impl GtLabel {
    pub fn code(self) -> u8 {
        match self {
            Self::Static => 0,
            Self::Shadow => 50,
            Self::NonRoi => 85,
            Self::Unknown => 170,
            Self::Moving => 255,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Static),
            50 => Some(Self::Shadow),
            85 => Some(Self::NonRoi),
            170 => Some(Self::Unknown),
            255 => Some(Self::Moving),
            _ => None,
        }
    }

    /// Pixels that are never counted.
    pub fn is_excluded(self) -> bool {
        matches!(self, Self::NonRoi | Self::Unknown)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GtFrame {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<GtLabel>,
}

impl GtFrame {
    pub fn new(width: usize, height: usize, labels: Vec<GtLabel>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(BenchError::DimensionMismatch {
                want_w: width,
                want_h: height,
                got_w: labels.len(),
                got_h: 1,
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: GtLabel) -> Self {
        Self {
            width,
            height,
            labels: vec![label; width * height],
        }
    }

    pub fn from_codes(width: usize, height: usize, codes: &[u8]) -> Result<Self> {
        let labels = codes
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                GtLabel::from_code(value).ok_or(BenchError::BadGtCode { value, index })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, labels)
    }

    pub fn to_codes(&self) -> Vec<u8> {
        self.labels.iter().map(|l| l.code()).collect()
    }

    pub fn moving_mask(&self) -> Vec<bool> {
        self.labels.iter().map(|&l| l == GtLabel::Moving).collect()
    }

    /// Mean (row, col) of the moving pixels.
    pub fn moving_centroid(&self) -> Option<(f64, f64)> {
        let (mut sr, mut sc, mut n) = (0.0, 0.0, 0usize);
        for (i, &l) in self.labels.iter().enumerate() {
            if l == GtLabel::Moving {
                sr += (i / self.width) as f64;
                sc += (i % self.width) as f64;
                n += 1;
            }
        }
        (n > 0).then(|| (sr / n as f64, sc / n as f64))
    }
}
