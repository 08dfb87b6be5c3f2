//! Frame types, color conversion, resizing, whitening and the spatial
//! filters shared by both networks.
//!
//! Intensities are `f64` in `[0, 1]` everywhere inside the crate; 8-bit
//! values only exist at the file boundary.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("frame must be at least 3x3, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("buffer length {got} does not match {width}x{height}x{channels}")]
    BadBuffer {
        width: usize,
        height: usize,
        channels: usize,
        got: usize,
    },
    #[error("intensity {value} at index {index} is outside [0,1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("window size must be odd and >= {min}, got {got}")]
    BadWindow { got: usize, min: usize },
    #[error("sigma must be positive and finite, got {0}")]
    BadSigma(f64),
    #[error("whitening needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("image i/o: {0}")]
    Io(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, ImagingError>;

/// An 8-bit RGB frame, interleaved row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawFrame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RawFrame {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(ImagingError::TooSmall { width, height });
        }
        if data.len() != width * height * 3 {
            return Err(ImagingError::BadBuffer {
                width,
                height,
                channels: 3,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an RGB frame with the same value in all three channels.
    pub fn from_gray_u8(width: usize, height: usize, gray: &[u8]) -> Result<Self> {
        if gray.len() != width * height {
            return Err(ImagingError::BadBuffer {
                width,
                height,
                channels: 1,
                got: gray.len(),
            });
        }
        let data = gray.iter().flat_map(|&g| [g, g, g]).collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let k = (row * self.width + col) * 3;
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }
}

/// A single-channel frame of real intensities in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayFrame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(ImagingError::BadBuffer {
                width,
                height,
                channels: 1,
                got: data.len(),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(ImagingError::OutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value.clamp(0.0, 1.0); width * height],
        }
    }

    /// Clamps every sample into `[0, 1]`; NaN becomes 0.
    pub fn from_clamped(width: usize, height: usize, mut data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "buffer length");
        for v in &mut data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Mirror left-right.
    pub fn flip_horizontal(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for row in self.data.chunks(self.width) {
            data.extend(row.iter().rev());
        }
        Self { data, ..*self }
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for r in 0..self.height {
            for c in 0..self.width {
                data[c * self.height + r] = self.data[r * self.width + c];
            }
        }
        Self {
            width: self.height,
            height: self.width,
            data,
        }
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    fn check_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(ImagingError::DimensionMismatch {
                expected: other,
                got: self.dims(),
            });
        }
        Ok(())
    }
}

/// A small 2-D weight matrix with odd side lengths, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2D {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        if rows.is_multiple_of(2) {
            return Err(ImagingError::BadWindow { got: rows, min: 1 });
        }
        if cols.is_multiple_of(2) {
            return Err(ImagingError::BadWindow { got: cols, min: 1 });
        }
        if weights.len() != rows * cols {
            return Err(ImagingError::BadBuffer {
                width: cols,
                height: rows,
                channels: 1,
                got: weights.len(),
            });
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite()) {
            return Err(ImagingError::OutOfRange { index, value });
        }
        Ok(Self {
            rows,
            cols,
            weights,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols + col]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn negated(&self) -> Self {
        Self {
            weights: self.weights.iter().map(|w| -w).collect(),
            ..*self
        }
    }

    /// Rotates the kernel by 90 degrees clockwise (square kernels only).
    pub fn rotated_90(&self) -> Self {
        assert_eq!(self.rows, self.cols, "rotation needs a square kernel");
        let n = self.rows;
        let mut weights = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                weights[c * n + (n - 1 - r)] = self.weights[r * n + c];
            }
        }
        Self { weights, ..*self }
    }
}

/// One of the four movement directions used by the directional filters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Left,
    Right,
    Up,
    Down,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Left,
        Direction::Right,
        Direction::Up,
        Direction::Down,
    ];

    pub fn opposite(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    /// Unit displacement `(d_row, d_col)` of an object moving this way.
    pub fn step(self) -> (isize, isize) {
        match self {
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
        }
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Direction::Left | Direction::Right)
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Left => "leftwards",
            Direction::Right => "rightwards",
            Direction::Up => "upwards",
            Direction::Down => "downwards",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "leftwards" => Some(Direction::Left),
            "right" | "rightwards" => Some(Direction::Right),
            "up" | "upwards" => Some(Direction::Up),
            "down" | "downwards" => Some(Direction::Down),
            _ => None,
        }
    }
}

pub fn to_grayscale(frame: &RawFrame) -> GrayFrame {
    let data = frame
        .data
        .chunks_exact(3)
        .map(|p| {
            let g = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
            (g / 255.0).clamp(0.0, 1.0)
        })
        .collect();
    GrayFrame {
        width: frame.width,
        height: frame.height,
        data,
    }
}

/// Bilinear resize with corner-aligned sampling, so the four corner samples
/// of the output equal the input corners.
pub fn resize(frame: &GrayFrame, out_w: usize, out_h: usize) -> Result<GrayFrame> {
    if out_w < 3 || out_h < 3 {
        return Err(ImagingError::TooSmall {
            width: out_w,
            height: out_h,
        });
    }
    if frame.dims() == (out_w, out_h) {
        return Ok(frame.clone());
    }
    let scale = |n_in: usize, n_out: usize| {
        if n_in <= 1 {
            0.0
        } else {
            (n_in - 1) as f64 / (n_out - 1) as f64
        }
    };
    let sx = scale(frame.width, out_w);
    let sy = scale(frame.height, out_h);
    let mut data = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let fy = y as f64 * sy;
        let y0 = (fy.floor() as usize).min(frame.height - 1);
        let y1 = (y0 + 1).min(frame.height - 1);
        let ty = fy - y0 as f64;
        for x in 0..out_w {
            let fx = x as f64 * sx;
            let x0 = (fx.floor() as usize).min(frame.width - 1);
            let x1 = (x0 + 1).min(frame.width - 1);
            let tx = fx - x0 as f64;
            let top = frame.at(y0, x0) * (1.0 - tx) + frame.at(y0, x1) * tx;
            let bottom = frame.at(y1, x0) * (1.0 - tx) + frame.at(y1, x1) * tx;
            data.push((top * (1.0 - ty) + bottom * ty).clamp(0.0, 1.0));
        }
    }
    Ok(GrayFrame {
        width: out_w,
        height: out_h,
        data,
    })
}

pub const DEFAULT_WHITEN_EPSILON: f64 = 1e-5;

/// ZCA whitening transform fitted on a set of flattened frames.
#[derive(Clone, Debug)]
pub struct WhitenModel {
    width: usize,
    height: usize,
    mean: DVector<f64>,
    transform: DMatrix<f64>,
    epsilon: f64,
}

impl WhitenModel {
    pub fn fit(frames: &[GrayFrame], epsilon: f64) -> Result<Self> {
        if frames.len() < 2 {
            return Err(ImagingError::TooFewFrames(frames.len()));
        }
        if !(epsilon > 0.0) {
            return Err(ImagingError::BadEpsilon(epsilon));
        }
        let dims = frames[0].dims();
        for f in frames {
            f.check_same_dims(dims)?;
        }
        let d = frames[0].len();
        let m = frames.len();
        let samples = DMatrix::from_fn(m, d, |r, c| frames[r].data[c]);
        let mean = DVector::from_fn(d, |c, _| samples.column(c).mean());
        let mut centered = samples;
        for c in 0..d {
            let mu = mean[c];
            centered.column_mut(c).add_scalar_mut(-mu);
        }
        let cov = (centered.transpose() * &centered) / (m - 1) as f64;
        let eig = SymmetricEigen::new(cov);
        let scale = DVector::from_iterator(
            d,
            eig.eigenvalues
                .iter()
                .map(|&l| 1.0 / (l.max(0.0) + epsilon).sqrt()),
        );
        let u = eig.eigenvectors;
        let transform = &u * DMatrix::from_diagonal(&scale) * u.transpose();
        Ok(Self {
            width: dims.0,
            height: dims.1,
            mean,
            transform,
            epsilon,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    /// Whitened samples before rescaling; may be negative.
    pub fn transform_raw(&self, frame: &GrayFrame) -> Result<Vec<f64>> {
        frame.check_same_dims((self.width, self.height))?;
        let x = DVector::from_column_slice(&frame.data) - &self.mean;
        Ok((&self.transform * x).as_slice().to_vec())
    }

    /// Whitened frame min-max rescaled to `[0, 1]`. A flat result maps to 0.
    pub fn apply(&self, frame: &GrayFrame) -> Result<GrayFrame> {
        let raw = self.transform_raw(frame)?;
        let (lo, hi) = raw
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        let data = if span > 0.0 && span.is_finite() {
            raw.iter()
                .map(|v| ((v - lo) / span).clamp(0.0, 1.0))
                .collect()
        } else {
            vec![0.0; raw.len()]
        };
        Ok(GrayFrame {
            width: self.width,
            height: self.height,
            data,
        })
    }
}

pub fn whiten_fit(frames: &[GrayFrame], epsilon: f64) -> Result<WhitenModel> {
    WhitenModel::fit(frames, epsilon)
}

pub fn whiten_apply(model: &WhitenModel, frame: &GrayFrame) -> Result<GrayFrame> {
    model.apply(frame)
}

fn check_odd(n: usize, min: usize) -> Result<()> {
    if n.is_multiple_of(2) || n < min {
        return Err(ImagingError::BadWindow { got: n, min });
    }
    Ok(())
}

/// Mean over a `u` (columns) by `v` (rows) window with zero padding; the
/// divisor is always `u * v`.
pub fn box_filter_plane(
    data: &[f64],
    width: usize,
    height: usize,
    u: usize,
    v: usize,
) -> Result<Vec<f64>> {
    check_odd(u, 1)?;
    check_odd(v, 1)?;
    let (hu, hv) = ((u / 2) as isize, (v / 2) as isize);
    let norm = 1.0 / (u * v) as f64;
    // separable: horizontal sums then vertical sums
    let mut rows = vec![0.0; data.len()];
    for r in 0..height {
        let line = &data[r * width..(r + 1) * width];
        for c in 0..width {
            let lo = (c as isize - hu).max(0) as usize;
            let hi = ((c as isize + hu) as usize).min(width - 1);
            rows[r * width + c] = line[lo..=hi].iter().sum();
        }
    }
    let mut out = vec![0.0; data.len()];
    for c in 0..width {
        for r in 0..height {
            let lo = (r as isize - hv).max(0) as usize;
            let hi = ((r as isize + hv) as usize).min(height - 1);
            let s: f64 = (lo..=hi).map(|k| rows[k * width + c]).sum();
            out[r * width + c] = s * norm;
        }
    }
    Ok(out)
}

pub fn box_filter(mask: &GrayFrame, u: usize, v: usize) -> Result<GrayFrame> {
    let data = box_filter_plane(&mask.data, mask.width, mask.height, u, v)?;
    Ok(GrayFrame::from_clamped(mask.width, mask.height, data))
}

/// Per-pixel median over a `k x k` window, replicating edge pixels.
pub fn median_filter(mask: &GrayFrame, k: usize) -> Result<GrayFrame> {
    check_odd(k, 3)?;
    let h = (k / 2) as isize;
    let (w, ht) = (mask.width as isize, mask.height as isize);
    let mut window = Vec::with_capacity(k * k);
    let mut data = Vec::with_capacity(mask.len());
    for r in 0..ht {
        for c in 0..w {
            window.clear();
            for dr in -h..=h {
                let rr = (r + dr).clamp(0, ht - 1) as usize;
                for dc in -h..=h {
                    let cc = (c + dc).clamp(0, w - 1) as usize;
                    window.push(mask.data[rr * mask.width + cc]);
                }
            }
            let mid = window.len() / 2;
            let (_, m, _) = window.select_nth_unstable_by(mid, f64::total_cmp);
            data.push(*m);
        }
    }
    Ok(GrayFrame { data, ..*mask })
}

pub const DEFAULT_DOG_RATIO: f64 = 1.6;

/// Difference of Gaussians, narrow centre minus surround of width
/// `ratio * sigma_center`, shifted to sum to exactly zero.
pub fn dog_kernel(size: usize, sigma_center: f64, ratio: f64) -> Result<Kernel2D> {
    check_odd(size, 3)?;
    if !(sigma_center > 0.0 && sigma_center.is_finite()) {
        return Err(ImagingError::BadSigma(sigma_center));
    }
    let sigma_surround = ratio * sigma_center;
    if !(sigma_surround > 0.0 && sigma_surround.is_finite()) {
        return Err(ImagingError::BadSigma(sigma_surround));
    }
    let gauss =
        |r2: f64, s: f64| (-r2 / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s);
    let half = (size / 2) as isize;
    let mut weights = Vec::with_capacity(size * size);
    for y in -half..=half {
        for x in -half..=half {
            let r2 = (x * x + y * y) as f64;
            weights.push(gauss(r2, sigma_center) - gauss(r2, sigma_surround));
        }
    }
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    for w in &mut weights {
        *w -= mean;
    }
    // absorb the remaining rounding residue in the centre tap
    let residue: f64 = weights.iter().sum();
    let centre = weights.len() / 2;
    weights[centre] -= residue;
    Kernel2D::new(size, size, weights)
}

/// Antisymmetric linear-ramp gradient kernel. The leftwards kernel has
/// weight `(size-1)/2 - col`, i.e. columns `[1, 0, -1]` at size 3.
pub fn directional_kernel(direction: Direction, size: usize) -> Result<Kernel2D> {
    check_odd(size, 3)?;
    let half = ((size - 1) / 2) as f64;
    let mut weights = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let w = match direction {
                Direction::Left => half - c as f64,
                Direction::Right => c as f64 - half,
                Direction::Down => half - r as f64,
                Direction::Up => r as f64 - half,
            };
            weights.push(w);
        }
    }
    Kernel2D::new(size, size, weights)
}

/// Valid-region 2-D convolution (kernel flipped). Output is
/// `(width - cols + 1) x (height - rows + 1)`.
pub fn convolve_valid(
    data: &[f64],
    width: usize,
    height: usize,
    kernel: &Kernel2D,
) -> (Vec<f64>, usize, usize) {
    let (kr, kc) = (kernel.rows, kernel.cols);
    if width < kc || height < kr {
        return (Vec::new(), 0, 0);
    }
    let ow = width - kc + 1;
    let oh = height - kr + 1;
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            let mut acc = 0.0;
            for i in 0..kr {
                let row = &data[(r + i) * width + c..(r + i) * width + c + kc];
                for (j, x) in row.iter().enumerate() {
                    acc += kernel.weights[(kr - 1 - i) * kc + (kc - 1 - j)] * x;
                }
            }
            out[r * ow + c] = acc;
        }
    }
    (out, ow, oh)
}

pub fn read_raw(path: &Path) -> Result<RawFrame> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    RawFrame::new(w as usize, h as usize, img.into_raw())
}

pub fn write_gray_png(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    image::save_buffer(
        path,
        data,
        width as u32,
        height as u32,
        image::ExtendedColorType::L8,
    )?;
    Ok(())
}

pub fn read_gray_u8(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = img.dimensions();
    Ok((w as usize, h as usize, img.into_raw()))
}

pub fn write_raw_png(path: &Path, frame: &RawFrame) -> Result<()> {
    image::save_buffer(
        path,
        &frame.data,
        frame.width as u32,
        frame.height as u32,
        image::ExtendedColorType::Rgb8,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw_uniform(r: u8, g: u8, b: u8) -> RawFrame {
        RawFrame::new(3, 3, [r, g, b].repeat(9)).unwrap()
    }

    fn gray(width: usize, height: usize, data: Vec<f64>) -> GrayFrame {
        GrayFrame::new(width, height, data).unwrap()
    }

    #[test]
    fn grayscale_examples() {
        let white = to_grayscale(&raw_uniform(255, 255, 255));
        assert!(white.data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let red = to_grayscale(&raw_uniform(100, 0, 0));
        assert!((red.at(1, 1) - 29.9 / 255.0).abs() < 1e-12);
        let green = to_grayscale(&raw_uniform(0, 255, 0));
        assert!((green.at(0, 0) - 0.587).abs() < 1e-12);
    }

    #[test]
    fn raw_frame_rejects_tiny() {
        assert!(matches!(
            RawFrame::new(2, 3, vec![0; 18]),
            Err(ImagingError::TooSmall { .. })
        ));
    }

    #[test]
    fn gray_frame_rejects_out_of_range() {
        assert!(GrayFrame::new(1, 2, vec![0.5, 1.5]).is_err());
        assert!(GrayFrame::new(1, 2, vec![0.5, f64::NAN]).is_err());
    }

    #[test]
    fn resize_identity_and_constant() {
        let f = gray(3, 3, (0..9).map(|v| v as f64 / 8.0).collect());
        assert_eq!(resize(&f, 3, 3).unwrap(), f);
        let c = GrayFrame::filled(7, 5, 0.5);
        let r = resize(&c, 11, 4).unwrap();
        assert!(r.data().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn resize_checkerboard_corners() {
        let f = gray(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let r = resize(&f, 4, 4).unwrap();
        assert_eq!(r.at(0, 0), 0.0);
        assert_eq!(r.at(0, 3), 1.0);
        assert_eq!(r.at(3, 0), 1.0);
        assert_eq!(r.at(3, 3), 0.0);
        // hand-evaluated interior sample at (1,1): source (1/3,1/3)
        // top = 1/3, bottom = 2/3 -> 1/3*(2/3) + 2/3*(1/3) = 4/9
        assert!((r.at(1, 1) - 4.0 / 9.0).abs() < 1e-12);
        assert!(resize(&f, 2, 4).is_err());
    }

    #[test]
    fn box_filter_examples() {
        let f = gray(4, 4, (0..16).map(|v| v as f64 / 15.0).collect());
        assert_eq!(box_filter(&f, 1, 1).unwrap(), f);

        let ones = GrayFrame::filled(5, 5, 1.0);
        let out = box_filter(&ones, 3, 3).unwrap();
        for r in 1..4 {
            for c in 1..4 {
                assert!((out.at(r, c) - 1.0).abs() < 1e-12);
            }
        }

        let mut d = vec![0.0; 25];
        d[12] = 1.0;
        let out = box_filter(&gray(5, 5, d), 3, 3).unwrap();
        for r in 0..5 {
            for c in 0..5 {
                let expect = if (1..=3).contains(&r) && (1..=3).contains(&c) {
                    1.0 / 9.0
                } else {
                    0.0
                };
                assert!((out.at(r, c) - expect).abs() < 1e-12, "({r},{c})");
            }
        }
        assert!(box_filter(&ones, 2, 3).is_err());
    }

    #[test]
    fn box_filter_rectangular_window() {
        let mut d = vec![0.0; 35];
        d[17] = 1.0; // row 2, col 3 in a 7x5 frame
        let out = box_filter_plane(&d, 7, 5, 5, 1).unwrap();
        for c in 0..7 {
            let expect = if (1..=5).contains(&c) { 0.2 } else { 0.0 };
            assert!((out[2 * 7 + c] - expect).abs() < 1e-12);
            assert_eq!(out[7 + c], 0.0);
        }
    }

    #[test]
    fn median_examples() {
        let c = GrayFrame::filled(6, 4, 0.3);
        assert_eq!(median_filter(&c, 3).unwrap(), c);

        let mut d = vec![0.0; 25];
        d[12] = 1.0;
        let out = median_filter(&gray(5, 5, d), 3).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));

        // 3x3 window {0,0,0,0,1,1,1,1,1}: sort-and-pick gives 1
        let w = vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let mut sorted = w.clone();
        sorted.sort_by(f64::total_cmp);
        let out = median_filter(&gray(3, 3, w), 3).unwrap();
        assert_eq!(out.at(1, 1), sorted[4]);
        assert_eq!(out.at(1, 1), 1.0);

        assert!(median_filter(&c, 4).is_err());
        assert!(median_filter(&c, 1).is_err());
    }

    #[test]
    fn dog_zero_sum_and_symmetry() {
        for &(size, sigma) in &[(3, 0.5), (5, 1.0), (7, 1.3), (9, 0.8)] {
            let k = dog_kernel(size, sigma, DEFAULT_DOG_RATIO).unwrap();
            assert!(k.sum().abs() < 1e-12, "sum {}", k.sum());
            let rot = k.rotated_90();
            for (a, b) in k.weights().iter().zip(rot.weights()) {
                assert!((a - b).abs() < 1e-15);
            }
            let frame = vec![0.7; (size + 4) * (size + 6)];
            let (resp, _, _) = convolve_valid(&frame, size + 4, size + 6, &k);
            assert!(resp.iter().all(|r| r.abs() < 1e-9));
        }
        assert!(dog_kernel(3, 0.0, 1.6).is_err());
        assert!(dog_kernel(3, -1.0, 1.6).is_err());
        assert!(dog_kernel(4, 1.0, 1.6).is_err());
    }

    #[test]
    fn dog_small_sigma_is_centre_surround() {
        let k = dog_kernel(3, 0.5, DEFAULT_DOG_RATIO).unwrap();
        assert!(k.at(1, 1) > 0.0);
        for (i, w) in k.weights().iter().enumerate() {
            if i != 4 {
                assert!(*w < 0.0);
            }
        }
    }

    #[test]
    fn dog_step_edge_peaks_at_edge() {
        let (w, h) = (10, 7);
        let edge = 5;
        let data: Vec<f64> = (0..w * h)
            .map(|i| if i % w >= edge { 1.0 } else { 0.0 })
            .collect();
        let k = dog_kernel(3, 1.0, DEFAULT_DOG_RATIO).unwrap();
        let (resp, ow, _) = convolve_valid(&data, w, h, &k);
        // direct correlation oracle (kernel is symmetric)
        let oracle = |r: usize, c: usize| {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += k.at(i, j) * data[(r + i) * w + c + j];
                }
            }
            acc
        };
        let mut best = (0.0, 0);
        for (idx, v) in resp.iter().enumerate() {
            let (r, c) = (idx / ow, idx % ow);
            assert!((v - oracle(r, c)).abs() < 1e-12);
            if v.abs() > best.0 {
                best = (v.abs(), c);
            }
        }
        // output column c is centred on input column c+1
        let centre = best.1 + 1;
        assert!(centre == edge || centre == edge - 1, "peak at {centre}");
    }

    #[test]
    fn directional_kernels() {
        let left = directional_kernel(Direction::Left, 3).unwrap();
        assert_eq!(
            left.weights(),
            &[1.0, 0.0, -1.0, 1.0, 0.0, -1.0, 1.0, 0.0, -1.0]
        );
        let right = directional_kernel(Direction::Right, 3).unwrap();
        assert_eq!(right, left.negated());
        let up = directional_kernel(Direction::Up, 5).unwrap();
        let down = directional_kernel(Direction::Down, 5).unwrap();
        for (a, b) in up.weights().iter().zip(down.weights()) {
            assert_eq!(a + b, 0.0);
        }
        for d in Direction::ALL {
            let k = directional_kernel(d, 3).unwrap();
            let (resp, _, _) = convolve_valid(&[0.4; 36], 6, 6, &k);
            assert!(resp.iter().all(|&r| r.abs() < 1e-12));
        }
        assert!(directional_kernel(Direction::Left, 2).is_err());
    }

    #[test]
    fn convolve_flips_kernel() {
        // impulse response of a convolution is the kernel itself
        let mut d = vec![0.0; 25];
        d[12] = 1.0;
        let k = Kernel2D::new(3, 3, (1..=9).map(f64::from).collect()).unwrap();
        let (out, ow, oh) = convolve_valid(&d, 5, 5, &k);
        assert_eq!((ow, oh), (3, 3));
        assert_eq!(out, k.weights());
    }

    #[test]
    fn whitening_constant_sequence_is_zero() {
        let frames = vec![GrayFrame::filled(4, 4, 0.3); 5];
        let model = whiten_fit(&frames, DEFAULT_WHITEN_EPSILON).unwrap();
        let raw = model.transform_raw(&frames[0]).unwrap();
        assert!(raw.iter().all(|&v| v == 0.0));
        let out = whiten_apply(&model, &frames[0]).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn whitening_errors() {
        let f = GrayFrame::filled(4, 4, 0.3);
        assert!(matches!(
            whiten_fit(&[f.clone()], 1e-5),
            Err(ImagingError::TooFewFrames(1))
        ));
        assert!(whiten_fit(&[f.clone(), GrayFrame::filled(4, 5, 0.1)], 1e-5).is_err());
        assert!(whiten_fit(&[f.clone(), f.clone()], 0.0).is_err());
        let model = whiten_fit(&[f.clone(), f.clone()], 1e-5).unwrap();
        assert!(whiten_apply(&model, &GrayFrame::filled(5, 4, 0.1)).is_err());
    }

    fn random_frames(n: usize, w: usize, h: usize, seed: u64, binary: bool) -> Vec<GrayFrame> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let data = (0..w * h)
                    .map(|_| {
                        if binary {
                            if rng.gen_bool(0.5) {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            rng.gen::<f64>()
                        }
                    })
                    .collect();
                GrayFrame::new(w, h, data).unwrap()
            })
            .collect()
    }

    fn whitened_covariance(model: &WhitenModel, frames: &[GrayFrame]) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> = frames
            .iter()
            .map(|f| model.transform_raw(f).unwrap())
            .collect();
        let d = rows[0].len();
        let m = rows.len();
        let x = DMatrix::from_fn(m, d, |r, c| rows[r][c]);
        let mut xc = x.clone();
        for c in 0..d {
            let mu = x.column(c).mean();
            xc.column_mut(c).add_scalar_mut(-mu);
        }
        (xc.transpose() * &xc) / (m - 1) as f64
    }

    #[test]
    fn whitening_decorrelates_full_rank_data() {
        let eps = DEFAULT_WHITEN_EPSILON;
        let frames = random_frames(2000, 4, 4, 7, true);
        let model = whiten_fit(&frames, eps).unwrap();
        let cov = whitened_covariance(&model, &frames);
        let mut worst: f64 = 0.0;
        for r in 0..cov.nrows() {
            for c in 0..cov.ncols() {
                if r != c {
                    worst = worst.max(cov[(r, c)].abs());
                }
            }
        }
        assert!(worst < 10.0 * eps, "max off-diagonal {worst}");
    }

    #[test]
    fn whitening_rank_deficient_data_gives_projector() {
        // 50 frames of 8x8 span at most 49 dimensions, so the whitened
        // covariance is the projector onto the data span rather than I.
        let eps = DEFAULT_WHITEN_EPSILON;
        let frames = random_frames(50, 8, 8, 11, false);
        let model = whiten_fit(&frames, eps).unwrap();
        let cov = whitened_covariance(&model, &frames);
        let sq = &cov * &cov;
        let err = (&sq - &cov).abs().max();
        assert!(err < 1e-2, "not idempotent: {err}");
        let trace = cov.trace();
        assert!((trace - 49.0).abs() < 0.1, "trace {trace}");
    }

    #[test]
    fn whitening_large_epsilon_is_scaled_centering() {
        let frames = random_frames(10, 3, 3, 3, false);
        let eps = 1e12;
        let model = whiten_fit(&frames, eps).unwrap();
        let raw = model.transform_raw(&frames[2]).unwrap();
        let mean = model.mean();
        for (i, v) in raw.iter().enumerate() {
            let expect = (frames[2].data()[i] - mean[i]) / eps.sqrt();
            assert!((v - expect).abs() < 1e-12 * expect.abs().max(1e-6));
        }
    }

    proptest! {
        #[test]
        fn grayscale_monotone(r in 0u8..255, g in 0u8..=255, b in 0u8..=255, ch in 0usize..3) {
            let base = to_grayscale(&raw_uniform(r, g, b)).at(0, 0);
            let mut px = [r, g, b];
            px[ch] = px[ch].saturating_add(1);
            let raised = to_grayscale(&raw_uniform(px[0], px[1], px[2])).at(0, 0);
            prop_assert!(raised >= base);
        }

        #[test]
        fn filters_preserve_range(
            data in proptest::collection::vec(0.0f64..=1.0, 30),
            u in prop_oneof![Just(1usize), Just(3), Just(5)],
            k in prop_oneof![Just(3usize), Just(5)],
        ) {
            let f = GrayFrame::new(6, 5, data.clone()).unwrap();
            let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let m = median_filter(&f, k).unwrap();
            prop_assert!(m.data().iter().all(|&v| v >= lo && v <= hi));
            // interior windows stay in [lo, hi]; zero padding can only pull
            // border pixels toward 0
            let b = box_filter(&f, u, u).unwrap();
            let h = u / 2;
            for r in 0..5 {
                for c in 0..6 {
                    let v = b.at(r, c);
                    let interior = r >= h && r + h < 5 && c >= h && c + h < 6;
                    let floor = if interior { lo } else { 0.0 };
                    prop_assert!(v >= floor - 1e-12 && v <= hi + 1e-12);
                }
            }
        }
    }
}
