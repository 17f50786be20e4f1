//! Gaussian noise fields on rectangular grids.
//!
//! Two classes are provided:
//!
//! - **discretized white noise**: one i.i.d. standard normal per unit cell,
//!   drawn in row-major order from stream [`STREAM_DISCRETIZED`];
//! - **regularized white noise**: a stationary field whose spectral density is
//!   the indicator of the closed disc `|k| ≤ √(4π)`, normalized so the
//!   covariance is `c(z) = (2π)⁻² ∫_{|k|≤√(4π)} e^{ik·z} dk` with `c(0) = 1`.
//!
//! The disc radius exceeds the unit-grid Nyquist frequency `π`, so regularized
//! fields are synthesized on an internal grid of spacing ½. That grid has
//! `n = next_pow2(2·(w + PAD))` points per axis (period `n/2` in lattice units);
//! mode `m` carries frequency `k = 4πm/n` and is kept iff `4π|m|² ≤ n²`. Every
//! kept mode gets amplitude `(g₁ + i g₂)/√N` (`N` = number of kept modes), the
//! array is inverse transformed and the real part is read off at even internal
//! indices. The pointwise variance is then exactly 1 for every grid size.
//!
//! Cell values are treated as cell averages, so `∫_M ξ` over a cell union is
//! the sum of values times the cell area.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::lattice::{Cell, Extent};
use crate::rng::{stream_rng, STREAM_DISCRETIZED, STREAM_REGULARIZED};

/// Cells of periodic padding around the box on the internal spectral grid.
pub const REGULARIZED_PAD: usize = 24;
/// Largest internal spectral grid, in points.
const MAX_INTERNAL_POINTS: usize = 1 << 26;
/// Squared cutoff radius `|k|² ≤ 4π`.
pub const CUTOFF_K2: f64 = 4.0 * std::f64::consts::PI;

const MAGIC: &[u8; 8] = b"RFNOISE\0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    DiscretizedWN,
    RegularizedWN,
}

impl NoiseKind {
    fn code(self) -> u32 {
        match self {
            NoiseKind::DiscretizedWN => 0,
            NoiseKind::RegularizedWN => 1,
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(NoiseKind::DiscretizedWN),
            1 => Ok(NoiseKind::RegularizedWN),
            c => Err(Error::Format(format!("unknown noise kind code {c}"))),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::DiscretizedWN => "discretized-wn",
            NoiseKind::RegularizedWN => "regularized-wn",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discretized-wn" => Ok(NoiseKind::DiscretizedWN),
            "regularized-wn" => Ok(NoiseKind::RegularizedWN),
            other => Err(Error::InvalidArgument(format!("unknown noise kind `{other}`"))),
        }
    }
}

/// A sampled noise realization. Array index `[[row, col]]` holds the cell
/// `(origin.x + col, origin.y + row)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseField {
    values: Array2<f64>,
    spacing: f64,
    origin: Cell,
    kind: NoiseKind,
    seed: u64,
}

impl NoiseField {
    /// Wraps explicit values, e.g. for deterministic test fields.
    pub fn from_values(values: Array2<f64>, kind: NoiseKind, seed: u64) -> Result<Self> {
        if values.is_empty() {
            return invalid("noise field must be nonempty");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("noise values must be finite");
        }
        Ok(Self { values, spacing: 1.0, origin: Cell::new(0, 0), kind, seed })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::from_values(Array2::zeros((height, width)), NoiseKind::DiscretizedWN, 0)
    }

    pub fn with_origin(mut self, origin: Cell) -> Self {
        self.origin = origin;
        self
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn height(&self) -> usize {
        self.values.nrows()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> Cell {
        self.origin
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn extent(&self) -> Extent {
        Extent::new(self.origin.x, self.origin.y, self.width(), self.height())
    }

    pub fn get(&self, c: Cell) -> Option<f64> {
        if !self.extent().contains(c) {
            return None;
        }
        let row = (c.y - self.origin.y) as usize;
        let col = (c.x - self.origin.x) as usize;
        Some(self.values[[row, col]])
    }

    /// Value at a cell known to lie in the extent.
    #[inline]
    pub fn at(&self, c: Cell) -> f64 {
        self.values[[(c.y - self.origin.y) as usize, (c.x - self.origin.x) as usize]]
    }

    /// The field `−ξ` with the same provenance.
    pub fn negated(&self) -> Self {
        let mut out = self.clone();
        out.values.mapv_inplace(|v| -v);
        out
    }

    /// `∫_M ξ` for a union of cells.
    pub fn field_integral<'a>(&self, cells: impl IntoIterator<Item = &'a Cell>) -> Result<f64> {
        let area = self.spacing * self.spacing;
        let mut sum = 0.0;
        for &c in cells {
            match self.get(c) {
                Some(v) => sum += v * area,
                None => return invalid(format!("cell ({}, {}) outside the noise extent", c.x, c.y)),
            }
        }
        Ok(sum)
    }

    /// Writes the 32-byte header followed by little-endian `f64` values in
    /// row-major order. Header: magic `RFNOISE\0`, kind `u32`, width `u32`,
    /// height `u32`, reserved `u32`, seed `u64`, all little-endian.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        let mut header = [0u8; 32];
        header[..8].copy_from_slice(MAGIC);
        header[8..12].copy_from_slice(&self.kind.code().to_le_bytes());
        header[12..16].copy_from_slice(&(self.width() as u32).to_le_bytes());
        header[16..20].copy_from_slice(&(self.height() as u32).to_le_bytes());
        header[24..32].copy_from_slice(&self.seed.to_le_bytes());
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(8 * self.values.len());
        for v in self.values.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary(mut r: impl Read) -> Result<Self> {
        let mut header = [0u8; 32];
        r.read_exact(&mut header)?;
        if &header[..8] != MAGIC {
            return Err(Error::Format("bad noise file magic".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
        let kind = NoiseKind::from_code(u32_at(8))?;
        let (width, height) = (u32_at(12) as usize, u32_at(16) as usize);
        let seed = u64::from_le_bytes(header[24..32].try_into().unwrap());
        if width == 0 || height == 0 {
            return Err(Error::Format("empty noise extent".into()));
        }
        let mut bytes = vec![0u8; 8 * width * height];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let values = Array2::from_shape_vec((height, width), data)
            .map_err(|e| Error::Format(e.to_string()))?;
        Self::from_values(values, kind, seed)
    }

    /// CSV with header `x,y,value`, one line per cell in row-major order.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "x,y,value")?;
        for ((row, col), v) in self.values.indexed_iter() {
            writeln!(w, "{},{},{}", self.origin.x + col as i64, self.origin.y + row as i64, v)?;
        }
        Ok(())
    }
}

pub fn sample_discretized_wn(width: usize, height: usize, seed: u64) -> Result<NoiseField> {
    if width == 0 || height == 0 {
        return invalid("noise extent must be at least 1×1");
    }
    let mut rng = stream_rng(seed, STREAM_DISCRETIZED);
    let values = Array2::from_shape_simple_fn((height, width), || rng.sample(StandardNormal));
    NoiseField::from_values(values, NoiseKind::DiscretizedWN, seed)
}

/// Internal spectral grid `(nx, ny)` used for a `width × height` box.
pub fn regularized_grid(width: usize, height: usize) -> Result<(usize, usize)> {
    if width < 2 || height < 2 {
        return invalid("regularized noise needs an extent of at least 2×2");
    }
    let nx = (2 * (width + REGULARIZED_PAD)).next_power_of_two();
    let ny = (2 * (height + REGULARIZED_PAD)).next_power_of_two();
    if nx.saturating_mul(ny) > MAX_INTERNAL_POINTS {
        return invalid(format!("extent {width}×{height} too large for the spectral grid"));
    }
    Ok((nx, ny))
}

/// Signed frequency index of FFT bin `i` on an `n`-point axis.
fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Whether internal mode `(mx, my)` lies in the closed cutoff disc.
pub fn in_cutoff(mx: i64, my: i64, nx: usize, ny: usize) -> bool {
    // |k|² = 16π²((mx/nx)² + (my/ny)²) ≤ 4π
    let kx = 4.0 * std::f64::consts::PI * mx as f64 / nx as f64;
    let ky = 4.0 * std::f64::consts::PI * my as f64 / ny as f64;
    kx * kx + ky * ky <= CUTOFF_K2
}

/// Masked spectral amplitudes on the internal grid, indexed `[[iy, ix]]` by
/// FFT bin. Entries outside the cutoff disc are exactly zero.
pub fn regularized_spectrum(width: usize, height: usize, seed: u64) -> Result<Array2<Complex64>> {
    let (nx, ny) = regularized_grid(width, height)?;
    let mut mask = Array2::from_elem((ny, nx), false);
    for ((iy, ix), m) in mask.indexed_iter_mut() {
        *m = in_cutoff(signed_index(ix, nx), signed_index(iy, ny), nx, ny);
    }
    let count = mask.iter().filter(|&&m| m).count();
    let scale = 1.0 / (count as f64).sqrt();
    let mut rng = stream_rng(seed, STREAM_REGULARIZED);
    let mut spec = Array2::from_elem((ny, nx), Complex64::new(0.0, 0.0));
    for (s, &m) in spec.iter_mut().zip(mask.iter()) {
        if m {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *s = Complex64::new(re * scale, im * scale);
        }
    }
    Ok(spec)
}

pub fn sample_regularized_wn(width: usize, height: usize, seed: u64) -> Result<NoiseField> {
    let mut spec = regularized_spectrum(width, height, seed)?;
    let (ny, nx) = spec.dim();
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft_inverse(nx);
    let col_fft = planner.plan_fft_inverse(ny);
    // rows are contiguous in standard layout
    row_fft.process(spec.as_slice_mut().expect("standard layout"));
    // only even columns are sampled
    let mut column = vec![Complex64::new(0.0, 0.0); ny];
    let mut values = Array2::zeros((height, width));
    for x in 0..width {
        let ix = 2 * x;
        for (iy, c) in column.iter_mut().enumerate() {
            *c = spec[[iy, ix]];
        }
        col_fft.process(&mut column);
        for y in 0..height {
            values[[y, x]] = column[2 * y].re;
        }
    }
    NoiseField::from_values(values, NoiseKind::RegularizedWN, seed)
}

/// Covariance `c(r) = (1/(2π)²) ∫_{|k|² ≤ 4π} e^{ik·x} dk` at distance `r`
/// of the continuum cutoff noise, by midpoint quadrature of
/// `(1/2π) ∫_0^K J₀(kr) k dk` with `J₀(z) = (1/π) ∫_0^π cos(z sin φ) dφ`.
pub fn cutoff_covariance(r: f64) -> f64 {
    const N: usize = 600;
    let k_max = CUTOFF_K2.sqrt();
    let (dk, dphi) = (k_max / N as f64, std::f64::consts::PI / N as f64);
    let sines: Vec<f64> = (0..N).map(|j| ((j as f64 + 0.5) * dphi).sin()).collect();
    let mut acc = 0.0;
    for i in 0..N {
        let k = (i as f64 + 0.5) * dk;
        let j0 = sines.iter().map(|s| (k * r * s).cos()).sum::<f64>() / N as f64;
        acc += j0 * k * dk;
    }
    acc / (2.0 * std::f64::consts::PI)
}

pub fn sample(kind: NoiseKind, width: usize, height: usize, seed: u64) -> Result<NoiseField> {
    match kind {
        NoiseKind::DiscretizedWN => sample_discretized_wn(width, height, seed),
        NoiseKind::RegularizedWN => sample_regularized_wn(width, height, seed),
    }
}

/// A named noise generator.
pub trait NoiseSampler: Send + Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> NoiseKind;
    fn sample(&self, width: usize, height: usize, seed: u64) -> Result<NoiseField>;
}

struct Discretized;
struct Regularized;

impl NoiseSampler for Discretized {
    fn name(&self) -> &'static str {
        "discretized-wn"
    }
    fn kind(&self) -> NoiseKind {
        NoiseKind::DiscretizedWN
    }
    fn sample(&self, width: usize, height: usize, seed: u64) -> Result<NoiseField> {
        sample_discretized_wn(width, height, seed)
    }
}

impl NoiseSampler for Regularized {
    fn name(&self) -> &'static str {
        "regularized-wn"
    }
    fn kind(&self) -> NoiseKind {
        NoiseKind::RegularizedWN
    }
    fn sample(&self, width: usize, height: usize, seed: u64) -> Result<NoiseField> {
        sample_regularized_wn(width, height, seed)
    }
}

static SAMPLERS: [&dyn NoiseSampler; 2] = [&Discretized, &Regularized];

pub fn samplers() -> &'static [&'static dyn NoiseSampler] {
    &SAMPLERS
}

pub fn sampler(name: &str) -> Result<&'static dyn NoiseSampler> {
    SAMPLERS
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown noise sampler `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discretized_is_deterministic() {
        let a = sample_discretized_wn(4, 4, 7).unwrap();
        let b = sample_discretized_wn(4, 4, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_discretized_wn(4, 4, 8).unwrap());
    }

    #[test]
    fn zero_extent_is_rejected() {
        assert!(sample_discretized_wn(0, 3, 1).is_err());
        assert!(sample_regularized_wn(1, 3, 1).is_err());
    }

    #[test]
    fn field_integral_examples() {
        let f = NoiseField::from_values(
            Array2::from_shape_vec((2, 2), vec![1.0, -1.0, 0.5, 0.5]).unwrap(),
            NoiseKind::DiscretizedWN,
            0,
        )
        .unwrap();
        assert_eq!(f.field_integral(&[]).unwrap(), 0.0);
        let all: Vec<Cell> = f.extent().cells().collect();
        assert_eq!(f.field_integral(&all).unwrap(), 1.0);
        assert_eq!(f.field_integral(&[Cell::new(0, 1)]).unwrap(), 0.5);
        assert!(f.field_integral(&[Cell::new(2, 0)]).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let f = sample_regularized_wn(5, 3, 11).unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * 15);
        let g = NoiseField::read_binary(&buf[..]).unwrap();
        assert_eq!(f, g);
        buf[0] = b'X';
        assert!(NoiseField::read_binary(&buf[..]).is_err());
    }

    #[test]
    fn csv_has_one_line_per_cell() {
        let f = sample_discretized_wn(3, 2, 1).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("x,y,value\n0,0,"));
    }

    #[test]
    fn spectrum_vanishes_outside_closed_disc() {
        let spec = regularized_spectrum(10, 6, 3).unwrap();
        let (ny, nx) = spec.dim();
        let mut kept = 0;
        for ((iy, ix), s) in spec.indexed_iter() {
            let (mx, my) = (signed_index(ix, nx), signed_index(iy, ny));
            let k2 = 16.0 * std::f64::consts::PI.powi(2)
                * ((mx as f64 / nx as f64).powi(2) + (my as f64 / ny as f64).powi(2));
            if k2 > CUTOFF_K2 {
                assert_eq!(*s, Complex64::new(0.0, 0.0));
            } else {
                assert_ne!(*s, Complex64::new(0.0, 0.0));
                kept += 1;
            }
        }
        // the disc covers about a quarter of the internal modes
        let frac = kept as f64 / (nx * ny) as f64;
        assert!((frac - 0.25).abs() < 0.02, "{frac}");
    }

    #[test]
    fn cutoff_covariance_is_normalized_and_decays() {
        assert!((cutoff_covariance(0.0) - 1.0).abs() < 1e-5);
        assert!(cutoff_covariance(20.0).abs() < 0.05);
    }

    #[test]
    fn registry_lookup() {
        for s in samplers() {
            assert_eq!(sampler(s.name()).unwrap().kind(), s.kind());
            assert_eq!(s.name().parse::<NoiseKind>().unwrap(), s.kind());
        }
        assert!(sampler("pink").is_err());
    }
}
