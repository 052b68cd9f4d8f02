//! 2D Fourier and cosine transforms.
//!
//! The forward DFT is unnormalized; the inverse carries `1/(U*V)`. The block
//! DCT is the orthonormal DCT-II, so coefficient energy equals pixel energy.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{FreqCacheError, Result};
use crate::frame::{Frame, Grid};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Complex 2D spectrum with the same shape as the frame it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    height: usize,
    width: usize,
    bins: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_parts(real: &Grid<f64>, imag: &Grid<f64>) -> Result<Self> {
        if !real.same_shape(imag) {
            return Err(FreqCacheError::DimensionMismatch {
                expected_rows: real.rows(),
                expected_cols: real.cols(),
                rows: imag.rows(),
                cols: imag.cols(),
            });
        }
        let bins = real
            .as_slice()
            .iter()
            .zip(imag.as_slice())
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        Self::from_bins(real.rows(), real.cols(), bins)
    }

    pub fn from_bins(height: usize, width: usize, bins: Vec<Complex64>) -> Result<Self> {
        if height == 0 || width == 0 || bins.len() != height * width {
            return Err(FreqCacheError::InvalidDimensions(format!(
                "{height}x{width} spectrum with {} bins",
                bins.len()
            )));
        }
        if let Some(index) = bins
            .iter()
            .position(|b| !b.re.is_finite() || !b.im.is_finite())
        {
            return Err(FreqCacheError::NonFinite { index });
        }
        Ok(Self {
            height,
            width,
            bins,
        })
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn bin(&self, u: usize, v: usize) -> Complex64 {
        self.bins[u * self.width + v]
    }

    pub fn real(&self, u: usize, v: usize) -> f64 {
        self.bin(u, v).re
    }

    pub fn imag(&self, u: usize, v: usize) -> f64 {
        self.bin(u, v).im
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    pub fn amplitude(&self) -> Grid<f64> {
        // sqrt of the squared norm; hypot is several times slower here.
        Grid::from_vec(
            self.height,
            self.width,
            self.bins.iter().map(|b| b.norm_sqr().sqrt()).collect(),
        )
        .expect("shape preserved")
    }

    pub fn phase(&self) -> Grid<f64> {
        Grid::from_vec(
            self.height,
            self.width,
            self.bins.iter().map(|b| b.im.atan2(b.re)).collect(),
        )
        .expect("shape preserved")
    }
}

/// Amplitude `sqrt(R^2 + I^2)` and phase `atan2(I, R)` of every bin.
///
/// A bin with `R = I = 0` has phase 0.
pub fn amplitude_phase(spec: &Spectrum) -> (Grid<f64>, Grid<f64>) {
    (spec.amplitude(), spec.phase())
}

/// Forward 2D DFT, unnormalized.
pub fn dft2(frame: &Frame) -> Spectrum {
    let mut bins: Vec<Complex64> = frame
        .data()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft2_in_place(&mut bins, frame.height(), frame.width(), false);
    Spectrum {
        height: frame.height(),
        width: frame.width(),
        bins,
    }
}

/// Inverse 2D DFT with `1/(U*V)` normalization, returning the real part.
///
/// Fails if the imaginary residue exceeds `1e-6` times the largest input
/// amplitude, i.e. if the spectrum could not have come from a real frame.
pub fn idft2(spec: &Spectrum) -> Result<Frame> {
    let out = idft2_complex(spec);
    let residue = out.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
    let limit = 1e-6 * spec.bins.iter().fold(0.0f64, |m, b| m.max(b.norm()));
    if residue > limit {
        return Err(FreqCacheError::NonRealSpectrum { residue, limit });
    }
    Frame::new(
        spec.height,
        spec.width,
        out.into_iter().map(|z| z.re).collect(),
    )
}

/// Inverse 2D DFT keeping the complex result.
pub(crate) fn idft2_complex(spec: &Spectrum) -> Vec<Complex64> {
    let mut bins = spec.bins.clone();
    fft2_in_place(&mut bins, spec.height, spec.width, true);
    let scale = 1.0 / (spec.height * spec.width) as f64;
    for b in &mut bins {
        *b *= scale;
    }
    bins
}

fn fft2_in_place(data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let (row_fft, col_fft) = if inverse {
            (
                planner.plan_fft_inverse(cols),
                planner.plan_fft_inverse(rows),
            )
        } else {
            (
                planner.plan_fft_forward(cols),
                planner.plan_fft_forward(rows),
            )
        };
        // rustfft processes every consecutive chunk of the planned length.
        row_fft.process(data);
        if rows > 1 {
            let mut transposed = transpose(data, rows, cols);
            col_fft.process(&mut transposed);
            let back = transpose(&transposed, cols, rows);
            data.copy_from_slice(&back);
        }
    });
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

/// Orthonormal DCT-II basis for `P x P` blocks, applied separably.
#[derive(Debug, Clone)]
pub struct DctBasis {
    size: usize,
    // basis[u * size + x] = c(u) * cos(pi * (2x + 1) * u / 2P)
    basis: Vec<f64>,
}

impl DctBasis {
    pub fn new(size: usize) -> Self {
        assert!(size > 0, "DCT size must be positive");
        let n = size as f64;
        let mut basis = Vec::with_capacity(size * size);
        for u in 0..size {
            let scale = if u == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            for x in 0..size {
                basis.push(scale * (PI * (2 * x + 1) as f64 * u as f64 / (2.0 * n)).cos());
            }
        }
        Self { size, basis }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `out = B * block * B^T`, where `scratch` and `out` hold `P*P` values.
    pub fn transform_into(&self, block: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        let p = self.size;
        // Rows: scratch[x][v] = sum_y block[x][y] * B[v][y]
        for x in 0..p {
            let row = &block[x * p..(x + 1) * p];
            for v in 0..p {
                let b = &self.basis[v * p..(v + 1) * p];
                scratch[x * p + v] = row.iter().zip(b).map(|(a, c)| a * c).sum();
            }
        }
        // Columns: out[u][v] = sum_x B[u][x] * scratch[x][v]
        for u in 0..p {
            let b = &self.basis[u * p..(u + 1) * p];
            for v in 0..p {
                let mut acc = 0.0;
                for x in 0..p {
                    acc += b[x] * scratch[x * p + v];
                }
                out[u * p + v] = acc;
            }
        }
    }
}

/// Orthonormal 2D DCT-II of a square block.
pub fn block_dct(patch: &Grid<f64>) -> Result<Grid<f64>> {
    if patch.rows() != patch.cols() || patch.is_empty() {
        return Err(FreqCacheError::InvalidDimensions(format!(
            "DCT block must be square, got {}x{}",
            patch.rows(),
            patch.cols()
        )));
    }
    if let Some(index) = patch.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(FreqCacheError::NonFinite { index });
    }
    let p = patch.rows();
    let basis = DctBasis::new(p);
    let mut scratch = vec![0.0; p * p];
    let mut out = vec![0.0; p * p];
    basis.transform_into(patch.as_slice(), &mut scratch, &mut out);
    Grid::from_vec(p, p, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_only_frame() {
        let f = Frame::new(2, 2, vec![1.0; 4]).unwrap();
        let s = dft2(&f);
        assert!((s.real(0, 0) - 4.0).abs() < 1e-12);
        for (k, b) in s.bins().iter().enumerate().skip(1) {
            assert!(b.norm() < 1e-12, "bin {k} = {b}");
        }
        assert!(s.imag(0, 0).abs() < 1e-12);
    }

    #[test]
    fn zero_frame_zero_spectrum() {
        let s = dft2(&Frame::zeros(3, 5));
        assert!(s.bins().iter().all(|b| b.norm() == 0.0));
        let back = idft2(&s).unwrap();
        assert!(back.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dc_inversion() {
        let (u, v) = (4, 6);
        let mut real = Grid::filled(u, v, 0.0);
        real.set(0, 0, (u * v) as f64);
        let spec = Spectrum::from_parts(&real, &Grid::filled(u, v, 0.0)).unwrap();
        let f = idft2(&spec).unwrap();
        assert!(f.data().iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn non_hermitian_spectrum_rejected() {
        let mut imag = Grid::filled(4, 4, 0.0);
        imag.set(0, 1, 1.0);
        let spec = Spectrum::from_parts(&Grid::filled(4, 4, 0.0), &imag).unwrap();
        assert!(matches!(
            idft2(&spec),
            Err(FreqCacheError::NonRealSpectrum { .. })
        ));
    }

    #[test]
    fn non_finite_spectrum_rejected() {
        let mut real = Grid::filled(2, 2, 0.0);
        real.set(1, 1, f64::NAN);
        assert!(Spectrum::from_parts(&real, &Grid::filled(2, 2, 0.0)).is_err());
    }

    #[test]
    fn amplitude_phase_of_single_bins() {
        let real = Grid::from_vec(1, 2, vec![3.0, 0.0]).unwrap();
        let imag = Grid::from_vec(1, 2, vec![4.0, 0.0]).unwrap();
        let (amp, phase) = amplitude_phase(&Spectrum::from_parts(&real, &imag).unwrap());
        assert_eq!(*amp.get(0, 0), 5.0);
        assert!((phase.get(0, 0) - 0.9272952180016122).abs() < 1e-12);
        assert_eq!(*amp.get(0, 1), 0.0);
        assert_eq!(*phase.get(0, 1), 0.0);
    }

    #[test]
    fn phase_range_is_half_open() {
        let real = Grid::from_vec(1, 1, vec![-1.0]).unwrap();
        let imag = Grid::from_vec(1, 1, vec![0.0]).unwrap();
        let (_, phase) = amplitude_phase(&Spectrum::from_parts(&real, &imag).unwrap());
        assert_eq!(*phase.get(0, 0), PI);
    }

    #[test]
    fn constant_block_dct() {
        let c = 0.37;
        let block = Grid::filled(8, 8, c);
        let out = block_dct(&block).unwrap();
        assert!((out.get(0, 0) - 8.0 * c).abs() < 1e-12);
        for (k, v) in out.as_slice().iter().enumerate().skip(1) {
            assert!(v.abs() < 1e-12, "coefficient {k} = {v}");
        }
    }

    #[test]
    fn block_dct_rejects_bad_input() {
        assert!(block_dct(&Grid::filled(2, 3, 0.0)).is_err());
        let mut g = Grid::filled(2, 2, 0.0);
        g.set(0, 1, f64::INFINITY);
        assert!(matches!(
            block_dct(&g),
            Err(FreqCacheError::NonFinite { index: 1 })
        ));
    }
}
