//! Scene-change gating, displacement recovery and the alignment mask.

use serde::{Deserialize, Serialize};

use crate::error::{FreqCacheError, Result};
use crate::frame::{Frame, Grid, PatchGrid};
use crate::spectral::{dft2, idft2_complex, Spectrum};
use crate::token::{cosine, Tokenizer};
use rustfft::num_complex::Complex64;

/// Added to the cross-power magnitude so dead bins do not divide by zero.
pub const CROSS_POWER_EPS: f64 = 1e-12;

/// Fraction of spectral power that must lie outside DC for a frame to count
/// as textured.
const TEXTURE_FLOOR: f64 = 1e-20;

/// Inter-frame translation such that `curr(r, c) ~ prev(r - di, c - dj)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Displacement {
    pub di: i64,
    pub dj: i64,
    #[serde(rename = "di_p")]
    pub di_patches: i64,
    #[serde(rename = "dj_p")]
    pub dj_patches: i64,
}

impl Displacement {
    pub fn from_pixels(di: i64, dj: i64, patch_size: usize) -> Self {
        Self {
            di,
            dj,
            di_patches: quantize(di, patch_size),
            dj_patches: quantize(dj, patch_size),
        }
    }
}

/// Rounds `pixels / patch` to the nearest integer, halves toward zero.
pub fn quantize(pixels: i64, patch: usize) -> i64 {
    let p = patch as i64;
    let a = pixels.abs();
    let (q, r) = (a / p, a % p);
    let q = if 2 * r > p { q + 1 } else { q };
    q * pixels.signum()
}

/// Patch-level mask of positions whose displaced source lies inside the
/// previous frame's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMask(pub Grid<bool>);

impl AlignmentMask {
    pub fn is_aligned(&self, i: usize, j: usize) -> bool {
        *self.0.get(i, j)
    }

    pub fn count(&self) -> usize {
        self.0.count_true()
    }
}

/// Mean same-position embedding cosine over all patches.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialSimilarity {
    pub value: f64,
    /// Patch indices where an embedding had zero norm; each contributed 0.
    pub zero_norm_positions: Vec<usize>,
}

/// Visual-domain baseline: mean cosine between same-position patch embeddings.
pub fn sim_spatial(
    prev: &Frame,
    curr: &Frame,
    grid: &PatchGrid,
    tokenizer: &dyn Tokenizer,
) -> Result<SpatialSimilarity> {
    prev.ensure_same_dims(curr)?;
    grid.matches(prev)?;
    let p = grid.patch_size();
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p * p];
    let mut total = 0.0;
    let mut zero_norm_positions = Vec::new();
    for i in 0..grid.rows() {
        for j in 0..grid.cols() {
            grid.extract_into(prev, i, j, &mut a);
            grid.extract_into(curr, i, j, &mut b);
            match cosine(&tokenizer.embed(&a, p), &tokenizer.embed(&b, p)) {
                Some(c) => total += c,
                None => zero_norm_positions.push(grid.index(i, j)),
            }
        }
    }
    Ok(SpatialSimilarity {
        value: total / grid.len() as f64,
        zero_norm_positions,
    })
}

/// Cosine similarity of two amplitude spectra flattened to vectors.
pub fn sim_freq(amp_prev: &Grid<f64>, amp_curr: &Grid<f64>) -> Result<f64> {
    if !amp_prev.same_shape(amp_curr) {
        return Err(FreqCacheError::DimensionMismatch {
            expected_rows: amp_prev.rows(),
            expected_cols: amp_prev.cols(),
            rows: amp_curr.rows(),
            cols: amp_curr.cols(),
        });
    }
    cosine(amp_prev.as_slice(), amp_curr.as_slice()).ok_or(FreqCacheError::DegenerateSpectrum)
}

/// Displacement of `curr` relative to `prev` via phase correlation.
pub fn phase_correlation(prev: &Frame, curr: &Frame) -> Result<(i64, i64)> {
    prev.ensure_same_dims(curr)?;
    phase_correlation_spectra(&dft2(prev), &dft2(curr))
}

pub(crate) fn phase_correlation_spectra(prev: &Spectrum, curr: &Spectrum) -> Result<(i64, i64)> {
    if !is_textured(prev.bins()) || !is_textured(curr.bins()) {
        return Err(FreqCacheError::NoTexture);
    }
    let bins = cross_power(prev.bins(), curr.bins());
    let cross = Spectrum::from_bins(prev.height(), prev.width(), bins)?;
    let response: Vec<f64> = idft2_complex(&cross).into_iter().map(|z| z.re).collect();
    Ok(locate_peak(&response, prev.height(), prev.width()))
}

/// `F(prev) * conj(F(curr)) / (|F(prev) * conj(F(curr))| + eps)`, elementwise.
pub(crate) fn cross_power(prev: &[Complex64], curr: &[Complex64]) -> Vec<Complex64> {
    prev.iter()
        .zip(curr)
        .map(|(a, b)| {
            let z = a * b.conj();
            z / (z.norm_sqr().sqrt() + CROSS_POWER_EPS)
        })
        .collect()
}

pub(crate) fn is_textured(bins: &[Complex64]) -> bool {
    let total: f64 = bins.iter().map(|b| b.norm_sqr()).sum();
    let ac = total - bins[0].norm_sqr();
    total > 0.0 && ac > TEXTURE_FLOOR * total
}

/// Finds the correlation peak and converts it to a canonical displacement.
///
/// The response of the cross-power spectrum above peaks at `-d`, so the peak
/// index is negated before canonicalizing to `[-dim/2, dim/2)`. Exact ties go
/// to the smallest `|di| + |dj|`, then the earliest row-major peak index.
pub(crate) fn locate_peak(response: &[f64], rows: usize, cols: usize) -> (i64, i64) {
    let mut best: Option<(f64, u64, usize)> = None;
    for (idx, &value) in response.iter().enumerate() {
        let (di, dj) = peak_to_displacement(idx, rows, cols);
        let l1 = di.unsigned_abs() + dj.unsigned_abs();
        let better = match best {
            None => true,
            Some((bv, bl1, _)) => value > bv || (value == bv && l1 < bl1),
        };
        if better {
            best = Some((value, l1, idx));
        }
    }
    let (_, _, idx) = best.expect("non-empty response");
    peak_to_displacement(idx, rows, cols)
}

fn peak_to_displacement(idx: usize, rows: usize, cols: usize) -> (i64, i64) {
    let (pr, pc) = (idx / cols, idx % cols);
    (
        canonical((rows - pr) % rows, rows),
        canonical((cols - pc) % cols, cols),
    )
}

/// Maps a cyclic index `p` in `[0, dim)` to `p - dim` when `p >= dim / 2`.
pub fn canonical(p: usize, dim: usize) -> i64 {
    if 2 * p >= dim && dim > 1 {
        p as i64 - dim as i64
    } else {
        p as i64
    }
}

/// Marks patches whose source `(i - di_p, j - dj_p)` exists in the patch grid.
pub fn alignment_mask(disp: &Displacement, grid: &PatchGrid) -> AlignmentMask {
    let (rows, cols) = (grid.rows() as i64, grid.cols() as i64);
    AlignmentMask(Grid::from_fn(grid.rows(), grid.cols(), |i, j| {
        let si = i as i64 - disp.di_patches;
        let sj = j as i64 - disp.dj_patches;
        (0..rows).contains(&si) && (0..cols).contains(&sj)
    }))
}

/// Outcome of the scene-change test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Flush,
    Proceed,
}

/// Flush iff `sim < tau_mig`.
pub fn migration_gate(sim: f64, tau_mig: f64) -> Gate {
    if sim < tau_mig {
        Gate::Flush
    } else {
        Gate::Proceed
    }
}
