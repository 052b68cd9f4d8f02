//! Direct-definition implementations used as test oracles.
//!
//! Everything here follows the textbook sums with no fast paths: an O((HW)^2)
//! DFT, a quadruple-loop DCT-II and a full sort for token selection. These are
//! far too slow for real use and exist so the production path can be checked
//! against an independent route.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::budget::EntropyReading;
use crate::error::{FreqCacheError, Result};
use crate::frame::{Frame, Grid, PatchGrid};
use crate::fusion::{CacheConfig, CacheDecision};
use crate::migration::{locate_peak, Displacement, CROSS_POWER_EPS};

const TEXTURE_FLOOR: f64 = 1e-20;

fn naive_dft(data: &[Complex64], rows: usize, cols: usize, sign: f64) -> Vec<Complex64> {
    let tw_r: Vec<Complex64> = (0..rows)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / rows as f64))
        .collect();
    let tw_c: Vec<Complex64> = (0..cols)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / cols as f64))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    for u in 0..rows {
        for v in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for x in 0..rows {
                let wr = tw_r[(u * x) % rows];
                for y in 0..cols {
                    acc += data[x * cols + y] * wr * tw_c[(v * y) % cols];
                }
            }
            out[u * cols + v] = acc;
        }
    }
    out
}

/// Forward 2D DFT by direct double summation.
pub fn naive_dft2(frame: &Frame) -> Vec<Complex64> {
    let data: Vec<Complex64> = frame
        .data()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    naive_dft(&data, frame.height(), frame.width(), -1.0)
}

/// Inverse 2D DFT by direct summation, with `1/(U*V)` normalization.
pub fn naive_idft2(bins: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let scale = 1.0 / (rows * cols) as f64;
    naive_dft(bins, rows, cols, 1.0)
        .into_iter()
        .map(|z| z * scale)
        .collect()
}

/// Orthonormal 2D DCT-II of a `P x P` block by direct quadruple summation.
pub fn naive_dct2(block: &[f64], p: usize) -> Vec<f64> {
    let n = p as f64;
    let c = |k: usize| {
        if k == 0 {
            (1.0 / n).sqrt()
        } else {
            (2.0 / n).sqrt()
        }
    };
    let mut out = vec![0.0; p * p];
    for u in 0..p {
        for v in 0..p {
            let mut acc = 0.0;
            for x in 0..p {
                for y in 0..p {
                    acc += block[x * p + y]
                        * (PI * (2 * x + 1) as f64 * u as f64 / (2.0 * n)).cos()
                        * (PI * (2 * y + 1) as f64 * v as f64 / (2.0 * n)).cos();
                }
            }
            out[u * p + v] = c(u) * c(v) * acc;
        }
    }
    out
}

/// High-pass energy of one patch straight from the definition.
pub fn naive_patch_energy(block: &[f64], p: usize) -> f64 {
    if block.iter().all(|&v| v == block[0]) {
        return 0.0;
    }
    let k = (p / 4).max(1);
    let coeffs = naive_dct2(block, p);
    let mut e = 0.0;
    for u in 0..p {
        for v in 0..p {
            let h = if u < k && v < k { 0.0 } else { 1.0 };
            e += (h * coeffs[u * p + v]).powi(2);
        }
    }
    e
}

fn cosine_or_none(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        Some((dot / (na * nb)).clamp(-1.0, 1.0))
    }
}

/// Token-cache decision computed from the definitions alone.
pub fn decide_reference(prev: &Frame, curr: &Frame, cfg: &CacheConfig) -> Result<CacheDecision> {
    cfg.validate()?;
    prev.ensure_same_dims(curr)?;
    let grid = PatchGrid::for_frame(curr, cfg.patch_size)?;
    let (h, w) = (curr.height(), curr.width());
    let n = grid.len();
    let p = grid.patch_size();

    let sp = naive_dft2(prev);
    let sc = naive_dft2(curr);
    let amp_p: Vec<f64> = sp.iter().map(|z| z.norm()).collect();
    let amp_c: Vec<f64> = sc.iter().map(|z| z.norm()).collect();

    let mut diagnostics = Vec::new();

    // Module I
    let sim = match cosine_or_none(&amp_p, &amp_c) {
        Some(s) => s,
        None => {
            diagnostics.push(format!(
                "similarity: {}",
                FreqCacheError::DegenerateSpectrum
            ));
            f64::NAN
        }
    };
    let textured = |bins: &[Complex64]| {
        let total: f64 = bins.iter().map(|b| b.norm_sqr()).sum();
        let ac: f64 = bins[1..].iter().map(|b| b.norm_sqr()).sum();
        total > 0.0 && ac > TEXTURE_FLOOR * total
    };
    let displacement = if textured(&sp) && textured(&sc) {
        let cross: Vec<Complex64> = sp
            .iter()
            .zip(&sc)
            .map(|(a, b)| {
                let z = a * b.conj();
                z / (z.norm() + CROSS_POWER_EPS)
            })
            .collect();
        let response: Vec<f64> = naive_idft2(&cross, h, w)
            .into_iter()
            .map(|z| z.re)
            .collect();
        let (di, dj) = locate_peak(&response, h, w);
        Displacement::from_pixels(di, dj, p)
    } else {
        diagnostics.push(format!("displacement: {}", FreqCacheError::NoTexture));
        Displacement::default()
    };

    // Module II
    let energy: Vec<f64> = (0..n)
        .map(|idx| {
            let (i, j) = grid.position(idx);
            naive_patch_energy(&grid.extract(curr, i, j), p)
        })
        .collect();
    let mean = energy.iter().sum::<f64>() / n as f64;
    let std = (energy.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let fresh: Vec<bool> = energy
        .iter()
        .map(|&e| std != 0.0 && e > mean + cfg.lambda * std)
        .collect();

    // Module III
    let skip = usize::from(!cfg.budget.include_dc);
    let power: Vec<f64> = amp_c[skip..].iter().map(|a| a * a).collect();
    let total: f64 = power.iter().sum();
    let entropy = if total > 0.0 && total.is_finite() {
        let raw: f64 = power
            .iter()
            .map(|&q| q / total)
            .filter(|&q| q > 0.0)
            .map(|q| -q * q.ln())
            .sum();
        let log_b = (power.len() as f64).ln();
        EntropyReading {
            raw_entropy: raw.clamp(0.0, log_b),
            normalized: if log_b > 0.0 {
                (raw / log_b).clamp(0.0, 1.0)
            } else {
                0.0
            },
            bin_count: power.len(),
        }
    } else {
        diagnostics.push(format!("entropy: {}", FreqCacheError::DegenerateSpectrum));
        EntropyReading {
            raw_entropy: 0.0,
            normalized: 0.0,
            bin_count: 0,
        }
    };
    let b = &cfg.budget;
    let alpha = b.alpha_min + (b.alpha_max - b.alpha_min) * (-entropy.normalized).exp();
    let k_reuse = ((alpha * n as f64).floor().max(0.0) as usize).min(n);

    // Synchronize and select
    let flushed = !diagnostics.is_empty() || sim < cfg.tau_mig;
    let (k_candidate, reuse_set) = if flushed {
        (0, Vec::new())
    } else {
        let (rows, cols) = (grid.rows() as i64, grid.cols() as i64);
        let mut candidates: Vec<usize> = (0..n)
            .filter(|&idx| {
                let (i, j) = grid.position(idx);
                let si = i as i64 - displacement.di_patches;
                let sj = j as i64 - displacement.dj_patches;
                si >= 0 && si < rows && sj >= 0 && sj < cols && !fresh[idx]
            })
            .collect();
        let count = candidates.len();
        // Stable sort keeps index order among equal energies.
        candidates.sort_by(|a, b| energy[*a].partial_cmp(&energy[*b]).unwrap());
        candidates.truncate(k_reuse);
        (count, candidates)
    };
    let recompute_set = (0..n).filter(|idx| !reuse_set.contains(idx)).collect();
    let refresh_set = (0..n).filter(|&idx| fresh[idx]).collect();

    Ok(CacheDecision {
        step: 0,
        flushed,
        sim_freq: if sim.is_nan() { 0.0 } else { sim },
        displacement,
        entropy,
        alpha,
        k_reuse,
        k_candidate,
        k_final: reuse_set.len(),
        reuse_set,
        recompute_set,
        refresh_set,
        grid,
        diagnostic: if diagnostics.is_empty() {
            None
        } else {
            Some(diagnostics.join("; "))
        },
    })
}

/// Compares two decisions: discrete fields exactly, real fields within `tol`.
pub fn compare_decisions(
    a: &CacheDecision,
    b: &CacheDecision,
    tol: f64,
) -> std::result::Result<(), String> {
    macro_rules! exact {
        ($($field:ident).+) => {
            if a.$($field).+ != b.$($field).+ {
                return Err(format!(
                    "{}: {:?} != {:?}",
                    stringify!($($field).+),
                    a.$($field).+,
                    b.$($field).+
                ));
            }
        };
    }
    macro_rules! close {
        ($($field:ident).+) => {
            if (a.$($field).+ - b.$($field).+).abs() > tol {
                return Err(format!(
                    "{}: {} vs {} exceeds {tol:e}",
                    stringify!($($field).+),
                    a.$($field).+,
                    b.$($field).+
                ));
            }
        };
    }
    exact!(step);
    exact!(flushed);
    close!(sim_freq);
    exact!(displacement);
    close!(entropy.raw_entropy);
    close!(entropy.normalized);
    exact!(entropy.bin_count);
    close!(alpha);
    exact!(k_reuse);
    exact!(k_candidate);
    exact!(k_final);
    exact!(reuse_set);
    exact!(recompute_set);
    exact!(refresh_set);
    exact!(grid);
    exact!(diagnostic);
    Ok(())
}

/// Expands a flat grid to `Grid` form, for callers that want the oracle DFT
/// in the same shape as [`crate::spectral::Spectrum::amplitude`].
pub fn naive_amplitude(frame: &Frame) -> Grid<f64> {
    let bins = naive_dft2(frame);
    Grid::from_vec(
        frame.height(),
        frame.width(),
        bins.iter().map(|z| z.norm()).collect(),
    )
    .expect("shape preserved")
}
