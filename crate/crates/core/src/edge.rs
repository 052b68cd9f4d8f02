//! Per-patch high-frequency energy and the statistical refresh mask.

use crate::error::Result;
use crate::frame::{Frame, Grid, PatchGrid};
use crate::spectral::DctBasis;

/// Sensitivity used when none is configured.
pub const DEFAULT_LAMBDA: f64 = 0.25;

/// Low-frequency cutoff index `max(1, floor(P / 4))`.
pub fn cutoff(patch_size: usize) -> usize {
    (patch_size / 4).max(1)
}

/// High-pass filter: 0 in the top-left `cutoff x cutoff` corner, 1 elsewhere.
pub fn highpass_filter(patch_size: usize) -> Grid<bool> {
    let k = cutoff(patch_size);
    Grid::from_fn(patch_size, patch_size, |u, v| !(u < k && v < k))
}

/// High-frequency energy of every patch in a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMap {
    pub energy: Grid<f64>,
    pub patch_size: usize,
    pub cutoff: usize,
}

impl EnergyMap {
    pub fn get(&self, index: usize) -> f64 {
        self.energy.as_slice()[index]
    }

    pub fn values(&self) -> &[f64] {
        self.energy.as_slice()
    }
}

/// Sum of squared DCT coefficients surviving the high-pass filter, per patch.
///
/// A constant patch has exactly zero energy: its only nonzero coefficient is DC.
pub fn patch_energy(frame: &Frame, grid: &PatchGrid) -> Result<EnergyMap> {
    grid.matches(frame)?;
    let p = grid.patch_size();
    let k = cutoff(p);
    let basis = DctBasis::new(p);
    let mut block = vec![0.0; p * p];
    let mut scratch = vec![0.0; p * p];
    let mut coeffs = vec![0.0; p * p];
    let mut energy = Vec::with_capacity(grid.len());
    for i in 0..grid.rows() {
        for j in 0..grid.cols() {
            grid.extract_into(frame, i, j, &mut block);
            if block.iter().all(|&v| v == block[0]) {
                energy.push(0.0);
                continue;
            }
            basis.transform_into(&block, &mut scratch, &mut coeffs);
            energy.push(masked_energy(&coeffs, p, k));
        }
    }
    Ok(EnergyMap {
        energy: Grid::from_vec(grid.rows(), grid.cols(), energy)?,
        patch_size: p,
        cutoff: k,
    })
}

pub(crate) fn masked_energy(coeffs: &[f64], p: usize, k: usize) -> f64 {
    let mut e = 0.0;
    for u in 0..p {
        for v in 0..p {
            if u < k && v < k {
                continue;
            }
            let c = coeffs[u * p + v];
            e += c * c;
        }
    }
    e
}

/// Patches whose energy exceeds `mean + lambda * std` (population std).
#[derive(Debug, Clone, PartialEq)]
pub struct RefreshMask {
    pub mask: Grid<bool>,
    pub mean: f64,
    pub std: f64,
    pub lambda: f64,
}

impl RefreshMask {
    pub fn is_flagged(&self, index: usize) -> bool {
        self.mask.as_slice()[index]
    }

    pub fn count(&self) -> usize {
        self.mask.count_true()
    }

    pub fn threshold(&self) -> f64 {
        self.mean + self.lambda * self.std
    }
}

pub fn refresh_mask(energy: &EnergyMap, lambda: f64) -> RefreshMask {
    let (mean, std) = mean_std(energy.values());
    let mask = if std == 0.0 {
        energy.energy.map(|_| false)
    } else {
        let threshold = mean + lambda * std;
        energy.energy.map(|&e| e > threshold)
    };
    RefreshMask {
        mask,
        mean,
        std,
        lambda,
    }
}

/// Mean and population standard deviation.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_of(values: Vec<f64>, rows: usize, cols: usize) -> EnergyMap {
        EnergyMap {
            energy: Grid::from_vec(rows, cols, values).unwrap(),
            patch_size: 8,
            cutoff: 2,
        }
    }

    #[test]
    fn filter_cutoffs() {
        let h8 = highpass_filter(8);
        let zeroed: Vec<_> = (0..8)
            .flat_map(|u| (0..8).map(move |v| (u, v)))
            .filter(|&(u, v)| !*h8.get(u, v))
            .collect();
        assert_eq!(zeroed, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(highpass_filter(4).count_true(), 15);
        assert!(!*highpass_filter(4).get(0, 0));
        assert_eq!(highpass_filter(2).count_true(), 3);
        assert_eq!(cutoff(16), 4);
    }

    #[test]
    fn constant_patches_have_zero_energy() {
        let f = Frame::from_fn(
            16,
            16,
            |r, c| if (r / 8 + c / 8) % 2 == 0 { 0.1 } else { 0.7 },
        );
        let g = PatchGrid::for_frame(&f, 8).unwrap();
        let e = patch_energy(&f, &g).unwrap();
        assert!(e.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn equal_energies_flag_nothing() {
        let m = refresh_mask(&map_of(vec![3.0; 4], 2, 2), 0.25);
        assert_eq!(m.std, 0.0);
        assert_eq!(m.count(), 0);
        // Even a negative sensitivity cannot flag a flat map.
        assert_eq!(refresh_mask(&map_of(vec![3.0; 4], 2, 2), -5.0).count(), 0);
    }

    #[test]
    fn single_outlier_flagged() {
        let m = refresh_mask(&map_of(vec![0.0, 0.0, 0.0, 100.0], 2, 2), 0.25);
        assert_eq!(m.mean, 25.0);
        assert!((m.std - 43.30127018922193).abs() < 1e-12);
        assert!((m.threshold() - 35.825_317_547_305_48).abs() < 1e-12);
        assert_eq!(m.mask.as_slice(), &[false, false, false, true]);
    }

    #[test]
    fn infinite_lambda_flags_nothing() {
        let m = refresh_mask(&map_of(vec![0.0, 1.0, 2.0, 100.0], 2, 2), f64::INFINITY);
        assert_eq!(m.count(), 0);
    }
}
