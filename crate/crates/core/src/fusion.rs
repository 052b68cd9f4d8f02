//! Joins the three frequency analyses and selects the tokens to reuse.

use std::cmp::Ordering;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::budget::{reuse_budget, spectral_entropy_with, BudgetConfig, EntropyReading};
use crate::edge::{patch_energy, refresh_mask, EnergyMap, RefreshMask, DEFAULT_LAMBDA};
use crate::error::{FreqCacheError, Result};
use crate::frame::{Frame, Grid, PatchGrid};
use crate::migration::{
    alignment_mask, migration_gate, phase_correlation_spectra, sim_freq, Displacement, Gate,
};
use crate::spectral::{dft2, Spectrum};

/// Pipeline hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub tau_mig: f64,
    pub lambda: f64,
    pub budget: BudgetConfig,
    pub patch_size: usize,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            tau_mig: 0.12,
            lambda: DEFAULT_LAMBDA,
            budget: BudgetConfig::default(),
            patch_size: 16,
        }
    }
}

impl CacheConfig {
    pub fn with_patch_size(patch_size: usize) -> Self {
        Self {
            patch_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau_mig) {
            return Err(FreqCacheError::InvalidParameter(format!(
                "tau_mig must lie in [0, 1], got {}",
                self.tau_mig
            )));
        }
        if self.lambda.is_nan() {
            return Err(FreqCacheError::InvalidParameter("lambda is NaN".into()));
        }
        if self.patch_size < 2 {
            return Err(FreqCacheError::InvalidParameter(format!(
                "patch size must be at least 2, got {}",
                self.patch_size
            )));
        }
        self.budget.validate()
    }
}

/// Everything decided for one frame pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheDecision {
    pub step: usize,
    pub flushed: bool,
    pub sim_freq: f64,
    pub displacement: Displacement,
    pub entropy: EntropyReading,
    pub alpha: f64,
    pub k_reuse: usize,
    pub k_candidate: usize,
    pub k_final: usize,
    /// Reused patch indices in ascending-energy order.
    pub reuse_set: Vec<usize>,
    /// Recomputed patch indices, ascending.
    pub recompute_set: Vec<usize>,
    /// Patches flagged by the edge refresh mask, ascending.
    pub refresh_set: Vec<usize>,
    pub grid: PatchGrid,
    /// Why a step was flushed for a reason other than low similarity.
    pub diagnostic: Option<String>,
}

impl CacheDecision {
    pub fn with_step(mut self, step: usize) -> Self {
        self.step = step;
        self
    }

    pub fn n_tokens(&self) -> usize {
        self.grid.len()
    }

    pub fn reuse_ratio(&self) -> f64 {
        self.k_final as f64 / self.n_tokens() as f64
    }

    /// Checks partition, budget and safety invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |message: String| {
            Err(FreqCacheError::InvariantViolation {
                step: self.step,
                message,
            })
        };
        let n = self.n_tokens();
        let mut seen = vec![0u8; n];
        for &p in self.reuse_set.iter().chain(&self.recompute_set) {
            if p >= n {
                return fail(format!("patch index {p} out of range {n}"));
            }
            seen[p] += 1;
        }
        if seen.iter().any(|&c| c != 1) {
            return fail("reuse and recompute sets do not partition the patches".into());
        }
        if self.k_final != self.reuse_set.len()
            || self.k_final != self.k_reuse.min(self.k_candidate)
        {
            return fail(format!(
                "k_final={} reuse_set={} k_reuse={} k_candidate={}",
                self.k_final,
                self.reuse_set.len(),
                self.k_reuse,
                self.k_candidate
            ));
        }
        if self.flushed && self.k_final != 0 {
            return fail("flushed step reuses tokens".into());
        }
        let align = alignment_mask(&self.displacement, &self.grid);
        for &p in &self.reuse_set {
            let (i, j) = self.grid.position(p);
            if !align.is_aligned(i, j) {
                return fail(format!("reused patch {p} lies outside the aligned region"));
            }
            if self.refresh_set.binary_search(&p).is_ok() {
                return fail(format!("reused patch {p} is flagged for refresh"));
            }
        }
        Ok(())
    }
}

/// Wall-clock microseconds spent per stage of [`decide_timed`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub spectra: u64,
    pub migration: u64,
    pub edge: u64,
    pub budget: u64,
    pub select: u64,
    pub total: u64,
}

pub fn decide(prev: &Frame, curr: &Frame, cfg: &CacheConfig) -> Result<CacheDecision> {
    decide_timed(prev, curr, cfg).map(|(d, _)| d)
}

/// Migration results before they are folded into a decision.
struct MigrationOutcome {
    sim: Result<f64>,
    displacement: Result<Displacement>,
}

/// Runs the migration, edge and budget analyses concurrently, then selects.
pub fn decide_timed(
    prev: &Frame,
    curr: &Frame,
    cfg: &CacheConfig,
) -> Result<(CacheDecision, StageTimings)> {
    cfg.validate()?;
    prev.ensure_same_dims(curr)?;
    let grid = PatchGrid::for_frame(curr, cfg.patch_size)?;
    let start = Instant::now();
    let mut timings = StageTimings::default();

    let (edge, spectral) = rayon::join(
        || {
            let t = Instant::now();
            let energy = patch_energy(curr, &grid);
            let out = energy.map(|e| {
                let mask = refresh_mask(&e, cfg.lambda);
                (e, mask)
            });
            (out, micros(t))
        },
        || {
            let t = Instant::now();
            let ((sp, amp_p), (sc, amp_c)) = rayon::join(
                || {
                    let s = dft2(prev);
                    let a = s.amplitude();
                    (s, a)
                },
                || {
                    let s = dft2(curr);
                    let a = s.amplitude();
                    (s, a)
                },
            );
            let spectra_us = micros(t);
            let (migration, budget) = rayon::join(
                || {
                    let t = Instant::now();
                    (migration_stage(&sp, &sc, &amp_p, &amp_c, &grid), micros(t))
                },
                || {
                    let t = Instant::now();
                    (budget_stage(&amp_c, &cfg.budget, grid.len()), micros(t))
                },
            );
            (spectra_us, migration, budget)
        },
    );
    let ((energy_out, edge_us), (spectra_us, (migration, migration_us), (budget, budget_us))) =
        (edge, spectral);
    timings.spectra = spectra_us;
    timings.edge = edge_us;
    timings.migration = migration_us;
    timings.budget = budget_us;
    let (energy, fresh) = energy_out?;

    let t = Instant::now();
    let decision = synchronize(cfg, grid, &energy, &fresh, migration, budget);
    timings.select = micros(t);
    timings.total = micros(start);
    Ok((decision, timings))
}

fn micros(t: Instant) -> u64 {
    t.elapsed().as_micros() as u64
}

fn migration_stage(
    prev: &Spectrum,
    curr: &Spectrum,
    amp_prev: &Grid<f64>,
    amp_curr: &Grid<f64>,
    grid: &PatchGrid,
) -> MigrationOutcome {
    let sim = sim_freq(amp_prev, amp_curr);
    let displacement = phase_correlation_spectra(prev, curr)
        .map(|(di, dj)| Displacement::from_pixels(di, dj, grid.patch_size()));
    MigrationOutcome { sim, displacement }
}

fn budget_stage(
    amp_curr: &Grid<f64>,
    cfg: &BudgetConfig,
    n: usize,
) -> (Result<EntropyReading>, f64, usize) {
    let entropy = spectral_entropy_with(amp_curr, cfg.include_dc);
    let psi = entropy.as_ref().map(|e| e.normalized).unwrap_or(0.0);
    let (alpha, k) = reuse_budget(psi, cfg, n);
    (entropy, alpha, k)
}

pub(crate) fn energy_order(energy: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |a, b| {
        energy[*a]
            .partial_cmp(&energy[*b])
            .expect("finite energies")
            .then(a.cmp(b))
    }
}

/// The `k` lowest-energy candidates, ordered by energy then patch index.
pub fn select_ascending(candidates: &[usize], energy: &[f64], k: usize) -> Vec<usize> {
    let mut picked = candidates.to_vec();
    let order = energy_order(energy);
    if k < picked.len() {
        if k == 0 {
            return Vec::new();
        }
        picked.select_nth_unstable_by(k - 1, &order);
        picked.truncate(k);
    }
    picked.sort_unstable_by(order);
    picked
}

fn synchronize(
    cfg: &CacheConfig,
    grid: PatchGrid,
    energy: &EnergyMap,
    fresh: &RefreshMask,
    migration: MigrationOutcome,
    budget: (Result<EntropyReading>, f64, usize),
) -> CacheDecision {
    let n = grid.len();
    let (entropy, alpha, k_reuse) = budget;
    let mut diagnostics = Vec::new();
    let sim = migration.sim.unwrap_or_else(|e| {
        diagnostics.push(format!("similarity: {e}"));
        f64::NAN
    });
    let displacement = migration.displacement.unwrap_or_else(|e| {
        diagnostics.push(format!("displacement: {e}"));
        Displacement::default()
    });
    let entropy = entropy.unwrap_or_else(|e| {
        diagnostics.push(format!("entropy: {e}"));
        EntropyReading {
            raw_entropy: 0.0,
            normalized: 0.0,
            bin_count: 0,
        }
    });
    let flushed = !diagnostics.is_empty() || migration_gate(sim, cfg.tau_mig) == Gate::Flush;
    let refresh_set: Vec<usize> = (0..n).filter(|&p| fresh.is_flagged(p)).collect();

    let (k_candidate, reuse_set) = if flushed {
        (0, Vec::new())
    } else {
        let align = alignment_mask(&displacement, &grid);
        let candidates: Vec<usize> = (0..n)
            .filter(|&p| {
                let (i, j) = grid.position(p);
                align.is_aligned(i, j) && !fresh.is_flagged(p)
            })
            .collect();
        let chosen = select_ascending(&candidates, energy.values(), k_reuse);
        (candidates.len(), chosen)
    };
    let mut reused = vec![false; n];
    for &p in &reuse_set {
        reused[p] = true;
    }
    let recompute_set = (0..n).filter(|&p| !reused[p]).collect();

    CacheDecision {
        step: 0,
        flushed,
        // A degenerate similarity is reported as 0 so records stay valid JSON.
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
    }
}

/// Grid of per-patch labels for visualizing a decision.
pub fn decision_labels(decision: &CacheDecision) -> Grid<PatchLabel> {
    patch_labels(
        &decision.grid,
        decision.flushed,
        &decision.reuse_set,
        &decision.refresh_set,
    )
}

/// Labels from the raw sets. A flushed step is recomputed everywhere.
pub fn patch_labels(
    grid: &PatchGrid,
    flushed: bool,
    reuse_set: &[usize],
    refresh_set: &[usize],
) -> Grid<PatchLabel> {
    let mut labels = Grid::filled(grid.rows(), grid.cols(), PatchLabel::Recomputed);
    if flushed {
        return labels;
    }
    for &p in refresh_set {
        let (i, j) = grid.position(p);
        labels.set(i, j, PatchLabel::EdgeRefresh);
    }
    for &p in reuse_set {
        let (i, j) = grid.position(p);
        labels.set(i, j, PatchLabel::Reused);
    }
    labels
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchLabel {
    Reused,
    EdgeRefresh,
    Recomputed,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn broadband(h: usize, w: usize, seed: u64) -> Frame {
        // Small LCG so the test has no RNG dependency.
        let mut s = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        Frame::from_fn(h, w, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 40) as f64 / (1u64 << 24) as f64
        })
    }

    fn cfg8() -> CacheConfig {
        CacheConfig::with_patch_size(8)
    }

    #[test]
    fn shifted_frame_keeps_cache_and_recovers_shift() {
        let prev = broadband(32, 32, 1);
        let curr = prev.cyclic_shift(8, -5);
        let d = decide(&prev, &curr, &cfg8()).unwrap();
        assert!(!d.flushed);
        assert!((d.sim_freq - 1.0).abs() < 1e-9);
        assert_eq!((d.displacement.di, d.displacement.dj), (8, -5));
        assert_eq!(
            (d.displacement.di_patches, d.displacement.dj_patches),
            (1, -1)
        );
        assert_eq!(d.k_final, d.k_reuse.min(d.k_candidate));
        d.check_invariants().unwrap();
        // Row 0 and the last column have no source under (1, -1).
        for &p in &d.reuse_set {
            let (i, j) = d.grid.position(p);
            assert!(i >= 1 && j <= 2, "patch {p}");
        }
    }

    #[test]
    fn tau_one_flushes_any_change() {
        let prev = broadband(32, 32, 2);
        let curr = broadband(32, 32, 3);
        let cfg = CacheConfig {
            tau_mig: 1.0,
            ..cfg8()
        };
        let d = decide(&prev, &curr, &cfg).unwrap();
        assert!(d.flushed);
        assert_eq!((d.k_candidate, d.k_final), (0, 0));
        assert!(d.reuse_set.is_empty());
        assert_eq!(d.recompute_set, (0..16).collect::<Vec<_>>());
        d.check_invariants().unwrap();
    }

    #[test]
    fn black_frame_degrades_to_flush() {
        let black = Frame::zeros(16, 16);
        let d = decide(&black, &black, &cfg8()).unwrap();
        assert!(d.flushed);
        assert_eq!(d.sim_freq, 0.0);
        assert_eq!(
            d.diagnostic.as_deref(),
            Some("similarity: degenerate spectrum; displacement: no texture; displacement undefined; entropy: degenerate spectrum")
        );
        d.check_invariants().unwrap();
    }

    #[test]
    fn identical_frames_fill_the_budget() {
        let f = broadband(32, 32, 4);
        let cfg = CacheConfig {
            lambda: 1e9,
            budget: BudgetConfig {
                alpha_min: 0.0,
                alpha_max: 1.0,
                include_dc: true,
            },
            ..cfg8()
        };
        let d = decide(&f, &f, &cfg).unwrap();
        assert_eq!(d.displacement, Displacement::default());
        assert_eq!(d.k_candidate, 16);
        assert_eq!(d.k_final, d.k_reuse);
        let expected_alpha = (-d.entropy.normalized).exp();
        assert!((d.alpha - expected_alpha).abs() < 1e-15);
    }

    #[test]
    fn selection_breaks_ties_by_index() {
        let energy = [2.0, 1.0, 1.0, 0.5, 1.0];
        assert_eq!(
            select_ascending(&[0, 1, 2, 3, 4], &energy, 3),
            vec![3, 1, 2]
        );
        assert_eq!(select_ascending(&[4, 2, 0], &energy, 2), vec![2, 4]);
        assert_eq!(
            select_ascending(&[4, 2, 0], &energy, 0),
            Vec::<usize>::new()
        );
        assert_eq!(select_ascending(&[0, 4], &energy, 9), vec![4, 0]);
    }

    #[test]
    fn timed_matches_untimed() {
        let prev = broadband(32, 32, 5);
        let curr = prev.cyclic_shift(3, 3);
        let (a, t) = decide_timed(&prev, &curr, &cfg8()).unwrap();
        assert_eq!(a, decide(&prev, &curr, &cfg8()).unwrap());
        assert!(t.total >= t.select);
    }

    #[test]
    fn labels_follow_sets() {
        let prev = broadband(32, 32, 6);
        let d = decide(&prev, &prev, &cfg8()).unwrap();
        let labels = decision_labels(&d);
        let reused = labels
            .as_slice()
            .iter()
            .filter(|l| **l == PatchLabel::Reused)
            .count();
        assert_eq!(reused, d.k_final);
        for &p in &d.refresh_set {
            assert_eq!(labels.as_slice()[p], PatchLabel::EdgeRefresh);
        }
    }

    #[test]
    fn invariant_checker_catches_violations() {
        let f = broadband(32, 32, 7);
        let good = decide(&f, &f, &cfg8()).unwrap();
        let mut bad = good.clone();
        bad.recompute_set.pop();
        assert!(bad.check_invariants().is_err());
        let mut bad = good.clone();
        if let Some(&p) = good.reuse_set.first() {
            bad.refresh_set = vec![p];
            assert!(matches!(
                bad.check_invariants(),
                Err(FreqCacheError::InvariantViolation { .. })
            ));
        }
    }

    #[test]
    fn rejects_mismatched_frames() {
        let a = Frame::zeros(16, 16);
        let b = Frame::zeros(16, 24);
        assert!(matches!(
            decide(&a, &b, &cfg8()),
            Err(FreqCacheError::DimensionMismatch { .. })
        ));
        assert!(decide(&a, &Frame::zeros(16, 16), &CacheConfig::with_patch_size(5)).is_err());
    }
}
