//! Spectral entropy and the entropy-driven reuse budget.

use serde::{Deserialize, Serialize};

use crate::error::{FreqCacheError, Result};
use crate::frame::Grid;

/// Bounds of the reuse ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Whether the DC bin takes part in the power distribution.
    pub include_dc: bool,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            alpha_min: 0.08,
            alpha_max: 0.5,
            include_dc: true,
        }
    }
}

impl BudgetConfig {
    pub fn new(alpha_min: f64, alpha_max: f64) -> Result<Self> {
        let cfg = Self {
            alpha_min,
            alpha_max,
            include_dc: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha_min)
            || !(0.0..=1.0).contains(&self.alpha_max)
            || self.alpha_min > self.alpha_max
        {
            return Err(FreqCacheError::InvalidParameter(format!(
                "need 0 <= alpha_min <= alpha_max <= 1, got alpha_min={} alpha_max={}",
                self.alpha_min, self.alpha_max
            )));
        }
        Ok(())
    }
}

/// Shannon entropy (nats) of the normalized power spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReading {
    #[serde(rename = "raw")]
    pub raw_entropy: f64,
    /// `raw_entropy / ln(bin_count)`, in `[0, 1]`.
    pub normalized: f64,
    #[serde(skip)]
    pub bin_count: usize,
}

/// Entropy over every bin, DC included.
pub fn spectral_entropy(amp: &Grid<f64>) -> Result<EntropyReading> {
    spectral_entropy_with(amp, true)
}

pub fn spectral_entropy_with(amp: &Grid<f64>, include_dc: bool) -> Result<EntropyReading> {
    let skip = usize::from(!include_dc);
    let values = &amp.as_slice()[skip.min(amp.len())..];
    let bin_count = values.len();
    let total: f64 = values.iter().map(|a| a * a).sum();
    if bin_count == 0 || total <= 0.0 || !total.is_finite() {
        return Err(FreqCacheError::DegenerateSpectrum);
    }
    let mut raw = 0.0;
    for a in values {
        let p = a * a / total;
        if p > 0.0 {
            raw -= p * p.ln();
        }
    }
    let log_bins = (bin_count as f64).ln();
    // A single bin carries no uncertainty; its normalized entropy is 0.
    let normalized = if log_bins > 0.0 {
        (raw / log_bins).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(EntropyReading {
        raw_entropy: raw.clamp(0.0, log_bins),
        normalized,
        bin_count,
    })
}

/// `alpha = alpha_min + (alpha_max - alpha_min) * exp(-psi)` and `floor(alpha * n)`.
pub fn reuse_budget(psi: f64, cfg: &BudgetConfig, n_tokens: usize) -> (f64, usize) {
    let alpha = cfg.alpha_min + (cfg.alpha_max - cfg.alpha_min) * (-psi).exp();
    let k = (alpha * n_tokens as f64).floor().max(0.0) as usize;
    (alpha, k.min(n_tokens))
}
