//! `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! errors so typos do not silently fall back to defaults.

use serde::Serialize;

use crate::error::{FreqCacheError, Result};
use crate::fusion::CacheConfig;

/// Pipeline config plus the harness-only knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunConfig {
    pub cache: CacheConfig,
    pub seed: u64,
    /// Per-patch cosine threshold of the visual-domain baseline.
    pub tau_v: f64,
    /// Per-patch amplitude-spectrum cosine threshold of the naive frequency baseline.
    pub tau_f: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cache: CacheConfig::default(),
            seed: 0,
            tau_v: 0.85,
            tau_f: 0.95,
        }
    }
}

/// Optional overrides, one per config key. Used for both the file and flags.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub patch_size: Option<usize>,
    pub tau_mig: Option<f64>,
    pub lambda: Option<f64>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub include_dc: Option<bool>,
    pub seed: Option<u64>,
    pub tau_v: Option<f64>,
    pub tau_f: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($src:ident => $($dst:ident).+) => {
                if let Some(v) = self.$src {
                    cfg.$($dst).+ = v;
                }
            };
        }
        set!(patch_size => cache.patch_size);
        set!(tau_mig => cache.tau_mig);
        set!(lambda => cache.lambda);
        set!(alpha_min => cache.budget.alpha_min);
        set!(alpha_max => cache.budget.alpha_max);
        set!(include_dc => cache.budget.include_dc);
        set!(seed => seed);
        set!(tau_v => tau_v);
        set!(tau_f => tau_f);
    }
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        FreqCacheError::InvalidParameter(format!("line {line}: bad value `{value}` for `{key}`"))
    })
}

pub fn parse_config(text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| {
            FreqCacheError::InvalidParameter(format!("line {line}: expected key = value"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "patch_size" => o.patch_size = Some(parse_value(line, key, value)?),
            "tau_mig" => o.tau_mig = Some(parse_value(line, key, value)?),
            "lambda" => o.lambda = Some(parse_value(line, key, value)?),
            "alpha_min" => o.alpha_min = Some(parse_value(line, key, value)?),
            "alpha_max" => o.alpha_max = Some(parse_value(line, key, value)?),
            "include_dc" => o.include_dc = Some(parse_value(line, key, value)?),
            "seed" => o.seed = Some(parse_value(line, key, value)?),
            "tau_v" => o.tau_v = Some(parse_value(line, key, value)?),
            "tau_f" => o.tau_f = Some(parse_value(line, key, value)?),
            other => {
                return Err(FreqCacheError::InvalidParameter(format!(
                    "line {line}: unknown key `{other}`"
                )))
            }
        }
    }
    Ok(o)
}

/// Defaults, then the file, then the flags.
pub fn resolve(file: Option<&str>, flags: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(text) = file {
        parse_config(text)?.apply(&mut cfg);
    }
    flags.apply(&mut cfg);
    cfg.cache.validate()?;
    Ok(cfg)
}
