//! Wall-clock timing of a full `decide` call.

use std::time::Instant;

use serde::Serialize;

use crate::error::{FreqCacheError, Result};
use crate::fusion::{decide, CacheConfig};
use crate::harness::scene::{generate_scene, SceneKind, SceneSpec};
use crate::harness::stats::{median_sorted, percentile_sorted};

pub const MIN_WARMUP: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSpec {
    pub height: usize,
    pub width: usize,
    pub iterations: usize,
    pub warmup: usize,
    pub seed: u64,
    /// Run inside a dedicated rayon pool of this size.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub height: usize,
    pub width: usize,
    pub patch_size: usize,
    pub iterations: usize,
    pub warmup: usize,
    pub threads: Option<usize>,
    pub median_us: f64,
    pub p95_us: u64,
    pub min_us: u64,
    pub max_us: u64,
}

impl BenchReport {
    pub fn median_ms(&self) -> f64 {
        self.median_us / 1000.0
    }
}

/// Times `decide` on a pair of shifted broadband frames. Warmup runs are
/// discarded and never fewer than [`MIN_WARMUP`].
pub fn bench(cfg: &CacheConfig, spec: &BenchSpec) -> Result<BenchReport> {
    if spec.iterations == 0 {
        return Err(FreqCacheError::InvalidParameter(
            "bench needs at least one iteration".into(),
        ));
    }
    let mut scene = SceneSpec::new(SceneKind::Translate, spec.height, spec.width, 2, spec.seed);
    scene.patch_size = cfg.patch_size;
    let frames = generate_scene(&scene)?.frames;
    let warmup = spec.warmup.max(MIN_WARMUP);
    let run = || -> Result<Vec<u64>> {
        for _ in 0..warmup {
            decide(&frames[0], &frames[1], cfg)?;
        }
        let mut samples = Vec::with_capacity(spec.iterations);
        for _ in 0..spec.iterations {
            let start = Instant::now();
            let d = decide(&frames[0], &frames[1], cfg)?;
            samples.push(start.elapsed().as_micros() as u64);
            std::hint::black_box(d);
        }
        Ok(samples)
    };
    let mut samples = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| FreqCacheError::InvalidParameter(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    samples.sort_unstable();
    Ok(BenchReport {
        height: spec.height,
        width: spec.width,
        patch_size: cfg.patch_size,
        iterations: spec.iterations,
        warmup,
        threads: spec.threads,
        median_us: median_sorted(&samples),
        p95_us: percentile_sorted(&samples, 0.95),
        min_us: samples[0],
        max_us: samples[samples.len() - 1],
    })
}
