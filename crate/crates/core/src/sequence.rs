//! Runs the pipeline over a whole frame sequence and aggregates metrics.

use serde::Serialize;

use crate::cache::{CacheSession, CostModel, StepReport};
use crate::error::{FreqCacheError, Result};
use crate::frame::{Frame, PatchGrid};
use crate::fusion::{CacheConfig, CacheDecision, StageTimings};
use crate::token::Tokenizer;

#[derive(Debug, Clone, Serialize)]
pub struct SequenceReport {
    pub decisions: Vec<CacheDecision>,
    #[serde(skip)]
    pub timings: Vec<StageTimings>,
    /// One per frame; entry 0 is the cold start.
    pub steps: Vec<StepReport>,
    pub n_tokens: usize,
    pub cost_model: CostModel,
    /// `sum(K_final) / (T * N)` over the `T` decided steps.
    pub mean_reuse_ratio: f64,
    /// Mean modelled latency over the decided steps.
    pub mean_latency_ms: f64,
    /// Modelled latency with every token recomputed.
    pub baseline_latency_ms: f64,
    pub speedup: f64,
}

impl SequenceReport {
    pub fn decided_steps(&self) -> usize {
        self.decisions.len()
    }
}

/// Applies decide and cache update to every consecutive frame pair.
///
/// Metrics cover the decided steps only; the cold start at frame 0 has no
/// decision and is reported but not averaged.
pub fn run_sequence(
    frames: &[Frame],
    cfg: &CacheConfig,
    tokenizer: Box<dyn Tokenizer>,
    cost: Option<CostModel>,
) -> Result<SequenceReport> {
    if frames.len() < 2 {
        return Err(FreqCacheError::SequenceTooShort {
            needed: 2,
            got: frames.len(),
        });
    }
    let grid = PatchGrid::for_frame(&frames[0], cfg.patch_size)?;
    let n = grid.len();
    let cost = cost.unwrap_or_else(|| CostModel::reference(n));
    let mut session = CacheSession::new(*cfg, tokenizer)?.with_cost_model(cost);

    let mut decisions = Vec::with_capacity(frames.len() - 1);
    let mut timings = Vec::with_capacity(frames.len() - 1);
    let mut steps = Vec::with_capacity(frames.len());
    for (t, frame) in frames.iter().enumerate() {
        frames[0]
            .ensure_same_dims(frame)
            .map_err(|e| FreqCacheError::SequenceStep {
                step: t,
                source: Box::new(e),
            })?;
        let out = session.push(frame.clone())?;
        steps.push(out.report);
        if let Some(d) = out.decision {
            decisions.push(d);
            timings.push(out.timings);
        }
    }

    let t = decisions.len() as f64;
    let reused: usize = decisions.iter().map(|d| d.k_final).sum();
    let mean_reuse_ratio = reused as f64 / (t * n as f64);
    let mean_latency_ms = steps[1..].iter().map(|s| s.latency_ms).sum::<f64>() / t;
    let baseline_latency_ms = cost.latency_ms(n);
    Ok(SequenceReport {
        decisions,
        timings,
        steps,
        n_tokens: n,
        cost_model: cost,
        mean_reuse_ratio,
        mean_latency_ms,
        baseline_latency_ms,
        speedup: baseline_latency_ms / mean_latency_ms,
    })
}
