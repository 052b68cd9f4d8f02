//! Per-patch token store and the streaming session that drives it.

use serde::Serialize;

use crate::error::{FreqCacheError, Result};
use crate::frame::{Frame, PatchGrid};
use crate::fusion::{decide_timed, CacheConfig, CacheDecision, StageTimings};
use crate::token::Tokenizer;

#[derive(Debug, Clone, PartialEq)]
pub struct TokenSlot {
    pub token: Vec<f64>,
    /// Steps since this slot was last recomputed.
    pub age: u32,
}

/// Affine latency model: `base_ms + per_token_ms * recomputed_tokens`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostModel {
    pub base_ms: f64,
    pub per_token_ms: f64,
}

impl CostModel {
    /// Fits the two constants so that full recomputation costs `full_ms` and
    /// reusing `reuse_ratio` of the tokens costs `reused_ms`.
    pub fn calibrated(n_tokens: usize, full_ms: f64, reuse_ratio: f64, reused_ms: f64) -> Self {
        let per_token_ms = (full_ms - reused_ms) / (reuse_ratio * n_tokens as f64);
        Self {
            base_ms: full_ms - per_token_ms * n_tokens as f64,
            per_token_ms,
        }
    }

    /// Calibrated to 637 ms with no reuse and 401 ms at 53.5% reuse.
    pub fn reference(n_tokens: usize) -> Self {
        Self::calibrated(n_tokens, 637.0, 0.535, 401.0)
    }

    pub fn latency_ms(&self, recomputed: usize) -> f64 {
        self.base_ms + self.per_token_ms * recomputed as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub step: usize,
    pub reused: usize,
    pub recomputed: usize,
    pub latency_ms: f64,
}

/// One token per patch, each tagged with its age.
#[derive(Debug, Clone, Default)]
pub struct TokenCache {
    grid: Option<PatchGrid>,
    slots: Vec<TokenSlot>,
}

impl TokenCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_populated(&self) -> bool {
        self.grid.is_some()
    }

    pub fn grid(&self) -> Option<PatchGrid> {
        self.grid
    }

    pub fn slots(&self) -> &[TokenSlot] {
        &self.slots
    }

    pub fn slot(&self, index: usize) -> &TokenSlot {
        &self.slots[index]
    }

    /// Recomputes every slot from `curr`.
    pub fn cold_start(
        &mut self,
        step: usize,
        curr: &Frame,
        grid: PatchGrid,
        tokenizer: &dyn Tokenizer,
        cost: &CostModel,
    ) -> Result<StepReport> {
        grid.matches(curr)?;
        let p = grid.patch_size();
        let mut patch = vec![0.0; p * p];
        self.slots = (0..grid.len())
            .map(|idx| {
                let (i, j) = grid.position(idx);
                grid.extract_into(curr, i, j, &mut patch);
                TokenSlot {
                    token: tokenizer.embed(&patch, p),
                    age: 0,
                }
            })
            .collect();
        self.grid = Some(grid);
        Ok(StepReport {
            step,
            reused: 0,
            recomputed: grid.len(),
            latency_ms: cost.latency_ms(grid.len()),
        })
    }

    /// Applies a decision: reused slots are copied from their displaced
    /// source in the previous cache, everything else is recomputed.
    pub fn apply(
        &mut self,
        decision: &CacheDecision,
        curr: &Frame,
        tokenizer: &dyn Tokenizer,
        cost: &CostModel,
    ) -> Result<StepReport> {
        let grid = decision.grid;
        if decision.flushed || self.grid != Some(grid) {
            return self.cold_start(decision.step, curr, grid, tokenizer, cost);
        }
        grid.matches(curr)?;
        let p = grid.patch_size();
        let mut patch = vec![0.0; p * p];
        let mut reused = vec![false; grid.len()];
        for &idx in &decision.reuse_set {
            reused[idx] = true;
        }
        let (rows, cols) = (grid.rows() as i64, grid.cols() as i64);
        let disp = decision.displacement;
        let previous = std::mem::take(&mut self.slots);
        self.slots = (0..grid.len())
            .map(|idx| {
                let (i, j) = grid.position(idx);
                if reused[idx] {
                    let si = i as i64 - disp.di_patches;
                    let sj = j as i64 - disp.dj_patches;
                    assert!(
                        (0..rows).contains(&si) && (0..cols).contains(&sj),
                        "reuse source ({si}, {sj}) outside the patch grid"
                    );
                    let src = &previous[grid.index(si as usize, sj as usize)];
                    TokenSlot {
                        token: src.token.clone(),
                        age: src.age + 1,
                    }
                } else {
                    grid.extract_into(curr, i, j, &mut patch);
                    TokenSlot {
                        token: tokenizer.embed(&patch, p),
                        age: 0,
                    }
                }
            })
            .collect();
        let recomputed = grid.len() - decision.reuse_set.len();
        Ok(StepReport {
            step: decision.step,
            reused: decision.reuse_set.len(),
            recomputed,
            latency_ms: cost.latency_ms(recomputed),
        })
    }
}

/// Result of pushing one frame into a [`CacheSession`].
#[derive(Debug, Clone)]
pub struct SessionStep {
    /// `None` for the first frame, which always computes every token.
    pub decision: Option<CacheDecision>,
    pub timings: StageTimings,
    pub report: StepReport,
}

/// Streaming driver: feed frames in order, get a decision and cache update
/// per frame. Holding `&mut self` for the whole step keeps the cache
/// single-writer.
pub struct CacheSession {
    cfg: CacheConfig,
    tokenizer: Box<dyn Tokenizer>,
    cost: Option<CostModel>,
    prev: Option<Frame>,
    cache: TokenCache,
    step: usize,
}

impl CacheSession {
    pub fn new(cfg: CacheConfig, tokenizer: Box<dyn Tokenizer>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            tokenizer,
            cost: None,
            prev: None,
            cache: TokenCache::new(),
            step: 0,
        })
    }

    /// Overrides the default cost model, which is calibrated per patch count.
    pub fn with_cost_model(mut self, cost: CostModel) -> Self {
        self.cost = Some(cost);
        self
    }

    pub fn config(&self) -> &CacheConfig {
        &self.cfg
    }

    pub fn cache(&self) -> &TokenCache {
        &self.cache
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn reset(&mut self) {
        self.prev = None;
        self.cache = TokenCache::new();
        self.step = 0;
    }

    pub fn push(&mut self, frame: Frame) -> Result<SessionStep> {
        let step = self.step;
        let grid = PatchGrid::for_frame(&frame, self.cfg.patch_size)?;
        let cost = self
            .cost
            .unwrap_or_else(|| CostModel::reference(grid.len()));
        let out = match &self.prev {
            None => {
                let report =
                    self.cache
                        .cold_start(step, &frame, grid, self.tokenizer.as_ref(), &cost)?;
                SessionStep {
                    decision: None,
                    timings: StageTimings::default(),
                    report,
                }
            }
            Some(prev) => {
                let (decision, timings) = decide_timed(prev, &frame, &self.cfg).map_err(|e| {
                    FreqCacheError::SequenceStep {
                        step,
                        source: Box::new(e),
                    }
                })?;
                let decision = decision.with_step(step);
                decision.check_invariants()?;
                let report = self
                    .cache
                    .apply(&decision, &frame, self.tokenizer.as_ref(), &cost)?;
                SessionStep {
                    decision: Some(decision),
                    timings,
                    report,
                }
            }
        };
        self.prev = Some(frame);
        self.step += 1;
        Ok(out)
    }
}
