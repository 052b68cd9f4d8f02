//! Side-by-side run of the frequency pipeline and two position-wise baselines.
//!
//! Both baselines compare patch `(i, j)` of the current frame with patch
//! `(i, j)` of the previous one and ignore camera motion:
//!
//! * `visual`: cosine of raw patch pixels above `tau_v`;
//! * `naive-frequency`: cosine of per-patch amplitude spectra above `tau_f`.
//!
//! Each baseline keeps its most similar candidates up to the same
//! entropy-driven `K_reuse` the pipeline uses, so the three policies differ
//! only in which patches they consider safe.

use serde::Serialize;

use crate::budget::{reuse_budget, spectral_entropy_with};
use crate::cache::CostModel;
use crate::error::{FreqCacheError, Result};
use crate::frame::{Frame, PatchGrid};
use crate::harness::config::RunConfig;
use crate::sequence::run_sequence;
use crate::spectral::dft2;
use crate::token::{cosine, HistogramTokenizer};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyReport {
    pub policy: String,
    pub reuse_ratio: f64,
    /// Reused patches that carry a ground-truth edge; `None` without labels.
    pub edge_false_reuse: Option<usize>,
    pub mean_latency_ms: f64,
    pub speedup: f64,
    pub per_step_reused: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub frames: usize,
    pub n_tokens: usize,
    pub tau_v: f64,
    pub tau_f: f64,
    pub baseline_latency_ms: f64,
    pub policies: Vec<PolicyReport>,
}

impl CompareReport {
    pub fn policy(&self, name: &str) -> Option<&PolicyReport> {
        self.policies.iter().find(|p| p.policy == name)
    }
}

fn patch_frame(grid: &PatchGrid, frame: &Frame, i: usize, j: usize) -> Frame {
    let p = grid.patch_size();
    Frame::new(p, p, grid.extract(frame, i, j)).expect("patch of a finite frame is finite")
}

fn patch_amplitudes(grid: &PatchGrid, frame: &Frame) -> Vec<Vec<f64>> {
    (0..grid.len())
        .map(|idx| {
            let (i, j) = grid.position(idx);
            dft2(&patch_frame(grid, frame, i, j))
                .bins()
                .iter()
                .map(|z| z.norm())
                .collect()
        })
        .collect()
}

fn patch_pixels(grid: &PatchGrid, frame: &Frame) -> Vec<Vec<f64>> {
    (0..grid.len())
        .map(|idx| {
            let (i, j) = grid.position(idx);
            grid.extract(frame, i, j)
        })
        .collect()
}

/// Keeps indices with similarity above `tau`, most similar first (ties by
/// index), truncated to `cap`.
fn threshold_select(sims: &[Option<f64>], tau: f64, cap: usize) -> Vec<usize> {
    let mut picked: Vec<(usize, f64)> = sims
        .iter()
        .enumerate()
        .filter_map(|(idx, s)| s.filter(|&s| s > tau).map(|s| (idx, s)))
        .collect();
    picked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    picked.truncate(cap);
    picked.into_iter().map(|(idx, _)| idx).collect()
}

fn count_edge_hits(reused: &[usize], labels: Option<&[usize]>) -> usize {
    labels.map_or(0, |l| reused.iter().filter(|p| l.contains(p)).count())
}

/// Runs the three policies over `frames`. `edge_labels[t]` lists the
/// ground-truth edge patches of frame `t`.
pub fn compare_domains(
    frames: &[Frame],
    edge_labels: Option<&[Vec<usize>]>,
    cfg: &RunConfig,
) -> Result<CompareReport> {
    if frames.len() < 2 {
        return Err(FreqCacheError::SequenceTooShort {
            needed: 2,
            got: frames.len(),
        });
    }
    if let Some(labels) = edge_labels {
        if labels.len() != frames.len() {
            return Err(FreqCacheError::InvalidParameter(format!(
                "{} edge label rows for {} frames",
                labels.len(),
                frames.len()
            )));
        }
    }
    let cache_cfg = cfg.cache;
    let grid = PatchGrid::for_frame(&frames[0], cache_cfg.patch_size)?;
    for (t, f) in frames.iter().enumerate() {
        frames[0]
            .ensure_same_dims(f)
            .map_err(|e| FreqCacheError::SequenceStep {
                step: t,
                source: Box::new(e),
            })?;
    }
    let n = grid.len();
    let cost = CostModel::reference(n);
    let decided = (frames.len() - 1) as f64;
    let labels_at = |t: usize| edge_labels.map(|l| l[t].as_slice());

    let seq = run_sequence(
        frames,
        &cache_cfg,
        Box::new(HistogramTokenizer::default()),
        Some(cost),
    )?;
    let mut fc_edges = 0;
    for d in &seq.decisions {
        fc_edges += count_edge_hits(&d.reuse_set, labels_at(d.step));
    }
    let freqcache = PolicyReport {
        policy: "freqcache".into(),
        reuse_ratio: seq.mean_reuse_ratio,
        edge_false_reuse: edge_labels.map(|_| fc_edges),
        mean_latency_ms: seq.mean_latency_ms,
        speedup: seq.speedup,
        per_step_reused: seq.decisions.iter().map(|d| d.k_final).collect(),
    };

    let mut visual = Vec::with_capacity(frames.len() - 1);
    let mut naive = Vec::with_capacity(frames.len() - 1);
    let mut prev_px = patch_pixels(&grid, &frames[0]);
    let mut prev_amp = patch_amplitudes(&grid, &frames[0]);
    for curr in &frames[1..] {
        let px = patch_pixels(&grid, curr);
        let amp = patch_amplitudes(&grid, curr);
        // Same budget as the pipeline; a black frame leaves no budget.
        let k_reuse = spectral_entropy_with(&dft2(curr).amplitude(), cache_cfg.budget.include_dc)
            .map(|e| reuse_budget(e.normalized, &cache_cfg.budget, n).1)
            .unwrap_or(0);
        let v_sims: Vec<_> = (0..n).map(|k| cosine(&prev_px[k], &px[k])).collect();
        let f_sims: Vec<_> = (0..n).map(|k| cosine(&prev_amp[k], &amp[k])).collect();
        visual.push(threshold_select(&v_sims, cfg.tau_v, k_reuse));
        naive.push(threshold_select(&f_sims, cfg.tau_f, k_reuse));
        prev_px = px;
        prev_amp = amp;
    }

    let baseline = |name: &str, sets: &[Vec<usize>]| {
        let reused: usize = sets.iter().map(Vec::len).sum();
        let latency = sets
            .iter()
            .map(|s| cost.latency_ms(n - s.len()))
            .sum::<f64>()
            / decided;
        let edges: usize = sets
            .iter()
            .enumerate()
            .map(|(k, s)| count_edge_hits(s, labels_at(k + 1)))
            .sum();
        PolicyReport {
            policy: name.into(),
            reuse_ratio: reused as f64 / (decided * n as f64),
            edge_false_reuse: edge_labels.map(|_| edges),
            mean_latency_ms: latency,
            speedup: cost.latency_ms(n) / latency,
            per_step_reused: sets.iter().map(Vec::len).collect(),
        }
    };

    Ok(CompareReport {
        frames: frames.len(),
        n_tokens: n,
        tau_v: cfg.tau_v,
        tau_f: cfg.tau_f,
        baseline_latency_ms: cost.latency_ms(n),
        policies: vec![
            freqcache,
            baseline("visual", &visual),
            baseline("naive-frequency", &naive),
        ],
    })
}
