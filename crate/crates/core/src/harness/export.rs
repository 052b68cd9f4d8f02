//! JSONL decision records, CSV metrics and PGM reuse masks.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::budget::EntropyReading;
use crate::cache::StepReport;
use crate::error::{FreqCacheError, Result};
use crate::frame::PatchGrid;
use crate::fusion::{patch_labels, CacheDecision, PatchLabel, StageTimings};
use crate::harness::io::encode_pgm;
use crate::migration::Displacement;
use crate::sequence::SequenceReport;

pub const CSV_HEADER: &str = "step,reuse_ratio,sim_freq,entropy,alpha,latency_model_ms";

/// One JSONL line. `timings_us` is `null` unless timing capture was asked
/// for, which keeps default output byte-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub step: usize,
    pub flushed: bool,
    pub sim_freq: f64,
    pub displacement: Displacement,
    pub entropy: EntropyReading,
    pub alpha: f64,
    pub k_reuse: usize,
    pub k_candidate: usize,
    pub k_final: usize,
    pub reuse_set: Vec<usize>,
    pub timings_us: Option<StageTimings>,
    pub grid: PatchGrid,
    pub refresh_set: Vec<usize>,
    pub diagnostic: Option<String>,
}

impl DecisionRecord {
    pub fn new(d: &CacheDecision, timings: Option<StageTimings>) -> Self {
        Self {
            step: d.step,
            flushed: d.flushed,
            sim_freq: d.sim_freq,
            displacement: d.displacement,
            entropy: d.entropy,
            alpha: d.alpha,
            k_reuse: d.k_reuse,
            k_candidate: d.k_candidate,
            k_final: d.k_final,
            reuse_set: d.reuse_set.clone(),
            timings_us: timings,
            grid: d.grid,
            refresh_set: d.refresh_set.clone(),
            diagnostic: d.diagnostic.clone(),
        }
    }

    /// The record as one JSONL line without the trailing newline.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| FreqCacheError::Io(e.to_string()))
    }

    /// 255 reused, 128 recomputed for an edge, 0 otherwise.
    pub fn mask_pixels(&self) -> Vec<u8> {
        patch_labels(&self.grid, self.flushed, &self.reuse_set, &self.refresh_set)
            .as_slice()
            .iter()
            .map(|l| match l {
                PatchLabel::Reused => 255,
                PatchLabel::EdgeRefresh => 128,
                PatchLabel::Recomputed => 0,
            })
            .collect()
    }
}

pub fn records(report: &SequenceReport, with_timings: bool) -> Vec<DecisionRecord> {
    report
        .decisions
        .iter()
        .zip(&report.timings)
        .map(|(d, t)| DecisionRecord::new(d, with_timings.then_some(*t)))
        .collect()
}

pub fn write_jsonl(out: &mut impl Write, records: &[DecisionRecord]) -> Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_json()?)?;
    }
    Ok(())
}

pub fn read_jsonl(input: impl BufRead) -> Result<Vec<DecisionRecord>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            let rec = serde_json::from_str(&line).map_err(|e| FreqCacheError::Parse {
                offset: offset + e.column().saturating_sub(1),
                message: e.to_string(),
            })?;
            out.push(rec);
        }
        offset += line.len() + 1;
    }
    Ok(out)
}

/// One row per decided step, latency from the step's cost-model report.
pub fn write_metrics_csv(out: &mut impl Write, report: &SequenceReport) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let steps: Vec<&StepReport> = report.steps.iter().skip(1).collect();
    for (d, s) in report.decisions.iter().zip(steps) {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            d.step,
            d.reuse_ratio(),
            d.sim_freq,
            d.entropy.normalized,
            d.alpha,
            s.latency_ms
        )?;
    }
    Ok(())
}

/// Writes `step_{t:05}.pgm` per record at patch-grid resolution.
pub fn export_masks(records: &[DecisionRecord], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if let Some(first) = records.first() {
        if let Some(bad) = records
            .iter()
            .find(|r| (r.grid.rows(), r.grid.cols()) != (first.grid.rows(), first.grid.cols()))
        {
            return Err(FreqCacheError::InvalidParameter(format!(
                "step {} has a {}x{} patch grid, expected {}x{}",
                bad.step,
                bad.grid.rows(),
                bad.grid.cols(),
                first.grid.rows(),
                first.grid.cols()
            )));
        }
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(records.len());
    for r in records {
        let path = out_dir.join(format!("step_{:05}.pgm", r.step));
        fs::write(
            &path,
            encode_pgm(r.grid.cols(), r.grid.rows(), &r.mask_pixels()),
        )?;
        written.push(path);
    }
    Ok(written)
}
