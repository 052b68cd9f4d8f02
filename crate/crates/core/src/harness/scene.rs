//! Seeded synthetic frame sequences.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FreqCacheError, Result};
use crate::frame::{Frame, PatchGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    /// A broadband base frame cyclically shifted by a fixed amount per step.
    Translate,
    /// A smooth gradient with step-edge squares appearing at scripted steps.
    EdgeInject,
    /// Blend from a smooth gradient to white noise over the sequence.
    ComplexityRamp,
    /// Independent white-noise frames.
    Noise,
    /// One broadband frame repeated.
    Static,
}

impl std::str::FromStr for SceneKind {
    type Err = FreqCacheError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "translate" => Self::Translate,
            "edge-inject" => Self::EdgeInject,
            "complexity-ramp" => Self::ComplexityRamp,
            "noise" => Self::Noise,
            "static" => Self::Static,
            other => {
                return Err(FreqCacheError::InvalidParameter(format!(
                    "unknown scene kind `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub height: usize,
    pub width: usize,
    pub length: usize,
    pub seed: u64,
    /// Patch size used to place injected edges.
    pub patch_size: usize,
    /// Per-step cyclic shift for `translate`.
    pub shift: (i64, i64),
    /// Number of injected edge patches for `edge-inject`.
    pub edge_count: usize,
    /// Span of the smooth gradient.
    pub gradient_range: f64,
    /// Peak-to-peak amplitude of additive or standalone noise.
    pub noise_amplitude: f64,
    /// Intensity step of injected edge squares.
    pub edge_contrast: f64,
}

impl SceneSpec {
    pub fn new(kind: SceneKind, height: usize, width: usize, length: usize, seed: u64) -> Self {
        Self {
            kind,
            height,
            width,
            length,
            seed,
            patch_size: 16,
            shift: (3, 5),
            edge_count: 4,
            gradient_range: 1.0,
            noise_amplitude: match kind {
                SceneKind::EdgeInject => 0.0,
                _ => 1.0,
            },
            edge_contrast: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(FreqCacheError::InvalidParameter(
                "scene needs at least one frame".into(),
            ));
        }
        if self.height < 2 || self.width < 2 {
            return Err(FreqCacheError::InvalidDimensions(format!(
                "scene frames must be at least 2x2, got {}x{}",
                self.height, self.width
            )));
        }
        let grid = PatchGrid::new(self.height, self.width, self.patch_size)?;
        if self.kind == SceneKind::EdgeInject && self.edge_count > grid.len() {
            return Err(FreqCacheError::InvalidParameter(format!(
                "{} edge patches requested on a {}-patch grid",
                self.edge_count,
                grid.len()
            )));
        }
        Ok(())
    }
}

/// Generated frames plus, per frame, the patch indices holding an injected edge.
#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub frames: Vec<Frame>,
    pub edge_labels: Vec<Vec<usize>>,
}

// Frames are stored at f32 precision so they survive the rawf32 format unchanged.
fn f32_frame(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Frame {
    Frame::from_fn(height, width, |r, c| f(r, c) as f32 as f64)
}

fn noise_frame(rng: &mut ChaCha8Rng, height: usize, width: usize, amplitude: f64) -> Vec<f64> {
    (0..height * width)
        .map(|_| 0.5 + amplitude * (rng.gen::<f64>() - 0.5))
        .collect()
}

fn gradient(spec: &SceneSpec, r: usize, c: usize) -> f64 {
    let y = r as f64 / (spec.height - 1) as f64;
    let x = c as f64 / (spec.width - 1) as f64;
    spec.gradient_range * (x + y) / 2.0
}

pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (h, w, t_len) = (spec.height, spec.width, spec.length);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edge_labels = vec![Vec::new(); t_len];
    let frames = match spec.kind {
        SceneKind::Translate | SceneKind::Static => {
            let base = noise_frame(&mut rng, h, w, spec.noise_amplitude);
            let base = f32_frame(h, w, |r, c| base[r * w + c]);
            (0..t_len)
                .map(|t| {
                    if spec.kind == SceneKind::Static {
                        base.clone()
                    } else {
                        base.cyclic_shift(
                            spec.shift.0 as isize * t as isize,
                            spec.shift.1 as isize * t as isize,
                        )
                    }
                })
                .collect()
        }
        SceneKind::Noise => (0..t_len)
            .map(|_| {
                let n = noise_frame(&mut rng, h, w, spec.noise_amplitude);
                f32_frame(h, w, |r, c| n[r * w + c])
            })
            .collect(),
        SceneKind::ComplexityRamp => (0..t_len)
            .map(|t| {
                let mix = if t_len > 1 {
                    t as f64 / (t_len - 1) as f64
                } else {
                    1.0
                };
                let n = noise_frame(&mut rng, h, w, spec.noise_amplitude);
                f32_frame(h, w, |r, c| {
                    (1.0 - mix) * gradient(spec, r, c) + mix * n[r * w + c]
                })
            })
            .collect(),
        SceneKind::EdgeInject => {
            let grid = PatchGrid::new(h, w, spec.patch_size)?;
            let k = spec.edge_count;
            let mut positions = sample(&mut rng, grid.len(), k).into_vec();
            positions.sort_unstable();
            // Edge j appears at step floor(j * T / k) and stays.
            let appear: Vec<usize> = (0..k).map(|j| j * t_len / k.max(1)).collect();
            let p = spec.patch_size;
            let (lo, hi) = (p / 4, p - p / 4);
            (0..t_len)
                .map(|t| {
                    let active: Vec<usize> = positions
                        .iter()
                        .zip(&appear)
                        .filter(|(_, &a)| a <= t)
                        .map(|(&pos, _)| pos)
                        .collect();
                    let mut labels = active.clone();
                    labels.sort_unstable();
                    edge_labels[t] = labels;
                    let n = if spec.noise_amplitude > 0.0 {
                        noise_frame(&mut rng, h, w, spec.noise_amplitude)
                    } else {
                        vec![0.5; h * w]
                    };
                    let mut data: Vec<f64> = (0..h * w)
                        .map(|idx| gradient(spec, idx / w, idx % w) + n[idx] - 0.5)
                        .collect();
                    for &pos in &active {
                        let (i, j) = grid.position(pos);
                        for r in lo..hi {
                            for c in lo..hi {
                                data[(i * p + r) * w + j * p + c] += spec.edge_contrast;
                            }
                        }
                    }
                    f32_frame(h, w, |r, c| data[r * w + c])
                })
                .collect()
        }
    };
    Ok(Scene {
        spec: spec.clone(),
        frames,
        edge_labels,
    })
}
