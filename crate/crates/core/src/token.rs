//! Patch tokenizers standing in for a vision encoder.

/// Maps one `P x P` patch (row-major) to an embedding vector.
///
/// Implementations must be deterministic and return finite values.
pub trait Tokenizer: Send + Sync {
    fn embed(&self, patch: &[f64], patch_size: usize) -> Vec<f64>;
}

/// The patch pixels themselves.
#[derive(Debug, Clone, Copy, Default)]
pub struct RawPixels;

impl Tokenizer for RawPixels {
    fn embed(&self, patch: &[f64], _patch_size: usize) -> Vec<f64> {
        patch.to_vec()
    }
}

/// Intensity histogram over `[0, 1]` followed by the patch mean and variance.
///
/// Values outside `[0, 1]` land in the first or last bin.
#[derive(Debug, Clone, Copy)]
pub struct HistogramTokenizer {
    pub bins: usize,
}

impl Default for HistogramTokenizer {
    fn default() -> Self {
        Self { bins: 16 }
    }
}

impl Tokenizer for HistogramTokenizer {
    fn embed(&self, patch: &[f64], _patch_size: usize) -> Vec<f64> {
        let n = patch.len() as f64;
        let mut out = vec![0.0; self.bins + 2];
        for &v in patch {
            let b = ((v * self.bins as f64).floor().max(0.0) as usize).min(self.bins - 1);
            out[b] += 1.0 / n;
        }
        let mean = patch.iter().sum::<f64>() / n;
        let var = patch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        out[self.bins] = mean;
        out[self.bins + 1] = var;
        out
    }
}

/// Cosine similarity, or `None` when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}
