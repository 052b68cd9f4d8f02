//! Frequency-guided token cache decisions for frame sequences.
//!
//! For each pair of consecutive frames the pipeline decides which patch
//! tokens can be reused from a cache and which must be recomputed:
//!
//! * [`migration`] gates on amplitude-spectrum similarity and recovers the
//!   inter-frame shift by phase correlation,
//! * [`edge`] forces recomputation of patches with outlying high-frequency
//!   block-DCT energy,
//! * [`budget`] turns spectral entropy into a reuse budget,
//! * [`fusion`] joins the three and picks the lowest-energy candidates.
//!
//! [`cache`] and [`sequence`] maintain a token cache across steps, and
//! [`harness`] holds scene synthesis, file formats and the baseline policies
//! behind the `freqcache` binary.

pub mod budget;
pub mod cache;
pub mod edge;
pub mod error;
pub mod frame;
pub mod fusion;
pub mod harness;
pub mod migration;
pub mod reference;
pub mod sequence;
pub mod spectral;
pub mod token;

pub use budget::{reuse_budget, spectral_entropy, BudgetConfig, EntropyReading};
pub use cache::{CacheSession, CostModel, StepReport, TokenCache};
pub use edge::{highpass_filter, patch_energy, refresh_mask, EnergyMap, RefreshMask};
pub use error::{FreqCacheError, Result};
pub use frame::{Frame, Grid, PatchGrid};
pub use fusion::{decide, decide_timed, CacheConfig, CacheDecision, StageTimings};
pub use migration::{
    alignment_mask, migration_gate, phase_correlation, sim_freq, sim_spatial, AlignmentMask,
    Displacement, Gate,
};
pub use reference::decide_reference;
pub use sequence::{run_sequence, SequenceReport};
pub use spectral::{amplitude_phase, block_dct, dft2, idft2, Spectrum};
pub use token::{HistogramTokenizer, RawPixels, Tokenizer};
