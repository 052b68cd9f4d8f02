//! Everything behind the `freqcache` binary: synthetic scenes, file formats,
//! baseline comparison, exports and timing.

pub mod bench;
pub mod compare;
pub mod config;
pub mod export;
pub mod io;
pub mod manifest;
pub mod scene;
pub mod stats;
