//! Two-stage speaker diarization for fiction video, driven by the visual
//! structure of dialogue scenes.
//!
//! Stage zero segments the frame stream into shots and labels recurring ones;
//! alternating-label runs delimit dialogue scenes. Stage one clusters each
//! scene's subtitle-timed speech segments into local speakers with Ward
//! agglomeration in a Mahalanobis-whitened embedding space. Stage two merges
//! recurring speakers across scenes under cannot-link constraints between
//! speakers of the same scene, yielding an irreducible forest whose tree
//! count approximates the real speaker count.

pub mod config;
pub mod error;
pub mod eval;
pub mod global;
pub mod io;
pub mod local;
pub mod model;
pub mod patterns;
pub mod pipeline;
pub mod synth;
pub mod visual;

mod util;

pub use config::PipelineConfig;
pub use error::{Error, Result};
