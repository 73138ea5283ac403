//! On-disk formats: SRT subtitles, frame-histogram files, embedding tables,
//! reference annotations, JSON result documents and RTTM.
//!
//! Writers produce byte-reproducible output: floats carry six decimal places,
//! keys have a fixed order, and files are written atomically (temp file plus
//! rename). Every parser rejects trailing garbage; every writer's output is
//! accepted by the matching parser.

pub mod annotations;
pub mod embeddings;
pub mod frames;
pub mod json;
pub mod rttm;
pub mod srt;

use std::path::Path;

use crate::error::Result;

/// Write `bytes` to `path` atomically: to a sibling temp file first, then
/// rename over the destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
