//! Reference annotations for one episode: cuts, shot similarity, scenes and
//! speakers. One JSON document per episode, produced by hand labeling or by
//! the synthetic corpus generator (as `truth.json`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{IndexSpan, TimeSpan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTruth {
    pub episode: String,
    /// Frame indices where reference cuts fall (first frame of each new shot).
    pub cuts: Vec<usize>,
    /// Reference camera label per shot, in shot order.
    pub shot_labels: Vec<usize>,
    /// Reference similar-shot lists: for each shot, the shots sharing its
    /// camera setup (excluding itself).
    pub similar_shots: Vec<Vec<usize>>,
    /// Reference dialogue scenes.
    pub scenes: Vec<TruthScene>,
    /// Reference speaker per segment, in segment-id order.
    pub segment_speakers: Vec<String>,
    /// Number of distinct speakers appearing in the episode.
    pub speaker_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthScene {
    pub shot_span: IndexSpan,
    pub time_span: TimeSpan,
    pub segment_ids: Vec<u32>,
    pub speakers: Vec<String>,
}

pub fn read_truth(path: &Path) -> Result<EpisodeTruth> {
    super::json::read_file(path)
}

pub fn write_truth(path: &Path, truth: &EpisodeTruth) -> Result<()> {
    super::json::write_file(path, truth)
}

/// Optional subtitle timing corrections, applied at load time: a global
/// offset plus per-cue overrides (keyed by segment id after parsing).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubtitleAdjustments {
    pub offset_ms: i64,
    pub overrides: Vec<CueOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueOverride {
    pub segment_id: u32,
    pub start_ms: i64,
    pub end_ms: i64,
}

impl SubtitleAdjustments {
    pub fn apply(&self, segments: &mut [crate::model::SpeechSegment]) {
        for seg in segments.iter_mut() {
            seg.time_span = TimeSpan::new(
                seg.time_span.start_ms + self.offset_ms,
                seg.time_span.end_ms + self.offset_ms,
            );
        }
        for ov in &self.overrides {
            if let Some(seg) = segments.iter_mut().find(|s| s.id.0 == ov.segment_id) {
                seg.time_span = TimeSpan::new(ov.start_ms, ov.end_ms);
            }
        }
    }
}
