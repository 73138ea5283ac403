//! Scoring for every pipeline stage: cut F1, shot-similarity F1, diarization
//! error rate with optimal speaker mapping, the per-scene weighted variant,
//! and speaker-count reporting.
//!
//! Segments come from subtitles, so there are no misses or false alarms:
//! DER reduces to misattributed speech time over total speech time, under
//! the best one-to-one mapping between hypothesis and reference speakers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Partition, ShotId};

/// Precision / recall / F1 triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrfScore {
    fn from_counts(matched: usize, hyp_total: usize, ref_total: usize) -> Self {
        if hyp_total == 0 && ref_total == 0 {
            // Nothing to find and nothing claimed: vacuously perfect.
            return Self {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let precision = if hyp_total > 0 {
            matched as f64 / hyp_total as f64
        } else {
            0.0
        };
        let recall = if ref_total > 0 {
            matched as f64 / ref_total as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

/// Score hypothesized cut positions against reference ones with a one-to-one
/// greedy matching within `tol` frames. Inputs must be sorted and duplicate
/// free.
pub fn f1_cuts(hyp: &[usize], reference: &[usize], tol: usize) -> PrfScore {
    let mut matched = 0;
    let (mut i, mut j) = (0, 0);
    while i < hyp.len() && j < reference.len() {
        let h = hyp[i] as i64;
        let r = reference[j] as i64;
        if (h - r).abs() <= tol as i64 {
            matched += 1;
            i += 1;
            j += 1;
        } else if h < r {
            i += 1;
        } else {
            j += 1;
        }
    }
    PrfScore::from_counts(matched, hyp.len(), reference.len())
}

/// Score similar-shot lists: a shot counts as correctly matched when its
/// hypothesized and reference neighbor lists intersect. Precision divides by
/// shots with a non-empty hypothesis list, recall by shots with a non-empty
/// reference list.
pub fn f1_similarity(
    hyp_lists: &BTreeMap<ShotId, Vec<ShotId>>,
    ref_lists: &BTreeMap<ShotId, Vec<ShotId>>,
) -> PrfScore {
    let empty: Vec<ShotId> = Vec::new();
    let shots: std::collections::BTreeSet<ShotId> =
        hyp_lists.keys().chain(ref_lists.keys()).copied().collect();
    let mut matched = 0;
    let mut with_hyp = 0;
    let mut with_ref = 0;
    for shot in shots {
        let hyp = hyp_lists.get(&shot).unwrap_or(&empty);
        let reference = ref_lists.get(&shot).unwrap_or(&empty);
        if !hyp.is_empty() {
            with_hyp += 1;
        }
        if !reference.is_empty() {
            with_ref += 1;
        }
        if hyp.iter().any(|s| reference.contains(s)) {
            matched += 1;
        }
    }
    PrfScore::from_counts(matched, with_hyp, with_ref)
}

/// Maximum-weight one-to-one assignment between rows and columns of `weight`
/// (not necessarily square). Returns the attributed total.
///
/// Kuhn-Munkres with potentials, O(n^3).
pub fn max_assignment(weight: &[Vec<f64>]) -> f64 {
    let rows = weight.len();
    let cols = weight.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let n = rows.max(cols);
    let max_w = weight
        .iter()
        .flatten()
        .copied()
        .fold(0.0f64, f64::max)
        .max(0.0);
    // Square min-cost matrix; padding cells cost `max_w` (weight zero).
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            max_w - weight[i][j]
        } else {
            max_w
        }
    };

    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1]; // column -> row (1-based, 0 = free)
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut total = 0.0;
    for j in 1..=n {
        let i = matched_row[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            total += weight[i - 1][j - 1];
        }
    }
    total
}

/// Diarization error rate: misattributed speech time over total speech time
/// under the optimal one-to-one speaker mapping. Hypothesis clusters beyond
/// the reference speaker count contribute their full time as error.
pub fn der(hyp: &Partition, refs: &[String], durations_ms: &[i64]) -> f64 {
    assert_eq!(hyp.len(), refs.len(), "partition and references must align");
    assert_eq!(hyp.len(), durations_ms.len());
    let total: i64 = durations_ms.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let mut ref_index: BTreeMap<&str, usize> = BTreeMap::new();
    for r in refs {
        let next = ref_index.len();
        ref_index.entry(r).or_insert(next);
    }
    let mut weight = vec![vec![0.0; ref_index.len()]; hyp.k];
    for ((&cluster, r), &dur) in hyp.assignment.iter().zip(refs).zip(durations_ms) {
        weight[cluster][ref_index[r.as_str()]] += dur as f64;
    }
    let attributed = max_assignment(&weight);
    (1.0 - attributed / total as f64).clamp(0.0, 1.0)
}

/// One scene's hypothesis partition with aligned reference speakers and
/// segment durations in milliseconds.
pub type SceneEval = (Partition, Vec<String>, Vec<i64>);

/// Per-scene DER with per-scene optimal mapping, aggregated as the
/// speech-duration-weighted mean.
pub fn single_show_der(per_scene: &[SceneEval]) -> f64 {
    let mut weighted = 0.0;
    let mut total = 0i64;
    for (hyp, refs, durations) in per_scene {
        let scene_total: i64 = durations.iter().sum();
        weighted += der(hyp, refs, durations) * scene_total as f64;
        total += scene_total;
    }
    if total == 0 {
        0.0
    } else {
        weighted / total as f64
    }
}

/// Per-episode hypothesized vs reference speaker counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerCountReport {
    pub rows: Vec<SpeakerCountRow>,
    pub mean_hyp: f64,
    pub mean_ref: f64,
    pub mean_absolute_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerCountRow {
    pub episode: String,
    pub hyp_speakers: usize,
    pub ref_speakers: usize,
}

pub fn speaker_count_report(rows: Vec<SpeakerCountRow>) -> SpeakerCountReport {
    let n = rows.len().max(1) as f64;
    let mean_hyp = rows.iter().map(|r| r.hyp_speakers as f64).sum::<f64>() / n;
    let mean_ref = rows.iter().map(|r| r.ref_speakers as f64).sum::<f64>() / n;
    let mae = rows
        .iter()
        .map(|r| (r.hyp_speakers as f64 - r.ref_speakers as f64).abs())
        .sum::<f64>()
        / n;
    SpeakerCountReport {
        rows,
        mean_hyp,
        mean_ref,
        mean_absolute_error: mae,
    }
}
