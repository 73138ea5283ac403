//! Shot segmentation and similar-shot detection from block-histogram
//! correlation.
//!
//! A cut is declared between two consecutive frames whose descriptors
//! correlate below `theta_cut`; two shots are similar when the last frame of
//! the earlier one correlates with the first frame of the later one at
//! `theta_sim` or above. Gradual transitions (fades, dissolves) are not
//! modeled.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FrameDescriptor, IndexSpan, LabelId, Shot, ShotId, ShotLabeling, TimeSpan};

/// Frame period assumed when the input carries a single frame and no rate.
const FALLBACK_FRAME_PERIOD_MS: i64 = 40;

/// Undirected similarity edges between shots of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityGraph {
    pub nodes: Vec<ShotId>,
    /// Edges `(earlier, later, score)` with `score >= theta_sim`.
    pub edges: Vec<(ShotId, ShotId, f64)>,
}

impl SimilarityGraph {
    /// Neighbor lists keyed by shot; shots without edges map to empty lists.
    pub fn neighbor_lists(&self) -> BTreeMap<ShotId, Vec<ShotId>> {
        let mut lists: BTreeMap<ShotId, Vec<ShotId>> =
            self.nodes.iter().map(|&s| (s, Vec::new())).collect();
        for &(a, b, _) in &self.edges {
            lists.get_mut(&a).unwrap().push(b);
            lists.get_mut(&b).unwrap().push(a);
        }
        for l in lists.values_mut() {
            l.sort_unstable();
        }
        lists
    }
}

/// Pearson correlation of two equal-length histograms.
///
/// When either histogram is constant the correlation is undefined; the score
/// is then 1 for element-wise equal blocks and 0 otherwise, so that black
/// frames match black frames and nothing else.
fn block_correlation(a: &[u32], b: &[u32]) -> f64 {
    let n = a.len() as f64;
    let mean_a = a.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mean_b = b.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x as f64 - mean_a;
        let dy = y as f64 - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    cov / (var_a * var_b).sqrt()
}

/// Mean over the 30 spatial blocks of per-block histogram correlation.
///
/// Symmetric in its arguments and invariant under positive scaling of all
/// histograms. Returns a value in [-1, 1].
pub fn frame_correlation(a: &FrameDescriptor, b: &FrameDescriptor) -> Result<f64> {
    if a.blocks.len() != b.blocks.len() {
        return Err(Error::DimensionMismatch {
            context: "frame correlation blocks",
            expected: a.blocks.len(),
            actual: b.blocks.len(),
        });
    }
    if a.bins() != b.bins() {
        return Err(Error::DimensionMismatch {
            context: "frame correlation bins",
            expected: a.bins(),
            actual: b.bins(),
        });
    }
    let sum: f64 = a
        .blocks
        .iter()
        .zip(&b.blocks)
        .map(|(x, y)| block_correlation(x, y))
        .sum();
    Ok(sum / a.blocks.len() as f64)
}

/// Segment a frame stream into shots: a cut falls between consecutive frames
/// whose correlation drops below `theta_cut`. The returned shots tile the
/// frame range exactly.
pub fn detect_cuts(frames: &[FrameDescriptor], theta_cut: f64) -> Result<Vec<Shot>> {
    if frames.is_empty() {
        return Err(Error::EmptyInput("cut detection needs at least one frame"));
    }
    let n = frames.len();
    let mut boundaries = vec![0usize];
    for i in 0..n - 1 {
        if frame_correlation(&frames[i], &frames[i + 1])? < theta_cut {
            boundaries.push(i + 1);
        }
    }
    boundaries.push(n);

    // End of the final shot extends one frame period past the last timestamp.
    let period = if n >= 2 {
        frames[n - 1].timestamp_ms - frames[n - 2].timestamp_ms
    } else {
        FALLBACK_FRAME_PERIOD_MS
    };
    let end_of = |frame: usize| -> i64 {
        if frame < n {
            frames[frame].timestamp_ms
        } else {
            frames[n - 1].timestamp_ms + period
        }
    };

    let shots = boundaries
        .windows(2)
        .enumerate()
        .map(|(id, w)| {
            let (start, end) = (w[0], w[1]);
            Shot {
                id: ShotId(id),
                frame_span: IndexSpan::new(start, end),
                time_span: TimeSpan::new(frames[start].timestamp_ms, end_of(end)),
                first_frame: frames[start].clone(),
                last_frame: frames[end - 1].clone(),
                label: None,
            }
        })
        .collect();
    Ok(shots)
}

/// Frame indices at which `detect_cuts` would place a cut (starts of all
/// shots except the first).
pub fn cut_indices(shots: &[Shot]) -> Vec<usize> {
    shots.iter().skip(1).map(|s| s.frame_span.start).collect()
}

/// Compare every shot pair within `window` shots of each other: an edge is
/// added when the last frame of the earlier shot and the first frame of the
/// later one correlate at `theta_sim` or above. `None` disables the window.
pub fn detect_similar_shots(
    shots: &[Shot],
    theta_sim: f64,
    window: Option<usize>,
) -> Result<SimilarityGraph> {
    let mut edges = Vec::new();
    for (i, earlier) in shots.iter().enumerate() {
        let end = match window {
            Some(k) => (i + 1 + k).min(shots.len()),
            None => shots.len(),
        };
        for later in &shots[(i + 1).min(end)..end] {
            let score = frame_correlation(&earlier.last_frame, &later.first_frame)?;
            if score >= theta_sim {
                edges.push((earlier.id, later.id, score));
            }
        }
    }
    Ok(SimilarityGraph {
        nodes: shots.iter().map(|s| s.id).collect(),
        edges,
    })
}

/// Label shots by the connected components of the similarity graph; isolated
/// shots get singleton labels. Labels are numbered by first occurrence.
pub fn label_shots(graph: &SimilarityGraph) -> ShotLabeling {
    let index: BTreeMap<ShotId, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i))
        .collect();
    let mut dsu = crate::util::DisjointSet::new(graph.nodes.len());
    for &(a, b, _) in &graph.edges {
        dsu.union(index[&a], index[&b]);
    }
    let mut label_of_root: BTreeMap<usize, LabelId> = BTreeMap::new();
    let mut label_of = BTreeMap::new();
    for (i, &shot) in graph.nodes.iter().enumerate() {
        let root = dsu.find(i);
        let next = LabelId(label_of_root.len());
        let label = *label_of_root.entry(root).or_insert(next);
        label_of.insert(shot, label);
    }
    ShotLabeling {
        alphabet_size: label_of_root.len(),
        label_of,
    }
}
