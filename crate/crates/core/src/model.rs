//! Shared domain types: frames, shots, labels, speech segments, dialogue
//! scenes, speaker clusters and the time arithmetic they rely on.
//!
//! All types are immutable after construction and safe to share across
//! workers. Time is integer milliseconds throughout; intervals are half-open.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of spatial blocks a frame is divided into (6 columns x 5 rows).
pub const BLOCK_COUNT: usize = 30;

macro_rules! id_newtype {
    ($(#[$doc:meta])* $name:ident, $inner:ty) => {
        $(#[$doc])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub $inner);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(
    /// Index of a shot within one episode, in temporal order.
    ShotId,
    usize
);
id_newtype!(
    /// Label shared by shots conjectured to come from the same camera setup.
    LabelId,
    usize
);
id_newtype!(
    /// Index of a speech segment within one episode, in subtitle order.
    SegmentId,
    u32
);
id_newtype!(
    /// Index of a detected dialogue scene, in order of first shot.
    SceneId,
    u32
);
id_newtype!(
    /// Identifier of a speaker class hypothesized within a single scene.
    LocalSpeakerId,
    u32
);

/// Half-open interval in integer milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start_ms: i64,
    pub end_ms: i64,
}

impl TimeSpan {
    pub fn new(start_ms: i64, end_ms: i64) -> Self {
        debug_assert!(start_ms <= end_ms, "span start must not exceed end");
        Self { start_ms, end_ms }
    }

    pub fn len_ms(&self) -> i64 {
        self.end_ms - self.start_ms
    }

    pub fn is_empty(&self) -> bool {
        self.end_ms <= self.start_ms
    }

    pub fn contains(&self, t_ms: i64) -> bool {
        self.start_ms <= t_ms && t_ms < self.end_ms
    }

    pub fn midpoint_ms(&self) -> i64 {
        self.start_ms + (self.end_ms - self.start_ms) / 2
    }

    /// Smallest span covering both inputs.
    pub fn hull(&self, other: &TimeSpan) -> TimeSpan {
        TimeSpan {
            start_ms: self.start_ms.min(other.start_ms),
            end_ms: self.end_ms.max(other.end_ms),
        }
    }
}

/// Length of the intersection of two half-open ms intervals, never negative.
pub fn interval_overlap(a: TimeSpan, b: TimeSpan) -> i64 {
    (a.end_ms.min(b.end_ms) - a.start_ms.max(b.start_ms)).max(0)
}

/// Half-open interval of indices (frame or shot positions).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct IndexSpan {
    pub start: usize,
    pub end: usize,
}

impl IndexSpan {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// True when the spans overlap or touch (zero-gap adjacency).
    pub fn touches(&self, other: &IndexSpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// Per-frame visual descriptor: one color histogram per spatial block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDescriptor {
    pub frame_index: usize,
    pub timestamp_ms: i64,
    /// Exactly [`BLOCK_COUNT`] histograms, all with the same bin count.
    pub blocks: Vec<Vec<u32>>,
}

impl FrameDescriptor {
    pub fn new(frame_index: usize, timestamp_ms: i64, blocks: Vec<Vec<u32>>) -> Result<Self> {
        let d = Self {
            frame_index,
            timestamp_ms,
            blocks,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.len() != BLOCK_COUNT {
            return Err(Error::DimensionMismatch {
                context: "frame descriptor blocks",
                expected: BLOCK_COUNT,
                actual: self.blocks.len(),
            });
        }
        let bins = self.blocks[0].len();
        if bins == 0 {
            return Err(Error::EmptyInput("histogram block has zero bins"));
        }
        for b in &self.blocks {
            if b.len() != bins {
                return Err(Error::DimensionMismatch {
                    context: "histogram block bins",
                    expected: bins,
                    actual: b.len(),
                });
            }
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.blocks[0].len()
    }
}

/// An uninterrupted run of frames from a single camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub id: ShotId,
    pub frame_span: IndexSpan,
    pub time_span: TimeSpan,
    pub first_frame: FrameDescriptor,
    pub last_frame: FrameDescriptor,
    pub label: Option<LabelId>,
}

/// Assignment of every shot of an episode to a camera-setup label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotLabeling {
    pub alphabet_size: usize,
    pub label_of: BTreeMap<ShotId, LabelId>,
}

impl ShotLabeling {
    pub fn label(&self, shot: ShotId) -> Option<LabelId> {
        self.label_of.get(&shot).copied()
    }

    /// Label sequence in shot order; shots must be contiguously numbered from 0.
    pub fn sequence(&self) -> Vec<LabelId> {
        self.label_of.values().copied().collect()
    }
}

/// A subtitle-timed utterance, optionally carrying its speaker embedding and
/// its reference speaker for scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechSegment {
    pub id: SegmentId,
    pub time_span: TimeSpan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_speaker: Option<String>,
}

impl SpeechSegment {
    pub fn duration_ms(&self) -> i64 {
        self.time_span.len_ms()
    }
}

/// A detected alternating-shot span together with the speech it covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueScene {
    pub id: SceneId,
    /// Camera labels participating; two for plain alternations, more after merging.
    pub labels: BTreeSet<LabelId>,
    /// Maximal shot-index intervals covered by the scene.
    pub shot_spans: Vec<IndexSpan>,
    /// Union hull of the member shots' time spans.
    pub time_span: TimeSpan,
    /// Segments assigned to this scene, in temporal order, disjoint across scenes.
    pub covered_segments: Vec<SegmentId>,
}

/// A speaker class hypothesized inside one scene: the unit of global clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSpeaker {
    pub id: LocalSpeakerId,
    pub scene: SceneId,
    pub member_segments: Vec<SegmentId>,
    /// Duration-weighted mean of the member segment embeddings.
    pub pooled_embedding: Vec<f64>,
    pub total_duration_ms: i64,
}

/// Within-class covariance of speaker embeddings and the whitening transform
/// derived from it. Mahalanobis distances under `w` equal Euclidean distances
/// between whitened vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceModel {
    pub dimension: usize,
    /// Symmetric within-class covariance matrix.
    pub w: DMatrix<f64>,
    /// Inverse square root of `w + epsilon * I`.
    pub whitener: DMatrix<f64>,
    /// Regularizer actually applied.
    pub epsilon: f64,
}

impl CovarianceModel {
    /// Identity metric: whitened space equals raw space.
    pub fn identity(dimension: usize) -> Self {
        Self {
            dimension,
            w: DMatrix::identity(dimension, dimension),
            whitener: DMatrix::identity(dimension, dimension),
            epsilon: 0.0,
        }
    }

    pub fn whiten(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                context: "embedding vs covariance model",
                expected: self.dimension,
                actual: x.len(),
            });
        }
        Ok(&self.whitener * DVector::from_column_slice(x))
    }
}

/// One agglomeration step: clusters `a` and `b` merge into `id` at cost `height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub id: usize,
}

/// Metadata of a cluster produced during agglomeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMeta {
    pub mass: f64,
    pub centroid: Vec<f64>,
}

/// Merge tree over a set of items. Leaves are item indices; merged clusters
/// get fresh ids above the leaf range, so ids stay unique across the trees of
/// a forest that share one agglomeration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: Vec<usize>,
    pub merges: Vec<Merge>,
    /// Mass and centroid per cluster id (leaves and merged clusters).
    pub clusters: BTreeMap<usize, ClusterMeta>,
}

impl Dendrogram {
    /// Clusters obtained by keeping only the first `keep` merges, ordered by
    /// smallest member.
    ///
    /// `keep = merges.len()` yields the roots; `keep = 0` yields the leaves.
    pub fn clusters_after(&self, keep: usize) -> Vec<Vec<usize>> {
        let mut members: BTreeMap<usize, Vec<usize>> =
            self.leaves.iter().map(|&l| (l, vec![l])).collect();
        for m in self.merges.iter().take(keep) {
            let left = members.remove(&m.a).unwrap_or_default();
            let mut right = members.remove(&m.b).unwrap_or_default();
            let mut merged = left;
            merged.append(&mut right);
            merged.sort_unstable();
            members.insert(m.id, merged);
        }
        let mut groups: Vec<Vec<usize>> = members.into_values().collect();
        groups.sort_by_key(|g| g[0]);
        groups
    }

    /// Cut into exactly `k` clusters by undoing merges from the top.
    pub fn cut(&self, k: usize) -> Vec<Vec<usize>> {
        let n = self.leaves.len();
        assert!(k >= 1 && k <= n, "cut level out of range");
        // A tree over n leaves with m merges has n - m roots.
        let roots = n - self.merges.len();
        assert!(k >= roots, "cannot cut below the number of roots");
        self.clusters_after(n - k)
    }
}

/// Flat clustering of `n` items, positional: item `i` belongs to `assignment[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub k: usize,
}

impl Partition {
    /// Build from groups of item indices; cluster ids follow group order.
    pub fn from_groups(n: usize, groups: &[Vec<usize>]) -> Self {
        let mut assignment = vec![usize::MAX; n];
        for (c, group) in groups.iter().enumerate() {
            for &i in group {
                assert!(assignment[i] == usize::MAX, "item in two groups");
                assignment[i] = c;
            }
        }
        assert!(
            assignment.iter().all(|&a| a != usize::MAX),
            "partition must cover all items"
        );
        Self {
            assignment,
            k: groups.len(),
        }
    }

    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (i, &c) in self.assignment.iter().enumerate() {
            groups[c].push(i);
        }
        groups
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// Unordered pairs of items forbidden from sharing a cluster.
///
/// Pairs are stored over positional item indices, normalized `(low, high)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CannotLinkSet {
    pairs: BTreeSet<(usize, usize)>,
}

impl CannotLinkSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: usize, b: usize) {
        assert!(a != b, "cannot-link pair must join distinct items");
        self.pairs.insert((a.min(b), a.max(b)));
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a.min(b), a.max(b)))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }
}

impl FromIterator<(usize, usize)> for CannotLinkSet {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        let mut s = Self::new();
        for (a, b) in iter {
            s.insert(a, b);
        }
        s
    }
}
