//! Per-scene speaker clustering: Ward agglomeration of segment embeddings in
//! a Mahalanobis-whitened space, with silhouette-based selection of the
//! cluster count, plus the naive shot-alternation baseline.
//!
//! The Mahalanobis metric is induced by the within-class covariance of a
//! labeled training set. Since that matrix is fixed, clustering in whitened
//! Euclidean space is identical to clustering under the raw Mahalanobis
//! distance and avoids a matrix solve per distance evaluation.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{
    ClusterMeta, CannotLinkSet, CovarianceModel, Dendrogram, DialogueScene, LocalSpeaker,
    LocalSpeakerId, Merge, Partition, SegmentId, Shot, ShotLabeling, SpeechSegment,
};

/// Fit the within-class covariance of speaker embeddings:
/// `W = (1/n) * sum over speakers s, samples i of (u_i^s - mean_s)(u_i^s - mean_s)^T`.
///
/// The whitener is the inverse square root of `W + eps*I`, with
/// `eps = epsilon_rel * trace(W) / d` (floored at 1e-12 so a degenerate zero
/// matrix still yields a finite transform).
pub fn within_class_covariance(
    training: &[(String, Vec<f64>)],
    epsilon_rel: f64,
) -> Result<CovarianceModel> {
    if training.is_empty() {
        return Err(Error::EmptyInput("covariance training set"));
    }
    let dim = training[0].1.len();
    for (_, v) in training {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "covariance training embedding",
                expected: dim,
                actual: v.len(),
            });
        }
    }

    let mut by_speaker: BTreeMap<&str, Vec<&Vec<f64>>> = BTreeMap::new();
    for (speaker, v) in training {
        by_speaker.entry(speaker).or_default().push(v);
    }

    let n = training.len() as f64;
    let mut w = DMatrix::<f64>::zeros(dim, dim);
    for samples in by_speaker.values() {
        let mut mean = DVector::<f64>::zeros(dim);
        for s in samples {
            mean += DVector::from_column_slice(s);
        }
        mean /= samples.len() as f64;
        for s in samples {
            let dev = DVector::from_column_slice(s) - &mean;
            w += &dev * dev.transpose();
        }
    }
    w /= n;

    let trace: f64 = w.trace();
    let mut epsilon = epsilon_rel * trace / dim as f64;
    if epsilon <= 0.0 {
        epsilon = 1e-12;
    }

    let mut regularized = w.clone();
    for i in 0..dim {
        regularized[(i, i)] += epsilon;
    }
    let eig = regularized.symmetric_eigen();
    let inv_sqrt = DVector::from_iterator(
        dim,
        eig.eigenvalues
            .iter()
            .map(|&l| 1.0 / l.max(epsilon * 1e-9).sqrt()),
    );
    let whitener = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();

    Ok(CovarianceModel {
        dimension: dim,
        w,
        whitener,
        epsilon,
    })
}

/// Mahalanobis distance under the model's within-class covariance: the
/// Euclidean distance between the whitened images of `x` and `y`.
pub fn mahalanobis_distance(x: &[f64], y: &[f64], model: &CovarianceModel) -> Result<f64> {
    let wx = model.whiten(x)?;
    let wy = model.whiten(y)?;
    Ok((wx - wy).norm())
}

pub(crate) fn whiten_all(points: &[Vec<f64>], model: &CovarianceModel) -> Result<Vec<DVector<f64>>> {
    points.iter().map(|p| model.whiten(p)).collect()
}

/// Full symmetric Euclidean distance matrix over whitened points.
pub(crate) fn distance_matrix(whitened: &[DVector<f64>]) -> Vec<Vec<f64>> {
    let n = whitened.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let dist = (&whitened[i] - &whitened[j]).norm();
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    d
}

/// Result of one greedy Ward agglomeration run.
pub(crate) struct Agglomeration {
    pub merges: Vec<Merge>,
    pub clusters: BTreeMap<usize, ClusterMeta>,
    /// Leaf indices per cluster id, sorted.
    pub members: BTreeMap<usize, Vec<usize>>,
    /// Clusters still alive when no legal merge remained, ascending.
    pub roots: Vec<usize>,
}

/// Greedy Ward agglomeration over whitened points.
///
/// At each step the pair minimizing
/// `delta_i = m_a * m_b / (m_a + m_b) * d^2(g_a, g_b)` merges, with ties
/// broken by the smallest (older id, younger id). Pairs joining two endpoints
/// of a cannot-link constraint are treated as infinitely distant, and the
/// new cluster inherits the constraints of both parents, so the run may stop
/// with several roots.
pub(crate) fn ward_agglomerate(
    whitened: &[DVector<f64>],
    constraints: &CannotLinkSet,
) -> Agglomeration {
    let n = whitened.len();
    let mut clusters: BTreeMap<usize, ClusterMeta> = BTreeMap::new();
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut partners: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    let mut centroids: BTreeMap<usize, DVector<f64>> = BTreeMap::new();
    let mut masses: BTreeMap<usize, f64> = BTreeMap::new();

    for (i, p) in whitened.iter().enumerate() {
        clusters.insert(
            i,
            ClusterMeta {
                mass: 1.0,
                centroid: p.iter().copied().collect(),
            },
        );
        members.insert(i, vec![i]);
        centroids.insert(i, p.clone());
        masses.insert(i, 1.0);
        partners.insert(i, BTreeSet::new());
    }
    for (a, b) in constraints.iter() {
        partners.get_mut(&a).expect("constraint endpoint in range").insert(b);
        partners.get_mut(&b).expect("constraint endpoint in range").insert(a);
    }

    let ward = |ma: f64, mb: f64, ga: &DVector<f64>, gb: &DVector<f64>| -> f64 {
        ma * mb / (ma + mb) * (ga - gb).norm_squared()
    };

    // Cached merge costs, keyed (low id, high id); conflicts checked at scan
    // time because constraints propagate through membership.
    let mut delta: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            delta.insert((i, j), ward(1.0, 1.0, &whitened[i], &whitened[j]));
        }
    }

    let conflicts = |a: usize, b: usize,
                     partners: &BTreeMap<usize, BTreeSet<usize>>,
                     members: &BTreeMap<usize, Vec<usize>>| {
        let pa = &partners[&a];
        members[&b].iter().any(|leaf| pa.contains(leaf))
    };

    let mut merges = Vec::new();
    let mut next_id = n;
    let mut last_height = f64::NEG_INFINITY;
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        let ids: Vec<usize> = alive.iter().copied().collect();
        for (ia, &a) in ids.iter().enumerate() {
            for &b in &ids[ia + 1..] {
                if conflicts(a, b, &partners, &members) {
                    continue;
                }
                let d = delta[&(a, b)];
                let candidate = (d, a, b);
                if best.is_none_or(|(bd, ba, bb)| candidate < (bd, ba, bb)) {
                    best = Some(candidate);
                }
            }
        }
        let Some((height, a, b)) = best else { break };
        debug_assert!(
            height >= last_height - 1e-9 * last_height.abs().max(1.0),
            "ward heights must be non-decreasing"
        );
        last_height = height;

        let (ma, mb) = (masses[&a], masses[&b]);
        let mass = ma + mb;
        let centroid = (centroids[&a].clone() * ma + centroids[&b].clone() * mb) / mass;
        let mut merged_members = members.remove(&a).unwrap();
        merged_members.extend(members.remove(&b).unwrap());
        merged_members.sort_unstable();
        let mut merged_partners = partners.remove(&a).unwrap();
        merged_partners.extend(partners.remove(&b).unwrap());

        let id = next_id;
        next_id += 1;
        alive.remove(&a);
        alive.remove(&b);
        for &other in &alive {
            let d = ward(mass, masses[&other], &centroid, &centroids[&other]);
            delta.insert((other.min(id), other.max(id)), d);
        }
        alive.insert(id);
        clusters.insert(
            id,
            ClusterMeta {
                mass,
                centroid: centroid.iter().copied().collect(),
            },
        );
        members.insert(id, merged_members);
        partners.insert(id, merged_partners);
        centroids.insert(id, centroid);
        masses.insert(id, mass);
        merges.push(Merge { a, b, height, id });
    }

    Agglomeration {
        merges,
        clusters,
        members,
        roots: alive.into_iter().collect(),
    }
}

/// Unconstrained Ward hierarchical clustering of `points` in the whitened
/// space of `metric`. Produces exactly `n - 1` merges.
pub fn ward_hac(points: &[Vec<f64>], metric: &CovarianceModel) -> Result<Dendrogram> {
    if points.is_empty() {
        return Err(Error::EmptyInput("ward clustering needs at least one point"));
    }
    let whitened = whiten_all(points, metric)?;
    let agg = ward_agglomerate(&whitened, &CannotLinkSet::new());
    Ok(Dendrogram {
        leaves: (0..points.len()).collect(),
        merges: agg.merges,
        clusters: agg.clusters,
    })
}

fn silhouette_from_groups(dist: &[Vec<f64>], groups: &[Vec<usize>]) -> f64 {
    let points: Vec<usize> = groups.iter().flatten().copied().collect();
    let mut total = 0.0;
    for (gi, group) in groups.iter().enumerate() {
        for &i in group {
            if group.len() == 1 {
                continue; // singleton contributes 0
            }
            let a = group
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| dist[i][j])
                .sum::<f64>()
                / (group.len() - 1) as f64;
            let mut b = f64::INFINITY;
            for (gj, other) in groups.iter().enumerate() {
                if gj == gi || other.is_empty() {
                    continue;
                }
                let mean = other.iter().map(|&j| dist[i][j]).sum::<f64>() / other.len() as f64;
                b = b.min(mean);
            }
            let denom = a.max(b);
            if denom > 0.0 {
                total += (b - a) / denom;
            }
        }
    }
    total / points.len() as f64
}

/// Mean silhouette of a partition under the model's whitened distance:
/// `s(i) = (b(i) - a(i)) / max(a(i), b(i))`, singletons scoring 0.
pub fn silhouette_score(
    points: &[Vec<f64>],
    partition: &Partition,
    metric: &CovarianceModel,
) -> Result<f64> {
    if partition.k < 2 {
        return Err(Error::UndefinedScore(
            "silhouette needs at least two clusters".into(),
        ));
    }
    if partition.len() != points.len() {
        return Err(Error::DimensionMismatch {
            context: "silhouette partition",
            expected: points.len(),
            actual: partition.len(),
        });
    }
    let whitened = whiten_all(points, metric)?;
    let dist = distance_matrix(&whitened);
    Ok(silhouette_from_groups(&dist, &partition.groups()))
}

/// Choose the cut of a dendrogram (or forest tree): groups of leaf indices.
///
/// One point stays one cluster. Two points split iff their whitened distance
/// reaches `theta_pair`. Otherwise every level `k = 2..=n` is scored and the
/// best silhouette wins (smaller `k` on ties); if even the best stays below
/// `theta_single` the tree collapses to a single cluster.
pub(crate) fn silhouette_cut_groups(
    dendro: &Dendrogram,
    dist: &[Vec<f64>],
    theta_single: f64,
    theta_pair: f64,
) -> Vec<Vec<usize>> {
    let n = dendro.leaves.len();
    match n {
        0 => return Vec::new(),
        1 => return vec![dendro.leaves.clone()],
        2 => {
            let (i, j) = (dendro.leaves[0], dendro.leaves[1]);
            return if dist[i][j] < theta_pair {
                vec![vec![i, j]]
            } else {
                vec![vec![i], vec![j]]
            };
        }
        _ => {}
    }
    let mut best: Option<(f64, usize)> = None;
    for k in 2..=n {
        let groups = dendro.cut(k);
        let score = silhouette_from_groups(dist, &groups);
        if best.is_none_or(|(bs, _)| score > bs) {
            best = Some((score, k));
        }
    }
    let (best_score, best_k) = best.expect("at least one cut evaluated");
    if best_score < theta_single {
        let mut all = dendro.leaves.clone();
        all.sort_unstable();
        vec![all]
    } else {
        let mut groups = dendro.cut(best_k);
        groups.sort_by_key(|g| g[0]);
        groups
    }
}

/// Cut a dendrogram over contiguous leaves `0..n` at the silhouette-optimal
/// level and return the flat partition.
pub fn silhouette_cut(
    dendro: &Dendrogram,
    points: &[Vec<f64>],
    metric: &CovarianceModel,
    theta_single: f64,
    theta_pair: f64,
) -> Result<Partition> {
    let n = dendro.leaves.len();
    if n == 0 {
        return Ok(Partition {
            assignment: vec![],
            k: 0,
        });
    }
    if dendro.leaves.iter().enumerate().any(|(i, &l)| i != l) {
        return Err(Error::Validation(
            "silhouette_cut expects leaves numbered 0..n".into(),
        ));
    }
    let whitened = whiten_all(points, metric)?;
    let dist = distance_matrix(&whitened);
    let groups = silhouette_cut_groups(dendro, &dist, theta_single, theta_pair);
    Ok(Partition::from_groups(n, &groups))
}

/// Cluster one scene's covered segments into local speakers.
///
/// Local speaker ids start at `id_base` and follow the temporal order of each
/// cluster's first segment. Every covered segment must carry an embedding.
/// Pooled embeddings are duration-weighted means of raw member embeddings.
pub fn diarize_scene(
    scene: &DialogueScene,
    segments: &[SpeechSegment],
    metric: &CovarianceModel,
    theta_single: f64,
    theta_pair: f64,
    id_base: u32,
) -> Result<Vec<LocalSpeaker>> {
    if scene.covered_segments.is_empty() {
        return Ok(Vec::new());
    }
    let by_id: BTreeMap<SegmentId, &SpeechSegment> = segments.iter().map(|s| (s.id, s)).collect();
    let mut scene_segments = Vec::with_capacity(scene.covered_segments.len());
    let mut embeddings = Vec::with_capacity(scene.covered_segments.len());
    for sid in &scene.covered_segments {
        let seg = by_id.get(sid).ok_or_else(|| {
            Error::MissingData(format!("segment {sid} referenced by scene {} not loaded", scene.id))
        })?;
        let emb = seg.embedding.as_ref().ok_or_else(|| {
            Error::MissingData(format!("segment {sid} has no embedding"))
        })?;
        scene_segments.push(*seg);
        embeddings.push(emb.clone());
    }

    let dendro = ward_hac(&embeddings, metric)?;
    let partition = silhouette_cut(&dendro, &embeddings, metric, theta_single, theta_pair)?;

    let speakers = partition
        .groups()
        .into_iter()
        .enumerate()
        .map(|(gi, group)| {
            let member_segments: Vec<SegmentId> =
                group.iter().map(|&i| scene_segments[i].id).collect();
            let total_duration_ms: i64 =
                group.iter().map(|&i| scene_segments[i].duration_ms()).sum();
            let dim = embeddings[group[0]].len();
            let mut pooled = vec![0.0; dim];
            let weight_total: f64 = if total_duration_ms > 0 {
                total_duration_ms as f64
            } else {
                group.len() as f64
            };
            for &i in &group {
                let w = if total_duration_ms > 0 {
                    scene_segments[i].duration_ms() as f64
                } else {
                    1.0
                };
                for (p, &v) in pooled.iter_mut().zip(&embeddings[i]) {
                    *p += w * v;
                }
            }
            for p in &mut pooled {
                *p /= weight_total;
            }
            LocalSpeaker {
                id: LocalSpeakerId(id_base + gi as u32),
                scene: scene.id,
                member_segments,
                pooled_embedding: pooled,
                total_duration_ms,
            }
        })
        .collect();
    Ok(speakers)
}

/// Baseline clustering from shot alternation alone: each segment takes the
/// label of the shot on screen at its temporal midpoint (nearest shot when
/// the midpoint falls outside every shot). Cluster ids follow first
/// appearance among the scene's segments.
pub fn naive_alternation_baseline(
    scene: &DialogueScene,
    shots: &[Shot],
    labeling: &ShotLabeling,
    segments: &[SpeechSegment],
) -> Result<Partition> {
    let by_id: BTreeMap<SegmentId, &SpeechSegment> = segments.iter().map(|s| (s.id, s)).collect();
    let mut assignment = Vec::with_capacity(scene.covered_segments.len());
    let mut cluster_of_label: BTreeMap<usize, usize> = BTreeMap::new();
    for sid in &scene.covered_segments {
        let seg = by_id.get(sid).ok_or_else(|| {
            Error::MissingData(format!("segment {sid} referenced by scene {} not loaded", scene.id))
        })?;
        let mid = seg.time_span.midpoint_ms();
        let shot = shot_at(shots, mid).ok_or(Error::EmptyInput("baseline needs shots"))?;
        let label = labeling
            .label(shot.id)
            .ok_or_else(|| Error::Validation(format!("shot {} has no label", shot.id)))?;
        let next = cluster_of_label.len();
        let cluster = *cluster_of_label.entry(label.0).or_insert(next);
        assignment.push(cluster);
    }
    Ok(Partition {
        k: cluster_of_label.len(),
        assignment,
    })
}

/// Shot on screen at `t_ms`, or the nearest shot when `t_ms` lies outside
/// every shot span.
fn shot_at(shots: &[Shot], t_ms: i64) -> Option<&Shot> {
    shots
        .iter()
        .map(|s| {
            let d = if s.time_span.contains(t_ms) {
                0
            } else {
                (s.time_span.start_ms - t_ms)
                    .abs()
                    .min((t_ms - (s.time_span.end_ms - 1)).abs())
            };
            (d, s)
        })
        .min_by_key(|&(d, s)| (d, s.id))
        .map(|(_, s)| s)
}
