//! Brute-force reference implementations used to validate the main
//! algorithms. Each oracle recomputes everything from scratch on every step
//! and shares no code with the implementation it checks, trading speed for
//! obviousness.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{
    CannotLinkSet, CovarianceModel, Dendrogram, IndexSpan, LabelId, Partition,
};
use crate::patterns::{MotifKind, MotifMatch};

/// Per-pair scan for alternating motifs: for every unordered pair of distinct
/// labels, walk the sequence and collect its maximal two-label alternating
/// runs, then keep the longest odd prefix of every run of length >= 3.
pub fn oracle_motifs(labels: &[LabelId]) -> Vec<MotifMatch> {
    let mut alphabet: Vec<LabelId> = labels.to_vec();
    alphabet.sort_unstable();
    alphabet.dedup();

    let mut found = Vec::new();
    for (i, &x) in alphabet.iter().enumerate() {
        for &y in &alphabet[i + 1..] {
            let mut pos = 0;
            while pos < labels.len() {
                if labels[pos] != x && labels[pos] != y {
                    pos += 1;
                    continue;
                }
                let mut end = pos + 1;
                while end < labels.len()
                    && (labels[end] == x || labels[end] == y)
                    && labels[end] != labels[end - 1]
                {
                    end += 1;
                }
                let len = end - pos;
                if len >= 3 {
                    let odd = if len % 2 == 1 { len } else { len - 1 };
                    found.push(MotifMatch {
                        pair: (labels[pos], labels[pos + 1]),
                        index_span: IndexSpan::new(pos, pos + odd),
                        kind: MotifKind::Strict,
                    });
                }
                pos = end;
            }
        }
    }
    found.sort_by_key(|m| (m.index_span, m.pair));
    found
}

/// Forest produced by the reference constrained agglomeration.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleForest {
    /// `(a, b, new_id, height)` per merge, in order.
    pub merges: Vec<(usize, usize, usize, f64)>,
    /// Sorted leaf sets of the surviving roots, ordered by smallest leaf.
    pub trees: Vec<Vec<usize>>,
}

/// From-scratch constrained Ward agglomeration: at every step the oracle
/// recomputes all centroids from raw members, re-derives every pairwise merge
/// cost, and tests the incompatibility rule by scanning all member pairs.
pub fn oracle_hac(
    points: &[Vec<f64>],
    constraints: &CannotLinkSet,
    metric: &CovarianceModel,
) -> Result<OracleForest> {
    let whitened: Vec<Vec<f64>> = points
        .iter()
        .map(|p| metric.whiten(p).map(|v| v.iter().copied().collect()))
        .collect::<Result<_>>()?;
    let dim = whitened.first().map_or(0, |p| p.len());

    // (cluster id, member leaves)
    let mut clusters: Vec<(usize, Vec<usize>)> =
        (0..points.len()).map(|i| (i, vec![i])).collect();
    let mut next_id = points.len();
    let mut merges = Vec::new();

    loop {
        let centroid = |members: &[usize]| -> Vec<f64> {
            let mut c = vec![0.0; dim];
            for &m in members {
                for (acc, &v) in c.iter_mut().zip(&whitened[m]) {
                    *acc += v;
                }
            }
            for v in &mut c {
                *v /= members.len() as f64;
            }
            c
        };
        let incompatible = |a: &[usize], b: &[usize]| {
            a.iter()
                .any(|&x| b.iter().any(|&y| constraints.contains(x, y)))
        };

        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let (ida, ma) = (&clusters[i].0, &clusters[i].1);
                let (idb, mb) = (&clusters[j].0, &clusters[j].1);
                if incompatible(ma, mb) {
                    continue;
                }
                let (ga, gb) = (centroid(ma), centroid(mb));
                let d2: f64 = ga
                    .iter()
                    .zip(&gb)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let (na, nb) = (ma.len() as f64, mb.len() as f64);
                let delta = na * nb / (na + nb) * d2;
                let (lo, hi) = (*ida.min(idb), *ida.max(idb));
                let cand = (delta, lo, hi);
                if best.is_none_or(|(bd, ba, bb)| cand < (bd, ba, bb)) {
                    best = Some(cand);
                }
            }
        }
        let Some((height, a, b)) = best else { break };
        let pa = clusters.iter().position(|(id, _)| *id == a).unwrap();
        let pb = clusters.iter().position(|(id, _)| *id == b).unwrap();
        let mut members = clusters[pa].1.clone();
        members.extend(clusters[pb].1.clone());
        members.sort_unstable();
        clusters.retain(|(id, _)| *id != a && *id != b);
        clusters.push((next_id, members));
        merges.push((a, b, next_id, height));
        next_id += 1;
    }

    let mut trees: Vec<Vec<usize>> = clusters.into_iter().map(|(_, m)| m).collect();
    trees.sort_by_key(|t| t[0]);
    Ok(OracleForest { merges, trees })
}

/// Exhaustive silhouette cut: every level of the dendrogram is re-derived
/// with an independent merge replay and scored with a direct silhouette
/// computation over per-pair whitened distances.
pub fn oracle_silhouette_cut(
    dendro: &Dendrogram,
    points: &[Vec<f64>],
    metric: &CovarianceModel,
    theta_single: f64,
    theta_pair: f64,
) -> Result<Vec<Vec<usize>>> {
    let whitened: Vec<Vec<f64>> = points
        .iter()
        .map(|p| metric.whiten(p).map(|v| v.iter().copied().collect()))
        .collect::<Result<_>>()?;
    let dist = |a: usize, b: usize| -> f64 {
        whitened[a]
            .iter()
            .zip(&whitened[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };

    let n = dendro.leaves.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![dendro.leaves.clone()]);
    }
    if n == 2 {
        let (a, b) = (dendro.leaves[0], dendro.leaves[1]);
        return Ok(if dist(a, b) < theta_pair {
            vec![vec![a, b]]
        } else {
            vec![vec![a], vec![b]]
        });
    }

    // Independent merge replay: sets keyed by cluster id.
    let groups_at = |keep: usize| -> Vec<Vec<usize>> {
        let mut sets: BTreeMap<usize, Vec<usize>> =
            dendro.leaves.iter().map(|&l| (l, vec![l])).collect();
        for m in dendro.merges.iter().take(keep) {
            let mut merged = sets.remove(&m.a).unwrap();
            merged.extend(sets.remove(&m.b).unwrap());
            merged.sort_unstable();
            sets.insert(m.id, merged);
        }
        let mut g: Vec<Vec<usize>> = sets.into_values().collect();
        g.sort_by_key(|v| v[0]);
        g
    };

    let silhouette = |groups: &[Vec<usize>]| -> f64 {
        let total_points: usize = groups.iter().map(|g| g.len()).sum();
        let mut sum = 0.0;
        for (gi, g) in groups.iter().enumerate() {
            for &p in g {
                if g.len() == 1 {
                    continue;
                }
                let a: f64 = g
                    .iter()
                    .filter(|&&q| q != p)
                    .map(|&q| dist(p, q))
                    .sum::<f64>()
                    / (g.len() - 1) as f64;
                let mut b = f64::INFINITY;
                for (gj, other) in groups.iter().enumerate() {
                    if gi == gj {
                        continue;
                    }
                    b = b.min(
                        other.iter().map(|&q| dist(p, q)).sum::<f64>() / other.len() as f64,
                    );
                }
                if a.max(b) > 0.0 {
                    sum += (b - a) / a.max(b);
                }
            }
        }
        sum / total_points as f64
    };

    let roots = n - dendro.merges.len();
    let mut best: Option<(f64, usize)> = None;
    for k in 2.max(roots)..=n {
        let groups = groups_at(n - k);
        let score = silhouette(&groups);
        if best.is_none_or(|(bs, _)| score > bs) {
            best = Some((score, k));
        }
    }
    let (score, k) = best.expect("evaluated at least one level");
    if score < theta_single {
        let mut all = dendro.leaves.clone();
        all.sort_unstable();
        Ok(vec![all])
    } else {
        Ok(groups_at(n - k))
    }
}

/// Exhaustive optimal-mapping DER: enumerate every injective mapping between
/// hypothesis clusters and reference speakers. Rejects more than six
/// speakers on either side.
pub fn oracle_der_mapping(
    hyp: &Partition,
    refs: &[String],
    durations_ms: &[i64],
) -> Result<f64> {
    assert_eq!(hyp.len(), refs.len());
    assert_eq!(hyp.len(), durations_ms.len());
    let mut ref_names: Vec<&str> = refs.iter().map(|s| s.as_str()).collect();
    ref_names.sort_unstable();
    ref_names.dedup();
    if hyp.k > 6 || ref_names.len() > 6 {
        return Err(Error::Validation(
            "exhaustive mapping supports at most six speakers per side".into(),
        ));
    }
    let total: i64 = durations_ms.iter().sum();
    if total == 0 {
        return Ok(0.0);
    }
    let mut weight = vec![vec![0i64; ref_names.len()]; hyp.k];
    for ((&c, r), &d) in hyp.assignment.iter().zip(refs).zip(durations_ms) {
        let rid = ref_names.iter().position(|&n| n == r).unwrap();
        weight[c][rid] += d;
    }

    fn enumerate(weight: &[Vec<i64>], cluster: usize, used: &mut Vec<bool>) -> i64 {
        if cluster == weight.len() {
            return 0;
        }
        // Leave the cluster unmapped.
        let mut best = enumerate(weight, cluster + 1, used);
        for r in 0..used.len() {
            if !used[r] {
                used[r] = true;
                best = best.max(weight[cluster][r] + enumerate(weight, cluster + 1, used));
                used[r] = false;
            }
        }
        best
    }
    let mut used = vec![false; ref_names.len()];
    let attributed = enumerate(&weight, 0, &mut used);
    Ok(1.0 - attributed as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LabelId;

    fn labels(s: &str) -> Vec<LabelId> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| LabelId(c as usize - 'a' as usize))
            .collect()
    }

    #[test]
    fn oracle_finds_minimal_alternation() {
        let found = oracle_motifs(&labels("ababa"));
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].index_span, IndexSpan::new(0, 5));
    }

    #[test]
    fn oracle_single_item_identity() {
        let metric = CovarianceModel::identity(1);
        let forest = oracle_hac(&[vec![1.0]], &CannotLinkSet::new(), &metric).unwrap();
        assert!(forest.merges.is_empty());
        assert_eq!(forest.trees, vec![vec![0]]);
    }

    #[test]
    fn oracle_worked_example_two_trees() {
        let points = vec![
            vec![0.0, 1.5],
            vec![0.5, 1.5],
            vec![0.0, 0.0],
            vec![0.6, 0.0],
        ];
        let constraints: CannotLinkSet = [(0, 2), (1, 3)].into_iter().collect();
        let metric = CovarianceModel::identity(2);
        let forest = oracle_hac(&points, &constraints, &metric).unwrap();
        assert_eq!(forest.trees.len(), 2);
        assert_eq!(forest.merges.len(), 2);
        assert_eq!((forest.merges[0].0, forest.merges[0].1), (0, 1));
        assert_eq!((forest.merges[1].0, forest.merges[1].1), (2, 3));
    }

    #[test]
    fn oracle_der_rejects_many_speakers() {
        let hyp = Partition {
            assignment: (0..7).collect(),
            k: 7,
        };
        let refs: Vec<String> = (0..7).map(|i| format!("s{i}")).collect();
        let durations = vec![100; 7];
        assert!(oracle_der_mapping(&hyp, &refs, &durations).is_err());
    }

    #[test]
    fn oracle_der_hand_case() {
        let hyp = Partition {
            assignment: vec![0, 0],
            k: 1,
        };
        let refs = vec!["a".to_string(), "b".to_string()];
        assert_eq!(oracle_der_mapping(&hyp, &refs, &[500, 500]).unwrap(), 0.5);
    }
}
