//! Second-stage clustering: merge recurring local speakers across scenes
//! under cannot-link constraints.
//!
//! Two local speakers sharing a scene can never be the same person, so their
//! merge cost is infinite, and the incompatibility is inherited by every
//! cluster containing them. Agglomeration therefore stops early, leaving a
//! forest whose trees are pairwise separated by at least one constraint; the
//! number of trees is a natural lower bound on the speaker count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local::{distance_matrix, silhouette_cut_groups, ward_agglomerate, whiten_all};
use crate::model::{
    CannotLinkSet, CovarianceModel, Dendrogram, LocalSpeaker, Merge, Partition,
};

/// Merge trees produced under cannot-link propagation, plus the constraints
/// that shaped them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedDendrogramForest {
    /// One dendrogram per surviving root, ordered by smallest leaf index.
    /// Leaf indices and cluster ids are global across the forest.
    pub trees: Vec<Dendrogram>,
    pub constraint_set: CannotLinkSet,
}

impl ConstrainedDendrogramForest {
    pub fn leaf_count(&self) -> usize {
        self.trees.iter().map(|t| t.leaves.len()).sum()
    }
}

/// Every unordered pair of distinct local speakers appearing in the same
/// scene, as positional indices into `locals`.
pub fn derive_cannot_links(locals: &[LocalSpeaker]) -> CannotLinkSet {
    let mut set = CannotLinkSet::new();
    for i in 0..locals.len() {
        for j in i + 1..locals.len() {
            if locals[i].scene == locals[j].scene {
                set.insert(i, j);
            }
        }
    }
    set
}

/// Ward agglomeration with cannot-link propagation. Merging stops when every
/// remaining pair is incompatible; the surviving roots become the forest.
pub fn constrained_hac(
    points: &[Vec<f64>],
    constraints: &CannotLinkSet,
    metric: &CovarianceModel,
) -> Result<ConstrainedDendrogramForest> {
    for (a, b) in constraints.iter() {
        if a >= points.len() || b >= points.len() {
            return Err(Error::Validation(format!(
                "cannot-link pair ({a},{b}) references a missing point"
            )));
        }
    }
    let whitened = whiten_all(points, metric)?;
    let agg = ward_agglomerate(&whitened, constraints);

    let mut trees = Vec::with_capacity(agg.roots.len());
    for &root in &agg.roots {
        // Collect the merge ids below this root, then keep chronological order.
        let mut in_tree: std::collections::BTreeSet<usize> = [root].into();
        for m in agg.merges.iter().rev() {
            if in_tree.contains(&m.id) {
                in_tree.insert(m.a);
                in_tree.insert(m.b);
            }
        }
        let merges: Vec<Merge> = agg
            .merges
            .iter()
            .filter(|m| in_tree.contains(&m.id))
            .copied()
            .collect();
        let leaves = agg.members[&root].clone();
        let clusters = agg
            .clusters
            .iter()
            .filter(|(id, _)| in_tree.contains(id))
            .map(|(id, meta)| (*id, meta.clone()))
            .collect();
        trees.push(Dendrogram {
            leaves,
            merges,
            clusters,
        });
    }
    trees.sort_by_key(|t| t.leaves[0]);

    Ok(ConstrainedDendrogramForest {
        trees,
        constraint_set: constraints.clone(),
    })
}

/// Silhouette-cut every tree of the forest independently and combine the
/// results; the total cluster count is at least the number of trees.
pub fn partition_forest(
    forest: &ConstrainedDendrogramForest,
    points: &[Vec<f64>],
    metric: &CovarianceModel,
    theta_single: f64,
    theta_pair: f64,
) -> Result<Partition> {
    if forest.leaf_count() != points.len() {
        return Err(Error::DimensionMismatch {
            context: "forest leaves vs points",
            expected: points.len(),
            actual: forest.leaf_count(),
        });
    }
    if points.is_empty() {
        return Ok(Partition {
            assignment: vec![],
            k: 0,
        });
    }
    let whitened = whiten_all(points, metric)?;
    let dist = distance_matrix(&whitened);
    let mut groups = Vec::new();
    for tree in &forest.trees {
        groups.extend(silhouette_cut_groups(tree, &dist, theta_single, theta_pair));
    }
    groups.sort_by_key(|g| g[0]);
    Ok(Partition::from_groups(points.len(), &groups))
}

/// The unconstrained comparison arm: plain Ward plus silhouette cut over the
/// same pooled local-speaker embeddings.
pub fn unconstrained_global(
    points: &[Vec<f64>],
    metric: &CovarianceModel,
    theta_single: f64,
    theta_pair: f64,
) -> Result<Partition> {
    if points.is_empty() {
        return Ok(Partition {
            assignment: vec![],
            k: 0,
        });
    }
    let dendro = crate::local::ward_hac(points, metric)?;
    crate::local::silhouette_cut(&dendro, points, metric, theta_single, theta_pair)
}

/// Number of speaker classes in a partition.
pub fn estimate_speaker_count(partition: &Partition) -> usize {
    partition.k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::ward_hac;
    use crate::model::{LocalSpeakerId, SceneId, SegmentId};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn local(id: u32, scene: u32, segments: &[u32]) -> LocalSpeaker {
        LocalSpeaker {
            id: LocalSpeakerId(id),
            scene: SceneId(scene),
            member_segments: segments.iter().map(|&s| SegmentId(s)).collect(),
            pooled_embedding: vec![0.0],
            total_duration_ms: 1000,
        }
    }

    #[test]
    fn cannot_links_from_shared_scene() {
        let locals = vec![local(0, 0, &[0]), local(1, 0, &[1]), local(2, 1, &[2])];
        let set = derive_cannot_links(&locals);
        assert_eq!(set.len(), 1);
        assert!(set.contains(0, 1));
        assert!(!set.contains(0, 2));
    }

    #[test]
    fn three_speakers_one_scene_form_triangle() {
        let locals = vec![local(0, 7, &[0]), local(1, 7, &[1]), local(2, 7, &[2])];
        let set = derive_cannot_links(&locals);
        assert_eq!(set.len(), 3);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            assert!(set.contains(a, b));
        }
    }

    #[test]
    fn cannot_links_match_segment_inclusion_bruteforce() {
        // Brute force realization of the incompatibility rule: two local
        // speakers are constrained iff the union of their segment sets is
        // contained in some scene's covered segments.
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let n_scenes = rng.gen_range(1..5usize);
            let mut locals = Vec::new();
            let mut scene_segments: Vec<Vec<u32>> = vec![Vec::new(); n_scenes];
            let mut next_seg = 0u32;
            for scene in 0..n_scenes {
                for _ in 0..rng.gen_range(1..4usize) {
                    let segs: Vec<u32> = (0..rng.gen_range(1..3))
                        .map(|_| {
                            let s = next_seg;
                            next_seg += 1;
                            s
                        })
                        .collect();
                    scene_segments[scene].extend(&segs);
                    locals.push(local(locals.len() as u32, scene as u32, &segs));
                }
            }
            let fast = derive_cannot_links(&locals);
            for i in 0..locals.len() {
                for j in i + 1..locals.len() {
                    let union: Vec<u32> = locals[i]
                        .member_segments
                        .iter()
                        .chain(&locals[j].member_segments)
                        .map(|s| s.0)
                        .collect();
                    let brute = scene_segments
                        .iter()
                        .any(|scene| union.iter().all(|s| scene.contains(s)));
                    assert_eq!(fast.contains(i, j), brute, "pair {i},{j}");
                }
            }
        }
    }

    /// The four-item worked example: two scenes with two local speakers
    /// each, cross-scene recurrence, and the within-scene pairs forbidden.
    fn worked_example() -> (Vec<Vec<f64>>, CannotLinkSet) {
        // Items: 0 = first speaker scene 1, 1 = first speaker scene 2,
        //        2 = second speaker scene 1, 3 = second speaker scene 2.
        let points = vec![
            vec![0.0, 1.5],
            vec![0.5, 1.5],
            vec![0.0, 0.0],
            vec![0.6, 0.0],
        ];
        let constraints: CannotLinkSet = [(0, 2), (1, 3)].into_iter().collect();
        (points, constraints)
    }

    #[test]
    fn worked_example_yields_two_trees() {
        let (points, constraints) = worked_example();
        let metric = CovarianceModel::identity(2);
        let forest = constrained_hac(&points, &constraints, &metric).unwrap();
        assert_eq!(forest.trees.len(), 2);
        // First merge joins the closest unconstrained pair {0,1}; the merged
        // class inherits both constraints, so only {2,3} can follow.
        let all_merges: Vec<(usize, usize)> = forest
            .trees
            .iter()
            .flat_map(|t| t.merges.iter().map(|m| (m.a, m.b)))
            .collect();
        assert!(all_merges.contains(&(0, 1)));
        assert!(all_merges.contains(&(2, 3)));
        assert_eq!(forest.trees[0].leaves, vec![0, 1]);
        assert_eq!(forest.trees[1].leaves, vec![2, 3]);

        let p = partition_forest(&forest, &points, &metric, 0.1, 2.0).unwrap();
        assert_eq!(p.k, 2);
        assert_eq!(p.assignment[0], p.assignment[1]);
        assert_eq!(p.assignment[2], p.assignment[3]);
        assert_ne!(p.assignment[0], p.assignment[2]);
    }

    #[test]
    fn no_root_contains_a_constrained_pair() {
        let mut rng = StdRng::seed_from_u64(11);
        let metric = CovarianceModel::identity(2);
        for _ in 0..100 {
            let n = rng.gen_range(2..8);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect())
                .collect();
            let mut constraints = CannotLinkSet::new();
            for _ in 0..rng.gen_range(0..4) {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b {
                    constraints.insert(a, b);
                }
            }
            let forest = constrained_hac(&points, &constraints, &metric).unwrap();
            for tree in &forest.trees {
                for (a, b) in constraints.iter() {
                    assert!(
                        !(tree.leaves.contains(&a) && tree.leaves.contains(&b)),
                        "root holds constrained pair ({a},{b})"
                    );
                }
            }
            // Irreducibility: every pair of trees is separated by a constraint.
            for i in 0..forest.trees.len() {
                for j in i + 1..forest.trees.len() {
                    let spanned = constraints.iter().any(|(a, b)| {
                        (forest.trees[i].leaves.contains(&a)
                            && forest.trees[j].leaves.contains(&b))
                            || (forest.trees[i].leaves.contains(&b)
                                && forest.trees[j].leaves.contains(&a))
                    });
                    assert!(spanned, "trees {i},{j} could still merge");
                }
            }
        }
    }

    #[test]
    fn empty_constraints_reduce_to_plain_ward() {
        let mut rng = StdRng::seed_from_u64(29);
        let metric = CovarianceModel::identity(3);
        for _ in 0..30 {
            let n = rng.gen_range(1..9);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let forest = constrained_hac(&points, &CannotLinkSet::new(), &metric).unwrap();
            assert_eq!(forest.trees.len(), 1);
            let plain = ward_hac(&points, &metric).unwrap();
            assert_eq!(forest.trees[0].merges, plain.merges);
            assert_eq!(forest.trees[0].leaves, plain.leaves);

            let via_forest = partition_forest(&forest, &points, &metric, 0.1, 1.0).unwrap();
            let direct = unconstrained_global(&points, &metric, 0.1, 1.0).unwrap();
            assert_eq!(via_forest, direct);
        }
    }

    #[test]
    fn per_tree_heights_stay_monotone() {
        let mut rng = StdRng::seed_from_u64(41);
        let metric = CovarianceModel::identity(2);
        for _ in 0..50 {
            let n = rng.gen_range(2..9);
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect())
                .collect();
            let mut constraints = CannotLinkSet::new();
            for _ in 0..rng.gen_range(0..3) {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b {
                    constraints.insert(a, b);
                }
            }
            let forest = constrained_hac(&points, &constraints, &metric).unwrap();
            for tree in &forest.trees {
                for w in tree.merges.windows(2) {
                    assert!(w[1].height >= w[0].height - 1e-12);
                }
            }
        }
    }

    #[test]
    fn tree_count_bounded_below_by_largest_clique() {
        // Three mutually constrained items can never share a tree.
        let points = vec![vec![0.0], vec![0.1], vec![0.2], vec![5.0]];
        let constraints: CannotLinkSet = [(0, 1), (0, 2), (1, 2)].into_iter().collect();
        let metric = CovarianceModel::identity(1);
        let forest = constrained_hac(&points, &constraints, &metric).unwrap();
        assert!(forest.trees.len() >= 3);
    }

    #[test]
    fn two_tree_forest_with_split_trees_counts_four() {
        // One constraint forces two trees; each tree holds two far-apart
        // pairs, so the per-tree cuts contribute two clusters each.
        let points = vec![
            vec![0.0],
            vec![0.3],
            vec![50.0],
            vec![50.3],
            vec![100.0],
            vec![100.3],
            vec![150.0],
            vec![150.3],
        ];
        // Constrain across the two halves so they cannot join.
        let constraints: CannotLinkSet =
            [(0, 4), (0, 6), (2, 4), (2, 6)].into_iter().collect();
        let metric = CovarianceModel::identity(1);
        let forest = constrained_hac(&points, &constraints, &metric).unwrap();
        assert_eq!(forest.trees.len(), 2);
        let p = partition_forest(&forest, &points, &metric, 0.1, 1.0).unwrap();
        assert_eq!(p.k, 4);
    }

    #[test]
    fn singleton_forest_counts_trees() {
        let points = vec![vec![0.0], vec![1.0], vec![2.0]];
        let constraints: CannotLinkSet = [(0, 1), (0, 2), (1, 2)].into_iter().collect();
        let metric = CovarianceModel::identity(1);
        let forest = constrained_hac(&points, &constraints, &metric).unwrap();
        assert_eq!(forest.trees.len(), 3);
        let p = partition_forest(&forest, &points, &metric, 0.1, 0.5).unwrap();
        assert_eq!(estimate_speaker_count(&p), 3);
    }

    #[test]
    fn empty_partition_counts_zero() {
        let p = Partition {
            assignment: vec![],
            k: 0,
        };
        assert_eq!(estimate_speaker_count(&p), 0);
    }

    #[test]
    fn single_point_unconstrained_is_one_speaker() {
        let metric = CovarianceModel::identity(2);
        let p = unconstrained_global(&[vec![1.0, 2.0]], &metric, 0.1, 1.0).unwrap();
        assert_eq!(p.k, 1);
    }
}
