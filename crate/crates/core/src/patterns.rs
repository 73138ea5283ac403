//! Detection of alternating-shot dialogue motifs in the shot-label string.
//!
//! A dialogue filmed under the 180-degree rule shows up as a run of two
//! recurring shot labels `l1 l2 l1 ... l2 l1`. Strict motifs are the maximal
//! such runs; two extensions then raise coverage: isolated `l1 l2` pairs of an
//! already-detected couple count too, and motifs sharing a label whose spans
//! touch merge into a single scene (one character filmed from two angles).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{
    interval_overlap, DialogueScene, IndexSpan, LabelId, SceneId, SegmentId, Shot, SpeechSegment,
    TimeSpan,
};
use crate::util::DisjointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotifKind {
    Strict,
    IsolatedPair,
}

/// A maximal occurrence of the alternating pattern for one label pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MotifMatch {
    /// `(l1, l2)`: the span starts (and for strict motifs ends) with `l1`.
    pub pair: (LabelId, LabelId),
    pub index_span: IndexSpan,
    pub kind: MotifKind,
}

impl MotifMatch {
    fn unordered_pair(&self) -> (LabelId, LabelId) {
        let (a, b) = self.pair;
        (a.min(b), a.max(b))
    }
}

/// A maximal substring alternating between exactly two distinct labels.
struct AlternatingRun {
    start: usize,
    len: usize,
}

/// All maximal two-label alternating runs of length >= 2, left to right.
///
/// Runs of different pairs may overlap by one shot (`..l1 l2 l1 l3 l1..`);
/// runs of the same pair are disjoint.
fn alternating_runs(labels: &[LabelId]) -> Vec<AlternatingRun> {
    let n = labels.len();
    if n < 2 {
        return Vec::new();
    }
    // ext[i]: length of the maximal run starting at i over (labels[i], labels[i+1]).
    let mut ext = vec![1usize; n];
    for i in (0..n - 1).rev() {
        if labels[i] == labels[i + 1] {
            ext[i] = 1;
        } else if i + 2 < n && labels[i + 2] == labels[i] {
            ext[i] = ext[i + 1] + 1;
        } else {
            ext[i] = 2;
        }
    }
    let mut runs = Vec::new();
    for i in 0..n - 1 {
        if ext[i] < 2 {
            continue;
        }
        // Skip continuations: the run starting at i-1 already covers this span.
        let is_continuation =
            i > 0 && labels[i - 1] != labels[i] && labels[i + 1] == labels[i - 1];
        if !is_continuation {
            runs.push(AlternatingRun { start: i, len: ext[i] });
        }
    }
    runs
}

/// Every maximal strict motif `l1 (l2 l1)+` over every label pair, ordered
/// by span position.
///
/// Each maximal alternating run of length >= 3 yields exactly one match: its
/// longest odd-length prefix, so the span starts and ends with the same label.
pub fn detect_strict_motifs(labels: &[LabelId]) -> Vec<MotifMatch> {
    let mut found: Vec<MotifMatch> = alternating_runs(labels)
        .iter()
        .filter(|r| r.len >= 3)
        .map(|r| {
            let odd_len = if r.len % 2 == 1 { r.len } else { r.len - 1 };
            MotifMatch {
                pair: (labels[r.start], labels[r.start + 1]),
                index_span: IndexSpan::new(r.start, r.start + odd_len),
                kind: MotifKind::Strict,
            }
        })
        .collect();
    found.sort_by_key(|m| (m.index_span, m.pair));
    found
}

/// Apply both coverage extensions and group matches into dialogue scenes.
///
/// Extension 1: isolated `l1 l2` / `l2 l1` adjacencies of a pair that has a
/// strict motif somewhere in the episode become isolated-pair matches.
/// Extension 2: matches sharing a label whose spans overlap or touch merge
/// into one scene. Remaining matches become scenes of their own. Scene time
/// spans are the union hull of the member shots; `covered_segments` stays
/// empty until [`assign_segments`] runs.
pub fn apply_extensions(
    strict: &[MotifMatch],
    labels: &[LabelId],
    shots: &[Shot],
) -> Vec<DialogueScene> {
    let strict_pairs: BTreeSet<(LabelId, LabelId)> =
        strict.iter().map(|m| m.unordered_pair()).collect();

    let mut matches: Vec<MotifMatch> = strict.to_vec();
    for run in alternating_runs(labels) {
        if run.len != 2 {
            continue;
        }
        let m = MotifMatch {
            pair: (labels[run.start], labels[run.start + 1]),
            index_span: IndexSpan::new(run.start, run.start + 2),
            kind: MotifKind::IsolatedPair,
        };
        if strict_pairs.contains(&m.unordered_pair()) {
            matches.push(m);
        }
    }
    matches.sort();

    // Merge matches that share a label and whose spans overlap or touch.
    let mut dsu = DisjointSet::new(matches.len());
    for i in 0..matches.len() {
        for j in i + 1..matches.len() {
            let (a, b) = (&matches[i], &matches[j]);
            let share_label = a.pair.0 == b.pair.0
                || a.pair.0 == b.pair.1
                || a.pair.1 == b.pair.0
                || a.pair.1 == b.pair.1;
            if share_label && a.index_span.touches(&b.index_span) {
                dsu.union(i, j);
            }
        }
    }

    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..matches.len() {
        components.entry(dsu.find(i)).or_default().push(i);
    }

    let mut scenes: Vec<DialogueScene> = components
        .values()
        .map(|member_ids| {
            let members: Vec<&MotifMatch> = member_ids.iter().map(|&i| &matches[i]).collect();
            let mut label_set = BTreeSet::new();
            for m in &members {
                label_set.insert(m.pair.0);
                label_set.insert(m.pair.1);
            }
            let shot_spans = coalesce_spans(members.iter().map(|m| m.index_span));
            let time_span = hull_of_shots(&shot_spans, shots);
            DialogueScene {
                id: SceneId(0), // renumbered below
                labels: label_set,
                shot_spans,
                time_span,
                covered_segments: Vec::new(),
            }
        })
        .collect();

    scenes.sort_by_key(|s| (s.shot_spans[0].start, s.shot_spans[0].end));
    for (i, s) in scenes.iter_mut().enumerate() {
        s.id = SceneId(i as u32);
    }
    scenes
}

/// Sort spans and coalesce any that overlap or touch into maximal intervals.
fn coalesce_spans(spans: impl Iterator<Item = IndexSpan>) -> Vec<IndexSpan> {
    let mut spans: Vec<IndexSpan> = spans.collect();
    spans.sort();
    let mut out: Vec<IndexSpan> = Vec::new();
    for s in spans {
        match out.last_mut() {
            Some(last) if s.start <= last.end => last.end = last.end.max(s.end),
            _ => out.push(s),
        }
    }
    out
}

fn hull_of_shots(spans: &[IndexSpan], shots: &[Shot]) -> TimeSpan {
    let mut hull: Option<TimeSpan> = None;
    for span in spans {
        for shot in &shots[span.start..span.end] {
            hull = Some(match hull {
                Some(h) => h.hull(&shot.time_span),
                None => shot.time_span,
            });
        }
    }
    hull.unwrap_or(TimeSpan::new(0, 0))
}

/// Assign each segment to at most one scene: it must overlap a scene's time
/// span by at least half its duration, and among qualifying scenes the
/// largest overlap wins (earlier scene on ties). Returns the scenes with
/// `covered_segments` filled.
pub fn assign_segments(
    scenes: &[DialogueScene],
    segments: &[SpeechSegment],
) -> Vec<DialogueScene> {
    let mut out: Vec<DialogueScene> = scenes.to_vec();
    for scene in &mut out {
        scene.covered_segments.clear();
    }
    for seg in segments {
        let mut best: Option<(i64, usize)> = None;
        for (idx, scene) in out.iter().enumerate() {
            let overlap = interval_overlap(seg.time_span, scene.time_span);
            if 2 * overlap < seg.duration_ms() {
                continue;
            }
            // Strictly larger overlap wins; scan order keeps the earlier
            // scene on ties.
            if best.is_none_or(|(b, _)| overlap > b) {
                best = Some((overlap, idx));
            }
        }
        if let Some((_, idx)) = best {
            out[idx].covered_segments.push(seg.id);
        }
    }
    out
}

/// Coverage and per-scene speech statistics for a detected scene set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifStatistics {
    pub scene_count: usize,
    /// Covered speech time as a percentage of total speech time.
    pub coverage_pct: f64,
    /// Mean covered speech time per scene, in seconds.
    pub mean_speech_secs_per_scene: f64,
    /// Mean number of distinct reference speakers per scene, when reference
    /// speakers are known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_speakers_per_scene: Option<f64>,
    /// Percentage of speakers holding at least 5% of total speech time that
    /// appear in at least one scene, when reference speakers are known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub major_speaker_coverage_pct: Option<f64>,
}

pub fn motif_statistics(
    scenes: &[DialogueScene],
    segments: &[SpeechSegment],
) -> MotifStatistics {
    let by_id: BTreeMap<SegmentId, &SpeechSegment> =
        segments.iter().map(|s| (s.id, s)).collect();
    let total_ms: i64 = segments.iter().map(|s| s.duration_ms()).sum();

    let mut covered_ms = 0i64;
    let mut per_scene_ms = Vec::new();
    let mut per_scene_speakers = Vec::new();
    let mut covered_speakers: BTreeSet<&str> = BTreeSet::new();
    for scene in scenes {
        let mut scene_ms = 0i64;
        let mut speakers: BTreeSet<&str> = BTreeSet::new();
        for sid in &scene.covered_segments {
            let seg = by_id[sid];
            scene_ms += seg.duration_ms();
            if let Some(sp) = &seg.ref_speaker {
                speakers.insert(sp);
                covered_speakers.insert(sp);
            }
        }
        covered_ms += scene_ms;
        per_scene_ms.push(scene_ms);
        per_scene_speakers.push(speakers.len());
    }

    let coverage_pct = if total_ms > 0 {
        100.0 * covered_ms as f64 / total_ms as f64
    } else {
        0.0
    };
    let mean_speech_secs_per_scene = if scenes.is_empty() {
        0.0
    } else {
        per_scene_ms.iter().sum::<i64>() as f64 / 1000.0 / scenes.len() as f64
    };

    let have_refs = segments.iter().any(|s| s.ref_speaker.is_some());
    let (mean_speakers_per_scene, major_speaker_coverage_pct) = if have_refs {
        let mean_speakers = if scenes.is_empty() {
            0.0
        } else {
            per_scene_speakers.iter().sum::<usize>() as f64 / scenes.len() as f64
        };
        let mut talk_time: BTreeMap<&str, i64> = BTreeMap::new();
        for seg in segments {
            if let Some(sp) = &seg.ref_speaker {
                *talk_time.entry(sp).or_insert(0) += seg.duration_ms();
            }
        }
        let major: Vec<&str> = talk_time
            .iter()
            .filter(|(_, &t)| 20 * t >= total_ms)
            .map(|(&s, _)| s)
            .collect();
        let pct = if major.is_empty() {
            0.0
        } else {
            let in_scenes = major
                .iter()
                .filter(|s| covered_speakers.contains(*s))
                .count();
            100.0 * in_scenes as f64 / major.len() as f64
        };
        (Some(mean_speakers), Some(pct))
    } else {
        (None, None)
    };

    MotifStatistics {
        scene_count: scenes.len(),
        coverage_pct,
        mean_speech_secs_per_scene,
        mean_speakers_per_scene,
        major_speaker_coverage_pct,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FrameDescriptor, SegmentId, Shot, ShotId, BLOCK_COUNT};

    fn labels(s: &str) -> Vec<LabelId> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| LabelId(c as usize - 'a' as usize))
            .collect()
    }

    fn l(c: char) -> LabelId {
        LabelId(c as usize - 'a' as usize)
    }

    /// One shot per label, 1000 ms each, starting at t=0.
    fn shots_for(labels: &[LabelId]) -> Vec<Shot> {
        let frame = FrameDescriptor::new(0, 0, vec![vec![1u32; 4]; BLOCK_COUNT]).unwrap();
        labels
            .iter()
            .enumerate()
            .map(|(i, &lab)| Shot {
                id: ShotId(i),
                frame_span: IndexSpan::new(i, i + 1),
                time_span: TimeSpan::new(i as i64 * 1000, (i as i64 + 1) * 1000),
                first_frame: frame.clone(),
                last_frame: frame.clone(),
                label: Some(lab),
            })
            .collect()
    }

    fn seg(id: u32, start: i64, end: i64) -> SpeechSegment {
        SpeechSegment {
            id: SegmentId(id),
            time_span: TimeSpan::new(start, end),
            text: None,
            embedding: None,
            ref_speaker: None,
        }
    }

    #[test]
    fn minimal_alternation_is_one_match() {
        let seq = labels("ababa");
        let found = detect_strict_motifs(&seq);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].pair, (l('a'), l('b')));
        assert_eq!(found[0].index_span, IndexSpan::new(0, 5));
        assert_eq!(found[0].kind, MotifKind::Strict);
    }

    #[test]
    fn no_alternation_no_match() {
        assert!(detect_strict_motifs(&labels("abcab")).is_empty());
    }

    #[test]
    fn even_runs_truncate_to_odd() {
        let seq = labels("abab");
        let found = detect_strict_motifs(&seq);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].index_span, IndexSpan::new(0, 3));
        assert_eq!(found[0].pair, (l('a'), l('b')));
    }

    #[test]
    fn strict_match_spans_verify_alternation() {
        for s in ["ababa", "cabab", "ababac", "xaya abab cdcd", "abcbcbca"] {
            let seq = labels(&s.replace(' ', ""));
            for m in detect_strict_motifs(&seq) {
                let span = &seq[m.index_span.start..m.index_span.end];
                assert!(span.len() >= 3 && span.len() % 2 == 1, "odd length >= 3");
                for (i, &lab) in span.iter().enumerate() {
                    let expected = if i % 2 == 0 { m.pair.0 } else { m.pair.1 };
                    assert_eq!(lab, expected, "alternation in {s} at {i}");
                }
            }
        }
    }

    #[test]
    fn overlapping_pairs_both_detected() {
        // Shared-shot boundary: (a,b) over [0,3), (a,c) over [2,5).
        let seq = labels("abaca");
        let found = detect_strict_motifs(&seq);
        assert_eq!(found.len(), 2);
        assert_eq!(found[0].pair, (l('a'), l('b')));
        assert_eq!(found[0].index_span, IndexSpan::new(0, 3));
        assert_eq!(found[1].pair, (l('a'), l('c')));
        assert_eq!(found[1].index_span, IndexSpan::new(2, 5));
    }

    #[test]
    fn shared_label_adjacent_motifs_merge_into_one_scene() {
        let seq = labels("abaca");
        let shots = shots_for(&seq);
        let strict = detect_strict_motifs(&seq);
        let scenes = apply_extensions(&strict, &seq, &shots);
        assert_eq!(scenes.len(), 1);
        let scene = &scenes[0];
        assert_eq!(
            scene.labels.iter().copied().collect::<Vec<_>>(),
            vec![l('a'), l('b'), l('c')]
        );
        assert_eq!(scene.shot_spans, vec![IndexSpan::new(0, 5)]);
        assert_eq!(scene.time_span, TimeSpan::new(0, 5000));
    }

    #[test]
    fn isolated_pair_joins_existing_couple() {
        // Strict (a,b) at the start, then unrelated shots, then a lone "ab".
        let seq = labels("ababa cc de ab");
        let seq: Vec<LabelId> = seq;
        let shots = shots_for(&seq);
        let strict = detect_strict_motifs(&seq);
        assert_eq!(strict.len(), 1);
        let scenes = apply_extensions(&strict, &seq, &shots);
        assert_eq!(scenes.len(), 2);
        assert_eq!(scenes[0].shot_spans, vec![IndexSpan::new(0, 5)]);
        assert_eq!(scenes[1].shot_spans, vec![IndexSpan::new(9, 11)]);
        assert_eq!(
            scenes[1].labels.iter().copied().collect::<Vec<_>>(),
            vec![l('a'), l('b')]
        );
    }

    #[test]
    fn isolated_pair_without_strict_couple_is_ignored() {
        // "cd" has no strict motif anywhere: only the (a,b) scene remains.
        let seq = labels("ababa e cd");
        let shots = shots_for(&seq);
        let scenes = apply_extensions(&detect_strict_motifs(&seq), &seq, &shots);
        assert_eq!(scenes.len(), 1);
        assert_eq!(scenes[0].shot_spans, vec![IndexSpan::new(0, 5)]);
    }

    #[test]
    fn disjoint_pairs_stay_separate_scenes() {
        let seq = labels("ababa cdcdc");
        let shots = shots_for(&seq);
        let strict = detect_strict_motifs(&seq);
        assert_eq!(strict.len(), 2);
        let scenes = apply_extensions(&strict, &seq, &shots);
        assert_eq!(scenes.len(), 2);
    }

    #[test]
    fn extensions_never_reduce_covered_length() {
        // Union of covered shot indices never shrinks under the extensions.
        let cases = ["ababa", "abab cd ab", "abaca bcb", "ab", "aaaa"];
        for s in cases {
            let seq = labels(&s.replace(' ', ""));
            if seq.is_empty() {
                continue;
            }
            let shots = shots_for(&seq);
            let strict = detect_strict_motifs(&seq);
            let covered = |spans: &[IndexSpan]| -> BTreeSet<usize> {
                spans
                    .iter()
                    .flat_map(|sp| sp.start..sp.end)
                    .collect()
            };
            let strict_spans: Vec<IndexSpan> = strict.iter().map(|m| m.index_span).collect();
            let strict_cover = covered(&strict_spans);
            let scenes = apply_extensions(&strict, &seq, &shots);
            let scene_spans: Vec<IndexSpan> = scenes
                .iter()
                .flat_map(|sc| sc.shot_spans.iter().copied())
                .collect();
            let scene_cover = covered(&scene_spans);
            assert!(
                scene_cover.is_superset(&strict_cover),
                "{s}: extensions dropped covered shots"
            );
        }
    }

    #[test]
    fn fully_contained_segment_is_assigned() {
        let seq = labels("ababa");
        let shots = shots_for(&seq);
        let scenes = apply_extensions(&detect_strict_motifs(&seq), &seq, &shots);
        let segs = vec![seg(0, 1000, 2000)];
        let assigned = assign_segments(&scenes, &segs);
        assert_eq!(assigned[0].covered_segments, vec![SegmentId(0)]);
    }

    #[test]
    fn low_overlap_segment_stays_unassigned() {
        let seq = labels("ababa");
        let shots = shots_for(&seq);
        let scenes = apply_extensions(&detect_strict_motifs(&seq), &seq, &shots);
        // Scene covers [0, 5000); segment [4500, 9500) overlaps 10%.
        let segs = vec![seg(0, 4500, 9500)];
        let assigned = assign_segments(&scenes, &segs);
        assert!(assigned[0].covered_segments.is_empty());
    }

    #[test]
    fn half_overlap_qualifies() {
        let seq = labels("ababa");
        let shots = shots_for(&seq);
        let scenes = apply_extensions(&detect_strict_motifs(&seq), &seq, &shots);
        let segs = vec![seg(0, 4000, 6000)]; // exactly 50% inside [0,5000)
        let assigned = assign_segments(&scenes, &segs);
        assert_eq!(assigned[0].covered_segments, vec![SegmentId(0)]);
    }

    #[test]
    fn largest_overlap_wins_with_early_tiebreak() {
        let seq = labels("ababa ededeababa");
        let seq: Vec<LabelId> = seq;
        let shots = shots_for(&seq);
        let scenes = apply_extensions(&detect_strict_motifs(&seq), &seq, &shots);
        assert!(scenes.len() >= 2);
        // Segment straddling both scenes equally goes to the earlier one.
        let boundary = scenes[0].time_span.end_ms;
        let segs = vec![seg(0, boundary - 500, boundary + 500)];
        let assigned = assign_segments(&scenes, &segs);
        assert_eq!(assigned[0].covered_segments, vec![SegmentId(0)]);
        assert!(assigned[1].covered_segments.is_empty());
    }

    #[test]
    fn assignment_matches_bruteforce_on_random_layouts() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..200 {
            // Random disjoint scene windows and random segments.
            let mut scenes = Vec::new();
            let mut t = 0i64;
            for i in 0..rng.gen_range(1..5) {
                let start = t + rng.gen_range(0..2000);
                let end = start + rng.gen_range(500..4000);
                t = end;
                scenes.push(DialogueScene {
                    id: SceneId(i),
                    labels: BTreeSet::new(),
                    shot_spans: vec![IndexSpan::new(0, 1)],
                    time_span: TimeSpan::new(start, end),
                    covered_segments: Vec::new(),
                });
            }
            let segments: Vec<SpeechSegment> = (0..rng.gen_range(0..12))
                .map(|i| {
                    let start = rng.gen_range(0..t.max(1));
                    let end = start + rng.gen_range(1..3000);
                    seg(i, start, end)
                })
                .collect();
            let assigned = assign_segments(&scenes, &segments);

            // Brute force: per segment, test every scene.
            for s in &segments {
                let mut best: Option<(i64, usize)> = None;
                for (i, sc) in scenes.iter().enumerate() {
                    let ov = interval_overlap(s.time_span, sc.time_span);
                    if 2 * ov >= s.duration_ms() && best.map_or(true, |(b, _)| ov > b) {
                        best = Some((ov, i));
                    }
                }
                let holders: Vec<usize> = assigned
                    .iter()
                    .enumerate()
                    .filter(|(_, sc)| sc.covered_segments.contains(&s.id))
                    .map(|(i, _)| i)
                    .collect();
                match best {
                    Some((_, i)) => assert_eq!(holders, vec![i]),
                    None => assert!(holders.is_empty()),
                }
            }
        }
    }

    #[test]
    fn statistics_full_coverage() {
        let seq = labels("ababa");
        let shots = shots_for(&seq);
        let scenes = apply_extensions(&detect_strict_motifs(&seq), &seq, &shots);
        let segs = vec![seg(0, 0, 2000), seg(1, 2000, 5000)];
        let assigned = assign_segments(&scenes, &segs);
        let stats = motif_statistics(&assigned, &segs);
        assert_eq!(stats.coverage_pct, 100.0);
        assert_eq!(stats.mean_speech_secs_per_scene, 5.0);
        assert!(stats.mean_speakers_per_scene.is_none());
    }

    #[test]
    fn statistics_no_scenes() {
        let segs = vec![seg(0, 0, 2000)];
        let stats = motif_statistics(&[], &segs);
        assert_eq!(stats.coverage_pct, 0.0);
        assert_eq!(stats.mean_speech_secs_per_scene, 0.0);
        assert_eq!(stats.scene_count, 0);
    }

    #[test]
    fn statistics_with_reference_speakers() {
        let seq = labels("ababa");
        let shots = shots_for(&seq);
        let scenes = apply_extensions(&detect_strict_motifs(&seq), &seq, &shots);
        let mut s0 = seg(0, 0, 2000);
        s0.ref_speaker = Some("alice".into());
        let mut s1 = seg(1, 2000, 4000);
        s1.ref_speaker = Some("bob".into());
        // A major speaker never covered by any scene.
        let mut s2 = seg(2, 9000, 11000);
        s2.ref_speaker = Some("carol".into());
        let segs = vec![s0, s1, s2];
        let assigned = assign_segments(&scenes, &segs);
        let stats = motif_statistics(&assigned, &segs);
        assert_eq!(stats.mean_speakers_per_scene, Some(2.0));
        let pct = stats.major_speaker_coverage_pct.unwrap();
        assert!((pct - 200.0 / 3.0).abs() < 1e-9, "got {pct}");
    }
}
