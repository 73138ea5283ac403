//! Ground-truthed synthetic corpora: frame histograms with planted cuts and
//! recurring cameras, alternating-shot dialogue scenes, subtitle files,
//! speaker embeddings with controllable geometry, and the reference truth
//! needed to score every stage.
//!
//! Embedding geometry is explicit: speaker centroids sit `separation` apart
//! per unit of within-speaker deviation, and every scene adds one shared
//! bias vector of norm `scene_bias` to all of its segments, the minimal
//! model of background music masking speaker differences across scenes.

pub mod oracle;

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::io;
use crate::io::annotations::{EpisodeTruth, TruthScene};
use crate::io::frames::FrameRate;
use crate::model::{
    FrameDescriptor, IndexSpan, SegmentId, SpeechSegment, TimeSpan, BLOCK_COUNT,
};

/// Knobs of the synthetic corpus.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub episodes: usize,
    pub scenes_per_episode: usize,
    /// Global speaker roster size; scenes cast 1-3 of them.
    pub roster_size: usize,
    /// Probability of a scene containing 1, 2 or 3 talking speakers.
    pub speaker_mix: [f64; 3],
    /// Alternating shots per scene, inclusive range (odd counts enforced).
    pub shots_per_scene: (usize, usize),
    /// Frames per shot, inclusive range.
    pub frames_per_shot: (usize, usize),
    pub embedding_dim: usize,
    /// Inter-speaker centroid distance in units of within-speaker deviation.
    pub separation: f64,
    /// Norm of the per-scene shared bias vector, same units.
    pub scene_bias: f64,
    /// Per-bin histogram noise within a shot.
    pub histogram_noise: f64,
    pub bins: usize,
    /// Fraction of segments spoken while the interlocutor is on screen.
    pub reaction_shot_rate: f64,
    /// Fraction of scenes where one character is filmed from two angles,
    /// producing two motifs sharing a label.
    pub shared_label_triple_rate: f64,
    /// Apply a fixed per-dimension scaling to all embeddings so the
    /// within-class covariance is not already white.
    pub scale_dimensions: bool,
    /// Skip frame synthesis (embedding-only corpora are much faster).
    pub generate_frames: bool,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            episodes: 1,
            scenes_per_episode: 12,
            roster_size: 10,
            speaker_mix: [0.2206, 0.6985, 0.0809],
            shots_per_scene: (5, 11),
            frames_per_shot: (20, 50),
            embedding_dim: 60,
            separation: 8.0,
            scene_bias: 1.5,
            histogram_noise: 60.0,
            bins: 24,
            reaction_shot_rate: 0.0,
            shared_label_triple_rate: 0.15,
            scale_dimensions: true,
            generate_frames: true,
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.scenes_per_episode == 0 {
            return Err(Error::Validation("corpus must contain episodes and scenes".into()));
        }
        let max_cast = if self.speaker_mix[2] > 0.0 {
            3
        } else if self.speaker_mix[1] > 0.0 {
            2
        } else {
            1
        };
        if self.roster_size < max_cast {
            return Err(Error::Validation(format!(
                "roster of {} cannot cast scenes with {max_cast} speakers",
                self.roster_size
            )));
        }
        let mix_sum: f64 = self.speaker_mix.iter().sum();
        if (mix_sum - 1.0).abs() > 1e-6 || self.speaker_mix.iter().any(|&p| p < 0.0) {
            return Err(Error::Validation("speaker_mix must be a distribution".into()));
        }
        if self.shots_per_scene.0 < 2 || self.shots_per_scene.0 > self.shots_per_scene.1 {
            return Err(Error::Validation("shots_per_scene range invalid".into()));
        }
        if self.embedding_dim == 0 || self.bins == 0 {
            return Err(Error::Validation("dimensions must be positive".into()));
        }
        for (name, rate) in [
            ("reaction_shot_rate", self.reaction_shot_rate),
            ("shared_label_triple_rate", self.shared_label_triple_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Validation(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// One generated episode, fully in memory.
#[derive(Debug, Clone)]
pub struct EpisodeData {
    pub episode_id: String,
    /// Empty when frame synthesis was disabled.
    pub frames: Vec<FrameDescriptor>,
    /// Segments with text, embedding and reference speaker attached.
    pub segments: Vec<SpeechSegment>,
    pub truth: EpisodeTruth,
}

struct SpeakerModel {
    names: Vec<String>,
    centroids: Vec<Vec<f64>>,
    scales: Vec<f64>,
}

impl SpeakerModel {
    fn build(spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> Self {
        let d = spec.embedding_dim;
        let normal = Normal::new(0.0, 1.0).unwrap();
        let centroids = (0..spec.roster_size)
            .map(|i| {
                if spec.roster_size <= d {
                    // Axis placement: every pair exactly `separation` apart.
                    let mut c = vec![0.0; d];
                    c[i] = spec.separation / std::f64::consts::SQRT_2;
                    c
                } else {
                    // Random direction of the same norm; separations are then
                    // approximate.
                    let mut v: Vec<f64> = (0..d).map(|_| normal.sample(rng)).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                    let target = spec.separation / std::f64::consts::SQRT_2;
                    for x in &mut v {
                        *x *= target / norm;
                    }
                    v
                }
            })
            .collect();
        let scales = (0..d)
            .map(|_| {
                if spec.scale_dimensions {
                    rng.gen_range(0.6..1.6)
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            names: (0..spec.roster_size).map(|i| format!("spk{i:02}")).collect(),
            centroids,
            scales,
        }
    }

    fn embed(&self, speaker: usize, bias: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let normal = Normal::new(0.0, 1.0).unwrap();
        self.centroids[speaker]
            .iter()
            .zip(bias)
            .zip(&self.scales)
            .map(|((&c, &b), &s)| s * (c + b + normal.sample(rng)))
            .collect()
    }
}

fn random_unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    for x in &mut v {
        *x /= norm;
    }
    v
}

/// Base histogram of one camera setup: one random histogram per block.
fn camera_base(bins: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<u32>> {
    (0..BLOCK_COUNT)
        .map(|_| (0..bins).map(|_| rng.gen_range(0..1000)).collect())
        .collect()
}

fn noisy_frame(
    base: &[Vec<u32>],
    noise: f64,
    frame_index: usize,
    timestamp_ms: i64,
    rng: &mut ChaCha8Rng,
) -> FrameDescriptor {
    let normal = Normal::new(0.0, noise.max(0.0)).unwrap();
    let blocks = base
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|&v| {
                    let jittered = v as f64 + normal.sample(rng);
                    jittered.round().max(0.0) as u32
                })
                .collect()
        })
        .collect();
    FrameDescriptor {
        frame_index,
        timestamp_ms,
        blocks,
    }
}

/// Deterministic per-episode rng stream.
fn episode_rng(seed: u64, episode: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (episode as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn sample_cast_size(mix: &[f64; 3], rng: &mut ChaCha8Rng) -> usize {
    let x: f64 = rng.gen();
    if x < mix[0] {
        1
    } else if x < mix[0] + mix[1] {
        2
    } else {
        3
    }
}

/// Generate one episode in memory.
pub fn generate_episode(spec: &CorpusSpec, seed: u64, episode: usize) -> Result<EpisodeData> {
    spec.validate()?;
    let mut rng = episode_rng(seed, episode);
    let speakers = SpeakerModel::build(spec, &mut rng);
    let rate = FrameRate::PAL;

    // Shot plan: (camera id, frames, owning speaker or None for filler).
    struct ShotPlan {
        camera: usize,
        frames: usize,
        owner: Option<usize>,
    }
    struct ScenePlan {
        shot_range: (usize, usize),
        cast: Vec<usize>,
        bias: Vec<f64>,
    }

    let mut shot_plans: Vec<ShotPlan> = Vec::new();
    let mut scene_plans: Vec<ScenePlan> = Vec::new();
    let mut next_camera = 0usize;
    let filler = |shot_plans: &mut Vec<ShotPlan>, next_camera: &mut usize, rng: &mut ChaCha8Rng| {
        for _ in 0..rng.gen_range(1..=2) {
            shot_plans.push(ShotPlan {
                camera: *next_camera,
                frames: rng.gen_range(spec.frames_per_shot.0..=spec.frames_per_shot.1),
                owner: None,
            });
            *next_camera += 1;
        }
    };

    filler(&mut shot_plans, &mut next_camera, &mut rng);
    for _ in 0..spec.scenes_per_episode {
        let cast_size = sample_cast_size(&spec.speaker_mix, &mut rng);
        let mut cast: Vec<usize> = Vec::new();
        while cast.len() < cast_size {
            let s = rng.gen_range(0..spec.roster_size);
            if !cast.contains(&s) {
                cast.push(s);
            }
        }
        let triple = cast_size >= 2 && rng.gen_bool(spec.shared_label_triple_rate);

        let mut n_shots = rng.gen_range(spec.shots_per_scene.0..=spec.shots_per_scene.1);
        if n_shots % 2 == 0 {
            n_shots += 1;
        }
        n_shots = n_shots.max(if triple { 9 } else { 3 });

        // Cameras: shared camera X on even positions; interlocutor camera Y,
        // replaced by a second angle Z in the back half of triple scenes.
        let cam_x = next_camera;
        let cam_y = next_camera + 1;
        let cam_z = next_camera + 2;
        next_camera += if triple { 3 } else { 2 };
        // Speaker owning the shared camera and the interlocutor; a third
        // speaker, when cast, talks over either camera.
        let owner_x = cast[0];
        let owner_yz = cast.get(1).copied().unwrap_or(cast[0]);

        let start_shot = shot_plans.len();
        for pos in 0..n_shots {
            let (camera, owner) = if pos % 2 == 0 {
                (cam_x, owner_x)
            } else if triple && pos > n_shots / 2 {
                (cam_z, owner_yz)
            } else {
                (cam_y, owner_yz)
            };
            shot_plans.push(ShotPlan {
                camera,
                frames: rng.gen_range(spec.frames_per_shot.0..=spec.frames_per_shot.1),
                owner: Some(owner),
            });
        }
        scene_plans.push(ScenePlan {
            shot_range: (start_shot, shot_plans.len()),
            cast,
            bias: {
                let u = random_unit_vector(spec.embedding_dim, &mut rng);
                u.iter().map(|&x| x * spec.scene_bias).collect()
            },
        });
        filler(&mut shot_plans, &mut next_camera, &mut rng);
    }

    // Materialize frames and shot timing.
    let mut frames: Vec<FrameDescriptor> = Vec::new();
    let mut shot_frame_spans: Vec<IndexSpan> = Vec::new();
    let mut camera_bases: BTreeMap<usize, Vec<Vec<u32>>> = BTreeMap::new();
    let mut frame_cursor = 0usize;
    for plan in &shot_plans {
        let base = camera_bases
            .entry(plan.camera)
            .or_insert_with(|| camera_base(spec.bins, &mut rng));
        let start = frame_cursor;
        if spec.generate_frames {
            for _ in 0..plan.frames {
                frames.push(noisy_frame(
                    base,
                    spec.histogram_noise,
                    frame_cursor,
                    rate.timestamp_ms(frame_cursor),
                    &mut rng,
                ));
                frame_cursor += 1;
            }
        } else {
            frame_cursor += plan.frames;
        }
        shot_frame_spans.push(IndexSpan::new(start, frame_cursor));
    }
    let shot_time = |shot: usize| -> TimeSpan {
        let span = shot_frame_spans[shot];
        TimeSpan::new(
            rate.timestamp_ms(span.start),
            rate.timestamp_ms(span.end),
        )
    };

    // Segments: one per dialogue shot, centered, with reaction shots flipping
    // the talker while the camera stays on the listener.
    let mut segments: Vec<SpeechSegment> = Vec::new();
    let mut truth_scenes: Vec<TruthScene> = Vec::new();
    for (scene_idx, scene) in scene_plans.iter().enumerate() {
        let mut scene_segment_ids = Vec::new();
        let mut scene_speakers: Vec<String> = Vec::new();
        let (lo, hi) = scene.shot_range;
        for (shot, plan) in shot_plans.iter().enumerate().take(hi).skip(lo) {
            let owner = plan.owner.expect("scene shots have owners");
            let mut talker = owner;
            if scene.cast.len() == 1 {
                talker = scene.cast[0];
            } else if rng.gen_bool(spec.reaction_shot_rate) {
                // Reaction shot: someone else speaks over this camera.
                let others: Vec<usize> =
                    scene.cast.iter().copied().filter(|&s| s != owner).collect();
                talker = others[rng.gen_range(0..others.len())];
            } else if scene.cast.len() == 3 && rng.gen_bool(0.25) {
                talker = scene.cast[2];
            }
            let window = shot_time(shot);
            let margin = window.len_ms() / 6;
            let span = TimeSpan::new(window.start_ms + margin, window.end_ms - margin);
            let id = SegmentId(segments.len() as u32);
            let name = speakers.names[talker].clone();
            segments.push(SpeechSegment {
                id,
                time_span: span,
                text: Some(format!("Scene {scene_idx} shot {shot} line.")),
                embedding: Some(speakers.embed(talker, &scene.bias, &mut rng)),
                ref_speaker: Some(name.clone()),
            });
            scene_segment_ids.push(id.0);
            if !scene_speakers.contains(&name) {
                scene_speakers.push(name);
            }
        }
        // A cast of three must actually contain three talkers: reassign a
        // segment whose speaker talks more than once in the scene.
        if scene.cast.len() == 3 && scene_speakers.len() < 3 {
            for &missing in &scene.cast {
                let name = speakers.names[missing].clone();
                if scene_speakers.contains(&name) {
                    continue;
                }
                let count_of = |segments: &[SpeechSegment], who: &str| {
                    scene_segment_ids
                        .iter()
                        .filter(|&&i| segments[i as usize].ref_speaker.as_deref() == Some(who))
                        .count()
                };
                let victim = scene_segment_ids.iter().find(|&&i| {
                    let current = segments[i as usize].ref_speaker.clone().unwrap();
                    count_of(&segments, &current) > 1
                });
                if let Some(&victim) = victim {
                    segments[victim as usize].ref_speaker = Some(name.clone());
                    segments[victim as usize].embedding =
                        Some(speakers.embed(missing, &scene.bias, &mut rng));
                    scene_speakers.push(name);
                }
            }
            scene_speakers = scene_segment_ids
                .iter()
                .map(|&i| segments[i as usize].ref_speaker.clone().unwrap())
                .fold(Vec::new(), |mut acc, n| {
                    if !acc.contains(&n) {
                        acc.push(n);
                    }
                    acc
                });
        }
        truth_scenes.push(TruthScene {
            shot_span: IndexSpan::new(lo, hi),
            time_span: shot_time(lo).hull(&shot_time(hi - 1)),
            segment_ids: scene_segment_ids,
            speakers: scene_speakers,
        });
    }

    let cuts: Vec<usize> = shot_frame_spans.iter().skip(1).map(|s| s.start).collect();
    let shot_labels: Vec<usize> = shot_plans.iter().map(|p| p.camera).collect();
    let mut similar_shots: Vec<Vec<usize>> = vec![Vec::new(); shot_plans.len()];
    for i in 0..shot_plans.len() {
        for j in 0..shot_plans.len() {
            if i != j && shot_plans[i].camera == shot_plans[j].camera {
                similar_shots[i].push(j);
            }
        }
    }
    let mut distinct: Vec<&str> = segments
        .iter()
        .filter_map(|s| s.ref_speaker.as_deref())
        .collect();
    distinct.sort_unstable();
    distinct.dedup();

    let episode_id = format!("ep{episode:03}");
    Ok(EpisodeData {
        truth: EpisodeTruth {
            episode: episode_id.clone(),
            cuts,
            shot_labels,
            similar_shots,
            scenes: truth_scenes,
            segment_speakers: segments
                .iter()
                .map(|s| s.ref_speaker.clone().unwrap_or_default())
                .collect(),
            speaker_count: distinct.len(),
        },
        episode_id,
        frames,
        segments,
    })
}

/// Generate a corpus in memory: one entry per episode.
pub fn generate_corpus(spec: &CorpusSpec, seed: u64) -> Result<Vec<EpisodeData>> {
    (0..spec.episodes)
        .map(|e| generate_episode(spec, seed, e))
        .collect()
}

/// Generate and write a corpus: per episode a directory with `frames.fhis`,
/// `subtitles.srt`, `embeddings.csv` and `truth.json`.
pub fn write_corpus(spec: &CorpusSpec, seed: u64, out_dir: &Path) -> Result<Vec<String>> {
    let episodes = generate_corpus(spec, seed)?;
    let mut ids = Vec::new();
    for ep in &episodes {
        let dir = out_dir.join(&ep.episode_id);
        std::fs::create_dir_all(&dir)?;
        if spec.generate_frames {
            io::frames::write_binary(&dir.join("frames.fhis"), &ep.frames, FrameRate::PAL)?;
        }
        let srt = io::srt::write_srt(&ep.segments);
        io::write_atomic(&dir.join("subtitles.srt"), srt.as_bytes())?;
        let table: BTreeMap<SegmentId, Vec<f64>> = ep
            .segments
            .iter()
            .filter_map(|s| s.embedding.clone().map(|e| (s.id, e)))
            .collect();
        io::embeddings::write_embeddings(&dir.join("embeddings.csv"), &table)?;
        io::annotations::write_truth(&dir.join("truth.json"), &ep.truth)?;
        ids.push(ep.episode_id.clone());
    }
    Ok(ids)
}

/// Training pairs (speaker, embedding) pooled from generated episodes.
pub fn training_pairs(episodes: &[EpisodeData]) -> Vec<(String, Vec<f64>)> {
    episodes
        .iter()
        .flat_map(|ep| {
            ep.segments.iter().filter_map(|s| {
                match (&s.ref_speaker, &s.embedding) {
                    (Some(name), Some(emb)) => Some((name.clone(), emb.clone())),
                    _ => None,
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_seed_regenerates_identically() {
        let spec = CorpusSpec {
            scenes_per_episode: 4,
            frames_per_shot: (10, 20),
            ..CorpusSpec::default()
        };
        let a = generate_episode(&spec, 42, 0).unwrap();
        let b = generate_episode(&spec, 42, 0).unwrap();
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.segments, b.segments);
        assert_eq!(a.truth, b.truth);
        let c = generate_episode(&spec, 43, 0).unwrap();
        assert_ne!(a.segments, c.segments);
    }

    #[test]
    fn infeasible_roster_is_rejected() {
        let spec = CorpusSpec {
            roster_size: 2,
            speaker_mix: [0.0, 0.5, 0.5],
            ..CorpusSpec::default()
        };
        assert!(generate_episode(&spec, 1, 0).is_err());
    }

    #[test]
    fn shots_tile_frames_and_cuts_match() {
        let spec = CorpusSpec {
            scenes_per_episode: 3,
            ..CorpusSpec::default()
        };
        let ep = generate_episode(&spec, 7, 0).unwrap();
        // Frame indices are contiguous.
        for (i, f) in ep.frames.iter().enumerate() {
            assert_eq!(f.frame_index, i);
        }
        // Every truth cut is a real frame index inside the range.
        for &c in &ep.truth.cuts {
            assert!(c > 0 && c < ep.frames.len());
        }
        assert_eq!(ep.truth.shot_labels.len(), ep.truth.cuts.len() + 1);
    }

    #[test]
    fn scene_segments_lie_inside_scene_spans() {
        let spec = CorpusSpec::default();
        let ep = generate_episode(&spec, 3, 0).unwrap();
        for scene in &ep.truth.scenes {
            for &sid in &scene.segment_ids {
                let seg = &ep.segments[sid as usize];
                assert!(seg.time_span.start_ms >= scene.time_span.start_ms);
                assert!(seg.time_span.end_ms <= scene.time_span.end_ms);
            }
        }
    }

    #[test]
    fn cast_size_histogram_tracks_mix() {
        let spec = CorpusSpec {
            scenes_per_episode: 10_000,
            generate_frames: false,
            frames_per_shot: (10, 12),
            shots_per_scene: (5, 7),
            embedding_dim: 8,
            ..CorpusSpec::default()
        };
        let ep = generate_episode(&spec, 99, 0).unwrap();
        let mut counts = [0usize; 3];
        for scene in &ep.truth.scenes {
            counts[scene.speakers.len() - 1] += 1;
        }
        let n = ep.truth.scenes.len() as f64;
        for (i, &target) in spec.speaker_mix.iter().enumerate() {
            let got = counts[i] as f64 / n;
            assert!(
                (got - target).abs() < 0.02,
                "cast size {} frequency {got:.4} vs target {target:.4}",
                i + 1
            );
        }
    }

    #[test]
    fn planted_motifs_are_recoverable_from_the_label_sequence() {
        use crate::model::{LabelId, Shot, ShotId};
        use crate::patterns::{apply_extensions, detect_strict_motifs};

        for seed in 0..10u64 {
            let spec = CorpusSpec {
                scenes_per_episode: 8,
                generate_frames: false,
                shared_label_triple_rate: 0.5,
                ..CorpusSpec::default()
            };
            let ep = generate_episode(&spec, seed, 0).unwrap();
            let labels: Vec<LabelId> =
                ep.truth.shot_labels.iter().map(|&l| LabelId(l)).collect();

            // Rebuild shot timing from the truth cuts (25 fps).
            let frame = FrameDescriptor {
                frame_index: 0,
                timestamp_ms: 0,
                blocks: vec![vec![0u32; 1]; BLOCK_COUNT],
            };
            let mut bounds = vec![0usize];
            bounds.extend(&ep.truth.cuts);
            bounds.push(usize::MAX); // end unknown; spans below never read it
            let shots: Vec<Shot> = (0..labels.len())
                .map(|i| Shot {
                    id: ShotId(i),
                    frame_span: IndexSpan::new(i, i + 1),
                    time_span: TimeSpan::new(
                        bounds[i] as i64 * 40,
                        if i + 1 < bounds.len() && bounds[i + 1] != usize::MAX {
                            bounds[i + 1] as i64 * 40
                        } else {
                            bounds[i] as i64 * 40 + 1000
                        },
                    ),
                    first_frame: frame.clone(),
                    last_frame: frame.clone(),
                    label: Some(labels[i]),
                })
                .collect();

            let strict = detect_strict_motifs(&labels);
            let scenes = apply_extensions(&strict, &labels, &shots);
            let detected: Vec<IndexSpan> =
                scenes.iter().flat_map(|s| s.shot_spans.iter().copied()).collect();
            // Every planted scene span is recovered exactly.
            for ts in &ep.truth.scenes {
                assert!(
                    detected.contains(&ts.shot_span),
                    "seed {seed}: planted span {:?} not among {detected:?}",
                    ts.shot_span
                );
            }
            assert_eq!(scenes.len(), ep.truth.scenes.len(), "seed {seed}");
        }
    }

    #[test]
    fn writes_all_episode_files() {
        let dir = tempfile::tempdir().unwrap();
        let spec = CorpusSpec {
            scenes_per_episode: 2,
            frames_per_shot: (8, 12),
            ..CorpusSpec::default()
        };
        let ids = write_corpus(&spec, 5, dir.path()).unwrap();
        assert_eq!(ids, vec!["ep000"]);
        for f in ["frames.fhis", "subtitles.srt", "embeddings.csv", "truth.json"] {
            assert!(dir.path().join("ep000").join(f).exists(), "{f} missing");
        }
        // Subtitles re-parse to the same spans and text.
        let srt = std::fs::read(dir.path().join("ep000/subtitles.srt")).unwrap();
        let parsed = crate::io::srt::parse_srt(&srt).unwrap();
        let ep = generate_episode(&spec, 5, 0).unwrap();
        assert_eq!(parsed.segments.len(), ep.segments.len());
        for (a, b) in parsed.segments.iter().zip(&ep.segments) {
            assert_eq!(a.time_span, b.time_span);
            assert_eq!(a.text, b.text);
        }
    }
}
