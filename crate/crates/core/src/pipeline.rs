//! End-to-end orchestration of one episode: shots, labels, scenes, local
//! diarization, constrained global diarization, scoring and file output.
//!
//! Every stage is a pure function over in-memory data; the CLI maps stage
//! subcommands and the `pipeline` subcommand onto these, so running stages
//! separately through intermediate files gives byte-identical results.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::eval::{self, PrfScore};
use crate::global::{self, ConstrainedDendrogramForest};
use crate::io::annotations::{EpisodeTruth, SubtitleAdjustments};
use crate::io::rttm::RttmEntry;
use crate::io::{self, json};
use crate::local;
use crate::model::{
    CovarianceModel, DialogueScene, FrameDescriptor, IndexSpan, LocalSpeaker, Partition,
    SegmentId, Shot, ShotId, ShotLabeling, SpeechSegment, TimeSpan,
};
use crate::patterns::{self, MotifStatistics};
use crate::visual::{self, SimilarityGraph};

/// Everything needed to process one episode.
#[derive(Debug, Clone)]
pub struct EpisodeInputs {
    pub episode_id: String,
    pub frames: Vec<FrameDescriptor>,
    /// Subtitle segments, with embeddings and reference speakers attached
    /// when available.
    pub segments: Vec<SpeechSegment>,
    pub truth: Option<EpisodeTruth>,
}

/// Results of the full per-episode pipeline.
#[derive(Debug, Clone)]
pub struct EpisodeResults {
    pub episode_id: String,
    pub shots: Vec<Shot>,
    pub graph: SimilarityGraph,
    pub labeling: ShotLabeling,
    pub scenes: Vec<DialogueScene>,
    pub local_speakers: Vec<LocalSpeaker>,
    /// Clustering of `local_speakers` (positional).
    pub global_partition: Partition,
    pub constrained: bool,
    pub metrics: EpisodeMetrics,
}

/// Scores for one episode; fields needing reference data stay absent
/// without a truth document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cut_score: Option<PrfScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub similarity_score: Option<PrfScore>,
    pub motif_stats: MotifStatistics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub naive_baseline_der: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_der: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_der: Option<f64>,
    pub hyp_speaker_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_speaker_count: Option<usize>,
}

/// Train the Mahalanobis metric from every input episode carrying reference
/// speakers; fall back to the identity metric when none does.
pub fn train_covariance(
    inputs: &[EpisodeInputs],
    config: &PipelineConfig,
) -> Result<CovarianceModel> {
    let mut pairs = Vec::new();
    for ep in inputs {
        for seg in &ep.segments {
            if let (Some(spk), Some(emb)) = (&seg.ref_speaker, &seg.embedding) {
                pairs.push((spk.clone(), emb.clone()));
            }
        }
    }
    if pairs.is_empty() {
        return Ok(CovarianceModel::identity(config.embedding_dim));
    }
    local::within_class_covariance(&pairs, config.epsilon_rel)
}

pub fn stage_shots(frames: &[FrameDescriptor], config: &PipelineConfig) -> Result<Vec<Shot>> {
    visual::detect_cuts(frames, config.theta_cut)
}

pub fn stage_label(
    shots: &[Shot],
    config: &PipelineConfig,
) -> Result<(SimilarityGraph, ShotLabeling)> {
    let graph = visual::detect_similar_shots(shots, config.theta_sim, config.window_k)?;
    let labeling = visual::label_shots(&graph);
    Ok((graph, labeling))
}

pub fn stage_scenes(
    shots: &[Shot],
    labeling: &ShotLabeling,
    segments: &[SpeechSegment],
) -> Vec<DialogueScene> {
    let sequence = labeling.sequence();
    let strict = patterns::detect_strict_motifs(&sequence);
    let scenes = patterns::apply_extensions(&strict, &sequence, shots);
    patterns::assign_segments(&scenes, segments)
}

pub fn stage_local(
    scenes: &[DialogueScene],
    segments: &[SpeechSegment],
    metric: &CovarianceModel,
    config: &PipelineConfig,
) -> Result<Vec<LocalSpeaker>> {
    let mut speakers = Vec::new();
    for scene in scenes {
        let found = local::diarize_scene(
            scene,
            segments,
            metric,
            config.theta_single,
            config.theta_pair,
            speakers.len() as u32,
        )?;
        speakers.extend(found);
    }
    Ok(speakers)
}

/// Global clustering over pooled local-speaker embeddings. Returns the
/// partition of `local_speakers` and, for the constrained arm, the forest.
pub fn stage_global(
    local_speakers: &[LocalSpeaker],
    metric: &CovarianceModel,
    config: &PipelineConfig,
    constrained: bool,
) -> Result<(Partition, Option<ConstrainedDendrogramForest>)> {
    let points: Vec<Vec<f64>> = local_speakers
        .iter()
        .map(|s| s.pooled_embedding.clone())
        .collect();
    if constrained {
        let constraints = global::derive_cannot_links(local_speakers);
        let forest = global::constrained_hac(&points, &constraints, metric)?;
        let partition = global::partition_forest(
            &forest,
            &points,
            metric,
            config.theta_single,
            config.theta_pair,
        )?;
        Ok((partition, Some(forest)))
    } else {
        let partition = global::unconstrained_global(
            &points,
            metric,
            config.theta_single,
            config.theta_pair,
        )?;
        Ok((partition, None))
    }
}

/// Global speaker label of every covered segment, from the local-speaker
/// membership and the global partition.
pub fn segment_clusters(
    local_speakers: &[LocalSpeaker],
    partition: &Partition,
) -> BTreeMap<SegmentId, usize> {
    let mut map = BTreeMap::new();
    for (i, speaker) in local_speakers.iter().enumerate() {
        for &seg in &speaker.member_segments {
            map.insert(seg, partition.assignment[i]);
        }
    }
    map
}

/// Per-scene hypothesis partitions with aligned references and durations,
/// ready for the scene-weighted DER.
fn per_scene_eval(
    scenes: &[DialogueScene],
    segments: &[SpeechSegment],
    partition_of: impl Fn(&DialogueScene) -> Option<Partition>,
) -> Option<Vec<eval::SceneEval>> {
    let by_id: BTreeMap<SegmentId, &SpeechSegment> = segments.iter().map(|s| (s.id, s)).collect();
    let mut out = Vec::new();
    for scene in scenes {
        if scene.covered_segments.is_empty() {
            continue;
        }
        let refs: Option<Vec<String>> = scene
            .covered_segments
            .iter()
            .map(|sid| by_id[sid].ref_speaker.clone())
            .collect();
        let durations: Vec<i64> = scene
            .covered_segments
            .iter()
            .map(|sid| by_id[sid].duration_ms())
            .collect();
        out.push((partition_of(scene)?, refs?, durations));
    }
    Some(out)
}

/// Score a detected similar-shot structure against the reference, both built
/// over the reference shot segmentation so the lists align shot for shot.
fn similarity_score_on_reference_shots(
    frames: &[FrameDescriptor],
    truth: &EpisodeTruth,
    config: &PipelineConfig,
) -> Result<Option<PrfScore>> {
    if frames.is_empty() {
        return Ok(None);
    }
    let mut boundaries = vec![0usize];
    boundaries.extend(&truth.cuts);
    boundaries.push(frames.len());
    let mut shots = Vec::new();
    for (id, w) in boundaries.windows(2).enumerate() {
        if w[1] <= w[0] || w[1] > frames.len() {
            return Ok(None);
        }
        shots.push(Shot {
            id: ShotId(id),
            frame_span: IndexSpan::new(w[0], w[1]),
            time_span: TimeSpan::new(
                frames[w[0]].timestamp_ms,
                if w[1] < frames.len() {
                    frames[w[1]].timestamp_ms
                } else {
                    frames[w[1] - 1].timestamp_ms + 40
                },
            ),
            first_frame: frames[w[0]].clone(),
            last_frame: frames[w[1] - 1].clone(),
            label: None,
        });
    }
    let graph = visual::detect_similar_shots(&shots, config.theta_sim, config.window_k)?;
    let hyp = graph.neighbor_lists();
    let reference: BTreeMap<ShotId, Vec<ShotId>> = truth
        .similar_shots
        .iter()
        .enumerate()
        .map(|(i, ns)| (ShotId(i), ns.iter().map(|&n| ShotId(n)).collect()))
        .collect();
    Ok(Some(eval::f1_similarity(&hyp, &reference)))
}

/// Run the full pipeline over one episode.
pub fn run_episode(
    inputs: &EpisodeInputs,
    config: &PipelineConfig,
    metric: &CovarianceModel,
    constrained: bool,
) -> Result<EpisodeResults> {
    let shots = stage_shots(&inputs.frames, config)?;
    let (graph, labeling) = stage_label(&shots, config)?;
    let scenes = stage_scenes(&shots, &labeling, &inputs.segments);
    let local_speakers = stage_local(&scenes, &inputs.segments, metric, config)?;
    let (global_partition, _forest) = stage_global(&local_speakers, metric, config, constrained)?;

    let metrics = score_episode(
        inputs,
        &shots,
        &labeling,
        &scenes,
        &local_speakers,
        &global_partition,
        config,
    )?;

    Ok(EpisodeResults {
        episode_id: inputs.episode_id.clone(),
        shots,
        graph,
        labeling,
        scenes,
        local_speakers,
        global_partition,
        constrained,
        metrics,
    })
}

/// Compute every score available for the episode.
pub fn score_episode(
    inputs: &EpisodeInputs,
    shots: &[Shot],
    labeling: &ShotLabeling,
    scenes: &[DialogueScene],
    local_speakers: &[LocalSpeaker],
    global_partition: &Partition,
    config: &PipelineConfig,
) -> Result<EpisodeMetrics> {
    let motif_stats = patterns::motif_statistics(scenes, &inputs.segments);
    let have_refs = inputs
        .segments
        .iter()
        .all(|s| s.ref_speaker.is_some())
        && !inputs.segments.is_empty();

    let mut metrics = EpisodeMetrics {
        episode: inputs.episode_id.clone(),
        cut_score: None,
        similarity_score: None,
        motif_stats,
        naive_baseline_der: None,
        local_der: None,
        global_der: None,
        hyp_speaker_count: global_partition.k,
        ref_speaker_count: None,
    };

    if let Some(truth) = &inputs.truth {
        metrics.cut_score = Some(eval::f1_cuts(
            &visual::cut_indices(shots),
            &truth.cuts,
            1,
        ));
        metrics.similarity_score =
            similarity_score_on_reference_shots(&inputs.frames, truth, config)?;
        metrics.ref_speaker_count = Some(truth.speaker_count);
    }

    if have_refs {
        // Local DER: per-scene partitions induced by the local speakers.
        let scene_local: BTreeMap<u32, Vec<&LocalSpeaker>> =
            local_speakers.iter().fold(BTreeMap::new(), |mut acc, s| {
                acc.entry(s.scene.0).or_default().push(s);
                acc
            });
        let local_eval = per_scene_eval(scenes, &inputs.segments, |scene| {
            let speakers = scene_local.get(&scene.id.0)?;
            let mut cluster_of: BTreeMap<SegmentId, usize> = BTreeMap::new();
            for (ci, sp) in speakers.iter().enumerate() {
                for &seg in &sp.member_segments {
                    cluster_of.insert(seg, ci);
                }
            }
            let assignment: Option<Vec<usize>> = scene
                .covered_segments
                .iter()
                .map(|sid| cluster_of.get(sid).copied())
                .collect();
            Some(Partition {
                assignment: assignment?,
                k: speakers.len(),
            })
        });
        metrics.local_der = local_eval.map(|scenes| eval::single_show_der(&scenes));

        let naive_eval = per_scene_eval(scenes, &inputs.segments, |scene| {
            local::naive_alternation_baseline(scene, shots, labeling, &inputs.segments).ok()
        });
        metrics.naive_baseline_der = naive_eval.map(|scenes| eval::single_show_der(&scenes));

        // Global DER over all covered segments.
        let seg_cluster = segment_clusters(local_speakers, global_partition);
        let by_id: BTreeMap<SegmentId, &SpeechSegment> =
            inputs.segments.iter().map(|s| (s.id, s)).collect();
        let mut assignment = Vec::new();
        let mut refs = Vec::new();
        let mut durations = Vec::new();
        for (&sid, &cluster) in &seg_cluster {
            let seg = by_id[&sid];
            assignment.push(cluster);
            refs.push(seg.ref_speaker.clone().unwrap_or_default());
            durations.push(seg.duration_ms());
        }
        if !assignment.is_empty() {
            let hyp = Partition {
                assignment,
                k: global_partition.k.max(1),
            };
            metrics.global_der = Some(eval::der(&hyp, &refs, &durations));
        }
    }

    Ok(metrics)
}

// ---------------------------------------------------------------------------
// Output documents
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotsDoc {
    pub episode: String,
    pub shots: Vec<ShotRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot_id: usize,
    pub frame_start: usize,
    pub frame_end: usize,
    pub start_ms: i64,
    pub end_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsDoc {
    pub episode: String,
    pub alphabet_size: usize,
    /// Label per shot, in shot order.
    pub labels: Vec<usize>,
    /// Similarity edges (earlier shot, later shot, score).
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenesDoc {
    pub episode: String,
    pub scenes: Vec<SceneRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub scene_id: u32,
    pub labels: Vec<usize>,
    pub shot_spans: Vec<IndexSpan>,
    pub start_ms: i64,
    pub end_ms: i64,
    pub segment_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalDiarDoc {
    pub episode: String,
    pub speakers: Vec<LocalSpeakerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSpeakerRecord {
    pub local_speaker_id: u32,
    pub scene_id: u32,
    pub segment_ids: Vec<u32>,
    pub pooled_embedding: Vec<f64>,
    pub total_duration_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalDiarDoc {
    pub episode: String,
    pub constrained: bool,
    pub speaker_count: usize,
    pub clusters: Vec<GlobalClusterRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalClusterRecord {
    pub speaker: String,
    pub local_speaker_ids: Vec<u32>,
    pub segment_ids: Vec<u32>,
}

pub fn global_speaker_name(cluster: usize) -> String {
    format!("S{cluster:02}")
}

/// Build the global diarization document from a clustering of local speakers.
pub fn global_doc_for(
    episode_id: &str,
    local_speakers: &[LocalSpeaker],
    partition: &Partition,
    constrained: bool,
) -> GlobalDiarDoc {
    let mut clusters: Vec<GlobalClusterRecord> = (0..partition.k)
        .map(|c| GlobalClusterRecord {
            speaker: global_speaker_name(c),
            local_speaker_ids: Vec::new(),
            segment_ids: Vec::new(),
        })
        .collect();
    for (i, speaker) in local_speakers.iter().enumerate() {
        let c = partition.assignment[i];
        clusters[c].local_speaker_ids.push(speaker.id.0);
        clusters[c]
            .segment_ids
            .extend(speaker.member_segments.iter().map(|m| m.0));
    }
    for c in &mut clusters {
        c.segment_ids.sort_unstable();
    }
    GlobalDiarDoc {
        episode: episode_id.to_string(),
        constrained,
        speaker_count: partition.k,
        clusters,
    }
}

/// RTTM lines for a final diarization, one per covered segment.
pub fn rttm_entries_for(
    episode_id: &str,
    local_speakers: &[LocalSpeaker],
    partition: &Partition,
    segments: &[SpeechSegment],
) -> Vec<RttmEntry> {
    let by_id: BTreeMap<SegmentId, &SpeechSegment> =
        segments.iter().map(|s| (s.id, s)).collect();
    segment_clusters(local_speakers, partition)
        .iter()
        .map(|(&sid, &cluster)| RttmEntry {
            episode: episode_id.to_string(),
            time_span: by_id[&sid].time_span,
            speaker: global_speaker_name(cluster),
        })
        .collect()
}

impl EpisodeResults {
    pub fn shots_doc(&self) -> ShotsDoc {
        ShotsDoc {
            episode: self.episode_id.clone(),
            shots: self
                .shots
                .iter()
                .map(|s| ShotRecord {
                    shot_id: s.id.0,
                    frame_start: s.frame_span.start,
                    frame_end: s.frame_span.end,
                    start_ms: s.time_span.start_ms,
                    end_ms: s.time_span.end_ms,
                })
                .collect(),
        }
    }

    pub fn labels_doc(&self) -> LabelsDoc {
        LabelsDoc {
            episode: self.episode_id.clone(),
            alphabet_size: self.labeling.alphabet_size,
            labels: self.labeling.sequence().iter().map(|l| l.0).collect(),
            edges: self
                .graph
                .edges
                .iter()
                .map(|&(a, b, s)| (a.0, b.0, s))
                .collect(),
        }
    }

    pub fn scenes_doc(&self) -> ScenesDoc {
        ScenesDoc {
            episode: self.episode_id.clone(),
            scenes: self
                .scenes
                .iter()
                .map(|sc| SceneRecord {
                    scene_id: sc.id.0,
                    labels: sc.labels.iter().map(|l| l.0).collect(),
                    shot_spans: sc.shot_spans.clone(),
                    start_ms: sc.time_span.start_ms,
                    end_ms: sc.time_span.end_ms,
                    segment_ids: sc.covered_segments.iter().map(|s| s.0).collect(),
                })
                .collect(),
        }
    }

    pub fn local_doc(&self) -> LocalDiarDoc {
        LocalDiarDoc {
            episode: self.episode_id.clone(),
            speakers: self
                .local_speakers
                .iter()
                .map(|s| LocalSpeakerRecord {
                    local_speaker_id: s.id.0,
                    scene_id: s.scene.0,
                    segment_ids: s.member_segments.iter().map(|m| m.0).collect(),
                    pooled_embedding: s.pooled_embedding.clone(),
                    total_duration_ms: s.total_duration_ms,
                })
                .collect(),
        }
    }

    pub fn global_doc(&self) -> GlobalDiarDoc {
        global_doc_for(
            &self.episode_id,
            &self.local_speakers,
            &self.global_partition,
            self.constrained,
        )
    }

    /// RTTM lines for the final diarization; segment spans come from the
    /// episode's segment list.
    pub fn rttm_entries(&self, segments: &[SpeechSegment]) -> Vec<RttmEntry> {
        rttm_entries_for(
            &self.episode_id,
            &self.local_speakers,
            &self.global_partition,
            segments,
        )
    }
}

/// Write the seven output documents of one episode into `dir`, plus the
/// full-precision pooled-embedding table that lets the global stage rerun
/// from files (or from externally supplied per-speaker vectors).
pub fn write_episode_outputs(
    dir: &Path,
    results: &EpisodeResults,
    segments: &[SpeechSegment],
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    json::write_file(&dir.join("shots.json"), &results.shots_doc())?;
    json::write_file(&dir.join("labels.json"), &results.labels_doc())?;
    json::write_file(&dir.join("scenes.json"), &results.scenes_doc())?;
    json::write_file(&dir.join("local_diar.json"), &results.local_doc())?;
    json::write_file(&dir.join("global_diar.json"), &results.global_doc())?;
    json::write_file(&dir.join("metrics.json"), &results.metrics)?;

    let pooled: BTreeMap<SegmentId, Vec<f64>> = results
        .local_speakers
        .iter()
        .map(|s| (SegmentId(s.id.0), s.pooled_embedding.clone()))
        .collect();
    io::embeddings::write_embeddings(&dir.join("local_embeddings.csv"), &pooled)?;

    let entries = results.rttm_entries(segments);
    io::write_atomic(
        &dir.join("diarization.rttm"),
        io::rttm::write_rttm(&entries).as_bytes(),
    )?;
    Ok(())
}

/// Name of an episode directory.
pub fn episode_id_of(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "episode".to_string())
}

/// Load and validate the frame stream of one episode directory
/// (`frames.fhis` preferred, `frames.csv` accepted).
pub fn load_frames(dir: &Path, config: &PipelineConfig) -> Result<Vec<FrameDescriptor>> {
    let frames_path = ["frames.fhis", "frames.csv"]
        .iter()
        .map(|f| dir.join(f))
        .find(|p| p.exists())
        .ok_or_else(|| Error::MissingData(format!("no frames file in {}", dir.display())))?;
    let frames = io::frames::read_frame_histograms(&frames_path)?;
    for f in &frames {
        if f.bins() != config.bins {
            return Err(Error::DimensionMismatch {
                context: "histogram bins vs config",
                expected: config.bins,
                actual: f.bins(),
            });
        }
    }
    Ok(frames)
}

/// Load subtitles (with optional timing corrections), attach embeddings and
/// reference speakers when the side files exist.
pub fn load_segments(
    dir: &Path,
    config: &PipelineConfig,
) -> Result<(Vec<SpeechSegment>, Option<EpisodeTruth>)> {
    let srt_path = dir.join("subtitles.srt");
    let srt_bytes = std::fs::read(&srt_path)
        .map_err(|_| Error::MissingData(format!("no subtitles.srt in {}", dir.display())))?;
    let parsed = io::srt::parse_srt(&srt_bytes)?;
    let mut segments = parsed.segments;

    let offsets_path = dir.join("offsets.json");
    if offsets_path.exists() {
        let adjustments: SubtitleAdjustments = json::read_file(&offsets_path)?;
        adjustments.apply(&mut segments);
    }

    let emb_path = dir.join("embeddings.csv");
    if emb_path.exists() {
        let table = io::embeddings::read_embeddings(&emb_path, config.embedding_dim)?;
        for seg in &mut segments {
            seg.embedding = table.get(&seg.id).cloned();
        }
    }

    let truth_path = dir.join("truth.json");
    let truth = if truth_path.exists() {
        let t = io::annotations::read_truth(&truth_path)?;
        if t.segment_speakers.len() == segments.len() {
            for (seg, spk) in segments.iter_mut().zip(&t.segment_speakers) {
                seg.ref_speaker = Some(spk.clone());
            }
        }
        Some(t)
    } else {
        None
    };
    Ok((segments, truth))
}

/// Load one episode directory: `frames.fhis` or `frames.csv`, `subtitles.srt`
/// (plus optional `offsets.json`), `embeddings.csv`, optional `truth.json`.
pub fn load_episode(dir: &Path, config: &PipelineConfig) -> Result<EpisodeInputs> {
    let frames = load_frames(dir, config)?;
    let (segments, truth) = load_segments(dir, config)?;
    Ok(EpisodeInputs {
        episode_id: episode_id_of(dir),
        frames,
        segments,
        truth,
    })
}

// ---------------------------------------------------------------------------
// Reconstruction of model structures from result documents, used when stages
// run separately through intermediate files.
// ---------------------------------------------------------------------------

impl ShotsDoc {
    pub fn to_shots(&self, frames: &[FrameDescriptor]) -> Result<Vec<Shot>> {
        self.shots
            .iter()
            .map(|r| {
                if r.frame_start >= r.frame_end || r.frame_end > frames.len() {
                    return Err(Error::Validation(format!(
                        "shot {} has frame span [{}, {}) outside the stream",
                        r.shot_id, r.frame_start, r.frame_end
                    )));
                }
                Ok(Shot {
                    id: ShotId(r.shot_id),
                    frame_span: IndexSpan::new(r.frame_start, r.frame_end),
                    time_span: TimeSpan::new(r.start_ms, r.end_ms),
                    first_frame: frames[r.frame_start].clone(),
                    last_frame: frames[r.frame_end - 1].clone(),
                    label: None,
                })
            })
            .collect()
    }
}

impl LabelsDoc {
    pub fn to_labeling(&self) -> ShotLabeling {
        ShotLabeling {
            alphabet_size: self.alphabet_size,
            label_of: self
                .labels
                .iter()
                .enumerate()
                .map(|(shot, &label)| (ShotId(shot), crate::model::LabelId(label)))
                .collect(),
        }
    }

    pub fn to_graph(&self) -> SimilarityGraph {
        SimilarityGraph {
            nodes: (0..self.labels.len()).map(ShotId).collect(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b, s)| (ShotId(a), ShotId(b), s))
                .collect(),
        }
    }
}

impl ScenesDoc {
    pub fn to_scenes(&self) -> Vec<DialogueScene> {
        self.scenes
            .iter()
            .map(|r| DialogueScene {
                id: crate::model::SceneId(r.scene_id),
                labels: r.labels.iter().map(|&l| crate::model::LabelId(l)).collect(),
                shot_spans: r.shot_spans.clone(),
                time_span: TimeSpan::new(r.start_ms, r.end_ms),
                covered_segments: r.segment_ids.iter().map(|&s| SegmentId(s)).collect(),
            })
            .collect()
    }
}

impl LocalDiarDoc {
    /// Rebuild local speakers; pooled embeddings may be replaced from a
    /// full-precision side table (or externally supplied vectors).
    pub fn to_local_speakers(
        &self,
        pooled_override: Option<&BTreeMap<SegmentId, Vec<f64>>>,
    ) -> Vec<LocalSpeaker> {
        self.speakers
            .iter()
            .map(|r| LocalSpeaker {
                id: crate::model::LocalSpeakerId(r.local_speaker_id),
                scene: crate::model::SceneId(r.scene_id),
                member_segments: r.segment_ids.iter().map(|&s| SegmentId(s)).collect(),
                pooled_embedding: pooled_override
                    .and_then(|t| t.get(&SegmentId(r.local_speaker_id)).cloned())
                    .unwrap_or_else(|| r.pooled_embedding.clone()),
                total_duration_ms: r.total_duration_ms,
            })
            .collect()
    }
}

impl GlobalDiarDoc {
    /// Partition over `locals` (positional) encoded by the cluster lists.
    pub fn to_partition(&self, locals: &[LocalSpeaker]) -> Result<Partition> {
        let mut cluster_of: BTreeMap<u32, usize> = BTreeMap::new();
        for (ci, c) in self.clusters.iter().enumerate() {
            for &id in &c.local_speaker_ids {
                cluster_of.insert(id, ci);
            }
        }
        let assignment: Result<Vec<usize>> = locals
            .iter()
            .map(|l| {
                cluster_of.get(&l.id.0).copied().ok_or_else(|| {
                    Error::Validation(format!("local speaker {} missing from clusters", l.id))
                })
            })
            .collect();
        Ok(Partition {
            assignment: assignment?,
            k: self.clusters.len(),
        })
    }
}

/// Render per-episode metrics as an aligned text table with a mean row.
pub fn render_metrics_table(all: &[EpisodeMetrics]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>7} {:>7} {:>7} {:>7} {:>9} {:>9} {:>9} {:>6} {:>6}\n",
        "episode", "cut_f1", "sim_p", "sim_r", "sim_f1", "naive", "local", "global", "k_hyp",
        "k_ref"
    ));
    let fmt_opt = |v: Option<f64>| match v {
        Some(x) => format!("{x:.4}"),
        None => "-".to_string(),
    };
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut add = |key: &'static str, v: Option<f64>| {
        if let Some(x) = v {
            let e = sums.entry(key).or_insert((0.0, 0));
            e.0 += x;
            e.1 += 1;
        }
    };
    for m in all {
        out.push_str(&format!(
            "{:<10} {:>7} {:>7} {:>7} {:>7} {:>9} {:>9} {:>9} {:>6} {:>6}\n",
            m.episode,
            fmt_opt(m.cut_score.map(|s| s.f1)),
            fmt_opt(m.similarity_score.map(|s| s.precision)),
            fmt_opt(m.similarity_score.map(|s| s.recall)),
            fmt_opt(m.similarity_score.map(|s| s.f1)),
            fmt_opt(m.naive_baseline_der),
            fmt_opt(m.local_der),
            fmt_opt(m.global_der),
            m.hyp_speaker_count,
            m.ref_speaker_count
                .map(|k| k.to_string())
                .unwrap_or_else(|| "-".to_string()),
        ));
        add("cut_f1", m.cut_score.map(|s| s.f1));
        add("sim_p", m.similarity_score.map(|s| s.precision));
        add("sim_r", m.similarity_score.map(|s| s.recall));
        add("sim_f1", m.similarity_score.map(|s| s.f1));
        add("naive", m.naive_baseline_der);
        add("local", m.local_der);
        add("global", m.global_der);
    }
    let mean = |key: &str| -> String {
        match sums.get(key) {
            Some(&(total, n)) if n > 0 => format!("{:.4}", total / n as f64),
            _ => "-".to_string(),
        }
    };
    let counts = eval::speaker_count_report(
        all.iter()
            .filter_map(|m| {
                m.ref_speaker_count.map(|r| eval::SpeakerCountRow {
                    episode: m.episode.clone(),
                    hyp_speakers: m.hyp_speaker_count,
                    ref_speakers: r,
                })
            })
            .collect(),
    );
    let have_counts = !counts.rows.is_empty();
    out.push_str(&format!(
        "{:<10} {:>7} {:>7} {:>7} {:>7} {:>9} {:>9} {:>9} {:>6} {:>6}\n",
        "mean",
        mean("cut_f1"),
        mean("sim_p"),
        mean("sim_r"),
        mean("sim_f1"),
        mean("naive"),
        mean("local"),
        mean("global"),
        if have_counts {
            format!("{:.1}", counts.mean_hyp)
        } else {
            "-".into()
        },
        if have_counts {
            format!("{:.1}", counts.mean_ref)
        } else {
            "-".into()
        },
    ));
    if have_counts {
        out.push_str(&format!(
            "speaker count MAE: {:.2}\n",
            counts.mean_absolute_error
        ));
    }
    out
}
