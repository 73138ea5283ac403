//! Stage implementations behind the subcommands. Stages communicate through
//! files in the output directory, so chaining them manually reproduces the
//! one-shot `pipeline` run byte for byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use scenediar::error::{Error, Result};
use scenediar::io::{self, json};
use scenediar::model::{CovarianceModel, SegmentId};
use scenediar::pipeline::{
    self, EpisodeInputs, GlobalDiarDoc, LabelsDoc, LocalDiarDoc, ScenesDoc, ShotsDoc,
};
use scenediar::synth::CorpusSpec;
use scenediar::PipelineConfig;

use crate::CommonArgs;

pub struct EpisodeCtx<'a> {
    pub config: &'a PipelineConfig,
    pub input_dir: PathBuf,
    pub out_dir: PathBuf,
    pub out_root: PathBuf,
    pub episode_id: String,
}

/// Episode directories under the given inputs: a directory containing
/// `subtitles.srt` is an episode; otherwise its children are scanned.
pub fn discover_episodes(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut episodes = Vec::new();
    for input in inputs {
        if input.join("subtitles.srt").exists() {
            episodes.push(input.clone());
            continue;
        }
        let mut children: Vec<PathBuf> = std::fs::read_dir(input)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.join("subtitles.srt").exists())
            .collect();
        children.sort();
        episodes.extend(children);
    }
    if episodes.is_empty() {
        return Err(Error::MissingData(format!(
            "no episode directories (containing subtitles.srt) under {inputs:?}"
        )));
    }
    Ok(episodes)
}

fn with_jobs<T: Send>(
    jobs: usize,
    items: Vec<T>,
    f: impl Fn(T) -> Result<()> + Send + Sync,
) -> Result<()> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
    pool.install(|| {
        items
            .into_par_iter()
            .map(f)
            .collect::<Result<Vec<()>>>()
            .map(|_| ())
    })
}

pub fn for_each_episode(
    args: &CommonArgs,
    config: &PipelineConfig,
    stage: impl Fn(&EpisodeCtx) -> Result<()> + Send + Sync,
) -> Result<()> {
    let episodes = discover_episodes(&args.input)?;
    let contexts: Vec<EpisodeCtx> = episodes
        .into_iter()
        .map(|dir| {
            let episode_id = pipeline::episode_id_of(&dir);
            EpisodeCtx {
                config,
                out_dir: args.out.join(&episode_id),
                out_root: args.out.clone(),
                input_dir: dir,
                episode_id,
            }
        })
        .collect();
    with_jobs(args.jobs, contexts, |ctx| {
        std::fs::create_dir_all(&ctx.out_dir)?;
        stage(&ctx)
    })
}

fn read_doc<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingData(format!(
            "{what} not found at {} (run the earlier stage first)",
            path.display()
        )));
    }
    json::read_file(path)
}

fn load_metric(out_root: &Path, config: &PipelineConfig) -> Result<CovarianceModel> {
    let path = out_root.join("cov.json");
    if path.exists() {
        let bytes = std::fs::read(&path)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    } else {
        Ok(CovarianceModel::identity(config.embedding_dim))
    }
}

/// The covariance model is an intermediate, not a result document: it keeps
/// full float precision so staged and one-shot runs agree exactly.
fn write_metric(out_root: &Path, metric: &CovarianceModel) -> Result<()> {
    let bytes =
        serde_json::to_vec(metric).map_err(|e| Error::Format(format!("cov.json: {e}")))?;
    io::write_atomic(&out_root.join("cov.json"), &bytes)
}

pub fn cmd_shots(ctx: &EpisodeCtx) -> Result<()> {
    let frames = pipeline::load_frames(&ctx.input_dir, ctx.config)?;
    let shots = pipeline::stage_shots(&frames, ctx.config)?;
    let doc = ShotsDoc {
        episode: ctx.episode_id.clone(),
        shots: shots
            .iter()
            .map(|s| pipeline::ShotRecord {
                shot_id: s.id.0,
                frame_start: s.frame_span.start,
                frame_end: s.frame_span.end,
                start_ms: s.time_span.start_ms,
                end_ms: s.time_span.end_ms,
            })
            .collect(),
    };
    json::write_file(&ctx.out_dir.join("shots.json"), &doc)
}

pub fn cmd_label(ctx: &EpisodeCtx) -> Result<()> {
    let frames = pipeline::load_frames(&ctx.input_dir, ctx.config)?;
    let shots_doc: ShotsDoc = read_doc(&ctx.out_dir.join("shots.json"), "shots.json")?;
    let shots = shots_doc.to_shots(&frames)?;
    let (graph, labeling) = pipeline::stage_label(&shots, ctx.config)?;
    let doc = LabelsDoc {
        episode: ctx.episode_id.clone(),
        alphabet_size: labeling.alphabet_size,
        labels: labeling.sequence().iter().map(|l| l.0).collect(),
        edges: graph.edges.iter().map(|&(a, b, s)| (a.0, b.0, s)).collect(),
    };
    json::write_file(&ctx.out_dir.join("labels.json"), &doc)
}

pub fn cmd_motifs(ctx: &EpisodeCtx) -> Result<()> {
    let frames = pipeline::load_frames(&ctx.input_dir, ctx.config)?;
    let shots_doc: ShotsDoc = read_doc(&ctx.out_dir.join("shots.json"), "shots.json")?;
    let shots = shots_doc.to_shots(&frames)?;
    let labels_doc: LabelsDoc = read_doc(&ctx.out_dir.join("labels.json"), "labels.json")?;
    let labeling = labels_doc.to_labeling();
    let (segments, _) = pipeline::load_segments(&ctx.input_dir, ctx.config)?;
    let scenes = pipeline::stage_scenes(&shots, &labeling, &segments);
    let doc = ScenesDoc {
        episode: ctx.episode_id.clone(),
        scenes: scenes
            .iter()
            .map(|sc| pipeline::SceneRecord {
                scene_id: sc.id.0,
                labels: sc.labels.iter().map(|l| l.0).collect(),
                shot_spans: sc.shot_spans.clone(),
                start_ms: sc.time_span.start_ms,
                end_ms: sc.time_span.end_ms,
                segment_ids: sc.covered_segments.iter().map(|s| s.0).collect(),
            })
            .collect(),
    };
    json::write_file(&ctx.out_dir.join("scenes.json"), &doc)
}

pub fn cmd_train_cov(args: &CommonArgs, config: &PipelineConfig) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let episodes = discover_episodes(&args.input)?;
    let mut inputs = Vec::new();
    for dir in episodes {
        let (segments, truth) = pipeline::load_segments(&dir, config)?;
        inputs.push(EpisodeInputs {
            episode_id: pipeline::episode_id_of(&dir),
            frames: Vec::new(),
            segments,
            truth,
        });
    }
    let metric = pipeline::train_covariance(&inputs, config)?;
    write_metric(&args.out, &metric)
}

pub fn cmd_diarize_local(ctx: &EpisodeCtx) -> Result<()> {
    let (segments, _) = pipeline::load_segments(&ctx.input_dir, ctx.config)?;
    let scenes_doc: ScenesDoc = read_doc(&ctx.out_dir.join("scenes.json"), "scenes.json")?;
    let scenes = scenes_doc.to_scenes();
    let metric = load_metric(&ctx.out_root, ctx.config)?;
    let speakers = pipeline::stage_local(&scenes, &segments, &metric, ctx.config)?;

    let doc = LocalDiarDoc {
        episode: ctx.episode_id.clone(),
        speakers: speakers
            .iter()
            .map(|s| pipeline::LocalSpeakerRecord {
                local_speaker_id: s.id.0,
                scene_id: s.scene.0,
                segment_ids: s.member_segments.iter().map(|m| m.0).collect(),
                pooled_embedding: s.pooled_embedding.clone(),
                total_duration_ms: s.total_duration_ms,
            })
            .collect(),
    };
    json::write_file(&ctx.out_dir.join("local_diar.json"), &doc)?;

    // Full-precision pooled vectors; external tools may overwrite this table
    // with separately extracted per-speaker embeddings.
    let table: BTreeMap<SegmentId, Vec<f64>> = speakers
        .iter()
        .map(|s| (SegmentId(s.id.0), s.pooled_embedding.clone()))
        .collect();
    io::embeddings::write_embeddings(&ctx.out_dir.join("local_embeddings.csv"), &table)
}

pub fn cmd_diarize_global(ctx: &EpisodeCtx, constrained: bool) -> Result<()> {
    let local_doc: LocalDiarDoc = read_doc(&ctx.out_dir.join("local_diar.json"), "local_diar.json")?;
    let pooled_path = ctx.out_dir.join("local_embeddings.csv");
    let pooled = if pooled_path.exists() {
        Some(io::embeddings::read_embeddings(
            &pooled_path,
            ctx.config.embedding_dim,
        )?)
    } else {
        None
    };
    let locals = local_doc.to_local_speakers(pooled.as_ref());
    let metric = load_metric(&ctx.out_root, ctx.config)?;
    let (partition, _forest) = pipeline::stage_global(&locals, &metric, ctx.config, constrained)?;

    let doc = pipeline::global_doc_for(&ctx.episode_id, &locals, &partition, constrained);
    json::write_file(&ctx.out_dir.join("global_diar.json"), &doc)?;

    let (segments, _) = pipeline::load_segments(&ctx.input_dir, ctx.config)?;
    let entries = pipeline::rttm_entries_for(&ctx.episode_id, &locals, &partition, &segments);
    io::write_atomic(
        &ctx.out_dir.join("diarization.rttm"),
        io::rttm::write_rttm(&entries).as_bytes(),
    )
}

pub fn cmd_eval(results_root: &Path, config: &PipelineConfig, reference: &Path) -> Result<()> {
    let ref_episodes = discover_episodes(std::slice::from_ref(&reference.to_path_buf()))?;
    let mut all_metrics = Vec::new();
    for ref_dir in ref_episodes {
        let inputs = pipeline::load_episode(&ref_dir, config)?;
        let ep_out = results_root.join(&inputs.episode_id);

        let shots_doc: ShotsDoc = read_doc(&ep_out.join("shots.json"), "shots.json")?;
        let shots = shots_doc.to_shots(&inputs.frames)?;
        let labels_doc: LabelsDoc = read_doc(&ep_out.join("labels.json"), "labels.json")?;
        let labeling = labels_doc.to_labeling();
        let scenes_doc: ScenesDoc = read_doc(&ep_out.join("scenes.json"), "scenes.json")?;
        let scenes = scenes_doc.to_scenes();
        let local_doc: LocalDiarDoc = read_doc(&ep_out.join("local_diar.json"), "local_diar.json")?;
        let locals = local_doc.to_local_speakers(None);
        let global_doc: GlobalDiarDoc =
            read_doc(&ep_out.join("global_diar.json"), "global_diar.json")?;
        let partition = global_doc.to_partition(&locals)?;

        let metrics = pipeline::score_episode(
            &inputs, &shots, &labeling, &scenes, &locals, &partition, config,
        )?;
        json::write_file(&ep_out.join("metrics.json"), &metrics)?;
        all_metrics.push(metrics);
    }
    all_metrics.sort_by(|a, b| a.episode.cmp(&b.episode));
    let table = pipeline::render_metrics_table(&all_metrics);
    io::write_atomic(&results_root.join("metrics.txt"), table.as_bytes())?;
    print!("{table}");
    Ok(())
}

pub fn cmd_synth(spec_path: Option<&Path>, seed: u64, out: &Path) -> Result<()> {
    let spec: CorpusSpec = match spec_path {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| {
                Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))
            })?;
            serde_json::from_slice(&bytes)
                .map_err(|e| Error::Validation(format!("{}: {e}", p.display())))?
        }
        None => CorpusSpec::default(),
    };
    std::fs::create_dir_all(out)?;
    let ids = scenediar::synth::write_corpus(&spec, seed, out)?;
    for id in ids {
        println!("generated {}", out.join(id).display());
    }
    Ok(())
}

pub fn cmd_pipeline(args: &CommonArgs, config: &PipelineConfig, constrained: bool) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let episodes = discover_episodes(&args.input)?;
    let mut inputs = Vec::new();
    for dir in &episodes {
        inputs.push(pipeline::load_episode(dir, config)?);
    }
    let metric = pipeline::train_covariance(&inputs, config)?;
    write_metric(&args.out, &metric)?;

    let out_root = args.out.clone();
    let results: Vec<pipeline::EpisodeMetrics> = {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs.max(1))
            .build()
            .map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
        pool.install(|| {
            inputs
                .par_iter()
                .map(|ep| {
                    let results = pipeline::run_episode(ep, config, &metric, constrained)?;
                    let dir = out_root.join(&ep.episode_id);
                    pipeline::write_episode_outputs(&dir, &results, &ep.segments)?;
                    Ok(results.metrics)
                })
                .collect::<Result<Vec<_>>>()
        })?
    };
    let mut all_metrics = results;
    all_metrics.sort_by(|a, b| a.episode.cmp(&b.episode));
    let table = pipeline::render_metrics_table(&all_metrics);
    io::write_atomic(&args.out.join("metrics.txt"), table.as_bytes())?;
    print!("{table}");
    Ok(())
}
