//! Command-line driver: each pipeline stage as a subcommand plus an
//! end-to-end `pipeline` runner and the synthetic corpus generator.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O error.

mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use scenediar::{Error, PipelineConfig};

#[derive(Parser, Debug)]
#[command(
    name = "scenediar",
    about = "Visually-guided two-stage speaker diarization for fiction video",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct CommonArgs {
    /// JSON configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory or individual episode directories.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Output directory for results and intermediates.
    #[arg(long, required = true)]
    out: PathBuf,
    /// Parallel episode workers.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect shot cuts from frame histograms.
    Shots(CommonArgs),
    /// Detect similar shots and label recurring camera setups.
    Label(CommonArgs),
    /// Detect alternating-shot dialogue scenes and assign speech segments.
    Motifs(CommonArgs),
    /// Fit the within-class covariance metric from reference speakers.
    TrainCov(CommonArgs),
    /// Cluster each scene's segments into local speakers.
    DiarizeLocal(CommonArgs),
    /// Merge recurring speakers across scenes.
    DiarizeGlobal {
        #[command(flatten)]
        common: CommonArgs,
        /// Propagate cannot-link constraints between same-scene speakers.
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        constrained: bool,
    },
    /// Score pipeline outputs against reference annotations.
    Eval {
        /// JSON configuration file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Results directory produced by the pipeline or the stage commands.
        #[arg(long, required = true)]
        input: PathBuf,
        /// Corpus directory holding the reference annotations (truth.json
        /// per episode) alongside the episode inputs.
        #[arg(long = "ref")]
        reference: PathBuf,
    },
    /// Generate a ground-truthed synthetic corpus.
    Synth {
        /// JSON corpus spec; defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, required = true)]
        out: PathBuf,
    },
    /// Run every stage end to end over one or more episodes.
    Pipeline {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        constrained: bool,
        /// Accepted for interface uniformity; the pipeline itself is
        /// deterministic and ignores it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig, Error> {
    match path {
        Some(p) => PipelineConfig::from_file(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn run() -> Result<(), Error> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage problems exit 1; --help and --version exit 0.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    match cli.command {
        Command::Shots(args) => {
            let config = load_config(&args.config)?;
            stages::for_each_episode(&args, &config, stages::cmd_shots)
        }
        Command::Label(args) => {
            let config = load_config(&args.config)?;
            stages::for_each_episode(&args, &config, stages::cmd_label)
        }
        Command::Motifs(args) => {
            let config = load_config(&args.config)?;
            stages::for_each_episode(&args, &config, stages::cmd_motifs)
        }
        Command::TrainCov(args) => {
            let config = load_config(&args.config)?;
            stages::cmd_train_cov(&args, &config)
        }
        Command::DiarizeLocal(args) => {
            let config = load_config(&args.config)?;
            stages::for_each_episode(&args, &config, stages::cmd_diarize_local)
        }
        Command::DiarizeGlobal { common, constrained } => {
            let config = load_config(&common.config)?;
            stages::for_each_episode(&common, &config, move |ctx| {
                stages::cmd_diarize_global(ctx, constrained)
            })
        }
        Command::Eval {
            config,
            input,
            reference,
        } => {
            let config = load_config(&config)?;
            stages::cmd_eval(&input, &config, &reference)
        }
        Command::Synth { spec, seed, out } => stages::cmd_synth(spec.as_deref(), seed, &out),
        Command::Pipeline {
            common,
            constrained,
            seed: _,
        } => {
            let config = load_config(&common.config)?;
            stages::cmd_pipeline(&common, &config, constrained)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
