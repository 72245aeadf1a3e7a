//! Command-line interface.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | other failure (invalid configuration, empty scoring region, ...) |
//! | 2 | usage error |
//! | 3 | input file missing or unreadable |
//! | 4 | parse error in an input file |
//! | 5 | numeric failure (rank-deficient data, non-finite values) |

mod commands;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use mixplda::io::parse_key_values;
use mixplda::pipeline::StopRule;
use mixplda::{Error, PriorKind};

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT_MISSING: i32 = 3;
pub const EXIT_PARSE: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "mixplda", version, about = "Speaker-type mixture PLDA diarization backend")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a PLDA model, or a three-component mixture with --per-type.
    Train(TrainArgs),
    /// Diarize recordings and write a hypothesis RTTM.
    Diarize(DiarizeArgs),
    /// Print the log likelihood ratio of two embeddings.
    ScorePair(ScorePairArgs),
    /// Score a hypothesis RTTM against a reference RTTM.
    Der(DerArgs),
    /// Write a synthetic training corpus or test conversations.
    Simulate(SimulateArgs),
    /// Run a synthetic experiment suite and print a DER table.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Flat `key = value` file; keys are flag names, flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Embedding file, text or binary.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Training labels, one line per embedding record.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    /// Train one component per speaker type and write a mixture model.
    #[arg(long)]
    pub per_type: bool,
    /// Default prior stored in a mixture model.
    #[arg(long, default_value = "uniform")]
    pub prior: PriorKind,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub length_norm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Single,
    Mixture,
    Oracle,
}

#[derive(Debug, Args)]
pub struct DiarizeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Speech regions: `<recording-id> <onset> <offset>` per line.
    #[arg(long)]
    pub sad: PathBuf,
    #[arg(long, value_enum, default_value = "single")]
    pub mode: Mode,
    /// `uniform`, `paper`, `oracle:<M|F|C>`, `M=..,F=..,C=..`, or `types`
    /// for one-hot priors from --types. Defaults to the model's prior.
    #[arg(long)]
    pub prior: Option<String>,
    /// Directory of `<recording-id>.post` frame posterior files.
    #[arg(long)]
    pub posteriors: Option<PathBuf>,
    /// Speaker-type regions: `<recording-id> <onset> <offset> <M|F|C>`.
    #[arg(long)]
    pub types: Option<PathBuf>,
    /// `thresh:<t>` or `num:<k>`; defaults to thresh:-0.2, or thresh:0 in
    /// oracle mode.
    #[arg(long)]
    pub stop: Option<StopRule>,
    /// Per-type thresholds `M,F,C` for oracle mode.
    #[arg(long)]
    pub oracle_thresholds: Option<String>,
    #[arg(long, default_value_t = 1.5)]
    pub window: f64,
    #[arg(long, default_value_t = 0.75)]
    pub hop: f64,
    #[arg(long, default_value_t = 0.25)]
    pub min_duration: f64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub length_norm: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// RTTM destination; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScorePairArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated embedding.
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    /// Prior of the first embedding (mixture models).
    #[arg(long)]
    pub prior_a: Option<PriorKind>,
    #[arg(long)]
    pub prior_b: Option<PriorKind>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub length_norm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Kv,
    Json,
}

#[derive(Debug, Args)]
pub struct DerArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub hypothesis: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub collar: f64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub score_overlap: bool,
    #[arg(long, value_enum, default_value = "kv")]
    pub format: ReportFormat,
    /// Also report every recording.
    #[arg(long)]
    pub per_recording: bool,
    /// Write the report here as well as to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SimulateKind {
    Training,
    Conversations,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(value_enum)]
    pub kind: SimulateKind,
    /// Experiment configuration file (`key = value`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set seeds=1,2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory, created if needed.
    #[arg(long)]
    pub out: PathBuf,
    /// Confidence of the true type in synthetic frame posteriors.
    #[arg(long, default_value_t = 0.8)]
    pub posterior_confidence: f64,
    #[arg(long, default_value_t = 100.0)]
    pub frame_rate: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Suite name, or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Write the table here as well as to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Io { .. }) => EXIT_INPUT_MISSING,
        Some(Error::Parse { .. } | Error::BadMagic(_) | Error::UnsupportedVersion(_)) => EXIT_PARSE,
        Some(
            Error::RankDeficient
            | Error::NonFiniteEmbedding
            | Error::NonFiniteScore(..)
            | Error::DegenerateEmbedding
            | Error::InvalidModel(_),
        ) => EXIT_NUMERIC,
        _ => EXIT_OTHER,
    }
}

/// Subcommands whose `--config` file holds flag values.
const FLAG_CONFIG_COMMANDS: [&str; 4] = ["train", "diarize", "score-pair", "der"];

/// Inserts `--key value` pairs from a `--config` file directly after the
/// subcommand name, so that flags given on the command line, which come
/// later, override them.
pub fn expand_config(args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(sub) = args.get(1).and_then(|s| s.to_str()).map(str::to_string) else {
        return Ok(args);
    };
    if !FLAG_CONFIG_COMMANDS.contains(&sub.as_str()) {
        return Ok(args);
    }
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        match a.to_str() {
            Some("--config") => path = args.get(i + 1).map(PathBuf::from),
            Some(s) if s.starts_with("--config=") => path = Some(PathBuf::from(&s["--config=".len()..])),
            _ => {}
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let kv = read_kv(&path)?;
    let cmd = Cli::command();
    let sub_cmd = cmd.find_subcommand(&sub).expect("known subcommand");
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in kv {
        let long = key.replace('_', "-");
        let arg = sub_cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(long.as_str()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown key '{key}' in {}", path.display())))?;
        if arg.get_action().takes_values() {
            extra.push(format!("--{long}").into());
            extra.push(value.into());
        } else if value.parse::<bool>().map_err(|_| Error::InvalidConfig(format!("'{key}' expects true or false")))? {
            extra.push(format!("--{long}").into());
        }
    }
    let mut out = args[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

pub fn read_kv(path: &Path) -> mixplda::Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_key_values(&text, &path.display().to_string())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Diarize(a) => commands::diarize(a),
        Command::ScorePair(a) => commands::score_pair(a),
        Command::Der(a) => commands::der(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Experiment(a) => commands::experiment(a),
    }
}
