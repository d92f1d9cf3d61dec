use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bodyaudit",
    version,
    about = "Find and repair missing or extra body parts in generated images"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Pipeline configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Prompt template table (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    pub templates: Option<PathBuf>,
    /// `mock`, `remote:<url>` for every role, or `<role>:<url>` for one role.
    /// Repeatable; later entries override earlier ones.
    #[arg(long = "backend", global = true, default_value = "mock")]
    pub backends: Vec<String>,
    /// Output directory (`out` when omitted; `stats` and `eval` only write
    /// files when it is given).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for per-image processing.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect absent and redundant parts in each input image.
    Detect(InputArgs),
    /// Apply a saved detection result to its image.
    Repair(RepairArgs),
    /// Detect, then repair, each input image.
    Run(InputArgs),
    /// Repair the first and last frames of a clip and regenerate the frames between.
    VideoRepair(VideoArgs),
    /// Build a masked-part evaluation split.
    BuildEval(BuildEvalArgs),
    /// Generate absent-part detector training records.
    GenTrain(InputArgs),
    /// Summarize an annotation file.
    Stats(StatsArgs),
    /// Score predictions and, optionally, repair quality.
    Eval(EvalArgs),
    /// Write seeded random mock-world scenes.
    GenScenes(GenScenesArgs),
    /// Annotation service.
    Annotate {
        #[command(subcommand)]
        command: AnnotateCommand,
    },
    /// Mock backend worker speaking the remote-backend protocol.
    Backend {
        #[command(subcommand)]
        command: BackendCommand,
    },
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// An image or scene file, or a directory of them.
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RepairArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Detection result JSON written by `detect`.
    #[arg(long)]
    pub result: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VideoArgs {
    #[arg(long)]
    pub first: PathBuf,
    #[arg(long)]
    pub last: PathBuf,
    /// Generation prompt for the clip.
    #[arg(long)]
    pub prompt: String,
    #[arg(long, default_value_t = 16)]
    pub frames: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BuildEvalArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "absent-val")]
    pub name: String,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    /// Annotation JSONL file.
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Flag,
    Box,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Evaluation records (JSONL of frame_id, ground_truth, predictions).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Flag)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0.5)]
    pub iou: f64,
    /// Optional JSONL of {original, repaired, prompt} image paths to score.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenScenesArgs {
    #[arg(long, default_value_t = 10)]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum AnnotateCommand {
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Task store directory (frames.jsonl seeds a new store).
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, default_value_t = 2)]
    pub required_approvals: usize,
}

#[derive(Debug, Subcommand)]
pub enum BackendCommand {
    Serve(WorkerArgs),
}

#[derive(Debug, Clone, Args)]
pub struct WorkerArgs {
    #[arg(long, default_value = "127.0.0.1:8090")]
    pub addr: SocketAddr,
    /// Where generated images are written.
    #[arg(long, default_value = "worker-out")]
    pub work_dir: PathBuf,
}

impl GlobalArgs {
    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
