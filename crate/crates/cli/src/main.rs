//! `cogrip`: generate benchmarks, serve sessions, evaluate scripted
//! followers, replay trajectory logs and render boards.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cogrip", version, about = "CoGRIP collaborative reference game simulator")]
struct Cli {
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Log level: error, warn, info, debug or trace.
    #[arg(long, global = true)]
    log: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the benchmark task sets and write them with a manifest.
    GenTasks(GenTasksArgs),
    /// Serve sessions over line-delimited JSON and WebSocket.
    Serve(ServeArgs),
    /// Run a scripted follower over a task set.
    Eval(EvalArgs),
    /// Re-execute trajectory logs and compare every record.
    Replay(ReplayArgs),
    /// Export a task's board as PNG.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct GenTasksArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Line-delimited JSON port. The bind address comes from COGRIP_BIND.
    #[arg(long)]
    pub port: Option<u16>,
    /// WebSocket port (default: port + 1).
    #[arg(long)]
    pub ws_port: Option<u16>,
    /// Task directory from gen-tasks; otherwise tasks are generated from --seed.
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seconds a connection may stay silent.
    #[arg(long)]
    pub idle_timeout: Option<u64>,
    /// Seconds an unused session survives.
    #[arg(long)]
    pub session_ttl: Option<u64>,
    /// Seconds a disconnected client's sessions survive.
    #[arg(long)]
    pub grace: Option<u64>,
    /// Seconds between WebSocket pings.
    #[arg(long)]
    pub heartbeat: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// shortest-path, feedback, wait or random.
    #[arg(long)]
    pub follower: Option<String>,
    /// Task set: train, val, test20, test30, test30-18p, holdout, ...
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub map_size: Option<usize>,
    #[arg(long)]
    pub pieces: Option<usize>,
    /// CSP, CPS, PCS, PSC, SCP, SPC, a comma list, or `all`.
    #[arg(long)]
    pub order: Option<String>,
    /// on, off or both.
    #[arg(long)]
    pub feedback: Option<String>,
    /// Task directory from gen-tasks; otherwise tasks are regenerated from --seed.
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write one trajectory log per episode into this directory.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Log files, or directories of `.jsonl` logs.
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Task directory from gen-tasks; otherwise tasks are regenerated from --seed.
    #[arg(long)]
    pub tasks: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub map_size: Option<usize>,
    #[arg(long)]
    pub pieces: Option<usize>,
    /// Task position within the selected set.
    #[arg(long)]
    pub index: Option<usize>,
    /// Pixels per tile.
    #[arg(long)]
    pub scale: Option<u32>,
    /// Export the gripper's 11×11 view instead of the whole board.
    #[arg(long)]
    pub view: bool,
    /// Output PNG path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match cli.config.as_deref().map(config::FileConfig::load).transpose() {
        Ok(f) => f.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let level = config::pick(cli.log.clone(), file.log.clone(), "warn".to_string());
    let level = match level.parse::<tracing::Level>() {
        Ok(l) => l,
        Err(_) => {
            eprintln!("error: invalid log level {level:?}");
            return ExitCode::FAILURE;
        }
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .init();

    let result = match cli.command {
        Command::GenTasks(a) => commands::gen_tasks(a, &file),
        Command::Serve(a) => commands::serve(a, &file),
        Command::Eval(a) => commands::eval(a, &file),
        Command::Replay(a) => commands::replay(a),
        Command::Render(a) => commands::render(a, &file),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
