use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod discover;

use commands::Command;
use config::RunConfig;

/// A user-facing input problem (exit status 1).
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug, Parser)]
#[command(name = "reenact", version, about = "Synthetic human action videos from Gaussian-splat avatars")]
struct Cli {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output root.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Render resolution, e.g. 128x128.
    #[arg(long, global = true, value_parser = config::parse_resolution)]
    resolution: Option<(u32, u32)>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Build a parametric avatar for a new identity.
    MakeAvatar(commands::MakeAvatar),
    /// Normalize a pose or keypoint sequence to the configured length and rate.
    PreparePose(commands::PreparePose),
    /// Render an avatar performing a pose sequence on white.
    Animate(commands::Animate),
    /// Place a white-background video over a background image.
    Composite(commands::Composite),
    /// Generate every white and composited video of the configured dataset.
    GenDataset(commands::GenDataset),
    /// Fit avatar colors and opacities to rendered target frames.
    Fit(commands::Fit),
    /// Real-only vs real+synthetic training.
    EvalBaseline(commands::EvalBaseline),
    /// One-shot and few-shot curves over growing synthetic sets.
    EvalShots(commands::EvalShots),
    /// Check the configuration and inputs and preview dataset counts.
    Validate(commands::Validate),
}

impl Cmd {
    fn command(&self) -> &dyn Command {
        match self {
            Cmd::MakeAvatar(c) => c,
            Cmd::PreparePose(c) => c,
            Cmd::Animate(c) => c,
            Cmd::Composite(c) => c,
            Cmd::GenDataset(c) => c,
            Cmd::Fit(c) => c,
            Cmd::EvalBaseline(c) => c,
            Cmd::EvalShots(c) => c,
            Cmd::Validate(c) => c,
        }
    }
}

fn exit_status(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InputError>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<reenact_core::Error>() {
            return if e.is_input_error() { 1 } else { 2 };
        }
        if let Some(e) = cause.downcast_ref::<reenact_eval::EvalError>() {
            return if e.is_input_error() { 1 } else { 2 };
        }
    }
    2
}

/// The error chain, skipping causes already spelled out by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = err.to_string();
    for cause in err.chain().skip(1) {
        let text = cause.to_string();
        if !msg.contains(&text) {
            msg = format!("{msg}: {text}");
        }
    }
    msg
}

fn run(cli: Cli) -> Result<()> {
    let path = cli
        .config
        .ok_or_else(|| InputError("--config is required".into()))?;
    let mut config = RunConfig::load(&path)?;
    config.apply_overrides(cli.out.as_deref(), cli.resolution);
    if cli.jobs == Some(0) {
        return Err(InputError("--jobs must be at least 1".into()).into());
    }
    let ctx = commands::Context {
        seed: cli.seed.unwrap_or(config.seed),
        seed_override: cli.seed.is_some(),
        jobs: cli.jobs,
        config,
    };
    if let Some(jobs) = ctx.jobs {
        // Ignored when a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    cli.command.command().run(&ctx)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_status(&e))
        }
    }
}
