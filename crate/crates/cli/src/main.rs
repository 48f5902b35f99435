use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use csdc_core::config::{Command, ExperimentConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

mod commands;

#[derive(Parser)]
#[command(name = "csdc", version, about = "Danger-cylinder and companion-surface experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Companion samples over a grid of cylinder viewpoints, and the deltoid table.
    Sweep,
    /// Implicit polynomial fits to the sweep samples.
    Fit,
    /// Surface membership of the configured viewpoints.
    Member,
    /// Crossings along straight paths.
    Cross,
    /// P3P count over a planar slice.
    Map,
    /// Square-root separation law at cylinder points.
    Fold,
    /// Jacobian rank on and off the cylinder.
    Rank,
    /// Identity survey of Rieck's entities.
    RieckReport,
}

impl Cmd {
    fn command(self) -> Command {
        match self {
            Cmd::Sweep => Command::Sweep,
            Cmd::Fit => Command::Fit,
            Cmd::Member => Command::Member,
            Cmd::Cross => Command::Cross,
            Cmd::Map => Command::Map,
            Cmd::Fold => Command::Fold,
            Cmd::Rank => Command::Rank,
            Cmd::RieckReport => Command::RieckReport,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Cmd::Sweep => "sweep",
            Cmd::Fit => "fit",
            Cmd::Member => "member",
            Cmd::Cross => "cross",
            Cmd::Map => "map",
            Cmd::Fold => "fold",
            Cmd::Rank => "rank",
            Cmd::RieckReport => "rieck-report",
        }
    }
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    csdc_version: &'a str,
    core_version: &'a str,
    config: &'a ExperimentConfig,
    files: Vec<FileEntry>,
    checks: &'a [commands::Check],
    /// The only field that differs between reruns.
    wall_time_ms: u128,
}

fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("--config <file> is required"))?;
    let text = fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
    let mut cfg = ExperimentConfig::from_json_str(&text)?;
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = Some(o.clone());
    }
    Ok(cfg)
}

fn write_outputs(dir: &Path, outcome: &commands::Outcome) -> anyhow::Result<Vec<FileEntry>> {
    fs::create_dir_all(dir)?;
    outcome
        .files
        .iter()
        .map(|(name, data)| {
            fs::write(dir.join(name), data)?;
            Ok(FileEntry {
                name: name.clone(),
                bytes: data.len(),
                sha256: sha256_hex(data),
            })
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let command = cli.command.command();
    if let Err(e) = cfg.check_command(command) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match commands::run(command, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let files = match write_outputs(&dir, &outcome) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: writing outputs: {e}");
            return ExitCode::from(1);
        }
    };
    let manifest = Manifest {
        command: cli.command.name(),
        csdc_version: env!("CARGO_PKG_VERSION"),
        core_version: csdc_core::VERSION,
        config: &cfg,
        files,
        checks: &outcome.checks,
        wall_time_ms: started.elapsed().as_millis(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    if let Err(e) = fs::write(dir.join("manifest.json"), text) {
        eprintln!("error: writing manifest: {e}");
        return ExitCode::from(1);
    }
    for c in &outcome.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if outcome.checks.iter().all(|c| c.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
