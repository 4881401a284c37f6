mod commands;
mod config;
mod error;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{RunConfig, Settings};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "cachecoder",
    version,
    about = "Secure multi-transmitter coded caching simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration end to end and report measured against predicted values.
    Run(Flags),
    /// Evaluate a grid of points and write one CSV row per point.
    Sweep(Flags),
    /// Evaluate the closed forms only, as CSV.
    Formulas(Flags),
    /// Run a delivery and audit what the eavesdropper observes.
    Audit(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// mt, grouped, feedback, decentralized or formulas-only
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long = "K", value_name = "USERS")]
    users: Option<String>,
    #[arg(long = "L", value_name = "STREAMS")]
    streams: Option<String>,
    /// Library size; defaults to K.
    #[arg(long = "N", value_name = "FILES")]
    files: Option<String>,
    #[arg(long, conflicts_with_all = ["memory", "q"])]
    t: Option<String>,
    /// Memory per user in files, e.g. 2.5 or 5/2.
    #[arg(long = "M", value_name = "MEMORY", conflicts_with = "q")]
    memory: Option<String>,
    /// Caching probability of the decentralized scheme.
    #[arg(long)]
    q: Option<String>,
    /// File length in symbols, or auto for the smallest valid one.
    #[arg(long)]
    f: Option<String>,
    #[arg(long = "field-bits", value_name = "M")]
    field_bits: Option<String>,
    /// Master seed; CACHECODER_SEED is used when neither this nor the config sets it.
    #[arg(long)]
    seed: Option<String>,
    /// worst, random or a list of 1-based file labels such as 1,2,3
    #[arg(long)]
    demand: Option<String>,
    /// ideal or bernoulli (decentralized only)
    #[arg(long = "placement-mode")]
    placement_mode: Option<String>,
    /// Key-resample trials for the uniformity test.
    #[arg(long)]
    trials: Option<String>,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replay deliveries with all-zero keys.
    #[arg(long = "ablate-keys")]
    ablate_keys: bool,
    /// Make the second block reuse the first block's key before auditing.
    #[arg(long = "inject-key-reuse")]
    inject_key_reuse: bool,
    /// Audit p-value threshold.
    #[arg(long = "p-threshold")]
    p_threshold: Option<String>,
    /// Sweep axis NAME=v1,v2,...; repeat for a product grid.
    #[arg(long)]
    axis: Vec<String>,
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut base = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let mut flags = Settings::default();
        let pairs = [
            ("scheme", &self.scheme),
            ("K", &self.users),
            ("L", &self.streams),
            ("N", &self.files),
            ("t", &self.t),
            ("M", &self.memory),
            ("q", &self.q),
            ("f", &self.f),
            ("field-bits", &self.field_bits),
            ("seed", &self.seed),
            ("demand", &self.demand),
            ("placement-mode", &self.placement_mode),
            ("trials", &self.trials),
            ("jobs", &self.jobs),
            ("p-threshold", &self.p_threshold),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                flags.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            flags.set("out", &out.to_string_lossy())?;
        }
        if self.ablate_keys {
            flags.set("ablate-keys", "true")?;
        }
        if self.inject_key_reuse {
            flags.set("inject-key-reuse", "true")?;
        }
        flags.axes = self.axis.clone();
        base.overlay(flags)?;
        Ok(base)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let env_seed = std::env::var("CACHECODER_SEED").ok();
    let env_seed = env_seed.as_deref();
    match cli.command {
        Command::Run(flags) => {
            let s = flags.settings()?;
            let cfg = RunConfig::from_settings(&s, env_seed)?;
            let text = commands::cmd_run(&cfg)?;
            commands::write_output(&text, s.get("out"))
        }
        Command::Audit(flags) => {
            let s = flags.settings()?;
            let cfg = RunConfig::from_settings(&s, env_seed)?;
            let text = commands::cmd_audit(&cfg)?;
            commands::write_output(&text, s.get("out"))
        }
        Command::Sweep(flags) => {
            let s = flags.settings()?;
            let (csv, failure) = commands::sweep_csv(&s, true, env_seed)?;
            commands::write_output(&csv, s.get("out"))?;
            failure.map_or(Ok(()), |e| Err(CliError::Decode(e)))
        }
        Command::Formulas(flags) => {
            let s = flags.settings()?;
            let (csv, _) = commands::sweep_csv(&s, false, env_seed)?;
            commands::write_output(&csv, s.get("out"))
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
