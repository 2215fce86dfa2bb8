use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{
    cmd_compare_sgd, cmd_grid, cmd_identify, cmd_replicate_ex1, cmd_replicate_ex2, cmd_simulate, ExperimentConfig,
    GridSpec, Report,
};
use crate::error::{Error, Result};
use crate::surface::Normalization;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pfml", version, about = "Identify state-space models over frozen particle systems")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command. They override the config file.
#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// TOML experiment file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; falls back to the config file, then to PFML_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub repeats: Option<usize>,
    /// Worker threads for repeats (default: logical cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Particles.
    #[arg(long = "N", global = true)]
    pub particles: Option<usize>,
    /// Outer iterations.
    #[arg(long = "K", global = true)]
    pub iterations: Option<usize>,
    /// Data length when simulating.
    #[arg(long = "T", global = true)]
    pub horizon: Option<usize>,
    #[arg(long, global = true)]
    pub burn_in: Option<usize>,
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// example1 | example2 | lgss
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Dataset CSV to use instead of simulating.
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Surface normalizer: resampled-ancestors | all-particles
    #[arg(long, global = true, value_parser = parse_normalization)]
    pub normalization: Option<Normalization>,
}

fn parse_normalization(s: &str) -> std::result::Result<Normalization, String> {
    match s {
        "resampled-ancestors" => Ok(Normalization::ResampledAncestors),
        "all-particles" => Ok(Normalization::AllParticles),
        _ => Err(format!("expected resampled-ancestors or all-particles, got {s:?}")),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a dataset.
    Simulate,
    /// Run repeated identification and pool the estimate.
    Identify,
    /// Evaluate frozen likelihood surfaces over a one-parameter grid.
    Grid(GridArgs),
    /// Compare against the stochastic-gradient baseline at equal cost.
    CompareSgd,
    /// Example 1 replication outputs.
    ReplicateEx1,
    /// Example 2 replication outputs.
    ReplicateEx2,
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    /// Independent frozen systems, one surface each.
    #[arg(long)]
    pub repeat: Option<usize>,
    /// Parameter name to vary.
    #[arg(long)]
    pub component: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub lower: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub upper: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Comma-separated reference parameter.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta_ref: Option<Vec<f64>>,
}

/// Starting config: the file if given, else the command's preset.
fn base_config(common: &CommonArgs, command: &Command) -> Result<(ExperimentConfig, bool)> {
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let has_seed = text
            .parse::<toml::Table>()
            .map_err(|e| Error::Config(e.to_string()))?
            .contains_key("seed");
        return Ok((ExperimentConfig::from_toml_str(&text)?, has_seed));
    }
    let model = match command {
        Command::ReplicateEx1 => "example1",
        Command::ReplicateEx2 => "example2",
        _ => common.model.as_deref().unwrap_or("example1"),
    };
    let preset = match model {
        "example1" => ExperimentConfig::example1(),
        "example2" => ExperimentConfig::example2(),
        other => ExperimentConfig { model: other.into(), ..ExperimentConfig::default() },
    };
    Ok((preset, false))
}

/// Applies flags over the base config and validates the result.
pub fn resolve_config(common: &CommonArgs, command: &Command) -> Result<ExperimentConfig> {
    let (mut cfg, file_seed) = base_config(common, command)?;
    macro_rules! set {
        ($flag:expr, $field:expr) => {
            if let Some(v) = $flag.clone() {
                $field = v;
            }
        };
    }
    set!(common.out, cfg.out);
    set!(common.repeats, cfg.repeats);
    set!(common.particles, cfg.particles);
    set!(common.iterations, cfg.iterations);
    set!(common.horizon, cfg.horizon);
    set!(common.burn_in, cfg.burn_in);
    set!(common.bins, cfg.bins);
    set!(common.model, cfg.model);
    set!(common.normalization, cfg.normalization);
    if common.workers.is_some() {
        cfg.workers = common.workers;
    }
    if common.data.is_some() {
        cfg.dataset = common.data.clone();
    }
    match common.seed {
        Some(s) => cfg.seed = s,
        None if !file_seed => {
            if let Ok(text) = std::env::var("PFML_SEED") {
                cfg.seed = text.trim().parse().map_err(|_| Error::Config(format!("PFML_SEED={text:?} is not a u64")))?;
            }
        }
        None => {}
    }
    if let Command::Grid(g) = command {
        let mut spec = cfg.grid.clone().unwrap_or(GridSpec {
            component: String::new(),
            lower: f64::NAN,
            upper: f64::NAN,
            points: 101,
            systems: 1,
            theta_ref: None,
        });
        set!(g.repeat, spec.systems);
        set!(g.component, spec.component);
        set!(g.lower, spec.lower);
        set!(g.upper, spec.upper);
        set!(g.points, spec.points);
        if g.theta_ref.is_some() {
            spec.theta_ref = g.theta_ref.clone();
        }
        cfg.grid = Some(spec);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<Report> {
    let cfg = resolve_config(&cli.common, &cli.command)?;
    let mut report = match cli.command {
        Command::Simulate => cmd_simulate(&cfg),
        Command::Identify => cmd_identify(&cfg),
        Command::Grid(_) => cmd_grid(&cfg),
        Command::CompareSgd => cmd_compare_sgd(&cfg),
        Command::ReplicateEx1 => cmd_replicate_ex1(&cfg),
        Command::ReplicateEx2 => cmd_replicate_ex2(&cfg),
    }?;
    report.lines.insert(0, format!("seed {}", cfg.seed));
    Ok(report)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::NoCompletedRun(_) | Error::WeightDegeneracy { .. } => EXIT_DEGENERATE,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name), runs and returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(report) => {
            // a closed stdout (e.g. piped into head) is not a failure
            let mut out = std::io::stdout().lock();
            for line in &report.lines {
                let _ = writeln!(out, "{line}");
            }
            for f in &report.files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
