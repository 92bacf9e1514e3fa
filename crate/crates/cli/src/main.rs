use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qutrit_tele::optics::StageName;
use qutrit_tele::pipeline::{run_pipeline, PipelineConfig, PipelineName, Report};
use qutrit_tele::stats::RateConvention;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    TeleportSim,
    Tomography,
    Process,
    Certify,
    McErrors,
    MubStudy,
    FullReproduction,
}

impl From<Command> for PipelineName {
    fn from(c: Command) -> Self {
        match c {
            Command::TeleportSim => PipelineName::TeleportSim,
            Command::Tomography => PipelineName::Tomography,
            Command::Process => PipelineName::Process,
            Command::Certify => PipelineName::Certify,
            Command::McErrors => PipelineName::McErrors,
            Command::MubStudy => PipelineName::MubStudy,
            Command::FullReproduction => PipelineName::FullReproduction,
        }
    }
}

/// Qutrit teleportation analyses: optical simulation, tomography, certification
/// and Monte Carlo error studies.
#[derive(Debug, Parser)]
#[command(name = "qtele", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Matrix JSON or counts CSV inputs; bundled data is used when none are given.
    inputs: Vec<PathBuf>,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    #[arg(long, default_value_t = 100)]
    trials: usize,

    /// HOM visibility of the input photon and the auxiliary pair.
    #[arg(long, default_value_t = 1.0)]
    visibility: f64,

    /// Expected counts per setting (the counting rate for mub-study).
    #[arg(long, default_value_t = 150.0)]
    exposure: f64,

    /// Split the counting rate over the settings of each input state.
    #[arg(long)]
    rate_per_state: bool,

    /// Phase grid for batch certification, e.g. 20x20.
    #[arg(long, default_value = "20x20", value_parser = parse_grid)]
    grid: [usize; 2],

    /// Phases kπ/(n−1) covering [0, π] (default).
    #[arg(long, conflicts_with = "half_open")]
    closed_interval: bool,

    /// Phases kπ/n covering [0, π).
    #[arg(long)]
    half_open: bool,

    /// Record the Fock state after this circuit stage (teleport-sim).
    #[arg(long, value_parser = parse_stage)]
    stage: Option<StageName>,

    /// Compare results with the published values; exit 5 on any mismatch.
    #[arg(long)]
    check: bool,

    /// Directory for report.json and CSV series; the report goes to stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got `{s}`"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    Ok([n(a)?, n(b)?])
}

fn parse_stage(s: &str) -> Result<StageName, String> {
    s.parse().map_err(|e: qutrit_tele::Error| e.to_string())
}

fn write_outputs(report: &Report, dir: &PathBuf) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json())?;
    for (name, csv) in &report.series {
        std::fs::write(dir.join(name), csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = PipelineConfig::new(cli.command.into());
    config.seed = cli.seed;
    config.trials = cli.trials;
    config.visibility = cli.visibility;
    config.exposure = cli.exposure;
    config.rate_convention = if cli.rate_per_state {
        RateConvention::PerState
    } else {
        RateConvention::PerSetting
    };
    config.grid = cli.grid;
    config.closed_interval = !cli.half_open;
    config.inputs = cli.inputs;
    config.stage = cli.stage;
    config.check = cli.check;

    let report = run_pipeline(config);
    match &cli.out {
        Some(dir) => {
            if let Err(e) = write_outputs(&report, dir) {
                eprintln!("error: cannot write {}: {e}", dir.display());
                return ExitCode::from(2);
            }
        }
        None => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = writeln!(std::io::stdout(), "{}", report.to_json());
        }
    }
    if let Some(f) = &report.failure {
        eprintln!("error in {}: {}", f.stage, f.message);
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} ({})", c.name, c.detail);
    }
    ExitCode::from(report.exit_code() as u8)
}
