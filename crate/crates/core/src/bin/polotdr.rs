use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use polotdr::config::{parse_config, ManifestInfo};
use polotdr::error::{Error, Result};
use polotdr::estimators::{estimate_traces, ChannelSource, EstimatorOptions};
use polotdr::experiments::{run_inputs, run_scenario, ScenarioConfig, SweepKind};
use polotdr::io::{self, Coefficient};
use polotdr::metrics::{stdv_profile, DiffMode};
use polotdr::output::{emit_outputs, emit_profiles};
use polotdr::ProbeScheme;

#[derive(Parser)]
#[command(name = "polotdr", version, about = "Polarization-diverse phase-OTDR simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// StDv of one segment versus TX/RX misalignment θ.
    SweepTheta(Common),
    /// Column sum and SIMO StDv of one segment versus birefringence angle Θ.
    SweepThetaCap(Common),
    /// Per-segment StDv along one random fiber.
    Profile {
        #[command(flatten)]
        common: Common,
        /// Also write the simulated channel estimates as a measured record.
        #[arg(long)]
        export_observations: bool,
    },
    /// Mean StDv profile over many random fibers.
    MonteCarlo(Common),
    /// StDv profiles of a measured channel-estimate record.
    Ingest {
        #[command(flatten)]
        common: Common,
        /// Measured record CSV.
        #[arg(long)]
        input: PathBuf,
        /// Time between estimates; overrides the config file.
        #[arg(long)]
        dt_s: Option<f64>,
        /// Segment length; overrides the config file.
        #[arg(long)]
        segment_length_m: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (flat TOML key/value).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "POLOTDR_OUT_DIR", default_value = "polotdr-out")]
    out: PathBuf,
    /// Comma-separated subset of siso,simo,mimo.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<ProbeScheme>>,
    /// temporal, spatial or none.
    #[arg(long)]
    diff_mode: Option<DiffMode>,
    /// Skip the SVG plots.
    #[arg(long)]
    no_plots: bool,
    /// File stem; defaults to `<scenario name>_<unix time>`.
    #[arg(long)]
    name: Option<String>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn load(common: &Common, sweep: SweepKind) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let cfg = parse_config(path)?;
            if cfg.sweep != sweep {
                return Err(Error::Config {
                    key: Some("sweep".into()),
                    line: None,
                    message: format!("file declares `{}` but the subcommand runs `{sweep}`", cfg.sweep),
                });
            }
            cfg
        }
        None => ScenarioConfig::new(sweep, polotdr::FiberSpec::default().length_m),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(schemes) = &common.schemes {
        cfg.schemes = schemes.clone();
    }
    if let Some(mode) = common.diff_mode {
        cfg.diff_mode = mode;
    }
    cfg.resolve()
}

fn stem(common: &Common, default: &str, timestamp: u64) -> Result<String> {
    match &common.name {
        Some(n) if n.is_empty() || n.contains(['/', '\\']) => {
            Err(Error::invalid("--name must be a nonempty file-name stem"))
        }
        Some(n) => Ok(n.clone()),
        None => Ok(format!("{default}_{timestamp}")),
    }
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn simulate(common: &Common, sweep: SweepKind, export_observations: bool) -> Result<()> {
    let cfg = load(common, sweep)?;
    let timestamp = now_unix();
    let stem = stem(common, &cfg.name, timestamp)?;
    io::check_writable(&common.out)?;
    let output = run_scenario(&cfg)?;
    let info = ManifestInfo {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        timestamp_unix_s: timestamp,
        notes: vec![],
    };
    let mut written = emit_outputs(&common.out, &stem, &cfg, &output, &info, common.no_plots)?;
    if export_observations {
        let inputs = run_inputs(&cfg, 0, None, None)?;
        let csv = io::measured_csv(&inputs.channel(&cfg.noise), &Coefficient::ALL);
        let path = common.out.join(format!("{stem}_observations.csv"));
        io::write_file(&path, &csv)?;
        written.push(path);
    }
    report(&written);
    Ok(())
}

fn ingest(common: &Common, input: &Path, dt_s: Option<f64>, segment_length_m: Option<f64>) -> Result<()> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(path)?,
        None => ScenarioConfig::new(SweepKind::DistanceProfile, polotdr::FiberSpec::default().length_m),
    };
    if let Some(mode) = common.diff_mode {
        cfg.diff_mode = mode;
    }
    let dt = dt_s.unwrap_or(cfg.noise.dt_s);
    if let Some(sr) = segment_length_m {
        if !(sr.is_finite() && sr > 0.0) {
            return Err(Error::invalid(format!("--segment-length-m must be > 0, got {sr}")));
        }
        cfg.fiber.segment_length_m = sr;
    }
    let stem = stem(common, "ingest", now_unix())?;
    io::check_writable(&common.out)?;
    let measured = io::ingest_measured(input, &cfg.fiber, dt)?;
    let opts = EstimatorOptions {
        launch_column: cfg.launch_column,
    };
    let schemes = match &common.schemes {
        Some(s) => s.clone(),
        None => measured.compatible_schemes(opts),
    };
    if schemes.is_empty() {
        return Err(Error::SchemeMismatch(format!(
            "record carries {:?}; no scheme can run on it",
            measured.present().iter().map(|c| c.name()).collect::<Vec<_>>()
        )));
    }
    let traces = estimate_traces(&measured, &schemes, opts)?;
    let profiles = traces
        .iter()
        .map(|t| stdv_profile(t, cfg.diff_mode, cfg.strict))
        .collect::<Result<Vec<_>>>()?;
    eprintln!(
        "ingested {} segments x {} samples",
        measured.n_segments(),
        measured.n_samples()
    );
    report(&emit_profiles(&common.out, &stem, &profiles, common.no_plots)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SweepTheta(c) => simulate(&c, SweepKind::ThetaMis, false),
        Command::SweepThetaCap(c) => simulate(&c, SweepKind::ThetaCap, false),
        Command::Profile {
            common,
            export_observations,
        } => simulate(&common, SweepKind::DistanceProfile, export_observations),
        Command::MonteCarlo(c) => simulate(&c, SweepKind::MonteCarlo, false),
        Command::Ingest {
            common,
            input,
            dt_s,
            segment_length_m,
        } => ingest(&common, &input, dt_s, segment_length_m),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.kind().to_string();
            let detail = e.to_string();
            let first = detail
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or(&msg)
                .trim_start_matches("error: ");
            eprintln!("E_CONFIG: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
