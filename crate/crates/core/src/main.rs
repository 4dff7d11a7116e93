use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde::de::DeserializeOwned;

use noma_fbc::cli::{self, Command, EXIT_CONFIG};
use noma_fbc::config::{ConfigError, Format, HybridMethod, RawConfig, SweepValue};
use noma_fbc::sim::{AxisKind, Condition, Fading, Scheme};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    SolveNoma,
    SolveHybrid,
    SolveTdma,
    MinLatency,
    Feasibility,
    Sweep,
    MonteCarlo,
    ApproxGap,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::SolveNoma => Command::SolveNoma,
            CommandArg::SolveHybrid => Command::SolveHybrid,
            CommandArg::SolveTdma => Command::SolveTdma,
            CommandArg::MinLatency => Command::MinLatency,
            CommandArg::Feasibility => Command::Feasibility,
            CommandArg::Sweep => Command::Sweep,
            CommandArg::MonteCarlo => Command::MonteCarlo,
            CommandArg::ApproxGap => Command::ApproxGap,
        }
    }
}

fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn sweep_value(s: &str) -> Result<SweepValue, String> {
    Ok(s.parse::<f64>().map(SweepValue::Number).unwrap_or_else(|_| SweepValue::Text(s.to_string())))
}

/// Energy-minimal allocation for two-user short-packet downlinks.
///
/// Settings come from an optional config file (TOML with sections, or a
/// previous JSON result) and are overridden by flags. Powers need a unit:
/// "40dBm", "10W", "250mW". Exit status: 0 success, 2 configuration
/// error, 3 infeasible single-instance solve.
#[derive(Debug, Parser)]
#[command(name = "noma-fbc", version)]
struct Cli {
    command: CommandArg,

    /// Config file (TOML, or a JSON result carrying a "config" object).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv | json (default: json for single solves, csv for tables).
    #[arg(long, value_parser = kebab::<Format>)]
    format: Option<Format>,
    /// Per-realization records CSV for sweeps.
    #[arg(long)]
    records: Option<PathBuf>,

    /// User 1 bits [default: 256].
    #[arg(long)]
    n1: Option<u64>,
    /// User 2 bits [default: 256].
    #[arg(long)]
    n2: Option<u64>,
    /// User 1 deadline, symbols [default: 256].
    #[arg(long)]
    d1: Option<u32>,
    /// User 2 deadline, symbols [default: 640].
    #[arg(long)]
    d2: Option<u32>,
    /// User 1 block error target [default: 1e-6].
    #[arg(long)]
    eps1: Option<f64>,
    /// User 2 block error target [default: 1e-6].
    #[arg(long)]
    eps2: Option<f64>,
    /// User 1 normalized gain (linear).
    #[arg(long)]
    h1: Option<f64>,
    /// User 2 normalized gain (linear).
    #[arg(long)]
    h2: Option<f64>,
    /// Power budget with unit [default: 40dBm].
    #[arg(long, allow_hyphen_values = true)]
    p_max: Option<String>,
    /// Minimum blocklength [default: 100].
    #[arg(long)]
    min_blocklength: Option<u32>,

    /// Error target of the superposed part of user 2's packet [default: eps2/2].
    #[arg(long)]
    eps21: Option<f64>,
    /// Error target of the orthogonal part [default: eps2/2].
    #[arg(long)]
    eps22: Option<f64>,
    /// Golden-section stopping width in bits [default: 0.5].
    #[arg(long)]
    gss_tol: Option<f64>,
    /// golden-section | exhaustive [default: golden-section].
    #[arg(long, value_parser = kebab::<HybridMethod>)]
    method: Option<HybridMethod>,
    /// Blocklength cap for min-latency [default: 1000000].
    #[arg(long)]
    latency_cap: Option<u32>,
    /// Scheme checked by feasibility: noma | tdma | hybrid | shannon-noma [default: noma].
    #[arg(long, value_parser = kebab::<Scheme>)]
    scheme: Option<Scheme>,

    /// Comma-separated schemes: noma, tdma, hybrid, shannon-noma [default: noma,tdma].
    #[arg(long, value_delimiter = ',', value_parser = kebab::<Scheme>)]
    schemes: Option<Vec<Scheme>>,
    /// d1 | p-max-dbm | packets [default: d1].
    #[arg(long, value_parser = kebab::<AxisKind>)]
    axis: Option<AxisKind>,
    /// Comma-separated sweep values; P_max values need a unit.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = sweep_value)]
    values: Option<Vec<SweepValue>>,
    /// Channel realizations [default: 1000].
    #[arg(long)]
    realizations: Option<u64>,
    /// RNG seed [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// all | h1-less-h2 | h1-at-least-h2 [default: all].
    #[arg(long, value_parser = kebab::<Condition>)]
    condition: Option<Condition>,
    /// Scale reported energies by a 0.25 dB SNR loss.
    #[arg(long)]
    snr_loss: bool,
    /// rayleigh | none [default: rayleigh].
    #[arg(long, value_parser = kebab::<Fading>)]
    fading: Option<Fading>,
    /// Noise power with unit [default: -110dBm].
    #[arg(long, allow_hyphen_values = true)]
    noise_power: Option<String>,
}

impl Cli {
    fn overrides(&self) -> RawConfig {
        let mut r = RawConfig::default();
        let s = &mut r.scenario;
        s.n1 = self.n1;
        s.n2 = self.n2;
        s.d1 = self.d1;
        s.d2 = self.d2;
        s.eps1 = self.eps1;
        s.eps2 = self.eps2;
        s.h1 = self.h1;
        s.h2 = self.h2;
        s.p_max = self.p_max.clone();
        s.min_blocklength = self.min_blocklength;
        r.hybrid.eps21 = self.eps21;
        r.hybrid.eps22 = self.eps22;
        r.hybrid.gss_tol = self.gss_tol;
        r.hybrid.method = self.method;
        r.solver.latency_cap = self.latency_cap;
        r.solver.feasibility_scheme = self.scheme;
        let e = &mut r.experiment;
        e.schemes = self.schemes.clone();
        e.axis = self.axis;
        e.values = self.values.clone();
        e.realizations = self.realizations;
        e.seed = self.seed;
        e.condition = self.condition;
        e.snr_loss = self.snr_loss.then_some(true);
        r.channel.fading = self.fading;
        r.channel.noise_power = self.noise_power.clone();
        r.output.path = self.output.clone();
        r.output.format = self.format;
        r.output.records = self.records.clone();
        r
    }
}

fn load(cli: &Cli) -> Result<RawConfig, ConfigError> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError::Syntax(format!("{}: {e}", path.display())))?;
            RawConfig::from_str_auto(&text)?
        }
        None => RawConfig::default(),
    };
    raw.overlay(&cli.overrides());
    Ok(raw)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli).and_then(|raw| raw.resolve()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let report = match cli::execute(cli.command.into(), &config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let write = |path: &PathBuf, text: &str| {
        fs::write(path, text).map_err(|e| eprintln!("error: {}: {e}", path.display()))
    };
    match &config.output {
        Some(path) => {
            if write(path, &report.body).is_err() {
                return ExitCode::from(1);
            }
        }
        None => print!("{}", report.body),
    }
    if let (Some(path), Some(records)) = (&config.records, &report.records) {
        if write(path, records).is_err() {
            return ExitCode::from(1);
        }
    }
    ExitCode::from(report.exit_code as u8)
}
