//! Command execution behind the `noma-fbc` binary. Each command renders a
//! complete document (JSON or CSV) and an exit status.

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::approx::{max_bound_gap, ApproxContext};
use crate::config::{ConfigError, Format, HybridMethod, RunConfig};
use crate::error::Error;
use crate::fbc::fbc_residual;
use crate::hybrid::{self, HybridAllocation, HybridCase, HybridOrigin, HybridParams, TdmaAllocation};
use crate::noma::{self, NomaAllocation};
use crate::output::{self, round_json, GapRow};
use crate::scenario::{ScenarioParams, SolveResult, User};
use crate::sim::{self, Scheme};

/// Exit status for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for an infeasible single-instance solve.
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolveNoma,
    SolveHybrid,
    SolveTdma,
    MinLatency,
    Feasibility,
    Sweep,
    MonteCarlo,
    ApproxGap,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::SolveNoma => "solve-noma",
            Command::SolveHybrid => "solve-hybrid",
            Command::SolveTdma => "solve-tdma",
            Command::MinLatency => "min-latency",
            Command::Feasibility => "feasibility",
            Command::Sweep => "sweep",
            Command::MonteCarlo => "monte-carlo",
            Command::ApproxGap => "approx-gap",
        }
    }

    fn is_single_solve(&self) -> bool {
        !matches!(self, Command::Sweep | Command::MonteCarlo | Command::ApproxGap)
    }

    fn default_format(&self) -> Format {
        if self.is_single_solve() {
            Format::Json
        } else {
            Format::Csv
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Solver(_) => EXIT_CONFIG,
            CliError::Output(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

/// A rendered command result.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub body: String,
    pub exit_code: i32,
    /// Per-realization records CSV, when requested by a sweep.
    pub records: Option<String>,
}

/// Format from the config, else from the output extension, else the
/// command's default.
pub fn output_format(command: Command, config: &RunConfig) -> Format {
    if let Some(f) = config.format {
        return f;
    }
    match config.output.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        _ => command.default_format(),
    }
}

fn status_fields<A: Serialize>(r: &SolveResult<A>) -> (Value, Value, Value) {
    match r {
        SolveResult::Feasible(a) => (json!("feasible"), Value::Null, serde_json::to_value(a).unwrap()),
        SolveResult::Infeasible(why) => (json!("infeasible"), json!(why.as_str()), Value::Null),
    }
}

fn noma_certificates(s: &ScenarioParams, a: &NomaAllocation) -> Result<Value, Error> {
    Ok(json!({
        "residual1": fbc_residual(a.m1 as f64, a.gamma1, &s.fbc(User::One)?),
        "residual2": fbc_residual(a.m2 as f64, a.gamma2, &s.fbc(User::Two)?),
    }))
}

fn tdma_certificates(s: &ScenarioParams, a: &TdmaAllocation) -> Result<Value, Error> {
    Ok(json!({
        "residual1": fbc_residual(a.m1 as f64, a.gamma1, &s.fbc(User::One)?),
        "residual2": fbc_residual(a.m2 as f64, a.gamma2, &s.fbc(User::Two)?),
    }))
}

/// Residuals of the SINRs implied by a hybrid allocation's powers.
fn hybrid_certificates(p: &HybridParams, a: &HybridAllocation) -> Result<Value, Error> {
    let s = &p.scenario;
    let (h1, h2) = (s.user1.gain, s.user2.gain);
    let mut out = serde_json::Map::new();
    match a.origin {
        HybridOrigin::PureNoma(scheme) => {
            let alloc = match scheme {
                noma::NomaScheme::CaseI => noma::solve_case1(s)?,
                noma::NomaScheme::CaseIIFullBlock => noma::solve_case2_full(s)?,
                noma::NomaScheme::CaseIIShortBlock => noma::solve_case2_sic(s)?,
            };
            if let Some(n) = alloc.feasible() {
                return noma_certificates(s, n);
            }
        }
        HybridOrigin::Tdma => {
            if let Some(t) = hybrid::tdma_solver(s)?.feasible() {
                return tdma_certificates(s, t);
            }
        }
        HybridOrigin::Split => {
            let g1 = match a.case {
                HybridCase::I => a.p1 * h1 / (a.p21 * h1 + 1.0),
                HybridCase::II => a.p1 * h1,
            };
            out.insert("residual1".into(), json!(fbc_residual(a.m1 as f64, g1, &s.fbc(User::One)?)));
            if a.n21 > 0 {
                let g21 = match a.case {
                    HybridCase::I => a.p21 * h2,
                    HybridCase::II => a.p21 * h2 / (a.p1 * h2 + 1.0),
                };
                let f = s.codeword(a.n21, p.eps21)?;
                out.insert("residual21".into(), json!(fbc_residual(a.m21 as f64, g21, &f)));
            }
            if a.n22 > 0 {
                let f = s.codeword(a.n22, p.eps22)?;
                out.insert("residual22".into(), json!(fbc_residual(a.m22 as f64, a.p22 * h2, &f)));
            }
        }
    }
    Ok(Value::Object(out))
}

fn single(command: Command, config: &RunConfig) -> Result<(Value, bool), CliError> {
    let s = config.scenario.complete()?;
    let mut doc = serde_json::Map::new();
    let feasible;
    match command {
        Command::SolveNoma | Command::MinLatency => {
            let r = if command == Command::SolveNoma {
                noma::solve_noma(&s)?
            } else {
                noma::minimize_latency(&s, config.latency_cap)?
            };
            feasible = r.is_feasible();
            let (status, reason, alloc) = status_fields(&r);
            doc.insert("status".into(), status);
            doc.insert("reason".into(), reason);
            doc.insert("allocation".into(), alloc);
            if command == Command::SolveNoma && s.user1.gain > s.user2.gain {
                let b = noma::solve_case2_branches(&s)?;
                let branch = |r: &SolveResult<NomaAllocation>| {
                    let (status, reason, alloc) = status_fields(r);
                    json!({ "status": status, "reason": reason, "energy": alloc.get("energy").cloned() })
                };
                doc.insert("branches".into(), json!({
                    "full_block": branch(&b.full_block),
                    "short_block": branch(&b.short_block),
                }));
            }
            if let Some(a) = r.feasible() {
                doc.insert("certificates".into(), noma_certificates(&s, a)?);
            }
        }
        Command::SolveTdma => {
            let r = hybrid::tdma_solver(&s)?;
            feasible = r.is_feasible();
            let (status, reason, alloc) = status_fields(&r);
            doc.insert("status".into(), status);
            doc.insert("reason".into(), reason);
            doc.insert("allocation".into(), alloc);
            if let Some(a) = r.feasible() {
                doc.insert("certificates".into(), tdma_certificates(&s, a)?);
            }
        }
        Command::SolveHybrid => {
            let p = config.hybrid_params()?;
            let r = match (config.method, HybridCase::of(&s)) {
                (HybridMethod::GoldenSection, _) => hybrid::solve_hybrid(&p)?,
                (HybridMethod::Exhaustive, HybridCase::I) => hybrid::solve_hybrid_exhaustive(&p)?,
                (HybridMethod::Exhaustive, HybridCase::II) => hybrid::solve_hybrid_case2_exhaustive(&p)?,
            };
            feasible = r.is_feasible();
            let (status, reason, alloc) = status_fields(&r);
            doc.insert("status".into(), status);
            doc.insert("reason".into(), reason);
            doc.insert("allocation".into(), alloc);
            if let Some(a) = r.feasible() {
                doc.insert("certificates".into(), hybrid_certificates(&p, a)?);
            }
        }
        Command::Feasibility => {
            let scheme = config.feasibility_scheme;
            let reason = match scheme {
                Scheme::Noma => reason_of(&noma::solve_noma(&s)?),
                Scheme::ShannonNoma => reason_of(&sim::shannon_baseline(&s)?),
                Scheme::Tdma => reason_of(&hybrid::tdma_solver(&s)?),
                Scheme::Hybrid => reason_of(&hybrid::solve_hybrid(&config.hybrid_params()?)?),
            };
            feasible = reason.is_none();
            doc.insert("scheme".into(), json!(scheme.as_str()));
            doc.insert("feasible".into(), json!(feasible));
            doc.insert("status".into(), json!(if feasible { "feasible" } else { "infeasible" }));
            doc.insert("reason".into(), reason.map_or(Value::Null, |r| json!(r)));
        }
        _ => unreachable!(),
    }
    Ok((Value::Object(doc), feasible))
}

fn reason_of<A>(r: &SolveResult<A>) -> Option<&'static str> {
    match r {
        SolveResult::Feasible(_) => None,
        SolveResult::Infeasible(why) => Some(why.as_str()),
    }
}

fn envelope(command: Command, config: &RunConfig, body: Value) -> Value {
    let mut doc = serde_json::Map::new();
    doc.insert("command".into(), json!(command.as_str()));
    doc.insert("config".into(), serde_json::to_value(config.to_raw()).unwrap());
    if let Value::Object(m) = round_json(body) {
        doc.extend(m);
    }
    Value::Object(doc)
}

fn render_json(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).unwrap();
    s.push('\n');
    s
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    String::from_utf8(buf).map_err(|e| CliError::Output(e.to_string()))
}

/// Runs one command against a resolved configuration.
pub fn execute(command: Command, config: &RunConfig) -> Result<Report, CliError> {
    let format = output_format(command, config);
    if command.is_single_solve() {
        let (body, feasible) = single(command, config)?;
        let doc = envelope(command, config, body);
        let text = match format {
            Format::Json => render_json(&doc),
            Format::Csv => csv_string(|b| output::write_fields_csv(b, &doc))?,
        };
        let exit_code = if feasible { 0 } else { EXIT_INFEASIBLE };
        return Ok(Report { body: text, exit_code, records: None });
    }
    let mut records = None;
    let text = match command {
        Command::Sweep => {
            let keep = config.records.is_some();
            let table = sim::energy_sweep(&config.experiment, keep)?;
            if keep {
                records = Some(csv_string(|b| output::write_records_csv(b, &config.experiment.schemes, &table.records))?);
            }
            match format {
                Format::Csv => csv_string(|b| output::write_energy_csv(b, &table))?,
                Format::Json => render_json(&envelope(
                    command,
                    config,
                    json!({ "seed": table.seed, "realizations": table.realizations, "rows": table.rows }),
                )),
            }
        }
        Command::MonteCarlo => {
            let table = sim::estimate_infeasibility(&config.experiment)?;
            match format {
                Format::Csv => csv_string(|b| output::write_infeasibility_csv(b, &table))?,
                Format::Json => {
                    render_json(&envelope(command, config, json!({ "seed": table.seed, "rows": table.rows })))
                }
            }
        }
        Command::ApproxGap => {
            let mut rows = Vec::new();
            for &m in &config.blocklengths {
                for &eps in &config.error_probs {
                    let ctx = ApproxContext::for_codeword(m, eps)?;
                    rows.push(GapRow { blocklength: m, error_prob: eps, gap: max_bound_gap(&ctx) });
                }
            }
            match format {
                Format::Csv => csv_string(|b| output::write_gap_csv(b, &rows))?,
                Format::Json => render_json(&envelope(command, config, json!({ "rows": rows }))),
            }
        }
        _ => unreachable!(),
    };
    Ok(Report { body: text, exit_code: 0, records })
}
