//! Run configuration: a sectioned TOML file (or a previous JSON result),
//! overlaid with command-line flags, resolved against documented defaults.
//!
//! ```toml
//! [scenario]
//! n1 = 256
//! n2 = 256
//! d1 = 256
//! d2 = 640
//! eps1 = 1e-6
//! eps2 = 1e-6
//! h1 = 100.0
//! h2 = 10.0
//! p_max = "40dBm"
//! min_blocklength = 100
//!
//! [experiment]
//! schemes = ["noma", "tdma"]
//! axis = "d1"
//! values = [256, 384, 640]
//! realizations = 1000
//! seed = 1
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hybrid::{HybridParams, DEFAULT_GSS_TOL};
use crate::noma::DEFAULT_LATENCY_CAP;
use crate::scenario::{ScenarioParams, UserSpec};
use crate::sim::{AxisKind, ChannelModel, Condition, ExperimentConfig, Fading, Scheme, SweepAxis};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid power {input:?}: {why}")]
    Power { input: String, why: &'static str },
    #[error("cannot parse config: {0}")]
    Syntax(String),
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("invalid {field}: {why}")]
    Invalid { field: &'static str, why: String },
}

/// Parses a power with an explicit unit: `"40dBm"`, `"10 W"`, `"250mW"`,
/// `"-inf dBm"` (zero watts). Returns watts.
pub fn parse_power(input: &str) -> Result<f64, ConfigError> {
    let err = |why| ConfigError::Power { input: input.to_string(), why };
    let s = input.trim();
    let lower = s.to_ascii_lowercase();
    let (number, unit) = if let Some(n) = lower.strip_suffix("dbm") {
        (n, Unit::Dbm)
    } else if let Some(n) = lower.strip_suffix("mw") {
        (n, Unit::Milliwatt)
    } else if let Some(n) = lower.strip_suffix('w') {
        (n, Unit::Watt)
    } else {
        return Err(err("expected a dBm, mW or W suffix"));
    };
    let v: f64 = number.trim().parse().map_err(|_| err("not a number"))?;
    if v.is_nan() {
        return Err(err("not a number"));
    }
    let watts = match unit {
        Unit::Dbm => 10f64.powf((v - 30.0) / 10.0),
        Unit::Milliwatt => v * 1e-3,
        Unit::Watt => v,
    };
    if !(watts >= 0.0) {
        return Err(err("power must be non-negative"));
    }
    Ok(watts)
}

enum Unit {
    Dbm,
    Milliwatt,
    Watt,
}

/// Canonical text for a power in watts, parseable by [`parse_power`].
pub fn format_power(watts: f64) -> String {
    format!("{watts:?}W")
}

/// A power in dBm. dBm text is read as written so values survive a round
/// trip; other units are converted.
pub fn parse_dbm(input: &str) -> Result<f64, ConfigError> {
    let watts = parse_power(input)?;
    let lower = input.trim().to_ascii_lowercase();
    match lower.strip_suffix("dbm") {
        Some(n) => Ok(n.trim().parse().unwrap()),
        None => Ok(30.0 + 10.0 * watts.log10()),
    }
}

/// A sweep value as written: a number, or a power string on the P_max axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n1: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_blocklength: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HybridMethod {
    GoldenSection,
    Exhaustive,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HybridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps21: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps22: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gss_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<HybridMethod>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<Scheme>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<AxisKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<SweepValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<Condition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_loss: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pathloss_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pathloss_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_power: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fading: Option<Fading>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproxSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocklengths: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_probs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub records: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency_cap: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasibility_scheme: Option<Scheme>,
}

/// Partially specified configuration, as read from a file or flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    pub scenario: ScenarioSection,
    pub hybrid: HybridSection,
    pub experiment: ExperimentSection,
    pub channel: ChannelSection,
    pub approx: ApproxSection,
    pub output: OutputSection,
    pub solver: SolverSection,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($f:ident),* $(,)?) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RawConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))
    }

    /// Accepts either a bare config object or a result document carrying
    /// one under `"config"`.
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let inner = match value {
            serde_json::Value::Object(mut map) if map.contains_key("config") => map.remove("config").unwrap(),
            v => v,
        };
        serde_json::from_value(inner).map_err(|e| ConfigError::Syntax(e.to_string()))
    }

    /// JSON when the text opens with `{`, TOML otherwise.
    pub fn from_str_auto(text: &str) -> Result<Self, ConfigError> {
        if text.trim_start().starts_with('{') {
            Self::from_json_str(text)
        } else {
            Self::from_toml_str(text)
        }
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(&mut self, top: &RawConfig) {
        overlay!(self.scenario, top.scenario; n1, n2, d1, d2, eps1, eps2, h1, h2, p_max, min_blocklength);
        overlay!(self.hybrid, top.hybrid; eps21, eps22, gss_tol, method);
        overlay!(self.experiment, top.experiment; schemes, axis, values, realizations, seed, condition, snr_loss);
        overlay!(self.channel, top.channel; distance, pathloss_exponent, pathloss_scale, noise_power, fading);
        overlay!(self.approx, top.approx; blocklengths, error_probs);
        overlay!(self.output, top.output; path, format, records);
        overlay!(self.solver, top.solver; latency_cap, feasibility_scheme);
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        RunConfig::resolve(self)
    }
}

/// Defaults: 256-bit packets, `D = (256, 640)`, `ε = 10⁻⁶`, `P_max = 40 dBm`,
/// `m̂ = 100`, split errors `ε₂/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Gains unset (`None`) when neither file nor flags gave them.
    pub scenario: ScenarioDraft,
    pub eps21: f64,
    pub eps22: f64,
    pub gss_tol: f64,
    pub method: HybridMethod,
    pub experiment: ExperimentConfig,
    pub blocklengths: Vec<f64>,
    pub error_probs: Vec<f64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub records: Option<PathBuf>,
    pub latency_cap: u32,
    pub feasibility_scheme: Scheme,
}

/// Scenario fields with the gains still optional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioDraft {
    pub base: ScenarioParams,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
}

impl ScenarioDraft {
    /// The full instance; single-instance commands need both gains.
    pub fn complete(&self) -> Result<ScenarioParams, ConfigError> {
        let h1 = self.h1.ok_or(ConfigError::Missing("scenario.h1"))?;
        let h2 = self.h2.ok_or(ConfigError::Missing("scenario.h2"))?;
        Ok(self.base.with_gains(h1, h2))
    }
}

fn invalid(field: &'static str, why: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, why: why.into() }
}

impl RunConfig {
    fn resolve(raw: &RawConfig) -> Result<Self, ConfigError> {
        let s = &raw.scenario;
        let p_max = parse_power(s.p_max.as_deref().unwrap_or("40dBm"))?;
        let eps2 = s.eps2.unwrap_or(1e-6);
        let user = |bits, deadline, error_prob| UserSpec { bits, deadline, error_prob, gain: 1.0 };
        let base = ScenarioParams {
            user1: user(s.n1.unwrap_or(256), s.d1.unwrap_or(256), s.eps1.unwrap_or(1e-6)),
            user2: user(s.n2.unwrap_or(256), s.d2.unwrap_or(640), eps2),
            p_max,
            min_blocklength: s.min_blocklength.unwrap_or(100),
        };
        base.validate().map_err(|e| invalid("scenario", e.to_string()))?;
        for (name, h) in [("scenario.h1", s.h1), ("scenario.h2", s.h2)] {
            if let Some(h) = h {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(invalid(name, format!("gain must be positive and finite, got {h}")));
                }
            }
        }
        let scenario = ScenarioDraft { base, h1: s.h1, h2: s.h2 };

        let hy = &raw.hybrid;
        let eps21 = hy.eps21.unwrap_or(eps2 / 2.0);
        let eps22 = hy.eps22.unwrap_or(eps2 / 2.0);
        let gss_tol = hy.gss_tol.unwrap_or(DEFAULT_GSS_TOL);
        let method = hy.method.unwrap_or(HybridMethod::GoldenSection);
        for e in [eps21, eps22] {
            if !(e > 0.0 && e <= 0.5) {
                return Err(invalid("hybrid", format!("split error target {e} outside (0, 0.5]")));
            }
        }
        if !(gss_tol > 0.0) {
            return Err(invalid("hybrid.gss_tol", "must be positive"));
        }

        let ch = &raw.channel;
        let defaults = ChannelModel::default();
        let channel = ChannelModel {
            distance: ch.distance.unwrap_or(defaults.distance),
            pathloss_exponent: ch.pathloss_exponent.unwrap_or(defaults.pathloss_exponent),
            pathloss_scale: ch.pathloss_scale.unwrap_or(defaults.pathloss_scale),
            noise_power: match &ch.noise_power {
                Some(p) => parse_power(p)?,
                None => defaults.noise_power,
            },
            fading: ch.fading.unwrap_or(defaults.fading),
        };
        channel.validate().map_err(|e| invalid("channel", e.to_string()))?;

        let ex = &raw.experiment;
        let kind = ex.axis.unwrap_or(AxisKind::D1);
        let values = match &ex.values {
            Some(v) => v.iter().map(|x| axis_value(kind, x)).collect::<Result<Vec<_>, _>>()?,
            None => match kind {
                AxisKind::D1 => vec![256.0, 384.0, 640.0],
                AxisKind::PMaxDbm => vec![30.0, 32.5, 35.0, 37.5, 40.0],
                AxisKind::Packets => vec![1.0, 2.0, 3.0, 4.0],
            },
        };
        let experiment = ExperimentConfig {
            base,
            eps21,
            eps22,
            channel,
            schemes: ex.schemes.clone().unwrap_or_else(|| vec![Scheme::Noma, Scheme::Tdma]),
            axis: SweepAxis { kind, values },
            realizations: ex.realizations.unwrap_or(1000),
            seed: ex.seed.unwrap_or(1),
            condition: ex.condition.unwrap_or(Condition::All),
            snr_loss: ex.snr_loss.unwrap_or(false),
        };
        if experiment.realizations == 0 {
            return Err(invalid("experiment.realizations", "must be at least 1"));
        }
        if experiment.schemes.is_empty() {
            return Err(invalid("experiment.schemes", "must not be empty"));
        }

        let ap = &raw.approx;
        let blocklengths = ap.blocklengths.clone().unwrap_or_else(|| vec![100.0, 300.0, 640.0, 2000.0]);
        let error_probs = ap.error_probs.clone().unwrap_or_else(|| vec![1e-3, 1e-6, 1e-9]);
        if blocklengths.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(invalid("approx.blocklengths", "must be positive"));
        }
        if error_probs.iter().any(|e| !(*e > 0.0 && *e <= 0.5)) {
            return Err(invalid("approx.error_probs", "must lie in (0, 0.5]"));
        }

        Ok(RunConfig {
            scenario,
            eps21,
            eps22,
            gss_tol,
            method,
            experiment,
            blocklengths,
            error_probs,
            output: raw.output.path.clone(),
            format: raw.output.format,
            records: raw.output.records.clone(),
            latency_cap: raw.solver.latency_cap.unwrap_or(DEFAULT_LATENCY_CAP),
            feasibility_scheme: raw.solver.feasibility_scheme.unwrap_or(Scheme::Noma),
        })
    }

    /// Hybrid instance for single solves.
    pub fn hybrid_params(&self) -> Result<HybridParams, ConfigError> {
        let mut p = HybridParams::with_split_errors(self.scenario.complete()?, self.eps21, self.eps22);
        p.gss_tol = self.gss_tol;
        Ok(p)
    }

    /// The fully populated configuration, suitable for re-reading.
    pub fn to_raw(&self) -> RawConfig {
        let b = &self.scenario.base;
        let ex = &self.experiment;
        let values = ex
            .axis
            .values
            .iter()
            .map(|&v| match ex.axis.kind {
                AxisKind::PMaxDbm => SweepValue::Text(format!("{v}dBm")),
                _ => SweepValue::Number(v),
            })
            .collect();
        RawConfig {
            scenario: ScenarioSection {
                n1: Some(b.user1.bits),
                n2: Some(b.user2.bits),
                d1: Some(b.user1.deadline),
                d2: Some(b.user2.deadline),
                eps1: Some(b.user1.error_prob),
                eps2: Some(b.user2.error_prob),
                h1: self.scenario.h1,
                h2: self.scenario.h2,
                p_max: Some(format_power(b.p_max)),
                min_blocklength: Some(b.min_blocklength),
            },
            hybrid: HybridSection {
                eps21: Some(self.eps21),
                eps22: Some(self.eps22),
                gss_tol: Some(self.gss_tol),
                method: Some(self.method),
            },
            experiment: ExperimentSection {
                schemes: Some(ex.schemes.clone()),
                axis: Some(ex.axis.kind),
                values: Some(values),
                realizations: Some(ex.realizations),
                seed: Some(ex.seed),
                condition: Some(ex.condition),
                snr_loss: Some(ex.snr_loss),
            },
            channel: ChannelSection {
                distance: Some(ex.channel.distance),
                pathloss_exponent: Some(ex.channel.pathloss_exponent),
                pathloss_scale: Some(ex.channel.pathloss_scale),
                noise_power: Some(format_power(ex.channel.noise_power)),
                fading: Some(ex.channel.fading),
            },
            approx: ApproxSection { blocklengths: Some(self.blocklengths.clone()), error_probs: Some(self.error_probs.clone()) },
            output: OutputSection { path: self.output.clone(), format: self.format, records: self.records.clone() },
            solver: SolverSection { latency_cap: Some(self.latency_cap), feasibility_scheme: Some(self.feasibility_scheme) },
        }
    }
}

fn axis_value(kind: AxisKind, v: &SweepValue) -> Result<f64, ConfigError> {
    match (kind, v) {
        (AxisKind::PMaxDbm, SweepValue::Text(t)) => parse_dbm(t),
        (AxisKind::PMaxDbm, SweepValue::Number(_)) => {
            Err(invalid("experiment.values", "P_max values need a unit suffix, e.g. \"35dBm\""))
        }
        (_, SweepValue::Number(x)) if x.fract() == 0.0 && *x >= 1.0 => Ok(*x),
        (_, SweepValue::Number(x)) => Err(invalid("experiment.values", format!("{x} is not a positive integer"))),
        (_, SweepValue::Text(t)) => Err(invalid("experiment.values", format!("{t:?} is not a number"))),
    }
}
