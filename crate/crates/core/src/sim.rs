//! Monte-Carlo harness: Rayleigh channel sampling, infeasibility estimation,
//! energy sweeps and the Shannon-capacity baseline.
//!
//! Every realization draws from its own ChaCha8 stream (`seed`, stream =
//! realization index), so results do not depend on thread count or
//! scheduling. Each realization is scored at every sweep point, which gives
//! common random numbers across the sweep.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbc;
use crate::hybrid::{self, HybridParams, TdmaTables};
use crate::noma::{self, check_monotonicity};
use crate::scenario::{ScenarioParams, SolveResult, User};

/// Energy multiplier for a 0.25 dB SNR loss.
pub const SNR_LOSS_FACTOR: f64 = 1.059253725177289;

/// Realizations scored per parallel task.
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fading {
    /// Unit-power Rayleigh: `|f|² ~ Exp(1)`.
    Rayleigh,
    /// `|f|² = 1`.
    None,
}

/// Path loss `scale·d^−α` over thermal noise, with independent fading per user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Meters.
    pub distance: f64,
    pub pathloss_exponent: f64,
    pub pathloss_scale: f64,
    /// Watts.
    pub noise_power: f64,
    pub fading: Fading,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            distance: 10.0,
            pathloss_exponent: 2.0,
            pathloss_scale: 1e-3,
            noise_power: 1e-14,
            fading: Fading::Rayleigh,
        }
    }
}

impl ChannelModel {
    pub fn pathloss(&self) -> f64 {
        self.pathloss_scale * self.distance.powf(-self.pathloss_exponent)
    }

    /// `E[h] = pathloss/noise`.
    pub fn mean_gain(&self) -> f64 {
        self.pathloss() / self.noise_power
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.distance) && ok(self.pathloss_scale) && ok(self.noise_power) && self.pathloss_exponent.is_finite()) {
            return Err(Error::InvalidParams("channel model constants must be positive and finite".into()));
        }
        if !ok(self.mean_gain()) {
            return Err(Error::InvalidParams("channel mean gain is not a positive finite number".into()));
        }
        Ok(())
    }
}

/// Gains `(h₁, h₂)` of realization `stream` under `seed`.
pub fn sample_channel(model: &ChannelModel, seed: u64, stream: u64) -> (f64, f64) {
    let mean = model.mean_gain();
    match model.fading {
        Fading::None => (mean, mean),
        Fading::Rayleigh => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let f1: f64 = Exp1.sample(&mut rng);
            let f2: f64 = Exp1.sample(&mut rng);
            (mean * f1, mean * f2)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Noma,
    Tdma,
    Hybrid,
    /// NOMA allocated with Shannon capacity (`ε = 0.5`).
    ShannonNoma,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Noma => "noma",
            Scheme::Tdma => "tdma",
            Scheme::Hybrid => "hybrid",
            Scheme::ShannonNoma => "shannon-noma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisKind {
    /// User 1's deadline in symbols.
    D1,
    /// Power budget in dBm.
    PMaxDbm,
    /// Number of aggregated packets; multiplies both `N`, deadlines fixed.
    Packets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub kind: AxisKind,
    pub values: Vec<f64>,
}

/// Realization filter on the gain ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    All,
    H1LessH2,
    H1AtLeastH2,
}

impl Condition {
    pub fn admits(&self, h1: f64, h2: f64) -> bool {
        match self {
            Condition::All => true,
            Condition::H1LessH2 => h1 < h2,
            Condition::H1AtLeastH2 => h1 >= h2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Base instance; its gains are replaced by the sampled ones.
    pub base: ScenarioParams,
    pub eps21: f64,
    pub eps22: f64,
    pub channel: ChannelModel,
    pub schemes: Vec<Scheme>,
    pub axis: SweepAxis,
    pub realizations: u64,
    pub seed: u64,
    pub condition: Condition,
    /// Multiply reported energies by [`SNR_LOSS_FACTOR`].
    pub snr_loss: bool,
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidParams("realization count must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidParams("no schemes selected".into()));
        }
        if self.axis.values.is_empty() {
            return Err(Error::InvalidParams("sweep axis has no values".into()));
        }
        self.channel.validate()?;
        for &v in &self.axis.values {
            self.point(v)?;
        }
        Ok(())
    }

    /// The instance at one sweep value, gains unset.
    pub fn point(&self, value: f64) -> Result<HybridParams> {
        let mut s = self.base;
        let as_count = |v: f64, what: &str| -> Result<u32> {
            if v.fract() != 0.0 || !(v >= 1.0) || v > u32::MAX as f64 {
                return Err(Error::InvalidParams(format!("{what} sweep value {v} is not a positive integer")));
            }
            Ok(v as u32)
        };
        match self.axis.kind {
            AxisKind::D1 => s.user1.deadline = as_count(value, "D1")?,
            AxisKind::PMaxDbm => {
                if value.is_nan() {
                    return Err(Error::InvalidParams("P_max sweep value is NaN".into()));
                }
                s.p_max = dbm_to_watts(value);
            }
            AxisKind::Packets => {
                let k = as_count(value, "packet")? as u64;
                s.user1.bits *= k;
                s.user2.bits *= k;
            }
        }
        let hp = HybridParams::with_split_errors(s, self.eps21, self.eps22);
        s.validate()?;
        if self.schemes.contains(&Scheme::Hybrid) {
            hp.validate()?;
        }
        if self.schemes.iter().any(|x| *x != Scheme::ShannonNoma) {
            check_monotonicity(&s)?;
        }
        Ok(hp)
    }
}

/// `Γ` values for the pure-NOMA closed forms, valid for any gains.
#[derive(Debug, Clone, Copy)]
struct NomaGammas {
    g1_d1: f64,
    g2_d2: f64,
    g2_d1: f64,
}

impl NomaGammas {
    fn new(s: &ScenarioParams) -> Result<Self> {
        let (d1, d2) = (s.user1.deadline as f64, s.user2.deadline as f64);
        let f1 = s.fbc(User::One)?;
        let f2 = s.fbc(User::Two)?;
        Ok(NomaGammas { g1_d1: fbc::gamma(d1, &f1)?, g2_d2: fbc::gamma(d2, &f2)?, g2_d1: fbc::gamma(d1, &f2)? })
    }

    fn solve(&self, s: &ScenarioParams) -> SolveResult<noma::NomaAllocation> {
        if s.user1.gain <= s.user2.gain {
            noma::case1_allocation(s, self.g1_d1, self.g2_d2)
        } else {
            noma::pick_case2(
                noma::case2_full_allocation(s, self.g1_d1, self.g2_d2),
                noma::case2_sic_allocation(s, self.g1_d1, self.g2_d1),
            )
        }
    }
}

/// Everything about a sweep point that does not depend on the gains.
struct PointPlan {
    value: f64,
    params: HybridParams,
    noma: Option<NomaGammas>,
    shannon: Option<NomaGammas>,
    tdma: Option<TdmaTables>,
}

impl PointPlan {
    fn new(config: &ExperimentConfig, value: f64) -> Result<Self> {
        let params = config.point(value)?;
        let s = params.scenario;
        let needs = |x: Scheme| config.schemes.contains(&x);
        let noma = if needs(Scheme::Noma) || needs(Scheme::Hybrid) { Some(NomaGammas::new(&s)?) } else { None };
        let shannon = if needs(Scheme::ShannonNoma) { Some(NomaGammas::new(&s.with_error_prob(0.5))?) } else { None };
        let tdma = if needs(Scheme::Tdma) || needs(Scheme::Hybrid) { Some(TdmaTables::new(&s)?) } else { None };
        Ok(PointPlan { value, params, noma, shannon, tdma })
    }

    fn with_gains(&self, h1: f64, h2: f64) -> HybridParams {
        let mut p = self.params;
        p.scenario = p.scenario.with_gains(h1, h2);
        p
    }

    fn energy(&self, scheme: Scheme, h1: f64, h2: f64) -> Result<Option<f64>> {
        let p = self.with_gains(h1, h2);
        let s = &p.scenario;
        Ok(match scheme {
            Scheme::Noma => self.noma.unwrap().solve(s).into_feasible().map(|a| a.energy),
            Scheme::ShannonNoma => self.shannon.unwrap().solve(s).into_feasible().map(|a| a.energy),
            Scheme::Tdma => self.tdma.as_ref().unwrap().solve(s).into_feasible().map(|a| a.energy),
            Scheme::Hybrid => hybrid::solve_hybrid(&p)?.into_feasible().map(|a| a.energy),
        })
    }

    fn feasible(&self, scheme: Scheme, h1: f64, h2: f64) -> Result<bool> {
        let p = self.with_gains(h1, h2);
        let s = &p.scenario;
        Ok(match scheme {
            Scheme::Noma => self.noma.unwrap().solve(s).is_feasible(),
            Scheme::ShannonNoma => self.shannon.unwrap().solve(s).is_feasible(),
            Scheme::Tdma => self.tdma.as_ref().unwrap().feasible(s),
            Scheme::Hybrid => {
                self.noma.unwrap().solve(s).is_feasible()
                    || self.tdma.as_ref().unwrap().feasible(s)
                    || hybrid::solve_hybrid(&p)?.is_feasible()
            }
        })
    }
}

fn plans(config: &ExperimentConfig) -> Result<Vec<PointPlan>> {
    config.validate()?;
    config.axis.values.iter().map(|&v| PointPlan::new(config, v)).collect()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityRow {
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub infeasible: u64,
    pub realizations: u64,
    pub probability: f64,
    /// Binomial standard error `√(p(1−p)/n)`.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityTable {
    pub seed: u64,
    pub rows: Vec<InfeasibilityRow>,
}

/// Per-scheme infeasibility probability at each sweep point. The condition
/// filter is ignored; every realization counts.
pub fn estimate_infeasibility(config: &ExperimentConfig) -> Result<InfeasibilityTable> {
    let plans = plans(config)?;
    let width = config.schemes.len();
    let cells = plans.len() * width;
    let chunks = config.realizations.div_ceil(CHUNK);
    let partial = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<u64>> {
            let mut counts = vec![0u64; cells];
            for r in c * CHUNK..((c + 1) * CHUNK).min(config.realizations) {
                let (h1, h2) = sample_channel(&config.channel, config.seed, r);
                for (i, plan) in plans.iter().enumerate() {
                    for (j, &scheme) in config.schemes.iter().enumerate() {
                        if !plan.feasible(scheme, h1, h2)? {
                            counts[i * width + j] += 1;
                        }
                    }
                }
            }
            Ok(counts)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut totals = vec![0u64; cells];
    for counts in partial {
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let n = config.realizations;
    let mut rows = Vec::with_capacity(cells);
    for (i, plan) in plans.iter().enumerate() {
        for (j, &scheme) in config.schemes.iter().enumerate() {
            let infeasible = totals[i * width + j];
            let p = infeasible as f64 / n as f64;
            rows.push(InfeasibilityRow {
                sweep_value: plan.value,
                scheme,
                infeasible,
                realizations: n,
                probability: p,
                std_error: (p * (1.0 - p) / n as f64).sqrt(),
            });
        }
    }
    Ok(InfeasibilityTable { seed: config.seed, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub sweep_value: f64,
    pub scheme: Scheme,
    /// Mean over feasible, admitted realizations; `None` when there are none.
    pub mean_energy: Option<f64>,
    pub feasible: u64,
    /// Admitted realizations that were infeasible and left out of the mean.
    pub excluded: u64,
    /// Realizations passing the condition filter.
    pub admitted: u64,
    pub feasible_fraction: f64,
}

/// One realization's energies at one sweep point, in scheme order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub realization: u64,
    pub sweep_value: f64,
    pub h1: f64,
    pub h2: f64,
    pub energies: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    pub seed: u64,
    pub realizations: u64,
    pub rows: Vec<EnergyRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<EnergyRecord>,
}

fn score_realization(
    config: &ExperimentConfig,
    plans: &[PointPlan],
    r: u64,
) -> Result<Option<(f64, f64, Vec<Option<f64>>)>> {
    let (h1, h2) = sample_channel(&config.channel, config.seed, r);
    if !config.condition.admits(h1, h2) {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(plans.len() * config.schemes.len());
    for plan in plans {
        for &scheme in &config.schemes {
            out.push(plan.energy(scheme, h1, h2)?);
        }
    }
    Ok(Some((h1, h2, out)))
}

/// Mean energy per scheme per sweep point over admitted realizations.
/// Infeasible draws are excluded from the mean and counted.
pub fn energy_sweep(config: &ExperimentConfig, keep_records: bool) -> Result<EnergyTable> {
    let plans = plans(config)?;
    let width = config.schemes.len();
    let scored = (0..config.realizations)
        .into_par_iter()
        .map(|r| score_realization(config, &plans, r))
        .collect::<Result<Vec<_>>>()?;

    let cells = plans.len() * width;
    let mut sums = vec![CompensatedSum::default(); cells];
    let mut feasible = vec![0u64; cells];
    let mut admitted = 0u64;
    let mut records = Vec::new();
    for (r, item) in scored.into_iter().enumerate() {
        let Some((h1, h2, energies)) = item else { continue };
        admitted += 1;
        for (k, e) in energies.iter().enumerate() {
            if let Some(e) = e {
                sums[k].add(*e);
                feasible[k] += 1;
            }
        }
        if keep_records {
            for (i, plan) in plans.iter().enumerate() {
                records.push(EnergyRecord {
                    realization: r as u64,
                    sweep_value: plan.value,
                    h1,
                    h2,
                    energies: energies[i * width..(i + 1) * width].to_vec(),
                });
            }
        }
    }
    let scale = if config.snr_loss { SNR_LOSS_FACTOR } else { 1.0 };
    let mut rows = Vec::with_capacity(cells);
    for (i, plan) in plans.iter().enumerate() {
        for (j, &scheme) in config.schemes.iter().enumerate() {
            let k = i * width + j;
            let f = feasible[k];
            rows.push(EnergyRow {
                sweep_value: plan.value,
                scheme,
                mean_energy: (f > 0).then(|| scale * sums[k].value() / f as f64),
                feasible: f,
                excluded: admitted - f,
                admitted,
                feasible_fraction: if admitted > 0 { f as f64 / admitted as f64 } else { 0.0 },
            });
        }
    }
    Ok(EnergyTable { seed: config.seed, realizations: config.realizations, rows, records })
}

/// NOMA allocated with Shannon capacity: the dispersion term is dropped.
pub fn shannon_baseline(params: &ScenarioParams) -> Result<SolveResult<noma::NomaAllocation>> {
    noma::solve_noma(&params.with_error_prob(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::UserSpec;

    fn config(kind: AxisKind, values: Vec<f64>, n: u64) -> ExperimentConfig {
        let u = |d| UserSpec { bits: 256, deadline: d, error_prob: 1e-6, gain: 1.0 };
        ExperimentConfig {
            base: ScenarioParams { user1: u(256), user2: u(640), p_max: dbm_to_watts(40.0), min_blocklength: 100 },
            eps21: 5e-7,
            eps22: 5e-7,
            channel: ChannelModel::default(),
            schemes: vec![Scheme::Noma, Scheme::Tdma, Scheme::ShannonNoma],
            axis: SweepAxis { kind, values },
            realizations: n,
            seed: 7,
            condition: Condition::All,
            snr_loss: false,
        }
    }

    #[test]
    fn default_constants() {
        let m = ChannelModel::default();
        assert!((m.pathloss() - 1e-5).abs() < 1e-20);
        assert!((m.mean_gain() / 1e9 - 1.0).abs() < 1e-12);
        assert!((dbm_to_watts(-110.0) - 1e-14).abs() < 1e-28);
        assert!((SNR_LOSS_FACTOR - 10f64.powf(0.025)).abs() < 1e-15);
    }

    #[test]
    fn deterministic_channel() {
        let m = ChannelModel { fading: Fading::None, ..Default::default() };
        assert_eq!(sample_channel(&m, 1, 2), (m.mean_gain(), m.mean_gain()));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let m = ChannelModel::default();
        assert_eq!(sample_channel(&m, 3, 10), sample_channel(&m, 3, 10));
        assert_ne!(sample_channel(&m, 3, 10), sample_channel(&m, 3, 11));
        assert_ne!(sample_channel(&m, 3, 10), sample_channel(&m, 4, 10));
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn point_overrides() {
        let c = config(AxisKind::Packets, vec![3.0], 1);
        let p = c.point(3.0).unwrap();
        assert_eq!((p.scenario.user1.bits, p.scenario.user2.bits), (768, 768));
        assert!(c.point(2.5).is_err());
        let c = config(AxisKind::D1, vec![384.0], 1);
        assert_eq!(c.point(384.0).unwrap().scenario.user1.deadline, 384);
        assert!(c.point(700.0).is_err());
    }

    #[test]
    fn closed_forms_match_solvers() {
        let c = config(AxisKind::D1, vec![256.0, 640.0], 20);
        for plan in plans(&c).unwrap() {
            for r in 0..20 {
                let (h1, h2) = sample_channel(&c.channel, c.seed, r);
                let s = plan.with_gains(h1, h2).scenario;
                let direct = noma::solve_noma(&s).unwrap().energy().unwrap();
                let fast = plan.energy(Scheme::Noma, h1, h2).unwrap().unwrap();
                assert!((direct - fast).abs() <= 1e-9 * direct);
                let sh = shannon_baseline(&s).unwrap().energy().unwrap();
                let fast = plan.energy(Scheme::ShannonNoma, h1, h2).unwrap().unwrap();
                assert!((sh - fast).abs() <= 1e-9 * sh);
            }
        }
    }

    #[test]
    fn conditioning_partitions() {
        let mut c = config(AxisKind::D1, vec![256.0], 200);
        c.condition = Condition::H1LessH2;
        let a = energy_sweep(&c, false).unwrap().rows[0].admitted;
        c.condition = Condition::H1AtLeastH2;
        let b = energy_sweep(&c, false).unwrap().rows[0].admitted;
        assert_eq!(a + b, 200);
    }

    #[test]
    fn unlimited_power_is_always_feasible() {
        let mut c = config(AxisKind::PMaxDbm, vec![f64::INFINITY], 1000);
        c.channel.noise_power = 1e-4;
        let t = estimate_infeasibility(&c).unwrap();
        assert!(t.rows.iter().all(|r| r.infeasible == 0));
    }
}
