//! Split-packet hybrid NOMA/TDMA scheme.
//!
//! User 2's packet is split into `N₂₁` bits superposed on user 1's codeword
//! over `m₂₁` symbols and `N₂₂ = N₂ − N₂₁` bits sent alone over `m₂₂`
//! symbols. `N₂₁ = 0` is TDMA, `N₂₂ = 0` is pure NOMA.
//!
//! Two solvers are provided:
//!
//! * an exhaustive search over `(N₂₁, m₁, m₂₁)` with exact SINR maps, used as
//!   the benchmark;
//! * a scan over the first-phase blocklength with a golden-section search on
//!   the bit split, run on the concave rate surrogate (whose SINR map is
//!   convex in the bit load) and re-scored with exact SINRs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::Surrogate;
use crate::error::{Error, Result};
use crate::fbc::{self, FbcParams, SinrTable};
use crate::noma::{self, check_monotonicity, NomaAllocation, NomaScheme};
use crate::scenario::{Energy, InfeasibleReason, ScenarioParams, SolveResult, User};

/// Golden-section shrink ratio.
pub const GOLDEN_RATIO: f64 = 0.618;

/// Default golden-section stopping width, in bits.
pub const DEFAULT_GSS_TOL: f64 = 0.5;

/// A hybrid instance: the base scenario plus the error targets of the two
/// parts of user 2's packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridParams {
    pub scenario: ScenarioParams,
    /// Error target of the superposed part.
    pub eps21: f64,
    /// Error target of the orthogonal part.
    pub eps22: f64,
    /// Golden-section stopping width.
    pub gss_tol: f64,
}

impl HybridParams {
    /// Splits user 2's error target evenly between the two parts.
    pub fn new(scenario: ScenarioParams) -> Self {
        let half = scenario.user2.error_prob / 2.0;
        HybridParams { scenario, eps21: half, eps22: half, gss_tol: DEFAULT_GSS_TOL }
    }

    pub fn with_split_errors(scenario: ScenarioParams, eps21: f64, eps22: f64) -> Self {
        HybridParams { scenario, eps21, eps22, gss_tol: DEFAULT_GSS_TOL }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        for e in [self.eps21, self.eps22] {
            if !(e > 0.0 && e <= 0.5) {
                return Err(Error::InvalidParams(format!("split error target {e} outside (0, 0.5]")));
            }
        }
        if !(self.gss_tol > 0.0) {
            return Err(Error::InvalidParams("golden-section tolerance must be positive".into()));
        }
        let s = &self.scenario;
        if s.user2.deadline < 2 * s.min_blocklength {
            return Err(Error::InvalidParams(format!(
                "D2 = {} leaves no room for two slots of at least {} symbols",
                s.user2.deadline, s.min_blocklength
            )));
        }
        Ok(())
    }

    fn h1(&self) -> f64 {
        self.scenario.user1.gain
    }

    fn h2(&self) -> f64 {
        self.scenario.user2.gain
    }

    fn n2(&self) -> u64 {
        self.scenario.user2.bits
    }

    fn part(&self, bits: u64, eps: f64) -> Result<FbcParams> {
        self.scenario.codeword(bits, eps)
    }
}

/// Which receiver runs successive interference cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HybridCase {
    /// `h₁ ≤ h₂`, receiver 2 cancels user 1.
    I,
    /// `h₂ < h₁`, receiver 1 cancels the superposed part of user 2.
    II,
}

impl HybridCase {
    pub fn of(params: &ScenarioParams) -> Self {
        if params.user1.gain <= params.user2.gain {
            HybridCase::I
        } else {
            HybridCase::II
        }
    }
}

/// Where the winning allocation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "scheme")]
pub enum HybridOrigin {
    Split,
    PureNoma(NomaScheme),
    Tdma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridAllocation {
    pub case: HybridCase,
    pub origin: HybridOrigin,
    pub n21: u64,
    pub n22: u64,
    pub m1: u32,
    pub m21: u32,
    pub m22: u32,
    pub p1: f64,
    pub p21: f64,
    pub p22: f64,
    /// `m₁p₁ + m₂₁p₂₁ + m₂₂p₂₂`, watt·symbols.
    pub energy: f64,
}

impl Energy for HybridAllocation {
    fn energy(&self) -> f64 {
        self.energy
    }
}

impl HybridAllocation {
    fn from_noma(case: HybridCase, a: &NomaAllocation, n2: u64) -> Self {
        HybridAllocation {
            case,
            origin: HybridOrigin::PureNoma(a.scheme),
            n21: n2,
            n22: 0,
            m1: a.m1,
            m21: a.m2,
            m22: 0,
            p1: a.p1,
            p21: a.p2,
            p22: 0.0,
            energy: a.energy,
        }
    }

    fn from_tdma(case: HybridCase, a: &TdmaAllocation, n2: u64) -> Self {
        HybridAllocation {
            case,
            origin: HybridOrigin::Tdma,
            n21: 0,
            n22: n2,
            m1: a.m1,
            m21: 0,
            m22: a.m2,
            p1: a.p1,
            p21: 0.0,
            p22: a.p2,
            energy: a.energy,
        }
    }
}

/// A point of the hybrid search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub n21: u64,
    pub m1: u32,
    pub m21: u32,
    pub m22: u32,
}

/// Powers and energy of a candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePowers {
    pub p1: f64,
    pub p21: f64,
    pub p22: f64,
    pub energy: f64,
}

impl CandidatePowers {
    fn fits(&self, p_max: f64) -> bool {
        self.p1 >= 0.0 && self.p21 >= 0.0 && self.p22 >= 0.0 && self.p1 + self.p21 <= p_max && self.p22 <= p_max
    }
}

/// Powers from the three SINR targets under either decoding order.
fn powers(case: HybridCase, h1: f64, h2: f64, c: &Candidate, g1: f64, g21: f64, g22: f64) -> CandidatePowers {
    let (p1, p21) = match case {
        HybridCase::I => (g1 * g21 / h2 + g1 / h1, g21 / h2),
        HybridCase::II => (g1 / h1, g1 * g21 / h1 + g21 / h2),
    };
    let p22 = g22 / h2;
    CandidatePowers {
        p1,
        p21,
        p22,
        energy: c.m1 as f64 * p1 + c.m21 as f64 * p21 + c.m22 as f64 * p22,
    }
}

/// Exact `Γ` for a split part; zero bits need zero SINR.
fn part_sinr(params: &HybridParams, bits: u64, eps: f64, m: u32) -> Result<Option<f64>> {
    if bits == 0 {
        return Ok(Some(0.0));
    }
    let fbc = params.part(bits, eps)?;
    params.scenario.sinr(&fbc, params.h2(), m)
}

/// Exact powers of a candidate; `None` when a rate demand is unattainable
/// within the power budget.
pub fn candidate_powers(case: HybridCase, c: &Candidate, params: &HybridParams) -> Result<Option<CandidatePowers>> {
    let s = &params.scenario;
    let n22 = params.n2().saturating_sub(c.n21);
    let g1 = s.sinr(&s.fbc(User::One)?, s.user1.gain, c.m1)?;
    let g21 = part_sinr(params, c.n21, params.eps21, c.m21)?;
    let g22 = part_sinr(params, n22, params.eps22, c.m22)?;
    Ok(match (g1, g21, g22) {
        (Some(g1), Some(g21), Some(g22)) => Some(powers(case, params.h1(), params.h2(), c, g1, g21, g22)),
        _ => None,
    })
}

/// Membership in the power-feasible set for the receiver-2-cancels ordering.
/// Any SINR evaluation failure counts as non-membership.
pub fn in_feasible_set_h(c: &Candidate, params: &HybridParams) -> bool {
    match candidate_powers(HybridCase::I, c, params) {
        Ok(Some(p)) => p.fits(params.scenario.p_max),
        _ => false,
    }
}

/// TDMA allocation: user 1 alone for `m₁` symbols, then user 2 alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdmaAllocation {
    pub m1: u32,
    pub m2: u32,
    pub gamma1: f64,
    pub gamma2: f64,
    pub p1: f64,
    pub p2: f64,
    pub energy: f64,
}

impl Energy for TdmaAllocation {
    fn energy(&self) -> f64 {
        self.energy
    }
}

/// `Γ` tables for the TDMA slot scan, independent of the channel gains.
#[derive(Debug, Clone)]
pub struct TdmaTables {
    first_slot: u32,
    last_slot: u32,
    d2: u32,
    user1: SinrTable,
    user2: SinrTable,
}

impl TdmaTables {
    /// Tables for `m₁ ∈ [m̂, min(D₁, D₂ − m̂)]` and `m₂ = D₂ − m₁`.
    pub fn new(params: &ScenarioParams) -> Result<Self> {
        params.validate()?;
        let mhat = params.min_blocklength;
        let d2 = params.user2.deadline;
        let last_slot = params.user1.deadline.min(d2.saturating_sub(mhat));
        let user1 = SinrTable::build(&params.fbc(User::One)?, mhat, last_slot)?;
        let user2 = if last_slot >= mhat {
            SinrTable::build(&params.fbc(User::Two)?, d2 - last_slot, d2 - mhat)?
        } else {
            SinrTable::build(&params.fbc(User::Two)?, 1, 0)?
        };
        Ok(TdmaTables { first_slot: mhat, last_slot, d2, user1, user2 })
    }

    fn slot(&self, m1: u32) -> (f64, f64) {
        (self.user1.get(m1).unwrap(), self.user2.get(self.d2 - m1).unwrap())
    }

    /// Minimum-energy split for the given gains and budget.
    pub fn solve(&self, params: &ScenarioParams) -> SolveResult<TdmaAllocation> {
        let (h1, h2, p_max) = (params.user1.gain, params.user2.gain, params.p_max);
        let mut best: Option<TdmaAllocation> = None;
        for m1 in self.first_slot..=self.last_slot {
            let (g1, g2) = self.slot(m1);
            let (p1, p2) = (g1 / h1, g2 / h2);
            if p1 > p_max || p2 > p_max {
                continue;
            }
            let m2 = self.d2 - m1;
            let energy = m1 as f64 * p1 + m2 as f64 * p2;
            if best.map_or(true, |b| energy < b.energy) {
                best = Some(TdmaAllocation { m1, m2, gamma1: g1, gamma2: g2, p1, p2, energy });
            }
        }
        best.map_or(SolveResult::Infeasible(InfeasibleReason::PowerBudget), SolveResult::Feasible)
    }

    /// Feasibility without the energy scan. `Γ₁(m₁)` falls and `Γ₂(D₂−m₁)`
    /// rises with `m₁`, so each power cap holds on an interval of slots.
    pub fn feasible(&self, params: &ScenarioParams) -> bool {
        if self.last_slot < self.first_slot {
            return false;
        }
        let (h1, h2, p_max) = (params.user1.gain, params.user2.gain, params.p_max);
        let ok1 = |m: u32| self.user1.get(m).unwrap() / h1 <= p_max;
        let ok2 = |m: u32| self.user2.get(self.d2 - m).unwrap() / h2 <= p_max;
        // Smallest slot meeting user 1's cap.
        if !ok1(self.last_slot) {
            return false;
        }
        let (mut lo, mut hi) = (self.first_slot, self.last_slot);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if ok1(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        ok2(lo)
    }
}

/// TDMA baseline: `m₂ = D₂ − m₁`, scan `m₁ ∈ [m̂, min(D₁, D₂ − m̂)]`,
/// per-slot power cap `P_max`.
pub fn tdma_solver(params: &ScenarioParams) -> Result<SolveResult<TdmaAllocation>> {
    check_monotonicity(params)?;
    let tables = TdmaTables::new(params)?;
    if tables.last_slot < tables.first_slot {
        return Ok(SolveResult::Infeasible(InfeasibleReason::NoFeasiblePoint));
    }
    Ok(tables.solve(params))
}

/// Whether SINRs come from the exact rate constraint or the concave surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinrModel {
    Exact,
    Surrogate,
}

/// Per-slot precomputation for one outer-scan point.
struct SlotModel {
    case: HybridCase,
    h1: f64,
    h2: f64,
    n2: u64,
    m1: u32,
    m21: u32,
    m22: u32,
    gamma1: f64,
    s21: Surrogate,
    s22: Surrogate,
}

impl SlotModel {
    fn new(params: &HybridParams, case: HybridCase, m1: u32, m21: u32, m22: u32, gamma1: f64) -> Result<Self> {
        Ok(SlotModel {
            case,
            h1: params.h1(),
            h2: params.h2(),
            n2: params.n2(),
            m1,
            m21,
            m22,
            gamma1,
            s21: Surrogate::new(m21 as f64, params.eps21)?,
            s22: Surrogate::new(m22 as f64, params.eps22)?,
        })
    }

    fn candidate(&self, n21: u64) -> Candidate {
        Candidate { n21, m1: self.m1, m21: self.m21, m22: self.m22 }
    }

    /// Surrogate energy for a real-valued split.
    fn surrogate_energy(&self, n21: f64) -> f64 {
        let n22 = self.n2 as f64 - n21;
        let g21 = self.s21.sinr(n21);
        let g22 = if n22 > 0.0 { self.s22.sinr(n22) } else { Ok(0.0) };
        match (g21, g22) {
            (Ok(g21), Ok(g22)) => {
                let c = self.candidate(0);
                powers(self.case, self.h1, self.h2, &c, self.gamma1, g21, g22).energy
            }
            _ => f64::INFINITY,
        }
    }
}

fn slot_energy(model: &SlotModel, n21: u64, params: &HybridParams, sinr: SinrModel) -> Result<f64> {
    match sinr {
        SinrModel::Surrogate => Ok(model.surrogate_energy(n21 as f64)),
        SinrModel::Exact => {
            let c = model.candidate(n21);
            let n22 = model.n2 - n21;
            let g21 = exact_part(params, n21, params.eps21, c.m21)?;
            let g22 = exact_part(params, n22, params.eps22, c.m22)?;
            Ok(powers(model.case, model.h1, model.h2, &c, model.gamma1, g21, g22).energy)
        }
    }
}

fn exact_part(params: &HybridParams, bits: u64, eps: f64, m: u32) -> Result<f64> {
    if bits == 0 {
        return Ok(0.0);
    }
    fbc::gamma(m as f64, &params.part(bits, eps)?)
}

fn check_split(params: &HybridParams, n21: u64) -> Result<()> {
    if n21 >= params.n2() {
        return Err(Error::Domain(format!("N21 = {n21} must be below N2 = {}", params.n2())));
    }
    Ok(())
}

/// Energy with `m₁ = m₂₁ < D₁` and `m₂₂ = D₂ − m₂₁`.
pub fn hybrid_objective_case_a(n21: u64, m21: u32, params: &HybridParams, sinr: SinrModel) -> Result<f64> {
    params.validate()?;
    check_split(params, n21)?;
    let s = &params.scenario;
    let (mhat, d1, d2) = (s.min_blocklength, s.user1.deadline, s.user2.deadline);
    if m21 < mhat || m21 > d1.min(d2 - mhat) {
        return Err(Error::Domain(format!("case (a) needs m21 in [{mhat}, {}], got {m21}", d1.min(d2 - mhat))));
    }
    let g1 = fbc::gamma(m21 as f64, &s.fbc(User::One)?)?;
    let model = SlotModel::new(params, HybridCase::I, m21, m21, d2 - m21, g1)?;
    slot_energy(&model, n21, params, sinr)
}

/// Energy with `m₁ = D₁ ≤ m₂₁` and `m₂₂ = D₂ − m₂₁`.
pub fn hybrid_objective_case_b(n21: u64, m21: u32, params: &HybridParams, sinr: SinrModel) -> Result<f64> {
    params.validate()?;
    check_split(params, n21)?;
    let s = &params.scenario;
    let (mhat, d1, d2) = (s.min_blocklength, s.user1.deadline, s.user2.deadline);
    if m21 < d1 || m21 > d2 - mhat {
        return Err(Error::Domain(format!("case (b) needs m21 in [{d1}, {}], got {m21}", d2 - mhat)));
    }
    let g1 = fbc::gamma(d1 as f64, &s.fbc(User::One)?)?;
    let model = SlotModel::new(params, HybridCase::I, d1, m21, d2 - m21, g1)?;
    slot_energy(&model, n21, params, sinr)
}

/// Energy for the receiver-1-cancels ordering with `m₂₁ = m₁` and
/// `m₂₂ = D₂ − m₁`. `n21 = N₂` drops the orthogonal slot.
pub fn hybrid_objective_case2(n21: u64, m1: u32, params: &HybridParams, sinr: SinrModel) -> Result<f64> {
    params.validate()?;
    let s = &params.scenario;
    if n21 > params.n2() {
        return Err(Error::Domain(format!("N21 = {n21} exceeds N2 = {}", params.n2())));
    }
    let (mhat, d1, d2) = (s.min_blocklength, s.user1.deadline, s.user2.deadline);
    if m1 < mhat || m1 > d1.min(d2 - mhat) {
        return Err(Error::Domain(format!("case II needs m1 in [{mhat}, {}], got {m1}", d1.min(d2 - mhat))));
    }
    let g1 = fbc::gamma(m1 as f64, &s.fbc(User::One)?)?;
    let m22 = if n21 == params.n2() { 0 } else { d2 - m1 };
    if m22 == 0 {
        let g21 = exact_part(params, n21, params.eps21, m1)?;
        let c = Candidate { n21, m1, m21: m1, m22: 0 };
        return Ok(powers(HybridCase::II, params.h1(), params.h2(), &c, g1, g21, 0.0).energy);
    }
    let model = SlotModel::new(params, HybridCase::II, m1, m1, m22, g1)?;
    slot_energy(&model, n21, params, sinr)
}

/// Result of a golden-section search over integer splits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GssOutcome {
    pub n21: u64,
    pub value: f64,
    pub iterations: u32,
}

/// Golden-section search for the integer minimizer of a unimodal objective
/// on `[0, n2 − 1]`, finished by checking the integers around the final
/// interval.
pub fn golden_section_min(n2: u64, tol: f64, objective: impl Fn(f64) -> f64) -> GssOutcome {
    if n2 <= 1 {
        return GssOutcome { n21: 0, value: objective(0.0), iterations: 0 };
    }
    let top = (n2 - 1) as f64;
    let (mut lo, mut hi) = (0.0f64, top);
    let mut iterations = 0;
    while hi - lo >= tol {
        let width = hi - lo;
        let nl = lo + (1.0 - GOLDEN_RATIO) * width;
        let nu = lo + GOLDEN_RATIO * width;
        if objective(nl) >= objective(nu) {
            lo = nl;
        } else {
            hi = nu;
        }
        iterations += 1;
    }
    let first = lo.floor().max(0.0) as u64;
    let last = (hi.ceil().min(top)) as u64;
    let (n21, value) = (first..=last)
        .map(|k| (k, objective(k as f64)))
        .fold((first, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    GssOutcome { n21, value, iterations }
}

/// Which outer-scan objective the split search runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanObjective {
    CaseA,
    CaseB,
    CaseII,
}

/// Golden-section search over `N₂₁` at one outer-scan blocklength using the
/// surrogate objective. Returns the split and its surrogate energy.
pub fn golden_section_bits(m21: u32, objective: ScanObjective, params: &HybridParams) -> Result<GssOutcome> {
    params.validate()?;
    let s = &params.scenario;
    let (d1, d2) = (s.user1.deadline, s.user2.deadline);
    let (case, m1) = match objective {
        ScanObjective::CaseA => (HybridCase::I, m21),
        ScanObjective::CaseB => (HybridCase::I, d1),
        ScanObjective::CaseII => (HybridCase::II, m21),
    };
    let g1 = fbc::gamma(m1 as f64, &s.fbc(User::One)?)?;
    let model = SlotModel::new(params, case, m1, m21, d2 - m21, g1)?;
    Ok(golden_section_min(params.n2(), params.gss_tol, |n| model.surrogate_energy(n)))
}

#[derive(Debug, Clone, Copy)]
struct Scored {
    cand: Candidate,
    p: CandidatePowers,
}

fn split_allocation(case: HybridCase, n2: u64, s: Scored) -> HybridAllocation {
    HybridAllocation {
        case,
        origin: HybridOrigin::Split,
        n21: s.cand.n21,
        n22: n2 - s.cand.n21,
        m1: s.cand.m1,
        m21: s.cand.m21,
        m22: s.cand.m22,
        p1: s.p.p1,
        p21: s.p.p21,
        p22: s.p.p22,
        energy: s.p.energy,
    }
}

/// Lowest energy; ties keep `a`.
fn better(a: Option<HybridAllocation>, b: Option<HybridAllocation>) -> Option<HybridAllocation> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.energy < x.energy { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Best of the split search and the two degenerate schemes.
fn with_endpoints(params: &HybridParams, case: HybridCase, split: Option<HybridAllocation>) -> Result<SolveResult<HybridAllocation>> {
    let s = &params.scenario;
    let n2 = params.n2();
    let noma = noma::solve_noma(s)?.into_feasible().map(|a| HybridAllocation::from_noma(case, &a, n2));
    let tdma = tdma_solver(s)?.into_feasible().map(|a| HybridAllocation::from_tdma(case, &a, n2));
    let best = better(better(split, noma), tdma);
    Ok(best.map_or(SolveResult::Infeasible(InfeasibleReason::NoFeasiblePoint), SolveResult::Feasible))
}

fn require_gain_order(params: &HybridParams, case: HybridCase) -> Result<()> {
    if HybridCase::of(&params.scenario) != case {
        return Err(Error::Precondition(format!(
            "hybrid case {:?} does not match gains h1 = {}, h2 = {}",
            case,
            params.h1(),
            params.h2()
        )));
    }
    Ok(())
}

/// `Γ` tables for the exhaustive searches, evaluated exactly as
/// [`candidate_powers`] does so shared candidates score identically.
/// `None` marks a rate outside the power bracket.
struct PartTables {
    /// `g21[n][m − first]` for `n ∈ [0, n_max]`, `m ∈ [first, last]`.
    g21: Vec<Vec<Option<f64>>>,
    g22: Vec<Vec<Option<f64>>>,
    first: u32,
}

impl PartTables {
    fn build(params: &HybridParams, first: u32, last: u32, max_n21: u64) -> Result<Self> {
        let n2 = params.n2();
        let row = |bits: u64, eps: f64| -> Result<Vec<Option<f64>>> {
            (first..=last).map(|m| part_sinr(params, bits, eps, m)).collect()
        };
        let g21 = (0..=max_n21).into_par_iter().map(|n| row(n, params.eps21)).collect::<Result<Vec<_>>>()?;
        let g22 = (0..=n2).into_par_iter().map(|n| row(n, params.eps22)).collect::<Result<Vec<_>>>()?;
        Ok(PartTables { g21, g22, first })
    }

    fn g21(&self, n21: u64, m: u32) -> Option<f64> {
        self.g21[n21 as usize][(m - self.first) as usize]
    }

    fn g22(&self, n22: u64, m: u32) -> Option<f64> {
        if n22 == 0 {
            return Some(0.0);
        }
        self.g22[n22 as usize][(m - self.first) as usize]
    }
}

fn user1_table(s: &ScenarioParams, first: u32, last: u32) -> Result<Vec<Option<f64>>> {
    let fbc = s.fbc(User::One)?;
    (first..=last).map(|m| s.sinr(&fbc, s.user1.gain, m)).collect()
}

/// Lexicographic tie-break: energy, then `m₂₁`, then `N₂₁`, then `m₁`.
fn key_less(a: &Scored, b: &Scored) -> bool {
    (a.p.energy, a.cand.m21, a.cand.n21, a.cand.m1) < (b.p.energy, b.cand.m21, b.cand.n21, b.cand.m1)
}

fn reduce_best(points: impl Iterator<Item = Scored>) -> Option<Scored> {
    points.fold(None, |best, s| match best {
        Some(b) if !key_less(&s, &b) => Some(b),
        _ => Some(s),
    })
}

/// Benchmark: exhaustive search over `(N₂₁, m₁, m₂₁)` with `m₂₁ + m₂₂ = D₂`,
/// `m₁ ≤ min(D₁, m₂₁)`, `N₂₁ ∈ [0, N₂ − 1]`, exact SINRs throughout, plus
/// the pure-NOMA and TDMA endpoints.
pub fn solve_hybrid_exhaustive(params: &HybridParams) -> Result<SolveResult<HybridAllocation>> {
    params.validate()?;
    require_gain_order(params, HybridCase::I)?;
    check_monotonicity(&params.scenario)?;
    let s = &params.scenario;
    let (mhat, d1, d2, n2) = (s.min_blocklength, s.user1.deadline, s.user2.deadline, params.n2());
    let (h1, h2, p_max) = (params.h1(), params.h2(), s.p_max);
    let last = d2 - mhat;
    let g1 = user1_table(s, mhat, d1.min(last))?;
    let tables = PartTables::build(params, mhat, last, n2 - 1)?;

    let split = (mhat..=last)
        .into_par_iter()
        .map(|m21| {
            let m22 = d2 - m21;
            let mut best: Option<Scored> = None;
            for m1 in mhat..=d1.min(m21) {
                let Some(gamma1) = g1[(m1 - mhat) as usize] else { continue };
                for n21 in 0..n2 {
                    let cand = Candidate { n21, m1, m21, m22 };
                    let (Some(g21), Some(g22)) = (tables.g21(n21, m21), tables.g22(n2 - n21, m22)) else {
                        continue;
                    };
                    let p = powers(HybridCase::I, h1, h2, &cand, gamma1, g21, g22);
                    if !p.fits(p_max) {
                        continue;
                    }
                    let sc = Scored { cand, p };
                    if best.as_ref().map_or(true, |b| key_less(&sc, b)) {
                        best = Some(sc);
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>();
    let split = reduce_best(split.into_iter().flatten()).map(|b| split_allocation(HybridCase::I, n2, b));
    with_endpoints(params, HybridCase::I, split)
}

/// Benchmark for the receiver-1-cancels ordering: exhaustive over
/// `(m₁, N₂₁)` with `m₂₁ = m₁`, `N₂₁ ∈ [0, N₂]`, exact SINRs, plus the
/// pure-NOMA and TDMA endpoints.
pub fn solve_hybrid_case2_exhaustive(params: &HybridParams) -> Result<SolveResult<HybridAllocation>> {
    params.validate()?;
    require_gain_order(params, HybridCase::II)?;
    check_monotonicity(&params.scenario)?;
    let s = &params.scenario;
    let (mhat, d1, d2, n2) = (s.min_blocklength, s.user1.deadline, s.user2.deadline, params.n2());
    let (h1, h2, p_max) = (params.h1(), params.h2(), s.p_max);
    let last = d1.min(d2 - mhat);
    let g1 = user1_table(s, mhat, last)?;
    let tables = PartTables::build(params, mhat, d2 - mhat, n2)?;

    let split = (mhat..=last)
        .into_par_iter()
        .map(|m1| {
            let mut best: Option<Scored> = None;
            let Some(gamma1) = g1[(m1 - mhat) as usize] else { return best };
            for n21 in 0..=n2 {
                let m22 = if n21 == n2 { 0 } else { d2 - m1 };
                let g22 = if m22 == 0 { Some(0.0) } else { tables.g22(n2 - n21, m22) };
                let (Some(g21), Some(g22)) = (tables.g21(n21, m1), g22) else { continue };
                let cand = Candidate { n21, m1, m21: m1, m22 };
                let p = powers(HybridCase::II, h1, h2, &cand, gamma1, g21, g22);
                if !p.fits(p_max) {
                    continue;
                }
                let sc = Scored { cand, p };
                if best.as_ref().map_or(true, |b| key_less(&sc, b)) {
                    best = Some(sc);
                }
            }
            best
        })
        .collect::<Vec<_>>();
    let split = reduce_best(split.into_iter().flatten()).map(|b| split_allocation(HybridCase::II, n2, b));
    with_endpoints(params, HybridCase::II, split)
}

/// Scores one outer-scan point: surrogate golden-section on the split, then
/// exact powers at the chosen integer split. Power-infeasible points are
/// dropped.
fn scan_point(params: &HybridParams, case: HybridCase, m1: u32, m21: u32, gamma1: f64) -> Result<Option<Scored>> {
    let d2 = params.scenario.user2.deadline;
    let model = SlotModel::new(params, case, m1, m21, d2 - m21, gamma1)?;
    let gss = golden_section_min(params.n2(), params.gss_tol, |n| model.surrogate_energy(n));
    let cand = model.candidate(gss.n21);
    Ok(candidate_powers(case, &cand, params)?
        .filter(|p| p.fits(params.scenario.p_max))
        .map(|p| Scored { cand, p }))
}

/// Receiver 2 cancels user 1 (`h₁ ≤ h₂`). Outer scan over
/// `m₂₁ ∈ [m̂, D₂ − m̂]` with `m₁ = min(m₂₁, D₁)`, inner golden-section on the
/// bit split, exact re-scoring, then comparison with pure NOMA and TDMA.
pub fn solve_hybrid_case1(params: &HybridParams) -> Result<SolveResult<HybridAllocation>> {
    params.validate()?;
    require_gain_order(params, HybridCase::I)?;
    check_monotonicity(&params.scenario)?;
    let s = &params.scenario;
    let (mhat, d1, d2) = (s.min_blocklength, s.user1.deadline, s.user2.deadline);
    let g1 = SinrTable::build(&s.fbc(User::One)?, mhat, d1)?;
    let points = (mhat..=d2 - mhat)
        .into_par_iter()
        .map(|m21| {
            let m1 = m21.min(d1);
            scan_point(params, HybridCase::I, m1, m21, g1.get(m1).unwrap())
        })
        .collect::<Result<Vec<_>>>()?;
    let split = reduce_best(points.into_iter().flatten()).map(|b| split_allocation(HybridCase::I, params.n2(), b));
    with_endpoints(params, HybridCase::I, split)
}

/// Receiver 1 cancels the superposed part (`h₂ < h₁`). Outer scan over
/// `m₁ ∈ [m̂, min(D₁, D₂ − m̂)]` with `m₂₁ = m₁`, `m₂₂ = D₂ − m₁`.
pub fn solve_hybrid_case2(params: &HybridParams) -> Result<SolveResult<HybridAllocation>> {
    params.validate()?;
    require_gain_order(params, HybridCase::II)?;
    check_monotonicity(&params.scenario)?;
    let s = &params.scenario;
    let (mhat, d1, d2) = (s.min_blocklength, s.user1.deadline, s.user2.deadline);
    let last = d1.min(d2 - mhat);
    let g1 = SinrTable::build(&s.fbc(User::One)?, mhat, last)?;
    let points = (mhat..=last)
        .into_par_iter()
        .map(|m1| scan_point(params, HybridCase::II, m1, m1, g1.get(m1).unwrap()))
        .collect::<Result<Vec<_>>>()?;
    let split = reduce_best(points.into_iter().flatten()).map(|b| split_allocation(HybridCase::II, params.n2(), b));
    with_endpoints(params, HybridCase::II, split)
}

/// Dispatches on the gain ordering.
pub fn solve_hybrid(params: &HybridParams) -> Result<SolveResult<HybridAllocation>> {
    match HybridCase::of(&params.scenario) {
        HybridCase::I => solve_hybrid_case1(params),
        HybridCase::II => solve_hybrid_case2(params),
    }
}
