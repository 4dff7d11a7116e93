//! Pure-NOMA energy minimization.
//!
//! Under the energy monotonicity condition, every pure-NOMA problem is solved
//! by saturating the deadlines and reading the powers off the SINR
//! definitions:
//!
//! * Case I (`h₁ ≤ h₂`): receiver 2 cancels user 1's codeword, `m = (D₁, D₂)`.
//! * Case II, full block (`h₁ > h₂`): no cancellation, `m = (D₁, D₂)`.
//! * Case II, short block (`h₁ > h₂`): receiver 1 cancels user 2's codeword,
//!   which forces `m₂ ≤ m₁`, so `m = (D₁, D₁)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbc::{monotonicity_bound, monotonicity_ratio};
use crate::scenario::{Energy, InfeasibleReason, ScenarioParams, SolveResult, User};

/// Default blocklength cap for the latency search.
pub const DEFAULT_LATENCY_CAP: u32 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NomaScheme {
    #[serde(rename = "case-i")]
    CaseI,
    #[serde(rename = "case-ii-full-block")]
    CaseIIFullBlock,
    #[serde(rename = "case-ii-short-block")]
    CaseIIShortBlock,
}

impl NomaScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            NomaScheme::CaseI => "case-i",
            NomaScheme::CaseIIFullBlock => "case-ii-full-block",
            NomaScheme::CaseIIShortBlock => "case-ii-short-block",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NomaAllocation {
    pub scheme: NomaScheme,
    pub m1: u32,
    pub m2: u32,
    pub gamma1: f64,
    pub gamma2: f64,
    pub p1: f64,
    pub p2: f64,
    /// `m₁p₁ + m₂p₂`, watt·symbols.
    pub energy: f64,
}

impl Energy for NomaAllocation {
    fn energy(&self) -> f64 {
        self.energy
    }
}

impl NomaAllocation {
    fn new(scheme: NomaScheme, m: (u32, u32), gamma: (f64, f64), p: (f64, f64)) -> Self {
        NomaAllocation {
            scheme,
            m1: m.0,
            m2: m.1,
            gamma1: gamma.0,
            gamma2: gamma.1,
            p1: p.0,
            p2: p.1,
            energy: m.0 as f64 * p.0 + m.1 as f64 * p.1,
        }
    }

    /// The SINRs each receiver sees under this allocation's decoding order.
    pub fn achieved_sinrs(&self, params: &ScenarioParams) -> (f64, f64) {
        let (h1, h2) = (params.user1.gain, params.user2.gain);
        let (p1, p2) = (self.p1, self.p2);
        match self.scheme {
            NomaScheme::CaseI => (p1 * h1 / (p2 * h1 + 1.0), p2 * h2),
            NomaScheme::CaseIIFullBlock => (p1 * h1 / (p2 * h1 + 1.0), p2 * h2 / (p1 * h2 + 1.0)),
            NomaScheme::CaseIIShortBlock => (p1 * h1, p2 * h2 / (p1 * h2 + 1.0)),
        }
    }
}

/// Refuses instances where deadline saturation is not proven optimal.
pub fn check_monotonicity(params: &ScenarioParams) -> Result<()> {
    for (k, which) in [(1u8, User::One), (2u8, User::Two)] {
        let fbc = params.fbc(which)?;
        let ratio = monotonicity_ratio(&fbc);
        if ratio > monotonicity_bound() {
            return Err(Error::MonotonicityViolated { user: k, ratio, bound: monotonicity_bound() });
        }
    }
    Ok(())
}

fn require_case1(params: &ScenarioParams) -> Result<()> {
    if params.user1.gain > params.user2.gain {
        return Err(Error::Precondition(format!(
            "case I needs h1 <= h2, got h1 = {} > h2 = {}",
            params.user1.gain, params.user2.gain
        )));
    }
    Ok(())
}

fn require_case2(params: &ScenarioParams) -> Result<()> {
    if params.user1.gain <= params.user2.gain {
        return Err(Error::Precondition(format!(
            "case II needs h1 > h2, got h1 = {} <= h2 = {}",
            params.user1.gain, params.user2.gain
        )));
    }
    Ok(())
}

/// `Γ₁(m₁)`, `Γ₂(m₂)` with power-capped brackets. Each user's bracket uses the
/// gain of the receiver that decodes its codeword last.
fn deadline_sinrs(params: &ScenarioParams, m1: u32, m2: u32) -> Result<Option<(f64, f64)>> {
    let g1 = params.sinr(&params.fbc(User::One)?, params.user1.gain, m1)?;
    let g2 = params.sinr(&params.fbc(User::Two)?, params.user2.gain, m2)?;
    Ok(g1.zip(g2))
}

/// Case-I powers for given SINR targets:
/// `p₁ = γ₁γ₂/h₂ + γ₁/h₁`, `p₂ = γ₂/h₂`.
pub fn case1_powers(params: &ScenarioParams, gamma1: f64, gamma2: f64) -> (f64, f64) {
    let (h1, h2) = (params.user1.gain, params.user2.gain);
    (gamma1 * gamma2 / h2 + gamma1 / h1, gamma2 / h2)
}

/// Case-II powers when both receivers treat interference as noise.
/// `None` when `γ₁γ₂ ≥ 1`.
pub fn case2_full_powers(params: &ScenarioParams, gamma1: f64, gamma2: f64) -> Option<(f64, f64)> {
    let (h1, h2) = (params.user1.gain, params.user2.gain);
    let prod = gamma1 * gamma2;
    if prod >= 1.0 {
        return None;
    }
    let den = h1 * h2 * (1.0 - prod);
    Some(((gamma1 * h2 + prod * h1) / den, (gamma2 * h1 + prod * h2) / den))
}

/// Case-II powers when receiver 1 cancels user 2:
/// `p₁ = γ₁/h₁`, `p₂ = γ₁γ₂/h₁ + γ₂/h₂`.
pub fn case2_sic_powers(params: &ScenarioParams, gamma1: f64, gamma2: f64) -> (f64, f64) {
    let (h1, h2) = (params.user1.gain, params.user2.gain);
    (gamma1 / h1, gamma1 * gamma2 / h1 + gamma2 / h2)
}

/// Case-I allocation at `m = (D₁, D₂)` from precomputed SINR targets.
pub fn case1_allocation(params: &ScenarioParams, gamma1: f64, gamma2: f64) -> SolveResult<NomaAllocation> {
    let (p1, p2) = case1_powers(params, gamma1, gamma2);
    finish(params, NomaScheme::CaseI, (params.user1.deadline, params.user2.deadline), (gamma1, gamma2), (p1, p2))
}

pub fn case2_full_allocation(params: &ScenarioParams, gamma1: f64, gamma2: f64) -> SolveResult<NomaAllocation> {
    match case2_full_powers(params, gamma1, gamma2) {
        None => SolveResult::Infeasible(InfeasibleReason::SinrProduct),
        Some(p) => finish(
            params,
            NomaScheme::CaseIIFullBlock,
            (params.user1.deadline, params.user2.deadline),
            (gamma1, gamma2),
            p,
        ),
    }
}

/// Case-II short-block allocation at `m = (D₁, D₁)`; `gamma2` is `Γ₂(D₁)`.
pub fn case2_sic_allocation(params: &ScenarioParams, gamma1: f64, gamma2: f64) -> SolveResult<NomaAllocation> {
    let p = case2_sic_powers(params, gamma1, gamma2);
    let d1 = params.user1.deadline;
    finish(params, NomaScheme::CaseIIShortBlock, (d1, d1), (gamma1, gamma2), p)
}

fn finish(
    params: &ScenarioParams,
    scheme: NomaScheme,
    m: (u32, u32),
    gamma: (f64, f64),
    p: (f64, f64),
) -> SolveResult<NomaAllocation> {
    if p.0 + p.1 <= params.p_max {
        SolveResult::Feasible(NomaAllocation::new(scheme, m, gamma, p))
    } else {
        SolveResult::Infeasible(InfeasibleReason::PowerBudget)
    }
}

/// Case I, `h₁ ≤ h₂`: `m* = (D₁, D₂)`, `γ* = Γ(D)`.
pub fn solve_case1(params: &ScenarioParams) -> Result<SolveResult<NomaAllocation>> {
    params.validate()?;
    require_case1(params)?;
    check_monotonicity(params)?;
    Ok(match deadline_sinrs(params, params.user1.deadline, params.user2.deadline)? {
        None => SolveResult::Infeasible(InfeasibleReason::PowerBudget),
        Some((g1, g2)) => case1_allocation(params, g1, g2),
    })
}

/// Closed-form feasibility test for Case I:
/// `Γ₁(D₁)Γ₂(D₂)/h₂ + Γ₁(D₁)/h₁ + Γ₂(D₂)/h₂ ≤ P_max`.
pub fn feasibility_case1(params: &ScenarioParams) -> Result<bool> {
    params.validate()?;
    require_case1(params)?;
    Ok(match deadline_sinrs(params, params.user1.deadline, params.user2.deadline)? {
        None => false,
        Some((g1, g2)) => {
            let (p1, p2) = case1_powers(params, g1, g2);
            p1 + p2 <= params.p_max
        }
    })
}

/// Case II with full blocklength for receiver 2 (no cancellation).
pub fn solve_case2_full(params: &ScenarioParams) -> Result<SolveResult<NomaAllocation>> {
    params.validate()?;
    require_case2(params)?;
    check_monotonicity(params)?;
    Ok(match deadline_sinrs(params, params.user1.deadline, params.user2.deadline)? {
        None => SolveResult::Infeasible(InfeasibleReason::PowerBudget),
        Some((g1, g2)) => case2_full_allocation(params, g1, g2),
    })
}

/// Case II with receiver 1 cancelling user 2: `m* = (D₁, D₁)`.
pub fn solve_case2_sic(params: &ScenarioParams) -> Result<SolveResult<NomaAllocation>> {
    params.validate()?;
    require_case2(params)?;
    check_monotonicity(params)?;
    let d1 = params.user1.deadline;
    let g1 = params.sinr(&params.fbc(User::One)?, params.user1.gain, d1)?;
    // User 2's codeword is decoded first at receiver 1, last at receiver 2.
    let g2 = params.sinr(&params.fbc(User::Two)?, params.user2.gain, d1)?;
    Ok(match g1.zip(g2) {
        None => SolveResult::Infeasible(InfeasibleReason::PowerBudget),
        Some((g1, g2)) => case2_sic_allocation(params, g1, g2),
    })
}

/// Both Case-II branches, for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTwoBranches {
    pub full_block: SolveResult<NomaAllocation>,
    pub short_block: SolveResult<NomaAllocation>,
}

impl CaseTwoBranches {
    /// Cheaper feasible branch; ties go to the short-block (SIC) branch.
    pub fn best(&self) -> SolveResult<NomaAllocation> {
        pick_case2(self.full_block.clone(), self.short_block.clone())
    }
}

pub fn pick_case2(
    full: SolveResult<NomaAllocation>,
    sic: SolveResult<NomaAllocation>,
) -> SolveResult<NomaAllocation> {
    match (&full, &sic) {
        (SolveResult::Feasible(f), SolveResult::Feasible(s)) => {
            if s.energy <= f.energy {
                sic
            } else {
                full
            }
        }
        (SolveResult::Feasible(_), _) => full,
        (_, SolveResult::Feasible(_)) => sic,
        (SolveResult::Infeasible(r), SolveResult::Infeasible(_)) => SolveResult::Infeasible(*r),
    }
}

pub fn solve_case2_branches(params: &ScenarioParams) -> Result<CaseTwoBranches> {
    Ok(CaseTwoBranches { full_block: solve_case2_full(params)?, short_block: solve_case2_sic(params)? })
}

/// Dispatches on the gain ordering; `h₁ = h₂` goes to Case I.
pub fn solve_noma(params: &ScenarioParams) -> Result<SolveResult<NomaAllocation>> {
    params.validate()?;
    check_monotonicity(params)?;
    if params.user1.gain <= params.user2.gain {
        solve_case1(params)
    } else {
        Ok(solve_case2_branches(params)?.best())
    }
}

/// Overall error of a decoding chain: `1 − (1−εa)(1−εb) = εa + εb − εa·εb`.
pub fn compose_error(eps_a: f64, eps_b: f64) -> f64 {
    eps_a + eps_b - eps_a * eps_b
}

/// Folds [`compose_error`] over a chain of decoding stages.
pub fn compose_errors(stages: &[f64]) -> f64 {
    stages.iter().fold(0.0, |acc, &e| compose_error(acc, e))
}

/// Smallest user-2 blocklength meeting both rate demands within `P_max`
/// (Case I ordering), with `m₁ = min(m₂, D₁)`.
///
/// `m₂` is not bounded by `D₂` here; `cap` bounds the search instead.
pub fn minimize_latency(params: &ScenarioParams, cap: u32) -> Result<SolveResult<NomaAllocation>> {
    params.validate()?;
    require_case1(params)?;
    let lo_m = params.min_blocklength;
    if cap < lo_m {
        return Err(Error::InvalidParams(format!("latency cap {cap} below minimum blocklength {lo_m}")));
    }
    let fbc1 = params.fbc(User::One)?;
    let fbc2 = params.fbc(User::Two)?;
    let d1 = params.user1.deadline;
    let probe = |m2: u32| -> Result<Option<NomaAllocation>> {
        let m1 = m2.min(d1);
        let g1 = params.sinr(&fbc1, params.user1.gain, m1)?;
        let g2 = params.sinr(&fbc2, params.user2.gain, m2)?;
        Ok(g1.zip(g2).and_then(|(g1, g2)| {
            let (p1, p2) = case1_powers(params, g1, g2);
            (p1 + p2 <= params.p_max).then(|| NomaAllocation::new(NomaScheme::CaseI, (m1, m2), (g1, g2), (p1, p2)))
        }))
    };
    if let Some(a) = probe(lo_m)? {
        return Ok(SolveResult::Feasible(a));
    }
    let Some(mut best) = probe(cap)? else {
        return Ok(SolveResult::Infeasible(InfeasibleReason::LatencyCap));
    };
    // Infeasible at `lo`, feasible at `hi`.
    let (mut lo, mut hi) = (lo_m, cap);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match probe(mid)? {
            Some(a) => {
                hi = mid;
                best = a;
            }
            None => lo = mid,
        }
    }
    Ok(SolveResult::Feasible(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::fixtures::scenario;

    fn case1() -> ScenarioParams {
        scenario((256, 256), (256, 640), (1e-6, 1e-6), (10.0, 100.0), 10.0)
    }

    #[test]
    fn zero_budget_is_infeasible() {
        let mut p = case1();
        p.p_max = 0.0;
        assert_eq!(solve_case1(&p).unwrap(), SolveResult::Infeasible(InfeasibleReason::PowerBudget));
        assert!(!feasibility_case1(&p).unwrap());
    }

    #[test]
    fn shannon_case1_is_closed_form() {
        let p = case1().with_error_prob(0.5);
        let a = solve_case1(&p).unwrap().into_feasible().unwrap();
        assert!((a.gamma1 - (2f64.powf(256.0 / 256.0) - 1.0)).abs() < 1e-11);
        assert!((a.gamma2 - (2f64.powf(256.0 / 640.0) - 1.0)).abs() < 1e-11);
        assert_eq!((a.m1, a.m2), (256, 640));
    }

    #[test]
    fn case_preconditions() {
        let p = case1();
        assert!(matches!(solve_case2_full(&p), Err(Error::Precondition(_))));
        assert!(matches!(solve_case2_sic(&p), Err(Error::Precondition(_))));
        let swapped = p.with_gains(100.0, 10.0);
        assert!(matches!(solve_case1(&swapped), Err(Error::Precondition(_))));
        assert!(matches!(feasibility_case1(&swapped), Err(Error::Precondition(_))));
    }

    #[test]
    fn monotonicity_violation_refused() {
        let p = scenario((25, 256), (256, 640), (1e-10, 1e-6), (10.0, 100.0), 10.0);
        assert!(matches!(solve_noma(&p), Err(Error::MonotonicityViolated { user: 1, .. })));
    }

    #[test]
    fn equal_gains_route_to_case1() {
        let p = case1().with_gains(50.0, 50.0);
        let a = solve_noma(&p).unwrap().into_feasible().unwrap();
        assert_eq!(a.scheme, NomaScheme::CaseI);
    }

    #[test]
    fn sinr_product_infeasible() {
        let p = case1().with_gains(100.0, 10.0);
        assert_eq!(
            case2_full_allocation(&p, 2.0, 0.5),
            SolveResult::Infeasible(InfeasibleReason::SinrProduct)
        );
    }

    #[test]
    fn case2_full_powers_reproduce_sinrs() {
        let p = case1().with_gains(100.0, 10.0);
        let a = solve_case2_full(&p).unwrap().into_feasible().unwrap();
        let (g1, g2) = a.achieved_sinrs(&p);
        assert!((g1 / a.gamma1 - 1.0).abs() < 1e-9);
        assert!((g2 / a.gamma2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn error_composition() {
        assert_eq!(compose_error(1e-6, 0.0), 1e-6);
        assert!((compose_error(1e-6, 1e-6) - 2e-6).abs() < 1e-11);
        assert!((compose_errors(&[1e-6, 5e-7, 5e-7]) - 2e-6).abs() < 1e-11);
    }

    #[test]
    fn latency_with_unbounded_power_hits_minimum() {
        let mut p = case1();
        p.p_max = f64::INFINITY;
        let a = minimize_latency(&p, DEFAULT_LATENCY_CAP).unwrap().into_feasible().unwrap();
        assert_eq!(a.m2, 100);
        assert_eq!(a.m1, 100);
    }

    #[test]
    fn latency_cap_reported() {
        let mut p = case1();
        p.p_max = 1e-9;
        assert_eq!(
            minimize_latency(&p, 2000).unwrap(),
            SolveResult::Infeasible(InfeasibleReason::LatencyCap)
        );
    }
}
