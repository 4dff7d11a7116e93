//! Normal-approximation finite-blocklength rate model.
//!
//! For a codeword of `N` bits sent over `m` channel uses at SINR `γ` with
//! block-error target `ε`, the achievable rate is
//!
//! ```text
//! R(γ, m, ε) = log2(1 + γ) − sqrt((1 − 1/(1+γ)²) / m) · Q⁻¹(ε) / ln 2
//! ```
//!
//! The constraint `N/m = R` defines an implicit SINR function `Γ(m)`. Its
//! inverse has a closed form (a quadratic in `√m`), which makes `Γ` cheap to
//! evaluate by bisection on `γ`.

use std::f64::consts::LN_2;

use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Slack added to `P_max · h` to form the upper SINR bracket.
pub const BRACKET_DELTA: f64 = 1.0;

/// Default absolute width of the SINR bracket at exit.
pub const DEFAULT_SINR_TOL: f64 = 1e-12;

/// Default minimum blocklength for the normal approximation to be trusted.
pub const DEFAULT_MIN_BLOCKLENGTH: u32 = 100;

/// Rate-constraint parameters of one codeword.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbcParams {
    /// Information bits per codeword.
    pub bits: u64,
    /// Target block error probability, in `(0, 0.5]`.
    pub error_prob: f64,
    /// Minimum admissible blocklength `m̂` (symbols).
    pub min_blocklength: u32,
}

impl FbcParams {
    pub fn new(bits: u64, error_prob: f64) -> Result<Self> {
        Self::with_min_blocklength(bits, error_prob, DEFAULT_MIN_BLOCKLENGTH)
    }

    pub fn with_min_blocklength(bits: u64, error_prob: f64, min_blocklength: u32) -> Result<Self> {
        let p = FbcParams { bits, error_prob, min_blocklength };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits == 0 {
            return Err(Error::InvalidParams("bits must be >= 1".into()));
        }
        if !(self.error_prob > 0.0 && self.error_prob <= 0.5) {
            return Err(Error::InvalidParams(format!(
                "error probability {} outside (0, 0.5]",
                self.error_prob
            )));
        }
        if self.min_blocklength == 0 {
            return Err(Error::InvalidParams("minimum blocklength must be >= 1".into()));
        }
        Ok(())
    }

    /// `Q⁻¹(ε)` for this codeword.
    pub fn q(&self) -> f64 {
        q_inv(self.error_prob).expect("validated error probability")
    }
}

/// A point on the rate surface produced by a solved rate constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub sinr: f64,
    pub blocklength: f64,
    /// Bits per channel use.
    pub rate: f64,
}

impl RatePoint {
    /// Solves `Γ(m)` and packages the result.
    pub fn solve(blocklength: f64, params: &FbcParams) -> Result<Self> {
        let sinr = gamma(blocklength, params)?;
        Ok(RatePoint { sinr, blocklength, rate: params.bits as f64 / blocklength })
    }
}

/// Upper-tail standard normal quantile `Q⁻¹(ε)`.
pub fn q_inv(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("Q^-1 argument {eps} outside (0, 1)")));
    }
    if eps == 0.5 {
        return Ok(0.0);
    }
    Ok(std::f64::consts::SQRT_2 * erfc_inv(2.0 * eps))
}

/// `sqrt(1 − 1/(1+γ)²)`, the square root of the channel dispersion.
#[inline]
pub(crate) fn sqrt_dispersion(sinr: f64) -> f64 {
    (sinr * (sinr + 2.0)).sqrt() / (sinr + 1.0)
}

/// Achievable rate in bits per channel use. May be negative at low SINR.
pub fn fbc_rate(sinr: f64, blocklength: f64, eps: f64) -> Result<f64> {
    if sinr < 0.0 || blocklength < 1.0 {
        return Err(Error::Domain(format!(
            "fbc_rate needs sinr >= 0 and m >= 1, got ({sinr}, {blocklength})"
        )));
    }
    let q = q_inv(eps)?;
    Ok(rate_with_q(sinr, blocklength, q))
}

#[inline]
pub(crate) fn rate_with_q(sinr: f64, blocklength: f64, q: f64) -> f64 {
    sinr.ln_1p() / LN_2 - sqrt_dispersion(sinr) * q / (blocklength.sqrt() * LN_2)
}

/// Residual of the rate constraint in natural-log form,
/// `m ln(1+γ) − √m · sqrt(γ(γ+2))/(γ+1) · Q⁻¹(ε) − N ln 2`.
///
/// Zero exactly when `(m, γ)` meets the rate demand; increasing in `γ`
/// wherever the rate is nonnegative.
pub fn fbc_residual(blocklength: f64, sinr: f64, params: &FbcParams) -> f64 {
    residual_with_q(blocklength, sinr, params.bits as f64, params.q())
}

#[inline]
pub(crate) fn residual_with_q(blocklength: f64, sinr: f64, bits: f64, q: f64) -> f64 {
    blocklength * sinr.ln_1p() - blocklength.sqrt() * sqrt_dispersion(sinr) * q - bits * LN_2
}

/// Closed-form blocklength at which SINR `γ` exactly carries `N` bits
/// (the positive root of the rate constraint viewed as a quadratic in `√m`).
pub fn blocklength_for_sinr(sinr: f64, params: &FbcParams) -> Result<f64> {
    if !(sinr > 0.0) || !sinr.is_finite() {
        return Err(Error::Domain(format!("blocklength_for_sinr needs sinr > 0, got {sinr}")));
    }
    Ok(blocklength_with_q(sinr, params.bits as f64, params.q()))
}

#[inline]
pub(crate) fn blocklength_with_q(sinr: f64, bits: f64, q: f64) -> f64 {
    let capacity = sinr.ln_1p() / LN_2;
    let b = sqrt_dispersion(sinr) * q / LN_2;
    let root = (b + (b * b + 4.0 * bits * capacity).sqrt()) / (2.0 * capacity);
    root * root
}

/// Bracket for the SINR bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBracket {
    pub upper: f64,
    pub tol: f64,
}

impl SinrBracket {
    /// The bracket `[0, P_max·h + δ]` used when the channel gain is known.
    pub fn for_link(p_max: f64, gain: f64) -> Self {
        SinrBracket { upper: p_max * gain + BRACKET_DELTA, tol: DEFAULT_SINR_TOL }
    }
}

/// `Γ(m)`: the SINR that exactly meets the rate demand at blocklength `m`,
/// by bisection on `γ` against the closed-form inverse.
///
/// Fails with [`Error::UnboundedSinr`] when the demand cannot be met below
/// `bracket.upper`.
pub fn sinr_for_blocklength(blocklength: f64, params: &FbcParams, bracket: SinrBracket) -> Result<f64> {
    check_blocklength(blocklength, params)?;
    if !(bracket.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", bracket.tol)));
    }
    let q = params.q();
    let bits = params.bits as f64;
    if !(bracket.upper > 0.0) || blocklength_with_q(bracket.upper, bits, q) > blocklength {
        return Err(Error::UnboundedSinr { blocklength, upper: bracket.upper });
    }
    Ok(bisect_sinr(blocklength, bits, q, 0.0, bracket.upper, bracket.tol))
}

/// `Γ(m)` with a bracket grown until it contains the root.
pub fn gamma(blocklength: f64, params: &FbcParams) -> Result<f64> {
    check_blocklength(blocklength, params)?;
    Ok(gamma_with_q(blocklength, params.bits as f64, params.q(), DEFAULT_SINR_TOL))
}

pub(crate) fn gamma_with_q(blocklength: f64, bits: f64, q: f64, tol: f64) -> f64 {
    let mut lo = 0.0;
    let mut hi = 1.0;
    while blocklength_with_q(hi, bits, q) >= blocklength {
        lo = hi;
        hi *= 2.0;
    }
    bisect_sinr(blocklength, bits, q, lo, hi, tol)
}

fn bisect_sinr(blocklength: f64, bits: f64, q: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if blocklength_with_q(mid, bits, q) < blocklength {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_blocklength(blocklength: f64, params: &FbcParams) -> Result<()> {
    params.validate()?;
    if !(blocklength >= params.min_blocklength as f64) || !blocklength.is_finite() {
        return Err(Error::Domain(format!(
            "blocklength {blocklength} below minimum {}",
            params.min_blocklength
        )));
    }
    Ok(())
}

/// Normalized energy `E(m) = m · Γ(m)` (SINR·symbols).
pub fn snr_energy(blocklength: f64, params: &FbcParams) -> Result<f64> {
    Ok(blocklength * gamma(blocklength, params)?)
}

/// `2√(ln 2) / (4 − √2) ≈ 0.64394`.
pub fn monotonicity_bound() -> f64 {
    2.0 * LN_2.sqrt() / (4.0 - std::f64::consts::SQRT_2)
}

pub fn monotonicity_ratio(params: &FbcParams) -> f64 {
    params.q() / (params.bits as f64).sqrt()
}

/// Whether `m·Γ(m)` is guaranteed strictly decreasing in `m`.
pub fn monotonicity_holds(params: &FbcParams) -> bool {
    monotonicity_ratio(params) <= monotonicity_bound()
}

/// `Γ(m)` tabulated over a contiguous range of integer blocklengths.
#[derive(Debug, Clone)]
pub struct SinrTable {
    first: u32,
    values: Vec<f64>,
}

impl SinrTable {
    /// Tabulates `Γ(m)` for `m ∈ [first, last]`. Empty when `last < first`.
    pub fn build(params: &FbcParams, first: u32, last: u32) -> Result<Self> {
        params.validate()?;
        let first = first.max(params.min_blocklength);
        let q = params.q();
        let bits = params.bits as f64;
        let values = if last < first {
            Vec::new()
        } else {
            (first..=last).map(|m| gamma_with_q(m as f64, bits, q, DEFAULT_SINR_TOL)).collect()
        };
        Ok(SinrTable { first, values })
    }

    pub fn get(&self, m: u32) -> Option<f64> {
        m.checked_sub(self.first).and_then(|i| self.values.get(i as usize)).copied()
    }

    pub fn first(&self) -> u32 {
        self.first
    }

    pub fn last(&self) -> Option<u32> {
        (!self.values.is_empty()).then(|| self.first + self.values.len() as u32 - 1)
    }
}
