//! Convexity structure of the rate-vs-SINR curve and its concave surrogate.
//!
//! At fixed blocklength `m` and error target `ε`, the achievable rate in nats
//! per channel use is
//!
//! ```text
//! f(x) = ln(1 + x) − a · sqrt(x(x+2)) / (x+1),    a = Q⁻¹(ε) / √m
//! ```
//!
//! `f` is convex on `[g⁻¹(a), g₂⁻¹(a)]` and concave above it when `a ≤ β`,
//! and concave on its whole nonnegative domain when `a > β`. Replacing the
//! convex piece by the tangent at `g₂⁻¹(a)` gives a globally concave lower
//! bound `f_M`, whose inverse (the surrogate SINR map) is convex in the bit
//! load.

use std::f64::consts::LN_2;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::fbc::{q_inv, sqrt_dispersion};

/// Values of the three boundary functions at one SINR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryValues {
    /// `(x+1) ln(x+1) / sqrt(x(x+2))`: `f(x) ≥ 0` iff `a ≤ g(x)`.
    pub g: f64,
    /// `(x+1) sqrt(x(x+2))`: `f' ≥ 0` iff `a ≤ g1(x)`.
    pub g1: f64,
    /// `(x+1)(x(x+2))^{3/2} / (3x²+6x+1)`: `f'' ≤ 0` iff `a ≤ g2(x)`.
    pub g2: f64,
}

pub fn boundary_funcs(x: f64) -> Result<BoundaryValues> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("boundary functions need x > 0, got {x}")));
    }
    Ok(BoundaryValues { g: g(x), g1: g1(x), g2: g2(x) })
}

#[inline]
fn g(x: f64) -> f64 {
    (x + 1.0) * x.ln_1p() / (x * (x + 2.0)).sqrt()
}

#[inline]
fn g1(x: f64) -> f64 {
    (x + 1.0) * (x * (x + 2.0)).sqrt()
}

#[inline]
fn g2(x: f64) -> f64 {
    let s = x * (x + 2.0);
    (x + 1.0) * s * s.sqrt() / (3.0 * x * x + 6.0 * x + 1.0)
}

/// The breakpoint `x₀` where `g₂(x₀) = g(x₀)`, and `β = g(x₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub x0: f64,
    pub beta: f64,
}

static CRITICAL: OnceLock<CriticalPoint> = OnceLock::new();

/// Computed once on first use and cached.
pub fn critical_point() -> CriticalPoint {
    *CRITICAL.get_or_init(|| {
        let diff = |x: f64| g2(x) - g(x);
        let (mut lo, mut hi) = (1e-6, 2.0);
        assert!(diff(lo) < 0.0 && diff(hi) > 0.0, "g2 - g must change sign on (0, 2]");
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if diff(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x0 = 0.5 * (lo + hi);
        CriticalPoint { x0, beta: g(x0) }
    })
}

/// Inverts a strictly increasing function on `(0, ∞)` that tends to 0 at the
/// origin, by bisection with a growing upper bracket.
fn invert_increasing(func: impl Fn(f64) -> f64, target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while func(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            return mid;
        }
        if func(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Rate in nats per channel use, `ln(x+1) − a·sqrt(x(x+2))/(x+1)`.
pub fn f_exact(x: f64, a: f64) -> f64 {
    x.ln_1p() - a * sqrt_dispersion(x)
}

/// `f'(x) = 1/(x+1) − a / ((x+1)² sqrt(x(x+2)))`.
pub fn f_prime(x: f64, a: f64) -> f64 {
    let x1 = x + 1.0;
    1.0 / x1 - a / (x1 * x1 * (x * (x + 2.0)).sqrt())
}

/// `f''(x) = (a(3x²+6x+1) − (x+1)(x(x+2))^{3/2}) / ((x+1)³ (x(x+2))^{3/2})`.
pub fn f_second(x: f64, a: f64) -> f64 {
    let x1 = x + 1.0;
    let s = x * (x + 2.0);
    let s32 = s * s.sqrt();
    (a * (3.0 * x * x + 6.0 * x + 1.0) - x1 * s32) / (x1 * x1 * x1 * s32)
}

/// Breakpoints of `f` for one dispersion scale `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxContext {
    /// Dispersion scale `Q⁻¹(ε)/√m` of the nats-form rate.
    pub a: f64,
    pub beta: f64,
    pub x0: f64,
    /// `g⁻¹(a)`: the SINR where `f` crosses zero.
    pub x_lo: f64,
    /// `g₂⁻¹(a)`: end of the convex segment, present only when `a ≤ β`.
    pub x_mid: Option<f64>,
}

impl ApproxContext {
    pub fn new(a: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("dispersion scale must be >= 0, got {a}")));
        }
        let CriticalPoint { x0, beta } = critical_point();
        let x_lo = invert_increasing(g, a);
        let x_mid = (a <= beta).then(|| invert_increasing(g2, a));
        Ok(ApproxContext { a, beta, x0, x_lo, x_mid })
    }

    /// Context for a codeword of blocklength `m` at error target `ε`.
    pub fn for_codeword(blocklength: f64, eps: f64) -> Result<Self> {
        if !(blocklength > 0.0) {
            return Err(Error::Domain(format!("blocklength must be positive, got {blocklength}")));
        }
        Self::new(q_inv(eps)? / blocklength.sqrt())
    }

    fn convex_segment(&self) -> Result<f64> {
        self.x_mid.ok_or_else(|| {
            Error::InvalidContext(format!("a = {} > beta = {}: no convex segment", self.a, self.beta))
        })
    }

    /// The SINR where the tangent lower bound crosses zero.
    pub fn lower_zero(&self) -> Result<f64> {
        let xm = self.convex_segment()?;
        let slope = f_prime(xm, self.a);
        if slope <= 0.0 || xm == 0.0 {
            return Ok(xm);
        }
        Ok(xm - f_exact(xm, self.a) / slope)
    }
}

/// Tangent of `f` at `g₂⁻¹(a)`.
pub fn f_lower(x: f64, ctx: &ApproxContext) -> Result<f64> {
    let xm = ctx.convex_segment()?;
    check_domain(x, ctx)?;
    Ok(tangent(x, xm, ctx.a))
}

#[inline]
fn tangent(x: f64, xm: f64, a: f64) -> f64 {
    if xm == 0.0 {
        // a = 0: the convex segment is the single point 0.
        return x;
    }
    f_prime(xm, a) * (x - xm) + f_exact(xm, a)
}

/// Chord of `f` from `(g⁻¹(a), 0)` to `(g₂⁻¹(a), f(g₂⁻¹(a)))`.
pub fn f_upper(x: f64, ctx: &ApproxContext) -> Result<f64> {
    let xm = ctx.convex_segment()?;
    check_domain(x, ctx)?;
    let width = xm - ctx.x_lo;
    if width <= 0.0 {
        return Ok(0.0);
    }
    Ok(f_exact(xm, ctx.a) / width * (x - ctx.x_lo))
}

/// Concave surrogate: `f` on the concave region, the tangent on the convex one.
pub fn f_modified(x: f64, ctx: &ApproxContext) -> Result<f64> {
    check_domain(x, ctx)?;
    Ok(match ctx.x_mid {
        Some(xm) if x < xm => tangent(x, xm, ctx.a),
        _ => f_exact(x, ctx.a),
    })
}

fn check_domain(x: f64, ctx: &ApproxContext) -> Result<()> {
    // `x_lo` is itself the output of a bisection; allow its last-bit error.
    if !(x >= ctx.x_lo * (1.0 - 1e-12)) {
        return Err(Error::Domain(format!("x = {x} below the domain edge {}", ctx.x_lo)));
    }
    Ok(())
}

/// Inverse of the surrogate at one blocklength: rate demand (bits) to SINR.
#[derive(Debug, Clone, Copy)]
pub struct Surrogate {
    ctx: ApproxContext,
    blocklength: f64,
    /// `f(x_mid)` and `f'(x_mid)`, cached for the linear branch.
    tangent_at: Option<(f64, f64, f64)>,
}

impl Surrogate {
    pub fn new(blocklength: f64, eps: f64) -> Result<Self> {
        let ctx = ApproxContext::for_codeword(blocklength, eps)?;
        let tangent_at = ctx
            .x_mid
            .filter(|&xm| xm > 0.0)
            .map(|xm| (xm, f_exact(xm, ctx.a), f_prime(xm, ctx.a)));
        Ok(Surrogate { ctx, blocklength, tangent_at })
    }

    pub fn context(&self) -> &ApproxContext {
        &self.ctx
    }

    /// SINR at which the surrogate carries `bits` over this blocklength.
    /// Accepts a real-valued bit load so it can be searched continuously.
    pub fn sinr(&self, bits: f64) -> Result<f64> {
        if !(bits >= 0.0) || !bits.is_finite() {
            return Err(Error::Domain(format!("bit load must be >= 0, got {bits}")));
        }
        let target = bits * LN_2 / self.blocklength;
        if self.ctx.a == 0.0 {
            return Ok(target.exp_m1());
        }
        if let Some((xm, fm, slope)) = self.tangent_at {
            if target < fm {
                return Ok(xm + (target - fm) / slope);
            }
        }
        let start = self.ctx.x_mid.unwrap_or(self.ctx.x_lo);
        invert_concave(self.ctx.a, target, start)
    }
}

// Newton from the left on the concave part: each tangent overshoots the
// curve, so iterates climb monotonically to the root.
fn invert_concave(a: f64, target: f64, start: f64) -> Result<f64> {
    let mut x = start.max(target.exp_m1());
    if !x.is_finite() {
        return Err(Error::InfeasibleRate { rate: target });
    }
    for _ in 0..200 {
        let short = target - f_exact(x, a);
        if short <= 0.0 {
            break;
        }
        let next = x + short / f_prime(x, a);
        if !(next > x) || !next.is_finite() {
            break;
        }
        let done = next - x <= 1e-15 * next;
        x = next;
        if done {
            break;
        }
    }
    Ok(x)
}

/// Surrogate SINR for `bits` over `m` symbols at error target `ε`.
pub fn sinr_approx(bits: f64, blocklength: f64, eps: f64) -> Result<f64> {
    Surrogate::new(blocklength, eps)?.sinr(bits)
}

/// Largest rate gap between the chord and the tangent over the part of the
/// convex segment where the tangent is nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BoundGap {
    /// SINR where the tangent crosses zero (where the gap peaks).
    pub at_sinr: f64,
    /// `f_upper − f_lower` there, bits per channel use.
    pub upper_minus_lower_bits: f64,
    /// `f − f_lower` there, bits per channel use.
    pub exact_minus_lower_bits: f64,
}

/// `None` when `a > β` (no convex segment, the surrogate is exact).
pub fn max_bound_gap(ctx: &ApproxContext) -> Option<BoundGap> {
    ctx.x_mid?;
    let x = ctx.lower_zero().ok()?.max(ctx.x_lo);
    let lower = f_lower(x, ctx).ok()?;
    let upper = f_upper(x, ctx).ok()?;
    Some(BoundGap {
        at_sinr: x,
        upper_minus_lower_bits: (upper - lower) / LN_2,
        exact_minus_lower_bits: (f_exact(x, ctx.a) - lower) / LN_2,
    })
}
