//! Problem instances and the common solver return type.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbc::{self, FbcParams, SinrBracket};

/// One receiver's demand and channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    /// Information bits `N`.
    pub bits: u64,
    /// Latency deadline `D` in symbols.
    pub deadline: u32,
    /// Block error target `ε`.
    pub error_prob: f64,
    /// Normalized channel gain `h = |h̃|²/σ²` (linear).
    pub gain: f64,
}

/// A two-user downlink instance. User 1 has the tighter deadline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub user1: UserSpec,
    pub user2: UserSpec,
    /// Transmit power budget in watts.
    pub p_max: f64,
    /// Minimum blocklength `m̂`.
    pub min_blocklength: u32,
}

/// Which receiver a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum User {
    One,
    Two,
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        let (u1, u2) = (&self.user1, &self.user2);
        if u1.deadline > u2.deadline {
            return Err(Error::InvalidParams(format!(
                "user 1 must have the tighter deadline (D1 = {} > D2 = {})",
                u1.deadline, u2.deadline
            )));
        }
        if self.min_blocklength == 0 || self.min_blocklength > u1.deadline {
            return Err(Error::InvalidParams(format!(
                "minimum blocklength {} must lie in [1, D1 = {}]",
                self.min_blocklength, u1.deadline
            )));
        }
        if !(self.p_max >= 0.0) {
            return Err(Error::InvalidParams(format!("P_max must be >= 0, got {}", self.p_max)));
        }
        for (k, u) in [(1, u1), (2, u2)] {
            if !(u.gain > 0.0 && u.gain.is_finite()) {
                return Err(Error::InvalidParams(format!("h{k} must be positive and finite")));
            }
            self.codeword(u.bits, u.error_prob)?;
        }
        Ok(())
    }

    pub fn user(&self, which: User) -> &UserSpec {
        match which {
            User::One => &self.user1,
            User::Two => &self.user2,
        }
    }

    /// Rate-constraint parameters for a codeword of this instance.
    pub fn codeword(&self, bits: u64, error_prob: f64) -> Result<FbcParams> {
        FbcParams::with_min_blocklength(bits, error_prob, self.min_blocklength)
    }

    pub fn fbc(&self, which: User) -> Result<FbcParams> {
        let u = self.user(which);
        self.codeword(u.bits, u.error_prob)
    }

    /// `Γ(m)` for a codeword decoded at gain `gain`, bracketed by
    /// `[0, P_max·gain + δ]`. `None` when the bracket holds no root, which
    /// means the codeword alone already exceeds the power budget.
    pub fn sinr(&self, params: &FbcParams, gain: f64, blocklength: u32) -> Result<Option<f64>> {
        let m = blocklength as f64;
        if !self.p_max.is_finite() {
            return fbc::gamma(m, params).map(Some);
        }
        match fbc::sinr_for_blocklength(m, params, SinrBracket::for_link(self.p_max, gain)) {
            Ok(g) => Ok(Some(g)),
            Err(Error::UnboundedSinr { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Same instance with every error target replaced by `eps`.
    pub fn with_error_prob(&self, eps: f64) -> Self {
        let mut s = *self;
        s.user1.error_prob = eps;
        s.user2.error_prob = eps;
        s
    }

    pub fn with_gains(&self, h1: f64, h2: f64) -> Self {
        let mut s = *self;
        s.user1.gain = h1;
        s.user2.gain = h2;
        s
    }
}

/// Why an instance has no allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfeasibleReason {
    /// The required powers exceed `P_max`.
    PowerBudget,
    /// Both receivers treat interference as noise and `γ₁γ₂ ≥ 1`.
    SinrProduct,
    /// A search found no admissible point.
    NoFeasiblePoint,
    /// Latency search hit its blocklength cap.
    LatencyCap,
}

impl InfeasibleReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            InfeasibleReason::PowerBudget => "power-budget",
            InfeasibleReason::SinrProduct => "sinr-product",
            InfeasibleReason::NoFeasiblePoint => "no-feasible-point",
            InfeasibleReason::LatencyCap => "latency-cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "detail", rename_all = "kebab-case")]
pub enum SolveResult<A> {
    Feasible(A),
    Infeasible(InfeasibleReason),
}

impl<A> SolveResult<A> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SolveResult::Feasible(_))
    }

    pub fn feasible(&self) -> Option<&A> {
        match self {
            SolveResult::Feasible(a) => Some(a),
            SolveResult::Infeasible(_) => None,
        }
    }

    pub fn into_feasible(self) -> Option<A> {
        match self {
            SolveResult::Feasible(a) => Some(a),
            SolveResult::Infeasible(_) => None,
        }
    }

    pub fn map<B>(self, f: impl FnOnce(A) -> B) -> SolveResult<B> {
        match self {
            SolveResult::Feasible(a) => SolveResult::Feasible(f(a)),
            SolveResult::Infeasible(r) => SolveResult::Infeasible(r),
        }
    }
}

/// Anything that carries a transmit energy.
pub trait Energy {
    /// Watt·symbols.
    fn energy(&self) -> f64;
}

impl<A: Energy> SolveResult<A> {
    pub fn energy(&self) -> Option<f64> {
        self.feasible().map(Energy::energy)
    }
}
