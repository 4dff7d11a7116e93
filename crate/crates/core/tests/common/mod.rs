#![allow(dead_code)]

use noma_fbc::fbc::q_inv;
use noma_fbc::{ScenarioParams, UserSpec};
use rand::Rng;

pub fn scenario(n: (u64, u64), d: (u32, u32), eps: (f64, f64), h: (f64, f64), p_max: f64) -> ScenarioParams {
    ScenarioParams {
        user1: UserSpec { bits: n.0, deadline: d.0, error_prob: eps.0, gain: h.0 },
        user2: UserSpec { bits: n.1, deadline: d.1, error_prob: eps.1, gain: h.1 },
        p_max,
        min_blocklength: 100,
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Rate in bits per channel use, written the textbook way.
pub fn rate_bits(gamma: f64, m: f64, eps: f64) -> f64 {
    let v = 1.0 - 1.0 / ((1.0 + gamma) * (1.0 + gamma));
    (1.0 + gamma).log2() - (v / m).sqrt() * q_inv(eps).unwrap() / std::f64::consts::LN_2
}

/// Plain bisection on [`rate_bits`] to float exhaustion.
pub fn oracle_gamma(m: f64, bits: u64, eps: f64) -> f64 {
    let target = bits as f64 / m;
    let mut hi = 1.0;
    while rate_bits(hi, m, eps) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rate_bits(mid, m, eps) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Minimum Case-I energy over `m₁ ∈ [m̂, D₁]`, `m₂ ∈ [m₁, D₂]`.
pub fn grid_case1(s: &ScenarioParams) -> Option<(f64, u32, u32)> {
    let (h1, h2) = (s.user1.gain, s.user2.gain);
    let g1 = table(s.user1.bits, s.user1.error_prob, s.min_blocklength, s.user1.deadline);
    let g2 = table(s.user2.bits, s.user2.error_prob, s.min_blocklength, s.user2.deadline);
    let mut best: Option<(f64, u32, u32)> = None;
    for m1 in s.min_blocklength..=s.user1.deadline {
        let a = g1[(m1 - s.min_blocklength) as usize];
        for m2 in m1..=s.user2.deadline {
            let b = g2[(m2 - s.min_blocklength) as usize];
            let p2 = b / h2;
            let p1 = a * b / h2 + a / h1;
            if p1 + p2 > s.p_max {
                continue;
            }
            let e = m1 as f64 * p1 + m2 as f64 * p2;
            if best.map_or(true, |(x, _, _)| e < x) {
                best = Some((e, m1, m2));
            }
        }
    }
    best
}

/// Minimum over both `h₁ > h₂` decoding orders: independent blocklengths
/// without cancellation, and a shared blocklength with cancellation at
/// receiver 1.
pub fn grid_case2(s: &ScenarioParams) -> Option<(f64, u32, u32)> {
    let (h1, h2) = (s.user1.gain, s.user2.gain);
    let g1 = table(s.user1.bits, s.user1.error_prob, s.min_blocklength, s.user1.deadline);
    let g2 = table(s.user2.bits, s.user2.error_prob, s.min_blocklength, s.user2.deadline);
    let mut best: Option<(f64, u32, u32)> = None;
    let mut offer = |e: f64, m1: u32, m2: u32| {
        if best.map_or(true, |(x, _, _)| e < x) {
            best = Some((e, m1, m2));
        }
    };
    for m1 in s.min_blocklength..=s.user1.deadline {
        let a = g1[(m1 - s.min_blocklength) as usize];
        for m2 in s.min_blocklength..=s.user2.deadline {
            let b = g2[(m2 - s.min_blocklength) as usize];
            let det = 1.0 - a * b;
            if det <= 0.0 {
                continue;
            }
            let p1 = (a * b / h2 + a / h1) / det;
            let p2 = (a * b / h1 + b / h2) / det;
            if p1 + p2 <= s.p_max {
                offer(m1 as f64 * p1 + m2 as f64 * p2, m1, m2);
            }
        }
        let b = g2[(m1 - s.min_blocklength) as usize];
        let p1 = a / h1;
        let p2 = a * b / h1 + b / h2;
        if p1 + p2 <= s.p_max {
            offer(m1 as f64 * (p1 + p2), m1, m1);
        }
    }
    best
}

fn table(bits: u64, eps: f64, first: u32, last: u32) -> Vec<f64> {
    (first..=last).map(|m| oracle_gamma(m as f64, bits, eps)).collect()
}

/// A random feasible pure-NOMA instance with `D₂ ≤ 800` that satisfies the
/// energy monotonicity condition.
pub fn random_noma_instance<R: Rng>(rng: &mut R) -> ScenarioParams {
    loop {
        let d2 = rng.gen_range(200..=800);
        let d1 = rng.gen_range(100..=d2);
        let n = (rng.gen_range(80..=512), rng.gen_range(80..=512));
        let eps = (log_uniform(rng, 1e-7, 1e-3), log_uniform(rng, 1e-7, 1e-3));
        let h = (log_uniform(rng, 1.0, 1e3), log_uniform(rng, 1.0, 1e3));
        let s = scenario(n, (d1, d2), eps, h, 10.0);
        if let Ok(r) = noma_fbc::noma::solve_noma(&s) {
            if r.is_feasible() {
                return s;
            }
        }
    }
}

/// Solver energy against the grid minimum, plus deadline saturation.
pub fn check_noma_against_grid(s: &ScenarioParams) -> Result<(), String> {
    use noma_fbc::noma::{solve_noma, NomaScheme};
    let a = solve_noma(s).map_err(|e| e.to_string())?.into_feasible().ok_or("solver says infeasible")?;
    let grid = if s.user1.gain <= s.user2.gain { grid_case1(s) } else { grid_case2(s) };
    let (e, _, _) = grid.ok_or("grid found no feasible point")?;
    if a.energy > e * (1.0 + 1e-6) {
        return Err(format!("solver energy {} above grid minimum {e}", a.energy));
    }
    let (d1, d2) = (s.user1.deadline, s.user2.deadline);
    let want = match a.scheme {
        NomaScheme::CaseI | NomaScheme::CaseIIFullBlock => (d1, d2),
        NomaScheme::CaseIIShortBlock => (d1, d1),
    };
    if (a.m1, a.m2) != want {
        return Err(format!("{:?} blocklengths ({}, {}) instead of {want:?}", a.scheme, a.m1, a.m2));
    }
    Ok(())
}

/// A random instance with `N₂ ≤ 64` bits and `D₂ ≤ 400` on which the hybrid
/// search is feasible.
pub fn random_hybrid_instance<R: Rng>(rng: &mut R) -> noma_fbc::HybridParams {
    loop {
        let d2 = rng.gen_range(200..=400);
        let d1 = rng.gen_range(100..=d2);
        let n = (rng.gen_range(56..=256), rng.gen_range(56..=64));
        let h = (log_uniform(rng, 0.3, 300.0), log_uniform(rng, 0.3, 300.0));
        let s = scenario(n, (d1, d2), (1e-6, 1e-6), h, 10.0);
        let p = noma_fbc::HybridParams::with_split_errors(s, 5e-7, 5e-7);
        if let Ok(r) = noma_fbc::hybrid::solve_hybrid(&p) {
            if r.is_feasible() {
                return p;
            }
        }
    }
}

pub fn exhaustive(p: &noma_fbc::HybridParams) -> noma_fbc::SolveResult<noma_fbc::HybridAllocation> {
    use noma_fbc::hybrid::{solve_hybrid_case2_exhaustive, solve_hybrid_exhaustive, HybridCase};
    match HybridCase::of(&p.scenario) {
        HybridCase::I => solve_hybrid_exhaustive(p).unwrap(),
        HybridCase::II => solve_hybrid_case2_exhaustive(p).unwrap(),
    }
}

/// Type invariants, power box and rate residuals of a split allocation.
pub fn check_hybrid_certificates(p: &noma_fbc::HybridParams, a: &noma_fbc::HybridAllocation) -> Result<(), String> {
    use noma_fbc::fbc::fbc_residual;
    use noma_fbc::hybrid::{HybridCase, HybridOrigin};
    let s = &p.scenario;
    let (h1, h2, pm) = (s.user1.gain, s.user2.gain, s.p_max);
    let fail = |what: &str| Err(format!("{what}: {a:?}"));
    if a.n21 + a.n22 != s.user2.bits {
        return fail("bit split does not add up");
    }
    if !(a.p1 >= 0.0 && a.p21 >= 0.0 && a.p22 >= 0.0 && a.p1 + a.p21 <= pm && a.p22 <= pm) {
        return fail("power box");
    }
    let e = a.m1 as f64 * a.p1 + a.m21 as f64 * a.p21 + a.m22 as f64 * a.p22;
    if (e - a.energy).abs() > 1e-12 * e {
        return fail("energy is not the sum of slot energies");
    }
    if a.origin != HybridOrigin::Split {
        return Ok(());
    }
    let (d1, d2) = (s.user1.deadline, s.user2.deadline);
    let charged22 = if a.n22 > 0 { a.m22 } else { 0 };
    let latency_ok = match a.case {
        HybridCase::I => a.m1 <= d1.min(a.m21) && a.m21 + charged22 <= d2,
        HybridCase::II => a.m21 <= a.m1 && a.m1 <= d1 && a.m1 + charged22 <= d2,
    };
    if !latency_ok {
        return fail("latency constraints");
    }
    let mhat = s.min_blocklength;
    if a.m1 < mhat || (a.n21 > 0 && a.m21 < mhat) || (a.n22 > 0 && a.m22 < mhat) {
        return fail("blocklength below minimum");
    }
    let (g1, g21) = match a.case {
        HybridCase::I => (a.p1 * h1 / (a.p21 * h1 + 1.0), a.p21 * h2),
        HybridCase::II => (a.p1 * h1, a.p21 * h2 / (a.p1 * h2 + 1.0)),
    };
    let g22 = a.p22 * h2;
    let parts = [
        (s.user1.bits, s.user1.error_prob, a.m1, g1),
        (a.n21, p.eps21, a.m21, g21),
        (a.n22, p.eps22, a.m22, g22),
    ];
    for (bits, eps, m, g) in parts {
        if bits == 0 {
            continue;
        }
        let f = s.codeword(bits, eps).unwrap();
        let r = fbc_residual(m as f64, g, &f);
        if r.abs() > 1e-7 * bits as f64 {
            return Err(format!("rate residual {r} for {bits} bits over {m} symbols: {a:?}"));
        }
    }
    Ok(())
}

/// The default experiment with the given axis, schemes and size.
pub fn experiment(
    kind: noma_fbc::sim::AxisKind,
    values: Vec<f64>,
    schemes: Vec<noma_fbc::sim::Scheme>,
    realizations: u64,
) -> noma_fbc::sim::ExperimentConfig {
    let mut c = noma_fbc::config::RawConfig::default().resolve().unwrap().experiment;
    c.axis = noma_fbc::sim::SweepAxis { kind, values };
    c.schemes = schemes;
    c.realizations = realizations;
    c
}
