//! Two links with minimum-rate targets: reserve enough power for each
//! target under the worst interference, then share what is left.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::channel::{normalize_two_pair, ChannelMatrix, NormalizedTwoPair};
use crate::error::{PowerError, Result};
use crate::numerics::{filter_roots_in_interval, solve_quadratic_real};
use crate::rate::PowerAllocation;
use crate::report::{Algorithm, SolveReport, Status};

/// Minimum spectral efficiency per link, in bits/s/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosTargets {
    pub r_min: Vec<f64>,
}

impl QosTargets {
    pub fn new(r_min: Vec<f64>) -> Result<Self> {
        if let Some(r) = r_min.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(PowerError::Config(format!("rate target {r} must be non-negative")));
        }
        Ok(Self { r_min })
    }

    pub fn zeros(n: usize) -> Self {
        Self { r_min: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.r_min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_min.is_empty()
    }

    /// SINR targets `β_i = 2^{R_i} - 1`.
    pub fn beta(&self) -> Vec<f64> {
        self.r_min.iter().map(|r| r.exp2() - 1.0).collect()
    }

    pub fn satisfied_by(&self, rates: &[f64]) -> bool {
        rates.iter().zip(&self.r_min).all(|(r, t)| r >= t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityResult {
    pub p_min: (f64, f64),
    pub p_s_min: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCaseReservation {
    pub p_worst: (f64, f64),
    /// Budget left after both reservations.
    pub p_tilde: f64,
}

fn betas(q: &QosTargets) -> Result<(f64, f64)> {
    if q.len() != 2 {
        return Err(PowerError::Dimension {
            expected: 2,
            got: q.len(),
        });
    }
    let b = q.beta();
    Ok((b[0], b[1]))
}

/// Smallest powers meeting both targets with equality.
pub fn min_powers(np: &NormalizedTwoPair, q: &QosTargets, pt: f64) -> Result<FeasibilityResult> {
    let (b1, b2) = betas(q)?;
    let NormalizedTwoPair { a, b, c, d } = *np;
    let det = a * d - b * c * b1 * b2;
    if det <= 0.0 {
        return Err(PowerError::StructurallyInfeasible(det));
    }
    let p1 = b1 * (d + b * b2) / det;
    let p2 = b2 * (a + c * b1) / det;
    let p_s_min = p1 + p2;
    Ok(FeasibilityResult {
        p_min: (p1, p2),
        p_s_min,
        feasible: p_s_min <= pt,
    })
}

/// Powers meeting each target even when the other link takes the rest of the budget.
pub fn worst_case_powers(np: &NormalizedTwoPair, q: &QosTargets, pt: f64) -> Result<WorstCaseReservation> {
    let (b1, b2) = betas(q)?;
    let NormalizedTwoPair { a, b, c, d } = *np;
    let w1 = b1 * (1.0 + b * pt) / (a + b1 * b);
    let w2 = b2 * (1.0 + c * pt) / (d + b2 * c);
    Ok(WorstCaseReservation {
        p_worst: (w1, w2),
        p_tilde: pt - w1 - w2,
    })
}

/// Sum rate when link 1 gets `w1 + x` and link 2 gets `w2 + P̃ - x`.
fn reserved_sum_rate(np: &NormalizedTwoPair, res: &WorstCaseReservation, x: f64) -> f64 {
    let (w1, w2) = res.p_worst;
    np.sum_rate(w1 + x, w2 + res.p_tilde - x)
}

/// Coefficients `(A, B, C)` of the stationarity quadratic in the extra power of link 1.
pub fn qos_quadratic(np: &NormalizedTwoPair, res: &WorstCaseReservation) -> (f64, f64, f64) {
    let NormalizedTwoPair { a, b, c, d } = *np;
    let (w1, w2) = res.p_worst;
    let pt = res.p_tilde;
    let a2 = 1.0 + a * w1 + b * w2 + b * pt;
    let b2 = a - b;
    let c2 = 1.0 + b * w2 + b * pt;
    let d2 = 1.0 + c * w1 + d * w2 + d * pt;
    let e2 = c - d;
    let f2 = 1.0 + c * w1;
    (
        a2 * b * c * e2 + b2 * c * c2 * e2 + b2 * b * c * d2 - b2 * b * e2 * f2,
        2.0 * a2 * b * c * d2 + 2.0 * b2 * c2 * e2 * f2,
        a2 * c2 * e2 * f2 + a2 * b * d2 * f2 + b2 * c2 * d2 * f2 - a2 * c * c2 * d2,
    )
}

/// Best split `(P̃1, P̃2)` of the unreserved power. Ties prefer a stationary
/// point, then `(P̃, 0)`.
pub fn qos_sharing_optimum(np: &NormalizedTwoPair, res: &WorstCaseReservation) -> (f64, f64) {
    let pt = res.p_tilde;
    if pt <= 0.0 {
        return (0.0, 0.0);
    }
    let (qa, qb, qc) = qos_quadratic(np, res);
    let mut candidates = Vec::with_capacity(4);
    if let Ok(roots) = solve_quadratic_real(qa, qb, qc) {
        candidates.extend(filter_roots_in_interval(&roots, 0.0, pt).roots);
    }
    candidates.push(pt);
    candidates.push(0.0);
    let mut best = candidates[0];
    let mut best_val = reserved_sum_rate(np, res, best);
    for &x in &candidates[1..] {
        let v = reserved_sum_rate(np, res, x);
        if v > best_val {
            best = x;
            best_val = v;
        }
    }
    (best, pt - best)
}

pub fn solve_two_pair_qos(g: &ChannelMatrix, pt: f64, q: &QosTargets) -> Result<SolveReport> {
    let start = Instant::now();
    if !(pt > 0.0 && pt.is_finite()) {
        return Err(PowerError::Config(format!("budget must be positive, got {pt}")));
    }
    let np = normalize_two_pair(g)?;
    let finish = |mut r: SolveReport| {
        r.wall_time = start.elapsed();
        r
    };
    let feas = match min_powers(&np, q, pt) {
        Ok(f) => f,
        Err(PowerError::StructurallyInfeasible(det)) => {
            return Ok(finish(
                SolveReport::silent(Algorithm::QosPair2, g, pt, Status::Infeasible)
                    .with_note(format!("targets unreachable at any power (determinant {det:e})")),
            ))
        }
        Err(e) => return Err(e),
    };
    if !feas.feasible {
        return Ok(finish(
            SolveReport::silent(Algorithm::QosPair2, g, pt, Status::Infeasible)
                .with_note(format!("minimum sum power {:e} W exceeds the budget", feas.p_s_min)),
        ));
    }
    let res = worst_case_powers(&np, q, pt)?;
    if res.p_tilde <= 0.0 {
        return Ok(finish(
            SolveReport::silent(Algorithm::QosPair2, g, pt, Status::AlgorithmFailed)
                .with_note("worst-case reservations exhaust the budget"),
        ));
    }
    let (x1, x2) = qos_sharing_optimum(&np, &res);
    let (w1, w2) = res.p_worst;
    let allocation = PowerAllocation::unchecked(vec![w1 + x1, w2 + x2], pt);
    Ok(finish(SolveReport::new(Algorithm::QosPair2, allocation, g, Status::Converged)))
}
