//! Exact sum-rate optimum for two interfering links.

use std::time::Instant;

use crate::channel::{normalize_two_pair, ChannelMatrix, NormalizedTwoPair};
use crate::error::{PowerError, Result};
use crate::numerics::{filter_roots_in_interval, solve_quadratic_real};
use crate::rate::PowerAllocation;
use crate::report::{Algorithm, SolveReport, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionKind {
    BinaryToLink1,
    BinaryToLink2,
    Sharing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPairDecision {
    pub kind: DecisionKind,
    /// φ (link 1 stronger) or ε (link 2 stronger); `None` when the
    /// discriminant was not used.
    pub phi_or_epsilon: Option<f64>,
    pub allocation: PowerAllocation,
    /// Roots of the sharing quadratic strictly inside `(0, P_T)`, when it was solved.
    pub interior_roots: Option<usize>,
}

impl TwoPairDecision {
    pub fn sum_rate(&self, np: &NormalizedTwoPair) -> f64 {
        np.sum_rate(self.allocation.p[0], self.allocation.p[1])
    }
}

fn discriminant(np: &NormalizedTwoPair, pt: f64) -> Result<f64> {
    let NormalizedTwoPair { a, b, c, d } = *np;
    let den = a * c + b * d - a * d + pt * a * b * c;
    if den == 0.0 {
        return Err(PowerError::DegenerateChannel("a·c + b·d - a·d + P_T·a·b·c = 0"));
    }
    Ok((a - d) * (pt * b + 1.0) / den)
}

/// Discriminant deciding between full power on link 1 and sharing; needs `a > d`.
pub fn phi(np: &NormalizedTwoPair, pt: f64) -> Result<f64> {
    if np.a <= np.d {
        return Err(PowerError::WrongBranch("phi requires a > d"));
    }
    discriminant(np, pt)
}

/// Mirror of [`phi`] for `d > a`.
pub fn epsilon(np: &NormalizedTwoPair, pt: f64) -> Result<f64> {
    if np.d <= np.a {
        return Err(PowerError::WrongBranch("epsilon requires d > a"));
    }
    discriminant(&np.swapped(), pt)
}

/// `true` when the discriminant sends the whole budget to the stronger link.
pub fn is_binary(disc: f64, pt: f64) -> bool {
    disc > 0.0 || disc.abs() >= pt
}

/// Coefficients `(A, B, C)` of the stationarity quadratic in P1 on the line
/// `P1 + P2 = P_T`.
pub fn sharing_quadratic(np: &NormalizedTwoPair, pt: f64) -> (f64, f64, f64) {
    let NormalizedTwoPair { a, b, c, d } = *np;
    let m = a * d - (a * c + b * d + pt * b * c * d);
    let qa = a * d * (b - c) + c * (a * c + pt * b * c * a) - b * (b * d + pt * b * c * d);
    let qb = -2.0 * m * (1.0 + pt * b);
    let qc = (1.0 + pt * b) * ((a - d) + pt * (a * d - b * d - c * d - pt * b * c * d));
    (qa, qb, qc)
}

/// Stationary points strictly inside `(0, P_T)`.
pub fn interior_stationary_points(np: &NormalizedTwoPair, pt: f64) -> Vec<f64> {
    let (qa, qb, qc) = sharing_quadratic(np, pt);
    match solve_quadratic_real(qa, qb, qc) {
        Ok(roots) => filter_roots_in_interval(&roots, 0.0, pt)
            .roots
            .into_iter()
            .filter(|&x| x > 0.0 && x < pt)
            .collect(),
        // The zero polynomial: the objective is flat along the line.
        Err(_) => Vec::new(),
    }
}

/// The interior optimum on `P1 + P2 = P_T`, for instances in the sharing regime.
pub fn sharing_optimum(np: &NormalizedTwoPair, pt: f64) -> Result<PowerAllocation> {
    let roots = interior_stationary_points(np, pt);
    let best = roots
        .iter()
        .copied()
        .fold(None::<f64>, |best, x| match best {
            Some(y) if np.sum_rate(y, pt - y) >= np.sum_rate(x, pt - x) => Some(y),
            _ => Some(x),
        })
        .ok_or(PowerError::SharingRootMissing { budget: pt })?;
    Ok(PowerAllocation::unchecked(vec![best, pt - best], pt))
}

fn corners_and_roots(np: &NormalizedTwoPair, pt: f64) -> TwoPairDecision {
    let roots = interior_stationary_points(np, pt);
    let mut kind = DecisionKind::BinaryToLink1;
    let mut p1 = pt;
    let mut best = np.sum_rate(pt, 0.0);
    let r2 = np.sum_rate(0.0, pt);
    if r2 > best {
        kind = DecisionKind::BinaryToLink2;
        p1 = 0.0;
        best = r2;
    }
    for &x in &roots {
        let r = np.sum_rate(x, pt - x);
        if r > best {
            kind = DecisionKind::Sharing;
            p1 = x;
            best = r;
        }
    }
    TwoPairDecision {
        kind,
        phi_or_epsilon: None,
        allocation: PowerAllocation::unchecked(vec![p1, pt - p1], pt),
        interior_roots: Some(roots.len()),
    }
}

/// Decision for `a > d`.
fn solve_stronger_first(np: &NormalizedTwoPair, pt: f64) -> TwoPairDecision {
    let disc = match phi(np, pt) {
        Ok(v) => v,
        Err(_) => return corners_and_roots(np, pt),
    };
    if is_binary(disc, pt) {
        return TwoPairDecision {
            kind: DecisionKind::BinaryToLink1,
            phi_or_epsilon: Some(disc),
            allocation: PowerAllocation::unchecked(vec![pt, 0.0], pt),
            interior_roots: None,
        };
    }
    let roots = interior_stationary_points(np, pt);
    let mut decision = match sharing_optimum(np, pt) {
        Ok(allocation) => TwoPairDecision {
            kind: DecisionKind::Sharing,
            phi_or_epsilon: Some(disc),
            allocation,
            interior_roots: None,
        },
        // Numerically degenerate channel: fall back to direct comparison.
        Err(_) => TwoPairDecision {
            phi_or_epsilon: Some(disc),
            ..corners_and_roots(np, pt)
        },
    };
    decision.interior_roots = Some(roots.len());
    decision
}

/// Optimal two-link allocation from normalised gains (per-receiver noise
/// already folded in).
pub fn solve_normalized(np: &NormalizedTwoPair, pt: f64) -> Result<TwoPairDecision> {
    if !(pt > 0.0 && pt.is_finite()) {
        return Err(PowerError::Config(format!("budget must be positive, got {pt}")));
    }
    if np.a > np.d {
        Ok(solve_stronger_first(np, pt))
    } else if np.d > np.a {
        let mirrored = solve_stronger_first(&np.swapped(), pt);
        let kind = match mirrored.kind {
            DecisionKind::BinaryToLink1 => DecisionKind::BinaryToLink2,
            DecisionKind::BinaryToLink2 => DecisionKind::BinaryToLink1,
            DecisionKind::Sharing => DecisionKind::Sharing,
        };
        let p = &mirrored.allocation.p;
        Ok(TwoPairDecision {
            kind,
            allocation: PowerAllocation::unchecked(vec![p[1], p[0]], pt),
            ..mirrored
        })
    } else {
        Ok(corners_and_roots(np, pt))
    }
}

pub fn solve_two_pair(g: &ChannelMatrix, pt: f64) -> Result<TwoPairDecision> {
    solve_normalized(&normalize_two_pair(g)?, pt)
}

pub fn solve_two_pair_report(g: &ChannelMatrix, pt: f64) -> Result<SolveReport> {
    let start = Instant::now();
    let decision = solve_two_pair(g, pt)?;
    let mut report = SolveReport::new(Algorithm::Pair2, decision.allocation, g, Status::Converged);
    report.wall_time = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn np(a: f64, b: f64, c: f64, d: f64) -> NormalizedTwoPair {
        NormalizedTwoPair { a, b, c, d }
    }

    fn boundary_grid_best(np: &NormalizedTwoPair, pt: f64, steps: usize) -> (f64, f64) {
        (0..=steps)
            .map(|k| {
                let x = pt * k as f64 / steps as f64;
                (x, np.sum_rate(x, pt - x))
            })
            .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
    }

    #[test]
    fn phi_without_interference_forces_sharing() {
        let p = np(2.0, 0.0, 0.0, 1.0);
        let v = phi(&p, 10.0).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
        assert!(!is_binary(v, 10.0));
        let d = solve_normalized(&p, 10.0).unwrap();
        assert_eq!(d.kind, DecisionKind::Sharing);
        assert!((d.allocation.p[0] - 5.25).abs() < 1e-12);
        assert!((d.allocation.p[1] - 4.75).abs() < 1e-12);
    }

    #[test]
    fn phi_positive_gives_binary() {
        let p = np(2.0, 0.5, 0.5, 1.0);
        let v = phi(&p, 10.0).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-14);
        let d = solve_normalized(&p, 10.0).unwrap();
        assert_eq!(d.kind, DecisionKind::BinaryToLink1);
        assert_eq!(d.allocation.p, vec![10.0, 0.0]);
        let (_, best) = boundary_grid_best(&p, 10.0, 10_000);
        assert!(d.sum_rate(&p) >= best - 1e-12);
    }

    #[test]
    fn phi_negative_and_large_gives_binary() {
        let p = np(2.0, 0.01, 0.3, 1.0);
        let v = phi(&p, 0.5).unwrap();
        assert!(v < 0.0 && v.abs() >= 0.5, "phi = {v}");
        let d = solve_normalized(&p, 0.5).unwrap();
        assert_eq!(d.kind, DecisionKind::BinaryToLink1);
        let (x, best) = boundary_grid_best(&p, 0.5, 100_000);
        assert_eq!(x, 0.5);
        assert!(d.sum_rate(&p) >= best - 1e-12);
    }

    #[test]
    fn branch_errors() {
        assert!(matches!(phi(&np(1.0, 0.1, 0.1, 2.0), 1.0), Err(PowerError::WrongBranch(_))));
        assert!(matches!(epsilon(&np(2.0, 0.1, 0.1, 1.0), 1.0), Err(PowerError::WrongBranch(_))));
        // a·c - a·d = 0 with b = 0
        assert!(matches!(phi(&np(2.0, 0.0, 1.0, 1.0), 1.0), Err(PowerError::DegenerateChannel(_))));
    }

    #[test]
    fn epsilon_mirrors_phi() {
        assert!((epsilon(&np(1.0, 0.0, 0.0, 2.0), 10.0).unwrap() + 0.5).abs() < 1e-15);
        let p = np(1.0, 0.5, 0.5, 2.0);
        assert!(epsilon(&p, 10.0).unwrap() > 0.0);
        let d = solve_normalized(&p, 10.0).unwrap();
        assert_eq!(d.kind, DecisionKind::BinaryToLink2);
        assert_eq!(d.allocation.p, vec![0.0, 10.0]);

        for (orig, pt) in [(np(2.0, 0.0, 0.0, 1.0), 10.0), (np(2.0, 0.5, 0.5, 1.0), 10.0), (np(2.0, 0.01, 0.3, 1.0), 0.5)] {
            let a = solve_normalized(&orig, pt).unwrap();
            let b = solve_normalized(&orig.swapped(), pt).unwrap();
            assert_eq!(a.allocation.p[0], b.allocation.p[1]);
            assert_eq!(a.allocation.p[1], b.allocation.p[0]);
            assert_eq!(phi(&orig, pt).unwrap(), epsilon(&orig.swapped(), pt).unwrap());
        }
    }

    #[test]
    fn symmetric_no_interference_splits_evenly() {
        let p = np(1.5, 0.0, 0.0, 1.5);
        let alloc = sharing_optimum(&p, 4.0).unwrap();
        assert!((alloc.p[0] - 2.0).abs() < 1e-12);
        let d = solve_normalized(&p, 4.0).unwrap();
        assert_eq!(d.kind, DecisionKind::Sharing);
        assert!((d.allocation.p[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sharing_root_matches_fine_grid() {
        let p = np(2.0, 0.1, 0.1, 1.5);
        let pt = 10.0;
        assert!(!is_binary(phi(&p, pt).unwrap(), pt));
        let alloc = sharing_optimum(&p, pt).unwrap();
        let (x, _) = boundary_grid_best(&p, pt, 1_000_000);
        assert!((alloc.p[0] - x).abs() <= pt / 1e6, "{} vs {x}", alloc.p[0]);
        assert_eq!(alloc.p[0] + alloc.p[1], pt);
    }

    #[test]
    fn strong_symmetric_interference_is_binary() {
        let p = np(1.0, 10.0, 10.0, 1.0);
        let d = solve_normalized(&p, 10.0).unwrap();
        assert_eq!(d.kind, DecisionKind::BinaryToLink1);
        assert_eq!(d.sum_rate(&p), p.sum_rate(10.0, 0.0));
        let (_, best) = boundary_grid_best(&p, 10.0, 100_000);
        assert!(d.sum_rate(&p) >= best - 1e-12);
    }

    #[test]
    fn degenerate_denominator_falls_back() {
        let p = np(2.0, 0.0, 1.0, 1.0);
        let d = solve_normalized(&p, 1.0).unwrap();
        assert_eq!(d.phi_or_epsilon, None);
        let (_, best) = boundary_grid_best(&p, 1.0, 100_000);
        assert!(d.sum_rate(&p) >= best - 1e-9);
    }

    #[test]
    fn decision_from_channel_matrix() {
        let g = ChannelMatrix::new(vec![vec![4.0, 0.0], vec![0.0, 2.0]], 2.0).unwrap();
        let d = solve_two_pair(&g, 10.0).unwrap();
        assert!((d.allocation.p[0] - 5.25).abs() < 1e-12);
        let g3 = ChannelMatrix::new(vec![vec![1.0; 3]; 3], 1.0).unwrap();
        assert!(matches!(solve_two_pair(&g3, 1.0), Err(PowerError::Dimension { .. })));
    }
}
