//! Three-link power control: sweep P1 on a grid and split the remainder
//! between links 2 and 3 from the roots of a quartic.

use std::time::Instant;

use crate::channel::{ChannelMatrix, ThreePairConstants};
use crate::error::{PowerError, Result};
use crate::numerics::{filter_roots_in_interval, solve_quartic_real};
use crate::rate::{total_rate, PowerAllocation};
use crate::report::{Algorithm, SolveReport, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreePairSweepConfig {
    /// Sweep step in watts.
    pub nu: f64,
    /// Also sweep links 2 and 3 in the outer role and keep the best.
    pub sweep_all_roles: bool,
}

impl ThreePairSweepConfig {
    pub fn new(nu: f64) -> Self {
        Self {
            nu,
            sweep_all_roles: false,
        }
    }

    /// `ν = P_T / 200`.
    pub fn for_budget(pt: f64) -> Self {
        Self::new(pt / 200.0)
    }

    /// Number of whole steps, `⌊P_T/ν⌋`.
    pub fn steps(&self, pt: f64) -> usize {
        (pt / self.nu + 1e-9).floor() as usize
    }

    /// Sweep values of P1, ending exactly at `pt`.
    pub fn points(&self, pt: f64) -> Vec<f64> {
        let m = self.steps(pt);
        let mut pts: Vec<f64> = (0..=m).map(|k| (k as f64 * self.nu).min(pt)).collect();
        let last = *pts.last().unwrap_or(&0.0);
        if pt - last > 1e-9 * pt {
            pts.push(pt);
        } else if let Some(x) = pts.last_mut() {
            *x = pt;
        }
        pts
    }

    fn validate(&self, pt: f64) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(PowerError::Config(format!("sweep step must be positive, got {}", self.nu)));
        }
        if self.steps(pt) < 1 {
            return Err(PowerError::Config(format!(
                "sweep step {} exceeds the budget {pt}",
                self.nu
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoefficients {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub d1: f64,
    pub e1: f64,
}

impl QuarticCoefficients {
    pub fn as_array(&self) -> [f64; 5] {
        [self.a1, self.b1, self.c1, self.d1, self.e1]
    }
}

/// Normalised constants of the (P2, P3) subproblem for a fixed P1.
pub fn three_pair_constants(g: &ChannelMatrix, p1: f64, pt: f64) -> Result<ThreePairConstants> {
    g.ensure_links(3)?;
    if !(p1 >= 0.0 && p1 <= pt) {
        return Err(PowerError::Config(format!("P1 = {p1} outside [0, {pt}]")));
    }
    Ok(constants_unchecked(g, p1, pt))
}

fn constants_unchecked(g: &ChannelMatrix, p1: f64, pt: f64) -> ThreePairConstants {
    let (n1, n2, n3) = (g.noise(0), g.noise(1), g.noise(2));
    let at2 = g.gain(0, 1) * p1 + n2;
    let at3 = g.gain(0, 2) * p1 + n3;
    ThreePairConstants {
        a1: g.gain(1, 1) / at2,
        b1: g.gain(2, 1) / at2,
        c1: g.gain(1, 2) / at3,
        d1: g.gain(2, 2) / at3,
        e1: g.gain(0, 0) * p1 / n1,
        f1: g.gain(1, 0) / n1,
        h1: g.gain(2, 0) / n1,
        remaining: (pt - p1).max(0.0),
    }
}

/// Numerator of the derivative of the subproblem objective in P3, with
/// `P2 = P̄ - P3`.
pub fn quartic_coefficients(k: &ThreePairConstants) -> QuarticCoefficients {
    let p = k.primed();
    let (a, b, c, d, e, f, h) = (p.a, p.b, p.c, p.d, p.e, p.f, p.h);
    let (b1, c1) = (k.b1, k.c1);
    let h2 = h * h;
    let c2 = c * c;

    let qa = a * b1 * c1 * d * h2 - b * c1 * d * h2 + b1 * b * c1 * c * h2 + b1 * b * c * d * h2
        + b1 * b * c1 * d * e * h
        - b1 * b * c1 * d * f * h;
    let qb = 2.0
        * (b * c * d * h2 - b * c1 * d * f * h + a * b1 * c1 * c * h2 + a * b1 * c1 * d * e * h
            + b1 * b * c1 * c * e * h
            + b1 * b * c * d * f * h);
    let qc = b * c2 * h2 + a * c1 * c * h2 + a * c * d * h2 - a * b1 * c2 * h2 - b * c1 * d * e * f
        + a * c1 * d * e * h
        + b * c1 * c * e * h
        - a * c1 * d * f * h
        - b * c1 * c * f * h
        + b * c * d * e * h
        + 3.0 * b * c * d * f * h
        - b1 * b * c2 * e * h
        + b1 * b * c2 * f * h
        + a * b1 * c1 * d * e * f
        + b1 * b * c1 * c * e * f
        + 3.0 * a * b1 * c1 * c * e * h
        + b1 * b * c * d * e * f
        + a * b1 * c1 * c * f * h
        - a * b1 * c * d * e * h
        + a * b1 * c * d * f * h;
    let qd = 2.0
        * (b * c2 * f * h + a * c1 * c * e * h + b * c * d * e * f + a * c * d * f * h
            - a * b1 * c2 * e * h
            + a * b1 * c1 * c * e * f);
    let qe = b * c2 * e * f - a * c2 * e * h + a * c2 * f * h + a * c1 * c * e * f + a * c * d * e * f
        - a * b1 * c2 * e * f;

    QuarticCoefficients {
        a1: qa,
        b1: qb,
        c1: qc,
        d1: qd,
        e1: qe,
    }
}

/// Best `(P2, P3)` with `P2 + P3 = P̄` among the endpoints and the
/// stationary points.
pub fn split_from_constants(k: &ThreePairConstants) -> (f64, f64) {
    let pbar = k.remaining;
    if pbar <= 0.0 {
        return (0.0, 0.0);
    }
    let mut best = (pbar, 0.0);
    let mut best_val = k.objective(pbar, 0.0);
    let other = k.objective(0.0, pbar);
    if other > best_val {
        best = (0.0, pbar);
        best_val = other;
    }
    let q = quartic_coefficients(k);
    if let Ok(roots) = solve_quartic_real(q.a1, q.b1, q.c1, q.d1, q.e1) {
        for p3 in filter_roots_in_interval(&roots, 0.0, pbar).roots {
            let p2 = pbar - p3;
            let v = k.objective(p2, p3);
            if v > best_val {
                best = (p2, p3);
                best_val = v;
            }
        }
    }
    best
}

pub fn inner_split(g: &ChannelMatrix, p1: f64, pt: f64) -> Result<(f64, f64)> {
    Ok(split_from_constants(&three_pair_constants(g, p1, pt)?))
}

struct SweepOutcome {
    p: [f64; 3],
    rate: f64,
    index: usize,
}

fn sweep(g: &ChannelMatrix, pt: f64, points: &[f64]) -> SweepOutcome {
    let mut best = SweepOutcome {
        p: [0.0; 3],
        rate: f64::NEG_INFINITY,
        index: 0,
    };
    for (idx, &p1) in points.iter().enumerate() {
        let k = constants_unchecked(g, p1, pt);
        let (p2, p3) = split_from_constants(&k);
        let p = [p1, p2, p3];
        let r = total_rate(&p, g);
        if r > best.rate {
            best = SweepOutcome { p, rate: r, index: idx };
        }
    }
    best
}

fn permuted(g: &ChannelMatrix, order: &[usize; 3]) -> ChannelMatrix {
    g.subchannel(order, &[0.0; 3])
}

pub fn solve_three_pair(g: &ChannelMatrix, pt: f64, cfg: &ThreePairSweepConfig) -> Result<SolveReport> {
    let start = Instant::now();
    g.ensure_links(3)?;
    if !(pt > 0.0 && pt.is_finite()) {
        return Err(PowerError::Config(format!("budget must be positive, got {pt}")));
    }
    cfg.validate(pt)?;
    let points = cfg.points(pt);

    let mut best = sweep(g, pt, &points);
    if cfg.sweep_all_roles {
        for order in [[1, 0, 2], [2, 1, 0]] {
            let out = sweep(&permuted(g, &order), pt, &points);
            if out.rate > best.rate {
                let mut p = [0.0; 3];
                for (slot, &link) in order.iter().enumerate() {
                    p[link] = out.p[slot];
                }
                best = SweepOutcome { p, ..out };
            }
        }
    }

    let allocation = PowerAllocation::unchecked(best.p.to_vec(), pt);
    let mut report = SolveReport::new(Algorithm::Pair3, allocation, g, Status::Converged);
    report.iterations = points.len();
    report.sweep_index = Some(best.index);
    report.wall_time = start.elapsed();
    Ok(report)
}
