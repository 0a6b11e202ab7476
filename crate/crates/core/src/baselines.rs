//! Exhaustive grid search and the simple reference allocations.

use std::time::Instant;

use crate::channel::ChannelMatrix;
use crate::error::{PowerError, Result};
use crate::qos_pair2::QosTargets;
use crate::rate::{rates_unchecked, total_rate, PowerAllocation};
use crate::report::{Algorithm, SolveReport, Status};

pub const ORACLE_MAX_LINKS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleDomain {
    /// Every grid point with `Σ P ≤ P_T`.
    #[default]
    Simplex,
    /// Only grid points with `Σ P = P_T`.
    Boundary,
}

/// Default steps per axis: 1000 for two links, 200 otherwise.
pub fn default_resolution(n: usize) -> usize {
    if n <= 2 {
        1000
    } else {
        200
    }
}

/// Visits every vector of `n` non-negative integers summing to at most
/// `total` (or exactly `total` when `exact`).
fn for_each_composition(n: usize, total: usize, exact: bool, f: &mut dyn FnMut(&[usize])) {
    fn rec(k: &mut [usize], pos: usize, left: usize, exact: bool, f: &mut dyn FnMut(&[usize])) {
        if pos + 1 == k.len() {
            let lo = if exact { left } else { 0 };
            for v in lo..=left {
                k[pos] = v;
                f(k);
            }
            return;
        }
        for v in 0..=left {
            k[pos] = v;
            rec(k, pos + 1, left - v, exact, f);
        }
    }
    let mut k = vec![0; n];
    rec(&mut k, 0, total, exact, f);
}

pub fn grid_oracle(g: &ChannelMatrix, pt: f64, resolution: usize, qos: Option<&QosTargets>) -> Result<SolveReport> {
    grid_oracle_on(g, pt, resolution, qos, OracleDomain::Simplex)
}

/// Best grid point with step `P_T / resolution` per axis. With targets,
/// points that miss any of them are skipped. Ties keep the first point in
/// lexicographic order of the grid indices.
pub fn grid_oracle_on(
    g: &ChannelMatrix,
    pt: f64,
    resolution: usize,
    qos: Option<&QosTargets>,
    domain: OracleDomain,
) -> Result<SolveReport> {
    let start = Instant::now();
    let n = g.n();
    if n > ORACLE_MAX_LINKS {
        return Err(PowerError::OracleTooLarge {
            max: ORACLE_MAX_LINKS,
            got: n,
        });
    }
    if resolution == 0 {
        return Err(PowerError::Config("oracle resolution must be positive".into()));
    }
    if !(pt > 0.0 && pt.is_finite()) {
        return Err(PowerError::Config(format!("budget must be positive, got {pt}")));
    }
    if let Some(q) = qos {
        if q.len() != n {
            return Err(PowerError::Dimension {
                expected: n,
                got: q.len(),
            });
        }
    }
    let step = pt / resolution as f64;
    let mut p = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut visited = 0usize;
    for_each_composition(n, resolution, domain == OracleDomain::Boundary, &mut |k| {
        visited += 1;
        for (x, &ki) in p.iter_mut().zip(k) {
            *x = ki as f64 * step;
        }
        let value = match qos {
            None => total_rate(&p, g),
            Some(q) => {
                let rates = rates_unchecked(&p, g);
                if !q.satisfied_by(&rates.r) {
                    return;
                }
                rates.sum
            }
        };
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, p.clone()));
        }
    });

    let mut report = match best {
        Some((_, p)) => SolveReport::new(Algorithm::Oracle, PowerAllocation::unchecked(p, pt), g, Status::Converged),
        None => SolveReport::silent(Algorithm::Oracle, g, pt, Status::Infeasible)
            .with_note("no grid point meets every target"),
    };
    report.iterations = visited;
    report.wall_time = start.elapsed();
    Ok(report)
}

/// Water-filling on the inverse direct gains, interference ignored:
/// `P_i = max(0, w - σ_i²/g_ii)` with `Σ P_i = P_T`.
pub fn water_filling(g: &ChannelMatrix, pt: f64) -> PowerAllocation {
    let n = g.n();
    let floors: Vec<f64> = (0..n)
        .map(|i| {
            let d = g.direct(i);
            if d > 0.0 {
                g.noise(i) / d
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| floors[i].total_cmp(&floors[j]).then(i.cmp(&j)));

    let mut level = 0.0;
    let mut acc = 0.0;
    for (k, &i) in order.iter().enumerate() {
        if !floors[i].is_finite() {
            break;
        }
        acc += floors[i];
        let w = (pt + acc) / (k + 1) as f64;
        if k + 1 == n || w <= floors[order[k + 1]] {
            level = w;
            break;
        }
    }
    let p = floors.iter().map(|&f| (level - f).max(0.0)).collect();
    PowerAllocation::unchecked(p, pt)
}

/// Full budget to the strongest direct gain, ties to the lowest index.
pub fn pure_binary(g: &ChannelMatrix, pt: f64) -> PowerAllocation {
    let best = (0..g.n()).fold(0, |b, i| if g.direct(i) > g.direct(b) { i } else { b });
    let mut p = vec![0.0; g.n()];
    p[best] = pt;
    PowerAllocation::unchecked(p, pt)
}

pub fn equal_power(g: &ChannelMatrix, pt: f64) -> PowerAllocation {
    PowerAllocation::unchecked(vec![pt / g.n() as f64; g.n()], pt)
}

pub fn baseline_report(algorithm: Algorithm, g: &ChannelMatrix, pt: f64) -> Result<SolveReport> {
    let start = Instant::now();
    let alloc = match algorithm {
        Algorithm::WaterFilling => water_filling(g, pt),
        Algorithm::Binary => pure_binary(g, pt),
        Algorithm::Equal => equal_power(g, pt),
        other => return Err(PowerError::Config(format!("{other} is not a baseline"))),
    };
    let mut r = SolveReport::new(algorithm, alloc, g, Status::Converged);
    r.wall_time = start.elapsed();
    Ok(r)
}
