//! Distributed power control with per-link minimum rates: the power update
//! is weighted by one multiplier per rate constraint.

use std::f64::consts::LN_2;
use std::io::Write;
use std::time::Instant;

use crate::channel::ChannelMatrix;
use crate::distributed::{check_problem, interference_profile, signaling_overhead, SubgradientConfig};
use crate::error::{PowerError, Result};
use crate::qos_pair2::QosTargets;
use crate::rate::{rates_unchecked, PowerAllocation};
use crate::report::{Algorithm, SolveReport, Status};

/// Direction of the rate-multiplier step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultiplierSign {
    /// `μ ← max(0, μ + v·(R_min - R))`: a violated target raises its multiplier.
    #[default]
    Corrected,
    /// `μ ← max(0, μ - v·(R_min - R))`.
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QosDualState {
    pub lambda: f64,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    /// `S_i`: link `i` currently exceeds its target.
    pub flags: Vec<bool>,
    /// `R_i - R_i^min`.
    pub delta_r: Vec<f64>,
    pub delta_p: f64,
    pub m: usize,
}

impl QosDualState {
    pub fn new(p: &[f64], g: &ChannelMatrix, pt: f64) -> Self {
        let n = g.n();
        Self {
            lambda: 0.0,
            mu: vec![0.0; n],
            theta: interference_profile(p, g),
            flags: vec![false; n],
            delta_r: vec![0.0; n],
            delta_p: (pt - p.iter().sum::<f64>()).abs(),
            m: 0,
        }
    }
}

/// Unclipped update `(1+μ_i) / (λ ln2 + Σ_{k≠i} (1+μ_k) g_ik / (θ_k + σ_k²))`.
pub fn power_update_qos(i: usize, state: &QosDualState, g: &ChannelMatrix) -> f64 {
    let mut den = state.lambda * LN_2;
    for (k, &th) in state.theta.iter().enumerate() {
        if k != i {
            den += (1.0 + state.mu[k]) * g.gain(i, k) / (th + g.noise(k));
        }
    }
    (1.0 + state.mu[i]) / den
}

/// Rate and power multiplier steps for round `state.m`. The λ step is
/// scaled by `1 + mean(μ)`, which is 1 when no target binds.
pub fn multiplier_updates(
    state: &mut QosDualState,
    total_power: f64,
    rates: &[f64],
    q: &QosTargets,
    pt: f64,
    cfg: &SubgradientConfig,
    sign: MultiplierSign,
) {
    let weight = 1.0 + state.mu.iter().sum::<f64>() / state.mu.len().max(1) as f64;
    let v = cfg.step_mu(state.m);
    for ((mu, &r), &target) in state.mu.iter_mut().zip(rates).zip(&q.r_min) {
        let deficit = target - r;
        let step = match sign {
            MultiplierSign::Corrected => v * deficit,
            MultiplierSign::AsPrinted => -v * deficit,
        };
        *mu = (*mu + step).max(0.0);
    }
    state.lambda = (state.lambda - weight * cfg.step(state.m) * (pt - total_power)).max(0.0);
}

#[derive(Debug, Clone, PartialEq)]
pub struct QosTraceRow {
    pub round: usize,
    pub lambda: f64,
    pub mu: Vec<f64>,
    pub delta_p: f64,
    pub min_delta_r: f64,
    pub sum_rate: f64,
}

pub fn write_qos_trace<W: Write>(rows: &[QosTraceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let n = rows.first().map_or(0, |r| r.mu.len());
    let mut header = vec!["round".to_string(), "lambda".to_string()];
    header.extend((1..=n).map(|i| format!("mu{i}")));
    header.extend(["delta_p", "min_delta_r", "sum_rate"].map(String::from));
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.round.to_string(), row.lambda.to_string()];
        rec.extend(row.mu.iter().map(f64::to_string));
        rec.extend([row.delta_p, row.min_delta_r, row.sum_rate].map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_qos_distributed(g: &ChannelMatrix, pt: f64, q: &QosTargets, cfg: &SubgradientConfig) -> Result<SolveReport> {
    run_qos_distributed_traced(g, pt, q, cfg, MultiplierSign::Corrected, None)
}

/// Synchronous rounds of power, rate and multiplier updates. Stops once the
/// power budget is met to within δ: converged when every link beats its
/// target, infeasible otherwise. Signaling per transmitter is `(N-1) + 3·M₂`.
pub fn run_qos_distributed_traced(
    g: &ChannelMatrix,
    pt: f64,
    q: &QosTargets,
    cfg: &SubgradientConfig,
    sign: MultiplierSign,
    mut trace: Option<&mut Vec<QosTraceRow>>,
) -> Result<SolveReport> {
    check_problem(g, pt, cfg)?;
    if q.len() != g.n() {
        return Err(PowerError::Dimension {
            expected: g.n(),
            got: q.len(),
        });
    }
    let start = Instant::now();
    let n = g.n();
    let mut p = vec![pt / n as f64; n];
    let mut state = QosDualState::new(&p, g, pt);
    let mut status = Status::Capped;

    for m in 1..=cfg.max_iters {
        state.m = m;
        let mut next: Vec<f64> = (0..n).map(|i| power_update_qos(i, &state, g)).collect();
        if cfg.clip {
            for x in &mut next {
                *x = x.min(pt);
            }
        }
        p = next;
        let total: f64 = p.iter().sum();
        let rates = rates_unchecked(&p, g);
        for i in 0..n {
            state.delta_r[i] = rates.r[i] - q.r_min[i];
            state.flags[i] = state.delta_r[i] > 0.0;
        }
        multiplier_updates(&mut state, total, &rates.r, q, pt, cfg, sign);
        state.theta = interference_profile(&p, g);
        state.delta_p = (pt - total).abs();
        if let Some(t) = trace.as_deref_mut() {
            t.push(QosTraceRow {
                round: m,
                lambda: state.lambda,
                mu: state.mu.clone(),
                delta_p: state.delta_p,
                min_delta_r: state.delta_r.iter().copied().fold(f64::INFINITY, f64::min),
                sum_rate: rates.sum,
            });
        }
        if state.delta_p < cfg.delta {
            status = if state.flags.iter().all(|&s| s) {
                Status::Converged
            } else {
                Status::Infeasible
            };
            break;
        }
    }

    let mut report = SolveReport::new(Algorithm::QosDist, PowerAllocation::unchecked(p, pt), g, status);
    report.iterations = state.m;
    report.signaling = Some(signaling_overhead(n, state.m, 3));
    report.wall_time = start.elapsed();
    Ok(report)
}
