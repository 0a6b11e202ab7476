//! Distributed power control under the high-SINR approximation: every
//! transmitter iterates a standard interference function while a sum-power
//! multiplier follows a projected subgradient.

use std::f64::consts::LN_2;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::channel::ChannelMatrix;
use crate::error::{PowerError, Result};
use crate::rate::{total_rate, PowerAllocation};
use crate::report::{Algorithm, SolveReport, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// `ζ / √m`
    InvSqrt,
    /// `ζ / m`
    Inv,
}

impl StepRule {
    pub fn step(self, zeta: f64, m: usize) -> f64 {
        let m = m.max(1) as f64;
        match self {
            StepRule::InvSqrt => zeta / m.sqrt(),
            StepRule::Inv => zeta / m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradientConfig {
    /// Step constant for the sum-power multiplier.
    pub zeta: f64,
    /// Step constant for the rate multipliers.
    pub zeta_mu: f64,
    /// Stop once `|P_T - Σ P| < delta` (watts).
    pub delta: f64,
    pub max_iters: usize,
    pub step_rule: StepRule,
    /// Cap every update at the budget.
    pub clip: bool,
}

impl SubgradientConfig {
    /// Defaults for `n` links and budget `pt`: `ζ = n/P_T²`, `δ = 1e-3·P_T`.
    pub fn for_problem(n: usize, pt: f64) -> Self {
        Self {
            zeta: n as f64 / (pt * pt),
            zeta_mu: 1.0,
            delta: 1e-3 * pt,
            max_iters: 100_000,
            step_rule: StepRule::InvSqrt,
            clip: true,
        }
    }

    pub fn step(&self, m: usize) -> f64 {
        self.step_rule.step(self.zeta, m)
    }

    pub fn step_mu(&self, m: usize) -> f64 {
        self.step_rule.step(self.zeta_mu, m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta > 0.0 && self.zeta_mu > 0.0 && self.delta > 0.0 && self.max_iters > 0) {
            return Err(PowerError::Config(format!(
                "step constants, tolerance and iteration cap must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub lambda: f64,
    pub theta: Vec<f64>,
    pub m: usize,
}

impl DualState {
    pub fn new(p: &[f64], g: &ChannelMatrix) -> Self {
        Self {
            lambda: 0.0,
            theta: interference_profile(p, g),
            m: 0,
        }
    }
}

/// `θ_k = Σ_{j≠k} P_j g_jk`, the interference each receiver broadcasts.
pub fn interference_profile(p: &[f64], g: &ChannelMatrix) -> Vec<f64> {
    (0..g.n())
        .map(|k| {
            p.iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(j, &pj)| pj * g.gain(j, k))
                .sum()
        })
        .collect()
}

/// Unclipped update of transmitter `i`:
/// `1 / (λ ln2 + Σ_{k≠i} g_ik / (θ_k + σ_k²))`.
pub fn power_update(i: usize, state: &DualState, g: &ChannelMatrix) -> f64 {
    let mut den = state.lambda * LN_2;
    for (k, &th) in state.theta.iter().enumerate() {
        if k != i {
            den += g.gain(i, k) / (th + g.noise(k));
        }
    }
    1.0 / den
}

/// The whole update map `F(P)` for a fixed multiplier.
pub fn interference_function(p: &[f64], lambda: f64, g: &ChannelMatrix) -> Vec<f64> {
    let state = DualState {
        lambda,
        theta: interference_profile(p, g),
        m: 0,
    };
    (0..g.n()).map(|i| power_update(i, &state, g)).collect()
}

/// Projected subgradient step on the sum-power multiplier.
pub fn lambda_update(lambda: f64, total_power: f64, pt: f64, m: usize, cfg: &SubgradientConfig) -> f64 {
    (lambda - cfg.step(m) * (pt - total_power)).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub round: usize,
    pub lambda: f64,
    pub total_power: f64,
    pub delta_p: f64,
    pub sum_rate: f64,
}

pub fn write_trace<W: Write>(rows: &[TraceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn check_problem(g: &ChannelMatrix, pt: f64, cfg: &SubgradientConfig) -> Result<()> {
    if g.n() < 2 {
        return Err(PowerError::Config("distributed solvers need at least 2 links".into()));
    }
    if !(pt > 0.0 && pt.is_finite()) {
        return Err(PowerError::Config(format!("budget must be positive, got {pt}")));
    }
    cfg.validate()
}

pub fn run_distributed(g: &ChannelMatrix, pt: f64, cfg: &SubgradientConfig) -> Result<SolveReport> {
    run_distributed_traced(g, pt, cfg, None)
}

/// Synchronous rounds: broadcast θ, update every power from the previous
/// round's θ, then move λ. Signaling per transmitter is `(N-1) + 2·M₁`.
pub fn run_distributed_traced(
    g: &ChannelMatrix,
    pt: f64,
    cfg: &SubgradientConfig,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<SolveReport> {
    check_problem(g, pt, cfg)?;
    let start = Instant::now();
    let n = g.n();
    let mut p = vec![pt / n as f64; n];
    let mut state = DualState::new(&p, g);
    let mut status = Status::Capped;

    for m in 1..=cfg.max_iters {
        state.m = m;
        let mut next: Vec<f64> = (0..n).map(|i| power_update(i, &state, g)).collect();
        if cfg.clip {
            for x in &mut next {
                *x = x.min(pt);
            }
        }
        p = next;
        let total: f64 = p.iter().sum();
        state.lambda = lambda_update(state.lambda, total, pt, m, cfg);
        state.theta = interference_profile(&p, g);
        let delta_p = (pt - total).abs();
        if let Some(t) = trace.as_deref_mut() {
            t.push(TraceRow {
                round: m,
                lambda: state.lambda,
                total_power: total,
                delta_p,
                sum_rate: total_rate(&p, g),
            });
        }
        if delta_p < cfg.delta {
            status = Status::Converged;
            break;
        }
    }

    let mut report = SolveReport::new(Algorithm::Dist, PowerAllocation::unchecked(p, pt), g, status);
    report.iterations = state.m;
    report.signaling = Some(signaling_overhead(n, state.m, 2));
    report.wall_time = start.elapsed();
    Ok(report)
}

/// `(N-1) + per_round·M`.
pub fn signaling_overhead(n: usize, rounds: usize, per_round: usize) -> usize {
    (n - 1) + per_round * rounds
}

/// High-SINR sum rate in log-power coordinates `x_i = ln P_i`.
pub fn log_objective(x: &[f64], g: &ChannelMatrix) -> f64 {
    let p: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    (0..g.n())
        .map(|i| {
            let den = g.noise(i)
                + (0..g.n())
                    .filter(|&j| j != i)
                    .map(|j| p[j] * g.gain(j, i))
                    .sum::<f64>();
            (g.direct(i) * p[i] / den).log2()
        })
        .sum()
}

/// Analytic Hessian of [`log_objective`].
pub fn log_objective_hessian(x: &[f64], g: &ChannelMatrix) -> Vec<Vec<f64>> {
    let n = g.n();
    let p: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let mut h = vec![vec![0.0; n]; n];
    for i in 0..n {
        let w: Vec<f64> = (0..n)
            .map(|j| if j == i { 0.0 } else { p[j] * g.gain(j, i) })
            .collect();
        let s: f64 = g.noise(i) + w.iter().sum::<f64>();
        for j in 0..n {
            h[j][j] -= w[j] / s / LN_2;
            for k in 0..n {
                h[j][k] += w[j] * w[k] / (s * s) / LN_2;
            }
        }
    }
    h
}
