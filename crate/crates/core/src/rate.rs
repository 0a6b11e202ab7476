//! SINR and Shannon rates of an allocation.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::error::{PowerError, Result};

/// Relative slack allowed on the sum-power budget.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// Transmit powers in watts together with the budget they were drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
    pub budget: f64,
}

impl PowerAllocation {
    /// Validates `p` against the budget: non-negative entries, each at most
    /// `budget`, total within `BUDGET_TOLERANCE` of it.
    pub fn new(p: Vec<f64>, budget: f64) -> Result<Self> {
        let alloc = Self { p, budget };
        alloc.check()?;
        Ok(alloc)
    }

    pub fn unchecked(p: Vec<f64>, budget: f64) -> Self {
        Self { p, budget }
    }

    pub fn check(&self) -> Result<()> {
        let slack = BUDGET_TOLERANCE * self.budget;
        for (i, &x) in self.p.iter().enumerate() {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(PowerError::Config(format!("power of link {i} is {x}")));
            }
            if x > self.budget + slack {
                return Err(PowerError::Config(format!(
                    "power of link {i} ({x}) exceeds the budget {}",
                    self.budget
                )));
            }
        }
        let total = self.total();
        if total > self.budget + slack {
            return Err(PowerError::Config(format!(
                "sum power {total} exceeds the budget {}",
                self.budget
            )));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// Per-link spectral efficiencies (bits/s/Hz) and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateVector {
    pub r: Vec<f64>,
    pub sum: f64,
}

fn check_dims(p: &[f64], g: &ChannelMatrix) -> Result<()> {
    if p.len() != g.n() {
        return Err(PowerError::Dimension {
            expected: g.n(),
            got: p.len(),
        });
    }
    Ok(())
}

/// Interference plus noise at receiver `i`.
#[inline]
pub fn interference_plus_noise(i: usize, p: &[f64], g: &ChannelMatrix) -> f64 {
    let mut acc = g.noise(i);
    for (j, &pj) in p.iter().enumerate() {
        if j != i {
            acc += pj * g.gain(j, i);
        }
    }
    acc
}

#[inline]
fn sinr_unchecked(i: usize, p: &[f64], g: &ChannelMatrix) -> f64 {
    g.direct(i) * p[i] / interference_plus_noise(i, p, g)
}

pub fn sinr(i: usize, p: &[f64], g: &ChannelMatrix) -> Result<f64> {
    check_dims(p, g)?;
    if i >= g.n() {
        return Err(PowerError::IndexOutOfRange { index: i, n: g.n() });
    }
    Ok(sinr_unchecked(i, p, g))
}

pub fn sum_rate(p: &[f64], g: &ChannelMatrix) -> Result<RateVector> {
    check_dims(p, g)?;
    Ok(rates_unchecked(p, g))
}

pub(crate) fn rates_unchecked(p: &[f64], g: &ChannelMatrix) -> RateVector {
    let r: Vec<f64> = (0..g.n()).map(|i| (1.0 + sinr_unchecked(i, p, g)).log2()).collect();
    let sum = r.iter().sum();
    RateVector { r, sum }
}

/// Sum rate without the per-link breakdown; the hot path of the sweeps.
pub fn total_rate(p: &[f64], g: &ChannelMatrix) -> f64 {
    debug_assert_eq!(p.len(), g.n());
    (0..g.n()).map(|i| (1.0 + sinr_unchecked(i, p, g)).log2()).sum()
}

/// `Σ log2(sinr_i)`, the high-SINR surrogate. Undefined if any power is zero.
pub fn high_sinr_sum_rate(p: &[f64], g: &ChannelMatrix) -> Result<f64> {
    check_dims(p, g)?;
    let mut total = 0.0;
    for i in 0..g.n() {
        let s = sinr_unchecked(i, p, g);
        if s <= 0.0 {
            return Err(PowerError::ZeroSinr(i));
        }
        total += s.log2();
    }
    Ok(total)
}
