use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelMatrix;
use crate::error::PowerError;
use crate::rate::{rates_unchecked, PowerAllocation, RateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Pair2,
    Pair3,
    Cluster2,
    Cluster3,
    Dist,
    QosPair2,
    QosDist,
    Oracle,
    #[serde(rename = "wf")]
    WaterFilling,
    Binary,
    Equal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::Pair2,
        Algorithm::Pair3,
        Algorithm::Cluster2,
        Algorithm::Cluster3,
        Algorithm::Dist,
        Algorithm::QosPair2,
        Algorithm::QosDist,
        Algorithm::Oracle,
        Algorithm::WaterFilling,
        Algorithm::Binary,
        Algorithm::Equal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Pair2 => "pair2",
            Algorithm::Pair3 => "pair3",
            Algorithm::Cluster2 => "cluster2",
            Algorithm::Cluster3 => "cluster3",
            Algorithm::Dist => "dist",
            Algorithm::QosPair2 => "qos-pair2",
            Algorithm::QosDist => "qos-dist",
            Algorithm::Oracle => "oracle",
            Algorithm::WaterFilling => "wf",
            Algorithm::Binary => "binary",
            Algorithm::Equal => "equal",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = PowerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| PowerError::Config(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    Infeasible,
    AlgorithmFailed,
    Capped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Infeasible => "infeasible",
            Status::AlgorithmFailed => "algorithm-failed",
            Status::Capped => "capped",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub allocation: PowerAllocation,
    pub rates: RateVector,
    pub status: Status,
    pub iterations: usize,
    /// Values broadcast per transmitter (distributed solvers only).
    pub signaling: Option<usize>,
    /// Winning index of a power sweep, when there was one.
    pub sweep_index: Option<usize>,
    pub wall_time: Duration,
    pub note: Option<String>,
}

impl SolveReport {
    pub fn new(algorithm: Algorithm, allocation: PowerAllocation, g: &ChannelMatrix, status: Status) -> Self {
        let rates = rates_unchecked(&allocation.p, g);
        Self {
            algorithm,
            allocation,
            rates,
            status,
            iterations: 0,
            signaling: None,
            sweep_index: None,
            wall_time: Duration::ZERO,
            note: None,
        }
    }

    /// A report with every transmitter silent, for runs that produced no allocation.
    pub fn silent(algorithm: Algorithm, g: &ChannelMatrix, budget: f64, status: Status) -> Self {
        let allocation = PowerAllocation::unchecked(vec![0.0; g.n()], budget);
        Self::new(algorithm, allocation, g, status)
    }

    pub fn sum_rate(&self) -> f64 {
        self.rates.sum
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}
