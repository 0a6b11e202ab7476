//! Sum-rate power control for interfering transmitter/receiver pairs that
//! share one total power budget.
//!
//! Exact solvers cover two and three links; larger networks use clustering
//! or a distributed dual method, optionally with per-link minimum rates. A
//! grid-search oracle and simple baselines are included for comparison.

pub mod baselines;
pub mod channel;
pub mod clustering;
pub mod distributed;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod pair2;
pub mod pair3;
pub mod qos_distributed;
pub mod qos_pair2;
pub mod rate;
pub mod report;

pub use channel::{generate_scenario, normalize_two_pair, ChannelMatrix, NormalizedTwoPair, ScenarioConfig};
pub use error::{PowerError, Result};
pub use rate::{sum_rate, PowerAllocation, RateVector};
pub use report::{Algorithm, SolveReport, Status};
