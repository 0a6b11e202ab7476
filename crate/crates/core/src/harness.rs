//! Experiment driver behind the command-line tool: scenario files, power
//! sweeps, QoS-region grids and side-by-side comparisons, all emitted as CSV.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_report, default_resolution, grid_oracle, ORACLE_MAX_LINKS};
use crate::channel::{generate_scenario, normalize_two_pair, ChannelMatrix, ScenarioConfig};
use crate::clustering::{solve_clustered_with, ClusteringConfig};
use crate::distributed::{run_distributed, SubgradientConfig};
use crate::error::{PowerError, Result};
use crate::pair2::solve_two_pair_report;
use crate::pair3::{solve_three_pair, ThreePairSweepConfig};
use crate::qos_distributed::run_qos_distributed;
use crate::qos_pair2::{min_powers, solve_two_pair_qos, QosTargets};
use crate::report::{Algorithm, SolveReport, Status};

pub const GAINS_FILE: &str = "gains.csv";
pub const SCENARIO_FILE: &str = "scenario.toml";

pub fn dbw_to_watts(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

/// Solver knobs shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Three-link sweep step as a fraction of the budget being swept.
    pub nu: f64,
    /// Distributed stopping tolerance in watts; `1e-3·P_T` when absent.
    pub delta: Option<f64>,
    /// Sum-power step constant; `N/P_T²` when absent.
    pub zeta: Option<f64>,
    pub zeta_mu: f64,
    pub max_iters: usize,
    /// Grid steps per axis; 1000 for two links, 200 otherwise, when absent.
    pub oracle_resolution: Option<usize>,
    pub sweep_all_roles: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            nu: 1.0 / 200.0,
            delta: None,
            zeta: None,
            zeta_mu: 1.0,
            max_iters: 100_000,
            oracle_resolution: None,
            sweep_all_roles: false,
        }
    }
}

impl SolverOptions {
    pub fn subgradient(&self, n: usize, pt: f64) -> SubgradientConfig {
        let base = SubgradientConfig::for_problem(n, pt);
        SubgradientConfig {
            zeta: self.zeta.unwrap_or(base.zeta),
            zeta_mu: self.zeta_mu,
            delta: self.delta.unwrap_or(base.delta),
            max_iters: self.max_iters,
            ..base
        }
    }

    pub fn sweep(&self, pt: f64) -> ThreePairSweepConfig {
        ThreePairSweepConfig {
            nu: self.nu * pt,
            sweep_all_roles: self.sweep_all_roles,
        }
    }

    pub fn clustering(&self) -> ClusteringConfig {
        ClusteringConfig {
            nu_fraction: self.nu,
            ..ClusteringConfig::default()
        }
    }
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    /// Fixed gain matrix (CSV) used instead of random drops.
    pub gains_file: Option<PathBuf>,
    /// Noise power for `gains_file`; the scenario's thermal noise when absent.
    pub noise_w: Option<f64>,
    pub algorithms: Vec<Algorithm>,
    pub pt_dbw: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Rate targets for the QoS solvers in sweeps and comparisons.
    pub qos: Option<Vec<f64>>,
    /// Axis values (bits/s/Hz) of the QoS-region grid.
    pub qos_grid: Vec<f64>,
    pub solver: SolverOptions,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            gains_file: None,
            noise_w: None,
            algorithms: Vec::new(),
            pt_dbw: Vec::new(),
            seeds: vec![0],
            qos: None,
            qos_grid: Vec::new(),
            solver: SolverOptions::default(),
            output: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PowerError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut spec = Self::from_toml(&fs::read_to_string(path)?)?;
        if let (Some(gains), Some(dir)) = (&spec.gains_file, path.parent()) {
            if gains.is_relative() {
                spec.gains_file = Some(dir.join(gains));
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pt_dbw.is_empty() {
            return Err(PowerError::Config("power sweep is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(PowerError::Config("seed list is empty".into()));
        }
        Ok(())
    }

    /// The channel for one seed: the gains file when given, else a random drop.
    pub fn channel(&self, seed: u64) -> Result<ChannelMatrix> {
        match &self.gains_file {
            Some(path) => {
                let noise = self.noise_w.unwrap_or_else(|| self.scenario.noise_power_w());
                ChannelMatrix::read_csv(fs::File::open(path)?, noise)
            }
            None => generate_scenario(&ScenarioConfig {
                rng_seed: seed,
                ..self.scenario.clone()
            }),
        }
    }

    fn targets(&self, n: usize) -> Result<QosTargets> {
        match &self.qos {
            Some(r) => pad_targets(r, n),
            None => Ok(QosTargets::zeros(n)),
        }
    }
}

/// Targets for the first links, zero for the rest.
pub fn pad_targets(r: &[f64], n: usize) -> Result<QosTargets> {
    if r.len() > n {
        return Err(PowerError::Dimension {
            expected: n,
            got: r.len(),
        });
    }
    let mut all = r.to_vec();
    all.resize(n, 0.0);
    QosTargets::new(all)
}

/// Runs one algorithm on one instance.
pub fn run_algorithm(
    algorithm: Algorithm,
    g: &ChannelMatrix,
    pt: f64,
    qos: Option<&QosTargets>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let n = g.n();
    let zeros = QosTargets::zeros(n);
    match algorithm {
        Algorithm::Pair2 => solve_two_pair_report(g, pt),
        Algorithm::Pair3 => solve_three_pair(g, pt, &opts.sweep(pt)),
        Algorithm::Cluster2 => solve_clustered_with(g, pt, 2, &opts.clustering()),
        Algorithm::Cluster3 => solve_clustered_with(g, pt, 3, &opts.clustering()),
        Algorithm::Dist => run_distributed(g, pt, &opts.subgradient(n, pt)),
        Algorithm::QosPair2 => solve_two_pair_qos(g, pt, qos.unwrap_or(&zeros)),
        Algorithm::QosDist => run_qos_distributed(g, pt, qos.unwrap_or(&zeros), &opts.subgradient(n, pt)),
        Algorithm::Oracle => grid_oracle(g, pt, opts.oracle_resolution.unwrap_or(default_resolution(n)), qos),
        Algorithm::WaterFilling | Algorithm::Binary | Algorithm::Equal => baseline_report(algorithm, g, pt),
    }
}

/// Writes the gains and the scenario parameters into `dir`.
pub fn cmd_gen(config: &ScenarioConfig, dir: &Path) -> Result<ChannelMatrix> {
    let g = generate_scenario(config)?;
    fs::create_dir_all(dir)?;
    g.write_csv(fs::File::create(dir.join(GAINS_FILE))?)?;
    let meta = toml::to_string(config).map_err(|e| PowerError::Parse(e.to_string()))?;
    fs::write(dir.join(SCENARIO_FILE), meta)?;
    Ok(g)
}

/// Reads back a directory written by [`cmd_gen`].
pub fn load_generated(dir: &Path) -> Result<(ScenarioConfig, ChannelMatrix)> {
    let config: ScenarioConfig = toml::from_str(&fs::read_to_string(dir.join(SCENARIO_FILE))?)
        .map_err(|e| PowerError::Parse(e.to_string()))?;
    let g = ChannelMatrix::read_csv(fs::File::open(dir.join(GAINS_FILE))?, config.noise_power_w())?;
    Ok((config, g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub pt_dbw: f64,
    pub algorithm: Algorithm,
    pub mean_sum_rate: f64,
    pub std_sum_rate: f64,
    pub runs: usize,
    pub converged: usize,
    pub infeasible: usize,
    pub algorithm_failed: usize,
    pub capped: usize,
    pub errors: usize,
}

#[derive(Default)]
struct Tally {
    rates: Vec<f64>,
    counts: [usize; 4],
    errors: usize,
}

impl Tally {
    fn add(&mut self, outcome: &Result<SolveReport>) {
        match outcome {
            Ok(r) => {
                self.rates.push(r.sum_rate());
                let slot = match r.status {
                    Status::Converged => 0,
                    Status::Infeasible => 1,
                    Status::AlgorithmFailed => 2,
                    Status::Capped => 3,
                };
                self.counts[slot] += 1;
            }
            Err(_) => self.errors += 1,
        }
    }

    fn row(&self, pt_dbw: f64, algorithm: Algorithm) -> SweepRow {
        let k = self.rates.len();
        let mean = if k == 0 { f64::NAN } else { self.rates.iter().sum::<f64>() / k as f64 };
        let std = if k < 2 {
            0.0
        } else {
            (self.rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
        };
        SweepRow {
            pt_dbw,
            algorithm,
            mean_sum_rate: mean,
            std_sum_rate: std,
            runs: k + self.errors,
            converged: self.counts[0],
            infeasible: self.counts[1],
            algorithm_failed: self.counts[2],
            capped: self.counts[3],
            errors: self.errors,
        }
    }
}

/// Mean and spread of each algorithm's sum rate over the seeds, per power
/// level. Runs that end infeasible or failed count as zero rate; runs that
/// error out (wrong link count, say) are only counted.
pub fn cmd_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if spec.algorithms.is_empty() {
        return Err(PowerError::Config("no algorithms requested".into()));
    }
    let mut tallies: Vec<Vec<Tally>> = spec
        .pt_dbw
        .iter()
        .map(|_| spec.algorithms.iter().map(|_| Tally::default()).collect())
        .collect();
    for &seed in &spec.seeds {
        let g = spec.channel(seed)?;
        let q = spec.targets(g.n())?;
        for (pi, &dbw) in spec.pt_dbw.iter().enumerate() {
            let pt = dbw_to_watts(dbw);
            for (ai, &alg) in spec.algorithms.iter().enumerate() {
                tallies[pi][ai].add(&run_algorithm(alg, &g, pt, Some(&q), &spec.solver));
            }
        }
    }
    let mut rows = Vec::new();
    for (pi, &dbw) in spec.pt_dbw.iter().enumerate() {
        for (ai, &alg) in spec.algorithms.iter().enumerate() {
            rows.push(tallies[pi][ai].row(dbw, alg));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QosRegionRow {
    pub seed: u64,
    pub pt_dbw: f64,
    pub r1_min: f64,
    pub r2_min: f64,
    pub algorithm: Algorithm,
    pub status: Status,
    /// Achieved sum rate, or 0 when infeasible or failed.
    pub sum_rate: f64,
    /// Minimum sum power meeting both targets (two links only).
    pub min_sum_power: Option<f64>,
}

/// Sum rate over a grid of targets for links 1 and 2 (other links get no
/// target). Two links use the reservation solver, larger networks the
/// distributed one.
pub fn cmd_qos_region(spec: &ExperimentSpec) -> Result<Vec<QosRegionRow>> {
    spec.validate()?;
    if spec.qos_grid.is_empty() {
        return Err(PowerError::Config("qos_grid is empty".into()));
    }
    let mut rows = Vec::new();
    for &seed in &spec.seeds {
        let g = spec.channel(seed)?;
        let n = g.n();
        for &dbw in &spec.pt_dbw {
            let pt = dbw_to_watts(dbw);
            for &r1 in &spec.qos_grid {
                for &r2 in &spec.qos_grid {
                    let q = pad_targets(&[r1, r2], n)?;
                    let (algorithm, report, min_sum_power) = if n == 2 {
                        let min = min_powers(&normalize_two_pair(&g)?, &q, pt)
                            .map(|f| f.p_s_min)
                            .unwrap_or(f64::INFINITY);
                        (Algorithm::QosPair2, solve_two_pair_qos(&g, pt, &q)?, Some(min))
                    } else {
                        let cfg = spec.solver.subgradient(n, pt);
                        (Algorithm::QosDist, run_qos_distributed(&g, pt, &q, &cfg)?, None)
                    };
                    let sum_rate = if report.status == Status::Converged { report.sum_rate() } else { 0.0 };
                    rows.push(QosRegionRow {
                        seed,
                        pt_dbw: dbw,
                        r1_min: r1,
                        r2_min: r2,
                        algorithm,
                        status: report.status,
                        sum_rate,
                        min_sum_power,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub algorithm: Algorithm,
    /// Run status, or `error`.
    pub status: String,
    pub sum_rate: Option<f64>,
    pub iterations: Option<usize>,
    pub signaling: Option<usize>,
    /// Powers in watts, `;`-separated.
    pub powers: String,
    pub note: String,
}

impl CompareRow {
    fn from_outcome(algorithm: Algorithm, outcome: Result<SolveReport>) -> Self {
        match outcome {
            Ok(r) => Self {
                algorithm,
                status: r.status.to_string(),
                sum_rate: Some(r.sum_rate()),
                iterations: Some(r.iterations),
                signaling: r.signaling,
                powers: r.allocation.p.iter().map(|p| format!("{p:e}")).collect::<Vec<_>>().join(";"),
                note: r.note.unwrap_or_default(),
            },
            Err(e) => Self {
                algorithm,
                status: "error".into(),
                sum_rate: None,
                iterations: None,
                signaling: None,
                powers: String::new(),
                note: e.to_string(),
            },
        }
    }
}

/// Every requested algorithm on one instance. The grid oracle is added for
/// networks it can handle, and also stands in when the reservation solver
/// fails.
pub fn cmd_compare(
    g: &ChannelMatrix,
    pt: f64,
    algorithms: &[Algorithm],
    qos: Option<&QosTargets>,
    opts: &SolverOptions,
) -> Vec<CompareRow> {
    let mut algs = algorithms.to_vec();
    if g.n() <= ORACLE_MAX_LINKS && !algs.contains(&Algorithm::Oracle) {
        algs.push(Algorithm::Oracle);
    }
    let mut rows = Vec::new();
    for alg in algs {
        let outcome = run_algorithm(alg, g, pt, qos, opts);
        let failed = matches!(&outcome, Ok(r) if r.status == Status::AlgorithmFailed);
        rows.push(CompareRow::from_outcome(alg, outcome));
        if failed && g.n() <= ORACLE_MAX_LINKS {
            let res = opts.oracle_resolution.unwrap_or(default_resolution(g.n()));
            let fallback = grid_oracle(g, pt, res, qos).map(|r| r.with_note(format!("fallback for failed {alg}")));
            rows.push(CompareRow::from_outcome(Algorithm::Oracle, fallback));
        }
    }
    rows
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_parses_from_toml() {
        let spec = ExperimentSpec::from_toml(
            r#"
            algorithms = ["pair2", "wf", "qos-pair2", "binary"]
            pt_dbw = [-10, 0, 10]
            seeds = [1, 2]
            [scenario]
            num_links = 2
            [solver]
            nu = 0.01
            "#,
        )
        .unwrap();
        assert_eq!(spec.algorithms[1], Algorithm::WaterFilling);
        assert_eq!(spec.algorithms[2], Algorithm::QosPair2);
        assert_eq!(spec.scenario.region_radius_m, 500.0);
        assert_eq!(spec.solver.nu, 0.01);
        assert!(ExperimentSpec::from_toml("algorithms = [\"nope\"]").is_err());
    }

    #[test]
    fn dbw_conversion() {
        assert_eq!(dbw_to_watts(0.0), 1.0);
        assert!((dbw_to_watts(20.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn target_padding() {
        assert_eq!(pad_targets(&[1.0], 3).unwrap().r_min, vec![1.0, 0.0, 0.0]);
        assert!(pad_targets(&[1.0, 1.0, 1.0], 2).is_err());
    }

    #[test]
    fn sweep_counts_errors_for_wrong_sizes() {
        let spec = ExperimentSpec {
            scenario: ScenarioConfig::with_links(3, 0),
            algorithms: vec![Algorithm::Pair2, Algorithm::Equal],
            pt_dbw: vec![0.0],
            seeds: vec![1, 2],
            ..ExperimentSpec::default()
        };
        let rows = cmd_sweep(&spec).unwrap();
        assert_eq!(rows[0].errors, 2);
        assert!(rows[0].mean_sum_rate.is_nan());
        assert_eq!(rows[1].converged, 2);
    }

    #[test]
    fn compare_adds_oracle_for_small_networks() {
        let g = generate_scenario(&ScenarioConfig::with_links(2, 4)).unwrap();
        let rows = cmd_compare(&g, 1.0, &[Algorithm::Pair2], None, &SolverOptions::default());
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].algorithm, Algorithm::Oracle);
        let g = generate_scenario(&ScenarioConfig::with_links(5, 4)).unwrap();
        let rows = cmd_compare(&g, 1.0, &[Algorithm::Equal], None, &SolverOptions::default());
        assert_eq!(rows.len(), 1);
    }
}
