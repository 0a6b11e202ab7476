use proptest::prelude::*;

use icpower::baselines::{baseline_report, grid_oracle, grid_oracle_on, water_filling, OracleDomain};
use icpower::channel::{generate_scenario, ChannelMatrix, ScenarioConfig};
use icpower::clustering::solve_clustered;
use icpower::harness::{cmd_sweep, dbw_to_watts, run_algorithm, ExperimentSpec, SolverOptions};
use icpower::pair2::solve_two_pair_report;
use icpower::pair3::{solve_three_pair, ThreePairSweepConfig};
use icpower::qos_pair2::{solve_two_pair_qos, QosTargets};
use icpower::rate::total_rate;
use icpower::{Algorithm, Status};

fn gains(n: usize) -> impl Strategy<Value = ChannelMatrix> {
    (
        prop::collection::vec(0.5f64..5.0, n),
        prop::collection::vec(0.0f64..1.0, n * n),
        0.01f64..1.0,
    )
        .prop_map(move |(direct, cross, s2)| {
            let rows = (0..n)
                .map(|j| (0..n).map(|i| if i == j { direct[i] } else { cross[j * n + i] }).collect())
                .collect();
            ChannelMatrix::new(rows, s2).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn two_link_solver_beats_fine_grid(g in gains(2), pt in 0.05f64..50.0) {
        let ours = solve_two_pair_report(&g, pt).unwrap().sum_rate();
        let grid = grid_oracle_on(&g, pt, 5000, None, OracleDomain::Boundary).unwrap().sum_rate();
        prop_assert!(ours >= grid - 1e-9 * grid.max(1.0), "{ours} < {grid}");
    }

    #[test]
    fn three_link_sweep_beats_every_baseline(g in gains(3), pt in 0.05f64..50.0) {
        let ours = solve_three_pair(&g, pt, &ThreePairSweepConfig::for_budget(pt)).unwrap();
        prop_assert!(ours.allocation.total() <= pt * (1.0 + 1e-9));
        for alg in [Algorithm::Binary, Algorithm::Equal, Algorithm::WaterFilling] {
            let base = baseline_report(alg, &g, pt).unwrap().sum_rate();
            prop_assert!(ours.sum_rate() >= base - 1e-9 * base.max(1.0), "{alg}: {} < {base}", ours.sum_rate());
        }
    }

    #[test]
    fn water_filling_is_optimal_without_interference(direct in prop::collection::vec(0.1f64..10.0, 3), pt in 0.1f64..20.0) {
        let rows = (0..3).map(|j| (0..3).map(|i| if i == j { direct[i] } else { 0.0 }).collect()).collect();
        let g = ChannelMatrix::new(rows, 1.0).unwrap();
        let wf = water_filling(&g, pt);
        prop_assert!((wf.total() - pt).abs() <= 1e-9 * pt);
        let grid = grid_oracle(&g, pt, 200, None).unwrap().sum_rate();
        prop_assert!(total_rate(&wf.p, &g) >= grid - 1e-9);
    }

    #[test]
    fn qos_solution_meets_targets(g in gains(2), pt in 0.1f64..20.0, r1 in 0.0f64..2.0, r2 in 0.0f64..2.0) {
        let q = QosTargets::new(vec![r1, r2]).unwrap();
        let r = solve_two_pair_qos(&g, pt, &q).unwrap();
        let unconstrained = solve_two_pair_report(&g, pt).unwrap().sum_rate();
        if r.status == Status::Converged {
            prop_assert!(r.rates.r[0] >= r1 - 1e-9 && r.rates.r[1] >= r2 - 1e-9);
            prop_assert!(r.sum_rate() <= unconstrained + 1e-9);
        }
        let filtered = grid_oracle(&g, pt, 400, Some(&q)).unwrap();
        if filtered.status == Status::Converged {
            prop_assert!(q.satisfied_by(&filtered.rates.r));
            prop_assert!(filtered.sum_rate() <= grid_oracle(&g, pt, 400, None).unwrap().sum_rate() + 1e-12);
        }
    }

    #[test]
    fn clustering_respects_the_budget(g in gains(5), pt in 0.1f64..20.0) {
        for r in [2, 3] {
            let rep = solve_clustered(&g, pt, r).unwrap();
            prop_assert!(rep.allocation.total() <= pt * (1.0 + 1e-9));
            prop_assert!(rep.allocation.p.iter().all(|&x| x >= 0.0));
            let equal = baseline_report(Algorithm::Equal, &g, pt).unwrap().sum_rate();
            prop_assert!(rep.sum_rate() >= equal - 1e-9 * equal.max(1.0));
        }
    }
}

#[test]
fn oracle_agrees_with_exact_solvers_on_generated_networks() {
    for seed in 0..10 {
        let pt = dbw_to_watts(0.0);
        let g = generate_scenario(&ScenarioConfig::with_links(3, seed)).unwrap();
        let opts = SolverOptions::default();
        let exact = run_algorithm(Algorithm::Pair3, &g, pt, None, &opts).unwrap().sum_rate();
        let oracle = run_algorithm(Algorithm::Oracle, &g, pt, None, &opts).unwrap().sum_rate();
        assert!(exact >= oracle * (1.0 - 1e-3), "seed {seed}: {exact} vs {oracle}");
    }
}

#[test]
fn oracle_refuses_large_networks() {
    let g = generate_scenario(&ScenarioConfig::with_links(5, 0)).unwrap();
    assert!(grid_oracle(&g, 1.0, 10, None).is_err());
}

#[test]
fn sweep_counts_infeasible_runs_as_zero() {
    let spec = ExperimentSpec {
        algorithms: vec![Algorithm::QosPair2, Algorithm::Pair2],
        pt_dbw: vec![-10.0],
        seeds: (0..3).collect(),
        qos: Some(vec![40.0, 40.0]),
        ..ExperimentSpec::default()
    };
    let rows = cmd_sweep(&spec).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].algorithm, Algorithm::QosPair2);
    assert_eq!(rows[0].infeasible, 3);
    assert_eq!(rows[0].mean_sum_rate, 0.0);
    assert_eq!(rows[1].converged, 3);
    assert!(rows[1].mean_sum_rate > 0.0);
}
