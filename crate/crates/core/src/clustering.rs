//! Power control for larger networks by splitting the links into small
//! clusters with equal budgets and solving each cluster exactly.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{normalize_two_pair, ChannelMatrix};
use crate::error::{PowerError, Result};
use crate::pair2::solve_normalized;
use crate::pair3::{solve_three_pair, ThreePairSweepConfig};
use crate::rate::{total_rate, PowerAllocation};
use crate::report::{Algorithm, SolveReport, Status};

/// Plans are enumerated exhaustively up to this many partitions.
pub const ENUMERATION_LIMIT: u128 = 2000;
pub const DEFAULT_SAMPLE_CAP: usize = 500;
pub const DEFAULT_PLAN_SEED: u64 = 0x5eed;

/// A partition of the links into disjoint clusters of size `r`, plus the
/// links left over. Stored in canonical order: sorted clusters of sorted
/// members.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClusterPlan {
    pub r: usize,
    pub clusters: Vec<Vec<usize>>,
    pub leftovers: Vec<usize>,
}

impl ClusterPlan {
    pub fn new(r: usize, mut clusters: Vec<Vec<usize>>, mut leftovers: Vec<usize>) -> Self {
        for c in &mut clusters {
            c.sort_unstable();
        }
        clusters.sort();
        leftovers.sort_unstable();
        Self { r, clusters, leftovers }
    }

    pub fn num_links(&self) -> usize {
        self.clusters.len() * self.r + self.leftovers.len()
    }

    /// `P̂ = P_T / N`.
    pub fn per_link_power(&self, pt: f64) -> f64 {
        pt / self.num_links() as f64
    }

    /// `r · P̂`.
    pub fn per_cluster_budget(&self, pt: f64) -> f64 {
        self.r as f64 * self.per_link_power(pt)
    }

    pub fn cluster_of(&self, i: usize) -> Option<&[usize]> {
        self.clusters.iter().find(|c| c.contains(&i)).map(Vec::as_slice)
    }
}

/// Interference at receiver `i` from every transmitter outside its cluster,
/// each assumed to send `p_hat`.
pub fn cluster_interference(i: usize, plan: &ClusterPlan, g: &ChannelMatrix, p_hat: f64) -> Result<f64> {
    if i >= g.n() {
        return Err(PowerError::IndexOutOfRange { index: i, n: g.n() });
    }
    let cluster = plan.cluster_of(i).ok_or(PowerError::NotInCluster(i))?;
    Ok((0..g.n())
        .filter(|j| !cluster.contains(j))
        .map(|j| p_hat * g.gain(j, i))
        .sum())
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of distinct plans for `n` links in clusters of `r`.
pub fn partition_count(n: usize, r: usize) -> u128 {
    if r == 0 || n < r {
        return 0;
    }
    let k = (n / r) as u128;
    let (n, r) = (n as u128, r as u128);
    let mut count = binomial(n, n - k * r);
    let mut pool = k * r;
    for _ in 0..k {
        // Smallest remaining element anchors the next cluster.
        count *= binomial(pool - 1, r - 1);
        pool -= r;
    }
    count
}

fn enumerate_all(n: usize, r: usize) -> Vec<ClusterPlan> {
    fn rec(
        remaining: &[usize],
        r: usize,
        leftovers_left: usize,
        clusters: &mut Vec<Vec<usize>>,
        leftovers: &mut Vec<usize>,
        out: &mut Vec<ClusterPlan>,
    ) {
        let Some((&first, rest)) = remaining.split_first() else {
            out.push(ClusterPlan::new(r, clusters.clone(), leftovers.clone()));
            return;
        };
        if leftovers_left > 0 {
            leftovers.push(first);
            rec(rest, r, leftovers_left - 1, clusters, leftovers, out);
            leftovers.pop();
        }
        if rest.len() + 1 >= r && (rest.len() + 1 - r) >= leftovers_left {
            for_each_combination(rest, r - 1, &mut |chosen| {
                let mut cluster = vec![first];
                cluster.extend_from_slice(chosen);
                let others: Vec<usize> = rest.iter().copied().filter(|x| !chosen.contains(x)).collect();
                clusters.push(cluster);
                rec(&others, r, leftovers_left, clusters, leftovers, out);
                clusters.pop();
            });
        }
    }

    let links: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    rec(&links, r, n % r, &mut Vec::new(), &mut Vec::new(), &mut out);
    out.sort();
    out
}

fn for_each_combination(items: &[usize], k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for idx in start..items.len() {
            if items.len() - idx < k - cur.len() {
                break;
            }
            cur.push(items[idx]);
            rec(items, k, idx + 1, cur, f);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut Vec::with_capacity(k), f);
}

/// Every plan when there are at most `cap`, otherwise `cap` distinct plans
/// drawn with a fixed seed. Sorted in either case.
pub fn enumerate_partitions(n: usize, r: usize, cap: usize) -> Vec<ClusterPlan> {
    enumerate_partitions_seeded(n, r, cap, DEFAULT_PLAN_SEED)
}

pub fn enumerate_partitions_seeded(n: usize, r: usize, cap: usize, seed: u64) -> Vec<ClusterPlan> {
    let total = partition_count(n, r);
    if total == 0 {
        return Vec::new();
    }
    if total <= cap as u128 {
        return enumerate_all(n, r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut links: Vec<usize> = (0..n).collect();
    let k = n / r;
    while seen.len() < cap {
        links.shuffle(&mut rng);
        let clusters = links[..k * r].chunks(r).map(<[usize]>::to_vec).collect();
        seen.insert(ClusterPlan::new(r, clusters, links[k * r..].to_vec()));
    }
    seen.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteringConfig {
    /// Sample size once the plan count exceeds [`ENUMERATION_LIMIT`].
    pub sample_cap: usize,
    pub seed: u64,
    /// Three-link sweep step as a fraction of the cluster budget.
    pub nu_fraction: f64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            sample_cap: DEFAULT_SAMPLE_CAP,
            seed: DEFAULT_PLAN_SEED,
            nu_fraction: 1.0 / 200.0,
        }
    }
}

impl ClusteringConfig {
    pub fn plans(&self, n: usize, r: usize) -> Vec<ClusterPlan> {
        let total = partition_count(n, r);
        let cap = if total <= ENUMERATION_LIMIT {
            total as usize
        } else {
            self.sample_cap
        };
        enumerate_partitions_seeded(n, r, cap, self.seed)
    }
}

/// Global allocation produced by one plan.
pub fn allocate_for_plan(g: &ChannelMatrix, pt: f64, plan: &ClusterPlan, cfg: &ClusteringConfig) -> Result<Vec<f64>> {
    let n = g.n();
    if plan.num_links() != n {
        return Err(PowerError::Dimension {
            expected: n,
            got: plan.num_links(),
        });
    }
    let p_hat = plan.per_link_power(pt);
    let budget = plan.per_cluster_budget(pt);
    let mut p = vec![0.0; n];
    for &i in &plan.leftovers {
        p[i] = p_hat;
    }
    for cluster in &plan.clusters {
        let extra = cluster
            .iter()
            .map(|&i| cluster_interference(i, plan, g, p_hat))
            .collect::<Result<Vec<_>>>()?;
        let sub = g.subchannel(cluster, &extra);
        let local = match plan.r {
            2 => solve_normalized(&normalize_two_pair(&sub)?, budget)?.allocation.p,
            3 => {
                let sweep = ThreePairSweepConfig::new(budget * cfg.nu_fraction);
                solve_three_pair(&sub, budget, &sweep)?.allocation.p
            }
            r => return Err(PowerError::Config(format!("cluster size must be 2 or 3, got {r}"))),
        };
        for (&i, &pi) in cluster.iter().zip(&local) {
            p[i] = pi;
        }
    }
    Ok(p)
}

pub fn solve_clustered(g: &ChannelMatrix, pt: f64, r: usize) -> Result<SolveReport> {
    solve_clustered_with(g, pt, r, &ClusteringConfig::default())
}

/// Evaluates every plan and keeps the one with the highest network sum rate;
/// ties go to the lexicographically smallest plan.
pub fn solve_clustered_with(g: &ChannelMatrix, pt: f64, r: usize, cfg: &ClusteringConfig) -> Result<SolveReport> {
    let start = Instant::now();
    if !(r == 2 || r == 3) {
        return Err(PowerError::Config(format!("cluster size must be 2 or 3, got {r}")));
    }
    if g.n() <= 3 {
        return Err(PowerError::Config(format!(
            "clustering needs more than 3 links, got {}",
            g.n()
        )));
    }
    if !(pt > 0.0 && pt.is_finite()) {
        return Err(PowerError::Config(format!("budget must be positive, got {pt}")));
    }
    let plans = cfg.plans(g.n(), r);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for plan in &plans {
        let p = allocate_for_plan(g, pt, plan, cfg)?;
        let rate = total_rate(&p, g);
        if best.as_ref().is_none_or(|(b, _)| rate > *b) {
            best = Some((rate, p));
        }
    }
    let (_, p) = best.ok_or_else(|| PowerError::Config("no cluster plans".into()))?;
    let algorithm = if r == 2 { Algorithm::Cluster2 } else { Algorithm::Cluster3 };
    let mut report = SolveReport::new(algorithm, PowerAllocation::unchecked(p, pt), g, Status::Converged);
    report.iterations = plans.len();
    report.wall_time = start.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(partition_count(4, 2), 3);
        assert_eq!(partition_count(5, 2), 15);
        assert_eq!(partition_count(6, 3), 10);
        assert_eq!(partition_count(10, 2), 945);
        assert_eq!(partition_count(10, 3), 2800);
        assert_eq!(partition_count(2, 3), 0);
    }

    #[test]
    fn four_links_three_matchings() {
        let plans = enumerate_partitions(4, 2, 100);
        let got: Vec<_> = plans.iter().map(|p| p.clusters.clone()).collect();
        assert_eq!(
            got,
            vec![
                vec![vec![0, 1], vec![2, 3]],
                vec![vec![0, 2], vec![1, 3]],
                vec![vec![0, 3], vec![1, 2]],
            ]
        );
    }

    #[test]
    fn exhaustive_generation_matches_count() {
        for (n, r) in [(5, 2), (7, 2), (7, 3), (8, 3), (9, 3)] {
            let plans = enumerate_partitions(n, r, usize::MAX);
            assert_eq!(plans.len() as u128, partition_count(n, r), "n={n} r={r}");
            let unique: BTreeSet<_> = plans.iter().collect();
            assert_eq!(unique.len(), plans.len());
            for p in &plans {
                let mut all: Vec<usize> = p.clusters.iter().flatten().copied().chain(p.leftovers.iter().copied()).collect();
                all.sort_unstable();
                assert_eq!(all, (0..n).collect::<Vec<_>>());
                assert!(p.clusters.iter().all(|c| c.len() == r));
            }
        }
    }

    #[test]
    fn sampling_is_seeded_and_distinct() {
        let a = enumerate_partitions(10, 2, 500);
        assert_eq!(a.len(), 500);
        assert_eq!(a, enumerate_partitions(10, 2, 500));
        let unique: BTreeSet<_> = a.iter().collect();
        assert_eq!(unique.len(), 500);
        assert_eq!(ClusteringConfig::default().plans(10, 2).len(), 945);
        assert_eq!(ClusteringConfig::default().plans(10, 3).len(), 500);
    }

    #[test]
    fn interference_sums() {
        let g = ChannelMatrix::new(vec![vec![1.0; 4]; 4], 1.0).unwrap();
        let plan = ClusterPlan::new(2, vec![vec![0, 1], vec![2, 3]], vec![]);
        assert_eq!(cluster_interference(0, &plan, &g, 1.0).unwrap(), 2.0);
        let single = ClusterPlan::new(2, vec![vec![0, 1]], vec![]);
        let g2 = ChannelMatrix::new(vec![vec![1.0; 2]; 2], 1.0).unwrap();
        assert_eq!(cluster_interference(1, &single, &g2, 1.0).unwrap(), 0.0);
        let with_leftover = ClusterPlan::new(2, vec![vec![0, 1], vec![2, 3]], vec![4]);
        let g5 = ChannelMatrix::new(vec![vec![1.0; 5]; 5], 1.0).unwrap();
        assert_eq!(cluster_interference(4, &with_leftover, &g5, 1.0), Err(PowerError::NotInCluster(4)));
    }

    #[test]
    fn interference_matches_brute_force() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|j| (0..5).map(|i| 0.1 + ((j * 7 + i * 3) % 11) as f64 / 10.0).collect())
            .collect();
        let g = ChannelMatrix::new(rows.clone(), 0.5).unwrap();
        let plan = ClusterPlan::new(2, vec![vec![0, 3], vec![1, 4]], vec![2]);
        for i in [0, 1, 3, 4] {
            let c = plan.cluster_of(i).unwrap();
            let mut want = 0.0;
            for (j, row) in rows.iter().enumerate() {
                if !c.contains(&j) {
                    want += 0.7 * row[i];
                }
            }
            assert!((cluster_interference(i, &plan, &g, 0.7).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn budget_is_exhausted_with_leftovers() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|j| (0..5).map(|i| if i == j { 1.0 } else { 0.05 * (1 + (i + j) % 3) as f64 }).collect())
            .collect();
        let g = ChannelMatrix::new(rows, 0.1).unwrap();
        for r in [2, 3] {
            let rep = solve_clustered(&g, 5.0, r).unwrap();
            assert!((rep.allocation.total() - 5.0).abs() < 1e-9);
            rep.allocation.check().unwrap();
        }
    }

    #[test]
    fn rejects_small_networks_and_bad_sizes() {
        let g = ChannelMatrix::new(vec![vec![1.0; 3]; 3], 1.0).unwrap();
        assert!(solve_clustered(&g, 1.0, 2).is_err());
        let g = ChannelMatrix::new(vec![vec![1.0; 4]; 4], 1.0).unwrap();
        assert!(solve_clustered(&g, 1.0, 4).is_err());
    }
}
