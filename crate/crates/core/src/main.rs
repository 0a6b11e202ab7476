use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use icpower::channel::{ChannelMatrix, ScenarioConfig};
use icpower::distributed::{run_distributed_traced, write_trace};
use icpower::harness::{
    cmd_compare, cmd_gen, cmd_qos_region, cmd_sweep, dbw_to_watts, load_generated, pad_targets, write_rows,
    ExperimentSpec, SolverOptions,
};
use icpower::qos_distributed::{run_qos_distributed_traced, write_qos_trace, MultiplierSign};
use icpower::report::Algorithm;

#[derive(Parser)]
#[command(name = "icpower", version, about = "Sum-rate power control for interfering links")]
struct Cli {
    /// Directory for outputs when --out is not given.
    #[arg(long, global = true, env = "ICPOWER_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random network and write gains.csv + scenario.toml.
    Gen(GenArgs),
    /// Run algorithms on one instance.
    Solve(SolveArgs),
    /// Mean sum rate per algorithm over seeds and power levels.
    Sweep(ExperimentArgs),
    /// Sum rate over a grid of rate targets for links 1 and 2.
    QosRegion(ExperimentArgs),
    /// All requested algorithms side by side on one instance, oracle included when small enough.
    Compare(SolveArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Scenario parameters (TOML); defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    links: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Three-link sweep step as a fraction of the budget.
    #[arg(long)]
    nu: Option<f64>,
    /// Distributed stopping tolerance in watts.
    #[arg(long)]
    delta: Option<f64>,
    /// Sum-power multiplier step constant.
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

impl SolverFlags {
    fn apply(&self, opts: &mut SolverOptions) {
        if let Some(nu) = self.nu {
            opts.nu = nu;
        }
        if self.delta.is_some() {
            opts.delta = self.delta;
        }
        if self.zeta.is_some() {
            opts.zeta = self.zeta;
        }
        if let Some(m) = self.max_iters {
            opts.max_iters = m;
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Directory written by `gen`.
    #[arg(long, conflicts_with_all = ["gains", "links"])]
    scenario: Option<PathBuf>,
    /// Gain matrix CSV (row = TX, column = RX).
    #[arg(long, requires = "noise_w")]
    gains: Option<PathBuf>,
    #[arg(long)]
    noise_w: Option<f64>,
    /// Random network with this many links.
    #[arg(long, default_value_t = 2)]
    links: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "algo", required = true, value_parser = parse_algorithm)]
    algorithms: Vec<Algorithm>,
    #[arg(long, allow_hyphen_values = true)]
    pt_dbw: f64,
    /// Rate targets in bits/s/Hz, comma-separated; missing links get 0.
    #[arg(long, value_delimiter = ',')]
    qos: Option<Vec<f64>>,
    /// Per-round trace of the distributed solvers (CSV).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment file (TOML); flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    links: Option<usize>,
    #[arg(long = "algo", value_parser = parse_algorithm)]
    algorithms: Vec<Algorithm>,
    /// Power levels in dBW, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pt_dbw: Vec<f64>,
    /// Seeds as `a..b` or a comma-separated list.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<SeedList>,
    /// QoS-region axis values in bits/s/Hz, comma-separated.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    qos: Option<Vec<f64>>,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: icpower::PowerError| e.to_string())
}

fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
        if b <= a {
            return Err(format!("empty seed range {s}"));
        }
        return Ok(SeedList((a..b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse().map_err(|e| format!("bad seed {x:?}: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(SeedList)
}

fn output_path(out: &Option<PathBuf>, out_dir: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    out.clone().or_else(|| out_dir.as_ref().map(|d| d.join(default_name)))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn gen(args: GenArgs, out_dir: &Option<PathBuf>) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => toml::from_str(&fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(n) = args.links {
        config.num_links = n;
    }
    if let Some(s) = args.seed {
        config.rng_seed = s;
    }
    let dir = args
        .out
        .or_else(|| out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let g = cmd_gen(&config, &dir)?;
    eprintln!("wrote {} links to {}", g.n(), dir.display());
    Ok(())
}

fn load_instance(args: &SolveArgs) -> Result<ChannelMatrix> {
    if let Some(dir) = &args.scenario {
        return Ok(load_generated(dir)?.1);
    }
    if let Some(path) = &args.gains {
        let noise = args.noise_w.context("--noise-w is required with --gains")?;
        return Ok(ChannelMatrix::read_csv(fs::File::open(path)?, noise)?);
    }
    Ok(icpower::generate_scenario(&ScenarioConfig::with_links(args.links, args.seed))?)
}

fn solve(args: SolveArgs, out_dir: &Option<PathBuf>, compare: bool) -> Result<()> {
    let g = load_instance(&args)?;
    let pt = dbw_to_watts(args.pt_dbw);
    let mut opts = SolverOptions::default();
    args.solver.apply(&mut opts);
    let qos = args.qos.as_deref().map(|r| pad_targets(r, g.n())).transpose()?;

    let rows = if compare {
        cmd_compare(&g, pt, &args.algorithms, qos.as_ref(), &opts)
    } else {
        let mut rows = cmd_compare(&g, pt, &args.algorithms, qos.as_ref(), &opts);
        rows.retain(|r| args.algorithms.contains(&r.algorithm) || r.note.starts_with("fallback"));
        rows
    };

    if let Some(trace_path) = &args.trace {
        let cfg = opts.subgradient(g.n(), pt);
        let mut w = sink(Some(trace_path))?;
        if args.algorithms.contains(&Algorithm::QosDist) {
            let q = qos.clone().unwrap_or_else(|| icpower::qos_pair2::QosTargets::zeros(g.n()));
            let mut t = Vec::new();
            run_qos_distributed_traced(&g, pt, &q, &cfg, MultiplierSign::Corrected, Some(&mut t))?;
            write_qos_trace(&t, &mut w)?;
        } else if args.algorithms.contains(&Algorithm::Dist) {
            let mut t = Vec::new();
            run_distributed_traced(&g, pt, &cfg, Some(&mut t))?;
            write_trace(&t, &mut w)?;
        } else {
            bail!("--trace needs --algo dist or --algo qos-dist");
        }
    }

    let name = if compare { "compare.csv" } else { "solve.csv" };
    write_rows(&rows, sink(output_path(&args.out, out_dir, name).as_deref())?)?;
    if !compare {
        if let Some(row) = rows.iter().find(|r| r.status == "error") {
            bail!("{}: {}", row.algorithm, row.note);
        }
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<ExperimentSpec> {
    let mut spec = match &args.spec {
        Some(p) => ExperimentSpec::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentSpec::default(),
    };
    if let Some(n) = args.links {
        spec.scenario.num_links = n;
    }
    if !args.algorithms.is_empty() {
        spec.algorithms = args.algorithms;
    }
    if !args.pt_dbw.is_empty() {
        spec.pt_dbw = args.pt_dbw;
    }
    if let Some(SeedList(s)) = args.seeds {
        spec.seeds = s;
    }
    if !args.grid.is_empty() {
        spec.qos_grid = args.grid;
    }
    if args.qos.is_some() {
        spec.qos = args.qos;
    }
    args.solver.apply(&mut spec.solver);
    if args.out.is_some() {
        spec.output = args.out;
    }
    Ok(spec)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(args) => gen(args, &cli.out_dir),
        Command::Solve(args) => solve(args, &cli.out_dir, false),
        Command::Compare(args) => solve(args, &cli.out_dir, true),
        Command::Sweep(args) => {
            let spec = experiment(args)?;
            let rows = cmd_sweep(&spec)?;
            write_rows(&rows, sink(output_path(&spec.output, &cli.out_dir, "sweep.csv").as_deref())?)?;
            Ok(())
        }
        Command::QosRegion(args) => {
            let spec = experiment(args)?;
            let rows = cmd_qos_region(&spec)?;
            write_rows(&rows, sink(output_path(&spec.output, &cli.out_dir, "qos_region.csv").as_deref())?)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
