//! Subcommand definitions and their implementations.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mip_core::datagen::{derive_seed, summarize, sweep_seed};
use mip_core::exhaustive::MAX_EXHAUSTIVE_BIPARTITION;
use mip_core::properties::{check_submodular, check_symmetric, PropertyReport};
use mip_core::scaling::{loglog_slope, semilog_slope};
use mip_core::{
    cml_run, covariance_from_samples, exhaustive_bipartition_gaussian, exhaustive_kpartition, gen_block_correlated,
    gen_random_gaussian, greedy_kpartition, minimize_bipartition, minimize_bipartition_gaussian, minimize_kpartition,
    simulate_cml, BipartitionResult, BlockParams, CmlParams, CmlRun, GroundSet, Subset,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::io::{column_labels, load_system, output, write_table, InputKind};
use crate::report::{InputDescriptor, ReportBuilder, RunReport};

#[derive(Debug, Parser)]
#[command(name = "mip", version, about = "Minimum information partition search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum information bipartition of a CSV dataset.
    Bipartition(BipartitionArgs),
    /// Minimum total-correlation partition into k blocks.
    Kpartition(KpartitionArgs),
    /// Time the searches over a range of system sizes.
    Bench(BenchArgs),
    /// Partition probability of the coupled map lattice as a function of delta.
    CmlSweep(CmlSweepArgs),
    /// Randomized property check of the mutual-information loss.
    Check(CheckArgs),
    /// Generate synthetic data as CSV.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InputKind::Samples)]
    pub input_kind: InputKind,
    /// Comma-separated variable labels; overrides a header row.
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct BipartitionArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Enumerate every bipartition instead (n <= 24).
    #[arg(long)]
    pub exhaustive: bool,
    /// Report path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KpartitionArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k: usize,
    /// Greedy recursive bipartition; not guaranteed optimal.
    #[arg(long, conflicts_with = "exhaustive")]
    pub hierarchical: bool,
    /// Enumerate every k-partition (n <= 12).
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    /// Contraction search with incremental Gaussian updates.
    Queyranne,
    /// Contraction search through the generic set-function oracle.
    Naive,
    /// Search over all bipartitions.
    Exhaustive,
}

impl Algo {
    fn name(self) -> &'static str {
        match self {
            Algo::Queyranne => "queyranne",
            Algo::Naive => "naive",
            Algo::Exhaustive => "exhaustive",
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sizes to time; overrides --min-n/--max-n.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long, default_value_t = 10)]
    pub min_n: usize,
    #[arg(long, default_value_t = 16)]
    pub max_n: usize,
    /// Double n from --min-n instead of stepping by one.
    #[arg(long)]
    pub doubling: bool,
    #[arg(long, value_delimiter = ',', default_value = "queyranne,exhaustive")]
    pub algos: Vec<Algo>,
    /// Samples drawn per system.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Repetitions per cell; the fastest is kept.
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CmlArgs {
    /// Number of lattice sites.
    #[arg(long, default_value_t = 30)]
    pub sites: usize,
    #[arg(long, default_value_t = 1.8950)]
    pub a: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Steps kept after the transient.
    #[arg(long, default_value_t = 20_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1000)]
    pub transient: usize,
    /// 1-based site left of the weakened link.
    #[arg(long, default_value_t = 20)]
    pub weak_link: usize,
}

impl CmlArgs {
    fn params(&self, delta: f64, seed: u64) -> CliResult<CmlParams> {
        if self.weak_link == 0 {
            return Err(CliError::input("--weak-link is 1-based"));
        }
        let p = CmlParams {
            n: self.sites,
            a: self.a,
            eps: self.eps,
            delta,
            t_total: self.steps,
            t_transient: self.transient,
            seed,
            weak_link_site: self.weak_link - 1,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct CmlSweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,0.125,0.25,0.375,0.5")]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub cml: CmlArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write one JSON report per run, one per line.
    #[arg(long)]
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Property {
    Submodular,
    Symmetric,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, value_enum)]
    pub property: Property,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Two or more internally correlated blocks of variables.
    Blocks {
        #[arg(long, default_value_t = 20)]
        block_size: usize,
        #[arg(long, default_value_t = 2)]
        blocks: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Weight of the shared within-block component.
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coupled logistic map lattice with one weakened link.
    Cml {
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[command(flatten)]
        cml: CmlArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independent standard normal variables.
    Gaussian {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Bipartition(a) => {
            let out = a.out.clone();
            write_report(&bipartition(&a)?, out)
        }
        Command::Kpartition(a) => {
            let out = a.out.clone();
            write_report(&kpartition(&a)?, out)
        }
        Command::Bench(a) => bench(&a),
        Command::CmlSweep(a) => cml_sweep(&a),
        Command::Check(a) => check(&a),
        Command::Gen(g) => generate(&g),
    }
}

fn write_report(report: &RunReport, out: Option<PathBuf>) -> CliResult<()> {
    let mut w = output(out.as_deref())?;
    writeln!(w, "{}", report.to_json()?)?;
    w.flush()?;
    Ok(())
}

fn sorted_pair(r: &BipartitionResult) -> Vec<Subset> {
    let mut blocks = vec![r.subset.clone(), r.complement()];
    blocks.sort_by_key(|b| b.first());
    blocks
}

pub fn bipartition(a: &BipartitionArgs) -> CliResult<RunReport> {
    let input = load_system(&a.input.input, a.input.input_kind, a.input.labels.clone())?;
    let sys = &input.system;
    let r = if a.exhaustive { exhaustive_bipartition_gaussian(sys)? } else { minimize_bipartition_gaussian(sys)? };
    let builder = ReportBuilder {
        command: "bipartition",
        method: if a.exhaustive { "exhaustive" } else { "queyranne" },
        optimal: true,
        input: input.descriptor,
        labels: input.labels,
        jitter: sys.jitter(),
        seed: None,
    };
    Ok(builder.finish(&sorted_pair(&r), r.loss, r.oracle_calls, r.wall_time.as_secs_f64()))
}

pub fn kpartition(a: &KpartitionArgs) -> CliResult<RunReport> {
    let input = load_system(&a.input.input, a.input.input_kind, a.input.labels.clone())?;
    let sys = &input.system;
    let n = sys.n();
    if a.k < 2 || a.k > n {
        return Err(CliError::input(format!("--k {} is out of range for {n} variables (need 2 <= k <= n)", a.k)));
    }
    let (method, p) = if a.hierarchical {
        ("hierarchical", greedy_kpartition(sys, a.k)?)
    } else if a.exhaustive {
        ("exhaustive", exhaustive_kpartition(sys, a.k)?)
    } else {
        ("recursive", minimize_kpartition(sys, a.k)?)
    };
    let builder = ReportBuilder {
        command: "kpartition",
        method,
        optimal: !a.hierarchical,
        input: input.descriptor,
        labels: input.labels,
        jitter: sys.jitter(),
        seed: None,
    };
    Ok(builder.finish(&p.blocks, p.loss, p.oracle_calls, p.wall_time.as_secs_f64()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub algo: &'static str,
    pub wall_time: f64,
    pub oracle_calls: u64,
    pub loss: f64,
}

fn bench_sizes(a: &BenchArgs) -> CliResult<Vec<usize>> {
    let ns = match &a.ns {
        Some(ns) => ns.clone(),
        None if a.doubling => {
            let mut ns = Vec::new();
            let mut n = a.min_n.max(1);
            while n <= a.max_n {
                ns.push(n);
                n *= 2;
            }
            ns
        }
        None => (a.min_n..=a.max_n).collect(),
    };
    if ns.is_empty() || ns.iter().any(|&n| n < 2) {
        return Err(CliError::input("bench sizes must be nonempty and at least 2"));
    }
    Ok(ns)
}

/// Runs the timing sweep serially; concurrent cells would distort each other's timings.
pub fn bench_rows(a: &BenchArgs) -> CliResult<Vec<BenchRow>> {
    let ns = bench_sizes(a)?;
    if a.reps == 0 {
        return Err(CliError::input("--reps must be positive"));
    }
    let mut rows = Vec::new();
    for &n in &ns {
        let sys = covariance_from_samples(&gen_random_gaussian(n, a.samples, derive_seed(a.seed, &[n as u64]))?)?;
        for &algo in &a.algos {
            if algo == Algo::Exhaustive && n > MAX_EXHAUSTIVE_BIPARTITION {
                eprintln!("skipping exhaustive at n = {n} (cap {MAX_EXHAUSTIVE_BIPARTITION})");
                continue;
            }
            let mut best: Option<BenchRow> = None;
            for _ in 0..a.reps {
                let started = Instant::now();
                let r = match algo {
                    Algo::Queyranne => minimize_bipartition_gaussian(&sys)?,
                    Algo::Naive => minimize_bipartition(&sys.mi_oracle(), &GroundSet::new(n)?)?,
                    Algo::Exhaustive => exhaustive_bipartition_gaussian(&sys)?,
                };
                let wall_time = started.elapsed().as_secs_f64();
                if best.as_ref().is_none_or(|b| wall_time < b.wall_time) {
                    best =
                        Some(BenchRow { n, algo: algo.name(), wall_time, oracle_calls: r.oracle_calls, loss: r.loss });
                }
            }
            rows.extend(best);
        }
    }
    rows.sort_by(|x, y| x.algo.cmp(y.algo).then(x.n.cmp(&y.n)));
    Ok(rows)
}

fn bench(a: &BenchArgs) -> CliResult<()> {
    let rows = bench_rows(a)?;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    for &algo in &a.algos {
        let cells: Vec<&BenchRow> = rows.iter().filter(|r| r.algo == algo.name()).collect();
        if cells.len() < 2 {
            continue;
        }
        let ns: Vec<usize> = cells.iter().map(|r| r.n).collect();
        let ts: Vec<f64> = cells.iter().map(|r| r.wall_time).collect();
        match algo {
            Algo::Exhaustive => eprintln!("{}: log2 T ~ {:.3} n", algo.name(), semilog_slope(&ns, &ts)),
            _ => eprintln!("{}: log2 T ~ {:.3} log2 n", algo.name(), loglog_slope(&ns, &ts)),
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub p_hat: f64,
    pub runs: usize,
    pub hits: usize,
    pub redraws: u32,
    pub seed: u64,
}

/// Every `(delta, run)` cell in parallel, each seeded from the master seed.
pub fn sweep_runs(a: &CmlSweepArgs) -> CliResult<Vec<(usize, CmlParams, CmlRun, f64)>> {
    if a.runs == 0 || a.deltas.is_empty() {
        return Err(CliError::input("need at least one delta and one run"));
    }
    let cells: Vec<(usize, CmlParams)> = a
        .deltas
        .iter()
        .enumerate()
        .flat_map(|(di, &delta)| (0..a.runs).map(move |r| (di, delta, r)))
        .map(|(di, delta, r)| Ok((di, a.cml.params(delta, sweep_seed(a.seed, di, r))?)))
        .collect::<CliResult<_>>()?;
    cells
        .into_par_iter()
        .map(|(di, p)| {
            let started = Instant::now();
            let run = cml_run(&p)?;
            Ok((di, p, run, started.elapsed().as_secs_f64()))
        })
        .collect()
}

fn cml_report(p: &CmlParams, run: &CmlRun, wall_time: f64) -> RunReport {
    let params = BTreeMap::from([
        ("sites".to_string(), p.n as f64),
        ("a".to_string(), p.a),
        ("eps".to_string(), p.eps),
        ("delta".to_string(), p.delta),
        ("steps".to_string(), p.t_total as f64),
        ("transient".to_string(), p.t_transient as f64),
        ("weak_link".to_string(), (p.weak_link_site + 1) as f64),
    ]);
    let mut blocks = vec![run.smaller_side.clone(), run.smaller_side.complement()];
    blocks.sort_by_key(|b| b.first());
    ReportBuilder {
        command: "cml-sweep",
        method: "queyranne",
        optimal: true,
        input: InputDescriptor::Generator { name: "cml".to_string(), params },
        labels: None,
        jitter: 0.0,
        seed: Some(run.seed),
    }
    .finish(&blocks, run.loss, run.oracle_calls, wall_time)
}

fn cml_sweep(a: &CmlSweepArgs) -> CliResult<()> {
    let runs = sweep_runs(a)?;
    let mut w = csv::Writer::from_writer(output(a.out.as_deref())?);
    for (di, &delta) in a.deltas.iter().enumerate() {
        let cell: Vec<CmlRun> = runs.iter().filter(|r| r.0 == di).map(|r| r.2.clone()).collect();
        let s = summarize(delta, &cell);
        w.serialize(SweepRow { delta, p_hat: s.p_hat, runs: s.runs, hits: s.hits, redraws: s.redraws, seed: a.seed })?;
    }
    w.flush()?;
    if let Some(path) = &a.reports {
        let mut out = output(Some(path))?;
        for (_, p, run, secs) in &runs {
            writeln!(out, "{}", serde_json::to_string(&cml_report(p, run, *secs))?)?;
        }
        out.flush()?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub property: &'static str,
    pub n: usize,
    pub trials: usize,
    pub violations: usize,
    /// Worst violation found; 0 when none.
    pub max_violation: f64,
    pub min_margin: f64,
    pub max_margin: f64,
    pub passed: bool,
}

pub fn check_summary(a: &CheckArgs) -> CliResult<CheckSummary> {
    if a.trials == 0 {
        return Err(CliError::input("--trials must be positive"));
    }
    let input = load_system(&a.input.input, a.input.input_kind, a.input.labels.clone())?;
    let sys = &input.system;
    let ground = GroundSet::new(sys.n())?;
    let (name, r): (_, PropertyReport) = match a.property {
        Property::Submodular => ("submodular", check_submodular(&sys.mi_oracle(), &ground, a.trials, a.tol, a.seed)),
        Property::Symmetric => ("symmetric", check_symmetric(&sys.mi_oracle(), &ground, a.trials, a.tol, a.seed)),
    };
    Ok(CheckSummary {
        property: name,
        n: sys.n(),
        trials: r.trials,
        violations: r.violations.len(),
        max_violation: r.max_violation,
        min_margin: r.min_margin,
        max_margin: r.max_margin,
        passed: r.passed(),
    })
}

fn check(a: &CheckArgs) -> CliResult<()> {
    let summary = check_summary(a)?;
    let mut w = output(a.out.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&summary)?)?;
    w.flush()?;
    Ok(())
}

fn generate(g: &GenCommand) -> CliResult<()> {
    let (data, prefix, out) = match g {
        GenCommand::Blocks { block_size, blocks, samples, lambda, seed, out } => {
            let p = BlockParams {
                block_size: *block_size,
                n_blocks: *blocks,
                samples: *samples,
                lambda: *lambda,
                seed: *seed,
            };
            (gen_block_correlated(&p)?, "x", out)
        }
        GenCommand::Cml { delta, cml, seed, out } => (simulate_cml(&cml.params(*delta, *seed)?)?, "site", out),
        GenCommand::Gaussian { n, samples, seed, out } => (gen_random_gaussian(*n, *samples, *seed)?, "x", out),
    };
    let header = column_labels(prefix, data.ncols());
    write_table(output(out.as_deref())?, Some(&header), &data)
}
