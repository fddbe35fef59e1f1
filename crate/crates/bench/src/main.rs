use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mtea_bench::experiment::{run_experiment, run_synthetic, summarize_synthetic, Algorithm, ExperimentConfig};
use mtea_bench::output::{read_summary, write_outputs, write_synthetic};
use mtea_bench::stats::{summarize, StatsSummary};
use mtea_bench::synthetic::parse_grid;
use mtea_core::problems::{parse_tsplib, parse_tsplib_tour};

#[derive(Parser)]
#[command(name = "mtea", version, about = "Multitask evolution with explicit similarity-driven transfer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an algorithm on a benchmark and write CSV/JSON outputs.
    Run(RunArgs),
    /// Sweep synthetic circle tasks of controlled similarity.
    Synth(SynthArgs),
    /// Compare the final bests of two output directories.
    Stats(StatsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark name or comma-separated instance files.
    #[arg(long)]
    benchmark: Option<String>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    algo: Option<Algorithm>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    gens: Option<usize>,
    #[arg(long)]
    eps: Option<usize>,
    #[arg(long)]
    lambda: Option<usize>,
    #[arg(long)]
    alpha: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Base TSPLIB instance.
    #[arg(long)]
    base: PathBuf,
    /// Optimal tour of the base instance.
    #[arg(long)]
    opt: PathBuf,
    #[arg(long, default_value = "0:1:0.05")]
    sim_grid: String,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    gens: Option<usize>,
    #[arg(long, default_value = "out/synthetic")]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Output directory of the algorithm under test.
    #[arg(long)]
    subject: PathBuf,
    /// Output directory of the baseline.
    #[arg(long)]
    reference: Option<PathBuf>,
}

fn resolve_config(args: RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let env_dir = args.data_dir.is_none() && args.config.is_none();
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = args.$f { cfg.$f = v; })* };
    }
    set!(benchmark, data_dir, algo, runs, pop, gens, eps, lambda, alpha, seed, out);
    if env_dir {
        if let Ok(dir) = std::env::var("MTEA_DATA_DIR") {
            cfg.data_dir = dir.into();
        }
    }
    Ok(cfg)
}

fn print_table(stats: &StatsSummary) {
    for t in &stats.tasks {
        match &t.reference {
            Some(c) => println!(
                "T{:<3} {:<14} {:>14.2} ({:>10.2})   ref {:>14.2} ({:>10.2}) {}  p={:.4}",
                t.task + 1,
                t.name,
                t.mean,
                t.std,
                c.mean,
                c.std,
                c.mark.symbol(),
                c.p_value
            ),
            None => println!("T{:<3} {:<14} {:>14.2} ({:>10.2})", t.task + 1, t.name, t.mean, t.std),
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => {
            let cfg = resolve_config(args)?;
            let set = run_experiment(&cfg).with_context(|| format!("running {}", cfg.benchmark))?;
            write_outputs(&set, &cfg.out).with_context(|| format!("writing {}", cfg.out.display()))?;
            print_table(&summarize(&set.names(), &set.finals(), None)?);
            eprintln!("wrote {}", cfg.out.display());
        }
        Command::Synth(args) => {
            let read = |p: &PathBuf| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
            let base = parse_tsplib(&read(&args.base)?).context("parsing base instance")?;
            let tour = parse_tsplib_tour(&read(&args.opt)?).context("parsing optimal tour")?;
            let grid = parse_grid(&args.sim_grid)?;
            let mut cfg = ExperimentConfig {
                runs: args.runs,
                seed: args.seed,
                ..ExperimentConfig::default()
            };
            if let Some(g) = args.gens {
                cfg.gens = g;
            }
            let records = run_synthetic(&cfg, &base, &tour.tour, &grid)?;
            let levels = summarize_synthetic(&records)?;
            write_synthetic(&records, &levels, &args.out)?;
            for l in &levels {
                println!(
                    "s={:<5} achieved={:.3}  mtea={:.2}  sto={:.2}  p={:.4}",
                    l.target_similarity, l.achieved_similarity, l.mtea_mean, l.sto_mean, l.p_value
                );
            }
        }
        Command::Stats(args) => {
            let subject = read_summary(&args.subject)?;
            let names: Vec<String> = subject.tasks.iter().map(|t| t.name.clone()).collect();
            let reference = args.reference.as_deref().map(read_summary).transpose()?;
            if let Some(r) = &reference {
                if r.tasks.len() != names.len() {
                    bail!("subject has {} tasks, reference has {}", names.len(), r.tasks.len());
                }
            }
            let stats = summarize(&names, &subject.final_best, reference.as_ref().map(|r| r.final_best.as_slice()))?;
            print_table(&stats);
            println!("{}", serde_json::to_string_pretty(&stats)?);
        }
    }
    Ok(())
}
