//! Experiment configuration and seeded multi-run execution.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mtea_core::evolution::run_sto;
use mtea_core::orchestrator::{run_mfea_baseline, run_mtea_ast, task_rng, MultitaskConfig, MultitaskRun};
use mtea_core::{EvoParams, Permutation, ProblemInstance, ProblemKind};

use crate::benchmark::resolve_instances;
use crate::stats::{mean, std_dev, wilcoxon_rank_sum};
use crate::synthetic::{make_synthetic_pair, SynthRecord};
use crate::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    MteaAst,
    MteaAstNots,
    Sto,
    Mfea,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Benchmark name, or comma-separated instance files.
    pub benchmark: String,
    pub data_dir: PathBuf,
    pub algo: Algorithm,
    pub runs: usize,
    pub pop: usize,
    pub gens: usize,
    pub eps: usize,
    pub lambda: usize,
    pub alpha: usize,
    pub mutation_prob: f64,
    pub ls_budget: Option<usize>,
    pub growth_passes: usize,
    pub rmp: f64,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            benchmark: "TSP".into(),
            data_dir: PathBuf::from("data"),
            algo: Algorithm::MteaAst,
            runs: 20,
            pop: 30,
            gens: 300,
            eps: 10,
            lambda: 3,
            alpha: 10,
            mutation_prob: 0.1,
            ls_budget: None,
            growth_passes: mtea_core::transfer::DEFAULT_GROWTH_PASSES,
            rmp: 0.9,
            seed: 1,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn evo(&self) -> EvoParams {
        EvoParams {
            pop_size: self.pop,
            mutation_prob: self.mutation_prob,
            ls_budget: self.ls_budget,
        }
    }

    pub fn multitask(&self, instances: Vec<ProblemInstance>, seed: u64) -> MultitaskConfig {
        MultitaskConfig {
            instances,
            evo: self.evo(),
            generations: self.gens,
            eps: self.eps,
            lambda: self.lambda,
            alpha: self.alpha,
            growth_passes: self.growth_passes,
            no_ts: self.algo == Algorithm::MteaAstNots,
            seed,
        }
    }

    /// Seed of run `r`.
    pub fn run_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(BenchError::Config("runs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskInfo {
    pub name: String,
    pub kind: ProblemKind,
    pub dimension: usize,
}

#[derive(Clone, Debug)]
pub struct RunSet {
    pub config: ExperimentConfig,
    pub tasks: Vec<TaskInfo>,
    pub runs: Vec<MultitaskRun>,
}

impl RunSet {
    /// `finals[run][task]`.
    pub fn finals(&self) -> Vec<Vec<f64>> {
        self.runs.iter().map(|r| r.best.iter().map(|b| b.fitness).collect()).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.tasks.iter().map(|t| t.name.clone()).collect()
    }
}

/// One seeded run of `algo` over `instances`.
pub fn run_once(config: &ExperimentConfig, instances: &[ProblemInstance], seed: u64) -> Result<MultitaskRun> {
    let mt = config.multitask(instances.to_vec(), seed);
    Ok(match config.algo {
        Algorithm::MteaAst | Algorithm::MteaAstNots => run_mtea_ast(&mt)?,
        Algorithm::Mfea => run_mfea_baseline(&mt, config.rmp)?,
        Algorithm::Sto => run_sto_tasks(&mt)?,
    })
}

/// Independent single-task runs, one per instance, gathered as one run.
pub fn run_sto_tasks(config: &MultitaskConfig) -> Result<MultitaskRun> {
    config.validate()?;
    let k = config.k();
    let parts = config
        .instances
        .par_iter()
        .enumerate()
        .map(|(t, inst)| run_sto(inst, &config.evo, config.generations, &mut task_rng(config.seed, t)))
        .collect::<mtea_core::Result<Vec<_>>>()?;
    let mut run = MultitaskRun {
        traces: Vec::with_capacity(k),
        best: Vec::with_capacity(k),
        similarity: Vec::new(),
        interactions: vec![vec![0; k]; k],
        evolution_evals: Vec::with_capacity(k),
        transfer_evals: vec![0; k],
        wall_time: Default::default(),
    };
    for p in parts {
        run.traces.extend(p.traces);
        run.best.extend(p.best);
        run.evolution_evals.extend(p.evolution_evals);
        run.wall_time = run.wall_time.max(p.wall_time);
    }
    Ok(run)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSet> {
    config.validate()?;
    let instances = resolve_instances(&config.benchmark, &config.data_dir)?;
    run_on(config, instances)
}

/// As [`run_experiment`] with instances already loaded.
pub fn run_on(config: &ExperimentConfig, instances: Vec<ProblemInstance>) -> Result<RunSet> {
    config.validate()?;
    let runs = (0..config.runs)
        .into_par_iter()
        .map(|r| run_once(config, &instances, config.run_seed(r)))
        .collect::<Result<Vec<_>>>()?;
    let tasks = instances
        .iter()
        .map(|i| TaskInfo {
            name: i.name().to_string(),
            kind: i.kind(),
            dimension: i.dimension(),
        })
        .collect();
    Ok(RunSet {
        config: config.clone(),
        tasks,
        runs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthLevel {
    pub level: usize,
    pub target_similarity: f64,
    pub achieved_similarity: f64,
    pub mtea_mean: f64,
    pub mtea_std: f64,
    pub sto_mean: f64,
    pub sto_std: f64,
    pub p_value: f64,
}

/// For every grid level and run: build a fresh synthetic pair, solve it as
/// a two-task problem, and solve the base alone with the same task stream.
pub fn run_synthetic(
    config: &ExperimentConfig,
    base: &ProblemInstance,
    optimum: &Permutation,
    grid: &[f64],
) -> Result<Vec<SynthRecord>> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|l| (0..config.runs).map(move |r| (l, r))).collect();
    jobs.into_par_iter()
        .map(|(level, run_id)| {
            let run_seed = config.seed.wrapping_add((level * config.runs + run_id) as u64);
            let mut pair_rng = ChaCha8Rng::seed_from_u64(run_seed);
            pair_rng.set_stream(u64::MAX);
            let pair = make_synthetic_pair(base, optimum, grid[level], &mut pair_rng)?;
            let mt = MultitaskConfig {
                no_ts: false,
                ..config.multitask(vec![base.clone(), pair.derived], run_seed)
            };
            let mtea = run_mtea_ast(&mt)?;
            let sto = run_sto(base, &mt.evo, mt.generations, &mut task_rng(run_seed, 0))?;
            Ok(SynthRecord {
                level,
                target_similarity: grid[level],
                run_id,
                achieved_similarity: pair.achieved_similarity,
                mtea_best: mtea.final_best(0),
                sto_best: sto.final_best(0),
            })
        })
        .collect()
}

pub fn summarize_synthetic(records: &[SynthRecord]) -> Result<Vec<SynthLevel>> {
    let levels = records.iter().map(|r| r.level).max().map_or(0, |m| m + 1);
    (0..levels)
        .map(|level| {
            let rs: Vec<&SynthRecord> = records.iter().filter(|r| r.level == level).collect();
            let m: Vec<f64> = rs.iter().map(|r| r.mtea_best).collect();
            let s: Vec<f64> = rs.iter().map(|r| r.sto_best).collect();
            let a: Vec<f64> = rs.iter().map(|r| r.achieved_similarity).collect();
            Ok(SynthLevel {
                level,
                target_similarity: rs[0].target_similarity,
                achieved_similarity: mean(&a),
                mtea_mean: mean(&m),
                mtea_std: std_dev(&m),
                sto_mean: mean(&s),
                sto_std: std_dev(&s),
                p_value: wilcoxon_rank_sum(&m, &s)?.p_value,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use mtea_core::problems::Matrix;

    fn tsp(n: usize, seed: u64) -> ProblemInstance {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.gen_range(1..100) as f64;
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        ProblemInstance::tsp(format!("t{seed}"), m).unwrap()
    }

    fn small(algo: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            algo,
            runs: 3,
            pop: 8,
            gens: 12,
            eps: 4,
            lambda: 2,
            alpha: 4,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn toml_round_trip_and_defaults() {
        let cfg = ExperimentConfig::from_toml("benchmark = \"CVRP\"\nalgo = \"mtea-ast-nots\"\nruns = 5\n").unwrap();
        assert_eq!(cfg.benchmark, "CVRP");
        assert_eq!(cfg.algo, Algorithm::MteaAstNots);
        assert_eq!((cfg.runs, cfg.pop, cfg.eps), (5, 30, 10));
        assert!(ExperimentConfig::from_toml("popsize = 3").is_err());
    }

    #[test]
    fn every_algorithm_runs() {
        let insts = vec![tsp(8, 1), tsp(10, 2)];
        for algo in [Algorithm::MteaAst, Algorithm::MteaAstNots, Algorithm::Sto, Algorithm::Mfea] {
            let set = run_on(&small(algo), insts.clone()).unwrap();
            assert_eq!(set.runs.len(), 3);
            for run in &set.runs {
                assert_eq!(run.traces.len(), 2);
                assert!(run.traces.iter().all(|t| t.len() == 13));
            }
        }
    }

    #[test]
    fn sto_tasks_match_single_runs() {
        let insts = vec![tsp(8, 1), tsp(10, 2)];
        let cfg = small(Algorithm::Sto);
        let run = run_once(&cfg, &insts, 9).unwrap();
        let solo = run_sto(&insts[1], &cfg.evo(), cfg.gens, &mut task_rng(9, 1)).unwrap();
        assert_eq!(run.traces[1], solo.traces[0]);
    }
}
