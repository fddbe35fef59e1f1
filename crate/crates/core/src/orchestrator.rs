//! The multitask main loop with periodic explicit transfer, its
//! no-growth ablation, and the unified-space MFEA baseline.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{
    binary_tournament, generation_step, improve, order_crossover, swap_mutation, Budget, EvoParams,
    Individual, Population,
};
use crate::problems::{Permutation, ProblemInstance};
use crate::transfer::{transfer_round, transfer_round_direct, TransferOutcome, DEFAULT_GROWTH_PASSES};
use crate::unification::{build_similarity_matrix_counted, transfer_strengths, SimilarityMatrix};

#[derive(Clone, Debug)]
pub struct MultitaskConfig {
    pub instances: Vec<ProblemInstance>,
    pub evo: EvoParams,
    pub generations: usize,
    /// Seed-candidate budget per target and round.
    pub eps: usize,
    /// Seeds inserted per target and round.
    pub lambda: usize,
    /// Generations between transfer rounds.
    pub alpha: usize,
    /// Neighbourhood passes granted to each seed's growth.
    pub growth_passes: usize,
    /// Insert the fittest source members directly, without ability ranking or growth.
    pub no_ts: bool,
    pub seed: u64,
}

impl MultitaskConfig {
    /// Defaults: N=30, G=300, eps=10, lambda=3, alpha=10.
    pub fn new(instances: Vec<ProblemInstance>, seed: u64) -> Self {
        MultitaskConfig {
            instances,
            evo: EvoParams::default(),
            generations: 300,
            eps: 10,
            lambda: 3,
            alpha: 10,
            growth_passes: DEFAULT_GROWTH_PASSES,
            no_ts: false,
            seed,
        }
    }

    pub fn k(&self) -> usize {
        self.instances.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        let n = self.evo.pop_size;
        self.evo.validate()?;
        let fail = |m: String| Err(Error::Config(m));
        if k == 0 {
            return fail("no instances".into());
        }
        if self.generations == 0 {
            return fail("generations must be at least 1".into());
        }
        if self.alpha == 0 {
            return fail("alpha must be at least 1".into());
        }
        if self.lambda == 0 || self.lambda > self.eps {
            return fail(format!("need 1 <= lambda <= eps, got lambda={} eps={}", self.lambda, self.eps));
        }
        if self.eps > k * n {
            return fail(format!("eps={} exceeds K*N={}", self.eps, k * n));
        }
        if self.lambda > n {
            return fail(format!("lambda={} exceeds the population size {n}", self.lambda));
        }
        Ok(())
    }
}

/// Everything recorded about one seeded run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultitaskRun {
    /// `traces[k][g]`: best fitness of task `k` after generation `g` (0 = initial).
    pub traces: Vec<Vec<f64>>,
    pub best: Vec<Individual>,
    /// One matrix per transfer round.
    pub similarity: Vec<SimilarityMatrix>,
    /// `interactions[t][s]`: seeds from source `s` inserted into target `t`.
    pub interactions: Vec<Vec<u64>>,
    pub evolution_evals: Vec<u64>,
    pub transfer_evals: Vec<u64>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl MultitaskRun {
    pub(crate) fn single(trace: Vec<f64>, best: Individual, evals: u64, wall_time: Duration) -> Self {
        MultitaskRun {
            traces: vec![trace],
            best: vec![best],
            similarity: Vec::new(),
            interactions: vec![vec![0]],
            evolution_evals: vec![evals],
            transfer_evals: vec![0],
            wall_time,
        }
    }

    pub fn k(&self) -> usize {
        self.traces.len()
    }

    pub fn final_best(&self, task: usize) -> f64 {
        self.best[task].fitness
    }

    /// Equality of everything except wall time.
    pub fn same_outcome(&self, other: &MultitaskRun) -> bool {
        self.traces == other.traces
            && self.best == other.best
            && self.similarity == other.similarity
            && self.interactions == other.interactions
            && self.evolution_evals == other.evolution_evals
            && self.transfer_evals == other.transfer_evals
    }
}

/// The RNG of task `task` under master seed `seed`.
pub fn task_rng(seed: u64, task: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task as u64);
    rng
}

/// Number of transfer rounds a run performs.
pub fn transfer_rounds(config: &MultitaskConfig) -> usize {
    if config.k() < 2 {
        0
    } else {
        config.generations / config.alpha
    }
}

pub fn run_mtea_ast(config: &MultitaskConfig) -> Result<MultitaskRun> {
    config.validate()?;
    let start = Instant::now();
    let k = config.k();
    let n = config.evo.pop_size;
    let instances = &config.instances;

    let mut rngs: Vec<ChaCha8Rng> = (0..k).map(|t| task_rng(config.seed, t)).collect();
    let mut pops = instances
        .iter()
        .zip(rngs.iter_mut())
        .map(|(inst, rng)| Population::random(inst, n, rng))
        .collect::<Result<Vec<_>>>()?;
    let mut traces: Vec<Vec<f64>> = pops.iter().map(|p| vec![p.best().fitness]).collect();
    let mut evolution_evals = vec![n as u64; k];
    let mut transfer_evals = vec![0u64; k];
    let mut interactions = vec![vec![0u64; k]; k];
    let mut similarity = Vec::new();

    for g in 1..=config.generations {
        if k >= 2 && g % config.alpha == 0 {
            let bests: Vec<Permutation> = pops.iter().map(|p| p.best().genome.clone()).collect();
            let (sim, _) = build_similarity_matrix_counted(&bests, instances)?;
            let snapshot = &pops;
            let outcomes = (0..k)
                .into_par_iter()
                .map(|t| {
                    let plan = transfer_strengths(sim.row(t), t, config.eps, config.lambda);
                    if plan.is_empty() {
                        return Ok(TransferOutcome {
                            population: snapshot[t].clone(),
                            seed_counts: vec![0; k],
                            evaluations: 0,
                        });
                    }
                    if config.no_ts {
                        transfer_round_direct(snapshot, instances, &plan)
                    } else {
                        transfer_round(snapshot, instances, &plan, config.growth_passes)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            for (t, out) in outcomes.into_iter().enumerate() {
                pops[t] = out.population;
                transfer_evals[t] += out.evaluations;
                for (s, c) in out.seed_counts.into_iter().enumerate() {
                    interactions[t][s] += c as u64;
                }
            }
            similarity.push(sim);
        } else {
            pops = pops
                .into_par_iter()
                .zip(rngs.par_iter_mut())
                .zip(instances.par_iter())
                .map(|((pop, rng), inst)| generation_step(&pop, inst, &config.evo, rng))
                .collect::<Result<Vec<_>>>()?;
            for e in &mut evolution_evals {
                *e += n as u64;
            }
        }
        for (trace, pop) in traces.iter_mut().zip(&pops) {
            trace.push(pop.best().fitness);
        }
    }

    Ok(MultitaskRun {
        traces,
        best: pops.iter().map(|p| p.best().clone()).collect(),
        similarity,
        interactions,
        evolution_evals,
        transfer_evals,
        wall_time: start.elapsed(),
    })
}

/// Keeps labels `<= task_dim`, order preserved.
pub fn decode_unified(genome: &Permutation, task_dim: usize) -> Permutation {
    Permutation::from_vec_unchecked(genome.as_slice().iter().copied().filter(|&l| l <= task_dim).collect())
}

/// Writes `decoded` back over the positions of `genome` holding labels `<= decoded.len()`.
fn embed(genome: &mut [usize], decoded: &[usize]) {
    let dim = decoded.len();
    let mut it = decoded.iter();
    for slot in genome.iter_mut().filter(|l| **l <= dim) {
        *slot = *it.next().expect("decoded length matches");
    }
}

#[derive(Clone, Debug)]
struct UnifiedMember {
    genome: Vec<usize>,
    /// Factorial costs; infinite where not evaluated.
    costs: Vec<f64>,
    skill: usize,
    scalar: f64,
}

/// Ordinal factorial ranks per task (ties to the lower index), then skill
/// factor = task of the best rank (lower task on ties) and scalar fitness `1/min rank`.
pub fn assign_skill_factors(costs: &[Vec<f64>]) -> Vec<(usize, f64)> {
    let m = costs.len();
    let k = costs.first().map_or(0, Vec::len);
    let mut ranks = vec![vec![0usize; k]; m];
    for task in 0..k {
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&a, &b| costs[a][task].total_cmp(&costs[b][task]).then(a.cmp(&b)));
        for (r, &i) in idx.iter().enumerate() {
            ranks[i][task] = r + 1;
        }
    }
    ranks
        .iter()
        .map(|row| {
            let (skill, &best) = row
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)))
                .expect("at least one task");
            (skill, 1.0 / best as f64)
        })
        .collect()
}

fn rank_members(members: &mut [UnifiedMember]) {
    let costs: Vec<Vec<f64>> = members.iter().map(|m| m.costs.clone()).collect();
    for (m, (skill, scalar)) in members.iter_mut().zip(assign_skill_factors(&costs)) {
        m.skill = skill;
        m.scalar = scalar;
    }
}

/// Multifactorial baseline over one population of `K*N` genomes of dimension `Dmax`.
pub fn run_mfea_baseline(config: &MultitaskConfig, rmp: f64) -> Result<MultitaskRun> {
    config.validate()?;
    if !(0.0..=1.0).contains(&rmp) {
        return Err(Error::Config(format!("rmp {rmp} outside [0,1]")));
    }
    let start = Instant::now();
    let k = config.k();
    let size = k * config.evo.pop_size;
    let instances = &config.instances;
    let dims: Vec<usize> = instances.iter().map(|i| i.dimension()).collect();
    let dmax = *dims.iter().max().expect("validated non-empty");
    let mut rng = task_rng(config.seed, 0);
    let mut evolution_evals = vec![0u64; k];

    let mut members: Vec<UnifiedMember> = (0..size)
        .map(|_| {
            let genome = Permutation::random(dmax, &mut rng).into_vec();
            let costs = (0..k)
                .map(|t| instances[t].cost(decode_unified(&Permutation::from_vec_unchecked(genome.clone()), dims[t]).as_slice()))
                .collect();
            UnifiedMember {
                genome,
                costs,
                skill: 0,
                scalar: 0.0,
            }
        })
        .collect();
    for e in &mut evolution_evals {
        *e += size as u64;
    }
    rank_members(&mut members);
    sort_by_scalar(&mut members);

    let task_best = |members: &[UnifiedMember], t: usize| {
        members
            .iter()
            .min_by(|a, b| a.costs[t].total_cmp(&b.costs[t]))
            .expect("non-empty")
            .clone()
    };
    let mut traces: Vec<Vec<f64>> = (0..k).map(|t| vec![task_best(&members, t).costs[t]]).collect();

    for _ in 0..config.generations {
        let mut offspring = Vec::with_capacity(size);
        while offspring.len() < size {
            let a = &members[binary_tournament(size, &mut rng)];
            let b = &members[binary_tournament(size, &mut rng)];
            let children: Vec<(Permutation, usize)> = if a.skill == b.skill || rng.gen_bool(rmp) {
                let (c1, c2) = order_crossover(
                    &Permutation::from_vec_unchecked(a.genome.clone()),
                    &Permutation::from_vec_unchecked(b.genome.clone()),
                    &mut rng,
                )?;
                let s1 = if rng.gen_bool(0.5) { a.skill } else { b.skill };
                let s2 = if rng.gen_bool(0.5) { a.skill } else { b.skill };
                let c1 = if rng.gen_bool(config.evo.mutation_prob) { swap_mutation(&c1, &mut rng) } else { c1 };
                let c2 = if rng.gen_bool(config.evo.mutation_prob) { swap_mutation(&c2, &mut rng) } else { c2 };
                vec![(c1, s1), (c2, s2)]
            } else {
                vec![
                    (swap_mutation(&Permutation::from_vec_unchecked(a.genome.clone()), &mut rng), a.skill),
                    (swap_mutation(&Permutation::from_vec_unchecked(b.genome.clone()), &mut rng), b.skill),
                ]
            };
            for (child, skill) in children {
                if offspring.len() == size {
                    break;
                }
                let mut genome = child.into_vec();
                let mut decoded = decode_unified(&Permutation::from_vec_unchecked(genome.clone()), dims[skill]).into_vec();
                let inst = &instances[skill];
                let fitness = improve(&mut decoded, inst, Budget::moves(config.evo.ls_budget_for(dims[skill])));
                embed(&mut genome, &decoded);
                let mut costs = vec![f64::INFINITY; k];
                costs[skill] = fitness;
                evolution_evals[skill] += 1;
                offspring.push(UnifiedMember {
                    genome,
                    costs,
                    skill,
                    scalar: 0.0,
                });
            }
        }
        members.extend(offspring);
        rank_members(&mut members);
        sort_by_scalar(&mut members);
        members.truncate(size);
        for (t, trace) in traces.iter_mut().enumerate() {
            trace.push(task_best(&members, t).costs[t]);
        }
    }

    let best = (0..k)
        .map(|t| {
            let m = task_best(&members, t);
            Individual {
                genome: decode_unified(&Permutation::from_vec_unchecked(m.genome), dims[t]),
                fitness: m.costs[t],
            }
        })
        .collect();
    Ok(MultitaskRun {
        traces,
        best,
        similarity: Vec::new(),
        interactions: vec![vec![0; k]; k],
        evolution_evals,
        transfer_evals: vec![0; k],
        wall_time: start.elapsed(),
    })
}

fn sort_by_scalar(members: &mut [UnifiedMember]) {
    members.sort_by(|a, b| b.scalar.total_cmp(&a.scalar));
}
