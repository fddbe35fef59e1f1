//! Seed selection by ability fitness, seed growth and nearest-Hamming insertion.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::evolution::{improve, Budget, Individual, Population};
use crate::problems::{Permutation, ProblemInstance, ProblemKind};
use crate::unification::{hamming_distance, unify_dimension, TransferPlan};

/// Default number of full neighbourhood passes granted to seed growth.
pub const DEFAULT_GROWTH_PASSES: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedCandidate {
    /// Already unified to the target dimension.
    pub genome: Permutation,
    pub source_task: usize,
    pub ability_fitness: f64,
}

/// Rank-based abilities `f(r) = 1/r` on the source and target tasks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbilityVector {
    pub v_source: f64,
    pub v_target: f64,
}

impl AbilityVector {
    pub fn from_ranks(source_rank: usize, target_rank: usize) -> Self {
        AbilityVector {
            v_source: 1.0 / source_rank as f64,
            v_target: 1.0 / target_rank as f64,
        }
    }

    pub fn fitness(&self) -> f64 {
        (self.v_source + self.v_target) / 2.0
    }
}

/// `1 +` the number of members strictly better than `value`.
pub fn factorial_rank(value: f64, pop: &Population) -> usize {
    1 + pop.members().partition_point(|m| m.fitness < value)
}

pub fn ability_fitness(
    ind: &Individual,
    source_pop: &Population,
    target_pop: &Population,
    target: &ProblemInstance,
) -> f64 {
    assess(ind, source_pop, target_pop, target).1
}

/// Maps `ind` into the target and returns the mapped genome and its ability fitness.
fn assess(
    ind: &Individual,
    source_pop: &Population,
    target_pop: &Population,
    target: &ProblemInstance,
) -> (Permutation, f64) {
    let mapped = unify_dimension(&ind.genome, target);
    let on_target = target.cost(mapped.as_slice());
    let ability = AbilityVector::from_ranks(
        factorial_rank(ind.fitness, source_pop),
        factorial_rank(on_target, target_pop),
    );
    (mapped, ability.fitness())
}

/// The `p_st` best-by-ability among the `2 p_st` fittest source members.
pub fn select_candidates(
    source_task: usize,
    source_pop: &Population,
    target_pop: &Population,
    target: &ProblemInstance,
    p_st: usize,
) -> Vec<SeedCandidate> {
    let pool = (2 * p_st).min(source_pop.len());
    let mut out: Vec<SeedCandidate> = source_pop.members()[..pool]
        .iter()
        .map(|ind| {
            let (genome, ability_fitness) = assess(ind, source_pop, target_pop, target);
            SeedCandidate {
                genome,
                source_task,
                ability_fitness,
            }
        })
        .collect();
    out.sort_by(|a, b| b.ability_fitness.total_cmp(&a.ability_fitness));
    out.truncate(p_st);
    out
}

/// Problem-matched local search with a pass budget.
pub fn grow_seed(genome: &Permutation, target: &ProblemInstance, growth_passes: usize) -> Result<Permutation> {
    if genome.len() != target.dimension() {
        return Err(contract(format!(
            "seed of length {} grown on {} (D={})",
            genome.len(),
            target.name(),
            target.dimension()
        )));
    }
    let mut v = genome.as_slice().to_vec();
    improve(&mut v, target, Budget::passes(growth_passes));
    Ok(Permutation::from_vec_unchecked(v))
}

/// Each seed replaces the nearest not-yet-replaced original member.
pub fn insert_seeds(target_pop: &Population, seeds: &[Individual], kind: ProblemKind) -> Result<Population> {
    insert_seeds_tracked(target_pop, seeds, kind).map(|(p, _)| p)
}

/// Also reports which seeds were inserted. A seed is dropped only when
/// the sole remaining original is the protected best and the seed is worse.
pub(crate) fn insert_seeds_tracked(
    target_pop: &Population,
    seeds: &[Individual],
    kind: ProblemKind,
) -> Result<(Population, Vec<bool>)> {
    let n = target_pop.len();
    if seeds.len() > n {
        return Err(contract(format!("{} seeds for a population of {n}", seeds.len())));
    }
    let mut members = target_pop.members().to_vec();
    let mut replaced = vec![false; n];
    let mut inserted = vec![false; seeds.len()];
    let best = target_pop.best().fitness;
    for (si, seed) in seeds.iter().enumerate() {
        let mut choice: Option<(usize, usize)> = None;
        for (i, m) in target_pop.members().iter().enumerate() {
            if replaced[i] || (i == 0 && seed.fitness > best) {
                continue;
            }
            let dist = hamming_distance(&seed.genome, &m.genome, kind);
            let better = match choice {
                None => true,
                Some((ci, cd)) => {
                    let cf = target_pop.members()[ci].fitness;
                    dist < cd || (dist == cd && m.fitness > cf)
                }
            };
            if better {
                choice = Some((i, dist));
            }
        }
        if let Some((i, _)) = choice {
            replaced[i] = true;
            members[i] = seed.clone();
            inserted[si] = true;
        }
    }
    Ok((Population::new(members)?, inserted))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferOutcome {
    pub population: Population,
    /// Seeds inserted per source task.
    pub seed_counts: Vec<usize>,
    /// Objective evaluations spent (candidate assessment and seed scoring).
    pub evaluations: u64,
}

/// Algorithm for one target: pool candidates, keep the top `lambda` by
/// ability, grow them, and insert them into the target population.
pub fn transfer_round(
    populations: &[Population],
    instances: &[ProblemInstance],
    plan: &TransferPlan,
    growth_passes: usize,
) -> Result<TransferOutcome> {
    let t = plan.target;
    check_round(populations, instances, plan)?;
    let target = &instances[t];
    let mut pool = Vec::with_capacity(plan.total());
    for (s, &p) in plan.strengths.iter().enumerate() {
        if p > 0 && s != t {
            pool.extend(select_candidates(s, &populations[s], &populations[t], target, p));
        }
    }
    let evaluations = pool.len() as u64;
    pool.sort_by(|a, b| b.ability_fitness.total_cmp(&a.ability_fitness));
    pool.truncate(plan.lambda.min(populations[t].len()));
    let mut seeds = Vec::with_capacity(pool.len());
    for c in &pool {
        let genome = grow_seed(&c.genome, target, growth_passes)?;
        let fitness = target.cost(genome.as_slice());
        seeds.push(Individual { genome, fitness });
    }
    finish_round(populations, instances, plan, &pool_sources(&pool), seeds, evaluations)
}

/// Ablation: the best `p` members of each source by source fitness are
/// unified and inserted directly, with no ability ranking and no growth.
pub fn transfer_round_direct(
    populations: &[Population],
    instances: &[ProblemInstance],
    plan: &TransferPlan,
) -> Result<TransferOutcome> {
    let t = plan.target;
    check_round(populations, instances, plan)?;
    let target = &instances[t];
    let cap = populations[t].len();
    let mut sources = Vec::new();
    let mut seeds = Vec::new();
    for (s, &p) in plan.strengths.iter().enumerate() {
        if s == t {
            continue;
        }
        for ind in populations[s].members().iter().take(p) {
            if seeds.len() == cap {
                break;
            }
            let genome = unify_dimension(&ind.genome, target);
            let fitness = target.cost(genome.as_slice());
            seeds.push(Individual { genome, fitness });
            sources.push(s);
        }
    }
    let evaluations = seeds.len() as u64;
    finish_round(populations, instances, plan, &sources, seeds, evaluations)
}

fn pool_sources(pool: &[SeedCandidate]) -> Vec<usize> {
    pool.iter().map(|c| c.source_task).collect()
}

fn check_round(populations: &[Population], instances: &[ProblemInstance], plan: &TransferPlan) -> Result<()> {
    let k = populations.len();
    if instances.len() != k || plan.strengths.len() != k || plan.target >= k {
        return Err(contract(format!(
            "transfer plan for target {} over {} strengths, {k} populations, {} instances",
            plan.target,
            plan.strengths.len(),
            instances.len()
        )));
    }
    Ok(())
}

fn finish_round(
    populations: &[Population],
    instances: &[ProblemInstance],
    plan: &TransferPlan,
    sources: &[usize],
    seeds: Vec<Individual>,
    evaluations: u64,
) -> Result<TransferOutcome> {
    let t = plan.target;
    let k = populations.len();
    let (population, inserted) = insert_seeds_tracked(&populations[t], &seeds, instances[t].kind())?;
    let mut seed_counts = vec![0; k];
    for (&s, ok) in sources.iter().zip(inserted) {
        if ok {
            seed_counts[s] += 1;
        }
    }
    Ok(TransferOutcome {
        population,
        seed_counts,
        evaluations: evaluations + seeds.len() as u64,
    })
}
