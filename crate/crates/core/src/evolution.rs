//! Genetic operators, problem-matched local search and the single-task hybrid GA.

use std::cmp::Ordering;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::orchestrator::MultitaskRun;
use crate::problems::{Matrix, Permutation, ProblemData, ProblemInstance};

/// Smallest decrease that counts as an improving move.
pub(crate) const IMPROVEMENT_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Permutation,
    pub fitness: f64,
}

impl Individual {
    pub fn evaluated(genome: Permutation, instance: &ProblemInstance) -> Result<Self> {
        let fitness = instance.evaluate(&genome)?;
        Ok(Individual { genome, fitness })
    }
}

fn by_fitness(a: &Individual, b: &Individual) -> Ordering {
    a.fitness.total_cmp(&b.fitness)
}

/// Members of one task, sorted ascending by fitness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    members: Vec<Individual>,
}

impl Population {
    /// Sorts `members` (stably) by fitness.
    pub fn new(mut members: Vec<Individual>) -> Result<Self> {
        if members.is_empty() {
            return Err(contract("population must not be empty"));
        }
        if members.iter().any(|m| m.fitness.is_nan()) {
            return Err(contract("population member with NaN fitness"));
        }
        members.sort_by(by_fitness);
        Ok(Population { members })
    }

    /// `n` uniformly random permutations of the instance's labels.
    pub fn random<R: Rng + ?Sized>(instance: &ProblemInstance, n: usize, rng: &mut R) -> Result<Self> {
        let d = instance.dimension();
        let members = (0..n)
            .map(|_| {
                let genome = Permutation::random(d, rng);
                let fitness = instance.cost(genome.as_slice());
                Individual { genome, fitness }
            })
            .collect();
        Population::new(members)
    }

    pub(crate) fn from_sorted_unchecked(members: Vec<Individual>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0].fitness <= w[1].fitness));
        Population { members }
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn into_members(self) -> Vec<Individual> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> &Individual {
        &self.members[0]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvoParams {
    pub pop_size: usize,
    pub mutation_prob: f64,
    /// Improving moves per local-search call; `None` means the task dimension.
    pub ls_budget: Option<usize>,
}

impl Default for EvoParams {
    fn default() -> Self {
        EvoParams {
            pop_size: 30,
            mutation_prob: 0.1,
            ls_budget: None,
        }
    }
}

impl EvoParams {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::Config(format!("pop_size must be at least 2, got {}", self.pop_size)));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(Error::Config(format!("mutation_prob {} outside [0,1]", self.mutation_prob)));
        }
        Ok(())
    }

    pub fn ls_budget_for(&self, dimension: usize) -> usize {
        self.ls_budget.unwrap_or(dimension)
    }
}

/// Limits for one local-search call: improving moves applied and full
/// neighbourhood passes started.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub moves: usize,
    pub passes: usize,
}

impl Budget {
    pub const UNLIMITED: Budget = Budget {
        moves: usize::MAX,
        passes: usize::MAX,
    };

    pub fn moves(moves: usize) -> Self {
        Budget {
            moves,
            passes: usize::MAX,
        }
    }

    pub fn passes(passes: usize) -> Self {
        Budget {
            moves: usize::MAX,
            passes,
        }
    }

    fn is_zero(self) -> bool {
        self.moves == 0 || self.passes == 0
    }
}

/// OX with explicit inclusive cut points `a <= b` (0-based).
pub fn order_crossover_with_cuts(
    p1: &Permutation,
    p2: &Permutation,
    a: usize,
    b: usize,
) -> Result<(Permutation, Permutation)> {
    if p1.len() != p2.len() {
        return Err(contract(format!("crossover of lengths {} and {}", p1.len(), p2.len())));
    }
    if a > b || b >= p1.len() {
        return Err(contract(format!("cut points ({a},{b}) invalid for length {}", p1.len())));
    }
    Ok((
        ox_child(p1.as_slice(), p2.as_slice(), a, b),
        ox_child(p2.as_slice(), p1.as_slice(), a, b),
    ))
}

fn ox_child(keep: &[usize], fill: &[usize], a: usize, b: usize) -> Permutation {
    let d = keep.len();
    let mut used = vec![false; d + 1];
    for &x in &keep[a..=b] {
        used[x] = true;
    }
    let mut child = Vec::with_capacity(d);
    let mut donors = fill.iter().copied().filter(|&x| !used[x]);
    for pos in 0..d {
        if (a..=b).contains(&pos) {
            child.push(keep[pos]);
        } else {
            child.push(donors.next().expect("donor count matches free slots"));
        }
    }
    Permutation::from_vec_unchecked(child)
}

/// Classic order crossover with uniformly drawn cut points.
pub fn order_crossover<R: Rng + ?Sized>(
    p1: &Permutation,
    p2: &Permutation,
    rng: &mut R,
) -> Result<(Permutation, Permutation)> {
    if p1.len() != p2.len() {
        return Err(contract(format!("crossover of lengths {} and {}", p1.len(), p2.len())));
    }
    if p1.is_empty() {
        return Ok((p1.clone(), p2.clone()));
    }
    let d = p1.len();
    let (x, y) = (rng.gen_range(0..d), rng.gen_range(0..d));
    order_crossover_with_cuts(p1, p2, x.min(y), x.max(y))
}

/// Exchanges two distinct positions chosen uniformly. `D < 2` is returned as is.
pub fn swap_mutation<R: Rng + ?Sized>(s: &Permutation, rng: &mut R) -> Permutation {
    let d = s.len();
    if d < 2 {
        return s.clone();
    }
    let i = rng.gen_range(0..d);
    let j = (i + rng.gen_range(1..d)) % d;
    swap_positions(s, i, j)
}

pub fn swap_positions(s: &Permutation, i: usize, j: usize) -> Permutation {
    let mut v = s.as_slice().to_vec();
    v.swap(i, j);
    Permutation::from_vec_unchecked(v)
}

fn check_ls_input(s: &Permutation, instance: &ProblemInstance) -> Result<()> {
    if s.len() != instance.dimension() {
        return Err(contract(format!(
            "local search on a length-{} genome for {} (D={})",
            s.len(),
            instance.name(),
            instance.dimension()
        )));
    }
    Ok(())
}

/// First-improvement 2-opt on the (giant) tour. TSP and CVRP only.
pub fn two_opt(s: &Permutation, instance: &ProblemInstance, budget: Budget) -> Result<Permutation> {
    check_ls_input(s, instance)?;
    let mut v = s.as_slice().to_vec();
    match instance.data() {
        ProblemData::Tsp { dist } => {
            two_opt_tsp(&mut v, dist, budget);
        }
        ProblemData::Cvrp { .. } => {
            two_opt_cvrp(&mut v, instance, budget);
        }
        _ => return Err(contract(format!("2-opt does not apply to {}", instance.kind()))),
    }
    Ok(Permutation::from_vec_unchecked(v))
}

fn two_opt_tsp(v: &mut [usize], dist: &Matrix, budget: Budget) -> usize {
    let d = v.len();
    let mut moves = 0;
    if d < 4 || budget.is_zero() {
        return moves;
    }
    let w = |x: usize, y: usize| dist.get(x - 1, y - 1);
    for _ in 0..budget.passes {
        let mut improved = false;
        for a in 0..d - 1 {
            for b in a + 1..d {
                if a == 0 && b == d - 1 {
                    continue;
                }
                let prev = v[(a + d - 1) % d];
                let next = v[(b + 1) % d];
                let delta = w(prev, v[b]) + w(v[a], next) - w(prev, v[a]) - w(v[b], next);
                if delta < -IMPROVEMENT_EPS {
                    v[a..=b].reverse();
                    moves += 1;
                    improved = true;
                    if moves >= budget.moves {
                        return moves;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    moves
}

fn two_opt_cvrp(v: &mut [usize], instance: &ProblemInstance, budget: Budget) -> usize {
    let d = v.len();
    let mut moves = 0;
    if d < 2 || budget.is_zero() {
        return moves;
    }
    let mut current = instance.cost(v);
    for _ in 0..budget.passes {
        let mut improved = false;
        for a in 0..d - 1 {
            for b in a + 1..d {
                v[a..=b].reverse();
                let candidate = instance.cost(v);
                if candidate < current - IMPROVEMENT_EPS {
                    current = candidate;
                    moves += 1;
                    improved = true;
                    if moves >= budget.moves {
                        return moves;
                    }
                } else {
                    v[a..=b].reverse();
                }
            }
        }
        if !improved {
            break;
        }
    }
    moves
}

/// First-improvement pairwise-swap local search. QAP only.
pub fn swap_local_search(s: &Permutation, instance: &ProblemInstance, budget: Budget) -> Result<Permutation> {
    check_ls_input(s, instance)?;
    let ProblemData::Qap { flow, dist } = instance.data() else {
        return Err(contract(format!("swap local search does not apply to {}", instance.kind())));
    };
    let mut v = s.as_slice().to_vec();
    swap_ls_qap(&mut v, flow, dist, budget);
    Ok(Permutation::from_vec_unchecked(v))
}

/// Change in `sum flow[v_i][v_j] * dist[i][j]` when positions `r` and `s` swap.
pub(crate) fn qap_swap_delta(v: &[usize], flow: &Matrix, dist: &Matrix, r: usize, s: usize) -> f64 {
    let f = |x: usize, y: usize| flow.get(v[x] - 1, v[y] - 1);
    let (pr, ps) = (v[r] - 1, v[s] - 1);
    let mut delta = (dist.get(r, r) - dist.get(s, s)) * (flow.get(ps, ps) - flow.get(pr, pr))
        + (dist.get(r, s) - dist.get(s, r)) * (flow.get(ps, pr) - flow.get(pr, ps));
    for k in 0..v.len() {
        if k == r || k == s {
            continue;
        }
        delta += (dist.get(k, r) - dist.get(k, s)) * (f(k, s) - f(k, r))
            + (dist.get(r, k) - dist.get(s, k)) * (f(s, k) - f(r, k));
    }
    delta
}

fn swap_ls_qap(v: &mut [usize], flow: &Matrix, dist: &Matrix, budget: Budget) -> usize {
    let d = v.len();
    let mut moves = 0;
    if d < 2 || budget.is_zero() {
        return moves;
    }
    for _ in 0..budget.passes {
        let mut improved = false;
        for r in 0..d - 1 {
            for s in r + 1..d {
                if qap_swap_delta(v, flow, dist, r, s) < -IMPROVEMENT_EPS {
                    v.swap(r, s);
                    moves += 1;
                    improved = true;
                    if moves >= budget.moves {
                        return moves;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    moves
}

/// First-improvement remove-and-reinsert local search. LOP only.
pub fn insertion_local_search(s: &Permutation, instance: &ProblemInstance, budget: Budget) -> Result<Permutation> {
    check_ls_input(s, instance)?;
    let ProblemData::Lop { weight } = instance.data() else {
        return Err(contract(format!("insertion local search does not apply to {}", instance.kind())));
    };
    let mut v = s.as_slice().to_vec();
    insertion_ls_lop(&mut v, weight, budget);
    Ok(Permutation::from_vec_unchecked(v))
}

/// Moves the element at `from` to index `to`, shifting the elements between.
fn relocate(v: &mut [usize], from: usize, to: usize) {
    if from < to {
        v[from..=to].rotate_left(1);
    } else {
        v[to..=from].rotate_right(1);
    }
}

fn insertion_ls_lop(v: &mut [usize], weight: &Matrix, budget: Budget) -> usize {
    let d = v.len();
    let mut moves = 0;
    if d < 2 || budget.is_zero() {
        return moves;
    }
    let w = |x: usize, y: usize| weight.get(x - 1, y - 1);
    for _ in 0..budget.passes {
        let mut improved = false;
        let mut i = 0;
        while i < d {
            let e = v[i];
            // Fitness is the negated upper sum: passing x to the right of e
            // turns w[e][x] into w[x][e].
            let mut delta = 0.0;
            let mut target = None;
            for j in i + 1..d {
                delta += w(e, v[j]) - w(v[j], e);
                if delta < -IMPROVEMENT_EPS {
                    target = Some(j);
                    break;
                }
            }
            if target.is_none() {
                delta = 0.0;
                for j in (0..i).rev() {
                    delta += w(v[j], e) - w(e, v[j]);
                    if delta < -IMPROVEMENT_EPS {
                        target = Some(j);
                        break;
                    }
                }
            }
            match target {
                Some(j) => {
                    relocate(v, i, j);
                    moves += 1;
                    improved = true;
                    if moves >= budget.moves {
                        return moves;
                    }
                }
                None => i += 1,
            }
        }
        if !improved {
            break;
        }
    }
    moves
}

/// Dispatches to the local search matched to the problem kind.
pub fn local_search(s: &Permutation, instance: &ProblemInstance, budget: Budget) -> Result<Permutation> {
    match instance.kind() {
        crate::ProblemKind::Tsp | crate::ProblemKind::Cvrp => two_opt(s, instance, budget),
        crate::ProblemKind::Qap => swap_local_search(s, instance, budget),
        crate::ProblemKind::Lop => insertion_local_search(s, instance, budget),
    }
}

/// In-place local search on a genome already known to fit the instance.
/// Returns the recomputed fitness.
pub(crate) fn improve(v: &mut [usize], instance: &ProblemInstance, budget: Budget) -> f64 {
    match instance.data() {
        ProblemData::Tsp { dist } => {
            two_opt_tsp(v, dist, budget);
        }
        ProblemData::Cvrp { .. } => {
            two_opt_cvrp(v, instance, budget);
        }
        ProblemData::Qap { flow, dist } => {
            swap_ls_qap(v, flow, dist, budget);
        }
        ProblemData::Lop { weight } => {
            insertion_ls_lop(v, weight, budget);
        }
    }
    instance.cost(v)
}

/// Index of the better of two uniformly drawn members (lower index wins ties).
pub(crate) fn binary_tournament<R: Rng + ?Sized>(n: usize, rng: &mut R) -> usize {
    let a = rng.gen_range(0..n);
    let b = rng.gen_range(0..n);
    a.min(b)
}

/// Mutates and locally improves a crossover child, then evaluates it.
pub(crate) fn finish_child<R: Rng + ?Sized>(
    child: Permutation,
    instance: &ProblemInstance,
    params: &EvoParams,
    rng: &mut R,
) -> Individual {
    let child = if rng.gen_bool(params.mutation_prob) {
        swap_mutation(&child, rng)
    } else {
        child
    };
    let mut v = child.into_vec();
    let fitness = improve(&mut v, instance, Budget::moves(params.ls_budget_for(instance.dimension())));
    Individual {
        genome: Permutation::from_vec_unchecked(v),
        fitness,
    }
}

/// Parents first, so survivors of equal fitness prefer incumbents.
pub(crate) fn elitist_union(parents: Vec<Individual>, offspring: Vec<Individual>, n: usize) -> Population {
    let mut all = parents;
    all.extend(offspring);
    all.sort_by(by_fitness);
    all.truncate(n);
    Population::from_sorted_unchecked(all)
}

/// One generation: tournament selection, OX, swap mutation, local search,
/// then the best `N` of parents and offspring survive.
pub fn generation_step<R: Rng + ?Sized>(
    pop: &Population,
    instance: &ProblemInstance,
    params: &EvoParams,
    rng: &mut R,
) -> Result<Population> {
    let n = pop.len();
    let members = pop.members();
    if members[0].genome.len() != instance.dimension() {
        return Err(contract("population genomes do not match the instance dimension"));
    }
    let mut offspring = Vec::with_capacity(n);
    while offspring.len() < n {
        let p1 = &members[binary_tournament(n, rng)].genome;
        let p2 = &members[binary_tournament(n, rng)].genome;
        let (c1, c2) = order_crossover(p1, p2, rng)?;
        offspring.push(finish_child(c1, instance, params, rng));
        if offspring.len() < n {
            offspring.push(finish_child(c2, instance, params, rng));
        }
    }
    Ok(elitist_union(members.to_vec(), offspring, n))
}

/// Single-task hybrid GA: random initialisation then `generations` steps.
pub fn run_sto<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    params: &EvoParams,
    generations: usize,
    rng: &mut R,
) -> Result<MultitaskRun> {
    params.validate()?;
    let start = Instant::now();
    let mut pop = Population::random(instance, params.pop_size, rng)?;
    let mut trace = Vec::with_capacity(generations + 1);
    trace.push(pop.best().fitness);
    for _ in 0..generations {
        pop = generation_step(&pop, instance, params, rng)?;
        trace.push(pop.best().fitness);
    }
    let evals = (params.pop_size * (generations + 1)) as u64;
    Ok(MultitaskRun::single(trace, pop.best().clone(), evals, start.elapsed()))
}
