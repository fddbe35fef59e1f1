//! Cross-module invariants exercised through the public API.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mtea_core::evolution::{local_search, run_sto, Budget, Individual, Population};
use mtea_core::orchestrator::{run_mfea_baseline, run_mtea_ast, task_rng, MultitaskConfig};
use mtea_core::problems::Matrix;
use mtea_core::transfer::{grow_seed, insert_seeds, transfer_round};
use mtea_core::unification::{build_similarity_matrix, transfer_strengths, unify_dimension};
use mtea_core::{EvoParams, Permutation, ProblemInstance, ProblemKind};

fn int_matrix(n: usize, symmetric: bool, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i == j && symmetric {
                continue;
            }
            if symmetric && j < i {
                m.set(i, j, m.get(j, i));
            } else {
                m.set(i, j, rng.gen_range(0..40) as f64);
            }
        }
    }
    m
}

fn instance(kind: ProblemKind, d: usize, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        ProblemKind::Tsp => ProblemInstance::tsp("tsp", int_matrix(d, true, &mut rng)).unwrap(),
        ProblemKind::Cvrp => {
            let dist = int_matrix(d + 1, true, &mut rng);
            let demands = (0..d).map(|_| rng.gen_range(1..8) as f64).collect();
            ProblemInstance::cvrp("cvrp", dist, demands, 15.0).unwrap()
        }
        ProblemKind::Qap => {
            let flow = int_matrix(d, false, &mut rng);
            ProblemInstance::qap("qap", flow, int_matrix(d, true, &mut rng)).unwrap()
        }
        ProblemKind::Lop => ProblemInstance::lop("lop", int_matrix(d, false, &mut rng)).unwrap(),
    }
}

fn kind() -> impl Strategy<Value = ProblemKind> {
    prop_oneof![
        Just(ProblemKind::Tsp),
        Just(ProblemKind::Cvrp),
        Just(ProblemKind::Qap),
        Just(ProblemKind::Lop)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unification_yields_target_permutation(k in kind(), ds in 1usize..15, dt in 1usize..15, seed in any::<u64>()) {
        let target = instance(k, dt, seed);
        let x = Permutation::random(ds, &mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let y = unify_dimension(&x, &target);
        prop_assert!(Permutation::new(y.as_slice().to_vec()).is_ok());
        prop_assert_eq!(y.len(), dt);
        // Source labels keep their relative order.
        let kept: Vec<usize> = y.as_slice().iter().copied().filter(|&l| l <= ds).collect();
        let expect: Vec<usize> = x.as_slice().iter().copied().filter(|&l| l <= dt).collect();
        prop_assert_eq!(kept, expect);
    }

    #[test]
    fn unification_is_identity_at_equal_dimension(k in kind(), d in 1usize..12, seed in any::<u64>()) {
        let target = instance(k, d, seed);
        let x = Permutation::random(d, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(unify_dimension(&x, &target), x);
    }

    #[test]
    fn local_search_never_worsens(k in kind(), d in 2usize..12, seed in any::<u64>(), moves in 0usize..30) {
        let inst = instance(k, d, seed);
        let s = Permutation::random(d, &mut ChaCha8Rng::seed_from_u64(seed));
        let before = inst.evaluate(&s).unwrap();
        let out = local_search(&s, &inst, Budget::moves(moves)).unwrap();
        prop_assert!(inst.evaluate(&out).unwrap() <= before);
        let grown = grow_seed(&s, &inst, 50).unwrap();
        prop_assert!(inst.evaluate(&grown).unwrap() <= before);
    }

    #[test]
    fn seed_insertion_keeps_size_and_best(d in 4usize..10, n in 2usize..10, seeds in 0usize..10, seed in any::<u64>()) {
        let seeds = seeds.min(n);
        let inst = instance(ProblemKind::Tsp, d, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pop = Population::random(&inst, n, &mut rng).unwrap();
        let incoming: Vec<Individual> = (0..seeds)
            .map(|_| Individual::evaluated(Permutation::random(d, &mut rng), &inst).unwrap())
            .collect();
        let out = insert_seeds(&pop, &incoming, ProblemKind::Tsp).unwrap();
        prop_assert_eq!(out.len(), n);
        prop_assert!(out.best().fitness <= pop.best().fitness);
        prop_assert!(out.members().windows(2).all(|w| w[0].fitness <= w[1].fitness));
    }

    #[test]
    fn strengths_sum_to_eps_or_zero(row in prop::collection::vec(0.0f64..1.0, 2..8), eps in 1usize..40, t in 0usize..8) {
        let t = t % row.len();
        let plan = transfer_strengths(&row, t, eps, 1);
        let any = row.iter().enumerate().any(|(s, &v)| s != t && v >= 0.1);
        prop_assert_eq!(plan.total(), if any { eps } else { 0 });
        prop_assert_eq!(plan.strengths[t], 0);
    }
}

#[test]
fn too_many_seeds_is_a_contract_error() {
    let inst = instance(ProblemKind::Tsp, 5, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pop = Population::random(&inst, 3, &mut rng).unwrap();
    let seeds: Vec<Individual> = pop.members().iter().chain(pop.members()).cloned().collect();
    assert!(insert_seeds(&pop, &seeds, ProblemKind::Tsp).is_err());
}

#[test]
fn transfer_round_reports_seed_sources() {
    let insts: Vec<ProblemInstance> = (0..3).map(|i| instance(ProblemKind::Tsp, 8 + i, i as u64)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pops: Vec<Population> = insts.iter().map(|i| Population::random(i, 10, &mut rng).unwrap()).collect();
    let bests: Vec<Permutation> = pops.iter().map(|p| p.best().genome.clone()).collect();
    let sim = build_similarity_matrix(&bests, &insts).unwrap();
    let plan = transfer_strengths(&[1.0, 0.5, 0.5], 0, 6, 3);
    let out = transfer_round(&pops, &insts, &plan, 50).unwrap();
    assert_eq!(out.population.len(), 10);
    assert_eq!(out.seed_counts[0], 0);
    assert!(out.seed_counts.iter().sum::<usize>() <= 3);
    assert!(out.population.best().fitness <= pops[0].best().fitness);
    assert_eq!(sim.k(), 3);
}

fn config(kinds: &[ProblemKind], seed: u64) -> MultitaskConfig {
    let instances = kinds.iter().enumerate().map(|(i, &k)| instance(k, 7 + i, i as u64)).collect();
    MultitaskConfig {
        evo: EvoParams {
            pop_size: 8,
            ..EvoParams::default()
        },
        generations: 20,
        eps: 4,
        lambda: 2,
        alpha: 5,
        ..MultitaskConfig::new(instances, seed)
    }
}

#[test]
fn mixed_domain_runs_are_reproducible_and_monotone() {
    let cfg = config(&[ProblemKind::Tsp, ProblemKind::Cvrp, ProblemKind::Qap, ProblemKind::Lop], 11);
    let a = run_mtea_ast(&cfg).unwrap();
    let b = run_mtea_ast(&cfg).unwrap();
    assert!(a.same_outcome(&b));
    assert_eq!(a.similarity.len(), 4);
    for trace in &a.traces {
        assert_eq!(trace.len(), 21);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }
    for (t, row) in a.interactions.iter().enumerate() {
        assert_eq!(row[t], 0);
    }
    let m = run_mfea_baseline(&cfg, 0.3).unwrap();
    assert!(m.same_outcome(&run_mfea_baseline(&cfg, 0.3).unwrap()));
}

#[test]
fn single_task_matches_the_baseline_ga() {
    let cfg = config(&[ProblemKind::Qap], 5);
    let mt = run_mtea_ast(&cfg).unwrap();
    let sto = run_sto(&cfg.instances[0], &cfg.evo, cfg.generations, &mut task_rng(5, 0)).unwrap();
    assert!(mt.same_outcome(&sto));
}

#[test]
fn different_seeds_diverge() {
    let a = run_mtea_ast(&config(&[ProblemKind::Tsp, ProblemKind::Lop], 1)).unwrap();
    let b = run_mtea_ast(&config(&[ProblemKind::Tsp, ProblemKind::Lop], 2)).unwrap();
    assert!(!a.same_outcome(&b));
}
