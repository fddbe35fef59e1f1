//! Mapping solutions between task dimensions, inter-task similarity and
//! similarity-proportional transfer strengths.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::problems::{Permutation, ProblemData, ProblemInstance, ProblemKind};

/// Sources below this similarity never send candidates.
pub const SIMILARITY_FILTER: f64 = 0.1;

/// Maps `x` (a permutation of `1..=Ds`) onto the label set of `target`.
///
/// Missing labels are inserted in ascending order, each at the position
/// that minimises the target objective of the partial solution (ties go to
/// the lowest position). Surplus labels are dropped, order preserved.
pub fn unify_dimension(x: &Permutation, target: &ProblemInstance) -> Permutation {
    let mut evals = 0;
    unify_dimension_counted(x, target, &mut evals)
}

/// As [`unify_dimension`], adding the number of candidate positions
/// evaluated to `evals`.
pub fn unify_dimension_counted(x: &Permutation, target: &ProblemInstance, evals: &mut u64) -> Permutation {
    let dt = target.dimension();
    let ds = x.len();
    if ds >= dt {
        let kept: Vec<usize> = x.as_slice().iter().copied().filter(|&l| l <= dt).collect();
        return Permutation::from_vec_unchecked(kept);
    }
    let mut order = Vec::with_capacity(dt);
    order.extend_from_slice(x.as_slice());
    for label in ds + 1..=dt {
        let k = best_insertion(&order, label, target);
        *evals += order.len() as u64 + 1;
        order.insert(k, label);
    }
    Permutation::from_vec_unchecked(order)
}

/// Position in `0..=order.len()` minimising the partial cost after inserting `label`.
fn best_insertion(order: &[usize], label: usize, target: &ProblemInstance) -> usize {
    let n = order.len();
    if n == 0 {
        return 0;
    }
    let scores: Vec<f64> = match target.data() {
        // Cost differences only involve the edge being broken.
        ProblemData::Tsp { dist } => {
            let d = |a: usize, b: usize| dist.get(a - 1, b - 1);
            (0..=n)
                .map(|k| {
                    let prev = order[(k + n - 1) % n];
                    let next = order[k % n];
                    d(prev, label) + d(label, next) - d(prev, next)
                })
                .collect()
        }
        // Insertion at k puts label after order[..k] and before order[k..].
        ProblemData::Lop { weight } => {
            let w = |a: usize, b: usize| weight.get(a - 1, b - 1);
            let mut after: f64 = order.iter().map(|&x| w(label, x)).sum();
            let mut before = 0.0;
            let mut out = Vec::with_capacity(n + 1);
            for k in 0..=n {
                out.push(-(w(label, label) + before + after));
                if k < n {
                    before += w(order[k], label);
                    after -= w(label, order[k]);
                }
            }
            out
        }
        ProblemData::Cvrp { .. } | ProblemData::Qap { .. } => {
            let mut buf = Vec::with_capacity(n + 1);
            (0..=n)
                .map(|k| {
                    buf.clear();
                    buf.extend_from_slice(&order[..k]);
                    buf.push(label);
                    buf.extend_from_slice(&order[k..]);
                    target.cost(&buf)
                })
                .collect()
        }
    };
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = k;
        }
    }
    best
}

/// Undirected edges of the closed tour through a permutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeSet(BTreeSet<(usize, usize)>);

impl EdgeSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.0.contains(&(u.min(v), u.max(v)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().copied()
    }

    pub fn symmetric_difference_len(&self, other: &EdgeSet) -> usize {
        self.0.symmetric_difference(&other.0).count()
    }
}

pub fn to_edge_set(s: &Permutation) -> EdgeSet {
    let v = s.as_slice();
    let mut edges = BTreeSet::new();
    for i in 0..v.len() {
        let (a, b) = (v[i], v[(i + 1) % v.len()]);
        edges.insert((a.min(b), a.max(b)));
    }
    EdgeSet(edges)
}

/// Kind-specific distance used for both similarity and seed replacement:
/// edge symmetric difference for tours, differing positions otherwise.
pub(crate) fn hamming_distance(a: &Permutation, b: &Permutation, kind: ProblemKind) -> usize {
    if kind.is_permutation_based() {
        to_edge_set(a).symmetric_difference_len(&to_edge_set(b))
    } else {
        a.as_slice().iter().zip(b.as_slice()).filter(|(x, y)| x != y).count()
    }
}

/// `1 - HD`, with HD normalised by `2D` for tours and `D` for assignments.
pub fn hamming_similarity(a: &Permutation, b: &Permutation, kind: ProblemKind) -> Result<f64> {
    if a.len() != b.len() {
        return Err(contract(format!("similarity of lengths {} and {}", a.len(), b.len())));
    }
    let d = a.len();
    if d == 0 {
        return Ok(1.0);
    }
    let hd = hamming_distance(a, b, kind) as f64;
    let norm = if kind.is_permutation_based() { 2 * d } else { d } as f64;
    Ok((1.0 - hd / norm).clamp(0.0, 1.0))
}

/// `values[t][s]`: similarity of source `s`'s best, mapped into task `t`, to `t`'s best.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, target: usize) -> &[f64] {
        &self.values[target]
    }
}

pub fn build_similarity_matrix(bests: &[Permutation], instances: &[ProblemInstance]) -> Result<SimilarityMatrix> {
    build_similarity_matrix_counted(bests, instances).map(|(m, _)| m)
}

/// Also returns the number of objective evaluations spent on unification.
pub fn build_similarity_matrix_counted(
    bests: &[Permutation],
    instances: &[ProblemInstance],
) -> Result<(SimilarityMatrix, u64)> {
    if bests.len() != instances.len() {
        return Err(contract(format!("{} bests for {} instances", bests.len(), instances.len())));
    }
    let k = bests.len();
    let mut evals = 0;
    let mut values = vec![vec![1.0; k]; k];
    for t in 0..k {
        for s in 0..k {
            if s == t {
                continue;
            }
            let mapped = unify_dimension_counted(&bests[s], &instances[t], &mut evals);
            values[t][s] = hamming_similarity(&mapped, &bests[t], instances[t].kind())?;
        }
    }
    Ok((SimilarityMatrix { values }, evals))
}

/// Candidate quotas for one target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferPlan {
    pub target: usize,
    /// `strengths[s]` candidates are drawn from source `s`.
    pub strengths: Vec<usize>,
    pub eps: usize,
    pub lambda: usize,
}

impl TransferPlan {
    pub fn total(&self) -> usize {
        self.strengths.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

/// Apportions `eps` over the sources of `target` in proportion to similarity,
/// by largest remainder (ties to the lower source index). Sources under the
/// 10% filter, and the target itself, receive nothing.
pub fn transfer_strengths(sim_row: &[f64], target: usize, eps: usize, lambda: usize) -> TransferPlan {
    let k = sim_row.len();
    let passing: Vec<usize> = (0..k)
        .filter(|&s| s != target && sim_row[s] >= SIMILARITY_FILTER)
        .collect();
    let mut strengths = vec![0; k];
    let total: f64 = passing.iter().map(|&s| sim_row[s]).sum();
    if !passing.is_empty() && total > 0.0 {
        let quotas: Vec<f64> = passing.iter().map(|&s| eps as f64 * sim_row[s] / total).collect();
        let mut assigned = 0;
        for (i, &s) in passing.iter().enumerate() {
            strengths[s] = quotas[i].floor() as usize;
            assigned += strengths[s];
        }
        let mut order: Vec<usize> = (0..passing.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = quotas[a] - quotas[a].floor();
            let rb = quotas[b] - quotas[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle().take(eps.saturating_sub(assigned)) {
            strengths[passing[i]] += 1;
        }
    }
    TransferPlan {
        target,
        strengths,
        eps,
        lambda,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Matrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn perm(v: &[usize]) -> Permutation {
        Permutation::new(v.to_vec()).unwrap()
    }

    fn tsp(n: usize, seed: u64) -> ProblemInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.gen_range(1..100) as f64;
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        ProblemInstance::tsp("t", m).unwrap()
    }

    #[test]
    fn shrinking_filters_in_order() {
        assert_eq!(unify_dimension(&perm(&[4, 2, 5, 1, 3]), &tsp(3, 0)).as_slice(), &[2, 1, 3]);
        let x = perm(&[3, 1, 2]);
        assert_eq!(unify_dimension(&x, &tsp(3, 0)), x);
    }

    #[test]
    fn growing_follows_cheapest_insertion() {
        // City 4 sits on the 2-3 edge, city 5 sits on the 4-3 edge.
        let pts = [(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (5.0, 10.0), (8.0, 10.0)];
        let rows = pts
            .iter()
            .map(|a: &(f64, f64)| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
            .collect();
        let inst = ProblemInstance::tsp("fig", Matrix::from_rows(rows).unwrap()).unwrap();
        let out = unify_dimension(&perm(&[2, 3, 1]), &inst);
        assert_eq!(out.as_slice(), &[2, 4, 5, 3, 1]);
    }

    #[test]
    fn edge_sets() {
        let e = to_edge_set(&perm(&[1, 2, 3]));
        assert_eq!(e.len(), 3);
        assert!(e.contains(1, 2) && e.contains(3, 2) && e.contains(1, 3));
        let s = perm(&[4, 1, 3, 2, 5]);
        assert_eq!(to_edge_set(&s), to_edge_set(&perm(&[5, 2, 3, 1, 4])));
        assert_eq!(to_edge_set(&s), to_edge_set(&perm(&[3, 2, 5, 4, 1])));
    }

    #[test]
    fn similarity_examples() {
        let a = perm(&[1, 2, 3]);
        for kind in [ProblemKind::Tsp, ProblemKind::Cvrp, ProblemKind::Qap, ProblemKind::Lop] {
            assert_eq!(hamming_similarity(&a, &a, kind).unwrap(), 1.0);
        }
        assert_eq!(hamming_similarity(&a, &perm(&[2, 3, 1]), ProblemKind::Qap).unwrap(), 0.0);
        // {12,23,34,41} vs {13,32,24,41}: 12,34 vs 13,24 differ.
        let t = hamming_similarity(&perm(&[1, 2, 3, 4]), &perm(&[1, 3, 2, 4]), ProblemKind::Tsp).unwrap();
        assert_eq!(t, 0.5);
        assert!(hamming_similarity(&a, &perm(&[1, 2]), ProblemKind::Tsp).is_err());
    }

    #[test]
    fn similarity_matrix_cases() {
        let insts = vec![tsp(6, 1), tsp(6, 2), tsp(6, 3)];
        let b = perm(&[1, 2, 3, 4, 5, 6]);
        let m = build_similarity_matrix(&[b.clone(), b.clone(), b.clone()], &insts).unwrap();
        assert!(m.values.iter().flatten().all(|&v| v == 1.0));
        // Edge-disjoint Hamiltonian cycles on six vertices.
        let c = perm(&[1, 3, 5, 2, 6, 4]);
        assert!(to_edge_set(&b).iter().all(|(u, v)| !to_edge_set(&c).contains(u, v)));
        let m = build_similarity_matrix(&[b, c], &insts[..2]).unwrap();
        assert_eq!(m.values, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn strengths_examples() {
        assert_eq!(transfer_strengths(&[1.0, 0.6, 0.4], 0, 10, 3).strengths, vec![0, 6, 4]);
        assert_eq!(transfer_strengths(&[1.0, 0.05, 0.08], 0, 10, 3).strengths, vec![0, 0, 0]);
        // Quotas 4.545, 2.727, 2.727: the two largest remainders each gain a seat.
        assert_eq!(transfer_strengths(&[0.5, 1.0, 0.3, 0.3], 1, 10, 3).strengths, vec![4, 0, 3, 3]);
        // Equal remainders: the lower index wins the last seat.
        assert_eq!(transfer_strengths(&[0.5, 0.5, 1.0], 2, 3, 3).strengths, vec![2, 1, 0]);
        assert_eq!(transfer_strengths(&[1.0], 0, 10, 3).strengths, vec![0]);
    }

    #[test]
    fn unification_evaluation_ceiling() {
        let insts: Vec<_> = (0..4).map(|i| tsp(4 + 3 * i, i as u64)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bests: Vec<_> = insts.iter().map(|i| Permutation::random(i.dimension(), &mut rng)).collect();
        let (_, evals) = build_similarity_matrix_counted(&bests, &insts).unwrap();
        let k = insts.len() as u64;
        let dmax = insts.iter().map(|i| i.dimension()).max().unwrap() as u64;
        assert!(evals > 0 && evals <= k * k * (dmax + 1) * (dmax + 1));
    }

    proptest! {
        #[test]
        fn strengths_invariants(sims in proptest::collection::vec(0.0..=1.0f64, 1..8), eps in 1..40usize) {
            let plan = transfer_strengths(&sims, 0, eps, 1);
            let any_pass = sims.iter().skip(1).any(|&s| s >= SIMILARITY_FILTER);
            prop_assert_eq!(plan.total(), if any_pass { eps } else { 0 });
            prop_assert_eq!(plan.strengths[0], 0);
            for (s, &p) in plan.strengths.iter().enumerate() {
                if sims[s] < SIMILARITY_FILTER { prop_assert_eq!(p, 0); }
            }
        }

        #[test]
        fn tsp_similarity_symmetries(d in 3..20usize, seed in any::<u64>(), rot in 0..20usize) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = Permutation::random(d, &mut rng);
            let b = Permutation::random(d, &mut rng);
            let sim = hamming_similarity(&a, &b, ProblemKind::Tsp).unwrap();
            prop_assert!((0.0..=1.0).contains(&sim));
            let mut r = a.as_slice().to_vec();
            r.rotate_left(rot % d);
            r.reverse();
            prop_assert_eq!(hamming_similarity(&perm(&r), &b, ProblemKind::Tsp).unwrap(), sim);
        }
    }
}
