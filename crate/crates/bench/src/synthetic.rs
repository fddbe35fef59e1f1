//! Circular TSP tasks with a controlled share of the base optimum's edges.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use mtea_core::problems::Matrix;
use mtea_core::unification::hamming_similarity;
use mtea_core::{Permutation, ProblemInstance, ProblemKind};

use crate::{BenchError, Result};

#[derive(Clone, Debug)]
pub struct SyntheticPair {
    pub base: ProblemInstance,
    pub base_optimum: Permutation,
    pub derived: ProblemInstance,
    /// Visiting order of the circle, which is optimal for `derived`.
    pub derived_optimum: Permutation,
    pub target_similarity: f64,
    /// Shared-edge fraction between the two optima.
    pub achieved_similarity: f64,
}

/// Places the cities on a unit circle in base-optimum order, then shuffles
/// the cities occupying a random contiguous arc of `ceil((1 - s) D)` slots.
pub fn make_synthetic_pair<R: Rng + ?Sized>(
    base: &ProblemInstance,
    optimum: &Permutation,
    s: f64,
    rng: &mut R,
) -> Result<SyntheticPair> {
    if !(0.0..=1.0).contains(&s) {
        return Err(BenchError::Contract(format!("target similarity {s} outside [0,1]")));
    }
    if base.kind() != ProblemKind::Tsp {
        return Err(BenchError::Contract(format!("synthetic base must be TSP, got {}", base.kind())));
    }
    let d = base.dimension();
    if optimum.len() != d {
        return Err(BenchError::Contract(format!(
            "optimal tour has {} cities, instance has {d}",
            optimum.len()
        )));
    }
    // slots[i]: city at circle position i.
    let mut slots = optimum.as_slice().to_vec();
    let scrambled = (((1.0 - s) * d as f64) - 1e-9).ceil().max(0.0) as usize;
    if scrambled > 0 {
        let start = rng.gen_range(0..d);
        let positions: Vec<usize> = (0..scrambled.min(d)).map(|k| (start + k) % d).collect();
        let mut cities: Vec<usize> = positions.iter().map(|&p| slots[p]).collect();
        cities.shuffle(rng);
        for (&p, c) in positions.iter().zip(cities) {
            slots[p] = c;
        }
    }
    let mut coords = vec![(0.0, 0.0); d];
    for (i, &city) in slots.iter().enumerate() {
        let angle = TAU * i as f64 / d as f64;
        coords[city - 1] = (angle.cos(), angle.sin());
    }
    let mut dist = Matrix::zeros(d);
    for i in 0..d {
        for j in i + 1..d {
            let v = (coords[i].0 - coords[j].0).hypot(coords[i].1 - coords[j].1);
            dist.set(i, j, v);
            dist.set(j, i, v);
        }
    }
    let derived = ProblemInstance::tsp(format!("{}-circle-s{s}", base.name()), dist)?;
    let derived_optimum = Permutation::new(slots)?;
    let achieved_similarity = hamming_similarity(optimum, &derived_optimum, ProblemKind::Tsp)?;
    Ok(SyntheticPair {
        base: base.clone(),
        base_optimum: optimum.clone(),
        derived,
        derived_optimum,
        target_similarity: s,
        achieved_similarity,
    })
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || BenchError::Config(format!("similarity grid {spec:?} is not start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start || start < 0.0 || stop > 1.0 {
        return Err(bad());
    }
    let levels = ((stop - start) / step + 1e-9).floor() as usize;
    // Rounded so that 0.05-step grids print as 0.35 rather than 0.35000000000000003.
    Ok((0..=levels)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthRecord {
    pub level: usize,
    pub target_similarity: f64,
    pub run_id: usize,
    pub achieved_similarity: f64,
    pub mtea_best: f64,
    pub sto_best: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn base(d: usize) -> (ProblemInstance, Permutation) {
        let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
        let mut m = Matrix::zeros(d);
        for i in 0..d {
            for j in i + 1..d {
                let v = rng.gen_range(1..100) as f64;
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        (ProblemInstance::tsp("b", m).unwrap(), Permutation::random(d, &mut rng))
    }

    #[test]
    fn full_similarity_keeps_the_optimum() {
        let (b, opt) = base(30);
        let pair = make_synthetic_pair(&b, &opt, 1.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(pair.derived_optimum, opt);
        assert_eq!(pair.achieved_similarity, 1.0);
        // The circle order is optimal: 2 D sin(pi / D).
        let expect = 60.0 * (std::f64::consts::PI / 30.0).sin();
        assert!((pair.derived.evaluate(&opt).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn zero_similarity_breaks_nearly_every_edge() {
        let (b, opt) = base(100);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mean: f64 = (0..20)
            .map(|_| make_synthetic_pair(&b, &opt, 0.0, &mut rng).unwrap().achieved_similarity)
            .sum::<f64>()
            / 20.0;
        assert!(mean < 0.05, "{mean}");
    }

    #[test]
    fn half_similarity_lands_near_half() {
        let (b, opt) = base(100);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = make_synthetic_pair(&b, &opt, 0.5, &mut rng).unwrap().achieved_similarity;
            assert!((0.45..=0.55).contains(&a), "{a}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (b, opt) = base(10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(make_synthetic_pair(&b, &opt, 1.2, &mut rng).is_err());
        assert!(make_synthetic_pair(&b, &Permutation::identity(9), 0.5, &mut rng).is_err());
    }

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0:1:0.05").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[7], 0.35);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }
}
