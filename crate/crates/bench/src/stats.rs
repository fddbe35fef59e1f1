//! Descriptive statistics and the two-sided Wilcoxon rank-sum test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{BenchError, Result};

/// Above this pooled size the normal approximation replaces enumeration.
pub const EXACT_LIMIT: usize = 14;

pub const SIGNIFICANCE: f64 = 0.05;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); 0 for a single value.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Midranks (1-based) of the pooled sample `a ++ b`.
pub fn midranks(pooled: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && pooled[idx[j + 1]] == pooled[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    /// Mann-Whitney `U = R_a - n(n+1)/2`.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(BenchError::Contract("rank-sum test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(BenchError::Contract("rank-sum test sample contains NaN".into()));
    }
    Ok(())
}

/// Two-sided test: exact for `|a| + |b| <= 14`, normal approximation otherwise.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumTest> {
    check_samples(a, b)?;
    let n = a.len() as f64;
    let r_a = rank_sum_a(a, b);
    let exact = a.len() + b.len() <= EXACT_LIMIT;
    let p_value = if exact { exact_p(a, b)? } else { approx_p(a, b)? };
    Ok(RankSumTest {
        u: r_a - n * (n + 1.0) / 2.0,
        p_value,
        exact,
    })
}

fn rank_sum_a(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    midranks(&pooled)[..a.len()].iter().sum()
}

/// Exact two-sided p under the permutation null, ties kept as midranks.
///
/// Counts size-`n` subsets of the pooled (doubled, hence integral) midranks
/// by their sum, then doubles the smaller tail.
pub fn exact_p(a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(a, b)?;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let doubled: Vec<usize> = midranks(&pooled).iter().map(|r| (2.0 * r).round() as usize).collect();
    let n = a.len();
    let observed: usize = doubled[..n].iter().sum();
    let max_sum: usize = doubled.iter().sum();
    // ways[j][s]: subsets of size j with doubled rank sum s.
    let mut ways = vec![vec![0f64; max_sum + 1]; n + 1];
    ways[0][0] = 1.0;
    for &r in &doubled {
        for j in (1..=n).rev() {
            for s in (r..=max_sum).rev() {
                let add = ways[j - 1][s - r];
                if add != 0.0 {
                    ways[j][s] += add;
                }
            }
        }
    }
    let total: f64 = ways[n].iter().sum();
    let lower: f64 = ways[n][..=observed].iter().sum();
    let upper: f64 = ways[n][observed..].iter().sum();
    Ok((2.0 * lower.min(upper) / total).min(1.0))
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity correction.
pub fn approx_p(a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let total = n + m;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&x| x == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = if total > 1.0 {
        n * m / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)))
    } else {
        0.0
    };
    if var <= 0.0 {
        return Ok(1.0);
    }
    let expected = n * (total + 1.0) / 2.0;
    let z = ((rank_sum_a(a, b) - expected).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok((2.0 * (1.0 - normal.cdf(z))).min(1.0))
}

/// Significance mark for the reference algorithm against the subject:
/// `-` reference significantly worse, `+` significantly better, `≈` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mark {
    #[serde(rename = "-")]
    Worse,
    #[serde(rename = "≈")]
    Similar,
    #[serde(rename = "+")]
    Better,
}

impl Mark {
    pub fn symbol(self) -> &'static str {
        match self {
            Mark::Worse => "-",
            Mark::Similar => "≈",
            Mark::Better => "+",
        }
    }

    pub fn decide(p_value: f64, reference_mean: f64, subject_mean: f64) -> Mark {
        if p_value >= SIGNIFICANCE || reference_mean == subject_mean {
            Mark::Similar
        } else if reference_mean > subject_mean {
            Mark::Worse
        } else {
            Mark::Better
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub mean: f64,
    pub std: f64,
    pub p_value: f64,
    pub mark: Mark,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskStats {
    pub task: usize,
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub reference: Option<Comparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub tasks: Vec<TaskStats>,
}

/// `finals[run][task]`: final best fitness values.
pub fn summarize(names: &[String], subject: &[Vec<f64>], reference: Option<&[Vec<f64>]>) -> Result<StatsSummary> {
    let k = names.len();
    let column = |runs: &[Vec<f64>], t: usize| -> Result<Vec<f64>> {
        runs.iter()
            .map(|r| {
                r.get(t)
                    .copied()
                    .ok_or_else(|| BenchError::Contract(format!("run has {} tasks, expected {k}", r.len())))
            })
            .collect()
    };
    if subject.is_empty() {
        return Err(BenchError::Contract("no subject runs to summarise".into()));
    }
    let mut tasks = Vec::with_capacity(k);
    for (t, name) in names.iter().enumerate() {
        let s = column(subject, t)?;
        let (mean_s, std_s) = (mean(&s), std_dev(&s));
        let reference = match reference {
            None => None,
            Some(refs) => {
                let r = column(refs, t)?;
                let test = wilcoxon_rank_sum(&r, &s)?;
                let mean_r = mean(&r);
                Some(Comparison {
                    mean: mean_r,
                    std: std_dev(&r),
                    p_value: test.p_value,
                    mark: Mark::decide(test.p_value, mean_r, mean_s),
                })
            }
        };
        tasks.push(TaskStats {
            task: t,
            name: name.clone(),
            mean: mean_s,
            std: std_s,
            reference,
        });
    }
    Ok(StatsSummary { tasks })
}
