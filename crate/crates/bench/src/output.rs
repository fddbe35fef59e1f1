//! CSV/JSON serialisation of run sets, and the matching readers.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::experiment::{ExperimentConfig, RunSet, SynthLevel, TaskInfo};
use crate::stats::{summarize, StatsSummary};
use crate::synthetic::SynthRecord;
use crate::{BenchError, Result};

pub const CONVERGENCE: &str = "convergence.csv";
pub const INTERACTIONS: &str = "interactions.csv";
pub const SUMMARY: &str = "summary.json";
pub const TIMING: &str = "timing.json";

pub fn similarity_file(round: usize) -> String {
    format!("similarity_{round}.csv")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub tasks: Vec<TaskInfo>,
    pub stats: StatsSummary,
    /// `final_best[run][task]`.
    pub final_best: Vec<Vec<f64>>,
    pub evolution_evals: Vec<Vec<u64>>,
    pub transfer_evals: Vec<Vec<u64>>,
}

#[derive(Serialize)]
struct Timing {
    wall_seconds: Vec<f64>,
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| BenchError::csv(path, e))
}

fn header(k: usize) -> Vec<String> {
    let mut h = vec!["run_id".to_string(), "target".to_string()];
    h.extend((1..=k).map(|s| format!("T{s}")));
    h
}

fn write_matrices<T: ToString>(path: &Path, k: usize, rows: impl Iterator<Item = (usize, Vec<Vec<T>>)>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header(k)).map_err(|e| BenchError::csv(path, e))?;
    for (run_id, m) in rows {
        for (t, row) in m.iter().enumerate() {
            let mut rec = vec![run_id.to_string(), (t + 1).to_string()];
            rec.extend(row.iter().map(ToString::to_string));
            w.write_record(&rec).map_err(|e| BenchError::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| BenchError::io(path, e))
}

/// Writes convergence traces, per-round similarity matrices, interaction
/// counts, the summary (with config and seed) and wall-clock timing.
pub fn write_outputs(set: &RunSet, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let k = set.tasks.len();

    let path = dir.join(CONVERGENCE);
    let mut w = writer(&path)?;
    w.write_record(["run_id", "task", "generation", "best_fitness"])
        .map_err(|e| BenchError::csv(&path, e))?;
    for (r, run) in set.runs.iter().enumerate() {
        for (t, trace) in run.traces.iter().enumerate() {
            for (g, v) in trace.iter().enumerate() {
                w.write_record([r.to_string(), (t + 1).to_string(), g.to_string(), v.to_string()])
                    .map_err(|e| BenchError::csv(&path, e))?;
            }
        }
    }
    w.flush().map_err(|e| BenchError::io(&path, e))?;

    let rounds = set.runs.iter().map(|r| r.similarity.len()).max().unwrap_or(0);
    for round in 0..rounds {
        let rows = set
            .runs
            .iter()
            .enumerate()
            .filter_map(|(r, run)| run.similarity.get(round).map(|m| (r, m.values.clone())));
        write_matrices(&dir.join(similarity_file(round + 1)), k, rows)?;
    }
    write_matrices(
        &dir.join(INTERACTIONS),
        k,
        set.runs.iter().enumerate().map(|(r, run)| (r, run.interactions.clone())),
    )?;

    let finals = set.finals();
    let summary = Summary {
        seed: set.config.seed,
        config: set.config.clone(),
        tasks: set.tasks.clone(),
        stats: summarize(&set.names(), &finals, None)?,
        final_best: finals,
        evolution_evals: set.runs.iter().map(|r| r.evolution_evals.clone()).collect(),
        transfer_evals: set.runs.iter().map(|r| r.transfer_evals.clone()).collect(),
    };
    write_json(&dir.join(SUMMARY), &summary)?;
    write_json(
        &dir.join(TIMING),
        &Timing {
            wall_seconds: set.runs.iter().map(|r| r.wall_time.as_secs_f64()).collect(),
        },
    )
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::Reader::from_path(path).map_err(|e| BenchError::csv(path, e))
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| BenchError::Format(format!("{}: bad field {i} in {rec:?}", path.display())))
}

fn slot<T: Default + Clone>(v: &mut Vec<T>, i: usize) -> &mut T {
    if v.len() <= i {
        v.resize(i + 1, T::default());
    }
    &mut v[i]
}

/// `traces[run][task][generation]`.
pub fn read_convergence(path: &Path) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut out: Vec<Vec<Vec<f64>>> = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec.map_err(|e| BenchError::csv(path, e))?;
        let run: usize = field(path, &rec, 0)?;
        let task: usize = field(path, &rec, 1)?;
        let gen: usize = field(path, &rec, 2)?;
        let value: f64 = field(path, &rec, 3)?;
        let trace = slot(slot(&mut out, run), task.checked_sub(1).ok_or_else(|| BenchError::Format("task 0".into()))?);
        if trace.len() != gen {
            return Err(BenchError::Format(format!("{}: generation {gen} out of order", path.display())));
        }
        trace.push(value);
    }
    Ok(out)
}

/// `matrices[run][target][source]`.
pub fn read_matrices<T: std::str::FromStr + Default + Clone>(path: &Path) -> Result<Vec<Vec<Vec<T>>>> {
    let mut out: Vec<Vec<Vec<T>>> = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec.map_err(|e| BenchError::csv(path, e))?;
        let run: usize = field(path, &rec, 0)?;
        let row = (2..rec.len()).map(|i| field(path, &rec, i)).collect::<Result<Vec<T>>>()?;
        slot(&mut out, run).push(row);
    }
    Ok(out)
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join(SUMMARY);
    let text = fs::read_to_string(&path).map_err(|e| BenchError::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_synthetic(records: &[SynthRecord], levels: &[SynthLevel], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let path = dir.join("synthetic.csv");
    let mut w = writer(&path)?;
    w.write_record(["level", "target_similarity", "run_id", "achieved_similarity", "mtea_best", "sto_best"])
        .map_err(|e| BenchError::csv(&path, e))?;
    for r in records {
        w.write_record([
            r.level.to_string(),
            r.target_similarity.to_string(),
            r.run_id.to_string(),
            r.achieved_similarity.to_string(),
            r.mtea_best.to_string(),
            r.sto_best.to_string(),
        ])
        .map_err(|e| BenchError::csv(&path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(&path, e))?;
    write_json(&dir.join("synthetic_summary.json"), &levels)
}
