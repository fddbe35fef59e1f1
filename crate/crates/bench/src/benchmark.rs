//! Benchmark composition and instance loading.

use std::fs;
use std::path::{Path, PathBuf};

use mtea_core::problems::{parse_cvrp, parse_lolib, parse_qaplib, parse_tsplib};
use mtea_core::{ProblemInstance, ProblemKind};

use crate::{BenchError, Result};

/// One benchmark member and the file names it may be stored under.
#[derive(Clone, Copy, Debug)]
pub struct Entry {
    pub name: &'static str,
    pub kind: ProblemKind,
    pub files: &'static [&'static str],
}

const fn entry(name: &'static str, kind: ProblemKind, files: &'static [&'static str]) -> Entry {
    Entry { name, kind, files }
}

pub const TSP: [Entry; 5] = [
    entry("kroA100", ProblemKind::Tsp, &["kroA100.tsp"]),
    entry("kroA150", ProblemKind::Tsp, &["kroA150.tsp"]),
    entry("kroA200", ProblemKind::Tsp, &["kroA200.tsp"]),
    entry("kroB150", ProblemKind::Tsp, &["kroB150.tsp"]),
    entry("kroC100", ProblemKind::Tsp, &["kroC100.tsp"]),
];

pub const CVRP: [Entry; 5] = [
    entry("P-n50-k7", ProblemKind::Cvrp, &["P-n50-k7.vrp"]),
    entry("P-n50-k8", ProblemKind::Cvrp, &["P-n50-k8.vrp"]),
    entry("P-n55-k7", ProblemKind::Cvrp, &["P-n55-k7.vrp"]),
    entry("P-n55-k15", ProblemKind::Cvrp, &["P-n55-k15.vrp"]),
    entry("P-n60-k10", ProblemKind::Cvrp, &["P-n60-k10.vrp"]),
];

/// Kra30b stands in for the usual duplicate Kra30a listing so the five
/// tasks are distinct.
pub const QAP: [Entry; 5] = [
    entry("Nug25", ProblemKind::Qap, &["nug25.dat", "Nug25.dat"]),
    entry("Nug30", ProblemKind::Qap, &["nug30.dat", "Nug30.dat"]),
    entry("Kra30a", ProblemKind::Qap, &["kra30a.dat", "Kra30a.dat"]),
    entry("Kra30b", ProblemKind::Qap, &["kra30b.dat", "Kra30b.dat"]),
    entry("Kra32a", ProblemKind::Qap, &["kra32.dat", "kra32a.dat", "Kra32a.dat"]),
];

pub const LOP: [Entry; 5] = [
    entry("N-t59d11xx", ProblemKind::Lop, &["N-t59d11xx", "N-t59d11xx.mat", "t59d11xx"]),
    entry("N-t59f11xx", ProblemKind::Lop, &["N-t59f11xx", "N-t59f11xx.mat", "t59f11xx"]),
    entry("N-t59i11xx", ProblemKind::Lop, &["N-t59i11xx", "N-t59i11xx.mat", "t59i11xx"]),
    entry("N-t65f11xx", ProblemKind::Lop, &["N-t65f11xx", "N-t65f11xx.mat", "t65f11xx"]),
    entry("N-t70f11xx", ProblemKind::Lop, &["N-t70f11xx", "N-t70f11xx.mat", "t70f11xx"]),
];

pub const BENCHMARKS: [&str; 11] = [
    "TSP", "CVRP", "QAP", "LOP", "TSP_CVRP", "TSP_QAP", "TSP_LOP", "CVRP_QAP", "CVRP_LOP", "QAP_LOP", "ALL",
];

fn group(kind: &str) -> Option<&'static [Entry; 5]> {
    match kind {
        "TSP" => Some(&TSP),
        "CVRP" => Some(&CVRP),
        "QAP" => Some(&QAP),
        "LOP" => Some(&LOP),
        _ => None,
    }
}

/// Members of a named benchmark, in task order.
pub fn composition(name: &str) -> Result<Vec<Entry>> {
    let upper = name.to_ascii_uppercase();
    let parts: Vec<&str> = if upper == "ALL" {
        vec!["TSP", "CVRP", "QAP", "LOP"]
    } else {
        upper.split('_').collect()
    };
    if !BENCHMARKS.contains(&upper.as_str()) {
        return Err(BenchError::UnknownBenchmark(name.to_string()));
    }
    let mut out = Vec::new();
    for p in parts {
        out.extend_from_slice(group(p).ok_or_else(|| BenchError::UnknownBenchmark(name.to_string()))?);
    }
    Ok(out)
}

/// Parses an instance file, choosing the format by extension
/// (`.tsp`, `.vrp`, `.dat`, anything else LOLIB).
pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    let stem = path
        .file_name()
        .and_then(|s| s.to_str())
        .map(|s| s.split('.').next().unwrap_or(s).to_string())
        .unwrap_or_else(|| "unnamed".into());
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let parsed = match ext.as_str() {
        "tsp" => parse_tsplib(&text),
        "vrp" => parse_cvrp(&text),
        "dat" => parse_qaplib(&text).map(|i| i.with_name(stem.clone())),
        _ => parse_lolib(&text).map(|i| if i.name() == "unnamed" { i.with_name(stem.clone()) } else { i }),
    };
    parsed.map_err(|source| BenchError::Instance {
        path: path.to_path_buf(),
        source,
    })
}

fn locate(entry: &Entry, data_dir: &Path) -> Option<PathBuf> {
    entry.files.iter().map(|f| data_dir.join(f)).find(|p| p.is_file())
}

/// Loads every member of the named benchmark from `data_dir`.
pub fn assemble_benchmark(name: &str, data_dir: &Path) -> Result<Vec<ProblemInstance>> {
    let entries = composition(name)?;
    let missing: Vec<String> = entries
        .iter()
        .filter(|e| locate(e, data_dir).is_none())
        .map(|e| e.name.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(BenchError::MissingInstances {
            dir: data_dir.to_path_buf(),
            names: missing,
        });
    }
    entries
        .iter()
        .map(|e| {
            let inst = load_instance(&locate(e, data_dir).expect("checked above"))?;
            if inst.kind() != e.kind {
                return Err(BenchError::Config(format!("{} parsed as {}, expected {}", e.name, inst.kind(), e.kind)));
            }
            Ok(inst.with_name(e.name))
        })
        .collect()
}

/// A benchmark name, or a comma-separated list of instance files.
pub fn resolve_instances(spec: &str, data_dir: &Path) -> Result<Vec<ProblemInstance>> {
    if BENCHMARKS.iter().any(|b| b.eq_ignore_ascii_case(spec)) {
        return assemble_benchmark(spec, data_dir);
    }
    let paths: Vec<&str> = spec.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if paths.is_empty() {
        return Err(BenchError::UnknownBenchmark(spec.to_string()));
    }
    paths.iter().map(|p| load_instance(Path::new(p))).collect()
}
