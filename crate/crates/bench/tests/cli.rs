use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mtea_bench::output::{read_convergence, read_matrices, read_summary, CONVERGENCE, INTERACTIONS};

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn mtea(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtea")).args(args).output().expect("spawn mtea")
}

fn run_into(out: &Path, algo: &str, extra: &[&str]) {
    let files = format!("{},{}", fixture("eil76.tsp"), fixture("kroC100.tsp"));
    let out = out.display().to_string();
    let mut args = vec![
        "run", "--benchmark", &files, "--algo", algo, "--gens", "12", "--pop", "10", "--out", &out,
    ];
    if !extra.contains(&"--runs") {
        args.extend(["--runs", "2"]);
    }
    args.extend_from_slice(extra);
    let o = mtea(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn run_writes_readable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path(), "mtea-ast", &[]);
    let traces = read_convergence(&dir.path().join(CONVERGENCE)).unwrap();
    assert_eq!(traces.len(), 2);
    assert!(traces.iter().all(|r| r.len() == 2 && r.iter().all(|t| t.len() == 13)));
    let inter: Vec<Vec<Vec<u64>>> = read_matrices(&dir.path().join(INTERACTIONS)).unwrap();
    assert_eq!(inter.len(), 2);
    assert!(dir.path().join("similarity_1.csv").is_file());
    let summary = read_summary(dir.path()).unwrap();
    assert_eq!(summary.tasks[0].name, "eil76");
    for (r, finals) in summary.final_best.iter().enumerate() {
        for (t, &v) in finals.iter().enumerate() {
            assert_eq!(v, *traces[r][t].last().unwrap());
        }
    }
    assert!(!fs::read_to_string(dir.path().join("summary.json")).unwrap().contains("wall"));
}

#[test]
fn toml_config_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "algo = \"sto\"\nruns = 5\nseed = 3\n").unwrap();
    let out: PathBuf = dir.path().join("o");
    run_into(&out, "sto", &["--config", cfg.to_str().unwrap(), "--runs", "1"]);
    let summary = read_summary(&out).unwrap();
    assert_eq!((summary.config.runs, summary.seed), (1, 3));
    assert_eq!(summary.transfer_evals, vec![vec![0, 0]]);
}

#[test]
fn stats_compares_two_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_into(&a, "mtea-ast", &[]);
    run_into(&b, "mfea", &[]);
    let o = mtea(&["stats", "--subject", a.to_str().unwrap(), "--reference", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("eil76") && text.contains("p_value"));
}

#[test]
fn unknown_benchmark_fails_cleanly() {
    let o = mtea(&["run", "--benchmark", "TSP", "--data-dir", "/nonexistent", "--runs", "1"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("kroA150"), "{err}");
}

#[test]
fn synth_sweeps_a_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = mtea(&[
        "synth", "--base", &fixture("eil76.tsp"), "--opt", &fixture("eil76.opt.tour"), "--sim-grid", "0:1:0.5",
        "--runs", "2", "--gens", "5", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(dir.path().join("synthetic.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 2);
}
