use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use novelty::analysis::chernoff_upper_bounds;
use tempfile::TempDir;

fn novelty(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_novelty"))
        .args(args)
        .output()
        .expect("failed to launch the novelty binary")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run_ok(command: &str, config: &Path) -> String {
    let out = novelty(&[command, config.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{command} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SMALL_DATA: &str = "\
seed = 3
synth.classes = 6
synth.dim = 4
synth.examples_per_class = 40
synth.center_spread = 2.5
cv.folds = 3
cv.repeats = 2
train.max_epochs = 60
";

#[test]
fn synth_writes_one_row_per_example() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "synth.cfg",
        "synth.classes = 3\nsynth.examples_per_class = 5\nsynth.dim = 2\nsynth.output = data.csv\n",
    );
    run_ok("synth", &cfg);
    let first = fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert_eq!(first.lines().count(), 1 + 15);

    run_ok("synth", &cfg);
    let second = fs::read_to_string(dir.path().join("data.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn missing_config_is_a_config_error() {
    let out = novelty(&["synth", "/nonexistent/novelty.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_synth_spec_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "synth.classes = 1\n");
    let out = novelty(&["synth", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_with_one_method_has_a_row_per_fold_and_repeat() {
    let dir = TempDir::new().unwrap();
    let body =
        format!("{SMALL_DATA}methods = max_confidence\neval.set_sizes = 1\noutput.dir = out\n");
    let cfg = write_config(dir.path(), "run.cfg", &body);
    let stdout = run_ok("run", &cfg);
    assert!(stdout.contains("max_confidence"));

    let summary = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 3 * 2);
    assert!(rows.iter().all(|r| r.starts_with("max_confidence,")));
}

#[test]
fn run_writes_roc_files_for_every_set_size() {
    let dir = TempDir::new().unwrap();
    let body =
        format!("{SMALL_DATA}methods = max_confidence\neval.set_sizes = 1, 5\noutput.dir = out\n");
    let cfg = write_config(dir.path(), "run.cfg", &body);
    run_ok("run", &cfg);
    for repeat in 0..2 {
        for s in [1, 5] {
            for fold in 0..3 {
                let path = dir.path().join(format!(
                    "out/repeat_{repeat}/roc_max_confidence_{s}_{fold}.csv"
                ));
                assert!(path.is_file(), "missing {}", path.display());
            }
        }
    }
}

#[test]
fn rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "{SMALL_DATA}methods = ensemble, knn\nensemble.L = 6\nensemble.novel_fraction = 0.25\n\
         ensemble.sub_sizes = 3\nbaselines.knn_k = 1\nbaselines.representations = original\n\
         eval.set_sizes = 1, 3\n"
    );
    let a = write_config(dir.path(), "a.cfg", &format!("{body}output.dir = a\n"));
    let b = write_config(dir.path(), "b.cfg", &format!("{body}output.dir = b\n"));
    run_ok("run", &a);
    run_ok("run", &b);
    for name in ["summary.csv", "vote_gap.csv", "theta_scatter.csv"] {
        let left = fs::read(dir.path().join("a").join(name)).unwrap();
        let right = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(left, right, "{name} differs");
    }
}

#[test]
fn bad_key_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", "ensemble.size = 3\n");
    let out = novelty(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn impossible_fold_layout_exits_with_one_before_writing() {
    let dir = TempDir::new().unwrap();
    let body = format!("{SMALL_DATA}cv.folds = 7\noutput.dir = out\n");
    let cfg = write_config(dir.path(), "run.cfg", &body);
    let out = novelty(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unreadable_data_exits_with_two_and_leaves_nothing() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.cfg",
        "data.source = csv\ndata.csv = missing.csv\noutput.dir = out\n",
    );
    let out = novelty(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn diagnose_writes_the_scatter_table() {
    let dir = TempDir::new().unwrap();
    let body = format!("{SMALL_DATA}ensemble.L = 6\nensemble.novel_fraction = 0.25\neval.set_sizes = 1\noutput.dir = out\n");
    let cfg = write_config(dir.path(), "diag.cfg", &body);
    run_ok("diagnose", &cfg);
    let scatter = fs::read_to_string(dir.path().join("out/theta_scatter.csv")).unwrap();
    let mut lines = scatter.lines();
    assert_eq!(lines.next(), Some("theta_set,theta_class,category"));
    let categories: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    for c in ["known", "presumed_novel", "truly_novel"] {
        assert!(categories.contains(&c), "no {c} rows");
    }
}

fn report_rows(dir: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(dir.join("out/chernoff_report.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("L,delta,mu_novel,mu_known,bound_upper,bound_lower,empirical_upper,empirical_lower,midpoint_error")
    );
    lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn simulate_reports_each_size_for_each_delta() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.cfg",
        "simulate.p = 0.7\nsimulate.q = 0.3\nsimulate.L = 10, 50\nsimulate.delta = 0.3, 0.5\n\
         simulate.trials = 2000\noutput.dir = out\n",
    );
    run_ok("simulate", &cfg);
    let rows = report_rows(dir.path());
    assert_eq!(rows.len(), 4);
    let sizes: Vec<(f64, f64)> = rows.iter().map(|r| (r[1], r[0])).collect();
    assert_eq!(
        sizes,
        vec![(0.3, 10.0), (0.3, 50.0), (0.5, 10.0), (0.5, 50.0)]
    );
    for r in &rows {
        let (delta, mu_novel, mu_known) = (r[1], r[2], r[3]);
        assert_eq!(r[4], chernoff_upper_bounds(mu_known, delta).unwrap().0);
        assert_eq!(r[5], chernoff_upper_bounds(mu_novel, delta).unwrap().1);
    }
}

#[test]
fn perfect_voters_never_err() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.cfg",
        "simulate.p = 1\nsimulate.q = 0\nsimulate.L = 10, 50\nsimulate.trials = 1000\noutput.dir = out\n",
    );
    run_ok("simulate", &cfg);
    for r in report_rows(dir.path()) {
        assert_eq!(r[8], 0.0);
    }
}
