//! End-to-end runs of the `implab` binary: exit codes and output files.

use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_implab");

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.ini");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().expect("run implab");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn run_with(cfg: &Path, out: &Path, cmd: &str, extra: &[&str]) -> i32 {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args).0
}

const TINY_GRID: &str = "[grid]\nnx = 2\nny = 2\nmax_iter = 200\n";

#[test]
fn rejected_configurations_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for body in ["[map]\nrho = 1\n", "[region]\nr = 0.5\ns = 0.6\n", "[lavaurs]\nn_list = 800\n", "[grid]\nnx = 1\n", "[nope]\n"] {
        let cfg = write_config(dir.path(), body);
        for cmd in ["verify", "render", "implode"] {
            assert_eq!(run_with(&cfg, &out, cmd, &[]), 2, "{cmd} with {body:?}");
        }
    }
    assert_eq!(run(&["verify", "--config", "/nonexistent.ini", "--out", "/tmp"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn zero_threads_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY_GRID);
    assert_eq!(run_with(&cfg, dir.path(), "render", &["--threads", "0"]), 2);
}

#[test]
fn render_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY_GRID);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run_with(&cfg, &a, "render", &["--threads", "1"]), 0);
    assert_eq!(run_with(&cfg, &b, "render", &["--threads", "2"]), 0);
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 3);
    for n in &names {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n:?}");
    }
}

#[test]
fn render_filenames_track_eps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY_GRID);
    let out = dir.path().join("o");
    assert_eq!(run_with(&cfg, &out, "render", &[]), 0);
    assert_eq!(run_with(&cfg, &out, "render", &["--eps", "0.007853981633974483", "0"]), 0);
    let names: Vec<String> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert_eq!(names.len(), 6);
    assert!(names.iter().any(|n| n.starts_with("k_eps_0.000000e0_0.000000e0_")));
    assert!(names.iter().any(|n| n.starts_with("k_eps_7.853982e-3_0.000000e0_")));
}

#[test]
fn implode_without_witnesses_is_inconclusive() {
    // A slice far outside K(F_0): every candidate set is empty.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nx_min = 30 30\nx_max = 31 31\nnx = 4\nny = 4\nmax_iter = 100\n");
    assert_eq!(run_with(&cfg, &dir.path().join("o"), "implode", &[]), 1);
}

#[test]
fn verify_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[run]\nfatou_points = 3\nwindow_points = 3\nladder = 50 100\nestimate_eps = 100 200\n");
    let out = dir.path().join("o");
    let (code, stdout) = run(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(code == 0 || code == 1);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 7);
    for f in ["verify_summary.txt", "fatou_equation.csv", "almost_fatou.csv", "lavaurs_2d.csv", "entry_exit.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}
