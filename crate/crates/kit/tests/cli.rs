use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use richards_kit::mtx::read_matrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_richards-kit"))
}

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn richards-kit")
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const SMALL_1D: &str = r#"
[experiment]
kind = "simulate_1d"

[grid]
nz = 100
lz = 40.0
nt = 3
dt = 0.1
h_r = -61.5
h_top = -20.7
"#;

#[test]
fn bundled_scenarios_validate() {
    for entry in fs::read_dir(bundled("")).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&["validate", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn missing_dt_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "bad.cfg", &SMALL_1D.replace("dt = 0.1\n", ""));
    let out = run(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dt"));
}

#[test]
fn simulate_1d_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", SMALL_1D);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let status = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status;
        assert_eq!(status.code(), Some(0));
    }
    for name in ["newton_iterations.csv", "time_steps.csv", "final_state.csv"] {
        let x = fs::read(a.join(name)).unwrap();
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name}");
        let text = String::from_utf8(x).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# config="));
        assert!(!lines.next().unwrap().is_empty());
    }
}

#[test]
fn unconverged_run_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{SMALL_1D}\n[newton]\nmax_iter = 1\n");
    let cfg = write_cfg(dir.path(), "s.cfg", &body);
    let out = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("converged false"));
}

#[test]
fn spectrum_writes_one_file_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", bundled("appendix_d_1d.cfg").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for (l, r) in [(1, 1), (2, 0), (5, 2), (10, 1)] {
        let text = fs::read_to_string(dir.path().join(format!("eigs_symbol_step{l}_iter{r}.csv"))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "average,index,eigenvalue,eigenvalue_imag_max,symbol_quantile");
        // 798 interior unknowns for each of the two averages.
        assert_eq!(lines.len(), 2 + 2 * 798);
    }
    assert!(dir.path().join("spectrum_summary.csv").exists());
}

#[test]
fn export_matrix_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", SMALL_1D);
    let mtx = dir.path().join("j.mtx");
    let out = run(&["export-matrix", cfg.to_str().unwrap(), "--step", "2", "--iter", "1", "--out", mtx.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = read_matrix(std::io::BufReader::new(fs::File::open(&mtx).unwrap())).unwrap();
    assert_eq!((a.nrows(), a.ncols(), a.nnz()), (98, 98, 3 * 98 - 2));

    let out = run(&["export-matrix", cfg.to_str().unwrap(), "--step", "9", "--iter", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn threads_must_be_positive() {
    let out = run(&["run", bundled("appendix_d_1d.cfg").to_str().unwrap(), "--threads", "0"]);
    assert!(!out.status.success());
}
