use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn roaming(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roaming"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn assert_same_tree(a: &Path, b: &Path) {
    let (fa, fb) = (files(a), files(b));
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(a).unwrap(), y.strip_prefix(b).unwrap());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{} differs", x.display());
    }
}

fn assert_headers(dir: &Path) {
    for f in files(dir) {
        let text = fs::read_to_string(&f).unwrap();
        if f.extension().is_some_and(|e| e == "json") {
            assert!(text.contains("\"artifact\": \"roaming\""), "{}", f.display());
        } else {
            assert!(text.starts_with("# roaming "), "{}", f.display());
        }
    }
}

#[test]
fn critical_points_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["critical-points", "--coupling", "1", "--coupling", "8"];
    assert!(roaming(&args, a.path()).status.success());
    assert!(roaming(&args, b.path()).status.success());
    assert_same_tree(a.path(), b.path());
    assert_headers(a.path());
    let table = fs::read_to_string(a.path().join("critical_points.csv")).unwrap();
    assert!(table.lines().any(|l| l.starts_with("8,q0+,1.1000000000,")));
}

#[test]
fn orbits_do_not_depend_on_thread_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["orbits", "--energy", "1", "--mass", "mH", "--coupling", "1", "--coupling", "2"];
    let mut one = args.to_vec();
    one.extend(["--jobs", "1"]);
    let mut two = args.to_vec();
    two.extend(["--jobs", "2"]);
    assert!(roaming(&one, a.path()).status.success());
    assert!(roaming(&two, b.path()).status.success());
    assert_same_tree(a.path(), b.path());
    assert_headers(a.path());
}

#[test]
fn absent_and_omitted_cells_still_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let out = roaming(&["bound-table", "--energy", "1", "--mass", "0.7", "--coupling", "8"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("bound_table_E1.csv")).unwrap();
    assert_eq!(table.lines().last().unwrap(), "8,");
    let cells = fs::read_to_string(dir.path().join("bound_cells_E1.csv")).unwrap();
    assert!(cells.contains(",absent,"));

    let dir = tempfile::tempdir().unwrap();
    let out = roaming(&["bound-table", "--energy", "0.5", "--mass", "6", "--coupling", "1"], dir.path());
    assert!(out.status.success());
    let cells = fs::read_to_string(dir.path().join("bound_cells_E0.5.csv")).unwrap();
    assert!(cells.contains("not tabulated"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "jobs = 0\n").unwrap();
    let out = roaming(&["critical-points", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = roaming(&["critical-points", "--config", "/nonexistent/cfg.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = roaming(&["critical-points", "--mc-samples", "5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_sets_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "couplings = [3.0]\n[emit]\nradial_sections = false\n").unwrap();
    let out_dir = dir.path().join("out");
    assert!(roaming(&["critical-points", "--config", cfg.to_str().unwrap()], &out_dir).status.success());
    let table = fs::read_to_string(out_dir.join("critical_points.csv")).unwrap();
    assert!(table.lines().filter(|l| !l.starts_with('#')).skip(1).all(|l| l.starts_with("3,")));
    assert!(!out_dir.join("radial_sections").exists());
}
