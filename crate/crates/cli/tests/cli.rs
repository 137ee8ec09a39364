use std::path::Path;
use std::process::{Command, Output};

fn evostep(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evostep"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_field(path: &Path, key: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v[key].as_f64().unwrap()
}

#[test]
fn solve_writes_dump_and_nonnegative_margins() {
    let dir = tempfile::tempdir().unwrap();
    let out = evostep(dir.path(), &["solve", "--k", "2", "--r", "1", "--M", "64", "--N", "32", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.path().join("o/solution_cgp.txt")).unwrap();
    assert!(table.starts_with("# scheme=cgp"));
    let csv = std::fs::read_to_string(dir.path().join("o/stability_cgp.csv")).unwrap();
    let margins: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(margins.len(), 64);
    assert!(margins.iter().all(|&m| m >= 0.0));
}

#[test]
fn unresolved_kink_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = evostep(dir.path(), &["solve", "--M", "63"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("KinkNotResolved"));
}

#[test]
fn bad_inputs_exit_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "k = \"two\"").unwrap();
    assert_eq!(evostep(dir.path(), &["solve", "--config", "bad.toml"]).status.code(), Some(2));
    assert_eq!(evostep(dir.path(), &["solve", "--rho", "-1"]).status.code(), Some(2));
    assert_eq!(evostep(dir.path(), &["study", "--levels", "8,12"]).status.code(), Some(2));
    assert_eq!(evostep(dir.path(), &["solve", "--scheme", "rk4"]).status.code(), Some(2));
}

#[test]
fn exactness_problem_is_reproduced() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["solve", "--problem", "manufactured-exactness", "--k", "3", "--r", "2", "--M", "8", "--N", "8"];
    let out = evostep(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(json_field(&dir.path().join("out/errors_cgp.json"), "full") <= 1e-9);
}

#[test]
fn reference_round_trip_gives_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let params = ["--M", "16", "--N", "8", "--k", "2", "--r", "2"];
    let mut args = vec!["reference", "--out", "ref"];
    args.extend(params);
    assert!(evostep(dir.path(), &args).status.success());
    let mut args = vec!["solve", "--reference", "ref/reference.bin", "--out", "o"];
    args.extend(params);
    let out = evostep(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let errors = dir.path().join("o/errors_cgp.json");
    for key in ["full", "projected", "final_energy", "l2"] {
        assert_eq!(json_field(&errors, key), 0.0, "{key}");
    }
}

#[test]
fn study_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
        problem = "manufactured-smooth"
        scheme = "both"
        levels = [8, 16, 32]
        "#;
    std::fs::write(dir.path().join("s.toml"), cfg).unwrap();
    let a = evostep(dir.path(), &["study", "--config", "s.toml", "--out", "a"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = Command::new(env!("CARGO_BIN_EXE_evostep"))
        .current_dir(dir.path())
        .args(["study", "--config", "s.toml", "--out", "b"])
        .env("EVOSTEP_THREADS", "1")
        .output()
        .unwrap();
    assert!(b.status.success());
    let read = |d: &str| std::fs::read(dir.path().join(d).join("study.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    let text = String::from_utf8(read("a")).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().all(|l| l.ends_with("manufactured-smooth") || l.starts_with("M,")));
}

#[test]
fn compare_tabulates_both_schemes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["compare", "--problem", "manufactured-smooth", "--levels", "8x4,16x8"];
    let out = evostep(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/compare.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("M,N,k,r_cgp,r_dg,err_cgp,err_dg,ratio_dg_cgp"));
    assert_eq!(lines.count(), 2);
}
