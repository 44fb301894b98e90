use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn posim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posim"))
        .args(args)
        .env_remove("POSIM_SEED")
        .output()
        .expect("binary runs")
}

fn posim_env(args: &[&str], seed: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posim"))
        .args(args)
        .env("POSIM_SEED", seed)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn body_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn gen_is_deterministic() {
    let a = ok(&posim(&["gen", "--study", "1", "--n", "60", "--pi", "1", "--seed", "7"]));
    let b = ok(&posim(&["gen", "--study", "1", "--n", "60", "--pi", "1", "--seed", "7"]));
    assert_eq!(a, b);
    assert!(a.starts_with("# posim-dataset v1\n"));
    let c = ok(&posim(&["gen", "--study", "1", "--n", "60", "--pi", "1", "--seed", "8"]));
    assert_ne!(a, c);
}

#[test]
fn gen_seed_from_environment() {
    let flag = ok(&posim(&["gen", "--study", "2", "--n", "40", "--seed", "11"]));
    let env = ok(&posim_env(&["gen", "--study", "2", "--n", "40"], "11"));
    assert_eq!(flag, env);
}

#[test]
fn gen_study_two_full_violation_forces_everyone() {
    let text = ok(&posim(&["gen", "--study", "2", "--n", "80", "--pi", "0", "--tau", "-1e9", "--seed", "3"]));
    let rows = body_rows(&text);
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[2] == "1" && r[6] == "true"));
    assert_eq!(
        text.lines().find(|l| !l.starts_with('#')).unwrap(),
        "id,k,A,L,k_star,Y_next,forced,U,T"
    );
}

#[test]
fn gen_row_count_bounded() {
    let text = ok(&posim(&["gen", "--study", "1", "--n", "100", "--seed", "1"]));
    let rows = body_rows(&text);
    assert!(rows.len() <= 100 * 41);
    assert_eq!(rows[0].len(), 7);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(posim(&["gen", "--study", "1", "--pi", "0.5", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(posim(&["gen", "--study", "1", "--pi", "2", "--tau", "1", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(posim(&["gen", "--study", "3", "--seed", "1"]).status.code(), Some(1));
    assert_eq!(posim(&["gen", "--study", "1"]).status.code(), Some(1));
    assert_eq!(posim(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(posim(&["--help"]).status.code(), Some(0));
}

#[test]
fn truth_files() {
    let one = ok(&posim(&["truth", "--study", "1"]));
    assert!(one.contains("gamma0,,-3,"));
    assert!(one.contains("gammaA1,,0.05,"));
    assert!(one.contains("gammaA2,,-1.5,"));
    assert!(one.contains("gammaA3,,0.1,"));
    let a = ok(&posim(&["truth", "--study", "2", "--n-oracle", "3000", "--seed", "4"]));
    let b = ok(&posim(&["truth", "--study", "2", "--n-oracle", "3000", "--seed", "4"]));
    assert_eq!(a, b);
    assert!(a.contains("# n_oracle: 3000"));
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn run_is_independent_of_worker_count_and_replays_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "small.cfg",
        "study = 1\nn = 150\npi = 1, 0.3\ntau = 400\ntruncation = NoWT, 5-95\nreplications = 4\nseed = 5\n",
    );
    let d1 = dir.path().join("j1");
    let d4 = dir.path().join("j4");
    ok(&posim(&["run", &cfg, "--jobs", "1", "--out-dir", d1.to_str().unwrap()]));
    ok(&posim(&["run", &cfg, "--jobs", "4", "--out-dir", d4.to_str().unwrap()]));
    for f in ["results.csv", "curves.csv"] {
        assert_eq!(fs::read(d1.join(f)).unwrap(), fs::read(d4.join(f)).unwrap(), "{f}");
    }
    let manifest = d1.join("manifest.txt");
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.starts_with("# posim-manifest v1\n"));
    assert!(text.contains("# scenario: I-n150-pi0.3-tau400-5-95"));

    let replay = dir.path().join("replay");
    ok(&posim(&["run", manifest.to_str().unwrap(), "--out-dir", replay.to_str().unwrap()]));
    assert_eq!(fs::read(d1.join("results.csv")).unwrap(), fs::read(replay.join("results.csv")).unwrap());

    // curves: table and svg
    let table = ok(&posim(&["curves", d1.to_str().unwrap(), "--scenario", "I-n150-pi1-tau400-NoWT"]));
    let rows = body_rows(&table);
    let origin: Vec<_> = rows.iter().filter(|r| r[3] == "0").collect();
    assert_eq!(origin.len(), 2);
    assert!(origin.iter().all(|r| r[4] == "1"));
    let svg_args = ["curves", d1.to_str().unwrap(), "--scenario", "I-n150-pi0.3-NoWT", "--format", "svg"];
    let svg = ok(&posim(&svg_args));
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg, ok(&posim(&svg_args)));
    assert_eq!(svg.matches("stroke-dasharray").count() % 2, 0);
    let unknown = posim(&["curves", d1.to_str().unwrap(), "--scenario", "I-n1-pi1-tau1-NoWT"]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn run_seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", "study = 1\nn = 100\npi = 1\ntau = 0\ntruncation = NoWT\nreplications = 2\n");
    let out = dir.path().join("o");
    let missing = posim(&["run", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));
    ok(&posim_env(&["run", &cfg, "--out-dir", out.to_str().unwrap()], "9"));
    assert!(fs::read_to_string(out.join("manifest.txt")).unwrap().contains("seed = 9"));
}

#[test]
fn config_errors_listed_with_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "study = 1\npi = 7\nwhat = 3\n");
    let out = posim(&["run", &cfg, "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2:"), "{err}");
    assert!(err.contains("line 3:"), "{err}");
}

#[test]
fn study_two_without_truth_points_to_truth_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "two.cfg", "study = 2\nn = 50\npi = 1\ntau = 1\nreplications = 2\nseed = 1\n");
    let out = posim(&["run", &cfg, "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("posim truth --study 2"));

    let truth = dir.path().join("truth2.csv");
    ok(&posim(&["truth", "--study", "2", "--n-oracle", "4000", "--seed", "1", "--out", truth.to_str().unwrap()]));
    let cfg = write_config(
        dir.path(),
        "two.cfg",
        "study = 2\nn = 50\npi = 1\ntau = 1\nreplications = 2\nseed = 1\ntruth = truth2.csv\n",
    );
    let out_dir = dir.path().join("o");
    ok(&posim(&["run", &cfg, "--out-dir", out_dir.to_str().unwrap()]));
    let results = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert!(results.contains("CA0(5)"));
}
