use std::path::Path;
use std::process::{Command, Output};

fn nslb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nslb"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn run_twice_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for p in &paths {
        let out = nslb(&[
            "run", "--mode", "lower_bound", "--algo", "all", "--k", "3", "--d", "40",
            "--trials", "12", "--seed", "5", "--csv", p.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(&paths[0]).unwrap();
    let b = std::fs::read(&paths[1]).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn sequential_and_parallel_agree() {
    let args = ["run", "--algo", "mixed", "--k", "2", "--d", "16", "--trials", "20"];
    let a = nslb(&args);
    let mut seq = args.to_vec();
    seq.push("--sequential");
    let b = nslb(&seq);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(&cfg, "# test\nk = 2\nd = 16\ntrials = 5\nalgo = random-search\n").unwrap();
    let out = nslb(&["run", "--config", cfg.to_str().unwrap(), "--trials", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("2,16,1.0,1.0,random-search,7,2,"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(nslb(&["run", "--k", "4", "--d", "7"]).status.code(), Some(2));
    assert_eq!(nslb(&["run", "--trials", "0", "--d", "16"]).status.code(), Some(2));
    assert_eq!(nslb(&["run", "--algo", "newton"]).status.code(), Some(2));
    assert_eq!(nslb(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(nslb(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_suites_pass() {
    for suite in ["lipschitz", "subgradient"] {
        let out = nslb(&["verify", "--suite", suite, "--trials", "500", "--d", "256"]);
        assert_eq!(out.status.code(), Some(0), "{suite}");
    }
    let out = nslb(&["verify", "--suite", "lemma2", "--trials", "20", "--k", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("lemma2_counterexamples=0"));
    let out = nslb(&["verify", "--suite", "cap", "--trials", "20000", "--tau", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("empirical=0.000000"));
}

#[test]
fn gen_writes_a_loadable_instance() {
    let dir = tempfile::tempdir().unwrap();
    let meta = dir.path().join("inst.json");
    let out = nslb(&[
        "gen", "--k", "3", "--d", "30", "--L", "2", "--B", "0.5", "--seed", "4",
        "--out", meta.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let inst = nonsmooth_lb::instance::load_instance(Path::new(&meta)).unwrap();
    let fresh = nonsmooth_lb::HardInstance::build(3, 30, 2.0, 0.5, 4).unwrap();
    assert_eq!(inst.vectors().vectors(), fresh.vectors().vectors());
    assert_eq!(inst.lipschitz(), 2.0);
}

#[test]
fn sweep_emits_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = nslb(&[
        "sweep", "--k-list", "1,2", "--d-list", "8,32", "--algo", "random-search",
        "--trials", "4", "--csv", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 5);
}
