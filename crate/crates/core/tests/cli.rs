use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use resest::{ColoredNetwork, DesignProblemInstance, SystemModel};

fn resest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resest"))
        .args(args)
        .env_remove("RESEST_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_k7(dir: &Path) {
    fs::write(dir.join("g.txt"), ColoredNetwork::complete(7).to_text()).unwrap();
    let model = SystemModel::new(
        vec![1.5],
        (0..7)
            .map(|i| vec![vec![if i < 3 { 1.0 } else { 0.0 }]])
            .collect(),
        vec![1.0],
    )
    .unwrap();
    fs::write(dir.join("m.json"), model.to_json()).unwrap();
}

#[test]
fn check_robust_yes_and_no() {
    let dir = tempfile::tempdir().unwrap();
    write_k7(dir.path());
    let g = dir.path().join("g.txt");
    let g = g.to_str().unwrap();
    let yes = resest(&[
        "check-robust",
        "--graph",
        g,
        "--sources",
        "0,1,2",
        "--f",
        "1",
        "--bruteforce",
    ]);
    assert!(yes.status.success());
    assert_eq!(stdout(&yes), "YES rounds=1\nbruteforce YES\n");
    let no = resest(&["check-robust", "--graph", g, "--sources", "0,1", "--f", "1"]);
    assert!(no.status.success());
    assert_eq!(stdout(&no), "NO counterexample=2,3,4,5,6\n");
    let mono = resest(&["check-robust", "--graph", g, "--sources", "0,1,2", "--mono"]);
    assert!(stdout(&mono).starts_with("NO"));
}

#[test]
fn input_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "N 3\nE 0 7\n").unwrap();
    let out = resest(&[
        "check-robust",
        "--graph",
        bad.to_str().unwrap(),
        "--sources",
        "0",
        "--f",
        "1",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));
    assert!(
        !resest(&["check-robust", "--graph", "x", "--sources", "0", "--bogus"])
            .status
            .success()
    );
    assert!(!resest(&["simulate", "--scenario", "/nonexistent/s.json"])
        .status
        .success());
}

#[test]
fn build_medag_writes_export() {
    let dir = tempfile::tempdir().unwrap();
    write_k7(dir.path());
    let out = dir.path().join("medag.txt");
    let o = resest(&[
        "build-medag",
        "--graph",
        dir.path().join("g.txt").to_str().unwrap(),
        "--model",
        dir.path().join("m.json").to_str().unwrap(),
        "--f",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.contains("M 0 4 : 0 1 2 @ 1"));
}

#[test]
fn simulate_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    write_k7(dir.path());
    fs::write(
        dir.path().join("s.json"),
        r#"{"network": "g.txt", "model": "m.json",
            "adversary": {"members": "auto", "strategy": {"name": "constant", "value": 1000.0}},
            "lfre": {"model": {"f_local": 1}}, "horizon": 150, "threshold": 1e-6}"#,
    )
    .unwrap();
    let s = dir.path().join("s.json");
    let out = dir.path().join("run");
    let o = resest(&[
        "simulate",
        "--scenario",
        s.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("verdict=CONVERGED"));
    assert!(out.join("trace.csv").exists() && out.join("summary.json").exists());

    // default output directory comes from the environment
    let env_out = dir.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_resest"))
        .args(["simulate", "--scenario", s.to_str().unwrap()])
        .env("RESEST_OUTPUT_DIR", &env_out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env_out.join("summary.json").exists());

    let o = resest(&[
        "sweep",
        "--scenario",
        s.to_str().unwrap(),
        "--seeds",
        "0..3",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("runs=3 converged=3"));
}

#[test]
fn reduce_then_design() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("sc.txt");
    fs::write(&sc, "p 2\nF 1\nF 2\nt 2\n").unwrap();
    let inst_dir = dir.path().join("inst");
    let o = resest(&[
        "reduce",
        "sc",
        "--in",
        sc.to_str().unwrap(),
        "--out-dir",
        inst_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let inst = DesignProblemInstance::read_from_dir(&inst_dir).unwrap();
    assert!(resest::tsra_bruteforce(&inst).unwrap().0);

    let g = inst_dir.join("graph.txt");
    let m = inst_dir.join("model.json");
    let o = resest(&[
        "design-trust",
        "--graph",
        g.to_str().unwrap(),
        "--model",
        m.to_str().unwrap(),
        "--r",
        "2",
        "--bruteforce",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        stdout(&o),
        "greedy size=2 trusted=2,3\noptimal size=2 trusted=2,3\n"
    );

    let dsc = dir.path().join("dsc.txt");
    fs::write(&dsc, "p 1\nF 1\nF 1\n").unwrap();
    let o = resest(&[
        "reduce",
        "dsc",
        "--in",
        dsc.to_str().unwrap(),
        "--out-dir",
        inst_dir.to_str().unwrap(),
    ]);
    assert!(stdout(&o).contains("trivial no"));
    // element node hears two subset nodes: two colors and r = 3 never suffice
    let o = resest(&[
        "design-colors",
        "--graph",
        g.to_str().unwrap(),
        "--model",
        m.to_str().unwrap(),
        "--r",
        "3",
    ]);
    assert_eq!(stdout(&o), "NO\n");
    let o = resest(&[
        "design-colors",
        "--graph",
        g.to_str().unwrap(),
        "--model",
        m.to_str().unwrap(),
        "--r",
        "2",
    ]);
    assert_eq!(stdout(&o), "YES colors=0,0,0\n");
}
