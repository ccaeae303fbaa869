use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_poset-mcmc"))
}

fn network() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures/asia.json")
        .display()
        .to_string()
}

#[test]
fn gen_then_mcmc_then_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = bin()
        .args(["gen", "--network", &network(), "--rows", "200", "--seed", "3", "--out"])
        .arg(d.join("gen"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let data = d.join("gen/data.csv");
    assert_eq!(std::fs::read_to_string(&data).unwrap().lines().count(), 201);

    let run = d.join("run");
    let out = bin()
        .args(["mcmc", "--max-indegree", "2", "--bucket-size", "4", "--burnin", "20", "--thin", "5"])
        .args(["--samples", "4", "--chains", "3", "--compare-exact", "--threads", "1", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&run)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max arc deviation"));
    for f in ["trace_0.tsv", "trace_2.tsv", "samples_1.tsv", "estimate_2.csv", "estimate_pooled.csv", "summary.tsv", "deviation.tsv", "errors.tsv", "exact.csv"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let out = bin().arg("aggregate").arg("--out").arg(&run).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| bin().args(args).arg("--out").arg(dir.path()).output().unwrap().status.code();
    assert_eq!(code(&["exact", "--data", "/nonexistent/x.csv"]), Some(4));
    assert_eq!(code(&["mcmc", "--bucket-size", "big", "--network", &network(), "--rows", "10"]), Some(2));
    assert_eq!(code(&["exact", "--network", &network(), "--rows", "10", "--exact-cap", "4"]), Some(3));
    assert_eq!(code(&["exact", "--network", &network(), "--data", "x.csv"]), Some(2));
    assert_eq!(code(&["frobnicate"]), Some(2));
}
