use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 3
trials = 2

[exp1.optimizer]
max_epochs = 8
target_cost = 0.9

[exp2]
eval_episodes = 2

[exp2.optimizer]
population_size = 4
max_epochs = 12
accounting = "evaluations"

[exp2.locomotion]
episode_steps = 10

[cpg_sim]
duration_s = 1.0

[es_bench]
dim = 4

[es_bench.optimizer]
max_epochs = 30
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_compo-motor"))
}

fn run(dir: &Path, args: &[&str], threads: Option<&str>) -> Output {
    let cfg = dir.join("config.toml");
    if !cfg.exists() {
        fs::write(&cfg, SMALL).unwrap();
    }
    let mut cmd = bin();
    cmd.args(args).arg("--config").arg(&cfg).arg("--out").arg(dir.join("out"));
    match threads {
        Some(t) => cmd.env("COMPO_MOTOR_THREADS", t),
        None => cmd.env_remove("COMPO_MOTOR_THREADS"),
    };
    cmd.output().unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join("out").join(name)).unwrap()
}

#[test]
fn exp1_outputs_are_byte_identical_across_runs_and_threads() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(&run(a.path(), &["exp1-train"], None));
    ok(&run(b.path(), &["exp1-train"], Some("2")));
    for name in [
        "exp1_metrics.csv",
        "exp1_summary.csv",
        "exp1_genome_trial0.json",
        "exp1_genome_trial1.json",
        "exp1_gating_trial0.csv",
        "exp1_gating_trial1.csv",
    ] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let metrics = String::from_utf8(read(a.path(), "exp1_metrics.csv")).unwrap();
    assert!(metrics.starts_with("# seed=3\n# config_hash="));
    assert_eq!(metrics.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 11);

    ok(&run(a.path(), &["validate-genome", a.path().join("out/exp1_genome_trial0.json").to_str().unwrap()], None));
    let report = run(a.path(), &["exp1-report"], None);
    ok(&report);
    assert!(!report.stdout.is_empty());
}

#[test]
fn exp2_train_and_rollout() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    ok(&run(a.path(), &["exp2-train"], None));
    ok(&run(b.path(), &["exp2-train"], Some("3")));
    for name in ["exp2_genome.json", "exp2_gating.csv", "exp2_metrics.csv", "exp2_trajectory_left.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let genome = a.path().join("out/exp2_genome.json");
    ok(&run(a.path(), &["validate-genome", genome.to_str().unwrap()], None));

    ok(&run(a.path(), &["exp2-rollout", "--schedule", "straight:5,right:7"], None));
    let traj = String::from_utf8(read(a.path(), "rollout_trajectory.csv")).unwrap();
    assert_eq!(traj.lines().filter(|l| !l.starts_with('#')).count(), 1 + 12);

    ok(&run(a.path(), &["exp2-rollout", "--schedule", "left:0"], None));
    let traj = String::from_utf8(read(a.path(), "rollout_trajectory.csv")).unwrap();
    assert_eq!(traj.lines().filter(|l| !l.starts_with('#')).count(), 1);

    let bad = run(a.path(), &["exp2-rollout", "--schedule", "backwards:3"], None);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn tampered_genome_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(dir.path(), &["exp2-train"], None));
    let path = dir.path().join("out/exp2_genome.json");
    let mut doc: serde_json::Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    doc["tasks"][1]["row"][0] = serde_json::json!(0.9);
    let tampered = dir.path().join("tampered.json");
    fs::write(&tampered, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = bin().arg("validate-genome").arg(&tampered).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().arg("validate-genome").arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cpg_sim_and_es_bench() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(dir.path(), &["cpg-sim"], None));
    let trace = String::from_utf8(read(dir.path(), "cpg_trace.csv")).unwrap();
    assert_eq!(trace.lines().filter(|l| !l.starts_with('#')).count(), 1 + 21);
    ok(&run(dir.path(), &["es-bench", "--trials", "3"], None));
    let bench = String::from_utf8(read(dir.path(), "es_bench.csv")).unwrap();
    assert_eq!(bench.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3);
    assert!(dir.path().join("out/es_history_2.csv").exists());
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(bin().arg("--bogus").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("exp1-train").arg("--frobnicate").output().unwrap().status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "seed = 1\nunknown_key = 2\n").unwrap();
    let o = bin().arg("cpg-sim").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    fs::write(&cfg, "[exp1.episode]\nsamples_per_period = 0\n").unwrap();
    let o = bin().arg("exp1-train").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
