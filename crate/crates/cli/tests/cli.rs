use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn toy() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../instances/toy.json")
        .to_str()
        .unwrap()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rollstock"))
        .args(args)
        .env_remove("ROLLSTOCK_LOG")
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn dir_arg(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

/// The toy with every depot out-range closed, so nothing can run.
fn closed_toy(dir: &Path) -> PathBuf {
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(toy()).unwrap()).unwrap();
    doc["depots"][0]["out_max"] = serde_json::json!({"r1": 0, "r2": 0});
    let path = dir.join("closed.json");
    fs::write(&path, doc.to_string()).unwrap();
    path
}

#[test]
fn validate_reports_sizes() {
    let out = run(&["validate", &toy()]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("ok: toy"), "{text}");
    assert!(
        text.contains("11 arcs") && text.contains("14 rows"),
        "{text}"
    );
}

#[test]
fn missing_file_names_the_path() {
    let out = run(&["validate", "no/such/instance.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("no/such/instance.json"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn invalid_instance_points_at_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(toy()).unwrap()).unwrap();
    doc["trips"][1]["allowed_types"] = serde_json::json!(["r9"]);
    let path = dir.path().join("bad.json");
    fs::write(&path, doc.to_string()).unwrap();
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("r9") && err.contains("/trips/1"), "{err}");
}

#[test]
fn solve_ilp_writes_stable_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(&[
            "solve-ilp",
            &toy(),
            "--out",
            dir_arg(d.path()),
            "--emit-lp",
            "--emit-dot",
            "--emit-diagram",
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(stdout(&out).starts_with("optimal: objective 4.8"));
    }
    for name in [
        "solution.json",
        "model.lp",
        "network.dot",
        "diagram.svg",
        "diagram.txt",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let doc = json(&a.path().join("solution.json"));
    assert_eq!(doc["status"], "optimal");
    assert_eq!(doc["solution"]["objective_exact"], "4.8");
    let arcs: Vec<&str> = doc["solution"]["selected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["arc"].as_str().unwrap())
        .collect();
    assert_eq!(
        arcs,
        [
            "d:out->tau1/r1",
            "d:out->tau2/r1",
            "(tau1,tau2)->(tau3,tau3)/r1"
        ]
    );
    assert!(json(&a.path().join("timings.json"))["solve_ms"].is_number());
    assert!(fs::read_to_string(a.path().join("network.dot"))
        .unwrap()
        .starts_with("digraph"));
}

#[test]
fn alpha_and_delta_flags_change_the_model() {
    let out = run(&["solve-ilp", &toy(), "--alpha", "0"]);
    assert!(
        stdout(&out).starts_with("optimal: objective 2 "),
        "{}",
        stdout(&out)
    );
    let out = run(&["validate", &toy(), "--delta-max", "20"]);
    assert!(stdout(&out).contains("7 arcs"), "{}", stdout(&out));
}

#[test]
fn infeasible_instance_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = closed_toy(dir.path());
    let p = path.to_str().unwrap();
    assert_eq!(run(&["solve-ilp", p]).status.code(), Some(2));
    assert_eq!(run(&["enumerate", p]).status.code(), Some(2));
    let out = run(&[
        "solve-qubo",
        p,
        "--reads",
        "5",
        "--sweeps",
        "50",
        "--out",
        dir_arg(dir.path()),
    ]);
    assert!(out.status.success());
    assert_eq!(
        json(&dir.path().join("portfolio.json"))["solutions"],
        serde_json::json!([])
    );
    assert!(!json(&dir.path().join("rejected.json"))
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn bad_flag_values_are_rejected() {
    assert_eq!(
        run(&["solve-ilp", &toy(), "--alpha", "abc"]).status.code(),
        Some(2)
    );
    let out = run(&["solve-ilp", &toy(), "--time-limit", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--time-limit"));
    let out = run(&["solve-qubo", &toy(), "--lambda2", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--lambda2"));
    let out = run(&["solve-qubo", &toy(), "--reads", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_qubo_is_deterministic_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(&[
            "solve-qubo",
            &toy(),
            "--seed",
            "3",
            "--out",
            dir_arg(d.path()),
            "--emit-qubo",
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for name in [
        "portfolio.json",
        "rejected.json",
        "summary.json",
        "model.qubo",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let summary = json(&a.path().join("summary.json"));
    assert_eq!(summary["qubo_vars"], 20);
    assert_eq!(summary["best_objective"], 4.8);
    let portfolio = json(&a.path().join("portfolio.json"));
    assert_eq!(portfolio["solutions"][0]["objective_exact"], "4.8");
}

#[test]
fn enumerate_lists_the_three_toy_plans() {
    let out = run(&["enumerate", &toy()]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "{text}");
    assert!(lines[0].ends_with("4.8  x0 x2 x10"));
    assert!(lines[1].ends_with("5.6  x0 x3 x6 x8"));
    assert!(lines[2].ends_with("5.6  x1 x2 x5 x9"));
    assert_eq!(lines[3], "3 feasible solutions");
    let out = run(&["enumerate", &toy(), "--max", "1"]);
    assert!(stdout(&out).contains("(truncated)"));
}

#[test]
fn report_matches_library_counts() {
    let out = run(&["report", &toy()]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "T,T_single/T_coupled,D,R,delta,Delta,ilp_vars,qubo_vars/terms,slack_vars,qubo_term_bound,instance\n3,2/1,1,2,10,60,11,20/88,9,7615,toy\n"
    );
    let out = run(&["report", &toy(), "--format", "markdown"]);
    assert!(stdout(&out).contains("| 3 | 2/1 | 1 | 2 | 10 | 60 | 11 | 20/88 | 9 | 7615 | toy |"));
}

#[test]
fn diagram_redraws_portfolio_entries() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["enumerate", &toy(), "--out", dir_arg(dir.path())]);
    assert!(out.status.success());
    let portfolio = dir.path().join("portfolio.json");
    let p = portfolio.to_str().unwrap();

    let best = stdout(&run(&["diagram", &toy(), p]));
    assert!(best.contains("tau3*"), "{best}");
    let excited = stdout(&run(&["diagram", &toy(), p, "--rank", "1"]));
    assert!(
        excited.contains("v4") && !excited.contains('*'),
        "{excited}"
    );

    let drawn = dir.path().join("drawn");
    assert!(
        run(&["diagram", &toy(), p, "--out", drawn.to_str().unwrap()])
            .status
            .success()
    );
    assert!(fs::read_to_string(drawn.join("diagram.svg"))
        .unwrap()
        .starts_with("<svg"));

    let out = run(&["diagram", &toy(), p, "--rank", "7"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["diagram", &closed_toy(dir.path()).to_string_lossy(), p]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
}

#[test]
fn exports_are_deterministic_text() {
    let lp = stdout(&run(&["export-lp", &toy()]));
    assert!(lp.contains("+1.7 x0"), "{lp}");
    assert!(lp.contains("Binary") || lp.contains("Binaries"), "{lp}");
    assert_eq!(lp, stdout(&run(&["export-lp", &toy()])));

    let qubo = stdout(&run(&["export-qubo", &toy()]));
    assert!(
        qubo.starts_with("# qubo num_vars=20 num_decision=11 num_slack=9"),
        "{qubo}"
    );
    assert_eq!(qubo.lines().count(), 1 + 88);

    let ising = stdout(&run(&["export-qubo", &toy(), "--ising", "--lambda4", "50"]));
    assert!(ising.starts_with("# ising num_spins=20"), "{ising}");
    for line in ising.lines().skip(1) {
        let mut f = line.split(' ');
        let (i, j): (usize, usize) = (
            f.next().unwrap().parse().unwrap(),
            f.next().unwrap().parse().unwrap(),
        );
        assert!(i <= j);
    }

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("toy.lp");
    assert!(run(&["export-lp", &toy(), "--out", file.to_str().unwrap()])
        .status
        .success());
    assert_eq!(fs::read_to_string(file).unwrap(), lp);
}

#[test]
fn generate_is_seeded() {
    let a = stdout(&run(&[
        "generate",
        "--trips",
        "12",
        "--coupled",
        "2",
        "--seed",
        "4",
    ]));
    let b = stdout(&run(&[
        "generate",
        "--trips",
        "12",
        "--coupled",
        "2",
        "--seed",
        "4",
    ]));
    let c = stdout(&run(&[
        "generate",
        "--trips",
        "12",
        "--coupled",
        "2",
        "--seed",
        "5",
    ]));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let doc: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(doc["trips"].as_array().unwrap().len(), 12);
    assert_eq!(run(&["generate", "--trips", "0"]).status.code(), Some(1));
}

#[test]
fn log_level_comes_from_the_environment() {
    let quiet = run(&["solve-ilp", &toy()]);
    assert!(stderr(&quiet).is_empty(), "{}", stderr(&quiet));
    let loud = Command::new(env!("CARGO_BIN_EXE_rollstock"))
        .args(["solve-ilp", &toy()])
        .env("ROLLSTOCK_LOG", "debug")
        .output()
        .unwrap();
    assert!(!stderr(&loud).is_empty());
}
