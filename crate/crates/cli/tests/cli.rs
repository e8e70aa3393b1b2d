use std::fs;
use std::path::{Path, PathBuf};

use mrws_cli::files::{self, load_problem, load_report, load_space, save_space, ReportFile};
use mrws_cli::{run_cli_with, CliError};
use mrws_core::space::{RandomWalkSpace, StateSpace, WeightTable};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mrws").chain(args.iter().copied());
    let code = run_cli_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(path: &Path) -> ReportFile {
    load_report(path).unwrap()
}

fn value_of(r: &ReportFile, state: &str) -> f64 {
    r.u.iter().find(|e| e.state == state).unwrap().value
}

#[test]
fn graph_file_matches_built_space() {
    let loaded = load_space(&data("p3.space.json")).unwrap();
    let states = StateSpace::new(["a", "b", "c"]).unwrap();
    let built =
        RandomWalkSpace::from_symmetric_weights(states, &WeightTable::from_edges([(0, 1, 1.0), (1, 2, 1.0)])).unwrap();
    assert_eq!(loaded.measure().weights(), built.measure().weights());
    assert_eq!(loaded.walk().rows(), built.walk().rows());
    assert_eq!(loaded.measure().weights(), &[1.0, 2.0, 1.0]);
}

#[test]
fn substochastic_row_is_rejected() {
    match load_space(&data("bad_rows.space.json")) {
        Err(CliError::ValidationFailed(mrws_core::Error::NotStochastic { state, .. })) => assert_eq!(state, "a"),
        other => panic!("unexpected {other:?}"),
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let (code, stdout, _) = run(&["validate", s(&data("bad_rows.space.json")), "--out", s(&out)]);
    assert_eq!(code, 2);
    assert!(stdout.contains("FAIL stochasticity"));
    let r = report(&out);
    assert!(!r.passed);
    assert_eq!(r.result["certificates"][0]["check"], "stochasticity");
}

#[test]
fn save_load_save_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["p3.space.json", "grid.space.json"] {
        let first = dir.path().join(format!("1-{name}"));
        let second = dir.path().join(format!("2-{name}"));
        let rws = load_space(&data(name)).unwrap();
        save_space(&rws, &first).unwrap();
        let again = load_space(&first).unwrap();
        assert_eq!(again.walk().rows(), rws.walk().rows());
        assert_eq!(again.measure().weights(), rws.measure().weights());
        save_space(&again, &second).unwrap();
        assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap(), "{name}");
    }
}

#[test]
fn metric_table_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let states = StateSpace::new(["x", "y"])
        .unwrap()
        .with_metric(vec![vec![0.0, 0.1 + 0.2], vec![0.1 + 0.2, 0.0]])
        .unwrap();
    let rws = RandomWalkSpace::from_symmetric_weights(states, &WeightTable::from_edges([(0, 1, 1.0 / 3.0)])).unwrap();
    let path = dir.path().join("m.json");
    save_space(&rws, &path).unwrap();
    let back = load_space(&path).unwrap();
    assert_eq!(back.states().distance(0, 1), Some(0.1 + 0.2));
    assert!(fs::read_to_string(&path).unwrap().contains("0.30000000000000004"));
}

#[test]
fn solve_p3_min_and_max() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let (code, _, _) = run(&["solve", s(&data("p3.problem.json")), "--tie-break", "min", "--out", s(&out)]);
    assert_eq!(code, 0);
    let r = report(&out);
    assert_eq!(value_of(&r, "b"), 0.0);
    assert_eq!(r.energies[0].value, 1.0);

    let (code, _, _) = run(&["solve", s(&data("p3.problem.json")), "--tie-break", "max", "--out", s(&out)]);
    assert_eq!(code, 0);
    assert_eq!(value_of(&report(&out), "b"), 1.0);
}

#[test]
fn solve_report_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let manifest = env!("CARGO_MANIFEST_DIR");
    let (code, _, _) = run(&["solve", "tests/data/p3.problem.json", "--out", s(&out)]);
    assert_eq!(code, 0);
    let golden = fs::read_to_string(Path::new(manifest).join("tests/golden/p3_solve.json")).unwrap();
    assert_eq!(fs::read_to_string(&out).unwrap(), golden);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["solve", "poincare", "plap", "calibrate"] {
        let a = dir.path().join(format!("{cmd}-a.json"));
        let b = dir.path().join(format!("{cmd}-b.json"));
        assert_eq!(run(&[cmd, s(&data("grid.problem.json")), "--out", s(&a)]).0, 0, "{cmd}");
        assert_eq!(run(&[cmd, s(&data("grid.problem.json")), "--out", s(&b)]).0, 0, "{cmd}");
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{cmd}");
    }
}

#[test]
fn poincare_p3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let (code, _, _) = run(&["poincare", s(&data("p3.problem.json")), "--q", "2", "--out", s(&out)]);
    assert_eq!(code, 0);
    let r = report(&out);
    let upper = r.result["upper"]["lambda_upper"].as_f64().unwrap();
    assert!((upper - 0.5).abs() <= 1e-6, "{upper}");
    assert_eq!(r.result["lambda_lower"].as_f64(), Some(0.25));
}

#[test]
fn poincare_width_shells_need_a_metric() {
    let (code, _, err) = run(&["poincare", s(&data("p3.problem.json")), "--shells", "width=1"]);
    assert_eq!(code, 1);
    assert!(err.contains("metric"), "{err}");
    let (code, stdout, _) = run(&["poincare", s(&data("grid.problem.json")), "--shells", "width=1.5"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("lambda_lower = "));
}

#[test]
fn every_energy_re_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["solve", "plap", "calibrate", "median"] {
        let out = dir.path().join(format!("{cmd}.json"));
        assert_eq!(run(&[cmd, s(&data("grid.problem.json")), "--out", s(&out)]).0, 0, "{cmd}");
        let (code, stdout, _) = run(&["report", s(&out)]);
        assert_eq!(code, 0, "{cmd}: {stdout}");
    }
}

#[test]
fn tampered_energy_fails_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    run(&["solve", s(&data("p3.problem.json")), "--out", s(&out)]);
    let mut r = report(&out);
    r.energies[0].value += 1e-9;
    fs::write(&out, files::to_json(&r)).unwrap();
    let (code, stdout, _) = run(&["report", s(&out)]);
    assert_eq!(code, 2);
    assert!(stdout.contains("FAIL J"));
}

#[test]
fn non_minimiser_fails_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    run(&["solve", s(&data("p3.problem.json")), "--out", s(&out)]);
    let mut r = report(&out);
    r.u.iter_mut().find(|e| e.state == "b").unwrap().value = 2.0;
    fs::write(&out, files::to_json(&r)).unwrap();
    assert_eq!(run(&["median", s(&data("p3.problem.json")), "--u", s(&out)]).0, 2);
    assert_eq!(run(&["calibrate", s(&data("p3.problem.json")), "--u", s(&out)]).0, 2);
}

#[test]
fn calibrate_verifies_a_given_field() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("g.json");
    fs::write(
        &good,
        r#"{"format_version": 1, "g": [["a","b",1.0],["b","a",-1.0],["b","c",1.0],["c","b",-1.0]]}"#,
    )
    .unwrap();
    let (code, stdout, _) = run(&["calibrate", s(&data("p3.problem.json")), "--g-file", s(&good)]);
    assert_eq!(code, 0, "{stdout}");
    let bad = dir.path().join("h.json");
    fs::write(&bad, r#"{"format_version": 1, "g": [["a","b",1.0],["b","a",-1.0]]}"#).unwrap();
    assert_eq!(run(&["calibrate", s(&data("p3.problem.json")), "--g-file", s(&bad)]).0, 2);
}

#[test]
fn plap_p3_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let csv = dir.path().join("p.csv");
    let (code, _, _) = run(&[
        "plap",
        s(&data("p3.problem.json")),
        "--schedule",
        "2,1.5,1.1",
        "--out",
        s(&out),
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code, 0);
    let r = report(&out);
    assert!((value_of(&r, "b") - 0.5).abs() < 1e-9);
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().next(), Some("state,value,boundary"));
    assert_eq!(table.lines().count(), 4);
    assert_eq!(run(&["plap", s(&data("p3.problem.json")), "--schedule", "1.5,2"]).0, 1);
}

#[test]
fn paper_examples_are_valid() {
    let dir = tempfile::tempdir().unwrap();
    for (which, n) in [("markov", "6"), ("tworow", "4")] {
        let out = dir.path().join(format!("{which}.json"));
        let (code, _, _) = run(&["paper-examples", "--which", which, "--n", n, "--dir", s(dir.path()), "--out", s(&out)]);
        assert_eq!(code, 0);
        let space = dir.path().join(format!("{which}-{n}.space.json"));
        let problem = dir.path().join(format!("{which}-{n}.problem.json"));
        assert_eq!(run(&["validate", s(&space)]).0, 0, "{which}");
        let loaded = load_problem(&problem).unwrap();
        assert_eq!(loaded.inputs.len(), 2);
        assert!(report(&out).result["truncation"]["tail_bound"].as_f64().unwrap() > 0.0);
        assert_eq!(run(&["solve", s(&problem)]).0, 0, "{which}");
    }
    let (code, _, err) = run(&["paper-examples", "--which", "markov", "--n", "1", "--dir", s(dir.path())]);
    assert_eq!(code, 1);
    assert!(err.contains("error"));
}

#[test]
fn usage_and_parse_errors_exit_one() {
    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, 1);
    assert!(err.contains("Usage"));
    assert_eq!(run(&["solve"]).0, 1);
    assert_eq!(run(&["solve", "/nonexistent/problem.json"]).0, 1);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("paper-examples"));

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("b.json");
    fs::write(&broken, "{\n  \"format_version\": 1,\n  \"states\": [\n").unwrap();
    let (code, _, err) = run(&["validate", s(&broken)]);
    assert_eq!(code, 1);
    assert!(err.contains(":4:"), "{err}");

    let future = dir.path().join("f.json");
    fs::write(&future, r#"{"format_version": 9, "states": [], "walk": {"variant": "graph", "edges": []}}"#).unwrap();
    let (code, _, err) = run(&["validate", s(&future)]);
    assert_eq!(code, 1);
    assert!(err.contains("unsupported format version 9"));
}

#[test]
fn boundary_mismatch_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(data("p3.space.json"), dir.path().join("p3.space.json")).unwrap();
    let problem = dir.path().join("p.json");
    fs::write(
        &problem,
        r#"{"format_version": 1, "space": "p3.space.json", "omega": ["b"], "psi": {"a": 0.0}}"#,
    )
    .unwrap();
    let (code, _, err) = run(&["solve", s(&problem)]);
    assert_eq!(code, 2);
    assert!(err.contains("missing"), "{err}");
}

#[test]
fn inline_space_problem() {
    let dir = tempfile::tempdir().unwrap();
    let space = fs::read_to_string(data("p3.space.json")).unwrap();
    let problem = dir.path().join("p.json");
    fs::write(
        &problem,
        format!(r#"{{"format_version": 1, "space": {space}, "omega": ["b"], "psi": {{"a": 0.0, "c": 1.0}}}}"#),
    )
    .unwrap();
    let loaded = load_problem(&problem).unwrap();
    assert_eq!(loaded.inputs.len(), 1);
    assert_eq!(loaded.problem.psi(), &[0.0, 1.0]);
}
