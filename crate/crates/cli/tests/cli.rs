use std::fs;
use std::path::{Path, PathBuf};

use fedlab::harness::{grad_evals_to_target, read_trace_csv, rounds_to_target};
use fedlab_cli::commands::{read_summary, trace_file_name};

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn fedlab(args: &[&str]) -> Output {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let argv = std::iter::once("fedlab").chain(args.iter().copied());
    let code = fedlab_cli::run_cli(argv, &mut stdout, &mut stderr);
    Output {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"{
  "name": "small",
  "problem": {
    "kind": "quadratic",
    "generator": {"n": 3, "m": 2, "d": 10, "max_norm": 20.0, "min_eig": 1.0, "target_delta": 2.0, "beta": 0.0},
    "seed": 4
  },
  "methods": [
    {"auto": {"method": "gd"}},
    {"auto": {"method": "fedred_gd", "label": "fedred gd"}}
  ],
  "budget": {"max_iterations": 300, "target": {"relative": 1e-8}},
  "repeats": 2
}"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn bundled_quadratic_config_writes_traces_summary_and_plots() {
    let out = tempfile::tempdir().unwrap();
    let res = fedlab(&[
        "run",
        "--config",
        s(&example("quadratic_sc.json")),
        "--out",
        s(out.path()),
    ]);
    assert_eq!(res.code, 0, "{}", res.stderr);

    let mut names: Vec<String> = fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let traces: Vec<&String> = names
        .iter()
        .filter(|n| n.ends_with(".csv") && *n != "summary.csv")
        .collect();
    assert_eq!(traces.len(), 6, "{names:?}");
    assert!(names.contains(&"summary.csv".to_string()));
    assert_eq!(names.iter().filter(|n| n.ends_with(".svg")).count(), 2);

    let rows = read_summary(&out.path().join("summary.csv")).unwrap();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        assert!(res.stdout.contains(&row.method), "{}", res.stdout);
        let file = out.path().join(trace_file_name(&row.method, row.seed));
        let trace = read_trace_csv(fs::File::open(&file).unwrap()).unwrap();
        let last = trace.last().unwrap();
        assert_eq!(
            (last.k, last.rounds, last.grad_evals),
            (row.final_k, row.final_rounds, row.final_grad_evals)
        );
        let eps = row.target.unwrap();
        assert_eq!(
            rounds_to_target(&trace, eps),
            row.rounds_to_target,
            "{}",
            row.method
        );
        assert_eq!(grad_evals_to_target(&trace, eps), row.grad_evals_to_target);
        assert_eq!(row.reached, row.rounds_to_target.is_some());
    }
    let svg = fs::read_to_string(out.path().join("convergence_rounds.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.matches("<polyline").count() >= 5);
}

#[test]
fn seed_override_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.json", SMALL);
    let read_all = |out: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(out)
            .unwrap()
            .map(|e| e.unwrap())
            .map(|e| {
                (
                    e.file_name().to_string_lossy().into_owned(),
                    fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        files
    };
    let mut runs = Vec::new();
    for (i, workers) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let res = fedlab(&[
            "run",
            "--config",
            s(&config),
            "--out",
            s(&out),
            "--seed",
            "7",
            "--workers",
            workers,
        ]);
        assert_eq!(res.code, 0, "{}", res.stderr);
        runs.push(read_all(&out));
    }
    assert_eq!(runs[0], runs[1]);
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    for expected in [
        "gd_seed7.csv",
        "gd_seed8.csv",
        "fedred_gd_seed7.csv",
        "fedred_gd_seed8.csv",
    ] {
        assert!(names.contains(&expected), "{names:?}");
    }
}

#[test]
fn different_seeds_change_randomized_traces() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.json", SMALL);
    let out = dir.path().join("out");
    assert_eq!(
        fedlab(&["run", "--config", s(&config), "--out", s(&out)]).code,
        0
    );
    let a = fs::read(out.join("fedred_gd_seed0.csv")).unwrap();
    let b = fs::read(out.join("fedred_gd_seed1.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn missing_dataset_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{"problem": {"kind": "logistic", "dataset": "nowhere.libsvm", "clients": 3},
            "methods": [{"auto": {"method": "gd"}}], "budget": {"max_rounds": 5}}"#,
    );
    let res = fedlab(&["run", "--config", s(&config)]);
    assert_eq!(res.code, 2);
    assert!(res.stderr.contains("dataset"), "{}", res.stderr);
    assert!(!dir.path().join("fedlab-out").exists());
}

#[test]
fn unknown_key_reports_its_location() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "typo.json",
        "{\n  \"problem\": {\"kind\": \"matrices\", \"clients\": []},\n  \"methods\": [],\n  \"budgett\": {}\n}",
    );
    let res = fedlab(&["run", "--config", s(&config)]);
    assert_eq!(res.code, 2);
    assert!(
        res.stderr.contains("budgett") && res.stderr.contains("line 4"),
        "{}",
        res.stderr
    );
}

#[test]
fn unreadable_config_and_bad_flags_exit_with_code_two() {
    assert_eq!(
        fedlab(&["run", "--config", "/nonexistent/config.json"]).code,
        2
    );
    assert_eq!(fedlab(&["run"]).code, 2);
    assert_eq!(fedlab(&["frobnicate"]).code, 2);
    assert_eq!(fedlab(&["--help"]).code, 0);
}

#[test]
fn delta_on_the_remark_matrices() {
    let res = fedlab(&["delta", "--config", s(&example("remark_matrices.json"))]);
    assert_eq!(res.code, 0, "{}", res.stderr);
    assert!(
        res.stdout.contains("2.160247") && res.stdout.contains("2.516611"),
        "{}",
        res.stdout
    );
    assert!(res.stdout.contains("3.000000"));
}

#[test]
fn delta_on_identical_clients_is_zero() {
    let res = fedlab(&["delta", "--config", s(&example("identical_clients.json"))]);
    assert_eq!(res.code, 0, "{}", res.stderr);
    let json = res.stdout.lines().find(|l| l.starts_with('{')).unwrap();
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(v["exact"]["delta_a"], 0.0);
    assert_eq!(v["exact"]["delta_b"], 0.0);
}

#[test]
fn delta_on_logistic_data_is_sampled() {
    let res = fedlab(&[
        "delta",
        "--config",
        s(&example("logistic.json")),
        "--pairs",
        "25",
    ]);
    assert_eq!(res.code, 0, "{}", res.stderr);
    assert!(
        res.stdout.contains("sampled estimate from 25 point pairs"),
        "{}",
        res.stdout
    );
}
