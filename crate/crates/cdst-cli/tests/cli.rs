//! End-to-end tests of the `cdst` binary: files in, files and exit codes
//! out.

use std::path::Path;
use std::process::{Command, Output};

use cdst::instances::{gen_random, write_instance, write_solution};
use cdst::model::{CostBreakdown, Instance, Solution};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cdst"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// The six-point complete unit-metric instance with a path initial tree.
fn unit_path_files(dir: &Path) -> (String, String) {
    let ids: Vec<String> = ["r", "v5", "v4", "v3", "v2", "v1", "v0"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let n = ids.len();
    let matrix: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
        .collect();
    let terminals: Vec<(String, f64)> = ids[1..]
        .iter()
        .map(|id| (id.clone(), if id == "v5" || id == "v0" { 1.0 } else { 0.0 }))
        .collect();
    let instance = Instance::with_matrix(ids, matrix, "r", terminals).unwrap();

    let inst_path = dir.join("path.json");
    write_instance(&inst_path, &instance).unwrap();

    let tree = Solution {
        edges: (0..6).map(|i| (i, i + 1)).collect(),
    };
    let costs = CostBreakdown {
        connection: 6.0,
        delay: 7.0,
        total: 13.0,
    };
    let tree_path = dir.join("path-tree.json");
    write_solution(&tree_path, &instance, &tree, &costs).unwrap();

    (
        inst_path.to_string_lossy().into_owned(),
        tree_path.to_string_lossy().into_owned(),
    )
}

#[test]
fn solve_reproduces_the_unit_path_totals_from_a_given_tree() {
    let dir = tempfile::tempdir().unwrap();
    let (inst, tree) = unit_path_files(dir.path());
    let out_path = dir.path().join("sol.json");

    for (splitter, want) in [("baseline", "total: 13.000000000"), ("improved", "total: 8.000000000")] {
        let out = run(&[
            "solve",
            "--input",
            &inst,
            "--initial",
            &tree,
            "--mu",
            "1",
            "--splitter",
            splitter,
            "--output",
            out_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
        assert_eq!(stdout_of(&out).trim(), want, "splitter {splitter}");
    }
}

#[test]
fn solve_report_and_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let instance = gen_random(6, 3, "random-graph").unwrap();
    let inst_path = dir.path().join("inst.json");
    write_instance(&inst_path, &instance).unwrap();
    let sol_path = dir.path().join("sol.json");
    let rep_path = dir.path().join("rep.json");

    let out = run(&[
        "solve",
        "--input",
        inst_path.to_str().unwrap(),
        "--output",
        sol_path.to_str().unwrap(),
        "--report",
        rep_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).starts_with("total: "));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&rep_path).unwrap()).unwrap();
    assert_eq!(report["bounds_ok"], serde_json::Value::Bool(true));
    assert_eq!(report["splitter"], "improved");
    assert_eq!(report["beta_method"], "mst");

    let out = run(&[
        "check",
        "--input",
        inst_path.to_str().unwrap(),
        "--solution",
        sol_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(
        stdout_of(&out).starts_with("ok: tree spans all terminals"),
        "stdout: {}",
        stdout_of(&out)
    );
}

#[test]
fn check_rejects_a_corrupted_cost_with_a_diff_and_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let instance = gen_random(5, 9, "random-graph").unwrap();
    let inst_path = dir.path().join("inst.json");
    write_instance(&inst_path, &instance).unwrap();
    let sol_path = dir.path().join("sol.json");

    let out = run(&[
        "solve",
        "--input",
        inst_path.to_str().unwrap(),
        "--output",
        sol_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    // Hand-edit the stored total.
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sol_path).unwrap()).unwrap();
    let total = doc["costs"]["total"].as_f64().unwrap();
    doc["costs"]["total"] = serde_json::json!(total + 1.0);
    std::fs::write(&sol_path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();

    let out = run(&[
        "check",
        "--input",
        inst_path.to_str().unwrap(),
        "--solution",
        sol_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = stdout_of(&out);
    assert!(
        stdout.contains("check failed: total: stored"),
        "stdout: {stdout}"
    );

    // A corrupted edge list (unknown endpoint) also fails with exit 1.
    doc["edges"][0][0] = serde_json::json!("no-such-point");
    std::fs::write(&sol_path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let out = run(&[
        "check",
        "--input",
        inst_path.to_str().unwrap(),
        "--solution",
        sol_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stdout_of(&out).contains("unknown point id"),
        "stdout: {}",
        stdout_of(&out)
    );
}

#[test]
fn generators_write_identical_bytes_for_identical_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, label) in [(&a, "first"), (&b, "second")] {
        let out = run(&[
            "gen",
            "random",
            "--terminals",
            "7",
            "--seed",
            "42",
            "--family",
            "euclidean2d",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{label} run: {}", stderr_of(&out));
        assert!(stdout_of(&out).starts_with("wrote "));
    }
    assert_eq!(
        std::fs::read(&a).unwrap(),
        std::fs::read(&b).unwrap(),
        "generator output must be byte-identical across runs"
    );

    let g = dir.path().join("gap.json");
    let out = run(&[
        "gen", "gap", "--k", "2", "--delta", "0.2", "--delta-prime", "0.25", "--out",
        g.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = std::fs::read_to_string(&g).unwrap();
    assert!(text.contains("\"type\": \"graph\""), "gap instance is a graph metric");
}

#[test]
fn factors_table_is_exact() {
    let out = run(&["factors"]);
    assert!(out.status.success());
    let stdout = stdout_of(&out);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(
        lines,
        vec![
            "factor,beta_1,beta_ln4,beta_1.5,beta_2",
            "weight-threshold,2.00000,2.38630,2.50000,3.00000",
            "refined,1.70711,2.04782,2.15139,2.61804",
        ]
    );
}

#[test]
fn oracle_never_loses_to_solve_and_its_output_passes_check() {
    let dir = tempfile::tempdir().unwrap();
    let instance = gen_random(4, 11, "random-graph").unwrap();
    let inst_path = dir.path().join("inst.json");
    write_instance(&inst_path, &instance).unwrap();
    let best_path = dir.path().join("best.json");
    let sol_path = dir.path().join("sol.json");

    let out = run(&[
        "oracle",
        "--input",
        inst_path.to_str().unwrap(),
        "--output",
        best_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let oracle_total = doc["costs"]["total"].as_f64().unwrap();

    let out = run(&[
        "solve",
        "--input",
        inst_path.to_str().unwrap(),
        "--output",
        sol_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let solve_total: f64 = stdout_of(&out)
        .trim()
        .strip_prefix("total: ")
        .unwrap()
        .parse()
        .unwrap();
    assert!(
        oracle_total <= solve_total + 1e-9 * (1.0 + solve_total.abs()),
        "oracle {oracle_total} must not exceed solve {solve_total}"
    );

    let out = run(&[
        "check",
        "--input",
        inst_path.to_str().unwrap(),
        "--solution",
        best_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "oracle output fails check: {}", stdout_of(&out));
}

#[test]
fn invalid_input_exits_2_with_the_json_pointer() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"points\": []}").unwrap();
    let out = run(&[
        "solve",
        "--input",
        bad.to_str().unwrap(),
        "--output",
        dir.path().join("x.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = stderr_of(&out);
    assert!(
        stderr.contains("error: parse error at"),
        "stderr: {stderr}"
    );
}

#[test]
fn bench_emits_one_csv_row_per_instance_and_splitter() {
    let out = run(&["bench", "--gap-max", "2", "--seeds", "1"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(
        lines[0],
        "instance,beta_method,splitter,mu,connection,delay,total,lower_bound,ratio,wall_micros,node_visits"
    );
    // 2 gap instances + 3 random families × 1 seed, × 2 splitters.
    assert_eq!(lines.len(), 1 + 5 * 2, "rows: {stdout}");
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), 11, "row `{row}`");
    }
    let improved: Vec<&&str> = lines[1..].iter().filter(|r| r.contains(",improved,")).collect();
    assert_eq!(improved.len(), 5);
}
