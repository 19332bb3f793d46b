//! End-to-end runs of the `dynclust` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dynclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynclust")).args(args).env_remove("DYNCLUST_THREADS").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn lines(out: &Output) -> Vec<Value> {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

const LINE: &str = "# metric=l2 dim=1\n+ a 0\n+ b 1\n+ c 10\n+ d 11\n";

/// Clustered points in the plane with deletions and a re-insertion.
fn mixed_stream() -> String {
    let mut s = String::from("# metric=l2 dim=2\n");
    for i in 0..24 {
        let (cx, cy) = [(0.0, 0.0), (50.0, 0.0), (0.0, 50.0)][i % 3];
        s += &format!("+ p{i} {} {}\n", cx + (i * 7 % 5) as f64, cy + (i * 3 % 4) as f64);
    }
    for i in (0..24).step_by(4) {
        s += &format!("- p{i}\n");
    }
    s += "+ p0 25 25\n";
    s
}

#[test]
fn four_point_line_matches_the_kcenter_example() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "line.txt", LINE);
    let out = lines(&dynclust(&[
        "run",
        "--algo",
        "lfmis-kcenter",
        "--k",
        "2",
        "--eps",
        "0.5",
        "--seed",
        "1",
        "--input",
        &input,
    ]));
    assert_eq!(out.len(), 4);
    let last = out.last().unwrap();
    assert!(last["cost_estimate"].as_f64().unwrap() <= 2.5);
    assert_eq!(last["n_active"], 4);
    assert_eq!(last["num_centers"], 2);
    for (t, line) in out.iter().enumerate() {
        assert_eq!(line["t"], t as u64 + 1);
        assert!(line["realized_cost"].as_f64().unwrap() <= line["cost_estimate"].as_f64().unwrap());
    }
}

#[test]
fn det_tree_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", &mixed_stream());
    let run = |name: &str| {
        let output = dir.path().join(name);
        let out = dynclust(&[
            "run",
            "--algo",
            "det-tree",
            "--k",
            "3",
            "--eps",
            "0.5",
            "--input",
            &input,
            "--output",
            output.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(output).unwrap()
    };
    let (a, b) = (run("a.jsonl"), run("b.jsonl"));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn seeds_change_centers_but_not_the_guarantee() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", &mixed_stream());
    for seed in ["1", "2", "3"] {
        let out = lines(&dynclust(&["run", "--algo", "lfmis-kcenter", "--k", "3", "--seed", seed, "--input", &input]));
        assert_eq!(out.len(), 31);
        // Three clusters of diameter at most 5 (plus one far point at the end).
        for line in &out[..30] {
            assert!(line["cost_estimate"].as_f64().unwrap() <= 2.5 * 5.0);
        }
    }
}

#[test]
fn every_algorithm_passes_the_verifier() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", &mixed_stream());
    for (algo, extra) in [
        ("lfmis-kcenter", vec![]),
        ("lsh-kcenter", vec!["--c", "2", "--delta", "0.2"]),
        ("det-tree", vec!["--B", "3"]),
        ("sum-radii", vec!["--solver", "exact"]),
        ("sum-diam", vec![]),
    ] {
        let mut args = vec!["run", "--algo", algo, "--k", "3", "--seed", "4", "--input", &input];
        args.extend(extra);
        let out = lines(&dynclust(&args));
        assert_eq!(out.len(), 31, "{algo}");
        let last = out.last().unwrap();
        assert_eq!(last["n_active"], 19, "{algo}");
        assert!(last["num_centers"].as_u64().unwrap() <= 3, "{algo}");
        let queries: u64 = out.iter().map(|l| l["distance_queries_delta"].as_u64().unwrap()).sum();
        assert!(queries > 0, "{algo}");
    }
}

#[test]
fn matrix_streams_index_rows_by_insertion_order() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "m.csv", "0,1,9,9\n1,0,9,9\n9,9,0,2\n9,9,2,0\n");
    let input = write(dir.path(), "s.txt", "# metric=matrix file=m.csv\n+ w\n+ x\n+ y\n+ z\n- x\n");
    let out = lines(&dynclust(&["run", "--algo", "lfmis-kcenter", "--k", "2", "--input", &input]));
    assert_eq!(out.len(), 5);
    assert!(out[3]["realized_cost"].as_f64().unwrap() <= 2.0);
    assert_eq!(out[4]["n_active"], 3);
}

#[test]
fn metric_override_applies_to_coordinate_streams() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", "# metric=l2 dim=2\n+ a 0 0\n+ b 3 4\n");
    let out = lines(&dynclust(&["run", "--algo", "sum-diam", "--k", "1", "--metric", "l1", "--input", &input]));
    assert_eq!(out[1]["realized_cost"].as_f64().unwrap(), 7.0);
}

#[test]
fn invalid_flags_and_inputs_fail_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "line.txt", LINE);
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["--algo", "det-tree", "--k", "2", "--c", "2"], "--c applies only to lsh-kcenter"),
        (vec!["--algo", "lfmis-kcenter", "--k", "2", "--B", "3"], "--b applies only to det-tree"),
        (vec!["--algo", "lsh-kcenter", "--k", "2", "--c", "1"], "--c must exceed 1"),
        (vec!["--algo", "lfmis-kcenter", "--k", "0"], "--k must be at least 1"),
        (vec!["--algo", "lfmis-kcenter", "--k", "2", "--eps", "0"], "--eps"),
        (vec!["--algo", "lfmis-kcenter", "--k", "2", "--budget-f", "1"], "only to --algo gauntlet"),
        (vec!["--algo", "lfmis-kcenter", "--k", "1", "--r-max", "3"], "no scale of the ladder"),
    ];
    for (flags, msg) in cases {
        let mut args = vec!["run", "--input", &input];
        args.extend(flags);
        let out = dynclust(&args);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(msg), "{args:?}: {err}");
    }
    for (text, msg) in [
        ("+ a 0\n", "header"),
        ("# metric=l2 dim=1\n+ a 0\n- b\n", "line 3"),
        ("# metric=l2 dim=1\n+ a 0\n+ a 1\n", "already active"),
        ("# metric=l2 dim=2\n+ a 0\n", "expected 2 coordinates"),
        ("# metric=matrix file=missing.csv\n+ a\n", "cannot read"),
    ] {
        let bad = write(dir.path(), "bad.txt", text);
        let out = dynclust(&["run", "--algo", "lfmis-kcenter", "--k", "1", "--input", &bad]);
        assert!(!out.status.success(), "{text}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(msg), "{text}: {err}");
    }
}

#[test]
fn threads_variable_is_validated_and_keeps_output_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", &mixed_stream());
    let args = ["run", "--algo", "sum-radii", "--k", "3", "--input", &input];
    let serial = dynclust(&args);
    let threaded =
        Command::new(env!("CARGO_BIN_EXE_dynclust")).args(args).env("DYNCLUST_THREADS", "4").output().unwrap();
    assert!(threaded.status.success());
    assert_eq!(serial.stdout, threaded.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_dynclust")).args(args).env("DYNCLUST_THREADS", "zero").output().unwrap();
    assert!(!bad.status.success());
}

#[test]
fn gauntlet_reports_clean_operations() {
    let out =
        dynclust(&["gauntlet", "--algo", "diameter-random", "--budget-f", "4", "--ops", "128", "--verify-every", "8"]);
    let rows = lines(&out);
    assert!(!rows.is_empty());
    for r in &rows {
        assert_eq!(r["uni_failures"], 0);
        assert_eq!(r["star_failures"], 0);
        assert!(r["queries"].as_f64().unwrap() <= r["budget"].as_f64().unwrap());
    }
    assert_eq!(rows.last().unwrap()["t"], 128);
    assert!(String::from_utf8_lossy(&out.stderr).contains("answers consistent true"));
    let via_run = lines(&dynclust(&["run", "--algo", "gauntlet", "--k", "1", "--budget-f", "4", "--ops", "32"]));
    assert_eq!(via_run.last().unwrap()["t"], 32);
}

#[test]
fn gauntlet_budget_overrun_exits_nonzero() {
    let out = dynclust(&["gauntlet", "--algo", "lfmis-kcenter", "--budget-f", "k*math::ln(n)", "--ops", "64"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget exceeded"));
    let bad = dynclust(&["gauntlet", "--algo", "diameter-root", "--budget-f", "0 -", "--ops", "4"]);
    assert!(!bad.status.success());
    let negative = dynclust(&["gauntlet", "--algo", "diameter-root", "--budget-f=-1", "--ops", "4"]);
    assert!(String::from_utf8_lossy(&negative.stderr).contains("non-negative"));
}

#[test]
fn bench_prints_one_row_per_size() {
    let out = dynclust(&["bench", "--algo", "lfmis-kcenter", "--k", "2", "--seed", "1", "--sizes", "16,64"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].contains("queries/update"));
    assert_eq!(rows[1].split_whitespace().take(2).collect::<Vec<_>>(), ["16", "24"]);
    assert_eq!(rows[2].split_whitespace().take(2).collect::<Vec<_>>(), ["64", "96"]);

    let empty = dynclust(&["bench", "--algo", "det-tree", "--k", "2", "--sizes", ""]);
    assert!(empty.status.success());
    assert_eq!(String::from_utf8(empty.stdout).unwrap().lines().count(), 1);
}
