//! End-to-end tests of the `sparseproj` binary, including the report
//! determinism check (byte-identical output under a fixed seed once the
//! wall-time column is dropped).

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparseproj"))
}

fn run_ok(args: &[&str]) -> Output {
    let output = bin().args(args).output().expect("binary runs");
    assert!(
        output.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let output = bin().output().expect("binary runs");
    assert_eq!(output.status.code(), Some(2));
    let text = format!(
        "{}{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(text.contains("Usage"), "no usage text in: {text}");
}

#[test]
fn unknown_subcommand_and_flag_exit_2() {
    let output = bin().arg("frobnicate").output().expect("binary runs");
    assert_eq!(output.status.code(), Some(2));
    let output = bin()
        .args(["stability", "--n", "10", "--d", "2", "--bogus"])
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn help_exits_0() {
    let output = bin().arg("--help").output().expect("binary runs");
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn runtime_failure_exits_1() {
    let output = bin()
        .args(["project", "--data", "/definitely/missing.libsvm", "--method", "se", "--d", "4"])
        .output()
        .expect("binary runs");
    assert_eq!(output.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&output.stderr).is_empty());
}

#[test]
fn gen_writes_valid_libsvm_with_one_line_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.libsvm");
    let output = run_ok(&[
        "gen",
        "--kind",
        "gaussian-classes",
        "--means",
        "0,2,4,6",
        "--std",
        "0.5",
        "--m",
        "4000",
        "--n",
        "100",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(
        String::from_utf8_lossy(&output.stdout).contains("resolved config"),
        "run must print its resolved config"
    );
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4000);
    // parse it back through the library to prove validity
    let data = sparseproj::data_io::load_libsvm(&path).unwrap();
    assert_eq!(data.n_samples(), 4000);
    assert_eq!(data.n_features(), 100);
    assert_eq!(data.class_count, 4);
}

#[test]
fn stability_csv_reports_the_closed_form_variance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    run_ok(&[
        "stability",
        "--n",
        "78",
        "--d",
        "20",
        "--trials",
        "1000",
        "--seed",
        "7",
        "--out",
        path.to_str().unwrap(),
    ]);
    let records =
        sparseproj::data_io::read_report_csv(std::fs::File::open(&path).unwrap()).unwrap();
    let variance_rows: Vec<_> = records
        .iter()
        .filter(|r| r.method == "s-sse" && r.metric.starts_with("row_count_variance"))
        .collect();
    assert!(!variance_rows.is_empty());
    for row in variance_rows {
        assert!(
            (row.value - 0.09).abs() <= 1e-12,
            "{} = {}",
            row.metric,
            row.value
        );
    }
}

#[test]
fn project_reduces_dimension_and_stays_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("in.libsvm");
    let out = dir.path().join("out.libsvm");
    run_ok(&[
        "gen", "--kind", "uniform01", "--m", "50", "--n", "30", "--seed", "3", "--out",
        data.to_str().unwrap(),
    ]);
    run_ok(&[
        "project",
        "--data",
        data.to_str().unwrap(),
        "--method",
        "s-sse",
        "--d",
        "6",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    let projected = sparseproj::data_io::load_libsvm(&out).unwrap();
    assert_eq!(projected.n_samples(), 50);
    assert_eq!(projected.n_features(), 6);
}

#[test]
fn report_converts_csv_to_json_and_back() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    let csv2 = dir.path().join("r2.csv");
    run_ok(&[
        "stability", "--n", "30", "--d", "4,6", "--trials", "50", "--seed", "2", "--out",
        csv.to_str().unwrap(),
    ]);
    run_ok(&[
        "report", "--input", csv.to_str().unwrap(), "--format", "json", "--out",
        json.to_str().unwrap(),
    ]);
    let parsed: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(!parsed.is_empty());
    run_ok(&[
        "report", "--input", json.to_str().unwrap(), "--format", "csv", "--out",
        csv2.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read_to_string(&csv).unwrap(),
        std::fs::read_to_string(&csv2).unwrap()
    );
}

#[test]
fn config_file_matches_equivalent_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(
        &config,
        r#"{
            "experiment": "stability",
            "n": 40,
            "d_sweep": [5, 8],
            "trials": 100,
            "master_seed": 21
        }"#,
    )
    .unwrap();
    let from_config = dir.path().join("a.csv");
    let from_flags = dir.path().join("b.csv");
    run_ok(&[
        "stability", "--config", config.to_str().unwrap(), "--out",
        from_config.to_str().unwrap(),
    ]);
    run_ok(&[
        "stability", "--n", "40", "--d", "5,8", "--trials", "100", "--seed", "21", "--out",
        from_flags.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read_to_string(&from_config).unwrap(),
        std::fs::read_to_string(&from_flags).unwrap()
    );
}

#[test]
fn distance_and_separability_subcommands_produce_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p_report = dir.path().join("p.csv");
    run_ok(&[
        "distance",
        "--variant",
        "p-vs-d",
        "--synthetic",
        "uniform01",
        "--m",
        "50",
        "--n",
        "60",
        "--d",
        "10,30",
        "--epsilon",
        "0.2",
        "--trials",
        "300",
        "--seed",
        "11",
        "--out",
        p_report.to_str().unwrap(),
    ]);
    let records =
        sparseproj::data_io::read_report_csv(std::fs::File::open(&p_report).unwrap()).unwrap();
    let p_rows: Vec<_> = records
        .iter()
        .filter(|r| r.metric == "preservation_probability")
        .collect();
    assert_eq!(p_rows.len(), 4); // two methods x two dimensions
    for row in p_rows {
        assert!((0.0..=1.0).contains(&row.value));
        assert_eq!(row.epsilon, Some(0.2));
    }

    let s_report = dir.path().join("sep.csv");
    let output = run_ok(&[
        "separability",
        "--synthetic",
        "gaussian-classes",
        "--means",
        "0,2",
        "--std",
        "0.5",
        "--m",
        "80",
        "--n",
        "20",
        "--d",
        "5,20",
        "--trials",
        "1000",
        "--fast",
        "--seed",
        "19",
        "--out",
        s_report.to_str().unwrap(),
    ]);
    // --fast caps the requested 1000 trials at 500
    assert!(
        String::from_utf8_lossy(&output.stdout).contains("\"trials\":500"),
        "fast mode must cap trials in the resolved config"
    );
    let records =
        sparseproj::data_io::read_report_csv(std::fs::File::open(&s_report).unwrap()).unwrap();
    assert!(records.iter().any(|r| r.method == "none"));
    assert!(records
        .iter()
        .any(|r| r.method == "s-sse" && r.metric == "separability_j_mean"));
}

fn strip_wall_time_column(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(
        !text.contains('"'),
        "unexpected quoting; the simple column strip no longer applies"
    );
    text.lines()
        .map(|line| {
            let cut = line.rfind(',').expect("report lines have columns");
            &line[..cut]
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn acceptance_criterion_9_reports_are_deterministic() {
    // two identical invocations, byte-compared minus the wall-time column
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.libsvm");
    run_ok(&[
        "gen",
        "--kind",
        "gaussian-classes",
        "--means",
        "0,3",
        "--std",
        "0.6",
        "--m",
        "120",
        "--n",
        "24",
        "--seed",
        "5",
        "--out",
        data.to_str().unwrap(),
    ]);

    let mut reports = Vec::new();
    for name in ["k1.csv", "k2.csv"] {
        let path = dir.path().join(name);
        run_ok(&[
            "kmeans",
            "--data",
            data.to_str().unwrap(),
            "--factors",
            "0.25,0.5,1.0",
            "--methods",
            "s-sse,se,de",
            "--replicates",
            "4",
            "--seed",
            "13",
            "--out",
            path.to_str().unwrap(),
        ]);
        reports.push(strip_wall_time_column(&path));
    }
    assert!(
        reports[0] == reports[1],
        "reports differ once wall time is removed"
    );
    // wall-time column itself is allowed to differ, but structure must match
    assert_eq!(reports[0].lines().count(), reports[1].lines().count());

    // same check for a stability report, which is wall-time free
    let s1 = dir.path().join("s1.csv");
    let s2 = dir.path().join("s2.csv");
    for path in [&s1, &s2] {
        run_ok(&[
            "stability", "--n", "64", "--d", "8,16", "--trials", "200", "--seed", "3", "--out",
            path.to_str().unwrap(),
        ]);
    }
    assert_eq!(
        std::fs::read_to_string(&s1).unwrap(),
        std::fs::read_to_string(&s2).unwrap()
    );
    println!("acceptance 9 report determinism: PASS");
}
