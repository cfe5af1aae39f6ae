use std::process::{Command, Output};

use poisson_k::output::{Column, ColumnKind, OutputRecord, Table};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poisson-k"))
        .args(args)
        .env_remove("POISSON_K_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn cols(spec: &[(&str, ColumnKind)]) -> Vec<Column> {
    spec.iter().map(|(n, k)| Column::new(n, *k)).collect()
}

fn pmf_columns(value: &str) -> Vec<Column> {
    cols(&[
        ("k", ColumnKind::Integer),
        ("lambda", ColumnKind::Float),
        ("n", ColumnKind::Integer),
        (value, ColumnKind::Float),
    ])
}

fn floats(t: &Table, name: &str) -> Vec<f64> {
    t.column(name)
        .unwrap()
        .map(|v| v.as_f64().unwrap())
        .collect()
}

#[test]
fn pmf_k50_peak_at_113() {
    let text = stdout(&[
        "pmf", "--k", "50", "--lambda", "0.10194", "--n-max", "140", "--scaled",
    ]);
    let t = Table::from_csv(&pmf_columns("h"), &text).unwrap();
    let h = floats(&t, "h");
    assert_eq!(h.len(), 141);
    assert!((h[113] - 1.0).abs() < 1e-3);
    assert!((h[0] - 1.0).abs() < 1e-15);
}

#[test]
fn pmf_k1_decreasing() {
    let text = stdout(&[
        "pmf", "--k", "1", "--lambda", "0.8", "--n-max", "10", "--scaled",
    ]);
    let h = floats(&Table::from_csv(&pmf_columns("h"), &text).unwrap(), "h");
    assert!(h.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn pmf_point_mass() {
    let text = stdout(&["pmf", "--k", "2", "--lambda", "0", "--n-max", "3"]);
    let f = floats(&Table::from_csv(&pmf_columns("f"), &text).unwrap(), "f");
    assert_eq!(f, vec![1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn json_lines_round_trip() {
    let text = stdout(&[
        "--format",
        "json",
        "pmf",
        "--k",
        "7",
        "--lambda",
        "0.3",
        "--n-max",
        "30",
        "--log-space",
    ]);
    assert_eq!(text.lines().count(), 31);
    let rec = OutputRecord::from_json_lines(&pmf_columns("ln_f"), &text).unwrap();
    assert_eq!(rec.command, "pmf");
    assert_eq!(rec.params["k"], 7);
    assert_eq!(rec.to_json_lines(), text);
}

#[test]
fn summary_examples() {
    let modes = |args: &[&str]| -> String {
        let text = stdout(args);
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let i = r
            .headers()
            .unwrap()
            .iter()
            .position(|h| h == "modes")
            .unwrap();
        r.records().next().unwrap().unwrap()[i].to_string()
    };
    assert_eq!(modes(&["summary", "--k", "1", "--lambda", "4"]), "3;4");
    assert_eq!(modes(&["summary", "--k", "3", "--lambda", "0.4"]), "0");
    assert_eq!(
        modes(&[
            "summary",
            "--k",
            "10",
            "--lambda",
            "0.5119",
            "--tie-tolerance",
            "1e-4"
        ]),
        "24;25"
    );
}

#[test]
fn critical_examples() {
    let columns = cols(&[
        ("k", ColumnKind::Integer),
        ("event", ColumnKind::Text),
        ("lambda", ColumnKind::Float),
        ("modes", ColumnKind::IntegerList),
        ("residual", ColumnKind::Float),
    ]);
    let first = |k: &str| {
        let t = Table::from_csv(&columns, &stdout(&["critical", "--k", k])).unwrap();
        let row = t
            .rows
            .iter()
            .find(|r| r[1] == "first_double_mode")
            .unwrap()
            .clone();
        (row[2].as_f64().unwrap(), row[3][1].as_u64().unwrap())
    };
    let (lambda, m) = first("50");
    assert!((lambda - 0.10194).abs() < 5e-5);
    assert_eq!(m, 113);
    assert_eq!(first("14").1, 14);
    assert!(first("15").1 > 15);

    let t = Table::from_csv(&columns, &stdout(&["critical", "--k", "3"])).unwrap();
    let jumps: Vec<f64> = t
        .rows
        .iter()
        .filter(|r| r[1] == "mode_jump")
        .map(|r| r[2].as_f64().unwrap())
        .collect();
    assert!((jumps[0] - 0.601679).abs() < 1e-5);
    assert!((jumps[1] - 0.9962).abs() < 1e-3);
}

#[test]
fn figure_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["figure", "9", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let manifest = std::fs::read_to_string(dir.path().join("fig09_manifest.csv")).unwrap();
    assert!(manifest.starts_with("figure,series,file,"));
    let series = std::fs::read_to_string(dir.path().join("fig09_mode.csv")).unwrap();
    assert!(series.starts_with("series,k,lambda,kappa_lambda,mode,lower,upper\n"));

    let dir = tempfile::tempdir().unwrap();
    assert!(
        run(&["figure", "10", "--out", dir.path().to_str().unwrap()])
            .status
            .success()
    );
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.len(), 5, "{names:?}");
}

#[test]
fn deterministic_output() {
    let args = [
        "scan",
        "--k-min",
        "2",
        "--k-max",
        "5",
        "--grid",
        "10",
        "--seed",
        "7",
        "--reports",
    ];
    assert_eq!(stdout(&args), stdout(&args));
    let args = ["figure", "3"];
    assert_eq!(stdout(&args), stdout(&args));
}

#[test]
fn worker_variable_is_accepted() {
    let out = Command::new(env!("CARGO_BIN_EXE_poisson-k"))
        .args(["scan", "--k-min", "2", "--k-max", "4", "--grid", "10"])
        .env("POISSON_K_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["pmf", "--k", "2"]).status.code(), Some(1));
    assert_eq!(run(&["figure", "11"]).status.code(), Some(1));
    assert_eq!(
        run(&["pmf", "--k", "0", "--lambda", "1", "--n-max", "3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["pmf", "--k", "2", "--lambda", "-1", "--n-max", "3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["scan", "--claims", "bogus"]).status.code(), Some(1));
    let out = run(&[
        "scan",
        "--k-min",
        "2",
        "--k-max",
        "30",
        "--max-evaluations",
        "10",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = run(&[
        "scan",
        "--k-min",
        "2",
        "--k-max",
        "60",
        "--claims",
        "first-double-mode-chain,ln2-inequality",
    ]);
    assert_eq!(out.status.code(), Some(0));
}
