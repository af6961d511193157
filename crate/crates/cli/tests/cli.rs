use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn psolab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psolab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_path(path)
        .unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn run_writes_statistics_and_prints_summary() {
    let dir = TempDir::new().unwrap();
    let o = psolab(
        dir.path(),
        &[
            "run",
            "--optimizer",
            "w07_iwsw2",
            "--function",
            "schaffer_f6",
            "--runs",
            "3",
            "--max-steps",
            "300",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    for key in [
        "best_solution",
        "worst_solution",
        "mean_best",
        "std_best",
        "mean_time_steps",
        "std_time_steps",
    ] {
        assert!(out.contains(key), "missing {key} in\n{out}");
    }
    let rows = csv_rows(&dir.path().join("out/w07_iwsw2__schaffer_f6.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "w07_iwsw2");
    let report = json(&dir.path().join("out/w07_iwsw2__schaffer_f6.json"));
    assert_eq!(report["statistics"]["per_run"].as_array().unwrap().len(), 3);
    assert_eq!(report["spec"]["max_time_steps"], 300);
}

#[test]
fn unknown_names_fail_validation_with_choices() {
    let dir = TempDir::new().unwrap();
    let o = psolab(
        dir.path(),
        &["run", "--optimizer", "w07_iwsw2", "--function", "bogus"],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    for name in [
        "sphere",
        "rosenbrock",
        "rastrigin",
        "griewank",
        "schaffer_f6",
    ] {
        assert!(err.contains(name), "{err}");
    }
    let o = psolab(
        dir.path(),
        &["run", "--optimizer", "nope", "--function", "sphere"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("multiswarm2"));
    let o = psolab(dir.path(), &["trace", "--preset", "fig3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fig6"));
    let o = psolab(dir.path(), &["schedule", "--kind", "cosine"]);
    assert_eq!(o.status.code(), Some(1));
    let o = psolab(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn identical_inputs_give_identical_files() {
    let args = [
        "run",
        "--optimizer",
        "multiswarm1",
        "--function",
        "rastrigin",
        "--runs",
        "4",
        "--max-steps",
        "200",
        "--seed",
        "42",
        "--trajectory-run",
        "2",
    ];
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(psolab(a.path(), &args).status.success());
    assert!(psolab(b.path(), &args).status.success());
    for name in [
        "multiswarm1__rastrigin.csv",
        "multiswarm1__rastrigin.json",
        "multiswarm1__rastrigin__run2_trajectory.csv",
    ] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert!(x == y, "{name} differs");
    }
    let report = json(&a.path().join("out/multiswarm1__rastrigin.json"));
    assert_eq!(report["spec"]["base_seed"], 42);
    assert_eq!(report["statistics"]["per_run"][3]["seed"], 45);
}

#[test]
fn flags_override_file_override_defaults() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("lab.toml"),
        r#"
output_dir = "from_file"
seed = 9

[run]
optimizer = "w05_iwsw2"
function = "sphere"
n_runs = 3
max_time_steps = 40
stop_on_acceptable = false
"#,
    )
    .unwrap();

    let o = psolab(dir.path(), &["--config", "lab.toml", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&dir.path().join("from_file/w05_iwsw2__sphere.json"));
    assert_eq!(r["spec"]["n_runs"], 3);
    assert_eq!(r["spec"]["base_seed"], 9);
    assert_eq!(r["spec"]["max_time_steps"], 40);
    assert_eq!(r["spec"]["stop_on_acceptable"], false);
    assert_eq!(r["spec"]["n_particles"], 30);

    let o = psolab(
        dir.path(),
        &[
            "--config",
            "lab.toml",
            "--output-dir",
            "from_flag",
            "--seed",
            "1",
            "run",
            "--n-runs",
            "2",
            "--max-time-steps",
            "30",
            "--stop-on-acceptable",
            "true",
            "--function",
            "griewank",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&dir.path().join("from_flag/w05_iwsw2__griewank.json"));
    assert_eq!(r["spec"]["n_runs"], 2);
    assert_eq!(r["spec"]["base_seed"], 1);
    assert_eq!(r["spec"]["max_time_steps"], 30);
    assert_eq!(r["spec"]["stop_on_acceptable"], true);
}

#[test]
fn config_rejects_unknown_fields() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.toml"), "[run]\nn_rnus = 3\n").unwrap();
    let o = psolab(dir.path(), &["--config", "bad.toml", "run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n_rnus"));
    let o = psolab(dir.path(), &["--config", "missing.toml", "run"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn custom_optimizer_from_file() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("custom.toml"),
        r#"
[run]
optimizer = "linear_w"
function = "rosenbrock"
n_runs = 2
max_time_steps = 50

[run.custom_optimizer.homogeneous]
inertia_schedule = { kind = "linear", value_start = 0.9, value_end = 0.4 }
individuality_schedule = { kind = "constant", value_start = 2.0 }
sociality_schedule = { kind = "constant", value_start = 2.0 }
vmax_policy = { kind = "half_range" }
"#,
    )
    .unwrap();
    let o = psolab(dir.path(), &["--config", "custom.toml", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&dir.path().join("out/linear_w__rosenbrock.json"));
    assert_eq!(r["optimizer_name"], "linear_w");
    assert_eq!(
        r["spec"]["optimizer"]["homogeneous"]["inertia_schedule"]["kind"],
        "linear"
    );
}

#[test]
fn suite_emits_grid_and_cells() {
    let dir = TempDir::new().unwrap();
    let o = psolab(dir.path(), &["suite", "--runs", "2", "--max-steps", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o).lines().filter(|l| l.starts_with('[')).count(),
        30
    );
    let rows = csv_rows(&dir.path().join("out/suite.csv"));
    assert_eq!(rows.len(), 31);
    assert_eq!(
        rows[0][..4],
        ["optimizer", "function", "best_solution", "worst_solution"]
    );
    assert_eq!(rows[1][..2], ["w07_iwsw2", "sphere"]);
    assert_eq!(rows[30][..2], ["multiswarm2", "schaffer_f6"]);
    let cell = json(&dir.path().join("out/cells/sigmoid_iwsw2__griewank.json"));
    assert_eq!(cell["statistics"]["per_run"].as_array().unwrap().len(), 2);
}

#[test]
fn suite_filter_and_cell_failures() {
    let dir = TempDir::new().unwrap();
    let o = psolab(
        dir.path(),
        &[
            "suite",
            "--functions",
            "sphere",
            "--runs",
            "5",
            "--max-steps",
            "15",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("out/suite.csv"));
    assert_eq!(rows.len(), 7);
    let cell = json(&dir.path().join("out/cells/multiswarm1__sphere.json"));
    assert_eq!(cell["statistics"]["per_run"].as_array().unwrap().len(), 5);

    // the sigmoid schedule is undefined for such a short horizon
    let o = psolab(
        dir.path(),
        &[
            "suite",
            "--functions",
            "sphere",
            "--runs",
            "1",
            "--max-steps",
            "5",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let rows = csv_rows(&dir.path().join("out/suite.csv"));
    let sigmoid = rows.iter().find(|r| r[0] == "sigmoid_iwsw2").unwrap();
    assert!(!sigmoid[10].is_empty());
    assert!(rows
        .iter()
        .filter(|r| r[0].starts_with("w0"))
        .all(|r| r[10].is_empty()));
}

#[test]
fn trace_presets() {
    let dir = TempDir::new().unwrap();
    let expect = [
        ("fig2", "deterministic", "divergent"),
        ("fig4", "average", "cyclic"),
        ("fig1", "stochastic", "divergent"),
    ];
    for (preset, mode, class) in expect {
        let o = psolab(dir.path(), &["trace", "--preset", preset]);
        assert!(o.status.success(), "{}", stderr(&o));
        let s = json(&dir.path().join(format!("out/{preset}.json")));
        assert_eq!(s["config"]["mode"], mode);
        assert_eq!(s["classification"], class, "{preset}");
        assert_eq!(s["config"]["x0"], 100.0);
    }
    let fig2 = json(&dir.path().join("out/fig2.json"));
    assert_eq!(fig2["config"]["v0"], 0.0);
    assert_eq!(fig2["config"]["iw"], 2.0);

    let o = psolab(dir.path(), &["trace", "--preset", "fig5"]);
    assert!(o.status.success());
    let s = json(&dir.path().join("out/fig5.json"));
    assert_eq!(s["config"]["iw"], 0.5);
    assert_eq!(s["config"]["sw"], 0.5);
    assert!(s["max_abs_x"].as_f64().unwrap() <= 200.0);

    let rows = csv_rows(&dir.path().join("out/fig4.csv"));
    assert_eq!(rows[0], ["t", "x", "v"]);
    assert_eq!(rows.len(), 1002);
    let xs: Vec<f64> = rows[1..6].iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(xs, [100.0, -100.0, -100.0, 100.0, 100.0]);
}

#[test]
fn trace_explicit_fields_override_preset() {
    let dir = TempDir::new().unwrap();
    let o = psolab(
        dir.path(),
        &[
            "trace", "--preset", "fig1", "--v0", "0", "--steps", "50", "--seed", "3", "--x0", "-20",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&dir.path().join("out/fig1.json"));
    assert_eq!(s["config"]["steps"], 50);
    assert_eq!(s["config"]["seed"], 3);
    assert_eq!(s["config"]["x0"], -20.0);
    assert!(s["config"].get("v0_spread").is_none());

    let o = psolab(
        dir.path(),
        &["trace", "--mode", "average", "--w", "0", "--steps", "40"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let s = json(&dir.path().join("out/trace.json"));
    assert_eq!(s["classification"], "cyclic");
}

#[test]
fn schedule_samples() {
    let dir = TempDir::new().unwrap();
    let o = psolab(
        dir.path(),
        &[
            "schedule",
            "--kind",
            "sigmoid",
            "--value-start",
            "0.7",
            "--value-end",
            "0.5",
            "--k",
            "10",
            "--t-max",
            "10000",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("out/schedule_sigmoid.csv"));
    assert_eq!(rows.len(), 10_002);
    let last: f64 = rows[10_001][1].parse().unwrap();
    assert!((last - 0.5).abs() <= 1e-6);

    let o = psolab(
        dir.path(),
        &[
            "schedule",
            "--kind",
            "constant",
            "--value-start",
            "0.7",
            "--t-max",
            "50",
        ],
    );
    assert!(o.status.success());
    let rows = csv_rows(&dir.path().join("out/schedule_constant.csv"));
    assert!(rows[1..].iter().all(|r| r[1] == "0.7"));

    let o = psolab(
        dir.path(),
        &[
            "schedule",
            "--kind",
            "linear",
            "--value-start",
            "0.9",
            "--value-end",
            "0.4",
            "--t-max",
            "100",
        ],
    );
    assert!(o.status.success());
    let rows = csv_rows(&dir.path().join("out/schedule_linear.csv"));
    let mid: f64 = rows[51][1].parse().unwrap();
    assert_eq!(rows[51][0], "50");
    assert!((mid - 0.65).abs() <= 1e-12);

    let o = psolab(
        dir.path(),
        &["schedule", "--kind", "sigmoid", "--value-start", "0.7"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--value-end"));
    let o = psolab(
        dir.path(),
        &[
            "schedule",
            "--kind",
            "sigmoid",
            "--value-start",
            "0.7",
            "--value-end",
            "0.5",
            "--k",
            "10",
            "--t-max",
            "10",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn poly_correlated_schedule_reports_acceleration() {
    let dir = TempDir::new().unwrap();
    let o = psolab(
        dir.path(),
        &[
            "schedule",
            "--kind",
            "poly_correlated",
            "--value-start",
            "0.5",
            "--value-end",
            "0",
            "--t-max",
            "2",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("out/schedule_poly_correlated.csv"));
    assert_eq!(rows[0], ["t", "w", "aw"]);
    let aw0: f64 = rows[1][2].parse().unwrap();
    assert!((aw0 - 4.0).abs() <= 1e-3);
    assert_eq!(rows[3][2], "2");
}
