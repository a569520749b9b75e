use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn netgames(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netgames"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn csv_shape(path: &Path) -> (usize, usize) {
    let text = fs::read_to_string(path).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    (rows.len(), rows[0].split(',').count())
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn simulate(dir: &Path, extra: &[&str]) -> Output {
    let out = format!("--output={}", dir.display());
    let mut args = vec!["simulate", "--models=ER", "--n=12", "--games=30", "--seed=3", out.as_str()];
    args.extend_from_slice(extra);
    netgames(&args)
}

#[test]
fn simulate_writes_graph_benefits_actions() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_shape(&dir.path().join("graph.csv")), (12, 12));
    assert_eq!(csv_shape(&dir.path().join("benefits.csv")), (12, 30));
    assert_eq!(csv_shape(&dir.path().join("actions.csv")), (12, 30));
    let meta = read_json(&dir.path().join("simulation.json"));
    assert_eq!(meta["model"], "ER");
    assert_eq!(meta["K"], 30);
    assert!(meta["beta"].as_f64().unwrap() > 0.0);
}

#[test]
fn learn_recovers_simulated_graph() {
    let data = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(data.path(), &["--rho=0.8"])), 0);
    let meta = read_json(&data.path().join("simulation.json"));
    let beta = meta["normalized_beta"].as_f64().unwrap();

    let learned = tempfile::tempdir().unwrap();
    let actions = format!("--actions={}", data.path().join("actions.csv").display());
    let truth = format!("--truth={}", data.path().join("graph.csv").display());
    let out_dir = format!("--output={}", learned.path().display());
    let betas = format!("--beta={},{}", -beta, beta);
    let out = netgames(&[
        "learn",
        &actions,
        &truth,
        &out_dir,
        &betas,
        "--theta1_log2=0,2,4",
        "--theta2_log2=0",
        "--algorithms=alg1",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_shape(&learned.path().join("graph.csv")), (12, 12));
    assert_eq!(csv_shape(&learned.path().join("benefits.csv")), (12, 30));
    let meta = read_json(&learned.path().join("metadata.json"));
    assert_eq!(meta["selected_by"], "auc");
    assert!(meta["beta"].as_f64().unwrap() > 0.0);
    assert!(meta["report"]["auc"].as_f64().unwrap() > 0.7);
    assert_eq!(meta["grid"].as_array().unwrap().len(), 6);
    assert!(!meta["objective_trace"].as_array().unwrap().is_empty());

    let eval_dir = tempfile::tempdir().unwrap();
    let graph = format!("--graph={}", learned.path().join("graph.csv").display());
    let out = netgames(&["evaluate", &graph, &truth, &format!("--output={}", eval_dir.path().display())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&eval_dir.path().join("report.json"));
    assert!(report["auc"].as_f64().unwrap() > 0.7);
    assert!(report.get("r2").is_none());
}

#[test]
fn learn_without_truth_selects_by_objective() {
    let data = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(data.path(), &[])), 0);
    let learned = tempfile::tempdir().unwrap();
    let out = netgames(&[
        "learn",
        &format!("--actions={}", data.path().join("actions.csv").display()),
        &format!("--output={}", learned.path().display()),
        "--beta=0.2",
        "--theta1_log2=0",
        "--theta2_log2=-4",
        "--algorithms=alg2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let meta = read_json(&learned.path().join("metadata.json"));
    assert_eq!(meta["selected_by"], "objective");
    assert_eq!(meta["algorithm"], "alg2");
    assert!(meta["report"].is_null());
}

#[test]
fn sweep_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = netgames(&[
        "sweep",
        "--models=ER,BA",
        "--n=10",
        "--games=20",
        "--rho=0.3,0.7",
        "--repeats=2",
        "--algorithms=alg1,correlation,glasso",
        "--theta1_log2=0",
        "--theta2_log2=0",
        "--lambda_log2=-4,-2",
        &format!("--output={}", dir.path().display()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "model,algorithm,n,K,rho,noise_std,theta1,theta2,lambda,beta,seed,auc,r2,objective,iterations,converged,runtime_ms"
    );
    // (1 + 1 + 2) points x 2 models x 2 rho x 2 repeats
    assert_eq!(lines.count(), 4 * 2 * 2 * 2);
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["points"].as_array().unwrap().len(), 4 * 2 * 2);
    assert_eq!(summary["best"].as_array().unwrap().len(), 3 * 2 * 2);
    let p = &summary["points"][0];
    for key in ["auc_mean", "auc_median", "auc_q25", "auc_q75"] {
        assert!(p[key].is_number(), "{key}");
    }
}

#[test]
fn single_point_sweep_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = netgames(&[
        "sweep",
        "--models=WS",
        "--n=10",
        "--games=10",
        "--repeats=1",
        "--theta1_log2=0",
        "--theta2_log2=0",
        &format!("--output={}", dir.path().display()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn config_file_then_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"models": ["BA"], "n": 9, "games": 7, "seed": 1}"#).unwrap();
    let out_dir = dir.path().join("sim");
    let out = netgames(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--games=5",
        &format!("--output={}", out_dir.display()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_shape(&out_dir.join("actions.csv")), (9, 5));
    assert_eq!(read_json(&out_dir.join("simulation.json"))["model"], "BA");
}

#[test]
fn cluster_writes_one_label_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.csv");
    let mut rows = Vec::new();
    for i in 0..6 {
        let row: Vec<&str> = (0..6)
            .map(|j| if i != j && (i < 3) == (j < 3) { "1" } else { "0" })
            .collect();
        rows.push(row.join(","));
    }
    fs::write(&g, rows.join("\n")).unwrap();
    let out = netgames(&[
        "cluster",
        &format!("--graph={}", g.display()),
        "--clusters=2",
        &format!("--output={}", dir.path().display()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let labels: Vec<usize> = fs::read_to_string(dir.path().join("labels.csv"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(labels.len(), 6);
    assert!(labels[..3].iter().all(|&l| l == labels[0]));
    assert!(labels[3..].iter().all(|&l| l == labels[3]));
    assert_ne!(labels[0], labels[3]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = format!("--output={}", dir.path().display());
    assert_eq!(code(&netgames(&["sweep", "--no_such_key=1", &o])), 2);
    assert_eq!(code(&netgames(&["sweep", "--rho=0.5,1.5", &o])), 2);
    assert_eq!(code(&netgames(&["sweep", "--repeats=0", &o])), 2);
    assert_eq!(code(&netgames(&["sweep", "positional", &o])), 2);
    assert_eq!(code(&netgames(&["learn", &o])), 2);
    assert_eq!(code(&netgames(&["frobnicate"])), 2);
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{ not json").unwrap();
    assert_eq!(code(&netgames(&["sweep", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = format!("--output={}", dir.path().display());
    let g = dir.path().join("g.csv");
    let t = dir.path().join("t.csv");
    fs::write(&t, "0,1\n1,0\n").unwrap();

    fs::write(&g, "0,1\n2,0\n").unwrap();
    let out = netgames(&["cluster", &format!("--graph={}", g.display()), &o]);
    assert_eq!(code(&out), 3);

    fs::write(&g, "0,1\n1,zero\n").unwrap();
    let out = netgames(&["evaluate", &format!("--graph={}", g.display()), &format!("--truth={}", t.display()), &o]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2, column 2"));

    let missing = format!("--actions={}", dir.path().join("missing.csv").display());
    assert_eq!(code(&netgames(&["learn", &missing, "--beta=0.1", &o])), 3);
}

#[test]
fn numerical_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    // an empty ER graph admits no beta with the requested spectral radius
    let out = simulate(dir.path(), &["--p=0"]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));

    let g = dir.path().join("g.csv");
    fs::write(&g, "0,1,1\n1,0,1\n1,1,0\n").unwrap();
    let t = dir.path().join("t.csv");
    fs::write(&t, "0,1,1\n1,0,1\n1,1,0\n").unwrap();
    let out = netgames(&[
        "evaluate",
        &format!("--graph={}", g.display()),
        &format!("--truth={}", t.display()),
        &format!("--output={}", dir.path().display()),
    ]);
    assert_eq!(code(&out), 4, "AUC needs both classes");
}
