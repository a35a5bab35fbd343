use std::path::{Path, PathBuf};
use std::process::Command;

use ctsn::cli::{main_with_args, EXIT_FAILURE, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name)
}

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["ctsn"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(p: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(p).unwrap().records().map(|r| r.unwrap()).collect()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let model = data("synthetic.json");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let code = run(&[
            "simulate", "--model", s(&model), "--t-end", "3", "--snapshot-every", "1", "--replicates", "2", "--seed", "4",
            "--out", s(out),
        ]);
        assert_eq!(code, EXIT_OK);
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8, "{names:?}");
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["command"], "simulate");
    assert!(manifest["outputs"].as_array().unwrap().len() >= 6);
    assert_eq!(json(&a.join("config.json"))["seed"], 4);
}

#[test]
fn simulate_with_zero_horizon_keeps_the_initial_state() {
    let tmp = tempfile::tempdir().unwrap();
    let code = run(&["simulate", "--model", s(&data("synthetic.json")), "--t-end", "0", "--out", s(tmp.path())]);
    assert_eq!(code, EXIT_OK);
    assert!(csv_rows(&tmp.path().join("trajectory.csv")).is_empty());
    assert_eq!(json(&tmp.path().join("config.json"))["seed"], 0);
}

#[test]
fn config_file_fills_unset_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"t_end": 2.0, "seed": 9, "replicates": 1}"#).unwrap();
    let out = tmp.path().join("out");
    let code = run(&[
        "simulate", "--model", s(&data("synthetic.json")), "--config", s(&cfg), "--seed", "3", "--out", s(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    let resolved = json(&out.join("config.json"));
    assert_eq!(resolved["t_end"], 2.0);
    assert_eq!(resolved["seed"], 3);
}

#[test]
fn mom_rejects_two_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let model = data("synthetic.json");
    let sim = tmp.path().join("sim");
    assert_eq!(
        run(&["simulate", "--model", s(&model), "--t-end", "1", "--snapshot-times", "0,1", "--out", s(&sim)]),
        EXIT_OK
    );
    let code = run(&[
        "learn", "--mode", "mom", "--model", s(&model), "--data", s(&sim.join("snapshots.json")), "--out",
        s(&tmp.path().join("fit")),
    ]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn learn_rejects_data_of_the_wrong_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let out = s(tmp.path());
    let hidden = data("two_actor_hidden.json");
    let events = tmp.path().join("e.csv");
    std::fs::write(&events, "time,sender,recipient\n").unwrap();
    let snaps = tmp.path().join("s.json");
    std::fs::write(&snaps, "{}").unwrap();
    assert_eq!(run(&["learn", "--mode", "mcem", "--model", s(&hidden), "--data", s(&events), "--out", out]), EXIT_USAGE);
    assert_eq!(run(&["learn", "--mode", "hidden", "--model", s(&hidden), "--data", s(&snaps), "--out", out]), EXIT_USAGE);
    assert_eq!(run(&["learn", "--model", s(&hidden), "--data", s(&snaps), "--out", out]), EXIT_USAGE);
    assert_eq!(run(&["learn", "--mode", "bogus"]), EXIT_USAGE);
}

#[test]
fn mcem_writes_named_tables_and_a_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let model = data("synthetic.json");
    let sim = tmp.path().join("sim");
    assert_eq!(
        run(&["simulate", "--model", s(&model), "--t-end", "2", "--snapshot-every", "1", "--seed", "1", "--out", s(&sim)]),
        EXIT_OK
    );
    let fit = tmp.path().join("fit");
    let code = run(&[
        "learn", "--mode", "mcem", "--model", s(&model), "--data", s(&sim.join("snapshots.json")), "--samples", "20",
        "--max-iters", "1", "--out", s(&fit),
    ]);
    assert!(code == EXIT_OK || code == EXIT_NOT_CONVERGED, "{code}");
    let f = json(&fit.join("fitted.json"));
    assert_eq!(f["method"], "mcem");
    let net = f["network"].as_array().unwrap();
    assert_eq!(net[0]["symbol"], "λ^n");
    assert_eq!(net.len(), 4);
    assert_eq!(f["attribute"].as_array().unwrap().len(), 3);
    assert!(f.get("observation").is_none());
    let trace = csv::Reader::from_path(fit.join("trace.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(&trace[0], "iteration");
    assert_eq!(csv_rows(&fit.join("trace.csv")).len(), 5);
}

fn hidden_events(tmp: &Path) -> PathBuf {
    let sim = tmp.join("sim");
    let code = run(&[
        "simulate", "--model", s(&data("two_actor_hidden.json")), "--t-end", "10", "--events", "--seed", "2", "--out",
        s(&sim),
    ]);
    assert_eq!(code, EXIT_OK);
    sim.join("events.csv")
}

#[test]
fn infer_writes_one_row_per_grid_time_and_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let events = hidden_events(tmp.path());
    let out = tmp.path().join("inf");
    let code = run(&[
        "infer", "--model", s(&data("two_actor_hidden.json")), "--events", s(&events), "--grid-points", "5", "--burn",
        "100", "--samples", "50", "--thin", "5", "--out", s(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    let rows = csv_rows(&out.join("marginals.csv"));
    assert_eq!(rows.len(), 5 * 2);
    for r in rows {
        let p: f64 = r[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
    let d = json(&out.join("diagnostics.json"));
    assert_eq!(d["samples"], 50);
}

#[test]
fn infer_rejects_grid_beyond_the_horizon() {
    let tmp = tempfile::tempdir().unwrap();
    let events = hidden_events(tmp.path());
    let code = run(&[
        "infer", "--model", s(&data("two_actor_hidden.json")), "--events", s(&events), "--grid", "1,11", "--out",
        s(&tmp.path().join("inf")),
    ]);
    assert_eq!(code, EXIT_FAILURE);
}

#[test]
fn hidden_learning_reports_observation_rates() {
    let tmp = tempfile::tempdir().unwrap();
    let events = hidden_events(tmp.path());
    let fit = tmp.path().join("fit");
    let code = run(&[
        "learn", "--mode", "hidden", "--model", s(&data("two_actor_hidden.json")), "--data", s(&events), "--samples",
        "20", "--burn", "100", "--thin", "5", "--max-iters", "1", "--out", s(&fit),
    ]);
    assert!(code == EXIT_OK || code == EXIT_NOT_CONVERGED, "{code}");
    let f = json(&fit.join("fitted.json"));
    assert_eq!(f["method"], "hidden");
    let obs: Vec<&str> = f["observation"].as_array().unwrap().iter().map(|e| e["symbol"].as_str().unwrap()).collect();
    assert_eq!(obs.len(), 4);
    assert!(f["diagnostics"]["acceptance_rate"].as_f64().is_some());
}

#[test]
fn eval_total_is_the_sum_and_empty_input_gives_a_header() {
    let tmp = tempfile::tempdir().unwrap();
    let model = data("synthetic.json");
    let sim = tmp.path().join("sim");
    assert_eq!(
        run(&["simulate", "--model", s(&model), "--t-end", "2", "--replicates", "3", "--out", s(&sim)]),
        EXIT_OK
    );
    let trajs: Vec<String> = (0..3).map(|r| s(&sim.join(format!("trajectory_{r:03}.csv"))).to_string()).collect();
    let out = tmp.path().join("eval");
    let mut args = vec!["eval", "--model", s(&model), "--out", s(&out), "--trajectories"];
    args.extend(trajs.iter().map(String::as_str));
    assert_eq!(run(&args), EXIT_OK);
    let rows = csv_rows(&out.join("eval.csv"));
    assert_eq!(rows.len(), 4);
    let parts: f64 = rows[..3].iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert_eq!(&rows[3][0], "total");
    let total: f64 = rows[3][1].parse().unwrap();
    assert!((parts - total).abs() < 1e-9 * (1.0 + total.abs()));

    let empty = tmp.path().join("empty");
    assert_eq!(run(&["eval", "--model", s(&model), "--out", s(&empty)]), EXIT_OK);
    let text = std::fs::read_to_string(empty.join("eval.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
}

#[test]
fn preprocess_report_accounts_for_every_row() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pre");
    let code = run(&["preprocess-events", "--input", s(&data("raw_emails.csv")), "--seed", "1", "--out", s(&out)]);
    assert_eq!(code, EXIT_OK);
    let r = json(&out.join("report.json"));
    let n = |k: &str| r[k].as_u64().unwrap();
    assert_eq!(
        n("raw_rows"),
        n("kept_rows") + n("dropped_self") + n("dropped_threshold") + n("dropped_window") + n("rejected")
    );
    assert_eq!(n("events"), n("events_before_roster") - n("events_dropped_roster"));
    assert!(n("rejected") >= 2 && n("dropped_self") >= 1 && n("dropped_threshold") >= 1);
    let events = csv_rows(&out.join("events.csv"));
    assert_eq!(events.len() as u64, n("events"));
    let times: Vec<f64> = events.iter().map(|e| e[0].parse().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(csv_rows(&out.join("rejects.csv")).len() as u64, n("rejected"));
    assert_eq!(csv_rows(&out.join("roster.csv")).len() as u64, n("actors"));
}

#[test]
fn binary_reports_usage_errors_by_exit_code() {
    let bin = env!("CARGO_BIN_EXE_ctsn");
    let status = Command::new(bin).args(["simulate", "--t-end", "1"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USAGE));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(EXIT_OK));
    let text = String::from_utf8(help.stdout).unwrap();
    for verb in ["simulate", "learn", "infer", "eval", "preprocess-events"] {
        assert!(text.contains(verb), "{verb}");
    }
}
