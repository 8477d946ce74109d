use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aoi-outage"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn evaluate_reports_metadata_and_bursts() {
    let v = json(&run(&[
        "evaluate",
        "--config",
        "scenario_a",
        "--policy",
        "naive",
    ]));
    let meta = &v["metadata"];
    assert_eq!(meta["outage_rule"], "exceeds");
    assert_eq!(meta["duration_convention"], "run-length");
    assert_eq!(meta["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(v["bursts"]["status"], "defined");
    let p_out = v["p_out"].as_f64().unwrap();
    assert!(p_out > 0.0 && p_out < 0.01);
    assert_eq!(v["policy"]["lambda"].as_array().unwrap().len(), 100);
    assert!(v["policy"]["lambda"]
        .as_array()
        .unwrap()
        .iter()
        .all(|l| l == 500));

    let reaches = json(&run(&[
        "evaluate",
        "--config",
        "scenario_a",
        "--policy",
        "naive",
        "--outage-rule",
        "reaches",
    ]));
    assert_eq!(reaches["metadata"]["outage_rule"], "reaches");
    assert!(reaches["p_out"].as_f64().unwrap() > p_out);
    assert_ne!(reaches["metadata"]["config_sha256"], meta["config_sha256"]);
}

#[test]
fn optimize_is_deterministic_and_feeds_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = run(&[
            "optimize",
            "--config",
            "scenario_b",
            "--penalty",
            "exp-peak-aoi",
            "--seeds",
            "1",
            "--out",
            p(out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let report: serde_json::Value = serde_json::from_slice(&ta).unwrap();
    let by_state = report["best_policy"]["by_state"].as_array().unwrap();
    assert_eq!(by_state[0]["index"], 1);
    assert_eq!(by_state[0]["state"], serde_json::json!([1, 1, 0, 0]));
    assert_eq!(report["runs"].as_array().unwrap().len(), 1);

    let v = json(&run(&[
        "evaluate",
        "--config",
        "scenario_b",
        "--policy",
        p(&a),
    ]));
    assert_eq!(v["p_out"], report["best_p_out"]);
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let text = aoi_outage::scenario::preset_json("scenario_b")
        .unwrap()
        .replace("\"reps\"", "\"repetitions\"");
    std::fs::write(&path, text).unwrap();
    let o = run(&["evaluate", "--config", p(&path), "--policy", "naive"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("repetitions"));

    let o = run(&[
        "evaluate",
        "--config",
        "no/such/file.json",
        "--policy",
        "naive",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&[
        "optimize",
        "--config",
        "scenario_b",
        "--penalty",
        "quadratic",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn policy_out_of_range_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.json");
    let mut lambda = vec![500u32; 100];
    lambda[7] = 1001;
    std::fs::write(
        &path,
        serde_json::to_string(&serde_json::json!({ "lambda": lambda })).unwrap(),
    )
    .unwrap();
    let o = run(&["evaluate", "--config", "scenario_c", "--policy", p(&path)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1001"));

    std::fs::write(&path, "[1, 2, 3]").unwrap();
    assert_eq!(
        run(&["evaluate", "--config", "scenario_c", "--policy", p(&path)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn simulate_writes_summary_and_per_rep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("reps.csv");
    let args = [
        "simulate",
        "--config",
        "scenario_c",
        "--policy",
        "min-error",
        "--reps",
        "8",
        "--periods",
        "3000",
        "--csv",
        p(&csv_path),
    ];
    let v = json(&run(&args));
    assert_eq!(v["summary"]["reps"], 8);
    assert_eq!(v["summary"]["periods"], 3000);
    assert!(v["analytic"]["p_out"].as_f64().unwrap() > 0.0);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rep,seed,periods,outage_count,outage_rate,bursts,mean_burst,intervals,mean_ioi"
    );
    assert_eq!(lines.count(), 8);
    assert_eq!(json(&run(&args))["summary"], v["summary"]);
}

#[test]
fn table_rows_follow_policy_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("small.json");
    let text = aoi_outage::scenario::preset_json("scenario_a")
        .unwrap()
        .replace("\"reps\": 100", "\"reps\": 4")
        .replace("\"seeds\": 10", "\"seeds\": 2");
    std::fs::write(&path, text).unwrap();
    let o = run(&["reproduce-table2", "--config", p(&path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_reader(o.stdout.as_slice());
    let header = reader.headers().unwrap().clone();
    assert_eq!(&header[0], "scenario");
    let policies: Vec<String> = reader.records().map(|r| r.unwrap()[1].to_owned()).collect();
    assert_eq!(
        policies,
        [
            "binary",
            "sum-aoi",
            "peak-aoi",
            "exp-peak-aoi",
            "naive",
            "min-error"
        ]
    );
}

#[test]
fn burst_convergence_emits_policy_by_checkpoint_rows() {
    let o = run(&[
        "burst-convergence",
        "--config",
        "scenario_b",
        "--policies",
        "100",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut reader = csv::Reader::from_reader(o.stdout.as_slice());
    assert!(reader
        .headers()
        .unwrap()
        .iter()
        .any(|h| h == "err_mean_ioi"));
    assert_eq!(reader.records().count(), 500);

    let o = run(&[
        "burst-convergence",
        "--config",
        "scenario_b",
        "--policies",
        "2",
        "--checkpoints",
        "100,200,300",
    ]);
    assert_eq!(
        csv::Reader::from_reader(o.stdout.as_slice())
            .records()
            .count(),
        6
    );
    let o = run(&[
        "burst-convergence",
        "--config",
        "scenario_b",
        "--policies",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(1));
}
