//! End-to-end exercises of the command-line surface through the library
//! entry point, including exit codes and output formats.

use std::fs;

use drr_gossip::cli::main_with_args;

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["drr-gossip"];
    argv.extend_from_slice(args);
    main_with_args(argv)
}

#[test]
fn run_writes_expected_record_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.jsonl");
    let code = run(&[
        "run",
        "--protocol",
        "drr-only",
        "--topology",
        "complete:64",
        "--trials",
        "100",
        "--seed",
        "9",
        "--no-timestamp",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines.len(), 101); // header + one record per trial
    assert!(lines[0].contains("\"record\":\"header\""));
    for (k, line) in lines[1..].iter().enumerate() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["run_id"].as_u64(), Some(k as u64));
        assert_eq!(v["protocol"].as_str(), Some("drr-only"));
    }
}

#[test]
fn run_is_rerun_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out in [&a, &b] {
        let code = run(&[
            "run",
            "--protocol",
            "drr-only",
            "--topology",
            "complete:16",
            "--trials",
            "1",
            "--seed",
            "1",
            "--no-timestamp",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn csv_mirror_has_schema_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.jsonl");
    let csv = dir.path().join("runs.csv");
    let code = run(&[
        "run",
        "--protocol",
        "drr-gossip-max",
        "--topology",
        "complete:32",
        "--trials",
        "2",
        "--no-timestamp",
        "--out",
        out.to_str().unwrap(),
        "--csv-out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("run_id,protocol,n,delta,seed,phase,rounds,msgs_sent,msgs_delivered\n"));
    assert!(text.contains(",drr_probe,"));
    assert!(text.contains(",gossip_max,"));
}

#[test]
fn missing_topology_is_usage_error() {
    assert_eq!(run(&["run", "--protocol", "drr-only"]), 2);
}

#[test]
fn unknown_protocol_is_usage_error() {
    assert_eq!(
        run(&["run", "--protocol", "carrier-pigeon", "--topology", "complete:8"]),
        2
    );
}

#[test]
fn sweep_produces_summary_rows_per_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("summary.csv");
    let code = run(&[
        "sweep",
        "--protocol",
        "drr-gossip-max",
        "--topology",
        "complete:{N}",
        "--n-list",
        "64,256",
        "--trials",
        "3",
        "--no-timestamp",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.trim().lines().collect();
    assert_eq!(lines.len(), 3); // header + one row per n
    assert!(lines[0].starts_with("protocol,n,trials"));
}

#[test]
fn sweep_rejects_empty_n_list() {
    assert_eq!(
        run(&[
            "sweep",
            "--protocol",
            "drr-only",
            "--topology",
            "complete:{N}",
            "--n-list",
            ""
        ]),
        2
    );
}

#[test]
fn sweep_is_rerun_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let code = run(&[
            "sweep",
            "--protocol",
            "uniform-push-sum",
            "--topology",
            "complete:{N}",
            "--n-list",
            "32,64",
            "--trials",
            "4",
            "--seed",
            "11",
            "--jobs",
            "2",
            "--no-timestamp",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn validate_passes_and_inject_fault_fails() {
    assert_eq!(run(&["validate"]), 0);
    assert_eq!(run(&["validate", "--inject-fault"]), 1);
}

#[test]
fn report_renders_and_rejects_corrupt_files() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs.jsonl");
    let code = run(&[
        "run",
        "--protocol",
        "uniform-push-sum",
        "--topology",
        "complete:64",
        "--trials",
        "2",
        "--no-timestamp",
        "--out",
        runs.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let table = dir.path().join("table.csv");
    let code = run(&[
        "report",
        runs.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("protocol,n,"));
    assert!(text.contains("uniform-push-sum,64,"));

    let corrupt = dir.path().join("bad.jsonl");
    fs::write(&corrupt, "definitely not json\n").unwrap();
    assert_eq!(run(&["report", corrupt.to_str().unwrap()]), 1);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    fs::write(
        &cfg,
        "protocol=drr-only\ntopology=complete:32\ntrials=3\nseed=5\nno-timestamp=true\n",
    )
    .unwrap();
    let out = dir.path().join("runs.jsonl");
    let code = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    // Flag--trials=2 wins over the file's 3; file supplies the rest.
    assert_eq!(text.trim().lines().count(), 3);
    assert!(text.contains("\"n\":32"));
}

#[test]
fn trace_out_writes_push_sum_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.jsonl");
    let trace = dir.path().join("trace.csv");
    let code = run(&[
        "run",
        "--protocol",
        "drr-gossip-ave",
        "--topology",
        "complete:64",
        "--trials",
        "1",
        "--no-timestamp",
        "--out",
        out.to_str().unwrap(),
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("round,root,s,g,estimate\n"));
    assert!(text.trim().lines().count() > 1);
}

#[test]
fn zipf_values_and_local_mode_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.jsonl");
    let code = run(&[
        "run",
        "--protocol",
        "drr-gossip-max",
        "--topology",
        "dregular:64,4",
        "--values",
        "zipf:1.2",
        "--trials",
        "2",
        "--no-timestamp",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"correct\":true"));
}
