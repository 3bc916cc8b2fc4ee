//! End-to-end checks of the `iqdp` binary: contract examples, exit codes,
//! output determinism, and JSON policy round-trips.

use std::collections::BTreeMap;
use std::process::{Command, Output};
use std::sync::Arc;

use iqdp_core::{evaluate_policy, Pmf, Policy, Quantizer, State, StateKey, Target};

fn iqdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iqdp"))
        .args(args)
        .output()
        .expect("spawn iqdp")
}

fn iqdp_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iqdp"))
        .args(args)
        .env(key, value)
        .output()
        .expect("spawn iqdp")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "expected success, stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn solve_single_user_uniform_four_is_two_bits() {
    let out = iqdp(&[
        "solve", "--dist", "uniform", "--L", "4", "--N", "1", "--target", "max", "--lambda", "0",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json");
    assert!((doc["cost"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((doc["expected_rate"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((doc["expected_delay"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let bins: Vec<u64> = doc["policy"][0]["quantizer"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(bins, vec![1, 1, 1, 1]);
}

#[test]
fn solve_two_users_binary_argmax_midpoint() {
    let out = iqdp(&[
        "solve", "--L", "2", "--N", "2", "--target", "argmax", "--lambda", "0.5",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json");
    assert!((doc["cost"].as_f64().unwrap() - 1.5).abs() < 1e-12);
}

#[test]
fn missing_support_size_is_a_usage_error() {
    let out = iqdp(&["solve", "--N", "2", "--target", "max", "--lambda", "0.5"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn invalid_parameters_exit_with_code_two() {
    // λ outside [0, 1].
    let out = iqdp(&[
        "solve", "--L", "4", "--N", "2", "--target", "max", "--lambda", "1.5",
    ]);
    assert_eq!(exit_code(&out), 2);

    // --p is meaningless for a uniform source.
    let out = iqdp(&[
        "solve", "--L", "4", "--N", "2", "--target", "max", "--lambda", "0.5", "--p", "0.3",
    ]);
    assert_eq!(exit_code(&out), 2);

    // Geometric needs --p.
    let out = iqdp(&[
        "solve",
        "--dist",
        "geometric",
        "--L",
        "4",
        "--N",
        "2",
        "--target",
        "max",
        "--lambda",
        "0.5",
    ]);
    assert_eq!(exit_code(&out), 2);

    // Malformed λ grid.
    let out = iqdp(&[
        "sweep",
        "--L",
        "4",
        "--N",
        "2",
        "--target",
        "max",
        "--lambdas",
        "0:1:0",
    ]);
    assert_eq!(exit_code(&out), 2);

    // Heuristics on a support that is not a power of two.
    let out = iqdp(&["heuristics", "--N", "2", "--L", "6"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn oversized_enumeration_exits_with_code_three() {
    let out = iqdp(&["family", "--space", "compositions", "--L", "30"]);
    assert_eq!(exit_code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("capacity"), "stderr: {err}");
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = iqdp_env(
        &[
            "solve", "--L", "4", "--N", "2", "--target", "max", "--lambda", "0.5",
        ],
        "IQDP_THREADS",
        "abc",
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn heuristics_closed_forms_match_recursions() {
    let out = iqdp(&["heuristics", "--N", "2,4,8", "--L", "4,16,64"]);
    let text = stdout_of(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("n,l,rate_binary_closed"));
    let mut rows = 0;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 10);
        let closed: f64 = fields[2].parse().unwrap();
        let recursion: f64 = fields[3].parse().unwrap();
        assert!((closed - recursion).abs() < 1e-9);
        rows += 1;
    }
    assert_eq!(rows, 9);
}

#[test]
fn sweep_is_byte_identical_across_runs_and_thread_counts() {
    let args = [
        "sweep",
        "--L",
        "8",
        "--N",
        "3",
        "--target",
        "max",
        "--lambdas",
        "0:1:0.1",
    ];
    let first = stdout_of(&iqdp(&args));
    let second = stdout_of(&iqdp(&args));
    assert_eq!(first, second);
    let single = stdout_of(&iqdp_env(&args, "IQDP_THREADS", "1"));
    let double = stdout_of(&iqdp_env(&args, "IQDP_THREADS", "2"));
    assert_eq!(single, double);
    assert_eq!(first, single);
}

#[test]
fn sweep_at_pure_delay_reaches_one_round() {
    let out = iqdp(&[
        "sweep",
        "--L",
        "8",
        "--N",
        "2",
        "--target",
        "max",
        "--lambdas",
        "0,1",
    ]);
    let text = stdout_of(&out);
    let last = text.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[0], "1");
    let delay: f64 = fields[2].parse().unwrap();
    assert!((delay - 1.0).abs() < 1e-12);
}

#[test]
fn feedback_sweep_never_undercuts_the_plain_rate() {
    let grid = "0,0.25,0.5,0.75,1";
    let plain = stdout_of(&iqdp(&[
        "sweep",
        "--L",
        "8",
        "--N",
        "2",
        "--target",
        "argmax",
        "--lambdas",
        grid,
    ]));
    let fed = stdout_of(&iqdp(&[
        "sweep",
        "--L",
        "8",
        "--N",
        "2",
        "--target",
        "argmax",
        "--lambdas",
        grid,
        "--feedback",
    ]));
    for (a, b) in plain.lines().skip(1).zip(fed.lines().skip(1)) {
        let rate_plain: f64 = a.split(',').nth(1).unwrap().parse().unwrap();
        let rate_fed: f64 = b.split(',').nth(1).unwrap().parse().unwrap();
        assert!(rate_fed >= rate_plain - 1e-9);
    }
}

#[test]
fn solve_json_policy_round_trips_through_the_evaluator() {
    let out = iqdp(&[
        "solve", "--L", "8", "--N", "2", "--target", "max", "--lambda", "0.25",
    ]);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json");
    let mut actions = BTreeMap::new();
    for entry in doc["policy"].as_array().unwrap() {
        let key = StateKey {
            n: entry["state"]["n"].as_u64().unwrap() as usize,
            lo: entry["state"]["lo"].as_u64().unwrap() as usize,
            hi: entry["state"]["hi"].as_u64().unwrap() as usize,
        };
        let bins: Vec<usize> = entry["quantizer"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap() as usize)
            .collect();
        actions.insert(key, Quantizer::new(bins).expect("valid quantizer"));
    }
    let policy = Policy {
        target: Target::Max,
        actions,
    };
    let root = State::new(2, 1, 8, Arc::new(Pmf::uniform(8).unwrap())).unwrap();
    let point = evaluate_policy(&root, &policy, 0.25, false).expect("evaluate");
    assert!((point.cost - doc["cost"].as_f64().unwrap()).abs() < 1e-9);
    assert!((point.rate - doc["expected_rate"].as_f64().unwrap()).abs() < 1e-9);
    assert!((point.delay - doc["expected_delay"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn gap_against_the_full_space_is_identically_zero() {
    let out = iqdp(&[
        "gap",
        "--L",
        "8",
        "--N",
        "2",
        "--subset",
        "partitions",
        "--lambdas",
        "0,0.5,1",
    ]);
    let text = stdout_of(&out);
    for line in text.lines().skip(1).filter(|l| !l.starts_with('#')) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], "0");
        assert_eq!(fields[2], "0");
    }
    assert!(text.lines().last().unwrap().starts_with("# delta_max="));
}

#[test]
fn compare_prefers_the_balanced_split_on_sixteen() {
    let out = iqdp(&[
        "compare",
        "--L",
        "16",
        "--N",
        "2",
        "--q1",
        "11,5",
        "--q2",
        "15,1",
        "--lambdas",
        "0.5",
    ]);
    let text = stdout_of(&out);
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let cost_q1: f64 = fields[1].parse().unwrap();
    let cost_q2: f64 = fields[2].parse().unwrap();
    assert!(cost_q1 < cost_q2);
}

#[test]
fn family_listing_counts_match_the_payload() {
    let out = iqdp(&["family", "--L", "6", "--space", "partitions"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json");
    let quantizers = doc["quantizers"].as_array().unwrap();
    assert_eq!(doc["count"].as_u64().unwrap() as usize, quantizers.len());
    for q in quantizers {
        let bins: Vec<u64> = q
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .collect();
        assert_eq!(bins.iter().sum::<u64>(), 6);
        assert!(!bins.is_empty());
    }

    let csv = stdout_of(&iqdp(&[
        "family",
        "--L",
        "6",
        "--space",
        "partitions",
        "--format",
        "csv",
    ]));
    assert_eq!(csv.lines().count(), quantizers.len() + 1);
}

#[test]
fn simulate_is_deterministic_for_a_fixed_seed() {
    let args = [
        "simulate",
        "--L",
        "4",
        "--N",
        "2",
        "--target",
        "max",
        "--policy",
        "binary-search",
        "--trials",
        "400",
        "--seed",
        "11",
    ];
    let first = stdout_of(&iqdp(&args));
    let second = stdout_of(&iqdp(&args));
    assert_eq!(first, second);
    let doc: serde_json::Value = serde_json::from_str(&first).expect("json");
    assert_eq!(doc["correctness"].as_f64().unwrap(), 1.0);

    let mut other = args;
    other[other.len() - 1] = "12";
    let third = stdout_of(&iqdp(&other));
    assert_ne!(first, third);
}

#[test]
fn simulate_dp_policy_requires_lambda() {
    let out = iqdp(&["simulate", "--L", "4", "--N", "2", "--target", "max"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("sweep.csv");
    let args = [
        "sweep",
        "--L",
        "4",
        "--N",
        "2",
        "--target",
        "both",
        "--lambdas",
        "0:1:0.25",
    ];
    let streamed = stdout_of(&iqdp(&args));
    let mut with_out: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    with_out.push("--out".into());
    with_out.push(path.to_str().unwrap().into());
    let refs: Vec<&str> = with_out.iter().map(String::as_str).collect();
    let out = iqdp(&refs);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).expect("read output file");
    assert_eq!(written, streamed);
}
