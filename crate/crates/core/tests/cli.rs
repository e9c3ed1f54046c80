//! End-to-end tests of the command-line binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secure-sum-lab"))
        .args(args)
        .output()
        .expect("spawning the binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn run_prints_the_announced_sum() {
    let out = lab(&[
        "run", "--protocol", "ck", "--n", "4", "--inputs", "1,2,3,4", "--modulus", "97",
        "--seed", "42",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "announced 10\n");
}

#[test]
fn run_infers_n_from_the_input_list() {
    let out = lab(&[
        "run", "--protocol", "ck", "--inputs", "1,2,3,4", "--modulus", "97", "--seed", "42",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "announced 10\n");
}

#[test]
fn segmented_protocols_reject_small_rings() {
    let out = lab(&[
        "run", "--protocol", "ck", "--n", "3", "--inputs", "1,2,3", "--modulus", "97",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("too few parties"), "{}", stderr(&out));
}

#[test]
fn unsegmented_protocol_allows_three_parties() {
    let out = lab(&[
        "run", "--protocol", "clifton", "--n", "3", "--inputs", "0,0,0", "--modulus", "97",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "announced 0\n");
}

#[test]
fn transcript_matches_the_frozen_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transcript.txt");
    let out = lab(&[
        "run", "--protocol", "ck", "--n", "4", "--inputs", "1,2,3,4", "--modulus", "97",
        "--seed", "42", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let produced = fs::read_to_string(&path).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/ck_n4_m97_seed42.txt");
    assert_eq!(produced, fs::read_to_string(golden).unwrap());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for path in [&a, &b] {
        let out = lab(&[
            "run", "--protocol", "ksecure", "--n", "5", "--inputs", "random", "--seed", "7",
            "--initiator-mask", "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("lab.conf");
    fs::write(&conf, "protocol=clifton\nmodulus=97\nseed=42\ninputs=1,2,3,4\n").unwrap();
    let from_file = lab(&["run", "--config", conf.to_str().unwrap()]);
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    assert_eq!(stdout(&from_file), "announced 10\n");
    // same config, but the protocol flag wins over the file value
    let overridden = lab(&[
        "run", "--config", conf.to_str().unwrap(), "--protocol", "ck",
    ]);
    assert!(overridden.status.success(), "{}", stderr(&overridden));
    assert_eq!(stdout(&overridden), "announced 10\n");
}

#[test]
fn sweep_reports_the_known_four_party_leaks() {
    let out = lab(&[
        "sweep", "--protocol", "ck", "--n", "4", "--modulus", "97", "--seed", "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = stdout(&out);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n,protocol,coalition,victim,leaked,segments_learned"
    );
    // C(4,2) pairs x 2 victims each, plus the two aggregate rows
    assert_eq!(csv.lines().count(), 1 + 12 + 2);
    assert!(csv.contains("4,ck,P2+P3,P1,true,3"), "{csv}");
    assert!(csv.contains("4,ck,P2+P3,P4,true,1"), "{csv}");
    assert!(csv.contains("4,ck,ALL,initiator,1,"), "{csv}");
    assert!(stderr(&out).contains("2 leaking cells"), "{}", stderr(&out));
}

#[test]
fn masked_sweep_is_leak_free() {
    let out = lab(&[
        "sweep", "--protocol", "ck", "--n", "4..6", "--modulus", "97", "--seed", "1",
        "--initiator-mask",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("0 leaking cells"), "{}", stderr(&out));
    for line in stdout(&out).lines().skip(1) {
        assert!(!line.contains("true"), "unexpected leak: {line}");
    }
}

#[test]
fn montecarlo_writes_a_json_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mc.json");
    let out = lab(&[
        "montecarlo", "--protocol", "ck", "--n", "5", "--trials", "20", "--seed", "3",
        "--initiator-mask", "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("initiator: p=0.000000"), "{text}");
    assert!(text.contains("middle: p=0.000000"), "{text}");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["trials"], 20);
    assert_eq!(json["initiator"]["leaked"], 0);
}

#[test]
fn unknown_protocol_is_rejected() {
    let out = lab(&["run", "--protocol", "bogus", "--inputs", "1,2,3,4"]);
    assert!(!out.status.success());
}
