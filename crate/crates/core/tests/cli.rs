use std::fs;
use std::process::{Command, Output};

use blindbeam::experiment::{parse_csv, CSV_HEADER};

fn blindbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blindbeam"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn scaling_writes_csv_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = ["scaling", "--seed", "5", "--trials", "2", "--set", "N=8,16,32", "--set", "methods=zero,csm,cpp"];
    for (path, threads) in [(&a, "1"), (&b, "4")] {
        let mut args = common.to_vec();
        args.extend(["--threads", threads, "--out", path.to_str().unwrap()]);
        let out = blindbeam(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("slope method=cpp"));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with(CSV_HEADER));
    // 2 trials x 3 methods x 3 sizes
    assert_eq!(parse_csv(&text).unwrap().len(), 18);
}

#[test]
fn csv_goes_to_stdout_without_out() {
    let out = blindbeam(&["examples", "--set", "examples=1", "--set", "N=9,19"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(CSV_HEADER));
    assert!(text.contains("ex1-good"));
}

#[test]
fn json_details_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("d.json");
    let out = blindbeam(&[
        "scaling",
        "--trials",
        "1",
        "--set",
        "N=8,16,32",
        "--set",
        "methods=cpp",
        "--json",
        json.to_str().unwrap(),
        "--out",
        dir.path().join("r.csv").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn config_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# lemma run\nexperiment = lemma-check\nN = 8\ntrials = 3\nseed = 9\n").unwrap();
    let out = blindbeam(&["lemma-check", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.seed == 9 && r.experiment == "lemma-check"));
}

#[test]
fn bad_config_exits_with_two() {
    for args in [
        &["scaling", "--set", "trials=0"][..],
        &["scaling", "--set", "bogus=1"],
        &["scaling", "--set", "noequals"],
        &["examples", "--set", "N=8,16"],
        &["compare", "--set", "scenario=/nonexistent/file.cfg"],
    ] {
        let out = blindbeam(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn unknown_subcommand_is_rejected() {
    assert!(!blindbeam(&["frobnicate"]).status.success());
}
