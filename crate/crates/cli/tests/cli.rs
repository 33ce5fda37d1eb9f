//! End-to-end tests against the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_secagg"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("secagg-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn run_fixed_dropout_reports_example_rates() {
    let dir = tmp_dir("run-fixed");
    let out = bin()
        .args([
            "run", "--k", "3", "--u", "2", "--kc", "1", "--q", "11", "--l", "2", "--seed", "7",
            "--dropout", "fixed", "--u1", "1,2",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));

    let transcript = read(&dir.join("transcript.json"));
    let parsed: serde_json::Value = serde_json::from_str(&transcript).unwrap();
    for key in [
        "schema_version",
        "params",
        "demand_digest",
        "round1_queries",
        "u1",
        "round1_messages",
        "round2_queries",
        "round2_answers",
        "u2",
        "decoded",
        "seed",
    ] {
        assert!(parsed.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(parsed["u1"], serde_json::json!([1, 2]));
    assert!(parsed.get("demand_debug").is_none());

    let rates = read(&dir.join("rates.csv"));
    let row = rates.lines().nth(1).unwrap();
    // r1 = 1, r2 = 0.5
    assert!(row.contains(",1,0.5,"), "row: {row}");

    let summary: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(summary["r1"], serde_json::json!([1, 1]));
    assert_eq!(summary["r2"], serde_json::json!([1, 2]));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn invalid_survivor_bound_is_rejected() {
    let out = bin()
        .args(["run", "--k", "3", "--u", "3", "--kc", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_str(stderr_of(&out).trim()).unwrap();
    assert_eq!(err["stage"], "validation");
    assert!(
        err["error"].as_str().unwrap().contains("u=3"),
        "error: {}",
        err["error"]
    );
}

#[test]
fn field_below_minimum_is_rejected() {
    let out = bin()
        .args(["run", "--k", "4", "--u", "2", "--kc", "1", "--q", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("below the minimum"));
}

#[test]
fn same_seed_gives_byte_identical_transcripts() {
    let dir_a = tmp_dir("det-a");
    let dir_b = tmp_dir("det-b");
    for dir in [&dir_a, &dir_b] {
        let out = bin()
            .args([
                "run", "--scheme", "multi", "--k", "4", "--u", "3", "--kc", "2", "--l", "4",
                "--seed", "99", "--dropout", "random", "--density", "0.8",
            ])
            .arg("--out")
            .arg(dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
    let a = std::fs::read(dir_a.join("transcript.json")).unwrap();
    let b = std::fs::read(dir_b.join("transcript.json")).unwrap();
    assert_eq!(a, b);
    std::fs::remove_dir_all(&dir_a).ok();
    std::fs::remove_dir_all(&dir_b).ok();
}

#[test]
fn trials_split_across_workers_match_serial_execution() {
    let dir_serial = tmp_dir("workers-serial");
    let dir_parallel = tmp_dir("workers-parallel");
    for (dir, workers) in [(&dir_serial, "1"), (&dir_parallel, "3")] {
        let out = bin()
            .args([
                "run", "--k", "3", "--u", "2", "--kc", "1", "--seed", "5", "--trials", "4",
                "--workers", workers,
            ])
            .arg("--out")
            .arg(dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
    for trial in 0..4 {
        let name = format!("transcript_{trial:03}_000.json");
        assert_eq!(
            std::fs::read(dir_serial.join(&name)).unwrap(),
            std::fs::read(dir_parallel.join(&name)).unwrap(),
            "{name}"
        );
    }
    std::fs::remove_dir_all(&dir_serial).ok();
    std::fs::remove_dir_all(&dir_parallel).ok();
}

#[test]
fn flags_override_config_file() {
    let dir = tmp_dir("precedence");
    let config_path = dir.join("config.json");
    std::fs::write(
        &config_path,
        serde_json::json!({
            "k": 3, "u": 2, "kc": 1, "q": 11, "l": 2, "seed": 1,
            "demand": [[3, 5, 7]],
            "dropout": {"mode": "fixed", "u1": [1, 3], "u2": [1, 3]}
        })
        .to_string(),
    )
    .unwrap();
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(&config_path)
        .args(["--seed", "2"])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let parsed: serde_json::Value =
        serde_json::from_str(&read(&dir.join("transcript.json"))).unwrap();
    assert_eq!(parsed["seed"], 2);
    assert_eq!(parsed["u1"], serde_json::json!([1, 3]));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn debug_demand_flag_exports_coefficients() {
    let dir = tmp_dir("debug-demand");
    let config_path = dir.join("config.json");
    std::fs::write(
        &config_path,
        serde_json::json!({
            "k": 3, "u": 2, "kc": 1, "q": 11, "l": 2,
            "demand": [[3, 5, 7]]
        })
        .to_string(),
    )
    .unwrap();
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(&config_path)
        .arg("--debug-demand")
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let parsed: serde_json::Value =
        serde_json::from_str(&read(&dir.join("transcript.json"))).unwrap();
    assert_eq!(parsed["demand_debug"], serde_json::json!([[3, 5, 7]]));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_tiny_single_all_checks_pass() {
    let dir = tmp_dir("verify-single");
    let out = bin()
        .args([
            "verify", "--scheme", "single", "--k", "3", "--u", "2", "--kc", "1", "--q", "3",
            "--l", "2", "--trials", "25",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let results = report["results"].as_array().unwrap();
    assert_eq!(results.len(), 4);
    for r in results {
        assert_eq!(r["verdict"], "PASS", "{r}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_multi_skips_mi_but_passes_rest() {
    let dir = tmp_dir("verify-multi");
    let out = bin()
        .args([
            "verify", "--scheme", "multi", "--k", "4", "--u", "3", "--kc", "2", "--q", "7",
            "--l", "2", "--trials", "25",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    // exhaustive mi is out of reach for the multi scheme: skipped, exit 3
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    for r in report["results"].as_array().unwrap() {
        match r["check"].as_str().unwrap() {
            "mi" => assert_eq!(r["verdict"], "SKIPPED", "{r}"),
            _ => assert_eq!(r["verdict"], "PASS", "{r}"),
        }
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_planted_leak_fails_privacy() {
    let dir = tmp_dir("verify-leak");
    let out = bin()
        .args([
            "verify", "--scheme", "multi", "--k", "4", "--u", "3", "--kc", "2", "--q", "7",
            "--l", "2", "--checks", "privacy", "--sabotage", "leak-demand",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(report["results"][0]["verdict"], "FAIL");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn rates_table_matches_the_comparison_row() {
    let out = bin()
        .args(["rates", "--k", "4", "--u", "3", "--kc-max", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "schema_version,kc,r1_multi,r2_multi,r1_baseline,r2_baseline,r1_converse,r2_converse,gap"
    );
    let kc1 = lines.next().unwrap();
    // kc = 1 at u = 3: the single scheme sits on the converse corner (1, 1/3)
    assert_eq!(
        kc1,
        "1,1,1,0.3333333333333333,1,0.3333333333333333,1,0.3333333333333333,1"
    );
    let kc2 = lines.next().unwrap();
    assert!(
        kc2.starts_with("1,2,1,1,2,0.6666666666666666,1,0.6666666666666666,1.5"),
        "{kc2}"
    );
    // gap column stays within 2 on a longer sweep
    let wide = bin()
        .args(["rates", "--k", "12", "--u", "9", "--kc-max", "8"])
        .output()
        .unwrap();
    for line in stdout_of(&wide).lines().skip(1) {
        let gap: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(gap <= 2.0, "{line}");
    }
    // kc >= u is outside every scheme's regime
    let bad = bin()
        .args(["rates", "--k", "4", "--u", "3", "--kc-max", "3"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn sweep_covers_all_schedules() {
    let dir = tmp_dir("sweep");
    let out = bin()
        .args([
            "sweep", "--scheme", "multi", "--k", "4", "--u", "3", "--kc", "2", "--l", "2",
            "--seed", "3",
        ])
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr_of(&out));
    let summary: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    // |u1|=3 four ways with u2=u1, plus u1=[4] with its five admissible u2
    assert_eq!(summary["schedules"], 9);
    assert_eq!(summary["all_decoded"], true);
    assert_eq!(summary["min_u2_covered"], true);
    assert_eq!(summary["r2_max"], serde_json::json!([1, 1]));
    std::fs::remove_dir_all(&dir).ok();
}
