use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hopscatter::fixtures;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hopscatter"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn list_scenarios_names_six_kinds_stably() {
    let a = run(&["list-scenarios"]);
    let b = run(&["list-scenarios"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let kinds: Vec<&str> = text
        .lines()
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    assert_eq!(
        kinds,
        [
            "mapping",
            "hop_algorithm",
            "optimization",
            "latency",
            "throughput",
            "connection"
        ]
    );
}

#[test]
fn every_listed_kind_runs_its_bundled_fixture() {
    let out = tempfile::tempdir().unwrap();
    for (kind, fixture) in fixtures::BY_KIND {
        let dir = out.path().join(kind);
        let o = run(&[
            "run",
            fixture,
            "--assert",
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(
            o.status.success(),
            "{kind}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!read_dir(&dir).is_empty(), "{kind} wrote nothing");
    }
}

#[test]
fn mapping_ideal_writes_a_matrix_of_ones() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "run",
        "mapping_ideal.json",
        "--out-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.path().join("mapping_ideal_matrix.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 41);
    assert!(rows[0].starts_with("excitation\\target,37,0,1,"));
    let values: Vec<&str> = rows[1..]
        .iter()
        .flat_map(|r| r.split(',').skip(1))
        .filter(|v| !v.is_empty())
        .collect();
    assert_eq!(values.len(), 1560);
    assert!(values.iter().all(|&v| v == "1.0000"));
}

#[test]
fn csa1_histogram_has_the_81_54_pattern() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "run",
        "hopping_csa1.json",
        "--out-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.path().join("hopping_csa1_histogram.csv")).unwrap();
    let mut total = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let ch: u8 = f[0].parse().unwrap();
        let expected: u32 = f[1].parse().unwrap();
        let want: u32 = if ch <= 23 { 81 } else { 54 };
        assert!(expected.abs_diff(want) <= 1, "expected {expected} on {ch}");
        assert_eq!(f[2], f[1], "observed on {ch}");
        total += expected;
    }
    assert_eq!(total, 1000);
}

#[test]
fn latency_breakdown_totals_5800() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "run",
        "latency_default.json",
        "--out-dir",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let json: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out.path().join("latency_default_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(json["total_us"].as_f64(), Some(5800.0));
}

#[test]
fn same_seed_gives_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        for f in ["hopping_csa2_lossy.json", "connection_lossy_downlink.json"] {
            let o = run(&[
                "run",
                f,
                "--seed",
                "99",
                "--out-dir",
                dir.path().to_str().unwrap(),
            ]);
            assert!(o.status.success());
        }
    }
    assert_eq!(read_dir(a.path()), read_dir(b.path()));
}

#[test]
fn seed_override_changes_lossy_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&[
        "run",
        "hopping_csa1_lossy.json",
        "--seed",
        "1",
        "--out-dir",
        a.path().to_str().unwrap(),
    ]);
    run(&[
        "run",
        "hopping_csa1_lossy.json",
        "--seed",
        "2",
        "--out-dir",
        b.path().to_str().unwrap(),
    ]);
    assert_ne!(read_dir(a.path()), read_dir(b.path()));
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const LATENCY: &str = r#"{
  "name": "lat",
  "seed": 0,
  "scenario": {"kind": "latency", "profile": "mcu", "payload_bytes": 20,
               "plm": {"packet_interval_ms": 14.0, "symbol_bits": 1}},
  "expect": EXPECT
}"#;

#[test]
fn assert_mode_reflects_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let pass = write_config(
        dir.path(),
        &LATENCY.replace("EXPECT", r#"{"total_us": 5800.0}"#),
    );
    let o = run(&["run", &pass, "--assert", "--out-dir", out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS total_us"));

    let fail = write_config(
        dir.path(),
        &LATENCY.replace("EXPECT", r#"{"total_us": 1000.0}"#),
    );
    let o = run(&["run", &fail, "--assert", "--out-dir", out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL total_us"));

    // Without --assert the thresholds are not checked.
    let o = run(&["run", &fail, "--out-dir", out]);
    assert_eq!(o.status.code(), Some(0));

    // A threshold for another scenario kind is a failure, not a silent pass.
    let foreign = write_config(
        dir.path(),
        &LATENCY.replace("EXPECT", r#"{"min_gain": 1.0}"#),
    );
    let o = run(&["run", &foreign, "--assert", "--out-dir", out]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_configs_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "unknown field",
            LATENCY
                .replace("EXPECT", "{}")
                .replace("\"seed\"", "\"colour\": 1, \"seed\""),
        ),
        (
            "unknown kind",
            LATENCY
                .replace("EXPECT", "{}")
                .replace("\"latency\"", "\"teleport\""),
        ),
        ("not json", "{".to_string()),
        (
            "bad value",
            LATENCY.replace("EXPECT", "{}").replace("14.0", "-1.0"),
        ),
        (
            "bad name",
            LATENCY
                .replace("EXPECT", "{}")
                .replace("\"lat\"", "\"a b\""),
        ),
    ];
    for (what, text) in cases {
        let path = write_config(dir.path(), &text);
        let o = run(&["run", &path, "--out-dir", dir.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{what}");
        assert!(
            String::from_utf8_lossy(&o.stderr).starts_with("error:"),
            "{what}"
        );
    }
    let o = run(&["run", "/no/such/config.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["frobnicate"]);
    assert!(!o.status.success());
}
