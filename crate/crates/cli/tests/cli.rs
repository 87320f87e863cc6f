//! The `rellich` binary end to end: exit codes, report files, config echo.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rellich_cli::{parse_config, RunConfig};
use rellich_core::oracle_nd::TensorField;
use serde_json::Value;

fn rellich(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rellich")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn records<'a>(r: &'a Value, check: &str) -> Vec<&'a Value> {
    r["records"].as_array().unwrap().iter().filter(|x| x["check"] == check).collect()
}

fn without_timestamp(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.contains("\"generated_at_unix\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn verify_suite_passes_with_every_identity_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "v.json", r#"{"verify": {"dimensions": [4, 5, 6], "degrees": [0, 1, 2, 3], "samples": 20}}"#);
    let out = rellich(&["verify", "--config", &cfg, "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&tmp.path().join("run"));
    assert_eq!(r["schema"], 1);
    let identity = records(&r, "identity");
    assert_eq!(identity.len(), 240);
    assert!(identity.iter().all(|x| x["pass"] == true));
    assert!(r["records"].as_array().unwrap().iter().all(|x| x["pass"] == true));
}

#[test]
fn asserting_the_theorem_in_three_dimensions_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "f.json",
        r#"{"verify": {"dimensions": [3], "degrees": [1, 2], "samples": 4, "assert_theorem_everywhere": true}}"#,
    );
    let out = rellich(&["verify", "--config", &cfg, "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let r = report(&tmp.path().join("run"));
    let failed: Vec<&Value> = r["records"].as_array().unwrap().iter().filter(|x| x["pass"] == false).collect();
    assert!(!failed.is_empty());
    for f in failed {
        assert_eq!(f["check"], "cross_term_witness");
        assert!(f["values"]["cross"].as_f64().unwrap() < 0.0);
    }
    // without the flag the same negative value is informational only
    let cfg = write(tmp.path(), "g.json", r#"{"verify": {"dimensions": [3], "degrees": [1, 2], "samples": 4}}"#);
    let out = rellich(&["verify", "--config", &cfg, "--out", "quiet"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(&tmp.path().join("quiet"));
    assert!(records(&r, "cross_term_witness").iter().all(|x| x["asserted"] == false));
}

#[test]
fn sharp_summary_carries_both_constants() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.json", r#"{"sharp": {"cases": [[5, 0], [7, 2]]}}"#);
    let out = rellich(&["sharp", "--config", &cfg, "--out", "run"], tmp.path());
    let r = report(&tmp.path().join("run"));
    let failed = r["records"].as_array().unwrap().iter().any(|x| x["pass"] == false);
    assert_eq!(out.status.code(), Some(if failed { 1 } else { 0 }));
    let csv = fs::read_to_string(tmp.path().join("run/summary.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("sharp_constant,5,0,")).expect("summary row for (5, 0)");
    assert!(row.contains("symbol=1.5625e0"), "{row}");
    assert!(row.contains("eigen="), "{row}");
    assert!(row.contains("relative_gap="), "{row}");
    let est: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("run/estimates.json")).unwrap()).unwrap();
    assert_eq!(est["estimates"].as_array().unwrap().len(), 6);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = write(tmp.path(), "empty.json", "{}");
    assert_eq!(rellich(&["--config", &empty], tmp.path()).status.code(), Some(2));

    let zero = write(tmp.path(), "zero.json", "{\n  \"command\": \"verify\",\n  \"tolerances\": {\n    \"identity_rel\": 0\n  }\n}\n");
    let out = rellich(&["--config", &zero], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let typo = write(tmp.path(), "typo.json", "{\n  \"command\": \"verify\",\n  \"sead\": 3\n}\n");
    let out = rellich(&["--config", &typo], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(rellich(&["verify", "--workers", "many"], tmp.path()).status.code(), Some(2));
    assert!(!tmp.path().join("rellich-out").exists());
}

#[test]
fn effective_config_is_echoed_and_reparses() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "v.json", r#"{"verify": {"dimensions": [5], "degrees": [1], "samples": 2}}"#);
    let out = rellich(&["verify", "--config", &cfg, "--out", "run", "--seed", "99"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let r = report(&tmp.path().join("run"));
    let echoed = serde_json::to_string_pretty(&r["config"]).unwrap();
    let parsed: RunConfig = parse_config(&echoed).unwrap();
    assert_eq!(parsed.seed, 99);
    assert_eq!(parsed.verify.samples, 2);
    assert_eq!(serde_json::to_value(&parsed).unwrap(), r["config"]);
    // every default is spelled out
    assert!(r["config"]["tolerances"]["sign_rel"].as_f64().is_some());
    assert!(r["config"]["oracle"]["profile"].is_object());
}

#[test]
fn reports_ignore_worker_count() {
    let config = r#"{"verify": {"dimensions": [2, 4, 7], "samples": 6}, "seed": 5}"#;
    let runs: Vec<tempfile::TempDir> = ["1", "3"]
        .iter()
        .map(|workers| {
            let tmp = tempfile::tempdir().unwrap();
            let cfg = write(tmp.path(), "v.json", config);
            let out = rellich(&["verify", "--config", &cfg, "--out", "run", "--workers", workers], tmp.path());
            assert_eq!(out.status.code(), Some(0));
            tmp
        })
        .collect();
    for file in ["report.json", "summary.csv", "estimates.json"] {
        assert_eq!(
            without_timestamp(&runs[0].path().join("run").join(file)),
            without_timestamp(&runs[1].path().join("run").join(file)),
            "{file}"
        );
    }
}

#[test]
fn oracle_dump_writes_loadable_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "o.json",
        r#"{"oracle": {"cases": [[3, 1]], "points_3d": [32, 48], "extent": 4.0, "dump": true}}"#,
    );
    let out = rellich(&["oracle", "--config", &cfg, "--out", "run"], tmp.path());
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let r = report(&tmp.path().join("run"));
    assert_eq!(records(&r, "oracle_reduction").len(), 2);
    assert_eq!(records(&r, "oracle_order").len(), 1);
    // only the finest resolution is asserted
    assert!(records(&r, "oracle_reduction").iter().any(|x| x["asserted"] == false));
    let exit_one = out.status.code() == Some(1);
    let any_failed = r["records"].as_array().unwrap().iter().any(|x| x["pass"] == false);
    assert_eq!(exit_one, any_failed);

    let fields = tmp.path().join("run/fields");
    let field = TensorField::load(&fields.join("mode_n3_l1_p48.bin"), &fields.join("mode_n3_l1_p48.json")).unwrap();
    assert_eq!((field.dimension(), field.points()), (3, 48));
}

#[test]
fn help_lists_the_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rellich(&["--help"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for key in ["identity_rel", "sign_rel", "constant_rel", "budget", "points_3d", "--workers", "--seed", "sweep"] {
        assert!(text.contains(key), "help lacks {key}");
    }
}
