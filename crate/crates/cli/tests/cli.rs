use std::path::PathBuf;
use std::process::{Command, Output};

use atomtf_cli::config::{Format, RunConfig, SplitChoice};
use atomtf_cli::table::{emit_table, Table};
use atomtf_cli::{run, Command as Sub};
use proptest::prelude::*;

fn atomtf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atomtf")).args(args).output().unwrap()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("atomtf-{}-{name}", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn config_round_trip() {
    let mut cfg = RunConfig {
        z: vec![2.0, 10.0],
        kappa: vec![0.5],
        ..RunConfig::default()
    };
    cfg.constants.c_w = Some(1.0 / 9.0);
    cfg.flow.max_iter = 1234;
    cfg.split_family = SplitChoice::Equal;
    cfg.format = Format::Json;
    cfg.jobs = Some(2);
    let back = RunConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(RunConfig::from_json("{}").unwrap(), RunConfig::default());
}

#[test]
fn unknown_keys_are_rejected() {
    for text in [r#"{"Z": [1], "bogus": 1}"#, r#"{"flow": {"stepsize": 1}}"#, r#"{"constants": {"c_x": 1}}"#] {
        let err = RunConfig::from_json(text).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{text}");
    }
}

proptest! {
    #[test]
    fn json_carries_the_csv_values(values in prop::collection::vec(-1e6f64..1e6, 1..20)) {
        let mut t = Table::new(&["x"]);
        for v in &values {
            t.push(vec![(*v).into()]);
        }
        t.note("count", values.len());
        let doc: serde_json::Value = serde_json::from_str(&emit_table(&t, Format::Json)).unwrap();
        let csv = emit_table(&t, Format::Csv);
        for (row, line) in doc["rows"].as_array().unwrap().iter().zip(csv.lines().skip(1)) {
            prop_assert_eq!(row["x"].as_f64().unwrap(), line.parse::<f64>().unwrap());
        }
        prop_assert_eq!(doc["summary"]["count"].as_u64(), Some(values.len() as u64));
    }
}

#[test]
fn neutral_tf_atom_has_unit_mass() {
    let cfg = RunConfig {
        z: vec![1.0],
        ..RunConfig::default()
    };
    let out = run(Sub::Tf, &cfg).unwrap();
    let Some(atomtf_cli::table::Cell::Num(mass)) = out.table.summary_value("mass") else {
        panic!("no mass in the summary");
    };
    assert!((mass - 1.0).abs() <= 1e-6);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = atomtf(&["tf", "--Z", "2"]);
    let b = atomtf(&["tf", "--Z", "2"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let out = std::env::temp_dir().join(format!("atomtf-{}-tf.csv", std::process::id()));
    let c = atomtf(&["tf", "--Z", "2", "--out", out.to_str().unwrap()]);
    assert!(c.status.success() && c.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
    std::fs::remove_file(out).ok();
}

#[test]
fn exit_codes() {
    assert_eq!(atomtf(&["tf"]).status.code(), Some(2));
    assert_eq!(atomtf(&["tfdw", "--Z", "1,2"]).status.code(), Some(2));
    let bad = scratch("bad.json", r#"{"Z": [1], "typo": true}"#);
    assert_eq!(atomtf(&["tf", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let short = scratch("short.json", r#"{"Z": [10], "flow": {"max_iter": 3}}"#);
    let out = atomtf(&["tfdw", "--config", short.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    // The table is still written.
    assert!(String::from_utf8(out.stdout).unwrap().contains("# converged=false"));
    assert_eq!(atomtf(&["verify", "--seed", "9"]).status.code(), Some(0));
    for p in [bad, short] {
        std::fs::remove_file(p).ok();
    }
}

#[test]
fn flags_override_the_config() {
    let path = scratch("over.json", r#"{"Z": [3], "format": "json"}"#);
    let out = atomtf(&["tf", "--config", path.to_str().unwrap(), "--Z", "2", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("r,rho_tf,phi_tf\n"));
    assert!(text.contains("# Z=2.00000000000000e0"));
    std::fs::remove_file(path).ok();
}
