use std::process::{Command, Output};

use serde_json::Value;
use thermoform_cli::{parse_specs, run_experiment, Command as Sub, ExperimentConfig, RunError};

fn thermoform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermoform"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn pressure_example() {
    let out = thermoform(&[
        "pressure", "--map", "cheb2", "--potential", "const:0", "--base", "0.75", "--depth", "10",
        "--out", "-",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let values = doc["report"]["series"][0]["values"].as_array().unwrap();
    assert_eq!(values.len(), 10);
    assert_eq!(format!("{:.7}", values[9].as_f64().unwrap()), "0.6931472");
    assert!(doc["meta"].is_object());
}

#[test]
fn theorem1_example() {
    let out = thermoform(&[
        "theorem1", "--map", "cheb2", "--potential", "cos:0.3", "--depth", "14", "--cells", "4096",
        "--no-meta",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["report"]["consistency"], true);
    assert!(doc.get("meta").is_none());
}

#[test]
fn periodic_gap_example() {
    let out = thermoform(&[
        "periodic-gap", "--map", "cheb2", "--potential", "const:0", "--period", "1", "--depth", "12",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let margin = json(&out)["report"]["margin"].as_f64().unwrap();
    assert!((margin - 0.6931).abs() < 1e-4);
}

#[test]
fn exit_codes() {
    assert_eq!(thermoform(&["pressure", "--map", "cheb9"]).status.code(), Some(2));
    assert_eq!(thermoform(&["pressure", "--potential", "sin:1"]).status.code(), Some(2));
    assert_eq!(thermoform(&["pressure", "--depth", "0"]).status.code(), Some(2));
    assert_eq!(thermoform(&["pressure", "--bogus"]).status.code(), Some(2));
    assert_eq!(thermoform(&["exactness"]).status.code(), Some(2));
    assert_eq!(thermoform(&["pressure", "--depth", "40"]).status.code(), Some(4));
    assert_eq!(
        thermoform(&["imfs", "--base", "1.0", "--max-time", "2"]).status.code(),
        Some(3)
    );
    assert_eq!(
        thermoform(&["hyperbolicity", "--potential", "geom:1"]).status.code(),
        Some(1)
    );
}

#[test]
fn csv_matches_json() {
    let base = ["pressure", "--base", "0.3", "--potential", "cos:0.3", "--depth", "9", "--no-meta"];
    let doc = json(&thermoform(&base));
    let mut args = base.to_vec();
    args.extend(["--format", "csv"]);
    let csv = String::from_utf8(thermoform(&args).stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,p_n,leaf_count"));
    let series = &doc["report"]["series"][0];
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], (i + 1).to_string());
        let p: f64 = fields[1].parse().unwrap();
        assert_eq!(p.to_bits(), series["values"][i].as_f64().unwrap().to_bits());
        assert_eq!(fields[2], series["leaf_counts"][i].to_string());
    }
}

#[test]
fn equilibrium_csv_schema() {
    let out = thermoform(&["equilibrium", "--cells", "64", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("cell_lo,cell_hi,weight"));
    assert_eq!(csv.lines().count(), 65);
    let total: f64 = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn dump_config_echoes_flags() {
    let out = thermoform(&["pressure", "--depth", "5", "--base", "0.3,0.6", "--dump-config", "--no-meta"]);
    let doc = json(&out);
    assert_eq!(doc["config"]["depth"], 5);
    assert_eq!(doc["config"]["command"], "pressure");
    assert_eq!(doc["config"]["base_points"].as_array().unwrap().len(), 2);
    assert_eq!(doc["report"]["series"].as_array().unwrap().len(), 2);
}

#[test]
fn imfs_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("thermoform-imfs-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("shift.txt");
    std::fs::write(&path, "# full shift\n0 1\n1 0 0.5\n1 0.5 1\n").unwrap();
    let out = thermoform(&["imfs", "--imfs-file", path.to_str().unwrap(), "--max-time", "6", "--no-meta"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let entry = &doc["report"]["entries"][0];
    assert_eq!(entry["free"], true);
    assert_eq!(entry["distinct_points"][5], 64);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn parse_specs_examples() {
    let (map, phi) = parse_specs("cheb2", "const:0").unwrap();
    assert_eq!(map.label(), "cheb2");
    assert_eq!(phi.eval(0.4).unwrap(), 0.0);

    let (poly, _) = parse_specs("poly:[0,1]:0,4,-4", "cos:0.3").unwrap();
    for x in [0.0, 0.3, 0.5, 0.9] {
        assert!((poly.eval(x).unwrap() - map.eval(x).unwrap()).abs() < 1e-15);
    }

    let (_, geom) = parse_specs("cheb2", "geom:1").unwrap();
    assert!(!geom.is_holder());

    assert!(matches!(parse_specs("cheb2", "cos:x"), Err(RunError::Parse(_))));
}

#[test]
fn invalid_config_rejected_before_work() {
    let mut config = ExperimentConfig::new(Sub::Theorem1, "cheb2", "const:0");
    config.cells = 0;
    assert_eq!(run_experiment(&config).unwrap_err().exit_code(), 2);
    config.cells = 16;
    config.base_points.clear();
    assert_eq!(run_experiment(&config).unwrap_err().exit_code(), 2);
}
