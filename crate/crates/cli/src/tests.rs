use std::path::Path;

use clap::Parser;
use serde_json::Value;
use sigmoid_moments::grid::{summarize, ErrorScale, SoftmaxAxes, SummaryInput};

use crate::output::CliError;
use crate::{run, Cli};

const SMALL_GRID: [&str; 8] = [
    "--mu-steps",
    "5",
    "--sigma-exp-min",
    "-1",
    "--sigma-exp-max",
    "2",
    "--n",
    "1000",
];

fn invoke(args: &[&str]) -> Result<(), CliError> {
    let cli = Cli::try_parse_from(std::iter::once("sigmoid-moments").chain(args.iter().copied()))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    run(cli)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

/// Every summary field must match the one recomputed from the CSV exactly.
fn assert_summary_matches(doc: &Value, inputs: Vec<SummaryInput>) {
    let recomputed = serde_json::to_value(summarize(inputs)).unwrap();
    for (key, value) in recomputed.as_object().unwrap() {
        assert_eq!(&doc[key], value, "summary field {key}");
    }
}

#[test]
fn error_map_summary_is_recomputable_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    for (target, scale) in [("sigmoid", ErrorScale::Identity), ("log-sigmoid", ErrorScale::Exp)] {
        let csv = dir.path().join(format!("{target}.csv"));
        let mut args = vec!["error-map", target, "-o", csv.to_str().unwrap()];
        args.extend(SMALL_GRID);
        invoke(&args).unwrap();

        let (header, rows) = read_rows(&csv);
        assert_eq!(header, crate::error_map::GRID_HEADER);
        assert_eq!(rows.len(), 5 * 4);
        let inputs = rows
            .iter()
            .enumerate()
            .map(|(r, row)| SummaryInput {
                index: vec![r / 4, r % 4],
                coords: vec![row[0], row[1]],
                rel_error: row[5],
                prob_error: scale.error(row[2], row[3]),
            })
            .collect();
        let doc = read_json(&dir.path().join(format!("{target}.summary.json")));
        assert_eq!(doc["csv"], format!("{target}.csv"));
        assert_eq!(doc["manifest"]["seed"], 42);
        assert_summary_matches(&doc, inputs);
    }
}

#[test]
fn softmax_error_map_summary_is_recomputable_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("softmax.csv");
    invoke(&["error-map", "softmax", "--n", "1000", "-o", csv.to_str().unwrap()]).unwrap();
    let (header, rows) = read_rows(&csv);
    assert_eq!(header, crate::error_map::SOFTMAX_HEADER);
    let axes = SoftmaxAxes::coarse();
    assert_eq!(rows.len(), axes.len());
    let inputs = rows
        .iter()
        .enumerate()
        .map(|(r, row)| SummaryInput {
            index: axes.unflatten(r).to_vec(),
            coords: row[..4].to_vec(),
            rel_error: row[7],
            prob_error: ErrorScale::Identity.error(row[4], row[5]),
        })
        .collect();
    assert_summary_matches(&read_json(&dir.path().join("softmax.summary.json")), inputs);
}

#[test]
fn synthetic_calibration_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let out = out.to_str().unwrap();
    invoke(&["calibrate", "sigmoid", "--synthetic", "--truth", "0.3", "-o", out]).unwrap();
    let a = read_json(Path::new(out))["fit"]["coeffs"]["a"].as_f64().unwrap();
    assert!((a - 0.3).abs() < 1e-6, "{a}");

    invoke(&["calibrate", "log-sigmoid", "--synthetic", "-o", out]).unwrap();
    let doc = read_json(Path::new(out));
    let published = [0.205, -0.319, 0.781, 0.870];
    for (name, truth) in ["a", "b", "c", "d"].iter().zip(published) {
        let v = doc["fit"]["coeffs"][name].as_f64().unwrap();
        assert!((v - truth).abs() < 1e-3, "{name}: {v}");
    }
    assert!(doc["fit_error"]["max_rel_error"].as_f64().unwrap() < 1e-4);
}

#[test]
fn app_outputs_carry_references() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("skew.json");
    invoke(&[
        "app",
        "skew-cdf",
        "--t",
        "-50",
        "--rho",
        "1",
        "--mu",
        "0",
        "--var",
        "1",
        "--z",
        "0",
        "-o",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let doc = read_json(&out);
    assert!((doc["value"].as_f64().unwrap() - 0.5).abs() < 0.01);
    assert!(doc["manifest"]["seed"].is_null());
    let (header, rows) = read_rows(&dir.path().join("skew.scan.csv"));
    assert_eq!(header, ["z", "cdf"]);
    assert_eq!(rows.len(), 200);
    assert!(rows.windows(2).all(|w| w[0][1] <= w[1][1] + 1e-12));

    let out = dir.path().join("abs.json");
    invoke(&[
        "app",
        "expected-abs",
        "--mu",
        "5",
        "--var",
        "0.01",
        "-o",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let doc = read_json(&out);
    assert!((doc["value"].as_f64().unwrap() - doc["folded_normal_reference"].as_f64().unwrap()).abs() < 0.01);
}

#[test]
fn exit_codes() {
    let code = |args: &[&str]| invoke(args).err().map(|e| e.exit_code());
    assert_eq!(code(&["error-map", "sigmoid", "--n", "1", "-o", "x.csv"]), Some(2));
    assert_eq!(
        code(&["error-map", "sigmoid", "--mu-steps", "0", "-o", "x.csv"]),
        Some(2)
    );
    assert_eq!(code(&["calibrate", "sigmoid", "--truth", "0.3"]), Some(2));
    assert_eq!(
        code(&["calibrate", "log-sigmoid", "--synthetic", "--truth", "0.3"]),
        Some(2)
    );
    assert_eq!(code(&["app", "expected-abs", "--mu", "0", "--var", "-1"]), Some(2));
    assert_eq!(code(&["app", "bernoulli-logsum", "--lambdas", "1.5"]), Some(2));
    let mut missing_dir = vec!["error-map", "sigmoid", "-o", "/nonexistent/dir/x.csv"];
    missing_dir.extend(SMALL_GRID);
    assert_eq!(code(&missing_dir), Some(1));

    let cell = sigmoid_moments::Error::Cell {
        coords: vec![0, 0],
        source: Box::new(sigmoid_moments::Error::Estimation("non-finite sample".into())),
    };
    assert_eq!(CliError::from(cell).exit_code(), 3);
    assert_eq!(CliError::NotConverged(String::new()).exit_code(), 4);
}
