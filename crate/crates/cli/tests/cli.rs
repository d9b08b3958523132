// Copyright 2026 The ci-recon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ci-recon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).expect("valid JSON")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn demo_corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/demo_corpus.csv")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn simulate_default(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.path().join(name);
    let mut args = vec!["simulate", "--output", s(&path)];
    args.extend_from_slice(extra);
    ok(&args);
    path
}

#[test]
fn ci_for_reported_mean() {
    let v = json(&ok(&["ci", "--mean", "0.9", "--n", "100"]));
    assert_eq!(v["lower"], 0.884038);
    assert_eq!(v["upper"], 0.915962);
    assert_eq!(v["width"], 0.031924);
    assert_eq!(v["sd_source"], "model");

    let v = json(&ok(&["ci", "--mean", "0.9", "--n", "100", "--sd", "0.05"]));
    assert_eq!(v["sd_source"], "reported");
    assert_eq!(v["sd_used"], 0.05);
}

#[test]
fn ci_rejects_bad_arguments() {
    assert_eq!(run(&["ci", "--mean", "1.2", "--n", "100"]).status.code(), Some(1));
    assert_eq!(run(&["ci", "--mean", "0.9", "--n", "1"]).status.code(), Some(1));
    assert_eq!(run(&["ci", "--mean", "0.9"]).status.code(), Some(1));
    assert_eq!(run(&["--alpha", "1.5", "ci", "--mean", "0.9", "--n", "10"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn predict_sd_matches_published_model() {
    let v = json(&ok(&["predict-sd", "--mean", "0.9"]));
    assert_eq!(v["sd_pct"], 8.044591);
}

#[test]
fn fit_exact_pairs() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("dsc_mean_pct,sd_pct\n");
    for k in 0..=10 {
        let x = 10.0 * k as f64;
        let y = (2.031 + 0.0726 * x - 0.0008 * x * x).exp();
        csv.push_str(&format!("{x},{y:.12}\n"));
    }
    let input = write(&dir, "pairs.csv", &csv);
    let model = dir.path().join("model.json");
    ok(&["fit", "--input", s(&input), "--output", s(&model)]);
    let doc = json(&fs::read_to_string(&model).unwrap());
    let coefs: Vec<String> = doc["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| format!("{:.6}", c.as_f64().unwrap()))
        .collect();
    assert_eq!(coefs, ["2.031000", "0.072600", "-0.000800"]);
    assert_eq!(doc["scale"], "percent");
    assert_eq!(doc["converged"], true);
}

#[test]
fn fit_default_simulation_matches_golden_model() {
    let dir = TempDir::new().unwrap();
    let cases = simulate_default(&dir, "cases.csv", &[]);
    let model = dir.path().join("model.json");
    ok(&["fit", "--input", s(&cases), "--output", s(&model)]);
    assert_eq!(
        fs::read_to_string(&model).unwrap(),
        fs::read_to_string(golden("default_model.json")).unwrap()
    );
}

#[test]
fn calibrate_default_simulation_matches_golden_summary() {
    let dir = TempDir::new().unwrap();
    let cases = simulate_default(&dir, "cases.csv", &[]);
    let points = dir.path().join("points.csv");
    let out = ok(&["calibrate", "--input", s(&cases), "--points", s(&points)]);
    assert_eq!(out, fs::read_to_string(golden("default_calibration.json")).unwrap());
    let lines = fs::read_to_string(&points).unwrap().lines().count();
    assert_eq!(lines, 1 + 190);
}

#[test]
fn calibrate_perfect_model_gives_zero_difference() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from("task_id,method_id,n,mean_dsc,observed_sd\n");
    for (k, m) in [0.55f64, 0.7, 0.8, 0.9].iter().enumerate() {
        let x = m * 100.0;
        let sd = (2.031 + 0.0726 * x - 0.0008 * x * x).exp() / 100.0;
        csv.push_str(&format!("t1,m{k},{},{m},{sd:.17}\n", 30 + 10 * k));
    }
    let input = write(&dir, "results.csv", &csv);
    let v = json(&ok(&["calibrate", "--input", s(&input)]));
    let summary = &v["summary"];
    assert_eq!(summary["n_after_filter"], 4);
    assert_eq!(summary["median_width_diff"].as_f64().unwrap().abs(), 0.0);
    let iqr = summary["iqr_width_diff"].as_array().unwrap();
    assert_eq!(iqr[0], iqr[1]);
}

#[test]
fn calibrate_with_everything_filtered_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "results.csv",
        "task_id,method_id,n,mean_dsc,observed_sd\nt1,a,20,0.8,0.1\nt1,b,5,0.7,0.2\n",
    );
    let out = run(&["calibrate", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(v["summary"]["empty"], true);
}

#[test]
fn analyze_two_paper_fixture() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "corpus.csv",
        "paper_id,method_id,mean_dsc,test_n,sd\n\
         p1,a,0.90,100,\np1,b,0.895,100,\n\
         p2,a,0.90,100,\np2,b,0.80,100,\n\
         p3,solo,0.85,50,\n",
    );
    let v = json(&ok(&["analyze", "--input", s(&input)]));
    let summary = &v["summary"];
    assert_eq!(summary["overlap_fraction"], 0.5);
    assert_eq!(summary["n_papers"], 3);
    assert_eq!(summary["n_with_runner_up"], 2);
    assert_eq!(summary["delta_dsc"]["n"], 2);
    let solo = &v["papers"][2];
    assert_eq!(solo["paper_id"], "p3");
    assert!(solo["delta_dsc"].is_null());
    assert!(solo["second_within_ci"].is_null());
}

fn type7(values: &mut [f64], p: f64) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (values.len() - 1) as f64 * p;
    let i = h.floor() as usize;
    let j = (i + 1).min(values.len() - 1);
    values[i] + (values[j] - values[i]) * (h - i as f64)
}

#[test]
fn analyze_demo_corpus_agrees_with_recount() {
    let v = json(&ok(&["analyze", "--input", s(&demo_corpus())]));
    let papers = v["papers"].as_array().unwrap();
    assert_eq!(papers.len(), 77);
    let mut widths = Vec::new();
    let mut deltas = Vec::new();
    let mut inside = 0;
    for p in papers {
        let lo = p["ci_first"]["lower"].as_f64().unwrap();
        let hi = p["ci_first"]["upper"].as_f64().unwrap();
        widths.push(hi - lo);
        if let Some(second) = p["second_mean"].as_f64() {
            deltas.push(p["first_mean"].as_f64().unwrap() - second);
            inside += (lo <= second && second <= hi) as usize;
        }
    }
    let summary = &v["summary"];
    let overlap = inside as f64 / deltas.len() as f64;
    assert!((summary["overlap_fraction"].as_f64().unwrap() - overlap).abs() < 1e-3);
    let width = summary["ci_width"]["median"].as_f64().unwrap();
    let delta = summary["delta_dsc"]["median"].as_f64().unwrap();
    assert!((width - type7(&mut widths, 0.5)).abs() < 2e-6);
    assert!((delta - type7(&mut deltas, 0.5)).abs() < 2e-6);

    assert!((width - 0.03).abs() < 0.005, "median width {width}");
    assert!((delta - 0.01).abs() < 0.003, "median delta {delta}");
    assert!((overlap - 0.65).abs() < 0.05, "overlap {overlap}");
}

#[test]
fn simulate_is_deterministic_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let a = simulate_default(&dir, "a.csv", &[]);
    let b = simulate_default(&dir, "b.csv", &[]);
    let one = simulate_default(&dir, "one.csv", &["--threads", "1"]);
    let four = simulate_default(&dir, "four.csv", &["--threads", "4"]);
    let reference = fs::read(&a).unwrap();
    for other in [&b, &one, &four] {
        assert_eq!(fs::read(other).unwrap(), reference, "{other:?}");
    }
    let other_seed = simulate_default(&dir, "seed.csv", &["--seed", "43"]);
    assert_ne!(fs::read(other_seed).unwrap(), reference);
}

#[test]
fn fit_and_bootstrap_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let cases = simulate_default(&dir, "cases.csv", &["--tasks", "2", "--methods", "3"]);
    let mut fits = Vec::new();
    let mut boots = Vec::new();
    for threads in ["1", "4", "1"] {
        let model = dir.path().join(format!("model{}.json", fits.len()));
        ok(&["--threads", threads, "fit", "--input", s(&cases), "--output", s(&model)]);
        fits.push(fs::read(&model).unwrap());
        boots.push(ok(&["--threads", threads, "bootstrap", "--input", s(&cases)]));
    }
    assert!(fits.windows(2).all(|w| w[0] == w[1]));
    assert!(boots.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn beta_family_group_means() {
    let dir = TempDir::new().unwrap();
    let cases = simulate_default(
        &dir,
        "beta.csv",
        &["--family", "beta:8,2", "--tasks", "1", "--methods", "2", "--cases", "100000"],
    );
    let text = fs::read_to_string(&cases).unwrap();
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let g = if fields[1] == "method01" { 0 } else { 1 };
        sums[g] += fields[3].parse::<f64>().unwrap();
        counts[g] += 1;
    }
    for g in 0..2 {
        assert_eq!(counts[g], 100_000);
        assert!((sums[g] / counts[g] as f64 - 0.8).abs() < 0.005);
    }
}

#[test]
fn constant_family_and_exclude() {
    let dir = TempDir::new().unwrap();
    let cases = simulate_default(
        &dir,
        "c.csv",
        &["--family", "constant:0.8", "--tasks", "1", "--methods", "2", "--cases", "3", "--exclude", "1:2"],
    );
    let text = fs::read_to_string(&cases).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.starts_with("task01,method01,") && r.ends_with(",0.800000")));

    let model = dir.path().join("model.json");
    assert_eq!(
        run(&["fit", "--input", s(&cases), "--output", s(&model)]).status.code(),
        Some(2)
    );
}

#[test]
fn bad_input_files_exit_with_data_error() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.csv", "");
    let out = run(&["analyze", "--input", s(&empty)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let unknown = write(&dir, "odd.csv", "a,b\n1,2\n");
    assert_eq!(run(&["fit", "--input", s(&unknown), "--output", s(&dir.path().join("m.json"))]).status.code(), Some(2));

    let missing = dir.path().join("nope.csv");
    assert_eq!(run(&["analyze", "--input", s(&missing)]).status.code(), Some(2));

    let bad_row = write(&dir, "bad.csv", "paper_id,method_id,mean_dsc,test_n,sd\np1,a,0.9,100,\np1,b,oops,100,\n");
    let out = run(&["analyze", "--input", s(&bad_row)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn custom_model_file_is_used() {
    let dir = TempDir::new().unwrap();
    let model = write(
        &dir,
        "m.json",
        r#"{"coefficients":[2.302585092994046,0.0,0.0],"scale":"percent"}"#,
    );
    let v = json(&ok(&["--model", s(&model), "predict-sd", "--mean", "0.5"]));
    assert_eq!(v["sd_pct"], 10.0);
    let bad = write(&dir, "bad.json", r#"{"coefficients":[1,2,3],"scale":"fraction"}"#);
    assert_ne!(run(&["--model", s(&bad), "predict-sd", "--mean", "0.5"]).status.code(), Some(0));
}
