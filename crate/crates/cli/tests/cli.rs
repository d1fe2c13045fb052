use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn poth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const IDENTITY_RANKS: &str = "treatment,rank1,rank2,rank3\nA,1,0,0\nB,0,1,0\nC,0,0,1\n";
const SET_TWO: &str = "treatment,sucra\nA,0.005\nB,0.334\nC,0.667\nD,0.994\n";
// Effects 0, 1, 2 with unit standard errors on every contrast.
const THREE_PAIRWISE: &str = r#"{
  "format": "pairwise",
  "treatments": ["t1", "t2", "t3"],
  "pairwise": {
    "theta": [[0, -1, -2], [1, 0, -1], [2, 1, 0]],
    "se": [[1, 1, 1], [1, 1, 1], [1, 1, 1]]
  }
}"#;
const CLUSTER_DRAWS: &str = r#"{
  "format": "draws",
  "treatments": ["A", "B", "C"],
  "draws": [[2, 1, 0], [1, 2, 0]]
}"#;

#[test]
fn compute_identity_rank_matrix() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "ranks.csv", IDENTITY_RANKS);
    let r = report(&poth(&["compute", "--input", s(&input), "--format", "rank-probs"]));
    assert_eq!(r["poth"], 1.0);
    assert_eq!(r["metadata"]["method"], "rank-matrix");
}

#[test]
fn compute_score_input() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "set2.csv", SET_TWO);
    let r = report(&poth(&["compute", "--input", s(&input), "--format", "scores"]));
    assert!((r["poth"].as_f64().unwrap() - 0.980111).abs() <= 1e-5);
}

#[test]
fn compute_pairwise_example() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "net.json", THREE_PAIRWISE);
    let r = report(&poth(&["compute", "--input", s(&input)]));
    assert!((r["poth"].as_f64().unwrap() - 0.67010).abs() <= 1e-4);
    assert!((r["scores"]["t1"].as_f64().unwrap() - 0.09070).abs() <= 1e-4);
    assert_eq!(r["cumulative"].as_array().unwrap().len(), 2);

    let flipped = report(&poth(&["compute", "--input", s(&input), "--direction", "smaller"]));
    assert!((flipped["scores"]["t1"].as_f64().unwrap() - 0.90930).abs() <= 1e-4);
    assert!((flipped["poth"].as_f64().unwrap() - r["poth"].as_f64().unwrap()).abs() <= 1e-12);
}

#[test]
fn subset_command() {
    let dir = TempDir::new().unwrap();
    let net = write(&dir, "net.json", THREE_PAIRWISE);
    let global = report(&poth(&["compute", "--input", s(&net)]))["poth"].clone();
    let full = report(&poth(&["subset", "--input", s(&net), "--subset", "t1,t2,t3"]));
    assert_eq!(full["subsets"][0]["poth"], global);

    let cluster = write(&dir, "cluster.json", CLUSTER_DRAWS);
    let r = report(&poth(&["subset", "--input", s(&cluster), "--subset", "A,C"]));
    assert_eq!(r["subsets"][0]["poth"], 1.0);
    assert_eq!(r["poth"], 0.75);

    let ranks = write(&dir, "ranks.csv", IDENTITY_RANKS);
    let out = poth(&["subset", "--input", s(&ranks), "--subset", "A,B"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:validation:"));

    let out = poth(&["subset", "--input", s(&net), "--subset", "t1,nope"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn residuals_and_cumulative_commands() {
    let dir = TempDir::new().unwrap();
    let cluster = write(&dir, "cluster.json", CLUSTER_DRAWS);
    let r = report(&poth(&["residuals", "--input", s(&cluster)]));
    assert_eq!(r["residuals"]["A"], -0.25);
    assert_eq!(r["residuals"]["C"], 0.75);
    let c = report(&poth(&["cumulative", "--input", s(&cluster)]));
    assert_eq!(c["cumulative"], serde_json::json!([0.0, 0.75]));

    let scores = write(&dir, "set2.csv", SET_TWO);
    let out = poth(&["residuals", "--input", s(&scores)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn plot_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cluster = write(&dir, "cluster.json", CLUSTER_DRAWS);
    let rep = dir.path().join("report.json");
    let out = poth(&["compute", "--input", s(&cluster), "--output", s(&rep)]);
    assert!(out.status.success() && out.stdout.is_empty());
    let a = poth(&["plot", "--input", s(&rep), "--plot-kind", "cumulative"]);
    let b = poth(&["plot", "--input", s(&rep), "--plot-kind", "cumulative"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let svg = String::from_utf8(a.stdout).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<circle class=\"marker\"").count(), 2);

    let bars = poth(&["plot", "--input", s(&rep), "--plot-kind", "residuals"]);
    let svg = String::from_utf8(bars.stdout).unwrap();
    assert_eq!(svg.matches("class=\"bar\"").count(), 3);
}

#[test]
fn error_prefixes_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.json");
    let out = poth(&["compute", "--input", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error:io:"));

    let bad_rows = write(&dir, "bad.csv", "treatment,rank1,rank2\nA,0.7,0.2\nB,0.3,0.7\n");
    let out = poth(&["compute", "--input", s(&bad_rows), "--format", "rank-probs"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:validation:"));

    let inconsistent = write(&dir, "scores.csv", "treatment,sucra\nA,1\nB,1\nC,0\n");
    let out = poth(&["compute", "--input", s(&inconsistent), "--format", "scores"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error:numerical:"));

    let out = poth(&["compute", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:validation:"));
}

#[test]
fn batch_writes_summary() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    std::fs::write(corpus.join("set2.csv"), SET_TWO).unwrap();
    std::fs::write(corpus.join("net.json"), THREE_PAIRWISE).unwrap();
    std::fs::write(corpus.join("junk.json"), "{").unwrap();
    let out_csv = dir.path().join("summary.csv");
    let out = poth(&["batch", "--dir", s(&corpus), "--out", s(&out_csv)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("warning:skipped:junk.json"));
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "network_id,n_treatments,poth,effect_measure,tau,prop_significant"
    );
    assert_eq!(lines.count(), 2);
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["n_networks"], 2);
}

#[test]
fn sampling_is_reproducible_across_threads() {
    let dir = TempDir::new().unwrap();
    let net = write(
        &dir,
        "ref.json",
        r#"{
  "format": "reference-effects",
  "treatments": ["P", "A", "B", "C"],
  "reference_effects": {
    "reference": "P",
    "effects": [0.4, 0.1, -0.3],
    "covariance": [[0.04, 0.01, 0.01], [0.01, 0.05, 0.01], [0.01, 0.01, 0.06]]
  }
}"#,
    );
    let run = |threads: &str| {
        poth(&[
            "compute", "--input", s(&net), "--method", "draws", "--n-draws", "5000",
            "--seed", "7", "--threads", threads,
        ])
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, run("1").stdout);
    let r = report(&one);
    assert_eq!(r["metadata"]["seed"], 7);
    assert_eq!(r["metadata"]["n_draws"], 5000);
}
