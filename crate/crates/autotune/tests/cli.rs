mod common;

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use autotune::formats::{read_corpus, write_json, write_jsonl};
use autotune_core::shape::{Origin, ShapeSample};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_autotune"));
    c.env_remove("AUTOTUNE_STORE");
    c
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn setup(dir: &Path) {
    std::fs::write(dir.join("quick.json"), common::QUICK_CONFIG).unwrap();
    write_json(&dir.join("m.json"), &common::quick_model()).unwrap();
    std::fs::write(dir.join("s.csv"), common::csv_of(&common::sine_with_spikes(480))).unwrap();
}

#[test]
fn synth_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        run(bin().current_dir(dir.path()).args(["synth", "--out", out, "--n", "5", "--seed", "7"]));
    }
    let read = |p: &str| std::fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/shape_corpus.jsonl"), read("b/shape_corpus.jsonl"));
    let names: Vec<_> = std::fs::read_dir(dir.path().join("a/series")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 5);
    for name in names {
        let name = name.to_str().unwrap();
        assert_eq!(read(&format!("a/series/{name}")), read(&format!("b/series/{name}")));
    }
    assert_eq!(read_corpus(&dir.path().join("a/shape_corpus.jsonl")).unwrap().len(), 25);
}

#[test]
fn detect_prints_mask_boundary_params() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let out = run(bin().current_dir(dir.path()).args(["detect", "s.csv", "--sensitivity", "0.01", "--model", "m.json", "--svg", "p.svg"]));
    let v = json(&out);
    assert_eq!(v["mask"].as_array().unwrap().len(), 480);
    assert_eq!(v["boundary"]["upper"].as_array().unwrap().len(), 480);
    assert_eq!(v["params"]["method"], "Seasonal");
    assert_eq!(v["label"]["period"], 24);
    assert!(std::fs::read_to_string(dir.path().join("p.svg")).unwrap().contains("<circle"));
}

#[test]
fn tune_and_detect_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    for cmd in ["tune", "detect"] {
        let args = [cmd, "s.csv", "--sensitivity", "0.02", "--model", "m.json", "--json"];
        let a = run(bin().current_dir(dir.path()).args(args));
        let b = run(bin().current_dir(dir.path()).args(args));
        assert_eq!(a.stdout, b.stdout);
        assert!(a.stderr.is_empty(), "{}", String::from_utf8_lossy(&a.stderr));
    }
}

#[test]
fn train_shape_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    run(bin().current_dir(dir.path()).args(["synth", "--out", "c", "--n", "40", "--seed", "1"]));
    for m in ["m1.json", "m2.json"] {
        run(bin().current_dir(dir.path()).args(["--config", "quick.json", "train-shape", "--corpus", "c/shape_corpus.jsonl", "--out", m]));
    }
    let a = std::fs::read(dir.path().join("m1.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("m2.json")).unwrap());
    let model: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(model["version"], "gasf-cnn-v1");
    assert_eq!(model["meta"]["samples"], 200);
}

#[test]
fn small_corpus_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    run(bin().current_dir(dir.path()).args(["synth", "--out", "c", "--n", "3", "--seed", "1"]));
    let out = bin().current_dir(dir.path()).args(["train-shape", "--corpus", "c/shape_corpus.jsonl", "--out", "m.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("200"));
}

#[test]
fn json_mode_errors_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().current_dir(dir.path()).args(["--json", "detect", "missing.csv", "--sensitivity", "0.01"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stderr.is_empty());
    assert_eq!(json(&out)["code"], "io_error");
}

#[test]
fn model_defaults_to_store_and_env_wins() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let store = dir.path().join("store");
    std::fs::create_dir_all(&store).unwrap();
    std::fs::copy(dir.path().join("m.json"), store.join("scorer.json")).unwrap();

    let out = bin().current_dir(dir.path()).args(["--json", "detect", "s.csv", "--sensitivity", "0.01"]).output().unwrap();
    assert_eq!(json(&out)["code"], "no_model");
    run(bin().current_dir(dir.path()).args(["--store", "store", "detect", "s.csv", "--sensitivity", "0.01"]));
    run(bin().current_dir(dir.path()).env("AUTOTUNE_STORE", &store).args(["--store", "elsewhere", "detect", "s.csv", "--sensitivity", "0.01"]));
}

#[test]
fn eval_reports_rows_and_rejects_unlabelled() {
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    run(bin().current_dir(dir.path()).args(["synth", "--out", "c", "--n", "3", "--seed", "5"]));
    let out = run(bin().current_dir(dir.path()).args(["eval", "--corpus", "c/series", "--model", "m.json"]));
    let v = json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("f1 pre"));

    std::fs::copy(dir.path().join("s.csv"), dir.path().join("c/series/unlabelled.csv")).unwrap();
    let out = bin().current_dir(dir.path()).args(["--json", "eval", "--corpus", "c/series", "--model", "m.json"]).output().unwrap();
    let v = json(&out);
    assert_eq!(v["code"], "unlabeled_series");
    assert!(v["message"].as_str().unwrap().contains("unlabelled"));
}

#[test]
fn review_feedback_moves_queue_into_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let sample = |k: f64| ShapeSample {
        x: vec![k, 1.0, 2.0, 3.0],
        u: vec![5.0; 4],
        l: vec![-5.0; 4],
        score: 1.0,
        origin: Origin::Feedback,
    };
    write_jsonl(&store.join("review_queue.jsonl"), &[sample(0.0), sample(1.0), sample(2.0), sample(3.0)]).unwrap();

    let mut child = bin()
        .current_dir(dir.path())
        .args(["--store", "store", "review-feedback"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"a\nwhat\ns 0.4\nr\nq\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!((v["accepted"].as_u64(), v["rejected"].as_u64(), v["remaining"].as_u64()), (Some(2), Some(1), Some(1)));
    let corpus = read_corpus(&store.join("corpus.jsonl")).unwrap();
    assert_eq!(corpus.iter().map(|s| s.score).collect::<Vec<_>>(), vec![1.0, 0.4]);
    let queue = autotune::formats::read_jsonl::<ShapeSample>(&store.join("review_queue.jsonl")).unwrap();
    assert_eq!(queue, vec![sample(3.0)]);
}

fn http(addr: &str, method: &str, path: &str, body: &str) -> (u16, String) {
    use std::io::Read;
    let mut s = std::net::TcpStream::connect(addr).unwrap();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut resp = String::new();
    s.read_to_string(&mut resp).unwrap();
    let status = resp[9..12].parse().unwrap();
    let body = resp.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

#[test]
fn serve_accepts_jobs_over_tcp() {
    use std::io::{BufRead, BufReader};
    let dir = tempfile::tempdir().unwrap();
    setup(dir.path());
    let mut child = bin()
        .current_dir(dir.path())
        .args(["serve", "--addr", "127.0.0.1:0", "--model", "m.json", "--store", "store"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("listen line").to_string();

    let (status, _) = http(&addr, "GET", "/v1/health", "");
    assert_eq!(status, 200);
    let values: Vec<f64> = common::sine_with_spikes(300).values().to_vec();
    let req = serde_json::json!({"series": {"values": values}, "sensitivity": 0.01}).to_string();
    let (status, body) = http(&addr, "POST", "/v1/jobs", &req);
    child.kill().unwrap();
    child.wait().unwrap();
    assert_eq!(status, 200, "{body}");
    let job: Value = serde_json::from_str(&body).unwrap();
    let id = job["job_id"].as_str().unwrap();
    assert!(dir.path().join("store/jobs").join(format!("{id}.json")).exists());
}
