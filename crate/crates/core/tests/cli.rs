use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use comix::benchlab::synthetic_batch;
use comix::energy::Hyperparams;
use comix::optimizer::OptimizerConfig;
use comix::pipeline::{mix_batch, SaliencySource};
use comix::tensor_io::{encode_png, read_container_file, write_container, TensorContainer};

fn comix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_comix"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
    inputs: PathBuf,
    saliency: PathBuf,
    labels: PathBuf,
}

fn fixture(m: usize, seed: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let batch = synthetic_batch(m, 3, 16, 16, seed).unwrap();
    let inputs = dir.path().join("inputs.cmtx");
    std::fs::write(&inputs, write_container(&batch.inputs.to_container())).unwrap();
    let saliency = dir.path().join("saliency.cmtx");
    let t = TensorContainer::from_f64(vec![m, 16, 16], &batch.saliency).unwrap();
    std::fs::write(&saliency, write_container(&t)).unwrap();
    let labels = dir.path().join("labels.cmtx");
    let classes = batch.labels.classes();
    let t = TensorContainer::from_f64(vec![m, classes], &batch.labels.to_dense()).unwrap();
    std::fs::write(&labels, write_container(&t)).unwrap();
    Fixture {
        dir,
        inputs,
        saliency,
        labels,
    }
}

fn stats_json(out: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(out.join("stats.json")).unwrap()).unwrap()
}

#[test]
fn mix_png_directory_with_proxy_saliency() {
    let dir = tempfile::tempdir().unwrap();
    let pngs = dir.path().join("pngs");
    std::fs::create_dir(&pngs).unwrap();
    let batch = synthetic_batch(4, 3, 16, 16, 1).unwrap();
    for i in 0..4 {
        let bytes = encode_png(batch.inputs.image(i), 3, 16, 16).unwrap();
        std::fs::write(pngs.join(format!("img{i}.png")), bytes).unwrap();
    }
    let out = dir.path().join("out");
    let o = comix(&["mix", "--inputs", s(&pngs), "--saliency", "proxy", "--out", s(&out), "--png"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for i in 0..4 {
        assert!(out.join(format!("png/output_{i:03}.png")).is_file());
    }
    let soft = read_container_file(&out.join("soft_labels.cmtx")).unwrap();
    assert_eq!(soft.shape(), &[4, 4]);
    for row in soft.to_f64_vec().chunks(4) {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn forty_inputs_make_two_partitions() {
    let f = fixture(40, 2);
    let out = f.dir.path().join("out");
    let o = comix(&[
        "mix", "--inputs", s(&f.inputs), "--saliency", s(&f.saliency), "--labels", s(&f.labels),
        "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stats_json(&out)["partitions"], 2);
    let labeling = read_container_file(&out.join("labeling.cmtx")).unwrap();
    assert_eq!(labeling.shape(), &[40, 16, 40]);
}

#[test]
fn eval_of_mixed_labeling_matches_optimizer_trace() {
    let f = fixture(30, 3);
    let out = f.dir.path().join("out");
    let o = comix(&["mix", "--inputs", s(&f.inputs), "--saliency", s(&f.saliency), "--out", s(&out)]);
    assert!(o.status.success());
    let stats = stats_json(&out);
    let expected: f64 = stats["partition_reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["objective_trace"].as_array().unwrap().last().unwrap().as_f64().unwrap())
        .sum();
    let o = comix(&[
        "eval", "--labeling", s(&out.join("labeling.cmtx")), "--saliency", s(&f.saliency),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let breakdown: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let total = breakdown["total"].as_f64().unwrap();
    assert!((total - expected).abs() < 1e-9 * expected.abs(), "{total} vs {expected}");
}

#[test]
fn eval_errors_exit_with_two() {
    let f = fixture(4, 4);
    let bad = f.dir.path().join("bad.cmtx");
    std::fs::write(&bad, b"CMTX\xff\xff").unwrap();
    let o = comix(&["eval", "--labeling", s(&bad), "--saliency", s(&f.saliency)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("HeaderParse"));

    let wrong = f.dir.path().join("wrong.cmtx");
    let z = comix::Labeling::identity(3, 16, 2);
    std::fs::write(&wrong, write_container(&z.to_container())).unwrap();
    let o = comix(&["eval", "--labeling", s(&wrong), "--saliency", s(&f.saliency)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("DimensionMismatch"));
}

#[test]
fn eval_identity_labeling_on_uniform_saliency() {
    let dir = tempfile::tempdir().unwrap();
    let (m, h) = (3, 8);
    let sal = dir.path().join("sal.cmtx");
    std::fs::write(
        &sal,
        write_container(&TensorContainer::from_f64(vec![m, h, h], &vec![1.0; m * h * h]).unwrap()),
    )
    .unwrap();
    let lab = dir.path().join("z.cmtx");
    std::fs::write(&lab, write_container(&comix::Labeling::identity(m, 16, 2).to_container())).unwrap();
    let o = comix(&["eval", "--labeling", s(&lab), "--saliency", s(&sal)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let b: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // Each output keeps its whole input: unary −1 per output, no seams, no
    // overlap, and every column has prior probability C(2,2)·(α)₂/(mα)₂.
    let p = Hyperparams::default();
    let alpha = p.alpha;
    let pmf = alpha * (alpha + 1.0) / (3.0 * alpha * (3.0 * alpha + 1.0));
    let tau_abs = p.tau * 256.0 * 6.0 / 3.0;
    let prior = -(m as f64) * 16.0 * pmf.ln();
    assert!((b["unary"].as_f64().unwrap() + 3.0).abs() < 1e-12);
    assert_eq!(b["smoothness"].as_f64().unwrap(), 0.0);
    assert_eq!(b["compat_raw"].as_f64().unwrap(), 0.0);
    assert!((b["compat_clipped"].as_f64().unwrap() - tau_abs).abs() < 1e-9);
    assert!((b["prior"].as_f64().unwrap() - prior).abs() < 1e-9);
    let total = -3.0 + p.gamma * tau_abs + p.eta * prior;
    assert!((b["total"].as_f64().unwrap() - total).abs() < 1e-9);
}

#[test]
fn library_call_writes_the_same_bytes() {
    for seed in 0..10u64 {
        let f = fixture(6 + seed as usize, 100 + seed);
        let out = f.dir.path().join("out");
        let seed_arg = seed.to_string();
        let o = comix(&[
            "mix", "--inputs", s(&f.inputs), "--saliency", s(&f.saliency), "--labels", s(&f.labels),
            "--seed", &seed_arg, "--partition-size", "5", "--out", s(&out),
        ]);
        assert!(o.status.success());

        let inputs = comix::cli::load_inputs(&f.inputs).unwrap();
        let sal = read_container_file(&f.saliency).unwrap().to_f64_vec();
        let labels = comix::tensor_io::LabelMatrix::from_container(&read_container_file(&f.labels).unwrap()).unwrap();
        let config = OptimizerConfig {
            params: Hyperparams {
                partition_size: 5,
                ..Hyperparams::default()
            },
            seed,
            ..OptimizerConfig::default()
        };
        let outcome = mix_batch(&inputs, &SaliencySource::Maps(sal), Some(&labels), &config).unwrap();
        for (name, bytes) in outcome.artifacts() {
            assert_eq!(std::fs::read(out.join(&name)).unwrap(), bytes, "seed {seed} {name}");
        }
    }
}

#[test]
fn failed_mix_writes_nothing() {
    let f = fixture(4, 5);
    let out = f.dir.path().join("out");
    let o = comix(&[
        "mix", "--inputs", s(&f.inputs), "--saliency", s(&f.labels), "--out", s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn config_file_is_strict_and_flags_win() {
    let f = fixture(4, 6);
    let cfg = f.dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"tau": 0.5, "bogus": 1}"#).unwrap();
    let out = f.dir.path().join("out");
    let o = comix(&["mix", "--inputs", s(&f.inputs), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Config"));

    std::fs::write(&cfg, r#"{"tau": 0.5, "gamma": 2.0}"#).unwrap();
    let o = comix(&[
        "mix", "--inputs", s(&f.inputs), "--config", s(&cfg), "--tau", "0.7", "--out", s(&out),
    ]);
    assert!(o.status.success());
    let stats = stats_json(&out);
    assert_eq!(stats["params"]["tau"], 0.7);
    assert_eq!(stats["params"]["gamma"], 2.0);
    assert_eq!(stats["params"]["beta"], 0.32);
}

#[test]
fn bench_single_seed_csv() {
    let o = comix(&["bench", "--suite", "brute", "--seeds", "1", "--sizes", "2x2x4", "--jobs", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,m,m',n,seed,value,seconds");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("ours,2,2,4,0,"));
}

#[test]
fn bench_refuses_infeasible_brute_force() {
    let o = comix(&["bench", "--suite", "brute", "--seeds", "1", "--sizes", "6x6x16"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("TooLarge"));
}

#[test]
fn bench_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_comix"))
        .args(["bench", "--suite", "bp", "--seeds", "3", "--sizes", "5", "--out", s(dir.path())])
        .env("COMIX_JOBS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["sizes"][0]["n"], 16);
    assert_eq!(summary["sizes"][0]["methods"][1]["method"], "narasimhan");
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 3);
}

#[test]
fn stats_single_value_gives_one_row() {
    let o = comix(&["stats", "--values", "0.5", "--batch", "6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "tau,diversity,batch_saliency,hist_1,hist_2,hist_3,hist_4,hist_5,hist_6");
}

#[test]
fn stats_with_single_input_outputs() {
    let o = comix(&["stats", "--sweep", "gamma", "--values", "0", "--beta", "100", "--batch", "8"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "8");
    assert!(row[4..].iter().all(|&c| c == "0"));
}
