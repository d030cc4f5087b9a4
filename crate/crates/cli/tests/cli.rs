use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use embedscope_core::synthetic::{generate_sets, Generator, SyntheticDataset};
use embedscope_core::tensor_io::{save_set, write_array, write_labels, Manifest};
use embedscope_core::{EmbeddingMatrix, EmbeddingSet, LabelVector};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_embedscope"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
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

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn toy_set(dir: &Path, same_splits: bool) -> PathBuf {
    let train = EmbeddingMatrix::new(4, 3, vec![0.1, 0.5, -1.0, 2.0, 0.0, 0.3, -0.7, 1.1, 0.9, 0.4, -0.2, 0.6]).unwrap();
    let test = if same_splits {
        train.clone()
    } else {
        train.map(|v| v * 1.5 + 0.2).unwrap()
    };
    let labels = LabelVector::new(vec![0, 1, 0, 1]).unwrap();
    let set = EmbeddingSet::new("toy", "ptm", train, test, labels.clone(), labels).unwrap();
    save_set(&set, dir).unwrap();
    dir.join("manifest.json")
}

/// Two datasets embedded by three generators, plus a manifest list file.
fn study(dir: &Path) -> PathBuf {
    let datasets = vec![
        SyntheticDataset { id: "alpha".into(), train_rows: 80, test_rows: 40, dim: 6, positive_ratio: 0.4 },
        SyntheticDataset { id: "beta".into(), train_rows: 70, test_rows: 40, dim: 6, positive_ratio: 0.5 },
    ];
    let gens = vec![
        ("good".to_string(), Generator::Informative { shift: 2.0 }),
        ("flat".to_string(), Generator::Normal),
        ("skewed".to_string(), Generator::PositiveSkew),
    ];
    let mut lines = String::from("# manifests\n");
    for s in generate_sets(&datasets, &gens, 3).unwrap() {
        let sub = format!("{}_{}", s.dataset_id, s.ptm_id);
        save_set(&s, dir.join(&sub)).unwrap();
        lines.push_str(&format!("{sub}/manifest.json\n"));
    }
    let list = dir.join("manifests.txt");
    std::fs::write(&list, lines).unwrap();
    list
}

#[test]
fn metrics_json_has_thirteen_fields() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_set(dir.path(), true);
    let v: serde_json::Value = serde_json::from_str(&ok(&["metrics", p(&m)])).unwrap();
    let obj = v.as_object().unwrap();
    assert_eq!(obj.len(), 13);
    assert_eq!(obj["mmd"].as_f64(), Some(0.0));

    let csv = ok(&["metrics", p(&m), "--format", "csv"]);
    assert!(csv.starts_with("dataset_id,ptm_id,range,mean,"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn missing_manifest_is_an_input_error() {
    let out = run(&["metrics", "/nonexistent/manifest.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/manifest.json"));
}

#[test]
fn histograms() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_set(dir.path(), false);
    let csv = ok(&["hist", p(&m), "--bins", "5"]);
    let total: u64 = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 12);
    assert_eq!(csv.lines().next(), Some("bin_start,bin_end,count"));

    let csv = ok(&["hist", p(&m), "--kind", "l2norm", "--split", "test", "--bins", "3"]);
    let total: u64 = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 4);

    assert_eq!(run(&["hist", p(&m), "--bins", "0"]).status.code(), Some(2));
}

#[test]
fn probe_is_deterministic_and_respects_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_set(dir.path(), false);
    let a = ok(&["probe", p(&m), "--repeats", "3", "--seed", "4"]);
    assert_eq!(a, ok(&["probe", p(&m), "--repeats", "3", "--seed", "4"]));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["per_repeat_auc"].as_array().unwrap().len(), 3);
}

#[test]
fn single_class_labels_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let x = EmbeddingMatrix::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
    write_array(&x, d.join("a.npy")).unwrap();
    write_labels(&LabelVector::new(vec![0, 1, 0]).unwrap(), d.join("ya.npy")).unwrap();
    write_labels(&LabelVector::new(vec![1, 1, 1]).unwrap(), d.join("yb.npy")).unwrap();
    let manifest = Manifest {
        dataset_id: "d".into(),
        ptm_id: "p".into(),
        dim: 2,
        train_embeddings: "a.npy".into(),
        test_embeddings: "a.npy".into(),
        train_labels: "ya.npy".into(),
        test_labels: "yb.npy".into(),
        token_budget: 100,
        pooling: Default::default(),
    };
    manifest.save(d.join("manifest.json")).unwrap();
    let out = run(&["probe", p(&d.join("manifest.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("test"));
}

#[test]
fn build_on_single_toy_set_gives_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_set(&dir.path().join("set"), false);
    let out = dir.path().join("out");
    ok(&["build-dataset", "--manifest", p(&m), "--n-samples", "2", "--top-k", "1", "--out-dir", p(&out)]);
    let csv = std::fs::read_to_string(out.join("recommendation_dataset.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(out.join("plans.json").exists());
}

fn pipeline(root: &Path, threads: &str) -> Vec<(String, Vec<u8>)> {
    let list = root.join("manifests.txt");
    let out = root.join(format!("out{threads}"));
    let o = p(&out);
    let common = ["--seed", "11", "--threads", threads];
    let with = |args: &[&str]| {
        let mut v: Vec<&str> = args.to_vec();
        v.extend(common);
        ok(&v)
    };
    with(&["build-dataset", "--manifests", p(&list), "--n-samples", "6", "--top-k", "1", "--train-size", "50", "--test-size", "30", "--out-dir", o]);
    let csv = out.join("recommendation_dataset.csv");
    with(&["train-recommender", "--dataset", p(&csv), "--kind", "rf", "--out-dir", o]);
    let table = with(&["evaluate", "--dataset", p(&csv), "--out-dir", o]);
    assert_eq!(table.lines().count(), 6);
    let lodo = with(&["evaluate", "--dataset", p(&csv), "--leave-out", "beta", "--out-dir", o]);
    assert!(lodo.starts_with("held out beta (6 samples, RF)"));
    with(&["importance", "--dataset", p(&csv), "--model", p(&out.join("model.json")), "--repeats", "3", "--out-dir", o]);

    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn full_pipeline_is_byte_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    study(dir.path());
    let one = pipeline(dir.path(), "1");
    let names: Vec<&str> = one.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        ["evaluation.json", "evaluation.txt", "importance.csv", "lodo_beta.json", "model.json", "plans.json", "recommendation_dataset.csv"]
    );
    assert_eq!(one, pipeline(dir.path(), "4"));

    let table = String::from_utf8(one[1].1.clone()).unwrap();
    let models: Vec<&str> = table.lines().skip(1).map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(models, ["LR", "RF", "NB", "DT", "KNN"]);
}

#[test]
fn recommend_marks_top_k() {
    let dir = tempfile::tempdir().unwrap();
    study(dir.path());
    let out = dir.path().join("out");
    let o = p(&out);
    ok(&["build-dataset", "--manifests", p(&dir.path().join("manifests.txt")), "--n-samples", "4", "--top-k", "1", "--train-size", "50", "--test-size", "30", "--out-dir", o]);
    ok(&["train-recommender", "--all", "--dataset", p(&out.join("recommendation_dataset.csv")), "--kind", "nb", "--out-dir", o]);

    let mut cands = String::new();
    for (i, sub) in ["alpha_good", "alpha_flat", "alpha_skewed", "beta_good", "beta_flat"].iter().enumerate() {
        let csv = ok(&["metrics", "--format", "csv", p(&dir.path().join(sub).join("manifest.json"))]);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        if i == 0 {
            cands.push_str(header);
            cands.push('\n');
        }
        // distinct ids per candidate
        let row = lines.next().unwrap().replacen(',', &format!("_{i},"), 1);
        cands.push_str(&row);
        cands.push('\n');
    }
    let path = dir.path().join("cands.csv");
    std::fs::write(&path, &cands).unwrap();
    let ranked = ok(&["recommend", "--model", p(&out.join("model.json")), "--candidates", p(&path), "--top-k", "3"]);
    let lines: Vec<&str> = ranked.lines().collect();
    assert_eq!(lines[0], "rank,ptm_id,score,recommended");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines.iter().filter(|l| l.ends_with(",true")).count(), 3);
}

#[test]
fn config_file_is_validated_and_applied() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_set(&dir.path().join("set"), false);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[run]\nunknown = 1\n").unwrap();
    assert_eq!(run(&["--config", p(&bad), "metrics", p(&m)]).status.code(), Some(2));

    let good = dir.path().join("good.toml");
    std::fs::write(&good, "[build.probe]\nrepeats = 2\n").unwrap();
    let v: serde_json::Value = serde_json::from_str(&ok(&["--config", p(&good), "probe", p(&m)])).unwrap();
    assert_eq!(v["per_repeat_auc"].as_array().unwrap().len(), 2);
}

#[test]
fn failed_command_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("nope.csv");
    let r = run(&["evaluate", "--dataset", p(&missing), "--out-dir", p(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
}
