//! End-to-end acceptance checks. Run with
//! `cargo test -p embedscope-core --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per check.

mod common;

use std::time::Instant;

use common::*;
use embedscope_core::dataset::{to_csv_bytes, RecommendationDataset};
use embedscope_core::importance::{permutation_importance, ImportanceMetric};
use embedscope_core::learners::{
    evaluate_all, fit, leave_one_dataset_out, split, Kind, LearnerConfig, SplitSpec,
};
use embedscope_core::metrics::{dot_product, metric_vector, mmd, MetricConfig, MmdConfig};
use embedscope_core::probe::{loss_and_gradient, train_probe, LogisticModel, ProbeConfig};
use embedscope_core::scoring::roc_auc;
use embedscope_core::synthetic::{blob_set, feature_dataset, gaussian_matrix};
use embedscope_core::tensor_io::{decode_matrix, encode_matrix};
use embedscope_core::{EmbeddingMatrix, EmbeddingSet, LabelVector};
use rand::seq::SliceRandom;
use rand::Rng;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn metric_oracle_suite() -> Outcome {
    let start = Instant::now();
    let cfg = MetricConfig::default();
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for s in 0..20u64 {
        let mut rng = seeded(1000 + s);
        let dim = rng.random_range(1..=8);
        let n_train = rng.random_range(2..=5);
        let n_test = rng.random_range(2..=5);
        let train = random_rows(&mut rng, n_train, dim);
        let test = random_rows(&mut rng, n_test, dim);
        let lab = |n: usize| LabelVector::new((0..n).map(|i| (i % 2) as u8).collect()).unwrap();
        let set = EmbeddingSet::new("d", "p", matrix(&train), matrix(&test), lab(n_train), lab(n_test)).unwrap();
        let got = metric_vector(&set, &cfg).unwrap().to_array();
        let want = metrics_oracle(&train, &test);
        for (f, (g, w)) in got.iter().zip(want).enumerate() {
            let e = rel_err(*g, w);
            if e > worst {
                worst = e;
                worst_at = format!("matrix {s}, feature {}", embedscope_core::FEATURE_NAMES[f]);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        "metric oracle suite",
        worst <= 1e-9 && secs < 5.0,
        format!("max rel err {worst:.2e} ({worst_at}), {secs:.3}s"),
    )
}

fn mmd_anchors() -> Outcome {
    let cfg = MmdConfig::default();
    let mut self_max = 0.0f64;
    for s in 0..10 {
        let a = gaussian_matrix(50, 8, 0.0, 1.0, 200 + s);
        self_max = self_max.max(mmd(&a, &a, &cfg).unwrap());
    }
    let p = gaussian_matrix(200, 8, 0.0, 1.0, 11);
    let q = gaussian_matrix(200, 8, 3.0, 1.0, 12);
    let r = gaussian_matrix(200, 8, 0.0, 1.0, 13);
    let shifted = mmd(&p, &q, &cfg).unwrap();
    let null = mmd(&p, &r, &cfg).unwrap();
    let ratio = shifted / null;
    check(
        "mmd anchors",
        self_max <= 1e-12 && ratio > 5.0,
        format!("max mmd(A,A) {self_max:.2e}; shifted {shifted:.4} vs null {null:.5}, ratio {ratio:.1}"),
    )
}

fn auc_oracle_check() -> Outcome {
    let mut worst = 0.0f64;
    for s in 0..50u64 {
        let mut rng = seeded(500 + s);
        let n = rng.random_range(4..=40);
        // coarse grid forces ties
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6u8)) / 5.0).collect();
        let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let got = roc_auc(&scores, &labels).unwrap();
        worst = worst.max((got - auc_oracle(&scores, &labels)).abs());
    }
    check("auc oracle", worst <= 1e-12, format!("max abs err {worst:.2e} over 50 vectors"))
}

fn probe_checks() -> Outcome {
    let h = 1e-5;
    let mut worst = 0.0f64;
    for s in 0..10u64 {
        let mut rng = seeded(700 + s);
        let x = matrix(&random_rows(&mut rng, 5, 4));
        let y: Vec<u8> = (0..5).map(|i| (i % 2) as u8).collect();
        let rows: Vec<usize> = (0..5).collect();
        let model = LogisticModel {
            weights: (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
            bias: rng.random_range(-1.0..1.0),
        };
        let (_, gw, gb) = loss_and_gradient(&model, &x, &y, &rows);
        let loss_at = |m: &LogisticModel| loss_and_gradient(m, &x, &y, &rows).0;
        for k in 0..=4 {
            let (mut plus, mut minus) = (model.clone(), model.clone());
            if k < 4 {
                plus.weights[k] += h;
                minus.weights[k] -= h;
            } else {
                plus.bias += h;
                minus.bias -= h;
            }
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            let analytic = if k < 4 { gw[k] } else { gb };
            worst = worst.max(rel_err(analytic, numeric));
        }
    }

    let set = blob_set(200, 8, 4.0, 3);
    let cfg = ProbeConfig { seed: 3, ..ProbeConfig::default() };
    let auc = train_probe(&set, &cfg).unwrap().auc;

    let shuffle = |l: &LabelVector, key: u64| {
        let mut v = l.as_slice().to_vec();
        v.shuffle(&mut embedscope_core::seed::rng(3, &[key]));
        LabelVector::new(v).unwrap()
    };
    let twin = EmbeddingSet::new(
        "blobs",
        "shuffled",
        set.train.clone(),
        set.test.clone(),
        shuffle(&set.train_labels, 0),
        shuffle(&set.test_labels, 1),
    )
    .unwrap();
    let null_auc = train_probe(&twin, &cfg).unwrap().auc;
    check(
        "probe gradient and blobs",
        worst <= 1e-6 && auc >= 0.99 && (0.4..=0.6).contains(&null_auc),
        format!("max grad rel err {worst:.2e}; blob auc {auc:.4}; shuffled auc {null_auc:.4}"),
    )
}

fn informative_share(ds: &RecommendationDataset) -> f64 {
    let groups = ds.groups();
    let hits = groups
        .iter()
        .filter(|g| g.iter().any(|i| i.ptm_id == "informative" && i.label == 1))
        .count();
    hits as f64 / groups.len() as f64
}

fn end_to_end(ds: &RecommendationDataset, build_secs: f64) -> Outcome {
    let start = Instant::now();
    let share = informative_share(ds);
    let cfg = LearnerConfig::default();
    let mut hits = 0;
    let mut total = 0;
    let mut per_fold = Vec::new();
    for held in ds.dataset_ids() {
        let report = leave_one_dataset_out(ds, &held, Kind::Rf, &cfg).unwrap();
        let h = report
            .samples
            .iter()
            .filter(|s| s.recommended[0] == "informative")
            .count();
        per_fold.push(format!("{held} {h}/{}", report.samples.len()));
        hits += h;
        total += report.samples.len();
    }
    let top1 = hits as f64 / total as f64;
    let secs = build_secs + start.elapsed().as_secs_f64();
    check(
        "synthetic end-to-end study",
        share >= 0.95 && top1 >= 0.90 && secs < 300.0,
        format!(
            "informative labelled positive in {:.1}% of samples; LODO RF top-1 {:.1}% ({}); {secs:.1}s",
            100.0 * share,
            100.0 * top1,
            per_fold.join(", ")
        ),
    )
}

fn table_form(ds: &RecommendationDataset) -> Outcome {
    let report = evaluate_all(ds, &SplitSpec { seed: 1, ..SplitSpec::default() }, &LearnerConfig::default()).unwrap();
    let complete = report.rows.len() == 5
        && report
            .rows
            .iter()
            .all(|r| [r.accuracy, r.f1, r.auc, r.mcc].iter().all(|v| v.is_finite()));
    let all_above = report.rows.iter().all(|r| r.auc > 0.5);
    let rf = report.get(Kind::Rf).unwrap().auc;
    let dt = report.get(Kind::Dt).unwrap().auc;
    let aucs: Vec<String> = report.rows.iter().map(|r| format!("{} {:.3}", r.kind, r.auc)).collect();
    check(
        "evaluation table form",
        complete && all_above && rf >= dt - 0.02,
        format!("auc: {}", aucs.join(", ")),
    )
}

fn importance_recovery() -> Outcome {
    let mut firsts = 0;
    let mut tops = Vec::new();
    for s in 0..10u64 {
        let ds = feature_dataset(100, 5, 1, 40 + s, |f| 4.0 * f.std);
        let parts = split(&ds, &SplitSpec { seed: s, ..SplitSpec::default() }).unwrap();
        let mut cfg = LearnerConfig::default();
        cfg.forest.seed = s;
        let model = fit(Kind::Rf, &parts.train, &cfg).unwrap();
        let report = permutation_importance(&model, &parts.test, ImportanceMetric::Auc, 10, s).unwrap();
        if report.top() == "std" {
            firsts += 1;
        }
        tops.push(report.top().to_string());
    }
    check(
        "importance recovery",
        firsts >= 9,
        format!("std ranked first in {firsts}/10 seeds (tops: {})", tops.join(",")),
    )
}

fn pipeline_bytes(sets: &Grouped) -> Vec<u8> {
    let built = build_study(sets, 4, 9);
    let ds = built.dataset;
    let mut out = to_csv_bytes(&ds).unwrap();
    let cfg = LearnerConfig::default();
    let parts = split(&ds, &SplitSpec::default()).unwrap();
    for k in Kind::ALL {
        out.extend(fit(k, &parts.train, &cfg).unwrap().to_json().unwrap().into_bytes());
    }
    let report = evaluate_all(&ds, &SplitSpec::default(), &cfg).unwrap();
    out.extend(serde_json::to_vec(&report).unwrap());
    out
}

fn determinism(sets: &Grouped) -> Outcome {
    let mut rng = seeded(77);
    let mut values: Vec<f64> = (0..60).map(|_| rng.random_range(-1e6..1e6)).collect();
    values.extend([0.0, -0.0, f64::MIN_POSITIVE, 5e-324, f64::MAX, -f64::MAX]);
    let m = EmbeddingMatrix::new(11, 6, values).unwrap();
    let bytes = encode_matrix(&m);
    let back = decode_matrix(&bytes).unwrap();
    let npy_ok = back.values().iter().zip(m.values()).all(|(a, b)| a.to_bits() == b.to_bits())
        && encode_matrix(&back) == bytes;

    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| pipeline_bytes(sets))
    };
    let one = run(1);
    let runs_ok = one == run(4) && one == run(3);
    check(
        "determinism and formats",
        npy_ok && runs_ok,
        format!(
            "npy bit-exact: {npy_ok}; build/train/evaluate identical across 1/3/4 threads: {runs_ok} ({} bytes)",
            one.len()
        ),
    )
}

#[test]
fn acceptance() {
    let mut outcomes = vec![metric_oracle_suite(), mmd_anchors(), auc_oracle_check(), probe_checks()];

    let start = Instant::now();
    let sets = study_sets(2024);
    let study = build_study(&sets, 20, 2024).dataset;
    let build_secs = start.elapsed().as_secs_f64();
    outcomes.push(end_to_end(&study, build_secs));
    outcomes.push(table_form(&study));
    outcomes.push(importance_recovery());
    outcomes.push(determinism(&sets));

    // sanity: the shortcut helpers agree with the library on one case
    let a = gaussian_matrix(4, 3, 0.0, 1.0, 11);
    let b = gaussian_matrix(5, 3, 0.0, 1.0, 12);
    assert!((dot_product(&a, &b).unwrap() - dot_oracle(&a.to_rows(), &b.to_rows())).abs() < 1e-12);

    println!();
    for o in &outcomes {
        println!("{} {:<28} {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.pass).map(|o| o.name).collect();
    println!("{}/{} checks passed", outcomes.len() - failed.len(), outcomes.len());
    assert!(failed.is_empty(), "failed: {failed:?}");
}
