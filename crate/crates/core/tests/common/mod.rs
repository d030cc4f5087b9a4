//! Brute-force reference implementations and shared fixtures. Written
//! directly from the definitions, without touching the library internals.
#![allow(dead_code)]

use std::collections::BTreeMap;

use embedscope_core::dataset::{build_from_sets, group_sets, BuildConfig, BuildOutput};
use embedscope_core::sampler::SamplerConfig;
use embedscope_core::synthetic::{default_study, generate_sets};
use embedscope_core::{EmbeddingMatrix, EmbeddingSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_rows(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect()
}

pub fn matrix(rows: &[Vec<f64>]) -> EmbeddingMatrix {
    EmbeddingMatrix::from_rows(rows).unwrap()
}

fn moments(v: &[f64]) -> (f64, f64, f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let m = |p: i32| v.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
    (mean, m(2), m(3), m(4))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

/// MMD² with an RBF kernel whose bandwidth is the median pairwise distance
/// of the pooled rows.
pub fn mmd_oracle(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let pooled: Vec<&Vec<f64>> = x.iter().chain(y).collect();
    let mut d = Vec::new();
    for i in 0..pooled.len() {
        for j in i + 1..pooled.len() {
            d.push(euclid(pooled[i], pooled[j]));
        }
    }
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let sigma = if n % 2 == 1 { d[n / 2] } else { 0.5 * (d[n / 2 - 1] + d[n / 2]) };
    if sigma == 0.0 {
        return 0.0;
    }
    let k = |a: &[f64], b: &[f64]| (-euclid(a, b).powi(2) / (2.0 * sigma * sigma)).exp();
    let mean_k = |p: &[Vec<f64>], q: &[Vec<f64>]| {
        let mut s = 0.0;
        for a in p {
            for b in q {
                s += k(a, b);
            }
        }
        s / (p.len() * q.len()) as f64
    };
    (mean_k(x, x) + mean_k(y, y) - 2.0 * mean_k(x, y)).max(0.0)
}

pub fn dot_oracle(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let dim = x[0].len();
    let mut s = 0.0;
    for d in 0..dim {
        let mx = x.iter().map(|r| r[d]).sum::<f64>() / x.len() as f64;
        let my = y.iter().map(|r| r[d]).sum::<f64>() / y.len() as f64;
        s += mx * my;
    }
    s
}

/// The thirteen features in canonical order.
pub fn metrics_oracle(train: &[Vec<f64>], test: &[Vec<f64>]) -> [f64; 13] {
    let all: Vec<Vec<f64>> = train.iter().chain(test).cloned().collect();
    let flat: Vec<f64> = all.iter().flatten().copied().collect();
    let mut sorted = flat.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
    let (mean, m2, m3, m4) = moments(&flat);
    [
        sorted[n - 1] - sorted[0],
        mean,
        median,
        m2,
        m2.sqrt(),
        m3 / m2.powf(1.5),
        m4 / (m2 * m2) - 3.0,
        flat.iter().filter(|v| **v != 0.0).count() as f64,
        flat.iter().map(|v| v.abs()).sum(),
        flat.iter().map(|v| v * v).sum::<f64>().sqrt(),
        all.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max),
        mmd_oracle(train, test),
        dot_oracle(train, test),
    ]
}

/// AUC by counting every (positive, negative) pair.
pub fn auc_oracle(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub type Grouped = BTreeMap<String, BTreeMap<String, EmbeddingSet>>;

pub fn study_sets(seed: u64) -> Grouped {
    let (datasets, generators) = default_study();
    group_sets(generate_sets(&datasets, &generators, seed).unwrap()).unwrap()
}

pub fn study_config(n_samples: usize, seed: u64) -> BuildConfig {
    BuildConfig {
        n_samples,
        top_k: 1,
        seed,
        sampler: SamplerConfig {
            train_size: 200,
            test_size: 80,
        },
        ..BuildConfig::default()
    }
}

pub fn build_study(sets: &Grouped, n_samples: usize, seed: u64) -> BuildOutput {
    build_from_sets(sets, &study_config(n_samples, seed)).unwrap()
}
