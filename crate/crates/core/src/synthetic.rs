//! Seeded synthetic embeddings and recommendation datasets for tests,
//! demos and the acceptance study.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::dataset::{label_by_rank, RecommendationDataset, RecommendationInstance};
use crate::error::Result;
use crate::metrics::{MetricVector, NUM_FEATURES};
use crate::seed;
use crate::tensor_io::{EmbeddingMatrix, EmbeddingSet, LabelVector};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `rows x dim` matrix of `N(mean, std^2)` draws.
pub fn gaussian_matrix(rows: usize, dim: usize, mean: f64, std: f64, seed: u64) -> EmbeddingMatrix {
    let mut rng = seed::rng(seed, &[]);
    let values = (0..rows * dim).map(|_| mean + std * normal(&mut rng)).collect();
    EmbeddingMatrix::new(rows, dim, values).expect("finite gaussian draws")
}

/// Labels with exactly `round(n * ratio)` positives (at least one of each
/// class), in shuffled order.
pub fn balanced_labels(n: usize, ratio: f64, rng: &mut ChaCha8Rng) -> LabelVector {
    let pos = ((n as f64 * ratio).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let mut v: Vec<u8> = (0..n).map(|i| u8::from(i < pos)).collect();
    v.shuffle(rng);
    LabelVector::new(v).expect("binary labels")
}

/// Two Gaussian classes whose means are `margin` standard deviations apart
/// along the all-ones direction.
pub fn blobs(rows: usize, dim: usize, margin: f64, seed: u64) -> (EmbeddingMatrix, LabelVector) {
    let mut rng = seed::rng(seed, &[]);
    let labels = balanced_labels(rows, 0.5, &mut rng);
    let offset = 0.5 * margin / (dim as f64).sqrt();
    let values = labels
        .as_slice()
        .iter()
        .flat_map(|&l| {
            let sign = if l == 1 { 1.0 } else { -1.0 };
            (0..dim).map(|_| sign * offset + normal(&mut rng)).collect::<Vec<_>>()
        })
        .collect();
    (EmbeddingMatrix::new(rows, dim, values).unwrap(), labels)
}

/// Train/test blob set (train drawn with `seed`, test with a derived seed).
pub fn blob_set(rows: usize, dim: usize, margin: f64, seed: u64) -> EmbeddingSet {
    let (tr, trl) = blobs(rows, dim, margin, seed);
    let (te, tel) = blobs(rows, dim, margin, seed::derive(seed, &[1]));
    EmbeddingSet::new("blobs", "blobs", tr, te, trl, tel).unwrap()
}

/// How a synthetic "PTM" turns a labelled snippet into an embedding row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// `N(0, 1)` noise plus `±shift / 2` on every dimension depending on the
    /// label.
    Informative { shift: f64 },
    /// Label-independent standard normal values.
    Normal,
    /// Label-independent centred exponential values (skew +2).
    PositiveSkew,
    /// Mirror image of [`Generator::PositiveSkew`].
    NegativeSkew,
}

impl Generator {
    fn value(&self, label: u8, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Generator::Informative { shift } => {
                let sign = if label == 1 { 0.5 } else { -0.5 };
                sign * shift + normal(rng)
            }
            Generator::Normal => normal(rng),
            Generator::PositiveSkew => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            Generator::NegativeSkew => {
                let e: f64 = Exp1.sample(rng);
                1.0 - e
            }
        }
    }

    pub fn matrix(&self, labels: &LabelVector, dim: usize, seed: u64) -> EmbeddingMatrix {
        let mut rng = seed::rng(seed, &[]);
        let values = labels
            .as_slice()
            .iter()
            .flat_map(|&l| (0..dim).map(|_| self.value(l, &mut rng)).collect::<Vec<_>>())
            .collect();
        EmbeddingMatrix::new(labels.len(), dim, values).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub id: String,
    pub train_rows: usize,
    pub test_rows: usize,
    pub dim: usize,
    pub positive_ratio: f64,
}

/// One embedding set per (dataset, generator). Labels depend only on the
/// dataset, so every generator embeds the same snippets.
pub fn generate_sets(
    datasets: &[SyntheticDataset],
    generators: &[(String, Generator)],
    seed: u64,
) -> Result<Vec<EmbeddingSet>> {
    let mut sets = Vec::new();
    for d in datasets {
        let ds_key = seed::hash_str(&d.id);
        let mut rng = seed::rng(seed, &[ds_key]);
        let train_labels = balanced_labels(d.train_rows, d.positive_ratio, &mut rng);
        let test_labels = balanced_labels(d.test_rows, d.positive_ratio, &mut rng);
        for (name, g) in generators {
            let g_key = seed::hash_str(name);
            sets.push(EmbeddingSet::new(
                d.id.clone(),
                name.clone(),
                g.matrix(&train_labels, d.dim, seed::derive(seed, &[ds_key, g_key, 0])),
                g.matrix(&test_labels, d.dim, seed::derive(seed, &[ds_key, g_key, 1])),
                train_labels.clone(),
                test_labels.clone(),
            )?);
        }
    }
    Ok(sets)
}

/// Three datasets of differing width and class balance, and four
/// generators of which only `informative` carries label signal.
pub fn default_study() -> (Vec<SyntheticDataset>, Vec<(String, Generator)>) {
    let datasets = vec![
        SyntheticDataset {
            id: "synth_a".into(),
            train_rows: 300,
            test_rows: 120,
            dim: 16,
            positive_ratio: 0.3,
        },
        SyntheticDataset {
            id: "synth_b".into(),
            train_rows: 320,
            test_rows: 120,
            dim: 24,
            positive_ratio: 0.4,
        },
        SyntheticDataset {
            id: "synth_c".into(),
            train_rows: 280,
            test_rows: 100,
            dim: 20,
            positive_ratio: 0.5,
        },
    ];
    let generators = vec![
        ("informative".to_string(), Generator::Informative { shift: 2.0 }),
        ("noise_normal".to_string(), Generator::Normal),
        ("noise_pos_skew".to_string(), Generator::PositiveSkew),
        ("noise_neg_skew".to_string(), Generator::NegativeSkew),
    ];
    (datasets, generators)
}

/// Recommendation dataset with i.i.d. random features whose labels mark the
/// `top_k` instances of each group under `score`.
pub fn feature_dataset(
    n_groups: usize,
    n_ptms: usize,
    top_k: usize,
    seed: u64,
    score: impl Fn(&MetricVector) -> f64,
) -> RecommendationDataset {
    let mut rng = seed::rng(seed, &[]);
    let mut instances = Vec::with_capacity(n_groups * n_ptms);
    for g in 0..n_groups {
        let group: Vec<(String, MetricVector)> = (0..n_ptms)
            .map(|p| {
                let a: [f64; NUM_FEATURES] = std::array::from_fn(|_| rng.random::<f64>());
                (format!("ptm{p:02}"), MetricVector::from_array(a))
            })
            .collect();
        let aucs: Vec<(String, f64)> = group
            .iter()
            .map(|(id, f)| (id.clone(), crate::probe::sigmoid(score(f))))
            .collect();
        let labels = label_by_rank(&aucs, top_k);
        for (((id, features), (_, auc)), (_, label)) in group.into_iter().zip(aucs).zip(labels) {
            instances.push(RecommendationInstance {
                dataset_id: format!("ds{}", g % 4),
                sample_id: g,
                ptm_id: id,
                features,
                probe_auc: auc,
                label,
            });
        }
    }
    RecommendationDataset::new(instances, top_k).expect("constructed groups are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_generation() {
        assert_eq!(gaussian_matrix(3, 2, 0.0, 1.0, 5), gaussian_matrix(3, 2, 0.0, 1.0, 5));
        assert_ne!(gaussian_matrix(3, 2, 0.0, 1.0, 5), gaussian_matrix(3, 2, 0.0, 1.0, 6));
        let (d, g) = default_study();
        let a = generate_sets(&d, &g, 1).unwrap();
        assert_eq!(a.len(), 12);
        assert_eq!(a, generate_sets(&d, &g, 1).unwrap());
    }

    #[test]
    fn labels_have_requested_balance() {
        let mut rng = seed::rng(0, &[]);
        let l = balanced_labels(100, 0.3, &mut rng);
        assert_eq!(l.positives(), 30);
    }

    #[test]
    fn feature_dataset_labels_follow_score() {
        let ds = feature_dataset(10, 5, 2, 3, |f| f.std);
        for g in ds.groups() {
            let min_pos = g.iter().filter(|i| i.label == 1).map(|i| i.features.std).fold(f64::INFINITY, f64::min);
            let max_neg = g.iter().filter(|i| i.label == 0).map(|i| i.features.std).fold(f64::NEG_INFINITY, f64::max);
            assert!(min_pos > max_neg);
        }
    }
}
