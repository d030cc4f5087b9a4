//! Class-ratio-preserving resampling of a dataset's train and test splits.
//!
//! Plans hold row indices only, so one plan can be applied to the
//! embeddings of every PTM for the same dataset.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::tensor_io::LabelVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub train_size: usize,
    pub test_size: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            train_size: 2000,
            test_size: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub dataset_id: String,
    pub sample_id: usize,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Draws `size` distinct indices whose positive count is
/// `round(size * ratio)`, kept within `1..size` so both classes appear.
/// Indices are returned in ascending order.
pub fn stratified_resample(labels: &LabelVector, size: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if size > n {
        return Err(Error::SizeTooLarge {
            size,
            population: n,
        });
    }
    if size < 2 {
        return Err(Error::InvalidArgument(format!(
            "sample size must be at least 2, got {size}"
        )));
    }
    if !labels.has_both_classes() {
        return Err(Error::SingleClassLabels("resampled".into()));
    }
    let (pos, neg): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&i| labels.as_slice()[i] == 1);
    let ratio = pos.len() as f64 / n as f64;
    let n_pos = ((size as f64 * ratio).round() as usize)
        .clamp(1, size - 1)
        .min(pos.len())
        .max(size.saturating_sub(neg.len()));
    let n_neg = size - n_pos;

    let mut rng = seed::rng(seed, &[]);
    let mut picked: Vec<usize> = index::sample(&mut rng, pos.len(), n_pos)
        .into_iter()
        .map(|i| pos[i])
        .chain(
            index::sample(&mut rng, neg.len(), n_neg)
                .into_iter()
                .map(|i| neg[i]),
        )
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

/// `n_samples` plans for one dataset. Plan `i` draws from seeds derived
/// from `(seed, i)`; sizes larger than a split are clamped to the split.
pub fn make_plans(
    dataset_id: &str,
    train_labels: &LabelVector,
    test_labels: &LabelVector,
    n_samples: usize,
    cfg: &SamplerConfig,
    seed: u64,
) -> Result<Vec<SamplePlan>> {
    let train_size = cfg.train_size.min(train_labels.len());
    let test_size = cfg.test_size.min(test_labels.len());
    (0..n_samples)
        .map(|i| {
            let plan_seed = seed::derive(seed, &[i as u64]);
            Ok(SamplePlan {
                dataset_id: dataset_id.to_string(),
                sample_id: i,
                train_indices: stratified_resample(
                    train_labels,
                    train_size,
                    seed::derive(plan_seed, &[0]),
                )?,
                test_indices: stratified_resample(
                    test_labels,
                    test_size,
                    seed::derive(plan_seed, &[1]),
                )?,
                seed: plan_seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize, n_pos: usize) -> LabelVector {
        LabelVector::new((0..n).map(|i| u8::from(i % (n / n_pos) == 0 && i / (n / n_pos) < n_pos)).collect())
            .unwrap()
    }

    fn count_pos(l: &LabelVector, idx: &[usize]) -> usize {
        idx.iter().filter(|&&i| l.as_slice()[i] == 1).count()
    }

    #[test]
    fn ratio_is_preserved() {
        let l = labels(40, 10);
        assert_eq!(l.positives(), 10);
        let idx = stratified_resample(&l, 8, 1).unwrap();
        assert_eq!(idx.len(), 8);
        assert_eq!(count_pos(&l, &idx), 2);
    }

    #[test]
    fn full_population_is_identity() {
        let l = labels(20, 5);
        let idx = stratified_resample(&l, 20, 9).unwrap();
        assert_eq!(idx, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn rare_class_is_clamped_to_one() {
        let l = labels(100, 2);
        let idx = stratified_resample(&l, 10, 3).unwrap();
        assert_eq!(count_pos(&l, &idx), 1);
    }

    #[test]
    fn errors() {
        let l = labels(10, 5);
        assert!(matches!(stratified_resample(&l, 11, 0), Err(Error::SizeTooLarge { .. })));
        let single = LabelVector::new(vec![0; 5]).unwrap();
        assert!(matches!(
            stratified_resample(&single, 3, 0),
            Err(Error::SingleClassLabels(_))
        ));
    }

    #[test]
    fn plans_are_deterministic_and_clamped() {
        let tr = labels(50, 10);
        let te = labels(20, 4);
        let cfg = SamplerConfig::default();
        let a = make_plans("d", &tr, &te, 3, &cfg, 42).unwrap();
        let b = make_plans("d", &tr, &te, 3, &cfg, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_eq!(a[0].train_indices, (0..50).collect::<Vec<_>>());
        let small = SamplerConfig {
            train_size: 10,
            test_size: 5,
        };
        let c = make_plans("d", &tr, &te, 2, &small, 42).unwrap();
        assert_ne!(c[0].train_indices, c[1].train_indices);
        assert_eq!(c[1].sample_id, 1);
    }
}
