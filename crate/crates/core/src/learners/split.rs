use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::RecommendationDataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    /// (train, validation, test) fractions.
    pub ratios: (f64, f64, f64),
    pub seed: u64,
    /// Keep every (dataset, sample) group inside one partition.
    pub group_by_sample: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            ratios: (0.6, 0.2, 0.2),
            seed: 0,
            group_by_sample: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.ratios;
        if a <= 0.0 || b < 0.0 || c <= 0.0 || ((a + b + c) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split ratios must be positive and sum to 1, got {:?}",
                self.ratios
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partitions {
    pub train: RecommendationDataset,
    pub validation: RecommendationDataset,
    pub test: RecommendationDataset,
}

/// Seeded shuffle of the split units (groups or rows), cut at the rounded
/// ratio targets.
pub fn split(ds: &RecommendationDataset, spec: &SplitSpec) -> Result<Partitions> {
    spec.validate()?;
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot split an empty dataset".into()));
    }
    let units: Vec<Vec<usize>> = if spec.group_by_sample {
        let mut start = 0;
        ds.groups()
            .iter()
            .map(|g| {
                let idx = (start..start + g.len()).collect();
                start += g.len();
                idx
            })
            .collect()
    } else {
        (0..ds.len()).map(|i| vec![i]).collect()
    };
    let n = units.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(spec.seed, &[]));

    let n_train = ((n as f64 * spec.ratios.0).round() as usize).min(n);
    let n_val = ((n as f64 * spec.ratios.1).round() as usize).min(n - n_train);
    let take = |range: std::ops::Range<usize>| {
        let mut rows: Vec<usize> = order[range]
            .iter()
            .flat_map(|&u| units[u].iter().copied())
            .collect();
        rows.sort_unstable();
        RecommendationDataset {
            instances: rows.iter().map(|&i| ds.instances[i].clone()).collect(),
            ptm_ids: ds.ptm_ids.clone(),
            top_k: ds.top_k,
        }
    };
    Ok(Partitions {
        train: take(0..n_train),
        validation: take(n_train..n_train + n_val),
        test: take(n_train + n_val..n),
    })
}
