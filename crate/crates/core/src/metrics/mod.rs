//! The thirteen embedding-quality features and histogram views.
//!
//! Statistics and norms describe the whole dataset (train and test rows
//! concatenated); `mmd` and `dot_product` compare the two splits.

mod histogram;
mod mmd;
mod norms;
mod stats;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_io::EmbeddingSet;

pub use histogram::{l2_histogram, value_histogram, Histogram};
pub use mmd::{dot_product, mmd, Bandwidth, Kernel, MmdConfig};
pub use norms::{norms, NormConfig, Norms, NuclearNorm};
pub use stats::{statistics, Statistics};
pub(crate) use stats::median_of;

pub const NUM_FEATURES: usize = 13;

/// Canonical feature order, shared by CSV columns, model inputs and
/// importance reports.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "range",
    "mean",
    "median",
    "variance",
    "std",
    "skew",
    "kurt",
    "l0_norm",
    "l1_norm",
    "l2_norm",
    "nuclear_norm",
    "mmd",
    "dot_product",
];

/// Position of a named feature in [`FEATURE_NAMES`].
pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&n| n == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub range: f64,
    pub mean: f64,
    pub median: f64,
    pub variance: f64,
    pub std: f64,
    pub skew: f64,
    pub kurt: f64,
    pub l0_norm: f64,
    pub l1_norm: f64,
    pub l2_norm: f64,
    pub nuclear_norm: f64,
    pub mmd: f64,
    pub dot_product: f64,
}

impl MetricVector {
    pub fn from_parts(stats: Statistics, norms: Norms, mmd: f64, dot_product: f64) -> Self {
        Self {
            range: stats.range,
            mean: stats.mean,
            median: stats.median,
            variance: stats.variance,
            std: stats.std,
            skew: stats.skew,
            kurt: stats.kurt,
            l0_norm: norms.l0,
            l1_norm: norms.l1,
            l2_norm: norms.l2,
            nuclear_norm: norms.nuclear,
            mmd,
            dot_product,
        }
    }

    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.range,
            self.mean,
            self.median,
            self.variance,
            self.std,
            self.skew,
            self.kurt,
            self.l0_norm,
            self.l1_norm,
            self.l2_norm,
            self.nuclear_norm,
            self.mmd,
            self.dot_product,
        ]
    }

    pub fn from_array(a: [f64; NUM_FEATURES]) -> Self {
        Self {
            range: a[0],
            mean: a[1],
            median: a[2],
            variance: a[3],
            std: a[4],
            skew: a[5],
            kurt: a[6],
            l0_norm: a[7],
            l1_norm: a[8],
            l2_norm: a[9],
            nuclear_norm: a[10],
            mmd: a[11],
            dot_product: a[12],
        }
    }

    pub fn from_slice(s: &[f64]) -> Result<Self> {
        let a: [f64; NUM_FEATURES] = s.try_into().map_err(|_| Error::DimMismatch {
            left: NUM_FEATURES,
            right: s.len(),
        })?;
        Ok(Self::from_array(a))
    }

    pub fn csv_header() -> String {
        FEATURE_NAMES.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        self.to_array()
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub mmd: MmdConfig,
    pub norms: NormConfig,
}

/// All thirteen features for one embedding set.
pub fn metric_vector(set: &EmbeddingSet, cfg: &MetricConfig) -> Result<MetricVector> {
    let all = set.train.vstack(&set.test)?;
    let stats = statistics(&all)?;
    let n = norms(&all, &cfg.norms);
    let d = mmd(&set.train, &set.test, &cfg.mmd)?;
    let dp = dot_product(&set.train, &set.test)?;
    Ok(MetricVector::from_parts(stats, n, d, dp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_io::{EmbeddingMatrix, LabelVector};

    fn set(train: &[f64], test: &[f64], dim: usize) -> EmbeddingSet {
        let tr = EmbeddingMatrix::new(train.len() / dim, dim, train.to_vec()).unwrap();
        let te = EmbeddingMatrix::new(test.len() / dim, dim, test.to_vec()).unwrap();
        let lab = |n: usize| LabelVector::new((0..n).map(|i| (i % 2) as u8).collect()).unwrap();
        EmbeddingSet::new("d", "p", tr.clone(), te.clone(), lab(tr.rows()), lab(te.rows())).unwrap()
    }

    #[test]
    fn identical_splits() {
        let vals = [0.5, -1.0, 2.0, 3.5, 0.0, 1.0];
        let s = set(&vals, &vals, 2);
        let mv = metric_vector(&s, &MetricConfig::default()).unwrap();
        assert_eq!(mv.mmd, 0.0);
        let doubled = s.train.vstack(&s.train).unwrap();
        let st = statistics(&doubled).unwrap();
        assert_eq!(mv.std, st.std);
        assert_eq!(mv.l1_norm, norms(&doubled, &NormConfig::default()).l1);
    }

    #[test]
    fn constant_set_is_degenerate() {
        let s = set(&[1.0; 4], &[1.0; 4], 2);
        assert!(matches!(
            metric_vector(&s, &MetricConfig::default()),
            Err(Error::DegenerateVariance)
        ));
    }

    #[test]
    fn array_round_trip_and_names() {
        let a: [f64; NUM_FEATURES] = std::array::from_fn(|i| i as f64);
        let mv = MetricVector::from_array(a);
        assert_eq!(mv.to_array(), a);
        let json = serde_json::to_value(mv).unwrap();
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            assert_eq!(json[name].as_f64().unwrap(), i as f64);
        }
        assert_eq!(feature_index("std"), Some(4));
        assert!(MetricVector::from_slice(&[1.0]).is_err());
    }
}
