use serde::{Deserialize, Serialize};

use crate::probe::Standardizer;

/// k-nearest-neighbour vote on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub scaler: Standardizer,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Knn {
    pub fn fit(x: &[Vec<f64>], y: &[u8], k: usize, scaler: Standardizer) -> Self {
        Self {
            k: k.clamp(1, x.len().max(1)),
            rows: x.iter().map(|r| scaler.transform_row(r)).collect(),
            labels: y.to_vec(),
            scaler,
        }
    }

    /// Fraction of positive labels among the `k` closest training rows;
    /// equal distances favour the lower row index.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let q = self.scaler.transform_row(row);
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        let pos = dist[..k].iter().filter(|(_, i)| self.labels[*i] == 1).count();
        pos as f64 / k as f64
    }
}
