use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_io::EmbeddingMatrix;

/// Equal-width histogram; the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn from_values(values: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
        }
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if values.is_empty() {
            return Ok(Self {
                bin_edges: vec![0.0, 1.0],
                counts: vec![0],
            });
        }
        if min == max {
            return Ok(Self {
                bin_edges: vec![min - 0.5, max + 0.5],
                counts: vec![values.len() as u64],
            });
        }
        let width = (max - min) / bins as f64;
        let mut bin_edges: Vec<f64> = (0..bins).map(|i| min + width * i as f64).collect();
        bin_edges.push(max);
        let mut counts = vec![0u64; bins];
        for &v in values {
            let b = (((v - min) / (max - min)) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        Ok(Self { bin_edges, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `bin_start,bin_end,count` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,bin_end,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.bin_edges[i], self.bin_edges[i + 1], c));
        }
        out
    }
}

/// Histogram of every value of the flattened matrix.
pub fn value_histogram(matrix: &EmbeddingMatrix, bins: usize) -> Result<Histogram> {
    Histogram::from_values(matrix.values(), bins)
}

/// Histogram of the per-row Euclidean norms.
pub fn l2_histogram(matrix: &EmbeddingMatrix, bins: usize) -> Result<Histogram> {
    let norms: Vec<f64> = matrix
        .iter_rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    Histogram::from_values(&norms, bins)
}
