//! Squared maximum mean discrepancy with an RBF kernel.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::seed;
use crate::tensor_io::EmbeddingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Rbf,
}

/// RBF bandwidth σ: either the median pairwise distance of the pooled
/// sample or a fixed positive value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    #[default]
    MedianHeuristic,
    Fixed(f64),
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::MedianHeuristic => s.serialize_str("median_heuristic"),
            Bandwidth::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(String),
            Value(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Name(n) if n == "median_heuristic" => Ok(Bandwidth::MedianHeuristic),
            Repr::Name(n) => Err(serde::de::Error::custom(format!(
                "unknown bandwidth {n:?}, expected \"median_heuristic\" or a number"
            ))),
            Repr::Value(v) => Ok(Bandwidth::Fixed(v)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmdConfig {
    pub kernel: Kernel,
    pub bandwidth: Bandwidth,
    /// Maximum rows used per side; 0 disables subsampling.
    pub subsample_cap: usize,
    pub seed: u64,
}

impl Default for MmdConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Rbf,
            bandwidth: Bandwidth::MedianHeuristic,
            subsample_cap: 1000,
            seed: 0,
        }
    }
}

impl MmdConfig {
    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(v) = self.bandwidth {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "mmd bandwidth must be positive, got {v}"
                )));
            }
        }
        if self.subsample_cap == 1 {
            return Err(Error::InvalidArgument(
                "mmd subsample_cap must be 0 (disabled) or at least 2".into(),
            ));
        }
        Ok(())
    }
}

fn subsample<'a>(m: &'a EmbeddingMatrix, cfg: &MmdConfig, side: u64) -> Vec<&'a [f64]> {
    if cfg.subsample_cap == 0 || m.rows() <= cfg.subsample_cap {
        return m.iter_rows().collect();
    }
    let mut rng = seed::rng(cfg.seed, &[side]);
    let mut picked = index::sample(&mut rng, m.rows(), cfg.subsample_cap).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| m.row(i)).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Upper triangle (i < j) of the pooled squared-distance matrix.
struct Distances {
    n: usize,
    upper: Vec<f64>,
}

impl Distances {
    fn new(points: &[&[f64]]) -> Self {
        let n = points.len();
        let upper = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (i + 1..n).map(move |j| sq_dist(points[i], points[j])))
            .collect();
        Self { n, upper }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        // offset of row i in the packed upper triangle
        self.upper[i * (2 * self.n - i - 1) / 2 + (j - i - 1)]
    }

    /// Median of the Euclidean (not squared) pairwise distances.
    fn median_distance(&self) -> f64 {
        let mut d = self.upper.clone();
        let m = d.len();
        let hi = *d.select_nth_unstable_by(m / 2, f64::total_cmp).1;
        if m % 2 == 1 {
            hi.sqrt()
        } else {
            let lo = d[..m / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            0.5 * (lo.sqrt() + hi.sqrt())
        }
    }
}

/// Biased (V-statistic) estimate of MMD² between the row distributions of
/// `x` and `y`, clamped at zero.
pub fn mmd(x: &EmbeddingMatrix, y: &EmbeddingMatrix, cfg: &MmdConfig) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    cfg.validate()?;
    let xs = subsample(x, cfg, 0);
    let ys = subsample(y, cfg, 1);
    let (nx, ny) = (xs.len(), ys.len());
    let pooled: Vec<&[f64]> = xs.iter().chain(ys.iter()).copied().collect();
    let dist = Distances::new(&pooled);

    let sigma = match cfg.bandwidth {
        Bandwidth::Fixed(s) => s,
        Bandwidth::MedianHeuristic => dist.median_distance(),
    };
    if sigma == 0.0 {
        log::debug!("mmd: median pairwise distance is zero, reporting 0");
        return Ok(0.0);
    }
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let block_sum = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| -> f64 {
        let per_row: Vec<f64> = rows
            .into_par_iter()
            .map(|i| cols.clone().map(|j| (-gamma * dist.get(i, j)).exp()).sum())
            .collect();
        per_row.iter().sum()
    };
    let kxx = block_sum(0..nx, 0..nx) / (nx * nx) as f64;
    let kyy = block_sum(nx..nx + ny, nx..nx + ny) / (ny * ny) as f64;
    let kxy = block_sum(0..nx, nx..nx + ny) / (nx * ny) as f64;
    Ok((kxx + kyy - 2.0 * kxy).max(0.0))
}

/// Inner product of the row-mean vectors of `train` and `test`.
pub fn dot_product(train: &EmbeddingMatrix, test: &EmbeddingMatrix) -> Result<f64> {
    if train.dim() != test.dim() {
        return Err(Error::DimMismatch {
            left: train.dim(),
            right: test.dim(),
        });
    }
    Ok(train
        .row_mean()
        .iter()
        .zip(test.row_mean())
        .map(|(a, b)| a * b)
        .sum())
}
