use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor_io::EmbeddingMatrix;

/// Distribution statistics of the flattened matrix values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub range: f64,
    pub mean: f64,
    pub median: f64,
    pub variance: f64,
    pub std: f64,
    pub skew: f64,
    /// Excess kurtosis (normal distribution = 0).
    pub kurt: f64,
}

pub(crate) fn median_of(values: &mut [f64]) -> f64 {
    let n = values.len();
    debug_assert!(n > 0);
    values.sort_unstable_by(f64::total_cmp);
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Population moments over every value of `matrix`.
///
/// Fails with [`Error::DegenerateVariance`] for constant matrices, where
/// skewness and kurtosis are undefined.
pub fn statistics(matrix: &EmbeddingMatrix) -> Result<Statistics> {
    let values = matrix.values();
    let n = values.len() as f64;
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let median = median_of(&mut values.to_vec());
    Ok(Statistics {
        range: max - min,
        mean,
        median,
        variance: m2,
        std: m2.sqrt(),
        skew: m3 / m2.powf(1.5),
        kurt: m4 / (m2 * m2) - 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: usize, dim: usize, v: &[f64]) -> EmbeddingMatrix {
        EmbeddingMatrix::new(rows, dim, v.to_vec()).unwrap()
    }

    #[test]
    fn small_matrix() {
        let s = statistics(&mat(2, 2, &[1., 5., -2., 0.])).unwrap();
        assert_eq!(s.range, 7.0);
        assert_eq!(s.mean, 1.0);
        assert_eq!(s.median, 0.5);
    }

    #[test]
    fn symmetric_values_have_zero_skew() {
        let s = statistics(&mat(2, 2, &[-2., -1., 1., 2.])).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.skew, 0.0);
    }

    #[test]
    fn moments_of_skewed_column() {
        // mean 4, m2 = 10, m3 = 36, m4 = 278.8; scipy.stats.skew/kurtosis
        // (bias=True) give 1.1384199576606167 and -0.212
        let s = statistics(&mat(5, 1, &[1., 2., 3., 4., 10.])).unwrap();
        assert_relative_eq!(s.variance, 10.0, max_relative = 1e-12);
        assert_relative_eq!(s.skew, 1.138_419_957_660_616_7, max_relative = 1e-12);
        assert_relative_eq!(s.kurt, -0.212, max_relative = 1e-12);
    }

    #[test]
    fn constant_matrix_is_degenerate() {
        assert!(matches!(
            statistics(&mat(2, 2, &[3.; 4])),
            Err(Error::DegenerateVariance)
        ));
    }
}
