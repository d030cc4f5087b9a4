use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::tensor_io::EmbeddingMatrix;

/// Which quantity the `nuclear_norm` feature reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuclearNorm {
    /// Largest absolute row sum of the matrix.
    #[default]
    MaxRowAbsSum,
    /// Sum of singular values.
    SingularValueSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    /// Entries with `|x| <= zero_tolerance` do not count towards L0.
    pub zero_tolerance: f64,
    pub nuclear: NuclearNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub nuclear: f64,
}

pub fn norms(matrix: &EmbeddingMatrix, cfg: &NormConfig) -> Norms {
    let values = matrix.values();
    let l0 = values.iter().filter(|v| v.abs() > cfg.zero_tolerance).count() as f64;
    let l1 = values.iter().map(|v| v.abs()).sum();
    let l2 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nuclear = match cfg.nuclear {
        NuclearNorm::MaxRowAbsSum => matrix
            .iter_rows()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NuclearNorm::SingularValueSum => {
            DMatrix::from_row_slice(matrix.rows(), matrix.dim(), values)
                .singular_values()
                .sum()
        }
    };
    Norms { l0, l1, l2, nuclear }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, dim: usize, v: &[f64]) -> EmbeddingMatrix {
        EmbeddingMatrix::new(rows, dim, v.to_vec()).unwrap()
    }

    #[test]
    fn sparse_matrix() {
        let n = norms(&mat(2, 2, &[0., 1., 2., 0.]), &NormConfig::default());
        assert_eq!((n.l0, n.l1, n.nuclear), (2.0, 3.0, 2.0));
        assert_eq!(n.l2, 5f64.sqrt());
    }

    #[test]
    fn max_row_abs_sum() {
        let n = norms(&mat(2, 2, &[1., -2., 3., 4.]), &NormConfig::default());
        assert_eq!(n.nuclear, 7.0);
    }

    #[test]
    fn zero_matrix() {
        let n = norms(&mat(5, 4, &[0.; 20]), &NormConfig::default());
        assert_eq!((n.l0, n.l1, n.l2, n.nuclear), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn tolerance_and_singular_value_variant() {
        let cfg = NormConfig {
            zero_tolerance: 0.5,
            nuclear: NuclearNorm::SingularValueSum,
        };
        // diag(3, -4): singular values 3 and 4
        let n = norms(&mat(2, 2, &[3., 0.25, 0., -4.]), &cfg);
        assert_eq!(n.l0, 2.0);
        let n = norms(&mat(2, 2, &[3., 0., 0., -4.]), &cfg);
        assert!((n.nuclear - 7.0).abs() < 1e-12);
    }
}
