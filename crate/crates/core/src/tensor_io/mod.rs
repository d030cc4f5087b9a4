//! Embedding matrices, task labels and the manifests that tie them together.

mod npy;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;

pub use npy::{
    decode_labels, decode_matrix, encode_labels, encode_matrix, read_array, read_labels,
    write_array, write_labels,
};

/// Dense row-major matrix of finite `f64` values, one row per code snippet.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || dim == 0 || values.len() != rows * dim {
            return Err(Error::ShapeMismatch {
                rows,
                dim,
                len: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self { rows, dim, values })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimMismatch {
                left: dim,
                right: bad.len(),
            });
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }

    /// Mean over rows, one entry per dimension.
    pub fn row_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for row in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.rows as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::InvalidArgument(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(indices.len(), self.dim, values)
    }

    /// Row-wise concatenation.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self::new(self.rows + other.rows, self.dim, values)
    }

    /// Applies `f` element-wise; errors if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.rows, self.dim, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Binary task labels (0 = non-vulnerable, 1 = vulnerable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some(index) = labels.iter().position(|&l| l > 1) {
            return Err(Error::InvalidLabel {
                index,
                value: f64::from(labels[index]),
            });
        }
        Ok(Self(labels))
    }

    pub fn from_f64(values: &[f64]) -> Result<Self> {
        values
            .iter()
            .enumerate()
            .map(|(index, &v)| {
                if v == 0.0 {
                    Ok(0)
                } else if v == 1.0 {
                    Ok(1)
                } else {
                    Err(Error::InvalidLabel { index, value: v })
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.0.iter().filter(|&&l| l == 1).count()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.0.len()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }
}

/// Train/test embeddings plus labels for one (dataset, PTM) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub dataset_id: String,
    pub ptm_id: String,
    pub train: EmbeddingMatrix,
    pub test: EmbeddingMatrix,
    pub train_labels: LabelVector,
    pub test_labels: LabelVector,
}

impl EmbeddingSet {
    /// Validates every set invariant; the first violation is returned.
    pub fn new(
        dataset_id: impl Into<String>,
        ptm_id: impl Into<String>,
        train: EmbeddingMatrix,
        test: EmbeddingMatrix,
        train_labels: LabelVector,
        test_labels: LabelVector,
    ) -> Result<Self> {
        if train.dim() != test.dim() {
            return Err(Error::DimMismatch {
                left: train.dim(),
                right: test.dim(),
            });
        }
        for (split, m, l) in [
            ("train", &train, &train_labels),
            ("test", &test, &test_labels),
        ] {
            if m.rows() != l.len() {
                return Err(Error::LabelLengthMismatch {
                    split: split.into(),
                    rows: m.rows(),
                    labels: l.len(),
                });
            }
        }
        for (split, l) in [("train", &train_labels), ("test", &test_labels)] {
            if !l.has_both_classes() {
                return Err(Error::SingleClassLabels(split.into()));
            }
        }
        Ok(Self {
            dataset_id: dataset_id.into(),
            ptm_id: ptm_id.into(),
            train,
            test,
            train_labels,
            test_labels,
        })
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }

    /// Row subset of both splits; the result is re-validated.
    pub fn subset(&self, train_indices: &[usize], test_indices: &[usize]) -> Result<Self> {
        Self::new(
            self.dataset_id.clone(),
            self.ptm_id.clone(),
            self.train.select_rows(train_indices)?,
            self.test.select_rows(test_indices)?,
            self.train_labels.select(train_indices),
            self.test_labels.select(test_indices),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// Mean of the last hidden state over non-special token positions.
    #[default]
    MeanNonSpecial,
}

fn default_token_budget() -> usize {
    100
}

/// JSON document describing where one (dataset, PTM) pair lives on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub dataset_id: String,
    pub ptm_id: String,
    pub dim: usize,
    pub train_embeddings: PathBuf,
    pub test_embeddings: PathBuf,
    pub train_labels: PathBuf,
    pub test_labels: PathBuf,
    #[serde(default = "default_token_budget")]
    pub token_budget: usize,
    #[serde(default)]
    pub pooling: Pooling,
}

impl Manifest {
    /// Reads a manifest; relative file paths are resolved against the
    /// manifest's own directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fsutil::read(path)?;
        let mut m: Manifest = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut m.train_embeddings,
            &mut m.test_embeddings,
            &mut m.train_labels,
            &mut m.test_labels,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if m.token_budget == 0 {
            return Err(Error::Manifest("token_budget must be at least 1".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut json = serde_json::to_vec_pretty(self)?;
        json.push(b'\n');
        fsutil::write_atomic(path.as_ref(), &json)
    }
}

/// Reads and validates the four arrays a manifest points at.
pub fn load_set(manifest: &Manifest) -> Result<EmbeddingSet> {
    let train = read_array(&manifest.train_embeddings)?;
    let test = read_array(&manifest.test_embeddings)?;
    for m in [&train, &test] {
        if m.dim() != manifest.dim {
            return Err(Error::DimMismatch {
                left: manifest.dim,
                right: m.dim(),
            });
        }
    }
    EmbeddingSet::new(
        manifest.dataset_id.clone(),
        manifest.ptm_id.clone(),
        train,
        test,
        read_labels(&manifest.train_labels)?,
        read_labels(&manifest.test_labels)?,
    )
}

/// Writes `set` as four NPY files plus `manifest.json` under `dir` and
/// returns the manifest (with absolute paths).
pub fn save_set(set: &EmbeddingSet, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_array(&set.train, dir.join("train_embeddings.npy"))?;
    write_array(&set.test, dir.join("test_embeddings.npy"))?;
    write_labels(&set.train_labels, dir.join("train_labels.npy"))?;
    write_labels(&set.test_labels, dir.join("test_labels.npy"))?;
    let on_disk = Manifest {
        dataset_id: set.dataset_id.clone(),
        ptm_id: set.ptm_id.clone(),
        dim: set.dim(),
        train_embeddings: "train_embeddings.npy".into(),
        test_embeddings: "test_embeddings.npy".into(),
        train_labels: "train_labels.npy".into(),
        test_labels: "test_labels.npy".into(),
        token_budget: default_token_budget(),
        pooling: Pooling::MeanNonSpecial,
    };
    let path = dir.join("manifest.json");
    on_disk.save(&path)?;
    Manifest::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, dim: usize) -> EmbeddingMatrix {
        EmbeddingMatrix::new(rows, dim, (0..rows * dim).map(|v| v as f64).collect()).unwrap()
    }

    fn labels(v: &[u8]) -> LabelVector {
        LabelVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn matrix_invariants() {
        assert!(EmbeddingMatrix::new(2, 2, vec![0.0; 3]).is_err());
        assert!(EmbeddingMatrix::new(0, 2, vec![]).is_err());
        assert!(matches!(
            EmbeddingMatrix::new(1, 2, vec![0.0, f64::INFINITY]),
            Err(Error::NonFiniteValue { index: 1 })
        ));
        let a = m(2, 3);
        assert_eq!(a.row(1), &[3., 4., 5.]);
        assert_eq!(a.row_mean(), vec![1.5, 2.5, 3.5]);
        assert_eq!(a.select_rows(&[1, 1]).unwrap().values(), &[3., 4., 5., 3., 4., 5.]);
        assert_eq!(a.vstack(&a).unwrap().rows(), 4);
        assert!(a.vstack(&m(1, 2)).is_err());
    }

    #[test]
    fn set_validation_reports_one_error() {
        let ok = EmbeddingSet::new("d", "p", m(2, 3), m(2, 3), labels(&[0, 1]), labels(&[1, 0]));
        assert!(ok.is_ok());
        assert!(matches!(
            EmbeddingSet::new("d", "p", m(2, 768), m(2, 512), labels(&[0, 1]), labels(&[0, 1])),
            Err(Error::DimMismatch { left: 768, right: 512 })
        ));
        assert!(matches!(
            EmbeddingSet::new("d", "p", m(2, 3), m(2, 3), labels(&[0, 1, 1]), labels(&[0, 1])),
            Err(Error::LabelLengthMismatch { .. })
        ));
        assert!(matches!(
            EmbeddingSet::new("d", "p", m(2, 3), m(2, 3), labels(&[0, 1]), labels(&[0, 0])),
            Err(Error::SingleClassLabels(ref s)) if s == "test"
        ));
    }

    #[test]
    fn manifest_defaults_and_unknown_keys() {
        let json = r#"{"dataset_id":"d","ptm_id":"p","dim":3,"train_embeddings":"a.npy",
            "test_embeddings":"b.npy","train_labels":"c.npy","test_labels":"d.npy"}"#;
        let m: Manifest = serde_json::from_str(json).unwrap();
        assert_eq!(m.token_budget, 100);
        assert_eq!(m.pooling, Pooling::MeanNonSpecial);
        let bad = json.replace("\"dim\":3", "\"dim\":3,\"extra\":1");
        assert!(serde_json::from_str::<Manifest>(&bad).is_err());
    }
}
