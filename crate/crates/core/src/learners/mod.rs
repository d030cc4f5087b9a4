//! Classifiers over the thirteen metric features, their evaluation, and
//! ranked PTM recommendation.

mod knn;
mod lodo;
mod naive_bayes;
mod split;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::RecommendationDataset;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::metrics::{MetricVector, FEATURE_NAMES};
use crate::probe::{fit_logistic, LogisticModel, ProbeConfig, Standardizer};
use crate::scoring::ScoredPredictions;
use crate::tensor_io::EmbeddingMatrix;

pub use knn::Knn;
pub use lodo::{leave_one_dataset_out, LodoReport, LodoSample};
pub use naive_bayes::GaussianNb;
pub use split::{split, Partitions, SplitSpec};
pub use tree::{DecisionTree, FeaturesPerSplit, ForestConfig, Node, RandomForest, TreeConfig};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Lr,
    Rf,
    Nb,
    Dt,
    Knn,
}

impl Kind {
    /// Report order.
    pub const ALL: [Kind; 5] = [Kind::Lr, Kind::Rf, Kind::Nb, Kind::Dt, Kind::Knn];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Lr => "lr",
            Kind::Rf => "rf",
            Kind::Nb => "nb",
            Kind::Dt => "dt",
            Kind::Knn => "knn",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_str().to_uppercase())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown classifier kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    /// Logistic regression reuses the probe trainer; `repeats` is ignored.
    pub logistic: ProbeConfig,
    pub tree: TreeConfig,
    pub forest: ForestConfig,
    pub knn_k: usize,
    pub nb_var_floor: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            logistic: ProbeConfig::default(),
            tree: TreeConfig::default(),
            forest: ForestConfig::default(),
            knn_k: 5,
            nb_var_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Lr {
        scaler: Standardizer,
        model: LogisticModel,
    },
    Rf(RandomForest),
    Nb(GaussianNb),
    Dt(DecisionTree),
    Knn(Knn),
}

/// A fitted classifier bound to the feature order it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedRecommender {
    pub kind: Kind,
    pub feature_names: Vec<String>,
    pub params: Params,
    pub seed: u64,
}

fn feature_rows(ds: &RecommendationDataset) -> Vec<Vec<f64>> {
    ds.instances
        .iter()
        .map(|i| i.features.to_array().to_vec())
        .collect()
}

fn canonical_names() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Fits a classifier on raw feature rows (any width).
pub fn fit_rows(
    kind: Kind,
    x: &[Vec<f64>],
    y: &[u8],
    feature_names: Vec<String>,
    cfg: &LearnerConfig,
) -> Result<TrainedRecommender> {
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClassLabels("train".into()));
    }
    if x.iter().any(|r| r.len() != feature_names.len()) {
        return Err(Error::DimMismatch {
            left: feature_names.len(),
            right: x.iter().map(Vec::len).find(|&l| l != feature_names.len()).unwrap_or(0),
        });
    }
    let as_matrix = || EmbeddingMatrix::from_rows(x);
    let (params, seed) = match kind {
        Kind::Lr => {
            cfg.logistic.validate()?;
            let m = as_matrix()?;
            let scaler = if cfg.logistic.standardize {
                Standardizer::fit(&m)
            } else {
                Standardizer::identity(m.dim())
            };
            let model = fit_logistic(&scaler.transform(&m)?, y, &cfg.logistic.sgd(), cfg.logistic.seed, 0)?;
            (Params::Lr { scaler, model }, cfg.logistic.seed)
        }
        Kind::Rf => {
            if cfg.forest.n_trees == 0 {
                return Err(Error::InvalidArgument("n_trees must be at least 1".into()));
            }
            (Params::Rf(RandomForest::fit(x, y, &cfg.forest)), cfg.forest.seed)
        }
        Kind::Nb => (Params::Nb(GaussianNb::fit(x, y, cfg.nb_var_floor)), 0),
        Kind::Dt => {
            let all: Vec<usize> = (0..x.len()).collect();
            (Params::Dt(DecisionTree::fit(x, y, &all, &cfg.tree, None)), 0)
        }
        Kind::Knn => {
            let scaler = Standardizer::fit(&as_matrix()?);
            (Params::Knn(Knn::fit(x, y, cfg.knn_k, scaler)), 0)
        }
    };
    Ok(TrainedRecommender {
        kind,
        feature_names,
        params,
        seed,
    })
}

/// Fits `kind` on the thirteen canonical features of `train`.
pub fn fit(kind: Kind, train: &RecommendationDataset, cfg: &LearnerConfig) -> Result<TrainedRecommender> {
    fit_rows(kind, &feature_rows(train), &train.labels(), canonical_names(), cfg)
}

impl TrainedRecommender {
    /// Positive-class score in `[0, 1]` for one row in model feature order.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        match &self.params {
            Params::Lr { scaler, model } => model.predict_proba(&scaler.transform_row(row)),
            Params::Rf(f) => f.predict_proba(row),
            Params::Nb(nb) => nb.predict_proba(row),
            Params::Dt(t) => t.predict_proba(row),
            Params::Knn(k) => k.predict_proba(row),
        }
    }

    /// Scores rows whose columns are named `names`; the names must match the
    /// model's feature order exactly.
    pub fn predict_named(&self, names: &[&str], rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        if names.len() != self.feature_names.len()
            || names.iter().zip(&self.feature_names).any(|(a, b)| a != b)
        {
            return Err(Error::FeatureOrderMismatch {
                expected: self.feature_names.clone(),
                found: names.iter().map(|s| s.to_string()).collect(),
            });
        }
        Ok(rows.iter().map(|r| self.score_row(r)).collect())
    }

    pub fn predict_proba(&self, features: &[MetricVector]) -> Result<Vec<f64>> {
        let rows: Vec<Vec<f64>> = features.iter().map(|f| f.to_array().to_vec()).collect();
        self.predict_named(&FEATURE_NAMES, &rows)
    }

    pub fn predict_dataset(&self, ds: &RecommendationDataset) -> Result<Vec<f64>> {
        self.predict_named(&FEATURE_NAMES, &feature_rows(ds))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = serde_json::json!({
            "kind": self.kind,
            "version": MODEL_VERSION,
            "feature_names": self.feature_names,
            "seed": self.seed,
            "params": self.params,
        });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: serde_json::Value = serde_json::from_str(text)?;
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::ModelFormat("expected a JSON object".into()))?;
        let version = obj.get("version").and_then(|v| v.as_u64()).map(|v| v as u32);
        if version != Some(MODEL_VERSION) {
            return Err(Error::VersionMismatch {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let field = |name: &str| {
            obj.get(name)
                .cloned()
                .ok_or_else(|| Error::ModelFormat(format!("missing field {name:?}")))
        };
        let kind: Kind = serde_json::from_value(field("kind")?)?;
        let feature_names: Vec<String> = serde_json::from_value(field("feature_names")?)?;
        let seed = obj.get("seed").and_then(|v| v.as_u64()).unwrap_or(0);
        let raw = field("params")?;
        let params = match kind {
            Kind::Lr => {
                #[derive(Deserialize)]
                struct Lr {
                    scaler: Standardizer,
                    model: LogisticModel,
                }
                let p: Lr = serde_json::from_value(raw)?;
                Params::Lr {
                    scaler: p.scaler,
                    model: p.model,
                }
            }
            Kind::Rf => Params::Rf(serde_json::from_value(raw)?),
            Kind::Nb => Params::Nb(serde_json::from_value(raw)?),
            Kind::Dt => Params::Dt(serde_json::from_value(raw)?),
            Kind::Knn => Params::Knn(serde_json::from_value(raw)?),
        };
        Ok(Self {
            kind,
            feature_names,
            params,
            seed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fsutil::write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fsutil::read(path.as_ref())?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::ModelFormat("model file is not UTF-8".into()))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub rank: usize,
    pub ptm_id: String,
    pub score: f64,
    pub recommended: bool,
}

/// Ranks candidates by descending score (ties: ascending PTM id) and flags
/// the first `top_k`.
pub fn recommend(
    model: &TrainedRecommender,
    candidates: &[(String, MetricVector)],
    top_k: usize,
) -> Result<Vec<Recommendation>> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates to rank".into()));
    }
    let features: Vec<MetricVector> = candidates.iter().map(|(_, m)| *m).collect();
    let scores = model.predict_proba(&features)?;
    let mut ranked: Vec<(String, f64)> = candidates
        .iter()
        .map(|(id, _)| id.clone())
        .zip(scores)
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked
        .into_iter()
        .enumerate()
        .map(|(i, (ptm_id, score))| Recommendation {
            rank: i + 1,
            ptm_id,
            score,
            recommended: i < top_k,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kind: Kind,
    pub accuracy: f64,
    pub f1: f64,
    pub auc: f64,
    pub mcc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
}

impl EvaluationReport {
    pub fn get(&self, kind: Kind) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<6} {:>9} {:>9} {:>9} {:>9}\n",
            "Model", "Accuracy", "F1-Score", "AUC", "MCC"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<6} {:>9.3} {:>9.3} {:>9.3} {:>9.3}\n",
                r.kind.to_string(),
                r.accuracy,
                r.f1,
                r.auc,
                r.mcc
            ));
        }
        out
    }
}

/// Accuracy, F1, AUC and MCC of `model` on `ds`.
pub fn score_model(model: &TrainedRecommender, ds: &RecommendationDataset) -> Result<ReportRow> {
    let scores = model.predict_dataset(ds)?;
    let labels = ds.labels();
    let p = ScoredPredictions::new(&scores, &labels)?;
    let c = p.confusion();
    Ok(ReportRow {
        kind: model.kind,
        accuracy: c.accuracy(),
        f1: c.f1(),
        auc: p.roc_auc()?,
        mcc: c.mcc(),
    })
}

/// Splits `ds`, fits every classifier kind on the training partition and
/// scores each on the test partition. The validation partition is left
/// untouched.
pub fn evaluate_all(
    ds: &RecommendationDataset,
    spec: &SplitSpec,
    cfg: &LearnerConfig,
) -> Result<EvaluationReport> {
    let parts = split(ds, spec)?;
    if !parts.test.has_both_classes() {
        return Err(Error::SingleClassLabels("test partition".into()));
    }
    let rows = Kind::ALL
        .iter()
        .map(|&k| score_model(&fit(k, &parts.train, cfg)?, &parts.test))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport { rows })
}
