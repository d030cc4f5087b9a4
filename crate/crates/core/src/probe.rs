//! Linear probe: a single logistic unit trained on frozen embeddings, scored
//! by test-split AUC.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::ScoredPredictions;
use crate::seed;
use crate::tensor_io::{EmbeddingMatrix, EmbeddingSet};

const STD_FLOOR: f64 = 1e-8;

/// Per-dimension affine map to zero mean and unit variance, fitted on
/// training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &EmbeddingMatrix) -> Self {
        let mean = x.row_mean();
        let mut var = vec![0.0; x.dim()];
        for row in x.iter_rows() {
            for ((v, m), xi) in var.iter_mut().zip(&mean).zip(row) {
                *v += (xi - m) * (xi - m);
            }
        }
        let n = x.rows() as f64;
        let scale = var.iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
        Self { mean, scale }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
        let values = x.iter_rows().flat_map(|r| self.transform_row(r)).collect();
        EmbeddingMatrix::new(x.rows(), x.dim(), values)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn logit(&self, row: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(row).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.logit(row))
    }
}

/// Mean binary cross-entropy of `model` on the given rows, with its gradient
/// with respect to the weights and the bias.
pub fn loss_and_gradient(
    model: &LogisticModel,
    x: &EmbeddingMatrix,
    y: &[u8],
    rows: &[usize],
) -> (f64, Vec<f64>, f64) {
    let mut loss = 0.0;
    let mut grad_w = vec![0.0; model.weights.len()];
    let mut grad_b = 0.0;
    for &i in rows {
        let row = x.row(i);
        let z = model.logit(row);
        let target = f64::from(y[i]);
        loss += softplus(z) - target * z;
        let residual = sigmoid(z) - target;
        for (g, xi) in grad_w.iter_mut().zip(row) {
            *g += residual * xi;
        }
        grad_b += residual;
    }
    let n = rows.len() as f64;
    grad_w.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad_w, grad_b / n)
}

/// Mini-batch gradient descent settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

/// Fits a logistic model from zero initialization. The row order is
/// reshuffled every epoch from a stream seeded by `stream_seed`.
pub fn fit_logistic(
    x: &EmbeddingMatrix,
    y: &[u8],
    params: &SgdParams,
    stream_seed: u64,
    repeat: usize,
) -> Result<LogisticModel> {
    let mut model = LogisticModel::zeros(x.dim());
    let mut rng = seed::rng(stream_seed, &[repeat as u64]);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            let (_, gw, gb) = loss_and_gradient(&model, x, y, batch);
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w -= params.learning_rate * g;
            }
            model.bias -= params.learning_rate * gb;
        }
        if !model.bias.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFiniteLoss { repeat, epoch });
        }
    }
    let (loss, _, _) = loss_and_gradient(&model, x, y, &order);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            repeat,
            epoch: params.epochs,
        });
    }
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub standardize: bool,
    pub repeats: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 50,
            batch_size: 128,
            seed: 0,
            standardize: true,
            repeats: 1,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.repeats == 0 {
            return Err(Error::InvalidArgument(
                "epochs, batch_size and repeats must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn sgd(&self) -> SgdParams {
        SgdParams {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
        }
    }
}

/// Median test-split scores over all repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub auc: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub mcc: f64,
    pub per_repeat_auc: Vec<f64>,
}

fn median(values: &[f64]) -> f64 {
    crate::metrics::median_of(&mut values.to_vec())
}

/// Trains the probe `cfg.repeats` times on the train split and scores each
/// run on the test split.
pub fn train_probe(set: &EmbeddingSet, cfg: &ProbeConfig) -> Result<ProbeResult> {
    cfg.validate()?;
    if !set.train_labels.has_both_classes() {
        return Err(Error::SingleClassLabels("train".into()));
    }
    if !set.test_labels.has_both_classes() {
        return Err(Error::SingleClassLabels("test".into()));
    }
    let scaler = if cfg.standardize {
        Standardizer::fit(&set.train)
    } else {
        Standardizer::identity(set.dim())
    };
    let train = scaler.transform(&set.train)?;
    let test = scaler.transform(&set.test)?;
    let y_train = set.train_labels.as_slice();
    let y_test = set.test_labels.as_slice();

    let mut aucs = Vec::with_capacity(cfg.repeats);
    let mut accs = Vec::with_capacity(cfg.repeats);
    let mut f1s = Vec::with_capacity(cfg.repeats);
    let mut mccs = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let model = fit_logistic(&train, y_train, &cfg.sgd(), cfg.seed, r)?;
        let scores: Vec<f64> = test.iter_rows().map(|row| model.predict_proba(row)).collect();
        let preds = ScoredPredictions::new(&scores, y_test)?;
        aucs.push(preds.roc_auc()?);
        let c = preds.confusion();
        accs.push(c.accuracy());
        f1s.push(c.f1());
        mccs.push(c.mcc());
    }
    Ok(ProbeResult {
        auc: median(&aucs),
        accuracy: median(&accs),
        f1: median(&f1s),
        mcc: median(&mccs),
        per_repeat_auc: aucs,
    })
}
