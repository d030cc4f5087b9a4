use serde::{Deserialize, Serialize};

use crate::dataset::RecommendationDataset;
use crate::error::{Error, Result};
use crate::scoring::Confusion;

use super::{fit, recommend, Kind, LearnerConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LodoSample {
    pub sample_id: usize,
    /// Recommended PTMs, best first.
    pub recommended: Vec<String>,
    /// PTMs labelled positive by probe AUC.
    pub actual_top: Vec<String>,
    /// PTM with the highest probe AUC (ties: smallest id).
    pub actual_best: String,
}

/// Outcome of training on every dataset but one and recommending for each
/// sample of the held-out dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LodoReport {
    pub held_out: String,
    pub kind: super::Kind,
    pub samples: Vec<LodoSample>,
    /// Share of samples whose top recommendation is among the actual top-k.
    pub top1_in_actual_top_k: f64,
    /// Share of samples whose top recommendation is the actual best PTM.
    pub top1_is_best: f64,
    /// Accuracy of the positive/negative predictions over held-out rows.
    pub classification_accuracy: f64,
}

pub fn leave_one_dataset_out(
    ds: &RecommendationDataset,
    held_out: &str,
    kind: Kind,
    cfg: &LearnerConfig,
) -> Result<LodoReport> {
    let train = ds.filter(|i| i.dataset_id != held_out);
    let test = ds.filter(|i| i.dataset_id == held_out);
    if test.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "dataset {held_out:?} not present in the recommendation dataset"
        )));
    }
    if train.is_empty() {
        return Err(Error::InvalidArgument(
            "leave-one-out needs at least two datasets".into(),
        ));
    }
    let model = fit(kind, &train, cfg)?;
    let top_k = ds.top_k;

    let mut samples = Vec::new();
    let mut confusion = Confusion::default();
    for group in test.groups() {
        let candidates: Vec<(String, _)> = group
            .iter()
            .map(|i| (i.ptm_id.clone(), i.features))
            .collect();
        let ranked = recommend(&model, &candidates, top_k)?;
        let scores: Vec<f64> = group
            .iter()
            .map(|i| ranked.iter().find(|r| r.ptm_id == i.ptm_id).unwrap().score)
            .collect();
        let labels: Vec<u8> = group.iter().map(|i| i.label).collect();
        let c = Confusion::from_predictions(&scores, &labels, 0.5);
        confusion.tp += c.tp;
        confusion.fp += c.fp;
        confusion.tn += c.tn;
        confusion.fn_ += c.fn_;

        let best = group
            .iter()
            .max_by(|a, b| {
                a.probe_auc
                    .total_cmp(&b.probe_auc)
                    .then_with(|| b.ptm_id.cmp(&a.ptm_id))
            })
            .unwrap();
        samples.push(LodoSample {
            sample_id: group[0].sample_id,
            recommended: ranked
                .iter()
                .filter(|r| r.recommended)
                .map(|r| r.ptm_id.clone())
                .collect(),
            actual_top: group
                .iter()
                .filter(|i| i.label == 1)
                .map(|i| i.ptm_id.clone())
                .collect(),
            actual_best: best.ptm_id.clone(),
        });
    }
    let n = samples.len() as f64;
    let hit = samples
        .iter()
        .filter(|s| s.actual_top.contains(&s.recommended[0]))
        .count() as f64;
    let best = samples
        .iter()
        .filter(|s| s.recommended[0] == s.actual_best)
        .count() as f64;
    Ok(LodoReport {
        held_out: held_out.to_string(),
        kind,
        samples,
        top1_in_actual_top_k: hit / n,
        top1_is_best: best / n,
        classification_accuracy: confusion.accuracy(),
    })
}
