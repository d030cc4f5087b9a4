//! Model-agnostic feature importance for the metric features.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::RecommendationDataset;
use crate::error::{Error, Result};
use crate::learners::TrainedRecommender;
use crate::scoring::ScoredPredictions;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportanceMetric {
    #[default]
    Auc,
    Accuracy,
}

impl std::str::FromStr for ImportanceMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auc" => Ok(Self::Auc),
            "accuracy" => Ok(Self::Accuracy),
            _ => Err(Error::InvalidArgument(format!("unknown importance metric {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub mean: f64,
    pub std: f64,
    /// 1 = most important.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub method: String,
    pub metric: ImportanceMetric,
    pub baseline: f64,
    /// One entry per model feature, in model feature order.
    pub features: Vec<FeatureImportance>,
}

impl ImportanceReport {
    fn new(
        method: &str,
        metric: ImportanceMetric,
        baseline: f64,
        names: &[String],
        samples: &[Vec<f64>],
    ) -> Self {
        let mut features: Vec<FeatureImportance> = names
            .iter()
            .zip(samples)
            .map(|(name, s)| {
                let n = s.len().max(1) as f64;
                let mean = s.iter().sum::<f64>() / n;
                let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                FeatureImportance {
                    feature: name.clone(),
                    mean,
                    std: var.sqrt(),
                    rank: 0,
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..features.len()).collect();
        order.sort_by(|&a, &b| features[b].mean.total_cmp(&features[a].mean).then(a.cmp(&b)));
        for (r, &i) in order.iter().enumerate() {
            features[i].rank = r + 1;
        }
        Self {
            method: method.to_string(),
            metric,
            baseline,
            features,
        }
    }

    /// Features ordered by rank.
    pub fn ranked(&self) -> Vec<&FeatureImportance> {
        let mut v: Vec<&FeatureImportance> = self.features.iter().collect();
        v.sort_by_key(|f| f.rank);
        v
    }

    pub fn top(&self) -> &str {
        &self.ranked()[0].feature
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<4} {:<14} {:>10} {:>10}\n", "Rank", "Feature", "Mean", "Std");
        for f in self.ranked() {
            out.push_str(&format!(
                "{:<4} {:<14} {:>10.5} {:>10.5}\n",
                f.rank, f.feature, f.mean, f.std
            ));
        }
        out
    }

    /// `feature,score` rows in rank order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,score\n");
        for f in self.ranked() {
            out.push_str(&format!("{},{:?}\n", f.feature, f.mean));
        }
        out
    }
}

fn metric_value(
    model: &TrainedRecommender,
    rows: &[Vec<f64>],
    labels: &[u8],
    metric: ImportanceMetric,
) -> Result<f64> {
    let scores: Vec<f64> = rows.iter().map(|r| model.score_row(r)).collect();
    let p = ScoredPredictions::new(&scores, labels)?;
    match metric {
        ImportanceMetric::Auc => p.roc_auc(),
        ImportanceMetric::Accuracy => Ok(p.accuracy()),
    }
}

fn rows_and_labels(data: &RecommendationDataset) -> Result<(Vec<Vec<f64>>, Vec<u8>)> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("importance needs a non-empty dataset".into()));
    }
    if !data.has_both_classes() {
        return Err(Error::SingleClassLabels("importance data".into()));
    }
    let rows = data
        .instances
        .iter()
        .map(|i| i.features.to_array().to_vec())
        .collect();
    Ok((rows, data.labels()))
}

/// Drop in the metric when each feature column is shuffled, averaged over
/// `n_repeats` seeded shuffles.
pub fn permutation_importance(
    model: &TrainedRecommender,
    data: &RecommendationDataset,
    metric: ImportanceMetric,
    n_repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    let (rows, labels) = rows_and_labels(data)?;
    permutation_importance_rows(model, &rows, &labels, metric, n_repeats, seed)
}

pub fn permutation_importance_rows(
    model: &TrainedRecommender,
    rows: &[Vec<f64>],
    labels: &[u8],
    metric: ImportanceMetric,
    n_repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if n_repeats == 0 {
        return Err(Error::InvalidArgument("n_repeats must be at least 1".into()));
    }
    let n_features = model.feature_names.len();
    let baseline = metric_value(model, rows, labels, metric)?;
    let grid: Vec<(usize, usize)> = (0..n_features)
        .flat_map(|f| (0..n_repeats).map(move |r| (f, r)))
        .collect();
    let drops = grid
        .par_iter()
        .map(|&(f, r)| {
            let mut column: Vec<f64> = rows.iter().map(|row| row[f]).collect();
            column.shuffle(&mut seed::rng(seed, &[f as u64, r as u64]));
            let permuted: Vec<Vec<f64>> = rows
                .iter()
                .zip(&column)
                .map(|(row, &v)| {
                    let mut row = row.clone();
                    row[f] = v;
                    row
                })
                .collect();
            Ok(baseline - metric_value(model, &permuted, labels, metric)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let samples: Vec<Vec<f64>> = drops.chunks(n_repeats).map(<[f64]>::to_vec).collect();
    Ok(ImportanceReport::new(
        "permutation",
        metric,
        baseline,
        &model.feature_names,
        &samples,
    ))
}

/// Monte-Carlo Shapley values of the metric payoff. A feature outside the
/// coalition takes its value from a randomly permuted row; each sampled
/// feature ordering adds features one at a time and credits each with the
/// change in the metric.
pub fn shapley_mc(
    model: &TrainedRecommender,
    data: &RecommendationDataset,
    metric: ImportanceMetric,
    n_permutations: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    let (rows, labels) = rows_and_labels(data)?;
    shapley_mc_rows(model, &rows, &labels, metric, n_permutations, seed)
}

pub fn shapley_mc_rows(
    model: &TrainedRecommender,
    rows: &[Vec<f64>],
    labels: &[u8],
    metric: ImportanceMetric,
    n_permutations: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    if n_permutations == 0 {
        return Err(Error::InvalidArgument("n_permutations must be at least 1".into()));
    }
    let n_features = model.feature_names.len();
    let baseline = metric_value(model, rows, labels, metric)?;
    let per_perm = (0..n_permutations)
        .into_par_iter()
        .map(|p| {
            let mut rng = seed::rng(seed, &[p as u64]);
            let mut features: Vec<usize> = (0..n_features).collect();
            features.shuffle(&mut rng);
            let mut donor: Vec<usize> = (0..rows.len()).collect();
            donor.shuffle(&mut rng);

            let mut current: Vec<Vec<f64>> = donor.iter().map(|&d| rows[d].clone()).collect();
            let mut prev = metric_value(model, &current, labels, metric)?;
            let mut contrib = vec![0.0; n_features];
            for &f in &features {
                for (row, orig) in current.iter_mut().zip(rows) {
                    row[f] = orig[f];
                }
                let v = metric_value(model, &current, labels, metric)?;
                contrib[f] = v - prev;
                prev = v;
            }
            Ok(contrib)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let samples: Vec<Vec<f64>> = (0..n_features)
        .map(|f| per_perm.iter().map(|c| c[f]).collect())
        .collect();
    Ok(ImportanceReport::new(
        "shapley_mc",
        metric,
        baseline,
        &model.feature_names,
        &samples,
    ))
}
