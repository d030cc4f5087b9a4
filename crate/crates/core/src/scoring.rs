//! Binary classification quality measures.

use crate::error::{Error, Result};

/// Scores (higher = more positive) paired with true labels.
#[derive(Debug, Clone, Copy)]
pub struct ScoredPredictions<'a> {
    pub scores: &'a [f64],
    pub labels: &'a [u8],
    pub threshold: f64,
}

impl<'a> ScoredPredictions<'a> {
    pub fn new(scores: &'a [f64], labels: &'a [u8]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::LabelLengthMismatch {
                split: "scored".into(),
                rows: scores.len(),
                labels: labels.len(),
            });
        }
        Ok(Self {
            scores,
            labels,
            threshold: 0.5,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn confusion(&self) -> Confusion {
        Confusion::from_predictions(self.scores, self.labels, self.threshold)
    }

    pub fn roc_auc(&self) -> Result<f64> {
        roc_auc(self.scores, self.labels)
    }

    pub fn accuracy(&self) -> f64 {
        self.confusion().accuracy()
    }

    pub fn f1(&self) -> f64 {
        self.confusion().f1()
    }

    pub fn mcc(&self) -> f64 {
        self.confusion().mcc()
    }
}

/// Area under the ROC curve as the Mann-Whitney concordance probability;
/// tied positive/negative pairs earn half credit.
///
/// Computed from mid-ranks in `O(n log n)`.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClassLabels("scored".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of (doubled) mid-ranks of the positives keeps everything integral.
    let mut pos_rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share the midrank (i+j+2)/2
        let mid2 = (i + j + 2) as u128;
        let pos_in_tie = order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as u128;
        pos_rank_sum2 += mid2 * pos_in_tie;
        i = j + 1;
    }
    let (p, n) = (n_pos as u128, n_neg as u128);
    // U = R+ - p(p+1)/2, doubled on both sides
    let u2 = pos_rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * n) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    /// Counts with predictions `score >= threshold` treated as positive.
    pub fn from_predictions(scores: &[f64], labels: &[u8], threshold: f64) -> Self {
        let mut c = Self::default();
        for (&s, &l) in scores.iter().zip(labels) {
            match (s >= threshold, l == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }

    pub fn mcc(&self) -> f64 {
        let (tp, fp, tn, fn_) = (
            self.tp as f64,
            self.fp as f64,
            self.tn as f64,
            self.fn_ as f64,
        );
        let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            ((tp * tn - fp * fn_) / denom).clamp(-1.0, 1.0)
        }
    }
}
