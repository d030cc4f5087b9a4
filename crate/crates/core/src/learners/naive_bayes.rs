use serde::{Deserialize, Serialize};

/// Gaussian naive Bayes with per-class feature means and variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Indexed by class (0, 1).
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(x: &[Vec<f64>], y: &[u8], var_floor: f64) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let mut counts = [0usize; 2];
        let mut means = [vec![0.0; d], vec![0.0; d]];
        for (row, &l) in x.iter().zip(y) {
            let c = usize::from(l);
            counts[c] += 1;
            for (m, v) in means[c].iter_mut().zip(row) {
                *m += v;
            }
        }
        for c in 0..2 {
            let n = counts[c].max(1) as f64;
            means[c].iter_mut().for_each(|m| *m /= n);
        }
        let mut variances = [vec![0.0; d], vec![0.0; d]];
        for (row, &l) in x.iter().zip(y) {
            let c = usize::from(l);
            for ((s, m), v) in variances[c].iter_mut().zip(&means[c]).zip(row) {
                *s += (v - m) * (v - m);
            }
        }
        for c in 0..2 {
            let n = counts[c].max(1) as f64;
            variances[c]
                .iter_mut()
                .for_each(|s| *s = (*s / n).max(var_floor));
        }
        let total = x.len() as f64;
        Self {
            priors: [counts[0] as f64 / total, counts[1] as f64 / total],
            means,
            variances,
        }
    }

    fn log_joint(&self, c: usize, row: &[f64]) -> f64 {
        let ll: f64 = row
            .iter()
            .zip(&self.means[c])
            .zip(&self.variances[c])
            .map(|((x, m), v)| {
                -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m) * (x - m) / v)
            })
            .sum();
        self.priors[c].ln() + ll
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let (l0, l1) = (self.log_joint(0, row), self.log_joint(1, row));
        crate::probe::sigmoid(l1 - l0)
    }
}
