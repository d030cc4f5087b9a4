//! CART classification trees (Gini impurity) and bagged forests of them.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        /// Fraction of positive training rows reaching the leaf.
        prob: f64,
        samples: usize,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Number of features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeaturesPerSplit {
    #[default]
    Sqrt,
    All,
    Count(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            FeaturesPerSplit::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            FeaturesPerSplit::All => n_features,
            FeaturesPerSplit::Count(c) => c.clamp(1, n_features),
        }
    }
}

impl Serialize for FeaturesPerSplit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            FeaturesPerSplit::Sqrt => s.serialize_str("sqrt"),
            FeaturesPerSplit::All => s.serialize_str("all"),
            FeaturesPerSplit::Count(c) => s.serialize_u64(*c as u64),
        }
    }
}

impl<'de> Deserialize<'de> for FeaturesPerSplit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(String),
            Count(usize),
        }
        match Repr::deserialize(d)? {
            Repr::Name(n) if n == "sqrt" => Ok(FeaturesPerSplit::Sqrt),
            Repr::Name(n) if n == "all" => Ok(FeaturesPerSplit::All),
            Repr::Name(n) => Err(serde::de::Error::custom(format!(
                "unknown features_per_split {n:?}, expected \"sqrt\", \"all\" or a count"
            ))),
            Repr::Count(0) => Err(serde::de::Error::custom("features_per_split must be >= 1")),
            Repr::Count(c) => Ok(FeaturesPerSplit::Count(c)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            features_per_split: FeaturesPerSplit::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    fn tree(&self) -> TreeConfig {
        TreeConfig {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf.max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

/// Sum of squared class counts over the node size; Gini impurity times the
/// node size equals `n - purity(pos, n)`.
fn purity(pos: usize, n: usize) -> f64 {
    let (p, q) = (pos as f64, (n - pos) as f64);
    (p * p + q * q) / n as f64
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    cut: usize,
    sorted: Vec<usize>,
}

impl DecisionTree {
    /// Wraps a hand-built node list; node 0 is the root.
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Grows a tree on the rows listed in `sample` (repeats allowed).
    /// With `feature_rng`, each split examines a random subset of
    /// `features_per_split` features; without it, all features.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[u8],
        sample: &[usize],
        cfg: &TreeConfig,
        mut feature_rng: Option<(&mut ChaCha8Rng, usize)>,
    ) -> Self {
        let n_features = x.first().map_or(0, Vec::len);
        let min_leaf = cfg.min_leaf.max(1);
        let mut nodes = vec![Node::Leaf {
            prob: 0.0,
            samples: 0,
        }];
        let mut stack = vec![(0usize, sample.to_vec(), 0usize)];
        let mut features: Vec<usize> = (0..n_features).collect();

        while let Some((id, rows, depth)) = stack.pop() {
            let n = rows.len();
            let pos = rows.iter().filter(|&&i| y[i] == 1).count();
            let leaf = Node::Leaf {
                prob: if n == 0 { 0.0 } else { pos as f64 / n as f64 },
                samples: n,
            };
            let stop = pos == 0
                || pos == n
                || n < 2 * min_leaf
                || cfg.max_depth.is_some_and(|d| depth >= d);
            let choice = if stop {
                None
            } else {
                let budget = match feature_rng.as_mut() {
                    Some((rng, m)) => {
                        features.shuffle(*rng);
                        *m
                    }
                    None => n_features,
                };
                Self::best_split(x, y, &rows, pos, &features, budget, min_leaf)
            };
            match choice {
                None => nodes[id] = leaf,
                Some(c) => {
                    let left = nodes.len();
                    nodes.push(leaf.clone());
                    nodes.push(leaf);
                    nodes[id] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right: left + 1,
                    };
                    let (l, r) = c.sorted.split_at(c.cut);
                    stack.push((left + 1, r.to_vec(), depth + 1));
                    stack.push((left, l.to_vec(), depth + 1));
                }
            }
        }
        Self { nodes }
    }

    /// Lowest weighted Gini split over the candidate features. Examines at
    /// least `budget` features and keeps going until some valid split
    /// appears. Thresholds are observed values, so a monotone transform of
    /// a feature yields the same partitions.
    fn best_split(
        x: &[Vec<f64>],
        y: &[u8],
        rows: &[usize],
        pos: usize,
        features: &[usize],
        budget: usize,
        min_leaf: usize,
    ) -> Option<SplitChoice> {
        let n = rows.len();
        let parent = n as f64 - purity(pos, n);
        let mut best: Option<(f64, SplitChoice)> = None;
        for (examined, &f) in features.iter().enumerate() {
            if examined >= budget && best.is_some() {
                break;
            }
            let mut sorted = rows.to_vec();
            sorted.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
            let mut left_pos = 0;
            let mut found: Option<(f64, usize)> = None;
            for k in 0..n - 1 {
                left_pos += usize::from(y[sorted[k]] == 1);
                let nl = k + 1;
                if nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                if x[sorted[k]][f] >= x[sorted[k + 1]][f] {
                    continue;
                }
                let impurity =
                    (nl as f64 - purity(left_pos, nl)) + ((n - nl) as f64 - purity(pos - left_pos, n - nl));
                if found.is_none_or(|(b, _)| impurity < b) {
                    found = Some((impurity, nl));
                }
            }
            if let Some((impurity, cut)) = found {
                if impurity < parent && best.as_ref().is_none_or(|(b, _)| impurity < *b) {
                    let threshold = x[sorted[cut - 1]][f];
                    best = Some((
                        impurity,
                        SplitChoice {
                            feature: f,
                            threshold,
                            cut,
                            sorted,
                        },
                    ));
                }
            }
        }
        best.map(|(_, c)| c)
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { prob, .. } => return *prob,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Tree `t` draws its bootstrap sample and feature subsets from a stream
    /// seeded by `(cfg.seed, t)`, so the forest does not depend on how the
    /// trees are scheduled across threads.
    pub fn fit(x: &[Vec<f64>], y: &[u8], cfg: &ForestConfig) -> Self {
        let n = x.len();
        let n_features = x.first().map_or(0, Vec::len);
        let m = cfg.features_per_split.resolve(n_features);
        let tree_cfg = cfg.tree();
        let trees = (0..cfg.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(cfg.seed, &[t as u64]);
                let sample: Vec<usize> = if cfg.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit(x, y, &sample, &tree_cfg, Some((&mut rng, m)))
            })
            .collect();
        Self { trees }
    }

    /// Fraction of trees whose leaf votes positive (leaf prob >= 0.5).
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict_proba(row) >= 0.5)
            .count();
        votes as f64 / self.trees.len() as f64
    }
}
