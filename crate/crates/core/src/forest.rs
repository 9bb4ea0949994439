//! From-scratch random forest classifier with deterministic seeding, k-fold
//! cross-validation, and a flat-file model format.
//!
//! Trees are grown on bootstrap resamples; at every node `ceil(sqrt(d))`
//! candidate features are sampled and the best Gini-impurity-decrease
//! threshold split is taken, with thresholds at midpoints between
//! consecutive distinct feature values. Tree `i` draws from an RNG seeded
//! `seed ^ i`, so results are independent of how tree growth is scheduled.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const MODEL_MAGIC: &str = "ltmtex forest model v1";

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("training requires at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("training requires at least 2 distinct classes, got {0}")]
    TooFewClasses(usize),
    #[error("feature/label counts differ: {features} features vs {labels} labels")]
    SampleCountMismatch { features: usize, labels: usize },
    #[error("sample {index} has {found} features, expected {expected}")]
    RaggedFeatures {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("feature dimension mismatch: model expects {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("n_trees must be at least 1")]
    NoTrees,
    #[error("min_samples_split must be at least 2, got {0}")]
    BadMinSamplesSplit(usize),
    #[error("cross-validation needs folds in 2..=samples, got {folds} folds for {samples} samples")]
    BadFoldCount { folds: usize, samples: usize },
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("model file {path}, line {line}: {reason}")]
    ModelFormat {
        path: String,
        line: usize,
        reason: String,
    },
}

/// Training hyper-parameters. `features_per_split` is fixed at
/// `ceil(sqrt(d))`; everything random derives from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_min_samples_split")]
    pub min_samples_split: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_n_trees() -> usize {
    10
}

fn default_min_samples_split() -> usize {
    2
}

fn default_seed() -> u64 {
    42
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: default_n_trees(),
            min_samples_split: default_min_samples_split(),
            max_depth: None,
            seed: default_seed(),
        }
    }
}

impl ForestParams {
    fn validate(&self) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::NoTrees);
        }
        if self.min_samples_split < 2 {
            return Err(ForestError::BadMinSamplesSplit(self.min_samples_split));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<u64>,
    },
}

/// One axis-aligned decision tree stored as a flat node arena (root at 0).
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// Index of the majority class at the leaf `x` routes to; ties go to the
    /// lowest class index.
    fn predict_class_index(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { counts } => {
                    let mut best = 0;
                    for (i, &c) in counts.iter().enumerate() {
                        if c > counts[best] {
                            best = i;
                        }
                    }
                    return best;
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// A trained ensemble. Predictions are majority votes over the trees, with
/// ties broken towards the lowest class label.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<DecisionTree>,
    class_labels: Vec<usize>,
    n_features: usize,
    params: ForestParams,
}

/// Per-fold accuracies plus the pooled confusion matrix
/// (`confusion[true][predicted]`, classes in `class_labels` order).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub confusion: Vec<Vec<u64>>,
    pub class_labels: Vec<usize>,
}

impl EvalReport {
    fn new(fold_accuracies: Vec<f64>, confusion: Vec<Vec<u64>>, class_labels: Vec<usize>) -> Self {
        let n = fold_accuracies.len() as f64;
        let mean = fold_accuracies.iter().sum::<f64>() / n;
        let var = fold_accuracies
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        Self {
            fold_accuracies,
            mean,
            std: var.sqrt(),
            confusion,
            class_labels,
        }
    }
}

fn validate_samples(features: &[Vec<f64>], labels: &[usize]) -> Result<usize, ForestError> {
    if features.len() != labels.len() {
        return Err(ForestError::SampleCountMismatch {
            features: features.len(),
            labels: labels.len(),
        });
    }
    if features.len() < 2 {
        return Err(ForestError::TooFewSamples(features.len()));
    }
    let expected = features[0].len();
    for (index, row) in features.iter().enumerate() {
        if row.len() != expected {
            return Err(ForestError::RaggedFeatures {
                index,
                expected,
                found: row.len(),
            });
        }
    }
    Ok(expected)
}

fn sorted_distinct_labels(labels: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = labels.to_vec();
    out.sort_unstable();
    out.dedup();
    out
}

fn gini(counts: &[u64], total: f64) -> f64 {
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = c as f64 / total;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

struct TreeBuilder<'a> {
    features: &'a [Vec<f64>],
    class_indices: &'a [usize],
    n_classes: usize,
    n_features: usize,
    candidates_per_split: usize,
    min_samples_split: usize,
    max_depth: Option<usize>,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl<'a> TreeBuilder<'a> {
    /// Partial Fisher-Yates draw of `count` distinct feature indices.
    fn sample_features(&mut self) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..self.n_features).collect();
        for i in 0..self.candidates_per_split.min(self.n_features) {
            let j = self.rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(self.candidates_per_split.min(self.n_features));
        pool
    }

    fn class_counts(&self, indices: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes];
        for &i in indices {
            counts[self.class_indices[i]] += 1;
        }
        counts
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&indices);
        let n = indices.len();
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.max_depth.is_some_and(|d| depth >= d);
        if pure || n < self.min_samples_split || depth_capped {
            return self.push_leaf(counts);
        }

        let parent_gini = gini(&counts, n as f64);
        let candidates = self.sample_features();
        let mut best: Option<(f64, usize, f64)> = None; // (decrease, feature, threshold)

        let mut order: Vec<usize> = Vec::with_capacity(n);
        for &feature in &candidates {
            order.clear();
            order.extend_from_slice(&indices);
            order.sort_unstable_by(|&a, &b| {
                self.features[a][feature].total_cmp(&self.features[b][feature])
            });

            // sweep split positions between groups of equal feature values
            let mut left_counts = vec![0u64; self.n_classes];
            let mut left_n = 0usize;
            let mut pos = 0usize;
            while pos < n {
                let value = self.features[order[pos]][feature];
                let mut end = pos;
                while end < n && self.features[order[end]][feature] == value {
                    left_counts[self.class_indices[order[end]]] += 1;
                    left_n += 1;
                    end += 1;
                }
                if end == n {
                    break;
                }
                let next_value = self.features[order[end]][feature];
                let right_n = n - left_n;
                let mut right_counts = counts.clone();
                for (r, l) in right_counts.iter_mut().zip(&left_counts) {
                    *r -= l;
                }
                let weighted = (left_n as f64 / n as f64) * gini(&left_counts, left_n as f64)
                    + (right_n as f64 / n as f64) * gini(&right_counts, right_n as f64);
                let decrease = parent_gini - weighted;
                if decrease > 0.0 && best.is_none_or(|(d, _, _)| decrease > d) {
                    best = Some((decrease, feature, (value + next_value) / 2.0));
                }
                pos = end;
            }
        }

        let Some((_, feature, threshold)) = best else {
            return self.push_leaf(counts);
        };

        let (left_set, right_set): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| self.features[i][feature] <= threshold);
        debug_assert!(!left_set.is_empty() && !right_set.is_empty());

        let at = self.nodes.len();
        self.nodes.push(Node::Split {
            feature,
            threshold,
            left: 0,
            right: 0,
        });
        let left = self.grow(left_set, depth + 1);
        let right = self.grow(right_set, depth + 1);
        if let Node::Split {
            left: l, right: r, ..
        } = &mut self.nodes[at]
        {
            *l = left;
            *r = right;
        }
        at
    }

    fn push_leaf(&mut self, counts: Vec<u64>) -> usize {
        self.nodes.push(Node::Leaf { counts });
        self.nodes.len() - 1
    }
}

/// Trains a forest of `params.n_trees` trees. Tree `i` grows on a bootstrap
/// resample drawn from `ChaCha8(seed ^ i)`, so training is reproducible and
/// order-independent.
pub fn train(
    features: &[Vec<f64>],
    labels: &[usize],
    params: &ForestParams,
) -> Result<ForestModel, ForestError> {
    params.validate()?;
    let n_features = validate_samples(features, labels)?;
    let class_labels = sorted_distinct_labels(labels);
    if class_labels.len() < 2 {
        return Err(ForestError::TooFewClasses(class_labels.len()));
    }
    let class_indices: Vec<usize> = labels
        .iter()
        .map(|l| class_labels.binary_search(l).expect("label present"))
        .collect();
    let candidates_per_split = (n_features as f64).sqrt().ceil() as usize;

    let n = features.len();
    let trees = (0..params.n_trees)
        .map(|tree_index| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ tree_index as u64);
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut builder = TreeBuilder {
                features,
                class_indices: &class_indices,
                n_classes: class_labels.len(),
                n_features,
                candidates_per_split,
                min_samples_split: params.min_samples_split,
                max_depth: params.max_depth,
                rng,
                nodes: Vec::new(),
            };
            let root = builder.grow(bootstrap, 0);
            debug_assert_eq!(root, 0);
            DecisionTree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(ForestModel {
        trees,
        class_labels,
        n_features,
        params: *params,
    })
}

impl ForestModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_labels(&self) -> &[usize] {
        &self.class_labels
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Majority vote over the trees; ties break to the lowest label.
    pub fn predict(&self, x: &[f64]) -> Result<usize, ForestError> {
        if x.len() != self.n_features {
            return Err(ForestError::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let mut votes = vec![0usize; self.class_labels.len()];
        for tree in &self.trees {
            votes[tree.predict_class_index(x)] += 1;
        }
        let mut best = 0;
        for (i, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = i;
            }
        }
        Ok(self.class_labels[best])
    }

    // -- flat-file serialization ------------------------------------------

    pub fn to_model_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MODEL_MAGIC}");
        let _ = writeln!(out, "n_features {}", self.n_features);
        let labels: Vec<String> = self.class_labels.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(out, "classes {}", labels.join(" "));
        let _ = writeln!(out, "n_trees {}", self.params.n_trees);
        let _ = writeln!(out, "min_samples_split {}", self.params.min_samples_split);
        match self.params.max_depth {
            Some(d) => {
                let _ = writeln!(out, "max_depth {d}");
            }
            None => {
                let _ = writeln!(out, "max_depth none");
            }
        }
        let _ = writeln!(out, "seed {}", self.params.seed);
        for (i, tree) in self.trees.iter().enumerate() {
            let _ = writeln!(out, "tree {i} {}", tree.nodes.len());
            for node in &tree.nodes {
                match node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        let _ = writeln!(out, "split {feature} {threshold} {left} {right}");
                    }
                    Node::Leaf { counts } => {
                        let text: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
                        let _ = writeln!(out, "leaf {}", text.join(" "));
                    }
                }
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), ForestError> {
        fs::write(path, self.to_model_string()).map_err(|source| ForestError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn from_model_string(text: &str, path: &str) -> Result<Self, ForestError> {
        let mut lines = text.lines().enumerate();
        let err = |line: usize, reason: String| ForestError::ModelFormat {
            path: path.to_string(),
            line: line + 1,
            reason,
        };
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| ForestError::ModelFormat {
                    path: path.to_string(),
                    line: 0,
                    reason: format!("unexpected end of file, expected {what}"),
                })
        };

        let (line, magic) = next("header")?;
        if magic != MODEL_MAGIC {
            return Err(err(line, format!("unrecognized header {magic:?}")));
        }

        fn field<'s>(
            got: (usize, &'s str),
            key: &str,
            path: &str,
        ) -> Result<(usize, &'s str), ForestError> {
            let (line, text) = got;
            text.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(|rest| (line, rest))
                .ok_or_else(|| ForestError::ModelFormat {
                    path: path.to_string(),
                    line: line + 1,
                    reason: format!("expected {key:?} line, got {text:?}"),
                })
        }

        let (line, text) = field(next("n_features")?, "n_features", path)?;
        let n_features: usize = text
            .parse()
            .map_err(|_| err(line, format!("bad n_features {text:?}")))?;

        let (line, text) = field(next("classes")?, "classes", path)?;
        let class_labels: Vec<usize> = text
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| err(line, format!("bad class list {text:?}")))?;

        let (line, text) = field(next("n_trees")?, "n_trees", path)?;
        let n_trees: usize = text
            .parse()
            .map_err(|_| err(line, format!("bad n_trees {text:?}")))?;
        let (line, text) = field(next("min_samples_split")?, "min_samples_split", path)?;
        let min_samples_split: usize = text
            .parse()
            .map_err(|_| err(line, format!("bad min_samples_split {text:?}")))?;
        let (line, text) = field(next("max_depth")?, "max_depth", path)?;
        let max_depth = if text == "none" {
            None
        } else {
            Some(
                text.parse::<usize>()
                    .map_err(|_| err(line, format!("bad max_depth {text:?}")))?,
            )
        };
        let (line, text) = field(next("seed")?, "seed", path)?;
        let seed: u64 = text
            .parse()
            .map_err(|_| err(line, format!("bad seed {text:?}")))?;

        let mut trees = Vec::with_capacity(n_trees);
        for expected_index in 0..n_trees {
            let (line, text) = next("tree header")?;
            let mut parts = text.split_whitespace();
            if parts.next() != Some("tree") {
                return Err(err(line, format!("expected tree header, got {text:?}")));
            }
            let index: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err(line, "bad tree index".to_string()))?;
            if index != expected_index {
                return Err(err(line, format!("expected tree {expected_index}, got {index}")));
            }
            let node_count: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| err(line, "bad node count".to_string()))?;
            let mut nodes = Vec::with_capacity(node_count);
            for _ in 0..node_count {
                let (line, text) = next("node record")?;
                let mut parts = text.split_whitespace();
                match parts.next() {
                    Some("split") => {
                        let mut field = |what: &str| -> Result<&str, ForestError> {
                            parts.next().ok_or_else(|| err(line, format!("missing {what}")))
                        };
                        let feature: usize = field("feature")?
                            .parse()
                            .map_err(|_| err(line, "bad feature index".to_string()))?;
                        let threshold: f64 = field("threshold")?
                            .parse()
                            .map_err(|_| err(line, "bad threshold".to_string()))?;
                        let left: usize = field("left")?
                            .parse()
                            .map_err(|_| err(line, "bad left offset".to_string()))?;
                        let right: usize = field("right")?
                            .parse()
                            .map_err(|_| err(line, "bad right offset".to_string()))?;
                        if feature >= n_features || left >= node_count || right >= node_count {
                            return Err(err(line, "node record out of bounds".to_string()));
                        }
                        nodes.push(Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        });
                    }
                    Some("leaf") => {
                        let counts: Vec<u64> = parts
                            .map(|t| t.parse::<u64>())
                            .collect::<Result<_, _>>()
                            .map_err(|_| err(line, "bad leaf counts".to_string()))?;
                        if counts.len() != class_labels.len() {
                            return Err(err(line, "leaf count arity mismatch".to_string()));
                        }
                        nodes.push(Node::Leaf { counts });
                    }
                    _ => return Err(err(line, format!("unknown node record {text:?}"))),
                }
            }
            trees.push(DecisionTree { nodes });
        }

        Ok(ForestModel {
            trees,
            class_labels,
            n_features,
            params: ForestParams {
                n_trees,
                min_samples_split,
                max_depth,
                seed,
            },
        })
    }

    pub fn load(path: &Path) -> Result<Self, ForestError> {
        let text = fs::read_to_string(path).map_err(|source| ForestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_model_string(&text, &path.display().to_string())
    }
}

/// Assigns each sample to a fold. Indices are grouped by class, each group
/// is shuffled once with the protocol seed, and the concatenated list is
/// dealt round-robin, the deal position carrying over between classes. Fold
/// sizes therefore differ by at most one and every class spreads across
/// folds as evenly as its size allows.
fn stratified_folds(
    labels: &[usize],
    class_labels: &[usize],
    folds: usize,
    seed: u64,
) -> Vec<usize> {
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; n];
    let mut dealt = 0usize;
    for &class in class_labels {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        for i in (1..members.len()).rev() {
            let j = rng.gen_range(0..=i);
            members.swap(i, j);
        }
        for idx in members {
            fold_of[idx] = dealt % folds;
            dealt += 1;
        }
    }
    fold_of
}

/// Stratified k-fold cross-validation.
///
/// Sample indices are grouped by class, each group is shuffled once with the
/// protocol seed, and the concatenated list is dealt round-robin into folds,
/// so fold sizes differ by at most one and every class spreads across folds.
pub fn cross_validate(
    features: &[Vec<f64>],
    labels: &[usize],
    params: &ForestParams,
    folds: usize,
) -> Result<EvalReport, ForestError> {
    params.validate()?;
    validate_samples(features, labels)?;
    let n = features.len();
    if folds < 2 || folds > n {
        return Err(ForestError::BadFoldCount { folds, samples: n });
    }
    let class_labels = sorted_distinct_labels(labels);
    if class_labels.len() < 2 {
        return Err(ForestError::TooFewClasses(class_labels.len()));
    }

    let fold_of = stratified_folds(labels, &class_labels, folds, params.seed);

    let mut fold_accuracies = Vec::with_capacity(folds);
    let mut confusion = vec![vec![0u64; class_labels.len()]; class_labels.len()];
    for fold in 0..folds {
        let mut train_f = Vec::new();
        let mut train_l = Vec::new();
        let mut test_idx = Vec::new();
        for i in 0..n {
            if fold_of[i] == fold {
                test_idx.push(i);
            } else {
                train_f.push(features[i].clone());
                train_l.push(labels[i]);
            }
        }
        let model = train(&train_f, &train_l, params)?;
        let mut correct = 0u64;
        for &i in &test_idx {
            let predicted = model.predict(&features[i])?;
            let t = class_labels.binary_search(&labels[i]).expect("label present");
            let p = class_labels.binary_search(&predicted).expect("predicted label known");
            confusion[t][p] += 1;
            if predicted == labels[i] {
                correct += 1;
            }
        }
        fold_accuracies.push(correct as f64 / test_idx.len() as f64);
    }

    Ok(EvalReport::new(fold_accuracies, confusion, class_labels))
}

/// Trains on the train split and evaluates once on the test split; the
/// report has a single "fold" and zero spread.
pub fn evaluate_split(
    train_features: &[Vec<f64>],
    train_labels: &[usize],
    test_features: &[Vec<f64>],
    test_labels: &[usize],
    params: &ForestParams,
) -> Result<EvalReport, ForestError> {
    if test_features.is_empty() {
        return Err(ForestError::EmptyTestSet);
    }
    if test_features.len() != test_labels.len() {
        return Err(ForestError::SampleCountMismatch {
            features: test_features.len(),
            labels: test_labels.len(),
        });
    }
    let model = train(train_features, train_labels, params)?;

    let mut class_labels = sorted_distinct_labels(train_labels);
    for l in test_labels {
        if class_labels.binary_search(l).is_err() {
            class_labels.push(*l);
        }
    }
    class_labels.sort_unstable();

    let mut confusion = vec![vec![0u64; class_labels.len()]; class_labels.len()];
    let mut correct = 0u64;
    for (x, &label) in test_features.iter().zip(test_labels) {
        let predicted = model.predict(x)?;
        let t = class_labels.binary_search(&label).expect("label listed");
        let p = class_labels.binary_search(&predicted).expect("label listed");
        confusion[t][p] += 1;
        if predicted == label {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / test_features.len() as f64;
    Ok(EvalReport::new(vec![accuracy], confusion, class_labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two classes with disjoint single-feature supports; the second feature
    /// is constant so it can never be split on.
    fn separable(per_class: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..per_class {
            features.push(vec![(i % 10) as f64, 1.0]);
            labels.push(0);
            features.push(vec![20.0 + (i % 10) as f64, 1.0]);
            labels.push(1);
        }
        (features, labels)
    }

    #[test]
    fn separable_training_accuracy_is_one() {
        let (features, labels) = separable(10);
        let model = train(&features, &labels, &ForestParams::default()).unwrap();
        for (x, &l) in features.iter().zip(&labels) {
            assert_eq!(model.predict(x).unwrap(), l);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (features, labels) = separable(10);
        let params = ForestParams {
            seed: 7,
            ..Default::default()
        };
        let a = train(&features, &labels, &params).unwrap();
        let b = train(&features, &labels, &params).unwrap();
        assert_eq!(a, b);
        let probe = vec![4.5, 1.0];
        assert_eq!(a.predict(&probe).unwrap(), b.predict(&probe).unwrap());
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(matches!(
            train(&[vec![1.0]], &[0], &ForestParams::default()),
            Err(ForestError::TooFewSamples(1))
        ));
        assert!(matches!(
            train(
                &[vec![1.0], vec![2.0]],
                &[0, 0],
                &ForestParams::default()
            ),
            Err(ForestError::TooFewClasses(1))
        ));
        assert!(matches!(
            train(
                &[vec![1.0], vec![2.0, 3.0]],
                &[0, 1],
                &ForestParams::default()
            ),
            Err(ForestError::RaggedFeatures { index: 1, .. })
        ));
        let params = ForestParams {
            min_samples_split: 1,
            ..Default::default()
        };
        assert!(matches!(
            train(&[vec![1.0], vec![2.0]], &[0, 1], &params),
            Err(ForestError::BadMinSamplesSplit(1))
        ));
    }

    #[test]
    fn predict_checks_dimension() {
        let (features, labels) = separable(10);
        let model = train(&features, &labels, &ForestParams::default()).unwrap();
        assert!(matches!(
            model.predict(&[1.0, 2.0, 3.0]),
            Err(ForestError::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn vote_tie_breaks_to_lowest_label() {
        // two stumps with opposing pure leaves, built by hand
        let stump = |low_class: usize| DecisionTree {
            nodes: vec![
                Node::Split {
                    feature: 0,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                Node::Leaf {
                    counts: if low_class == 0 { vec![5, 0] } else { vec![0, 5] },
                },
                Node::Leaf {
                    counts: if low_class == 0 { vec![0, 5] } else { vec![5, 0] },
                },
            ],
        };
        let model = ForestModel {
            trees: vec![stump(0), stump(1)],
            class_labels: vec![3, 9],
            n_features: 1,
            params: ForestParams {
                n_trees: 2,
                ..Default::default()
            },
        };
        // trees disagree on every input, so the vote ties 1:1
        assert_eq!(model.predict(&[0.0]).unwrap(), 3);
        assert_eq!(model.predict(&[1.0]).unwrap(), 3);
    }

    #[test]
    fn single_tree_pure_leaf_prediction() {
        let model = ForestModel {
            trees: vec![DecisionTree {
                nodes: vec![
                    Node::Split {
                        feature: 0,
                        threshold: 10.0,
                        left: 1,
                        right: 2,
                    },
                    Node::Leaf { counts: vec![7, 0] },
                    Node::Leaf { counts: vec![0, 4] },
                ],
            }],
            class_labels: vec![0, 1],
            n_features: 1,
            params: ForestParams {
                n_trees: 1,
                ..Default::default()
            },
        };
        assert_eq!(model.predict(&[3.0]).unwrap(), 0);
        assert_eq!(model.predict(&[30.0]).unwrap(), 1);
    }

    #[test]
    fn cross_validate_separable_is_perfect() {
        let (features, labels) = separable(20);
        let report = cross_validate(&features, &labels, &ForestParams::default(), 10).unwrap();
        assert_eq!(report.fold_accuracies.len(), 10);
        assert_eq!(report.mean, 1.0);
        assert_eq!(report.std, 0.0);
        // confusion row sums are per-class test counts
        assert_eq!(report.confusion[0].iter().sum::<u64>(), 20);
        assert_eq!(report.confusion[1].iter().sum::<u64>(), 20);
    }

    #[test]
    fn cross_validate_fold_shape() {
        let (features, labels) = separable(13); // 26 samples
        let report = cross_validate(&features, &labels, &ForestParams::default(), 4).unwrap();
        let total: u64 = report.confusion.iter().flatten().sum();
        assert_eq!(total, 26);
        assert!(matches!(
            cross_validate(&features, &labels, &ForestParams::default(), 27),
            Err(ForestError::BadFoldCount { .. })
        ));
        assert!(matches!(
            cross_validate(&features, &labels, &ForestParams::default(), 1),
            Err(ForestError::BadFoldCount { .. })
        ));
    }

    #[test]
    fn fold_assignment_is_balanced_and_exhaustive() {
        // 3 classes with uneven sizes: 11 + 7 + 5 = 23 samples
        let mut labels = vec![0; 11];
        labels.extend(vec![1; 7]);
        labels.extend(vec![2; 5]);
        for folds in [2usize, 4, 5, 10] {
            let fold_of = stratified_folds(&labels, &[0, 1, 2], folds, 9);
            // every sample lands in exactly one fold (total recount)
            assert_eq!(fold_of.len(), labels.len());
            let mut sizes = vec![0usize; folds];
            for &f in &fold_of {
                assert!(f < folds);
                sizes[f] += 1;
            }
            let (min, max) = (
                *sizes.iter().min().unwrap(),
                *sizes.iter().max().unwrap(),
            );
            assert!(max - min <= 1, "folds={folds}: sizes {sizes:?}");
            // per-class spread is as even as the class size allows
            for class in 0..3 {
                let mut per = vec![0usize; folds];
                for (i, &f) in fold_of.iter().enumerate() {
                    if labels[i] == class {
                        per[f] += 1;
                    }
                }
                let (min, max) = (
                    *per.iter().min().unwrap(),
                    *per.iter().max().unwrap(),
                );
                assert!(max - min <= 1, "class {class}, folds={folds}: {per:?}");
            }
        }
    }

    #[test]
    fn cross_validate_is_deterministic() {
        let (features, labels) = separable(12);
        let params = ForestParams {
            seed: 11,
            ..Default::default()
        };
        let a = cross_validate(&features, &labels, &params, 5).unwrap();
        let b = cross_validate(&features, &labels, &params, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluate_split_basics() {
        let (features, labels) = separable(10);
        let report =
            evaluate_split(&features, &labels, &features, &labels, &ForestParams::default())
                .unwrap();
        assert_eq!(report.fold_accuracies, vec![1.0]);
        assert_eq!(report.std, 0.0);
        assert!(matches!(
            evaluate_split(&features, &labels, &[], &[], &ForestParams::default()),
            Err(ForestError::EmptyTestSet)
        ));
    }

    #[test]
    fn model_round_trips_through_flat_file() {
        let (features, labels) = separable(10);
        let params = ForestParams {
            seed: 3,
            max_depth: Some(4),
            ..Default::default()
        };
        let model = train(&features, &labels, &params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        model.save(&path).unwrap();
        let loaded = ForestModel::load(&path).unwrap();
        assert_eq!(loaded, model);
        for x in &features {
            assert_eq!(loaded.predict(x).unwrap(), model.predict(x).unwrap());
        }
    }

    #[test]
    fn model_load_rejects_bad_header() {
        let err = ForestModel::from_model_string("not a model\n", "mem").unwrap_err();
        assert!(matches!(err, ForestError::ModelFormat { line: 1, .. }));
    }

    #[test]
    fn leaf_distributions_sum_to_bootstrap_mass() {
        let (features, labels) = separable(10);
        let model = train(&features, &labels, &ForestParams::default()).unwrap();
        for tree in model.trees() {
            let total: u64 = tree
                .nodes
                .iter()
                .filter_map(|n| match n {
                    Node::Leaf { counts } => Some(counts.iter().sum::<u64>()),
                    _ => None,
                })
                .sum();
            assert_eq!(total, features.len() as u64);
        }
    }
}
