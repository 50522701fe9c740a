//! Label-prediction evaluation: seeded random splits, a one-vs-rest logistic
//! regression classifier, and Micro/Macro-F1 scoring.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::EmbeddingMatrix;
use crate::error::{check_dims, Error, Result};
use crate::graph::{LabelMap, NodeId};

/// Training ratios of the standard protocol.
pub const PROTOCOL_RATIOS: [f64; 5] = [0.4, 0.5, 0.6, 0.7, 0.8];
pub const DEFAULT_REPEATS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_ratio: f64,
    pub repeat_count: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_ratio: f64, seed: u64) -> Self {
        SplitSpec {
            train_ratio,
            repeat_count: DEFAULT_REPEATS,
            seed,
        }
    }

    /// One spec per protocol ratio, sharing `seed`.
    pub fn protocol(seed: u64) -> Vec<SplitSpec> {
        PROTOCOL_RATIOS
            .iter()
            .map(|&r| SplitSpec::new(r, seed))
            .collect()
    }
}

/// Sorted train and test node sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<NodeId>,
    pub test: Vec<NodeId>,
}

fn repeat_seed(seed: u64, repeat_index: usize) -> u64 {
    // splitmix64 finalizer over the pair.
    let mut z = seed
        ^ (repeat_index as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform (non-stratified) random partition of `labeled` into
/// `round(ratio * len)` training nodes and the rest.
pub fn make_split(labeled: &[NodeId], spec: &SplitSpec, repeat_index: usize) -> Result<Split> {
    if !(spec.train_ratio > 0.0 && spec.train_ratio < 1.0) {
        return Err(Error::invalid(format!(
            "train ratio must be in (0, 1), got {}",
            spec.train_ratio
        )));
    }
    let m = labeled.len();
    let train_count = (spec.train_ratio * m as f64).round() as usize;
    if train_count == 0 || train_count >= m {
        return Err(Error::invalid(format!(
            "ratio {} over {m} labeled nodes leaves an empty side",
            spec.train_ratio
        )));
    }
    let mut order: Vec<NodeId> = labeled.to_vec();
    order.sort_unstable();
    let mut rng = ChaCha8Rng::seed_from_u64(repeat_seed(spec.seed, repeat_index));
    order.shuffle(&mut rng);
    let mut train = order[..train_count].to_vec();
    let mut test = order[train_count..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Hyperparameters of the one-vs-rest logistic regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            epochs: 300,
            learning_rate: 0.1,
            l2: 1e-4,
        }
    }
}

/// Fitted one-vs-rest model over standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    /// Class ids in ascending order; row `c` of `weights` scores `classes[c]`.
    classes: Vec<usize>,
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fits a one-vs-rest logistic regression with full-batch gradient descent.
///
/// Features are standardized with the training mean and standard deviation
/// (constant features keep scale 1). Weights start at zero and the bias is
/// not penalized.
pub fn fit_classifier(
    features: &EmbeddingMatrix,
    labels: &[usize],
    config: &ClassifierConfig,
) -> Result<Classifier> {
    check_dims(features.rows(), labels.len())?;
    let classes: Vec<usize> = labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(Error::invalid("training set needs at least two classes"));
    }
    let (m, dim) = (features.rows(), features.dim());
    let mut mean = vec![0.0; dim];
    for k in 0..m {
        for (acc, v) in mean.iter_mut().zip(features.row(k)) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m as f64);
    let mut var = vec![0.0; dim];
    for k in 0..m {
        for ((acc, v), mu) in var.iter_mut().zip(features.row(k)).zip(&mean) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|v| {
            let sd = (v / m as f64).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let x = standardize(features, &mean, &scale);

    let fits: Vec<(Vec<f64>, f64)> = classes
        .par_iter()
        .map(|&class| {
            let target: Vec<f64> = labels
                .iter()
                .map(|&l| f64::from(u8::from(l == class)))
                .collect();
            fit_binary(&x, dim, &target, config)
        })
        .collect();
    let (weights, bias) = fits.into_iter().unzip();
    Ok(Classifier {
        classes,
        mean,
        scale,
        weights,
        bias,
    })
}

fn standardize(features: &EmbeddingMatrix, mean: &[f64], scale: &[f64]) -> Vec<f64> {
    let mut x = features.as_slice().to_vec();
    for row in x.chunks_exact_mut(features.dim()) {
        for ((v, mu), s) in row.iter_mut().zip(mean).zip(scale) {
            *v = (*v - mu) / s;
        }
    }
    x
}

fn fit_binary(x: &[f64], dim: usize, target: &[f64], config: &ClassifierConfig) -> (Vec<f64>, f64) {
    let m = target.len() as f64;
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut grad = vec![0.0; dim];
    for _ in 0..config.epochs {
        grad.fill(0.0);
        let mut grad_b = 0.0;
        for (row, &y) in x.chunks_exact(dim).zip(target) {
            let z = b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
            let residual = sigmoid(z) - y;
            grad_b += residual;
            for (g, a) in grad.iter_mut().zip(row) {
                *g += residual * a;
            }
        }
        for (wj, gj) in w.iter_mut().zip(&grad) {
            *wj -= config.learning_rate * (gj / m + config.l2 * *wj);
        }
        b -= config.learning_rate * grad_b / m;
    }
    (w, b)
}

impl Classifier {
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Per-row decision scores, one column per entry of [`Classifier::classes`].
    pub fn decision_scores(&self, features: &EmbeddingMatrix) -> Result<Vec<Vec<f64>>> {
        check_dims(self.mean.len(), features.dim())?;
        let x = standardize(features, &self.mean, &self.scale);
        Ok(x.chunks_exact(features.dim())
            .map(|row| {
                self.weights
                    .iter()
                    .zip(&self.bias)
                    .map(|(w, b)| b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>())
                    .collect()
            })
            .collect())
    }

    /// Arg-max class per row; ties go to the lowest class id.
    pub fn predict(&self, features: &EmbeddingMatrix) -> Result<Vec<usize>> {
        Ok(self
            .decision_scores(features)?
            .into_iter()
            .map(|scores| {
                let mut best = 0;
                for (c, &s) in scores.iter().enumerate() {
                    if s > scores[best] {
                        best = c;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}

/// F1 over pooled true/false positives and false negatives.
pub fn micro_f1(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_lengths(truth, pred)?;
    let tp = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
    let wrong = truth.len() - tp;
    // Single-label: every wrong prediction is one FP and one FN.
    Ok((2 * tp) as f64 / (2 * tp + 2 * wrong) as f64)
}

/// Unweighted mean of per-class F1 over the classes present in `truth`.
pub fn macro_f1(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_lengths(truth, pred)?;
    let classes: BTreeSet<usize> = truth.iter().copied().collect();
    let total: f64 = classes
        .iter()
        .map(|&c| {
            let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
            for (&t, &p) in truth.iter().zip(pred) {
                match (t == c, p == c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fnn += 1,
                    (false, false) => {}
                }
            }
            let denom = 2 * tp + fp + fnn;
            if denom == 0 {
                0.0
            } else {
                (2 * tp) as f64 / denom as f64
            }
        })
        .sum();
    Ok(total / classes.len() as f64)
}

pub fn accuracy(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_lengths(truth, pred)?;
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
    Ok(correct as f64 / truth.len() as f64)
}

fn check_lengths(truth: &[usize], pred: &[usize]) -> Result<()> {
    check_dims(truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::invalid("cannot score empty label lists"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatScore {
    pub ratio: f64,
    pub repeat: usize,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioMean {
    pub ratio: f64,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<RepeatScore>,
    pub means: Vec<RatioMean>,
}

impl EvalReport {
    pub fn from_rows(rows: Vec<RepeatScore>) -> Self {
        let mut ratios: Vec<f64> = Vec::new();
        for r in &rows {
            if !ratios.contains(&r.ratio) {
                ratios.push(r.ratio);
            }
        }
        let means = ratios
            .into_iter()
            .map(|ratio| {
                let group: Vec<&RepeatScore> = rows.iter().filter(|r| r.ratio == ratio).collect();
                let n = group.len() as f64;
                RatioMean {
                    ratio,
                    micro_f1: group.iter().map(|r| r.micro_f1).sum::<f64>() / n,
                    macro_f1: group.iter().map(|r| r.macro_f1).sum::<f64>() / n,
                }
            })
            .collect();
        EvalReport { rows, means }
    }

    pub fn mean_for(&self, ratio: f64) -> Option<&RatioMean> {
        self.means.iter().find(|m| (m.ratio - ratio).abs() < 1e-12)
    }

    /// CSV `dataset,ratio,repeat,micro_f1,macro_f1`; each ratio's repeats are
    /// followed by a `mean` row.
    pub fn to_csv(&self, dataset: &str) -> String {
        let mut out = String::from("dataset,ratio,repeat,micro_f1,macro_f1\n");
        for mean in &self.means {
            for r in self.rows.iter().filter(|r| r.ratio == mean.ratio) {
                writeln!(
                    out,
                    "{dataset},{},{},{:.6},{:.6}",
                    r.ratio, r.repeat, r.micro_f1, r.macro_f1
                )
                .unwrap();
            }
            writeln!(
                out,
                "{dataset},{},mean,{:.6},{:.6}",
                mean.ratio, mean.micro_f1, mean.macro_f1
            )
            .unwrap();
        }
        out
    }
}

fn select_rows(u: &EmbeddingMatrix, nodes: &[NodeId]) -> EmbeddingMatrix {
    let mut data = Vec::with_capacity(nodes.len() * u.dim());
    for &k in nodes {
        data.extend_from_slice(u.row(k));
    }
    EmbeddingMatrix::from_flat(nodes.len(), u.dim(), data).unwrap()
}

/// Scores one (ratio, repeat) cell: split, fit, predict.
pub fn evaluate_repeat(
    labels: &LabelMap,
    u: &EmbeddingMatrix,
    spec: &SplitSpec,
    repeat: usize,
    config: &ClassifierConfig,
) -> Result<RepeatScore> {
    let labeled = labels.labeled_nodes();
    let split = make_split(&labeled, spec, repeat)?;
    let label_of = |nodes: &[NodeId]| -> Vec<usize> {
        nodes.iter().map(|&k| labels.label(k).unwrap()).collect()
    };
    let model = fit_classifier(
        &select_rows(u, &split.train),
        &label_of(&split.train),
        config,
    )?;
    let pred = model.predict(&select_rows(u, &split.test))?;
    let truth = label_of(&split.test);
    Ok(RepeatScore {
        ratio: spec.train_ratio,
        repeat,
        micro_f1: micro_f1(&truth, &pred)?,
        macro_f1: macro_f1(&truth, &pred)?,
    })
}

/// Runs every (ratio, repeat) cell; repeats are independent and run in
/// parallel.
pub fn run_protocol(
    labels: &LabelMap,
    u: &EmbeddingMatrix,
    specs: &[SplitSpec],
    config: &ClassifierConfig,
) -> Result<EvalReport> {
    check_dims(labels.node_count(), u.rows())?;
    let cells: Vec<(SplitSpec, usize)> = specs
        .iter()
        .flat_map(|s| (0..s.repeat_count).map(move |r| (*s, r)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|(spec, r)| evaluate_repeat(labels, u, spec, *r, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_rows(rows))
}
