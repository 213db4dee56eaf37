//! Multinomial logistic regression, the provider of per-class confidence
//! vectors for every score in the crate.

use std::fmt::Write as _;

use rand_distr::{Distribution, Normal};

use crate::dataset::{ClassIndex, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::{rng_from, stable_hash};

/// Confidences are floored here and renormalized so that ratios of
/// confidences are always finite.
pub const CONFIDENCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub max_epochs: usize,
    /// Training stops once an accepted epoch improves the loss by less.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            l2_penalty: 1e-3,
            max_epochs: 300,
            tolerance: 1e-7,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.l2_penalty >= 0.0) {
            return Err(Error::invalid("l2_penalty must be non-negative"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Linear softmax classifier over `k` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelModel {
    /// k×d, row-major.
    weights: Vec<f64>,
    biases: Vec<f64>,
    dim: usize,
    classes: ClassIndex,
}

impl SoftLabelModel {
    pub fn new(
        weights: Vec<f64>,
        biases: Vec<f64>,
        dim: usize,
        classes: ClassIndex,
    ) -> Result<Self> {
        let k = classes.len();
        if k < 2 {
            return Err(Error::invalid(
                "a soft-label model needs at least 2 classes",
            ));
        }
        if dim == 0 || weights.len() != k * dim || biases.len() != k {
            return Err(Error::invalid(format!(
                "parameter shapes ({} weights, {} biases) do not match k={k}, d={dim}",
                weights.len(),
                biases.len()
            )));
        }
        Ok(Self {
            weights,
            biases,
            dim,
            classes,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &ClassIndex {
        &self.classes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input features"));
        }
        Ok(())
    }

    /// Affine class scores `W x + b`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.raw_scores(x))
    }

    fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.dim)
            .zip(&self.biases)
            .map(|(w, b)| b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
            .collect()
    }

    /// Floored softmax of the class scores.
    pub fn predict_confidences(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(confidences_from_scores(&self.raw_scores(x)))
    }

    /// Confidence vectors for several points (one row each).
    pub fn confidence_rows<'a, I>(&self, rows: I) -> Result<Vec<Vec<f64>>>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        rows.into_iter()
            .map(|x| self.predict_confidences(x))
            .collect()
    }

    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        let s = self.scores(x)?;
        Ok(argmax(&s))
    }

    pub fn accuracy(&self, ds: &LabeledDataset) -> Result<f64> {
        let mut correct = 0usize;
        for i in 0..ds.len() {
            let name = ds.label_name(i);
            if self.classes.name(self.predict_class(ds.row(i))?) == name {
                correct += 1;
            }
        }
        Ok(correct as f64 / ds.len() as f64)
    }

    /// Flat text form: one `name,index...,value` line per parameter.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "softmax,{},{}", self.num_classes(), self.dim);
        for (i, name) in self.classes.names().iter().enumerate() {
            let _ = writeln!(out, "class,{i},{name}");
        }
        for (i, row) in self.weights.chunks_exact(self.dim).enumerate() {
            for (j, w) in row.iter().enumerate() {
                let _ = writeln!(out, "weight,{i},{j},{w:?}");
            }
        }
        for (i, b) in self.biases.iter().enumerate() {
            let _ = writeln!(out, "bias,{i},{b:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::invalid(format!("model line {line}: {msg}"));
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, head) = lines.next().ok_or_else(|| bad(1, "empty model"))?;
        let head: Vec<&str> = head.split(',').collect();
        if head.len() != 3 || head[0] != "softmax" {
            return Err(bad(1, "expected `softmax,k,d` header"));
        }
        let k: usize = head[1].parse().map_err(|_| bad(1, "bad k"))?;
        let dim: usize = head[2].parse().map_err(|_| bad(1, "bad d"))?;
        let mut names = vec![None; k];
        let mut weights = vec![f64::NAN; k * dim];
        let mut biases = vec![f64::NAN; k];
        for (no, line) in lines {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.splitn(4, ',').collect();
            let idx = |s: &str, bound: usize| -> Result<usize> {
                s.parse::<usize>()
                    .ok()
                    .filter(|&i| i < bound)
                    .ok_or_else(|| bad(no, "index out of range"))
            };
            let val = |s: &str| -> Result<f64> { s.parse().map_err(|_| bad(no, "bad value")) };
            match (f[0], f.len()) {
                ("class", 3) => names[idx(f[1], k)?] = Some(f[2].to_string()),
                ("weight", 4) => weights[idx(f[1], k)? * dim + idx(f[2], dim)?] = val(f[3])?,
                ("bias", 3) => biases[idx(f[1], k)?] = val(f[2])?,
                _ => return Err(bad(no, "unrecognized line")),
            }
        }
        if weights.iter().chain(&biases).any(|v| v.is_nan()) || names.iter().any(Option::is_none) {
            return Err(Error::invalid("model file is missing parameters"));
        }
        let classes = ClassIndex::from_names(names.into_iter().flatten())?;
        Self::new(weights, biases, dim, classes)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Softmax with every entry floored at [`CONFIDENCE_FLOOR`], then renormalized.
pub fn confidences_from_scores(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut()
        .for_each(|v| *v = (*v / total).max(CONFIDENCE_FLOOR));
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// Mean cross-entropy plus `l2/2 ‖W‖²` and its gradient with respect to
/// weights (k×d, row-major) and biases.
pub fn softmax_objective(
    ds: &LabeledDataset,
    weights: &[f64],
    biases: &[f64],
    l2: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let (k, d) = (biases.len(), ds.dim());
    let mut grad_w = vec![0.0; k * d];
    let mut grad_b = vec![0.0; k];
    let mut loss = 0.0;
    let mut z = vec![0.0; k];
    for (x, &y) in ds.rows().zip(ds.labels()) {
        for (c, zc) in z.iter_mut().enumerate() {
            let w = &weights[c * d..(c + 1) * d];
            *zc = biases[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for zc in z.iter_mut() {
            *zc = (*zc - max).exp();
            total += *zc;
        }
        // z now holds exp(score - max); turn it into p - onehot.
        loss -= (z[y] / total).ln();
        for (c, zc) in z.iter_mut().enumerate() {
            *zc /= total;
            if c == y {
                *zc -= 1.0;
            }
            grad_b[c] += *zc;
            let g = &mut grad_w[c * d..(c + 1) * d];
            for (gj, xj) in g.iter_mut().zip(x) {
                *gj += *zc * xj;
            }
        }
    }
    let n = ds.len() as f64;
    loss /= n;
    grad_b.iter_mut().for_each(|g| *g /= n);
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
    }
    loss += 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad_w, grad_b)
}

/// Trains by full-batch gradient descent. Returns the model and the loss of
/// every accepted iterate, starting with the initial one.
///
/// A step that would increase the loss is rejected and the learning rate is
/// halved, so the recorded losses never increase.
pub fn train_softmax_traced(
    ds: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(SoftLabelModel, Vec<f64>)> {
    cfg.validate()?;
    let (k, d) = (ds.num_classes(), ds.dim());
    if k < 2 {
        return Err(Error::invalid(format!(
            "softmax training needs at least 2 classes, got {k}"
        )));
    }
    if ds.features().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training features"));
    }

    // Initial rows are keyed by class name, so permuting classes permutes
    // the initialization with them.
    let init = Normal::new(0.0, 0.01).expect("valid normal");
    let mut weights = Vec::with_capacity(k * d);
    for name in ds.classes().names() {
        let mut rng = rng_from(cfg.seed, &[stable_hash(name)]);
        weights.extend((0..d).map(|_| init.sample(&mut rng)));
    }
    let mut biases = vec![0.0; k];

    let (mut loss, mut gw, mut gb) = softmax_objective(ds, &weights, &biases, cfg.l2_penalty);
    let mut history = vec![loss];
    let mut lr = cfg.learning_rate;
    for _ in 0..cfg.max_epochs {
        let cand_w: Vec<f64> = weights.iter().zip(&gw).map(|(w, g)| w - lr * g).collect();
        let cand_b: Vec<f64> = biases.iter().zip(&gb).map(|(b, g)| b - lr * g).collect();
        let (cand_loss, cand_gw, cand_gb) = softmax_objective(ds, &cand_w, &cand_b, cfg.l2_penalty);
        if !(cand_loss <= loss) {
            lr *= 0.5;
            if lr < 1e-12 {
                break;
            }
            continue;
        }
        let improvement = loss - cand_loss;
        weights = cand_w;
        biases = cand_b;
        loss = cand_loss;
        gw = cand_gw;
        gb = cand_gb;
        history.push(loss);
        if improvement < cfg.tolerance {
            break;
        }
    }
    log::debug!(
        "softmax: k={k} d={d} n={} epochs={} loss {:.4} -> {:.4}",
        ds.len(),
        history.len() - 1,
        history[0],
        loss
    );
    let model = SoftLabelModel::new(weights, biases, d, ds.classes().clone())?;
    Ok((model, history))
}

pub fn train_softmax(ds: &LabeledDataset, cfg: &TrainConfig) -> Result<SoftLabelModel> {
    train_softmax_traced(ds, cfg).map(|(m, _)| m)
}
