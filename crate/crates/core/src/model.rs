//! Representation map and classifier: random Fourier features and
//! multinomial logistic regression trained by full-batch gradient descent.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng::{self, stream};

/// Random Fourier feature map approximating a Gaussian kernel of the given
/// bandwidth: `z = sqrt(2/D) [cos(xW), sin(xW)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffEncoder {
    /// `d_in x (d_out / 2)`, row-major.
    projection: Vec<f64>,
    d_in: usize,
    d_out: usize,
    bandwidth: f64,
    seed: u64,
}

impl RffEncoder {
    pub fn new(d_in: usize, d_out: usize, bandwidth: f64, seed: u64) -> Result<Self> {
        if d_in == 0 {
            return Err(Error::Precondition("RFF input dimension must be >= 1".into()));
        }
        if d_out < 2 || !d_out.is_multiple_of(2) {
            return Err(Error::Precondition(format!(
                "RFF output dimension must be even and >= 2, got {d_out}"
            )));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::Precondition(format!(
                "RFF bandwidth must be positive, got {bandwidth}"
            )));
        }
        let mut rng = rng::seeded(seed, stream::RFF);
        let projection = (0..d_in * d_out / 2)
            .map(|_| rng::standard_normal(&mut rng) / bandwidth)
            .collect();
        Ok(Self {
            projection,
            d_in,
            d_out,
            bandwidth,
            seed,
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn encode(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.n_cols() != self.d_in {
            return Err(Error::DimensionMismatch {
                expected: self.d_in,
                actual: x.n_cols(),
                context: "RFF input",
            });
        }
        let half = self.d_out / 2;
        let scale = (2.0 / self.d_out as f64).sqrt();
        let mut out = vec![0.0; x.n_rows() * self.d_out];
        let mut theta = vec![0.0; half];
        for (row, dst) in x.rows().zip(out.chunks_exact_mut(self.d_out)) {
            theta.iter_mut().for_each(|t| *t = 0.0);
            for (xi, w) in row.iter().zip(self.projection.chunks_exact(half)) {
                for (t, wf) in theta.iter_mut().zip(w) {
                    *t += xi * wf;
                }
            }
            let (cos, sin) = dst.split_at_mut(half);
            for f in 0..half {
                cos[f] = scale * theta[f].cos();
                sin[f] = scale * theta[f].sin();
            }
        }
        FeatureMatrix::new(out, x.n_rows(), self.d_out)
    }
}

/// Row-stochastic matrix of class probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProbabilities {
    values: Vec<f64>,
    n_rows: usize,
    n_classes: usize,
}

impl ClassProbabilities {
    /// Validates rows: entries in `[0, 1]`, sums within `1e-6` of one.
    pub fn new(values: Vec<f64>, n_rows: usize, n_classes: usize) -> Result<Self> {
        if n_classes < 2 || values.len() != n_rows * n_classes {
            return Err(Error::Validation(format!(
                "probability matrix shape {n_rows}x{n_classes} does not match {} values",
                values.len()
            )));
        }
        for (i, row) in values.chunks_exact(n_classes).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::Validation(format!(
                    "row {i} is not a probability distribution"
                )));
            }
        }
        Ok(Self {
            values,
            n_rows,
            n_classes,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Validation("ragged probability rows".into()));
        }
        Self::new(rows.concat(), rows.len(), k)
    }

    /// Reads a header-ed CSV with one column per class.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(file);
        let k = reader
            .headers()
            .map_err(|e| Error::Parse {
                row: 1,
                message: e.to_string(),
            })?
            .len();
        let mut values = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse {
                row: i + 2,
                message: e.to_string(),
            })?;
            for field in rec.iter() {
                values.push(field.parse::<f64>().map_err(|_| Error::Parse {
                    row: i + 2,
                    message: format!("cannot parse `{field}` as a probability"),
                })?);
            }
        }
        if k == 0 || values.is_empty() {
            return Err(Error::Parse {
                row: 1,
                message: "empty probability file".into(),
            });
        }
        let n_rows = values.len() / k;
        Self::new(values, n_rows, k)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_classes..(i + 1) * self.n_classes]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_classes)
    }
}

/// Training targets: one distribution over classes per row. Hard labels are
/// the one-hot special case.
#[derive(Debug, Clone, PartialEq)]
pub struct Targets {
    values: Vec<f64>,
    n_classes: usize,
}

impl Targets {
    pub fn one_hot(labels: &[usize], n_classes: usize) -> Result<Self> {
        let mut values = vec![0.0; labels.len() * n_classes];
        for (i, &l) in labels.iter().enumerate() {
            if l >= n_classes {
                return Err(Error::Validation(format!(
                    "label {l} at row {i} is not below n_classes={n_classes}"
                )));
            }
            values[i * n_classes + l] = 1.0;
        }
        Ok(Self { values, n_classes })
    }

    pub fn from_distributions(rows: &[Vec<f64>], n_classes: usize) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.len() != n_classes
                || row.iter().any(|p| !(*p >= 0.0))
                || (sum - 1.0).abs() > 1e-9
            {
                return Err(Error::Validation(format!(
                    "target row {i} is not a distribution over {n_classes} classes"
                )));
            }
        }
        Ok(Self {
            values: rows.concat(),
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.n_classes
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_classes..(i + 1) * self.n_classes]
    }

    pub fn append(&mut self, other: &Targets) -> Result<()> {
        if other.n_classes != self.n_classes {
            return Err(Error::DimensionMismatch {
                expected: self.n_classes,
                actual: other.n_classes,
                context: "target classes",
            });
        }
        self.values.extend_from_slice(&other.values);
        Ok(())
    }
}

/// Multinomial logistic regression `softmax(W x + b)`.
///
/// The objective is mean cross-entropy against distribution targets plus
/// `l2 / 2 * ||W||^2`; the bias is not penalised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LogisticModelJson", into = "LogisticModelJson")]
pub struct LogisticModel {
    /// `n_classes x n_features`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
    l2: f64,
    n_classes: usize,
    n_features: usize,
}

#[derive(Serialize, Deserialize)]
struct LogisticModelJson {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    l2: f64,
    n_classes: usize,
}

impl From<LogisticModel> for LogisticModelJson {
    fn from(m: LogisticModel) -> Self {
        Self {
            weights: m
                .weights
                .chunks_exact(m.n_features)
                .map(<[f64]>::to_vec)
                .collect(),
            bias: m.bias,
            l2: m.l2,
            n_classes: m.n_classes,
        }
    }
}

impl TryFrom<LogisticModelJson> for LogisticModel {
    type Error = Error;

    fn try_from(j: LogisticModelJson) -> Result<Self> {
        let n_features = j.weights.first().map_or(0, Vec::len);
        if j.weights.len() != j.n_classes
            || j.bias.len() != j.n_classes
            || j.weights.iter().any(|w| w.len() != n_features)
        {
            return Err(Error::Validation(
                "model JSON shapes disagree with n_classes".into(),
            ));
        }
        let model = LogisticModel {
            weights: j.weights.concat(),
            bias: j.bias,
            l2: j.l2,
            n_classes: j.n_classes,
            n_features,
        };
        if model.weights.iter().chain(&model.bias).any(|v| !v.is_finite()) {
            return Err(Error::Validation("model has non-finite parameters".into()));
        }
        Ok(model)
    }
}

/// Gradient of the training objective with respect to the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            epochs: 2000,
            lr: 0.5,
        }
    }
}

impl LogisticModel {
    pub fn zeros(n_features: usize, n_classes: usize, l2: f64) -> Self {
        Self {
            weights: vec![0.0; n_features * n_classes],
            bias: vec![0.0; n_classes],
            l2,
            n_classes,
            n_features,
        }
    }

    pub fn from_parts(
        weights: Vec<Vec<f64>>,
        bias: Vec<f64>,
        l2: f64,
    ) -> Result<Self> {
        let n_classes = weights.len();
        LogisticModelJson {
            weights,
            bias,
            l2,
            n_classes,
        }
        .try_into()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn check_dim(&self, x: &FeatureMatrix) -> Result<()> {
        if x.n_cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.n_cols(),
                context: "classifier features",
            });
        }
        Ok(())
    }

    fn logits_into(&self, row: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let w = &self.weights[k * self.n_features..(k + 1) * self.n_features];
            *o = self.bias[k] + w.iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<ClassProbabilities> {
        self.check_dim(x)?;
        let k = self.n_classes;
        let mut values = vec![0.0; x.n_rows() * k];
        for (row, out) in x.rows().zip(values.chunks_exact_mut(k)) {
            self.logits_into(row, out);
            softmax_in_place(out);
        }
        Ok(ClassProbabilities {
            values,
            n_rows: x.n_rows(),
            n_classes: k,
        })
    }

    /// Objective value and its gradient at the current parameters.
    pub fn loss_and_gradient(&self, x: &FeatureMatrix, targets: &Targets) -> Result<(f64, Gradient)> {
        self.check_dim(x)?;
        self.check_targets(x, targets)?;
        let (ce, mut grad) = self.cross_entropy_grad(x, targets);
        let penalty = 0.5 * self.l2 * self.weights.iter().map(|w| w * w).sum::<f64>();
        for (g, w) in grad.weights.iter_mut().zip(&self.weights) {
            *g += self.l2 * w;
        }
        Ok((ce + penalty, grad))
    }

    fn check_targets(&self, x: &FeatureMatrix, targets: &Targets) -> Result<()> {
        if targets.n_classes != self.n_classes {
            return Err(Error::DimensionMismatch {
                expected: self.n_classes,
                actual: targets.n_classes,
                context: "target classes",
            });
        }
        if targets.len() != x.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: x.n_rows(),
                actual: targets.len(),
                context: "target rows",
            });
        }
        Ok(())
    }

    /// Mean cross-entropy and its gradient, without the penalty.
    fn cross_entropy_grad(&self, x: &FeatureMatrix, targets: &Targets) -> (f64, Gradient) {
        let k = self.n_classes;
        let d = self.n_features;
        let n = x.n_rows() as f64;
        let mut gw = vec![0.0; k * d];
        let mut gb = vec![0.0; k];
        let mut logits = vec![0.0; k];
        let mut loss = 0.0;
        for (i, row) in x.rows().enumerate() {
            self.logits_into(row, &mut logits);
            let lse = log_sum_exp(&logits);
            let y = targets.row(i);
            for c in 0..k {
                let log_p = logits[c] - lse;
                if y[c] > 0.0 {
                    loss -= y[c] * log_p;
                }
                let g = (log_p.exp() - y[c]) / n;
                gb[c] += g;
                for (gwj, xj) in gw[c * d..(c + 1) * d].iter_mut().zip(row) {
                    *gwj += g * xj;
                }
            }
        }
        (
            loss / n,
            Gradient {
                weights: gw,
                bias: gb,
            },
        )
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let body = serde_json::to_string_pretty(self)?;
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&body)?)
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Numerically stable softmax; entries are floored at the smallest normal
/// double so every probability stays strictly positive.
pub fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x = (*x / sum).max(f64::MIN_POSITIVE);
    }
}

/// Largest step size for which gradient descent on the objective is
/// guaranteed not to increase it: `1 / (0.5 * (max_i ||x_i||^2 + 1) + l2)`.
///
/// The softmax cross-entropy Hessian in logit space has spectral norm at most
/// 1/2, and the bias acts as an extra constant feature of value one.
pub fn stable_learning_rate(x: &FeatureMatrix, l2: f64) -> f64 {
    let max_sq = x
        .rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>())
        .fold(0.0, f64::max);
    1.0 / (0.5 * (max_sq + 1.0) + l2)
}

/// Trains from zero initialisation and returns the model with the loss
/// recorded before each epoch's update.
///
/// The smooth cross-entropy part takes an explicit gradient step; the L2 part
/// is applied as its exact proximal map, `W / (1 + lr * l2)`, which keeps the
/// iteration stable for arbitrarily large penalties.
pub fn fit_logistic_with_history(
    x: &FeatureMatrix,
    targets: &Targets,
    n_classes: usize,
    opts: &FitOptions,
) -> Result<(LogisticModel, Vec<f64>)> {
    if opts.epochs == 0 {
        return Err(Error::Precondition("epochs must be >= 1".into()));
    }
    if !(opts.lr > 0.0 && opts.lr.is_finite()) {
        return Err(Error::Precondition(format!("lr must be positive, got {}", opts.lr)));
    }
    if !(opts.l2 >= 0.0) {
        return Err(Error::Precondition(format!("l2 must be >= 0, got {}", opts.l2)));
    }
    let mut model = LogisticModel::zeros(x.n_cols(), n_classes, opts.l2);
    model.check_targets(x, targets)?;
    let shrink = 1.0 / (1.0 + opts.lr * opts.l2);
    let mut history = Vec::with_capacity(opts.epochs);
    for epoch in 0..opts.epochs {
        let (ce, grad) = model.cross_entropy_grad(x, targets);
        let loss = ce + 0.5 * opts.l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        history.push(loss);
        for (w, g) in model.weights.iter_mut().zip(&grad.weights) {
            *w = (*w - opts.lr * g) * shrink;
        }
        for (b, g) in model.bias.iter_mut().zip(&grad.bias) {
            *b -= opts.lr * g;
        }
    }
    if model.weights.iter().chain(&model.bias).any(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            epoch: opts.epochs,
            loss: f64::NAN,
        });
    }
    Ok((model, history))
}

pub fn fit_logistic(
    x: &FeatureMatrix,
    targets: &Targets,
    n_classes: usize,
    opts: &FitOptions,
) -> Result<LogisticModel> {
    fit_logistic_with_history(x, targets, n_classes, opts).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (FeatureMatrix, Vec<usize>) {
        let x = FeatureMatrix::from_rows(&[
            vec![-1.0, -0.5],
            vec![-0.5, -1.0],
            vec![1.0, 0.5],
            vec![0.5, 1.0],
        ])
        .unwrap();
        (x, vec![0, 0, 1, 1])
    }

    #[test]
    fn rff_zero_row() {
        let enc = RffEncoder::new(3, 8, 1.0, 0).unwrap();
        let z = enc.encode(&FeatureMatrix::new(vec![0.0; 3], 1, 3).unwrap()).unwrap();
        let s = (2.0f64 / 8.0).sqrt();
        assert_eq!(z.row(0), &[s, s, s, s, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn rff_rows_have_unit_norm_and_are_deterministic() {
        let enc = RffEncoder::new(2, 200, 0.7, 4).unwrap();
        let x = FeatureMatrix::from_rows(&[vec![0.3, -2.0], vec![10.0, 5.5]]).unwrap();
        let a = enc.encode(&x).unwrap();
        let b = enc.encode(&x).unwrap();
        assert_eq!(a, b);
        for row in a.rows() {
            let sq: f64 = row.iter().map(|v| v * v).sum();
            assert!((sq - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rff_rejects_bad_shapes() {
        assert!(RffEncoder::new(2, 7, 1.0, 0).is_err());
        let enc = RffEncoder::new(2, 4, 1.0, 0).unwrap();
        let x = FeatureMatrix::new(vec![1.0; 3], 1, 3).unwrap();
        assert!(matches!(enc.encode(&x), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn separable_toy_is_fit() {
        let (x, y) = toy();
        let t = Targets::one_hot(&y, 2).unwrap();
        let opts = FitOptions {
            l2: 1e-4,
            epochs: 500,
            lr: 0.5,
        };
        let m = fit_logistic(&x, &t, 2, &opts).unwrap();
        let p = m.predict_proba(&x).unwrap();
        let preds: Vec<usize> = p
            .rows()
            .map(|r| usize::from(r[1] > r[0]))
            .collect();
        assert_eq!(preds, y);
    }

    #[test]
    fn loss_never_increases_below_stability_bound() {
        let (x, y) = toy();
        let t = Targets::one_hot(&y, 2).unwrap();
        let lr = stable_learning_rate(&x, 1e-3);
        assert!(lr >= 0.5);
        let (_, hist) = fit_logistic_with_history(
            &x,
            &t,
            2,
            &FitOptions {
                l2: 1e-3,
                epochs: 300,
                lr,
            },
        )
        .unwrap();
        for w in hist.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn heavy_penalty_keeps_weights_near_zero() {
        let (x, y) = toy();
        let t = Targets::one_hot(&y, 2).unwrap();
        let m = fit_logistic(
            &x,
            &t,
            2,
            &FitOptions {
                l2: 1e6,
                epochs: 200,
                lr: 0.5,
            },
        )
        .unwrap();
        assert!(m.weights().iter().all(|w| w.abs() < 1e-3));
        for row in m.predict_proba(&x).unwrap().rows() {
            assert!((row[0] - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_epochs_rejected() {
        let (x, y) = toy();
        let t = Targets::one_hot(&y, 2).unwrap();
        let opts = FitOptions {
            epochs: 0,
            ..FitOptions::default()
        };
        assert!(matches!(
            fit_logistic(&x, &t, 2, &opts),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn divergence_names_epoch() {
        let x = FeatureMatrix::from_rows(&[vec![1e200], vec![-1e200]]).unwrap();
        let t = Targets::one_hot(&[0, 1], 2).unwrap();
        let err = fit_logistic(
            &x,
            &t,
            2,
            &FitOptions {
                l2: 0.0,
                epochs: 10,
                lr: 1.0,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = LogisticModel::zeros(2, 3, 0.0);
        let x = FeatureMatrix::from_rows(&[vec![4.0, -1.0], vec![0.0, 9.0]]).unwrap();
        for row in m.predict_proba(&x).unwrap().rows() {
            for p in row {
                assert!((p - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let mut a = vec![0.3, -1.2, 2.0];
        let mut b: Vec<f64> = a.iter().map(|v| v + 17.5).collect();
        softmax_in_place(&mut a);
        softmax_in_place(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn two_class_log_three_gap() {
        let m = LogisticModel::from_parts(vec![vec![0.0], vec![0.0]], vec![3f64.ln(), 0.0], 0.0)
            .unwrap();
        let p = m
            .predict_proba(&FeatureMatrix::new(vec![1.0], 1, 1).unwrap())
            .unwrap();
        assert!((p.row(0)[0] - 0.75).abs() < 1e-9);
        assert!((p.row(0)[1] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn softmax_stays_strictly_positive() {
        let mut v = vec![0.0, -2000.0];
        softmax_in_place(&mut v);
        assert!(v[1] > 0.0 && v[1] < 1.0);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let m = LogisticModel::from_parts(vec![vec![0.1, -0.2], vec![3.0, 4.0]], vec![0.5, -0.5], 1e-4)
            .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"weights\":[[0.1,-0.2],[3.0,4.0]]"));
        let back: LogisticModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
