//! Two-moons experiment harness: the selection pipeline against simple
//! baselines that all receive the same number of synthetic samples.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{fmt_f64, generate_two_moons, CandidatePool, FeatureMatrix, LabeledDataset, TwoMoonsSpec};
use crate::error::{Error, Result};
use crate::label::soft_label;
use crate::model::{ClassProbabilities, LogisticModel, RffEncoder, Targets};
use crate::pipeline::{
    encode, run_selection, train_augmented, train_erm, train_final, KernelBandwidth, PipelineConfig, Representation, SelectionReport,
};
use crate::rng::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Real data only.
    Erm,
    /// Uniform draw from the pool without replacement.
    Random,
    /// Jittered copies of real points with their labels.
    Noise,
    /// Highest predictive entropy first.
    UncertaintyOnly,
    Libags,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Erm,
        Method::Random,
        Method::Noise,
        Method::UncertaintyOnly,
        Method::Libags,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Erm => "erm",
            Method::Random => "random",
            Method::Noise => "noise",
            Method::UncertaintyOnly => "uncertainty_only",
            Method::Libags => "libags",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "unknown method `{s}` (expected one of erm, random, noise, uncertainty_only, libags)"
                ))
            })
    }
}

/// Data and model settings for the benchmark. The generator seed is
/// replaced per run by the bench seed.
///
/// The defaults remove a wide band of training data so that both moon tips
/// sit next to the gap, and use a narrow selection kernel in the 200-d
/// random-feature space (distances there are on the order of input-space
/// distances, so 0.05 is a few percent of the moon radius).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub moons: TwoMoonsSpec,
    pub pipeline: PipelineConfig,
    /// Jitter of the noise baseline as a fraction of each feature's spread.
    pub noise_scale: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            moons: TwoMoonsSpec::new(100, 0.2, 0.65, 0),
            pipeline: PipelineConfig {
                representation: Representation::Rff,
                kernel_bandwidth: KernelBandwidth::Fixed(0.05),
                ..PipelineConfig::default()
            },
            noise_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub method: Method,
    pub seeds: Vec<u64>,
    pub accuracy: Vec<f64>,
    pub auroc: Vec<f64>,
    pub m_hat: Vec<usize>,
    /// Synthetic rows added to the real data, per seed.
    pub n_synthetic: Vec<usize>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero for one value.
fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl BenchResult {
    pub fn accuracy_mean(&self) -> f64 {
        mean(&self.accuracy)
    }

    pub fn accuracy_std(&self) -> f64 {
        std_dev(&self.accuracy)
    }

    pub fn auroc_mean(&self) -> f64 {
        mean(&self.auroc)
    }

    pub fn auroc_std(&self) -> f64 {
        std_dev(&self.auroc)
    }

    pub fn m_hat_mean(&self) -> f64 {
        mean(&self.m_hat.iter().map(|&m| m as f64).collect::<Vec<_>>())
    }
}

/// Area under the ROC curve from midranks: the probability that a random
/// positive outscores a random negative, ties counting one half.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            actual: labels.len(),
            context: "AUROC labels",
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Precondition("AUROC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Rank sums are kept doubled so midranks stay integral and exact.
    let mut pos_rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank2 = (i + 1 + j + 1) as u128;
        for &idx in &order[i..=j] {
            if labels[idx] {
                pos_rank_sum2 += midrank2;
            }
        }
        i = j + 1;
    }
    let (p, q) = (n_pos as u128, n_neg as u128);
    let u2 = pos_rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * q) as f64)
}

pub fn accuracy(model: &LogisticModel, encoder: Option<&RffEncoder>, test: &LabeledDataset) -> Result<(f64, f64)> {
    let proba = model.predict_proba(&encode(encoder, &test.features)?)?;
    let mut correct = 0;
    let mut scores = Vec::with_capacity(test.len());
    for (row, &y) in proba.rows().zip(&test.labels) {
        let pred = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
            .0;
        correct += usize::from(pred == y);
        scores.push(row[1]);
    }
    let labels: Vec<bool> = test.labels.iter().map(|&l| l == 1).collect();
    Ok((correct as f64 / test.len() as f64, auroc(&scores, &labels)?))
}

/// Pool rows with the same soft labels the selection pipeline assigns, so
/// pool baselines differ from it only in which candidates they pick.
fn soft_targets(
    pool: &CandidatePool,
    picks: &[usize],
    proba: &ClassProbabilities,
    report: &SelectionReport,
) -> Result<(FeatureMatrix, Targets)> {
    let rows = picks
        .iter()
        .map(|&j| {
            soft_label(pool.proposed_labels[j], proba.row(j), report.scores[j].boundary_weight).map(|s| s.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((pool.features.select_rows(picks)?, Targets::from_distributions(&rows, report.n_classes)?))
}

/// Uniform sample of `count` distinct indices below `n` (partial Fisher-Yates).
fn sample_without_replacement(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::seeded(seed, stream::BENCH_RANDOM);
    let mut idx: Vec<usize> = (0..n).collect();
    let count = count.min(n);
    for i in 0..count {
        let span = n - i;
        let j = i + ((rng::uniform(&mut rng) * span as f64) as usize).min(span - 1);
        idx.swap(i, j);
    }
    idx.truncate(count);
    idx
}

fn noise_augmentation(real: &LabeledDataset, count: usize, scale: f64, seed: u64) -> Result<(FeatureMatrix, Targets)> {
    let n = real.len();
    let d = real.features.n_cols();
    let spread: Vec<f64> = (0..d)
        .map(|c| {
            let col: Vec<f64> = real.features.rows().map(|r| r[c]).collect();
            let m = mean(&col);
            (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt()
        })
        .collect();
    let mut rng = rng::seeded(seed, stream::BENCH_NOISE);
    let mut values = Vec::with_capacity(count * d);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let i = ((rng::uniform(&mut rng) * n as f64) as usize).min(n - 1);
        for (c, v) in real.features.row(i).iter().enumerate() {
            values.push(v + scale * spread[c] * rng::standard_normal(&mut rng));
        }
        labels.push(real.labels[i]);
    }
    Ok((
        FeatureMatrix::new(values, count, d)?,
        Targets::one_hot(&labels, real.n_classes)?,
    ))
}

/// Outcome of every requested method on one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub m_hat: usize,
    /// `(method, accuracy, auroc, synthetic rows)`.
    pub rows: Vec<(Method, f64, f64, usize)>,
}

pub fn run_seed(methods: &[Method], seed: u64, config: &BenchConfig) -> Result<SeedOutcome> {
    let moons = generate_two_moons(&TwoMoonsSpec {
        seed,
        ..config.moons.clone()
    })?;
    let pipeline = PipelineConfig {
        seed,
        ..config.pipeline.clone()
    };
    let encoder = pipeline.encoder(moons.train.features.n_cols())?;
    let (real, pool, test) = (&moons.train, &moons.candidates, &moons.test);

    // The learned count is needed by every fixed-count baseline.
    let report = run_selection(real, pool, &pipeline, None)?;
    let m_hat = report.m_hat;
    // Same fit as the pipeline's scoring model.
    let erm = train_erm(real, &pipeline)?;
    let pool_proba = erm.predict_proba(&encode(encoder.as_ref(), &pool.features)?)?;

    let mut rows = Vec::with_capacity(methods.len());
    for &method in methods {
        let (model, added) = match method {
            Method::Erm => (erm.clone(), 0),
            Method::Libags => (train_final(real, &report, pool, &pipeline)?, m_hat),
            _ if m_hat == 0 => (erm.clone(), 0),
            Method::Random => {
                let picks = sample_without_replacement(pool.len(), m_hat, seed);
                let (x, t) = soft_targets(pool, &picks, &pool_proba, &report)?;
                (train_augmented(real, Some((&x, &t)), &pipeline)?, picks.len())
            }
            Method::Noise => {
                let (x, t) = noise_augmentation(real, m_hat, config.noise_scale, seed)?;
                (train_augmented(real, Some((&x, &t)), &pipeline)?, m_hat)
            }
            Method::UncertaintyOnly => {
                let mut order: Vec<usize> = (0..pool.len()).collect();
                order.sort_by(|&a, &b| {
                    report.scores[b]
                        .entropy
                        .total_cmp(&report.scores[a].entropy)
                        .then(a.cmp(&b))
                });
                order.truncate(m_hat);
                let (x, t) = soft_targets(pool, &order, &pool_proba, &report)?;
                (train_augmented(real, Some((&x, &t)), &pipeline)?, order.len())
            }
        };
        let (acc, auc) = accuracy(&model, encoder.as_ref(), test)?;
        rows.push((method, acc, auc, added));
    }
    Ok(SeedOutcome { seed, m_hat, rows })
}

/// Runs every method on every seed; one result per method, in request order.
pub fn run_bench(methods: &[Method], seeds: &[u64], config: &BenchConfig) -> Result<Vec<BenchResult>> {
    let mut results: Vec<BenchResult> = methods
        .iter()
        .map(|&method| BenchResult {
            method,
            seeds: Vec::new(),
            accuracy: Vec::new(),
            auroc: Vec::new(),
            m_hat: Vec::new(),
            n_synthetic: Vec::new(),
        })
        .collect();
    for &seed in seeds {
        let outcome = run_seed(methods, seed, config)?;
        for (res, (_, acc, auc, added)) in results.iter_mut().zip(outcome.rows) {
            res.seeds.push(seed);
            res.accuracy.push(acc);
            res.auroc.push(auc);
            res.m_hat.push(outcome.m_hat);
            res.n_synthetic.push(added);
        }
    }
    Ok(results)
}

/// One summary row per method.
pub fn results_csv(results: &[BenchResult]) -> String {
    let mut out = String::from(
        "method,n_seeds,accuracy_mean,accuracy_std,auroc_mean,auroc_std,m_hat_mean\n",
    );
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            r.seeds.len(),
            fmt_f64(r.accuracy_mean()),
            fmt_f64(r.accuracy_std()),
            fmt_f64(r.auroc_mean()),
            fmt_f64(r.auroc_std()),
            fmt_f64(r.m_hat_mean())
        ));
    }
    out
}

/// One row per (method, seed).
pub fn per_seed_csv(results: &[BenchResult]) -> String {
    let mut out = String::from("method,seed,accuracy,auroc,m_hat,n_synthetic\n");
    for r in results {
        for i in 0..r.seeds.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.method,
                r.seeds[i],
                fmt_f64(r.accuracy[i]),
                fmt_f64(r.auroc[i]),
                r.m_hat[i],
                r.n_synthetic[i]
            ));
        }
    }
    out
}

pub fn summary_table(results: &[BenchResult]) -> String {
    let mut out = format!(
        "{:<18} {:>18} {:>18} {:>10}\n",
        "method", "accuracy", "auroc", "m_hat"
    );
    for r in results {
        out.push_str(&format!(
            "{:<18} {:>8.4} ± {:<7.4} {:>8.4} ± {:<7.4} {:>10.1}\n",
            r.method.name(),
            r.accuracy_mean(),
            r.accuracy_std(),
            r.auroc_mean(),
            r.auroc_std(),
            r.m_hat_mean()
        ));
    }
    out
}

/// Axis-aligned plotting window `[x1_min, x1_max] x [x2_min, x2_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBounds {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

impl Default for GridBounds {
    fn default() -> Self {
        Self {
            x1_min: -1.5,
            x1_max: 2.5,
            x2_min: -1.0,
            x2_max: 1.5,
        }
    }
}

/// `(x1, x2, p_class1)` rows over a `resolution x resolution` grid, `x1`
/// varying slowest.
pub fn boundary_grid(
    model: &LogisticModel,
    encoder: Option<&RffEncoder>,
    bounds: GridBounds,
    resolution: usize,
) -> Result<Vec<[f64; 3]>> {
    if resolution < 2 {
        return Err(Error::Precondition("grid resolution must be >= 2".into()));
    }
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let mut pts = Vec::with_capacity(resolution * resolution * 2);
    for i in 0..resolution {
        for j in 0..resolution {
            pts.push(step(bounds.x1_min, bounds.x1_max, i));
            pts.push(step(bounds.x2_min, bounds.x2_max, j));
        }
    }
    let n = resolution * resolution;
    let x = FeatureMatrix::new(pts, n, 2)?;
    let proba = model.predict_proba(&encode(encoder, &x)?)?;
    Ok(x
        .rows()
        .zip(proba.rows())
        .map(|(p, pr)| [p[0], p[1], pr[1]])
        .collect())
}

pub fn export_boundary_grid(
    model: &LogisticModel,
    encoder: Option<&RffEncoder>,
    bounds: GridBounds,
    resolution: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("x1,x2,p_class1\n");
    for [a, b, p] in boundary_grid(model, encoder, bounds, resolution)? {
        out.push_str(&format!("{},{},{}\n", fmt_f64(a), fmt_f64(b), fmt_f64(p)));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
