//! End-to-end selection: scoring model, per-candidate scores, gap
//! allocation, greedy selection with stopping, soft labels, and training of
//! the final classifier.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alloc::{solve_lambda, AllocationSolution};
use crate::data::{CandidatePool, FeatureMatrix, LabeledDataset};
use crate::error::{Error, Result};
use crate::geometry::{knn_density, support_validity, KernelSpec, NeighborIndex, SelfMatch};
use crate::label::{soft_label, SoftLabel};
use crate::model::{fit_logistic, ClassProbabilities, FitOptions, LogisticModel, RffEncoder, Targets};
use crate::score::{self, ScoreRecord};
use crate::select::{
    build_regions, greedy_select, initial_gains, select_eta, GainStep, StopReason,
};

pub const REPORT_FORMAT: &str = "libags-report/1";

/// Kernel bandwidth for candidate similarity: `"median"` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum KernelBandwidth {
    Median,
    Fixed(f64),
}

/// A count, or a keyword meaning "derive it".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum AutoCount {
    Auto,
    Fixed(usize),
}

/// Optional cap on the number of picks: `"none"` or a count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum Budget {
    Unlimited,
    Fixed(usize),
}

macro_rules! keyword_or_value {
    ($ty:ident, $kw:literal, $kw_variant:ident, $getter:ident) => {
        impl TryFrom<serde_json::Value> for $ty {
            type Error = String;

            fn try_from(v: serde_json::Value) -> std::result::Result<Self, String> {
                match &v {
                    serde_json::Value::String(s) if s == $kw => Ok($ty::$kw_variant),
                    _ => v
                        .$getter()
                        .map($ty::Fixed)
                        .ok_or_else(|| format!("expected \"{}\" or a number, got {v}", $kw)),
                }
            }
        }

        impl From<$ty> for serde_json::Value {
            fn from(v: $ty) -> Self {
                match v {
                    $ty::$kw_variant => serde_json::Value::String($kw.into()),
                    $ty::Fixed(x) => serde_json::json!(x),
                }
            }
        }
    };
}

trait AsCount {
    fn as_count(&self) -> Option<usize>;
}

impl AsCount for serde_json::Value {
    fn as_count(&self) -> Option<usize> {
        self.as_u64().and_then(|v| usize::try_from(v).ok())
    }
}

keyword_or_value!(KernelBandwidth, "median", Median, as_f64);
keyword_or_value!(AutoCount, "auto", Auto, as_count);
keyword_or_value!(Budget, "none", Unlimited, as_count);

/// Representation map applied to raw features before scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// Features are already representations.
    Identity,
    /// Random Fourier features with `rff_dim` outputs and `rff_bandwidth`.
    Rff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Margin quantile that sets the boundary-neighbourhood width.
    pub tau_quantile: f64,
    /// Neighbours used for density and support.
    pub knn_k: usize,
    pub kernel_bandwidth: KernelBandwidth,
    /// Total allocated mass as a multiple of the real sample count.
    pub coverage_ratio: f64,
    /// `"auto"` is `max(8, ceil(sqrt(M)))`, capped at `M`.
    pub n_regions: AutoCount,
    pub max_budget: Budget,
    pub representation: Representation,
    /// Exponent of the kNN density; `"auto"` uses the raw input dimension.
    pub density_dim: AutoCount,
    pub rff_dim: usize,
    pub rff_bandwidth: f64,
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau_quantile: 0.25,
            knn_k: 10,
            kernel_bandwidth: KernelBandwidth::Median,
            coverage_ratio: 1.0,
            n_regions: AutoCount::Auto,
            max_budget: Budget::Unlimited,
            representation: Representation::Identity,
            density_dim: AutoCount::Auto,
            rff_dim: 200,
            rff_bandwidth: 1.0,
            l2: 1e-4,
            epochs: 2000,
            lr: 0.5,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if !(self.tau_quantile > 0.0 && self.tau_quantile < 1.0) {
            return bad(format!("tau_quantile must lie in (0, 1), got {}", self.tau_quantile));
        }
        if self.knn_k == 0 {
            return bad("knn_k must be >= 1".into());
        }
        if let KernelBandwidth::Fixed(b) = self.kernel_bandwidth {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("kernel_bandwidth must be positive, got {b}"));
            }
        }
        if !(self.coverage_ratio > 0.0 && self.coverage_ratio.is_finite()) {
            return bad(format!("coverage_ratio must be positive, got {}", self.coverage_ratio));
        }
        if self.n_regions == AutoCount::Fixed(0) {
            return bad("n_regions must be >= 1".into());
        }
        if self.density_dim == AutoCount::Fixed(0) {
            return bad("density_dim must be >= 1".into());
        }
        if self.rff_dim < 2 || !self.rff_dim.is_multiple_of(2) {
            return bad(format!("rff_dim must be even and >= 2, got {}", self.rff_dim));
        }
        if !(self.rff_bandwidth > 0.0 && self.rff_bandwidth.is_finite()) {
            return bad(format!("rff_bandwidth must be positive, got {}", self.rff_bandwidth));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 must be >= 0, got {}", self.l2));
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Validation(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&body)
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            l2: self.l2,
            epochs: self.epochs,
            lr: self.lr,
        }
    }

    /// The representation map for raw inputs of dimension `d_in`.
    pub fn encoder(&self, d_in: usize) -> Result<Option<RffEncoder>> {
        match self.representation {
            Representation::Identity => Ok(None),
            Representation::Rff => {
                RffEncoder::new(d_in, self.rff_dim, self.rff_bandwidth, self.seed).map(Some)
            }
        }
    }
}

pub fn encode(encoder: Option<&RffEncoder>, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    match encoder {
        Some(e) => e.encode(x),
        None => Ok(x.clone()),
    }
}

/// Wall-clock duration of one pipeline stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Everything a selection run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub format: String,
    pub n_real: usize,
    pub n_candidates: usize,
    pub n_classes: usize,
    pub m_hat: usize,
    pub selected: Vec<usize>,
    pub selected_source_ids: Vec<String>,
    pub soft_labels: Vec<SoftLabel>,
    pub tau: f64,
    /// `None` when no candidate had positive importance.
    pub lambda: Option<f64>,
    pub eta: f64,
    pub kernel_bandwidth: f64,
    pub n_regions: usize,
    pub stop_reason: StopReason,
    pub scores: Vec<ScoreRecord>,
    pub gains_log: Vec<GainStep>,
    pub warnings: Vec<String>,
    pub config: PipelineConfig,
    /// Run-specific details (timestamps, timings); never set by the pipeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<RunMetadata>,
}

/// Non-reproducible facts about a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub created_unix_seconds: u64,
    pub timings: Vec<StageTiming>,
}

impl SelectionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut body = self.to_json()?;
        body.push('\n');
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: Self = serde_json::from_str(&body)?;
        if report.format != REPORT_FORMAT {
            return Err(Error::Validation(format!(
                "unsupported report format `{}`",
                report.format
            )));
        }
        Ok(report)
    }

    /// Per-step gains as CSV: `step,candidate,facility_gain,region_gain,combined_gain`.
    pub fn gains_csv(&self) -> String {
        let mut out = String::from("step,candidate,facility_gain,region_gain,combined_gain\n");
        for g in &self.gains_log {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                g.step,
                g.candidate,
                crate::data::fmt_f64(g.facility_gain),
                crate::data::fmt_f64(g.region_gain),
                crate::data::fmt_f64(g.combined_gain)
            ));
        }
        out
    }

    /// Per-candidate scores as CSV.
    pub fn scores_csv(&self, source_ids: &[String]) -> String {
        let f = crate::data::fmt_f64;
        let mut out = String::from(
            "candidate,source_id,margin,boundary_weight,entropy,density,support,importance,gap_score,value\n",
        );
        for (j, s) in self.scores.iter().enumerate() {
            out.push_str(&format!(
                "{j},{},{},{},{},{},{},{},{},{}\n",
                source_ids.get(j).map_or("", String::as_str),
                f(s.margin),
                f(s.boundary_weight),
                f(s.entropy),
                f(s.density),
                f(s.support),
                f(s.importance),
                f(s.gap_score),
                f(s.value)
            ));
        }
        out
    }
}

/// Class probabilities supplied by an external scoring model.
#[derive(Debug, Clone, Copy)]
pub struct ExternalProba<'a> {
    pub real: &'a ClassProbabilities,
    pub candidates: &'a ClassProbabilities,
}

struct Stopwatch {
    timings: Vec<StageTiming>,
    last: Instant,
}

impl Stopwatch {
    fn new() -> Self {
        Self {
            timings: Vec::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push(StageTiming {
            stage: stage.into(),
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }
}

fn check_inputs(
    real: &LabeledDataset,
    candidates: &CandidatePool,
    external: Option<ExternalProba<'_>>,
) -> Result<()> {
    if candidates.features.n_cols() != real.features.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: real.features.n_cols(),
            actual: candidates.features.n_cols(),
            context: "candidate feature dimension",
        });
    }
    if let Some(&l) = candidates.proposed_labels.iter().find(|&&l| l >= real.n_classes) {
        return Err(Error::Validation(format!(
            "proposed label {l} is not below n_classes={}",
            real.n_classes
        )));
    }
    if real.len() < 2 {
        return Err(Error::Validation("need at least 2 real samples".into()));
    }
    if let Some(ext) = external {
        for (p, rows, what) in [
            (ext.real, real.len(), "external real probabilities"),
            (ext.candidates, candidates.len(), "external candidate probabilities"),
        ] {
            if p.n_rows() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    actual: p.n_rows(),
                    context: what,
                });
            }
            if p.n_classes() != real.n_classes {
                return Err(Error::DimensionMismatch {
                    expected: real.n_classes,
                    actual: p.n_classes(),
                    context: what,
                });
            }
        }
    }
    Ok(())
}

/// Runs the selection and returns the report together with per-stage timings.
/// The report itself carries no timing information, so it is reproducible.
pub fn run_selection_timed(
    real: &LabeledDataset,
    candidates: &CandidatePool,
    config: &PipelineConfig,
    external: Option<ExternalProba<'_>>,
) -> Result<(SelectionReport, Vec<StageTiming>)> {
    config.validate()?;
    check_inputs(real, candidates, external)?;
    let mut clock = Stopwatch::new();
    let n = real.len();
    let m = candidates.len();
    let mut warnings = Vec::new();

    // Representation map and scoring model, fit on real data only.
    let encoder = config.encoder(real.features.n_cols())?;
    let z_real = encode(encoder.as_ref(), &real.features)?;
    let z_cand = encode(encoder.as_ref(), &candidates.features)?;
    clock.lap("encode");
    let proba = match external {
        Some(ext) => ext.candidates.clone(),
        None => {
            let targets = Targets::one_hot(&real.labels, real.n_classes)?;
            let scorer = fit_logistic(&z_real, &targets, real.n_classes, &config.fit_options())?;
            scorer.predict_proba(&z_cand)?
        }
    };
    clock.lap("scoring_model");

    // Boundary proximity and uncertainty.
    let margins = proba
        .rows()
        .map(score::top_two_margin)
        .collect::<Result<Vec<_>>>()?;
    let tau = score::select_tau(&margins, config.tau_quantile)?;
    let weights = margins
        .iter()
        .map(|&d| score::boundary_weight(d, tau))
        .collect::<Result<Vec<_>>>()?;
    let entropies: Vec<f64> = proba.rows().map(score::entropy).collect();

    // Real-data density and support.
    let k = config.knn_k.min(n - 1);
    if k < config.knn_k {
        warnings.push(format!("knn_k reduced to {k} for {n} real samples"));
    }
    let index = NeighborIndex::new(z_real.clone());
    let density_dim = match config.density_dim {
        AutoCount::Auto => real.features.n_cols(),
        AutoCount::Fixed(d) => d,
    };
    let density = knn_density(&index, &z_cand, k, density_dim, SelfMatch::Include)?;
    let calibration = index.calibration_distances(k)?;
    let support = support_validity(&index, &z_cand, k, &calibration)?;
    let importance: Vec<f64> = (0..m)
        .map(|j| score::importance(weights[j], entropies[j], support[j]))
        .collect();
    clock.lap("score");

    // Gap allocation.
    let coverage: Vec<f64> = density.iter().map(|p| n as f64 * p).collect();
    let target_mass = n as f64 * config.coverage_ratio;
    let allocation = match solve_lambda(&importance, &coverage, target_mass) {
        Ok(sol) => Some(sol),
        Err(Error::NoPositiveImportance) => {
            warnings.push("no candidate has positive importance; nothing selected".into());
            None
        }
        Err(e) => return Err(e),
    };
    let gap_scores = allocation
        .as_ref()
        .map_or_else(|| vec![0.0; m], |a: &AllocationSolution| a.gap_scores.clone());
    let values: Vec<f64> = gap_scores.iter().zip(&support).map(|(g, b)| g * b).collect();
    clock.lap("allocate");

    let scores: Vec<ScoreRecord> = (0..m)
        .map(|j| ScoreRecord {
            margin: margins[j],
            boundary_weight: weights[j],
            entropy: entropies[j],
            density: density[j],
            support: support[j],
            importance: importance[j],
            gap_score: gap_scores[j],
            value: values[j],
        })
        .collect();

    // Diversity-aware selection with stopping.
    let kernel = match config.kernel_bandwidth {
        KernelBandwidth::Median => KernelSpec::median_heuristic(&z_cand),
        KernelBandwidth::Fixed(b) => KernelSpec::new(b)?,
    };
    let n_regions = match config.n_regions {
        AutoCount::Auto => 8.max((m as f64).sqrt().ceil() as usize),
        AutoCount::Fixed(r) => r,
    }
    .min(m);
    let (selection, eta) = if allocation.is_some() {
        let sim = kernel.matrix(&z_cand);
        clock.lap("similarity");
        let regions = build_regions(&z_real, &z_cand, &importance, n_regions, config.seed)?;
        clock.lap("regions");
        let mut curve: Vec<f64> = initial_gains(&values, &sim, &regions)
            .iter()
            .map(|g| g.combined())
            .collect();
        curve.sort_by(|a, b| b.total_cmp(a));
        let eta = select_eta(&curve);
        let budget = match config.max_budget {
            Budget::Unlimited => None,
            Budget::Fixed(b) => Some(b),
        };
        let state = greedy_select(&values, &sim, &regions, eta, budget)?;
        clock.lap("select");
        (Some(state), eta)
    } else {
        (None, 0.0)
    };

    let (selected, gains_log, stop_reason) = match selection {
        Some(s) => (s.selected, s.gains_log, s.stop_reason),
        None => (Vec::new(), Vec::new(), StopReason::Threshold),
    };
    let soft_labels = selected
        .iter()
        .map(|&j| soft_label(candidates.proposed_labels[j], proba.row(j), weights[j]))
        .collect::<Result<Vec<_>>>()?;
    clock.lap("label");

    let report = SelectionReport {
        format: REPORT_FORMAT.into(),
        n_real: n,
        n_candidates: m,
        n_classes: real.n_classes,
        m_hat: selected.len(),
        selected_source_ids: selected
            .iter()
            .map(|&j| candidates.source_ids[j].clone())
            .collect(),
        selected,
        soft_labels,
        tau,
        lambda: allocation.map(|a| a.lambda),
        eta,
        kernel_bandwidth: kernel.bandwidth,
        n_regions,
        stop_reason,
        scores,
        gains_log,
        warnings,
        config: config.clone(),
        metadata: None,
    };
    Ok((report, clock.timings))
}

pub fn run_selection(
    real: &LabeledDataset,
    candidates: &CandidatePool,
    config: &PipelineConfig,
    external: Option<ExternalProba<'_>>,
) -> Result<SelectionReport> {
    run_selection_timed(real, candidates, config, external).map(|(r, _)| r)
}

/// Fits the classifier on real data plus extra rows with distribution
/// targets, all passed through the configured representation map.
pub fn train_augmented(
    real: &LabeledDataset,
    extra: Option<(&FeatureMatrix, &Targets)>,
    config: &PipelineConfig,
) -> Result<LogisticModel> {
    config.validate()?;
    let encoder = config.encoder(real.features.n_cols())?;
    let mut x = encode(encoder.as_ref(), &real.features)?;
    let mut targets = Targets::one_hot(&real.labels, real.n_classes)?;
    if let Some((fx, ft)) = extra {
        x = x.vstack(&encode(encoder.as_ref(), fx)?)?;
        targets.append(ft)?;
    }
    fit_logistic(&x, &targets, real.n_classes, &config.fit_options())
}

/// Real data only.
pub fn train_erm(real: &LabeledDataset, config: &PipelineConfig) -> Result<LogisticModel> {
    train_augmented(real, None, config)
}

/// Final classifier on the real data plus the selected candidates with their
/// soft labels.
pub fn train_final(
    real: &LabeledDataset,
    report: &SelectionReport,
    candidates: &CandidatePool,
    config: &PipelineConfig,
) -> Result<LogisticModel> {
    if report.n_candidates != candidates.len() {
        return Err(Error::Validation(format!(
            "report covers {} candidates, pool has {}",
            report.n_candidates,
            candidates.len()
        )));
    }
    if let Some(&j) = report.selected.iter().find(|&&j| j >= candidates.len()) {
        return Err(Error::Validation(format!(
            "selected index {j} out of range for {} candidates",
            candidates.len()
        )));
    }
    if report.selected.is_empty() {
        return train_erm(real, config);
    }
    let fx = candidates.features.select_rows(&report.selected)?;
    let rows: Vec<Vec<f64>> = report.soft_labels.iter().map(|s| s.0.clone()).collect();
    let targets = Targets::from_distributions(&rows, real.n_classes)?;
    train_augmented(real, Some((&fx, &targets)), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_keywords() {
        let cfg = PipelineConfig::from_json_str("{}").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        let cfg = PipelineConfig::from_json_str(
            r#"{"kernel_bandwidth": 0.5, "n_regions": 12, "max_budget": 40, "representation": "rff"}"#,
        )
        .unwrap();
        assert_eq!(cfg.kernel_bandwidth, KernelBandwidth::Fixed(0.5));
        assert_eq!(cfg.n_regions, AutoCount::Fixed(12));
        assert_eq!(cfg.max_budget, Budget::Fixed(40));
        let json = serde_json::to_string(&PipelineConfig::default()).unwrap();
        assert!(json.contains(r#""kernel_bandwidth":"median""#));
        assert!(json.contains(r#""max_budget":"none""#));
        assert_eq!(PipelineConfig::from_json_str(&json).unwrap(), PipelineConfig::default());
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        assert!(PipelineConfig::from_json_str(r#"{"knn": 3}"#).is_err());
        assert!(PipelineConfig::from_json_str(r#"{"tau_quantile": 1.5}"#).is_err());
        assert!(PipelineConfig::from_json_str(r#"{"kernel_bandwidth": "mean"}"#).is_err());
        assert!(PipelineConfig::from_json_str(r#"{"rff_dim": 3}"#).is_err());
    }
}
