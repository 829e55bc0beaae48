//! Dataset and candidate-pool types, CSV ingestion, and the seeded two-moons
//! task used by the benchmark.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, stream};

/// Dense row-major matrix of finite features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Validation(format!(
                "feature matrix must be non-empty, got {n_rows}x{n_cols}"
            )));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::Validation(format!(
                "expected {} values for {n_rows}x{n_cols} matrix, got {}",
                n_rows * n_cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite entry at row {}, column {}",
                pos / n_cols,
                pos % n_cols
            )));
        }
        Ok(Self {
            values,
            n_rows,
            n_cols,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(Error::Validation(format!(
                "row {i} has {} entries, expected {n_cols}",
                rows[i].len()
            )));
        }
        Self::new(rows.concat(), rows.len(), n_cols)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_cols)
    }

    /// Gathers the given rows, in order. Panics on an out-of-range index.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self::new(values, indices.len(), self.n_cols)
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &FeatureMatrix) -> Result<Self> {
        if other.n_cols != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                actual: other.n_cols,
                context: "vertical stack",
            });
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Self::new(values, self.n_rows + other.n_rows, self.n_cols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 classes, got {n_classes}"
            )));
        }
        if labels.len() != features.n_rows() {
            return Err(Error::Validation(format!(
                "{} labels for {} rows",
                labels.len(),
                features.n_rows()
            )));
        }
        check_labels(&labels, n_classes, "label")?;
        Ok(Self {
            features,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Generator-proposed candidates awaiting selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub features: FeatureMatrix,
    pub proposed_labels: Vec<usize>,
    pub source_ids: Vec<String>,
}

impl CandidatePool {
    /// Builds a pool; missing source ids default to the row index.
    pub fn new(
        features: FeatureMatrix,
        proposed_labels: Vec<usize>,
        source_ids: Option<Vec<String>>,
        n_classes: usize,
    ) -> Result<Self> {
        let n = features.n_rows();
        if proposed_labels.len() != n {
            return Err(Error::Validation(format!(
                "{} proposed labels for {n} candidates",
                proposed_labels.len()
            )));
        }
        check_labels(&proposed_labels, n_classes, "proposed_label")?;
        let source_ids = match source_ids {
            Some(ids) if ids.len() != n => {
                return Err(Error::Validation(format!(
                    "{} source ids for {n} candidates",
                    ids.len()
                )))
            }
            Some(ids) => ids,
            None => (0..n).map(|i| i.to_string()).collect(),
        };
        Ok(Self {
            features,
            proposed_labels,
            source_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.proposed_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposed_labels.is_empty()
    }
}

fn check_labels(labels: &[usize], n_classes: usize, what: &str) -> Result<()> {
    match labels.iter().position(|&l| l >= n_classes) {
        Some(i) => Err(Error::Validation(format!(
            "{what} {} at row {} is not below n_classes={n_classes}",
            labels[i],
            i + 1
        ))),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Formats a float with 17 significant digits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_csv(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| csv_error(e, 1))?
        .iter()
        .map(str::to_owned)
        .collect::<Vec<_>>();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Parse {
            row: 1,
            message: "missing header row".into(),
        });
    }
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        records.push(rec.map_err(|e| csv_error(e, i + 2))?);
    }
    if records.is_empty() {
        return Err(Error::Parse {
            row: 2,
            message: "no data rows".into(),
        });
    }
    Ok((header, records))
}

fn csv_error(e: csv::Error, fallback_row: usize) -> Error {
    if let csv::ErrorKind::Io(_) = e.kind() {
        // Only reachable for read failures after a successful open.
        return Error::Parse {
            row: fallback_row,
            message: e.to_string(),
        };
    }
    let row = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_row);
    Error::Parse {
        row,
        message: e.to_string(),
    }
}

fn parse_f64(field: &str, line: usize, column: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        row: line,
        message: format!("column `{column}`: cannot parse `{field}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Validation(format!(
            "non-finite value `{field}` in column `{column}` at row {line}"
        )));
    }
    Ok(v)
}

fn parse_label(field: &str, line: usize, column: &str) -> Result<usize> {
    field.parse().map_err(|_| Error::Parse {
        row: line,
        message: format!("column `{column}`: cannot parse `{field}` as a class index"),
    })
}

/// Loads `feature..., label` rows. Row numbers in errors are file line numbers.
pub fn load_labeled_csv(path: impl AsRef<Path>, n_classes: usize) -> Result<LabeledDataset> {
    let (header, records) = open_csv(path.as_ref())?;
    if header.last().map(String::as_str) != Some("label") {
        return Err(Error::Schema(
            "last column of a labelled CSV must be `label`".into(),
        ));
    }
    let d = header.len() - 1;
    if d == 0 {
        return Err(Error::Schema("no feature columns before `label`".into()));
    }
    let mut values = Vec::with_capacity(records.len() * d);
    let mut labels = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let line = i + 2;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                row: line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        for (c, field) in rec.iter().take(d).enumerate() {
            values.push(parse_f64(field, line, &header[c])?);
        }
        labels.push(parse_label(&rec[d], line, "label")?);
    }
    let features = FeatureMatrix::new(values, labels.len(), d)?;
    LabeledDataset::new(features, labels, n_classes)
}

/// Loads `feature..., proposed_label[, source_id]` rows.
pub fn load_candidate_csv(path: impl AsRef<Path>, n_classes: usize) -> Result<CandidatePool> {
    let (header, records) = open_csv(path.as_ref())?;
    let label_col = header
        .iter()
        .position(|h| h == "proposed_label")
        .ok_or_else(|| Error::Schema("missing `proposed_label` column".into()))?;
    let id_col = match &header[label_col + 1..] {
        [] => None,
        [id] if id == "source_id" => Some(label_col + 1),
        _ => {
            return Err(Error::Schema(
                "only an optional `source_id` column may follow `proposed_label`".into(),
            ))
        }
    };
    let d = label_col;
    if d == 0 {
        return Err(Error::Schema(
            "no feature columns before `proposed_label`".into(),
        ));
    }
    let mut values = Vec::with_capacity(records.len() * d);
    let mut labels = Vec::with_capacity(records.len());
    let mut ids = id_col.map(|_| Vec::with_capacity(records.len()));
    for (i, rec) in records.iter().enumerate() {
        let line = i + 2;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                row: line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        for (c, field) in rec.iter().take(d).enumerate() {
            values.push(parse_f64(field, line, &header[c])?);
        }
        labels.push(parse_label(&rec[d], line, "proposed_label")?);
        if let (Some(col), Some(ids)) = (id_col, ids.as_mut()) {
            ids.push(rec[col].to_owned());
        }
    }
    let features = FeatureMatrix::new(values, labels.len(), d)?;
    CandidatePool::new(features, labels, ids, n_classes)
}

fn feature_header(d: usize) -> Vec<String> {
    (0..d).map(|c| format!("x{c}")).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_labeled_csv(path: impl AsRef<Path>, dataset: &LabeledDataset) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut header = feature_header(dataset.features.n_cols());
    header.push("label".into());
    let mut body = header.join(",");
    body.push('\n');
    for (row, label) in dataset.features.rows().zip(&dataset.labels) {
        for v in row {
            body.push_str(&fmt_f64(*v));
            body.push(',');
        }
        body.push_str(&label.to_string());
        body.push('\n');
    }
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_candidate_csv(path: impl AsRef<Path>, pool: &CandidatePool) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let mut header = feature_header(pool.features.n_cols());
    header.push("proposed_label".into());
    header.push("source_id".into());
    let mut body = header.join(",");
    body.push('\n');
    for ((row, label), id) in pool
        .features
        .rows()
        .zip(&pool.proposed_labels)
        .zip(&pool.source_ids)
    {
        for v in row {
            body.push_str(&fmt_f64(*v));
            body.push(',');
        }
        body.push_str(&format!("{label},{id}\n"));
    }
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Two moons
// ---------------------------------------------------------------------------

/// Horizontal coordinate where the two half-circles interlock.
pub const MOONS_CENTER_X: f64 = 0.5;

/// Geometry and pool composition of the two-moons task.
///
/// Class 0 is the upper arc `(cos t, sin t)` and class 1 the lower arc
/// `(1 - cos t, 0.5 - sin t)`, `t ~ U[0, pi]`, both with isotropic Gaussian
/// noise. The coverage gap is the vertical band `|x - 0.5| < gap_halfwidth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoMoonsSpec {
    pub n_per_class: usize,
    pub noise_sd: f64,
    pub gap_halfwidth: f64,
    /// Candidates drawn inside the gap band, per class.
    pub n_boundary_per_class: usize,
    /// Candidates drawn from the full moons, per class.
    pub n_support_per_class: usize,
    /// Candidates drawn uniformly from the inflated bounding box.
    pub n_off_support: usize,
    pub seed: u64,
}

impl TwoMoonsSpec {
    pub fn new(n_per_class: usize, noise_sd: f64, gap_halfwidth: f64, seed: u64) -> Self {
        Self {
            n_per_class,
            noise_sd,
            gap_halfwidth,
            n_boundary_per_class: n_per_class / 2,
            n_support_per_class: n_per_class / 4,
            n_off_support: n_per_class / 2,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoMoons {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub candidates: CandidatePool,
}

/// Builds the gapped two-moons task with the default pool composition.
pub fn make_two_moons(
    n_per_class: usize,
    noise_sd: f64,
    gap_halfwidth: f64,
    seed: u64,
) -> Result<TwoMoons> {
    generate_two_moons(&TwoMoonsSpec::new(n_per_class, noise_sd, gap_halfwidth, seed))
}

pub fn in_gap(x: f64, gap_halfwidth: f64) -> bool {
    (x - MOONS_CENTER_X).abs() < gap_halfwidth
}

fn moon_point<R: rand::Rng>(rng: &mut R, class: usize, noise_sd: f64) -> [f64; 2] {
    let t = rng::uniform_in(rng, 0.0, std::f64::consts::PI);
    let (x, y) = match class {
        0 => (t.cos(), t.sin()),
        _ => (1.0 - t.cos(), 0.5 - t.sin()),
    };
    [
        x + noise_sd * rng::standard_normal(rng),
        y + noise_sd * rng::standard_normal(rng),
    ]
}

/// Distance from `p` to the nearer noiseless arc, by dense sampling of `t`.
fn distance_to_arcs(p: [f64; 2]) -> f64 {
    const STEPS: usize = 512;
    let mut best = f64::INFINITY;
    for s in 0..=STEPS {
        let t = std::f64::consts::PI * s as f64 / STEPS as f64;
        for (x, y) in [(t.cos(), t.sin()), (1.0 - t.cos(), 0.5 - t.sin())] {
            best = best.min(((p[0] - x).powi(2) + (p[1] - y).powi(2)).sqrt());
        }
    }
    best
}

pub fn generate_two_moons(spec: &TwoMoonsSpec) -> Result<TwoMoons> {
    if spec.n_per_class < 10 {
        return Err(Error::Precondition(format!(
            "n_per_class must be at least 10, got {}",
            spec.n_per_class
        )));
    }
    if !(spec.noise_sd >= 0.0 && spec.noise_sd.is_finite()) {
        return Err(Error::Precondition("noise_sd must be finite and >= 0".into()));
    }
    if !(0.0..1.0).contains(&spec.gap_halfwidth) {
        return Err(Error::Precondition(
            "gap_halfwidth must lie in [0, 1)".into(),
        ));
    }

    let mut rng = rng::seeded(spec.seed, stream::TWO_MOONS_TRAIN);
    let mut train_rows = Vec::new();
    let mut train_labels = Vec::new();
    for class in 0..2 {
        for _ in 0..spec.n_per_class {
            let p = moon_point(&mut rng, class, spec.noise_sd);
            if !in_gap(p[0], spec.gap_halfwidth) {
                train_rows.extend_from_slice(&p);
                train_labels.push(class);
            }
        }
    }
    let n_train = train_labels.len();
    let train = LabeledDataset::new(FeatureMatrix::new(train_rows, n_train, 2)?, train_labels, 2)?;

    let mut rng = rng::seeded(spec.seed, stream::TWO_MOONS_TEST);
    let mut test_rows = Vec::new();
    let mut test_labels = Vec::new();
    for class in 0..2 {
        for _ in 0..spec.n_per_class {
            test_rows.extend_from_slice(&moon_point(&mut rng, class, spec.noise_sd));
            test_labels.push(class);
        }
    }
    let n_test = test_labels.len();
    let test = LabeledDataset::new(FeatureMatrix::new(test_rows, n_test, 2)?, test_labels, 2)?;

    let mut rng = rng::seeded(spec.seed, stream::TWO_MOONS_CANDIDATES);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    // Boundary stratum: rejection-sample each moon until the point lands in
    // the band. A zero-width band has no interior, so the stratum is skipped.
    if spec.gap_halfwidth > 0.0 {
        for class in 0..2 {
            let mut made = 0;
            while made < spec.n_boundary_per_class {
                let p = moon_point(&mut rng, class, spec.noise_sd);
                if in_gap(p[0], spec.gap_halfwidth) {
                    rows.extend_from_slice(&p);
                    labels.push(class);
                    ids.push(format!("boundary-{}", ids.len()));
                    made += 1;
                }
            }
        }
    }
    for class in 0..2 {
        for _ in 0..spec.n_support_per_class {
            rows.extend_from_slice(&moon_point(&mut rng, class, spec.noise_sd));
            labels.push(class);
            ids.push(format!("support-{}", ids.len()));
        }
    }
    // Off-support stratum: the noiseless moons span [-1, 2] x [-0.5, 1];
    // the box keeps the same centre with twice the extent. Points close to
    // either arc are rejected so the stratum really is off the manifold.
    let clearance = (3.0 * spec.noise_sd).max(0.25);
    let mut made = 0;
    while made < spec.n_off_support {
        let p = [
            rng::uniform_in(&mut rng, -2.5, 3.5),
            rng::uniform_in(&mut rng, -1.25, 1.75),
        ];
        let label = usize::from(rng::uniform(&mut rng) < 0.5);
        if distance_to_arcs(p) >= clearance {
            rows.extend_from_slice(&p);
            labels.push(label);
            ids.push(format!("off-{}", ids.len()));
            made += 1;
        }
    }
    let n_cand = labels.len();
    let candidates =
        CandidatePool::new(FeatureMatrix::new(rows, n_cand, 2)?, labels, Some(ids), 2)?;

    Ok(TwoMoons {
        train,
        test,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_small_labeled_file() {
        let f = write_tmp("a,b,label\n0.1,0.2,0\n1,2,1\n-3,4.5,0\n");
        let ds = load_labeled_csv(f.path(), 2).unwrap();
        assert_eq!(ds.features.n_rows(), 3);
        assert_eq!(ds.features.n_cols(), 2);
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.features.row(2), &[-3.0, 4.5]);
    }

    #[test]
    fn label_out_of_range_is_validation_error() {
        let f = write_tmp("a,b,label\n0,0,2\n");
        assert!(matches!(
            load_labeled_csv(f.path(), 2),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn empty_file_is_parse_error() {
        let f = write_tmp("");
        assert!(matches!(
            load_labeled_csv(f.path(), 2),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        let f = write_tmp("a,b,label\n0,0,1\n0,abc,1\n");
        match load_labeled_csv(f.path(), 2) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn candidate_file_without_source_ids() {
        let f = write_tmp(
            "x,y,proposed_label\n0,0,0\n1,1,1\n2,2,0\n3,3,1\n4,4,0\n",
        );
        let pool = load_candidate_csv(f.path(), 2).unwrap();
        assert_eq!(pool.len(), 5);
        assert_eq!(pool.source_ids[4], "4");
    }

    #[test]
    fn candidate_file_with_source_ids() {
        let f = write_tmp("x,proposed_label,source_id\n0.5,1,gen-a\n");
        let pool = load_candidate_csv(f.path(), 2).unwrap();
        assert_eq!(pool.source_ids, vec!["gen-a".to_string()]);
    }

    #[test]
    fn candidate_file_missing_label_column() {
        let f = write_tmp("x,y,label\n0,0,0\n");
        assert!(matches!(
            load_candidate_csv(f.path(), 2),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn candidate_nan_is_validation_error() {
        let f = write_tmp("x,y,proposed_label\n0,NaN,0\n");
        assert!(matches!(
            load_candidate_csv(f.path(), 2),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_labeled_csv("/nonexistent/nope.csv", 2).unwrap_err();
        assert!(err.is_io());
    }

    #[test]
    fn two_moons_is_deterministic() {
        let a = make_two_moons(50, 0.2, 0.3, 0).unwrap();
        let b = make_two_moons(50, 0.2, 0.3, 0).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.candidates, b.candidates);
        let c = make_two_moons(50, 0.2, 0.3, 1).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn zero_gap_removes_nothing() {
        let m = make_two_moons(40, 0.2, 0.0, 3).unwrap();
        assert_eq!(m.train.len(), 80);
    }

    #[test]
    fn gap_is_empty_in_training_but_not_in_pool() {
        let m = make_two_moons(300, 0.2, 0.3, 0).unwrap();
        let inside = |f: &FeatureMatrix| f.rows().filter(|r| in_gap(r[0], 0.3)).count();
        assert_eq!(inside(&m.train.features), 0);
        assert!(inside(&m.candidates.features) >= 1);
        assert!(m.train.len() < 600);
    }

    #[test]
    fn test_split_is_balanced() {
        let m = make_two_moons(123, 0.1, 0.25, 9).unwrap();
        let ones = m.test.labels.iter().filter(|&&l| l == 1).count();
        assert_eq!(ones, 123);
        assert_eq!(m.test.len(), 246);
    }

    #[test]
    fn off_support_candidates_clear_the_arcs() {
        let m = make_two_moons(40, 0.05, 0.3, 2).unwrap();
        for (row, id) in m.candidates.features.rows().zip(&m.candidates.source_ids) {
            if id.starts_with("off-") {
                assert!(distance_to_arcs([row[0], row[1]]) >= 0.25);
            }
        }
    }

    #[test]
    fn two_moons_preconditions() {
        assert!(make_two_moons(5, 0.2, 0.3, 0).is_err());
        assert!(make_two_moons(50, -0.1, 0.3, 0).is_err());
        assert!(make_two_moons(50, 0.2, 1.0, 0).is_err());
    }
}
