//! Empirical-distribution representation, CSV ingestion and the synthetic
//! data-generating processes used by the Monte Carlo harness.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Read access to an ordered collection of observations.
///
/// Implemented by [`Sample`] and [`LeaveOneOutView`] so every statistic can be
/// evaluated on the full sample or on a leave-one-out view through the same
/// code path. The provided moment methods recompute from scratch by iteration;
/// leave-one-out evaluation through this trait is therefore a genuine
/// re-evaluation, not an algebraic shortcut.
pub trait Observations {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values in original observation order.
    fn values_iter(&self) -> impl Iterator<Item = f64> + '_;

    /// Values in ascending order (stable: ties keep original relative order).
    fn sorted_iter(&self) -> impl Iterator<Item = f64> + '_;

    fn mean(&self) -> f64 {
        let mut sum = 0.0;
        for v in self.values_iter() {
            sum += v;
        }
        sum / self.len() as f64
    }

    /// Plug-in variance (divisor n), two-pass for stability.
    fn plugin_variance(&self) -> f64 {
        let mean = self.mean();
        let mut ss = 0.0;
        for v in self.values_iter() {
            let d = v - mean;
            ss += d * d;
        }
        ss / self.len() as f64
    }

    /// k-th order statistic, 1-based.
    fn order_statistic(&self, k: usize) -> f64 {
        debug_assert!(k >= 1 && k <= self.len());
        self.sorted_iter().nth(k - 1).expect("k within range")
    }
}

/// An iid sample with cached sort order and summary moments.
#[derive(Debug, Clone)]
pub struct Sample {
    values: Vec<f64>,
    sorted: Vec<f64>,
    /// sorted position -> original index
    sort_index: Vec<u32>,
    /// original index -> sorted position
    rank: Vec<u32>,
    mean: f64,
    plugin_variance: f64,
}

impl Sample {
    /// Builds a sample. Requires n >= 2 and all values finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::TooFewObservations { needed: 2, got: n });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at row {bad}"
            )));
        }
        let mut sort_index: Vec<u32> = (0..n as u32).collect();
        // stable: ties keep original relative order
        sort_index.sort_by(|&a, &b| {
            values[a as usize]
                .partial_cmp(&values[b as usize])
                .expect("finite values compare")
        });
        let sorted: Vec<f64> = sort_index.iter().map(|&i| values[i as usize]).collect();
        let mut rank = vec![0u32; n];
        for (pos, &orig) in sort_index.iter().enumerate() {
            rank[orig as usize] = pos as u32;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        Ok(Sample {
            values,
            sorted,
            sort_index,
            rank,
            mean,
            plugin_variance: ss / n as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// Permutation mapping sorted position to original index.
    pub fn sort_index(&self) -> &[u32] {
        &self.sort_index
    }

    /// Sorted position of the observation at original index `i`.
    pub fn rank_of(&self, i: usize) -> usize {
        self.rank[i] as usize
    }

    pub fn cached_mean(&self) -> f64 {
        self.mean
    }

    pub fn cached_plugin_variance(&self) -> f64 {
        self.plugin_variance
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.n() - 1]
    }

    /// Zero-copy leave-one-out view excluding original index `j`.
    ///
    /// Requires n >= 3 so the view still has at least two observations.
    pub fn leave_one_out(&self, j: usize) -> Result<LeaveOneOutView<'_>> {
        if j >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.n(),
            });
        }
        if self.n() < 3 {
            return Err(Error::TooFewObservations {
                needed: 3,
                got: self.n(),
            });
        }
        Ok(LeaveOneOutView {
            parent: self,
            excluded: j,
        })
    }
}

impl Observations for Sample {
    fn len(&self) -> usize {
        self.values.len()
    }

    fn values_iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    fn sorted_iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.sorted.iter().copied()
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn plugin_variance(&self) -> f64 {
        self.plugin_variance
    }

    fn order_statistic(&self, k: usize) -> f64 {
        self.sorted[k - 1]
    }
}

/// View of a sample with one observation excluded. Holds only a reference
/// and the excluded index; the parent is never modified.
#[derive(Debug, Clone, Copy)]
pub struct LeaveOneOutView<'a> {
    parent: &'a Sample,
    excluded: usize,
}

impl<'a> LeaveOneOutView<'a> {
    pub fn parent(&self) -> &'a Sample {
        self.parent
    }

    pub fn excluded(&self) -> usize {
        self.excluded
    }
}

impl Observations for LeaveOneOutView<'_> {
    fn len(&self) -> usize {
        self.parent.n() - 1
    }

    fn values_iter(&self) -> impl Iterator<Item = f64> + '_ {
        let j = self.excluded;
        self.parent
            .values
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != j)
            .map(|(_, v)| *v)
    }

    fn sorted_iter(&self) -> impl Iterator<Item = f64> + '_ {
        let p = self.parent.rank_of(self.excluded);
        self.parent
            .sorted
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != p)
            .map(|(_, v)| *v)
    }
}

/// Outcome sample plus a named covariate matrix with matching row count.
#[derive(Debug, Clone)]
pub struct Dataset {
    outcome: Sample,
    outcome_name: String,
    covariate_names: Vec<String>,
    /// column-major, each column has outcome.n() entries
    columns: Vec<Vec<f64>>,
    dropped_rows: usize,
}

impl Dataset {
    pub fn new(
        outcome: Sample,
        outcome_name: impl Into<String>,
        covariate_names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if covariate_names.len() != columns.len() {
            return Err(Error::InvalidParameter(
                "covariate names and columns disagree".into(),
            ));
        }
        for (name, col) in covariate_names.iter().zip(&columns) {
            if col.len() != outcome.n() {
                return Err(Error::InvalidParameter(format!(
                    "covariate '{name}' has {} rows, outcome has {}",
                    col.len(),
                    outcome.n()
                )));
            }
        }
        Ok(Dataset {
            outcome,
            outcome_name: outcome_name.into(),
            covariate_names,
            columns,
            dropped_rows: 0,
        })
    }

    pub fn outcome(&self) -> &Sample {
        &self.outcome
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome_name
    }

    pub fn n(&self) -> usize {
        self.outcome.n()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// Rows dropped during ingestion because of missing or non-numeric cells.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    /// Replaces the outcome values, keeping covariates (used by the
    /// mean-normalization preprocessing switch).
    pub fn with_outcome_values(&self, values: Vec<f64>) -> Result<Self> {
        let outcome = Sample::new(values)?;
        let mut ds = self.clone();
        if outcome.n() != ds.n() {
            return Err(Error::InvalidParameter("row count changed".into()));
        }
        ds.outcome = outcome;
        Ok(ds)
    }

    /// Writes the dataset back out as CSV (headers, '.' decimal separator).
    /// Floats are written in shortest round-trip form, so a reload recovers
    /// the exact same values.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "{}", self.outcome_name)?;
        for name in &self.covariate_names {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for i in 0..self.n() {
            write!(out, "{}", self.outcome.values()[i])?;
            for col in &self.columns {
                write!(out, ",{}", col[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Loads a CSV file (RFC-4180-style, first row headers, UTF-8) into a
/// [`Dataset`]. Rows with any missing or non-numeric cell in the selected
/// columns are dropped; the drop count is surfaced on the dataset.
pub fn load_csv(path: &Path, outcome_col: &str, covariate_cols: &[String]) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::UnparseableFile(e.to_string()))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::UnparseableFile(e.to_string()))?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let outcome_idx = find(outcome_col)?;
    let cov_idx: Vec<usize> = covariate_cols
        .iter()
        .map(|c| find(c))
        .collect::<Result<_>>()?;

    let mut outcome = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); cov_idx.len()];
    let mut dropped = 0usize;

    for record in reader.records() {
        let record = record.map_err(|e| Error::UnparseableFile(e.to_string()))?;
        let parse = |idx: usize| -> Option<f64> {
            record
                .get(idx)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
        };
        let y = parse(outcome_idx);
        let xs: Vec<Option<f64>> = cov_idx.iter().map(|&i| parse(i)).collect();
        if let (Some(y), true) = (y, xs.iter().all(Option::is_some)) {
            outcome.push(y);
            for (col, x) in columns.iter_mut().zip(xs) {
                col.push(x.unwrap());
            }
        } else {
            dropped += 1;
        }
    }

    if outcome.len() < 2 {
        return Err(Error::EmptyAfterFiltering {
            kept: outcome.len(),
            dropped,
        });
    }

    let mut ds = Dataset::new(
        Sample::new(outcome)?,
        outcome_col,
        covariate_cols.to_vec(),
        columns,
    )?;
    ds.dropped_rows = dropped;
    Ok(ds)
}

/// The two synthetic models of the Monte Carlo study. Both share the
/// baseline Y = 20 + X + W with X ~ Uniform(0,1):
///
/// * location-scale: W = (1 + X) U, U ~ N(0,1);
/// * location-bimodal: W = (D(-4 + U(2 - X)) + (1 - D)(4 + Z(2 - X))) / 5
///   with U, Z ~ N(0,1) and D ~ Bernoulli(0.5), all independent.
///
/// `shift` moves X to X + shift everywhere it appears, which is how the
/// population effect of X on a statistic is probed numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DgpKind {
    LocationScale,
    LocationBimodal,
}

impl fmt::Display for DgpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DgpKind::LocationScale => write!(f, "location-scale"),
            DgpKind::LocationBimodal => write!(f, "location-bimodal"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DgpModel {
    pub kind: DgpKind,
    pub shift: f64,
}

impl DgpModel {
    pub fn new(kind: DgpKind) -> Self {
        DgpModel { kind, shift: 0.0 }
    }

    pub fn with_shift(kind: DgpKind, shift: f64) -> Self {
        DgpModel { kind, shift }
    }

    /// Outcome values implied by raw draws under this model and shift.
    pub fn outcome_from_raw(&self, raw: &RawDraws) -> Vec<f64> {
        let eps = self.shift;
        match self.kind {
            DgpKind::LocationScale => raw
                .x
                .iter()
                .zip(&raw.u)
                .map(|(&x, &u)| {
                    let xs = x + eps;
                    20.0 + xs + (1.0 + xs) * u
                })
                .collect(),
            DgpKind::LocationBimodal => {
                let mut y = Vec::with_capacity(raw.x.len());
                for i in 0..raw.x.len() {
                    let xs = raw.x[i] + eps;
                    let spread = 2.0 - xs;
                    let component = if raw.d[i] {
                        -4.0 + raw.u[i] * spread
                    } else {
                        4.0 + raw.z[i] * spread
                    };
                    y.push(20.0 + xs + component / 5.0);
                }
                y
            }
        }
    }
}

/// The model-independent random inputs of one synthetic draw. Reusing one
/// `RawDraws` across shift values gives common random numbers, so a numerical
/// derivative in the shift is differenced on identical noise.
#[derive(Debug, Clone)]
pub struct RawDraws {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub d: Vec<bool>,
}

/// Draws the raw inputs for `n` observations on `stream` of `seed`.
/// Per observation the draw order is fixed: x, u, z, d.
pub fn raw_draws(n: usize, seed: u64, stream: u64) -> RawDraws {
    let mut rng = stream_rng(seed, stream);
    let mut x = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for _ in 0..n {
        x.push(rng.random::<f64>());
        u.push(StandardNormal.sample(&mut rng));
        z.push(StandardNormal.sample(&mut rng));
        d.push(rng.random::<bool>());
    }
    RawDraws { x, u, z, d }
}

/// Draws a synthetic dataset: one outcome column "y", one covariate column
/// "x". Deterministic for a fixed seed (stream 0).
pub fn dgp_draw(model: DgpModel, n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let raw = raw_draws(n, seed, 0);
    dataset_from_raw(model, &raw)
}

/// Builds the dataset implied by `raw` under `model`. The covariate column
/// is the unshifted X; the shift enters only through the outcome.
pub fn dataset_from_raw(model: DgpModel, raw: &RawDraws) -> Result<Dataset> {
    let y = model.outcome_from_raw(raw);
    Dataset::new(Sample::new(y)?, "y", vec!["x".to_string()], vec![raw.x.clone()])
}
