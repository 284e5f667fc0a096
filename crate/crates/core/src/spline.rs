//! Restricted cubic spline interpolation of sensitivity curves.
//!
//! Three steps: knots are placed on the full sample, the sensitivity curve is
//! computed exactly on a random subsample and regressed by OLS on the spline
//! basis, and the fitted curve is evaluated at every observation. The basis
//! is the Durrleman-Simon restricted form: piecewise cubic, C2 at the knots,
//! constrained to be linear beyond the boundary knots so the fit does not
//! blow up in the tails.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{Functional, FunctionalKind};
use crate::influence::{DerLooMode, InfluenceMethod, InfluenceVector, Strategy};
use crate::rng::stream_rng;
use crate::sample::{Observations, Sample};

/// Strictly increasing knot locations, at least three.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotSet {
    knots: Vec<f64>,
}

impl KnotSet {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 3 {
            return Err(Error::TooFewDistinctValues);
        }
        if knots.windows(2).any(|w| w[0] >= w[1] || w[0].is_nan() || w[1].is_nan()) {
            return Err(Error::InvalidParameter(
                "knots must be strictly increasing".into(),
            ));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidParameter("knots must be finite".into()));
        }
        Ok(KnotSet { knots })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Number of basis functions, K - 2.
    pub fn basis_len(&self) -> usize {
        self.knots.len() - 2
    }
}

/// Quantile positions recommended by Harrell for K knots; equally spaced
/// between .05 and .95 outside the tabulated range.
fn knot_probabilities(k: usize) -> Vec<f64> {
    match k {
        3 => vec![0.10, 0.50, 0.90],
        4 => vec![0.05, 0.35, 0.65, 0.95],
        5 => vec![0.05, 0.275, 0.50, 0.725, 0.95],
        6 => vec![0.05, 0.23, 0.41, 0.59, 0.77, 0.95],
        7 => vec![0.025, 0.1833, 0.3417, 0.50, 0.6583, 0.8167, 0.975],
        _ => (0..k)
            .map(|j| 0.05 + 0.90 * j as f64 / (k - 1) as f64)
            .collect(),
    }
}

/// Places K knots at quantiles of the full sample. Duplicate knot values
/// (heavy ties) are collapsed; fewer than three surviving knots is an error.
pub fn select_knots(data: &Sample, k: usize) -> Result<KnotSet> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 knots, got {k}"
        )));
    }
    if data.n() < k {
        return Err(Error::TooFewObservations {
            needed: k,
            got: data.n(),
        });
    }
    let n = data.n();
    let mut knots: Vec<f64> = knot_probabilities(k)
        .iter()
        .map(|&p| data.order_statistic(crate::functionals::kde::type1_index(n, p)))
        .collect();
    knots.dedup();
    if knots.len() < 3 {
        return Err(Error::TooFewDistinctValues);
    }
    KnotSet::new(knots)
}

/// Durrleman-Simon basis value h_j(y) for j = 1..K-2:
///
/// h_j(y) = (y-k_j)+^3 - (y-k_{K-1})+^3 (k_K-k_j)/(k_K-k_{K-1})
///                     + (y-k_K)+^3 (k_{K-1}-k_j)/(k_K-k_{K-1})
pub fn rcs_basis(y: f64, knots: &KnotSet) -> Vec<f64> {
    let ks = knots.knots();
    let k_max = ks[ks.len() - 1];
    let k_pen = ks[ks.len() - 2];
    let denom = k_max - k_pen;
    let cube = |u: f64| {
        let v = u.max(0.0);
        v * v * v
    };
    (0..knots.basis_len())
        .map(|j| {
            let kj = ks[j];
            cube(y - kj) - cube(y - k_pen) * (k_max - kj) / denom
                + cube(y - k_max) * (k_pen - kj) / denom
        })
        .collect()
}

/// A fitted restricted cubic spline for one functional's sensitivity curve.
#[derive(Debug, Clone)]
pub struct SplineModel {
    knots: KnotSet,
    beta0: f64,
    beta1: f64,
    /// Coefficients of h_1..; trailing entries are absent when the fit had
    /// to drop basis terms to restore full rank.
    gamma: Vec<f64>,
    subsample: Vec<usize>,
    fit_r2: f64,
    dropped_terms: usize,
    v_n: f64,
    functional: Functional,
}

impl SplineModel {
    pub fn knots(&self) -> &KnotSet {
        &self.knots
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Indices (into the fitting sample) of the subsample used for the fit.
    pub fn subsample_indices(&self) -> &[usize] {
        &self.subsample
    }

    pub fn fit_r2(&self) -> f64 {
        self.fit_r2
    }

    /// Basis terms dropped during singular-design recovery.
    pub fn dropped_terms(&self) -> usize {
        self.dropped_terms
    }

    /// Full-sample functional value recorded at fit time.
    pub fn v_n(&self) -> f64 {
        self.v_n
    }

    pub fn functional(&self) -> &Functional {
        &self.functional
    }

    /// Linear predictor beta0 + beta1 y + sum_j gamma_j h_j(y).
    pub fn predict(&self, y: f64) -> f64 {
        let basis = rcs_basis(y, &self.knots);
        let mut acc = self.beta0 + self.beta1 * y;
        for (g, h) in self.gamma.iter().zip(basis) {
            acc += g * h;
        }
        acc
    }
}

/// Result of a plain restricted-cubic-spline OLS fit.
pub struct RcsFit {
    pub beta0: f64,
    pub beta1: f64,
    pub gamma: Vec<f64>,
    pub fitted: Vec<f64>,
    pub r2: f64,
    pub dropped_terms: usize,
}

/// OLS of `targets` on (1, y, h_1..h_{K-2}).
///
/// Columns are centered and scaled internally for conditioning; coefficients
/// come back in original basis units. When the design is numerically rank
/// deficient the highest-index basis column is dropped and the fit retried,
/// down to a single basis term; a design still singular at that point is an
/// error.
pub fn fit_rcs(y: &[f64], targets: &[f64], knots: &KnotSet) -> Result<RcsFit> {
    if y.len() != targets.len() {
        return Err(Error::InvalidParameter(
            "y and target lengths disagree".into(),
        ));
    }
    let n = y.len();
    let full_basis = knots.basis_len();
    if n < full_basis + 2 {
        return Err(Error::TooFewObservations {
            needed: full_basis + 2,
            got: n,
        });
    }

    // raw design columns: y then h_1..h_{K-2}
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(full_basis + 1);
    columns.push(y.to_vec());
    for _ in 0..full_basis {
        columns.push(Vec::with_capacity(n));
    }
    for &yi in y {
        for (j, h) in rcs_basis(yi, knots).into_iter().enumerate() {
            columns[j + 1].push(h);
        }
    }

    for kept in (2..=full_basis + 1).rev() {
        match try_ols_scaled(&columns[..kept], targets) {
            Some((coefs, fitted, r2)) => {
                return Ok(RcsFit {
                    beta0: coefs[0],
                    beta1: coefs[1],
                    gamma: coefs[2..].to_vec(),
                    fitted,
                    r2,
                    dropped_terms: full_basis + 1 - kept,
                });
            }
            None => continue,
        }
    }
    Err(Error::SingularDesign)
}

/// OLS with an intercept and the given columns, centered and scaled for
/// conditioning. Returns None when the scaled design is rank deficient.
fn try_ols_scaled(columns: &[Vec<f64>], targets: &[f64]) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let n = targets.len();
    let p = columns.len() + 1;

    let mut centers = vec![0.0; columns.len()];
    let mut scales = vec![1.0; columns.len()];
    for (j, col) in columns.iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        centers[j] = mean;
        if sd > 0.0 {
            scales[j] = sd;
        } else {
            return None; // constant column duplicates the intercept
        }
    }

    let design = DMatrix::from_fn(n, p, |i, j| {
        if j == 0 {
            1.0
        } else {
            (columns[j - 1][i] - centers[j - 1]) / scales[j - 1]
        }
    });
    let target = DVector::from_column_slice(targets);

    let qr = design.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if max_diag == 0.0 || (0..p).any(|i| r[(i, i)].abs() < 1e-10 * max_diag) {
        return None;
    }
    let qty = qr.q().transpose() * &target;
    let scaled_coefs = r.solve_upper_triangular(&qty)?;

    // back-transform to original units
    let mut coefs = vec![0.0; p];
    let mut intercept = scaled_coefs[0];
    for j in 1..p {
        let c = scaled_coefs[j] / scales[j - 1];
        coefs[j] = c;
        intercept -= c * centers[j - 1];
    }
    coefs[0] = intercept;

    let fitted_vec = design * &scaled_coefs;
    let fitted: Vec<f64> = fitted_vec.iter().copied().collect();
    let t_mean = targets.iter().sum::<f64>() / n as f64;
    let sst: f64 = targets.iter().map(|t| (t - t_mean) * (t - t_mean)).sum();
    let ssr: f64 = targets
        .iter()
        .zip(&fitted)
        .map(|(t, f)| (t - f) * (t - f))
        .sum();
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    Some((coefs, fitted, r2))
}

/// Draws `n_star` indices without replacement, computes the exact sensitivity
/// curve there, and fits the restricted cubic spline to those RSC values.
/// Deterministic for a fixed seed.
pub fn fit_spline_rsc(
    functional: &Functional,
    data: &Sample,
    n_star: usize,
    k: usize,
    seed: u64,
) -> Result<SplineModel> {
    fit_spline_rsc_stream(functional, data, n_star, k, seed, 1)
}

/// As [`fit_spline_rsc`] with an explicit substream, so Monte Carlo
/// replications keep subsampling independent of data generation.
pub fn fit_spline_rsc_stream(
    functional: &Functional,
    data: &Sample,
    n_star: usize,
    k: usize,
    seed: u64,
    stream: u64,
) -> Result<SplineModel> {
    fit_spline_rsc_with(functional, data, n_star, k, seed, stream, DerLooMode::Auto)
}

/// Full-control variant: `der_mode` picks the leave-one-out route for the
/// polarization index (the timing benchmark forces per-view exact
/// re-evaluation on both arms).
pub fn fit_spline_rsc_with(
    functional: &Functional,
    data: &Sample,
    n_star: usize,
    k: usize,
    seed: u64,
    stream: u64,
    der_mode: DerLooMode,
) -> Result<SplineModel> {
    let n = data.n();
    if n_star > n || n_star < k {
        return Err(Error::InvalidParameter(format!(
            "subsample size {n_star} must lie in [K={k}, n={n}]"
        )));
    }
    let knots = select_knots(data, k)?;

    let mut rng = stream_rng(seed, stream);
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..n_star {
        let j = i + rng.random_range(0..n - i);
        indices.swap(i, j);
    }
    let mut subsample = indices[..n_star].to_vec();
    subsample.sort_unstable();

    let v_n = functional.eval(data)?;
    let rsc_values = subsample_rsc(functional, data, &subsample, v_n, der_mode)?;
    let y_sub: Vec<f64> = subsample.iter().map(|&i| data.values()[i]).collect();

    let fit = fit_rcs(&y_sub, &rsc_values, &knots)?;
    Ok(SplineModel {
        knots,
        beta0: fit.beta0,
        beta1: fit.beta1,
        gamma: fit.gamma,
        subsample,
        fit_r2: fit.r2,
        dropped_terms: fit.dropped_terms,
        v_n,
        functional: functional.clone(),
    })
}

/// Exact RSC at the given indices. The polarization index above the exact
/// size threshold computes the full frozen-bandwidth vector once (unless the
/// caller forces per-view evaluation), which is cheaper than per-index
/// re-evaluation; everything else re-evaluates each leave-one-out view.
fn subsample_rsc(
    functional: &Functional,
    data: &Sample,
    indices: &[usize],
    v_n: f64,
    der_mode: DerLooMode,
) -> Result<Vec<f64>> {
    let n = data.n();
    let use_frozen = match der_mode {
        DerLooMode::Auto => n > 2000,
        DerLooMode::Exact => false,
        DerLooMode::FrozenFast => true,
    };
    if matches!(functional.kind(), FunctionalKind::Der(_))
        && use_frozen
        && !functional.normalizes_mean()
    {
        let full = crate::influence::rsc_full_with(
            functional,
            data,
            crate::influence::RscOptions {
                strategy: Strategy::Exact,
                der_mode: DerLooMode::FrozenFast,
                ..Default::default()
            },
        )?;
        return Ok(indices.iter().map(|&i| full.values()[i]).collect());
    }
    let results: Vec<Result<f64>> = indices
        .par_iter()
        .map(|&j| {
            let view = data.leave_one_out(j)?;
            Ok(v_n + n as f64 * (v_n - functional.eval(&view)?))
        })
        .collect();
    results.into_iter().collect()
}

/// Evaluates the fitted spline at every observation of `data`, producing a
/// spline-interpolated influence vector.
pub fn interpolate(model: &SplineModel, data: &Sample) -> Result<InfluenceVector> {
    let values: Vec<f64> = data.values().iter().map(|&y| model.predict(y)).collect();
    InfluenceVector::new(
        values,
        model.v_n,
        InfluenceMethod::SplineRsc,
        model.functional.clone(),
    )
}
