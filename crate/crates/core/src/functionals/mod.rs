//! Evaluation of distributional statistics on a sample or leave-one-out view:
//! mean, type-1 quantiles, plug-in variance, Gini, and the Duclos-Esteban-Ray
//! polarization index with its kernel density component.
//!
//! All statistics are plug-in functionals of the empirical CDF: the variance
//! divides by n, the quantile is an order statistic, and the Gini uses the
//! sorted-rank form sum_i (2i - n - 1) y_(i) / (n^2 mean).

pub mod kde;

pub use kde::{Bandwidth, KdeConfig, Kernel};

use crate::error::{Error, Result};
use crate::sample::Observations;

use kde::type1_index;

/// Which statistic a [`Functional`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind {
    Mean,
    /// tau strictly inside (0, 1).
    Quantile(f64),
    /// Plug-in variance, divisor n.
    Variance,
    Gini,
    /// Polarization index P_alpha with identification weight alpha.
    /// alpha in [0, 1] is accepted; [0.25, 1] is the axiomatic range.
    Der(f64),
}

/// A tagged statistic specification: the statistic itself plus the options
/// its evaluation needs (KDE settings for Der and for the quantile influence
/// function, and an optional divide-by-the-mean preprocessing step).
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    kind: FunctionalKind,
    kde: KdeConfig,
    normalize_mean: bool,
}

impl Functional {
    pub fn mean() -> Self {
        Self::from_kind(FunctionalKind::Mean)
    }

    pub fn variance() -> Self {
        Self::from_kind(FunctionalKind::Variance)
    }

    pub fn gini() -> Self {
        Self::from_kind(FunctionalKind::Gini)
    }

    pub fn quantile(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "quantile level must lie strictly inside (0,1), got {tau}"
            )));
        }
        Ok(Self::from_kind(FunctionalKind::Quantile(tau)))
    }

    pub fn der(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "polarization alpha must lie in [0,1], got {alpha}"
            )));
        }
        Ok(Self::from_kind(FunctionalKind::Der(alpha)))
    }

    fn from_kind(kind: FunctionalKind) -> Self {
        Functional {
            kind,
            kde: KdeConfig::default(),
            normalize_mean: false,
        }
    }

    pub fn with_kde(mut self, kde: KdeConfig) -> Self {
        self.kde = kde;
        self
    }

    /// Evaluate on values divided by their mean first. Makes scale-dependent
    /// statistics scale-free; under it P_0 equals twice the Gini.
    pub fn with_mean_normalization(mut self, on: bool) -> Self {
        self.normalize_mean = on;
        self
    }

    pub fn kind(&self) -> FunctionalKind {
        self.kind
    }

    pub fn kde_config(&self) -> &KdeConfig {
        &self.kde
    }

    pub fn normalizes_mean(&self) -> bool {
        self.normalize_mean
    }

    /// True for the statistics with a textbook influence function.
    pub fn has_analytic_form(&self) -> bool {
        !matches!(self.kind, FunctionalKind::Der(_))
    }

    pub fn name(&self) -> String {
        match self.kind {
            FunctionalKind::Mean => "mean".to_string(),
            FunctionalKind::Quantile(tau) => format!("quantile:{tau}"),
            FunctionalKind::Variance => "variance".to_string(),
            FunctionalKind::Gini => "gini".to_string(),
            FunctionalKind::Der(alpha) => format!("der:{alpha}"),
        }
    }

    /// Evaluates the statistic. Needs n >= 2 (n >= 3 for Der, so the KDE
    /// bandwidth is defined on every leave-one-out view).
    pub fn eval<D: Observations>(&self, data: &D) -> Result<f64> {
        let needed = if matches!(self.kind, FunctionalKind::Der(_)) {
            3
        } else {
            2
        };
        if data.len() < needed {
            return Err(Error::TooFewObservations {
                needed,
                got: data.len(),
            });
        }

        if self.normalize_mean {
            let m = data.mean();
            if m <= 0.0 {
                return Err(Error::DegenerateSample(
                    "mean-normalization requires a positive mean",
                ));
            }
            let scaled = NormalizedData::new(data, 1.0 / m);
            return self.eval_plain(&scaled);
        }
        self.eval_plain(data)
    }

    fn eval_plain<D: Observations>(&self, data: &D) -> Result<f64> {
        match self.kind {
            FunctionalKind::Mean => Ok(data.mean()),
            FunctionalKind::Variance => Ok(data.plugin_variance()),
            FunctionalKind::Quantile(tau) => {
                Ok(data.order_statistic(type1_index(data.len(), tau)))
            }
            FunctionalKind::Gini => gini_sorted(data.sorted_iter(), data.len()),
            FunctionalKind::Der(alpha) => {
                let sorted: Vec<f64> = data.sorted_iter().collect();
                der_index_sorted(&sorted, alpha, &self.kde)
            }
        }
    }
}

/// Gini from an ascending iterator: sum_i (2i - n - 1) y_(i) / (n^2 mean).
fn gini_sorted(sorted: impl Iterator<Item = f64>, n: usize) -> Result<f64> {
    let nf = n as f64;
    let mut num = 0.0;
    let mut sum = 0.0;
    for (pos, y) in sorted.enumerate() {
        let coef = 2.0 * (pos + 1) as f64 - nf - 1.0;
        num += coef * y;
        sum += y;
    }
    if sum == 0.0 {
        return Err(Error::DegenerateSample("Gini undefined for zero-mean data"));
    }
    Ok(num / (nf * sum))
}

/// Per-observation alienation values, aligned to sorted order.
#[derive(Debug, Clone)]
pub struct AlienationVector {
    /// a_hat(y_(i)) for i = 1..n in ascending order of y.
    pub values: Vec<f64>,
}

impl AlienationVector {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Alienation term of the polarization index, one prefix-sum pass over the
/// sorted values:
///
/// a_hat(y_i) = mean + y_i ((2i - 1)/n - 1) - (2 sum_{j<i} y_j + y_i)/n
pub fn der_alienation<D: Observations>(data: &D) -> Result<AlienationVector> {
    if data.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: data.len(),
        });
    }
    let sorted: Vec<f64> = data.sorted_iter().collect();
    Ok(AlienationVector {
        values: alienation_sorted(&sorted),
    })
}

pub(crate) fn alienation_sorted(sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let mut prefix = 0.0;
    let mut out = Vec::with_capacity(sorted.len());
    for (pos, &y) in sorted.iter().enumerate() {
        let i = (pos + 1) as f64;
        let a = mean + y * ((2.0 * i - 1.0) / n - 1.0) - (2.0 * prefix + y) / n;
        out.push(a);
        prefix += y;
    }
    out
}

/// Number of observations above which the polarization index switches from
/// direct kernel sums to the panel interpolant of `kde::PanelKde`.
pub(crate) const DER_ACCEL_MIN_N: usize = 20_000;

/// Polarization index P_alpha = (1/n) sum_i f_hat(y_i)^alpha a_hat(y_i),
/// with the density estimated at the sample's own points.
pub fn der_index<D: Observations>(data: &D, alpha: f64, config: &KdeConfig) -> Result<f64> {
    if data.len() < 3 {
        return Err(Error::TooFewObservations {
            needed: 3,
            got: data.len(),
        });
    }
    let sorted: Vec<f64> = data.sorted_iter().collect();
    der_index_sorted(&sorted, alpha, config)
}

pub(crate) fn der_index_sorted(sorted: &[f64], alpha: f64, config: &KdeConfig) -> Result<f64> {
    let n = sorted.len();
    let h = kde::bandwidth(sorted, config)?;
    let sums = kde::self_row_sums(sorted, h, n >= DER_ACCEL_MIN_N);
    let alienation = alienation_sorted(sorted);
    let density_scale = 0.398_942_280_401_432_7 / (n as f64 * h);
    let mut acc = 0.0;
    for (s, a) in sums.iter().zip(&alienation) {
        acc += (s * density_scale).powf(alpha) * a;
    }
    Ok(acc / n as f64)
}

/// Density estimates at arbitrary `points` from the data in `data`.
pub fn kde_at<D: Observations>(data: &D, points: &[f64], config: &KdeConfig) -> Result<Vec<f64>> {
    if data.len() < 3 {
        return Err(Error::TooFewObservations {
            needed: 3,
            got: data.len(),
        });
    }
    let sorted: Vec<f64> = data.sorted_iter().collect();
    let h = kde::bandwidth(&sorted, config)?;
    Ok(kde::density_at(&sorted, h, points))
}

/// Owned mean-normalized copy of another view's data.
struct NormalizedData {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl NormalizedData {
    fn new<D: Observations>(data: &D, scale: f64) -> Self {
        // positive scale preserves sort order
        NormalizedData {
            values: data.values_iter().map(|v| v * scale).collect(),
            sorted: data.sorted_iter().map(|v| v * scale).collect(),
        }
    }
}

impl Observations for NormalizedData {
    fn len(&self) -> usize {
        self.values.len()
    }

    fn values_iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    fn sorted_iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.sorted.iter().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{dgp_draw, raw_draws, DgpKind, DgpModel, Sample};

    fn assert_rel(actual: f64, expected: f64, tol: f64) {
        let scale = expected.abs().max(1e-300);
        assert!(
            (actual - expected).abs() / scale <= tol,
            "actual {actual} vs expected {expected} (rel tol {tol})"
        );
    }

    /// O(n^2) oracle: Gini = sum_ij |y_i - y_j| / (2 n^2 mean).
    fn gini_brute(values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut acc = 0.0;
        for &a in values {
            for &b in values {
                acc += (a - b).abs();
            }
        }
        acc / (2.0 * n * n * mean)
    }

    /// O(n^2) oracle for the mean pairwise absolute difference.
    fn mean_abs_diff_brute(values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let mut acc = 0.0;
        for &a in values {
            for &b in values {
                acc += (a - b).abs();
            }
        }
        acc / (n * n)
    }

    fn pseudo_sample(seed: u64, n: usize) -> Vec<f64> {
        let raw = raw_draws(n, seed, 0);
        raw.x
            .iter()
            .zip(&raw.u)
            .map(|(&x, &u)| 1.0 + x * 4.0 + u.abs() * 0.5)
            .collect()
    }

    #[test]
    fn variance_by_hand() {
        let s = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_rel(Functional::variance().eval(&s).unwrap(), 2.0 / 3.0, 1e-15);
    }

    #[test]
    fn mean_is_arithmetic_mean() {
        let s = Sample::new(vec![4.0, -2.0, 7.0, 1.0]).unwrap();
        assert_rel(Functional::mean().eval(&s).unwrap(), 2.5, 1e-15);
    }

    #[test]
    fn gini_examples() {
        let s = Sample::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(Functional::gini().eval(&s).unwrap(), 0.0);

        let s = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        let g = Functional::gini().eval(&s).unwrap();
        assert_rel(g, 8.0 / 36.0, 1e-14);
        assert_rel(g, gini_brute(s.values()), 1e-14);
    }

    #[test]
    fn gini_matches_brute_force_on_random_samples() {
        for seed in 0..20 {
            let values = pseudo_sample(seed, 200);
            let s = Sample::new(values.clone()).unwrap();
            assert_rel(
                Functional::gini().eval(&s).unwrap(),
                gini_brute(&values),
                1e-11,
            );
        }
    }

    #[test]
    fn quantile_matches_enumerated_definition() {
        // direct order-statistic definition on n <= 10
        for n in 2..=10usize {
            let values: Vec<f64> = (1..=n).map(|i| i as f64 * 10.0).collect();
            let s = Sample::new(values.clone()).unwrap();
            for tau in [0.1, 0.25, 0.3, 0.5, 0.6667, 0.75, 0.9] {
                let nt = n as f64 * tau;
                let k = if (nt - nt.round()).abs() < 1e-9 {
                    nt.round() as usize
                } else {
                    nt.ceil() as usize
                };
                let expected = values[k.clamp(1, n) - 1];
                let got = Functional::quantile(tau).unwrap().eval(&s).unwrap();
                assert_eq!(got, expected, "n={n} tau={tau}");
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(Functional::quantile(0.0).is_err());
        assert!(Functional::quantile(1.0).is_err());
        assert!(Functional::der(-0.1).is_err());
        assert!(Functional::der(1.5).is_err());
        assert!(Functional::der(0.5).is_ok());
    }

    #[test]
    fn scale_behavior() {
        for seed in 0..5 {
            let values = pseudo_sample(seed, 80);
            let scaled: Vec<f64> = values.iter().map(|v| v * 3.7).collect();
            let s = Sample::new(values).unwrap();
            let sc = Sample::new(scaled).unwrap();
            assert_rel(
                Functional::gini().eval(&sc).unwrap(),
                Functional::gini().eval(&s).unwrap(),
                1e-12,
            );
            assert_rel(
                Functional::variance().eval(&sc).unwrap(),
                3.7 * 3.7 * Functional::variance().eval(&s).unwrap(),
                1e-12,
            );
            assert_rel(
                Functional::mean().eval(&sc).unwrap(),
                3.7 * Functional::mean().eval(&s).unwrap(),
                1e-12,
            );
        }
    }

    #[test]
    fn kde_density_of_standard_normal_at_zero() {
        let raw = raw_draws(100_000, 9, 0);
        let s = Sample::new(raw.u).unwrap();
        let f = kde_at(&s, &[0.0], &KdeConfig::default()).unwrap()[0];
        assert!(
            (f - 0.3989).abs() < 0.02,
            "density at 0 was {f}, expected near 0.3989"
        );
    }

    #[test]
    fn kde_symmetric_data_symmetric_density() {
        let s = Sample::new(vec![-1.0, 0.0, 1.0]).unwrap();
        let cfg = KdeConfig::fixed(1.0);
        let f = kde_at(&s, &[-0.37, 0.37, -2.2, 2.2], &cfg).unwrap();
        assert_eq!(f[0], f[1]);
        assert_eq!(f[2], f[3]);
        assert!(f.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn kde_degenerate_spread() {
        let s = Sample::new(vec![0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            kde_at(&s, &[0.0], &KdeConfig::default()),
            Err(Error::DegenerateBandwidth)
        ));
        assert!(matches!(
            der_index(&s, 0.5, &KdeConfig::default()),
            Err(Error::DegenerateBandwidth)
        ));
    }

    #[test]
    fn alienation_hand_examples() {
        let s = Sample::new(vec![1.0, 1.0]).unwrap();
        let a = der_alienation(&s).unwrap();
        assert_eq!(a.values, vec![0.0, 0.0]);

        // mean(a_hat) = mean pairwise |y_i - y_j| = 2 mean Gini
        let s = Sample::new(vec![0.0, 2.0]).unwrap();
        let a = der_alienation(&s).unwrap();
        assert_rel(a.mean(), mean_abs_diff_brute(&[0.0, 2.0]), 1e-15);
        assert_rel(a.mean(), 1.0, 1e-15);

        let s = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        let a = der_alienation(&s).unwrap();
        assert_rel(a.mean(), 8.0 / 9.0, 1e-14);
    }

    #[test]
    fn alienation_identity_on_random_samples() {
        // mean(a_hat) = 2 mean Gini, against the O(n^2) oracle
        for seed in 0..50 {
            let values = pseudo_sample(seed, 120);
            let s = Sample::new(values.clone()).unwrap();
            let a = der_alienation(&s).unwrap();
            assert_rel(a.mean(), mean_abs_diff_brute(&values), 1e-10);
            let mean = s.cached_mean();
            let gini = Functional::gini().eval(&s).unwrap();
            assert_rel(a.mean(), 2.0 * mean * gini, 1e-10);
        }
    }

    #[test]
    fn alienation_prefix_matches_brute_force_elementwise() {
        // direct definition: a(y_i) = (1/n) sum_j |y_i - y_j|
        for seed in 0..10 {
            let values = pseudo_sample(seed, 300);
            let s = Sample::new(values).unwrap();
            let a = der_alienation(&s).unwrap();
            let sorted = s.sorted_values();
            let n = sorted.len() as f64;
            for (i, &ai) in a.values.iter().enumerate() {
                let brute: f64 =
                    sorted.iter().map(|&v| (sorted[i] - v).abs()).sum::<f64>() / n;
                assert_rel(ai, brute, 1e-10);
            }
        }
    }

    #[test]
    fn p_zero_equals_twice_mean_times_gini() {
        for seed in 0..100 {
            let values = pseudo_sample(seed, 60);
            let s = Sample::new(values).unwrap();
            let p0 = der_index(&s, 0.0, &KdeConfig::default()).unwrap();
            let gini = Functional::gini().eval(&s).unwrap();
            assert_rel(p0, 2.0 * s.cached_mean() * gini, 1e-10);
        }
    }

    #[test]
    fn p_zero_under_mean_normalization_is_twice_gini() {
        for seed in 0..20 {
            let values = pseudo_sample(seed, 60);
            let s = Sample::new(values).unwrap();
            let f = Functional::der(0.0).unwrap().with_mean_normalization(true);
            let p0 = f.eval(&s).unwrap();
            let gini = Functional::gini().eval(&s).unwrap();
            assert_rel(p0, 2.0 * gini, 1e-10);
        }
    }

    #[test]
    fn der_is_deterministic_and_permutation_invariant() {
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationScale), 5000, 21).unwrap();
        let f = Functional::der(0.5).unwrap();
        let a = f.eval(ds.outcome()).unwrap();
        let b = f.eval(ds.outcome()).unwrap();
        assert_eq!(a, b);
        assert!(a.is_finite());

        // reverse the input order, add exact ties
        let mut values = ds.outcome().values().to_vec();
        values.reverse();
        values[0] = values[1];
        let s1 = Sample::new(values.clone()).unwrap();
        values.reverse();
        let s2 = Sample::new(values).unwrap();
        assert_eq!(f.eval(&s1).unwrap(), f.eval(&s2).unwrap());
    }

    #[test]
    fn functional_min_size_guards() {
        let s = Sample::new(vec![1.0, 2.0]).unwrap();
        assert!(Functional::variance().eval(&s).is_ok());
        assert!(matches!(
            Functional::der(0.5).unwrap().eval(&s),
            Err(Error::TooFewObservations { .. })
        ));
    }
}
