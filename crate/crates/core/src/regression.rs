//! OLS of influence values on covariates: polynomial model specifications,
//! heteroskedasticity-robust (HC1) covariance, and average partial effects
//! with delta-method standard errors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::influence::{analytic_rif, rsc_full_with, DerLooMode, InfluenceMethod, RscOptions, Strategy};
use crate::sample::Dataset;
use crate::spline::{fit_spline_rsc_stream, interpolate};

/// One design term: a product of covariate powers. An empty power list is
/// the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub name: String,
    pub powers: Vec<(usize, u32)>,
}

impl Term {
    fn intercept() -> Self {
        Term {
            name: "intercept".to_string(),
            powers: Vec::new(),
        }
    }

    fn value(&self, columns: &[Vec<f64>], row: usize) -> f64 {
        self.powers
            .iter()
            .map(|&(col, pow)| columns[col][row].powi(pow as i32))
            .product()
    }

    /// Exact derivative of the monomial with respect to covariate `k`,
    /// evaluated at `row`.
    fn derivative(&self, k: usize, columns: &[Vec<f64>], row: usize) -> f64 {
        let mut acc = 0.0;
        for (idx, &(col, pow)) in self.powers.iter().enumerate() {
            if col != k {
                continue;
            }
            let mut d = pow as f64 * columns[col][row].powi(pow as i32 - 1);
            for (other, &(ocol, opow)) in self.powers.iter().enumerate() {
                if other != idx {
                    d *= columns[ocol][row].powi(opow as i32);
                }
            }
            acc += d;
        }
        acc
    }
}

/// Regression model specification. The polynomial forms expand per covariate;
/// with several covariates Quadratic adds squares and pairwise interactions,
/// and Cubic adds cubes on top.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum ModelSpec {
    #[default]
    Linear,
    Quadratic,
    Cubic,
    Custom(Vec<Term>),
}

impl ModelSpec {
    pub fn label(&self) -> &'static str {
        match self {
            ModelSpec::Linear => "linear",
            ModelSpec::Quadratic => "quad",
            ModelSpec::Cubic => "cubic",
            ModelSpec::Custom(_) => "custom",
        }
    }

    /// Expands the specification into concrete design terms.
    pub fn terms(&self, covariate_names: &[String]) -> Result<Vec<Term>> {
        let p = covariate_names.len();
        if p == 0 {
            return Err(Error::InvalidParameter("no covariates supplied".into()));
        }
        let mut terms = vec![Term::intercept()];
        let linear = |terms: &mut Vec<Term>| {
            for (k, name) in covariate_names.iter().enumerate() {
                terms.push(Term {
                    name: name.clone(),
                    powers: vec![(k, 1)],
                });
            }
        };
        let squares = |terms: &mut Vec<Term>| {
            for (k, name) in covariate_names.iter().enumerate() {
                terms.push(Term {
                    name: format!("{name}^2"),
                    powers: vec![(k, 2)],
                });
            }
        };
        let interactions = |terms: &mut Vec<Term>| {
            for a in 0..p {
                for b in (a + 1)..p {
                    terms.push(Term {
                        name: format!("{}:{}", covariate_names[a], covariate_names[b]),
                        powers: vec![(a, 1), (b, 1)],
                    });
                }
            }
        };
        match self {
            ModelSpec::Linear => linear(&mut terms),
            ModelSpec::Quadratic => {
                linear(&mut terms);
                squares(&mut terms);
                interactions(&mut terms);
            }
            ModelSpec::Cubic => {
                linear(&mut terms);
                squares(&mut terms);
                interactions(&mut terms);
                for (k, name) in covariate_names.iter().enumerate() {
                    terms.push(Term {
                        name: format!("{name}^3"),
                        powers: vec![(k, 3)],
                    });
                }
            }
            ModelSpec::Custom(custom) => {
                for t in custom {
                    if t.powers.iter().any(|&(col, _)| col >= p) {
                        return Err(Error::InvalidParameter(format!(
                            "custom term '{}' references a missing covariate",
                            t.name
                        )));
                    }
                }
                terms = custom.clone();
            }
        }
        Ok(terms)
    }
}

/// Coefficients, HC1 covariance and average partial effects for one fit.
#[derive(Debug, Clone)]
pub struct EffectReport {
    terms: Vec<String>,
    coefficients: Vec<f64>,
    covariance: DMatrix<f64>,
    covariate_names: Vec<String>,
    ape: Vec<f64>,
    ape_se: Vec<f64>,
    n_used: usize,
    spec: ModelSpec,
    method: Option<InfluenceMethod>,
}

impl EffectReport {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, term: &str) -> Option<f64> {
        self.terms
            .iter()
            .position(|t| t == term)
            .map(|i| self.coefficients[i])
    }

    /// HC1-robust covariance of the coefficients.
    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.coefficients.len())
            .map(|i| self.covariance[(i, i)].max(0.0).sqrt())
            .collect()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// Average partial effect per covariate, in covariate order.
    pub fn ape(&self) -> &[f64] {
        &self.ape
    }

    pub fn ape_se(&self) -> &[f64] {
        &self.ape_se
    }

    pub fn n_used(&self) -> usize {
        self.n_used
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn method(&self) -> Option<InfluenceMethod> {
        self.method
    }
}

/// OLS of `y` on the design implied by `spec` over the covariates, with HC1
/// covariance and average partial effects.
pub fn ols(
    y: &[f64],
    spec: &ModelSpec,
    covariate_names: &[String],
    columns: &[Vec<f64>],
) -> Result<EffectReport> {
    let n = y.len();
    if covariate_names.len() != columns.len() {
        return Err(Error::InvalidParameter(
            "covariate names and columns disagree".into(),
        ));
    }
    for col in columns {
        if col.len() != n {
            return Err(Error::InvalidParameter(
                "covariate rows do not match outcome rows".into(),
            ));
        }
    }
    let terms = spec.terms(covariate_names)?;
    let p = terms.len();
    if n < p + 1 {
        return Err(Error::TooFewObservations { needed: p + 1, got: n });
    }

    let design = DMatrix::from_fn(n, p, |i, j| terms[j].value(columns, i));
    let target = DVector::from_column_slice(y);

    let qr = design.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if max_diag == 0.0 || (0..p).any(|i| r[(i, i)].abs() < 1e-10 * max_diag) {
        return Err(Error::RankDeficientDesign);
    }
    let q = qr.q();
    let qty = q.transpose() * &target;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficientDesign)?;

    let residuals = &target - &design * &beta;

    // HC1 sandwich: n/(n-p) (X'X)^-1 (sum e_i^2 x_i x_i') (X'X)^-1,
    // with (X'X)^-1 = R^-1 R^-T from the QR factor
    let identity = DMatrix::<f64>::identity(p, p);
    let r_inv = r
        .solve_upper_triangular(&identity)
        .ok_or(Error::RankDeficientDesign)?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let mut scaled = design.clone();
    for i in 0..n {
        let e = residuals[i];
        for j in 0..p {
            scaled[(i, j)] *= e;
        }
    }
    let meat = scaled.transpose() * &scaled;
    let dof_scale = n as f64 / (n - p) as f64;
    let covariance = (&xtx_inv * meat * &xtx_inv) * dof_scale;

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let (ape, ape_se) = partial_effects(&terms, &coefficients, &covariance, columns)?;

    Ok(EffectReport {
        terms: terms.iter().map(|t| t.name.clone()).collect(),
        coefficients,
        covariance,
        covariate_names: covariate_names.to_vec(),
        ape,
        ape_se,
        n_used: n,
        spec: spec.clone(),
        method: None,
    })
}

/// APE gradient vectors and delta-method standard errors. The APE of
/// covariate k is linear in the coefficients, APE_k = g_k' beta with
/// g_k[m] = mean_i d term_m / d x_k, so Var(APE_k) = g_k' V g_k. Monomial
/// terms differentiate exactly: the linear APE is b itself, the quadratic
/// b + 2c mean(X) and the cubic adds 3d mean(X^2).
fn partial_effects(
    terms: &[Term],
    coefficients: &[f64],
    covariance: &DMatrix<f64>,
    columns: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = columns.first().map_or(0, Vec::len);
    let mut ape = Vec::with_capacity(columns.len());
    let mut ape_se = Vec::with_capacity(columns.len());
    for k in 0..columns.len() {
        let g: Vec<f64> = terms
            .iter()
            .map(|t| {
                (0..n).map(|i| t.derivative(k, columns, i)).sum::<f64>() / n as f64
            })
            .collect();
        let effect: f64 = g.iter().zip(coefficients).map(|(gi, b)| gi * b).sum();
        let gv = DVector::from_column_slice(&g);
        let var = (gv.transpose() * covariance * &gv)[(0, 0)];
        ape.push(effect);
        ape_se.push(var.max(0.0).sqrt());
    }
    Ok((ape, ape_se))
}

/// Recomputes the average partial effects of a fitted report on the given
/// covariates. Errors with `SpecMismatch` when the covariates do not fit the
/// report's specification.
pub fn average_partial_effect(
    report: &EffectReport,
    covariate_names: &[String],
    columns: &[Vec<f64>],
) -> Result<Vec<(String, f64, f64)>> {
    let terms = report.spec.terms(covariate_names)?;
    let names: Vec<String> = terms.iter().map(|t| t.name.clone()).collect();
    if names != report.terms {
        return Err(Error::SpecMismatch(format!(
            "report terms {:?} do not match specification terms {:?}",
            report.terms, names
        )));
    }
    if columns.len() != covariate_names.len() {
        return Err(Error::SpecMismatch(
            "covariate count does not match names".into(),
        ));
    }
    let (ape, se) = partial_effects(&terms, &report.coefficients, &report.covariance, columns)?;
    Ok(covariate_names
        .iter()
        .cloned()
        .zip(ape)
        .zip(se)
        .map(|((name, a), s)| (name, a, s))
        .collect())
}

/// Numerical average-derivative APE with central differences of step
/// 1e-5 sd(X_k). Cross-check for the exact monomial route.
pub fn numerical_average_partial_effect(
    report: &EffectReport,
    covariate_names: &[String],
    columns: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let terms = report.spec.terms(covariate_names)?;
    let n = columns.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(columns.len());
    for k in 0..columns.len() {
        let col = &columns[k];
        let mean = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        if sd == 0.0 {
            return Err(Error::SpecMismatch(format!(
                "covariate {} is constant",
                covariate_names[k]
            )));
        }
        let h = 1e-5 * sd;
        let mut shifted: Vec<Vec<f64>> = columns.to_vec();
        let mut acc = 0.0;
        for i in 0..n {
            let x0 = col[i];
            shifted[k][i] = x0 + h;
            let up: f64 = terms
                .iter()
                .zip(&report.coefficients)
                .map(|(t, b)| t.value(&shifted, i) * b)
                .sum();
            shifted[k][i] = x0 - h;
            let down: f64 = terms
                .iter()
                .zip(&report.coefficients)
                .map(|(t, b)| t.value(&shifted, i) * b)
                .sum();
            shifted[k][i] = x0;
            acc += (up - down) / (2.0 * h);
        }
        out.push(acc / n as f64);
    }
    Ok(out)
}

/// Options for the influence-value stage of [`rif_regress`].
#[derive(Debug, Clone)]
pub struct RifOptions {
    /// Leave-one-out strategy for the RSC route.
    pub strategy: Strategy,
    /// Leave-one-out mode for the polarization index.
    pub der_mode: DerLooMode,
    /// Spline subsample size; None applies the default policy of
    /// [`default_subsample_size`].
    pub n_star: Option<usize>,
    pub knots: usize,
    pub seed: u64,
    /// RNG stream for the spline subsample draw.
    pub stream: u64,
}

impl Default for RifOptions {
    fn default() -> Self {
        RifOptions {
            strategy: Strategy::Incremental,
            der_mode: DerLooMode::Auto,
            n_star: None,
            knots: 5,
            seed: 0,
            stream: 1,
        }
    }
}

/// Default spline subsample size: 10% of n, at least 200 and at most 1000,
/// never larger than n.
pub fn default_subsample_size(n: usize) -> usize {
    ((n / 10).clamp(200, 1000)).min(n)
}

/// Full pipeline: influence values for `functional` by `method`, regressed
/// on the dataset's covariates under `spec`.
pub fn rif_regress(
    dataset: &Dataset,
    functional: &Functional,
    method: InfluenceMethod,
    spec: &ModelSpec,
    options: &RifOptions,
) -> Result<EffectReport> {
    let influence = match method {
        InfluenceMethod::AnalyticRif => analytic_rif(functional, dataset.outcome())?,
        InfluenceMethod::LooRsc => rsc_full_with(
            functional,
            dataset.outcome(),
            RscOptions {
                strategy: options.strategy,
                der_mode: options.der_mode,
                ..RscOptions::default()
            },
        )?,
        InfluenceMethod::SplineRsc => {
            let n_star = options
                .n_star
                .unwrap_or_else(|| default_subsample_size(dataset.n()));
            let model = fit_spline_rsc_stream(
                functional,
                dataset.outcome(),
                n_star,
                options.knots,
                options.seed,
                options.stream,
            )?;
            interpolate(&model, dataset.outcome())?
        }
    };

    let mut report = ols(
        influence.values(),
        spec,
        dataset.covariate_names(),
        dataset.columns(),
    )?;
    report.method = Some(method);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{dgp_draw, DgpKind, DgpModel};

    fn assert_rel(actual: f64, expected: f64, tol: f64) {
        let scale = expected.abs().max(1.0);
        assert!(
            (actual - expected).abs() / scale <= tol,
            "actual {actual} vs expected {expected} (rel tol {tol})"
        );
    }

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn interpolating_line_recovered_exactly() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 + 2.0 * v).collect();
        let report = ols(&y, &ModelSpec::Linear, &names(&["x"]), &[x]).unwrap();
        assert_rel(report.coefficients()[0], 1.0, 1e-10);
        assert_rel(report.coefficients()[1], 2.0, 1e-10);
        assert_eq!(report.ape()[0], report.coefficients()[1]);
    }

    #[test]
    fn constant_outcome_gives_zero_slope() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y = vec![7.5; 30];
        let report = ols(&y, &ModelSpec::Linear, &names(&["x"]), &[x]).unwrap();
        assert_rel(report.coefficients()[0], 7.5, 1e-10);
        assert!(report.coefficients()[1].abs() < 1e-12);
    }

    #[test]
    fn duplicated_covariate_is_rank_deficient() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        let result = ols(
            &y,
            &ModelSpec::Linear,
            &names(&["a", "b"]),
            &[x.clone(), x],
        );
        assert!(matches!(result, Err(Error::RankDeficientDesign)));
    }

    #[test]
    fn hc1_matches_brute_force_sandwich() {
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationScale), 150, 17).unwrap();
        let y = ds.outcome().values().to_vec();
        let x = ds.columns()[0].clone();
        let report =
            ols(&y, &ModelSpec::Quadratic, &names(&["x"]), std::slice::from_ref(&x)).unwrap();

        // independent route: explicit inverse of X'X and a double loop
        let n = y.len();
        let p = 3;
        let design = DMatrix::from_fn(n, p, |i, j| match j {
            0 => 1.0,
            1 => x[i],
            _ => x[i] * x[i],
        });
        let xtx_inv = (design.transpose() * &design).try_inverse().unwrap();
        let beta = &xtx_inv * design.transpose() * DVector::from_column_slice(&y);
        let mut meat = DMatrix::zeros(p, p);
        for i in 0..n {
            let e = y[i] - (0..p).map(|j| design[(i, j)] * beta[j]).sum::<f64>();
            for a in 0..p {
                for b in 0..p {
                    meat[(a, b)] += design[(i, a)] * design[(i, b)] * e * e;
                }
            }
        }
        let brute = xtx_inv.clone() * meat * xtx_inv * (n as f64 / (n - p) as f64);
        for a in 0..p {
            for b in 0..p {
                assert!(
                    (report.covariance()[(a, b)] - brute[(a, b)]).abs()
                        <= 1e-10 * (1.0 + brute[(a, b)].abs()),
                    "covariance ({a},{b}) differs from brute-force sandwich"
                );
            }
        }
    }

    #[test]
    fn covariance_is_positive_semidefinite() {
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationScale), 200, 23).unwrap();
        let y = ds.outcome().values().to_vec();
        let report = ols(
            &y,
            &ModelSpec::Cubic,
            &names(&["x"]),
            &[ds.columns()[0].clone()],
        )
        .unwrap();
        let eig = report.covariance().clone().symmetric_eigen();
        let trace = report.covariance().trace();
        for ev in eig.eigenvalues.iter() {
            assert!(
                *ev >= -1e-10 * trace,
                "covariance eigenvalue {ev} below -1e-10 trace"
            );
        }
    }

    #[test]
    fn quadratic_ape_examples() {
        // y = x^2 on a grid: APE = 2 mean(x) = 1
        let x: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let report = ols(&y, &ModelSpec::Quadratic, &names(&["x"]), &[x]).unwrap();
        assert_rel(report.ape()[0], 1.0, 1e-6);

        // degenerate quadratic: c = 0 so the APE is the slope
        let x: Vec<f64> = (0..60).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|v| 4.0 - 3.0 * v).collect();
        let report = ols(&y, &ModelSpec::Quadratic, &names(&["x"]), &[x]).unwrap();
        assert_rel(report.ape()[0], -3.0, 1e-8);
    }

    #[test]
    fn cubic_ape_uses_mean_of_x_squared() {
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationScale), 300, 31).unwrap();
        let x = ds.columns()[0].clone();
        let y = ds.outcome().values().to_vec();
        let report =
            ols(&y, &ModelSpec::Cubic, &names(&["x"]), std::slice::from_ref(&x)).unwrap();
        let b = report.coefficients()[1];
        let c = report.coefficients()[2];
        let d = report.coefficients()[3];
        let mx = x.iter().sum::<f64>() / x.len() as f64;
        let mx2 = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert_rel(report.ape()[0], b + 2.0 * c * mx + 3.0 * d * mx2, 1e-10);
    }

    #[test]
    fn ape_invariant_to_covariate_recentering() {
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationScale), 400, 37).unwrap();
        let x = ds.columns()[0].clone();
        let y = ds.outcome().values().to_vec();
        let shifted: Vec<f64> = x.iter().map(|v| v + 5.0).collect();
        let a = ols(&y, &ModelSpec::Quadratic, &names(&["x"]), &[x]).unwrap();
        let b = ols(&y, &ModelSpec::Quadratic, &names(&["x"]), &[shifted]).unwrap();
        assert_rel(a.ape()[0], b.ape()[0], 1e-8);
    }

    #[test]
    fn numerical_ape_matches_exact_derivatives() {
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationBimodal), 250, 41).unwrap();
        let x = ds.columns()[0].clone();
        let x2: Vec<f64> = x.iter().map(|v| (v * 7.0).sin()).collect();
        let y = ds.outcome().values().to_vec();
        let nm = names(&["x", "w"]);
        let cols = [x, x2];
        for spec in [ModelSpec::Linear, ModelSpec::Quadratic, ModelSpec::Cubic] {
            let report = ols(&y, &spec, &nm, &cols).unwrap();
            let numeric = numerical_average_partial_effect(&report, &nm, &cols).unwrap();
            for (a, b) in report.ape().iter().zip(numeric) {
                assert_rel(*a, b, 1e-6);
            }
        }
    }

    #[test]
    fn average_partial_effect_checks_spec() {
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationScale), 100, 43).unwrap();
        let x = ds.columns()[0].clone();
        let y = ds.outcome().values().to_vec();
        let report =
            ols(&y, &ModelSpec::Quadratic, &names(&["x"]), std::slice::from_ref(&x)).unwrap();
        let ok =
            average_partial_effect(&report, &names(&["x"]), std::slice::from_ref(&x)).unwrap();
        assert_rel(ok[0].1, report.ape()[0], 1e-12);
        assert!(matches!(
            average_partial_effect(&report, &names(&["x", "z"]), &[x.clone(), x]),
            Err(Error::SpecMismatch(_))
        ));
    }

    #[test]
    fn rif_regress_mean_equals_plain_ols() {
        // the analytic RIF of the mean is y itself, so that route reproduces
        // plain OLS exactly
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationScale), 500, 47).unwrap();
        let report = rif_regress(
            &ds,
            &Functional::mean(),
            InfluenceMethod::AnalyticRif,
            &ModelSpec::Linear,
            &RifOptions::default(),
        )
        .unwrap();
        let direct = ols(
            ds.outcome().values(),
            &ModelSpec::Linear,
            ds.covariate_names(),
            ds.columns(),
        )
        .unwrap();
        for (a, b) in report.coefficients().iter().zip(direct.coefficients()) {
            assert_rel(*a, *b, 1e-8);
        }
        for (a, b) in report.ape().iter().zip(direct.ape()) {
            assert_rel(*a, *b, 1e-8);
        }
        for i in 0..report.coefficients().len() {
            for j in 0..report.coefficients().len() {
                assert!(
                    (report.covariance()[(i, j)] - direct.covariance()[(i, j)]).abs()
                        <= 1e-6 * (1.0 + direct.covariance()[(i, j)].abs())
                );
            }
        }
        assert_eq!(report.method(), Some(InfluenceMethod::AnalyticRif));
    }

    #[test]
    fn rsc_of_mean_is_plain_ols_up_to_the_exact_loo_factor() {
        // RSC(mean) = y n/(n-1) - mean/(n-1), an affine map of y, so the RSC
        // slope is exactly n/(n-1) times the OLS slope and converges to it
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationScale), 500, 47).unwrap();
        let n = ds.n() as f64;
        let rsc = rif_regress(
            &ds,
            &Functional::mean(),
            InfluenceMethod::LooRsc,
            &ModelSpec::Linear,
            &RifOptions::default(),
        )
        .unwrap();
        let direct = ols(
            ds.outcome().values(),
            &ModelSpec::Linear,
            ds.covariate_names(),
            ds.columns(),
        )
        .unwrap();
        let b_rsc = rsc.coefficient("x").unwrap();
        let b = direct.coefficient("x").unwrap();
        assert_rel(b_rsc, b * n / (n - 1.0), 1e-9);
        assert!((b_rsc - b).abs() <= 1.01 * b.abs() / (n - 1.0));
    }

    #[test]
    fn rif_regress_rejects_der_with_analytic_route() {
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationScale), 100, 53).unwrap();
        assert!(matches!(
            rif_regress(
                &ds,
                &Functional::der(0.5).unwrap(),
                InfluenceMethod::AnalyticRif,
                &ModelSpec::Linear,
                &RifOptions::default(),
            ),
            Err(Error::NoAnalyticForm(_))
        ));
    }

    #[test]
    fn rif_vs_rsc_variance_slopes_agree_closely() {
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationScale), 5000, 59).unwrap();
        let rif = rif_regress(
            &ds,
            &Functional::variance(),
            InfluenceMethod::AnalyticRif,
            &ModelSpec::Linear,
            &RifOptions::default(),
        )
        .unwrap();
        let rsc = rif_regress(
            &ds,
            &Functional::variance(),
            InfluenceMethod::LooRsc,
            &ModelSpec::Linear,
            &RifOptions::default(),
        )
        .unwrap();
        let diff = (rif.coefficient("x").unwrap() - rsc.coefficient("x").unwrap()).abs();
        assert!(diff < 0.01, "RIF vs RSC slope gap {diff} not below 0.01");
    }

    #[test]
    fn spline_route_is_tagged_and_close() {
        let ds = dgp_draw(DgpModel::new(DgpKind::LocationScale), 2000, 61).unwrap();
        let sp = rif_regress(
            &ds,
            &Functional::variance(),
            InfluenceMethod::SplineRsc,
            &ModelSpec::Linear,
            &RifOptions::default(),
        )
        .unwrap();
        assert_eq!(sp.method(), Some(InfluenceMethod::SplineRsc));
        let rsc = rif_regress(
            &ds,
            &Functional::variance(),
            InfluenceMethod::LooRsc,
            &ModelSpec::Linear,
            &RifOptions::default(),
        )
        .unwrap();
        let gap = (sp.coefficient("x").unwrap() - rsc.coefficient("x").unwrap()).abs();
        assert!(gap < 0.5, "spline slope far from exact RSC slope: {gap}");
    }

    #[test]
    fn default_subsample_policy() {
        assert_eq!(default_subsample_size(100), 100);
        assert_eq!(default_subsample_size(1000), 200);
        assert_eq!(default_subsample_size(5000), 500);
        assert_eq!(default_subsample_size(50_000), 1000);
    }
}
