//! Monte Carlo evaluation of the estimators: population effects by numerical
//! derivative under common random numbers, bias/variance/MSE comparison of
//! the influence-value routes, and the wall-clock comparison of full versus
//! spline-interpolated sensitivity curves.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::Functional;
use crate::influence::{DerLooMode, InfluenceMethod, RscOptions, Strategy};
use crate::regression::{rif_regress, ModelSpec, RifOptions};
use crate::rng::{data_stream, subsample_stream, POPULATION_STREAM};
use crate::sample::{dataset_from_raw, raw_draws, DgpKind, DgpModel, Sample};
use crate::spline::{fit_spline_rsc_with, interpolate, select_knots};

/// Configuration of one Monte Carlo experiment.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub model: DgpKind,
    pub functional: Functional,
    pub n: usize,
    pub reps: usize,
    pub methods: Vec<InfluenceMethod>,
    pub spec: ModelSpec,
    pub n_star: Option<usize>,
    pub knots: usize,
    pub base_seed: u64,
    /// Step of the numerical population derivative.
    pub epsilon: f64,
    /// Draw size for the population derivative.
    pub pop_n: usize,
}

impl McConfig {
    pub fn new(model: DgpKind, functional: Functional, n: usize, reps: usize) -> Self {
        McConfig {
            model,
            functional,
            n,
            reps,
            methods: vec![InfluenceMethod::LooRsc],
            spec: ModelSpec::Linear,
            n_star: None,
            knots: 5,
            base_seed: 0,
            epsilon: 1e-4,
            pop_n: 1_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 replications for a variance, got {}",
                self.reps
            )));
        }
        if self.epsilon <= 0.0 || self.epsilon.is_nan() {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if self.pop_n < 10 * self.n {
            return Err(Error::InvalidParameter(format!(
                "population draw {} must be at least 10x the sample size {}",
                self.pop_n, self.n
            )));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods requested".into()));
        }
        if self.methods.contains(&InfluenceMethod::AnalyticRif)
            && !self.functional.has_analytic_form()
        {
            return Err(Error::NoAnalyticForm("der polarization index"));
        }
        Ok(())
    }
}

/// Monte Carlo summary for one method.
#[derive(Debug, Clone)]
pub struct MethodStats {
    pub method: InfluenceMethod,
    pub mean: f64,
    pub bias: f64,
    /// Population-definition variance across replications.
    pub variance: f64,
    /// Mean squared deviation from the population effect.
    pub mse: f64,
    /// Monte Carlo standard error of the mean, sqrt(variance / reps).
    pub mc_se: f64,
    /// Summed wall time of this method over all replications.
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct McReport {
    pub population: f64,
    pub n: usize,
    pub reps: usize,
    pub per_method: Vec<MethodStats>,
}

impl McReport {
    pub fn stats(&self, method: InfluenceMethod) -> Option<&MethodStats> {
        self.per_method.iter().find(|s| s.method == method)
    }
}

/// Population effect of the covariate on the functional: the forward
/// difference (v(F_eps) - v(F_0)) / eps on one large draw, with the shift
/// applied to the same raw noise (common random numbers).
pub fn population_effect(
    model: DgpKind,
    functional: &Functional,
    pop_n: usize,
    epsilon: f64,
    seed: u64,
) -> Result<f64> {
    if pop_n < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: pop_n,
        });
    }
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let raw = raw_draws(pop_n, seed, POPULATION_STREAM);
    let base = Sample::new(DgpModel::new(model).outcome_from_raw(&raw))?;
    let shifted = Sample::new(DgpModel::with_shift(model, epsilon).outcome_from_raw(&raw))?;
    Ok((functional.eval(&shifted)? - functional.eval(&base)?) / epsilon)
}

/// Runs the experiment: per replication, draw a dataset on its own stream,
/// compute the average partial effect by every requested method, then
/// aggregate. Replications run in parallel; results are gathered in
/// replication order, so the report does not depend on the thread count.
/// A failed replication aborts the run with its stream reported.
pub fn run_mc(config: &McConfig) -> Result<McReport> {
    config.validate()?;
    let population = population_effect(
        config.model,
        &config.functional,
        config.pop_n,
        config.epsilon,
        config.base_seed,
    )?;

    let per_rep: Vec<Result<Vec<(f64, f64)>>> = (0..config.reps)
        .into_par_iter()
        .map(|rep| one_rep(config, rep))
        .collect();

    let mut collected: Vec<Vec<(f64, f64)>> = Vec::with_capacity(config.reps);
    for (rep, result) in per_rep.into_iter().enumerate() {
        match result {
            Ok(v) => collected.push(v),
            Err(source) => {
                return Err(Error::ReplicationFailed {
                    rep,
                    stream: data_stream(rep),
                    source: Box::new(source),
                })
            }
        }
    }

    let reps_f = config.reps as f64;
    let per_method = config
        .methods
        .iter()
        .enumerate()
        .map(|(m, &method)| {
            let apes: Vec<f64> = collected.iter().map(|r| r[m].0).collect();
            let seconds: f64 = collected.iter().map(|r| r[m].1).sum();
            let mean = apes.iter().sum::<f64>() / reps_f;
            let variance = apes.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / reps_f;
            let mse = apes
                .iter()
                .map(|a| (a - population) * (a - population))
                .sum::<f64>()
                / reps_f;
            MethodStats {
                method,
                mean,
                bias: mean - population,
                variance,
                mse,
                mc_se: (variance / reps_f).sqrt(),
                seconds,
            }
        })
        .collect();

    Ok(McReport {
        population,
        n: config.n,
        reps: config.reps,
        per_method,
    })
}

fn one_rep(config: &McConfig, rep: usize) -> Result<Vec<(f64, f64)>> {
    let raw = raw_draws(config.n, config.base_seed, data_stream(rep));
    let dataset = dataset_from_raw(DgpModel::new(config.model), &raw)?;
    let mut out = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let started = Instant::now();
        let report = rif_regress(
            &dataset,
            &config.functional,
            method,
            &config.spec,
            &RifOptions {
                strategy: Strategy::Incremental,
                der_mode: DerLooMode::Auto,
                n_star: config.n_star,
                knots: config.knots,
                seed: config.base_seed,
                stream: subsample_stream(rep),
            },
        )?;
        out.push((report.ape()[0], started.elapsed().as_secs_f64()));
    }
    Ok(out)
}

/// One row of the computing-time comparison.
#[derive(Debug, Clone)]
pub struct TimingRow {
    pub n: usize,
    pub n_star: usize,
    pub reps: usize,
    /// Mean seconds for the full leave-one-out curve.
    pub rsc_seconds: f64,
    /// Mean seconds for knot selection + subsample curve + fit + interpolation.
    pub spline_seconds: f64,
    /// spline_seconds / rsc_seconds.
    pub ratio: f64,
}

/// Times the full exact sensitivity curve against the spline route on fresh
/// location-scale draws. Both arms re-evaluate each leave-one-out view in
/// full, so the ratio reflects the subsampling alone; an untimed warm-up run
/// precedes the timed repetitions at each size. The subsample follows the
/// default policy applied to `n_star_frac`.
pub fn bench_timing(
    functional: &Functional,
    sizes: &[usize],
    n_star_frac: f64,
    reps: usize,
    base_seed: u64,
) -> Result<Vec<TimingRow>> {
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("no sizes given".into()));
    }
    if reps == 0 {
        return Err(Error::InvalidParameter("need at least one timed rep".into()));
    }
    if !(n_star_frac > 0.0 && n_star_frac <= 1.0) {
        return Err(Error::InvalidParameter(
            "subsample fraction must lie in (0, 1]".into(),
        ));
    }

    let exact = RscOptions {
        strategy: Strategy::Exact,
        der_mode: DerLooMode::Exact,
        ..RscOptions::default()
    };

    let mut rows = Vec::with_capacity(sizes.len());
    for (size_idx, &n) in sizes.iter().enumerate() {
        let n_star = (((n as f64 * n_star_frac).round() as usize).clamp(200, 1000))
            .min(n)
            .max(5);
        let mut rsc_total = 0.0;
        let mut spline_total = 0.0;
        for rep in 0..=reps {
            let stream = data_stream(size_idx * (reps + 1) + rep);
            let raw = raw_draws(n, base_seed, stream);
            let dataset = dataset_from_raw(DgpModel::new(DgpKind::LocationScale), &raw)?;
            let outcome = dataset.outcome();

            let started = Instant::now();
            let full = crate::influence::rsc_full_with(functional, outcome, exact)?;
            let rsc_elapsed = started.elapsed().as_secs_f64();

            let started = Instant::now();
            select_knots(outcome, 5)?;
            let model = fit_spline_rsc_with(
                functional,
                outcome,
                n_star,
                5,
                base_seed,
                subsample_stream(size_idx * (reps + 1) + rep),
                DerLooMode::Exact,
            )?;
            let interp = interpolate(&model, outcome)?;
            let spline_elapsed = started.elapsed().as_secs_f64();

            // keep the optimizer honest
            std::hint::black_box((full.values().len(), interp.values().len()));

            if rep > 0 {
                rsc_total += rsc_elapsed;
                spline_total += spline_elapsed;
            }
        }
        let rsc_mean = rsc_total / reps as f64;
        let spline_mean = spline_total / reps as f64;
        rows.push(TimingRow {
            n,
            n_star,
            reps,
            rsc_seconds: rsc_mean,
            spline_seconds: spline_mean,
            ratio: spline_mean / rsc_mean,
        });
    }
    Ok(rows)
}
