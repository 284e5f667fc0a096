//! Command-line front end: dataset ingestion, effect estimation, Monte Carlo
//! and timing drivers, plot-data emission. Exit codes: 0 success, 2 invalid
//! flags, 3 data errors, 4 numeric failures.

mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rscreg_core::error::Error as CoreError;
use rscreg_core::functionals::Functional;
use rscreg_core::influence::{InfluenceMethod, RscOptions, Strategy};
use rscreg_core::montecarlo::{bench_timing, run_mc, McConfig};
use rscreg_core::regression::{rif_regress, ModelSpec, RifOptions};
use rscreg_core::sample::{dgp_draw, load_csv, Dataset, DgpKind, DgpModel};
use rscreg_core::spline::{fit_spline_rsc_stream, interpolate};

use manifest::{file_digest, RunManifest};

#[derive(Parser)]
#[command(name = "rscreg", version, about = "Covariate effects on distributional statistics via recentered sensitivity curves")]
struct Cli {
    /// Cap the worker thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate covariate effects on a statistic from a CSV dataset.
    Regress(RegressArgs),
    /// Monte Carlo comparison of the influence-value routes.
    Mc(McArgs),
    /// Wall-clock comparison of full and spline-interpolated curves.
    Bench(BenchArgs),
    /// Emit the exact and spline-interpolated curves for plotting.
    Curve(CurveArgs),
}

#[derive(Args)]
struct RegressArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    outcome: String,
    /// Comma-separated covariate column names.
    #[arg(long, value_delimiter = ',', required = true)]
    covariates: Vec<String>,
    /// mean | quantile:T | variance | gini | der:A
    #[arg(long, value_parser = parse_functional)]
    functional: FunctionalArg,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = SpecArg::Linear)]
    spec: SpecArg,
    /// Spline subsample size (default: 10% of n clamped to [200, 1000]).
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long, default_value_t = 5)]
    knots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiply reported estimates by this factor.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Divide the outcome by its mean before evaluating the statistic.
    #[arg(long, default_value_t = false)]
    normalize_mean: bool,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long, value_parser = parse_functional)]
    functional: FunctionalArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    reps: usize,
    /// Comma-separated subset of rif, rsc, rsc-sp.
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<MethodArg>,
    #[arg(long, value_enum, default_value_t = SpecArg::Linear)]
    spec: SpecArg,
    #[arg(long, default_value_t = 1_000_000)]
    pop_n: usize,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long, default_value_t = 5)]
    knots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = false)]
    normalize_mean: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_parser = parse_functional)]
    functional: FunctionalArg,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    subsample_frac: f64,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CurveArgs {
    /// CSV input; requires --outcome.
    #[arg(long, conflicts_with = "model")]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    outcome: Option<String>,
    /// Synthetic model source; requires --n.
    #[arg(long, value_enum, conflicts_with = "data")]
    model: Option<ModelArg>,
    #[arg(long, requires = "model")]
    n: Option<usize>,
    #[arg(long, value_parser = parse_functional)]
    functional: FunctionalArg,
    #[arg(long)]
    subsample: usize,
    #[arg(long, default_value_t = 5)]
    knots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = false)]
    normalize_mean: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Rif,
    Rsc,
    #[value(name = "rsc-sp")]
    RscSp,
}

impl From<MethodArg> for InfluenceMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Rif => InfluenceMethod::AnalyticRif,
            MethodArg::Rsc => InfluenceMethod::LooRsc,
            MethodArg::RscSp => InfluenceMethod::SplineRsc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpecArg {
    Linear,
    Quad,
    Cubic,
}

impl From<SpecArg> for ModelSpec {
    fn from(s: SpecArg) -> Self {
        match s {
            SpecArg::Linear => ModelSpec::Linear,
            SpecArg::Quad => ModelSpec::Quadratic,
            SpecArg::Cubic => ModelSpec::Cubic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Locscale,
    Bimodal,
}

impl From<ModelArg> for DgpKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Locscale => DgpKind::LocationScale,
            ModelArg::Bimodal => DgpKind::LocationBimodal,
        }
    }
}

#[derive(Clone, Debug)]
enum FunctionalArg {
    Mean,
    Quantile(f64),
    Variance,
    Gini,
    Der(f64),
}

fn parse_functional(s: &str) -> Result<FunctionalArg, String> {
    let (name, param) = match s.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (s, None),
    };
    let need = |p: Option<&str>| -> Result<f64, String> {
        p.ok_or_else(|| format!("'{name}' needs a parameter, e.g. {name}:0.5"))?
            .parse::<f64>()
            .map_err(|e| format!("bad parameter for '{name}': {e}"))
    };
    match name {
        "mean" => Ok(FunctionalArg::Mean),
        "variance" => Ok(FunctionalArg::Variance),
        "gini" => Ok(FunctionalArg::Gini),
        "quantile" => Ok(FunctionalArg::Quantile(need(param)?)),
        "der" => Ok(FunctionalArg::Der(need(param)?)),
        other => Err(format!(
            "unknown functional '{other}' (expected mean, quantile:T, variance, gini, der:A)"
        )),
    }
}

impl FunctionalArg {
    fn build(&self, normalize_mean: bool) -> Result<Functional, CoreError> {
        let f = match *self {
            FunctionalArg::Mean => Functional::mean(),
            FunctionalArg::Variance => Functional::variance(),
            FunctionalArg::Gini => Functional::gini(),
            FunctionalArg::Quantile(tau) => Functional::quantile(tau)?,
            FunctionalArg::Der(alpha) => Functional::der(alpha)?,
        };
        Ok(f.with_mean_normalization(normalize_mean))
    }
}

fn exit_code(err: &CoreError) -> i32 {
    match err {
        CoreError::MissingColumn(_)
        | CoreError::EmptyAfterFiltering { .. }
        | CoreError::UnparseableFile(_)
        | CoreError::Io(_) => 3,
        CoreError::InvalidParameter(_) => 2,
        CoreError::ReplicationFailed { source, .. } => exit_code(source),
        _ => 4,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            std::process::exit(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    if let Err(err) = run(&cli) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

fn run(cli: &Cli) -> Result<(), CoreError> {
    std::fs::create_dir_all(&cli.out_dir)?;
    match &cli.command {
        Command::Regress(args) => cmd_regress(args, &cli.out_dir),
        Command::Mc(args) => cmd_mc(args, &cli.out_dir),
        Command::Bench(args) => cmd_bench(args, &cli.out_dir),
        Command::Curve(args) => cmd_curve(args, &cli.out_dir),
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CoreError> {
    std::fs::write(path, body)?;
    Ok(())
}

fn cmd_regress(args: &RegressArgs, out_dir: &Path) -> Result<(), CoreError> {
    let started = Instant::now();
    let functional = args.functional.build(args.normalize_mean)?;
    let dataset = load_csv(&args.data, &args.outcome, &args.covariates)?;
    if dataset.dropped_rows() > 0 {
        eprintln!(
            "note: dropped {} rows with missing or non-numeric cells",
            dataset.dropped_rows()
        );
    }
    let report = rif_regress(
        &dataset,
        &functional,
        InfluenceMethod::from(args.method),
        &args.spec.into(),
        &RifOptions {
            n_star: args.subsample,
            knots: args.knots,
            seed: args.seed,
            ..RifOptions::default()
        },
    )?;

    let scale = args.scale;
    let ses = report.standard_errors();
    let mut body = String::from("term,coef,se,ape,ape_se\n");
    for (i, term) in report.terms().iter().enumerate() {
        let ape_cols = report
            .covariate_names()
            .iter()
            .position(|name| name == term)
            .map(|k| {
                format!(
                    "{},{}",
                    report.ape()[k] * scale,
                    report.ape_se()[k] * scale
                )
            })
            .unwrap_or_else(|| ",".to_string());
        body.push_str(&format!(
            "{term},{},{},{ape_cols}\n",
            report.coefficients()[i] * scale,
            ses[i] * scale
        ));
    }
    write_file(&out_dir.join("effects.csv"), &body)?;

    let mut manifest = RunManifest::new("regress", args.seed);
    manifest.input_digest = Some(file_digest(&args.data)?);
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    manifest.write(out_dir)?;

    println!(
        "regress: {} on {} rows, {} method, wrote effects.csv",
        functional.name(),
        report.n_used(),
        InfluenceMethod::from(args.method).label()
    );
    Ok(())
}

fn cmd_mc(args: &McArgs, out_dir: &Path) -> Result<(), CoreError> {
    let started = Instant::now();
    let functional = args.functional.build(args.normalize_mean)?;
    if args.reps < 2 {
        return Err(CoreError::InvalidParameter(
            "--reps must be at least 2 (the variance of one replication is undefined)".into(),
        ));
    }
    let mut config = McConfig::new(args.model.into(), functional, args.n, args.reps);
    config.methods = args.methods.iter().map(|&m| m.into()).collect();
    config.spec = args.spec.into();
    config.n_star = args.subsample;
    config.knots = args.knots;
    config.base_seed = args.seed;
    config.epsilon = args.epsilon;
    config.pop_n = args.pop_n;
    let report = run_mc(&config)?;

    let s = args.scale;
    let labels: Vec<&str> = report.per_method.iter().map(|m| m.method.label()).collect();
    let mut body = format!("statistic,{}\n", labels.join(","));
    let row = |name: &str, values: Vec<f64>| -> String {
        let cells: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        format!("{name},{}\n", cells.join(","))
    };
    body.push_str(&row(
        "population",
        report.per_method.iter().map(|_| report.population * s).collect(),
    ));
    body.push_str(&row(
        "mean",
        report.per_method.iter().map(|m| m.mean * s).collect(),
    ));
    body.push_str(&row(
        "bias",
        report.per_method.iter().map(|m| m.bias * s).collect(),
    ));
    body.push_str(&row(
        "var",
        report.per_method.iter().map(|m| m.variance * s * s).collect(),
    ));
    body.push_str(&row(
        "mse",
        report.per_method.iter().map(|m| m.mse * s * s).collect(),
    ));
    write_file(&out_dir.join("mc_report.csv"), &body)?;

    let mut manifest = RunManifest::new("mc", args.seed);
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    manifest.write(out_dir)?;

    println!(
        "mc: {} reps at n={}, wrote mc_report.csv",
        report.reps, report.n
    );
    print!("{:>12}", "statistic");
    for m in &report.per_method {
        print!("{:>14}", m.method.label());
    }
    println!();
    let rows: [(&str, Box<dyn Fn(&rscreg_core::montecarlo::MethodStats) -> f64>); 6] = [
        ("population", Box::new(move |_| report.population * s)),
        ("mean", Box::new(move |m| m.mean * s)),
        ("bias", Box::new(move |m| m.bias * s)),
        ("var", Box::new(move |m| m.variance * s * s)),
        ("mse", Box::new(move |m| m.mse * s * s)),
        ("mc-se", Box::new(move |m| m.mc_se * s)),
    ];
    for (name, value) in &rows {
        print!("{name:>12}");
        for m in &report.per_method {
            print!("{:>14.6}", value(m));
        }
        println!();
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs, out_dir: &Path) -> Result<(), CoreError> {
    let started = Instant::now();
    if args.reps == 0 {
        return Err(CoreError::InvalidParameter(
            "--reps must be at least 1".into(),
        ));
    }
    let functional = args.functional.build(false)?;
    let rows = bench_timing(
        &functional,
        &args.sizes,
        args.subsample_frac,
        args.reps,
        args.seed,
    )?;

    let mut body = String::from("functional,n,n_star,reps,rsc_seconds,rsc_sp_seconds,ratio\n");
    let mut plot = String::from("n,method,seconds\n");
    for r in &rows {
        body.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            functional.name(),
            r.n,
            r.n_star,
            r.reps,
            r.rsc_seconds,
            r.spline_seconds,
            r.ratio
        ));
        plot.push_str(&format!("{},rsc,{}\n", r.n, r.rsc_seconds));
        plot.push_str(&format!("{},rsc-sp,{}\n", r.n, r.spline_seconds));
    }
    write_file(&out_dir.join("timing.csv"), &body)?;
    write_file(&out_dir.join("timing_plotdata.csv"), &plot)?;

    let mut manifest = RunManifest::new("bench", args.seed);
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    manifest.write(out_dir)?;

    println!("bench: wrote timing.csv and timing_plotdata.csv");
    for r in &rows {
        println!(
            "  n={:>6} rsc {:.4}s  rsc-sp {:.4}s  ratio {:.3}",
            r.n, r.rsc_seconds, r.spline_seconds, r.ratio
        );
    }
    Ok(())
}

fn cmd_curve(args: &CurveArgs, out_dir: &Path) -> Result<(), CoreError> {
    let started = Instant::now();
    let functional = args.functional.build(args.normalize_mean)?;

    let (dataset, digest): (Dataset, Option<String>) = match (&args.data, args.model) {
        (Some(path), None) => {
            let outcome = args.outcome.as_deref().ok_or_else(|| {
                CoreError::InvalidParameter("--data needs --outcome".into())
            })?;
            (load_csv(path, outcome, &[])?, Some(file_digest(path)?))
        }
        (None, Some(model)) => {
            let n = args.n.ok_or_else(|| {
                CoreError::InvalidParameter("--model needs --n".into())
            })?;
            (dgp_draw(DgpModel::new(model.into()), n, args.seed)?, None)
        }
        _ => {
            return Err(CoreError::InvalidParameter(
                "give exactly one of --data or --model".into(),
            ))
        }
    };

    let outcome = dataset.outcome();
    if args.subsample > outcome.n() {
        return Err(CoreError::InvalidParameter(format!(
            "--subsample {} exceeds the sample size {}",
            args.subsample,
            outcome.n()
        )));
    }

    let exact = rscreg_core::influence::rsc_full_with(
        &functional,
        outcome,
        RscOptions {
            strategy: Strategy::Exact,
            ..RscOptions::default()
        },
    )?;
    let model = fit_spline_rsc_stream(
        &functional,
        outcome,
        args.subsample,
        args.knots,
        args.seed,
        1,
    )?;
    let spline = interpolate(&model, outcome)?;

    let mut rows: Vec<(f64, f64, f64)> = outcome
        .values()
        .iter()
        .zip(exact.values())
        .zip(spline.values())
        .map(|((&y, &e), &s)| (y, e, s))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut body = String::from("y,rsc_exact,rsc_spline\n");
    for (y, e, s) in &rows {
        body.push_str(&format!("{y},{e},{s}\n"));
    }
    write_file(&out_dir.join("curve_plotdata.csv"), &body)?;

    let mut manifest = RunManifest::new("curve", args.seed);
    manifest.input_digest = digest;
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    manifest.write(out_dir)?;

    println!(
        "curve: {} rows for {} (spline R2 {:.4}), wrote curve_plotdata.csv",
        rows.len(),
        functional.name(),
        model.fit_r2()
    );
    Ok(())
}
