//! Command-line front end: simulate multi-phase regression data, fit the
//! two-stage M-estimator with plug-in inference, run the Monte Carlo
//! verification experiments, and sample the change-point limit law.
//!
//! Every command is deterministic given its configuration and seed,
//! including across `--threads` settings: identical invocations write
//! byte-identical files.

mod config;
mod report;

use clap::{Args, Parser, Subcommand};
use config::{
    parse_alphas, parse_err_dist, parse_f64_list, parse_family, parse_loss, parse_usize_list,
    parse_x_dist, pick, read_xy_csv, require, CliError, CliResult,
};
use mphase::dist::ErrorDist;
use mphase::estimator::{fit, Dataset, FitOptions};
use mphase::inference::{asymptotic_covariance, confidence_intervals, CovSource};
use mphase::limitlaw::{sample_limit_distribution, LimitLawSpec};
use mphase::loss::LossSpec;
use mphase::model::{validate_model, PiecewiseModel, DEFAULT_JUMP_TOL};
use mphase::montecarlo::{
    generate_dataset, limit_spec_from_design, run_limitlaw_experiment, run_normality_experiment,
    run_rate_experiment, stream_rng, SimDesign,
};
use report::{csv_table, fmt_f64, Report};
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "mphase",
    about = "M-estimation for multi-phase (change-point) nonlinear regression",
    version
)]
struct Cli {
    /// Thread count for parallel experiments (0 = auto). Defaults to the
    /// MPHASE_THREADS environment variable when set.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a piecewise model with K change-points to a CSV of (x, y) pairs.
    Fit(FitArgs),
    /// Draw a synthetic dataset from a piecewise truth and write it as CSV.
    Simulate(SimulateArgs),
    /// Monte Carlo experiments: convergence rates, Gaussian covariance,
    /// change-point limit law.
    Mc(McArgs),
    /// Sample the compound-Poisson limit law of one change-point.
    Limit(LimitArgs),
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV with header `x,y`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Segment family: constant|linear|exponential|logistic.
    #[arg(long)]
    family: Option<String>,
    /// Number of change-points.
    #[arg(short, long)]
    k: Option<usize>,
    /// Loss: squared|absolute|huber|nll.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    huber_delta: Option<f64>,
    /// Error distribution for known-law inference (gaussian:SD,
    /// laplace:SCALE, student_t:DOF,SCALE); omit for residual-based.
    #[arg(long)]
    err: Option<String>,
    /// Confidence level for the parameter intervals.
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    min_seg: Option<usize>,
    #[arg(long)]
    multistart: Option<usize>,
    /// Seed of the multistart perturbation stream (fits are deterministic
    /// for a fixed value; only iterative inner fits consume it).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FitFile {
    input: Option<PathBuf>,
    family: Option<String>,
    k: Option<usize>,
    loss: Option<String>,
    huber_delta: Option<f64>,
    err: Option<String>,
    level: Option<f64>,
    min_seg: Option<usize>,
    multistart: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    /// Segment parameters, rows split by ';', coordinates by ','.
    #[arg(long)]
    alphas: Option<String>,
    /// Change-points, comma separated (empty string for none).
    #[arg(long)]
    taus: Option<String>,
    /// Covariate law: uniform:A,B or gaussian:MEAN,SD.
    #[arg(long)]
    x_dist: Option<String>,
    /// Noise law (gaussian:SD, laplace:SCALE, student_t:DOF,SCALE, none).
    #[arg(long)]
    err: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    family: Option<String>,
    alphas: Option<String>,
    taus: Option<String>,
    x_dist: Option<String>,
    err: Option<String>,
    n: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    /// Which experiment: rate|normality|limitlaw.
    kind: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    taus: Option<String>,
    #[arg(long)]
    x_dist: Option<String>,
    #[arg(long)]
    err: Option<String>,
    /// Loss: squared|absolute|huber|nll.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    huber_delta: Option<f64>,
    /// Sample sizes for the rate experiment, comma separated.
    #[arg(long)]
    n_grid: Option<String>,
    /// Sample size for normality/limitlaw experiments.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// Number of limit-law draws to compare against (limitlaw only).
    #[arg(long)]
    pi_samples: Option<usize>,
    /// Which change-point to study (limitlaw only, 0-based).
    #[arg(long)]
    k_index: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct McFile {
    family: Option<String>,
    alphas: Option<String>,
    taus: Option<String>,
    x_dist: Option<String>,
    err: Option<String>,
    loss: Option<String>,
    huber_delta: Option<f64>,
    n_grid: Option<String>,
    n: Option<usize>,
    reps: Option<usize>,
    pi_samples: Option<usize>,
    k_index: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LimitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Design density at the change-point (the Poisson rate).
    #[arg(long)]
    rate: Option<f64>,
    /// Jump of the regression function at the change-point.
    #[arg(long)]
    jump: Option<f64>,
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    huber_delta: Option<f64>,
    #[arg(long)]
    err: Option<String>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    horizon_cap: Option<f64>,
    #[arg(long)]
    extend_margin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct LimitFile {
    rate: Option<f64>,
    jump: Option<f64>,
    loss: Option<String>,
    huber_delta: Option<f64>,
    err: Option<String>,
    n_samples: Option<usize>,
    horizon_cap: Option<f64>,
    extend_margin: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads.unwrap_or_else(|| {
        std::env::var("MPHASE_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    });
    let run = || match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Mc(a) => cmd_mc(a),
        Command::Limit(a) => cmd_limit(a),
    };
    let outcome = if threads > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(CliError::config(format!("thread pool: {e}"))),
        }
    } else {
        run()
    };
    match outcome {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}

fn out_dir(out: Option<PathBuf>) -> CliResult<PathBuf> {
    let dir = out.unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(path: &std::path::Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

fn fit_options(min_seg: Option<usize>, multistart: Option<usize>, seed: Option<u64>) -> FitOptions {
    let defaults = FitOptions::default();
    FitOptions {
        min_seg,
        multistart: multistart.unwrap_or(defaults.multistart),
        perturb_seed: seed.unwrap_or(defaults.perturb_seed),
        ..defaults
    }
}

/// Builds the truth model and design shared by `simulate` and `mc`.
#[allow(clippy::too_many_arguments)]
fn build_design(
    family: Option<String>,
    alphas: Option<String>,
    taus: Option<String>,
    x_dist: Option<String>,
    err: Option<String>,
    n: usize,
    seed: u64,
) -> CliResult<SimDesign> {
    let family = parse_family(&require(family, "--family")?)?;
    let alphas = parse_alphas(&require(alphas, "--alphas")?)?;
    let taus = parse_f64_list(&require(taus, "--taus")?)?;
    let x_dist = parse_x_dist(&require(x_dist, "--x-dist")?)?;
    let err = parse_err_dist(&require(err, "--err")?)?;
    let truth = PiecewiseModel::new(family, alphas, taus)?;
    let report = validate_model(&truth, DEFAULT_JUMP_TOL);
    if !report.is_ok() {
        return Err(CliError {
            code: 4,
            message: format!(
                "true model violates identifiability/ordering: {:?}",
                report.violations
            ),
        });
    }
    Ok(SimDesign {
        x_dist,
        err,
        truth,
        n,
        seed,
    })
}

fn loss_section(r: &mut Report, loss: &LossSpec) {
    r.kv("loss", loss.name());
    if let LossSpec::Huber { delta } = loss {
        r.kv_f64("huber_delta", *delta);
    }
    if let LossSpec::NegLogLik { err } = loss {
        r.kv("nll_density", err.name());
    }
}

fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let file: FitFile = config::load_config_file(&args.config)?;
    let input = require(pick(&args.input, &file.input, None), "--input")?;
    let family_name = require(pick(&args.family, &file.family, None), "--family")?;
    let family = parse_family(&family_name)?;
    let k = require(pick(&args.k, &file.k, None), "--k")?;
    let loss_name = pick(&args.loss, &file.loss, Some("squared".to_string())).unwrap();
    let huber_delta = pick(&args.huber_delta, &file.huber_delta, None);
    let err = match pick(&args.err, &file.err, None) {
        Some(s) => parse_err_dist(&s)?,
        None => None,
    };
    let loss = parse_loss(&loss_name, huber_delta, err.as_ref())?;
    let level = pick(&args.level, &file.level, Some(0.95)).unwrap();
    let opts = fit_options(
        pick(&args.min_seg, &file.min_seg, None),
        pick(&args.multistart, &file.multistart, None),
        pick(&args.seed, &file.seed, None),
    );
    let dir = out_dir(pick(&args.out, &file.out, None))?;

    let (xs, ys) = read_xy_csv(&input)?;
    let n = xs.len();
    let data = Dataset::new(xs, ys)?;
    let result = fit(&data, &family, k, &loss, &opts)?;

    let mut r = Report::new("mphase fit report");
    r.section("config");
    r.kv("input", input.display());
    r.kv("family", family.name());
    r.kv("k", k);
    loss_section(&mut r, &loss);
    match &err {
        Some(e) => r.kv("err", e.name()),
        None => r.kv("err", "residual-based"),
    };
    r.kv_f64("level", level);
    r.kv("n", n);
    r.end_section();

    r.section("result");
    r.kv_f64("objective", result.objective);
    r.kv_usizes("boundary_indices", &result.boundary_indices);
    r.kv_floats("taus", result.taus());
    r.kv("converged", result.converged());
    r.kv("cost_warnings", result.cost_warnings);
    r.section("segments");
    for s in &result.per_segment {
        r.item_open(&format!("range: [{}, {}]", s.start, s.end));
        r.kv_floats("alpha", &s.alpha);
        r.kv_f64("objective", s.objective);
        r.kv("converged", s.converged);
        r.item_close();
    }
    r.end_section();
    let js = mphase::model::jumps(&result.model_hat);
    r.kv_floats("jumps", &js.iter().map(|j| j.value).collect::<Vec<_>>());
    r.end_section();

    match asymptotic_covariance(&result, &data, &loss, err.as_ref()) {
        Ok(info) => {
            let cis = confidence_intervals(&info, &result, level)?;
            r.section("inference");
            r.kv(
                "source",
                match info.source {
                    CovSource::KnownErrorDist => "known_error_dist",
                    CovSource::ResidualBased => "residual_based",
                },
            );
            r.kv_f64("lambda_prime0", info.lambda_prime0_hat);
            r.kv_f64("psi_sq_moment", info.psi_sq_hat);
            let diag: Vec<f64> = (0..info.cov_theta1.nrows())
                .map(|i| info.cov_theta1[(i, i)])
                .collect();
            r.kv_floats("cov_theta1_diag", &diag);
            r.section("intervals");
            for (lo, hi) in &cis {
                r.item_open(&format!("[{}, {}]", fmt_f64(*lo), fmt_f64(*hi)));
                r.item_close();
            }
            r.end_section();
            r.end_section();
        }
        Err(e) => {
            r.section("inference");
            r.kv("unavailable", e);
            r.end_section();
        }
    }

    write_file(&dir.join("fit_report.txt"), &r.render())
}

fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let file: SimulateFile = config::load_config_file(&args.config)?;
    let n = require(pick(&args.n, &file.n, None), "--n")?;
    let seed = require(pick(&args.seed, &file.seed, None), "--seed")?;
    let design = build_design(
        pick(&args.family, &file.family, None),
        pick(&args.alphas, &file.alphas, None),
        pick(&args.taus, &file.taus, None),
        pick(&args.x_dist, &file.x_dist, None),
        pick(&args.err, &file.err, None),
        n,
        seed,
    )?;
    let dir = out_dir(pick(&args.out, &file.out, None))?;

    let mut rng = stream_rng(seed, 0, 0);
    let data = generate_dataset(&design, &mut rng)?;
    let csv = csv_table(
        "x,y",
        data.xs()
            .iter()
            .zip(data.ys())
            .map(|(x, y)| format!("{},{}", fmt_f64(*x), fmt_f64(*y))),
    );
    write_file(&dir.join("dataset.csv"), &csv)?;

    let mut r = Report::new("mphase simulate truth");
    r.kv("family", design.truth.family.name());
    r.section("alphas");
    for a in &design.truth.alphas {
        r.item_open(&report::fmt_floats(a));
        r.item_close();
    }
    r.end_section();
    r.kv_floats("taus", &design.truth.taus);
    let js = mphase::model::jumps(&design.truth);
    r.kv_floats("jumps", &js.iter().map(|j| j.value).collect::<Vec<_>>());
    r.kv("x_dist", design.x_dist.name());
    match &design.err {
        Some(e) => r.kv("err", e.name()),
        None => r.kv("err", "none"),
    };
    r.kv("n", n);
    r.kv("seed", seed);
    write_file(&dir.join("truth.txt"), &r.render())
}

fn cmd_mc(args: &McArgs) -> CliResult<()> {
    let file: McFile = config::load_config_file(&args.config)?;
    let seed = require(pick(&args.seed, &file.seed, None), "--seed")?;
    let loss_name = pick(&args.loss, &file.loss, Some("squared".to_string())).unwrap();
    let huber_delta = pick(&args.huber_delta, &file.huber_delta, None);
    let reps = require(pick(&args.reps, &file.reps, None), "--reps")?;
    let dir = out_dir(pick(&args.out, &file.out, None))?;

    let design = build_design(
        pick(&args.family, &file.family, None),
        pick(&args.alphas, &file.alphas, None),
        pick(&args.taus, &file.taus, None),
        pick(&args.x_dist, &file.x_dist, None),
        pick(&args.err, &file.err, None),
        pick(&args.n, &file.n, Some(0)).unwrap(),
        seed,
    )?;
    let err_for_nll = design.err;
    let loss = parse_loss(&loss_name, huber_delta, err_for_nll.as_ref())?;
    let opts = FitOptions::default();

    match args.kind.as_str() {
        "rate" => {
            let n_grid = parse_usize_list(&require(
                pick(&args.n_grid, &file.n_grid, None),
                "--n-grid",
            )?)?;
            let report = run_rate_experiment(&design, &n_grid, reps, &loss, &opts)?;
            let mut r = Report::new("mphase mc rate report");
            r.section("config");
            r.kv("kind", "rate");
            loss_section(&mut r, &loss);
            r.kv_usizes("n_grid", &report.n_grid);
            r.kv("reps", report.reps);
            r.kv("seed", seed);
            r.end_section();
            r.section("result");
            r.kv_f64("slope_tau", report.slope_tau);
            r.kv_f64("slope_alpha", report.slope_alpha);
            r.kv("failures", report.failures);
            r.end_section();
            write_file(&dir.join("rate_report.txt"), &r.render())?;

            let k = design.truth.k();
            let mut header = String::from("n");
            for kk in 1..=k {
                header.push_str(&format!(",median_tau_{kk}"));
            }
            header.push_str(",median_alpha");
            let rows = report.n_grid.iter().enumerate().map(|(i, n)| {
                let mut row = n.to_string();
                for kk in 0..k {
                    row.push(',');
                    row.push_str(&fmt_f64(report.medians_tau[i][kk]));
                }
                row.push(',');
                row.push_str(&fmt_f64(report.medians_alpha[i]));
                row
            });
            write_file(&dir.join("rate_medians.csv"), &csv_table(&header, rows))
        }
        "normality" => {
            let report = run_normality_experiment(&design, reps, &loss, &opts)?;
            let mut r = Report::new("mphase mc normality report");
            r.section("config");
            r.kv("kind", "normality");
            loss_section(&mut r, &loss);
            r.kv("n", design.n);
            r.kv("reps", report.reps);
            r.kv("seed", seed);
            r.end_section();
            r.section("result");
            r.kv_f64("rel_frobenius", report.rel_frobenius);
            r.kv_floats("skewness", &report.skewness);
            r.kv_floats("kurtosis", &report.kurtosis);
            r.kv("failures", report.failures);
            r.end_section();
            write_file(&dir.join("normality_report.txt"), &r.render())?;

            let dim = report.empirical_cov.nrows();
            let rows = (0..dim).flat_map(|i| {
                let emp = &report.empirical_cov;
                let theo = &report.theoretical_cov;
                (0..dim).map(move |j| {
                    format!("{i},{j},{},{}", fmt_f64(emp[(i, j)]), fmt_f64(theo[(i, j)]))
                })
            });
            write_file(
                &dir.join("normality_cov.csv"),
                &csv_table("row,col,empirical,theoretical", rows),
            )
        }
        "limitlaw" => {
            let pi_samples = pick(&args.pi_samples, &file.pi_samples, Some(reps)).unwrap();
            let k_index = pick(&args.k_index, &file.k_index, Some(0)).unwrap();
            let spec = limit_spec_from_design(&design, &loss, k_index)?;
            let report =
                run_limitlaw_experiment(&design, reps, &spec, pi_samples, k_index, &loss, &opts)?;
            let mut r = Report::new("mphase mc limitlaw report");
            r.section("config");
            r.kv("kind", "limitlaw");
            loss_section(&mut r, &loss);
            r.kv("n", design.n);
            r.kv("reps", report.reps);
            r.kv("pi_samples", pi_samples);
            r.kv("k_index", k_index);
            r.kv_f64("rate", spec.rate);
            r.kv_f64("jump_d", spec.jump_d);
            r.kv("seed", seed);
            r.end_section();
            r.section("result");
            r.kv_f64("ks_distance", report.ks_distance);
            r.kv_floats("quantile_probs", &report.quantile_probs);
            r.kv_floats("empirical_quantiles", &report.empirical_quantiles);
            r.kv_floats("pi_quantiles", &report.pi_quantiles);
            r.kv("censored", report.censored);
            r.kv("failures", report.failures);
            r.end_section();
            write_file(&dir.join("limitlaw_report.txt"), &r.render())?;

            let rows = report
                .rescaled_errors
                .iter()
                .map(|v| format!("empirical,{}", fmt_f64(*v)))
                .chain(
                    report
                        .pi_samples
                        .iter()
                        .map(|v| format!("pi,{}", fmt_f64(*v))),
                );
            write_file(
                &dir.join("limitlaw_samples.csv"),
                &csv_table("source,value", rows),
            )
        }
        other => Err(CliError::config(format!(
            "unknown mc experiment '{other}' (expected rate|normality|limitlaw)"
        ))),
    }
}

fn cmd_limit(args: &LimitArgs) -> CliResult<()> {
    let file: LimitFile = config::load_config_file(&args.config)?;
    let rate = require(pick(&args.rate, &file.rate, None), "--rate")?;
    let jump = require(pick(&args.jump, &file.jump, None), "--jump")?;
    let n_samples = require(pick(&args.n_samples, &file.n_samples, None), "--n-samples")?;
    let seed = require(pick(&args.seed, &file.seed, None), "--seed")?;
    let err = parse_err_dist(&require(pick(&args.err, &file.err, None), "--err")?)?
        .ok_or_else(|| CliError::config("limit law needs a stochastic --err"))?;
    let loss_name = pick(&args.loss, &file.loss, Some("squared".to_string())).unwrap();
    let loss = parse_loss(
        &loss_name,
        pick(&args.huber_delta, &file.huber_delta, None),
        Some(&err),
    )?;
    let dir = out_dir(pick(&args.out, &file.out, None))?;

    let mut spec = LimitLawSpec::new(rate, jump, loss, err)?;
    if let Some(cap) = pick(&args.horizon_cap, &file.horizon_cap, None) {
        spec = spec.with_horizon_cap(cap)?;
    }
    if let Some(m) = pick(&args.extend_margin, &file.extend_margin, None) {
        spec = spec.with_extend_margin(m)?;
    }

    let mut rng = stream_rng(seed, 3, 0);
    let draws = sample_limit_distribution(&spec, n_samples, &mut rng)?;

    let probs = [0.05, 0.25, 0.5, 0.75, 0.95];
    let qs = draws.quantiles(&probs);
    let mut r = Report::new("mphase limit report");
    r.section("config");
    r.kv_f64("rate", rate);
    r.kv_f64("jump_d", jump);
    loss_section(&mut r, &loss);
    r.kv("err", ErrorDist::name(&err));
    r.kv("n_samples", n_samples);
    r.kv("seed", seed);
    r.end_section();
    r.section("result");
    r.kv_floats("quantile_probs", &probs);
    r.kv_floats("quantiles", &qs);
    r.kv("censored", draws.censored);
    r.end_section();
    write_file(&dir.join("limit_report.txt"), &r.render())?;

    let csv = csv_table(
        "value",
        draws.samples.iter().map(|v| fmt_f64(*v)),
    );
    write_file(&dir.join("limit_samples.csv"), &csv)
}
