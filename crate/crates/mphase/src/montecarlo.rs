//! Synthetic data generation and the experiment harness: convergence-rate
//! verification, the Gaussian covariance check for the regression
//! parameters, the compound-Poisson comparison for the change-points, and
//! the counting diagnostics.
//!
//! Every experiment is a pure function of its configuration and the design
//! seed: replications draw from per-replication ChaCha streams keyed by
//! `(seed, phase, index)`, run in parallel, and are aggregated in index
//! order, so reruns reproduce results bit for bit at any thread count.

use crate::dist::ErrorDist;
use crate::error::{Error, Result};
use crate::estimator::{fit, m_objective, Dataset, FitOptions, FitResult};
use crate::limitlaw::{sample_limit_distribution, LimitLawSpec, LimitSamples};
use crate::loss::LossSpec;
use crate::model::{eval_piecewise, jumps, validate_model, PiecewiseModel, DEFAULT_JUMP_TOL};
use crate::quad;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Covariate distributions with positive density on their support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XDist {
    Gaussian { mean: f64, sd: f64 },
    Uniform { a: f64, b: f64 },
}

impl XDist {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !sd.is_finite() || !mean.is_finite() {
            return Err(Error::invalid("gaussian x-dist needs finite mean, sd > 0"));
        }
        Ok(XDist::Gaussian { mean, sd })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("uniform x-dist needs finite a < b"));
        }
        Ok(XDist::Uniform { a, b })
    }

    pub fn name(&self) -> &'static str {
        match self {
            XDist::Gaussian { .. } => "gaussian",
            XDist::Uniform { .. } => "uniform",
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            XDist::Gaussian { mean, sd } => Normal::new(*mean, *sd).unwrap().pdf(x),
            XDist::Uniform { a, b } => {
                if x >= *a && x <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            XDist::Gaussian { mean, sd } => Normal::new(*mean, *sd).unwrap().cdf(x),
            XDist::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            XDist::Gaussian { mean, sd } => {
                mean + sd * rng.sample::<f64, _>(rand_distr::StandardNormal)
            }
            XDist::Uniform { a, b } => rng.random_range(*a..*b),
        }
    }

    /// Effective support used to clip quadrature ranges.
    fn clip_range(&self) -> (f64, f64) {
        match self {
            XDist::Gaussian { mean, sd } => (mean - 20.0 * sd, mean + 20.0 * sd),
            XDist::Uniform { a, b } => (*a, *b),
        }
    }
}

/// A synthetic-data design: covariate law, noise law, true model, size and
/// seed. `err = None` simulates noiseless data (the degenerate sigma -> 0
/// limit, allowed only in simulation).
#[derive(Debug, Clone, PartialEq)]
pub struct SimDesign {
    pub x_dist: XDist,
    pub err: Option<ErrorDist>,
    pub truth: PiecewiseModel,
    pub n: usize,
    pub seed: u64,
}

impl SimDesign {
    pub fn validate(&self) -> Result<()> {
        let report = validate_model(&self.truth, DEFAULT_JUMP_TOL);
        if !report.is_ok() {
            return Err(Error::Identifiability(format!(
                "true model is invalid: {:?}",
                report.violations
            )));
        }
        if let XDist::Uniform { a, b } = self.x_dist {
            for &tau in &self.truth.taus {
                if tau <= a || tau >= b {
                    return Err(Error::invalid(format!(
                        "change-point {tau} has no x-density around it (support ({a}, {b}))"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Per-replication RNG stream: pure function of `(seed, phase, index)`.
pub fn stream_rng(seed: u64, phase: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((phase << 48) ^ index);
    rng
}

const PHASE_DATA: u64 = 1;
const PHASE_PI: u64 = 2;
const PHASE_RATE_BASE: u64 = 0x10;

/// Draws one dataset from the design: `X_i` i.i.d. from the covariate law,
/// `eps_i` i.i.d. from the noise law independent of `X`, and
/// `Y_i = f(X_i) + eps_i`.
pub fn generate_dataset<R: Rng + ?Sized>(design: &SimDesign, rng: &mut R) -> Result<Dataset> {
    design.validate()?;
    let mut xs = Vec::with_capacity(design.n);
    let mut ys = Vec::with_capacity(design.n);
    for _ in 0..design.n {
        let x = design.x_dist.sample(rng);
        let noise = match &design.err {
            Some(err) => err.sample(rng),
            None => 0.0,
        };
        xs.push(x);
        ys.push(eval_piecewise(&design.truth, x) + noise);
    }
    Dataset::new(xs, ys)
}

/// Dataset for replication `index` of experiment `phase`, keyed off the
/// design seed.
fn replication_dataset(design: &SimDesign, phase: u64, index: u64) -> Result<Dataset> {
    let mut rng = stream_rng(design.seed, phase, index);
    generate_dataset(design, &mut rng)
}

fn median_sorted(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        // all replications failed at this configuration; the failure-budget
        // check turns this into an error before the value is consumed
        return f64::NAN;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Least-squares slope of `ln y` on `ln x`.
fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    sxy / sxx
}

/// Maximum share of failed replications an experiment tolerates.
pub const FAILURE_BUDGET: f64 = 0.05;

fn check_failure_budget(failures: usize, reps: usize) -> Result<()> {
    if (failures as f64) > FAILURE_BUDGET * reps as f64 {
        return Err(Error::FailureBudget(format!(
            "{failures} of {reps} replications failed"
        )));
    }
    Ok(())
}

/// Convergence-rate experiment report. `slope_tau` near -1 and
/// `slope_alpha` near -1/2 reproduce the theoretical rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub n_grid: Vec<usize>,
    /// `medians_tau[i][k]`: median `|tau_hat_k - tau0_k|` at `n_grid[i]`.
    pub medians_tau: Vec<Vec<f64>>,
    /// Median `||theta1_hat - theta1_0||` per grid point.
    pub medians_alpha: Vec<f64>,
    pub slope_tau: f64,
    pub slope_alpha: f64,
    pub reps: usize,
    pub failures: usize,
}

/// Runs `reps` independent fits at every size in `n_grid` and regresses the
/// log median errors on log n.
pub fn run_rate_experiment(
    design: &SimDesign,
    n_grid: &[usize],
    reps: usize,
    loss: &LossSpec,
    opts: &FitOptions,
) -> Result<RateReport> {
    if reps < 100 {
        return Err(Error::invalid("rate experiments need reps >= 100"));
    }
    if n_grid.len() < 2 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n_grid must be strictly increasing"));
    }
    if (*n_grid.last().unwrap() as f64) < 4.0 * n_grid[0] as f64 {
        return Err(Error::invalid("n_grid must span at least a factor of 4"));
    }
    // the template's n is overridden by the grid; validate at the first size
    SimDesign {
        n: n_grid[0],
        ..design.clone()
    }
    .validate()?;

    let k = design.truth.k();
    let family = design.truth.family;
    let mut medians_tau = Vec::with_capacity(n_grid.len());
    let mut medians_alpha = Vec::with_capacity(n_grid.len());
    let mut pooled_tau = Vec::with_capacity(n_grid.len());
    let mut failures = 0usize;

    for (gi, &n) in n_grid.iter().enumerate() {
        let sized = SimDesign {
            n,
            ..design.clone()
        };
        let results: Vec<Option<(Vec<f64>, f64)>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let phase = PHASE_RATE_BASE + gi as u64;
                let data = replication_dataset(&sized, phase, rep as u64).ok()?;
                let f = fit(&data, &family, k, loss, opts).ok()?;
                let tau_err: Vec<f64> = f
                    .taus()
                    .iter()
                    .zip(&design.truth.taus)
                    .map(|(a, b)| (a - b).abs())
                    .collect();
                let alpha_err = f
                    .theta1()
                    .iter()
                    .zip(design.truth.alphas.iter().flatten())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                Some((tau_err, alpha_err))
            })
            .collect();

        let mut tau_errs: Vec<Vec<f64>> = vec![Vec::new(); k];
        let mut alpha_errs = Vec::new();
        for r in results {
            match r {
                Some((te, ae)) => {
                    for (kk, e) in te.into_iter().enumerate() {
                        tau_errs[kk].push(e);
                    }
                    alpha_errs.push(ae);
                }
                None => failures += 1,
            }
        }
        let med_tau: Vec<f64> = tau_errs.into_iter().map(median_sorted).collect();
        let pooled: f64 = median_sorted(
            med_tau
                .iter()
                .copied()
                .collect::<Vec<f64>>(),
        );
        pooled_tau.push(pooled.max(f64::MIN_POSITIVE));
        medians_alpha.push(median_sorted(alpha_errs).max(f64::MIN_POSITIVE));
        medians_tau.push(med_tau);
    }
    check_failure_budget(failures, reps * n_grid.len())?;

    let ns: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
    Ok(RateReport {
        n_grid: n_grid.to_vec(),
        slope_tau: log_log_slope(&ns, &pooled_tau),
        slope_alpha: log_log_slope(&ns, &medians_alpha),
        medians_tau,
        medians_alpha,
        reps,
        failures,
    })
}

/// Gaussian-approximation experiment report.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalityReport {
    pub empirical_cov: DMatrix<f64>,
    pub theoretical_cov: DMatrix<f64>,
    pub rel_frobenius: f64,
    pub skewness: Vec<f64>,
    pub kurtosis: Vec<f64>,
    pub reps: usize,
    pub failures: usize,
}

/// Integral of `g(x) * pdf(x)` over `(lo, hi)`, clipped to the effective
/// support of the covariate law.
fn integrate_x_weighted<F: Fn(f64) -> f64>(
    g: &F,
    x_dist: &XDist,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let (slo, shi) = x_dist.clip_range();
    let a = lo.max(slo);
    let b = hi.min(shi);
    if a >= b {
        return Ok(0.0);
    }
    quad::integrate(&|x| g(x) * x_dist.pdf(x), a, b, 1e-10)
}

/// The design matrix `V0 = E[grad f(X) grad f(X)^T]` at the true model,
/// computed by quadrature against the covariate density; block-diagonal,
/// one block per segment.
pub fn theoretical_v0(x_dist: &XDist, truth: &PiecewiseModel) -> Result<DMatrix<f64>> {
    let d = truth.family.param_dim();
    let segs = truth.alphas.len();
    let mut v0 = DMatrix::zeros(segs * d, segs * d);
    for s in 0..segs {
        let lo = if s == 0 {
            f64::NEG_INFINITY
        } else {
            truth.taus[s - 1]
        };
        let hi = if s == segs - 1 {
            f64::INFINITY
        } else {
            truth.taus[s]
        };
        for a in 0..d {
            for b in a..d {
                let alpha = truth.alphas[s].clone();
                let family = truth.family;
                let entry = integrate_x_weighted(
                    &move |x| {
                        let mut g = [0.0f64; crate::model::MAX_PARAM_DIM];
                        family.grad_unchecked(&alpha, x, &mut g[..d]);
                        g[a] * g[b]
                    },
                    x_dist,
                    lo,
                    hi,
                )?;
                v0[(s * d + a, s * d + b)] = entry;
                v0[(s * d + b, s * d + a)] = entry;
            }
        }
    }
    Ok(v0)
}

/// Compares the empirical covariance of `sqrt(n) (theta1_hat - theta1_0)`
/// across replications with the theoretical
/// `E[psi^2] lambda'(0)^{-2} V0^{-1}`.
pub fn run_normality_experiment(
    design: &SimDesign,
    reps: usize,
    loss: &LossSpec,
    opts: &FitOptions,
) -> Result<NormalityReport> {
    design.validate()?;
    if reps < 300 {
        return Err(Error::invalid("normality experiments need reps >= 300"));
    }
    let err = design.err.as_ref().ok_or_else(|| {
        Error::invalid("normality experiment needs a stochastic error distribution")
    })?;
    let info = crate::loss::lambda_info(loss, err)?;
    let v0 = theoretical_v0(&design.x_dist, &design.truth)?;
    let v0_inv = v0.clone().try_inverse().ok_or_else(|| {
        Error::numeric("theoretical V0 is singular; check the design and true model")
    })?;
    let theoretical_cov =
        v0_inv * (info.psi_sq_moment / (info.lambda_prime0 * info.lambda_prime0));

    let family = design.truth.family;
    let k = design.truth.k();
    let theta0: Vec<f64> = design.truth.alphas.iter().flatten().copied().collect();
    let dim = theta0.len();
    let sqrt_n = (design.n as f64).sqrt();

    let rows: Vec<Option<Vec<f64>>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data = replication_dataset(design, PHASE_DATA, rep as u64).ok()?;
            let f = fit(&data, &family, k, loss, opts).ok()?;
            Some(
                f.theta1()
                    .iter()
                    .zip(&theta0)
                    .map(|(a, b)| sqrt_n * (a - b))
                    .collect(),
            )
        })
        .collect();

    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(reps);
    let mut failures = 0usize;
    for r in rows {
        match r {
            Some(v) => kept.push(v),
            None => failures += 1,
        }
    }
    check_failure_budget(failures, reps)?;
    let m = kept.len() as f64;

    let mut mean = vec![0.0f64; dim];
    for row in &kept {
        for (a, v) in mean.iter_mut().zip(row) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);

    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for row in &kept {
        for a in 0..dim {
            for b in 0..dim {
                cov[(a, b)] += (row[a] - mean[a]) * (row[b] - mean[b]);
            }
        }
    }
    cov /= m - 1.0;

    let mut skewness = Vec::with_capacity(dim);
    let mut kurtosis = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut m2 = 0.0;
        let mut m3 = 0.0;
        let mut m4 = 0.0;
        for row in &kept {
            let dev = row[c] - mean[c];
            m2 += dev * dev;
            m3 += dev * dev * dev;
            m4 += dev * dev * dev * dev;
        }
        m2 /= m;
        m3 /= m;
        m4 /= m;
        skewness.push(m3 / m2.powf(1.5));
        kurtosis.push(m4 / (m2 * m2));
    }

    let diff = (&cov - &theoretical_cov).norm();
    let rel_frobenius = diff / theoretical_cov.norm();
    Ok(NormalityReport {
        empirical_cov: cov,
        theoretical_cov,
        rel_frobenius,
        skewness,
        kurtosis,
        reps,
        failures,
    })
}

/// Limit-law comparison report: two-sample Kolmogorov-Smirnov distance
/// between the rescaled change-point errors and simulated limit draws, plus
/// matching quantile tables.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLawReport {
    pub ks_distance: f64,
    pub quantile_probs: Vec<f64>,
    pub empirical_quantiles: Vec<f64>,
    pub pi_quantiles: Vec<f64>,
    pub rescaled_errors: Vec<f64>,
    pub pi_samples: Vec<f64>,
    pub censored: usize,
    pub reps: usize,
    pub failures: usize,
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.partial_cmp(y).unwrap());
    sb.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d = 0.0f64;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn quantiles_of(samples: &[f64], probs: &[f64]) -> Vec<f64> {
    LimitSamples {
        samples: samples.to_vec(),
        censored: 0,
    }
    .quantiles(probs)
}

/// Builds the limit-law parameters implied by a design: rate is the
/// covariate density at the true change-point, jump the true model jump.
pub fn limit_spec_from_design(
    design: &SimDesign,
    loss: &LossSpec,
    k_index: usize,
) -> Result<LimitLawSpec> {
    design.validate()?;
    let err = design
        .err
        .as_ref()
        .ok_or_else(|| Error::invalid("limit law needs a stochastic error distribution"))?;
    let tau = *design
        .truth
        .taus
        .get(k_index)
        .ok_or_else(|| Error::invalid(format!("no change-point with index {k_index}")))?;
    let d0 = jumps(&design.truth)[k_index].value;
    LimitLawSpec::new(design.x_dist.pdf(tau), d0, *loss, *err)
}

/// Compares `n (tau_hat_k - tau0_k)` across `reps` fits with `pi_samples`
/// draws of the simulated limit law.
#[allow(clippy::too_many_arguments)]
pub fn run_limitlaw_experiment(
    design: &SimDesign,
    reps: usize,
    spec: &LimitLawSpec,
    pi_samples: usize,
    k_index: usize,
    loss: &LossSpec,
    opts: &FitOptions,
) -> Result<LimitLawReport> {
    design.validate()?;
    if k_index >= design.truth.k() {
        return Err(Error::invalid(format!(
            "no change-point with index {k_index}"
        )));
    }
    let family = design.truth.family;
    let k = design.truth.k();
    let tau0 = design.truth.taus[k_index];
    let n = design.n as f64;

    let rows: Vec<Option<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data = replication_dataset(design, PHASE_DATA, rep as u64).ok()?;
            let f = fit(&data, &family, k, loss, opts).ok()?;
            Some(n * (f.taus()[k_index] - tau0))
        })
        .collect();
    let mut rescaled = Vec::with_capacity(reps);
    let mut failures = 0usize;
    for r in rows {
        match r {
            Some(v) => rescaled.push(v),
            None => failures += 1,
        }
    }
    check_failure_budget(failures, reps)?;

    let mut rng = stream_rng(design.seed, PHASE_PI, 0);
    let pi = sample_limit_distribution(spec, pi_samples, &mut rng)?;

    let probs = vec![0.05, 0.25, 0.5, 0.75, 0.95];
    Ok(LimitLawReport {
        ks_distance: ks_distance(&rescaled, &pi.samples),
        empirical_quantiles: quantiles_of(&rescaled, &probs),
        pi_quantiles: pi.quantiles(&probs),
        quantile_probs: probs,
        rescaled_errors: rescaled,
        censored: pi.censored,
        pi_samples: pi.samples,
        reps,
        failures,
    })
}

/// `#\{i : |X_i - tau0| <= B/n\}`: the count of observations inside the
/// shrinking window whose mean approaches `2 B * density(tau0)`.
pub fn near_changepoint_count(data: &Dataset, tau0: f64, b: f64) -> Result<usize> {
    if !(b > 0.0) {
        return Err(Error::invalid("window constant B must be positive"));
    }
    let w = b / data.len() as f64;
    Ok(data.xs().iter().filter(|&&x| (x - tau0).abs() <= w).count())
}

/// Ratio of the empirical to the expected mass of the between-change-point
/// windows `(tau0_k, tau0_k + u_k]`.
pub fn ratio_gn_over_g(
    data: &Dataset,
    x_dist: &XDist,
    tau0: &[f64],
    u: &[f64],
) -> Result<f64> {
    if tau0.len() != u.len() || tau0.is_empty() {
        return Err(Error::invalid("tau0 and u must have equal positive length"));
    }
    if u.iter().any(|&uk| uk == 0.0) {
        return Err(Error::invalid("window widths u_k must be nonzero"));
    }
    let mut gn = 0.0;
    let mut g = 0.0;
    let n = data.len() as f64;
    for (&t, &uk) in tau0.iter().zip(u) {
        let (lo, hi) = if uk > 0.0 { (t, t + uk) } else { (t + uk, t) };
        gn += data.xs().iter().filter(|&&x| x > lo && x <= hi).count() as f64 / n;
        g += x_dist.cdf(hi) - x_dist.cdf(lo);
    }
    if g <= 0.0 {
        return Err(Error::invalid("expected window mass is zero"));
    }
    Ok(gn / g)
}

/// Curvature check of the quadratic approximation: along rays through the
/// fitted `theta1` at the fitted change-points, the profile of the objective
/// should match `lambda'(0)/2 * w^T V0 w` after the `n^{-1/2}` rescaling.
/// Returns the maximum relative error over the probed directions and radii.
pub fn quadratic_approximation_max_rel_err(
    data: &Dataset,
    fit_result: &FitResult,
    loss: &LossSpec,
    lambda_prime0: f64,
    v0: &DMatrix<f64>,
    radii: &[f64],
    directions: usize,
    seed: u64,
) -> f64 {
    let dim = v0.nrows();
    let d = fit_result.model_hat.family.param_dim();
    let n = data.len() as f64;
    let base = m_objective(&fit_result.model_hat, data, loss);
    let mut rng = stream_rng(seed, 7, 0);
    let mut worst = 0.0f64;
    for _ in 0..directions {
        let mut w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        w.iter_mut().for_each(|v| *v /= norm);
        for &r in radii {
            let scaled: Vec<f64> = w.iter().map(|v| v * r).collect();
            let mut model = fit_result.model_hat.clone();
            for (block, alpha) in model.alphas.iter_mut().enumerate() {
                for (j, a) in alpha.iter_mut().enumerate() {
                    *a += scaled[block * d + j] / n.sqrt();
                }
            }
            let observed = m_objective(&model, data, loss) - base;
            let mut quad_form = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    quad_form += scaled[a] * v0[(a, b)] * scaled[b];
                }
            }
            let predicted = 0.5 * lambda_prime0 * quad_form;
            let rel = (observed - predicted).abs() / predicted.abs().max(1e-12);
            worst = worst.max(rel);
        }
    }
    worst
}
