//! Plug-in asymptotic inference for the regression parameters.
//!
//! The regression-parameter estimator is asymptotically Gaussian with
//! covariance `E[psi^2(eps)] * lambda'(0)^{-2} * V0^{-1} / n`, where `V0` is
//! the design matrix `E[grad f(X) grad f(X)^T]` at the true parameters.
//! Everything here is block-diagonal across segments because each
//! observation contributes to exactly one segment's gradient block.
//!
//! No confidence sets are produced for the change-points themselves: their
//! limit law has no pivotal closed form. Simulate it with the limit-law
//! module instead.

use crate::dist::ErrorDist;
use crate::error::{Error, Result};
use crate::estimator::{fit_residuals, Dataset, FitResult};
use crate::loss::{lambda_info, psi, LossSpec};
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

/// Block-diagonal estimate of `V0`, one `d x d` block per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct V0Hat {
    pub blocks: Vec<DMatrix<f64>>,
    pub n: usize,
}

impl V0Hat {
    /// Assembled `(K+1)d x (K+1)d` matrix.
    pub fn full(&self) -> DMatrix<f64> {
        let d = self.blocks.first().map(|b| b.nrows()).unwrap_or(0);
        let total = d * self.blocks.len();
        let mut m = DMatrix::zeros(total, total);
        for (k, b) in self.blocks.iter().enumerate() {
            m.view_mut((k * d, k * d), (d, d)).copy_from(b);
        }
        m
    }

    /// Condition number of each block (ratio of extreme eigenvalues of the
    /// symmetric block; infinite when singular).
    pub fn condition_numbers(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .map(|b| {
                let eig = b.clone().symmetric_eigen();
                let mut lo = f64::INFINITY;
                let mut hi = 0.0f64;
                for &v in eig.eigenvalues.iter() {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                if lo <= 0.0 {
                    f64::INFINITY
                } else {
                    hi / lo
                }
            })
            .collect()
    }

    /// Segment indices whose block is ill-conditioned past `cutoff`.
    pub fn singular_blocks(&self, cutoff: f64) -> Vec<usize> {
        self.condition_numbers()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > cutoff)
            .map(|(k, _)| k)
            .collect()
    }
}

/// `(1/n) sum_i grad f(X_i) grad f(X_i)^T` at the fitted parameters,
/// accumulated block by block.
pub fn estimate_v0(fit: &FitResult, data: &Dataset) -> V0Hat {
    let model = &fit.model_hat;
    let d = model.family.param_dim();
    let segs = model.alphas.len();
    let n = data.len();
    let mut blocks = vec![DMatrix::<f64>::zeros(d, d); segs];
    let mut g = vec![0.0f64; d];
    for &x in data.xs() {
        let k = model.segment_index(x);
        model.family.grad_unchecked(&model.alphas[k], x, &mut g);
        let block = &mut blocks[k];
        for a in 0..d {
            for b in 0..d {
                block[(a, b)] += g[a] * g[b];
            }
        }
    }
    for block in blocks.iter_mut() {
        *block /= n as f64;
    }
    V0Hat { blocks, n }
}

/// Where the loss moments in an [`AsymptoticInfo`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovSource {
    /// `lambda'(0)` and `E[psi^2]` computed from a known error distribution.
    KnownErrorDist,
    /// Both estimated from the fit residuals.
    ResidualBased,
}

/// Plug-in asymptotic covariance of the regression parameter estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticInfo {
    pub v0_hat: V0Hat,
    pub lambda_prime0_hat: f64,
    pub psi_sq_hat: f64,
    /// Covariance of `theta1_hat` itself (the `1/n` is included).
    pub cov_theta1: DMatrix<f64>,
    pub source: CovSource,
}

/// Condition-number cutoff above which `V0` is treated as non-invertible.
pub const V0_CONDITION_CUTOFF: f64 = 1e12;

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Robust residual scale: scaled median absolute deviation.
fn mad_scale(residuals: &[f64]) -> f64 {
    let med = median_of(residuals.to_vec());
    let dev: Vec<f64> = residuals.iter().map(|r| (r - med).abs()).collect();
    1.4826 * median_of(dev)
}

/// Estimates `lambda'(0)` from residuals by a symmetric difference of the
/// empirical `lambda(y) = (1/n) sum_i psi(r_i + y)`. The default bandwidth
/// is `1.06 * mad_scale * n^(-1/5)`.
pub fn estimate_lambda_prime0_residual(
    residuals: &[f64],
    loss: &LossSpec,
    bandwidth: Option<f64>,
) -> Result<f64> {
    let n = residuals.len();
    if n < 30 {
        return Err(Error::invalid(format!(
            "lambda'(0) estimation needs at least 30 residuals, got {n}"
        )));
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 => h,
        Some(_) => return Err(Error::invalid("bandwidth must be positive")),
        None => {
            let s = mad_scale(residuals);
            if s <= 0.0 {
                return Err(Error::numeric(
                    "degenerate residuals: zero robust scale, cannot pick a bandwidth",
                ));
            }
            1.06 * s * (n as f64).powf(-0.2)
        }
    };
    let mut up = 0.0;
    let mut dn = 0.0;
    for &r in residuals {
        up += psi(loss, r + h);
        dn += psi(loss, r - h);
    }
    Ok((up - dn) / (2.0 * h * n as f64))
}

/// Builds the plug-in covariance. With `err` supplied the loss moments come
/// from the known error law; otherwise they are estimated from residuals.
pub fn asymptotic_covariance(
    fit: &FitResult,
    data: &Dataset,
    loss: &LossSpec,
    err: Option<&ErrorDist>,
) -> Result<AsymptoticInfo> {
    let v0_hat = estimate_v0(fit, data);
    let bad = v0_hat.singular_blocks(V0_CONDITION_CUTOFF);
    if !bad.is_empty() {
        return Err(Error::numeric(format!(
            "V0 is ill-conditioned in segment block(s) {bad:?}; the segment(s) lack variation"
        )));
    }

    let (lambda_prime0_hat, psi_sq_hat, source) = match err {
        Some(err) => {
            let info = lambda_info(loss, err)?;
            (info.lambda_prime0, info.psi_sq_moment, CovSource::KnownErrorDist)
        }
        None => {
            let residuals = fit_residuals(fit, data);
            let lp = estimate_lambda_prime0_residual(&residuals, loss, None)?;
            let ps =
                residuals.iter().map(|&r| psi(loss, r).powi(2)).sum::<f64>() / residuals.len() as f64;
            (lp, ps, CovSource::ResidualBased)
        }
    };
    if !(lambda_prime0_hat > 0.0) {
        return Err(Error::numeric(format!(
            "estimated lambda'(0) = {lambda_prime0_hat} is not strictly positive"
        )));
    }

    let d = fit.model_hat.family.param_dim();
    let segs = v0_hat.blocks.len();
    let factor = psi_sq_hat / (lambda_prime0_hat * lambda_prime0_hat) / v0_hat.n as f64;
    let mut cov = DMatrix::zeros(segs * d, segs * d);
    for (k, block) in v0_hat.blocks.iter().enumerate() {
        let inv = block.clone().try_inverse().ok_or_else(|| {
            Error::numeric(format!("V0 block {k} is singular despite conditioning check"))
        })?;
        cov.view_mut((k * d, k * d), (d, d)).copy_from(&(inv * factor));
    }
    Ok(AsymptoticInfo {
        v0_hat,
        lambda_prime0_hat,
        psi_sq_hat,
        cov_theta1: cov,
        source,
    })
}

/// Per-coordinate normal confidence intervals for the flattened regression
/// parameter vector, `alpha_hat +/- z * sqrt(diag cov)`.
pub fn confidence_intervals(
    info: &AsymptoticInfo,
    fit: &FitResult,
    level: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::invalid("confidence level must lie in [0, 1)"));
    }
    let z = Normal::new(0.0, 1.0)
        .unwrap()
        .inverse_cdf(0.5 * (1.0 + level));
    let theta = fit.theta1();
    if theta.len() != info.cov_theta1.nrows() {
        return Err(Error::invalid("fit and covariance dimensions differ"));
    }
    Ok(theta
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let half = z * info.cov_theta1[(i, i)].max(0.0).sqrt();
            (v - half, v + half)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{fit, FitOptions};
    use crate::model::SegmentFamily;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_segment_fit(n: usize, seed: u64, sigma: f64) -> (FitResult, Dataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let noise = ErrorDist::gaussian(sigma).unwrap();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| if x <= 0.0 { 0.0 } else { 2.0 } + noise.sample(&mut rng))
            .collect();
        let data = Dataset::new(xs, ys).unwrap();
        let f = fit(
            &data,
            &SegmentFamily::Constant,
            1,
            &LossSpec::Squared,
            &FitOptions::default(),
        )
        .unwrap();
        (f, data)
    }

    #[test]
    fn v0_constant_family_is_segment_fractions() {
        let (f, data) = two_segment_fit(400, 5, 0.2);
        let v0 = estimate_v0(&f, &data);
        let counts: Vec<usize> = f
            .per_segment
            .iter()
            .map(|s| s.end - s.start + 1)
            .collect();
        assert!((v0.blocks[0][(0, 0)] - counts[0] as f64 / 400.0).abs() < 1e-12);
        assert!((v0.blocks[1][(0, 0)] - counts[1] as f64 / 400.0).abs() < 1e-12);
    }

    #[test]
    fn v0_linear_single_segment_is_design_gram() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 1.0 + x).collect();
        let data = Dataset::new(xs.clone(), ys).unwrap();
        let f = fit(
            &data,
            &SegmentFamily::Linear,
            0,
            &LossSpec::Squared,
            &FitOptions::default(),
        )
        .unwrap();
        let v0 = estimate_v0(&f, &data);
        let n = xs.len() as f64;
        let sx = xs.iter().sum::<f64>() / n;
        let sxx = xs.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((v0.blocks[0][(0, 0)] - 1.0).abs() < 1e-12);
        assert!((v0.blocks[0][(0, 1)] - sx).abs() < 1e-12);
        assert!((v0.blocks[0][(1, 1)] - sxx).abs() < 1e-12);
    }

    #[test]
    fn v0_matches_brute_force_outer_products() {
        let (f, data) = two_segment_fit(10, 77, 0.3);
        let v0 = estimate_v0(&f, &data).full();
        // direct summation over observations of the full gradient vector
        let dim = v0.nrows();
        let mut direct = DMatrix::<f64>::zeros(dim, dim);
        for &x in data.xs() {
            let g = crate::model::grad_piecewise(&f.model_hat, x);
            for a in 0..dim {
                for b in 0..dim {
                    direct[(a, b)] += g[a] * g[b];
                }
            }
        }
        direct /= data.len() as f64;
        assert!((v0.clone() - direct).abs().max() < 1e-12);
    }

    #[test]
    fn lambda_prime0_residual_squared_is_exactly_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let residuals: Vec<f64> = (0..100).map(|_| rng.random_range(-2.0..2.0)).collect();
        let v = estimate_lambda_prime0_residual(&residuals, &LossSpec::Squared, None).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_prime0_residual_absolute_standard_normal() {
        let err = ErrorDist::gaussian(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let residuals: Vec<f64> = (0..100_000).map(|_| err.sample(&mut rng)).collect();
        let v = estimate_lambda_prime0_residual(&residuals, &LossSpec::Absolute, None).unwrap();
        // 2 * standard normal density at 0
        assert!((v - 0.7978845608).abs() < 0.03, "{v}");
    }

    #[test]
    fn lambda_prime0_residual_huber_standard_normal() {
        let err = ErrorDist::gaussian(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let residuals: Vec<f64> = (0..100_000).map(|_| err.sample(&mut rng)).collect();
        let loss = LossSpec::huber(1.345).unwrap();
        let v = estimate_lambda_prime0_residual(&residuals, &loss, None).unwrap();
        let std = Normal::new(0.0, 1.0).unwrap();
        let expected = std.cdf(1.345) - std.cdf(-1.345);
        assert!((v - expected).abs() < 0.03, "{v} vs {expected}");
    }

    #[test]
    fn lambda_prime0_degenerate_residuals_error() {
        let residuals = vec![1.0; 50];
        assert!(matches!(
            estimate_lambda_prime0_residual(&residuals, &LossSpec::Absolute, None),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn squared_gaussian_covariance_is_classical_least_squares() {
        let sigma = 0.7;
        let (f, data) = two_segment_fit(500, 9, sigma);
        let err = ErrorDist::gaussian(sigma).unwrap();
        let info = asymptotic_covariance(&f, &data, &LossSpec::Squared, Some(&err)).unwrap();
        // E[psi^2] = 4 sigma^2 and lambda'(0) = 2 cancel to sigma^2 V0^{-1} / n
        let v0inv = info.v0_hat.full().try_inverse().unwrap();
        let classical = v0inv * (sigma * sigma / data.len() as f64);
        let diff = (&info.cov_theta1 - &classical).abs().max();
        assert!(diff < 1e-10 * (1.0 + classical.abs().max()));
        assert_eq!(info.source, CovSource::KnownErrorDist);
    }

    #[test]
    fn balanced_constant_design_covariance_diagonal() {
        let sigma = 1.0;
        let (f, data) = two_segment_fit(1000, 13, sigma);
        let err = ErrorDist::gaussian(sigma).unwrap();
        let info = asymptotic_covariance(&f, &data, &LossSpec::Squared, Some(&err)).unwrap();
        let counts: Vec<f64> = f
            .per_segment
            .iter()
            .map(|s| (s.end - s.start + 1) as f64)
            .collect();
        // per-segment mean variance sigma^2 / n_k
        for k in 0..2 {
            let expected = sigma * sigma / counts[k];
            let got = info.cov_theta1[(k, k)];
            assert!(
                (got - expected).abs() < 1e-12 * expected.max(1.0),
                "block {k}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn absolute_loss_covariance_exceeds_squared_under_gaussian() {
        let (f, data) = two_segment_fit(800, 3, 1.0);
        let err = ErrorDist::gaussian(1.0).unwrap();
        let sq = asymptotic_covariance(&f, &data, &LossSpec::Squared, Some(&err)).unwrap();
        let ab = asymptotic_covariance(&f, &data, &LossSpec::Absolute, Some(&err)).unwrap();
        for i in 0..sq.cov_theta1.nrows() {
            let ratio = ab.cov_theta1[(i, i)] / sq.cov_theta1[(i, i)];
            // the efficiency ratio is exactly pi/2 under the known-law route
            assert!(
                (ratio - std::f64::consts::FRAC_PI_2).abs() < 1e-9,
                "coordinate {i}: ratio {ratio}"
            );
        }
    }

    #[test]
    fn residual_based_source_is_reported() {
        let (f, data) = two_segment_fit(500, 25, 0.5);
        let info = asymptotic_covariance(&f, &data, &LossSpec::Squared, None).unwrap();
        assert_eq!(info.source, CovSource::ResidualBased);
        // residual psi^2 moment should approximate 4 sigma^2 = 1
        assert!((info.psi_sq_hat - 1.0).abs() < 0.2, "{}", info.psi_sq_hat);
    }

    #[test]
    fn covariance_scales_with_squared_units() {
        // scaling y by c scales the squared-loss covariance by c^2
        let (f, data) = two_segment_fit(400, 31, 0.5);
        let info = asymptotic_covariance(&f, &data, &LossSpec::Squared, None).unwrap();
        let scaled_ys: Vec<f64> = data.ys().iter().map(|y| 3.0 * y).collect();
        let scaled = Dataset::new(data.xs().to_vec(), scaled_ys).unwrap();
        let f2 = fit(
            &scaled,
            &SegmentFamily::Constant,
            1,
            &LossSpec::Squared,
            &FitOptions::default(),
        )
        .unwrap();
        let info2 = asymptotic_covariance(&f2, &scaled, &LossSpec::Squared, None).unwrap();
        for i in 0..info.cov_theta1.nrows() {
            let ratio = info2.cov_theta1[(i, i)] / info.cov_theta1[(i, i)];
            assert!((ratio - 9.0).abs() < 0.7, "coordinate {i}: ratio {ratio}");
        }
    }

    #[test]
    fn confidence_interval_widths() {
        let (f, data) = two_segment_fit(500, 19, 0.5);
        let err = ErrorDist::gaussian(0.5).unwrap();
        let info = asymptotic_covariance(&f, &data, &LossSpec::Squared, Some(&err)).unwrap();
        let zero = confidence_intervals(&info, &f, 0.0).unwrap();
        for ((lo, hi), v) in zero.iter().zip(f.theta1()) {
            assert_eq!(*lo, v);
            assert_eq!(*hi, v);
        }
        let ci = confidence_intervals(&info, &f, 0.95).unwrap();
        for ((lo, hi), (i, v)) in ci.iter().zip(f.theta1().into_iter().enumerate()) {
            let half = 1.959963984540054 * info.cov_theta1[(i, i)].sqrt();
            assert!((hi - v - half).abs() < 1e-12);
            assert!((v - lo - half).abs() < 1e-12);
        }
        assert!(confidence_intervals(&info, &f, 1.0).is_err());
    }

    #[test]
    fn half_width_from_known_diagonal() {
        // cov diagonal 0.04 at 95% gives half-width 1.96 * 0.2
        let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.975);
        let half = z * 0.04f64.sqrt();
        assert!((half - 0.392).abs() < 5e-4);
    }

    #[test]
    fn singular_segment_is_named() {
        // linear family with a segment of constant x has a singular block
        let xs = vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.5, 2.0, 2.5];
        let ys = vec![0.0, 0.1, -0.1, 0.05, 5.0, 5.5, 6.0, 6.5];
        let data = Dataset::new(xs, ys).unwrap();
        let opts = FitOptions {
            min_seg: Some(4),
            ..FitOptions::default()
        };
        let f = fit(&data, &SegmentFamily::Linear, 1, &LossSpec::Squared, &opts).unwrap();
        let v0 = estimate_v0(&f, &data);
        assert_eq!(v0.singular_blocks(V0_CONDITION_CUTOFF), vec![0]);
        let err = asymptotic_covariance(&f, &data, &LossSpec::Squared, None).unwrap_err();
        match err {
            Error::Numeric(msg) => assert!(msg.contains("[0]"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
