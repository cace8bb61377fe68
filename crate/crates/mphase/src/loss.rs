//! The M-estimation loss layer: the loss family `rho`, its right-derivative
//! `psi`, the smoothing function `lambda(y) = E[psi(eps + y)]`, and the
//! error-distribution moments that drive the asymptotic covariance.
//!
//! Shipped losses are convex with `rho(0) = 0` and a non-decreasing,
//! right-continuous `psi`. For the absolute loss `psi(0) = +1`, the
//! right-continuous choice.

use crate::dist::ErrorDist;
use crate::error::{Error, Result};
use crate::quad;
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Default absolute tolerance for loss-layer quadrature.
pub const QUAD_TOL: f64 = 1e-9;

/// Which side of a change-point a limit-law jump variable belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }
}

/// The loss family `rho`.
///
/// `NegLogLik` is the negative log-density loss of a shipped error
/// distribution, normalized so `rho(0) = 0`; it is only available for the
/// log-concave families (gaussian, laplace), where it stays convex. For
/// gaussian errors it is a positive multiple of the squared loss, for
/// laplace a positive multiple of the absolute loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossSpec {
    Squared,
    Absolute,
    Huber { delta: f64 },
    NegLogLik { err: ErrorDist },
}

/// Standard 95%-efficiency Huber constant.
pub const HUBER_DEFAULT_DELTA: f64 = 1.345;

impl LossSpec {
    pub fn huber(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::invalid("huber delta must be positive and finite"));
        }
        Ok(LossSpec::Huber { delta })
    }

    /// Negative log-density loss for `err`; rejects distributions whose
    /// log-density is not concave (student t), since the resulting loss
    /// would violate the convexity assumption.
    pub fn neg_log_lik(err: ErrorDist) -> Result<Self> {
        match err {
            ErrorDist::Gaussian { .. } | ErrorDist::Laplace { .. } => {
                Ok(LossSpec::NegLogLik { err })
            }
            ErrorDist::StudentT { .. } => Err(Error::invalid(
                "student t negative log-likelihood is not convex; not admissible as an M-loss",
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossSpec::Squared => "squared",
            LossSpec::Absolute => "absolute",
            LossSpec::Huber { .. } => "huber",
            LossSpec::NegLogLik { .. } => "neg_log_lik",
        }
    }

    /// If `rho = c * r^2` for a constant `c > 0`, returns `c`. Drives the
    /// closed-form least-squares paths.
    pub(crate) fn squared_scale(&self) -> Option<f64> {
        match self {
            LossSpec::Squared => Some(1.0),
            LossSpec::NegLogLik {
                err: ErrorDist::Gaussian { sd },
            } => Some(0.5 / (sd * sd)),
            _ => None,
        }
    }

    /// If `rho = c * |r|` for a constant `c > 0`, returns `c`. Drives the
    /// exact-median paths for the constant family.
    pub(crate) fn absolute_scale(&self) -> Option<f64> {
        match self {
            LossSpec::Absolute => Some(1.0),
            LossSpec::NegLogLik {
                err: ErrorDist::Laplace { scale },
            } => Some(1.0 / scale),
            _ => None,
        }
    }

    /// Points where `psi` is non-smooth; quadrature splits there.
    fn psi_kinks(&self) -> Vec<f64> {
        match self {
            LossSpec::Squared => vec![],
            LossSpec::Absolute => vec![0.0],
            LossSpec::Huber { delta } => vec![-delta, *delta],
            LossSpec::NegLogLik { err } => match err {
                ErrorDist::Gaussian { .. } => vec![],
                _ => vec![0.0],
            },
        }
    }
}

/// Evaluates the loss at residual `r`.
pub fn rho(loss: &LossSpec, r: f64) -> f64 {
    match loss {
        LossSpec::Squared => r * r,
        LossSpec::Absolute => r.abs(),
        LossSpec::Huber { delta } => {
            if r.abs() <= *delta {
                0.5 * r * r
            } else {
                delta * r.abs() - 0.5 * delta * delta
            }
        }
        LossSpec::NegLogLik { err } => match err {
            ErrorDist::Gaussian { sd } => 0.5 * r * r / (sd * sd),
            ErrorDist::Laplace { scale } => r.abs() / scale,
            // unreachable by construction
            ErrorDist::StudentT { .. } => f64::NAN,
        },
    }
}

/// The right-continuous, non-decreasing derivative of `rho`.
pub fn psi(loss: &LossSpec, r: f64) -> f64 {
    match loss {
        LossSpec::Squared => 2.0 * r,
        LossSpec::Absolute => {
            if r >= 0.0 {
                1.0
            } else {
                -1.0
            }
        }
        LossSpec::Huber { delta } => r.clamp(-delta, *delta),
        LossSpec::NegLogLik { err } => match err {
            ErrorDist::Gaussian { sd } => r / (sd * sd),
            ErrorDist::Laplace { scale } => {
                if r >= 0.0 {
                    1.0 / scale
                } else {
                    -1.0 / scale
                }
            }
            ErrorDist::StudentT { .. } => f64::NAN,
        },
    }
}

fn huber_gaussian_lambda(delta: f64, sd: f64, y: f64) -> f64 {
    // E[clamp(W, -delta, delta)] with W ~ N(y, sd^2)
    let std = Normal::new(0.0, 1.0).unwrap();
    let a = (-delta - y) / sd;
    let b = (delta - y) / sd;
    let (phi_a, phi_b) = (std.pdf(a), std.pdf(b));
    let (cap_a, cap_b) = (std.cdf(a), std.cdf(b));
    -delta * cap_a + delta * (1.0 - cap_b) + y * (cap_b - cap_a) - sd * (phi_b - phi_a)
}

/// `lambda(y) = E[psi(eps + y)]`, by closed form where one is shipped and by
/// adaptive quadrature against the error density otherwise.
pub fn lambda_fn(loss: &LossSpec, err: &ErrorDist, y: f64) -> Result<f64> {
    match loss {
        LossSpec::Squared => Ok(2.0 * y),
        LossSpec::Absolute => Ok(1.0 - 2.0 * err.cdf(-y)),
        LossSpec::NegLogLik {
            err: ErrorDist::Gaussian { sd },
        } => Ok(y / (sd * sd)),
        LossSpec::NegLogLik {
            err: ErrorDist::Laplace { scale },
        } => Ok((1.0 - 2.0 * err.cdf(-y)) / scale),
        LossSpec::Huber { delta } => match err {
            ErrorDist::Gaussian { sd } => Ok(huber_gaussian_lambda(*delta, *sd, y)),
            _ => lambda_fn_quadrature(loss, err, y, QUAD_TOL),
        },
        _ => lambda_fn_quadrature(loss, err, y, QUAD_TOL),
    }
}

/// Quadrature evaluation of `lambda(y)`; the independent route used to
/// cross-check the closed forms.
pub fn lambda_fn_quadrature(loss: &LossSpec, err: &ErrorDist, y: f64, tol: f64) -> Result<f64> {
    let mut kinks: Vec<f64> = loss.psi_kinks().iter().map(|k| k - y).collect();
    kinks.push(0.0);
    quad::integrate_real_line(&|e| psi(loss, e + y) * err.pdf(e), 0.0, err.sd(), &kinks, tol)
}

/// How the quantities in a [`LambdaInfo`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaMethod {
    Analytic,
    Quadrature,
}

/// `lambda'(0)` and `E[psi^2(eps)]` for a loss/error pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaInfo {
    pub lambda_prime0: f64,
    pub psi_sq_moment: f64,
    pub method: LambdaMethod,
}

fn lambda_prime0_analytic(loss: &LossSpec, err: &ErrorDist) -> f64 {
    match loss {
        LossSpec::Squared => 2.0,
        LossSpec::Absolute => 2.0 * err.pdf(0.0),
        LossSpec::Huber { delta } => err.cdf(*delta) - err.cdf(-*delta),
        LossSpec::NegLogLik {
            err: ErrorDist::Gaussian { sd },
        } => 1.0 / (sd * sd),
        LossSpec::NegLogLik {
            err: ErrorDist::Laplace { scale },
        } => 2.0 * err.pdf(0.0) / scale,
        LossSpec::NegLogLik { .. } => f64::NAN,
    }
}

fn psi_sq_analytic(loss: &LossSpec, err: &ErrorDist) -> Option<f64> {
    match loss {
        LossSpec::Squared => Some(4.0 * err.variance()),
        LossSpec::Absolute => Some(1.0),
        LossSpec::NegLogLik {
            err: ErrorDist::Gaussian { sd },
        } => Some(err.variance() / (sd * sd * sd * sd)),
        LossSpec::NegLogLik {
            err: ErrorDist::Laplace { scale },
        } => Some(1.0 / (scale * scale)),
        LossSpec::Huber { delta } => match err {
            ErrorDist::Gaussian { sd } => {
                // E[min(|Z|, delta)^2], Z ~ N(0, sd^2)
                let std = Normal::new(0.0, 1.0).unwrap();
                let a = delta / sd;
                let inner = sd * sd * (2.0 * std.cdf(a) - 1.0 - 2.0 * a * std.pdf(a));
                let outer = delta * delta * 2.0 * (1.0 - std.cdf(a));
                Some(inner + outer)
            }
            ErrorDist::Laplace { scale } => {
                let a = delta / scale;
                let inner = scale * scale * (2.0 - (-a).exp() * (a * a + 2.0 * a + 2.0));
                let outer = delta * delta * (-a).exp();
                Some(inner + outer)
            }
            ErrorDist::StudentT { .. } => None,
        },
        LossSpec::NegLogLik { .. } => None,
    }
}

/// `E[psi^2(eps)]` by quadrature.
pub fn psi_sq_quadrature(loss: &LossSpec, err: &ErrorDist, tol: f64) -> Result<f64> {
    let mut kinks = loss.psi_kinks();
    kinks.push(0.0);
    quad::integrate_real_line(
        &|e| {
            let p = psi(loss, e);
            p * p * err.pdf(e)
        },
        0.0,
        err.sd(),
        &kinks,
        tol,
    )
}

/// `lambda'(0)` from central differences of the quadrature route,
/// polynomial-extrapolated to step zero; the independent cross-check of the
/// analytic values. Plain Richardson is not enough here: when the error
/// density has a kink at the origin the difference quotient carries an O(h)
/// term, so the extrapolation must span mixed orders.
pub fn lambda_prime0_quadrature(loss: &LossSpec, err: &ErrorDist) -> Result<f64> {
    let tol = 1e-12;
    let h0 = 2e-2 * err.sd().min(1.0);
    let diff = |h: f64| -> Result<f64> {
        let up = lambda_fn_quadrature(loss, err, h, tol)?;
        let dn = lambda_fn_quadrature(loss, err, -h, tol)?;
        Ok((up - dn) / (2.0 * h))
    };
    let hs = [h0, 0.5 * h0, 0.25 * h0, 0.125 * h0];
    let mut ds = [0.0f64; 4];
    for (d, h) in ds.iter_mut().zip(hs) {
        *d = diff(h)?;
    }
    // Lagrange extrapolation of the 4 nodes to h = 0
    let mut value = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if j != i {
                w *= hs[j] / (hs[j] - hs[i]);
            }
        }
        value += w * ds[i];
    }
    Ok(value)
}

/// Computes `lambda'(0)` and `E[psi^2]`, analytic where closed forms are
/// shipped and by quadrature otherwise.
pub fn lambda_info(loss: &LossSpec, err: &ErrorDist) -> Result<LambdaInfo> {
    let lambda_prime0 = lambda_prime0_analytic(loss, err);
    let (psi_sq_moment, method) = match psi_sq_analytic(loss, err) {
        Some(v) => (v, LambdaMethod::Analytic),
        None => (psi_sq_quadrature(loss, err, QUAD_TOL)?, LambdaMethod::Quadrature),
    };
    if !(lambda_prime0 > 0.0) {
        return Err(Error::numeric(format!(
            "lambda'(0) = {lambda_prime0} is not strictly positive for {}/{}",
            loss.name(),
            err.name()
        )));
    }
    Ok(LambdaInfo {
        lambda_prime0,
        psi_sq_moment,
        method,
    })
}

/// Fully quadrature-based [`LambdaInfo`]; exists so the analytic and
/// numerical routes can be compared wherever both are defined.
pub fn lambda_info_quadrature(loss: &LossSpec, err: &ErrorDist) -> Result<LambdaInfo> {
    Ok(LambdaInfo {
        lambda_prime0: lambda_prime0_quadrature(loss, err)?,
        psi_sq_moment: psi_sq_quadrature(loss, err, 1e-12)?,
        method: LambdaMethod::Quadrature,
    })
}

/// `E[rho(eps + d) - rho(eps)]`, the mean of the limit-law jump variable.
/// Strictly positive for every `d != 0`, which is what makes the two-sided
/// limit process drift upward on both sides.
pub fn mean_rho_shift(loss: &LossSpec, err: &ErrorDist, d: f64) -> Result<f64> {
    if d == 0.0 {
        return Err(Error::invalid("mean_rho_shift requires d != 0"));
    }
    if let Some(c) = loss.squared_scale() {
        // E[c((eps+d)^2 - eps^2)] = c d^2 for centered errors
        return Ok(c * d * d);
    }
    let mut kinks: Vec<f64> = loss
        .psi_kinks()
        .iter()
        .flat_map(|k| [*k, k - d])
        .collect();
    kinks.extend([0.0, -d]);
    quad::integrate_real_line(
        &|e| (rho(loss, e + d) - rho(loss, e)) * err.pdf(e),
        0.0,
        err.sd(),
        &kinks,
        QUAD_TOL,
    )
}

/// Draws one limit-law jump variable `rho(eps + sign * d) - rho(eps)` with
/// `eps ~ err`.
pub fn jump_variable_sample<R: Rng + ?Sized>(
    loss: &LossSpec,
    err: &ErrorDist,
    d: f64,
    side: Side,
    rng: &mut R,
) -> Result<f64> {
    if d == 0.0 {
        return Err(Error::invalid("jump variable requires d != 0"));
    }
    let eps = err.sample(rng);
    Ok(rho(loss, eps + side.sign() * d) - rho(loss, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shipped_losses() -> Vec<LossSpec> {
        vec![
            LossSpec::Squared,
            LossSpec::Absolute,
            LossSpec::huber(HUBER_DEFAULT_DELTA).unwrap(),
            LossSpec::neg_log_lik(ErrorDist::gaussian(0.8).unwrap()).unwrap(),
            LossSpec::neg_log_lik(ErrorDist::laplace(1.2).unwrap()).unwrap(),
        ]
    }

    fn shipped_errors() -> Vec<ErrorDist> {
        vec![
            ErrorDist::gaussian(1.0).unwrap(),
            ErrorDist::gaussian(0.5).unwrap(),
            ErrorDist::laplace(0.7).unwrap(),
            ErrorDist::student_t(3.0, 1.0).unwrap(),
        ]
    }

    #[test]
    fn rho_known_values() {
        assert_eq!(rho(&LossSpec::Squared, 3.0), 9.0);
        assert_eq!(rho(&LossSpec::Absolute, -2.0), 2.0);
        assert_eq!(rho(&LossSpec::huber(1.0).unwrap(), 2.0), 1.5);
        assert_eq!(rho(&LossSpec::huber(1.0).unwrap(), 0.5), 0.125);
    }

    #[test]
    fn psi_known_values() {
        assert_eq!(psi(&LossSpec::Squared, 3.0), 6.0);
        assert_eq!(psi(&LossSpec::Absolute, 0.0), 1.0);
        assert_eq!(psi(&LossSpec::huber(1.345).unwrap(), -2.0), -1.345);
    }

    #[test]
    fn rho_nonnegative_and_zero_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for loss in shipped_losses() {
            assert_eq!(rho(&loss, 0.0), 0.0);
            for _ in 0..200 {
                let r = rng.random_range(-5.0..5.0);
                assert!(rho(&loss, r) >= 0.0);
            }
        }
    }

    #[test]
    fn psi_is_right_derivative_of_rho() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-7;
        for loss in shipped_losses() {
            for i in 0..100 {
                // make sure r = 0 is hit, where right-continuity matters
                let r = if i == 0 {
                    0.0
                } else {
                    rng.random_range(-4.0..4.0)
                };
                let fd = (rho(&loss, r + h) - rho(&loss, r)) / h;
                assert!(
                    (fd - psi(&loss, r)).abs() < 1e-5,
                    "{}: r={r} fd={fd} psi={}",
                    loss.name(),
                    psi(&loss, r)
                );
            }
        }
    }

    #[test]
    fn psi_is_nondecreasing() {
        for loss in shipped_losses() {
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=400 {
                let r = -4.0 + i as f64 * 0.02;
                let p = psi(&loss, r);
                assert!(p >= prev, "{} at {r}", loss.name());
                prev = p;
            }
        }
    }

    #[test]
    fn lambda_zero_is_zero_for_every_pair() {
        for loss in shipped_losses() {
            for err in shipped_errors() {
                let v = lambda_fn_quadrature(&loss, &err, 0.0, 1e-10).unwrap();
                assert!(
                    v.abs() < 1e-8,
                    "{}/{}: lambda(0) = {v}",
                    loss.name(),
                    err.name()
                );
            }
        }
    }

    #[test]
    fn lambda_is_strictly_increasing() {
        for loss in shipped_losses() {
            for err in shipped_errors() {
                let mut prev = f64::NEG_INFINITY;
                for i in 0..50 {
                    let y = -3.0 + 6.0 * i as f64 / 49.0;
                    let v = lambda_fn(&loss, &err, y).unwrap();
                    assert!(
                        v > prev,
                        "{}/{} at y={y}: {v} <= {prev}",
                        loss.name(),
                        err.name()
                    );
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn lambda_known_values() {
        for err in shipped_errors() {
            let v = lambda_fn(&LossSpec::Squared, &err, 0.7).unwrap();
            assert!((v - 1.4).abs() < 1e-12);
        }
        let g = ErrorDist::gaussian(1.0).unwrap();
        assert_eq!(lambda_fn(&LossSpec::Absolute, &g, 0.0).unwrap(), 0.0);
        // huber against the quadrature oracle
        let h = LossSpec::huber(HUBER_DEFAULT_DELTA).unwrap();
        let closed = lambda_fn(&h, &g, 0.1).unwrap();
        let oracle = lambda_fn_quadrature(&h, &g, 0.1, 1e-12).unwrap();
        assert!(closed > 0.0);
        assert!((closed - oracle).abs() < 1e-9, "{closed} vs {oracle}");
    }

    #[test]
    fn lambda_closed_forms_match_quadrature_on_a_grid() {
        for loss in shipped_losses() {
            for err in shipped_errors() {
                for &y in &[-2.0, -0.3, 0.4, 1.7] {
                    let a = lambda_fn(&loss, &err, y).unwrap();
                    let q = lambda_fn_quadrature(&loss, &err, y, 1e-11).unwrap();
                    assert!(
                        (a - q).abs() < 1e-7 * (1.0 + a.abs()),
                        "{}/{} y={y}: {a} vs {q}",
                        loss.name(),
                        err.name()
                    );
                }
            }
        }
    }

    #[test]
    fn lambda_info_squared_gaussian() {
        let info = lambda_info(&LossSpec::Squared, &ErrorDist::gaussian(1.0).unwrap()).unwrap();
        assert_eq!(info.lambda_prime0, 2.0);
        assert_eq!(info.psi_sq_moment, 4.0);
        assert_eq!(info.method, LambdaMethod::Analytic);
    }

    #[test]
    fn lambda_info_absolute_gaussian() {
        let info = lambda_info(&LossSpec::Absolute, &ErrorDist::gaussian(1.0).unwrap()).unwrap();
        // 2 * standard normal density at 0
        assert!((info.lambda_prime0 - 0.7978845608028654).abs() < 1e-12);
        assert_eq!(info.psi_sq_moment, 1.0);
    }

    #[test]
    fn lambda_info_huber_gaussian() {
        let delta = HUBER_DEFAULT_DELTA;
        let info = lambda_info(&LossSpec::huber(delta).unwrap(), &ErrorDist::gaussian(1.0).unwrap())
            .unwrap();
        // P(|Z| <= delta) from the normal CDF oracle
        let std = Normal::new(0.0, 1.0).unwrap();
        let expected = std.cdf(delta) - std.cdf(-delta);
        assert!((info.lambda_prime0 - expected).abs() < 1e-12);
    }

    #[test]
    fn analytic_and_quadrature_routes_agree() {
        for loss in shipped_losses() {
            for err in shipped_errors() {
                let a = lambda_info(&loss, &err).unwrap();
                let q = lambda_info_quadrature(&loss, &err).unwrap();
                let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
                assert!(
                    rel(a.lambda_prime0, q.lambda_prime0) < 1e-6,
                    "{}/{} lambda'(0): {} vs {}",
                    loss.name(),
                    err.name(),
                    a.lambda_prime0,
                    q.lambda_prime0
                );
                assert!(
                    rel(a.psi_sq_moment, q.psi_sq_moment) < 1e-6,
                    "{}/{} psi^2: {} vs {}",
                    loss.name(),
                    err.name(),
                    a.psi_sq_moment,
                    q.psi_sq_moment
                );
            }
        }
    }

    #[test]
    fn mean_rho_shift_positive_for_nonzero_d() {
        for loss in shipped_losses() {
            for err in shipped_errors() {
                for &d in &[-2.0, -0.5, 0.5, 2.0] {
                    let p = mean_rho_shift(&loss, &err, d).unwrap();
                    assert!(
                        p > 0.0,
                        "{}/{} d={d}: mean shift {p}",
                        loss.name(),
                        err.name()
                    );
                }
            }
        }
        assert!(mean_rho_shift(&LossSpec::Squared, &shipped_errors()[0], 0.0).is_err());
    }

    #[test]
    fn mean_rho_shift_equals_integral_of_lambda() {
        // E[rho(eps+d) - rho(eps)] = integral of lambda over [min(0,d), max(0,d)]
        for loss in shipped_losses() {
            for err in shipped_errors() {
                for &d in &[-1.5, 0.8] {
                    let p = mean_rho_shift(&loss, &err, d).unwrap();
                    let (a, b) = if d > 0.0 { (0.0, d) } else { (d, 0.0) };
                    let int = quad::integrate(
                        &|z| lambda_fn(&loss, &err, z).unwrap(),
                        a,
                        b,
                        1e-10,
                    )
                    .unwrap();
                    let int = if d > 0.0 { int } else { -int };
                    assert!(
                        (p - int).abs() < 1e-6 * (1.0 + p.abs()),
                        "{}/{} d={d}: {p} vs {int}",
                        loss.name(),
                        err.name()
                    );
                }
            }
        }
    }

    #[test]
    fn jump_variable_squared_mean_is_d_squared() {
        let err = ErrorDist::gaussian(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = 1.5;
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = jump_variable_sample(&LossSpec::Squared, &err, d, Side::Positive, &mut rng)
                .unwrap();
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!((mean - d * d).abs() < 3.0 * se, "mean {mean} vs {}", d * d);
    }

    #[test]
    fn jump_variable_absolute_mean_matches_quadrature() {
        let err = ErrorDist::gaussian(1.0).unwrap();
        let loss = LossSpec::Absolute;
        let d = 2.0;
        let expected = mean_rho_shift(&loss, &err, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v = jump_variable_sample(&loss, &err, d, Side::Positive, &mut rng).unwrap();
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean} vs quadrature {expected} (se {se})"
        );
    }

    #[test]
    fn jump_variable_rejects_zero_d() {
        let err = ErrorDist::gaussian(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(
            jump_variable_sample(&LossSpec::Squared, &err, 0.0, Side::Negative, &mut rng).is_err()
        );
    }

    #[test]
    fn neg_log_lik_rejects_student_t() {
        assert!(LossSpec::neg_log_lik(ErrorDist::student_t(3.0, 1.0).unwrap()).is_err());
    }
}
