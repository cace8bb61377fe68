//! Centered error distributions shipped with the library. All have a
//! positive density everywhere, zero mean and finite variance, so they are
//! admissible noise laws for the regression model.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::Distribution;
use statrs::distribution::{Continuous, ContinuousCDF, Laplace, Normal, StudentsT};

/// A centered error distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorDist {
    /// Normal with standard deviation `sd`.
    Gaussian { sd: f64 },
    /// Laplace (double exponential) with scale `b`; variance `2 b^2`.
    Laplace { scale: f64 },
    /// Student t with `dof > 2` (so the variance is finite) and scale `s`;
    /// variance `s^2 * dof / (dof - 2)`.
    StudentT { dof: f64, scale: f64 },
}

impl ErrorDist {
    pub fn gaussian(sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::invalid("gaussian sd must be positive and finite"));
        }
        Ok(ErrorDist::Gaussian { sd })
    }

    pub fn laplace(scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid("laplace scale must be positive and finite"));
        }
        Ok(ErrorDist::Laplace { scale })
    }

    pub fn student_t(dof: f64, scale: f64) -> Result<Self> {
        if !(dof > 2.0) || !dof.is_finite() {
            return Err(Error::invalid(
                "student t requires dof > 2 for a finite second moment",
            ));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid("student t scale must be positive and finite"));
        }
        Ok(ErrorDist::StudentT { dof, scale })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorDist::Gaussian { .. } => "gaussian",
            ErrorDist::Laplace { .. } => "laplace",
            ErrorDist::StudentT { .. } => "student_t",
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            ErrorDist::Gaussian { sd } => Normal::new(0.0, *sd).unwrap().pdf(x),
            ErrorDist::Laplace { scale } => Laplace::new(0.0, *scale).unwrap().pdf(x),
            ErrorDist::StudentT { dof, scale } => {
                StudentsT::new(0.0, *scale, *dof).unwrap().pdf(x)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ErrorDist::Gaussian { sd } => Normal::new(0.0, *sd).unwrap().cdf(x),
            ErrorDist::Laplace { scale } => Laplace::new(0.0, *scale).unwrap().cdf(x),
            ErrorDist::StudentT { dof, scale } => {
                StudentsT::new(0.0, *scale, *dof).unwrap().cdf(x)
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ErrorDist::Gaussian { sd } => sd * sd,
            ErrorDist::Laplace { scale } => 2.0 * scale * scale,
            ErrorDist::StudentT { dof, scale } => scale * scale * dof / (dof - 2.0),
        }
    }

    /// Standard deviation; used to scale quadrature cores and bandwidths.
    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ErrorDist::Gaussian { sd } => {
                rand_distr::Normal::new(0.0, *sd).unwrap().sample(rng)
            }
            ErrorDist::Laplace { scale } => {
                // inverse CDF of the double exponential
                let u: f64 = rng.random::<f64>() - 0.5;
                -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            ErrorDist::StudentT { dof, scale } => {
                scale * rand_distr::StudentT::new(*dof).unwrap().sample(rng)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constructors_validate() {
        assert!(ErrorDist::gaussian(0.0).is_err());
        assert!(ErrorDist::laplace(-1.0).is_err());
        assert!(ErrorDist::student_t(2.0, 1.0).is_err());
        assert!(ErrorDist::student_t(3.0, 1.0).is_ok());
    }

    #[test]
    fn densities_integrate_to_one() {
        for d in [
            ErrorDist::gaussian(0.7).unwrap(),
            ErrorDist::laplace(1.3).unwrap(),
            ErrorDist::student_t(3.0, 0.8).unwrap(),
        ] {
            let mass = quad::integrate_real_line(&|x| d.pdf(x), 0.0, d.sd(), &[0.0], 1e-10)
                .unwrap();
            assert!((mass - 1.0).abs() < 1e-8, "{}: {mass}", d.name());
        }
    }

    #[test]
    fn variance_matches_quadrature() {
        for d in [
            ErrorDist::gaussian(0.7).unwrap(),
            ErrorDist::laplace(1.3).unwrap(),
            ErrorDist::student_t(4.5, 0.8).unwrap(),
        ] {
            let m2 =
                quad::integrate_real_line(&|x| x * x * d.pdf(x), 0.0, d.sd(), &[0.0], 1e-10)
                    .unwrap();
            assert!(
                (m2 - d.variance()).abs() / d.variance() < 1e-7,
                "{}: {m2} vs {}",
                d.name(),
                d.variance()
            );
        }
    }

    #[test]
    fn sample_moments_are_sane() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for d in [
            ErrorDist::gaussian(0.5).unwrap(),
            ErrorDist::laplace(0.5).unwrap(),
            ErrorDist::student_t(5.0, 0.5).unwrap(),
        ] {
            let n = 200_000;
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..n {
                let e = d.sample(&mut rng);
                sum += e;
                sumsq += e * e;
            }
            let mean = sum / n as f64;
            let var = sumsq / n as f64 - mean * mean;
            let se = (d.variance() / n as f64).sqrt();
            assert!(mean.abs() < 4.0 * se, "{}: mean {mean}", d.name());
            assert!(
                (var - d.variance()).abs() / d.variance() < 0.05,
                "{}: var {var} vs {}",
                d.name(),
                d.variance()
            );
        }
    }
}
