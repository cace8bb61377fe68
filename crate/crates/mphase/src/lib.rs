//! M-estimation for multi-phase nonlinear regression under random design.
//!
//! The regression function switches among `K + 1` parametric segments at `K`
//! unknown change-points of the covariate and is discontinuous at each of
//! them. Fitting minimizes a sum of convex losses over residuals: the inner
//! regression parameters are profiled out per segment and the change-points
//! are searched exactly over the ordered design points via dynamic
//! programming. Plug-in asymptotic inference for the regression parameters,
//! a simulator for the compound-Poisson limit law of the change-point
//! estimator, and a Monte Carlo harness verifying the convergence rates
//! round out the crate.

pub mod dist;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod limitlaw;
pub mod loss;
pub mod model;
pub mod montecarlo;
pub mod quad;
mod solver;

pub use dist::ErrorDist;
pub use error::{Error, Result};
pub use estimator::{Dataset, FitOptions, FitResult};
pub use loss::LossSpec;
pub use model::{PiecewiseModel, SegmentFamily};
