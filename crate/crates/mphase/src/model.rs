//! Parametric segment families, the piecewise regression function and its
//! gradient in the regression parameters, and jump/identifiability checks.
//!
//! A model with `K` change-points `tau_1 < ... < tau_K` evaluates as the
//! segment function of segment `k` on `(tau_k, tau_{k+1}]` (with
//! `tau_0 = -inf`, `tau_{K+1} = +inf`). The boundary point `x = tau_k`
//! belongs to the *left* segment; this left-closed convention is used
//! everywhere, including when segmenting data.

use crate::error::{Error, Result};

/// Maximum parameter dimension over the shipped families.
pub const MAX_PARAM_DIM: usize = 3;

/// A parametric curve family for one regression segment.
///
/// Shipped families and their parameterizations:
/// - `Constant`: `h(x) = a`, parameters `(a)`.
/// - `Linear`: `h(x) = a + b*x`, parameters `(a, b)`.
/// - `Exponential`: `h(x) = a * exp(b*x)`, parameters `(a, b)`.
/// - `Logistic`: `h(x) = a / (1 + exp(-b*(x - c)))`, parameters `(a, b, c)`.
///
/// `Custom` is the extension point for user families: supply the evaluation
/// function, its analytic gradient with respect to the parameters, and the
/// parameter dimension. The gradient must match finite differences of the
/// evaluation; the smoothness requirements placed on shipped families apply
/// to custom ones as well but are not checked.
#[derive(Debug, Clone, Copy, PartialEq)]
// Custom variants compare by function pointer; fine for this crate's use
// (equality of shipped variants is what matters).
#[allow(unpredictable_function_pointer_comparisons)]
pub enum SegmentFamily {
    Constant,
    Linear,
    Exponential,
    Logistic,
    Custom {
        name: &'static str,
        dim: usize,
        eval: fn(&[f64], f64) -> f64,
        grad: fn(&[f64], f64, &mut [f64]),
    },
}

impl SegmentFamily {
    /// Number of parameters per segment.
    pub fn param_dim(&self) -> usize {
        match self {
            SegmentFamily::Constant => 1,
            SegmentFamily::Linear => 2,
            SegmentFamily::Exponential => 2,
            SegmentFamily::Logistic => 3,
            SegmentFamily::Custom { dim, .. } => *dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SegmentFamily::Constant => "constant",
            SegmentFamily::Linear => "linear",
            SegmentFamily::Exponential => "exponential",
            SegmentFamily::Logistic => "logistic",
            SegmentFamily::Custom { name, .. } => name,
        }
    }

    fn check_dim(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.param_dim() {
            return Err(Error::invalid(format!(
                "family '{}' expects {} parameters, got {}",
                self.name(),
                self.param_dim(),
                alpha.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn eval_unchecked(&self, alpha: &[f64], x: f64) -> f64 {
        match self {
            SegmentFamily::Constant => alpha[0],
            SegmentFamily::Linear => alpha[0] + alpha[1] * x,
            SegmentFamily::Exponential => alpha[0] * (alpha[1] * x).exp(),
            SegmentFamily::Logistic => {
                let s = 1.0 / (1.0 + (-alpha[1] * (x - alpha[2])).exp());
                alpha[0] * s
            }
            SegmentFamily::Custom { eval, .. } => eval(alpha, x),
        }
    }

    pub(crate) fn grad_unchecked(&self, alpha: &[f64], x: f64, out: &mut [f64]) {
        match self {
            SegmentFamily::Constant => out[0] = 1.0,
            SegmentFamily::Linear => {
                out[0] = 1.0;
                out[1] = x;
            }
            SegmentFamily::Exponential => {
                let e = (alpha[1] * x).exp();
                out[0] = e;
                out[1] = alpha[0] * x * e;
            }
            SegmentFamily::Logistic => {
                let s = 1.0 / (1.0 + (-alpha[1] * (x - alpha[2])).exp());
                let ds = s * (1.0 - s);
                out[0] = s;
                out[1] = alpha[0] * ds * (x - alpha[2]);
                out[2] = -alpha[0] * ds * alpha[1];
            }
            SegmentFamily::Custom { grad, .. } => grad(alpha, x, out),
        }
    }
}

/// Evaluates `h_alpha(x)` for one segment family.
pub fn eval_segment(family: &SegmentFamily, alpha: &[f64], x: f64) -> Result<f64> {
    family.check_dim(alpha)?;
    Ok(family.eval_unchecked(alpha, x))
}

/// Analytic gradient of `h_alpha(x)` with respect to `alpha`.
pub fn grad_segment(family: &SegmentFamily, alpha: &[f64], x: f64) -> Result<Vec<f64>> {
    family.check_dim(alpha)?;
    let mut out = vec![0.0; family.param_dim()];
    family.grad_unchecked(alpha, x, &mut out);
    Ok(out)
}

/// Per-coordinate box bounds for the regression parameters, shared across
/// all segments. Stands in for the compact parameter set the theory assumes;
/// by default parameters are unbounded, which is a documented caveat.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::invalid("param box bounds must have equal length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::invalid("param box lower bound exceeds upper bound"));
        }
        Ok(ParamBox { lower, upper })
    }

    pub fn contains(&self, alpha: &[f64]) -> bool {
        alpha.len() == self.lower.len()
            && alpha
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(a, (l, u))| *a >= *l && *a <= *u)
    }

    pub(crate) fn clamp(&self, alpha: &mut [f64]) {
        for (a, (l, u)) in alpha.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *a = a.clamp(*l, *u);
        }
    }
}

/// A piecewise regression function: `K+1` segment parameter vectors and
/// `K` change-points.
///
/// Construction checks structural consistency (parameter dimensions and the
/// alphas/taus count relation). Ordering of the change-points and nonzero
/// jumps are *not* enforced here; [`validate_model`] reports them, so that
/// invalid candidates can be represented and diagnosed.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseModel {
    pub family: SegmentFamily,
    pub alphas: Vec<Vec<f64>>,
    pub taus: Vec<f64>,
    pub param_box: Option<ParamBox>,
}

impl PiecewiseModel {
    pub fn new(family: SegmentFamily, alphas: Vec<Vec<f64>>, taus: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::invalid("model needs at least one segment"));
        }
        if alphas.len() != taus.len() + 1 {
            return Err(Error::invalid(format!(
                "expected {} parameter vectors for {} change-points, got {}",
                taus.len() + 1,
                taus.len(),
                alphas.len()
            )));
        }
        let d = family.param_dim();
        for (k, a) in alphas.iter().enumerate() {
            if a.len() != d {
                return Err(Error::invalid(format!(
                    "segment {k}: expected {d} parameters, got {}",
                    a.len()
                )));
            }
        }
        if taus.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("change-points must be finite"));
        }
        Ok(PiecewiseModel {
            family,
            alphas,
            taus,
            param_box: None,
        })
    }

    pub fn with_param_box(mut self, param_box: ParamBox) -> Result<Self> {
        if param_box.lower.len() != self.family.param_dim() {
            return Err(Error::invalid(
                "param box dimension does not match the family",
            ));
        }
        self.param_box = Some(param_box);
        Ok(self)
    }

    /// Number of change-points.
    pub fn k(&self) -> usize {
        self.taus.len()
    }

    /// Index of the segment containing `x` under the left-closed convention:
    /// segment `k` covers `(tau_k, tau_{k+1}]`.
    pub fn segment_index(&self, x: f64) -> usize {
        self.taus.partition_point(|t| *t < x)
    }
}

/// The jump of the regression function at change-point `k` (1-based):
/// `h_{alpha_k}(tau_k) - h_{alpha_{k-1}}(tau_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub index: usize,
    pub value: f64,
}

/// Evaluates the piecewise function at `x`. At `x = tau_k` exactly, the left
/// segment applies.
pub fn eval_piecewise(model: &PiecewiseModel, x: f64) -> f64 {
    let k = model.segment_index(x);
    model.family.eval_unchecked(&model.alphas[k], x)
}

/// Gradient of the piecewise function with respect to the full regression
/// parameter vector, as a flat `(K+1)*d` vector. Exactly one block of length
/// `d` is nonzero: the one of the segment containing `x`.
pub fn grad_piecewise(model: &PiecewiseModel, x: f64) -> Vec<f64> {
    let d = model.family.param_dim();
    let mut out = vec![0.0; model.alphas.len() * d];
    let k = model.segment_index(x);
    model
        .family
        .grad_unchecked(&model.alphas[k], x, &mut out[k * d..(k + 1) * d]);
    out
}

/// Jumps at all change-points, in order.
pub fn jumps(model: &PiecewiseModel) -> Vec<Jump> {
    model
        .taus
        .iter()
        .enumerate()
        .map(|(i, &tau)| {
            let left = model.family.eval_unchecked(&model.alphas[i], tau);
            let right = model.family.eval_unchecked(&model.alphas[i + 1], tau);
            Jump {
                index: i + 1,
                value: right - left,
            }
        })
        .collect()
}

/// One violation found by [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub enum ModelViolation {
    /// `taus[k] >= taus[k+1]` (0-based `k`).
    TausNotIncreasing { k: usize },
    /// Segment `k`'s parameters fall outside the parameter box.
    OutsideParamBox { segment: usize },
    /// `|jump at tau_k| <= jump_tol` (1-based `k`).
    JumpTooSmall { k: usize, value: f64 },
}

/// Validation report; an empty `violations` list means the model is a valid,
/// identifiable piecewise regression function.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<ModelViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Default tolerance below which a jump is reported as an identifiability
/// violation. The theory requires strictly nonzero jumps; numerics need a
/// threshold.
pub const DEFAULT_JUMP_TOL: f64 = 1e-10;

/// Checks change-point ordering, box membership and the nonzero-jump
/// identifiability condition. Failures are reported, not raised.
pub fn validate_model(model: &PiecewiseModel, jump_tol: f64) -> ValidationReport {
    let mut report = ValidationReport::default();
    for k in 0..model.taus.len().saturating_sub(1) {
        if model.taus[k] >= model.taus[k + 1] {
            report.violations.push(ModelViolation::TausNotIncreasing { k });
        }
    }
    if let Some(bx) = &model.param_box {
        for (k, a) in model.alphas.iter().enumerate() {
            if !bx.contains(a) {
                report
                    .violations
                    .push(ModelViolation::OutsideParamBox { segment: k });
            }
        }
    }
    // Jumps are only meaningful when the taus are ordered.
    if report.is_ok() {
        for j in jumps(model) {
            if j.value.abs() <= jump_tol {
                report.violations.push(ModelViolation::JumpTooSmall {
                    k: j.index,
                    value: j.value,
                });
            }
        }
    }
    report
}
