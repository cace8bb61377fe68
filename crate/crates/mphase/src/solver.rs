//! Inner per-segment minimization of `sum_i rho(y_i - h_alpha(x_i))`.
//!
//! The squared-loss constant/linear cases are solved in closed form via the
//! normal equations. Everything else runs iteratively reweighted
//! Gauss-Newton with a backtracking line search on the exact objective,
//! restarted from a data-driven initial point plus deterministic log-uniform
//! perturbations of it.

use crate::error::{Error, Result};
use crate::loss::{psi, rho, LossSpec};
use crate::model::{ParamBox, SegmentFamily, MAX_PARAM_DIM};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result of one segment fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFit {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
}

/// Inner-solver knobs, extracted from the public fit options.
#[derive(Clone, Copy)]
pub(crate) struct SolverOpts<'a> {
    pub multistart: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub step_shrink: f64,
    pub param_box: Option<&'a ParamBox>,
    pub perturb_seed: u64,
}

/// `sum_i rho(y_i - h_alpha(x_i))` over a slice.
pub(crate) fn objective_slice(
    family: &SegmentFamily,
    loss: &LossSpec,
    alpha: &[f64],
    xs: &[f64],
    ys: &[f64],
) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| rho(loss, y - family.eval_unchecked(alpha, x)))
        .sum()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Ordinary least squares line through the points; falls back to a flat line
/// when the x values do not vary.
fn ols_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let x_scale = xs.iter().fold(0.0f64, |m, x| m.max((x - mx).abs()));
    if sxx <= f64::EPSILON * xs.len() as f64 * x_scale * x_scale || sxx == 0.0 {
        (my, 0.0)
    } else {
        let b = sxy / sxx;
        (my - b * mx, b)
    }
}

fn closed_form_fit(
    family: &SegmentFamily,
    loss: &LossSpec,
    xs: &[f64],
    ys: &[f64],
) -> Option<SegmentFit> {
    let alpha = if loss.squared_scale().is_some() {
        match family {
            SegmentFamily::Constant => vec![mean(ys)],
            SegmentFamily::Linear => {
                let (a, b) = ols_line(xs, ys);
                vec![a, b]
            }
            _ => return None,
        }
    } else if loss.absolute_scale().is_some() && matches!(family, SegmentFamily::Constant) {
        // least absolute deviations: any median minimizes
        vec![median(ys)]
    } else {
        return None;
    };
    let objective = objective_slice(family, loss, &alpha, xs, ys);
    Some(SegmentFit {
        alpha,
        objective,
        converged: true,
    })
}

/// IRLS weight `psi(r)/r`, with the residual floored away from zero.
fn irls_weight(loss: &LossSpec, r: f64) -> f64 {
    let r = if r.abs() < 1e-10 {
        1e-10_f64.copysign(if r == 0.0 { 1.0 } else { r })
    } else {
        r
    };
    psi(loss, r) / r
}

fn data_driven_init(family: &SegmentFamily, loss: &LossSpec, xs: &[f64], ys: &[f64]) -> Vec<f64> {
    match family {
        SegmentFamily::Constant => {
            if loss.squared_scale().is_some() {
                vec![mean(ys)]
            } else {
                vec![median(ys)]
            }
        }
        SegmentFamily::Linear => {
            let (a, b) = ols_line(xs, ys);
            vec![a, b]
        }
        SegmentFamily::Exponential => {
            // log-linear regression on |y|, carrying the dominant sign
            let sign = if mean(ys) >= 0.0 { 1.0 } else { -1.0 };
            let logs: Vec<f64> = ys.iter().map(|y| y.abs().max(1e-12).ln()).collect();
            let (la, b) = ols_line(xs, &logs);
            vec![sign * la.exp(), b]
        }
        SegmentFamily::Logistic => {
            let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let a = if hi.abs() >= lo.abs() { hi } else { lo };
            let a = if a == 0.0 { 1.0 } else { a };
            let (_, slope) = ols_line(xs, ys);
            let b = (4.0 * slope / a).clamp(-20.0, 20.0);
            let b = if b == 0.0 { 1.0 } else { b };
            vec![a, b, median(xs)]
        }
        SegmentFamily::Custom { dim, .. } => vec![1.0; *dim],
    }
}

struct GnOutcome {
    alpha: Vec<f64>,
    objective: f64,
    converged: bool,
}

#[allow(clippy::too_many_arguments)]
fn gauss_newton(
    family: &SegmentFamily,
    loss: &LossSpec,
    xs: &[f64],
    ys: &[f64],
    start: &[f64],
    max_iter: usize,
    grad_tol: f64,
    step_shrink: f64,
    param_box: Option<&ParamBox>,
) -> GnOutcome {
    let d = family.param_dim();
    let mut alpha = start.to_vec();
    if let Some(bx) = param_box {
        bx.clamp(&mut alpha);
    }
    let mut obj = objective_slice(family, loss, &alpha, xs, ys);
    let mut converged = false;
    let mut grad_buf = [0.0f64; MAX_PARAM_DIM];
    let mut grad_vec = vec![0.0f64; d];

    for _ in 0..max_iter {
        let mut jtwj = DMatrix::<f64>::zeros(d, d);
        let mut jtwr = DVector::<f64>::zeros(d);
        grad_vec.iter_mut().for_each(|g| *g = 0.0);
        for (&x, &y) in xs.iter().zip(ys) {
            let r = y - family.eval_unchecked(&alpha, x);
            let g = &mut grad_buf[..d];
            family.grad_unchecked(&alpha, x, g);
            let w = irls_weight(loss, r);
            let p = psi(loss, r);
            for a in 0..d {
                jtwr[a] += w * g[a] * r;
                grad_vec[a] -= p * g[a];
                for b in 0..d {
                    jtwj[(a, b)] += w * g[a] * g[b];
                }
            }
        }

        let grad_norm = grad_vec.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm <= grad_tol * (1.0 + obj.abs()) {
            converged = true;
            break;
        }

        // Levenberg-style ridge escalation when the normal equations are
        // singular or the factorization fails.
        let trace = (0..d).map(|i| jtwj[(i, i)]).sum::<f64>().max(1e-300);
        let mut ridge = 0.0;
        let step = loop {
            let mut m = jtwj.clone();
            for i in 0..d {
                m[(i, i)] += ridge;
            }
            match m.cholesky() {
                Some(ch) => break Some(ch.solve(&jtwr)),
                None => {
                    ridge = if ridge == 0.0 { 1e-10 * trace } else { ridge * 100.0 };
                    if ridge > 1e6 * trace {
                        break None;
                    }
                }
            }
        };
        let mut delta: Vec<f64> = match step {
            Some(s) => s.iter().copied().collect(),
            None => grad_vec.iter().map(|g| -g).collect(),
        };

        let mut dir_deriv: f64 = grad_vec.iter().zip(&delta).map(|(g, s)| g * s).sum();
        if dir_deriv >= 0.0 {
            // not a descent direction; fall back to steepest descent
            delta = grad_vec.iter().map(|g| -g).collect();
            dir_deriv = -grad_norm * grad_norm;
        }

        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1e-14 {
            let mut cand: Vec<f64> =
                alpha.iter().zip(&delta).map(|(a, s)| a + t * s).collect();
            if let Some(bx) = param_box {
                bx.clamp(&mut cand);
            }
            let cand_obj = objective_slice(family, loss, &cand, xs, ys);
            if cand_obj <= obj + 1e-4 * t * dir_deriv || cand_obj < obj {
                accepted = Some((cand, cand_obj));
                break;
            }
            t *= step_shrink;
        }
        let Some((next, next_obj)) = accepted else {
            // no descent possible along this direction; treat as converged
            // when the step scale has collapsed
            converged = true;
            break;
        };

        let step_norm = alpha
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let improvement = obj - next_obj;
        alpha = next;
        obj = next_obj;
        if improvement <= grad_tol * (1.0 + obj.abs())
            && step_norm <= grad_tol.sqrt() * (1.0 + alpha.iter().map(|a| a * a).sum::<f64>().sqrt())
        {
            converged = true;
            break;
        }
    }

    GnOutcome {
        alpha,
        objective: obj,
        converged,
    }
}

/// Fits one segment. `min_seg` feasibility is the caller's responsibility;
/// this function requires a non-empty slice with `|xs| = |ys|`.
pub(crate) fn fit_segment_slice(
    family: &SegmentFamily,
    loss: &LossSpec,
    xs: &[f64],
    ys: &[f64],
    opts: &SolverOpts<'_>,
) -> Result<SegmentFit> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::invalid("segment fit needs matching non-empty x/y"));
    }
    if let Some(fit) = closed_form_fit(family, loss, xs, ys) {
        return Ok(fit);
    }

    let init = data_driven_init(family, loss, xs, ys);
    // deterministic perturbation stream: same starts for the same inputs
    let mut rng = ChaCha8Rng::seed_from_u64(opts.perturb_seed);
    let mut best: Option<GnOutcome> = None;
    for s in 0..opts.multistart.max(1) {
        let start: Vec<f64> = if s == 0 {
            init.clone()
        } else {
            init.iter()
                .map(|&a| {
                    let factor = rng.random_range(-1.5..1.5f64).exp();
                    let shift = if a.abs() < 1e-8 {
                        rng.random_range(-0.5..0.5)
                    } else {
                        0.0
                    };
                    a * factor + shift
                })
                .collect()
        };
        let out = gauss_newton(
            family,
            loss,
            xs,
            ys,
            &start,
            opts.max_iter,
            opts.grad_tol,
            opts.step_shrink,
            opts.param_box,
        );
        let better = match &best {
            None => true,
            Some(b) => out.objective < b.objective,
        };
        if better {
            best = Some(out);
        }
    }
    let best = best.unwrap();
    Ok(SegmentFit {
        alpha: best.alpha,
        objective: best.objective,
        converged: best.converged,
    })
}
