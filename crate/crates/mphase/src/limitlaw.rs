//! The compound-Poisson limit law of the change-point estimator.
//!
//! Rescaled as `n (tau_hat - tau0)`, the change-point error converges to the
//! smallest minimizer of a two-sided process built from two independent
//! one-sided compound Poisson processes glued at zero: jumps arrive at the
//! design density's rate at the true change-point, and each jump is an
//! independent copy of `rho(eps + d0) - rho(eps)` on the right side and
//! `rho(eps - d0) - rho(eps)` on the left. Both jump means are strictly
//! positive, so the process drifts upward on both sides and the minimizer is
//! almost surely finite.
//!
//! The minimizer is reported as the *infimum* of the argmin set. On the
//! negative axis the achieving interval is open at its left end; the
//! returned point is that open endpoint (the negated next-jump time), a
//! limit point rather than an attaining one. This matches the left-end-point
//! convention of the finite-sample estimator, whose rescaled error sits at
//! the order statistic immediately left of the optimal cell.

use crate::dist::ErrorDist;
use crate::error::{Error, Result};
use crate::loss::{jump_variable_sample, mean_rho_shift, LossSpec, Side};
use rand::Rng;
use rand_distr::{Distribution, Poisson, Uniform};

/// Parameters of one change-point's limit process.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLawSpec {
    /// Design density at the true change-point; the Poisson rate.
    pub rate: f64,
    /// True jump of the regression function there.
    pub jump_d: f64,
    pub loss: LossSpec,
    pub err: ErrorDist,
    /// Hard cap on the simulation horizon (per side).
    pub horizon_cap: f64,
    /// Fraction of the horizon treated as its boundary zone: while the
    /// minimizer sits inside the zone the window is extended.
    pub extend_margin: f64,
    mean_jump_pos: f64,
    mean_jump_neg: f64,
}

impl LimitLawSpec {
    pub fn new(rate: f64, jump_d: f64, loss: LossSpec, err: ErrorDist) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::invalid("rate must be positive and finite"));
        }
        if jump_d == 0.0 || !jump_d.is_finite() {
            return Err(Error::invalid("jump_d must be nonzero and finite"));
        }
        let mean_jump_pos = mean_rho_shift(&loss, &err, jump_d)?;
        let mean_jump_neg = mean_rho_shift(&loss, &err, -jump_d)?;
        if !(mean_jump_pos > 0.0) || !(mean_jump_neg > 0.0) {
            return Err(Error::numeric(
                "mean jump is not strictly positive; the limit process would not drift upward",
            ));
        }
        Ok(LimitLawSpec {
            rate,
            jump_d,
            loss,
            err,
            horizon_cap: 1e6 / rate,
            extend_margin: 0.05,
            mean_jump_pos,
            mean_jump_neg,
        })
    }

    pub fn with_horizon_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(Error::invalid("horizon cap must be positive"));
        }
        self.horizon_cap = cap;
        Ok(self)
    }

    pub fn with_extend_margin(mut self, margin: f64) -> Result<Self> {
        if !(margin > 0.0 && margin < 1.0) {
            return Err(Error::invalid("extend margin must lie in (0, 1)"));
        }
        self.extend_margin = margin;
        Ok(self)
    }

    /// Starting horizon for the adaptive sampler.
    pub fn initial_horizon(&self) -> f64 {
        let m = self.mean_jump_pos.min(self.mean_jump_neg).min(1.0);
        (10.0 / (self.rate * m)).min(self.horizon_cap)
    }

    pub fn mean_jump(&self, side: Side) -> f64 {
        match side {
            Side::Positive => self.mean_jump_pos,
            Side::Negative => self.mean_jump_neg,
        }
    }
}

/// One simulated one-sided compound Poisson path on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPath {
    pub side: Side,
    /// Jump times, strictly increasing in `(0, horizon]`.
    pub jump_times: Vec<f64>,
    pub jump_values: Vec<f64>,
    /// Running sums of the jump values.
    pub cumulative: Vec<f64>,
    pub horizon: f64,
}

impl CompoundPath {
    fn empty(side: Side, horizon: f64) -> Self {
        CompoundPath {
            side,
            jump_times: Vec::new(),
            jump_values: Vec::new(),
            cumulative: Vec::new(),
            horizon,
        }
    }

    /// Right-continuous evaluation: sum of jumps at or before `s`; `P(0) = 0`.
    pub fn value_at(&self, s: f64) -> f64 {
        let idx = self.jump_times.partition_point(|t| *t <= s);
        if idx == 0 {
            0.0
        } else {
            self.cumulative[idx - 1]
        }
    }

    fn push_jumps<R: Rng + ?Sized>(
        &mut self,
        spec: &LimitLawSpec,
        from: f64,
        to: f64,
        rng: &mut R,
    ) -> Result<()> {
        let mean = spec.rate * (to - from);
        let count = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|e| Error::numeric(format!("poisson sampling: {e}")))?
                .sample(rng) as usize
        } else {
            0
        };
        let u = Uniform::new(from, to).map_err(|e| Error::numeric(format!("uniform: {e}")))?;
        let mut times: Vec<f64> = (0..count).map(|_| u.sample(rng)).collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for t in times {
            let v = jump_variable_sample(&spec.loss, &spec.err, spec.jump_d, self.side, rng)?;
            let prev = self.cumulative.last().copied().unwrap_or(0.0);
            self.jump_times.push(t);
            self.jump_values.push(v);
            self.cumulative.push(prev + v);
        }
        self.horizon = to;
        Ok(())
    }
}

/// Samples one one-sided path with jump count `Poisson(rate * horizon)`,
/// uniform jump times and i.i.d. jump values `rho(eps ± d) - rho(eps)`.
pub fn sample_path<R: Rng + ?Sized>(
    spec: &LimitLawSpec,
    side: Side,
    horizon: f64,
    rng: &mut R,
) -> Result<CompoundPath> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    let mut path = CompoundPath::empty(side, horizon);
    path.push_jumps(spec, 0.0, horizon, rng)?;
    Ok(path)
}

/// Result of scanning one window of the two-sided process.
struct WindowArgmin {
    /// Infimum of the argmin set over the window.
    point: f64,
    /// The minimum value itself.
    min_value: f64,
    /// The minimizer is pinned to the window boundary or sits inside the
    /// extension margin; a larger window is needed.
    boundary_active: bool,
}

/// Scans the two-sided piecewise-constant process
/// `P(t) = pos(t) 1{t>=0} + neg(-t) 1{t<=0}`.
///
/// Intervals of constancy, left to right: the negative-side terminal piece
/// `(-horizon, -s_L]`, the pieces `(-s_{j+1}, -s_j]` with value `negcum[j]`,
/// the central zero piece `(-s_1, t_1)`, and the positive pieces
/// `[t_j, t_{j+1})` with value `poscum[j]`. The infimum of the argmin set is
/// the left bound of the leftmost piece attaining the minimum; on the
/// negative side that bound is open (a limit point).
fn window_argmin(pos: &CompoundPath, neg: &CompoundPath, margin: f64) -> WindowArgmin {
    let mut min_value = 0.0f64;
    for &c in &pos.cumulative {
        min_value = min_value.min(c);
    }
    for &c in &neg.cumulative {
        min_value = min_value.min(c);
    }

    // leftmost attaining piece on the negative side = largest index there
    let neg_len = neg.cumulative.len();
    let neg_hit = (0..neg_len).rev().find(|&j| neg.cumulative[j] == min_value);
    if let Some(j) = neg_hit {
        if j == neg_len - 1 {
            // terminal piece: the true left bound lies beyond the window
            return WindowArgmin {
                point: -neg.horizon,
                min_value,
                boundary_active: true,
            };
        }
        let point = -neg.jump_times[j + 1];
        return WindowArgmin {
            point,
            min_value,
            boundary_active: -point > (1.0 - margin) * neg.horizon,
        };
    }

    if min_value == 0.0 {
        // attained on the central zero piece (-s_1, t_1)
        return match neg.jump_times.first() {
            Some(&s1) => WindowArgmin {
                point: -s1,
                min_value,
                boundary_active: s1 > (1.0 - margin) * neg.horizon,
            },
            // no negative-side jump observed yet: the zero piece runs to the
            // window edge, so its infimum is uninformative; extend
            None => WindowArgmin {
                point: 0.0,
                min_value,
                boundary_active: true,
            },
        };
    }

    // minimum only on the positive side: smallest attaining index, attained
    // at its closed left bound
    let j = (0..pos.cumulative.len())
        .find(|&j| pos.cumulative[j] == min_value)
        .expect("minimum must be attained somewhere");
    let point = pos.jump_times[j];
    WindowArgmin {
        point,
        min_value,
        boundary_active: point > (1.0 - margin) * pos.horizon,
    }
}

/// The smallest minimizer (infimum of the argmin set) of the two-sided
/// process assembled from `pos` and `neg`. With both paths empty the process
/// is identically zero over the window and 0 is returned by convention.
pub fn smallest_argmin(pos: &CompoundPath, neg: &CompoundPath) -> f64 {
    if pos.jump_times.is_empty() && neg.jump_times.is_empty() {
        return 0.0;
    }
    let w = window_argmin(pos, neg, 0.0);
    if neg.jump_times.is_empty() && w.min_value == 0.0 {
        // one-sided-empty zero minimum: fall back to the empty-window convention
        return 0.0;
    }
    w.point
}

/// Draws of the limit law plus censoring metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSamples {
    pub samples: Vec<f64>,
    /// Number of draws whose window hit the horizon cap while the minimizer
    /// was still boundary-active.
    pub censored: usize,
}

impl LimitSamples {
    pub fn quantiles(&self, probs: &[f64]) -> Vec<f64> {
        let mut s = self.samples.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        probs
            .iter()
            .map(|&p| {
                if s.is_empty() {
                    f64::NAN
                } else {
                    let idx = ((p * (s.len() - 1) as f64).round() as usize).min(s.len() - 1);
                    s[idx]
                }
            })
            .collect()
    }
}

/// I.i.d. draws of the smallest minimizer, each from an adaptively extended
/// window: start at the initial horizon, double while the minimizer is
/// boundary-active, stop at the horizon cap (counting the draw as censored).
pub fn sample_limit_distribution<R: Rng + ?Sized>(
    spec: &LimitLawSpec,
    n_samples: usize,
    rng: &mut R,
) -> Result<LimitSamples> {
    let mut samples = Vec::with_capacity(n_samples);
    let mut censored = 0usize;
    for _ in 0..n_samples {
        let mut h = spec.initial_horizon();
        let mut pos = sample_path(spec, Side::Positive, h, rng)?;
        let mut neg = sample_path(spec, Side::Negative, h, rng)?;
        loop {
            let w = window_argmin(&pos, &neg, spec.extend_margin);
            if !w.boundary_active {
                samples.push(finalize_point(&w, &neg));
                break;
            }
            if h >= spec.horizon_cap {
                censored += 1;
                samples.push(finalize_point(&w, &neg));
                break;
            }
            let new_h = (2.0 * h).min(spec.horizon_cap);
            pos.push_jumps(spec, h, new_h, rng)?;
            neg.push_jumps(spec, h, new_h, rng)?;
            h = new_h;
        }
    }
    Ok(LimitSamples { samples, censored })
}

fn finalize_point(w: &WindowArgmin, neg: &CompoundPath) -> f64 {
    if neg.jump_times.is_empty() && w.min_value == 0.0 {
        0.0
    } else {
        w.point
    }
}
