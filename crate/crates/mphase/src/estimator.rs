//! The two-stage M-estimator.
//!
//! Stage one profiles the regression parameters out per segment (the
//! objective is separable once the change-points are fixed, because every
//! observation lies in exactly one segment). Stage two minimizes the
//! profiled objective exactly over all admissible placements of the `K`
//! change-points at the ordered design points, via dynamic programming over
//! per-span segment costs. The reported change-point is the left end point
//! of the minimizing constancy interval, i.e. an observed x value, and ties
//! are broken toward the lexicographically smallest boundary vector.

use crate::error::{Error, Result};
use crate::loss::LossSpec;
use crate::model::{ParamBox, PiecewiseModel, SegmentFamily};
use crate::solver::{fit_segment_slice, SegmentFit, SolverOpts};
use rayon::prelude::*;

/// Paired observations with a stable sorted-by-x view.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    xs: Vec<f64>,
    ys: Vec<f64>,
    sorted_view: Vec<usize>,
}

impl Dataset {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid(format!(
                "x and y lengths differ: {} vs {}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::invalid("observations must be finite"));
        }
        let mut sorted_view: Vec<usize> = (0..xs.len()).collect();
        // stable: equal x keep input order
        sorted_view.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap());
        Ok(Dataset {
            xs,
            ys,
            sorted_view,
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn sorted_view(&self) -> &[usize] {
        &self.sorted_view
    }

    /// Observations materialized in sorted-x order.
    pub fn sorted_xy(&self) -> (Vec<f64>, Vec<f64>) {
        let xs = self.sorted_view.iter().map(|&i| self.xs[i]).collect();
        let ys = self.sorted_view.iter().map(|&i| self.ys[i]).collect();
        (xs, ys)
    }
}

/// Options for the inner segment fits and the outer search.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Minimum observations per segment; `None` resolves to
    /// `max(param_dim + 1, 3)` for the family being fit.
    pub min_seg: Option<usize>,
    /// Number of Gauss-Newton starts for non-closed-form inner fits.
    pub multistart: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Backtracking shrink factor in (0, 1).
    pub step_shrink: f64,
    /// Optional box for the regression parameters (the compact parameter
    /// set of the theory). Unbounded by default.
    pub param_box: Option<ParamBox>,
    /// Seed of the multistart perturbation stream; fits are deterministic
    /// functions of (data, options) for a fixed value.
    pub perturb_seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            min_seg: None,
            multistart: 5,
            max_iter: 100,
            grad_tol: 1e-10,
            step_shrink: 0.5,
            param_box: None,
            perturb_seed: 0x6d70_6861_7365,
        }
    }
}

impl FitOptions {
    pub fn resolved_min_seg(&self, family: &SegmentFamily) -> Result<usize> {
        let d = family.param_dim();
        let ms = self.min_seg.unwrap_or((d + 1).max(3));
        if ms < d + 1 {
            return Err(Error::invalid(format!(
                "min_seg {ms} is below param_dim + 1 = {}",
                d + 1
            )));
        }
        Ok(ms)
    }

    fn validate(&self) -> Result<()> {
        if self.multistart == 0 || self.max_iter == 0 {
            return Err(Error::invalid("multistart and max_iter must be positive"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::invalid("grad_tol must be positive"));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::invalid("step_shrink must lie in (0, 1)"));
        }
        Ok(())
    }

    fn solver_opts(&self) -> SolverOpts<'_> {
        SolverOpts {
            multistart: self.multistart,
            max_iter: self.max_iter,
            grad_tol: self.grad_tol,
            step_shrink: self.step_shrink,
            param_box: self.param_box.as_ref(),
            perturb_seed: self.perturb_seed,
        }
    }
}

/// Fits one segment on an explicit data slice.
pub fn fit_segment(
    family: &SegmentFamily,
    xs: &[f64],
    ys: &[f64],
    loss: &LossSpec,
    opts: &FitOptions,
) -> Result<SegmentFit> {
    opts.validate()?;
    let ms = opts.resolved_min_seg(family)?;
    if xs.len() < ms {
        return Err(Error::infeasible(format!(
            "segment has {} observations, needs at least {ms}",
            xs.len()
        )));
    }
    fit_segment_slice(family, loss, xs, ys, &opts.solver_opts())
}

enum CostBackend {
    /// Prefix sums of the centered data; O(1) closed-form least-squares
    /// cost per span. `scale` multiplies the sum of squared residuals.
    Prefix {
        scale: f64,
        linear: bool,
        px: Vec<f64>,
        py: Vec<f64>,
        pxx: Vec<f64>,
        pxy: Vec<f64>,
        pyy: Vec<f64>,
        x_scale: f64,
    },
    /// Exact least-absolute-deviation costs for the constant family:
    /// prefix and suffix spans from running-median sweeps, interior spans
    /// recomputed on demand. `scale` multiplies the absolute residual sum.
    PrefixMedian {
        scale: f64,
        prefix: Vec<f64>,
        suffix: Vec<f64>,
        sy: Vec<f64>,
    },
    /// Materialized per-span fits; row-major `i * n + j`.
    Dense { costs: Vec<f64> },
}

#[derive(PartialEq)]
struct HeapF64(f64);

impl Eq for HeapF64 {}

impl PartialOrd for HeapF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Least-absolute-deviation objective of every prefix `ys[0..=b]`, by the
/// classic two-heap running median with residual-sum bookkeeping.
fn lad_prefix_costs(ys: &[f64]) -> Vec<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    let mut lo: BinaryHeap<HeapF64> = BinaryHeap::new(); // lower half, max on top
    let mut hi: BinaryHeap<Reverse<HeapF64>> = BinaryHeap::new(); // upper half
    let mut sum_lo = 0.0f64;
    let mut sum_hi = 0.0f64;
    let mut out = Vec::with_capacity(ys.len());
    for &y in ys {
        if lo.peek().map(|m| y <= m.0).unwrap_or(true) {
            lo.push(HeapF64(y));
            sum_lo += y;
        } else {
            hi.push(Reverse(HeapF64(y)));
            sum_hi += y;
        }
        while lo.len() > hi.len() + 1 {
            let v = lo.pop().unwrap().0;
            sum_lo -= v;
            sum_hi += v;
            hi.push(Reverse(HeapF64(v)));
        }
        while hi.len() > lo.len() {
            let v = hi.pop().unwrap().0 .0;
            sum_hi -= v;
            sum_lo += v;
            lo.push(HeapF64(v));
        }
        // lower median; the LAD objective is the same for any median choice
        let med = lo.peek().unwrap().0;
        out.push((sum_hi - hi.len() as f64 * med) + (lo.len() as f64 * med - sum_lo));
    }
    out
}

fn lad_span_cost(ys: &[f64]) -> f64 {
    let mut s = ys.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = s[(s.len() - 1) / 2];
    ys.iter().map(|y| (y - med).abs()).sum()
}

/// Per-span segment fit costs over sorted observations, the input of the
/// dynamic program. `cost(i, j)` is the minimized segment objective over
/// sorted indices `i..=j`; spans shorter than `min_seg` are infinite.
pub struct SegmentCostTable {
    n: usize,
    min_seg: usize,
    /// `boundary_ok[b]` is true when a change-point may be placed between
    /// sorted indices `b` and `b+1`, i.e. when the x values differ strictly.
    boundary_ok: Vec<bool>,
    backend: CostBackend,
    /// Number of spans whose inner fit failed and was recorded as infinite.
    pub warn_count: usize,
}

impl SegmentCostTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn min_seg(&self) -> usize {
        self.min_seg
    }

    pub fn boundary_allowed(&self, b: usize) -> bool {
        self.boundary_ok.get(b).copied().unwrap_or(false)
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        if j >= self.n || i > j || j - i + 1 < self.min_seg {
            return f64::INFINITY;
        }
        match &self.backend {
            CostBackend::Dense { costs } => costs[i * self.n + j],
            CostBackend::PrefixMedian {
                scale,
                prefix,
                suffix,
                sy,
            } => {
                if i == 0 {
                    scale * prefix[j]
                } else if j == self.n - 1 {
                    scale * suffix[i]
                } else {
                    scale * lad_span_cost(&sy[i..=j])
                }
            }
            CostBackend::Prefix {
                scale,
                linear,
                px,
                py,
                pxx,
                pxy,
                pyy,
                x_scale,
            } => {
                let m = (j - i + 1) as f64;
                let sy = py[j + 1] - py[i];
                let syy = pyy[j + 1] - pyy[i];
                let mut sse = syy - sy * sy / m;
                if *linear {
                    let sx = px[j + 1] - px[i];
                    let sxx = pxx[j + 1] - pxx[i];
                    let sxy = pxy[j + 1] - pxy[i];
                    let vx = sxx - sx * sx / m;
                    let vxy = sxy - sx * sy / m;
                    if vx > f64::EPSILON * m * x_scale * x_scale {
                        sse -= vxy * vxy / vx;
                    }
                }
                scale * sse.max(0.0)
            }
        }
    }

    /// Construct a table directly from explicit costs; used by tests and by
    /// callers that search over externally computed objectives. Row-major
    /// `n x n`, entries with `j < i` ignored.
    pub fn from_costs(n: usize, min_seg: usize, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != n * n {
            return Err(Error::invalid("expected an n x n cost matrix"));
        }
        Ok(SegmentCostTable {
            n,
            min_seg,
            boundary_ok: vec![true; n.saturating_sub(1)],
            backend: CostBackend::Dense { costs },
            warn_count: 0,
        })
    }
}

/// Builds the cost table for `data` (consumed in sorted order). For the
/// squared-loss constant/linear families the entries are evaluated on demand
/// from prefix sums; other loss/family pairs materialize one inner fit per
/// feasible span, which is only meant for desk-scale n.
pub fn segment_cost_table(
    data: &Dataset,
    family: &SegmentFamily,
    loss: &LossSpec,
    opts: &FitOptions,
    k: usize,
) -> Result<SegmentCostTable> {
    opts.validate()?;
    let ms = opts.resolved_min_seg(family)?;
    let n = data.len();
    if n < (k + 1) * ms {
        return Err(Error::infeasible(format!(
            "n = {n} observations cannot host {} segments of at least {ms}",
            k + 1
        )));
    }
    let (sx, sy) = data.sorted_xy();
    let boundary_ok: Vec<bool> = sx.windows(2).map(|w| w[0] < w[1]).collect();

    if let Some(scale) = loss
        .absolute_scale()
        .filter(|_| matches!(family, SegmentFamily::Constant))
    {
        let prefix = lad_prefix_costs(&sy);
        let mut rev = sy.clone();
        rev.reverse();
        let rev_prefix = lad_prefix_costs(&rev);
        let suffix: Vec<f64> = (0..n).map(|i| rev_prefix[n - 1 - i]).collect();
        return Ok(SegmentCostTable {
            n,
            min_seg: ms,
            boundary_ok,
            backend: CostBackend::PrefixMedian {
                scale,
                prefix,
                suffix,
                sy,
            },
            warn_count: 0,
        });
    }

    let closed_form = loss.squared_scale().filter(|_| {
        matches!(family, SegmentFamily::Constant | SegmentFamily::Linear)
    });
    if let Some(scale) = closed_form {
        let mx = sx.iter().sum::<f64>() / n as f64;
        let my = sy.iter().sum::<f64>() / n as f64;
        let mut px = vec![0.0; n + 1];
        let mut py = vec![0.0; n + 1];
        let mut pxx = vec![0.0; n + 1];
        let mut pxy = vec![0.0; n + 1];
        let mut pyy = vec![0.0; n + 1];
        let mut x_scale = 0.0f64;
        for i in 0..n {
            let cx = sx[i] - mx;
            let cy = sy[i] - my;
            x_scale = x_scale.max(cx.abs());
            px[i + 1] = px[i] + cx;
            py[i + 1] = py[i] + cy;
            pxx[i + 1] = pxx[i] + cx * cx;
            pxy[i + 1] = pxy[i] + cx * cy;
            pyy[i + 1] = pyy[i] + cy * cy;
        }
        return Ok(SegmentCostTable {
            n,
            min_seg: ms,
            boundary_ok,
            backend: CostBackend::Prefix {
                scale,
                linear: matches!(family, SegmentFamily::Linear),
                px,
                py,
                pxx,
                pxy,
                pyy,
                x_scale,
            },
            warn_count: 0,
        });
    }

    // generic path: one fit per feasible span, rows in parallel
    let rows: Vec<(Vec<f64>, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![f64::INFINITY; n];
            let mut warns = 0usize;
            for j in (i + ms - 1)..n {
                match fit_segment_slice(family, loss, &sx[i..=j], &sy[i..=j], &opts.solver_opts())
                {
                    Ok(fit) => row[j] = fit.objective,
                    Err(_) => warns += 1,
                }
            }
            (row, warns)
        })
        .collect();
    let mut costs = Vec::with_capacity(n * n);
    let mut warn_count = 0;
    for (row, warns) in rows {
        costs.extend(row);
        warn_count += warns;
    }
    Ok(SegmentCostTable {
        n,
        min_seg: ms,
        boundary_ok,
        backend: CostBackend::Dense { costs },
        warn_count,
    })
}

/// Exact minimization over all placements of `k` change-points at the
/// ordered design points. Returns the sorted-order indices `b_1 < ... < b_k`
/// after which each change-point is placed (segment `s` covers sorted
/// indices `b_s + 1 ..= b_{s+1}`). Ties resolve to the lexicographically
/// smallest boundary vector.
pub fn dp_partition(table: &SegmentCostTable, k: usize) -> Result<Vec<usize>> {
    let n = table.n();
    let ms = table.min_seg();
    if n == 0 {
        return Err(Error::infeasible("empty data"));
    }
    if k == 0 {
        if !table.cost(0, n - 1).is_finite() {
            return Err(Error::infeasible("single-segment cost is infinite"));
        }
        return Ok(vec![]);
    }
    if n < (k + 1) * ms {
        return Err(Error::infeasible(format!(
            "n = {n} cannot host {} segments of at least {ms}",
            k + 1
        )));
    }

    // suffix[c][i]: optimal cost of covering sorted indices i..n-1 with c
    // cuts; built so every candidate total is one addition against it,
    // letting the extraction below test optimality by exact equality.
    let mut suffix = vec![vec![f64::INFINITY; n + 1]; k + 1];
    for i in 0..n {
        suffix[0][i] = table.cost(i, n - 1);
    }
    for c in 1..=k {
        // only the origin is consulted at the final stage
        let upper = if c == k { 1 } else { n };
        for i in 0..upper {
            if n - i < (c + 1) * ms {
                continue;
            }
            let mut best = f64::INFINITY;
            for e in (i + ms - 1)..=(n - 1 - c * ms) {
                if !table.boundary_allowed(e) {
                    continue;
                }
                let v = table.cost(i, e) + suffix[c - 1][e + 1];
                if v < best {
                    best = v;
                }
            }
            suffix[c][i] = best;
        }
    }

    let total = suffix[k][0];
    if !total.is_finite() {
        return Err(Error::infeasible(
            "no admissible change-point placement (check min_seg and duplicate x values)",
        ));
    }

    // forward extraction: at each stage take the smallest boundary whose
    // completion attains the running target exactly
    let mut bounds = Vec::with_capacity(k);
    let mut p = 0usize;
    let mut target = total;
    for c in (1..=k).rev() {
        let mut found = false;
        for e in (p + ms - 1)..=(n - 1 - c * ms) {
            if !table.boundary_allowed(e) {
                continue;
            }
            if table.cost(p, e) + suffix[c - 1][e + 1] == target {
                bounds.push(e);
                target = suffix[c - 1][e + 1];
                p = e + 1;
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::numeric(
                "dynamic program backtrace failed to reproduce its optimum",
            ));
        }
    }
    Ok(bounds)
}

/// One fitted segment inside a [`FitResult`], in sorted-order coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentReport {
    /// First sorted index of the segment.
    pub start: usize,
    /// Last sorted index (inclusive).
    pub end: usize,
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub converged: bool,
}

/// The fitted two-stage M-estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model_hat: PiecewiseModel,
    /// Minimized objective; equals the sum of the per-segment objectives.
    pub objective: f64,
    /// Sorted-order indices i such that the fitted change-point equals the
    /// i-th order statistic of x (the left end point of its interval).
    pub boundary_indices: Vec<usize>,
    pub per_segment: Vec<SegmentReport>,
    /// Spans whose inner fit failed during the cost-table build.
    pub cost_warnings: usize,
}

impl FitResult {
    pub fn converged(&self) -> bool {
        self.per_segment.iter().all(|s| s.converged)
    }

    pub fn taus(&self) -> &[f64] {
        &self.model_hat.taus
    }

    pub fn alphas(&self) -> &[Vec<f64>] {
        &self.model_hat.alphas
    }

    /// Flattened regression parameter vector (length `(K+1) * d`).
    pub fn theta1(&self) -> Vec<f64> {
        self.model_hat.alphas.iter().flatten().copied().collect()
    }
}

/// Sums segment objectives back-to-front; the same association the dynamic
/// program uses, so totals are bit-for-bit comparable.
fn sum_segments(objs: impl DoubleEndedIterator<Item = f64>) -> f64 {
    objs.rev().fold(0.0, |acc, o| o + acc)
}

/// `M_n(theta) = sum_i rho(y_i - f_theta(x_i))`.
pub fn m_objective(model: &PiecewiseModel, data: &Dataset, loss: &LossSpec) -> f64 {
    data.xs()
        .iter()
        .zip(data.ys())
        .map(|(&x, &y)| crate::loss::rho(loss, y - crate::model::eval_piecewise(model, x)))
        .sum()
}

/// The full two-stage fit with `k` change-points.
pub fn fit(
    data: &Dataset,
    family: &SegmentFamily,
    k: usize,
    loss: &LossSpec,
    opts: &FitOptions,
) -> Result<FitResult> {
    let table = segment_cost_table(data, family, loss, opts, k)?;
    let bounds = dp_partition(&table, k)?;
    let (sx, sy) = data.sorted_xy();
    let n = data.len();

    let mut per_segment = Vec::with_capacity(k + 1);
    let mut alphas = Vec::with_capacity(k + 1);
    let mut start = 0usize;
    for s in 0..=k {
        let end = if s < k { bounds[s] } else { n - 1 };
        let fitted =
            fit_segment_slice(family, loss, &sx[start..=end], &sy[start..=end], &opts.solver_opts())?;
        alphas.push(fitted.alpha.clone());
        per_segment.push(SegmentReport {
            start,
            end,
            alpha: fitted.alpha,
            objective: fitted.objective,
            converged: fitted.converged,
        });
        start = end + 1;
    }

    let taus: Vec<f64> = bounds.iter().map(|&b| sx[b]).collect();
    let mut model_hat = PiecewiseModel::new(*family, alphas, taus)?;
    model_hat.param_box = opts.param_box.clone();
    let objective = sum_segments(per_segment.iter().map(|s| s.objective));
    Ok(FitResult {
        model_hat,
        objective,
        boundary_indices: bounds,
        per_segment,
        cost_warnings: table.warn_count,
    })
}

/// Profiled objective at arbitrary (not necessarily data-point)
/// change-points: the regression parameters are minimized out per segment
/// and the per-segment optima are summed.
pub fn profile_objective(
    data: &Dataset,
    family: &SegmentFamily,
    loss: &LossSpec,
    opts: &FitOptions,
    taus: &[f64],
) -> Result<f64> {
    if taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("change-points must be strictly increasing"));
    }
    let ms = opts.resolved_min_seg(family)?;
    let (sx, sy) = data.sorted_xy();
    let n = data.len();

    // left-closed segmentation: segment s gets x in (tau_s, tau_{s+1}]
    let mut cut_indices = Vec::with_capacity(taus.len() + 2);
    cut_indices.push(0);
    for &t in taus {
        cut_indices.push(sx.partition_point(|&x| x <= t));
    }
    cut_indices.push(n);

    let mut objs = Vec::with_capacity(taus.len() + 1);
    for w in cut_indices.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < ms {
            return Err(Error::infeasible(format!(
                "segment between cuts has {} observations, needs {ms}",
                b - a
            )));
        }
        let fitted = fit_segment_slice(family, loss, &sx[a..b], &sy[a..b], &opts.solver_opts())?;
        objs.push(fitted.objective);
    }
    Ok(sum_segments(objs.into_iter()))
}

/// Residuals `y_i - f_thetahat(x_i)` in the original observation order.
pub fn fit_residuals(fit: &FitResult, data: &Dataset) -> Vec<f64> {
    data.xs()
        .iter()
        .zip(data.ys())
        .map(|(&x, &y)| y - crate::model::eval_piecewise(&fit.model_hat, x))
        .collect()
}
