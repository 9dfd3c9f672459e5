//! Long-range m-level correlations of points on the unit torus.
//!
//! For a point set `x_1..x_N` the statistic is
//!
//! ```text
//! R(N, f, tau) = (1/N) * sum over distinct (j_1..j_m) of prod_i f_i(N^tau * d_i)
//! ```
//!
//! where `d_i` is the nearest representative of `x_{j_{i+1}} - x_{j_i}` in
//! `[-1/2, 1/2)`. The Poissonian prediction is `N^{(m-1)(1-tau)} * int f`.

use std::time::Instant;

use rayon::prelude::*;

use crate::compensated::Sum;
use crate::error::{Error, Result};
use crate::seqgen::{generate_points, PointSet, SequenceSpec};
use crate::testfn::TestFunctionProduct;

/// Anchors per work unit; fixed so that results do not depend on thread count.
const ANCHOR_CHUNK: usize = 2048;
/// Brute-force cost guard.
pub const BRUTE_MAX_N: usize = 2000;

#[derive(Clone, Debug)]
pub struct CorrelationRequest {
    pub spec: SequenceSpec,
    pub m: usize,
    pub tau: f64,
    pub n: usize,
    pub f: TestFunctionProduct,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationReport {
    pub value: f64,
    pub poisson_target: f64,
    pub ratio: f64,
    /// Tuples with a nonzero contribution.
    pub n_tuples_counted: u64,
    /// Wall-clock seconds; never part of deterministic outputs.
    pub elapsed: f64,
}

/// `N^{(m-1)(1-tau)} * integral`.
pub fn poisson_target(m: usize, n: usize, tau: f64, integral: f64) -> f64 {
    (n as f64).powf((m as f64 - 1.0) * (1.0 - tau)) * integral
}

/// Nearest representative of `d` modulo one in `[-1/2, 1/2)`, for `|d| < 1`.
#[inline]
pub fn torus_delta(d: f64) -> f64 {
    if d >= 0.5 {
        d - 1.0
    } else if d < -0.5 {
        d + 1.0
    } else {
        d
    }
}

fn validate(n: usize, m: usize, tau: f64, f: &TestFunctionProduct) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("m must be at least 2, got {m}")));
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidInput(format!("tau must lie in [0, 1), got {tau}")));
    }
    if f.dim() != m - 1 {
        return Err(Error::InvalidInput(format!(
            "test function has {} factors, m = {m} needs {}",
            f.dim(),
            m - 1
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    let reach = f.max_radius() * (n as f64).powf(-tau);
    if reach > 0.5 {
        return Err(Error::InvalidInput(format!(
            "support condition violated: radius {} * N^-tau (tau = {tau}) = {reach} > 1/2",
            f.max_radius()
        )));
    }
    Ok(())
}

impl CorrelationRequest {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        validate(self.n, self.m, self.tau, &self.f)
    }
}

/// Sorted positions within torus distance `w` of `x`, as at most two ranges.
fn window(values: &[f64], x: f64, w: f64) -> [(usize, usize); 2] {
    let n = values.len();
    if 2.0 * w >= 1.0 {
        return [(0, n), (0, 0)];
    }
    let lower = |t: f64| values.partition_point(|&v| v < t);
    let upper = |t: f64| values.partition_point(|&v| v <= t);
    let (lo, hi) = (x - w, x + w);
    if lo < 0.0 {
        [(0, upper(hi)), (lower(lo + 1.0), n)]
    } else if hi >= 1.0 {
        [(lower(lo), n), (0, upper(hi - 1.0))]
    } else {
        [(lower(lo), upper(hi)), (0, 0)]
    }
}

struct Walker<'a> {
    values: &'a [f64],
    f: &'a TestFunctionProduct,
    scale: f64,
    widths: Vec<f64>,
    used: Vec<usize>,
    acc: Sum,
    count: u64,
}

impl Walker<'_> {
    fn descend(&mut self, level: usize, prev: usize, weight: f64) {
        let x = self.values[prev];
        let last = level + 1 == self.widths.len();
        for (start, end) in window(self.values, x, self.widths[level]) {
            for q in start..end {
                if self.used.contains(&q) {
                    continue;
                }
                let d = torus_delta(self.values[q] - x);
                let fv = self.f.factors[level].eval(self.scale * d);
                if fv == 0.0 {
                    continue;
                }
                if last {
                    self.acc.add(weight * fv);
                    self.count += 1;
                } else {
                    self.used.push(q);
                    self.descend(level + 1, q, weight * fv);
                    self.used.pop();
                }
            }
        }
    }
}

/// Windowed evaluation over an arbitrary point set.
pub fn correlation_windowed_points(
    points: &PointSet,
    m: usize,
    tau: f64,
    f: &TestFunctionProduct,
) -> Result<CorrelationReport> {
    let start = Instant::now();
    let n = points.len();
    validate(n, m, tau, f)?;
    let sorted = points.to_sorted();
    let values = &sorted.values[..];
    let scale = (n as f64).powf(tau);
    // slack so that rounding in scale * d never drops a boundary tuple
    let widths: Vec<f64> = f.factors.iter().map(|g| g.radius / scale * (1.0 + 1e-9)).collect();
    let chunks = n.div_ceil(ANCHOR_CHUNK);
    let partials: Vec<(Sum, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut walker = Walker {
                values,
                f,
                scale,
                widths: widths.clone(),
                used: Vec::with_capacity(m),
                acc: Sum::new(),
                count: 0,
            };
            for anchor in c * ANCHOR_CHUNK..((c + 1) * ANCHOR_CHUNK).min(n) {
                walker.used.push(anchor);
                walker.descend(0, anchor, 1.0);
                walker.used.pop();
            }
            (walker.acc, walker.count)
        })
        .collect();
    let mut total = Sum::new();
    let mut count = 0;
    for (s, c) in &partials {
        total.merge(s);
        count += c;
    }
    let value = total.value() / n as f64;
    let target = poisson_target(m, n, tau, f.integral());
    Ok(CorrelationReport {
        value,
        poisson_target: target,
        ratio: value / target,
        n_tuples_counted: count,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Generates the points for `req` and runs [`correlation_windowed_points`].
pub fn correlation_windowed(req: &CorrelationRequest) -> Result<CorrelationReport> {
    req.validate()?;
    let start = Instant::now();
    let points = generate_points(&req.spec, req.n)?;
    let mut report = correlation_windowed_points(&points, req.m, req.tau, &req.f)?;
    report.elapsed = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Literal m-fold loop over distinct indices (m <= 3, N <= 2000).
pub fn correlation_bruteforce_points(points: &PointSet, m: usize, tau: f64, f: &TestFunctionProduct) -> Result<f64> {
    let n = points.len();
    validate(n, m, tau, f)?;
    if m > 3 || n > BRUTE_MAX_N {
        return Err(Error::CostGuard(format!(
            "brute force limited to m <= 3 and N <= {BRUTE_MAX_N} (got m = {m}, N = {n})"
        )));
    }
    let x = &points.values;
    let scale = (n as f64).powf(tau);
    let g = |level: usize, a: usize, b: usize| f.factors[level].eval(scale * torus_delta(x[b] - x[a]));
    let mut acc = Sum::new();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let w = g(0, i, j);
            if m == 2 {
                acc.add(w);
                continue;
            }
            if w == 0.0 {
                continue;
            }
            for l in (0..n).filter(|&l| l != i && l != j) {
                acc.add(w * g(1, j, l));
            }
        }
    }
    Ok(acc.value() / n as f64)
}

pub fn correlation_bruteforce(req: &CorrelationRequest) -> Result<f64> {
    req.validate()?;
    if req.m > 3 || req.n > BRUTE_MAX_N {
        return Err(Error::CostGuard(format!(
            "brute force limited to m <= 3 and N <= {BRUTE_MAX_N}"
        )));
    }
    let points = generate_points(&req.spec, req.n)?;
    correlation_bruteforce_points(&points, req.m, req.tau, &req.f)
}

#[derive(Clone, Debug)]
pub struct ScanRow {
    pub n: usize,
    pub result: Result<CorrelationReport>,
}

/// One windowed correlation per N, in grid order; failures stay in their row.
pub fn convergence_scan(
    spec: &SequenceSpec,
    m: usize,
    tau: f64,
    f: &TestFunctionProduct,
    n_grid: &[usize],
) -> Result<Vec<ScanRow>> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("N grid must be strictly ascending".into()));
    }
    Ok(n_grid
        .iter()
        .map(|&n| ScanRow {
            n,
            result: correlation_windowed(&CorrelationRequest {
                spec: *spec,
                m,
                tau,
                n,
                f: f.clone(),
            }),
        })
        .collect())
}
