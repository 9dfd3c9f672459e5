//! Window counts `W(Y) = #{n : x_n in [Y, Y + L/N] mod 1}` and their moments.
//!
//! `W` is piecewise constant in `Y`, changing only at `x_n - L/N` (a point
//! enters) and just after `x_n` (it leaves), so `E[W^m] = int_0^1 W(Y)^m dY`
//! is an exact finite sum over at most `2N` segments.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real2::{two_sum, Real2};
use crate::seqgen::{generate_points, PointSet, SequenceSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowStatistic {
    pub n: usize,
    /// Window length scale; the window width is `l / n`.
    pub l: f64,
    pub m: u32,
    pub exact_moment: f64,
    /// `l^m`
    pub target: f64,
    pub ratio: f64,
}

/// Number of points in the closed arc `[y, y + width]` modulo one.
pub fn count_window(points: &PointSet, y: f64, width: f64) -> Result<usize> {
    if !(width > 0.0 && width < 1.0) {
        return Err(Error::InvalidInput(format!(
            "window width must lie in (0, 1), got {width}"
        )));
    }
    let sorted;
    let values = if points.sorted {
        &points.values
    } else {
        sorted = points.to_sorted();
        &sorted.values
    };
    Ok(count_sorted(values, y, width))
}

fn count_sorted(values: &[f64], y: f64, width: f64) -> usize {
    let start = y - y.floor();
    let end = start + width;
    let below = |t: f64| values.partition_point(|&v| v < t);
    let upto = |t: f64| values.partition_point(|&v| v <= t);
    if end < 1.0 {
        upto(end) - below(start)
    } else {
        (values.len() - below(start)) + upto(end - 1.0)
    }
}

/// `int_0^1 W(Y)^m dY` by an exact sweep over the breakpoints of `W`.
pub fn moment_exact(points: &PointSet, l: f64, m: u32) -> Result<WindowStatistic> {
    let n = points.len();
    if m == 0 {
        return Err(Error::InvalidInput("moment order must be at least 1".into()));
    }
    let width = l / n as f64;
    if !(width > 0.0 && width < 1.0) {
        return Err(Error::InvalidInput(format!(
            "window width L/N = {width} must lie in (0, 1)"
        )));
    }
    // event positions are kept as exact double-double values x - w (+1)
    let mut events: Vec<(Real2, i32)> = Vec::with_capacity(2 * n);
    let mut level: i64 = 0;
    for &x in &points.values {
        let (h, lo) = two_sum(x, -width);
        let mut start = Real2 { hi: h, lo };
        if start.hi < 0.0 || (start.hi == 0.0 && start.lo < 0.0) {
            start = start + Real2::ONE;
            // the arc wraps through 0; it covers 0+ unless it ends exactly at 0
            if x > 0.0 {
                level += 1;
            }
        }
        events.push((start, 1));
        // an arc ending exactly at 0 leaves at the end of the sweep instead
        let end = if x > 0.0 { x } else { 1.0 };
        events.push((Real2::from_f64(end), -1));
    }
    events.par_sort_unstable_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite event positions")
            .then(b.1.cmp(&a.1))
    });
    let mut acc = Real2::ZERO;
    let mut prev = Real2::ZERO;
    for (pos, delta) in events {
        let len = pos - prev;
        if level > 0 && len.hi > 0.0 {
            acc = acc + len * Real2::from_f64(level as f64).powi(m);
        }
        level += delta as i64;
        prev = pos;
    }
    let len = Real2::ONE - prev;
    if level > 0 && len.hi > 0.0 {
        acc = acc + len * Real2::from_f64(level as f64).powi(m);
    }
    let exact_moment = acc.to_f64();
    let target = l.powi(m as i32);
    Ok(WindowStatistic {
        n,
        l,
        m,
        exact_moment,
        target,
        ratio: exact_moment / target,
    })
}

#[derive(Clone, Debug)]
pub struct MomentRow {
    pub n: usize,
    pub tau: f64,
    pub result: Result<WindowStatistic>,
}

/// `E[W^m]` against `L^m` with `L = N^{1 - tau}`, one row per N.
pub fn moment_scan(spec: &SequenceSpec, m: u32, tau: f64, n_grid: &[usize]) -> Result<Vec<MomentRow>> {
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("N grid must be strictly ascending".into()));
    }
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidInput(format!("tau must lie in [0, 1), got {tau}")));
    }
    Ok(n_grid
        .iter()
        .map(|&n| {
            let result = generate_points(spec, n).and_then(|pts| moment_exact(&pts, (n as f64).powf(1.0 - tau), m));
            MomentRow { n, tau, result }
        })
        .collect())
}
