//! Oscillatory integrals `int e(h(x)) dx` with `h(x) = k alpha sqrt(x) - r x`,
//! their stationary-phase approximations, and the B-process evaluator
//! that turns `S(N, k)` for `a(n) = alpha sqrt(n)` into about `k alpha / 2`
//! stationary-phase terms.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::compensated::ComplexSum;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::real2::{frac_int_mul, Real2};
use crate::seqgen::{Family, SequenceSpec};
use crate::weyl::{Method, WeylSumRecord};

/// Refusal threshold of the quadrature oracle.
pub const MAX_PANELS: usize = 10_000_000;
/// Calibrated constants of the stationary-phase envelope.
pub const C1: f64 = 5.0;
pub const C2: f64 = 5.0;

const PANEL_NODES: usize = 10;
const PANELS_PER_TASK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatoryIntegral {
    pub k: u64,
    pub r: i64,
    pub alpha: Real2,
    pub n: u64,
    pub gamma: Option<f64>,
    /// `h(gamma)` reduced mod 1.
    pub h_at_gamma: f64,
    pub hpp_at_gamma: f64,
    pub leading: Complex64,
    pub envelope: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CertKind {
    FirstDerivative,
    KthDerivative(u32),
    StationaryEnvelope,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCertificate {
    pub kind: CertKind,
    pub value: f64,
    pub k: u64,
    pub r: i64,
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
}

/// `h'(x) = k alpha / (2 sqrt x) - r`
#[inline]
fn hprime(ka: f64, r: i64, x: f64) -> f64 {
    ka / (2.0 * x.sqrt()) - r as f64
}

struct Oracle {
    ka: Real2,
    ka_f: f64,
    r: i64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Oracle {
    /// `h(x0) mod 1`, exact to double-double accuracy.
    fn base_phase(&self, x0: f64) -> f64 {
        let a = (self.ka * Real2::from_f64(x0).sqrt()).fract();
        let b = frac_int_mul(-(self.r as i128), x0);
        (a + b).fract().unit_f64()
    }

    /// Fixed rule on `[x0, x1]`; phases measured from `x0`.
    fn rule(&self, x0: f64, x1: f64, base: f64) -> Complex64 {
        let s0 = x0.sqrt();
        // x1 - x0 is exact for neighbouring cuts, so halves tile exactly
        let half = 0.5 * (x1 - x0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            let d = half * (1.0 + t);
            let x = x0 + d;
            let dh = self.ka_f * d / (x.sqrt() + s0) - self.r as f64 * d;
            acc += crate::e(base + dh) * *w;
        }
        acc * half
    }

    /// Rule on one panel, checked against the rule on its two halves and
    /// split further until they agree to the panel's share of `tol`.
    fn panel(&self, x0: f64, x1: f64, budget: f64, depth: u32) -> (Complex64, f64) {
        let base = self.base_phase(x0);
        let coarse = self.rule(x0, x1, base);
        let mid = 0.5 * (x0 + x1);
        let fine = self.rule(x0, mid, base) + self.rule(mid, x1, self.base_phase(mid));
        let diff = (coarse - fine).norm();
        if diff <= budget || depth >= 30 {
            return (fine, diff);
        }
        let (l, el) = self.panel(x0, mid, 0.5 * budget, depth + 1);
        let (r, er) = self.panel(mid, x1, 0.5 * budget, depth + 1);
        (l + r, el + er)
    }
}

/// Panel boundaries on `[a, b]` with phase change at most 1/2 per panel.
fn panels(ka: f64, r: i64, a: f64, b: f64) -> Result<Vec<f64>> {
    let mut cuts = vec![a];
    let mut x = a;
    while x < b {
        let slope = hprime(ka, r, x).abs();
        let mut dx = (0.5 / slope).min(0.25 * x).min(b - x);
        // h' is monotone, so its extremes on a panel sit at the endpoints
        while dx * slope.max(hprime(ka, r, x + dx).abs()) > 0.5 {
            dx *= 0.5;
        }
        x = if b - (x + dx) < 1e-12 * b { b } else { x + dx };
        cuts.push(x);
        if cuts.len() > MAX_PANELS + 1 {
            return Err(Error::CostGuard(format!(
                "oscillatory quadrature needs more than {MAX_PANELS} panels; use the B-process"
            )));
        }
    }
    Ok(cuts)
}

/// Quadrature oracle for `int_a^b e(k alpha sqrt(x) - r x) dx` with
/// certified absolute error at most `tol`.
pub fn oscillatory_integral_direct(k: u64, r: i64, alpha: Real2, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    if !(a >= 1.0 && b > a && b.is_finite()) {
        return Err(Error::InvalidInput(format!("need 1 <= a < b, got [{a}, {b}]")));
    }
    if !(tol >= 1e-12) {
        return Err(Error::InvalidInput(format!("tol must be at least 1e-12, got {tol}")));
    }
    let ka = alpha.mul_f64(k as f64);
    let cuts = panels(ka.to_f64(), r, a, b)?;
    let (nodes, weights) = gauss_legendre(PANEL_NODES);
    let oracle = Oracle {
        ka,
        ka_f: ka.to_f64(),
        r,
        nodes,
        weights,
    };
    let density = tol / (b - a);
    let n_panels = cuts.len() - 1;
    let tasks = n_panels.div_ceil(PANELS_PER_TASK);
    let partials: Vec<(ComplexSum, f64)> = (0..tasks)
        .into_par_iter()
        .map(|t| {
            let mut acc = ComplexSum::new();
            let mut err = 0.0;
            for i in t * PANELS_PER_TASK..((t + 1) * PANELS_PER_TASK).min(n_panels) {
                let (x0, x1) = (cuts[i], cuts[i + 1]);
                let (v, e) = oracle.panel(x0, x1, density * (x1 - x0), 0);
                acc.add(v);
                err += e;
            }
            (acc, err)
        })
        .collect();
    let mut total = ComplexSum::new();
    let mut err = 0.0;
    for (p, e) in &partials {
        total.merge(p);
        err += e;
    }
    if err > tol {
        return Err(Error::PrecisionLoss { bound: err, limit: tol });
    }
    Ok(total.value())
}

/// Valid r-range `(k alpha / (2 sqrt N), k alpha / 2)` for a stationary
/// point inside `(1, N)`.
fn stationary_range(ka: f64, n: u64) -> (f64, f64) {
    (ka / (2.0 * (n as f64).sqrt()), ka / 2.0)
}

/// Leading stationary-phase term `e(h(gamma) - 1/8) / sqrt|h''(gamma)|` of
/// `int_1^N e(h(x)) dx`, with its error envelope.
pub fn stationary_phase_leading(k: u64, r: i64, alpha: Real2, n: u64) -> Result<OscillatoryIntegral> {
    if k == 0 || alpha.hi <= 0.0 || n < 2 {
        return Err(Error::InvalidInput("need k >= 1, alpha > 0 and N >= 2".into()));
    }
    let ka = alpha.mul_f64(k as f64);
    let ka_f = ka.to_f64();
    let (lo, hi) = stationary_range(ka_f, n);
    let rf = r as f64;
    if !(rf > lo && rf < hi) {
        return Err(Error::InvalidInput(format!(
            "no stationary point in (1, N): r = {r} must satisfy {lo} < r < {hi}"
        )));
    }
    let gamma = (ka_f / (2.0 * rf)).powi(2);
    // h(gamma) = (k alpha)^2 / (4 r), reduced in double-double
    let h = ((ka * ka) / Real2::from_f64(4.0 * rf)).fract().to_f64();
    let hpp = -ka_f / (4.0 * gamma.powf(1.5));
    let amp = 1.0 / hpp.abs().sqrt();
    let leading = crate::e(h - 0.125) * amp;
    let nf = n as f64;
    let envelope = C1 * (1.0 / hprime(ka_f, r, 1.0).abs() + 1.0 / hprime(ka_f, r, nf).abs())
        + C2 * (nf.powf(0.25) / (k as f64).powf(1.5) + nf.sqrt() / (k as f64).powi(2));
    Ok(OscillatoryIntegral {
        k,
        r,
        alpha,
        n,
        gamma: Some(gamma),
        h_at_gamma: h,
        hpp_at_gamma: hpp,
        leading,
        envelope,
    })
}

/// First- or second-derivative test bound for `int_a^b e(h(x)) dx` (g = 1).
pub fn derivative_test_bound(order: u32, k: u64, r: i64, alpha: f64, a: f64, b: f64) -> Result<BoundCertificate> {
    if !(a >= 1.0 && b > a) {
        return Err(Error::InvalidInput(format!("need 1 <= a < b, got [{a}, {b}]")));
    }
    let ka = k as f64 * alpha;
    let value = match order {
        1 => {
            let (ha, hb) = (hprime(ka, r, a), hprime(ka, r, b));
            if ha == 0.0 || hb == 0.0 || ha.signum() != hb.signum() {
                return Err(Error::InvalidInput(format!(
                    "h' changes sign on [{a}, {b}]: stationary point inside"
                )));
            }
            1.0 / ha.abs().min(hb.abs())
        }
        2 => {
            if !(ka > 0.0) {
                return Err(Error::InvalidInput("second-derivative test needs k alpha > 0".into()));
            }
            (4.0 * b.powf(1.5) / ka).sqrt()
        }
        _ => return Err(Error::InvalidInput(format!("order must be 1 or 2, got {order}"))),
    };
    Ok(BoundCertificate {
        kind: if order == 1 {
            CertKind::FirstDerivative
        } else {
            CertKind::KthDerivative(order)
        },
        value,
        k,
        r,
        alpha,
        a,
        b,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonRange {
    pub a: f64,
    pub b: f64,
    /// Nonzero integers in `(A - 1/4, B + 1/4)`.
    pub r_list: Vec<i64>,
    /// Whether r = 0 falls in the range; it is bounded, never evaluated.
    pub zero: bool,
}

pub fn truncated_poisson_range(k: u64, alpha: f64, n: u64) -> Result<PoissonRange> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidInput("need k >= 1 and N >= 1".into()));
    }
    let ka = k as f64 * alpha;
    let (a, b) = stationary_range(ka, n);
    let first = (a - 0.25).floor() as i64 + 1;
    let last = (b + 0.25).ceil() as i64 - 1;
    Ok(PoissonRange {
        a,
        b,
        r_list: (first..=last).filter(|&r| r != 0).collect(),
        zero: first <= 0 && last >= 0,
    })
}

/// `k^{1/2} N^{1/4} + N^{3/4} k^{-1/2} log N`
pub fn bound_exponential(n: u64, k: u64, _alpha: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    k.sqrt() * n.powf(0.25) + n.powf(0.75) / k.sqrt() * n.ln()
}

/// `S(N, k)` for `a(n) = alpha sqrt(n)` as a sum of stationary-phase terms.
///
/// Integers r strictly inside `(A, B)` contribute their leading term.
/// Edge integers, r = 0 and the truncation go into `error_budget`.
pub fn bprocess_sum(spec: &SequenceSpec, n: u64, k: u64) -> Result<WeylSumRecord> {
    spec.validate()?;
    if spec.family != Family::Sqrt {
        return Err(Error::InvalidInput(format!(
            "the B-process evaluator needs the sqrt family, got {}",
            spec.family.name()
        )));
    }
    if k == 0 || n < 2 {
        return Err(Error::InvalidInput("need k >= 1 and N >= 2".into()));
    }
    if spec.alpha.hi <= 0.0 {
        return Err(Error::InvalidInput("the B-process evaluator needs alpha > 0".into()));
    }
    let start = Instant::now();
    let alpha = spec.alpha.to_f64();
    let range = truncated_poisson_range(k, alpha, n)?;
    let nf = n as f64;
    let mut value = ComplexSum::new();
    let mut budget = nf.ln();
    if range.zero {
        // first-derivative test with min h' = k alpha / (2 sqrt N)
        budget += 2.0 * nf.sqrt() / (k as f64 * alpha);
    }
    for &r in &range.r_list {
        let rf = r as f64;
        if rf > range.a && rf < range.b {
            value.add(stationary_phase_leading(k, r, spec.alpha, n)?.leading);
        } else {
            let second = derivative_test_bound(2, k, r, alpha, 1.0, nf)?.value;
            let edge = match derivative_test_bound(1, k, r, alpha, 1.0, nf) {
                Ok(c) => c.value.min(second),
                Err(_) => second,
            };
            budget += edge;
        }
    }
    Ok(WeylSumRecord {
        spec: *spec,
        n,
        k: k as i64,
        value: value.value(),
        method: Method::BProcess,
        elapsed: start.elapsed().as_secs_f64(),
        error_budget: Some(budget),
    })
}

/// Distance from `x` to the nearest integer.
fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Endpoint-term sum `sum_r min{1/|k alpha/2 - r|, N^{3/4}/k^{1/2}}` and the
/// comparison value `2 (log N + min{1/||k alpha/2||, N^{3/4}/k^{1/2}})`.
pub fn endpoint_sum(k: u64, alpha: f64, n: u64) -> Result<(f64, f64)> {
    let range = truncated_poisson_range(k, alpha, n)?;
    let cap = (n as f64).powf(0.75) / (k as f64).sqrt();
    let half = k as f64 * alpha / 2.0;
    let lhs = range
        .r_list
        .iter()
        .map(|&r| (1.0 / (half - r as f64).abs()).min(cap))
        .sum();
    let rhs = 2.0 * ((n as f64).ln() + (1.0 / dist_to_int(half)).min(cap));
    Ok((lhs, rhs))
}

/// Tail sum `k sum_r r^{-3/2}` and the comparison value `4 N^{1/4} k^{1/2}`.
pub fn tail_sum(k: u64, alpha: f64, n: u64) -> Result<(f64, f64)> {
    let range = truncated_poisson_range(k, alpha, n)?;
    let s: f64 = range.r_list.iter().map(|&r| (r as f64).powf(-1.5)).sum();
    Ok((k as f64 * s, 4.0 * (n as f64).powf(0.25) * (k as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_integrals() {
        let z = oscillatory_integral_direct(0, 3, Real2::ONE, 1.0, 11.0, 1e-12).unwrap();
        assert!(z.norm() < 1e-10);
        let z = oscillatory_integral_direct(0, 0, Real2::ONE, 1.0, 100.0, 1e-12).unwrap();
        assert!((z - Complex64::new(99.0, 0.0)).norm() < 1e-10);
        assert!(oscillatory_integral_direct(1, 0, Real2::ONE, 0.5, 2.0, 1e-10).is_err());
        assert!(oscillatory_integral_direct(1, 0, Real2::ONE, 1.0, 2.0, 1e-13).is_err());
    }

    #[test]
    fn leading_term_closed_form() {
        let s = stationary_phase_leading(4, 1, Real2::ONE, 100).unwrap();
        assert_eq!(s.gamma, Some(4.0));
        assert!(s.h_at_gamma.abs() < 1e-15);
        assert!((s.hpp_at_gamma + 0.125).abs() < 1e-15);
        assert!((s.leading - Complex64::new(2.0, -2.0)).norm() < 1e-14);
        // gamma = N and gamma = 1 are outside the open range
        assert!(stationary_phase_leading(20, 1, Real2::ONE, 100).is_err());
        assert!(stationary_phase_leading(4, 2, Real2::ONE, 100).is_err());
    }

    #[test]
    fn derivative_tests() {
        let c = derivative_test_bound(2, 1, 0, 1.0, 1.0, 16.0).unwrap();
        assert!((c.value - 16.0).abs() < 1e-14);
        let c = derivative_test_bound(1, 4, 3, 1.0, 1.0, 100.0).unwrap();
        assert!((c.value - 1.0).abs() < 1e-14);
        assert!(derivative_test_bound(1, 4, 1, 1.0, 1.0, 100.0).is_err());
        assert!(derivative_test_bound(3, 4, 1, 1.0, 1.0, 100.0).is_err());
    }

    #[test]
    fn poisson_ranges() {
        let p = truncated_poisson_range(10, 1.0, 100).unwrap();
        assert_eq!((p.a, p.b), (0.5, 5.0));
        assert_eq!(p.r_list, vec![1, 2, 3, 4, 5]);
        assert!(!p.zero);
        let p = truncated_poisson_range(1, 1.0, 100).unwrap();
        assert!(p.r_list.is_empty());
        assert!(p.zero);
    }

    #[test]
    fn exponential_bound_arithmetic() {
        let b = bound_exponential(16, 1, 1.0);
        assert!((b - (2.0 + 8.0 * 16f64.ln())).abs() < 1e-12);
        assert!(bound_exponential(1000, 7, 1.0) < bound_exponential(1001, 7, 1.0));
    }

    #[test]
    fn bprocess_refuses_other_families() {
        let q = SequenceSpec::quadratic(Real2::sqrt2()).unwrap();
        assert!(bprocess_sum(&q, 100, 5).is_err());
        let s = SequenceSpec::sqrt(Real2::ONE).unwrap();
        let rec = bprocess_sum(&s, 100, 1).unwrap();
        assert_eq!(rec.value, Complex64::new(0.0, 0.0));
        assert_eq!(rec.method, Method::BProcess);
    }
}
