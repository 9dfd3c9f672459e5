//! Weyl sums `S(N, k) = sum_{y <= N} e(k a(y))` and the error functional
//! built from them.
//!
//! The error functional for level m is
//!
//! ```text
//! E_m = N^-m * sum over 0 != k in Z^{m-1}, |k_i| < 2M of |S(N, d(k))| * prod |S(N, k_i)|
//! ```
//!
//! with `d(k) = -(k_1 + ... + k_{m-1})`, and the inclusion-exclusion
//! combination `E_m + (M / N^tau) E_{m-1}`.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::compensated::{ComplexSum, Sum};
use crate::error::{Error, Result};
use crate::real2::Real2;
use crate::seqgen::{phase_mod1_bounded, Family, SequenceSpec, PHASE_TOLERANCE};

/// Terms per work unit of the direct sums.
const N_CHUNK: usize = 1 << 14;
/// Frequencies per block of the batched evaluator (fits in L1).
const K_BLOCK: usize = 1024;
/// Steps between exact re-anchoring of the rotation recurrence.
const REANCHOR: usize = 128;
/// Nested-sum cost guard for [`error_term_rhs`].
pub const TUPLE_GUARD: f64 = 1e9;
/// Cost guard on `N * k_max` for the magnitude cache.
pub const CACHE_GUARD: f64 = 1e11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Direct,
    BProcess,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::BProcess => "bprocess",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeylSumRecord {
    pub spec: SequenceSpec,
    pub n: u64,
    pub k: i64,
    pub value: Complex64,
    pub method: Method,
    pub elapsed: f64,
    /// B-process only: error budget of the terms that were bounded rather
    /// than evaluated.
    pub error_budget: Option<f64>,
}

fn check_precision(spec: &SequenceSpec, n: u64, k_abs: u64) -> Result<()> {
    let (_, bound) = phase_mod1_bounded(spec, n, k_abs as i64);
    if bound > PHASE_TOLERANCE {
        return Err(Error::PrecisionLoss {
            bound,
            limit: PHASE_TOLERANCE,
        });
    }
    Ok(())
}

/// Term-by-term evaluation with double-double phases.
pub fn weyl_sum_direct(spec: &SequenceSpec, n: u64, k: i64) -> Result<WeylSumRecord> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    if k.unsigned_abs() > 1_000_000_000 {
        return Err(Error::InvalidInput("|k| exceeds 10^9".into()));
    }
    let start = Instant::now();
    let value = if k == 0 {
        Complex64::new(n as f64, 0.0)
    } else {
        check_precision(spec, n, k.unsigned_abs())?;
        let chunks = (n as usize).div_ceil(N_CHUNK);
        let partials: Vec<ComplexSum> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let lo = (c * N_CHUNK) as u64 + 1;
                let hi = (((c + 1) * N_CHUNK) as u64).min(n);
                let mut acc = ComplexSum::new();
                for y in lo..=hi {
                    acc.add(crate::e(phase_mod1_bounded(spec, y, k).0.unit_f64()));
                }
                acc
            })
            .collect();
        let mut total = ComplexSum::new();
        for p in &partials {
            total.merge(p);
        }
        total.value()
    };
    Ok(WeylSumRecord {
        spec: *spec,
        n,
        k,
        value,
        method: Method::Direct,
        elapsed: start.elapsed().as_secs_f64(),
        error_budget: None,
    })
}

/// `S(N, k)` for every `k = 0..=k_max` in one pass over n.
///
/// For each n the rotation `e(k theta_n)` is advanced by complex
/// multiplication and re-anchored from the double-double phase every
/// [`REANCHOR`] steps, so the per-term error stays below ~1e-14.
pub fn weyl_sums_batch(spec: &SequenceSpec, n: u64, k_max: u64) -> Result<Vec<Complex64>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    if (n as f64) * (k_max as f64) > CACHE_GUARD {
        return Err(Error::CostGuard(format!(
            "N * k_max = {:e} exceeds {CACHE_GUARD:e}",
            n as f64 * k_max as f64
        )));
    }
    check_precision(spec, n, k_max.max(1))?;
    let width = k_max as usize + 1;
    let chunks = (n as usize).div_ceil(N_CHUNK);
    let partials: Vec<Vec<Complex64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = (c * N_CHUNK) as u64 + 1;
            let hi = (((c + 1) * N_CHUNK) as u64).min(n);
            let thetas: Vec<Real2> = (lo..=hi).map(|y| phase_mod1_bounded(spec, y, 1).0).collect();
            let steps: Vec<Complex64> = thetas.iter().map(|t| crate::e(t.to_f64())).collect();
            let mut re = vec![0.0; width];
            let mut im = vec![0.0; width];
            for k0 in (0..width).step_by(K_BLOCK) {
                let k1 = (k0 + K_BLOCK).min(width);
                for (t4, w4) in thetas.chunks(LANES).zip(steps.chunks(LANES)) {
                    rotate_block(t4, w4, k0, &mut re[k0..k1], &mut im[k0..k1]);
                }
            }
            let acc: Vec<Complex64> = re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();
            acc
        })
        .collect();
    let mut out = Vec::with_capacity(width);
    for k in 0..width {
        let mut s = ComplexSum::new();
        for p in &partials {
            s.add(p[k]);
        }
        out.push(s.value());
    }
    // k = 0 is exact
    out[0] = Complex64::new(n as f64, 0.0);
    Ok(out)
}

/// Independent rotations advanced together for instruction-level parallelism.
const LANES: usize = 8;

/// Adds `sum_n e((k0 + j) theta_n)` into slot j for up to [`LANES`] values of n.
fn rotate_block(thetas: &[Real2], steps: &[Complex64], k0: usize, re: &mut [f64], im: &mut [f64]) {
    let lanes = thetas.len();
    let mut zr = [0.0; LANES];
    let mut zi = [0.0; LANES];
    let mut wr = [0.0; LANES];
    let mut wi = [0.0; LANES];
    for i in 0..lanes {
        wr[i] = steps[i].re;
        wi[i] = steps[i].im;
    }
    for seg in (0..re.len()).step_by(REANCHOR) {
        let k = (k0 + seg) as f64;
        for i in 0..lanes {
            let z = crate::e(thetas[i].mul_f64(k).unit_f64());
            zr[i] = z.re;
            zi[i] = z.im;
        }
        let end = (seg + REANCHOR).min(re.len());
        for j in seg..end {
            let (mut sr, mut si) = (0.0, 0.0);
            for i in 0..LANES {
                sr += zr[i];
                si += zi[i];
                let t = zr[i] * wr[i] - zi[i] * wi[i];
                zi[i] = zr[i] * wi[i] + zi[i] * wr[i];
                zr[i] = t;
            }
            re[j] += sr;
            im[j] += si;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeylScan {
    pub spec: SequenceSpec,
    pub n: u64,
    /// `|S(N, k)|` for k = 1..=k_max (index k - 1).
    pub magnitudes: Vec<f64>,
    /// `sum_{1 <= k <= M} |S(N, k)|` for M = 1..=k_max.
    pub cum_abs: Vec<f64>,
    /// `sum_{1 <= k <= M} |S(N, k)|^2` for M = 1..=k_max.
    pub cum_sq: Vec<f64>,
    pub elapsed: f64,
}

pub fn weyl_scan(spec: &SequenceSpec, n: u64, k_max: u64) -> Result<WeylScan> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let start = Instant::now();
    let sums = weyl_sums_batch(spec, n, k_max)?;
    let magnitudes: Vec<f64> = sums[1..].iter().map(|z| z.norm()).collect();
    let (mut a, mut s) = (Sum::new(), Sum::new());
    let mut cum_abs = Vec::with_capacity(magnitudes.len());
    let mut cum_sq = Vec::with_capacity(magnitudes.len());
    for &v in &magnitudes {
        a.add(v);
        s.add(v * v);
        cum_abs.push(a.value());
        cum_sq.push(s.value());
    }
    Ok(WeylScan {
        spec: *spec,
        n,
        magnitudes,
        cum_abs,
        cum_sq,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Mean-square bound `M N` for the quadratic family (δ = 0).
pub fn quadratic_square_bound(m: f64, n: f64) -> f64 {
    m * n
}

/// First-moment bound `M N^{1/2}` for the quadratic family (δ = 0).
pub fn quadratic_abs_bound(m: f64, n: f64) -> f64 {
    m * n.sqrt()
}

/// `M^2 N^{1/2} + N^{3/2} log^2 N + N M log N` for the square-root family.
pub fn sqrt_square_bound(m: f64, n: f64) -> f64 {
    let l = n.ln();
    m * m * n.sqrt() + n.powf(1.5) * l * l + n * m * l
}

/// `M^{3/2} N^{1/4} + N^{3/4} M^{1/2} log N` for the square-root family.
pub fn sqrt_abs_bound(m: f64, n: f64) -> f64 {
    m.powf(1.5) * n.powf(0.25) + n.powf(0.75) * m.sqrt() * n.ln()
}

/// Largest τ covered by the proven range for `(family, m)`; none for the
/// general power family.
pub fn tau_threshold(family: Family, m: usize) -> Option<f64> {
    let m = m as f64;
    match family {
        Family::Quadratic => Some(m / (2.0 * m - 2.0)),
        Family::Sqrt => Some(3.0 * m / (6.0 * m - 4.0)),
        Family::Power => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTermReport {
    pub m: usize,
    pub n: u64,
    pub big_m: u64,
    pub tau: f64,
    /// Normalized level-m functional.
    pub e_m_rhs: f64,
    /// `E_m + (M / N^tau) E_{m-1}`
    pub combined: f64,
    /// `(level, E_level)` for levels m and m - 1.
    pub per_level: Vec<(usize, f64)>,
}

/// `|S(N, k)|` for `k = 0..=k_max`, indexed by k.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeCache {
    pub n: u64,
    pub abs: Vec<f64>,
}

impl MagnitudeCache {
    pub fn build(spec: &SequenceSpec, n: u64, k_max: u64) -> Result<Self> {
        let sums = weyl_sums_batch(spec, n, k_max)?;
        Ok(MagnitudeCache {
            n,
            abs: sums.iter().map(|z| z.norm()).collect(),
        })
    }

    #[inline]
    pub fn get(&self, k: i64) -> f64 {
        // |S(N, -k)| = |S(N, k)| for real phases
        self.abs[k.unsigned_abs() as usize]
    }

    pub fn k_max(&self) -> u64 {
        self.abs.len() as u64 - 1
    }
}

/// Largest |k| needed by a level-m functional with cut-off M.
pub fn needed_k(m: usize, big_m: u64) -> u64 {
    (m as u64 - 1) * (2 * big_m - 1)
}

fn tuple_count(level: usize, big_m: u64) -> f64 {
    (4.0 * big_m as f64 - 1.0).powi(level as i32 - 1)
}

/// Normalized functional of one level, from cached magnitudes.
pub fn level_functional(cache: &MagnitudeCache, level: usize, big_m: u64) -> Result<f64> {
    if level < 2 {
        // no nonzero frequency vectors
        return Ok(0.0);
    }
    if big_m == 0 {
        return Err(Error::InvalidInput("M must be at least 1".into()));
    }
    if tuple_count(level, big_m) > TUPLE_GUARD {
        return Err(Error::CostGuard(format!(
            "level {level} with M = {big_m} visits {:e} tuples; reduce M or m",
            tuple_count(level, big_m)
        )));
    }
    if cache.k_max() < needed_k(level, big_m) {
        return Err(Error::InvalidInput(format!(
            "cache covers |k| <= {}, level {level} needs {}",
            cache.k_max(),
            needed_k(level, big_m)
        )));
    }
    let kb = 2 * big_m as i64 - 1;
    let dims = level - 1;
    let partials: Vec<Sum> = (-kb..=kb)
        .into_par_iter()
        .map(|k1| {
            let mut acc = Sum::new();
            nested(cache, dims - 1, kb, k1, k1 != 0, cache.get(k1), &mut acc);
            acc
        })
        .collect();
    let mut total = Sum::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.value() / (cache.n as f64).powi(level as i32))
}

fn nested(cache: &MagnitudeCache, remaining: usize, kb: i64, sum: i64, nonzero: bool, weight: f64, acc: &mut Sum) {
    if remaining == 0 {
        if nonzero {
            acc.add(weight * cache.get(-sum));
        }
        return;
    }
    for k in -kb..=kb {
        nested(
            cache,
            remaining - 1,
            kb,
            sum + k,
            nonzero || k != 0,
            weight * cache.get(k),
            acc,
        );
    }
}

/// Level-m and level-(m-1) functionals with their inclusion-exclusion total.
pub fn error_term_rhs_cached(cache: &MagnitudeCache, m: usize, big_m: u64, tau: f64) -> Result<ErrorTermReport> {
    if !(2..=4).contains(&m) {
        return Err(Error::InvalidInput(format!("m must be 2, 3 or 4, got {m}")));
    }
    let e_m = level_functional(cache, m, big_m)?;
    let e_prev = level_functional(cache, m - 1, big_m)?;
    let weight = big_m as f64 / (cache.n as f64).powf(tau);
    Ok(ErrorTermReport {
        m,
        n: cache.n,
        big_m,
        tau,
        e_m_rhs: e_m,
        combined: e_m + weight * e_prev,
        per_level: vec![(m, e_m), (m - 1, e_prev)],
    })
}

pub fn error_term_rhs(spec: &SequenceSpec, m: usize, n: u64, big_m: u64, tau: f64) -> Result<ErrorTermReport> {
    if !(2..=4).contains(&m) {
        return Err(Error::InvalidInput(format!("m must be 2, 3 or 4, got {m}")));
    }
    if big_m == 0 {
        return Err(Error::InvalidInput("M must be at least 1".into()));
    }
    if tuple_count(m, big_m) > TUPLE_GUARD {
        return Err(Error::CostGuard(format!(
            "m = {m} with M = {big_m} visits {:e} tuples; reduce M or m",
            tuple_count(m, big_m)
        )));
    }
    let cache = MagnitudeCache::build(spec, n, needed_k(m, big_m))?;
    error_term_rhs_cached(&cache, m, big_m, tau)
}

/// `M = N^tau` rounded to the nearest integer (ε′ = 0).
pub fn cutoff_for(n: u64, tau: f64) -> u64 {
    ((n as f64).powf(tau).round() as u64).max(1)
}

#[derive(Clone, Debug)]
pub struct ThresholdCell {
    pub tau: f64,
    pub n: u64,
    pub threshold: Option<f64>,
    /// `Some(tau < threshold)` when a threshold is known.
    pub inside: Option<bool>,
    pub result: Result<ErrorTermReport>,
}

/// Error functional on a (τ, N) grid, flagging cells inside the proven range.
pub fn threshold_scan(spec: &SequenceSpec, m: usize, taus: &[f64], n_grid: &[u64]) -> Result<Vec<ThresholdCell>> {
    if !(2..=4).contains(&m) {
        return Err(Error::InvalidInput(format!("m must be 2, 3 or 4, got {m}")));
    }
    if let Some(t) = taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::InvalidInput(format!("tau must lie in (0, 1), got {t}")));
    }
    let threshold = tau_threshold(spec.family, m);
    let mut cells = Vec::with_capacity(taus.len() * n_grid.len());
    for &n in n_grid {
        // one cache per N, sized for the largest admissible cut-off
        let k_need = taus
            .iter()
            .map(|&t| cutoff_for(n, t))
            .filter(|&bm| tuple_count(m, bm) <= TUPLE_GUARD)
            .map(|bm| needed_k(m, bm))
            .max()
            .unwrap_or(0);
        let cache = MagnitudeCache::build(spec, n, k_need.max(1));
        for &tau in taus {
            let result = match &cache {
                Ok(c) => error_term_rhs_cached(c, m, cutoff_for(n, tau), tau),
                Err(e) => Err(e.clone()),
            };
            cells.push(ThresholdCell {
                tau,
                n,
                threshold,
                inside: threshold.map(|th| tau < th),
                result,
            });
        }
    }
    Ok(cells)
}
