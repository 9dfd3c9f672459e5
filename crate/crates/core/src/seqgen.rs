//! Fractional parts `{a(n)}` and Weyl-sum phases `{k a(n)}`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real2::{frac_int_mul, Real2, EPS};

/// Largest certified phase error accepted by [`phase_mod1`].
pub const PHASE_TOLERANCE: f64 = 1e-10;
/// Largest certified error accepted for generated points.
pub const POINT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// a(n) = alpha n^2
    Quadratic,
    /// a(n) = alpha sqrt(n)
    Sqrt,
    /// a(n) = alpha n^beta, 0 < beta < 1
    Power,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Quadratic => "quadratic",
            Family::Sqrt => "sqrt",
            Family::Power => "power",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceSpec {
    pub family: Family,
    pub alpha: Real2,
    /// Exponent of n, only meaningful for [`Family::Power`].
    pub beta: f64,
}

impl SequenceSpec {
    pub fn new(family: Family, alpha: Real2, beta: f64) -> Result<Self> {
        let spec = SequenceSpec { family, alpha, beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn quadratic(alpha: Real2) -> Result<Self> {
        Self::new(Family::Quadratic, alpha, 2.0)
    }

    pub fn sqrt(alpha: Real2) -> Result<Self> {
        Self::new(Family::Sqrt, alpha, 0.5)
    }

    pub fn power(alpha: Real2, beta: f64) -> Result<Self> {
        Self::new(Family::Power, alpha, beta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_zero() || !self.alpha.hi.is_finite() {
            return Err(Error::InvalidInput("alpha must be a nonzero real".into()));
        }
        if self.family == Family::Power && !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidInput(format!(
                "power family needs 0 < beta < 1, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Plain double evaluation of `a(n)`; loses phase accuracy for large n.
    pub fn eval_naive(&self, n: u64) -> f64 {
        let a = self.alpha.to_f64();
        let x = n as f64;
        match self.family {
            Family::Quadratic => a * x * x,
            Family::Sqrt => a * x.sqrt(),
            Family::Power => a * x.powf(self.beta),
        }
    }
}

/// `{k a(n)}` as a double-double together with its certified error bound.
pub fn phase_mod1_bounded(spec: &SequenceSpec, n: u64, k: i64) -> (Real2, f64) {
    if k == 0 {
        return (Real2::ZERO, 0.0);
    }
    match spec.family {
        Family::Quadratic => {
            let big = k as i128 * (n as i128) * (n as i128);
            let frac = (frac_int_mul(big, spec.alpha.hi) + frac_int_mul(big, spec.alpha.lo)).fract();
            // the products are exact; what remains is alpha's own representation
            let bound = (big as f64).abs() * spec.alpha.hi.abs() * EPS + 4.0 * EPS;
            (frac, bound)
        }
        Family::Sqrt => {
            let root = Real2::from_f64(n as f64).sqrt();
            let value = (spec.alpha.mul_f64(k as f64)) * root;
            let bound = value.hi.abs() * 16.0 * EPS + 4.0 * EPS;
            (value.fract(), bound)
        }
        Family::Power => {
            let lnn = Real2::from_f64(n as f64).ln();
            let pow = lnn.mul_f64(spec.beta).exp();
            let value = (spec.alpha.mul_f64(k as f64)) * pow;
            let amplification = 1.0 + (spec.beta * lnn.hi).abs();
            let bound = value.hi.abs() * 64.0 * EPS * amplification + 4.0 * EPS;
            (value.fract(), bound)
        }
    }
}

/// `{k a(n)}` in `[0, 1)` with certified absolute error at most 1e-10.
pub fn phase_mod1(spec: &SequenceSpec, n: u64, k: i64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if k.unsigned_abs() > 1_000_000_000 {
        return Err(Error::InvalidInput(format!("|k| = {} exceeds 10^9", k.unsigned_abs())));
    }
    let (frac, bound) = phase_mod1_bounded(spec, n, k);
    if bound > PHASE_TOLERANCE {
        return Err(Error::PrecisionLoss {
            bound,
            limit: PHASE_TOLERANCE,
        });
    }
    Ok(frac.unit_f64())
}

/// Points on the unit torus, optionally kept in sorted order.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    pub n_max: usize,
    pub values: Vec<f64>,
    pub sorted: bool,
    /// `permutation[i]` is the sequence index n (1-based) of `values[i]`.
    pub permutation: Vec<u32>,
}

impl PointSet {
    /// Wraps raw values given in sequence order (value i belongs to n = i + 1).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("point set must be nonempty".into()));
        }
        if values.len() > u32::MAX as usize {
            return Err(Error::InvalidInput("too many points".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("point {v} outside [0, 1)")));
        }
        let n = values.len();
        Ok(PointSet {
            n_max: n,
            values,
            sorted: false,
            permutation: (1..=n as u32).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// A sorted copy; ties keep their sequence order.
    pub fn to_sorted(&self) -> PointSet {
        if self.sorted {
            return self.clone();
        }
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| {
            self.values[a]
                .total_cmp(&self.values[b])
                .then(self.permutation[a].cmp(&self.permutation[b]))
        });
        PointSet {
            n_max: self.n_max,
            values: idx.iter().map(|&i| self.values[i]).collect(),
            sorted: true,
            permutation: idx.iter().map(|&i| self.permutation[i]).collect(),
        }
    }
}

/// `x_n = {a(n)}` for n = 1..N in sequence order.
pub fn generate_points(spec: &SequenceSpec, n: usize) -> Result<PointSet> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    let (_, worst) = phase_mod1_bounded(spec, n as u64, 1);
    if worst > POINT_TOLERANCE {
        return Err(Error::PrecisionLoss {
            bound: worst,
            limit: POINT_TOLERANCE,
        });
    }
    let values: Vec<f64> = (1..=n as u64)
        .into_par_iter()
        .map(|i| phase_mod1_bounded(spec, i, 1).0.unit_f64())
        .collect();
    PointSet::from_values(values)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convergent {
    pub p: i128,
    pub q: i128,
    /// `q^2 |alpha - p/q|`
    pub quality: f64,
    /// alpha equals p/q to working precision
    pub exact: bool,
}

/// Continued-fraction convergents of alpha with `q <= q_max`.
pub fn diophantine_quality(alpha: Real2, q_max: u64) -> Result<Vec<Convergent>> {
    if q_max == 0 {
        return Err(Error::InvalidInput("q_max must be at least 1".into()));
    }
    if q_max > 1_000_000_000_000 {
        return Err(Error::InvalidInput("q_max above 10^12 exceeds Real2 accuracy".into()));
    }
    let mut out = Vec::new();
    let mut x = alpha;
    let mut a = x.floor();
    let (mut p_prev, mut q_prev) = (1i128, 0i128);
    let (mut p, mut q) = (a.to_f64() as i128, 1i128);
    while q as u64 <= q_max {
        let resid = alpha.mul_f64(q as f64) - Real2::from_i128(p);
        let exact = resid.to_f64().abs() <= 8.0 * EPS * (q as f64) * alpha.hi.abs();
        let quality = if exact { 0.0 } else { (q as f64) * resid.to_f64().abs() };
        out.push(Convergent { p, q, quality, exact });
        let rest = x - a;
        if exact || rest.to_f64().abs() <= 8.0 * EPS * x.hi.abs() {
            break;
        }
        x = Real2::ONE / rest;
        a = x.floor();
        let ai = a.to_f64() as i128;
        let next = (ai * p + p_prev, ai * q + q_prev);
        p_prev = p;
        q_prev = q;
        (p, q) = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_spec(alpha: f64) -> SequenceSpec {
        SequenceSpec::sqrt(Real2::from_f64(alpha)).unwrap()
    }

    #[test]
    fn quadratic_half_alternates() {
        let spec = SequenceSpec::quadratic(Real2::from_f64(0.5)).unwrap();
        let pts = generate_points(&spec, 4).unwrap();
        assert_eq!(pts.values, vec![0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn sqrt_two_small_values() {
        let pts = generate_points(&sqrt_spec(2.0), 4).unwrap();
        let expect = [0.0, 2.0 * 2f64.sqrt() - 2.0, 2.0 * 3f64.sqrt() - 3.0, 0.0];
        for (v, e) in pts.values.iter().zip(expect) {
            assert!((v - e).abs() < 1e-15, "{v} vs {e}");
        }
        assert!((pts.values[1] - 0.828427124746190).abs() < 1e-14);
        assert!((pts.values[2] - 0.464101615137754).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = sqrt_spec(1.0);
        assert!(generate_points(&spec, 0).is_err());
        assert!(SequenceSpec::power(Real2::ONE, 1.0).is_err());
        assert!(SequenceSpec::power(Real2::ONE, 0.0).is_err());
        assert!(SequenceSpec::quadratic(Real2::ZERO).is_err());
        assert!(phase_mod1(&spec, 0, 1).is_err());
        assert!(phase_mod1(&spec, 1, 2_000_000_000).is_err());
    }

    #[test]
    fn trivial_phases() {
        let q = SequenceSpec::quadratic(Real2::from_f64(0.5)).unwrap();
        assert_eq!(phase_mod1(&q, 3, 2).unwrap(), 0.0);
        assert_eq!(phase_mod1(&sqrt_spec(1.0), 4, 7).unwrap(), 0.0);
    }

    #[test]
    fn precision_loss_is_reported() {
        let spec = SequenceSpec::quadratic(Real2::sqrt2()).unwrap();
        match phase_mod1(&spec, 100_000_000, 1_000_000_000) {
            Err(Error::PrecisionLoss { bound, .. }) => assert!(bound > PHASE_TOLERANCE),
            other => panic!("expected precision loss, got {other:?}"),
        }
    }

    #[test]
    fn convergents_of_sqrt2() {
        let cs = diophantine_quality(Real2::sqrt2(), 12).unwrap();
        let pq: Vec<_> = cs.iter().map(|c| (c.p, c.q)).collect();
        assert_eq!(pq, vec![(1, 1), (3, 2), (7, 5), (17, 12)]);
        // 60-digit reference value
        assert!((cs[3].quality - 0.353247018274312972556823713803).abs() < 1e-14);
        assert!(cs.iter().all(|c| !c.exact));
    }

    #[test]
    fn rational_alpha_is_flagged() {
        let cs = diophantine_quality(Real2::from_f64(0.5), 10).unwrap();
        let last = cs.last().unwrap();
        assert_eq!((last.p, last.q, last.quality, last.exact), (1, 2, 0.0, true));
    }

    #[test]
    fn golden_qualities_approach_inverse_sqrt5() {
        let cs = diophantine_quality(Real2::golden(), 100).unwrap();
        assert_eq!(cs.last().unwrap().q, 89);
        for c in cs.iter().filter(|c| c.q >= 8) {
            assert!(c.quality > 0.44 && c.quality < 0.448, "{c:?}");
        }
        assert!((cs.last().unwrap().quality - 0.447224887917092628532315).abs() < 1e-13);
    }

    #[test]
    fn sorted_copy_tracks_indices() {
        let ps = PointSet::from_values(vec![0.3, 0.1, 0.3, 0.0]).unwrap();
        let s = ps.to_sorted();
        assert_eq!(s.values, vec![0.0, 0.1, 0.3, 0.3]);
        assert_eq!(s.permutation, vec![4, 2, 1, 3]);
        assert!(PointSet::from_values(vec![1.0]).is_err());
    }
}
