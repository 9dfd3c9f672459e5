//! Double-double ("Real2") arithmetic.
//!
//! A value is the unevaluated sum `hi + lo` of two `f64`s with
//! `|lo| <= ulp(hi) / 2`, giving roughly 106 bits of significand. This is
//! enough to reduce phases such as `k * alpha * n^2` modulo one at the scales
//! the experiments use, without pulling in an arbitrary precision library.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use crate::error::Error;

/// Relative rounding unit of the double-double format (2^-104).
pub const EPS: f64 = 4.930380657631324e-32;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Real2 {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: &str = "0.69314718055994530941723212145817656807550013436025525412068";
const PI: &str = "3.14159265358979323846264338327950288419716939937510582097494";
const E: &str = "2.71828182845904523536028747135266249775724709369995957496697";
const SQRT2: &str = "1.41421356237309504880168872420969807856967187537694807317668";
const SQRT3: &str = "1.73205080756887729352744634150587236694280525381038062805581";
const SQRT5: &str = "2.23606797749978969640917366873127623544061835961152572427090";
const GOLDEN: &str = "1.61803398874989484820458683436563811772030917980576286213544";

impl Real2 {
    pub const ZERO: Real2 = Real2 { hi: 0.0, lo: 0.0 };
    pub const ONE: Real2 = Real2 { hi: 1.0, lo: 0.0 };

    /// Builds a normalized pair from two arbitrary doubles.
    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (h, l) = two_sum(hi, lo);
        Real2 { hi: h, lo: l }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Real2 { hi: x, lo: 0.0 }
    }

    /// Exact conversion for |v| < 2^106.
    pub fn from_i128(v: i128) -> Self {
        let hi = v as f64;
        let rest = v - hi as i128;
        Real2::new(hi, rest as f64)
    }

    /// Named irrational constants, decoded from 60-digit literals.
    pub fn named(name: &str) -> Option<Self> {
        let lit = match name.to_ascii_lowercase().as_str() {
            "sqrt2" => SQRT2,
            "sqrt3" => SQRT3,
            "sqrt5" => SQRT5,
            "golden" | "phi" => GOLDEN,
            "pi" => PI,
            "e" => E,
            _ => return None,
        };
        Some(lit.parse().expect("constant literal"))
    }

    pub fn sqrt2() -> Self {
        SQRT2.parse().expect("constant literal")
    }

    pub fn sqrt3() -> Self {
        SQRT3.parse().expect("constant literal")
    }

    pub fn golden() -> Self {
        GOLDEN.parse().expect("constant literal")
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (h, l) = quick_two_sum(p, e + self.lo * b);
        Real2 { hi: h, lo: l }
    }

    pub fn floor(self) -> Self {
        let fh = self.hi.floor();
        if fh == self.hi {
            Real2::new(fh, self.lo.floor())
        } else {
            Real2 { hi: fh, lo: 0.0 }
        }
    }

    /// Representative of `self` modulo one in `[0, 1)`.
    pub fn fract(self) -> Self {
        let fh = self.hi.floor();
        // hi - floor(hi) is exact for every finite double
        let mut r = if fh == self.hi {
            Real2::new(0.0, self.lo - self.lo.floor())
        } else {
            Real2::new(self.hi - fh, self.lo)
        };
        while r.hi < 0.0 {
            r = r + Real2::ONE;
        }
        while r.hi >= 1.0 {
            r = r - Real2::ONE;
        }
        if r.hi < 0.0 {
            // -tiny + 1 rounded up to 1: the value is 1 - tiny
            r = Real2::ZERO;
        }
        r
    }

    /// `fract()` collapsed to a double in `[0, 1)`.
    #[inline]
    pub fn unit_f64(self) -> f64 {
        let v = self.fract().to_f64();
        if v >= 1.0 {
            0.0
        } else {
            v
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Real2::ZERO;
        }
        let s = self.hi.sqrt();
        // one Newton step on the hardware root: s + (x - s^2) / (2s)
        let (p, e) = two_prod(s, s);
        let resid = (self - Real2 { hi: p, lo: e }).to_f64();
        Real2::new(s, resid / (2.0 * s))
    }

    pub fn exp(self) -> Self {
        if self.hi == 0.0 {
            return Real2::ONE;
        }
        let ln2: Real2 = LN2.parse().expect("constant literal");
        let m = (self.hi / ln2.hi).round();
        let r = self - ln2.mul_f64(m);
        // squaring 2^10 times amplifies the Taylor error; keep |r| tiny
        let r = r.mul_f64(1.0 / 1024.0);
        let mut term = Real2::ONE;
        let mut sum = Real2::ZERO;
        for i in 1..=14 {
            term = (term * r) / Real2::from_f64(i as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-35 {
                break;
            }
        }
        // sum = e^r - 1; (1 + s)^2 - 1 = 2s + s^2 keeps the small part exact
        for _ in 0..10 {
            sum = sum.mul_f64(2.0) + sum * sum;
        }
        let v = sum + Real2::ONE;
        let scale = 2f64.powi(m as i32);
        Real2 {
            hi: v.hi * scale,
            lo: v.lo * scale,
        }
    }

    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Real2::from_f64(f64::NAN);
        }
        let y = Real2::from_f64(self.hi.ln());
        // Newton on exp: y + x e^{-y} - 1
        let y = y + self * (-y).exp() - Real2::ONE;
        y + self * (-y).exp() - Real2::ONE
    }

    pub fn powf(self, beta: f64) -> Self {
        (self.ln().mul_f64(beta)).exp()
    }

    pub fn powi(self, n: u32) -> Self {
        let mut acc = Real2::ONE;
        let mut base = self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

/// `{v * x}` computed exactly from the binary expansion of `x`.
///
/// Writing `x = m * 2^-t` with an integer mantissa `m`, the fractional part is
/// `((v mod 2^t) * m mod 2^t) / 2^t`, which fits in 128-bit arithmetic for
/// every `t <= 128`. The only rounding is the final conversion to `Real2`.
pub fn frac_int_mul(v: i128, x: f64) -> Real2 {
    if v == 0 || x == 0.0 || !x.is_finite() {
        return Real2::ZERO;
    }
    let bits = x.to_bits();
    let negative = (bits >> 63 == 1) != (v < 0);
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac_bits = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if biased == 0 {
        (frac_bits, -1074)
    } else {
        (frac_bits | (1u64 << 52), biased - 1075)
    };
    if exp >= 0 {
        return Real2::ZERO;
    }
    let t = (-exp) as u32;
    if t > 128 {
        // |x| < 2^-75: the product is small enough for plain double-double
        return (Real2::from_i128(v) * Real2::from_f64(x)).fract();
    }
    let mask = if t == 128 { u128::MAX } else { (1u128 << t) - 1 };
    let mut num = (v.unsigned_abs() & mask).wrapping_mul(mant as u128) & mask;
    if num == 0 {
        return Real2::ZERO;
    }
    if negative {
        num = mask - num + 1;
    }
    let hi = num as f64;
    let rest = (num as i128).wrapping_sub(hi as u128 as i128);
    let scale = 2f64.powi(-(t as i32));
    let r = Real2::new(hi * scale, rest as f64 * scale);
    if r.hi >= 1.0 {
        r - Real2::ONE
    } else {
        r
    }
}

impl Add for Real2 {
    type Output = Real2;
    #[inline]
    fn add(self, b: Real2) -> Real2 {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (h, l) = quick_two_sum(s1, s2 + t2);
        Real2 { hi: h, lo: l }
    }
}

impl Neg for Real2 {
    type Output = Real2;
    #[inline]
    fn neg(self) -> Real2 {
        Real2 {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Real2 {
    type Output = Real2;
    #[inline]
    fn sub(self, b: Real2) -> Real2 {
        self + (-b)
    }
}

impl Mul for Real2 {
    type Output = Real2;
    #[inline]
    fn mul(self, b: Real2) -> Real2 {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (h, l) = quick_two_sum(p, e);
        Real2 { hi: h, lo: l }
    }
}

impl Div for Real2 {
    type Output = Real2;
    fn div(self, b: Real2) -> Real2 {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (h, l) = quick_two_sum(q1, q2);
        Real2 { hi: h, lo: l } + Real2::from_f64(q3)
    }
}

impl PartialOrd for Real2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl fmt::Display for Real2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} + {:e}", self.hi, self.lo)
    }
}

fn pow10(n: u32) -> Real2 {
    Real2::from_f64(10.0).powi(n)
}

impl FromStr for Real2 {
    type Err = Error;

    /// Decimal literal with optional sign, fraction and exponent.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidInput(format!("not a decimal literal: {s:?}"));
        let s = s.trim();
        let (neg, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (mantissa, exp10) = match body.find(['e', 'E']) {
            Some(i) => (&body[..i], body[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (body, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let digits: Vec<u8> = int_part
            .bytes()
            .chain(frac_part.bytes())
            .map(|c| if c.is_ascii_digit() { Ok(c - b'0') } else { Err(bad()) })
            .collect::<Result<_, _>>()?;
        let mut acc = Real2::ZERO;
        for chunk in digits.chunks(15) {
            let mut v = 0u64;
            for &d in chunk {
                v = v * 10 + d as u64;
            }
            acc = acc.mul_f64(10f64.powi(chunk.len() as i32)) + Real2::from_f64(v as f64);
        }
        let shift = exp10 - frac_part.len() as i32;
        let value = match shift.cmp(&0) {
            Ordering::Equal => acc,
            Ordering::Greater => acc * pow10(shift as u32),
            Ordering::Less => acc / pow10((-shift) as u32),
        };
        Ok(if neg { -value } else { value })
    }
}
