//! Compactly supported test functions acting on difference vectors.
//!
//! Only the bump is smooth; box and triangle factors have closed-form
//! integrals and Fourier transforms and serve as sharp oracles, but they lie
//! outside the smoothness class the convergence results assume.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kind {
    /// `exp(-1 / (1 - (x/radius)^2))` on `|x| < radius`, unnormalized.
    Bump { radius: f64 },
    /// Peak 1 at the origin, linear to zero at `+-radius`.
    Triangle { radius: f64 },
    /// Indicator of the closed interval `[lo, hi]`.
    Box { lo: f64, hi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunction1D {
    pub kind: Kind,
    pub integral: f64,
    /// Half-width of a symmetric interval containing the support.
    pub radius: f64,
}

fn unit_bump_integral() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        quad::integrate(unit_bump, -1.0, 1.0, 1e-13, 100_000)
            .expect("bump mass converges")
            .value
    })
}

#[inline]
fn unit_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        let pt = std::f64::consts::PI * t;
        pt.sin() / pt
    }
}

impl TestFunction1D {
    pub fn bump(radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(TestFunction1D {
            kind: Kind::Bump { radius },
            integral: radius * unit_bump_integral(),
            radius,
        })
    }

    pub fn triangle(radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(TestFunction1D {
            kind: Kind::Triangle { radius },
            integral: radius,
            radius,
        })
    }

    pub fn boxcar(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidInput(format!("box needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(TestFunction1D {
            kind: Kind::Box { lo, hi },
            integral: hi - lo,
            radius: lo.abs().max(hi.abs()),
        })
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Bump { .. } => "bump",
            Kind::Triangle { .. } => "triangle",
            Kind::Box { .. } => "box",
        }
    }

    /// Whether the factor is C-infinity; only the bump is.
    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, Kind::Bump { .. })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Bump { radius } => unit_bump(x / radius),
            Kind::Triangle { radius } => (1.0 - x.abs() / radius).max(0.0),
            Kind::Box { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `int f(x) e(x xi) dx`, closed form for box and triangle.
    pub fn fourier_transform(&self, xi: f64) -> Complex64 {
        match self.kind {
            Kind::Box { lo, hi } => {
                if xi == 0.0 {
                    return Complex64::new(hi - lo, 0.0);
                }
                let tau = std::f64::consts::TAU;
                (crate::e(hi * xi) - crate::e(lo * xi)) / Complex64::new(0.0, tau * xi)
            }
            Kind::Triangle { radius } => {
                let s = sinc(radius * xi);
                Complex64::new(radius * s * s, 0.0)
            }
            Kind::Bump { radius } => {
                // even integrand: only the cosine part survives
                let w = std::f64::consts::TAU * xi * radius;
                let r = quad::integrate(|t| unit_bump(t) * (w * t).cos(), -1.0, 1.0, 1e-12, 1_000_000)
                    .expect("bump transform converges");
                Complex64::new(radius * r.value, 0.0)
            }
        }
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("radius must be positive, got {radius}")))
    }
}

/// Tensor product of one-dimensional factors, one per difference coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunctionProduct {
    pub factors: Vec<TestFunction1D>,
}

impl TestFunctionProduct {
    pub fn new(factors: Vec<TestFunction1D>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidInput("need at least one factor".into()));
        }
        Ok(TestFunctionProduct { factors })
    }

    /// The same factor repeated `dim` times.
    pub fn repeated(f: TestFunction1D, dim: usize) -> Result<Self> {
        Self::new(vec![f; dim])
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.factors.len() {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: {} coordinates for {} factors",
                x.len(),
                self.factors.len()
            )));
        }
        let mut prod = 1.0;
        for (f, &xi) in self.factors.iter().zip(x) {
            prod *= f.eval(xi);
            if prod == 0.0 {
                return Ok(0.0);
            }
        }
        Ok(prod)
    }

    pub fn integral(&self) -> f64 {
        self.factors.iter().map(|f| f.integral).product()
    }

    pub fn max_radius(&self) -> f64 {
        self.factors.iter().map(|f| f.radius).fold(0.0, f64::max)
    }

    /// Label such as `bump` or `box*triangle`.
    pub fn kind_label(&self) -> String {
        let first = self.factors[0].name();
        if self.factors.iter().all(|f| f.name() == first) {
            first.to_string()
        } else {
            self.factors.iter().map(|f| f.name()).collect::<Vec<_>>().join("*")
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.factors.iter().all(|f| f.is_smooth())
    }
}
