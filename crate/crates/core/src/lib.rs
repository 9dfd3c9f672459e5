//! Numerical laboratory for long-range correlations of sequences modulo one.
//!
//! The crate generates fractional parts `{a(n)}` for `a(n) = alpha n^2`,
//! `alpha sqrt(n)` and `alpha n^beta`, measures their long-range m-level
//! correlations and window-count moments against the Poissonian prediction,
//! and evaluates the Weyl sums `S(N, k)` that control the error terms, either
//! directly or through the van der Corput B-process.

pub mod compensated;
pub mod correlate;
pub mod counting;
pub mod error;
pub mod oscphase;
pub mod quad;
pub mod real2;
pub mod seqgen;
pub mod testfn;
pub mod weyl;

pub use error::{Error, Result};
pub use real2::Real2;
pub use seqgen::{Family, PointSet, SequenceSpec};

/// `e(x) = exp(2 pi i x)`
#[inline]
pub fn e(x: f64) -> num_complex::Complex64 {
    let (s, c) = (std::f64::consts::TAU * x).sin_cos();
    num_complex::Complex64::new(c, s)
}
