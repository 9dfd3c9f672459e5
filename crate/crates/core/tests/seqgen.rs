use modcorr_core::seqgen::{diophantine_quality, generate_points, phase_mod1, PHASE_TOLERANCE};
use modcorr_core::{Error, Family, Real2, SequenceSpec};
use proptest::prelude::*;

fn quad(alpha: Real2) -> SequenceSpec {
    SequenceSpec::quadratic(alpha).unwrap()
}

/// Distance on the circle, so 0.9999999 and 0.0000001 are close.
fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

#[test]
fn trivial_phases() {
    let half = quad(Real2::from_f64(0.5));
    assert_eq!(phase_mod1(&half, 3, 2).unwrap(), 0.0);
    let one = SequenceSpec::sqrt(Real2::ONE).unwrap();
    assert_eq!(phase_mod1(&one, 4, 7).unwrap(), 0.0);
    assert!(matches!(phase_mod1(&one, 0, 1), Err(Error::InvalidInput(_))));
}

#[test]
fn large_phases_match_reference() {
    let v = phase_mod1(&quad(Real2::sqrt2()), 1_000_000, 1000).unwrap();
    assert!(circle_dist(v, 0.0488016887242096980785696718754) <= 1e-10);
    let s = SequenceSpec::sqrt(Real2::sqrt3()).unwrap();
    let v = phase_mod1(&s, 10_000_003, 999).unwrap();
    assert!(circle_dist(v, 0.170238800337766851107201103466) <= 1e-10);
}

#[test]
fn points_match_reference_file() {
    let text = include_str!("fixtures/sqrt2_quadratic_points.txt");
    let pts = generate_points(&quad(Real2::sqrt2()), 10_000).unwrap();
    let mut checked = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let mut it = line.split_whitespace();
        let n: usize = it.next().unwrap().parse().unwrap();
        let x: f64 = it.next().unwrap().parse().unwrap();
        assert!(circle_dist(pts.values[n - 1], x) <= 1e-12, "n = {n}");
        checked += 1;
    }
    assert!(checked > 150);
}

#[test]
fn power_family_with_half_exponent_is_sqrt() {
    let p = SequenceSpec::power(Real2::sqrt2(), 0.5).unwrap();
    let s = SequenceSpec::sqrt(Real2::sqrt2()).unwrap();
    for n in [1u64, 2, 17, 1000, 123_457] {
        let a = phase_mod1(&p, n, 3).unwrap();
        let b = phase_mod1(&s, n, 3).unwrap();
        assert!(circle_dist(a, b) < 1e-12, "n = {n}");
    }
    assert!(SequenceSpec::power(Real2::ONE, 1.0).is_err());
    assert_eq!(p.family, Family::Power);
}

#[test]
fn precision_loss_is_reported() {
    // |k| * alpha * n^2 far beyond double-double reach
    let s = quad(Real2::sqrt2());
    let r = phase_mod1(&s, 4_000_000_000, 1_000_000_000);
    assert!(matches!(r, Err(Error::PrecisionLoss { limit, .. }) if limit == PHASE_TOLERANCE));
}

#[test]
fn sqrt2_convergents() {
    let c = diophantine_quality(Real2::sqrt2(), 12).unwrap();
    let pq: Vec<(i128, i128)> = c.iter().map(|c| (c.p, c.q)).collect();
    assert_eq!(pq, vec![(1, 1), (3, 2), (7, 5), (17, 12)]);
    let expect = [0.41421356237, 0.34314575051, 0.35533905933, 0.35324701827431297];
    for (c, e) in c.iter().zip(expect) {
        assert!((c.quality - e).abs() < 1e-10);
    }
}

#[test]
fn rational_alpha_flags_exact_hit() {
    let c = diophantine_quality(Real2::from_f64(0.5), 10).unwrap();
    let last = c.last().unwrap();
    assert_eq!((last.p, last.q, last.quality, last.exact), (1, 2, 0.0, true));
}

#[test]
fn golden_ratio_qualities() {
    let c = diophantine_quality(Real2::golden(), 100).unwrap();
    assert_eq!(c.last().unwrap().q, 89);
    // the first few denominators are far from the 1/sqrt(5) asymptote
    for c in c.iter().filter(|c| c.q >= 8) {
        assert!(c.quality > 0.44 && c.quality < 0.448, "{c:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn conjugate_symmetry(n in 1u64..1_000_000, k in 1i64..100_000, fam in 0usize..2) {
        let spec = if fam == 0 { quad(Real2::sqrt2()) } else { SequenceSpec::sqrt(Real2::sqrt3()).unwrap() };
        let a = phase_mod1(&spec, n, k).unwrap();
        let b = phase_mod1(&spec, n, -k).unwrap();
        prop_assert!(circle_dist(a + b, 0.0) <= 1e-12);
    }

    #[test]
    fn quadratic_scaling(n in 1u64..=100_000, k in 1i64..1000) {
        let a = phase_mod1(&quad(Real2::sqrt2()), n, k).unwrap();
        let scaled = Real2::sqrt2() * Real2::from_f64(k as f64);
        let b = phase_mod1(&quad(scaled), n, 1).unwrap();
        prop_assert!(circle_dist(a, b) <= 1e-10);
    }

    #[test]
    fn naive_agrees_with_double_double(n in 1u64..=10_000, k in 1i64..=100, fam in 0usize..3) {
        let spec = match fam {
            0 => quad(Real2::sqrt2()),
            1 => SequenceSpec::sqrt(Real2::golden()).unwrap(),
            _ => SequenceSpec::power(Real2::sqrt3(), 0.3).unwrap(),
        };
        let precise = phase_mod1(&spec, n, k).unwrap();
        let naive = if fam == 0 {
            // alpha rounded to double; k n^2 and the product kept exact
            let p = (k as u64 * n * n) as f64;
            let a = spec.alpha.to_f64();
            let hi = p * a;
            (hi - hi.floor()) + p.mul_add(a, -hi)
        } else {
            let v = k as f64 * spec.eval_naive(n);
            v - v.floor()
        };
        prop_assert!(circle_dist(precise, naive - naive.floor()) <= 1e-6);
    }
}
