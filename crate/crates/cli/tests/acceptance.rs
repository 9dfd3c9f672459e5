//! Acceptance suite. Prints one line per criterion and exits nonzero if
//! any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use modcorr_core::correlate::{convergence_scan, correlation_bruteforce, correlation_windowed, CorrelationRequest};
use modcorr_core::counting::{moment_exact, moment_scan};
use modcorr_core::oscphase::{bprocess_sum, oscillatory_integral_direct, stationary_phase_leading};
use modcorr_core::testfn::{TestFunction1D, TestFunctionProduct};
use modcorr_core::weyl::{cutoff_for, error_term_rhs, weyl_scan, weyl_sum_direct};
use modcorr_core::{PointSet, Real2, SequenceSpec};

type Check = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Check);

fn alphas() -> [(&'static str, Real2); 3] {
    [("1", Real2::ONE), ("sqrt2", Real2::sqrt2()), ("sqrt3", Real2::sqrt3())]
}

/// `k^(1/2) N^(1/4) + N^(3/4) k^(-1/2) log N`
fn exponential_bound(n: u64, k: u64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    k.sqrt() * n.powf(0.25) + n.powf(0.75) / k.sqrt() * n.ln()
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for case in 0..60 {
        let n = rng.gen_range(2..=500usize);
        let m = rng.gen_range(2..=3usize);
        let spec = if case % 2 == 0 {
            SequenceSpec::quadratic(Real2::sqrt2()).unwrap()
        } else {
            SequenceSpec::sqrt(Real2::sqrt3()).unwrap()
        };
        let tau = rng.gen_range(0.15..0.9);
        let radius = rng.gen_range(0.2..1.0f64).min(0.5 * (n as f64).powf(tau));
        let factor = if (case / 2) % 2 == 0 {
            TestFunction1D::bump(radius).unwrap()
        } else {
            TestFunction1D::boxcar(-radius, rng.gen_range(0.1..1.0) * radius).unwrap()
        };
        let f = TestFunctionProduct::repeated(factor, m - 1).unwrap();
        let req = CorrelationRequest { spec, m, tau, n, f };
        let w = correlation_windowed(&req)
            .map_err(|e| format!("case {case}: {e}"))?
            .value;
        let b = correlation_bruteforce(&req).map_err(|e| format!("case {case}: {e}"))?;
        worst = worst.max((w - b).abs() / b.abs().max(1.0));
    }
    verdict(
        worst <= 1e-10,
        format!("60 cases, worst relative difference {worst:.2e} (limit 1e-10)"),
    )
}

fn c2_stationary_phase() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut cases, mut within, mut within3) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    while cases < 200 {
        let (_, alpha) = alphas()[rng.gen_range(0..3)];
        let n = [1_000u64, 3_000, 10_000][rng.gen_range(0..3)];
        let a = alpha.to_f64();
        let r = rng.gen_range(1..=100_000 / n as i64);
        // r strictly inside (k a / (2 sqrt N), k a / 2)
        let k_lo = (2.0 * r as f64 / a).floor() as u64 + 1;
        let k_hi = (2.0 * r as f64 * (n as f64).sqrt() / a).ceil() as u64 - 1;
        if k_lo > k_hi {
            continue;
        }
        let k = rng.gen_range(k_lo..=k_hi);
        let Ok(s) = stationary_phase_leading(k, r, alpha, n) else {
            continue;
        };
        let oracle = oscillatory_integral_direct(k, r, alpha, 1.0, n as f64, 1e-10)
            .map_err(|e| format!("k={k} r={r} N={n}: {e}"))?;
        let ratio = (oracle - s.leading).norm() / s.envelope;
        worst = worst.max(ratio);
        cases += 1;
        within += (ratio <= 1.0) as usize;
        within3 += (ratio <= 3.0) as usize;
    }
    verdict(
        within * 100 >= 99 * cases && within3 == cases,
        format!("{within}/{cases} within envelope, {within3}/{cases} within 3x, worst ratio {worst:.3}"),
    )
}

fn c3_bprocess_correctness() -> Check {
    let ks: Vec<u64> = (0..7)
        .map(|i| (10.0 * 10f64.powf(i as f64 / 3.0)).round() as u64)
        .collect();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (name, alpha) in alphas() {
        let spec = SequenceSpec::sqrt(alpha).unwrap();
        for n in [10_000u64, 100_000, 1_000_000] {
            for &k in &ks {
                let bp = bprocess_sum(&spec, n, k).map_err(|e| format!("{name} N={n} k={k}: {e}"))?;
                let d = weyl_sum_direct(&spec, n, k as i64).map_err(|e| format!("{name} N={n} k={k}: {e}"))?;
                worst = worst.max((d.value - bp.value).norm() / exponential_bound(n, k));
                count += 1;
            }
        }
    }
    verdict(
        worst <= 5.0,
        format!("{count} cases, worst |diff|/bound {worst:.4} (limit 5)"),
    )
}

fn c4_bprocess_speed() -> Check {
    let spec = SequenceSpec::sqrt(Real2::sqrt2()).unwrap();
    let (n, k) = (10_000_000u64, 1_000u64);
    let t = Instant::now();
    weyl_sum_direct(&spec, n, k as i64).map_err(|e| e.to_string())?;
    let direct = t.elapsed().as_secs_f64();
    let mut fast = f64::INFINITY;
    for _ in 0..5 {
        let t = Instant::now();
        bprocess_sum(&spec, n, k).map_err(|e| e.to_string())?;
        fast = fast.min(t.elapsed().as_secs_f64());
    }
    let speedup = direct / fast;
    verdict(
        speedup >= 100.0,
        format!("direct {direct:.3e} s, bprocess {fast:.3e} s, speedup {speedup:.0}x (limit 100x)"),
    )
}

fn c5_weyl_monitor() -> Check {
    let n = 1_000_000u64;
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, alpha) in alphas() {
        let spec = SequenceSpec::sqrt(alpha).unwrap();
        let scan = weyl_scan(&spec, n, 1000).map_err(|e| e.to_string())?;
        let max = scan
            .magnitudes
            .iter()
            .enumerate()
            .map(|(i, s)| s / exponential_bound(n, i as u64 + 1))
            .fold(0.0, f64::max);
        worst = worst.max(max);
        parts.push(format!("{name}: {max:.4}"));
    }
    verdict(worst <= 8.0, format!("max ratio {} (limit 8)", parts.join(", ")))
}

fn c6_long_range_convergence() -> Check {
    let spec = SequenceSpec::quadratic(Real2::sqrt2()).unwrap();
    let f = TestFunctionProduct::repeated(TestFunction1D::bump(1.0).unwrap(), 1).unwrap();
    let rows = convergence_scan(&spec, 2, 0.5, &f, &[10_000, 100_000, 1_000_000]).map_err(|e| e.to_string())?;
    let mut dev = Vec::new();
    for row in rows {
        let r = row.result.map_err(|e| format!("N={}: {e}", row.n))?;
        dev.push((r.ratio - 1.0).abs());
    }
    let monotone = dev.windows(2).all(|w| w[1] < w[0]);
    verdict(
        monotone && dev[2] <= 0.1,
        format!(
            "|ratio-1| = {:.4e}, {:.4e}, {:.4e}; decreasing: {monotone}, last <= 0.1: {}",
            dev[0],
            dev[1],
            dev[2],
            dev[2] <= 0.1
        ),
    )
}

fn c7_moments() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(1..5000);
        let p = PointSet::from_values((0..n).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let l = rng.gen_range(0.01..0.99) * n as f64;
        let s = moment_exact(&p, l, 1).map_err(|e| e.to_string())?;
        worst = worst.max((s.exact_moment - l).abs() / l.max(1.0));
    }
    let spec = SequenceSpec::quadratic(Real2::sqrt2()).unwrap();
    let rows = moment_scan(&spec, 2, 0.5, &[1_000_000]).map_err(|e| e.to_string())?;
    let ratio = rows[0].result.as_ref().map_err(|e| e.to_string())?.ratio;
    verdict(
        worst <= 1e-12 && (0.9..=1.1).contains(&ratio),
        format!("E[W] = L worst {worst:.2e} (limit 1e-12), E[W^2]/L^2 = {ratio:.5} at N=1e6 (range [0.9, 1.1])"),
    )
}

fn c8_error_functional() -> Check {
    let spec = SequenceSpec::sqrt(Real2::ONE).unwrap();
    let mut values = Vec::new();
    for n in [10_000u64, 100_000, 1_000_000] {
        let r = error_term_rhs(&spec, 2, n, cutoff_for(n, 0.7), 0.7).map_err(|e| format!("N={n}: {e}"))?;
        values.push(r.e_m_rhs);
    }
    verdict(
        values.windows(2).all(|w| w[1] < w[0]),
        format!(
            "E_2 = {:.4e}, {:.4e}, {:.4e} (strictly decreasing)",
            values[0], values[1], values[2]
        ),
    )
}

fn c9_nested_oracle() -> Check {
    let (n, big_m) = (10u64, 2u64);
    let specs = [
        SequenceSpec::quadratic(Real2::sqrt2()).unwrap(),
        SequenceSpec::sqrt(Real2::ONE).unwrap(),
        SequenceSpec::sqrt(Real2::sqrt3()).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for spec in specs {
        let got = error_term_rhs(&spec, 3, n, big_m, 0.3)
            .map_err(|e| e.to_string())?
            .e_m_rhs;
        let s = |k: i64| weyl_sum_direct(&spec, n, k).unwrap().value.norm();
        let kb = 2 * big_m as i64 - 1;
        let mut total = 0.0;
        for k1 in -kb..=kb {
            for k2 in -kb..=kb {
                if (k1, k2) != (0, 0) {
                    total += s(-(k1 + k2)) * s(k1) * s(k2);
                }
            }
        }
        let expect = total / (n as f64).powi(3);
        worst = worst.max((got - expect).abs() / expect.abs().max(1.0));
    }
    verdict(
        worst <= 1e-12,
        format!("3 sequences, worst difference {worst:.2e} (limit 1e-12)"),
    )
}

fn csv_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .filter(|name| !name.ends_with("_timing.csv"))
        .map(|name| (name.clone(), fs::read(dir.join(&name)).unwrap()))
        .collect()
}

fn c10_determinism() -> Check {
    let configs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut paths: Vec<PathBuf> = fs::read_dir(&configs)
        .map_err(|e| format!("{}: {e}", configs.display()))?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    paths.sort();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = 0;
    for cfg in &paths {
        let command = cfg.file_stem().unwrap().to_string_lossy().into_owned();
        let mut reference: Option<BTreeMap<String, Vec<u8>>> = None;
        for threads in [1, 4, 8] {
            let out = tmp.path().join(format!("{command}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_modcorr"))
                .arg(&command)
                .arg("--config")
                .arg(cfg)
                .arg("--threads")
                .arg(threads.to_string())
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(format!(
                    "{command} with {threads} threads: {}",
                    String::from_utf8_lossy(&status.stderr)
                ));
            }
            let got = csv_outputs(&out);
            match &reference {
                None => {
                    files += got.len();
                    reference = Some(got);
                }
                Some(r) if *r != got => return Err(format!("{command}: CSV differs at {threads} threads")),
                Some(_) => {}
            }
        }
    }
    verdict(
        paths.len() == 7,
        format!(
            "{} configs, {files} CSV files identical across 1, 4 and 8 threads",
            paths.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "windowed vs brute-force correlation", c1_oracle_equivalence),
        (2, "stationary-phase leading term", c2_stationary_phase),
        (3, "B-process correctness", c3_bprocess_correctness),
        (4, "B-process speed", c4_bprocess_speed),
        (5, "Weyl bound monitor", c5_weyl_monitor),
        (6, "long-range pair correlation convergence", c6_long_range_convergence),
        (7, "window moments", c7_moments),
        (8, "error functional decay", c8_error_functional),
        (9, "nested-sum oracle", c9_nested_oracle),
        (10, "CLI determinism", c10_determinism),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(d) => println!("criterion {id}: PASS  {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {id}: FAIL  {name}: {d} [{secs:.1} s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
