//! Subcommand implementations. Each one validates the whole config, then
//! produces tables whose contents depend only on the config.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use modcorr_core::correlate::{correlation_windowed, CorrelationRequest};
use modcorr_core::counting::{count_window, moment_exact};
use modcorr_core::oscphase::{
    bound_exponential, bprocess_sum, oscillatory_integral_direct, stationary_phase_leading, truncated_poisson_range,
};
use modcorr_core::seqgen::{diophantine_quality, generate_points};
use modcorr_core::weyl::{
    cutoff_for, quadratic_abs_bound, quadratic_square_bound, sqrt_abs_bound, sqrt_square_bound, threshold_scan,
    weyl_scan, weyl_sum_direct,
};
use modcorr_core::{Error, Family};

use crate::config::{Command, ConfigError, ExperimentConfig};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(Error),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(Error::InvalidInput(_)) => 3,
            RunError::Core(Error::CostGuard(_)) => 4,
            RunError::Core(Error::PrecisionLoss { .. }) => 5,
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Core(e)
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File name suffix after the output stem; empty for the main table.
    pub suffix: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(suffix: &str, header: &[&'static str]) -> Self {
        Table {
            suffix: suffix.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }
}

pub struct Outcome {
    pub tables: Vec<Table>,
    /// `(row label, seconds)`; kept apart from the deterministic tables.
    pub timing: Vec<(String, f64)>,
    pub plot: String,
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn status<T>(r: &modcorr_core::Result<T>) -> String {
    match r {
        Ok(_) => "ok".into(),
        Err(e) => format!("error: {e}").replace(',', ";"),
    }
}

fn need<T: Copy>(v: Option<T>, key: &str) -> Result<T, ConfigError> {
    v.ok_or_else(|| ConfigError(format!("missing required key {key:?}")))
}

fn grid(cfg: &ExperimentConfig) -> Result<Vec<u64>, RunError> {
    let g = if !cfg.n_grid.is_empty() {
        cfg.n_grid.clone()
    } else {
        vec![need(cfg.n, "n_grid")?]
    };
    if g.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("n_grid must be strictly ascending".into()).into());
    }
    if g.contains(&0) {
        return Err(Error::InvalidInput("N must be at least 1".into()).into());
    }
    Ok(g)
}

fn tau_in(tau: f64, lo_open: bool) -> Result<f64, RunError> {
    let ok = if lo_open {
        tau > 0.0 && tau < 1.0
    } else {
        (0.0..1.0).contains(&tau)
    };
    if ok {
        Ok(tau)
    } else {
        Err(Error::InvalidInput(format!("tau = {tau} outside its range")).into())
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    match cfg.command {
        Command::Points => points(cfg),
        Command::Correlate => correlate(cfg),
        Command::Moments => moments(cfg),
        Command::Weyl => weyl(cfg),
        Command::Bprocess => bprocess(cfg),
        Command::Thresholds => thresholds(cfg),
        Command::SpiSweep => spi_sweep(cfg),
    }
}

fn gnuplot(stem: &str, xlabel: &str, ylabel: &str, using: &str, logx: bool) -> String {
    format!(
        "set datafile separator ','\nset key autotitle columnhead\n{}set xlabel '{xlabel}'\nset ylabel '{ylabel}'\nplot '{stem}.csv' using {using} with linespoints\n",
        if logx { "set logscale x\n" } else { "" }
    )
}

fn points(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let spec = cfg.spec()?;
    let n = need(cfg.n, "n")? as usize;
    if let Some(q) = cfg.q_max {
        if q == 0 {
            return Err(Error::InvalidInput("q_max must be at least 1".into()).into());
        }
    }
    let t = Instant::now();
    let pts = generate_points(&spec, n)?;
    let mut main = Table::new("", &["n", "x"]);
    for (i, &x) in pts.values.iter().enumerate() {
        main.rows.push(vec![(i + 1).to_string(), num(x)]);
    }
    let mut tables = vec![main];
    if let Some(q) = cfg.q_max {
        let mut conv = Table::new("_convergents", &["p", "q", "quality", "exact"]);
        for c in diophantine_quality(spec.alpha, q)? {
            conv.rows.push(vec![
                c.p.to_string(),
                c.q.to_string(),
                num(c.quality),
                c.exact.to_string(),
            ]);
        }
        tables.push(conv);
    }
    Ok(Outcome {
        tables,
        timing: vec![("points".into(), t.elapsed().as_secs_f64())],
        plot: format!(
            "set datafile separator ','\nset key autotitle columnhead\nplot '{}.csv' using 1:2 with dots\n",
            cfg.output
        ),
    })
}

fn correlate(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let spec = cfg.spec()?;
    let tau = tau_in(need(cfg.tau, "tau")?, false)?;
    let f = cfg.test_function()?;
    let ns = grid(cfg)?;
    let reqs: Vec<CorrelationRequest> = ns
        .iter()
        .map(|&n| CorrelationRequest {
            spec,
            m: cfg.m,
            tau,
            n: n as usize,
            f: f.clone(),
        })
        .collect();
    for r in &reqs {
        r.validate()?;
    }
    let mut table = Table::new(
        "",
        &[
            "N", "m", "tau", "fn_kind", "value", "target", "ratio", "tuples", "status",
        ],
    );
    let mut timing = Vec::new();
    for req in &reqs {
        let res = correlation_windowed(req);
        let mut row = vec![req.n.to_string(), cfg.m.to_string(), num(tau), f.kind_label()];
        match &res {
            Ok(r) => {
                row.extend([
                    num(r.value),
                    num(r.poisson_target),
                    num(r.ratio),
                    r.n_tuples_counted.to_string(),
                ]);
                timing.push((format!("N={}", req.n), r.elapsed));
            }
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        row.push(status(&res));
        table.rows.push(row);
    }
    Ok(Outcome {
        tables: vec![table],
        timing,
        plot: gnuplot(&cfg.output, "N", "R / target", "1:7", true),
    })
}

fn moments(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let spec = cfg.spec()?;
    let tau = tau_in(need(cfg.tau, "tau")?, false)?;
    if cfg.m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()).into());
    }
    let ns = grid(cfg)?;
    let mut header = vec!["N", "m", "tau", "L", "moment", "target", "ratio", "status"];
    if cfg.mc_samples > 0 {
        header.extend(["mc_estimate", "mc_stderr"]);
    }
    let mut table = Table::new("", &header);
    let mut timing = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    for &n in &ns {
        let t = Instant::now();
        let l = (n as f64).powf(1.0 - tau);
        let pts = generate_points(&spec, n as usize);
        let res = pts
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|p| moment_exact(p, l, cfg.m as u32));
        let mut row = vec![n.to_string(), cfg.m.to_string(), num(tau), num(l)];
        match &res {
            Ok(s) => row.extend([num(s.exact_moment), num(s.target), num(s.ratio)]),
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 3)),
        }
        row.push(status(&res));
        if cfg.mc_samples > 0 {
            match (&pts, &res) {
                (Ok(p), Ok(_)) => {
                    let sorted = p.to_sorted();
                    let width = l / n as f64;
                    let mut s = modcorr_core::compensated::Sum::new();
                    let mut s2 = modcorr_core::compensated::Sum::new();
                    for _ in 0..cfg.mc_samples {
                        let y: f64 = rng.gen();
                        let w = count_window(&sorted, y, width)? as f64;
                        let v = w.powi(cfg.m as i32);
                        s.add(v);
                        s2.add(v * v);
                    }
                    let k = cfg.mc_samples as f64;
                    let mean = s.value() / k;
                    let var = (s2.value() / k - mean * mean).max(0.0);
                    row.extend([num(mean), num((var / k).sqrt())]);
                }
                _ => row.extend([String::new(), String::new()]),
            }
        }
        table.rows.push(row);
        timing.push((format!("N={n}"), t.elapsed().as_secs_f64()));
    }
    Ok(Outcome {
        tables: vec![table],
        timing,
        plot: gnuplot(&cfg.output, "N", "E[W^m] / L^m", "1:7", true),
    })
}

fn weyl(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let spec = cfg.spec()?;
    let n = need(cfg.n, "n")?;
    let k_max = need(cfg.k_max, "k_max")?;
    let scan = weyl_scan(&spec, n, k_max)?;
    let label = cfg.spec_label();
    let nf = n as f64;
    let mut table = Table::new(
        "",
        &[
            "spec",
            "N",
            "k",
            "magnitude",
            "bound",
            "ratio",
            "cum_abs",
            "cum_abs_bound",
            "cum_sq",
            "cum_sq_bound",
        ],
    );
    for (i, &mag) in scan.magnitudes.iter().enumerate() {
        let k = i as u64 + 1;
        let big_m = k as f64;
        let (bound, abs_b, sq_b) = match spec.family {
            Family::Sqrt if n >= 2 => (
                Some(bound_exponential(n, k, spec.alpha.to_f64())),
                Some(sqrt_abs_bound(big_m, nf)),
                Some(sqrt_square_bound(big_m, nf)),
            ),
            Family::Quadratic => (
                None,
                Some(quadratic_abs_bound(big_m, nf)),
                Some(quadratic_square_bound(big_m, nf)),
            ),
            _ => (None, None, None),
        };
        table.rows.push(vec![
            label.clone(),
            n.to_string(),
            k.to_string(),
            num(mag),
            opt_num(bound),
            opt_num(bound.map(|b| mag / b)),
            num(scan.cum_abs[i]),
            opt_num(abs_b),
            num(scan.cum_sq[i]),
            opt_num(sq_b),
        ]);
    }
    Ok(Outcome {
        tables: vec![table],
        timing: vec![("scan".into(), scan.elapsed)],
        plot: gnuplot(&cfg.output, "k", "|S(N,k)| / bound", "3:6", true),
    })
}

fn bprocess(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let spec = cfg.spec()?;
    if spec.family != Family::Sqrt {
        return Err(Error::InvalidInput("bprocess needs family = sqrt".into()).into());
    }
    let ns = grid(cfg)?;
    let ks = if !cfg.k_list.is_empty() {
        cfg.k_list.clone()
    } else {
        (1..=need(cfg.k_max, "k_list")?).collect()
    };
    if ks.contains(&0) || ns.iter().any(|&n| n < 2) {
        return Err(Error::InvalidInput("need k >= 1 and N >= 2".into()).into());
    }
    let label = cfg.spec_label();
    let mut header = vec!["spec", "N", "k", "bprocess_re", "bprocess_im", "budget"];
    if cfg.compare_direct {
        header.extend(["direct_re", "direct_im", "abs_diff", "bound", "ratio"]);
    }
    let mut table = Table::new("", &header);
    let mut timing = Vec::new();
    for &n in &ns {
        for &k in &ks {
            let bp = bprocess_sum(&spec, n, k)?;
            let mut row = vec![
                label.clone(),
                n.to_string(),
                k.to_string(),
                num(bp.value.re),
                num(bp.value.im),
                opt_num(bp.error_budget),
            ];
            if cfg.compare_direct {
                let d = weyl_sum_direct(&spec, n, k as i64)?;
                let diff = (d.value - bp.value).norm();
                let bound = bound_exponential(n, k, spec.alpha.to_f64());
                row.extend([
                    num(d.value.re),
                    num(d.value.im),
                    num(diff),
                    num(bound),
                    num(diff / bound),
                ]);
                timing.push((format!("N={n} k={k} direct"), d.elapsed));
            }
            timing.push((format!("N={n} k={k} bprocess"), bp.elapsed));
            table.rows.push(row);
        }
    }
    Ok(Outcome {
        tables: vec![table],
        timing,
        plot: gnuplot(&cfg.output, "k", "|direct - bprocess| / bound", "3:11", true),
    })
}

fn thresholds(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let spec = cfg.spec()?;
    let ns = grid(cfg)?;
    let taus = if !cfg.tau_list.is_empty() {
        cfg.tau_list.clone()
    } else {
        vec![need(cfg.tau, "tau_list")?]
    };
    for &t in &taus {
        tau_in(t, true)?;
    }
    let t0 = Instant::now();
    let cells = threshold_scan(&spec, cfg.m, &taus, &ns)?;
    let label = cfg.spec_label();
    let mut table = Table::new(
        "",
        &[
            "spec",
            "N",
            "m",
            "M",
            "tau",
            "threshold",
            "inside",
            "e_m",
            "e_m_minus_1",
            "combined",
            "status",
        ],
    );
    for c in &cells {
        let mut row = vec![
            label.clone(),
            c.n.to_string(),
            cfg.m.to_string(),
            cutoff_for(c.n, c.tau).to_string(),
            num(c.tau),
            opt_num(c.threshold),
            c.inside.map(|b| b.to_string()).unwrap_or_default(),
        ];
        match &c.result {
            Ok(r) => row.extend([num(r.e_m_rhs), num(r.per_level[1].1), num(r.combined)]),
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 3)),
        }
        row.push(status(&c.result));
        table.rows.push(row);
    }
    Ok(Outcome {
        tables: vec![table],
        timing: vec![("scan".into(), t0.elapsed().as_secs_f64())],
        plot: gnuplot(&cfg.output, "N", "E_m", "2:8", true),
    })
}

fn spi_sweep(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let n = need(cfg.n, "n")?;
    if cfg.k_list.is_empty() {
        return Err(ConfigError("missing required key \"k_list\"".into()).into());
    }
    if cfg.alpha.hi <= 0.0 || n < 2 || cfg.k_list.contains(&0) || cfg.r_stride == 0 {
        return Err(Error::InvalidInput("need alpha > 0, N >= 2, k >= 1 and r_stride >= 1".into()).into());
    }
    if !(cfg.tol >= 1e-12) {
        return Err(Error::InvalidInput(format!("tol must be at least 1e-12, got {}", cfg.tol)).into());
    }
    let alpha = cfg.alpha;
    let mut table = Table::new(
        "",
        &[
            "k",
            "r",
            "gamma",
            "leading_re",
            "leading_im",
            "oracle_re",
            "oracle_im",
            "envelope",
            "within_envelope",
        ],
    );
    let mut timing = Vec::new();
    for &k in &cfg.k_list {
        let range = truncated_poisson_range(k, alpha.to_f64(), n)?;
        let inside: Vec<i64> = range
            .r_list
            .iter()
            .copied()
            .filter(|&r| (r as f64) > range.a && (r as f64) < range.b)
            .step_by(cfg.r_stride)
            .collect();
        for r in inside {
            let t = Instant::now();
            let s = stationary_phase_leading(k, r, alpha, n)?;
            let o = oscillatory_integral_direct(k, r, alpha, 1.0, n as f64, cfg.tol)?;
            let within = (o - s.leading).norm() <= s.envelope;
            table.rows.push(vec![
                k.to_string(),
                r.to_string(),
                opt_num(s.gamma),
                num(s.leading.re),
                num(s.leading.im),
                num(o.re),
                num(o.im),
                num(s.envelope),
                within.to_string(),
            ]);
            timing.push((format!("k={k} r={r}"), t.elapsed().as_secs_f64()));
        }
    }
    Ok(Outcome {
        tables: vec![table],
        timing,
        plot: format!(
            "set datafile separator ','\nset logscale x\nset xlabel 'gamma'\nset ylabel 'Re'\nplot '{0}.csv' using 3:4 title 'leading' with points, '{0}.csv' using 3:6 title 'oracle' with points\n",
            cfg.output
        ),
    })
}
