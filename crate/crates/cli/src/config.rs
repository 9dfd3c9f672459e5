//! `key = value` experiment configs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use modcorr_core::testfn::{TestFunction1D, TestFunctionProduct};
use modcorr_core::{Family, Real2, SequenceSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Points,
    Correlate,
    Moments,
    Weyl,
    Bprocess,
    Thresholds,
    SpiSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Points => "points",
            Command::Correlate => "correlate",
            Command::Moments => "moments",
            Command::Weyl => "weyl",
            Command::Bprocess => "bprocess",
            Command::Thresholds => "thresholds",
            Command::SpiSweep => "spi-sweep",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        <Self as clap::ValueEnum>::value_variants()
            .iter()
            .copied()
            .find(|c| c.name() == s)
    }
}

/// Problems found while reading a config; the values themselves are
/// checked later against the library preconditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FnKind {
    Bump,
    Triangle,
    Box,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub command: Command,
    pub family: Family,
    /// Name or literal as written in the config.
    pub alpha_text: String,
    pub alpha: Real2,
    pub beta: f64,
    pub m: usize,
    pub tau: Option<f64>,
    pub tau_list: Vec<f64>,
    pub n: Option<u64>,
    pub n_grid: Vec<u64>,
    pub k_max: Option<u64>,
    pub k_list: Vec<u64>,
    pub big_m: Option<u64>,
    pub fn_kind: FnKind,
    pub fn_radius: f64,
    pub box_lo: f64,
    pub box_hi: f64,
    pub q_max: Option<u64>,
    pub mc_samples: usize,
    pub rng_seed: u64,
    pub compare_direct: bool,
    pub r_stride: usize,
    pub tol: f64,
    pub output: String,
    pub threads: Option<usize>,
    pub plot: bool,
    /// Normalized `key = value` lines, in file order.
    pub lines: Vec<(String, String)>,
}

const KEYS: &[&str] = &[
    "command",
    "family",
    "alpha",
    "beta",
    "m",
    "tau",
    "tau_list",
    "n",
    "n_grid",
    "k_max",
    "k_list",
    "big_m",
    "fn_kind",
    "fn_radius",
    "box_lo",
    "box_hi",
    "q_max",
    "mc_samples",
    "rng_seed",
    "compare_direct",
    "r_stride",
    "tol",
    "output",
    "threads",
    "plot",
];

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.parse()
        .map_err(|_| ConfigError(format!("{key}: cannot parse {raw:?}")))
}

fn list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| value(key, s))
        .collect()
}

/// Integer that may be written as `1e6`.
fn int(key: &str, raw: &str) -> Result<u64, ConfigError> {
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = value(key, raw)?;
    if f >= 0.0 && f.fract() == 0.0 && f < 9.0e15 {
        Ok(f as u64)
    } else {
        Err(ConfigError(format!("{key}: {raw:?} is not a nonnegative integer")))
    }
}

fn int_list(key: &str, raw: &str) -> Result<Vec<u64>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| int(key, s))
        .collect()
}

fn boolean(key: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError(format!("{key}: expected true or false, got {raw:?}"))),
    }
}

pub fn parse_alpha(raw: &str) -> Result<Real2, ConfigError> {
    Real2::named(raw).or_else(|| raw.parse().ok()).ok_or_else(|| {
        ConfigError(format!(
            "alpha: {raw:?} is neither a named constant nor a decimal literal"
        ))
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str, command: Command) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if !KEYS.contains(&k.as_str()) {
                return Err(ConfigError(format!("line {}: unknown key {k:?}", i + 1)));
            }
            if map.insert(k.clone(), v.clone()).is_some() {
                return Err(ConfigError(format!("line {}: duplicate key {k:?}", i + 1)));
            }
            lines.push((k, v));
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        if let Some(c) = get("command") {
            let named = Command::parse(c).ok_or_else(|| ConfigError(format!("command: unknown {c:?}")))?;
            if named != command {
                return Err(ConfigError(format!(
                    "config is for {c:?} but {:?} was requested",
                    command.name()
                )));
            }
        }
        let family = match get("family").unwrap_or("quadratic") {
            "quadratic" => Family::Quadratic,
            "sqrt" => Family::Sqrt,
            "power" => Family::Power,
            other => return Err(ConfigError(format!("family: unknown {other:?}"))),
        };
        let alpha_text = get("alpha").unwrap_or("sqrt2").to_string();
        let alpha = parse_alpha(&alpha_text)?;
        let fn_kind = match get("fn_kind").unwrap_or("bump") {
            "bump" => FnKind::Bump,
            "triangle" => FnKind::Triangle,
            "box" => FnKind::Box,
            other => return Err(ConfigError(format!("fn_kind: unknown {other:?}"))),
        };
        let opt_int = |k: &str| get(k).map(|v| int(k, v)).transpose();
        let opt_f64 = |k: &str| get(k).map(|v| value::<f64>(k, v)).transpose();
        Ok(ExperimentConfig {
            command,
            family,
            alpha_text,
            alpha,
            beta: opt_f64("beta")?.unwrap_or(0.5),
            m: opt_int("m")?.unwrap_or(2) as usize,
            tau: opt_f64("tau")?,
            tau_list: get("tau_list")
                .map(|v| list("tau_list", v))
                .transpose()?
                .unwrap_or_default(),
            n: opt_int("n")?,
            n_grid: get("n_grid")
                .map(|v| int_list("n_grid", v))
                .transpose()?
                .unwrap_or_default(),
            k_max: opt_int("k_max")?,
            k_list: get("k_list")
                .map(|v| int_list("k_list", v))
                .transpose()?
                .unwrap_or_default(),
            big_m: opt_int("big_m")?,
            fn_kind,
            fn_radius: opt_f64("fn_radius")?.unwrap_or(1.0),
            box_lo: opt_f64("box_lo")?.unwrap_or(-0.5),
            box_hi: opt_f64("box_hi")?.unwrap_or(0.5),
            q_max: opt_int("q_max")?,
            mc_samples: opt_int("mc_samples")?.unwrap_or(0) as usize,
            rng_seed: opt_int("rng_seed")?.unwrap_or(1),
            compare_direct: get("compare_direct")
                .map(|v| boolean("compare_direct", v))
                .transpose()?
                .unwrap_or(true),
            r_stride: opt_int("r_stride")?.unwrap_or(1) as usize,
            tol: opt_f64("tol")?.unwrap_or(1e-10),
            output: get("output").unwrap_or(command.name()).to_string(),
            threads: opt_int("threads")?.map(|t| t as usize),
            plot: get("plot").map(|v| boolean("plot", v)).transpose()?.unwrap_or(true),
            lines,
        })
    }

    pub fn spec(&self) -> modcorr_core::Result<SequenceSpec> {
        SequenceSpec::new(self.family, self.alpha, self.beta)
    }

    /// Label used in CSV `spec` columns.
    pub fn spec_label(&self) -> String {
        match self.family {
            Family::Power => format!("power(alpha={},beta={})", self.alpha_text, self.beta),
            f => format!("{}(alpha={})", f.name(), self.alpha_text),
        }
    }

    pub fn factor(&self) -> modcorr_core::Result<TestFunction1D> {
        match self.fn_kind {
            FnKind::Bump => TestFunction1D::bump(self.fn_radius),
            FnKind::Triangle => TestFunction1D::triangle(self.fn_radius),
            FnKind::Box => TestFunction1D::boxcar(self.box_lo, self.box_hi),
        }
    }

    pub fn test_function(&self) -> modcorr_core::Result<TestFunctionProduct> {
        TestFunctionProduct::repeated(self.factor()?, self.m.saturating_sub(1).max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let text = "# pair correlation\nfamily = sqrt\nalpha = sqrt3 # named\nn_grid = 1e3, 2000\ntau = 0.5\n";
        let c = ExperimentConfig::parse(text, Command::Correlate).unwrap();
        assert_eq!(c.family, Family::Sqrt);
        assert_eq!(c.alpha, Real2::sqrt3());
        assert_eq!(c.n_grid, vec![1000, 2000]);
        assert_eq!(c.tau, Some(0.5));
        assert_eq!(c.output, "correlate");
        assert_eq!(c.lines.len(), 4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::parse("bogus = 1", Command::Points).is_err());
        assert!(ExperimentConfig::parse("n 5", Command::Points).is_err());
        assert!(ExperimentConfig::parse("n = 1.5", Command::Points).is_err());
        assert!(ExperimentConfig::parse("n = 1\nn = 2", Command::Points).is_err());
        assert!(ExperimentConfig::parse("command = weyl", Command::Points).is_err());
        assert!(ExperimentConfig::parse("alpha = root2", Command::Points).is_err());
    }

    #[test]
    fn decimal_alpha() {
        let c = ExperimentConfig::parse("alpha = 1.25", Command::Points).unwrap();
        assert_eq!(c.alpha, Real2::from_f64(1.25));
        assert_eq!(c.spec_label(), "quadratic(alpha=1.25)");
    }
}
