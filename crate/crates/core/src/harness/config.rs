use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the expected number of points per replication.
pub const DEFAULT_MAX_EXPECTED_POINTS: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Parallelism {
    Auto,
    Threads(usize),
}

impl Parallelism {
    /// Thread count for a rayon pool; 0 lets rayon decide.
    pub fn threads(self) -> usize {
        match self {
            Parallelism::Auto => 0,
            Parallelism::Threads(t) => t,
        }
    }
}

impl fmt::Display for Parallelism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parallelism::Auto => f.write_str("auto"),
            Parallelism::Threads(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for Parallelism {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Parallelism::Auto);
        }
        match s.parse::<usize>() {
            Ok(t) if t > 0 => Ok(Parallelism::Threads(t)),
            _ => Err(format!(
                "parallelism must be `auto` or a positive integer, got `{s}`"
            )),
        }
    }
}

impl From<Parallelism> for String {
    fn from(p: Parallelism) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Parallelism {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

/// Parses a 64-bit seed in decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> std::result::Result<u64, String> {
    let t = s.trim().replace('_', "");
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse::<u64>(),
    };
    parsed.map_err(|e| format!("bad seed `{s}`: {e}"))
}

/// Full input of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub m: usize,
    /// Side of the observation cube `[-n/2, n/2]^m`.
    pub n: f64,
    pub lambda: f64,
    pub r: f64,
    pub theta: f64,
    pub reps: u64,
    pub master_seed: u64,
    pub compute_local: bool,
    pub compute_e3: bool,
    pub oracle_check: bool,
    pub parallelism: Parallelism,
    pub max_expected_points: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            m: 2,
            n: 40.0,
            lambda: 2.0,
            r: 1.0,
            theta: 4.0,
            reps: 100,
            master_seed: 0,
            compute_local: true,
            compute_e3: true,
            oracle_check: false,
            parallelism: Parallelism::Auto,
            max_expected_points: DEFAULT_MAX_EXPECTED_POINTS,
        }
    }
}

pub const CONFIG_KEYS: [&str; 12] = [
    "m",
    "n",
    "lambda",
    "r",
    "theta",
    "reps",
    "master_seed",
    "compute_local",
    "compute_e3",
    "oracle_check",
    "parallelism",
    "max_expected_points",
];

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

fn parse_num<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::invalid(format!("m must be >= 2, got {}", self.m)));
        }
        if !(self.n.is_finite() && self.n > 1.0) {
            return Err(Error::invalid(format!("n must exceed 1, got {}", self.n)));
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("r", self.r),
            ("theta", self.theta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.reps == 0 {
            return Err(Error::invalid("reps must be a positive integer"));
        }
        if self.parallelism == Parallelism::Threads(0) {
            return Err(Error::invalid("parallelism must be positive"));
        }
        if !(self.max_expected_points > 0.0) {
            return Err(Error::invalid("max_expected_points must be positive"));
        }
        let expected = self.expected_points();
        if expected > self.max_expected_points {
            return Err(Error::ResourceLimit {
                expected,
                cap: self.max_expected_points,
            });
        }
        Ok(())
    }

    /// `lambda * n^m`.
    pub fn expected_points(&self) -> f64 {
        self.lambda * self.n.powi(self.m as i32)
    }

    /// Sets one field from its textual value; `key` may use `_` or `-`.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "m" => self.m = parse_num(v)?,
            "n" => self.n = parse_num(v)?,
            "lambda" => self.lambda = parse_num(v)?,
            "r" => self.r = parse_num(v)?,
            "theta" => self.theta = parse_num(v)?,
            "reps" => self.reps = parse_num(v)?,
            "master_seed" | "seed" => self.master_seed = parse_seed(v)?,
            "compute_local" => self.compute_local = parse_bool(v)?,
            "compute_e3" => self.compute_e3 = parse_bool(v)?,
            "oracle_check" => self.oracle_check = parse_bool(v)?,
            "parallelism" => self.parallelism = v.parse()?,
            "max_expected_points" => self.max_expected_points = parse_num(v)?,
            other => return Err(format!("unknown config key `{other}`")),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and `#`
    /// comments are ignored.
    pub fn apply_key_values(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(k, v)
                .map_err(|msg| Error::Config { line: idx + 1, msg })?;
        }
        Ok(())
    }

    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        c.apply_key_values(text)?;
        Ok(c)
    }

    /// Renders the config in the same `key = value` format it is read from.
    pub fn to_key_values(&self) -> String {
        format!(
            "m = {}\nn = {:?}\nlambda = {:?}\nr = {:?}\ntheta = {:?}\nreps = {}\nmaster_seed = {}\n\
             compute_local = {}\ncompute_e3 = {}\noracle_check = {}\nparallelism = {}\n\
             max_expected_points = {:?}\n",
            self.m,
            self.n,
            self.lambda,
            self.r,
            self.theta,
            self.reps,
            self.master_seed,
            self.compute_local,
            self.compute_e3,
            self.oracle_check,
            self.parallelism,
            self.max_expected_points,
        )
    }
}
