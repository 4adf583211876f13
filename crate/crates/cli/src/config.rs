//! Flat `key=value` run configuration shared by the config file and the flags.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use critnls::io::format_f64;
use critnls::{Error, Exponent};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Theorem1,
    Theorem3,
    Envelope,
    Mass,
}

impl CheckKind {
    pub const ALL: [CheckKind; 4] = [
        CheckKind::Theorem1,
        CheckKind::Theorem3,
        CheckKind::Envelope,
        CheckKind::Mass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Theorem1 => "theorem1",
            CheckKind::Theorem3 => "theorem3",
            CheckKind::Envelope => "envelope",
            CheckKind::Mass => "mass",
        }
    }
}

impl FromStr for CheckKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        CheckKind::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| format!("unknown check `{s}` (theorem1, theorem3, envelope, mass)"))
    }
}

/// Every field is optional here; commands apply their own defaults.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub dim: Option<u32>,
    pub q: Option<Exponent>,
    pub lambda: Option<f64>,
    pub lambda_window: Option<(f64, f64)>,
    pub points_per_decade: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub report: Option<PathBuf>,
    pub checks: Option<Vec<CheckKind>>,
    pub input: Option<PathBuf>,
    pub prefactor: Option<f64>,
}

pub const KEYS: [&str; 12] = [
    "dim",
    "q",
    "lambda",
    "lambda_window",
    "points_per_decade",
    "tol",
    "out",
    "jobs",
    "report",
    "checks",
    "input",
    "prefactor",
];

fn number<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("`{key}`: cannot parse `{v}`"))
}

fn float(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = number(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{key}` must be finite"))
    }
}

pub fn parse_window(v: &str) -> Result<(f64, f64), String> {
    let (a, b) = v
        .split_once(':')
        .ok_or_else(|| format!("lambda window `{v}` is not of the form a:b"))?;
    let (a, b) = (float("lambda_window", a.trim())?, float("lambda_window", b.trim())?);
    if !(a > 0.0 && b > a) {
        return Err(format!("lambda window needs 0 < a < b, got {a}:{b}"));
    }
    Ok((a, b))
}

impl RunConfig {
    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "dim" => self.dim = Some(number(key, v)?),
            "q" => self.q = Some(v.parse().map_err(|e: Error| e.to_string())?),
            "lambda" => self.lambda = Some(float(key, v)?),
            "lambda_window" => self.lambda_window = Some(parse_window(v)?),
            "points_per_decade" => self.points_per_decade = Some(number(key, v)?),
            "tol" => self.tol = Some(float(key, v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            "jobs" => self.jobs = Some(number(key, v)?),
            "report" => self.report = Some(PathBuf::from(v)),
            "checks" => {
                self.checks = Some(
                    v.split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(str::parse)
                        .collect::<Result<_, _>>()?,
                )
            }
            "input" => self.input = Some(PathBuf::from(v)),
            "prefactor" => self.prefactor = Some(float(key, v)?),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, got `{line}`")))?;
            cfg.set(k.trim(), v).map_err(parse_err)?;
        }
        Ok(cfg)
    }

    /// Values set in `other` win.
    pub fn merged(self, other: RunConfig) -> RunConfig {
        RunConfig {
            dim: other.dim.or(self.dim),
            q: other.q.or(self.q),
            lambda: other.lambda.or(self.lambda),
            lambda_window: other.lambda_window.or(self.lambda_window),
            points_per_decade: other.points_per_decade.or(self.points_per_decade),
            tol: other.tol.or(self.tol),
            out: other.out.or(self.out),
            jobs: other.jobs.or(self.jobs),
            report: other.report.or(self.report),
            checks: other.checks.or(self.checks),
            input: other.input.or(self.input),
            prefactor: other.prefactor.or(self.prefactor),
        }
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let path = |p: &PathBuf| p.display().to_string();
        let mut e = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                e.push((k, v));
            }
        };
        push("dim", self.dim.map(|d| d.to_string()));
        push("q", self.q.map(|q| q.to_string()));
        push("lambda", self.lambda.map(format_f64));
        push(
            "lambda_window",
            self.lambda_window
                .map(|(a, b)| format!("{}:{}", format_f64(a), format_f64(b))),
        );
        push("points_per_decade", self.points_per_decade.map(|n| n.to_string()));
        push("tol", self.tol.map(format_f64));
        push("out", self.out.as_ref().map(path));
        push("jobs", self.jobs.map(|n| n.to_string()));
        push("report", self.report.as_ref().map(path));
        push(
            "checks",
            self.checks
                .as_ref()
                .map(|c| c.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")),
        );
        push("input", self.input.as_ref().map(path));
        push("prefactor", self.prefactor.map(format_f64));
        e
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}
