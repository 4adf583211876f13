//! Persistence: sweep and mass tables as CSV, reports and profiles as JSON.
//!
//! Floats are written with 17 significant digits so that files round-trip
//! bit for bit. Every write goes to a temporary file that is then renamed.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::asymptotics::{dilate_norms, Sweep, SweepRecord};
use crate::error::{Error, Result};
use crate::functionals::NormSet;
use crate::mass::MassRow;
use crate::params::{Exponent, ProblemParams};

pub const SWEEP_HEADER: [&str; 11] = [
    "lambda", "mu0", "grad_sq", "l2_sq", "lq", "lcrit", "m_lambda", "delta", "tau", "xi", "status",
];
pub const MASS_HEADER: [&str; 5] = ["rho", "omega", "m_rho", "lambda", "lambda_model"];

/// 17 significant digits; `+∞` as `infinite`, NaN as an empty field.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x == f64::INFINITY {
        "infinite".into()
    } else if x == f64::NEG_INFINITY {
        "-infinite".into()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_field(s: &str, column: &str, line: usize) -> Result<f64> {
    match s.trim() {
        "" => Ok(f64::NAN),
        "infinite" => Ok(f64::INFINITY),
        "-infinite" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| Error::Parse {
            line,
            message: format!("column `{column}`: `{t}` is not a number"),
        }),
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io {
            path: path.to_path_buf(),
            source: io::Error::new(io::ErrorKind::InvalidInput, "not a file path"),
        })?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Pretty JSON with floats at 17 significant digits.
struct SigFigs(PrettyFormatter<'static>);

impl Formatter for SigFigs {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigs(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(|e| Error::Parse {
        line: 0,
        message: format!("json serialization failed: {e}"),
    })?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_string(value)?.as_bytes())
}

fn csv_bytes(comments: &[String], header: &[&str], rows: Vec<Vec<String>>) -> Vec<u8> {
    let mut out = Vec::new();
    for c in comments {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

pub fn sweep_to_csv(sweep: &Sweep) -> String {
    let rows = sweep
        .records
        .iter()
        .map(|r| {
            let mut row: Vec<String> = [
                r.lambda,
                r.mu0,
                r.norms_u.grad_sq,
                r.norms_u.l2_sq,
                r.norms_u.lq,
                r.norms_u.lcrit,
                r.m_lambda,
                r.delta,
                r.tau,
                r.xi.unwrap_or(f64::NAN),
            ]
            .iter()
            .map(|&x| format_f64(x))
            .collect();
            row.push(r.status.clone());
            row
        })
        .collect();
    let comments = [format!("dim={}", sweep.dim), format!("q={}", sweep.q)];
    String::from_utf8(csv_bytes(&comments, &SWEEP_HEADER, rows)).expect("ascii")
}

pub fn write_sweep_csv(path: &Path, sweep: &Sweep) -> Result<()> {
    write_atomic(path, sweep_to_csv(sweep).as_bytes())
}

/// Leading `# key=value` lines and the line count they occupy.
fn split_comments(text: &str) -> (Vec<(String, String)>, usize, &str) {
    let mut meta = Vec::new();
    let mut offset = 0;
    let mut consumed = 0;
    for line in text.split_inclusive('\n') {
        let t = line.trim();
        if !t.starts_with('#') {
            break;
        }
        if let Some((k, v)) = t.trim_start_matches('#').trim().split_once('=') {
            meta.push((k.trim().to_string(), v.trim().to_string()));
        }
        offset += 1;
        consumed += line.len();
    }
    (meta, offset, &text[consumed..])
}

fn meta_value<'a>(meta: &'a [(String, String)], key: &str) -> Result<&'a str> {
    meta.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing `# {key}=` comment line"),
        })
}

pub fn parse_sweep_csv(text: &str) -> Result<Sweep> {
    let (meta, offset, body) = split_comments(text);
    let dim: u32 = meta_value(&meta, "dim")?.parse().map_err(|_| Error::Parse {
        line: 1,
        message: "bad `dim` comment".into(),
    })?;
    let q: Exponent = meta_value(&meta, "q")?.parse().map_err(|e: Error| Error::Parse {
        line: 2,
        message: e.to_string(),
    })?;
    ProblemParams::new(dim, q, 1.0)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        line: offset + 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != SWEEP_HEADER {
        return Err(Error::Parse {
            line: offset + 1,
            message: format!("expected header `{}`", SWEEP_HEADER.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: offset + e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = offset + row.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| parse_field(&row[i], SWEEP_HEADER[i], line);
        let lambda = num(0)?;
        if !(lambda > 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("lambda must be positive, got `{}`", &row[0]),
            });
        }
        let norms_u = NormSet {
            grad_sq: num(2)?,
            l2_sq: num(3)?,
            lq: num(4)?,
            lcrit: num(5)?,
        };
        let xi = Some(num(9)?).filter(|x| !x.is_nan());
        let params = ProblemParams { dim, q, lambda };
        let e = params.exponents();
        let alpha = lambda.powf(1.0 / (params.q() - 2.0));
        records.push(SweepRecord {
            lambda,
            mu0: num(1)?,
            norms_u,
            norms_v: dilate_norms(&norms_u, dim, params.q(), alpha, lambda.powf(0.5 * e.sigma)),
            norms_w: xi.map(|t| dilate_norms(&norms_u, dim, params.q(), t.powf(e.s), t)),
            m_lambda: num(6)?,
            delta: num(7)?,
            tau: num(8)?,
            xi,
            status: row[10].trim().to_string(),
            message: None,
        });
    }
    Ok(Sweep { dim, q, records })
}

pub fn read_sweep_csv(path: &Path) -> Result<Sweep> {
    parse_sweep_csv(&read_to_string(path)?)
}

pub fn mass_to_csv(dim: u32, q: Exponent, prefactor: f64, rows: &[MassRow]) -> String {
    let body = rows
        .iter()
        .map(|r| {
            [
                r.point.rho,
                r.point.omega,
                r.point.m_rho,
                r.point.lambda,
                r.lambda_model,
            ]
            .iter()
            .map(|&x| format_f64(x))
            .collect()
        })
        .collect();
    let comments = [
        format!("dim={dim}"),
        format!("q={q}"),
        format!("model_prefactor={}", format_f64(prefactor)),
    ];
    String::from_utf8(csv_bytes(&comments, &MASS_HEADER, body)).expect("ascii")
}
