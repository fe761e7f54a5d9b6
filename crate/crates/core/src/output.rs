//! CSV and JSON emission, and the two-column reader used by `fit`.
//!
//! CSV files start with `# key=value` metadata lines followed by one header
//! row. Floats are written with Rust's shortest round-trip formatting, so a
//! value read back parses to the identical `f64`. Missing values are empty
//! cells in CSV and `null` in JSON.

use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::engine::RunResult;
use crate::error::{Error, Result};
use crate::experiments::{BatchResult, GridPoint, SweepRow};
use crate::model::SimParams;
use crate::stats::{FitKind, FitResult};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format `{other}` (expected csv|json)"))),
        }
    }
}

/// Ordered key/value pairs describing how an output was produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metadata(Vec<(String, String)>);

impl Metadata {
    pub fn new(command: &str) -> Self {
        let mut m = Metadata::default();
        m.push("tool", concat!("trustdyn ", env!("CARGO_PKG_VERSION")));
        m.push("command", command);
        m
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.0.push((key.to_owned(), value.to_string()));
    }

    /// Records every run-affecting field of `params`. The seed is recorded
    /// separately by the caller since its meaning differs per command.
    pub fn params(&mut self, p: &SimParams) {
        self.push("n_users", p.n_users);
        self.push("comfort_level", p.comfort_level);
        self.push("capacity", opt(p.capacity));
        self.push("beta", p.beta);
        self.push("gamma", p.gamma);
        self.push("max_iterations", p.max_iterations);
        self.push("initial_trust", p.initial_trust);
        self.push("stay_rule", p.dynamics.stay_rule);
        self.push("trust_cap", p.dynamics.trust_cap);
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.0
    }

    fn to_json(&self) -> Value {
        Value::Object(
            self.0
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        )
    }
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Column names plus stringified rows.
struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    fn to_csv(&self, meta: &Metadata) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        for (k, v) in meta.entries() {
            // Metadata values never contain newlines; keep them on one line.
            writeln!(buf, "# {k}={}", v.replace('\n', " ")).expect("write to Vec");
        }
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| Error::Parse(e.to_string()))
    }
}

/// A rendered output: a primary document and optional companion files.
#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub primary: Vec<u8>,
    /// `(suffix, contents)`; the suffix is appended to the primary file stem.
    pub companions: Vec<(&'static str, Vec<u8>)>,
}

fn json_doc(meta: &Metadata, body: Value) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(&json!({ "metadata": meta.to_json(), "data": body }))?;
    v.push(b'\n');
    Ok(v)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

pub fn render_trajectory(meta: &Metadata, result: &RunResult, format: Format) -> Result<Rendered> {
    let primary = match format {
        Format::Csv => Table {
            header: &["t", "attendance", "avg_trust"],
            rows: result
                .trajectory
                .iter()
                .map(|s| vec![s.t.to_string(), s.attendance.to_string(), s.avg_trust.to_string()])
                .collect(),
        }
        .to_csv(meta)?,
        Format::Json => json_doc(meta, to_value(result)?)?,
    };
    Ok(Rendered {
        primary,
        companions: vec![],
    })
}

pub fn render_batch(meta: &Metadata, batch: &BatchResult, format: Format) -> Result<Rendered> {
    let primary = match format {
        Format::Csv => {
            let mut meta = meta.clone();
            meta.push("runs_converged", batch.converged_count);
            meta.push("i2c_mean", opt(batch.i2c_mean));
            meta.push("i2c_stddev", opt(batch.i2c_stddev));
            Table {
                header: &["rep", "seed", "converged", "t_star", "final_avg_trust"],
                rows: batch
                    .runs
                    .iter()
                    .map(|r| {
                        vec![
                            r.index.to_string(),
                            r.seed.to_string(),
                            r.converged.to_string(),
                            opt(r.t_star),
                            r.final_avg_trust.to_string(),
                        ]
                    })
                    .collect(),
            }
            .to_csv(&meta)?
        }
        Format::Json => json_doc(meta, to_value(batch)?)?,
    };
    Ok(Rendered {
        primary,
        companions: vec![],
    })
}

pub fn render_n_sweep(meta: &Metadata, rows: &[SweepRow], format: Format) -> Result<Rendered> {
    let mut table = Vec::with_capacity(rows.len());
    let mut json_rows = Vec::with_capacity(rows.len());
    for row in rows {
        let GridPoint::Users { n, l } = row.point else {
            return Err(Error::domain("user-count table given an attitude sweep row"));
        };
        let b = &row.batch;
        table.push(vec![
            n.to_string(),
            l.to_string(),
            b.converged_count.to_string(),
            opt(b.i2c_mean),
            opt(b.i2c_stddev),
        ]);
        json_rows.push(json!({
            "n": n,
            "l": l,
            "runs_converged": b.converged_count,
            "i2c_mean": b.i2c_mean,
            "i2c_stddev": b.i2c_stddev,
        }));
    }
    let primary = match format {
        Format::Csv => Table {
            header: &["n", "l", "runs_converged", "i2c_mean", "i2c_stddev"],
            rows: table,
        }
        .to_csv(meta)?,
        Format::Json => json_doc(meta, Value::Array(json_rows))?,
    };
    Ok(Rendered {
        primary,
        companions: vec![],
    })
}

/// Attitude sweep table plus the per-run terminal trusts of non-converged
/// runs. In CSV the latter is a companion file with suffix `_distributions`.
pub fn render_phi_sweep(meta: &Metadata, rows: &[SweepRow], format: Format) -> Result<Rendered> {
    let mut table = Vec::with_capacity(rows.len());
    let mut dists = Vec::new();
    let mut json_rows = Vec::with_capacity(rows.len());
    for row in rows {
        let GridPoint::Attitude { phi, gamma } = row.point else {
            return Err(Error::domain("attitude table given a user-count sweep row"));
        };
        let b = &row.batch;
        table.push(vec![
            phi.to_string(),
            gamma.to_string(),
            b.converged_count.to_string(),
            opt(b.i2c_mean),
        ]);
        dists.extend(b.final_avg_trusts.iter().map(|v| vec![phi.to_string(), v.to_string()]));
        json_rows.push(json!({
            "phi": phi,
            "gamma": gamma,
            "runs_converged": b.converged_count,
            "i2c_mean_converged": b.i2c_mean,
            "final_avg_trusts": b.final_avg_trusts,
        }));
    }
    Ok(match format {
        Format::Csv => Rendered {
            primary: Table {
                header: &["phi", "gamma", "runs_converged", "i2c_mean_converged"],
                rows: table,
            }
            .to_csv(meta)?,
            companions: vec![(
                "_distributions",
                Table {
                    header: &["phi", "final_avg_trust"],
                    rows: dists,
                }
                .to_csv(meta)?,
            )],
        },
        Format::Json => Rendered {
            primary: json_doc(meta, Value::Array(json_rows))?,
            companions: vec![],
        },
    })
}

pub fn render_fit(meta: &Metadata, fit: &FitResult, format: Format) -> Result<Rendered> {
    let primary = match format {
        Format::Csv => {
            let (header, kind): (&'static [&'static str], _) = match fit.kind {
                FitKind::PowerLaw => (&["kind", "a", "b", "r_squared"], "power_law"),
                FitKind::Quadratic => (&["kind", "c2", "c1", "c0", "r_squared"], "quadratic"),
            };
            let mut row = vec![kind.to_owned()];
            row.extend(fit.coefficients.iter().map(f64::to_string));
            row.push(fit.r_squared.to_string());
            Table {
                header,
                rows: vec![row],
            }
            .to_csv(meta)?
        }
        Format::Json => json_doc(meta, to_value(fit)?)?,
    };
    Ok(Rendered {
        primary,
        companions: vec![],
    })
}

/// Path of a companion file: `dir/stem<suffix>.ext`.
pub fn companion_path(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
    let name = match primary.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    primary.with_file_name(name)
}

/// Writes a rendered output to `path`, or to stdout when `path` is `None`
/// (companions follow the primary document, separated by a blank line).
pub fn emit(rendered: &Rendered, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, &rendered.primary).map_err(|e| Error::io(p, e))?;
            for (suffix, body) in &rendered.companions {
                let cp = companion_path(p, suffix);
                fs::write(&cp, body).map_err(|e| Error::io(cp, e))?;
            }
        }
        None => {
            let mut out = std::io::stdout().lock();
            let io = |e| Error::io("<stdout>", e);
            out.write_all(&rendered.primary).map_err(io)?;
            for (_, body) in &rendered.companions {
                out.write_all(b"\n").map_err(io)?;
                out.write_all(body).map_err(io)?;
            }
            out.flush().map_err(io)?;
        }
    }
    Ok(())
}

/// Reads `(x, y)` pairs from a CSV with a header row. `#` lines are skipped.
/// Columns default to the first two; rows where either cell is empty are
/// skipped (a sweep point without converged runs has no mean).
pub fn read_points(csv_text: &str, x_col: Option<&str>, y_col: Option<&str>) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = rdr.headers()?.clone();
    let find = |name: Option<&str>, default: usize| -> Result<usize> {
        match name {
            Some(n) => headers
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::Parse(format!("no column named `{n}`"))),
            None if default < headers.len() => Ok(default),
            None => Err(Error::Parse(format!(
                "need at least two columns, found {}",
                headers.len()
            ))),
        }
    };
    let xi = find(x_col, 0)?;
    let yi = find(y_col, 1)?;
    let mut points = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (Some(xs), Some(ys)) = (rec.get(xi), rec.get(yi)) else {
            return Err(Error::Parse(format!("record {} is too short", line + 1)));
        };
        if xs.is_empty() || ys.is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("record {}: `{s}`: {e}", line + 1)))
        };
        points.push((parse(xs)?, parse(ys)?));
    }
    Ok(points)
}

pub fn read_points_file(path: &Path, x_col: Option<&str>, y_col: Option<&str>) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_points(&text, x_col, y_col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::StepStats;

    #[test]
    fn empty_trajectory_is_header_only() {
        let r = RunResult {
            converged: false,
            t_star: None,
            trajectory: vec![],
            final_trusts: vec![0.5],
        };
        let out = render_trajectory(&Metadata::new("simulate"), &r, Format::Csv).unwrap();
        let text = String::from_utf8(out.primary).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec!["t,attendance,avg_trust"]);
    }

    #[test]
    fn floats_round_trip() {
        let v = 0.1 + 0.2;
        let r = RunResult {
            converged: false,
            t_star: None,
            trajectory: vec![StepStats {
                t: 1,
                attendance: 3,
                avg_trust: v,
            }],
            final_trusts: vec![v],
        };
        let out = render_trajectory(&Metadata::new("simulate"), &r, Format::Csv).unwrap();
        let pts = read_points(std::str::from_utf8(&out.primary).unwrap(), Some("t"), Some("avg_trust")).unwrap();
        assert_eq!(pts, vec![(1.0, v)]);
    }

    #[test]
    fn read_points_selects_and_skips() {
        let text = "# a=b\nn,l,i2c\n20,12,64.5\n40,24,\n60,36,88\n";
        assert_eq!(
            read_points(text, Some("n"), Some("i2c")).unwrap(),
            vec![(20.0, 64.5), (60.0, 88.0)]
        );
        assert_eq!(read_points(text, None, None).unwrap().len(), 3);
        assert!(read_points(text, Some("zzz"), None).is_err());
        assert!(read_points("x\n1\n", None, None).is_err());
        assert!(read_points("x,y\n1,abc\n", None, None).is_err());
    }

    #[test]
    fn companion_naming() {
        assert_eq!(
            companion_path(Path::new("out/exp2.csv"), "_distributions"),
            PathBuf::from("out/exp2_distributions.csv")
        );
        assert_eq!(
            companion_path(Path::new("exp2"), "_distributions"),
            PathBuf::from("exp2_distributions")
        );
    }
}
