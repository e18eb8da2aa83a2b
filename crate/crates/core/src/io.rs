//! Parsing of operator, cone, vector and input-signal files, and writers for
//! JSON reports and CSV plot data.

use std::io;
use std::path::Path;

use serde::Serialize;

use crate::cones::ConeSpec;
use crate::error::{Error, Result};
use crate::iss::{DatkoResult, InputSignal, Trajectory};
use crate::operators::{OperatorSpec, MAX_DIM};

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        field: (e.column() > 0).then_some(e.column()),
        message: e.to_string(),
    }
}

/// Lifts a validation error raised after structural parsing to a parse
/// error, so callers get one error shape for bad input.
fn invalid(e: Error) -> Error {
    match e {
        Error::Parse { .. } => e,
        other => Error::Parse {
            line: 1,
            field: None,
            message: other.to_string(),
        },
    }
}

pub fn parse_operator_json(text: &str) -> Result<OperatorSpec> {
    serde_json::from_str(text).map_err(json_error)
}

/// Dense matrix, one row per line. Blank lines and lines starting with `#`
/// are skipped.
pub fn parse_operator_csv(text: &str) -> Result<OperatorSpec> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            field: None,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() > MAX_DIM {
            return Err(Error::Parse {
                line,
                field: None,
                message: format!("row has {} fields, more than {MAX_DIM}", record.len()),
            });
        }
        let mut row = Vec::with_capacity(record.len());
        for (j, f) in record.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line,
                field: Some(j + 1),
                message: format!("'{f}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    field: Some(j + 1),
                    message: format!("'{f}' is not finite"),
                });
            }
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line,
                    field: None,
                    message: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
        if rows.len() > MAX_DIM {
            return Err(Error::Parse {
                line,
                field: None,
                message: format!("more than {MAX_DIM} rows"),
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            field: None,
            message: "no rows".into(),
        });
    }
    OperatorSpec::dense_from_rows(&rows).map_err(invalid)
}

pub fn parse_cone_json(text: &str) -> Result<ConeSpec> {
    let c: ConeSpec = serde_json::from_str(text).map_err(json_error)?;
    if c.dim > MAX_DIM {
        return Err(invalid(Error::InvalidArgument(format!("cone dimension {} exceeds {MAX_DIM}", c.dim))));
    }
    ConeSpec::new(c.kind, c.dim, c.norm).map_err(invalid)
}

pub fn parse_input_signal_json(text: &str) -> Result<InputSignal> {
    let s: InputSignal = serde_json::from_str(text).map_err(json_error)?;
    if s.dim().is_some_and(|d| d > MAX_DIM) {
        return Err(invalid(Error::InvalidArgument(format!("input dimension exceeds {MAX_DIM}"))));
    }
    s.validate().map_err(invalid)?;
    Ok(s)
}

/// A vector given as a JSON array or as numbers separated by commas or
/// whitespace.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let trimmed = text.trim();
    let v: Vec<f64> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(json_error)?
    } else {
        let mut out = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let fields = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty());
            for (j, f) in fields.enumerate() {
                let v: f64 = f.parse().map_err(|_| Error::Parse {
                    line: ln + 1,
                    field: Some(j + 1),
                    message: format!("'{f}' is not a number"),
                })?;
                out.push(v);
                if out.len() > MAX_DIM {
                    return Err(Error::Parse {
                        line: ln + 1,
                        field: Some(j + 1),
                        message: format!("more than {MAX_DIM} entries"),
                    });
                }
            }
        }
        out
    };
    if v.is_empty() {
        return Err(Error::Parse {
            line: 1,
            field: None,
            message: "empty vector".into(),
        });
    }
    if v.len() > MAX_DIM {
        return Err(invalid(Error::InvalidArgument(format!("more than {MAX_DIM} entries"))));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::Parse {
            line: 1,
            field: Some(i + 1),
            message: "entry is not finite".into(),
        });
    }
    Ok(v)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

/// Operator from a file; `.csv` files are read as dense rows, anything else
/// as operator JSON.
pub fn read_operator(path: &Path) -> Result<OperatorSpec> {
    let text = read(path)?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        parse_operator_csv(&text)
    } else {
        parse_operator_json(&text)
    }
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    parse_vector(&read(path)?)
}

pub fn read_input_signal(path: &Path) -> Result<InputSignal> {
    parse_input_signal_json(&read(path)?)
}

/// Writes floats as `{:.16e}`, 17 significant digits, which round-trips
/// every finite `f64` and keeps reports byte-stable.
struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt_f64(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn fmt_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        // JSON has no literal for these; serde_json writes null too
        "null".to_string()
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

pub fn to_json_value<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    serde_json::from_str(&to_json_string(value)?).map_err(json_error)
}

fn csv_string(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("write to memory");
    for r in rows {
        w.write_record(&r).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("UTF-8")
}

/// `step, x1..xn, norm` per row.
pub fn trajectory_csv(t: &Trajectory) -> String {
    let n = t.states.first().map_or(0, Vec::len);
    let mut header = vec!["step".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.push("norm".into());
    let rows = t
        .states
        .iter()
        .zip(&t.norms)
        .enumerate()
        .map(|(k, (x, nv))| {
            let mut r = vec![k.to_string()];
            r.extend(x.iter().map(|v| fmt_f64(*v)));
            r.push(fmt_f64(*nv));
            r
        })
        .collect();
    csv_string(header, rows)
}

/// `step, partial_sum` per recorded checkpoint.
pub fn datko_csv(d: &DatkoResult) -> String {
    let rows = d
        .partial_sums
        .iter()
        .map(|(k, s)| vec![k.to_string(), fmt_f64(*s)])
        .collect();
    csv_string(vec!["step".into(), "partial_sum".into()], rows)
}
