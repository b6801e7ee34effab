//! Columnar text data files.
//!
//! ```text
//! # format: g2lab/interferogram/1
//! # key: value
//! # columns: delay<TAB>signal<TAB>stderr
//! -1.5e2<TAB>6.0e0<TAB>1.2e-2
//! ```
//!
//! UTF-8, `#`-prefixed `key: value` header lines, then one record per line
//! with fields separated by a single tab. Floats use Rust's shortest
//! round-trip exponent notation, so values survive a write/read cycle exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex;

use crate::dsp::{G2Curve, G2Method};
use crate::error::{Error, Result};
use crate::optics::Interferogram;
use crate::scalar::Real;

pub const FORMAT_KEY: &str = "format";
pub const COLUMNS_KEY: &str = "columns";

/// Parsed data file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        let mut meta = BTreeMap::new();
        meta.insert(FORMAT_KEY.to_string(), format!("g2lab/{kind}/1"));
        Self {
            meta,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn kind(&self) -> Option<&str> {
        self.meta
            .get(FORMAT_KEY)?
            .strip_prefix("g2lab/")?
            .strip_suffix("/1")
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        // format first, then the remaining keys in sorted order
        if let Some(f) = self.meta.get(FORMAT_KEY) {
            let _ = writeln!(out, "# {FORMAT_KEY}: {f}");
        }
        for (k, v) in self.meta.iter().filter(|(k, _)| k.as_str() != FORMAT_KEY) {
            let _ = writeln!(out, "# {k}: {}", v.replace(['\n', '\t'], " "));
        }
        let _ = writeln!(out, "# {COLUMNS_KEY}: {}", self.columns.join("\t"));
        for row in &self.rows {
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table = Table::default();
        let mut in_header = true;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if let Some(rest) = line.strip_prefix('#') {
                if !in_header {
                    return Err(Error::Format {
                        line: lineno,
                        reason: "header line after data".into(),
                    });
                }
                let rest = rest.strip_prefix(' ').unwrap_or(rest);
                let Some((k, v)) = rest.split_once(": ").or_else(|| rest.split_once(':')) else {
                    return Err(Error::Format {
                        line: lineno,
                        reason: "header must be `# key: value`".into(),
                    });
                };
                if k == COLUMNS_KEY {
                    table.columns = v.split('\t').map(str::to_string).collect();
                } else {
                    table.meta.insert(k.trim().to_string(), v.to_string());
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            in_header = false;
            if table.columns.is_empty() {
                return Err(Error::Format {
                    line: lineno,
                    reason: "data before `# columns:` header".into(),
                });
            }
            let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
            if fields.len() != table.columns.len() {
                return Err(Error::Format {
                    line: lineno,
                    reason: format!(
                        "expected {} fields, found {}",
                        table.columns.len(),
                        fields.len()
                    ),
                });
            }
            table.rows.push(fields);
        }
        Ok(table)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Format {
                line: 0,
                reason: format!("missing column `{name}`"),
            })
    }

    /// Numeric column; the header occupies no data line numbers, so errors
    /// report the record index.
    pub fn numeric<T: FromStr>(&self, name: &str) -> Result<Vec<T>> {
        let idx = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[idx].parse().map_err(|_| Error::Format {
                    line: i + 1,
                    reason: format!("`{}` is not a number in column `{name}`", r[idx]),
                })
            })
            .collect()
    }

    pub fn meta_number<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.meta.get(key).ok_or_else(|| Error::Format {
            line: 0,
            reason: format!("missing header `{key}`"),
        })?;
        raw.parse().map_err(|_| Error::Format {
            line: 0,
            reason: format!("header `{key}` is not a number"),
        })
    }
}

pub fn num<T: Real>(x: T) -> String {
    format!("{x:e}")
}

fn opt_num<T: Real>(x: Option<T>) -> String {
    x.map(num).unwrap_or_else(|| "NaN".into())
}

pub fn interferogram_table<T: Real>(ig: &Interferogram<T>) -> Table {
    let mut t = Table::new("interferogram", &["delay", "signal", "stderr"]);
    for (k, v) in &ig.meta {
        t.set(k, v);
    }
    t.set("carrier", num(ig.carrier));
    t.set("single_arm_level", num(ig.single_arm_level));
    for ((d, s), e) in ig.delays.iter().zip(&ig.signal).zip(&ig.signal_stderr) {
        t.push(vec![num(*d), num(*s), num(*e)]);
    }
    t
}

/// Reads an interferogram; per-realization signals are not stored in files.
pub fn interferogram_from_table<T: Real + FromStr>(t: &Table) -> Result<Interferogram<T>> {
    let delays = t.numeric::<T>("delay")?;
    let signal = t.numeric::<T>("signal")?;
    let signal_stderr = match t.column_index("stderr") {
        Ok(_) => t.numeric::<T>("stderr")?,
        Err(_) => vec![T::nan(); delays.len()],
    };
    let mut meta = t.meta.clone();
    meta.remove(FORMAT_KEY);
    let carrier = t.meta_number::<T>("carrier")?;
    let single_arm_level = t.meta_number::<T>("single_arm_level").unwrap_or(T::nan());
    meta.remove("carrier");
    meta.remove("single_arm_level");
    Ok(Interferogram {
        delays,
        signal,
        signal_stderr,
        single_arm_level,
        carrier,
        meta,
        realizations: None,
    })
}

pub fn g2_table<T: Real>(curve: &G2Curve<T>, coherence_time: Option<T>) -> Table {
    let mut t = Table::new("g2", &["lag", "g2", "stderr"]);
    t.set("method", curve.method.as_str());
    t.set("g2_zero", num(curve.g2_zero));
    t.set("g2_zero_stderr", num(curve.g2_zero_stderr));
    t.set("coherence_time", opt_num(coherence_time));
    for ((l, g), e) in curve.lags.iter().zip(&curve.g2).zip(&curve.stderr) {
        t.push(vec![num(*l), num(*g), num(*e)]);
    }
    t
}

pub fn g2_from_table<T: Real + FromStr>(t: &Table) -> Result<G2Curve<T>> {
    let lags = t.numeric::<T>("lag")?;
    let g2 = t.numeric::<T>("g2")?;
    let stderr = t.numeric::<T>("stderr")?;
    let method = match t.meta.get("method").map(String::as_str) {
        Some("direct") => G2Method::Direct,
        Some("tpa_filtered") => G2Method::TpaFiltered,
        other => {
            return Err(Error::Format {
                line: 0,
                reason: format!("unknown method {other:?}"),
            })
        }
    };
    let zero = lags
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite lags"))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Format {
            line: 0,
            reason: "empty curve".into(),
        })?;
    G2Curve::new(lags, g2, stderr, zero, method)
}

/// Samples of one realization: time, real and imaginary envelope.
pub fn field_table<T: Real>(record: &[Complex<T>], dt: T) -> Table {
    let mut t = Table::new("field", &["t", "re", "im"]);
    t.set("dt", num(dt));
    for (n, e) in record.iter().enumerate() {
        t.push(vec![num(T::count(n) * dt), num(e.re), num(e.im)]);
    }
    t
}
