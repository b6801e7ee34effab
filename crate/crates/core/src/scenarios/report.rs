use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dsp::G2Method;
use crate::error::{Error, Result};
use crate::models::lachs_thermal_fraction;

use super::columnar::{num, Table};

/// Serializes non-finite floats as `null` and reads `null` back as `NaN`.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

/// Result of one extraction method on one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub label: String,
    pub method: G2Method,
    #[serde(with = "nan_as_null")]
    pub g2_zero: f64,
    #[serde(with = "nan_as_null")]
    pub stderr: f64,
    pub thermal_fraction: f64,
    pub coherence_time: Option<f64>,
    /// g2(0) the synthetic source was built to have.
    pub source_g2: f64,
}

/// Thermal fraction reported for a measured g2(0); estimates that scatter
/// outside the classical range are clamped onto its nearest edge.
pub fn report_thermal_fraction(g2_zero: f64) -> f64 {
    if g2_zero.is_nan() {
        return f64::NAN;
    }
    lachs_thermal_fraction(g2_zero.clamp(1.0, 2.0)).expect("clamped into domain")
}

impl PointRecord {
    pub fn new(
        label: &str,
        method: G2Method,
        g2_zero: f64,
        stderr: f64,
        coherence_time: Option<f64>,
        source_g2: f64,
    ) -> Self {
        Self {
            label: label.to_string(),
            method,
            g2_zero,
            stderr,
            thermal_fraction: report_thermal_fraction(g2_zero),
            coherence_time,
            source_g2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Provenance(Provenance),
    Point(PointRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub provenance: Provenance,
    /// Sweep order, one record per method per point.
    pub records: Vec<PointRecord>,
}

impl CoherenceReport {
    pub fn labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.label.as_str()) {
                out.push(&r.label);
            }
        }
        out
    }

    pub fn get(&self, label: &str, method: G2Method) -> Option<&PointRecord> {
        self.records
            .iter()
            .find(|r| r.label == label && r.method == method)
    }

    pub fn by_method(&self, method: G2Method) -> impl Iterator<Item = &PointRecord> {
        self.records.iter().filter(move |r| r.method == method)
    }

    /// Largest |tpa - direct| over points carrying both methods.
    pub fn max_method_disagreement(&self) -> f64 {
        self.by_method(G2Method::TpaFiltered)
            .filter_map(|t| {
                self.get(&t.label, G2Method::Direct)
                    .map(|d| (t.g2_zero - d.g2_zero).abs())
            })
            .fold(0.0, f64::max)
    }

    /// JSON lines: the provenance record then one record per point and method.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Line::Provenance(self.provenance.clone()))
            .expect("serializable");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(&Line::Point(r.clone())).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut provenance = None;
        let mut records = Vec::new();
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let parsed: Line = serde_json::from_str(line).map_err(|e| Error::Format {
                line: i + 1,
                reason: e.to_string(),
            })?;
            match parsed {
                Line::Provenance(p) if provenance.is_none() => provenance = Some(p),
                Line::Provenance(_) => {
                    return Err(Error::Format {
                        line: i + 1,
                        reason: "second provenance record".into(),
                    })
                }
                Line::Point(r) => records.push(r),
            }
        }
        let provenance = provenance.ok_or_else(|| Error::Format {
            line: 1,
            reason: "missing provenance record".into(),
        })?;
        Ok(Self {
            provenance,
            records,
        })
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(
            "report",
            &[
                "label",
                "method",
                "g2_zero",
                "stderr",
                "thermal_fraction",
                "coherence_time",
                "source_g2",
            ],
        );
        t.set("scenario", &self.provenance.scenario);
        t.set("config_hash", &self.provenance.config_hash);
        t.set("seed", self.provenance.seed);
        t.set("version", &self.provenance.version);
        for r in &self.records {
            t.push(vec![
                r.label.clone(),
                r.method.as_str().to_string(),
                num(r.g2_zero),
                num(r.stderr),
                num(r.thermal_fraction),
                r.coherence_time.map(num).unwrap_or_else(|| "NaN".into()),
                num(r.source_g2),
            ]);
        }
        t
    }

    pub fn from_table(t: &Table) -> Result<Self> {
        let missing = |k: &str| Error::Format {
            line: 0,
            reason: format!("missing header `{k}`"),
        };
        let provenance = Provenance {
            scenario: t
                .meta
                .get("scenario")
                .ok_or_else(|| missing("scenario"))?
                .clone(),
            config_hash: t
                .meta
                .get("config_hash")
                .ok_or_else(|| missing("config_hash"))?
                .clone(),
            seed: t.meta_number("seed")?,
            version: t.meta.get("version").cloned().unwrap_or_default(),
        };
        let label = t.column_index("label")?;
        let method = t.column_index("method")?;
        let g2: Vec<f64> = t.numeric("g2_zero")?;
        let stderr: Vec<f64> = t.numeric("stderr")?;
        let x: Vec<f64> = t.numeric("thermal_fraction")?;
        let tau: Vec<f64> = t.numeric("coherence_time")?;
        let source: Vec<f64> = t.numeric("source_g2")?;
        let records = t
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let method = match row[method].as_str() {
                    "direct" => G2Method::Direct,
                    "tpa_filtered" => G2Method::TpaFiltered,
                    other => {
                        return Err(Error::Format {
                            line: i + 1,
                            reason: format!("unknown method `{other}`"),
                        })
                    }
                };
                Ok(PointRecord {
                    label: row[label].clone(),
                    method,
                    g2_zero: g2[i],
                    stderr: stderr[i],
                    thermal_fraction: x[i],
                    coherence_time: Some(tau[i]).filter(|t| !t.is_nan()),
                    source_g2: source[i],
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            provenance,
            records,
        })
    }

    /// Reads either serialization, judged by the first non-blank character.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_jsonl(text)
        } else {
            Self::from_table(&Table::parse(text)?)
        }
    }

    /// One line per point and method, fixed field order.
    pub fn summary(&self) -> String {
        let p = &self.provenance;
        let mut out = format!(
            "scenario {} hash {} seed {} version {}\n",
            p.scenario, p.config_hash, p.seed, p.version
        );
        for r in &self.records {
            let tau = r
                .coherence_time
                .map(|t| format!("{t:.2}"))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<14} {:<13} g2(0) = {:.4} +/- {:.4}  x = {:.4}  tau_c = {}  source g2(0) = {:.4}",
                r.label,
                r.method.as_str(),
                r.g2_zero,
                r.stderr,
                r.thermal_fraction,
                tau,
                r.source_g2
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Decreasing,
    Increasing,
}

/// Expected g2(0) values for selected labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceTable {
    pub entries: Vec<(String, f64)>,
    /// Expected ordering of g2(0) across the report's sweep order.
    pub trend: Option<Trend>,
}

impl ReferenceTable {
    pub fn new(entries: &[(&str, f64)]) -> Self {
        Self {
            entries: entries.iter().map(|(l, g)| (l.to_string(), *g)).collect(),
            trend: None,
        }
    }

    pub fn with_trend(mut self, trend: Trend) -> Self {
        self.trend = Some(trend);
        self
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new("reference", &["label", "g2"]);
        if let Some(trend) = self.trend {
            t.set(
                "trend",
                if trend == Trend::Decreasing {
                    "decreasing"
                } else {
                    "increasing"
                },
            );
        }
        for (l, g) in &self.entries {
            t.push(vec![l.clone(), num(*g)]);
        }
        t
    }

    pub fn from_table(t: &Table) -> Result<Self> {
        let label = t.column_index("label")?;
        let g2: Vec<f64> = t.numeric("g2")?;
        let trend = match t.meta.get("trend").map(String::as_str) {
            None => None,
            Some("decreasing") => Some(Trend::Decreasing),
            Some("increasing") => Some(Trend::Increasing),
            Some(other) => {
                return Err(Error::Format {
                    line: 0,
                    reason: format!("unknown trend `{other}`"),
                })
            }
        };
        Ok(Self {
            entries: t.rows.iter().map(|r| r[label].clone()).zip(g2).collect(),
            trend,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_table(&Table::parse(text)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub label: String,
    pub reference: f64,
    pub measured: f64,
    /// `measured - reference`.
    pub deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub method: G2Method,
    pub tolerance: f64,
    pub deviations: Vec<Deviation>,
    /// Whether the trend expectation holds, if the reference states one.
    pub trend_ok: Option<bool>,
    pub pass: bool,
}

impl Comparison {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(
            "comparison",
            &["label", "reference", "measured", "deviation", "pass"],
        );
        t.set("method", self.method.as_str());
        t.set("tolerance", num(self.tolerance));
        if let Some(ok) = self.trend_ok {
            t.set("trend_ok", ok);
        }
        t.set("verdict", if self.pass { "pass" } else { "fail" });
        for d in &self.deviations {
            t.push(vec![
                d.label.clone(),
                num(d.reference),
                num(d.measured),
                num(d.deviation),
                d.pass.to_string(),
            ]);
        }
        t
    }
}

/// Signed per-label deviations of `method`'s g2(0) from the reference.
pub fn compare_report(
    report: &CoherenceReport,
    reference: &ReferenceTable,
    tolerance: f64,
    method: G2Method,
) -> Result<Comparison> {
    let deviations = reference
        .entries
        .iter()
        .map(|(label, expected)| {
            let rec = report
                .get(label, method)
                .ok_or_else(|| Error::LabelMismatch(label.clone()))?;
            let deviation = rec.g2_zero - expected;
            Ok(Deviation {
                label: label.clone(),
                reference: *expected,
                measured: rec.g2_zero,
                deviation,
                pass: deviation.abs() <= tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let trend_ok = reference.trend.map(|trend| {
        let g: Vec<f64> = report.by_method(method).map(|r| r.g2_zero).collect();
        g.windows(2).all(|w| match trend {
            Trend::Decreasing => w[1] <= w[0] + tolerance,
            Trend::Increasing => w[1] + tolerance >= w[0],
        })
    });
    let pass = deviations.iter().all(|d| d.pass) && trend_ok.unwrap_or(true);
    Ok(Comparison {
        method,
        tolerance,
        deviations,
        trend_ok,
        pass,
    })
}
