use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "spectrum unresolvable: fwhm {fwhm} must lie in [{min}, {max}] \
         (>= 16 frequency bins and <= carrier/4){}", violated_bounds(*fwhm, *min, *max)
    )]
    SpectrumUnresolvable { fwhm: f64, min: f64, max: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("delay {delay} exceeds the allowed overlap limit {limit} (a quarter of the record)")]
    OverlapTooShort { delay: f64, limit: f64 },

    #[error(
        "band overlap: {fraction:.4} of the non-DC spectral energy falls in the filter transition region (limit 0.01)"
    )]
    BandOverlap { fraction: f64 },

    #[error("plateau not found: relative slope {slope:.4} per coherence time exceeds 0.01")]
    PlateauNotFound { slope: f64 },

    #[error("coherence time undefined for g2(0) = {g2_zero:.4} (requires g2(0) > 1.05)")]
    UndefinedCoherenceTime { g2_zero: f64 },

    #[error("{what} = {value} outside the classical mixture domain [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("negative g2 estimate {value:.4} at lag {lag}")]
    NegativeG2 { lag: f64, value: f64 },

    #[error("the Siegert relation applies only to chaotic fields, got a {class} ensemble")]
    NotChaotic { class: String },

    #[error("label mismatch: reference label `{0}` not present in report")]
    LabelMismatch(String),

    #[error("duplicate sweep label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("sweep point `{label}`: {source}")]
    AtPoint {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed data file, line {line}: {reason}")]
    Format { line: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn violated_bounds(fwhm: f64, min: f64, max: f64) -> String {
    let mut out = String::new();
    if fwhm < min {
        out.push_str(&format!("; below resolution bound {min}"));
    }
    if fwhm > max {
        out.push_str(&format!("; above carrier bound {max}"));
    }
    out
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_point(label: &str, source: Error) -> Self {
        Error::AtPoint {
            label: label.to_string(),
            source: Box::new(source),
        }
    }
}
