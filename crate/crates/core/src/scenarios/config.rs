use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fieldgen::{LineShape, SpectrumSpec};

/// One light source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Thermal {
        spectrum: SpectrumSpec<f64>,
        #[serde(default = "unit")]
        mean_intensity: f64,
    },
    Coherent {
        amplitude: f64,
        #[serde(default)]
        detuning: f64,
    },
    Mixture {
        thermal_fraction: f64,
        spectrum: SpectrumSpec<f64>,
        #[serde(default = "unit")]
        total_mean_intensity: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl SourceConfig {
    pub fn spectrum(&self) -> Option<&SpectrumSpec<f64>> {
        match self {
            SourceConfig::Thermal { spectrum, .. } | SourceConfig::Mixture { spectrum, .. } => {
                Some(spectrum)
            }
            SourceConfig::Coherent { .. } => None,
        }
    }

    /// Frequency of the narrow line, if any, otherwise the spectrum center.
    pub fn line_detuning(&self) -> f64 {
        match self {
            SourceConfig::Coherent { detuning, .. } => *detuning,
            SourceConfig::Thermal { spectrum, .. } | SourceConfig::Mixture { spectrum, .. } => {
                spectrum.center_detuning
            }
        }
    }

    /// g2(0) the source is constructed to have.
    pub fn nominal_g2(&self) -> f64 {
        match self {
            SourceConfig::Thermal { .. } => 2.0,
            SourceConfig::Coherent { .. } => 1.0,
            SourceConfig::Mixture {
                thermal_fraction: x,
                ..
            } => 1.0 + 2.0 * x - x * x,
        }
    }

    pub fn gaussian_mixture(thermal_fraction: f64, center_detuning: f64, fwhm: f64) -> Self {
        SourceConfig::Mixture {
            thermal_fraction,
            spectrum: SpectrumSpec {
                shape: LineShape::Gaussian,
                center_detuning,
                fwhm,
            },
            total_mean_intensity: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_realizations: usize,
    pub n_samples: usize,
    pub dt: f64,
    /// Scaled carrier; defaults to `0.4 pi / dt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier: Option<f64>,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_realizations: 256,
            n_samples: 1 << 16,
            dt: 1.0,
            carrier: None,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Fixed half range of the delay scan; otherwise derived from the spectrum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delay_half_range: Option<f64>,
    /// Derived half range in units of the source coherence time.
    pub coherence_multiple: f64,
    /// Half range used when the source has no finite coherence time.
    pub min_half_range: f64,
    pub fringe_sampling: f64,
    pub plateau_fraction: f64,
    pub transition_fraction: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            delay_half_range: None,
            coherence_multiple: 10.0,
            min_half_range: 200.0,
            fringe_sampling: 4.0,
            plateau_fraction: 0.2,
            transition_fraction: 0.125,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// Tab-separated columns with `#` metadata headers.
    Columns,
    /// One JSON object per line.
    Records,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub formats: Vec<OutputFormat>,
    /// Also write the first realization of every ensemble.
    pub save_fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            formats: vec![OutputFormat::Columns, OutputFormat::Records],
            save_fields: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub label: String,
    pub source: SourceConfig,
    /// Free-form annotations such as operating currents.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

/// A complete, reproducible experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Single source, used when `sweep` is empty.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepPoint>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sweep points, or the single source labelled with the scenario name.
    pub fn points(&self) -> Vec<SweepPoint> {
        if !self.sweep.is_empty() {
            return self.sweep.clone();
        }
        self.source
            .iter()
            .map(|s| SweepPoint {
                label: self.name.clone(),
                source: s.clone(),
                meta: BTreeMap::new(),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweep.is_empty() && self.source.is_none() {
            return Err(Error::Config(
                "config needs a `source` or at least one `sweep` point".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for p in &self.sweep {
            if p.label.is_empty() {
                return Err(Error::Config("sweep labels must be nonempty".into()));
            }
            if !seen.insert(p.label.as_str()) {
                return Err(Error::DuplicateLabel(p.label.clone()));
            }
        }
        let a = &self.analysis;
        if !(a.plateau_fraction > 0.0 && a.plateau_fraction < 1.0) {
            return Err(Error::Config(
                "analysis.plateau_fraction must lie in (0, 1)".into(),
            ));
        }
        if !(a.transition_fraction > 0.0 && a.transition_fraction < 0.5) {
            return Err(Error::Config(
                "analysis.transition_fraction must lie in (0, 0.5)".into(),
            ));
        }
        if !(a.coherence_multiple > 0.0 && a.min_half_range > 0.0) {
            return Err(Error::Config(
                "analysis delay ranges must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Hash of everything that determines the results (outputs excluded).
    pub fn hash(&self) -> String {
        let mut physics = self.clone();
        physics.outputs = OutputConfig::default();
        let digest = Sha256::digest(physics.to_toml().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}
