//! Built-in scenarios for the tapered superluminescent diode operating points.
//!
//! Optical wavelengths and bandwidths are kept in nanometres and converted to
//! simulation units with one time scale: a sample step `dt = 1` corresponds to
//! [`SECONDS_PER_STEP`] of physical time, so an angular frequency offset
//! `dw` in rad/s becomes `dw * SECONDS_PER_STEP` in rad per step. The carrier
//! itself stays scaled (see [`crate::fieldgen`]); detunings are taken relative
//! to [`REFERENCE_WAVELENGTH_NM`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::models::{lachs_thermal_fraction, risken_g2, risken_relative_power, RiskenParams};

use super::config::{
    AnalysisConfig, OutputConfig, ScenarioConfig, SimulationConfig, SourceConfig, SweepPoint,
};
use super::report::{ReferenceTable, Trend};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Physical time represented by one simulation step.
pub const SECONDS_PER_STEP: f64 = 4.0e-15;

/// Wavelength mapped to zero detuning.
pub const REFERENCE_WAVELENGTH_NM: f64 = 970.0;

fn angular_frequency(wavelength_nm: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
}

/// Detuning of an optical line from the reference, in rad per step.
pub fn detuning_for_wavelength(wavelength_nm: f64) -> f64 {
    (angular_frequency(wavelength_nm) - angular_frequency(REFERENCE_WAVELENGTH_NM))
        * SECONDS_PER_STEP
}

/// Angular FWHM, in rad per step, of a line of width `fwhm_nm` centred at `center_nm`.
pub fn fwhm_for_bandwidth(center_nm: f64, fwhm_nm: f64) -> f64 {
    (angular_frequency(center_nm - fwhm_nm / 2.0) - angular_frequency(center_nm + fwhm_nm / 2.0))
        * SECONDS_PER_STEP
}

/// Injection current of the ridge-waveguide section for every preset, mA.
pub const RW_CURRENT_MA: f64 = 150.0;
/// Laser threshold of the external-cavity setup, A.
pub const EC_THRESHOLD_A: f64 = 1.72;

/// Thermal fraction at the highest current of the free-running sweep, from g2(0) = 1.67.
pub fn free_running_high_current_fraction() -> f64 {
    1.0 - (2.0f64 - 1.67).sqrt()
}

/// Bandwidth standing in for the sub-0.1 nm laser line of the external cavity;
/// narrower lines are not resolvable on the default grid.
pub const EC_THERMAL_BANDWIDTH_NM: f64 = 2.0;

/// Pump grid of the external-cavity sweep.
pub const EC_PUMPS: [f64; 6] = [-5.0, -3.0, -1.5, 0.0, 1.5, 3.0];

pub struct PresetInfo {
    pub name: &'static str,
    pub points: usize,
    pub anchor: &'static str,
}

pub const PRESETS: [PresetInfo; 4] = [
    PresetInfo {
        name: "free-running-sweep",
        points: 6,
        anchor: "free-running tapered SLD, TA current 0.5-3 A: g2(0) about 1.96 falling to 1.67, \
                 spectrum 976 nm / 15 nm narrowing to 970 nm / 3 nm",
    },
    PresetInfo {
        name: "ec-laser-sweep",
        points: 6,
        anchor: "external-cavity laser through threshold (1.72 A TA): semi-classical laser curve, \
                 g2(0) about 1.9 falling to about 1.2, line at 968 nm",
    },
    PresetInfo {
        name: "thermal-reference",
        points: 1,
        anchor: "pure ASE-like thermal light, 976 nm / 15 nm, g2(0) = 2",
    },
    PresetInfo {
        name: "coherent-reference",
        points: 1,
        anchor: "ideal single-frequency laser at 968 nm, g2(0) = 1",
    },
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.name)
}

fn base(name: &str, description: &str) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        description: Some(description.to_string()),
        simulation: SimulationConfig::default(),
        analysis: AnalysisConfig::default(),
        outputs: OutputConfig::default(),
        source: None,
        sweep: Vec::new(),
    }
}

fn meta(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn free_running_sweep() -> ScenarioConfig {
    let mut cfg = base("free-running-sweep", PRESETS[0].anchor);
    let n = 6;
    let (x_lo_current, x_hi_current) = (0.80, free_running_high_current_fraction());
    for i in 0..n {
        let s = i as f64 / (n - 1) as f64;
        let current = 0.5 + 2.5 * s;
        let center_nm = 976.0 + (970.0 - 976.0) * s;
        let fwhm_nm = 15.0 + (3.0 - 15.0) * s;
        let x = x_lo_current + (x_hi_current - x_lo_current) * s;
        cfg.sweep.push(SweepPoint {
            label: format!("ta-{current:.1}A"),
            source: SourceConfig::gaussian_mixture(
                x,
                detuning_for_wavelength(center_nm),
                fwhm_for_bandwidth(center_nm, fwhm_nm),
            ),
            meta: meta(&[
                ("ta_current_a", format!("{current:.2}")),
                ("rw_current_ma", format!("{RW_CURRENT_MA}")),
                ("center_nm", format!("{center_nm:.2}")),
                ("fwhm_nm", format!("{fwhm_nm:.2}")),
            ]),
        });
    }
    cfg
}

fn ec_laser_sweep() -> ScenarioConfig {
    let mut cfg = base("ec-laser-sweep", PRESETS[1].anchor);
    let center_nm = 968.0;
    for &pump in &EC_PUMPS {
        let g2 = risken_g2(&RiskenParams::at_pump(pump));
        let x = lachs_thermal_fraction(g2).expect("model g2 within [1, 2]");
        cfg.sweep.push(SweepPoint {
            label: format!("pump{pump:+.1}"),
            source: SourceConfig::gaussian_mixture(
                x,
                detuning_for_wavelength(center_nm),
                fwhm_for_bandwidth(center_nm, EC_THERMAL_BANDWIDTH_NM),
            ),
            meta: meta(&[
                ("pump", format!("{pump}")),
                (
                    "relative_power",
                    format!("{:.4}", risken_relative_power(pump)),
                ),
                ("model_g2", format!("{g2:.6}")),
                ("threshold_current_a", format!("{EC_THRESHOLD_A}")),
                ("rw_current_ma", format!("{RW_CURRENT_MA}")),
            ]),
        });
    }
    cfg
}

fn thermal_reference() -> ScenarioConfig {
    let mut cfg = base("thermal-reference", PRESETS[2].anchor);
    cfg.source = Some(SourceConfig::Thermal {
        spectrum: crate::fieldgen::SpectrumSpec {
            shape: crate::fieldgen::LineShape::Gaussian,
            center_detuning: detuning_for_wavelength(976.0),
            fwhm: fwhm_for_bandwidth(976.0, 15.0),
        },
        mean_intensity: 1.0,
    });
    cfg
}

fn coherent_reference() -> ScenarioConfig {
    let mut cfg = base("coherent-reference", PRESETS[3].anchor);
    cfg.source = Some(SourceConfig::Coherent {
        amplitude: 1.0,
        detuning: detuning_for_wavelength(968.0),
    });
    cfg
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "free-running-sweep" => Ok(free_running_sweep()),
        "ec-laser-sweep" => Ok(ec_laser_sweep()),
        "thermal-reference" => Ok(thermal_reference()),
        "coherent-reference" => Ok(coherent_reference()),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Reported g2(0) values for a preset's endpoints, with the expected trend.
pub fn reference(name: &str) -> Result<ReferenceTable> {
    match name {
        "free-running-sweep" => Ok(ReferenceTable::new(&[("ta-0.5A", 1.96), ("ta-3.0A", 1.67)])
            .with_trend(Trend::Decreasing)),
        "ec-laser-sweep" => Ok(ReferenceTable::new(&[("pump-5.0", 1.9), ("pump+3.0", 1.2)])
            .with_trend(Trend::Decreasing)),
        "thermal-reference" => Ok(ReferenceTable::new(&[("thermal-reference", 2.0)])),
        "coherent-reference" => Ok(ReferenceTable::new(&[("coherent-reference", 1.0)])),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions() {
        assert_eq!(detuning_for_wavelength(REFERENCE_WAVELENGTH_NM), 0.0);
        // longer wavelength, lower frequency
        assert!(detuning_for_wavelength(976.0) < 0.0);
        let w = fwhm_for_bandwidth(976.0, 15.0);
        let carrier = 0.4 * std::f64::consts::PI;
        assert!(w > 0.0 && 8.0 * w <= carrier, "15 nm maps to {w}");
        let narrow = fwhm_for_bandwidth(970.0, 3.0);
        assert!((w / narrow - 5.0).abs() < 0.2);
    }

    #[test]
    fn presets_are_valid_and_listed() {
        for info in &PRESETS {
            let cfg = preset(info.name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.points().len(), info.points, "{}", info.name);
        }
        assert!(matches!(preset("nope"), Err(Error::UnknownPreset(_))));
        for info in &PRESETS {
            let cfg = preset(info.name).unwrap();
            let labels: Vec<String> = cfg.points().into_iter().map(|p| p.label).collect();
            for (l, _) in reference(info.name).unwrap().entries {
                assert!(labels.contains(&l), "{l} not in {}", info.name);
            }
        }
    }

    #[test]
    fn free_running_endpoints() {
        let cfg = preset("free-running-sweep").unwrap();
        let first = cfg.sweep.first().unwrap().source.nominal_g2();
        let last = cfg.sweep.last().unwrap().source.nominal_g2();
        assert!((first - 1.96).abs() < 1e-12);
        assert!((last - 1.67).abs() < 1e-12);
        let g: Vec<f64> = cfg.sweep.iter().map(|p| p.source.nominal_g2()).collect();
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn ec_sweep_spans_near_thermal_to_mostly_coherent() {
        let cfg = preset("ec-laser-sweep").unwrap();
        let g: Vec<f64> = cfg.sweep.iter().map(|p| p.source.nominal_g2()).collect();
        assert!((g[0] - 1.9).abs() < 0.01, "{g:?}");
        assert!((g[g.len() - 1] - 1.2).abs() < 0.01, "{g:?}");
        assert!(g.windows(2).all(|w| w[1] < w[0]));
    }
}
