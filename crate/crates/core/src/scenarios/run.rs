use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use rayon::prelude::*;

use crate::dsp::{
    coherence_time, g2_from_interferogram_with, AnalysisSettings, FilterSettings, G2Curve, G2Method,
};
use crate::error::{Error, Result};
use crate::fieldgen::{
    gen_coherent, gen_mixture, gen_thermal_with_intensity, FieldEnsemble, MixtureSpec,
    SimulationGrid, SpectrumSpec,
};
use crate::optics::{direct_g2, tpa_interferogram, DelaySweep, Interferogram};
use crate::rng::derive_seed;

use super::columnar::{field_table, g2_table, interferogram_table, Table};
use super::config::{OutputFormat, ScenarioConfig, SourceConfig, SweepPoint};
use super::report::{CoherenceReport, PointRecord, Provenance};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything computed for one sweep point.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub index: usize,
    pub point: SweepPoint,
    pub seed: u64,
    /// Averaged interferogram; per-realization signals are dropped after analysis.
    pub interferogram: Interferogram<f64>,
    pub direct: G2Curve<f64>,
    pub tpa: G2Curve<f64>,
    pub direct_coherence_time: Option<f64>,
    pub tpa_coherence_time: Option<f64>,
    /// First realization, kept when the config asks for saved fields.
    pub field: Option<Vec<Complex<f64>>>,
}

impl PointOutcome {
    pub fn records(&self) -> [PointRecord; 2] {
        let nominal = self.point.source.nominal_g2();
        let label = &self.point.label;
        [
            PointRecord::new(
                label,
                G2Method::Direct,
                self.direct.g2_zero,
                self.direct.g2_zero_stderr,
                self.direct_coherence_time,
                nominal,
            ),
            PointRecord::new(
                label,
                G2Method::TpaFiltered,
                self.tpa.g2_zero,
                self.tpa.g2_zero_stderr,
                self.tpa_coherence_time,
                nominal,
            ),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub config_hash: String,
    pub points: Vec<PointOutcome>,
    pub report: CoherenceReport,
}

pub fn grid_for(cfg: &ScenarioConfig) -> Result<SimulationGrid<f64>> {
    let s = &cfg.simulation;
    match s.carrier {
        Some(c) => SimulationGrid::new(s.n_samples, s.dt, c),
        None => SimulationGrid::with_default_carrier(s.n_samples, s.dt),
    }
}

pub fn build_ensemble(
    source: &SourceConfig,
    n_realizations: usize,
    grid: &SimulationGrid<f64>,
    seed: u64,
) -> Result<FieldEnsemble<f64>> {
    let checked = |s: &SpectrumSpec<f64>| SpectrumSpec::new(s.shape, s.center_detuning, s.fwhm);
    match source {
        SourceConfig::Thermal {
            spectrum,
            mean_intensity,
        } => gen_thermal_with_intensity(
            &checked(spectrum)?,
            *mean_intensity,
            n_realizations,
            grid,
            seed,
        ),
        SourceConfig::Coherent {
            amplitude,
            detuning,
        } => gen_coherent(*amplitude, *detuning, n_realizations, grid, seed),
        SourceConfig::Mixture {
            thermal_fraction,
            spectrum,
            total_mean_intensity,
        } => gen_mixture(
            &MixtureSpec::new(*thermal_fraction)?,
            &checked(spectrum)?,
            *total_mean_intensity,
            n_realizations,
            grid,
            seed,
        ),
    }
}

/// Half range of the delay scan for a source: fixed if configured, else a
/// multiple of the spectrum's coherence time. Derived ranges are capped so
/// that the fringe-closing extension of the sweep stays inside the overlap
/// limit.
pub fn delay_half_range(
    cfg: &ScenarioConfig,
    source: &SourceConfig,
    grid: &SimulationGrid<f64>,
) -> f64 {
    if let Some(h) = cfg.analysis.delay_half_range {
        return h;
    }
    let a = &cfg.analysis;
    let thermal = match source {
        SourceConfig::Coherent { .. } => None,
        SourceConfig::Mixture {
            thermal_fraction, ..
        } if *thermal_fraction <= 0.0 => None,
        other => other.spectrum(),
    };
    let wanted = thermal.map_or(a.min_half_range, |s| {
        (a.coherence_multiple * s.coherence_time()).max(a.min_half_range)
    });
    let limit = grid.n_samples as f64 * grid.dt / 4.0;
    wanted.min(0.45 * limit)
}

fn run_point(cfg: &ScenarioConfig, index: usize, point: &SweepPoint) -> Result<PointOutcome> {
    let grid = grid_for(cfg)?;
    let seed = derive_seed(cfg.simulation.seed, index as u64);
    let fields = build_ensemble(&point.source, cfg.simulation.n_realizations, &grid, seed)?;
    let half_range = delay_half_range(cfg, &point.source, &grid);
    let sweep = DelaySweep::for_fringes(
        half_range,
        grid.dt,
        grid.carrier,
        point.source.line_detuning(),
        cfg.analysis.fringe_sampling,
    )?;
    let mut interferogram = tpa_interferogram(&fields, &sweep)?;
    let direct = direct_g2(&fields, (half_range / grid.dt).floor() * grid.dt)?;
    let field = cfg
        .outputs
        .save_fields
        .then(|| fields.realizations()[0].clone());
    drop(fields);

    let settings = AnalysisSettings {
        filter: FilterSettings {
            transition_fraction: cfg.analysis.transition_fraction,
            ..FilterSettings::default()
        },
        plateau_fraction: cfg.analysis.plateau_fraction,
    };
    let tpa = g2_from_interferogram_with(&interferogram, &settings)?;
    interferogram.realizations = None;
    Ok(PointOutcome {
        index,
        point: point.clone(),
        seed,
        direct_coherence_time: coherence_time(&direct).ok(),
        tpa_coherence_time: coherence_time(&tpa).ok(),
        interferogram,
        direct,
        tpa,
        field,
    })
}

/// Runs every sweep point, calling `progress` once per finished point.
pub fn run_scenario_with(
    cfg: &ScenarioConfig,
    progress: &(dyn Fn(&PointOutcome) + Sync),
) -> Result<ScenarioRun> {
    cfg.validate()?;
    let config_hash = cfg.hash();
    let points = cfg.points();
    let outcomes = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let out = run_point(cfg, i, p).map_err(|e| Error::at_point(&p.label, e))?;
            progress(&out);
            Ok(out)
        })
        .collect::<Vec<Result<PointOutcome>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let report = CoherenceReport {
        provenance: Provenance {
            scenario: cfg.name.clone(),
            config_hash: config_hash.clone(),
            seed: cfg.simulation.seed,
            version: VERSION.to_string(),
        },
        records: outcomes.iter().flat_map(|o| o.records()).collect(),
    };
    Ok(ScenarioRun {
        config: cfg.clone(),
        config_hash,
        points: outcomes,
        report,
    })
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<CoherenceReport> {
    run_scenario_with(cfg, &|_| {}).map(|r| r.report)
}

/// Directory name for a point: its index and a filesystem-safe label.
pub fn point_dir_name(index: usize, label: &str) -> String {
    let safe: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '+') {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{:02}_{safe}", index + 1)
}

fn stamp(t: &mut Table, run: &ScenarioRun, outcome: &PointOutcome) {
    t.set("config_hash", &run.config_hash);
    t.set("scenario", &run.config.name);
    t.set("label", &outcome.point.label);
    t.set("point_seed", outcome.seed);
    for (k, v) in &outcome.point.meta {
        t.set(&format!("point.{k}"), v);
    }
}

/// Writes the run below `dir` and returns the files written.
///
/// ```text
/// dir/config.toml
/// dir/report.tsv, dir/report.jsonl
/// dir/points/NN_label/{interferogram,g2_direct,g2_tpa[,field]}.tsv
/// ```
pub fn write_run(run: &ScenarioRun, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, text: String| -> Result<()> {
        fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    let header = format!("# config_hash: {}\n", run.config_hash);
    put(dir.join("config.toml"), header + &run.config.to_toml())?;
    let formats = &run.config.outputs.formats;
    if formats.contains(&OutputFormat::Columns) {
        put(dir.join("report.tsv"), run.report.to_table().render())?;
    }
    if formats.contains(&OutputFormat::Records) {
        put(dir.join("report.jsonl"), run.report.to_jsonl())?;
    }
    for o in &run.points {
        let pdir = dir
            .join("points")
            .join(point_dir_name(o.index, &o.point.label));
        fs::create_dir_all(&pdir)?;
        let mut ig = interferogram_table(&o.interferogram);
        stamp(&mut ig, run, o);
        put(pdir.join("interferogram.tsv"), ig.render())?;
        for (name, curve, tau) in [
            ("g2_direct.tsv", &o.direct, o.direct_coherence_time),
            ("g2_tpa.tsv", &o.tpa, o.tpa_coherence_time),
        ] {
            let mut t = g2_table(curve, tau);
            stamp(&mut t, run, o);
            put(pdir.join(name), t.render())?;
        }
        if let Some(field) = &o.field {
            let mut t = field_table(field, run.config.simulation.dt);
            stamp(&mut t, run, o);
            put(pdir.join("field.tsv"), t.render())?;
        }
    }
    Ok(written)
}
