//! Stochastic synthesis of complex baseband field envelopes.
//!
//! Fields are sampled as slowly varying envelopes `E(t)` around a scaled
//! carrier; the carrier itself only enters the interferometer analytically.
//! Thermal light is made by coloring independent complex Gaussian spectral
//! amplitudes with the square root of the target power spectrum, coherent
//! light is a constant-modulus phasor with a random global phase, and a
//! mixture is the per-sample sum of independent thermal and coherent parts.

use std::fmt;

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{bin_frequency, Plan};
use crate::rng::{stream, Purpose};
use crate::scalar::Real;

/// Smallest record length accepted for an ensemble.
pub const MIN_SAMPLES: usize = 1 << 12;

/// Default record length.
pub const DEFAULT_SAMPLES: usize = 1 << 16;

/// Default scaled carrier in units of the sampling Nyquist frequency `pi/dt`.
pub const DEFAULT_CARRIER_NYQUIST_FRACTION: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineShape {
    Gaussian,
    Lorentzian,
}

/// Power spectral density around the carrier: shape, center detuning and
/// full width at half maximum, both in rad per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec<T> {
    pub shape: LineShape,
    pub center_detuning: T,
    pub fwhm: T,
}

impl<T: Real> SpectrumSpec<T> {
    pub fn new(shape: LineShape, center_detuning: T, fwhm: T) -> Result<Self> {
        if !(fwhm > T::zero() && fwhm.is_finite()) {
            return Err(Error::invalid(
                "fwhm",
                format!("must be positive and finite, got {fwhm}"),
            ));
        }
        if !center_detuning.is_finite() {
            return Err(Error::invalid("center_detuning", "must be finite"));
        }
        Ok(Self {
            shape,
            center_detuning,
            fwhm,
        })
    }

    pub fn gaussian(center_detuning: T, fwhm: T) -> Result<Self> {
        Self::new(LineShape::Gaussian, center_detuning, fwhm)
    }

    pub fn lorentzian(center_detuning: T, fwhm: T) -> Result<Self> {
        Self::new(LineShape::Lorentzian, center_detuning, fwhm)
    }

    /// Unit-area PSD evaluated at angular frequency `omega`.
    pub fn density(&self, omega: T) -> T {
        let d = omega - self.center_detuning;
        match self.shape {
            LineShape::Gaussian => {
                let sigma = self.gaussian_sigma();
                (-(d * d) / (T::lit(2.0) * sigma * sigma)).exp()
                    / (sigma * (T::lit(2.0) * T::PI()).sqrt())
            }
            LineShape::Lorentzian => {
                let gamma = self.fwhm / T::lit(2.0);
                gamma / (T::PI() * (d * d + gamma * gamma))
            }
        }
    }

    fn gaussian_sigma(&self) -> T {
        self.fwhm / (T::lit(8.0) * T::LN_2()).sqrt()
    }

    /// Analytic first-order coherence `|g1(tau)|`.
    pub fn g1_modulus(&self, tau: T) -> T {
        match self.shape {
            LineShape::Gaussian => {
                let s = self.gaussian_sigma() * tau;
                (-(s * s) / T::lit(2.0)).exp()
            }
            LineShape::Lorentzian => (-(self.fwhm * tau.abs()) / T::lit(2.0)).exp(),
        }
    }

    /// Half width at half maximum of `|g1(tau)|^2`, which for chaotic light is
    /// also the HWHM of `g2(tau) - 1`.
    pub fn coherence_time(&self) -> T {
        match self.shape {
            LineShape::Gaussian => T::LN_2().sqrt() / self.gaussian_sigma(),
            LineShape::Lorentzian => T::LN_2() / self.fwhm,
        }
    }
}

/// Thermal photon fraction `n_ther / n` of a coherent + thermal superposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec<T> {
    thermal_fraction: T,
}

impl<T: Real> MixtureSpec<T> {
    pub fn new(thermal_fraction: T) -> Result<Self> {
        if !(thermal_fraction >= T::zero() && thermal_fraction <= T::one()) {
            return Err(Error::Domain {
                what: "thermal fraction",
                value: thermal_fraction.as_f64(),
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self { thermal_fraction })
    }

    pub fn thermal_fraction(&self) -> T {
        self.thermal_fraction
    }

    pub fn coherent_fraction(&self) -> T {
        T::one() - self.thermal_fraction
    }
}

/// Sampling grid shared by all realizations of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationGrid<T> {
    pub n_samples: usize,
    pub dt: T,
    pub carrier: T,
}

impl<T: Real> SimulationGrid<T> {
    pub fn new(n_samples: usize, dt: T, carrier: T) -> Result<Self> {
        if !n_samples.is_power_of_two() || n_samples < MIN_SAMPLES {
            return Err(Error::invalid(
                "n_samples",
                format!("must be a power of two >= {MIN_SAMPLES}, got {n_samples}"),
            ));
        }
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(carrier > T::zero() && carrier * dt < T::PI()) {
            return Err(Error::invalid(
                "carrier",
                format!("need 0 < carrier*dt < pi, got carrier={carrier}, dt={dt}"),
            ));
        }
        Ok(Self {
            n_samples,
            dt,
            carrier,
        })
    }

    /// Grid with the default carrier `0.4 pi / dt`.
    pub fn with_default_carrier(n_samples: usize, dt: T) -> Result<Self> {
        Self::new(
            n_samples,
            dt,
            T::lit(DEFAULT_CARRIER_NYQUIST_FRACTION) * T::PI() / dt,
        )
    }

    /// Frequency spacing of the record's DFT bins.
    pub fn frequency_step(&self) -> T {
        T::lit(2.0) * T::PI() / (T::count(self.n_samples) * self.dt)
    }

    /// Checks that a spectrum is resolvable on this grid.
    pub fn check_spectrum(&self, spec: &SpectrumSpec<T>) -> Result<()> {
        let min = T::lit(16.0) * self.frequency_step();
        let max = self.carrier / T::lit(4.0);
        if spec.fwhm < min || spec.fwhm > max {
            return Err(Error::SpectrumUnresolvable {
                fwhm: spec.fwhm.as_f64(),
                min: min.as_f64(),
                max: max.as_f64(),
            });
        }
        if spec.center_detuning.abs() * self.dt >= T::PI() {
            return Err(Error::invalid(
                "center_detuning",
                "beyond the sampling Nyquist frequency",
            ));
        }
        Ok(())
    }
}

impl Default for SimulationGrid<f64> {
    fn default() -> Self {
        Self::with_default_carrier(DEFAULT_SAMPLES, 1.0).expect("default grid is valid")
    }
}

/// Statistical class of the light an ensemble was generated as.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceClass<T> {
    Thermal,
    Coherent,
    Mixture { thermal_fraction: T },
}

impl<T: Real> SourceClass<T> {
    /// True for fields with Gaussian (chaotic) statistics.
    pub fn is_chaotic(&self) -> bool {
        match *self {
            SourceClass::Thermal => true,
            SourceClass::Coherent => false,
            SourceClass::Mixture { thermal_fraction } => thermal_fraction == T::one(),
        }
    }
}

impl<T: Real> fmt::Display for SourceClass<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceClass::Thermal => f.write_str("thermal"),
            SourceClass::Coherent => f.write_str("coherent"),
            SourceClass::Mixture { thermal_fraction } => write!(f, "mixture(x={thermal_fraction})"),
        }
    }
}

/// Independent realizations of the field envelope on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEnsemble<T> {
    realizations: Vec<Vec<Complex<T>>>,
    dt: T,
    carrier: T,
    mean_intensity: T,
    class: SourceClass<T>,
}

impl<T: Real> FieldEnsemble<T> {
    pub fn new(
        realizations: Vec<Vec<Complex<T>>>,
        dt: T,
        carrier: T,
        mean_intensity: T,
        class: SourceClass<T>,
    ) -> Result<Self> {
        let Some(first) = realizations.first() else {
            return Err(Error::invalid("realizations", "ensemble is empty"));
        };
        let n = first.len();
        if n < MIN_SAMPLES {
            return Err(Error::invalid(
                "realizations",
                format!("need >= {MIN_SAMPLES} samples, got {n}"),
            ));
        }
        if realizations.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("realizations", "records differ in length"));
        }
        if !(dt > T::zero()) || !(carrier > T::zero() && carrier * dt < T::PI()) {
            return Err(Error::invalid(
                "carrier",
                "need dt > 0 and 0 < carrier*dt < pi",
            ));
        }
        if !(mean_intensity >= T::zero()) {
            return Err(Error::invalid("mean_intensity", "must be nonnegative"));
        }
        Ok(Self {
            realizations,
            dt,
            carrier,
            mean_intensity,
            class,
        })
    }

    pub fn realizations(&self) -> &[Vec<Complex<T>>] {
        &self.realizations
    }

    pub fn n_realizations(&self) -> usize {
        self.realizations.len()
    }

    pub fn n_samples(&self) -> usize {
        self.realizations[0].len()
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn carrier(&self) -> T {
        self.carrier
    }

    /// Target `<|E|^2>` the ensemble was generated for.
    pub fn mean_intensity(&self) -> T {
        self.mean_intensity
    }

    pub fn class(&self) -> SourceClass<T> {
        self.class
    }

    /// Sample mean of `|E|^2` over every sample of every realization.
    pub fn sample_mean_intensity(&self) -> T {
        let per: Vec<T> = self
            .realizations
            .iter()
            .map(|r| {
                r.iter().map(|e| e.norm_sqr()).fold(T::zero(), |a, b| a + b) / T::count(r.len())
            })
            .collect();
        per.iter().fold(T::zero(), |a, &b| a + b) / T::count(per.len())
    }
}

fn check_count(n_realizations: usize) -> Result<()> {
    if n_realizations == 0 {
        return Err(Error::invalid("n_realizations", "must be at least 1"));
    }
    Ok(())
}

/// Per-bin amplitude `sqrt(p_k * mean)` with `sum_k p_k = 1`.
fn spectral_amplitudes<T: Real>(
    spec: &SpectrumSpec<T>,
    grid: &SimulationGrid<T>,
    mean: T,
) -> Vec<T> {
    let n = grid.n_samples;
    let weights: Vec<T> = (0..n)
        .map(|k| spec.density(bin_frequency(k, n, grid.dt)))
        .collect();
    let total = weights.iter().fold(T::zero(), |a, &b| a + b);
    weights
        .into_iter()
        .map(|w| (w / total * mean).sqrt())
        .collect()
}

fn thermal_records<T: Real>(
    spec: &SpectrumSpec<T>,
    mean: T,
    n_realizations: usize,
    grid: &SimulationGrid<T>,
    seed: u64,
) -> Vec<Vec<Complex<T>>> {
    let amplitudes = spectral_amplitudes(spec, grid, mean);
    let plan = Plan::<T>::new(grid.n_samples);
    let half = T::lit(0.5).sqrt();
    (0..n_realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, Purpose::ThermalSpectrum, r as u64);
            let mut buf: Vec<Complex<T>> = amplitudes
                .iter()
                .map(|&a| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex::new(T::lit(re), T::lit(im)) * (a * half)
                })
                .collect();
            plan.inverse(&mut buf);
            buf
        })
        .collect()
}

fn coherent_records<T: Real>(
    amplitude: T,
    detuning: T,
    n_realizations: usize,
    grid: &SimulationGrid<T>,
    seed: u64,
) -> Vec<Vec<Complex<T>>> {
    (0..n_realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(seed, Purpose::CoherentPhase, r as u64);
            let phase = T::lit(rng.random_range(0.0..std::f64::consts::TAU));
            (0..grid.n_samples)
                .map(|n| Complex::from_polar(amplitude, detuning * grid.dt * T::count(n) + phase))
                .collect()
        })
        .collect()
}

/// Chaotic light with unit mean intensity and power spectrum `spec`.
pub fn gen_thermal<T: Real>(
    spec: &SpectrumSpec<T>,
    n_realizations: usize,
    grid: &SimulationGrid<T>,
    seed: u64,
) -> Result<FieldEnsemble<T>> {
    gen_thermal_with_intensity(spec, T::one(), n_realizations, grid, seed)
}

pub fn gen_thermal_with_intensity<T: Real>(
    spec: &SpectrumSpec<T>,
    mean_intensity: T,
    n_realizations: usize,
    grid: &SimulationGrid<T>,
    seed: u64,
) -> Result<FieldEnsemble<T>> {
    check_count(n_realizations)?;
    grid.check_spectrum(spec)?;
    let records = thermal_records(spec, mean_intensity, n_realizations, grid, seed);
    FieldEnsemble::new(
        records,
        grid.dt,
        grid.carrier,
        mean_intensity,
        SourceClass::Thermal,
    )
}

/// Monochromatic field `amplitude * exp(i (detuning t + phi))` with a seeded
/// uniform global phase `phi` per realization.
pub fn gen_coherent<T: Real>(
    amplitude: T,
    detuning: T,
    n_realizations: usize,
    grid: &SimulationGrid<T>,
    seed: u64,
) -> Result<FieldEnsemble<T>> {
    check_count(n_realizations)?;
    if !(amplitude >= T::zero() && amplitude.is_finite()) {
        return Err(Error::invalid(
            "amplitude",
            format!("must be nonnegative, got {amplitude}"),
        ));
    }
    if !(detuning.abs() * grid.dt < T::PI()) {
        return Err(Error::invalid(
            "detuning",
            format!("|detuning|*dt must be < pi, got {detuning}"),
        ));
    }
    let records = coherent_records(amplitude, detuning, n_realizations, grid, seed);
    FieldEnsemble::new(
        records,
        grid.dt,
        grid.carrier,
        amplitude * amplitude,
        SourceClass::Coherent,
    )
}

/// Superposition of a coherent line at the spectrum's center carrying
/// `(1 - x) * total` and an independent thermal part carrying `x * total`.
pub fn gen_mixture<T: Real>(
    mix: &MixtureSpec<T>,
    spec: &SpectrumSpec<T>,
    total_mean_intensity: T,
    n_realizations: usize,
    grid: &SimulationGrid<T>,
    seed: u64,
) -> Result<FieldEnsemble<T>> {
    check_count(n_realizations)?;
    if !(total_mean_intensity >= T::zero() && total_mean_intensity.is_finite()) {
        return Err(Error::invalid(
            "total_mean_intensity",
            "must be nonnegative",
        ));
    }
    let x = mix.thermal_fraction();
    let coherent_amplitude = (mix.coherent_fraction() * total_mean_intensity).sqrt();
    let mut records = coherent_records(
        coherent_amplitude,
        spec.center_detuning,
        n_realizations,
        grid,
        seed,
    );
    if x > T::zero() {
        grid.check_spectrum(spec)?;
        let thermal = thermal_records(spec, x * total_mean_intensity, n_realizations, grid, seed);
        records.par_iter_mut().zip(thermal).for_each(|(c, t)| {
            for (a, b) in c.iter_mut().zip(t) {
                *a = *a + b;
            }
        });
    }
    let class = SourceClass::Mixture {
        thermal_fraction: x,
    };
    FieldEnsemble::new(records, grid.dt, grid.carrier, total_mean_intensity, class)
}
