//! Michelson interferometer with an ideal two-photon-absorption detector.
//!
//! For a delay `tau` the detector integrates
//! `|E(t) e^{i w t} + r E(t - tau) e^{i w (t - tau)}|^4` over the overlap of the
//! two records. Expanding the fourth power splits the signal into
//!
//! ```text
//! I1^2 + I2^2 + 4 I1 I2                          baseband
//! + 4 Re[e^{i w tau} (I1 + I2) E1 E2*]           fringes at the carrier
//! + 2 Re[e^{2 i w tau} E1^2 E2*^2]               fringes at twice the carrier
//! ```
//!
//! and every time sum over the overlap is a linear correlation, so all
//! integer-sample delays of a realization come out of a handful of FFTs.
//! Fractional delays shift the second arm's envelope by a spectral phase ramp
//! first; the carrier phase is always applied analytically.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::Rng;
use rand_distr::Poisson;
use rayon::prelude::*;

use crate::dsp::{G2Curve, G2Method};
use crate::error::{Error, Result};
use crate::fieldgen::FieldEnsemble;
use crate::fourier::{bin_frequency, Correlator, Plan};
use crate::rng::{stream, Purpose};
use crate::scalar::Real;
use crate::stats::{jackknife_stderr, mean, standard_error};

/// Monotonically increasing interferometer delays.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySweep<T> {
    delays: Vec<T>,
    fringe_sampling: T,
}

impl<T: Real> DelaySweep<T> {
    pub fn new(delays: Vec<T>, fringe_sampling: T) -> Result<Self> {
        if delays.len() < 2 {
            return Err(Error::invalid("delays", "need at least two delays"));
        }
        if delays.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("delays", "must be strictly increasing"));
        }
        if !(fringe_sampling >= T::lit(4.0)) {
            return Err(Error::invalid(
                "fringe_sampling",
                "must be at least 4 samples per fringe",
            ));
        }
        Ok(Self {
            delays,
            fringe_sampling,
        })
    }

    /// Uniform grid `k * step` for `k = -n..=n`.
    pub fn symmetric(n: usize, step: T, fringe_sampling: T) -> Result<Self> {
        let delays = (0..=2 * n)
            .map(|i| T::count(i) * step - T::count(n) * step)
            .collect();
        Self::new(delays, fringe_sampling)
    }

    /// Symmetric uniform grid covering at least `[-half_range, half_range]`,
    /// with a step that divides `dt` and resolves fringes at
    /// `carrier + line_detuning` with `fringe_sampling` points per period.
    ///
    /// The point count is chosen so the window holds a whole number of fringe
    /// periods as closely as possible, which keeps the periodic extension seen
    /// by the envelope filter free of jumps for line-like sources. The
    /// resulting half range can reach twice `half_range`.
    pub fn for_fringes(
        half_range: T,
        dt: T,
        carrier: T,
        line_detuning: T,
        fringe_sampling: T,
    ) -> Result<Self> {
        let fringe = carrier + line_detuning;
        if !(fringe > T::zero()) {
            return Err(Error::invalid(
                "carrier",
                "fringe frequency must be positive",
            ));
        }
        let period = T::lit(2.0) * T::PI() / fringe;
        let per_sample = (dt * fringe_sampling / period).ceil().max(T::one());
        let step = dt / per_sample;
        let base = (half_range / step).ceil().to_usize().unwrap_or(0).max(1);
        let samples_per_period = (period / step).as_f64();
        // Search up to twice the requested range; accept the first count that
        // closes the fringes to a thousandth of a period.
        let search = (samples_per_period.ceil() as usize)
            .saturating_mul(20)
            .max(base)
            .max(1);
        let mismatch = |n: usize| {
            let periods = (2 * n + 1) as f64 / samples_per_period;
            (periods - periods.round()).abs()
        };
        let n = (base..base + search)
            .find(|&n| mismatch(n) <= 1e-3)
            .or_else(|| (base..base + search).min_by(|a, b| mismatch(*a).total_cmp(&mismatch(*b))))
            .unwrap_or(base);
        Self::symmetric(n, step, fringe_sampling)
    }

    pub fn delays(&self) -> &[T] {
        &self.delays
    }

    pub fn fringe_sampling(&self) -> T {
        self.fringe_sampling
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    fn max_step(&self) -> T {
        self.delays
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), T::max)
    }
}

/// Additive shot noise on the detected counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonNoise {
    /// Expected counts per unit of signal.
    pub counts_per_unit: f64,
    pub seed: u64,
}

/// Detector and interferometer options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpaDetector<T> {
    /// Amplitude ratio of the delayed arm to the fixed arm.
    pub arm_ratio: T,
    pub noise: Option<PoissonNoise>,
}

impl<T: Real> Default for TpaDetector<T> {
    fn default() -> Self {
        Self {
            arm_ratio: T::one(),
            noise: None,
        }
    }
}

/// TPA signal versus delay.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferogram<T> {
    pub delays: Vec<T>,
    pub signal: Vec<T>,
    /// Standard error of `signal` across realizations (`NaN` when unknown).
    pub signal_stderr: Vec<T>,
    /// TPA level of the two arms measured separately, the unit of the
    /// conventional fringe-resolved normalization.
    pub single_arm_level: T,
    pub carrier: T,
    pub meta: BTreeMap<String, String>,
    /// Per-realization signals, kept in memory for jackknife errors.
    pub realizations: Option<Vec<Vec<T>>>,
}

impl<T: Real> Interferogram<T> {
    /// Returns a copy with every signal value multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let scale = |v: &Vec<T>| v.iter().map(|&s| s * factor).collect::<Vec<_>>();
        Self {
            delays: self.delays.clone(),
            signal: scale(&self.signal),
            signal_stderr: scale(&self.signal_stderr),
            single_arm_level: self.single_arm_level * factor,
            carrier: self.carrier,
            meta: self.meta.clone(),
            realizations: self
                .realizations
                .as_ref()
                .map(|rs| rs.iter().map(scale).collect()),
        }
    }
}

struct DelayGroup<T> {
    shift: T,
    /// `(position in sweep, integer lag)`
    members: Vec<(usize, isize)>,
}

fn group_delays<T: Real>(delays: &[T], dt: T) -> Vec<DelayGroup<T>> {
    let tol = 1e-9;
    let mut groups: BTreeMap<i64, DelayGroup<T>> = BTreeMap::new();
    for (i, &tau) in delays.iter().enumerate() {
        let samples = (tau / dt).as_f64();
        let mut lag = samples.floor();
        let mut frac = samples - lag;
        if frac > 1.0 - tol {
            lag += 1.0;
            frac = 0.0;
        } else if frac < tol {
            frac = 0.0;
        }
        let key = (frac * 1e9).round() as i64;
        groups
            .entry(key)
            .or_insert_with(|| DelayGroup {
                shift: T::lit(frac),
                members: Vec::new(),
            })
            .members
            .push((i, lag as isize));
    }
    groups.into_values().collect()
}

/// `out(n) = e(n - shift)` by a spectral phase ramp (periodic in the record).
fn fractional_shift<T: Real>(e: &[Complex<T>], shift: T, plan: &Plan<T>) -> Vec<Complex<T>> {
    let n = e.len();
    let mut buf = e.to_vec();
    plan.forward(&mut buf);
    let inv_n = T::one() / T::count(n);
    for (k, v) in buf.iter_mut().enumerate() {
        let w = bin_frequency(k, n, T::one());
        *v = *v * Complex::from_polar(inv_n, -w * shift);
    }
    plan.inverse(&mut buf);
    buf
}

struct ArmSpectra<T> {
    intensity: Vec<Complex<T>>,
    field: Vec<Complex<T>>,
    intensity_field: Vec<Complex<T>>,
    field_squared: Vec<Complex<T>>,
    /// Prefix sums of `I^2`.
    prefix: Vec<T>,
}

impl<T: Real> ArmSpectra<T> {
    /// Spectra of the same record multiplied by `r`.
    fn scaled(&self, r: T) -> Self {
        let mul = |v: &[Complex<T>], f: T| v.iter().map(|x| x * f).collect();
        let (r2, r4) = (r * r, r * r * r * r);
        Self {
            intensity: mul(&self.intensity, r2),
            field: mul(&self.field, r),
            intensity_field: mul(&self.intensity_field, r2 * r),
            field_squared: mul(&self.field_squared, r2),
            prefix: self.prefix.iter().map(|&p| p * r4).collect(),
        }
    }
}

fn arm_spectra<T: Real>(e: &[Complex<T>], corr: &Correlator<T>) -> ArmSpectra<T> {
    let intensity: Vec<T> = e.iter().map(|v| v.norm_sqr()).collect();
    let mut prefix = Vec::with_capacity(e.len() + 1);
    prefix.push(T::zero());
    for &i in &intensity {
        let last = *prefix.last().expect("nonempty");
        prefix.push(last + i * i);
    }
    ArmSpectra {
        intensity: corr.spectrum(intensity.iter().map(|&i| Complex::new(i, T::zero()))),
        field: corr.spectrum(e.iter().copied()),
        intensity_field: corr.spectrum(e.iter().zip(&intensity).map(|(v, &i)| v * i)),
        field_squared: corr.spectrum(e.iter().map(|v| v * v)),
        prefix,
    }
}

fn realization_signal<T: Real>(
    e: &[Complex<T>],
    groups: &[DelayGroup<T>],
    delays: &[T],
    max_lag: usize,
    carrier: T,
    ratio: T,
    corr: &Correlator<T>,
    shift_plan: &Plan<T>,
) -> Vec<T> {
    let n = e.len();
    let arm1 = arm_spectra(e, corr);
    let mut out = vec![T::zero(); delays.len()];
    for group in groups {
        let arm2 = if group.shift == T::zero() {
            arm1.scaled(ratio)
        } else {
            let shifted: Vec<Complex<T>> = fractional_shift(e, group.shift, shift_plan)
                .into_iter()
                .map(|v| v * ratio)
                .collect();
            arm_spectra(&shifted, corr)
        };
        let cross_intensity = corr.correlate(&arm1.intensity, &arm2.intensity, max_lag);
        let fringe = corr.correlate_sum(
            &[
                (&arm1.intensity_field, &arm2.field),
                (&arm1.field, &arm2.intensity_field),
            ],
            max_lag,
        );
        let second = corr.correlate(&arm1.field_squared, &arm2.field_squared, max_lag);
        for &(pos, lag) in &group.members {
            let idx = (lag + max_lag as isize) as usize;
            let (lo1, hi1) = (lag.max(0) as usize, (n as isize + lag.min(0)) as usize);
            let (lo2, hi2) = ((-lag).max(0) as usize, (n as isize - lag.max(0)) as usize);
            let count = T::count(hi1 - lo1);
            let auto =
                (arm1.prefix[hi1] - arm1.prefix[lo1]) + (arm2.prefix[hi2] - arm2.prefix[lo2]);
            let phase = carrier * delays[pos];
            let first = Complex::from_polar(T::one(), phase) * fringe[idx];
            let doubled = Complex::from_polar(T::one(), phase + phase) * second[idx];
            let total = auto
                + T::lit(4.0) * cross_intensity[idx].re
                + T::lit(4.0) * first.re
                + T::lit(2.0) * doubled.re;
            out[pos] = (total / count).max(T::zero());
        }
    }
    out
}

/// TPA interferogram of an ensemble with the default detector.
pub fn tpa_interferogram<T: Real>(
    fields: &FieldEnsemble<T>,
    sweep: &DelaySweep<T>,
) -> Result<Interferogram<T>> {
    tpa_interferogram_with(fields, sweep, &TpaDetector::default())
}

pub fn tpa_interferogram_with<T: Real>(
    fields: &FieldEnsemble<T>,
    sweep: &DelaySweep<T>,
    detector: &TpaDetector<T>,
) -> Result<Interferogram<T>> {
    let n = fields.n_samples();
    let dt = fields.dt();
    let limit = T::count(n) * dt / T::lit(4.0);
    if let Some(&bad) = sweep.delays().iter().find(|d| d.abs() > limit) {
        return Err(Error::OverlapTooShort {
            delay: bad.as_f64(),
            limit: limit.as_f64(),
        });
    }
    let period = T::lit(2.0) * T::PI() / fields.carrier();
    let allowed = period / sweep.fringe_sampling() * T::lit(1.0 + 1e-9);
    if sweep.max_step() > allowed {
        return Err(Error::invalid(
            "delays",
            format!(
                "step {} exceeds fringe period / fringe_sampling = {}",
                sweep.max_step(),
                allowed
            ),
        ));
    }
    if !(detector.arm_ratio > T::zero()) {
        return Err(Error::invalid("arm_ratio", "must be positive"));
    }

    let groups = group_delays(sweep.delays(), dt);
    let max_lag = groups
        .iter()
        .flat_map(|g| g.members.iter().map(|&(_, lag)| lag.unsigned_abs()))
        .max()
        .unwrap_or(0);
    let corr = Correlator::<T>::new(n);
    let shift_plan = Plan::<T>::new(n);
    let carrier = fields.carrier();
    let ratio = detector.arm_ratio;

    let mut per: Vec<Vec<T>> = fields
        .realizations()
        .par_iter()
        .map(|e| {
            realization_signal(
                e,
                &groups,
                sweep.delays(),
                max_lag,
                carrier,
                ratio,
                &corr,
                &shift_plan,
            )
        })
        .collect();

    if let Some(noise) = detector.noise {
        if !(noise.counts_per_unit > 0.0) {
            return Err(Error::invalid("counts_per_unit", "must be positive"));
        }
        for (r, sig) in per.iter_mut().enumerate() {
            let mut rng = stream(noise.seed, Purpose::DetectorNoise, r as u64);
            for s in sig.iter_mut() {
                let expected = s.as_f64() * noise.counts_per_unit;
                let counts = if expected > 0.0 {
                    rng.sample(Poisson::new(expected).expect("positive rate"))
                } else {
                    0.0
                };
                *s = T::lit(counts / noise.counts_per_unit);
            }
        }
    }

    let arm_power: Vec<T> = fields
        .realizations()
        .iter()
        .map(|e| {
            let sum = e
                .iter()
                .fold(T::zero(), |a, v| a + v.norm_sqr() * v.norm_sqr());
            sum / T::count(n)
        })
        .collect();
    let single_arm_level = mean(&arm_power) * (T::one() + ratio.powi(4));

    let n_delays = sweep.len();
    let mut signal = Vec::with_capacity(n_delays);
    let mut signal_stderr = Vec::with_capacity(n_delays);
    let mut column = vec![T::zero(); per.len()];
    for i in 0..n_delays {
        for (c, r) in column.iter_mut().zip(&per) {
            *c = r[i];
        }
        signal.push(mean(&column));
        signal_stderr.push(standard_error(&column));
    }

    let mut meta = BTreeMap::new();
    meta.insert("source_class".into(), fields.class().to_string());
    meta.insert("n_realizations".into(), fields.n_realizations().to_string());
    meta.insert("n_samples".into(), n.to_string());
    meta.insert("dt".into(), format!("{:e}", dt));
    meta.insert("arm_ratio".into(), format!("{:e}", ratio));
    Ok(Interferogram {
        delays: sweep.delays().to_vec(),
        signal,
        signal_stderr,
        single_arm_level,
        carrier,
        meta,
        realizations: Some(per),
    })
}

/// Intensity autocorrelation `<I(t) I(t+tau)> / <I>^2` for lags `0..=max_lag`,
/// straight from the sampled intensities.
pub fn direct_g2<T: Real>(fields: &FieldEnsemble<T>, max_lag: T) -> Result<G2Curve<T>> {
    let n = fields.n_samples();
    let dt = fields.dt();
    let limit = T::count(n) * dt / T::lit(4.0);
    if !(max_lag >= T::zero() && max_lag < limit) {
        return Err(Error::OverlapTooShort {
            delay: max_lag.as_f64(),
            limit: limit.as_f64(),
        });
    }
    let k_max = (max_lag / dt + T::lit(1e-9))
        .floor()
        .to_usize()
        .unwrap_or(0);
    let corr = Correlator::<T>::new(n);
    let per: Vec<(Vec<T>, T)> = fields
        .realizations()
        .par_iter()
        .map(|e| intensity_autocorrelation(e, k_max, &corr))
        .collect();

    let count = per.len();
    let m_total = per.iter().fold(T::zero(), |a, (_, m)| a + *m);
    let norm = |c: T, m: T, n: usize| {
        let mm = m / T::count(n);
        c / T::count(n) / (mm * mm)
    };
    let mut g2 = Vec::with_capacity(k_max + 1);
    let mut stderr = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let c_total = per.iter().fold(T::zero(), |a, (c, _)| a + c[k]);
        let value = norm(c_total, m_total, count);
        if !value.is_finite() {
            return Err(Error::invalid(
                "fields",
                "zero mean intensity, g2 undefined",
            ));
        }
        g2.push(value);
        let loo: Vec<T> = if count > 1 {
            per.iter()
                .map(|(c, m)| norm(c_total - c[k], m_total - *m, count - 1))
                .collect()
        } else {
            Vec::new()
        };
        stderr.push(jackknife_stderr(&loo));
    }
    let lags = (0..=k_max).map(|k| T::count(k) * dt).collect();
    G2Curve::new(lags, g2, stderr, 0, G2Method::Direct)
}

/// Overlap-averaged `sum_t I(t) I(t+k) / (N - k)` for `k = 0..=k_max`, and the record mean of `I`.
pub(crate) fn intensity_autocorrelation<T: Real>(
    e: &[Complex<T>],
    k_max: usize,
    corr: &Correlator<T>,
) -> (Vec<T>, T) {
    let n = e.len();
    let intensity: Vec<Complex<T>> = e
        .iter()
        .map(|v| Complex::new(v.norm_sqr(), T::zero()))
        .collect();
    let mean_i = intensity.iter().fold(T::zero(), |a, v| a + v.re) / T::count(n);
    let spec = corr.spectrum(intensity);
    let c = corr.correlate(&spec, &spec, k_max);
    let values = (0..=k_max)
        .map(|k| c[k_max + k].re / T::count(n - k))
        .collect();
    (values, mean_i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldgen::{gen_coherent, gen_thermal, SimulationGrid, SpectrumSpec};

    fn grid() -> SimulationGrid<f64> {
        SimulationGrid::with_default_carrier(1 << 12, 1.0).unwrap()
    }

    #[test]
    fn zero_field_gives_zero_signal() {
        let f = gen_coherent(0.0, 0.0, 2, &grid(), 1).unwrap();
        let sweep = DelaySweep::symmetric(20, 1.0, 5.0).unwrap();
        let ig = tpa_interferogram(&f, &sweep).unwrap();
        assert!(ig.signal.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn coherent_trace_follows_the_closed_form() {
        // |1 + e^{-i w tau}|^4 = (2 + 2 cos w tau)^2
        let f = gen_coherent(1.0, 0.0, 1, &grid(), 1).unwrap();
        let sweep = DelaySweep::symmetric(40, 0.5, 5.0).unwrap();
        let ig = tpa_interferogram(&f, &sweep).unwrap();
        for (&tau, &s) in ig.delays.iter().zip(&ig.signal) {
            let c = (f.carrier() * tau).cos();
            let want = (2.0 + 2.0 * c).powi(2);
            assert!((s - want).abs() < 1e-9, "tau {tau}: {s} vs {want}");
        }
        assert!((ig.single_arm_level - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_delays_beyond_quarter_record() {
        let f = gen_coherent(1.0, 0.0, 1, &grid(), 1).unwrap();
        let sweep = DelaySweep::new(vec![0.0, 1025.0], 4.0).unwrap();
        assert!(matches!(
            tpa_interferogram(&f, &sweep),
            Err(Error::OverlapTooShort { .. })
        ));
        assert!(matches!(
            direct_g2(&f, 1024.0),
            Err(Error::OverlapTooShort { .. })
        ));
    }

    #[test]
    fn rejects_undersampled_fringes() {
        let f = gen_coherent(1.0, 0.0, 1, &grid(), 1).unwrap();
        let sweep = DelaySweep::symmetric(5, 2.0, 4.0).unwrap();
        assert!(tpa_interferogram(&f, &sweep).is_err());
    }

    #[test]
    fn sweep_validation() {
        assert!(DelaySweep::new(vec![0.0, 0.0, 1.0], 4.0).is_err());
        assert!(DelaySweep::new(vec![0.0, 1.0], 3.0).is_err());
        let s = DelaySweep::<f64>::for_fringes(100.0, 1.0, 0.4 * std::f64::consts::PI, 0.0, 4.0)
            .unwrap();
        assert!(s.delays()[s.len() - 1] >= 100.0);
        // five samples per fringe: the point count is a multiple of five
        assert_eq!(s.len() % 5, 0);
        assert_eq!(s.delays()[s.len() / 2], 0.0);
    }

    #[test]
    fn coherent_direct_g2_is_exactly_one() {
        let f = gen_coherent(1.3, 0.02, 4, &grid(), 3).unwrap();
        let c = direct_g2(&f, 50.0).unwrap();
        assert!(c.g2.iter().all(|g| (g - 1.0).abs() < 1e-12));
        assert!(c.stderr.iter().all(|s| s.abs() < 1e-12));
    }

    #[test]
    fn interferogram_is_symmetric_in_delay() {
        let spec = SpectrumSpec::gaussian(0.0, 0.12).unwrap();
        let f = gen_thermal(&spec, 4, &grid(), 11).unwrap();
        let sweep = DelaySweep::symmetric(60, 1.0, 5.0).unwrap();
        let ig = tpa_interferogram(&f, &sweep).unwrap();
        let m = ig.len_half();
        for k in 1..=m {
            let (a, b) = (ig.signal[m - k], ig.signal[m + k]);
            assert!((a - b).abs() < 1e-9 * a.max(1.0));
        }
    }

    impl<T> Interferogram<T> {
        fn len_half(&self) -> usize {
            self.delays.len() / 2
        }
    }
}
