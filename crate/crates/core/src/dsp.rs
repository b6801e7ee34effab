//! Extraction of g2 from TPA interferograms.
//!
//! The fringe-free part of the interferogram is
//! `2 <I^2> + 4 <I>^2 g2(tau)`. Normalizing it by its plateau value at large
//! delay gives `r(tau) = (g2(0) + 2 g2(tau)) / (g2(0) + 2)`, so the zero-delay
//! ratio fixes `g2(0) = 2 r(0) / (3 - r(0))` and every other lag follows from
//! `g2(tau) = (r(tau) (g2(0) + 2) - g2(0)) / 2`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{bin_frequency, Plan};
use crate::optics::Interferogram;
use crate::scalar::Real;
use crate::stats::jackknife_stderr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum G2Method {
    Direct,
    TpaFiltered,
}

impl G2Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            G2Method::Direct => "direct",
            G2Method::TpaFiltered => "tpa_filtered",
        }
    }
}

/// Estimated `g2(tau)` with per-lag standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Curve<T> {
    pub lags: Vec<T>,
    pub g2: Vec<T>,
    pub stderr: Vec<T>,
    pub g2_zero: T,
    pub g2_zero_stderr: T,
    pub zero_index: usize,
    pub method: G2Method,
}

impl<T: Real> G2Curve<T> {
    pub fn new(
        lags: Vec<T>,
        g2: Vec<T>,
        stderr: Vec<T>,
        zero_index: usize,
        method: G2Method,
    ) -> Result<Self> {
        if lags.len() != g2.len() || lags.len() != stderr.len() || zero_index >= lags.len() {
            return Err(Error::invalid(
                "curve",
                "lags, values and errors must have equal lengths",
            ));
        }
        if let Some((lag, value)) = lags.iter().zip(&g2).find(|(_, g)| !(**g >= T::zero())) {
            return Err(Error::NegativeG2 {
                lag: lag.as_f64(),
                value: value.as_f64(),
            });
        }
        Ok(Self {
            g2_zero: g2[zero_index],
            g2_zero_stderr: stderr[zero_index],
            lags,
            g2,
            stderr,
            zero_index,
            method,
        })
    }
}

/// Low-pass filter shape over the delay axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSettings<T> {
    /// Stop-band edge as a fraction of the carrier.
    pub cutoff_fraction: T,
    /// Raised-cosine transition width as a fraction of the carrier.
    pub transition_fraction: T,
}

impl<T: Real> Default for FilterSettings<T> {
    fn default() -> Self {
        Self {
            cutoff_fraction: T::lit(0.5),
            transition_fraction: T::lit(0.125),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings<T> {
    pub filter: FilterSettings<T>,
    /// Fraction of each half of the delay range, counted from its outer end,
    /// that is averaged as the plateau.
    pub plateau_fraction: T,
}

impl<T: Real> Default for AnalysisSettings<T> {
    fn default() -> Self {
        Self {
            filter: FilterSettings::default(),
            plateau_fraction: T::lit(0.2),
        }
    }
}

fn uniform_step<T: Real>(delays: &[T]) -> Result<T> {
    if delays.len() < 2 {
        return Err(Error::invalid("delays", "need at least two delays"));
    }
    let step = (delays[delays.len() - 1] - delays[0]) / T::count(delays.len() - 1);
    let tol = step.abs() * T::lit(1e-6);
    if delays
        .windows(2)
        .any(|w| ((w[1] - w[0]) - step).abs() > tol)
    {
        return Err(Error::invalid("delays", "delay grid is not uniform"));
    }
    Ok(step)
}

/// Baseband component of the TPA signal.
pub fn lowpass_envelope<T: Real>(ig: &Interferogram<T>) -> Result<Vec<T>> {
    lowpass_envelope_with(
        &ig.delays,
        &ig.signal,
        ig.carrier,
        &FilterSettings::default(),
    )
}

pub fn lowpass_envelope_with<T: Real>(
    delays: &[T],
    signal: &[T],
    carrier: T,
    settings: &FilterSettings<T>,
) -> Result<Vec<T>> {
    filter(delays, signal, carrier, settings, true)
}

fn filter<T: Real>(
    delays: &[T],
    signal: &[T],
    carrier: T,
    settings: &FilterSettings<T>,
    check_bands: bool,
) -> Result<Vec<T>> {
    if delays.len() != signal.len() {
        return Err(Error::invalid("signal", "length differs from delays"));
    }
    let step = uniform_step(delays)?;
    let n = signal.len();
    let cutoff = carrier * settings.cutoff_fraction;
    let width = carrier * settings.transition_fraction;
    let pass_edge = cutoff - width;
    if !(width > T::zero() && pass_edge > T::zero()) {
        return Err(Error::invalid(
            "filter",
            "transition must be positive and narrower than the cutoff",
        ));
    }
    if !(cutoff < T::PI() / step) {
        return Err(Error::invalid(
            "filter",
            "cutoff above the delay-grid Nyquist frequency",
        ));
    }

    // A linear trend would wrap into a sawtooth; take it out and restore it
    // afterwards, since an ideal low-pass leaves a line unchanged.
    let trend = slope(delays, signal);
    let centre = delays.iter().fold(T::zero(), |a, &d| a + d) / T::count(n);
    let line = |d: T| trend * (d - centre);

    let plan = Plan::<T>::new(n);
    let mut buf: Vec<Complex<T>> = signal
        .iter()
        .zip(delays)
        .map(|(&s, &d)| Complex::new(s - line(d), T::zero()))
        .collect();
    plan.forward(&mut buf);

    let mut transition_energy = T::zero();
    let mut ac_energy = T::zero();
    for (k, v) in buf.iter_mut().enumerate() {
        let nu = bin_frequency(k, n, step).abs();
        let energy = v.norm_sqr();
        if k != 0 {
            ac_energy = ac_energy + energy;
        }
        let gain = if nu <= pass_edge {
            T::one()
        } else if nu <= cutoff {
            transition_energy = transition_energy + energy;
            T::lit(0.5) * (T::one() + (T::PI() * (nu - pass_edge) / width).cos())
        } else {
            T::zero()
        };
        *v = *v * gain;
    }
    if check_bands && ac_energy > T::zero() {
        let fraction = transition_energy / ac_energy;
        if fraction >= T::lit(0.01) {
            return Err(Error::BandOverlap {
                fraction: fraction.as_f64(),
            });
        }
    }

    plan.inverse(&mut buf);
    let inv_n = T::one() / T::count(n);
    let norm = signal.iter().fold(T::zero(), |a, &s| a + s * s).sqrt();
    let residue = buf.iter().fold(T::zero(), |a, v| a + v.im * v.im).sqrt() * inv_n;
    let tol = T::lit(1e-9).max(T::epsilon() * T::count(n).sqrt() * T::lit(10.0));
    if residue > tol * norm.max(T::min_positive_value()) {
        return Err(Error::invalid(
            "filter",
            "filtered signal has a non-negligible imaginary part",
        ));
    }
    Ok(buf
        .into_iter()
        .zip(delays)
        .map(|(v, &d)| v.re * inv_n + line(d))
        .collect())
}

struct Plateau {
    left: Vec<usize>,
    right: Vec<usize>,
}

fn plateau_indices<T: Real>(delays: &[T], fraction: T) -> Result<Plateau> {
    let (lo, hi) = (delays[0], delays[delays.len() - 1]);
    let left_edge = lo + (T::zero() - lo) * fraction;
    let right_edge = hi - hi * fraction;
    let left: Vec<usize> = (0..delays.len())
        .filter(|&i| delays[i] <= left_edge)
        .collect();
    let right: Vec<usize> = (0..delays.len())
        .filter(|&i| delays[i] >= right_edge)
        .collect();
    if left.len() < 2 || right.len() < 2 || !(lo < T::zero() && hi > T::zero()) {
        return Err(Error::invalid(
            "delays",
            "delay range must extend on both sides of zero with a plateau",
        ));
    }
    Ok(Plateau { left, right })
}

fn zero_index<T: Real>(delays: &[T], step: T) -> Result<usize> {
    let (idx, tau) = delays
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite delays"))
        .expect("nonempty");
    if tau.abs() > step.abs() * T::lit(1e-6) {
        return Err(Error::invalid("delays", "delay grid must contain tau = 0"));
    }
    Ok(idx)
}

fn plateau_mean<T: Real>(filtered: &[T], plateau: &Plateau) -> T {
    let all = plateau.left.iter().chain(&plateau.right);
    let count = plateau.left.len() + plateau.right.len();
    all.fold(T::zero(), |a, &i| a + filtered[i]) / T::count(count)
}

/// Normalized g2 curve and g2(0) from a filtered envelope.
fn invert<T: Real>(filtered: &[T], baseline: T, zero: usize) -> Result<(Vec<T>, T)> {
    if !(baseline > T::zero()) {
        return Err(Error::invalid("signal", "plateau level must be positive"));
    }
    let r0 = filtered[zero] / baseline;
    let three = T::lit(3.0);
    if !(r0 < three) {
        return Err(Error::Domain {
            what: "zero-delay ratio",
            value: r0.as_f64(),
            lo: 0.0,
            hi: 3.0,
        });
    }
    let two = T::lit(2.0);
    let g0 = two * r0 / (three - r0);
    let curve = filtered
        .iter()
        .map(|&f| (f / baseline * (g0 + two) - g0) / two)
        .collect();
    Ok((curve, g0))
}

fn slope<T: Real>(x: &[T], y: &[T]) -> T {
    let n = T::count(x.len());
    let mx = x.iter().fold(T::zero(), |a, &v| a + v) / n;
    let my = y.iter().fold(T::zero(), |a, &v| a + v) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy = sxy + (a - mx) * (b - my);
        sxx = sxx + (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// g2 curve by comparing the filtered zero-delay signal with the plateau far
/// beyond the coherence time.
pub fn g2_from_interferogram<T: Real>(ig: &Interferogram<T>) -> Result<G2Curve<T>> {
    g2_from_interferogram_with(ig, &AnalysisSettings::default())
}

pub fn g2_from_interferogram_with<T: Real>(
    ig: &Interferogram<T>,
    settings: &AnalysisSettings<T>,
) -> Result<G2Curve<T>> {
    let step = uniform_step(&ig.delays)?;
    let zero = zero_index(&ig.delays, step)?;
    let plateau = plateau_indices(&ig.delays, settings.plateau_fraction)?;
    let filtered = lowpass_envelope_with(&ig.delays, &ig.signal, ig.carrier, &settings.filter)?;
    let baseline = plateau_mean(&filtered, &plateau);
    let (g2, _) = invert(&filtered, baseline, zero)?;

    let provisional = G2Curve::new(
        ig.delays.clone(),
        g2.clone(),
        vec![T::nan(); g2.len()],
        zero,
        G2Method::TpaFiltered,
    )?;
    let tau_c = coherence_time(&provisional).ok();
    let relative_slopes = |filtered: &[T], baseline: T, tau_c: T| {
        [&plateau.left, &plateau.right].map(|side| {
            let x: Vec<T> = side.iter().map(|&i| ig.delays[i]).collect();
            let y: Vec<T> = side.iter().map(|&i| filtered[i]).collect();
            (slope(&x, &y) / baseline * tau_c).abs()
        })
    };

    let jackknife = match ig.realizations.as_deref() {
        Some(per) if per.len() > 1 => {
            Some(jackknife_curve(ig, per, settings, &plateau, zero, tau_c)?)
        }
        _ => None,
    };
    if let Some(tau_c) = tau_c {
        // With per-realization signals, a slope must also be resolved above
        // the ensemble noise to count as a missing plateau.
        let noise = jackknife.as_ref().map(|j| j.slope_stderr);
        for (side, relative) in relative_slopes(&filtered, baseline, tau_c)
            .into_iter()
            .enumerate()
        {
            let resolved = noise.is_none_or(|se| relative > T::lit(3.0) * se[side]);
            if relative > T::lit(0.01) && resolved {
                return Err(Error::PlateauNotFound {
                    slope: relative.as_f64(),
                });
            }
        }
    }

    let stderr = match jackknife {
        Some(j) => j.stderr,
        None => vec![T::nan(); g2.len()],
    };
    G2Curve::new(ig.delays.clone(), g2, stderr, zero, G2Method::TpaFiltered)
}

struct Jackknife<T> {
    stderr: Vec<T>,
    /// Standard errors of the relative plateau slopes, left and right.
    slope_stderr: [T; 2],
}

fn jackknife_curve<T: Real>(
    ig: &Interferogram<T>,
    per: &[Vec<T>],
    settings: &AnalysisSettings<T>,
    plateau: &Plateau,
    zero: usize,
    tau_c: Option<T>,
) -> Result<Jackknife<T>> {
    let n = per.len();
    let len = ig.delays.len();
    let mut total = vec![T::zero(); len];
    for r in per {
        for (t, &v) in total.iter_mut().zip(r) {
            *t = *t + v;
        }
    }
    let denom = T::count(n - 1);
    let mut replicas: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut slopes: [Vec<T>; 2] = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for r in per {
        let loo: Vec<T> = total
            .iter()
            .zip(r)
            .map(|(&t, &v)| (t - v) / denom)
            .collect();
        // band separation is judged on the full-ensemble signal only
        let filtered = filter(&ig.delays, &loo, ig.carrier, &settings.filter, false)?;
        let baseline = plateau_mean(&filtered, plateau);
        if let Some(tau_c) = tau_c {
            for (k, side) in [&plateau.left, &plateau.right].into_iter().enumerate() {
                let x: Vec<T> = side.iter().map(|&i| ig.delays[i]).collect();
                let y: Vec<T> = side.iter().map(|&i| filtered[i]).collect();
                slopes[k].push(slope(&x, &y) / baseline * tau_c);
            }
        }
        let (curve, _) = invert(&filtered, baseline, zero)?;
        replicas.push(curve);
    }
    let mut column = vec![T::zero(); n];
    let stderr = (0..len)
        .map(|i| {
            for (c, rep) in column.iter_mut().zip(&replicas) {
                *c = rep[i];
            }
            jackknife_stderr(&column)
        })
        .collect();
    let slope_stderr = slopes.map(|s| {
        if s.is_empty() {
            T::zero()
        } else {
            jackknife_stderr(&s)
        }
    });
    Ok(Jackknife {
        stderr,
        slope_stderr,
    })
}

/// Half width at half maximum of `g2(tau) - 1`, averaged over the sides of
/// zero delay present in the curve.
pub fn coherence_time<T: Real>(curve: &G2Curve<T>) -> Result<T> {
    let g0 = curve.g2_zero;
    if !(g0 > T::lit(1.05)) {
        return Err(Error::UndefinedCoherenceTime {
            g2_zero: g0.as_f64(),
        });
    }
    let half = (g0 - T::one()) / T::lit(2.0);
    let z = curve.zero_index;
    let crossing = |indices: &mut dyn Iterator<Item = usize>| -> Option<T> {
        let mut prev = z;
        for i in indices {
            let excess = curve.g2[i] - T::one();
            if excess <= half {
                let e_prev = curve.g2[prev] - T::one();
                let frac = (e_prev - half) / (e_prev - excess);
                let lag = curve.lags[prev] + (curve.lags[i] - curve.lags[prev]) * frac;
                return Some((lag - curve.lags[z]).abs());
            }
            prev = i;
        }
        None
    };
    let right = crossing(&mut (z + 1..curve.lags.len()));
    let left = crossing(&mut (0..z).rev());
    match (left, right) {
        (Some(a), Some(b)) => Ok((a + b) / T::lit(2.0)),
        (Some(a), None) | (None, Some(a)) => Ok(a),
        (None, None) => Err(Error::UndefinedCoherenceTime {
            g2_zero: g0.as_f64(),
        }),
    }
}

/// Diagnostic g2(0) from a least-squares parabola through the five bins
/// around zero delay.
pub fn peak_fit_g2_zero<T: Real>(curve: &G2Curve<T>) -> T {
    let z = curve.zero_index;
    let lo = z.saturating_sub(2);
    let hi = (z + 3).min(curve.lags.len());
    if hi - lo < 3 {
        return curve.g2_zero;
    }
    // Fit y = a + b x + c x^2 by normal equations.
    let mut s = [T::zero(); 5];
    let mut t = [T::zero(); 3];
    for i in lo..hi {
        let x = curve.lags[i] - curve.lags[z];
        let y = curve.g2[i];
        let mut p = T::one();
        for (k, sk) in s.iter_mut().enumerate() {
            *sk = *sk + p;
            if k < 3 {
                t[k] = t[k] + p * y;
            }
            p = p * x;
        }
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = |m: [[T; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    let mut ma = m;
    for (row, &ti) in ma.iter_mut().zip(&t) {
        row[0] = ti;
    }
    det(ma) / d
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn synthetic(delays: Vec<f64>, signal: Vec<f64>, carrier: f64) -> Interferogram<f64> {
        let n = delays.len();
        Interferogram {
            delays,
            signal,
            signal_stderr: vec![f64::NAN; n],
            single_arm_level: 1.0,
            carrier,
            meta: BTreeMap::new(),
            realizations: None,
        }
    }

    fn grid(n: i32) -> Vec<f64> {
        (-n..=n).map(|k| k as f64).collect()
    }

    #[test]
    fn all_zero_signal_filters_to_zero() {
        let ig = synthetic(grid(50), vec![0.0; 101], 1.0);
        assert!(lowpass_envelope(&ig).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn removes_fringes_and_keeps_a_slow_envelope() {
        let carrier = 0.4 * std::f64::consts::PI;
        // 405 samples hold a whole number of 5-sample fringe periods
        let delays = grid(202);
        let env = |t: f64| 3.0 + (-(t / 30.0).powi(2)).exp();
        let signal: Vec<f64> = delays
            .iter()
            .map(|&t| env(t) + 2.0 * (carrier * t).cos() * env(t))
            .collect();
        let ig = synthetic(delays.clone(), signal, carrier);
        let f = lowpass_envelope(&ig).unwrap();
        for (&t, &v) in delays.iter().zip(&f) {
            assert!((v - env(t)).abs() < 1e-6, "tau {t}: {v}");
        }
    }

    #[test]
    fn rejects_energy_in_transition_band() {
        let carrier = 1.0;
        let delays = grid(200);
        let signal: Vec<f64> = delays.iter().map(|&t| 1.0 + (0.45 * t).cos()).collect();
        let ig = synthetic(delays, signal, carrier);
        assert!(matches!(
            lowpass_envelope(&ig),
            Err(Error::BandOverlap { .. })
        ));
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let ig = synthetic(vec![-1.0, 0.0, 2.0], vec![1.0; 3], 1.0);
        assert!(lowpass_envelope(&ig).is_err());
    }

    #[test]
    fn inversion_recovers_known_g2() {
        // baseband of a source with g2(tau) = 1 + 0.6 exp(-(tau/20)^2)
        let g = |t: f64| 1.0 + 0.6 * (-(t / 20.0_f64).powi(2)).exp();
        let delays = grid(250);
        let signal: Vec<f64> = delays.iter().map(|&t| 2.0 * g(0.0) + 4.0 * g(t)).collect();
        let ig = synthetic(delays.clone(), signal, 1.2);
        let c = g2_from_interferogram(&ig).unwrap();
        assert!((c.g2_zero - 1.6).abs() < 1e-9);
        for (&t, &v) in delays.iter().zip(&c.g2) {
            assert!((v - g(t)).abs() < 1e-6);
        }
        let tau_c = coherence_time(&c).unwrap();
        assert!((tau_c - 20.0 * 2f64.ln().sqrt()).abs() < 0.05);
        assert!((peak_fit_g2_zero(&c) - 1.6).abs() < 1e-3);
    }

    #[test]
    fn sloped_plateau_is_rejected() {
        let g = |t: f64| 1.0 + (-(t / 20.0_f64).powi(2)).exp();
        let delays = grid(250);
        let signal: Vec<f64> = delays
            .iter()
            .map(|&t| 2.0 * g(0.0) + 4.0 * g(t) + 0.01 * t)
            .collect();
        let ig = synthetic(delays, signal, 1.2);
        let r = g2_from_interferogram(&ig);
        assert!(matches!(r, Err(Error::PlateauNotFound { .. })), "{r:?}");
    }

    #[test]
    fn plateau_slope_must_exceed_ensemble_noise() {
        let g = |t: f64| 1.0 + (-(t / 20.0_f64).powi(2)).exp();
        let delays = grid(250);
        let with_slopes = |slopes: &[f64]| {
            let per: Vec<Vec<f64>> = slopes
                .iter()
                .map(|&a| {
                    delays
                        .iter()
                        .map(|&t| 2.0 * g(0.0) + 4.0 * g(t) + a * t)
                        .collect()
                })
                .collect();
            let mut ig = synthetic(delays.clone(), vec![0.0; delays.len()], 1.2);
            for (i, s) in ig.signal.iter_mut().enumerate() {
                *s = per.iter().map(|r| r[i]).sum::<f64>() / per.len() as f64;
            }
            ig.realizations = Some(per);
            g2_from_interferogram(&ig)
        };
        // same mean slope as the rejected case, but unresolved by the spread
        let noisy: Vec<f64> = (0..8).map(|r| 0.01 + 0.05 * (r as f64 - 3.5)).collect();
        assert!(with_slopes(&noisy).is_ok());
        let r = with_slopes(&[0.01; 8]);
        assert!(matches!(r, Err(Error::PlateauNotFound { .. })), "{r:?}");
    }

    #[test]
    fn flat_curve_has_no_coherence_time() {
        let c = G2Curve::new(
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            0,
            G2Method::Direct,
        )
        .unwrap();
        assert!(matches!(
            coherence_time(&c),
            Err(Error::UndefinedCoherenceTime { .. })
        ));
    }

    #[test]
    fn negative_values_are_an_error() {
        let r = G2Curve::new(
            vec![0.0, 1.0],
            vec![1.0, -0.1],
            vec![0.0, 0.0],
            0,
            G2Method::Direct,
        );
        assert!(matches!(r, Err(Error::NegativeG2 { .. })));
    }

    #[test]
    fn grid_without_zero_is_rejected() {
        let delays: Vec<f64> = (-50..50).map(|k| k as f64 + 0.5).collect();
        let ig = synthetic(delays, vec![6.0; 100], 1.2);
        assert!(g2_from_interferogram(&ig).is_err());
    }
}
