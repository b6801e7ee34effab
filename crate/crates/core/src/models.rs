//! Analytic photon-statistics models.
//!
//! * Lachs superposition of independent coherent and thermal light:
//!   `x = n_ther / n = 1 - sqrt(2 - g2(0))`, inversely `g2(0) = 1 + 2x - x^2`.
//! * Near-threshold laser: stationary intensity distribution of the
//!   semi-classical Fokker-Planck model in scaled units,
//!   `W(I) ~ exp(-(I - a)^2 / 4)` on `I >= 0`, with pump parameter `a`.
//! * Siegert relation `g2(tau) = 1 + |g1(tau)|^2` for chaotic fields.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fieldgen::FieldEnsemble;
use crate::fourier::Correlator;
use crate::optics::direct_g2;
use crate::quadrature::integrate;
use crate::scalar::Real;

/// Thermal photon fraction of a coherent + thermal mixture with the given g2(0).
pub fn lachs_thermal_fraction<T: Real>(g2_zero: T) -> Result<T> {
    if !(g2_zero >= T::one() && g2_zero <= T::lit(2.0)) {
        return Err(Error::Domain {
            what: "g2(0)",
            value: g2_zero.as_f64(),
            lo: 1.0,
            hi: 2.0,
        });
    }
    Ok(T::one() - (T::lit(2.0) - g2_zero).sqrt())
}

/// Coherent photon fraction `n_coh / n = sqrt(2 - g2(0))`.
pub fn lachs_coherent_fraction<T: Real>(g2_zero: T) -> Result<T> {
    lachs_thermal_fraction(g2_zero).map(|x| T::one() - x)
}

/// g2(0) of a mixture with thermal fraction `x`.
pub fn lachs_g2<T: Real>(x: T) -> Result<T> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::Domain {
            what: "thermal fraction",
            value: x.as_f64(),
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(T::one() + T::lit(2.0) * x - x * x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskenParams<T> {
    /// Pump parameter `a`; threshold at 0.
    pub pump: T,
    /// Fraction of photons in an additional pump-independent thermal background.
    pub ase_excess: T,
}

impl<T: Real> RiskenParams<T> {
    pub fn new(pump: T, ase_excess: T) -> Result<Self> {
        if !pump.is_finite() {
            return Err(Error::invalid("pump", "must be finite"));
        }
        if !(ase_excess >= T::zero() && ase_excess < T::one()) {
            return Err(Error::Domain {
                what: "ase_excess",
                value: ase_excess.as_f64(),
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self { pump, ase_excess })
    }

    pub fn at_pump(pump: T) -> Self {
        Self {
            pump,
            ase_excess: T::zero(),
        }
    }
}

const RISKEN_TOL: f64 = 1e-9;

/// Unnormalized moments `M_n = int_0^inf I^n W(I) dI`, `n = 0, 1, 2`, with the
/// weight rescaled to 1 at its maximum.
pub fn risken_moments<T: Real>(pump: T) -> [T; 3] {
    let peak = pump.max(T::zero());
    let quarter = T::lit(0.25);
    let offset = (peak - pump) * (peak - pump);
    let weight = move |i: T| (-((i - pump) * (i - pump) - offset) * quarter).exp();
    // W decays by exp(-400) within 40 units of its maximum, in either regime.
    let upper = peak + T::lit(40.0);
    let tol = T::lit(RISKEN_TOL);
    let moment = |n: i32| {
        let f = |i: T| i.powi(n) * weight(i);
        let below = if peak > T::zero() {
            integrate(f, T::zero(), peak, tol)
        } else {
            T::zero()
        };
        below + integrate(f, peak, upper, tol)
    };
    [moment(0), moment(1), moment(2)]
}

/// Mean intensity `<I>` of the threshold distribution.
pub fn risken_mean_intensity<T: Real>(pump: T) -> T {
    let [m0, m1, _] = risken_moments(pump);
    m1 / m0
}

/// Output power relative to threshold, `<I>(a) / <I>(0)`.
pub fn risken_relative_power<T: Real>(pump: T) -> T {
    risken_mean_intensity(pump) / risken_mean_intensity(T::zero())
}

/// g2(0) of the laser-threshold model without any extra background.
pub fn risken_base_g2<T: Real>(pump: T) -> T {
    let [m0, m1, m2] = risken_moments(pump);
    (m2 * m0 / (m1 * m1)).max(T::one()).min(T::lit(2.0))
}

/// g2(0) of the laser-threshold model with the excess thermal background
/// layered on via the Lachs mixture law.
pub fn risken_g2<T: Real>(params: &RiskenParams<T>) -> T {
    let base = risken_base_g2(params.pump);
    if params.ase_excess == T::zero() {
        return base;
    }
    let x_laser = lachs_thermal_fraction(base).expect("base g2 clamped to [1, 2]");
    let x = params.ase_excess + (T::one() - params.ase_excess) * x_laser;
    lachs_g2(x.min(T::one())).expect("combined fraction in [0, 1]")
}

/// Closed-form moments of the truncated Gaussian (variance 2) through `erfc`,
/// normalized like [`risken_moments`]. Loses precision well below threshold,
/// where the `erfc` terms cancel.
pub fn risken_moments_closed_form(pump: f64) -> [f64; 3] {
    let a = pump;
    let sigma2: f64 = 2.0;
    let sigma = sigma2.sqrt();
    let peak = a.max(0.0);
    let shift = (peak - a).powi(2) / 4.0;
    // int_0^inf exp(-(I-a)^2/4) dI = sigma sqrt(pi/2) erfc(-a / (sigma sqrt 2))
    let m0 = sigma * (std::f64::consts::PI / 2.0).sqrt() * libm::erfc(-a / (sigma * 2f64.sqrt()));
    let w0 = (-a * a / 4.0).exp();
    let m1 = a * m0 + sigma2 * w0;
    let centered2 = sigma2 * m0 - sigma2 * a * w0;
    let m2 = centered2 + 2.0 * a * m1 - a * a * m0;
    let s = shift.exp();
    [m0 * s, m1 * s, m2 * s]
}

/// Tabulated model curve: `(pump, relative power, g2(0))` rows.
pub fn risken_curve(pumps: &[f64], ase_excess: f64) -> Result<Vec<[f64; 3]>> {
    pumps
        .iter()
        .map(|&a| {
            let p = RiskenParams::new(a, ase_excess)?;
            Ok([a, risken_relative_power(a), risken_g2(&p)])
        })
        .collect()
}

/// Maximum Siegert residual `|g2(tau) - 1 - |g1(tau)|^2|` over lags up to five
/// coherence times. Only chaotic ensembles are accepted.
pub fn siegert_check<T: Real>(fields: &FieldEnsemble<T>) -> Result<T> {
    if !fields.class().is_chaotic() {
        return Err(Error::NotChaotic {
            class: fields.class().to_string(),
        });
    }
    let n = fields.n_samples();
    let dt = fields.dt();
    let limit = T::count(n / 4 - 1) * dt;
    let probe = direct_g2(fields, limit)?;
    let tau_c = crate::dsp::coherence_time(&probe)?;
    siegert_residual(fields, (tau_c * T::lit(5.0)).min(limit))
}

/// Siegert residual for any ensemble, over lags `0..=max_lag`.
pub fn siegert_residual<T: Real>(fields: &FieldEnsemble<T>, max_lag: T) -> Result<T> {
    let g2 = direct_g2(fields, max_lag)?;
    let g1 = field_autocorrelation(fields, g2.lags.len() - 1);
    Ok(g2
        .g2
        .iter()
        .zip(&g1)
        .map(|(&g, c)| (g - T::one() - c.norm_sqr()).abs())
        .fold(T::zero(), T::max))
}

/// Normalized first-order coherence `<E*(t) E(t+tau)> / <I>` at integer lags.
pub fn field_autocorrelation<T: Real>(fields: &FieldEnsemble<T>, k_max: usize) -> Vec<Complex<T>> {
    let n = fields.n_samples();
    let corr = Correlator::<T>::new(n);
    let per: Vec<Vec<Complex<T>>> = fields
        .realizations()
        .par_iter()
        .map(|e| {
            let spec = corr.spectrum(e.iter().copied());
            let c = corr.correlate(&spec, &spec, k_max);
            // c(k) = sum_t E(t) E*(t - k); conjugate for <E*(t) E(t + k)>
            (0..=k_max)
                .map(|k| c[k_max + k].conj() / T::count(n - k))
                .collect()
        })
        .collect();
    let mean_i = fields.sample_mean_intensity();
    let count = T::count(per.len());
    (0..=k_max)
        .map(|k| {
            per.iter()
                .fold(Complex::new(T::zero(), T::zero()), |a, r| a + r[k])
                / count
                / mean_i
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lachs_limits() {
        assert_eq!(lachs_thermal_fraction(2.0).unwrap(), 1.0);
        assert_eq!(lachs_thermal_fraction(1.0).unwrap(), 0.0);
        assert_eq!(lachs_g2(0.0).unwrap(), 1.0);
        assert_eq!(lachs_g2(0.5).unwrap(), 1.75);
        assert!((lachs_g2(0.8f64).unwrap() - 1.96).abs() < 1e-15);
    }

    #[test]
    fn lachs_reported_operating_points() {
        let x = lachs_thermal_fraction(1.67).unwrap();
        assert!((x - (1.0 - 0.33f64.sqrt())).abs() < 1e-15);
        assert!((x - 0.4255).abs() < 1e-4);
        assert!((lachs_coherent_fraction(1.67).unwrap() - 0.33f64.sqrt()).abs() < 1e-15);
        // the quoted 83 % thermal fraction corresponds to g2(0) = 1.9711
        assert!((lachs_g2(0.83f64).unwrap() - 1.9711).abs() < 1e-12);
    }

    #[test]
    fn lachs_domain_errors() {
        assert!(lachs_thermal_fraction(0.99).is_err());
        assert!(lachs_thermal_fraction(2.01).is_err());
        assert!(lachs_g2(-0.1).is_err());
        assert!(lachs_g2(1.1).is_err());
    }

    #[test]
    fn risken_at_threshold_is_half_gaussian() {
        let g = risken_g2(&RiskenParams::at_pump(0.0));
        assert!((g - std::f64::consts::FRAC_PI_2).abs() < 1e-6, "{g}");
    }

    #[test]
    fn quadrature_agrees_with_closed_form() {
        for a in [-5.0, -2.0, -0.5, 0.0, 1.0, 3.0, 7.5, 10.0] {
            let q = risken_moments(a);
            let c = risken_moments_closed_form(a);
            for n in 0..3 {
                assert!(
                    ((q[n] - c[n]) / c[n]).abs() < 1e-8,
                    "a={a} n={n}: {} vs {}",
                    q[n],
                    c[n]
                );
            }
        }
    }

    #[test]
    fn relative_power_is_one_at_threshold() {
        assert!((risken_relative_power(0.0f64) - 1.0).abs() < 1e-12);
        assert!(risken_relative_power(5.0) > risken_relative_power(1.0));
    }

    #[test]
    fn excess_background_raises_curve() {
        let base = risken_g2(&RiskenParams::at_pump(4.0));
        let extra = risken_g2(&RiskenParams::new(4.0, 0.05).unwrap());
        assert!(extra > base);
        assert!(RiskenParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn curve_rows() {
        let rows = risken_curve(&[-1.0, 0.0, 1.0], 0.0).unwrap();
        assert_eq!(rows.len(), 3);
        assert!((rows[1][1] - 1.0).abs() < 1e-12);
        assert!(rows[0][2] > rows[1][2] && rows[1][2] > rows[2][2]);
    }
}
