use g2lab::dsp::{
    coherence_time, g2_from_interferogram, lowpass_envelope, lowpass_envelope_with, FilterSettings,
};
use g2lab::fieldgen::{
    gen_coherent, gen_mixture, gen_thermal, FieldEnsemble, MixtureSpec, SimulationGrid,
    SpectrumSpec,
};
use g2lab::models::lachs_thermal_fraction;
use g2lab::optics::{direct_g2, tpa_interferogram, DelaySweep, Interferogram};
use std::f64::consts::LN_2;

fn grid(n: usize) -> SimulationGrid<f64> {
    SimulationGrid::with_default_carrier(n, 1.0).unwrap()
}

fn measure(fields: &FieldEnsemble<f64>, half_range: f64, line: f64) -> Interferogram<f64> {
    let sweep =
        DelaySweep::for_fringes(half_range, fields.dt(), fields.carrier(), line, 4.0).unwrap();
    tpa_interferogram(fields, &sweep).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn thermal_chain_gives_two() {
    let spec = SpectrumSpec::gaussian(0.0, 0.1).unwrap();
    let fields = gen_thermal(&spec, 64, &grid(1 << 14), 1).unwrap();
    let c = g2_from_interferogram(&measure(&fields, 300.0, 0.0)).unwrap();
    assert!((c.g2_zero - 2.0).abs() < 0.05, "{}", c.g2_zero);
    assert!(c.g2_zero <= 2.0 + 3.0 * c.g2_zero_stderr + 0.05);
    let d = direct_g2(&fields, 300.0).unwrap();
    assert!((c.g2_zero - d.g2_zero).abs() <= 0.05);
    // tail returns to one within its errors
    let last = c.g2.len() - 1;
    assert!(
        (c.g2[last] - 1.0).abs() < 3.0 * c.stderr[last] + 0.01,
        "{} +/- {}",
        c.g2[last],
        c.stderr[last]
    );
}

#[test]
fn coherent_baseband_is_flat_and_g2_is_one() {
    let fields = gen_coherent(1.0, 0.02, 8, &grid(1 << 14), 2).unwrap();
    let ig = measure(&fields, 200.0, 0.02);
    let f = lowpass_envelope(&ig).unwrap();
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let worst = f.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst < 0.02, "deviation {worst}");
    // 1 + 2 g2 = 3 in units of the single-arm level
    assert!((mean / ig.single_arm_level - 3.0).abs() < 0.06);
    let c = g2_from_interferogram(&ig).unwrap();
    assert!((c.g2_zero - 1.0).abs() < 0.02);
    let worst = c.g2.iter().map(|g| (g - 1.0).abs()).fold(0.0, f64::max);
    assert!(worst < 0.02, "max |g2 - 1| = {worst}");
}

#[test]
fn thermal_filtered_ratio_is_three_halves() {
    let spec = SpectrumSpec::gaussian(0.0, 0.1).unwrap();
    let fields = gen_thermal(&spec, 64, &grid(1 << 14), 3).unwrap();
    let ig = measure(&fields, 300.0, 0.0);
    let f = lowpass_envelope(&ig).unwrap();
    let zero = ig.delays.iter().position(|&d| d == 0.0).unwrap();
    let far: Vec<f64> = ig
        .delays
        .iter()
        .zip(&f)
        .filter(|(d, _)| d.abs() >= 240.0)
        .map(|(_, &v)| v)
        .collect();
    let ratio = f[zero] / (far.iter().sum::<f64>() / far.len() as f64);
    assert!((ratio - 1.5).abs() < 0.05, "{ratio}");
}

#[test]
fn filter_is_idempotent() {
    // noise-free expectation for Gaussian thermal light: baseband 2<I^2> + 4 g2,
    // fringes 16 g1 cos(w tau) and 4 g1^2 cos(2 w tau)
    let carrier = 0.4 * std::f64::consts::PI;
    let sigma = 0.1 / (2.0 * (2.0 * LN_2).sqrt());
    let delays: Vec<f64> = (-400..=400).map(|k| k as f64).collect();
    let signal: Vec<f64> = delays
        .iter()
        .map(|&t| {
            let g1 = (-(sigma * t).powi(2) / 2.0).exp();
            4.0 + 4.0 * (1.0 + g1 * g1)
                + 16.0 * g1 * (carrier * t).cos()
                + 4.0 * g1 * g1 * (2.0 * carrier * t).cos()
        })
        .collect();
    let settings = FilterSettings::default();
    let once = lowpass_envelope_with(&delays, &signal, carrier, &settings).unwrap();
    let twice = lowpass_envelope_with(&delays, &once, carrier, &settings).unwrap();
    let diff: Vec<f64> = once.iter().zip(&twice).map(|(a, b)| a - b).collect();
    assert!(
        norm(&diff) <= 1e-9 * norm(&once),
        "relative change {}",
        norm(&diff) / norm(&once)
    );
    let zero = 400;
    assert!((once[zero] / once[0] - 1.5).abs() < 1e-6);
}

#[test]
fn scaling_the_signal_leaves_the_curve_unchanged() {
    let spec = SpectrumSpec::gaussian(0.0, 0.1).unwrap();
    let fields = gen_mixture(
        &MixtureSpec::new(0.7).unwrap(),
        &spec,
        1.0,
        16,
        &grid(1 << 13),
        6,
    )
    .unwrap();
    let ig = measure(&fields, 250.0, 0.0);
    let base = g2_from_interferogram(&ig).unwrap();
    for factor in [1e-6, 0.37, 42.0, 1e9] {
        let c = g2_from_interferogram(&ig.scaled(factor)).unwrap();
        for (a, b) in base.g2.iter().zip(&c.g2) {
            assert!((a - b).abs() <= 1e-12, "factor {factor}: {a} vs {b}");
        }
        for (a, b) in base.stderr.iter().zip(&c.stderr) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn high_current_mixture_recovers_one_point_six_seven() {
    let spec = SpectrumSpec::gaussian(0.0, 0.024).unwrap();
    let fields = gen_mixture(
        &MixtureSpec::new(0.4255).unwrap(),
        &spec,
        1.0,
        64,
        &grid(1 << 15),
        7,
    )
    .unwrap();
    let tau = spec.coherence_time();
    let c = g2_from_interferogram(&measure(&fields, 10.0 * tau, 0.0)).unwrap();
    assert!((c.g2_zero - 1.67).abs() < 0.05, "{}", c.g2_zero);
    let x = lachs_thermal_fraction(c.g2_zero.clamp(1.0, 2.0)).unwrap();
    assert!((x - 0.4255).abs() < 0.03);
}

#[test]
fn coherence_time_from_the_chain() {
    let mut previous: Option<f64> = None;
    for width in [0.1, 0.05] {
        let spec = SpectrumSpec::gaussian(0.0, width).unwrap();
        let fields = gen_thermal(&spec, 64, &grid(1 << 14), 12).unwrap();
        let tau_a = 2.0 * 2f64.sqrt() * LN_2 / width;
        let c = g2_from_interferogram(&measure(&fields, 10.0 * tau_a, 0.0)).unwrap();
        let tau = coherence_time(&c).unwrap();
        assert!((tau / tau_a - 1.0).abs() < 0.10, "{tau} vs {tau_a}");
        if let Some(p) = previous {
            assert!((tau / p / 2.0 - 1.0).abs() < 0.10);
        }
        previous = Some(tau);
    }
}

#[test]
fn coherent_curve_has_no_coherence_time() {
    let fields = gen_coherent(1.0, 0.0, 4, &grid(1 << 13), 2).unwrap();
    let c = g2_from_interferogram(&measure(&fields, 200.0, 0.0)).unwrap();
    assert!(coherence_time(&c).is_err());
}

#[test]
fn oracle_equivalence_across_source_classes() {
    let g = grid(1 << 14);
    let spec = SpectrumSpec::gaussian(0.01, 0.08).unwrap();
    let lor = SpectrumSpec::lorentzian(0.0, 0.03).unwrap();
    let cases: Vec<(&str, FieldEnsemble<f64>, f64)> = vec![
        ("thermal", gen_thermal(&spec, 64, &g, 20).unwrap(), 0.01),
        (
            "lorentzian thermal",
            gen_thermal(&lor, 64, &g, 21).unwrap(),
            0.0,
        ),
        (
            "coherent",
            gen_coherent(0.7, -0.01, 16, &g, 22).unwrap(),
            -0.01,
        ),
        (
            "mixture",
            gen_mixture(&MixtureSpec::new(0.5).unwrap(), &spec, 2.0, 64, &g, 23).unwrap(),
            0.01,
        ),
    ];
    for (name, fields, line) in cases {
        let half = match fields.class() {
            g2lab::SourceClass::Coherent => 200.0,
            _ => {
                10.0 * if name.starts_with("lorentzian") {
                    lor.coherence_time()
                } else {
                    spec.coherence_time()
                }
            }
        };
        let tpa = g2_from_interferogram(&measure(&fields, half, line)).unwrap();
        let direct = direct_g2(&fields, 0.0).unwrap();
        assert!(
            (tpa.g2_zero - direct.g2_zero).abs() <= 0.05,
            "{name}: tpa {} direct {}",
            tpa.g2_zero,
            direct.g2_zero
        );
    }
}

#[test]
fn single_precision_chain() {
    let g = SimulationGrid::<f32>::with_default_carrier(1 << 13, 1.0).unwrap();
    let spec = SpectrumSpec::<f32>::gaussian(0.0, 0.1).unwrap();
    let fields = gen_thermal(&spec, 32, &g, 1).unwrap();
    let sweep = DelaySweep::for_fringes(250.0f32, 1.0, fields.carrier(), 0.0, 4.0).unwrap();
    let c = g2_from_interferogram(&tpa_interferogram(&fields, &sweep).unwrap()).unwrap();
    assert!((c.g2_zero - 2.0).abs() < 0.1, "{}", c.g2_zero);
}
