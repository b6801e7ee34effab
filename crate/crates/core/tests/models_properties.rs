use g2lab::fieldgen::{
    gen_coherent, gen_mixture, gen_thermal, MixtureSpec, SimulationGrid, SpectrumSpec,
};
use g2lab::models::{
    lachs_g2, lachs_thermal_fraction, risken_base_g2, risken_g2, risken_moments,
    risken_moments_closed_form, siegert_check, RiskenParams,
};
use g2lab::optics::direct_g2;
use g2lab::quadrature::integrate;
use g2lab::Error;
use proptest::prelude::*;

fn grid(n: usize) -> SimulationGrid<f64> {
    SimulationGrid::with_default_carrier(n, 1.0).unwrap()
}

proptest! {
    #[test]
    fn lachs_round_trip(x in 0.0f64..=1.0) {
        let back = lachs_thermal_fraction(lachs_g2(x).unwrap()).unwrap();
        prop_assert!((back - x).abs() < 1e-12);
    }

    #[test]
    fn lachs_rejects_outside_the_classical_range(g in prop_oneof![-5.0f64..0.999, 2.001f64..10.0]) {
        let rejected = matches!(lachs_thermal_fraction(g), Err(Error::Domain { .. }));
        prop_assert!(rejected);
    }

    #[test]
    fn risken_outputs_stay_classical(pump in -15.0f64..15.0, ase in 0.0f64..0.99) {
        let g = risken_g2(&RiskenParams::new(pump, ase).unwrap());
        prop_assert!((1.0..=2.0).contains(&g));
    }
}

#[test]
fn lachs_round_trip_dense_grid() {
    for i in 0..=10_000 {
        let x = i as f64 / 10_000.0;
        assert!((lachs_thermal_fraction(lachs_g2(x).unwrap()).unwrap() - x).abs() < 1e-12);
    }
}

#[test]
fn risken_monotone_on_fine_grid() {
    let g: Vec<f64> = (-100..=100)
        .map(|i| risken_g2(&RiskenParams::at_pump(i as f64 / 10.0)))
        .collect();
    for (i, w) in g.windows(2).enumerate() {
        assert!(
            w[1] <= w[0] + 1e-12,
            "increase at pump {}",
            (i as f64 - 100.0) / 10.0
        );
    }
}

#[test]
fn excess_background_lifts_the_curve_above_threshold() {
    for i in 21..=100 {
        let a = i as f64 / 10.0;
        for ase in [0.01, 0.05, 0.2] {
            assert!(
                risken_g2(&RiskenParams::new(a, ase).unwrap()) > risken_base_g2(a),
                "pump {a}, ase {ase}"
            );
        }
    }
}

#[test]
fn half_gaussian_moments_at_threshold() {
    // independent oracle: plain quadrature of the raw weight, no peak splitting
    let w = |n: i32| {
        integrate(
            |i: f64| i.powi(n) * (-(i * i) / 4.0).exp(),
            0.0,
            60.0,
            1e-12,
        )
    };
    let g = w(2) * w(0) / (w(1) * w(1));
    assert!((g - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    assert!((risken_base_g2(0.0) - g).abs() < 1e-6);
}

#[test]
fn quadrature_matches_closed_form_moments() {
    for i in -10..=20 {
        let a = i as f64 / 2.0;
        let q: [f64; 3] = risken_moments(a);
        let c = risken_moments_closed_form(a);
        for n in 0..3 {
            assert!(
                (q[n] / c[n] - 1.0).abs() < 1e-7,
                "pump {a}, moment {n}: {} vs {}",
                q[n],
                c[n]
            );
        }
    }
}

#[test]
fn mixture_half_fraction_ensemble_moments() {
    let spec = SpectrumSpec::gaussian(0.0, 0.1).unwrap();
    let fields = gen_mixture(
        &MixtureSpec::new(0.5).unwrap(),
        &spec,
        1.0,
        256,
        &grid(1 << 14),
        17,
    )
    .unwrap();
    let g = direct_g2(&fields, 0.0).unwrap().g2_zero;
    assert!((g - 1.75).abs() < 0.05, "{g}");
}

#[test]
fn siegert_holds_for_thermal_light() {
    let spec = SpectrumSpec::gaussian(0.0, 0.1).unwrap();
    let thermal = gen_thermal(&spec, 256, &grid(1 << 14), 99).unwrap();
    let r = siegert_check(&thermal).unwrap();
    assert!(r < 0.05, "residual {r}");
    let pure = gen_mixture(
        &MixtureSpec::new(1.0).unwrap(),
        &spec,
        1.0,
        256,
        &grid(1 << 14),
        98,
    )
    .unwrap();
    let r = siegert_check(&pure).unwrap();
    assert!(r < 0.05, "x = 1 mixture residual {r}");
}

#[test]
fn siegert_refuses_non_chaotic_light() {
    let spec = SpectrumSpec::gaussian(0.0, 0.1).unwrap();
    let coherent = gen_coherent(1.0, 0.0, 4, &grid(1 << 12), 1).unwrap();
    assert!(matches!(
        siegert_check(&coherent),
        Err(Error::NotChaotic { .. })
    ));
    let partial = gen_mixture(
        &MixtureSpec::new(0.5).unwrap(),
        &spec,
        1.0,
        4,
        &grid(1 << 12),
        1,
    )
    .unwrap();
    assert!(matches!(
        siegert_check(&partial),
        Err(Error::NotChaotic { .. })
    ));
    // the residual itself is one for a coherent field: g2 - 1 = 0 while |g1|^2 = 1
    let r = g2lab::models::siegert_residual(&coherent, 20.0).unwrap();
    assert!((r - 1.0).abs() < 1e-9);
}
