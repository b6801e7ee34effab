//! Simulation and analysis of second-order coherence `g2(tau)` measured by
//! two-photon-absorption interferometry.
//!
//! The pipeline runs [`fieldgen`] (stochastic field ensembles) through
//! [`optics`] (Michelson interferometer with a TPA detector) into [`dsp`]
//! (g2 extraction), with [`models`] supplying closed-form photon statistics
//! and [`scenarios`] tying everything into reproducible, persisted runs.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases below name the double-precision types used by the harness.

pub mod dsp;
pub mod error;
pub mod fieldgen;
pub mod fourier;
pub mod models;
pub mod optics;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod scenarios;
pub mod stats;

pub use dsp::{coherence_time, g2_from_interferogram, lowpass_envelope, G2Curve, G2Method};
pub use error::{Error, Result};
pub use fieldgen::{
    gen_coherent, gen_mixture, gen_thermal, FieldEnsemble, LineShape, MixtureSpec, SimulationGrid,
    SourceClass, SpectrumSpec,
};
pub use models::{lachs_g2, lachs_thermal_fraction, risken_g2, siegert_check, RiskenParams};
pub use optics::{direct_g2, tpa_interferogram, DelaySweep, Interferogram};
pub use scalar::Real;
pub use scenarios::{compare_report, run_scenario, CoherenceReport, ScenarioConfig};

pub type FieldEnsembleF64 = FieldEnsemble<f64>;
pub type SpectrumSpecF64 = SpectrumSpec<f64>;
pub type MixtureSpecF64 = MixtureSpec<f64>;
pub type SimulationGridF64 = SimulationGrid<f64>;
pub type DelaySweepF64 = DelaySweep<f64>;
pub type InterferogramF64 = Interferogram<f64>;
pub type G2CurveF64 = G2Curve<f64>;
pub type RiskenParamsF64 = RiskenParams<f64>;

pub type FieldEnsembleF32 = FieldEnsemble<f32>;
pub type InterferogramF32 = Interferogram<f32>;
pub type G2CurveF32 = G2Curve<f32>;
