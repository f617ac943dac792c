//! Benchmark scenarios for the step solver.

use viscoflow_core::experiment::{SpatialProfile, TemporalProfile};
use viscoflow_core::{
    ForceSpec, InitialData, Material, Model, NewtonConfig, RunSpec, ScaleParams, StepSetup,
};

/// A d = 2 bump-and-force scenario with `n` nodes per axis.
pub fn scenario(n: usize, model: Model) -> RunSpec {
    RunSpec {
        dim: 2,
        n,
        model,
        material: Material::default_2d(),
        scales: ScaleParams {
            delta: 0.1,
            alpha: 0.4,
            rho: 1.0,
            h: 0.1,
            tau: 0.0125,
        },
        t_final: 0.1,
        initial_displacement: InitialData::TrigBump {
            amplitude: 0.1,
            k: 1.0,
            direction: [1.0, 0.5, 0.0],
        },
        initial_velocity: InitialData::TrigBump {
            amplitude: 0.2,
            k: 1.0,
            direction: [0.0, 1.0, 0.0],
        },
        force: ForceSpec {
            amplitude: 1.0,
            direction: [0.0, 1.0, 0.0],
            spatial: SpatialProfile::SinBump { k: 1.0 },
            temporal: TemporalProfile::Constant,
        },
        newton: NewtonConfig::default(),
        interpolants: None,
    }
}

/// The first incremental problem of `spec`.
pub fn first_step(spec: &RunSpec) -> StepSetup {
    let y0 = spec.initial_state().expect("valid scenario");
    let w = spec.initial_velocity_field().expect("valid scenario");
    let f = spec.force_average(0.0, spec.scales.tau).expect("valid scenario");
    StepSetup::new(spec.model, y0, w, f, spec.scales, spec.material).expect("valid scenario")
}
