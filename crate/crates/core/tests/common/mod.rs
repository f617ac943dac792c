//! Shared scenarios and independent oracles for the integration tests.

#![allow(dead_code)]

use nalgebra::DMatrix;
use viscoflow_core::experiment::{SpatialProfile, TemporalProfile};
use viscoflow_core::{
    ForceSpec, InitialData, InterpolantOptions, Material, Model, NewtonConfig, RunSpec, ScaleParams, SigmaRule,
};

/// The d = 2 reference run: n = 17, T = h = 0.1, τ = h/8, δ = 0.1.
pub fn bundled_spec() -> RunSpec {
    RunSpec {
        dim: 2,
        n: 17,
        model: Model::Nonlinear,
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
        initial_velocity: InitialData::Zero,
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

pub fn with_interpolants(mut spec: RunSpec) -> RunSpec {
    spec.interpolants = Some(InterpolantOptions {
        rule: SigmaRule::GaussLegendre(8),
        sensitivity_rule: Some(SigmaRule::Geometric(8)),
    });
    spec
}

/// Assembles `K` with `ℛ(v) = ½ vᵀKv = δ⁻² ∫ ½ e(v):𝔻₀e(v)` on a d = 2 grid with
/// `n` nodes per axis, written from scratch in Voigt notation.
///
/// Unknowns: interior nodes numbered with x fastest, two components per node.
pub fn voigt_dissipation_matrix(n: usize, delta: f64, eta: f64, lambda: f64) -> DMatrix<f64> {
    let m = n - 2;
    let dofs = 2 * m * m;
    let dx = 1.0 / (n - 1) as f64;
    let vol = dx * dx;
    let dmat = DMatrix::from_row_slice(
        3,
        3,
        &[2.0 * eta + lambda, lambda, 0.0, lambda, 2.0 * eta + lambda, 0.0, 0.0, 0.0, eta],
    );
    let dof_of = |i: usize, j: usize| -> Option<usize> {
        if i == 0 || j == 0 || i == n - 1 || j == n - 1 {
            None
        } else {
            Some((i - 1) + (j - 1) * m)
        }
    };
    let mut k = DMatrix::zeros(dofs, dofs);
    for cj in 0..n - 1 {
        for ci in 0..n - 1 {
            // corners (ci,cj), (ci+1,cj), (ci,cj+1), (ci+1,cj+1)
            let corners = [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)];
            let gx = [-1.0, 1.0, -1.0, 1.0].map(|w: f64| w / (2.0 * dx));
            let gy = [-1.0, -1.0, 1.0, 1.0].map(|w: f64| w / (2.0 * dx));
            let mut b = DMatrix::zeros(3, 8);
            for a in 0..4 {
                b[(0, 2 * a)] = gx[a];
                b[(1, 2 * a + 1)] = gy[a];
                b[(2, 2 * a)] = gy[a];
                b[(2, 2 * a + 1)] = gx[a];
            }
            let local = b.transpose() * &dmat * &b * (vol / (delta * delta));
            for a in 0..4 {
                let Some(ra) = dof_of(corners[a].0, corners[a].1) else { continue };
                for c in 0..4 {
                    let Some(rc) = dof_of(corners[c].0, corners[c].1) else { continue };
                    for p in 0..2 {
                        for q in 0..2 {
                            k[(2 * ra + p, 2 * rc + q)] += local[(2 * a + p, 2 * c + q)];
                        }
                    }
                }
            }
        }
    }
    k
}

/// `½ ξᵀ K⁺ ξ` with the pseudoinverse of a positive semidefinite `K`.
pub fn quadratic_dual(k: &DMatrix<f64>, xi: &[f64]) -> f64 {
    let pinv = k.clone().pseudo_inverse(1e-13).expect("pseudoinverse");
    let x = nalgebra::DVector::from_column_slice(xi);
    0.5 * x.dot(&(pinv * &x))
}
