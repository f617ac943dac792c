//! Closed-form data families, run specifications and refinement sweeps.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::Model;
use crate::grid::{apply_dirichlet_zero, Field, Grid, Role};
use crate::material::{integer_ratio, Material, ScaleParams};
use crate::solver::{run_two_scale, InterpolantOptions, NewtonConfig, PartialRun, TrajectoryRecord, TwoScaleConfig};

/// Separable profile `Π_i sin(kπx_i)`, vanishing on the boundary of the unit cube.
fn sin_bump(x: &[f64; 3], d: usize, k: f64) -> f64 {
    (0..d).map(|i| (k * PI * x[i]).sin()).product()
}

/// Initial displacement or velocity families.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    #[default]
    Zero,
    /// `amplitude · Π_i sin(kπx_i) · direction`.
    TrigBump {
        amplitude: f64,
        #[serde(default = "one")]
        k: f64,
        direction: [f64; 3],
    },
}

fn one() -> f64 {
    1.0
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialData::Zero => Ok(()),
            InitialData::TrigBump { amplitude, k, direction } => {
                let k_int = k >= 1.0 && k.fract() == 0.0;
                if amplitude.is_finite() && k_int && direction.iter().all(|c| c.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::Config(
                        "trig bump needs a finite amplitude and direction and an integer k ≥ 1".into(),
                    ))
                }
            }
        }
    }

    /// Samples the profile on the grid; boundary values are zero.
    pub fn sample(&self, grid: Grid, role: Role) -> Field {
        let d = grid.dim();
        let mut u = match *self {
            InitialData::Zero => Field::zeros(grid, role),
            InitialData::TrigBump { amplitude, k, direction } => Field::from_fn(grid, role, |x| {
                let b = amplitude * sin_bump(x, d, k);
                [b * direction[0], b * direction[1], b * direction[2]]
            }),
        };
        apply_dirichlet_zero(&mut u);
        u
    }
}

/// Spatial shape of a force profile.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpatialProfile {
    #[default]
    Uniform,
    SinBump {
        #[serde(default = "one")]
        k: f64,
    },
}

/// Temporal modulation of a force profile.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemporalProfile {
    #[default]
    Constant,
    Sin {
        omega: f64,
    },
    Cos {
        omega: f64,
    },
}

impl TemporalProfile {
    /// Exact mean over `[t0, t1]`.
    pub fn average(&self, t0: f64, t1: f64) -> f64 {
        let len = t1 - t0;
        match *self {
            TemporalProfile::Constant => 1.0,
            TemporalProfile::Sin { omega } | TemporalProfile::Cos { omega } if omega == 0.0 || len == 0.0 => {
                self.value(0.5 * (t0 + t1))
            }
            TemporalProfile::Sin { omega } => ((omega * t0).cos() - (omega * t1).cos()) / (omega * len),
            TemporalProfile::Cos { omega } => ((omega * t1).sin() - (omega * t0).sin()) / (omega * len),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TemporalProfile::Constant => 1.0,
            TemporalProfile::Sin { omega } => (omega * t).sin(),
            TemporalProfile::Cos { omega } => (omega * t).cos(),
        }
    }
}

/// A separable space–time force profile `amplitude · S(x) T(t) · direction`.
///
/// This is the δ-independent profile; the nonlinear model applies `δ` times it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceSpec {
    pub amplitude: f64,
    pub direction: [f64; 3],
    #[serde(default)]
    pub spatial: SpatialProfile,
    #[serde(default)]
    pub temporal: TemporalProfile,
}

impl Default for ForceSpec {
    fn default() -> Self {
        Self {
            amplitude: 0.0,
            direction: [0.0; 3],
            spatial: SpatialProfile::Uniform,
            temporal: TemporalProfile::Constant,
        }
    }
}

impl ForceSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = self.amplitude.is_finite() && self.direction.iter().all(|c| c.is_finite());
        let spatial_ok = match self.spatial {
            SpatialProfile::Uniform => true,
            SpatialProfile::SinBump { k } => k >= 1.0 && k.fract() == 0.0,
        };
        let temporal_ok = match self.temporal {
            TemporalProfile::Constant => true,
            TemporalProfile::Sin { omega } | TemporalProfile::Cos { omega } => omega.is_finite(),
        };
        if finite && spatial_ok && temporal_ok {
            Ok(())
        } else {
            Err(Error::Config("invalid force profile".into()))
        }
    }

    /// Interval average over `[t0, t1]` multiplied by `scale`, zero on the boundary.
    pub fn average(&self, grid: Grid, t0: f64, t1: f64, scale: f64) -> Field {
        let d = grid.dim();
        let amp = scale * self.amplitude * self.temporal.average(t0, t1);
        let mut f = Field::from_fn(grid, Role::Force, |x| {
            let s = match self.spatial {
                SpatialProfile::Uniform => 1.0,
                SpatialProfile::SinBump { k } => sin_bump(x, d, k),
            };
            let b = amp * s;
            [b * self.direction[0], b * self.direction[1], b * self.direction[2]]
        });
        apply_dirichlet_zero(&mut f);
        f
    }
}

/// Everything needed to compute one trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub dim: usize,
    /// Nodes per axis.
    pub n: usize,
    #[serde(default = "default_model")]
    pub model: Model,
    pub material: Material,
    pub scales: ScaleParams,
    pub t_final: f64,
    #[serde(default)]
    pub initial_displacement: InitialData,
    #[serde(default)]
    pub initial_velocity: InitialData,
    #[serde(default)]
    pub force: ForceSpec,
    #[serde(default)]
    pub newton: NewtonConfig,
    /// Compute interpolant families at every step when present.
    #[serde(default)]
    pub interpolants: Option<InterpolantOptions>,
}

fn default_model() -> Model {
    Model::Nonlinear
}

impl RunSpec {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n)
    }

    pub fn two_scale(&self) -> TwoScaleConfig {
        TwoScaleConfig {
            t_final: self.t_final,
            h: self.scales.h,
            tau: self.scales.tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.material.validate(self.dim)?;
        self.scales.validate(self.material.elastic.p_exp)?;
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config("t_final must be positive".into()));
        }
        self.two_scale().counts()?;
        self.newton.validate()?;
        self.initial_displacement.validate()?;
        self.initial_velocity.validate()?;
        self.force.validate()
    }

    /// Factor applied to the displacement-scale data of the model.
    fn data_scale(&self) -> f64 {
        match self.model {
            Model::Nonlinear => self.scales.delta,
            Model::Linear => 1.0,
        }
    }

    /// `id + δu₀` for the nonlinear model, `u₀` for the linear one.
    pub fn initial_state(&self) -> Result<Field> {
        let g = self.grid()?;
        let u0 = self.initial_displacement.sample(g, Role::Displacement);
        Ok(match self.model {
            Model::Nonlinear => Field::identity(g).lin_comb(1.0, &u0, self.scales.delta),
            Model::Linear => u0,
        })
    }

    /// `δv₀` for the nonlinear model, `v₀` for the linear one.
    pub fn initial_velocity_field(&self) -> Result<Field> {
        let g = self.grid()?;
        Ok(self
            .initial_velocity
            .sample(g, Role::Velocity)
            .scaled(self.data_scale()))
    }

    /// Applied force averaged over `[t0, t1]`.
    pub fn force_average(&self, t0: f64, t1: f64) -> Result<Field> {
        Ok(self.force.average(self.grid()?, t0, t1, self.data_scale()))
    }

    /// Same data for the other model.
    pub fn with_model(&self, model: Model) -> Self {
        Self {
            model,
            ..self.clone()
        }
    }

    pub fn run(&self) -> std::result::Result<TrajectoryRecord, PartialRun> {
        let boxed = |error: Error| PartialRun { error, partial: None };
        self.validate().map_err(boxed)?;
        let y0 = self.initial_state().map_err(boxed)?;
        let v0 = self.initial_velocity_field().map_err(boxed)?;
        let g = y0.grid();
        let scale = self.data_scale();
        let force = self.force;
        let sampler = move |t0: f64, t1: f64| force.average(g, t0, t1, scale);
        run_two_scale(
            self.model,
            &self.two_scale(),
            y0,
            &v0,
            &sampler,
            self.scales,
            self.material,
            &self.newton,
            self.interpolants.as_ref(),
        )
    }
}

/// Parameter refined by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Halve `τ` at fixed `h` and `δ`.
    Tau,
    /// Halve `h` and `τ` together (fixed `h/τ`) at fixed `T` and `δ`.
    H,
    /// Halve `δ`.
    Delta,
    /// Halve `τ` and `δ` together.
    Diagonal,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Tau => "tau",
            SweepKind::H => "h",
            SweepKind::Delta => "delta",
            SweepKind::Diagonal => "diagonal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tau" => Some(SweepKind::Tau),
            "h" => Some(SweepKind::H),
            "delta" => Some(SweepKind::Delta),
            "diagonal" => Some(SweepKind::Diagonal),
            _ => None,
        }
    }

    /// The parameter value tracked by rate fits for a run.
    pub fn parameter(self, spec: &RunSpec) -> f64 {
        match self {
            SweepKind::Tau | SweepKind::Diagonal => spec.scales.tau,
            SweepKind::H => spec.scales.h,
            SweepKind::Delta => spec.scales.delta,
        }
    }
}

/// Specs of a geometric halving sweep starting at `base`.
pub fn sweep_specs(kind: SweepKind, base: &RunSpec, levels: usize) -> Result<Vec<RunSpec>> {
    if levels == 0 {
        return Err(Error::Config("a sweep needs at least one level".into()));
    }
    let specs: Vec<RunSpec> = (0..levels)
        .map(|l| {
            let f = 0.5f64.powi(l as i32);
            let mut s = base.clone();
            match kind {
                SweepKind::Tau => s.scales.tau *= f,
                SweepKind::H => {
                    s.scales.h *= f;
                    s.scales.tau *= f;
                }
                SweepKind::Delta => s.scales.delta *= f,
                SweepKind::Diagonal => {
                    s.scales.tau *= f;
                    s.scales.delta *= f;
                }
            }
            s
        })
        .collect();
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

/// Runs a halving sweep; independent levels run concurrently.
pub fn refine_sweep(kind: SweepKind, base: &RunSpec, levels: usize) -> Result<Vec<TrajectoryRecord>> {
    let specs = sweep_specs(kind, base, levels)?;
    specs
        .par_iter()
        .map(|s| s.run().map_err(Error::from))
        .collect()
}

/// Times shared by all records: multiples of the coarsest step up to the shortest horizon.
pub fn shared_times(records: &[&TrajectoryRecord]) -> Result<Vec<f64>> {
    let coarse = records.iter().map(|r| r.tau()).fold(0.0, f64::max);
    let horizon = records.iter().map(|r| r.final_time()).fold(f64::INFINITY, f64::min);
    for r in records {
        if integer_ratio(coarse, r.tau()).is_none() {
            return Err(Error::Misaligned(format!(
                "step {} does not divide the coarsest step {coarse}",
                r.tau()
            )));
        }
    }
    let m = (horizon / coarse + 1e-9).floor() as usize;
    if m == 0 {
        return Err(Error::Misaligned("no shared positive time".into()));
    }
    Ok((1..=m).map(|j| j as f64 * coarse).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn base_spec() -> RunSpec {
        RunSpec {
            dim: 2,
            n: 7,
            model: Model::Nonlinear,
            material: Material::default_2d(),
            scales: ScaleParams {
                delta: 0.1,
                alpha: 0.4,
                rho: 1.0,
                h: 0.1,
                tau: 0.05,
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

    #[test]
    fn temporal_averages_are_exact() {
        let omega = 3.0;
        for p in [TemporalProfile::Sin { omega }, TemporalProfile::Cos { omega }] {
            // fine midpoint rule as reference
            let (a, b) = (0.2, 0.7);
            let m = 20000;
            let mid: f64 = (0..m)
                .map(|i| p.value(a + (i as f64 + 0.5) * (b - a) / m as f64))
                .sum::<f64>()
                / m as f64;
            assert!((p.average(a, b) - mid).abs() < 1e-9);
        }
        assert_eq!(TemporalProfile::Constant.average(0.0, 1.0), 1.0);
        assert_eq!(TemporalProfile::Sin { omega: 0.0 }.average(0.0, 1.0), 0.0);
    }

    #[test]
    fn sampled_data_vanish_on_boundary() {
        let g = Grid::new(2, 9).unwrap();
        let u = base_spec().initial_displacement.sample(g, Role::Displacement);
        for node in 0..g.num_nodes() {
            if g.is_boundary(node) {
                assert_eq!(u.node_vec(node), [0.0; 3]);
            }
        }
        let centre = g.node_index(&[4, 4, 0]);
        assert!((u.at(centre, 0) - 0.1).abs() < 1e-15);
        assert!((u.at(centre, 1) - 0.05).abs() < 1e-15);
        let f = base_spec().force.average(g, 0.0, 1.0, 0.5);
        assert!((f.at(centre, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn model_scaling_of_data() {
        let s = base_spec();
        let y0 = s.initial_state().unwrap();
        let u0 = s.with_model(Model::Linear).initial_state().unwrap();
        let g = s.grid().unwrap();
        assert!(y0.lin_comb(1.0, &Field::identity(g), -1.0).lin_comb(1.0, &u0, -0.1).max_abs() < 1e-15);
        let fl = s.with_model(Model::Linear).force_average(0.0, 0.1).unwrap();
        let fn_ = s.force_average(0.0, 0.1).unwrap();
        assert!(fn_.lin_comb(1.0, &fl, -0.1).max_abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_ratios() {
        let mut s = base_spec();
        s.t_final = 0.15;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = base_spec();
        s.scales.tau = 0.03;
        assert!(s.validate().is_err());
        assert!(base_spec().validate().is_ok());
    }

    #[test]
    fn sweep_levels_halve() {
        let s = base_spec();
        let specs = sweep_specs(SweepKind::Diagonal, &s, 3).unwrap();
        let taus: Vec<f64> = specs.iter().map(|x| x.scales.tau).collect();
        let deltas: Vec<f64> = specs.iter().map(|x| x.scales.delta).collect();
        assert_eq!(taus, vec![0.05, 0.025, 0.0125]);
        assert_eq!(deltas, vec![0.1, 0.05, 0.025]);
        let h = sweep_specs(SweepKind::H, &RunSpec { t_final: 0.2, ..s.clone() }, 2).unwrap();
        assert_eq!(h[1].scales.h, 0.05);
        assert_eq!(h[1].scales.tau, 0.025);
        assert!(sweep_specs(SweepKind::Tau, &s, 0).is_err());
    }

    #[test]
    fn single_level_sweep_is_a_plain_run() {
        let s = base_spec();
        let a = refine_sweep(SweepKind::Tau, &s, 1).unwrap();
        let b = s.run().unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].states, b.states);
    }

    #[test]
    fn shared_time_grid() {
        let s = base_spec();
        let recs = refine_sweep(SweepKind::Tau, &s, 2).unwrap();
        let t = shared_times(&[&recs[0], &recs[1]]).unwrap();
        assert_eq!(t, vec![0.05, 0.1]);
    }
}
