//! Time-delayed incremental minimization for viscoelastic second-grade solids
//! on structured grids, with its linearized counterpart and verification
//! diagnostics.

pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod functionals;
pub mod grid;
pub mod material;
pub mod persist;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod tensor;

pub use diagnostics::{RateReport, Slack, StepSlack, Tolerances};
pub use error::{Error, Result};
pub use experiment::{ForceSpec, InitialData, RunSpec, SweepKind};
pub use functionals::{EnergyBreakdown, Model, StepSetup};
pub use grid::{Field, Grid, Role};
pub use material::{ElasticParams, Material, ScaleParams, ViscosityTensor};
pub use quadrature::SigmaRule;
pub use solver::{InterpolantOptions, NewtonConfig, PartialRun, TrajectoryRecord, TwoScaleConfig};
pub use tensor::{Mat, Tensor3, Tensor4};
