//! Verification measurements on computed trajectories: inequality slacks,
//! Fenchel–Young residuals, rate fits, Korn and rigidity monitors, and
//! linearization gaps.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{
    cost, dissipation_r_0, dissipation_r_delta, dissipation_unscaled, energy_e_0, energy_parts_delta,
    grad_cost, grad_parts, weak_form_pairing, DissipationForm, EnergyBreakdown, StepSetup,
};
use crate::grid::{cell_gradient, discrete_norms, h1_distance, min_det, Field, Role};
use crate::material::{dist_so, Material, ScaleParams};
use crate::solver::{displacement_of, TrajectoryRecord};
use crate::sparse::{dot, norm, Assembler, SymMatrix};
use crate::tensor::Mat;

/// Two sides of an inequality `lhs ≤ rhs`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub lhs: f64,
    pub rhs: f64,
}

impl Slack {
    pub fn value(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// Slack relative to `1 + |rhs|`.
    pub fn scaled(&self) -> f64 {
        self.value() / (1.0 + self.rhs.abs())
    }
}

/// Per-step quantities from which all energy ledgers are built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub step: usize,
    pub breakdown: EnergyBreakdown,
    /// Inertial cost of the zero increment, `τ c/2 ∫|w_k|²`.
    pub delayed_kinetic: f64,
    /// `τ c/2 ∫|v_k|²` for the step increment `v_k`.
    pub kinetic: f64,
    /// σ-integral of the interpolant terms, when computed.
    pub interpolant_integral: Option<f64>,
    /// The same integral on the sensitivity grid.
    pub interpolant_alt: Option<f64>,
}

/// Recomputes the ledger rows from the stored states and step data.
pub fn ledger_rows(traj: &TrajectoryRecord) -> Vec<LedgerRow> {
    (1..=traj.num_steps())
        .map(|k| {
            let s = traj.setup(k);
            let y = &traj.states[k];
            let breakdown = cost(y, &s);
            let quiet = StepSetup {
                w: Field::zeros(s.grid(), Role::Velocity),
                f: Field::zeros(s.grid(), Role::Force),
                ..s.clone()
            };
            let kinetic = cost(y, &quiet).inertial;
            let no_force = StepSetup {
                f: Field::zeros(s.grid(), Role::Force),
                ..s.clone()
            };
            let delayed_kinetic = cost(&s.y_prev, &no_force).inertial;
            let interp = traj.interpolants.get(k - 1).and_then(|r| r.as_ref());
            LedgerRow {
                step: k,
                breakdown,
                delayed_kinetic,
                kinetic,
                interpolant_integral: interp.map(|r| r.integral),
                interpolant_alt: interp.and_then(|r| r.alt_integral),
            }
        })
        .collect()
}

/// Energy-inequality slacks up to step `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSlack {
    pub step: usize,
    /// Minimizer-versus-competitor comparison of step `k` alone.
    pub local: Slack,
    /// Sum of the local inequalities over steps `1..=k`.
    pub simplified: Slack,
    /// Refined inequality with the interpolant σ-integrals.
    pub refined: Option<Slack>,
    /// Refined inequality evaluated with the sensitivity σ-grid.
    pub refined_alt: Option<Slack>,
    /// Discrete counterpart of the time-delayed energy inequality for the
    /// piecewise-affine interpolant.
    pub shadow: Slack,
}

/// Builds all slacks from ledger rows and the initial energy.
pub fn slacks_from_rows(initial_energy: f64, rows: &[LedgerRow]) -> Vec<StepSlack> {
    let mut out = Vec::with_capacity(rows.len());
    let mut e_prev = initial_energy;
    let mut sum_lhs = 0.0;
    let mut sum_rhs = 0.0;
    let mut sum_interp = Some(0.0);
    let mut sum_alt = Some(0.0);
    let mut sum_shadow = 0.0;
    for r in rows {
        let b = &r.breakdown;
        let e = b.energy();
        let local = Slack {
            lhs: e + b.dissipation_R + b.inertial,
            rhs: e_prev + r.delayed_kinetic + b.force_work,
        };
        sum_lhs += b.dissipation_R + b.inertial;
        sum_rhs += r.delayed_kinetic + b.force_work;
        sum_shadow += r.kinetic + 2.0 * b.dissipation_R + b.inertial;
        sum_interp = sum_interp.zip(r.interpolant_integral).map(|(a, b)| a + b);
        sum_alt = sum_alt.zip(r.interpolant_alt).map(|(a, b)| a + b);
        let rhs = initial_energy + sum_rhs;
        out.push(StepSlack {
            step: r.step,
            local,
            simplified: Slack { lhs: e + sum_lhs, rhs },
            refined: sum_interp.map(|s| Slack {
                lhs: e + sum_lhs + s,
                rhs,
            }),
            refined_alt: sum_alt.map(|s| Slack {
                lhs: e + sum_lhs + s,
                rhs,
            }),
            shadow: Slack {
                lhs: e + sum_shadow,
                rhs,
            },
        });
        e_prev = e;
    }
    out
}

/// Slacks of a trajectory, recomputed from its states.
pub fn energy_slack(traj: &TrajectoryRecord) -> Vec<StepSlack> {
    slacks_from_rows(traj.energy(0), &ledger_rows(traj))
}

/// Lower bounds on scaled slacks and residuals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub simplified: f64,
    pub refined: f64,
    pub shadow: f64,
    pub fenchel: f64,
    pub fenchel_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            simplified: 1e-9,
            refined: 1e-6,
            shadow: 1e-6,
            fenchel: 1e-8,
            fenchel_floor: 1e-10,
        }
    }
}

impl Tolerances {
    /// All tolerances multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            simplified: self.simplified * factor,
            refined: self.refined * factor,
            shadow: self.shadow * factor,
            fenchel: self.fenchel * factor,
            fenchel_floor: self.fenchel_floor * factor,
        }
    }
}

/// A failed check at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub step: usize,
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
}

/// Steps whose scaled slacks fall below the negative tolerances.
pub fn slack_violations(slacks: &[StepSlack], tol: &Tolerances) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |step: usize, check: &str, s: Slack, t: f64| {
        if !(s.scaled() >= -t) {
            out.push(Violation {
                step,
                check: check.to_string(),
                value: s.scaled(),
                tolerance: t,
            });
        }
    };
    for s in slacks {
        push(s.step, "local", s.local, tol.simplified);
        push(s.step, "simplified", s.simplified, tol.simplified);
        if let Some(r) = s.refined {
            push(s.step, "refined", r, tol.refined);
        }
        push(s.step, "shadow", s.shadow, tol.shadow);
    }
    out
}

/// Fenchel–Young residual of one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FenchelResidual {
    pub step: usize,
    /// `ℛ(v) + ℛ*(ξ) − ⟨ξ, v⟩`.
    pub residual: f64,
    /// `⟨ξ, v⟩`.
    pub pairing: f64,
}

impl FenchelResidual {
    /// Residual relative to `1 + |⟨ξ, v⟩|`.
    pub fn scaled(&self) -> f64 {
        self.residual / (1.0 + self.pairing.abs())
    }
}

/// Recovers `ξ_k` from stationarity: the dissipative part of the gradient
/// balances the energetic and nodal parts, so `ξ_k = −(∂ℰ + nodal terms)`.
pub fn recovered_stress(traj: &TrajectoryRecord, k: usize) -> Result<Vec<f64>> {
    let s = traj.setup(k);
    let parts = grad_parts(&traj.states[k], &s)?;
    Ok(parts
        .energy
        .iter()
        .zip(&parts.nodal)
        .map(|(e, n)| -(e + n))
        .collect())
}

fn residual_with(form: &DissipationForm, xi: &[f64], v: &[f64], step: usize) -> FenchelResidual {
    let pairing = dot(xi, v);
    FenchelResidual {
        step,
        residual: form.value(v) + form.dual(xi) - pairing,
        pairing,
    }
}

/// Fenchel–Young residuals along a trajectory.
pub fn fenchel_residual_trajectory(traj: &TrajectoryRecord) -> Result<Vec<FenchelResidual>> {
    (1..=traj.num_steps())
        .map(|k| {
            let s = traj.setup(k);
            let form = DissipationForm::for_setup(&s)?;
            let xi = recovered_stress(traj, k)?;
            let v = traj.increment(k).interior_values();
            Ok(residual_with(&form, &xi, &v, k))
        })
        .collect()
}

/// Residuals with the increments replaced by `v_k + ρ|v_k| d_k/|d_k|`, keeping `ξ_k`.
/// `directions[k-1]` supplies `d_k` on the interior unknowns.
pub fn fenchel_residual_perturbed(
    traj: &TrajectoryRecord,
    relative: f64,
    directions: &[Vec<f64>],
) -> Result<Vec<FenchelResidual>> {
    if directions.len() != traj.num_steps() {
        return Err(Error::SizeMismatch {
            expected: traj.num_steps(),
            got: directions.len(),
        });
    }
    (1..=traj.num_steps())
        .map(|k| {
            let s = traj.setup(k);
            let form = DissipationForm::for_setup(&s)?;
            let xi = recovered_stress(traj, k)?;
            let v = traj.increment(k).interior_values();
            let d = &directions[k - 1];
            if d.len() != v.len() {
                return Err(Error::SizeMismatch {
                    expected: v.len(),
                    got: d.len(),
                });
            }
            let dn = norm(d);
            if dn == 0.0 {
                return Err(Error::Config("perturbation direction must be nonzero".into()));
            }
            let scale = relative * norm(&v) / dn;
            let vp: Vec<f64> = v.iter().zip(d).map(|(a, b)| a + scale * b).collect();
            Ok(residual_with(&form, &xi, &vp, k))
        })
        .collect()
}

/// Largest `|⟨∇I(y_k), φ⟩ − a(y_k; φ)|` over the test fields, where `a` is the
/// field-based weak-form pairing.
pub fn weak_form_defect(traj: &TrajectoryRecord, k: usize, phis: &[Field]) -> Result<f64> {
    let s = traj.setup(k);
    let y = &traj.states[k];
    let g = grad_cost(y, &s)?;
    let mut worst = 0.0_f64;
    for phi in phis {
        let a = dot(&g, &phi.interior_values());
        let b = weak_form_pairing(y, &s, phi)?;
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Least-squares convergence order on a log–log scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub params: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    /// Slopes between consecutive levels.
    pub pair_slopes: Vec<f64>,
}

impl RateReport {
    /// Whether the errors decrease from level to level.
    pub fn monotone(&self) -> bool {
        self.errors.windows(2).all(|p| p[1] < p[0])
    }
}

/// Fits `log e = c + s log p`; needs three or more levels with strictly
/// decreasing parameters and positive errors.
pub fn observed_order(params: &[f64], errors: &[f64]) -> Result<RateReport> {
    if params.len() != errors.len() {
        return Err(Error::SizeMismatch {
            expected: params.len(),
            got: errors.len(),
        });
    }
    if params.len() < 3 {
        return Err(Error::BadRateData {
            min: 3,
            detail: format!("{} levels", params.len()),
        });
    }
    if !params.windows(2).all(|p| p[1] < p[0]) || params.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::BadRateData {
            min: 3,
            detail: "parameters must be positive and strictly decreasing".into(),
        });
    }
    if errors.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::BadRateData {
            min: 3,
            detail: "errors must be positive and finite".into(),
        });
    }
    let x: Vec<f64> = params.iter().map(|p| p.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let pair_slopes = (0..x.len() - 1)
        .map(|i| (y[i] - y[i + 1]) / (x[i] - x[i + 1]))
        .collect();
    Ok(RateReport {
        params: params.to_vec(),
        errors: errors.to_vec(),
        slope: sxy / sxx,
        pair_slopes,
    })
}

/// H¹ distance of the displacements of two runs at their shared times.
pub fn record_difference(a: &TrajectoryRecord, b: &TrajectoryRecord) -> Result<Vec<(f64, f64)>> {
    if a.grid() != b.grid() {
        return Err(Error::Misaligned("runs live on different grids".into()));
    }
    let times = crate::experiment::shared_times(&[a, b])?;
    times
        .into_iter()
        .map(|t| {
            let ua = displacement_of(&a.interpolate(t)?, a.model, a.scales.delta);
            let ub = displacement_of(&b.interpolate(t)?, b.model, b.scales.delta);
            Ok((t, h1_distance(&ua, &ub)?))
        })
        .collect()
}

/// Linearization error `‖δ⁻¹(y_δ − id) − u‖_{H¹}` at shared times.
pub fn linearization_error(nl: &TrajectoryRecord, lin: &TrajectoryRecord) -> Result<Vec<(f64, f64)>> {
    record_difference(nl, lin)
}

/// Largest difference over shared times between consecutive levels.
pub fn cauchy_differences(levels: &[TrajectoryRecord]) -> Result<Vec<f64>> {
    levels
        .windows(2)
        .map(|p| Ok(record_difference(&p[0], &p[1])?.iter().fold(0.0_f64, |m, &(_, e)| m.max(e))))
        .collect()
}

/// Gram matrix of `v ↦ ∫|∇v|²` on interior unknowns.
fn gradient_gram(y: &Field) -> SymMatrix {
    let g = y.grid();
    let d = g.dim();
    let vol = g.cell_volume();
    let mut asm = Assembler::new(g.num_dofs());
    for c in 0..g.num_cells() {
        let st = g.cell_stencil(c);
        for (a, wa) in &st {
            let Some(ka) = g.interior_of(*a) else { continue };
            for (b, wb) in &st {
                let Some(kb) = g.interior_of(*b) else { continue };
                let s: f64 = (0..d).map(|k| wa[k] * wb[k]).sum::<f64>() * vol;
                for i in 0..d {
                    asm.push(ka * d + i, kb * d + i, s);
                }
            }
        }
    }
    asm.finish()
}

/// `‖∇v‖² / (2 ∫R(∇y, ∇v))`.
pub fn korn_ratio(y: &Field, v: &Field, material: &Material) -> Result<f64> {
    y.check_same_grid(v)?;
    let semi = discrete_norms(v).h1_semi;
    let r = dissipation_unscaled(y, v, material);
    if semi == 0.0 || r == 0.0 {
        return Err(Error::Config("Korn ratio needs a field with nonzero gradient".into()));
    }
    Ok(semi * semi / (2.0 * r))
}

/// Largest Korn ratio over interior fields.
#[derive(Clone, Debug, PartialEq)]
pub struct KornEstimate {
    /// `1/μ_min` for the pencil `2K x = μ G x`.
    pub constant: f64,
    pub iterations: usize,
    /// Maximizing field.
    pub mode: Field,
}

/// Korn constant by inverse iteration on `(2K, G)`; `K` is the form with `½vᵀKv = ∫R`,
/// so `vᵀKv` already equals `2∫R`.
pub fn korn_constant(y: &Field, material: &Material, max_iters: usize) -> Result<KornEstimate> {
    let g = y.grid();
    let form = DissipationForm::new(y, 1.0, material)?;
    let gram = gradient_gram(y);
    let n = g.num_dofs();
    // deterministic smooth-plus-rough start
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    let mut mu = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=max_iters {
        iterations = it;
        let rhs = gram.matvec(&x);
        let mut nx = form.argmax(&rhs);
        let scale = gram.bilinear(&nx, &nx).sqrt();
        nx.iter_mut().for_each(|a| *a /= scale);
        let new_mu = form.matrix().bilinear(&nx, &nx);
        x = nx;
        let done = (new_mu - mu).abs() <= 1e-15 * new_mu;
        mu = new_mu;
        if done {
            break;
        }
    }
    let mut mode = Field::zeros(g, Role::Velocity);
    mode.set_interior_values(&x)?;
    Ok(KornEstimate {
        constant: 1.0 / mu,
        iterations,
        mode,
    })
}

/// Korn constant from a dense symmetric eigen-solve (small grids only).
pub fn korn_constant_dense(y: &Field, material: &Material) -> Result<f64> {
    let form = DissipationForm::new(y, 1.0, material)?;
    let k = form.matrix().to_dense();
    let gram = gradient_gram(y).to_dense();
    let l = gram
        .cholesky()
        .ok_or_else(|| Error::Singular("gradient Gram matrix".into()))?
        .l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
    let m: DMatrix<f64> = &linv * k * linv.transpose();
    let sym = 0.5 * (&m + m.transpose());
    let eig = SymmetricEigen::new(sym);
    let mu = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(1.0 / mu)
}

/// Rigidity monitors for a deformation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    /// Discrete H¹ norm of `u = (y − id)/δ`.
    pub u_h1: f64,
    /// `max |∇y − Id| = δ ‖∇u‖_∞`.
    pub delta_grad_inf: f64,
    pub min_det: f64,
    /// `‖dist(∇y, SO(d))‖_{L²}`.
    pub dist_so_l2: f64,
}

/// Which rigidity bounds a state breaks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RigidityFlags {
    pub u_bound: bool,
    pub gradient_bound: bool,
    pub orientation: bool,
}

impl RigidityFlags {
    pub fn any(&self) -> bool {
        self.u_bound || self.gradient_bound || self.orientation
    }
}

impl RigidityReport {
    /// Flags `‖u‖_{H¹} > C` and `δ‖∇u‖_∞ > C δ^α`, and lost orientation.
    pub fn flags(&self, c: f64, scales: &ScaleParams) -> RigidityFlags {
        RigidityFlags {
            u_bound: self.u_h1 > c,
            gradient_bound: self.delta_grad_inf > c * scales.delta.powf(scales.alpha),
            orientation: !(self.min_det > 0.0),
        }
    }
}

pub fn rigidity_report(y: &Field, scales: &ScaleParams) -> RigidityReport {
    let g = y.grid();
    let d = g.dim();
    let grads = cell_gradient(y);
    let id = Mat::identity(d);
    let delta_grad_inf = grads.iter().map(|f| (*f - id).norm()).fold(0.0, f64::max);
    let dist2: f64 = grads.iter().map(|f| dist_so(f).0.powi(2)).sum();
    let u = displacement_of(y, crate::functionals::Model::Nonlinear, scales.delta);
    RigidityReport {
        u_h1: discrete_norms(&u).h1(),
        delta_grad_inf,
        min_det: min_det(y),
        dist_so_l2: (dist2 * g.cell_volume()).sqrt(),
    }
}

/// Gaps between the scaled nonlinear functionals at `id + δu` and their
/// linearized counterparts, over a δ sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaGap {
    pub deltas: Vec<f64>,
    /// `|ℰ_δ(id + δu) − ℰ₀(u)|`.
    pub energy: Vec<f64>,
    /// `|ℛ_δ(id + δu, δv) − ℛ₀(v)|`.
    pub dissipation: Vec<f64>,
    /// `δ^{-αp} ∫P(δ∇²u)` alone.
    pub second_grade: Vec<f64>,
}

impl GammaGap {
    pub fn energy_rate(&self) -> Result<RateReport> {
        observed_order(&self.deltas, &self.energy)
    }

    pub fn dissipation_rate(&self) -> Result<RateReport> {
        observed_order(&self.deltas, &self.dissipation)
    }

    pub fn second_grade_rate(&self) -> Result<RateReport> {
        observed_order(&self.deltas, &self.second_grade)
    }
}

/// Evaluates the gaps for `u` (and rate field `v`) at each δ; `base` supplies α.
pub fn gamma_gap(u: &Field, v: &Field, deltas: &[f64], base: &ScaleParams, material: &Material) -> Result<GammaGap> {
    u.check_same_grid(v)?;
    let g = u.grid();
    let e0 = energy_e_0(u, material);
    let r0 = dissipation_r_0(v, material);
    let mut out = GammaGap {
        deltas: deltas.to_vec(),
        energy: Vec::with_capacity(deltas.len()),
        dissipation: Vec::with_capacity(deltas.len()),
        second_grade: Vec::with_capacity(deltas.len()),
    };
    for &delta in deltas {
        let scales = ScaleParams { delta, ..*base };
        let y = Field::identity(g).lin_comb(1.0, u, delta);
        let (ew, ep) = energy_parts_delta(&y, &scales, material);
        let rd = dissipation_r_delta(&y, &v.scaled(delta), &scales, material);
        out.energy.push((ew + ep - e0).abs());
        out.dissipation.push((rd - r0).abs());
        out.second_grade.push(ep);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{ForceSpec, InitialData, RunSpec, SpatialProfile, SweepKind, TemporalProfile};
    use crate::functionals::Model;
    use crate::grid::{apply_dirichlet_zero, Grid};
    use crate::solver::{InterpolantOptions, NewtonConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn spec(model: Model) -> RunSpec {
        RunSpec {
            dim: 2,
            n: 7,
            model,
            material: Material::default_2d(),
            scales: ScaleParams {
                delta: 0.1,
                alpha: 0.4,
                rho: 1.0,
                h: 0.05,
                tau: 0.025,
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
                temporal: TemporalProfile::Cos { omega: 10.0 },
            },
            newton: NewtonConfig::default(),
            interpolants: None,
        }
    }

    fn bump(g: Grid, amp: f64) -> Field {
        let mut u = Field::from_fn(g, Role::Displacement, |x| {
            let b = amp * (PI * x[0]).sin() * (PI * x[1]).sin();
            [b, 0.5 * b, 0.0]
        });
        apply_dirichlet_zero(&mut u);
        u
    }

    #[test]
    fn exact_power_laws() {
        let p = [0.2, 0.1, 0.05, 0.025];
        for order in [1.0, 2.0] {
            let e: Vec<f64> = p.iter().map(|x: &f64| 3.0 * x.powf(order)).collect();
            let r = observed_order(&p, &e).unwrap();
            assert!((r.slope - order).abs() < 1e-12);
            assert!(r.pair_slopes.iter().all(|s| (s - order).abs() < 1e-12));
            assert!(r.monotone());
        }
    }

    #[test]
    fn noisy_power_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p: Vec<f64> = (0..6).map(|l| 0.5f64.powi(l)).collect();
        let e: Vec<f64> = p
            .iter()
            .map(|x| 2.0 * x.powf(1.5) * (1.0 + 0.02 * (rng.random::<f64>() - 0.5)))
            .collect();
        let r = observed_order(&p, &e).unwrap();
        assert!((r.slope - 1.5).abs() < 0.05);
    }

    #[test]
    fn rate_input_validation() {
        assert!(matches!(observed_order(&[1.0, 0.5], &[1.0, 0.5]), Err(Error::BadRateData { .. })));
        assert!(observed_order(&[1.0, 0.5, 0.25], &[1.0, 0.0, 0.1]).is_err());
        assert!(observed_order(&[1.0, 2.0, 0.25], &[1.0, 0.5, 0.1]).is_err());
    }

    #[test]
    fn zero_data_slacks_vanish() {
        let mut s = spec(Model::Nonlinear);
        s.initial_displacement = InitialData::Zero;
        s.initial_velocity = InitialData::Zero;
        s.force = ForceSpec::default();
        s.interpolants = Some(InterpolantOptions::default());
        let traj = s.run().unwrap();
        for sl in energy_slack(&traj) {
            // the identity has energy zero up to rounding of the cell gradients
            for x in [sl.local, sl.simplified, sl.refined.unwrap(), sl.shadow] {
                assert!(x.lhs.abs() < 1e-20 && x.rhs.abs() < 1e-20, "{x:?}");
            }
        }
        for r in fenchel_residual_trajectory(&traj).unwrap() {
            assert!(r.residual.abs() < 1e-20);
        }
    }

    #[test]
    fn slacks_nonnegative_and_corruption_detected() {
        let mut s = spec(Model::Nonlinear);
        s.interpolants = Some(InterpolantOptions::default());
        let mut traj = s.run().unwrap();
        let slacks = energy_slack(&traj);
        assert_eq!(slacks.len(), 4);
        let tol = Tolerances::default();
        assert!(slack_violations(&slacks, &tol).is_empty(), "{:?}", slack_violations(&slacks, &tol));
        // summed local slacks telescope into the simplified one
        let sum_local: f64 = slacks.iter().map(|x| x.local.value()).sum();
        let last = slacks.last().unwrap().simplified.value();
        assert!((sum_local - last).abs() < 1e-12 * (1.0 + last.abs()));
        // refined identity is exact up to quadrature: both σ-rules close, and
        // the refined slack much smaller than the simplified one
        for x in &slacks {
            let r = x.refined.unwrap().value();
            assert!(r.abs() < 1e-2 * x.simplified.value().abs() + 1e-12, "{r}");
        }
        let node = traj.grid().interior_node(10);
        let v = traj.states[2].at(node, 0);
        traj.states[2].set(node, 0, v + 0.05);
        let bad = energy_slack(&traj);
        assert!(!slack_violations(&bad, &tol).is_empty());
    }

    #[test]
    fn linear_runs_have_nonnegative_slacks() {
        let mut s = spec(Model::Linear);
        s.interpolants = Some(InterpolantOptions::default());
        let traj = s.run().unwrap();
        let slacks = energy_slack(&traj);
        assert!(slack_violations(&slacks, &Tolerances::default()).is_empty());
        for r in fenchel_residual_trajectory(&traj).unwrap() {
            assert!(r.scaled().abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn fenchel_equality_and_perturbation() {
        let traj = spec(Model::Nonlinear).run().unwrap();
        let res = fenchel_residual_trajectory(&traj).unwrap();
        for r in &res {
            assert!(r.residual >= -1e-10 && r.scaled() <= 1e-8, "{r:?}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = traj.grid().num_dofs();
        let dirs: Vec<Vec<f64>> = (0..traj.num_steps())
            .map(|_| (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
            .collect();
        let pert = fenchel_residual_perturbed(&traj, 0.01, &dirs).unwrap();
        for r in &pert {
            assert!(r.residual > 0.0);
        }
    }

    #[test]
    fn stationarity_matches_weak_form() {
        let traj = spec(Model::Nonlinear).run().unwrap();
        let g = traj.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phis: Vec<Field> = (0..5)
            .map(|_| {
                let mut f = Field::from_fn(g, Role::Displacement, |_| [0.0; 3]);
                for v in f.values_mut() {
                    *v = rng.random::<f64>() - 0.5;
                }
                apply_dirichlet_zero(&mut f);
                f
            })
            .collect();
        assert!(weak_form_defect(&traj, 2, &phis).unwrap() < 1e-10);
    }

    #[test]
    fn identical_runs_have_no_difference() {
        let a = spec(Model::Nonlinear).run().unwrap();
        let b = spec(Model::Nonlinear).run().unwrap();
        let e = linearization_error(&a, &b).unwrap();
        assert!(e.iter().all(|&(_, x)| x == 0.0));
        let g = Grid::new(2, 9).unwrap();
        let mut other = spec(Model::Nonlinear);
        other.n = 9;
        let c = other.run().unwrap();
        assert_eq!(c.grid(), g);
        assert!(matches!(linearization_error(&a, &c), Err(Error::Misaligned(_))));
    }

    #[test]
    fn tiny_delta_matches_linear_run() {
        let mut s = spec(Model::Nonlinear);
        s.scales.delta = 1e-6;
        let nl = s.run().unwrap();
        let lin = s.with_model(Model::Linear).run().unwrap();
        let e = linearization_error(&nl, &lin).unwrap();
        assert!(e.iter().all(|&(_, x)| x < 1e-4), "{e:?}");
    }

    #[test]
    fn delta_sweep_errors_decrease() {
        let s = spec(Model::Nonlinear);
        let lin = s.with_model(Model::Linear).run().unwrap();
        let runs = crate::experiment::refine_sweep(SweepKind::Delta, &s, 3).unwrap();
        let errs: Vec<f64> = runs
            .iter()
            .map(|r| linearization_error(r, &lin).unwrap().last().unwrap().1)
            .collect();
        assert!(errs.windows(2).all(|p| p[1] < p[0]), "{errs:?}");
    }

    #[test]
    fn korn_routes_agree() {
        let g = Grid::new(2, 6).unwrap();
        let m = Material::default_2d();
        let id = Field::identity(g);
        let est = korn_constant(&id, &m, 5000).unwrap();
        let dense = korn_constant_dense(&id, &m).unwrap();
        assert!((est.constant - dense).abs() < 1e-8 * dense, "{} vs {dense}", est.constant);
        let at_mode = korn_ratio(&id, &est.mode, &m).unwrap();
        assert!((at_mode - dense).abs() < 1e-8 * dense);
        // any field stays below the constant
        let b = bump(g, 1.0);
        assert!(korn_ratio(&id, &b, &m).unwrap() <= dense * (1.0 + 1e-12));
        // an infinitesimal rotation cut off at the boundary has finite ratio
        let mut rot = Field::from_fn(g, Role::Velocity, |x| [-(x[1] - 0.5), x[0] - 0.5, 0.0]);
        apply_dirichlet_zero(&mut rot);
        let r = korn_ratio(&id, &rot, &m).unwrap();
        assert!(r.is_finite() && r > 0.0 && r <= dense * (1.0 + 1e-12));
        // small perturbations of y change the ratio little
        let y = id.lin_comb(1.0, &bump(g, 1.0), 1e-3);
        let rp = korn_ratio(&y, &b, &m).unwrap();
        let r0 = korn_ratio(&id, &b, &m).unwrap();
        assert!((rp - r0).abs() < 1e-2 * r0);
        assert!(korn_ratio(&id, &Field::zeros(g, Role::Velocity), &m).is_err());
    }

    #[test]
    fn rigidity_monitors() {
        let g = Grid::new(2, 9).unwrap();
        let sc = spec(Model::Nonlinear).scales;
        let r = rigidity_report(&Field::identity(g), &sc);
        assert_eq!(r.u_h1, 0.0);
        assert_eq!(r.delta_grad_inf, 0.0);
        assert!((r.min_det - 1.0).abs() < 1e-15);
        assert!(r.dist_so_l2 < 1e-14);
        assert!(!r.flags(1.0, &sc).any());
        let u = bump(g, 1.0);
        let mut prev = f64::INFINITY;
        for delta in [0.1, 0.05, 0.025] {
            let y = Field::identity(g).lin_comb(1.0, &u, delta);
            let rep = rigidity_report(&y, &ScaleParams { delta, ..sc });
            assert!((rep.u_h1 - discrete_norms(&u).h1()).abs() < 1e-10);
            let ratio = rep.dist_so_l2 / delta;
            assert!(ratio < prev * 1.01);
            prev = ratio;
        }
        let y = Field::identity(g).lin_comb(1.0, &u, 0.1);
        let rep = rigidity_report(&y, &sc);
        assert!(rep.flags(1e-3, &sc).u_bound);
    }

    #[test]
    fn gamma_gaps() {
        let g = Grid::new(2, 9).unwrap();
        let m = Material::default_2d();
        let sc = spec(Model::Nonlinear).scales;
        let zero = Field::zeros(g, Role::Displacement);
        let z = gamma_gap(&zero, &zero, &[0.1, 0.05, 0.025], &sc, &m).unwrap();
        assert!(z.energy.iter().chain(&z.dissipation).chain(&z.second_grade).all(|&x| x == 0.0));
        let u = bump(g, 1.0);
        let gg = gamma_gap(&u, &u, &[0.2, 0.1, 0.05, 0.025], &sc, &m).unwrap();
        assert!(gg.energy_rate().unwrap().slope >= 0.9);
        assert!(gg.dissipation_rate().unwrap().slope >= 0.9);
        let p = gg.second_grade_rate().unwrap().slope;
        assert!((p - 4.0 * 0.6).abs() < 1e-9);
    }
}
