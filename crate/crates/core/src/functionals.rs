//! Discrete energies, dissipation, incremental cost functionals and their
//! derivatives with respect to the interior unknowns.
//!
//! Elastic and viscous terms use one-point (cell-center) quadrature, the
//! second-gradient term is collected at interior nodes, and the inertial and
//! force terms use lumped nodal quadrature over interior nodes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    boundary_defect_identity, boundary_defect_zero, cell_gradient, cell_gradient_at, node_hessian, Field, Grid,
    HessianStencilEntry, Role,
};
use crate::material::{
    c_action, d2p_coefficients, d2r_tensor, d2w, d2w_tensor, dp, dr_dfdot, dw, elastic_tensor_c,
    p_density, r_density, w_density, Material, ScaleParams,
};
use crate::sparse::{dot, Assembler, Cholesky, SymMatrix};
use crate::tensor::{Mat, Tensor3, Tensor4};

/// Which incremental problem a step solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Nonlinear, δ-scaled problem in the deformation `y`.
    Nonlinear,
    /// Linearized problem in the displacement `u`.
    Linear,
}

/// Frozen data of one incremental minimization.
///
/// For [`Model::Nonlinear`] `y_prev` is a deformation with identity boundary
/// values; for [`Model::Linear`] it is a displacement vanishing on the boundary.
/// `f` is the applied force density and `w` the delayed velocity datum.
#[derive(Clone, Debug)]
pub struct StepSetup {
    pub model: Model,
    pub y_prev: Field,
    pub w: Field,
    pub f: Field,
    pub scales: ScaleParams,
    pub material: Material,
}

impl StepSetup {
    pub fn new(
        model: Model,
        y_prev: Field,
        w: Field,
        f: Field,
        scales: ScaleParams,
        material: Material,
    ) -> Result<Self> {
        y_prev.check_same_grid(&w)?;
        y_prev.check_same_grid(&f)?;
        if !(y_prev.is_finite() && w.is_finite() && f.is_finite()) {
            return Err(Error::Config("step data must be finite".into()));
        }
        let defect = match model {
            Model::Nonlinear => boundary_defect_identity(&y_prev),
            Model::Linear => boundary_defect_zero(&y_prev),
        };
        if defect > 1e-12 {
            return Err(Error::Config(format!(
                "previous state violates its boundary condition by {defect:e}"
            )));
        }
        Ok(Self {
            model,
            y_prev,
            w,
            f,
            scales,
            material,
        })
    }

    pub fn grid(&self) -> Grid {
        self.y_prev.grid()
    }

    #[inline]
    pub fn tau(&self) -> f64 {
        self.scales.tau
    }

    /// Same data with the step length replaced by `sigma`.
    pub fn with_tau(&self, sigma: f64) -> Self {
        let mut s = self.clone();
        s.scales.tau = sigma;
        s
    }

    /// Difference quotient `(y − y_prev)/τ`.
    pub fn velocity(&self, y: &Field) -> Field {
        let tau = self.tau();
        y.lin_comb(1.0 / tau, &self.y_prev, -1.0 / tau).with_role(Role::Velocity)
    }

    fn weights(&self) -> Weights {
        Weights::new(self.model, &self.scales, &self.material)
    }
}

/// Term weights shared by the two models.
#[derive(Clone, Copy, Debug)]
struct Weights {
    elastic: f64,
    second: f64,
    viscous: f64,
    inertial: f64,
    force: f64,
}

impl Weights {
    fn new(model: Model, s: &ScaleParams, m: &Material) -> Self {
        match model {
            Model::Nonlinear => {
                let id2 = s.inv_delta_sq();
                Self {
                    elastic: id2,
                    second: s.p_weight(m.elastic.p_exp),
                    viscous: id2,
                    inertial: s.rho / s.h * id2,
                    force: id2,
                }
            }
            Model::Linear => Self {
                elastic: 1.0,
                second: 0.0,
                viscous: 1.0,
                inertial: s.rho / s.h,
                force: 1.0,
            },
        }
    }
}

/// The summands of an incremental cost.
///
/// `total = elastic_W + second_grade_P + dissipation_R + inertial − force_work`,
/// where each entry already carries its scaling and the factor `τ` where
/// applicable.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EnergyBreakdown {
    pub elastic_W: f64,
    pub second_grade_P: f64,
    pub dissipation_R: f64,
    pub inertial: f64,
    pub force_work: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn assemble(elastic_w: f64, second_p: f64, dissipation: f64, inertial: f64, force: f64) -> Self {
        Self {
            elastic_W: elastic_w,
            second_grade_P: second_p,
            dissipation_R: dissipation,
            inertial,
            force_work: force,
            total: elastic_w + second_p + dissipation + inertial - force,
        }
    }

    /// Stored energy part `ℰ(y)` of the cost.
    pub fn energy(&self) -> f64 {
        self.elastic_W + self.second_grade_P
    }
}

fn dof(g: &Grid, node: usize, comp: usize) -> Option<usize> {
    g.interior_of(node).map(|k| k * g.dim() + comp)
}

/// Viscous reference gradients: `∇y_prev` per cell, or `Id` for the linear model.
fn viscous_reference(setup: &StepSetup) -> Vec<Mat> {
    let g = setup.grid();
    match setup.model {
        Model::Nonlinear => cell_gradient(&setup.y_prev),
        Model::Linear => vec![Mat::identity(g.dim()); g.num_cells()],
    }
}

fn sum_in_order(vals: Vec<f64>) -> f64 {
    vals.into_iter().sum()
}

/// `(δ⁻² ∫W(∇y), δ^{-αp} ∫P(∇²y))`; the first entry is `+∞` if orientation fails.
pub fn energy_parts_delta(y: &Field, scales: &ScaleParams, material: &Material) -> (f64, f64) {
    let g = y.grid();
    let vol = g.cell_volume();
    let el = &material.elastic;
    let w: Vec<f64> = (0..g.num_cells())
        .into_par_iter()
        .map(|c| w_density(&cell_gradient_at(y, c), el))
        .collect();
    let p: Vec<f64> = node_hessian(y).iter().map(|t| p_density(t, el)).collect();
    (
        scales.inv_delta_sq() * sum_in_order(w) * vol,
        scales.p_weight(el.p_exp) * sum_in_order(p) * vol,
    )
}

/// Scaled stored energy `ℰ_δ(y)`.
pub fn energy_e_delta(y: &Field, scales: &ScaleParams, material: &Material) -> f64 {
    let (w, p) = energy_parts_delta(y, scales, material);
    w + p
}

/// Linearized energy `ℰ₀(u) = ½ ∫ e(u) : 𝔺 e(u)`.
pub fn energy_e_0(u: &Field, material: &Material) -> f64 {
    let g = u.grid();
    let vals: Vec<f64> = cell_gradient(u)
        .iter()
        .map(|gu| 0.5 * gu.ddot(&c_action(&material.elastic, gu)))
        .collect();
    sum_in_order(vals) * g.cell_volume()
}

/// Scaled dissipation `ℛ_δ(y, v) = δ⁻² ∫ R(∇y, ∇v)`.
pub fn dissipation_r_delta(y: &Field, v: &Field, scales: &ScaleParams, material: &Material) -> f64 {
    scales.inv_delta_sq() * dissipation_unscaled(y, v, material)
}

/// `∫ R(∇y, ∇v)` without scaling.
pub fn dissipation_unscaled(y: &Field, v: &Field, material: &Material) -> f64 {
    let g = y.grid();
    let gy = cell_gradient(y);
    let gv = cell_gradient(v);
    let vals: Vec<f64> = gy
        .iter()
        .zip(&gv)
        .map(|(f, fd)| r_density(f, fd, &material.viscosity))
        .collect();
    sum_in_order(vals) * g.cell_volume()
}

/// Linearized dissipation `½ ∫ e(v) : 𝔻₀ e(v)`.
pub fn dissipation_r_0(v: &Field, material: &Material) -> f64 {
    let g = v.grid();
    dissipation_unscaled(&Field::identity(g), v, material)
}

/// `(∫ |v − w|², ∫ f·v)` by nodal quadrature over interior nodes.
fn nodal_terms(v: &Field, w: &Field, f: &Field) -> (f64, f64) {
    let g = v.grid();
    let d = g.dim();
    let mut kin = 0.0;
    let mut work = 0.0;
    for k in 0..g.num_interior() {
        let node = g.interior_node(k);
        for i in 0..d {
            let vi = v.at(node, i);
            kin += (vi - w.at(node, i)).powi(2);
            work += f.at(node, i) * vi;
        }
    }
    let vol = g.cell_volume();
    (kin * vol, work * vol)
}

/// Nonlinear incremental cost with its breakdown; `total = +∞` when orientation fails.
pub fn cost_i_delta_tau(y: &Field, setup: &StepSetup) -> EnergyBreakdown {
    debug_assert_eq!(setup.model, Model::Nonlinear);
    let tau = setup.tau();
    let wt = Weights::new(Model::Nonlinear, &setup.scales, &setup.material);
    let (ew, ep) = energy_parts_delta(y, &setup.scales, &setup.material);
    let v = setup.velocity(y);
    let diss = tau * dissipation_r_delta(&setup.y_prev, &v, &setup.scales, &setup.material);
    let (kin, work) = nodal_terms(&v, &setup.w, &setup.f);
    EnergyBreakdown::assemble(ew, ep, diss, 0.5 * tau * wt.inertial * kin, tau * wt.force * work)
}

/// Linearized incremental cost with its breakdown.
pub fn cost_i_0_tau(u: &Field, setup: &StepSetup) -> EnergyBreakdown {
    debug_assert_eq!(setup.model, Model::Linear);
    let tau = setup.tau();
    let wt = Weights::new(Model::Linear, &setup.scales, &setup.material);
    let v = setup.velocity(u);
    let diss = tau * dissipation_r_0(&v, &setup.material);
    let (kin, work) = nodal_terms(&v, &setup.w, &setup.f);
    EnergyBreakdown::assemble(
        energy_e_0(u, &setup.material),
        0.0,
        diss,
        0.5 * tau * wt.inertial * kin,
        tau * wt.force * work,
    )
}

/// Cost of the setup's model.
pub fn cost(y: &Field, setup: &StepSetup) -> EnergyBreakdown {
    match setup.model {
        Model::Nonlinear => cost_i_delta_tau(y, setup),
        Model::Linear => cost_i_0_tau(y, setup),
    }
}

/// Stored energy of a state under the setup's model.
pub fn stored_energy(y: &Field, setup: &StepSetup) -> f64 {
    match setup.model {
        Model::Nonlinear => energy_e_delta(y, &setup.scales, &setup.material),
        Model::Linear => energy_e_0(y, &setup.material),
    }
}

/// Gradient of the cost split into its stored-energy, dissipative and nodal parts.
#[derive(Clone, Debug)]
pub struct GradParts {
    pub energy: Vec<f64>,
    pub dissipation: Vec<f64>,
    pub nodal: Vec<f64>,
}

impl GradParts {
    pub fn total(&self) -> Vec<f64> {
        self.energy
            .iter()
            .zip(&self.dissipation)
            .zip(&self.nodal)
            .map(|((a, b), c)| a + b + c)
            .collect()
    }
}

fn scatter_cell(g: &Grid, cell: usize, stress: &Mat, weight: f64, out: &mut [f64]) {
    let d = g.dim();
    for (node, w) in g.cell_stencil(cell) {
        for i in 0..d {
            if let Some(k) = dof(g, node, i) {
                let mut s = 0.0;
                for a in 0..d {
                    s += stress[(i, a)] * w[a];
                }
                out[k] += weight * s;
            }
        }
    }
}

fn scatter_node(
    g: &Grid,
    node: usize,
    stencil: &[HessianStencilEntry],
    hyper: &Tensor3,
    weight: f64,
    out: &mut [f64],
) {
    let d = g.dim();
    for e in stencil {
        let nb = g.offset_node(node, &e.offset);
        for i in 0..d {
            if let Some(k) = dof(g, nb, i) {
                let mut s = 0.0;
                for j in 0..d {
                    for l in 0..d {
                        s += hyper[(i, j, l)] * e.coef[(j, l)];
                    }
                }
                out[k] += weight * s;
            }
        }
    }
}

fn elastic_stresses(y: &Field, model: Model, material: &Material) -> Result<Vec<Mat>> {
    let g = y.grid();
    let el = material.elastic;
    (0..g.num_cells())
        .into_par_iter()
        .map(|c| {
            let f = cell_gradient_at(y, c);
            match model {
                Model::Nonlinear => dw(&f, &el),
                Model::Linear => Ok(c_action(&el, &f)),
            }
        })
        .collect()
}

/// Gradient of the cost with respect to the interior unknowns, by parts.
pub fn grad_parts(y: &Field, setup: &StepSetup) -> Result<GradParts> {
    let g = setup.grid();
    y.check_same_grid(&setup.y_prev)?;
    let n = g.num_dofs();
    let wt = setup.weights();
    let vol = g.cell_volume();

    let mut energy = vec![0.0; n];
    let stresses = elastic_stresses(y, setup.model, &setup.material)?;
    for (c, s) in stresses.iter().enumerate() {
        scatter_cell(&g, c, s, wt.elastic * vol, &mut energy);
    }
    if wt.second != 0.0 {
        let stencil = g.hessian_stencil();
        for (k, t) in node_hessian(y).iter().enumerate() {
            let hyper = dp(t, &setup.material.elastic);
            scatter_node(&g, g.interior_node(k), &stencil, &hyper, wt.second * vol, &mut energy);
        }
    }

    let v = setup.velocity(y);
    let mut dissipation = vec![0.0; n];
    let gv = cell_gradient(&v);
    for (c, fref) in viscous_reference(setup).iter().enumerate() {
        let s = dr_dfdot(fref, &gv[c], &setup.material.viscosity);
        scatter_cell(&g, c, &s, wt.viscous * vol, &mut dissipation);
    }

    let d = g.dim();
    let mut nodal = vec![0.0; n];
    for k in 0..g.num_interior() {
        let node = g.interior_node(k);
        for i in 0..d {
            nodal[k * d + i] = vol
                * (wt.inertial * (v.at(node, i) - setup.w.at(node, i)) - wt.force * setup.f.at(node, i));
        }
    }
    Ok(GradParts {
        energy,
        dissipation,
        nodal,
    })
}

/// Gradient of the cost with respect to the interior unknowns.
pub fn grad_cost(y: &Field, setup: &StepSetup) -> Result<Vec<f64>> {
    Ok(grad_parts(y, setup)?.total())
}

fn cell_block(g: &Grid, cell: usize, t: &Tensor4, weight: f64) -> Vec<(usize, usize, f64)> {
    let d = g.dim();
    let st = g.cell_stencil(cell);
    let mut out = Vec::with_capacity(st.len() * st.len() * d * d);
    for (m, wm) in &st {
        for i in 0..d {
            let Some(r) = dof(g, *m, i) else { continue };
            for (nn, wn) in &st {
                for j in 0..d {
                    let Some(c) = dof(g, *nn, j) else { continue };
                    let mut s = 0.0;
                    for a in 0..d {
                        for b in 0..d {
                            s += wm[a] * t[(i, a, j, b)] * wn[b];
                        }
                    }
                    out.push((r, c, weight * s));
                }
            }
        }
    }
    out
}

fn node_block(
    g: &Grid,
    node: usize,
    stencil: &[HessianStencilEntry],
    hess: &Tensor3,
    (a, b): (f64, f64),
    weight: f64,
) -> Vec<(usize, usize, f64)> {
    let d = g.dim();
    let entries: Vec<(usize, &Mat)> = stencil
        .iter()
        .map(|e| (g.offset_node(node, &e.offset), &e.coef))
        .collect();
    // projections g_i : C_e
    let proj = |i: usize, c: &Mat| {
        let mut s = 0.0;
        for j in 0..d {
            for l in 0..d {
                s += hess[(i, j, l)] * c[(j, l)];
            }
        }
        s
    };
    let mut out = Vec::new();
    for (n1, c1) in &entries {
        for i1 in 0..d {
            let Some(r) = dof(g, *n1, i1) else { continue };
            let p1 = proj(i1, c1);
            for (n2, c2) in &entries {
                let cc = c1.ddot(c2);
                for i2 in 0..d {
                    let Some(c) = dof(g, *n2, i2) else { continue };
                    let mut v = b * p1 * proj(i2, c2);
                    if i1 == i2 {
                        v += a * cc;
                    }
                    out.push((r, c, weight * v));
                }
            }
        }
    }
    out
}

/// Assembled Hessian of the cost at `y`.
pub fn hessian(y: &Field, setup: &StepSetup) -> Result<SymMatrix> {
    let g = setup.grid();
    y.check_same_grid(&setup.y_prev)?;
    let wt = setup.weights();
    let vol = g.cell_volume();
    let tau = setup.tau();
    let mat = setup.material;
    let c_lin = elastic_tensor_c(&mat.elastic, g.dim());
    let refs = viscous_reference(setup);

    let cell_blocks: Vec<Vec<(usize, usize, f64)>> = (0..g.num_cells())
        .into_par_iter()
        .map(|c| -> Result<Vec<(usize, usize, f64)>> {
            let tangent = match setup.model {
                Model::Nonlinear => d2w_tensor(&cell_gradient_at(y, c), &mat.elastic)?,
                Model::Linear => c_lin,
            };
            let mut blk = cell_block(&g, c, &tangent, wt.elastic * vol);
            let visc = d2r_tensor(&refs[c], &mat.viscosity);
            blk.extend(cell_block(&g, c, &visc, wt.viscous * vol / tau));
            Ok(blk)
        })
        .collect::<Result<_>>()?;

    let mut asm = Assembler::new(g.num_dofs());
    for blk in cell_blocks {
        for (r, c, v) in blk {
            asm.push(r, c, v);
        }
    }
    if wt.second != 0.0 {
        let stencil = g.hessian_stencil();
        let hess = node_hessian(y);
        let node_blocks: Vec<Vec<(usize, usize, f64)>> = (0..g.num_interior())
            .into_par_iter()
            .map(|k| {
                let coeffs = d2p_coefficients(&hess[k], &mat.elastic);
                node_block(&g, g.interior_node(k), &stencil, &hess[k], coeffs, wt.second * vol)
            })
            .collect();
        for blk in node_blocks {
            for (r, c, v) in blk {
                asm.push(r, c, v);
            }
        }
    }
    let mass = wt.inertial * vol / tau;
    for k in 0..g.num_dofs() {
        asm.push(k, k, mass);
    }
    Ok(asm.finish())
}

/// Hessian of the cost applied to a direction, evaluated without assembly.
pub fn hess_action(y: &Field, setup: &StepSetup, direction: &[f64]) -> Result<Vec<f64>> {
    let g = setup.grid();
    let wt = setup.weights();
    let vol = g.cell_volume();
    let tau = setup.tau();
    let mat = setup.material;
    let mut dir = Field::zeros(g, Role::Displacement);
    dir.set_interior_values(direction)?;
    let gd = cell_gradient(&dir);
    let refs = viscous_reference(setup);

    let mut out = vec![0.0; g.num_dofs()];
    for c in 0..g.num_cells() {
        let el = match setup.model {
            Model::Nonlinear => d2w(&cell_gradient_at(y, c), &mat.elastic, &gd[c])?,
            Model::Linear => c_action(&mat.elastic, &gd[c]),
        };
        scatter_cell(&g, c, &el, wt.elastic * vol, &mut out);
        let visc = dr_dfdot(&refs[c], &gd[c], &mat.viscosity);
        scatter_cell(&g, c, &visc, wt.viscous * vol / tau, &mut out);
    }
    if wt.second != 0.0 {
        let stencil = g.hessian_stencil();
        let hy = node_hessian(y);
        let hd = node_hessian(&dir);
        for k in 0..g.num_interior() {
            let t = crate::material::d2p(&hy[k], &mat.elastic, &hd[k]);
            scatter_node(&g, g.interior_node(k), &stencil, &t, wt.second * vol, &mut out);
        }
    }
    let mass = wt.inertial * vol / tau;
    for (o, x) in out.iter_mut().zip(direction) {
        *o += mass * x;
    }
    Ok(out)
}

/// Weak-form pairing of the step's Euler–Lagrange equation with a test field
/// `φ` vanishing on the boundary, computed directly from field derivatives.
pub fn weak_form_pairing(y: &Field, setup: &StepSetup, phi: &Field) -> Result<f64> {
    let g = setup.grid();
    let wt = setup.weights();
    let vol = g.cell_volume();
    let mat = setup.material;
    let gphi = cell_gradient(phi);
    let stresses = elastic_stresses(y, setup.model, &mat)?;
    let mut total = 0.0;
    for (s, gp) in stresses.iter().zip(&gphi) {
        total += wt.elastic * s.ddot(gp) * vol;
    }
    if wt.second != 0.0 {
        let hphi = node_hessian(phi);
        for (t, hp) in node_hessian(y).iter().zip(&hphi) {
            total += wt.second * dp(t, &mat.elastic).dot(hp) * vol;
        }
    }
    let v = setup.velocity(y);
    let gv = cell_gradient(&v);
    for (c, fref) in viscous_reference(setup).iter().enumerate() {
        total += wt.viscous * dr_dfdot(fref, &gv[c], &mat.viscosity).ddot(&gphi[c]) * vol;
    }
    let d = g.dim();
    for k in 0..g.num_interior() {
        let node = g.interior_node(k);
        for i in 0..d {
            let p = phi.at(node, i);
            total += vol
                * (wt.inertial * (v.at(node, i) - setup.w.at(node, i)) - wt.force * setup.f.at(node, i))
                * p;
        }
    }
    Ok(total)
}

/// The quadratic form `v ↦ ℛ(y, v) = ½ vᵀ K v` on interior unknowns, with its
/// Cholesky factor for evaluating the Legendre transform.
pub struct DissipationForm {
    matrix: SymMatrix,
    chol: Cholesky,
}

impl DissipationForm {
    /// Form of `weight · ∫ R(∇y, ∇v)`.
    pub fn new(y: &Field, weight: f64, material: &Material) -> Result<Self> {
        let g = y.grid();
        let vol = g.cell_volume();
        let blocks: Vec<Vec<(usize, usize, f64)>> = (0..g.num_cells())
            .into_par_iter()
            .map(|c| {
                let t = d2r_tensor(&cell_gradient_at(y, c), &material.viscosity);
                cell_block(&g, c, &t, weight * vol)
            })
            .collect();
        let mut asm = Assembler::new(g.num_dofs());
        for blk in blocks {
            for (r, c, v) in blk {
                asm.push(r, c, v);
            }
        }
        let matrix = asm.finish();
        let chol = matrix.cholesky()?;
        Ok(Self { matrix, chol })
    }

    /// Scaled form `ℛ_δ(y, ·)`.
    pub fn scaled(y: &Field, scales: &ScaleParams, material: &Material) -> Result<Self> {
        Self::new(y, scales.inv_delta_sq(), material)
    }

    /// The dissipation form entering a step: `ℛ_δ(y_prev, ·)` or `ℛ₀`.
    pub fn for_setup(setup: &StepSetup) -> Result<Self> {
        match setup.model {
            Model::Nonlinear => Self::scaled(&setup.y_prev, &setup.scales, &setup.material),
            Model::Linear => Self::new(&Field::identity(setup.grid()), 1.0, &setup.material),
        }
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn value(&self, v: &[f64]) -> f64 {
        0.5 * self.matrix.bilinear(v, v)
    }

    /// `D₂ℛ(y, v) = K v`.
    pub fn derivative(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.matvec(v)
    }

    /// Maximizer of `⟨ξ, v⟩ − ℛ(y, v)`.
    pub fn argmax(&self, xi: &[f64]) -> Vec<f64> {
        self.chol.solve(xi)
    }

    /// `ℛ*(y, ξ) = sup_v ⟨ξ, v⟩ − ℛ(y, v)`.
    pub fn dual(&self, xi: &[f64]) -> f64 {
        let v = self.argmax(xi);
        dot(xi, &v) - self.value(&v)
    }
}

/// `ℛ*_δ(y, ξ)` for a functional `ξ` on interior unknowns (Euclidean pairing).
pub fn dual_dissipation(y: &Field, xi: &[f64], scales: &ScaleParams, material: &Material) -> Result<f64> {
    let g = y.grid();
    if xi.len() != g.num_dofs() {
        return Err(Error::SizeMismatch {
            expected: g.num_dofs(),
            got: xi.len(),
        });
    }
    Ok(DissipationForm::scaled(y, scales, material)?.dual(xi))
}

/// Interior unknowns of a field as a functional datum (convenience for tests and tools).
pub fn as_functional(f: &Field) -> Vec<f64> {
    f.interior_values()
}
