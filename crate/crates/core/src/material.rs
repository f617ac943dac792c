//! Constitutive laws: stored energy `W`, second-gradient energy `P`, and the
//! viscous dissipation potential `R`, together with their derivatives.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Mat, Tensor3, Tensor4};

/// Parameters of the elastic stored energy and the second-gradient term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticParams {
    pub mu: f64,
    pub kappa: f64,
    pub eps_det: f64,
    pub s_exp: f64,
    pub c_p: f64,
    pub p_exp: f64,
}

impl ElasticParams {
    /// Defaults for `d = 2`: `p = 4` and the smallest admissible compression
    /// exponent `s = p d / (p - d) = 4`.
    pub fn default_2d() -> Self {
        Self {
            mu: 1.0,
            kappa: 1.0,
            eps_det: 0.1,
            s_exp: 4.0,
            c_p: 1.0,
            p_exp: 4.0,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let df = d as f64;
        let all = [self.mu, self.kappa, self.eps_det, self.s_exp, self.c_p, self.p_exp];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("elastic parameters must be finite".into()));
        }
        if self.mu <= 0.0 || self.eps_det <= 0.0 || self.c_p <= 0.0 {
            return Err(Error::Config("mu, eps_det and c_P must be positive".into()));
        }
        if self.kappa < 0.0 {
            return Err(Error::Config("kappa must be nonnegative".into()));
        }
        if self.p_exp <= df {
            return Err(Error::Config(format!("p = {} must exceed d = {d}", self.p_exp)));
        }
        let s_min = self.p_exp * df / (self.p_exp - df);
        if self.s_exp < s_min * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "compression exponent s = {} is below p d/(p-d) = {s_min}",
                self.s_exp
            )));
        }
        Ok(())
    }

    /// `λ* = 2 kappa + eps_det s (s + 1)`, the volumetric coefficient of `∂²W(Id)`.
    pub fn lambda_star(&self) -> f64 {
        2.0 * self.kappa + self.eps_det * self.s_exp * (self.s_exp + 1.0)
    }

    fn g(&self, j: f64) -> f64 {
        let s = self.s_exp;
        self.kappa * (j - 1.0).powi(2) + self.eps_det * (j.powf(-s) + s * j - (s + 1.0))
    }

    fn g1(&self, j: f64) -> f64 {
        let s = self.s_exp;
        2.0 * self.kappa * (j - 1.0) + self.eps_det * s * (1.0 - j.powf(-s - 1.0))
    }

    fn g2(&self, j: f64) -> f64 {
        let s = self.s_exp;
        2.0 * self.kappa + self.eps_det * s * (s + 1.0) * j.powf(-s - 2.0)
    }
}

/// Viscosity tensor `𝔻(C) = m(C) 𝔻₀` with
/// `𝔻₀ e = 2 eta e + lambda_v tr(e) Id` and `m(C) = 1 + theta q/(1+q)`, `q = |C - Id|²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViscosityTensor {
    pub eta: f64,
    pub lambda_v: f64,
    #[serde(default)]
    pub theta: f64,
}

impl Default for ViscosityTensor {
    fn default() -> Self {
        Self {
            eta: 1.0,
            lambda_v: 0.5,
            theta: 0.0,
        }
    }
}

impl ViscosityTensor {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.lambda_v.is_finite() && self.theta.is_finite()) {
            return Err(Error::Config("viscosity parameters must be finite".into()));
        }
        if self.eta <= 0.0 || self.lambda_v < 0.0 || self.theta < 0.0 {
            return Err(Error::Config(
                "need eta > 0, lambda_v >= 0 and theta >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Modulation factor `m(C)`.
    pub fn modulation(&self, c: &Mat) -> f64 {
        if self.theta == 0.0 {
            return 1.0;
        }
        let q = (*c - Mat::identity(c.dim())).norm_sq();
        1.0 + self.theta * q / (1.0 + q)
    }

    /// `𝔻₀ e`.
    pub fn apply_d0(&self, e: &Mat) -> Mat {
        let d = e.dim();
        e.scale(2.0 * self.eta) + Mat::identity(d).scale(self.lambda_v * e.trace())
    }

    /// `𝔻(C) e`.
    pub fn apply(&self, c: &Mat, e: &Mat) -> Mat {
        self.apply_d0(e).scale(self.modulation(c))
    }

    /// Constants `(a1, a2)` with `a1 |e|² ≤ e:𝔻(C)e ≤ a2 |e|²` for symmetric `e`.
    pub fn bounds(&self, d: usize) -> (f64, f64) {
        (
            2.0 * self.eta,
            (1.0 + self.theta) * (2.0 * self.eta + d as f64 * self.lambda_v),
        )
    }

    /// The tensor `𝔻₀` as a fourth-order array.
    pub fn d0_tensor(&self, d: usize) -> Tensor4 {
        Tensor4::from_fn(d, |i, j, k, l| {
            let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
            self.eta * (dl(i, k) * dl(j, l) + dl(i, l) * dl(j, k)) + self.lambda_v * dl(i, j) * dl(k, l)
        })
    }
}

/// Complete constitutive description.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub elastic: ElasticParams,
    pub viscosity: ViscosityTensor,
}

impl Material {
    pub fn default_2d() -> Self {
        Self {
            elastic: ElasticParams::default_2d(),
            viscosity: ViscosityTensor::default(),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        self.elastic.validate(d)?;
        self.viscosity.validate()
    }
}

/// Smallness and time-discretization parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleParams {
    pub delta: f64,
    pub alpha: f64,
    pub rho: f64,
    pub h: f64,
    pub tau: f64,
}

impl ScaleParams {
    /// Number of inner steps per delay block, `h / tau`, if it is an integer.
    pub fn steps_per_block(&self) -> Option<usize> {
        integer_ratio(self.h, self.tau)
    }

    pub fn validate(&self, p_exp: f64) -> Result<()> {
        let all = [self.delta, self.alpha, self.rho, self.h, self.tau];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("scale parameters must be finite".into()));
        }
        if self.delta <= 0.0 || self.rho <= 0.0 || self.h <= 0.0 || self.tau <= 0.0 {
            return Err(Error::Config("delta, rho, h and tau must be positive".into()));
        }
        if self.tau > self.h * (1.0 + 1e-12) {
            return Err(Error::Config(format!("tau = {} exceeds h = {}", self.tau, self.h)));
        }
        if self.steps_per_block().is_none() {
            return Err(Error::Config(format!(
                "h / tau = {} is not an integer",
                self.h / self.tau
            )));
        }
        let lo = 1.0 / (p_exp - 1.0);
        if !(self.alpha > lo && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha = {} must lie in (1/(p-1), 1) = ({lo}, 1)",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Weight `δ^{-αp}` of the second-gradient term.
    pub fn p_weight(&self, p_exp: f64) -> f64 {
        self.delta.powf(-self.alpha * p_exp)
    }

    pub fn inv_delta_sq(&self) -> f64 {
        1.0 / (self.delta * self.delta)
    }
}

/// Returns `a / b` when it is within `1e-9` relative of a positive integer.
pub fn integer_ratio(a: f64, b: f64) -> Option<usize> {
    let r = a / b;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= 1e-9 * n {
        Some(n as usize)
    } else {
        None
    }
}

/// Distance of `F` to `SO(d)` in the Frobenius norm together with a nearest rotation.
pub fn dist_so(f: &Mat) -> (f64, Mat) {
    let d = f.dim();
    if d == 1 {
        let r = Mat::identity(1);
        return ((f[(0, 0)] - 1.0).abs(), r);
    }
    let svd = f.to_dmatrix().svd(true, true);
    let mut u = svd.u.expect("left singular vectors");
    let vt = svd.v_t.expect("right singular vectors");
    let mut r: DMatrix<f64> = &u * &vt;
    if r.determinant() < 0.0 {
        // flip the direction belonging to the smallest singular value
        let (kmin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &s)| if s < acc.1 { (k, s) } else { acc });
        let mut col = u.column_mut(kmin);
        col.neg_mut();
        r = &u * &vt;
    }
    let rot = Mat::from_dmatrix(&r);
    ((*f - rot).norm(), rot)
}

/// Stored energy density; `+∞` when `det F ≤ 0`.
pub fn w_density(f: &Mat, p: &ElasticParams) -> f64 {
    let j = f.det();
    if !(j > 0.0) {
        return f64::INFINITY;
    }
    let d = f.dim();
    let c = f.transpose() * *f;
    0.25 * p.mu * (c - Mat::identity(d)).norm_sq() + p.g(j)
}

fn require_positive_det(f: &Mat, what: &'static str) -> Result<f64> {
    let j = f.det();
    if j > 0.0 && j.is_finite() {
        Ok(j)
    } else {
        Err(Error::Domain { what, det: j })
    }
}

/// First Piola–Kirchhoff stress `∂_F W`.
pub fn dw(f: &Mat, p: &ElasticParams) -> Result<Mat> {
    let j = require_positive_det(f, "dW")?;
    let d = f.dim();
    let c = f.transpose() * *f;
    Ok((*f * (c - Mat::identity(d))).scale(p.mu) + f.cofactor().scale(p.g1(j)))
}

/// Second derivative of `W` applied to a direction: `∂²_F W(F)[H]`.
pub fn d2w(f: &Mat, p: &ElasticParams, h: &Mat) -> Result<Mat> {
    let j = require_positive_det(f, "d2W")?;
    Ok(d2w_unchecked(f, j, p, h))
}

fn d2w_unchecked(f: &Mat, j: f64, p: &ElasticParams, h: &Mat) -> Mat {
    let d = f.dim();
    let ft = f.transpose();
    let c = ft * *f;
    let ht = h.transpose();
    let st_venant = *h * (c - Mat::identity(d)) + *f * (ht * *f + ft * *h);
    let cof = f.cofactor();
    let cof_h = cof.ddot(h);
    let f_inv_t = cof.scale(1.0 / j);
    let dcof = f_inv_t.scale(cof_h) - (f_inv_t * ht * f_inv_t).scale(j);
    st_venant.scale(p.mu) + cof.scale(p.g2(j) * cof_h) + dcof.scale(p.g1(j))
}

/// `∂²_F W(F)` as a fourth-order tensor.
pub fn d2w_tensor(f: &Mat, p: &ElasticParams) -> Result<Tensor4> {
    let j = require_positive_det(f, "d2W")?;
    Ok(Tensor4::from_linear_map(f.dim(), |h| d2w_unchecked(f, j, p, h)))
}

/// Tensor of elastic constants `𝔺 = ∂²_F W(Id)`.
pub fn elastic_tensor_c(p: &ElasticParams, d: usize) -> Tensor4 {
    let ls = p.lambda_star();
    Tensor4::from_fn(d, |i, j, k, l| {
        let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        p.mu * (dl(i, k) * dl(j, l) + dl(i, l) * dl(j, k)) + ls * dl(i, j) * dl(k, l)
    })
}

/// Action `𝔺 H = 2 mu sym(H) + λ* tr(H) Id`.
pub fn c_action(p: &ElasticParams, h: &Mat) -> Mat {
    let d = h.dim();
    h.sym().scale(2.0 * p.mu) + Mat::identity(d).scale(p.lambda_star() * h.trace())
}

/// Second-gradient energy density `c_P |G|^p`.
pub fn p_density(g: &Tensor3, p: &ElasticParams) -> f64 {
    p.c_p * g.norm_sq().powf(0.5 * p.p_exp)
}

/// `∂_G P = c_P p |G|^{p-2} G`.
pub fn dp(g: &Tensor3, p: &ElasticParams) -> Tensor3 {
    let n2 = g.norm_sq();
    if n2 == 0.0 {
        return Tensor3::zeros(g.dim());
    }
    g.scale(p.c_p * p.p_exp * n2.powf(0.5 * p.p_exp - 1.0))
}

/// `∂²_G P(G)[H] = a H + b (G:H) G` with `a = c_P p |G|^{p-2}`, `b = c_P p (p-2) |G|^{p-4}`.
pub fn d2p(g: &Tensor3, p: &ElasticParams, h: &Tensor3) -> Tensor3 {
    let (a, b) = d2p_coefficients(g, p);
    h.scale(a) + g.scale(b * g.dot(h))
}

/// Coefficients `(a, b)` of [`d2p`]; both vanish at `G = 0` (valid for `p > 2`).
pub fn d2p_coefficients(g: &Tensor3, p: &ElasticParams) -> (f64, f64) {
    let n2 = g.norm_sq();
    if n2 == 0.0 {
        return (0.0, 0.0);
    }
    let pe = p.p_exp;
    let a = p.c_p * pe * n2.powf(0.5 * pe - 1.0);
    let b = p.c_p * pe * (pe - 2.0) * n2.powf(0.5 * pe - 2.0);
    (a, b)
}

/// Dissipation potential `R(F, Ḟ) = ½ Ė : 𝔻(C) Ė`.
pub fn r_density(f: &Mat, fdot: &Mat, v: &ViscosityTensor) -> f64 {
    let c = f.transpose() * *f;
    let edot = (f.transpose() * *fdot).sym();
    0.5 * edot.ddot(&v.apply(&c, &edot))
}

/// Viscous stress `∂_Ḟ R = F (𝔻(C) Ė)`.
pub fn dr_dfdot(f: &Mat, fdot: &Mat, v: &ViscosityTensor) -> Mat {
    let c = f.transpose() * *f;
    let edot = (f.transpose() * *fdot).sym();
    *f * v.apply(&c, &edot)
}

/// `∂²_Ḟ R(F)` as a fourth-order tensor (independent of `Ḟ`).
pub fn d2r_tensor(f: &Mat, v: &ViscosityTensor) -> Tensor4 {
    let c = f.transpose() * *f;
    let m = v.modulation(&c);
    let ft = f.transpose();
    Tensor4::from_linear_map(f.dim(), |a| *f * v.apply_d0(&(ft * *a).sym()).scale(m))
}

/// `|(δ⁻¹ ∂W(Id + δ∇u) − 𝔺 e(∇u)) : ∇φ|`.
pub fn linearization_residual_w(
    delta: f64,
    gradu: &Mat,
    gradphi: &Mat,
    p: &ElasticParams,
) -> Result<f64> {
    let d = gradu.dim();
    let f = Mat::identity(d) + gradu.scale(delta);
    let stress = dw(&f, p)?.scale(1.0 / delta);
    Ok((stress - c_action(p, gradu)).ddot(gradphi).abs())
}

/// `|δ⁻¹ ∂_Ḟ R(Id + δ∇u, δ∇v) : ∇φ − 𝔻₀ e(∇v) : e(∇φ)|`.
pub fn linearization_residual_r(
    delta: f64,
    gradu: &Mat,
    gradv: &Mat,
    gradphi: &Mat,
    v: &ViscosityTensor,
) -> f64 {
    let d = gradu.dim();
    let f = Mat::identity(d) + gradu.scale(delta);
    let nl = dr_dfdot(&f, &gradv.scale(delta), v).scale(1.0 / delta).ddot(gradphi);
    let lin = v.apply_d0(&gradv.sym()).ddot(&gradphi.sym());
    (nl - lin).abs()
}
