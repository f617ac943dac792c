//! Incremental minimization: damped Newton steps, the direct linear step,
//! interpolants within a step, and the two-timescale driver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{cost, grad_cost, hessian, stored_energy, EnergyBreakdown, Model, StepSetup};
use crate::grid::{apply_dirichlet_identity, apply_dirichlet_zero, h1_distance, min_det, Field, Grid, Role};
use crate::material::{integer_ratio, Material, ScaleParams};
use crate::quadrature::SigmaRule;
use crate::sparse::{dot, norm, SymMatrix};

/// Settings of the damped Newton iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    /// Stopping tolerance relative to the larger of the gradient norms at the
    /// initial guess and at the previous state.
    pub grad_tol: f64,
    /// Absolute floor of the stopping tolerance.
    pub abs_tol: f64,
    pub max_iters: usize,
    pub backtrack: f64,
    pub armijo: f64,
    /// Trial points with a smaller cell determinant are rejected.
    pub det_floor: f64,
    pub max_backtracks: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            abs_tol: 1e-12,
            max_iters: 100,
            backtrack: 0.5,
            armijo: 1e-4,
            det_floor: 1e-8,
            max_backtracks: 60,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.grad_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_iters > 0
            && self.backtrack > 0.0
            && self.backtrack < 1.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.det_floor > 0.0
            && self.max_backtracks > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("invalid Newton settings".into()))
        }
    }
}

/// Per-step solver statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub iterations: usize,
    pub initial_grad_norm: f64,
    pub grad_norm: f64,
    pub tolerance: f64,
    pub backtracks: usize,
    pub shifts: usize,
}

/// Solves `H d = -g`, adding a diagonal shift when `H` is not positive definite.
fn newton_direction(h: &SymMatrix, g: &[f64], shifts: &mut usize) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
    if let Ok(ch) = h.cholesky() {
        return Ok(ch.solve(&rhs));
    }
    let mut lambda = 1e-8 * h.max_abs_diag().max(1.0);
    for _ in 0..40 {
        *shifts += 1;
        if let Ok(ch) = h.shifted(lambda).cholesky() {
            return Ok(ch.solve(&rhs));
        }
        lambda *= 10.0;
    }
    Err(Error::Singular("Hessian could not be regularized".into()))
}

fn admissible(y: &Field, model: Model, det_floor: f64) -> bool {
    match model {
        Model::Nonlinear => min_det(y) > det_floor,
        Model::Linear => true,
    }
}

/// Minimizes the step cost by damped Newton iteration on the interior unknowns.
pub fn minimize_step(
    setup: &StepSetup,
    config: &NewtonConfig,
    initial_guess: &Field,
) -> Result<(Field, StepDiagnostics)> {
    initial_guess.check_same_grid(&setup.y_prev)?;
    if !admissible(initial_guess, setup.model, config.det_floor) {
        return Err(Error::Domain {
            what: "initial guess",
            det: min_det(initial_guess),
        });
    }
    let mut y = initial_guess.clone();
    let mut c = cost(&y, setup).total;
    if !c.is_finite() {
        return Err(Error::DegenerateStep { grad_norm: f64::NAN });
    }
    let mut g = grad_cost(&y, setup)?;
    let g0 = norm(&g);
    // a warm start may already be close; measure against the zero increment too
    let g_ref = if initial_guess == &setup.y_prev {
        g0
    } else {
        g0.max(norm(&grad_cost(&setup.y_prev, setup)?))
    };
    let tol = (config.grad_tol * g_ref).max(config.abs_tol);
    let mut diag = StepDiagnostics {
        initial_grad_norm: g0,
        grad_norm: g0,
        tolerance: tol,
        ..Default::default()
    };
    for it in 0..config.max_iters {
        let gn = norm(&g);
        diag.grad_norm = gn;
        diag.iterations = it;
        if gn <= tol {
            return Ok((y, diag));
        }
        let h = hessian(&y, setup)?;
        // gradients below this level are rounding noise of the assembled terms
        let floor = 64.0 * f64::EPSILON * h.max_abs_diag() * y.max_abs().max(1.0) * (g.len() as f64).sqrt();
        if gn <= floor {
            diag.tolerance = diag.tolerance.max(floor);
            return Ok((y, diag));
        }
        let mut d = newton_direction(&h, &g, &mut diag.shifts)?;
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            d = g.iter().map(|x| -x).collect();
            slope = -gn * gn;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..config.max_backtracks {
            let trial = y.add_interior(t, &d);
            if admissible(&trial, setup.model, config.det_floor) {
                let ct = cost(&trial, setup).total;
                if ct.is_finite() {
                    if ct <= c + config.armijo * t * slope {
                        accepted = Some((trial, ct, None));
                        break;
                    }
                    // near the minimizer cost differences drown in roundoff;
                    // accept when the gradient still decreases
                    let roundoff = 1e3 * f64::EPSILON * (1.0 + c.abs());
                    if (ct - c).abs() <= roundoff && (t * slope).abs() <= roundoff {
                        let gt = grad_cost(&trial, setup)?;
                        if norm(&gt) < gn {
                            accepted = Some((trial, ct, Some(gt)));
                            break;
                        }
                    }
                }
            }
            t *= config.backtrack;
            diag.backtracks += 1;
        }
        let Some((trial, ct, gt)) = accepted else {
            return Err(Error::DegenerateStep { grad_norm: gn });
        };
        y = trial;
        c = ct;
        g = match gt {
            Some(gt) => gt,
            None => grad_cost(&y, setup)?,
        };
    }
    let gn = norm(&g);
    diag.grad_norm = gn;
    diag.iterations = config.max_iters;
    if gn <= tol {
        return Ok((y, diag));
    }
    Err(Error::NonConvergence {
        iters: config.max_iters,
        grad_norm: gn,
        target: tol,
        best: Box::new(y),
    })
}

/// Solves the linearized step directly: one Cholesky solve plus one
/// refinement pass. Returns the solution and its relative residual.
pub fn linear_step(setup: &StepSetup, initial_guess: &Field) -> Result<(Field, f64)> {
    if setup.model != Model::Linear {
        return Err(Error::Config("linear_step needs a linear setup".into()));
    }
    initial_guess.check_same_grid(&setup.y_prev)?;
    let h = hessian(initial_guess, setup)?;
    let ch = h.cholesky()?;
    let g0 = grad_cost(initial_guess, setup)?;
    let mut u = initial_guess.add_interior(-1.0, &ch.solve(&g0));
    let r = grad_cost(&u, setup)?;
    u = u.add_interior(-1.0, &ch.solve(&r));
    let r = grad_cost(&u, setup)?;
    // residual relative to the size of the right-hand side
    let scale = norm(&grad_cost(&Field::zeros(setup.grid(), Role::Displacement), setup)?)
        .max(norm(&g0))
        .max(f64::MIN_POSITIVE);
    Ok((u, norm(&r) / scale))
}

/// Solves one step of either model.
fn solve_step(setup: &StepSetup, config: &NewtonConfig, guess: &Field) -> Result<(Field, StepDiagnostics)> {
    match setup.model {
        Model::Nonlinear => minimize_step(setup, config, guess),
        Model::Linear => {
            let (u, res) = linear_step(setup, guess)?;
            Ok((
                u,
                StepDiagnostics {
                    iterations: 1,
                    grad_norm: res,
                    ..Default::default()
                },
            ))
        }
    }
}

/// Samples of the interpolant family `σ ↦ y_σ` within one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolantRecord {
    /// σ values (decreasing).
    pub sigmas: Vec<f64>,
    /// Quadrature weights for the σ-integral.
    pub weights: Vec<f64>,
    /// `ρ/(2hδ²) |β_σ|² + ℛ(y_prev, β_σ)` with `β_σ = (y_σ − y_prev)/σ`; for the
    /// quadratic dissipation the second summand equals `ℛ*(D₂ℛ(β_σ))`.
    pub integrand: Vec<f64>,
    /// `I_σ(y_σ) − σ ρ/(2hδ²) |w|²`, nonincreasing in σ.
    pub reduced_cost: Vec<f64>,
    /// Discrete H¹ distance of `y_σ` to `y_prev`.
    pub distance_to_prev: Vec<f64>,
    /// Quadrature value of the σ-integral.
    pub integral: f64,
    /// The same integral on the alternative σ-grid (sensitivity estimate).
    pub alt_integral: Option<f64>,
}

/// Options of the interpolant computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterpolantOptions {
    pub rule: SigmaRule,
    /// Optional second rule whose integral is reported for comparison.
    pub sensitivity_rule: Option<SigmaRule>,
}

impl Default for InterpolantOptions {
    fn default() -> Self {
        Self {
            rule: SigmaRule::GaussLegendre(8),
            sensitivity_rule: Some(SigmaRule::Geometric(8)),
        }
    }
}

struct SigmaSample {
    integrand: f64,
    reduced_cost: f64,
    distance: f64,
}

/// Minimizes the interpolated cost for each σ and evaluates the integrand.
fn sigma_samples(
    setup: &StepSetup,
    config: &NewtonConfig,
    sigmas: &[f64],
    y_tau: &Field,
) -> Result<Vec<SigmaSample>> {
    let tau = setup.tau();
    let mut prev_sigma = tau;
    let mut prev_state = y_tau.clone();
    let mut out = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let s = setup.with_tau(sigma);
        // scale the previous increment down as a warm start
        let guess = setup
            .y_prev
            .lin_comb(1.0 - sigma / prev_sigma, &prev_state, sigma / prev_sigma);
        let guess = if admissible(&guess, setup.model, config.det_floor) {
            guess
        } else {
            setup.y_prev.clone()
        };
        let y_sigma = if (sigma - tau).abs() <= 1e-14 * tau {
            y_tau.clone()
        } else {
            solve_step(&s, config, &guess)?.0
        };
        let b = cost(&y_sigma, &s);
        // ½ c |β|² with c the inertial weight: the inertial term at w = 0 divided by σ
        let zero_w = StepSetup {
            w: Field::zeros(setup.grid(), Role::Velocity),
            f: Field::zeros(setup.grid(), Role::Force),
            ..s.clone()
        };
        let kin = cost(&y_sigma, &zero_w).inertial / sigma;
        let diss = b.dissipation_R / sigma;
        let wterm = delayed_kinetic(&s);
        out.push(SigmaSample {
            integrand: kin + diss,
            reduced_cost: b.total - wterm,
            distance: h1_distance(&y_sigma, &setup.y_prev)?,
        });
        prev_sigma = sigma;
        prev_state = y_sigma;
    }
    Ok(out)
}

/// Interpolant family of one step and the σ-integral of its energy terms.
pub fn degiorgi_interpolant(
    setup: &StepSetup,
    config: &NewtonConfig,
    y_tau: &Field,
    options: &InterpolantOptions,
) -> Result<InterpolantRecord> {
    let tau = setup.tau();
    let (sigmas, weights) = options.rule.nodes(tau);
    let samples = sigma_samples(setup, config, &sigmas, y_tau)?;
    let integral = samples.iter().zip(&weights).map(|(s, w)| s.integrand * w).sum();
    let alt_integral = match options.sensitivity_rule {
        Some(rule) => {
            let (s2, w2) = rule.nodes(tau);
            let samples2 = sigma_samples(setup, config, &s2, y_tau)?;
            Some(samples2.iter().zip(&w2).map(|(s, w)| s.integrand * w).sum())
        }
        None => None,
    };
    Ok(InterpolantRecord {
        sigmas,
        weights,
        integrand: samples.iter().map(|s| s.integrand).collect(),
        reduced_cost: samples.iter().map(|s| s.reduced_cost).collect(),
        distance_to_prev: samples.iter().map(|s| s.distance).collect(),
        integral,
        alt_integral,
    })
}

/// Interpolants at arbitrary σ values without quadrature (for inspection).
pub fn interpolant_states(setup: &StepSetup, config: &NewtonConfig, sigmas: &[f64]) -> Result<Vec<Field>> {
    let mut out = Vec::with_capacity(sigmas.len());
    let mut guess = setup.y_prev.clone();
    for &sigma in sigmas {
        let (y, _) = solve_step(&setup.with_tau(sigma), config, &guess)?;
        guess = y.clone();
        out.push(y);
    }
    Ok(out)
}

/// `τ ρ/(2h) ∫ |w|²` with the model's scaling: the inertial cost of the zero increment.
pub fn delayed_kinetic(setup: &StepSetup) -> f64 {
    let zero_f = StepSetup {
        f: Field::zeros(setup.grid(), Role::Force),
        ..setup.clone()
    };
    cost(&setup.y_prev, &zero_f).inertial
}

/// One accepted step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Global step index `k ≥ 1`.
    pub step: usize,
    pub time: f64,
    /// Cost summands at the accepted state.
    pub breakdown: EnergyBreakdown,
    /// Inertial cost of the zero increment, `τ ρ/(2hδ²) ∫|w_k|²`.
    pub delayed_kinetic: f64,
    pub solver: StepDiagnostics,
}

/// A computed trajectory with its per-step ledger.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub model: Model,
    pub scales: ScaleParams,
    pub material: Material,
    pub steps_per_block: usize,
    /// States `y_0, …, y_K` (or displacements for the linear model).
    pub states: Vec<Field>,
    /// Delayed velocity data `w_1, …, w_K`.
    pub w: Vec<Field>,
    /// Force data `f_1, …, f_K`.
    pub f: Vec<Field>,
    pub steps: Vec<StepRecord>,
    pub interpolants: Vec<Option<InterpolantRecord>>,
}

impl TrajectoryRecord {
    pub fn new(model: Model, y0: Field, scales: ScaleParams, material: Material) -> Result<Self> {
        let steps_per_block = scales
            .steps_per_block()
            .ok_or_else(|| Error::Config("h / tau must be an integer".into()))?;
        Ok(Self {
            model,
            scales,
            material,
            steps_per_block,
            states: vec![y0],
            w: Vec::new(),
            f: Vec::new(),
            steps: Vec::new(),
            interpolants: Vec::new(),
        })
    }

    pub fn grid(&self) -> Grid {
        self.states[0].grid()
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn tau(&self) -> f64 {
        self.scales.tau
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.scales.tau
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.num_steps())
    }

    /// Step setup that produced state `k ≥ 1`.
    pub fn setup(&self, k: usize) -> StepSetup {
        StepSetup {
            model: self.model,
            y_prev: self.states[k - 1].clone(),
            w: self.w[k - 1].clone(),
            f: self.f[k - 1].clone(),
            scales: self.scales,
            material: self.material,
        }
    }

    /// Increment `v_k = (y_k − y_{k−1})/τ`.
    pub fn increment(&self, k: usize) -> Field {
        self.setup(k).velocity(&self.states[k])
    }

    /// Stored energy of state `k`.
    pub fn energy(&self, k: usize) -> f64 {
        if k == 0 {
            let s = StepSetup {
                model: self.model,
                y_prev: self.states[0].clone(),
                w: self.states[0].clone(),
                f: self.states[0].clone(),
                scales: self.scales,
                material: self.material,
            };
            stored_energy(&self.states[0], &s)
        } else {
            self.steps[k - 1].breakdown.energy()
        }
    }

    /// Piecewise-affine interpolant at time `t ∈ [0, T]`.
    pub fn interpolate(&self, t: f64) -> Result<Field> {
        let tau = self.tau();
        let kf = t / tau;
        let k = kf.floor();
        if t < -1e-12 || kf > self.num_steps() as f64 + 1e-9 {
            return Err(Error::Misaligned(format!("time {t} outside [0, {}]", self.final_time())));
        }
        let k = (k.max(0.0) as usize).min(self.num_steps());
        let frac = kf - k as f64;
        if frac.abs() <= 1e-9 || k == self.num_steps() {
            return Ok(self.states[k].clone());
        }
        if (1.0 - frac).abs() <= 1e-9 {
            return Ok(self.states[k + 1].clone());
        }
        Ok(self.states[k].lin_comb(1.0 - frac, &self.states[k + 1], frac))
    }

    /// Displacement `(y − id)/δ` of state `k` (identity map for the linear model).
    pub fn displacement(&self, k: usize) -> Field {
        displacement_of(&self.states[k], self.model, self.scales.delta)
    }

    fn push_step(
        &mut self,
        setup: StepSetup,
        y: Field,
        diag: StepDiagnostics,
        interp: Option<InterpolantRecord>,
    ) {
        let k = self.states.len();
        let breakdown = cost(&y, &setup);
        let delayed = delayed_kinetic(&setup);
        self.steps.push(StepRecord {
            step: k,
            time: self.time(k),
            breakdown,
            delayed_kinetic: delayed,
            solver: diag,
        });
        self.w.push(setup.w);
        self.f.push(setup.f);
        self.states.push(y);
        self.interpolants.push(interp);
    }

    /// Performs one step with data `(w, f)`.
    pub fn advance(
        &mut self,
        w: Field,
        f: Field,
        config: &NewtonConfig,
        interpolant: Option<&InterpolantOptions>,
    ) -> Result<()> {
        let k = self.states.len();
        let prev = self.states[k - 1].clone();
        let setup = StepSetup::new(self.model, prev.clone(), w, f, self.scales, self.material)
            .map_err(|e| e.at_step(k))?;
        let (y, diag) = solve_step(&setup, config, &prev).map_err(|e| e.at_step(k))?;
        let interp = match interpolant {
            Some(opts) => Some(degiorgi_interpolant(&setup, config, &y, opts).map_err(|e| e.at_step(k))?),
            None => None,
        };
        self.push_step(setup, y, diag, interp);
        Ok(())
    }
}

/// `(y − id)/δ` for deformations; displacements are returned unchanged.
pub fn displacement_of(y: &Field, model: Model, delta: f64) -> Field {
    match model {
        Model::Nonlinear => y
            .lin_comb(1.0 / delta, &Field::identity(y.grid()), -1.0 / delta)
            .with_role(Role::Displacement),
        Model::Linear => y.clone(),
    }
}

/// Runs one block of `ws.len()` steps starting from the last state of `record`.
pub fn run_block(
    record: &mut TrajectoryRecord,
    ws: &[Field],
    fs: &[Field],
    config: &NewtonConfig,
    interpolant: Option<&InterpolantOptions>,
) -> Result<()> {
    if ws.len() != fs.len() {
        return Err(Error::SizeMismatch {
            expected: ws.len(),
            got: fs.len(),
        });
    }
    for (w, f) in ws.iter().zip(fs) {
        record.advance(w.clone(), f.clone(), config, interpolant)?;
    }
    Ok(())
}

/// Source of the delayed velocities of a block.
pub enum DelaySource<'a> {
    /// First block: the initial velocity.
    Initial(&'a Field),
    /// Later blocks: the `N + 1` states of the previous block.
    Previous(&'a [Field]),
}

/// Delayed velocity data `w_1, …, w_N` of a block with `n` steps of length `tau`.
pub fn delayed_velocity_sequence(source: DelaySource<'_>, n: usize, tau: f64) -> Result<Vec<Field>> {
    match source {
        DelaySource::Initial(v0) => Ok(vec![v0.clone().with_role(Role::Velocity); n]),
        DelaySource::Previous(states) => {
            if states.len() != n + 1 {
                return Err(Error::SizeMismatch {
                    expected: n + 1,
                    got: states.len(),
                });
            }
            Ok(states
                .windows(2)
                .map(|p| p[1].lin_comb(1.0 / tau, &p[0], -1.0 / tau).with_role(Role::Velocity))
                .collect())
        }
    }
}

/// Time horizon of a two-timescale run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoScaleConfig {
    pub t_final: f64,
    pub h: f64,
    pub tau: f64,
}

impl TwoScaleConfig {
    /// `(M, N)`: number of blocks and steps per block.
    pub fn counts(&self) -> Result<(usize, usize)> {
        let m = integer_ratio(self.t_final, self.h)
            .ok_or_else(|| Error::Config(format!("T / h = {} is not an integer", self.t_final / self.h)))?;
        let n = integer_ratio(self.h, self.tau)
            .ok_or_else(|| Error::Config(format!("h / tau = {} is not an integer", self.h / self.tau)))?;
        Ok((m, n))
    }
}

/// A failed run together with everything computed before the failure.
#[derive(Debug)]
pub struct PartialRun {
    pub error: Error,
    /// Absent when the failure happened before the first state was set up.
    pub partial: Option<Box<TrajectoryRecord>>,
}

impl From<PartialRun> for Error {
    fn from(p: PartialRun) -> Self {
        p.error
    }
}

/// Interval-averaged force on `[t0, t1]`.
pub type ForceSampler<'a> = dyn Fn(f64, f64) -> Field + Sync + 'a;

/// Glues `T/h` blocks of `h/τ` steps; each block reads its delayed velocities
/// from the previous one (the first from `v0`).
#[allow(clippy::too_many_arguments)]
pub fn run_two_scale(
    model: Model,
    cfg: &TwoScaleConfig,
    y0: Field,
    v0: &Field,
    force: &ForceSampler<'_>,
    scales: ScaleParams,
    material: Material,
    config: &NewtonConfig,
    interpolant: Option<&InterpolantOptions>,
) -> std::result::Result<TrajectoryRecord, PartialRun> {
    let mut y0 = y0;
    match model {
        Model::Nonlinear => apply_dirichlet_identity(&mut y0),
        Model::Linear => apply_dirichlet_zero(&mut y0),
    }
    let mut v0 = v0.clone();
    apply_dirichlet_zero(&mut v0);
    let mut scales = scales;
    scales.h = cfg.h;
    scales.tau = cfg.tau;
    let mut record = match TrajectoryRecord::new(model, y0, scales, material) {
        Ok(r) => r,
        Err(error) => return Err(PartialRun { error, partial: None }),
    };
    let fail = |error: Error, record: TrajectoryRecord| PartialRun {
        error,
        partial: Some(Box::new(record)),
    };
    let (m, n) = match cfg.counts() {
        Ok(c) => c,
        Err(e) => return Err(fail(e, record)),
    };
    let tau = cfg.tau;
    for block in 0..m {
        let ws = if block == 0 {
            delayed_velocity_sequence(DelaySource::Initial(&v0), n, tau)
        } else {
            let start = (block - 1) * n;
            delayed_velocity_sequence(DelaySource::Previous(&record.states[start..=start + n]), n, tau)
        };
        let ws = match ws {
            Ok(ws) => ws,
            Err(e) => return Err(fail(e, record)),
        };
        let fs: Vec<Field> = (0..n)
            .map(|j| {
                let k = block * n + j;
                let mut f = force(k as f64 * tau, (k + 1) as f64 * tau).with_role(Role::Force);
                apply_dirichlet_zero(&mut f);
                f
            })
            .collect();
        if let Err(e) = run_block(&mut record, &ws, &fs, config, interpolant) {
            return Err(fail(e, record));
        }
    }
    Ok(record)
}
