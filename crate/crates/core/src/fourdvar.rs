//! Twin-experiment setup and the 4D-Var objective pieces shared by the ADMM
//! solver and the shooting baselines.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::model::{rollout, Model};
use crate::numerics::{dot, laplacian_apply, norm_sq, sor_poisson_solve, sub, Grid2D, RandomStream, SorParams, StateVector};

/// Observations at steps `0, q, 2q, ..., nq` plus the background state.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub observations: Vec<StateVector>,
    pub background: StateVector,
    /// Model steps per observation interval.
    pub q: usize,
    /// Observation interval in model time, `q · dt`.
    pub t_obs: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl ObservationSet {
    /// Number of observation intervals `n`; there are `n + 1` observations.
    pub fn intervals(&self) -> usize {
        self.observations.len() - 1
    }

    /// Total number of model steps `N = n q`.
    pub fn steps(&self) -> usize {
        self.intervals() * self.q
    }

    /// Observation recorded at model step `k`, if `k` is a multiple of `q`.
    pub fn at_step(&self, k: usize) -> Option<&StateVector> {
        if k % self.q == 0 {
            self.observations.get(k / self.q)
        } else {
            None
        }
    }
}

/// Rolls `model` forward `steps` steps from `u0_true`, records every `q`-th
/// state and perturbs it by `noise_std · ε`, `ε ~ N(0, 1)`.
///
/// The noise for observation 0 is drawn first, component by component. The
/// background defaults to the (possibly noisy) first observation.
pub fn generate_observations(
    model: &dyn Model,
    u0_true: &[f64],
    steps: usize,
    q: usize,
    noise_std: f64,
    seed: u64,
) -> Result<ObservationSet> {
    check_dim(model.dim(), u0_true.len())?;
    if q == 0 || steps % q != 0 {
        return Err(Error::Config(format!(
            "observation interval of {q} steps must divide the {steps} total steps"
        )));
    }
    if !(noise_std >= 0.0) {
        return Err(Error::Config(format!("noise_std must be >= 0, got {noise_std}")));
    }
    let truth = rollout(model, u0_true, steps)?;
    let mut rng = RandomStream::new(seed);
    let observations: Vec<StateVector> = truth
        .iter()
        .step_by(q)
        .map(|state| {
            let eps = rng.gaussian_draw(state.len());
            state.iter().zip(eps).map(|(x, e)| x + noise_std * e).collect()
        })
        .collect();
    Ok(ObservationSet {
        background: observations[0].clone(),
        observations,
        q,
        t_obs: q as f64 * model.dt(),
        noise_std,
        seed,
    })
}

/// Inner product weighting the data misfits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOperator {
    Euclidean,
    /// `⟨a, (−Δ_h)⁻¹ b⟩` on the interior nodes of `grid`.
    Energy { grid: Grid2D, sor: SorParams },
}

impl NormOperator {
    /// `M e`, the weight matrix applied to `e`.
    pub fn weight(&self, e: &[f64]) -> Result<StateVector> {
        match self {
            Self::Euclidean => Ok(e.to_vec()),
            Self::Energy { grid, sor } => {
                Ok(sor_poisson_solve(e, grid, sor)?.into_iter().map(|x| -x).collect())
            }
        }
    }

    /// `⟨e, M e⟩`
    pub fn squared(&self, e: &[f64]) -> Result<f64> {
        match self {
            Self::Euclidean => Ok(norm_sq(e)),
            Self::Energy { .. } => Ok(dot(e, &self.weight(e)?)),
        }
    }

    /// `M⁻¹ e`; `−Δ_h e` for the energy norm.
    pub fn weight_inverse(&self, e: &[f64]) -> StateVector {
        match self {
            Self::Euclidean => e.to_vec(),
            Self::Energy { grid, .. } => laplacian_apply(e, grid).into_iter().map(|x| -x).collect(),
        }
    }
}

/// Model, observations and weights of one 4D-Var problem.
#[derive(Clone)]
pub struct AssimilationProblem {
    pub model: Arc<dyn Model>,
    pub obs: ObservationSet,
    /// Background weight.
    pub alpha: f64,
    /// Uniform scaling of every sub-objective, used by ADMM only.
    pub mu: f64,
    pub norm: NormOperator,
}

impl std::fmt::Debug for AssimilationProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AssimilationProblem")
            .field("model", &self.model.name())
            .field("alpha", &self.alpha)
            .field("mu", &self.mu)
            .field("norm", &self.norm)
            .finish_non_exhaustive()
    }
}

impl AssimilationProblem {
    pub fn new(
        model: Arc<dyn Model>,
        obs: ObservationSet,
        alpha: f64,
        mu: f64,
        norm: NormOperator,
    ) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::Config(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(mu > 0.0) {
            return Err(Error::Config(format!("mu must be > 0, got {mu}")));
        }
        let dim = model.dim();
        for o in obs.observations.iter().chain(std::iter::once(&obs.background)) {
            check_dim(dim, o.len())?;
        }
        if obs.observations.is_empty() || obs.q == 0 {
            return Err(Error::Config("observation set is empty".into()));
        }
        Ok(Self { model, obs, alpha, mu, norm })
    }

    /// Total model steps `N`.
    pub fn steps(&self) -> usize {
        self.obs.steps()
    }

    pub fn t_obs(&self) -> f64 {
        self.obs.t_obs
    }

    /// Data weight `μ T_o` at observation steps, zero elsewhere.
    pub fn data_weight(&self, k: usize) -> f64 {
        if self.obs.at_step(k).is_some() {
            self.mu * self.t_obs()
        } else {
            0.0
        }
    }
}

/// `f_k(u_k)`, scaled by μ.
pub fn sub_objective(k: usize, u: &[f64], prob: &AssimilationProblem) -> Result<f64> {
    check_dim(prob.model.dim(), u.len())?;
    let Some(obs) = prob.obs.at_step(k) else {
        return Ok(0.0);
    };
    let mut f = 0.5 * prob.t_obs() * prob.norm.squared(&sub(u, obs))?;
    if k == 0 {
        f += 0.5 * prob.alpha * prob.norm.squared(&sub(u, &prob.obs.background))?;
    }
    Ok(prob.mu * f)
}

/// `Σ_k f_k(u_k)` over a trajectory of `N + 1` states.
pub fn total_objective(traj: &[StateVector], prob: &AssimilationProblem) -> Result<f64> {
    check_dim(prob.steps() + 1, traj.len())?;
    traj.iter().enumerate().map(|(k, u)| sub_objective(k, u, prob)).sum()
}

fn check_duals(traj: &[StateVector], duals: &[StateVector]) -> Result<()> {
    check_dim(traj.len().saturating_sub(1), duals.len())
}

/// Augmented Lagrangian in square-completed form,
/// `Σ f_k + (1/2s) Σ ‖u_{k+1} − H(u_k) − s λ_k‖² − (s/2) Σ ‖λ_k‖²`.
pub fn augmented_lagrangian(
    traj: &[StateVector],
    duals: &[StateVector],
    prob: &AssimilationProblem,
    s: f64,
) -> Result<f64> {
    check_duals(traj, duals)?;
    let mut l = total_objective(traj, prob)?;
    for (k, lam) in duals.iter().enumerate() {
        let h = prob.model.step(&traj[k])?;
        let r: Vec<f64> = (0..lam.len()).map(|i| traj[k + 1][i] - h[i] - s * lam[i]).collect();
        l += norm_sq(&r) / (2.0 * s) - 0.5 * s * norm_sq(lam);
    }
    Ok(l)
}

/// The same Lagrangian before completing the square,
/// `Σ f_k − Σ ⟨λ_k, u_{k+1} − H(u_k)⟩ + (1/2s) Σ ‖u_{k+1} − H(u_k)‖²`.
pub fn augmented_lagrangian_expanded(
    traj: &[StateVector],
    duals: &[StateVector],
    prob: &AssimilationProblem,
    s: f64,
) -> Result<f64> {
    check_duals(traj, duals)?;
    let mut l = total_objective(traj, prob)?;
    for (k, lam) in duals.iter().enumerate() {
        let c = sub(&traj[k + 1], &prob.model.step(&traj[k])?);
        l += norm_sq(&c) / (2.0 * s) - dot(lam, &c);
    }
    Ok(l)
}

/// `F(u₀) = T_o/2 Σ_k ‖H^{kq}(u₀) − û_k‖² + α/2 ‖u₀ − û₀ᵇ‖²`, without μ.
pub fn shooting_objective(u0: &[f64], prob: &AssimilationProblem) -> Result<f64> {
    check_dim(prob.model.dim(), u0.len())?;
    let q = prob.obs.q;
    let mut x = u0.to_vec();
    let mut misfit = 0.0;
    for (k, obs) in prob.obs.observations.iter().enumerate() {
        if k > 0 {
            for _ in 0..q {
                x = prob.model.step(&x)?;
            }
        }
        misfit += prob.norm.squared(&sub(&x, obs))?;
    }
    let background = prob.norm.squared(&sub(u0, &prob.obs.background))?;
    Ok(0.5 * prob.t_obs() * misfit + 0.5 * prob.alpha * background)
}

/// `sqrt(Σ_k ‖u_k − u_k^ref‖²)`
pub fn total_error(traj: &[StateVector], reference: &[StateVector]) -> Result<f64> {
    check_dim(reference.len(), traj.len())?;
    Ok(traj.iter().zip(reference).map(|(a, b)| norm_sq(&sub(a, b))).sum::<f64>().sqrt())
}

/// `Σ_k ‖u_{k+1} − H(u_k)‖²`
pub fn constraint_error(traj: &[StateVector], model: &dyn Model) -> Result<f64> {
    let mut total = 0.0;
    for w in traj.windows(2) {
        total += norm_sq(&sub(&w[1], &model.step(&w[0])?));
    }
    Ok(total)
}

/// Tensor grid of initial conditions for [`scan_landscape`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeBox {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub resolution: [usize; 3],
}

impl Default for LandscapeBox {
    fn default() -> Self {
        Self {
            lower: [-6.0, -6.0, 14.0],
            upper: [6.0, 6.0, 26.0],
            resolution: [49; 3],
        }
    }
}

impl LandscapeBox {
    /// Coordinate `idx` along `axis`; a single-point axis sits at `lower`.
    pub fn coordinate(&self, axis: usize, idx: usize) -> f64 {
        let r = self.resolution[axis];
        if r <= 1 {
            self.lower[axis]
        } else {
            self.lower[axis] + (self.upper[axis] - self.lower[axis]) * idx as f64 / (r - 1) as f64
        }
    }
}

/// Shooting objective sampled on a [`LandscapeBox`]; values are stored with
/// the x index outermost and z innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub bounds: LandscapeBox,
    pub values: Vec<f64>,
}

impl Landscape {
    pub fn value(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        let [_, ry, rz] = self.bounds.resolution;
        self.values[(ix * ry + iy) * rz + iz]
    }

    pub fn point(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        [
            self.bounds.coordinate(0, ix),
            self.bounds.coordinate(1, iy),
            self.bounds.coordinate(2, iz),
        ]
    }

    /// Grid indices and value of the smallest sample.
    pub fn argmin(&self) -> ([usize; 3], f64) {
        let [_, ry, rz] = self.bounds.resolution;
        let (flat, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
        ([flat / (ry * rz), (flat / rz) % ry, flat % rz], v)
    }

    /// CSV with header `x0,y0,z0,F`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x0,y0,z0,F")?;
        let [rx, ry, rz] = self.bounds.resolution;
        for ix in 0..rx {
            for iy in 0..ry {
                for iz in 0..rz {
                    let [x, y, z] = self.point(ix, iy, iz);
                    writeln!(out, "{x:.16e},{y:.16e},{z:.16e},{:.16e}", self.value(ix, iy, iz))?;
                }
            }
        }
        Ok(())
    }
}

/// Evaluates the shooting objective at every node of `bounds`, in parallel.
pub fn scan_landscape(prob: &AssimilationProblem, bounds: LandscapeBox) -> Result<Landscape> {
    if prob.model.dim() != 3 {
        return Err(Error::Config(format!(
            "landscape scans need a 3-dimensional state, model {} has {}",
            prob.model.name(),
            prob.model.dim()
        )));
    }
    if bounds.resolution.iter().any(|&r| r == 0) {
        return Err(Error::Config("landscape resolution must be positive".into()));
    }
    let [rx, ry, rz] = bounds.resolution;
    let values = (0..rx * ry * rz)
        .into_par_iter()
        .map(|flat| {
            let u0 = [
                bounds.coordinate(0, flat / (ry * rz)),
                bounds.coordinate(1, (flat / rz) % ry),
                bounds.coordinate(2, flat % rz),
            ];
            shooting_objective(&u0, prob)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Landscape { bounds, values })
}
