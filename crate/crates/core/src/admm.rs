//! Linearized multi-block ADMM with a proximal term.
//!
//! Each state `u_k` is its own block. A sweep replaces the coupling penalty
//! `‖u_{k+1} − H(u_k) − sλ_k‖²/2s` by its linearization at the current
//! iterate, adds `‖u_k − u_k^ℓ‖²/2η`, and minimizes every block in closed
//! form from the previous iterate only, so the blocks are independent. The
//! multipliers then take one ascent step.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::fourdvar::{total_error, total_objective, AssimilationProblem, NormOperator};
use crate::model::rollout;
use crate::numerics::{cg_spd_solve, norm_sq, sub, StateVector};

/// Order in which a sweep updates the primal blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Every block reads the previous iterate; blocks run in parallel.
    Jacobi,
    /// Experimental, not part of the method: block `k` reads the already
    /// updated `u_{k−1}`. Sequential.
    GaussSeidel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmParams {
    /// Penalty parameter; the dual step is `1/s`.
    pub s: f64,
    /// Proximal weight `1/η`.
    pub eta: f64,
    pub max_outer: usize,
    /// Stop early once the constraint error falls to this value.
    pub constraint_tol: Option<f64>,
    pub schedule: Schedule,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self {
            s: 2.0 / 3.0,
            eta: 0.1,
            max_outer: 600,
            constraint_tol: None,
            schedule: Schedule::Jacobi,
        }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) {
            return Err(Error::Config(format!("s must be > 0, got {}", self.s)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::Config(format!("eta must be > 0, got {}", self.eta)));
        }
        if let Some(tol) = self.constraint_tol {
            if !(tol >= 0.0) {
                return Err(Error::Config(format!("constraint_tol must be >= 0, got {tol}")));
            }
        }
        Ok(())
    }
}

/// How the primal trajectory is seeded.
#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    /// Model rollout from a guessed initial state.
    Rollout(StateVector),
    Zeros,
    Given(Vec<StateVector>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    /// `u_0, ..., u_N`
    pub primal: Vec<StateVector>,
    /// `λ_0, ..., λ_{N−1}`
    pub duals: Vec<StateVector>,
    pub outer_iter: usize,
    /// `H(u_0), ..., H(u_{N−1})` for the current primal.
    images: Vec<StateVector>,
}

impl AdmmState {
    pub fn images(&self) -> &[StateVector] {
        &self.images
    }

    /// `Σ_k ‖u_{k+1} − H(u_k)‖²` from the cached images.
    pub fn constraint_error(&self) -> f64 {
        self.images
            .iter()
            .zip(&self.primal[1..])
            .map(|(h, u)| norm_sq(&sub(u, h)))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// NaN when no reference trajectory was supplied.
    pub total_error: f64,
    pub constraint_error: f64,
    pub objective: f64,
}

fn images_of(primal: &[StateVector], prob: &AssimilationProblem) -> Result<Vec<StateVector>> {
    primal[..primal.len() - 1]
        .par_iter()
        .map(|u| prob.model.step(u))
        .collect()
}

/// Initial primal trajectory and zero multipliers.
pub fn init_state(prob: &AssimilationProblem, mode: &InitMode) -> Result<AdmmState> {
    let steps = prob.steps();
    let dim = prob.model.dim();
    if steps == 0 {
        return Err(Error::Config("the assimilation window must span at least one step".into()));
    }
    let primal = match mode {
        InitMode::Rollout(u0) => {
            check_dim(dim, u0.len())?;
            rollout(prob.model.as_ref(), u0, steps)?
        }
        InitMode::Zeros => vec![vec![0.0; dim]; steps + 1],
        InitMode::Given(traj) => {
            check_dim(steps + 1, traj.len())?;
            for u in traj {
                check_dim(dim, u.len())?;
            }
            traj.clone()
        }
    };
    let images = images_of(&primal, prob)?;
    Ok(AdmmState {
        primal,
        duals: vec![vec![0.0; dim]; steps],
        outer_iter: 0,
        images,
    })
}

/// Minimizer of `(w/2)‖u − target‖²_M + (c/2)‖u‖² − ⟨r, u⟩`.
///
/// For the energy norm the stationarity condition `w M (u − target) + c u = r`
/// is multiplied by `M⁻¹ = −Δ_h` and solved by CG.
fn block_minimizer(
    norm: &NormOperator,
    data: Option<(f64, &[f64])>,
    c: f64,
    r: &[f64],
) -> Result<StateVector> {
    match (norm, data) {
        (_, None) => Ok(r.iter().map(|x| x / c).collect()),
        (NormOperator::Euclidean, Some((w, target))) => {
            Ok(target.iter().zip(r).map(|(t, x)| (w * t + x) / (w + c)).collect())
        }
        (NormOperator::Energy { .. }, Some((w, target))) => {
            let ar = norm.weight_inverse(r);
            let rhs: Vec<f64> = target.iter().zip(&ar).map(|(t, x)| w * t + x).collect();
            cg_spd_solve(
                |x| {
                    let ax = norm.weight_inverse(x);
                    x.iter().zip(ax).map(|(xi, axi)| w * xi + c * axi).collect()
                },
                &rhs,
                1e-13,
            )
        }
    }
}

/// `g_k = ∇H(u_k)ᵀ (u_{k+1} − H(u_k) − s λ_k)`
fn linearized_pull(k: usize, state: &AdmmState, prob: &AssimilationProblem, s: f64) -> Result<StateVector> {
    let h = &state.images[k];
    let lam = &state.duals[k];
    let resid: Vec<f64> = (0..h.len())
        .map(|i| state.primal[k + 1][i] - h[i] - s * lam[i])
        .collect();
    prob.model.adjoint(&state.primal[k], &resid)
}

/// `a_k = H(u_{k−1}) + s λ_{k−1}`
fn forward_pull(k: usize, state: &AdmmState, s: f64) -> StateVector {
    state.images[k - 1]
        .iter()
        .zip(&state.duals[k - 1])
        .map(|(h, l)| h + s * l)
        .collect()
}

/// Closed-form update of `u_0`.
pub fn primal_update_first(state: &AdmmState, prob: &AssimilationProblem, params: &AdmmParams) -> Result<StateVector> {
    let (s, eta) = (params.s, params.eta);
    let g = linearized_pull(0, state, prob, s)?;
    let u = &state.primal[0];
    let r: Vec<f64> = (0..u.len()).map(|i| u[i] / eta + g[i] / s).collect();
    let to = prob.t_obs();
    let w = prob.mu * (to + prob.alpha);
    // combined pull towards the first observation and the background
    let target: Vec<f64> = prob.obs.observations[0]
        .iter()
        .zip(&prob.obs.background)
        .map(|(o, b)| (to * o + prob.alpha * b) / (to + prob.alpha))
        .collect();
    let data = if w > 0.0 { Some((w, target.as_slice())) } else { None };
    block_minimizer(&prob.norm, data, 1.0 / eta, &r)
}

/// Closed-form update of `u_k`, `1 ≤ k ≤ N − 1`.
pub fn primal_update_interior(
    k: usize,
    state: &AdmmState,
    prob: &AssimilationProblem,
    params: &AdmmParams,
) -> Result<StateVector> {
    let steps = prob.steps();
    if k == 0 || k >= steps {
        return Err(Error::Config(format!("interior block index {k} outside 1..{steps}")));
    }
    let (s, eta) = (params.s, params.eta);
    let a = forward_pull(k, state, s);
    let g = linearized_pull(k, state, prob, s)?;
    let u = &state.primal[k];
    let r: Vec<f64> = (0..u.len()).map(|i| (a[i] + g[i]) / s + u[i] / eta).collect();
    let data = prob.obs.at_step(k).map(|o| (prob.data_weight(k), o.as_slice()));
    block_minimizer(&prob.norm, data, 1.0 / s + 1.0 / eta, &r)
}

/// Closed-form update of `u_N`; there is no later state to pull on it.
pub fn primal_update_last(state: &AdmmState, prob: &AssimilationProblem, params: &AdmmParams) -> Result<StateVector> {
    let steps = prob.steps();
    let (s, eta) = (params.s, params.eta);
    let a = forward_pull(steps, state, s);
    let u = &state.primal[steps];
    let r: Vec<f64> = (0..u.len()).map(|i| a[i] / s + u[i] / eta).collect();
    let data = prob.obs.at_step(steps).map(|o| (prob.data_weight(steps), o.as_slice()));
    block_minimizer(&prob.norm, data, 1.0 / s + 1.0 / eta, &r)
}

fn primal_update(k: usize, state: &AdmmState, prob: &AssimilationProblem, params: &AdmmParams) -> Result<StateVector> {
    if k == 0 {
        primal_update_first(state, prob, params)
    } else if k == prob.steps() {
        primal_update_last(state, prob, params)
    } else {
        primal_update_interior(k, state, prob, params)
    }
}

/// `λ_k ← λ_k − (u_{k+1} − H(u_k)) / s` for the primal and images in `state`.
pub fn dual_update(state: &AdmmState, s: f64) -> Vec<StateVector> {
    state
        .duals
        .iter()
        .enumerate()
        .map(|(k, lam)| {
            (0..lam.len())
                .map(|i| lam[i] - (state.primal[k + 1][i] - state.images[k][i]) / s)
                .collect()
        })
        .collect()
}

/// One full sweep: all primal blocks, then all multipliers.
pub fn outer_iteration(state: &AdmmState, prob: &AssimilationProblem, params: &AdmmParams) -> Result<AdmmState> {
    let steps = prob.steps();
    let primal = match params.schedule {
        Schedule::Jacobi => (0..=steps)
            .into_par_iter()
            .map(|k| primal_update(k, state, prob, params))
            .collect::<Result<Vec<_>>>()?,
        Schedule::GaussSeidel => gauss_seidel_primal(state, prob, params)?,
    };
    let images = images_of(&primal, prob)?;
    let mut next = AdmmState {
        primal,
        duals: Vec::new(),
        outer_iter: state.outer_iter + 1,
        images,
    };
    next.duals = {
        let with_old_duals = AdmmState { duals: state.duals.clone(), ..next.clone() };
        dual_update(&with_old_duals, params.s)
    };
    Ok(next)
}

fn gauss_seidel_primal(state: &AdmmState, prob: &AssimilationProblem, params: &AdmmParams) -> Result<Vec<StateVector>> {
    let mut work = state.clone();
    for k in 0..=prob.steps() {
        let u = primal_update(k, &work, prob, params)?;
        if k < prob.steps() {
            // the next block's forward pull sees the fresh state
            work.images[k] = prob.model.step(&u)?;
        }
        work.primal[k] = u;
    }
    Ok(work.primal)
}

fn record(state: &AdmmState, prob: &AssimilationProblem, reference: Option<&[StateVector]>) -> Result<IterationRecord> {
    let constraint = state.constraint_error();
    if !constraint.is_finite() {
        return Err(Error::NonFinite("admm constraint error"));
    }
    Ok(IterationRecord {
        iter: state.outer_iter,
        total_error: match reference {
            Some(r) => total_error(&state.primal, r)?,
            None => f64::NAN,
        },
        constraint_error: constraint,
        objective: total_objective(&state.primal, prob)?,
    })
}

/// Runs sweeps until the budget or the constraint tolerance is reached,
/// handing every record (the initial one included) to `on_record` as soon as
/// it exists.
pub fn solve_with<F>(
    prob: &AssimilationProblem,
    params: &AdmmParams,
    init: &InitMode,
    reference: Option<&[StateVector]>,
    mut on_record: F,
) -> Result<AdmmState>
where
    F: FnMut(&IterationRecord),
{
    params.validate()?;
    if let Some(r) = reference {
        check_dim(prob.steps() + 1, r.len())?;
    }
    let mut state = init_state(prob, init)?;
    let rec = record(&state, prob, reference)?;
    on_record(&rec);
    let mut constraint = rec.constraint_error;
    for _ in 0..params.max_outer {
        if params.constraint_tol.is_some_and(|tol| constraint <= tol) {
            break;
        }
        state = outer_iteration(&state, prob, params)?;
        let rec = record(&state, prob, reference)?;
        on_record(&rec);
        constraint = rec.constraint_error;
    }
    Ok(state)
}

/// [`solve_with`] collecting the history.
pub fn solve(
    prob: &AssimilationProblem,
    params: &AdmmParams,
    init: &InitMode,
    reference: Option<&[StateVector]>,
) -> Result<(AdmmState, Vec<IterationRecord>)> {
    let mut history = Vec::with_capacity(params.max_outer + 1);
    let state = solve_with(prob, params, init, reference, |r| history.push(*r))?;
    Ok((state, history))
}

pub const HISTORY_HEADER: &str = "iter,total_error,constraint_error,objective";

pub fn write_history_row<W: Write>(mut out: W, r: &IterationRecord) -> std::io::Result<()> {
    writeln!(
        out,
        "{},{:.16e},{:.16e},{:.16e}",
        r.iter, r.total_error, r.constraint_error, r.objective
    )
}

/// History CSV with header `iter,total_error,constraint_error,objective`.
pub fn write_history_csv<W: Write>(mut out: W, history: &[IterationRecord]) -> std::io::Result<()> {
    writeln!(out, "{HISTORY_HEADER}")?;
    for r in history {
        write_history_row(&mut out, r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourdvar::{generate_observations, sub_objective, ObservationSet};
    use crate::lorenz::Lorenz63;
    use crate::model::Model;
    use crate::numerics::{dot, norm, RandomStream};
    use crate::vorticity::{Vorticity, VorticityConfig};
    use proptest::prelude::*;
    use std::sync::Arc;

    /// `H(u) = c u` on scalars.
    struct Scale(f64);

    impl Model for Scale {
        fn name(&self) -> &str {
            "scale"
        }
        fn dim(&self) -> usize {
            1
        }
        fn dt(&self) -> f64 {
            1.0
        }
        fn step(&self, u: &[f64]) -> Result<StateVector> {
            Ok(vec![self.0 * u[0]])
        }
        fn tangent(&self, _: &[f64], v: &[f64]) -> Result<StateVector> {
            Ok(vec![self.0 * v[0]])
        }
        fn adjoint(&self, _: &[f64], w: &[f64]) -> Result<StateVector> {
            Ok(vec![self.0 * w[0]])
        }
    }

    fn scalar_problem(obs: Vec<f64>, q: usize, t_obs: f64, alpha: f64, mu: f64) -> AssimilationProblem {
        let observations: Vec<StateVector> = obs.into_iter().map(|x| vec![x]).collect();
        let set = ObservationSet {
            background: observations[0].clone(),
            observations,
            q,
            t_obs,
            noise_std: 0.0,
            seed: 0,
        };
        AssimilationProblem::new(Arc::new(Scale(1.0)), set, alpha, mu, NormOperator::Euclidean).unwrap()
    }

    fn given(prob: &AssimilationProblem, traj: &[f64], duals: &[f64]) -> AdmmState {
        let mut st = init_state(prob, &InitMode::Given(traj.iter().map(|&x| vec![x]).collect())).unwrap();
        st.duals = duals.iter().map(|&x| vec![x]).collect();
        st
    }

    fn unit(s: f64, eta: f64) -> AdmmParams {
        AdmmParams { s, eta, ..AdmmParams::default() }
    }

    fn lorenz_problem(noise: f64, mu: f64) -> (AssimilationProblem, Vec<StateVector>) {
        let model: Arc<dyn Model> = Arc::new(Lorenz63::default());
        let u0 = [-0.5, 0.5, 20.5];
        let obs = generate_observations(model.as_ref(), &u0, 300, 30, noise, 11).unwrap();
        let truth = rollout(model.as_ref(), &u0, 300).unwrap();
        (AssimilationProblem::new(model, obs, 0.1, mu, NormOperator::Euclidean).unwrap(), truth)
    }

    #[test]
    fn first_block_hand_value() {
        // μ = T_o = η = s = 1, α = 0, û₀ = 0, u₀ = 2, g₀ = u₁ − u₀ = 1
        let prob = scalar_problem(vec![0.0, 0.0], 1, 1.0, 0.0, 1.0);
        let st = given(&prob, &[2.0, 3.0], &[0.0]);
        let u = primal_update_first(&st, &prob, &unit(1.0, 1.0)).unwrap();
        assert!((u[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn interior_block_hand_value() {
        // k = 1 is not observed with q = 2; a₁ = 1, u₁ = 1, g₁ = 0
        let prob = scalar_problem(vec![0.0, 0.0], 2, 1.0, 0.0, 1.0);
        let st = given(&prob, &[1.0, 1.0, 1.0], &[0.0, 0.0]);
        let u = primal_update_interior(1, &st, &prob, &unit(1.0, 1.0)).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-15);
        assert!(primal_update_interior(0, &st, &prob, &unit(1.0, 1.0)).is_err());
    }

    #[test]
    fn last_block_hand_value() {
        // w = 1, û = 3, a = 1, u^ℓ = 2, s = η = 1
        let prob = scalar_problem(vec![0.0, 3.0], 1, 1.0, 0.0, 1.0);
        let st = given(&prob, &[1.0, 2.0], &[0.0]);
        let u = primal_update_last(&st, &prob, &unit(1.0, 1.0)).unwrap();
        assert!((u[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn dual_hand_value_and_feasible_fixed_point() {
        let prob = scalar_problem(vec![0.0, 0.0], 1, 1.0, 0.0, 1.0);
        let st = given(&prob, &[1.0, 3.0], &[0.0]);
        assert_eq!(dual_update(&st, 2.0), vec![vec![-1.0]]);
        let feasible = given(&prob, &[2.0, 2.0], &[0.7]);
        let once = dual_update(&feasible, 2.0);
        assert_eq!(once, vec![vec![0.7]]);
        let twice = dual_update(&AdmmState { duals: once.clone(), ..feasible }, 2.0);
        assert_eq!(once, twice);
    }

    #[test]
    fn zeros_and_rollout_initialisation() {
        let (prob, truth) = lorenz_problem(0.0, 100.0);
        let z = init_state(&prob, &InitMode::Zeros).unwrap();
        assert!(z.primal.iter().chain(&z.duals).flatten().all(|&x| x == 0.0));
        assert_eq!(z.primal.len(), 301);
        assert_eq!(z.duals.len(), 300);
        let r = init_state(&prob, &InitMode::Rollout(vec![-0.5, 0.5, 20.5])).unwrap();
        assert_eq!(r.primal, truth);
        assert_eq!(r.constraint_error(), 0.0);
        let guess = init_state(&prob, &InitMode::Rollout(vec![-3.0, -3.0, 10.0])).unwrap();
        assert_eq!(guess.primal, rollout(prob.model.as_ref(), &[-3.0, -3.0, 10.0], 300).unwrap());
    }

    #[test]
    fn optimal_feasible_state_is_a_fixed_point() {
        let (prob, truth) = lorenz_problem(0.0, 100.0);
        let st = init_state(&prob, &InitMode::Given(truth.clone())).unwrap();
        let next = outer_iteration(&st, &prob, &AdmmParams::default()).unwrap();
        for (a, b) in next.primal.iter().zip(&truth) {
            assert!(norm(&sub(a, b)) <= 1e-10);
        }
        assert!(next.duals.iter().all(|l| norm(l) <= 1e-10));
    }

    /// Value of the linearized, regularized block objective minimized by
    /// the primal update for block `k`.
    fn block_objective(k: usize, u: &[f64], st: &AdmmState, prob: &AssimilationProblem, p: &AdmmParams) -> f64 {
        let n = prob.steps();
        let mut phi = sub_objective(k, u, prob).unwrap() + norm_sq(&sub(u, &st.primal[k])) / (2.0 * p.eta);
        if k > 0 {
            let a = forward_pull(k, st, p.s);
            phi += norm_sq(&sub(u, &a)) / (2.0 * p.s);
        }
        if k < n {
            let g = linearized_pull(k, st, prob, p.s).unwrap();
            phi -= dot(&g, u) / p.s;
        }
        phi
    }

    #[test]
    fn every_block_is_stationary_for_its_subproblem() {
        let (prob, _) = lorenz_problem(1.0, 100.0);
        let p = AdmmParams::default();
        let mut st = init_state(&prob, &InitMode::Rollout(vec![-3.0, -3.0, 10.0])).unwrap();
        let mut rng = RandomStream::new(80);
        st.duals = (0..300).map(|_| rng.gaussian_draw(3)).collect();
        for k in [0, 1, 29, 30, 31, 150, 299, 300] {
            let u = primal_update(k, &st, &prob, &p).unwrap();
            let h = 1e-5;
            let mut grad = [0.0; 3];
            for i in 0..3 {
                let mut up = u.clone();
                let mut um = u.clone();
                up[i] += h;
                um[i] -= h;
                grad[i] = (block_objective(k, &up, &st, &prob, &p) - block_objective(k, &um, &st, &prob, &p)) / (2.0 * h);
            }
            let scale = 1.0 + norm(&u) * (prob.mu * prob.t_obs() + 1.0 / p.s + 1.0 / p.eta);
            assert!(norm(&grad) <= 1e-8 * scale, "block {k}: {grad:?}");
        }
    }

    #[test]
    fn energy_norm_block_is_stationary() {
        let cfg = VorticityConfig::for_grid(crate::numerics::Grid2D::new(8, 0.2, 0.2).unwrap());
        let model: Arc<dyn Model> = Arc::new(Vorticity::new(cfg).unwrap());
        let vort = Vorticity::new(cfg).unwrap();
        let u0 = vort.initial_state(4);
        let obs = generate_observations(model.as_ref(), &u0, 6, 3, 0.5, 2).unwrap();
        let norm_op = NormOperator::Energy { grid: cfg.grid, sor: cfg.sor };
        let prob = AssimilationProblem::new(model, obs, 0.1, 20.0, norm_op).unwrap();
        let p = AdmmParams::default();
        let mut st = init_state(&prob, &InitMode::Zeros).unwrap();
        let mut rng = RandomStream::new(81);
        st.primal = (0..=6).map(|_| rng.gaussian_draw(49)).collect();
        st.images = images_of(&st.primal, &prob).unwrap();
        for k in [0, 3, 6] {
            let u = primal_update(k, &st, &prob, &p).unwrap();
            // gradient of the block objective, assembled analytically
            let w = if k == 0 { prob.mu * (prob.t_obs() + prob.alpha) } else { prob.data_weight(k) };
            let obs = &prob.obs.observations[k / 3];
            let target: Vec<f64> = if k == 0 {
                obs.iter().zip(&prob.obs.background).map(|(o, b)| (prob.t_obs() * o + prob.alpha * b) / (prob.t_obs() + prob.alpha)).collect()
            } else {
                obs.clone()
            };
            let mres = norm_op.weight(&sub(&u, &target)).unwrap();
            let mut grad: Vec<f64> = (0..49).map(|i| w * mres[i] + (u[i] - st.primal[k][i]) / p.eta).collect();
            if k > 0 {
                let a = forward_pull(k, &st, p.s);
                for i in 0..49 {
                    grad[i] += (u[i] - a[i]) / p.s;
                }
            }
            if k < 6 {
                let g = linearized_pull(k, &st, &prob, p.s).unwrap();
                for i in 0..49 {
                    grad[i] -= g[i] / p.s;
                }
            }
            assert!(norm(&grad) <= 1e-8 * (1.0 + norm(&u) / p.eta), "block {k}: {}", norm(&grad));
        }
    }

    #[test]
    fn jacobi_sweep_ignores_block_order() {
        let (prob, _) = lorenz_problem(1.0, 100.0);
        let p = AdmmParams::default();
        let st = init_state(&prob, &InitMode::Rollout(vec![-3.0, -3.0, 10.0])).unwrap();
        let st = outer_iteration(&st, &prob, &p).unwrap();
        let parallel = outer_iteration(&st, &prob, &p).unwrap();
        let mut reversed: Vec<(usize, StateVector)> =
            (0..=300).rev().map(|k| (k, primal_update(k, &st, &prob, &p).unwrap())).collect();
        reversed.sort_by_key(|(k, _)| *k);
        for (k, u) in reversed {
            assert_eq!(u, parallel.primal[k]);
        }
    }

    #[test]
    fn dual_update_closes_the_feasibility_link() {
        let (prob, _) = lorenz_problem(1.0, 100.0);
        let p = AdmmParams::default();
        let st = init_state(&prob, &InitMode::Rollout(vec![-3.0, -3.0, 10.0])).unwrap();
        let next = outer_iteration(&st, &prob, &p).unwrap();
        for k in 0..300 {
            for i in 0..3 {
                let link = p.s * next.duals[k][i] - p.s * st.duals[k][i]
                    + (next.primal[k + 1][i] - next.images[k][i]);
                assert!(link.abs() <= 1e-12 * (1.0 + next.primal[k + 1][i].abs()));
            }
        }
    }

    #[test]
    fn sweep_matches_hand_rolled_scalar_updates() {
        // two steps, H(u) = u, observations at every step
        let prob = scalar_problem(vec![1.0, 2.0, 4.0], 1, 0.5, 0.2, 3.0);
        let p = AdmmParams { s: 0.5, eta: 0.25, ..AdmmParams::default() };
        let st = given(&prob, &[0.3, -0.1, 0.8], &[0.2, -0.4]);
        let next = outer_iteration(&st, &prob, &p).unwrap();
        let (mu, to, al, s, eta) = (3.0, 0.5, 0.2, 0.5, 0.25);
        let (u0, u1, u2, l0, l1) = (0.3, -0.1, 0.8, 0.2, -0.4);
        let g0 = u1 - u0 - s * l0;
        let g1 = u2 - u1 - s * l1;
        let n0 = (mu * to * 1.0 + mu * al * 1.0 + u0 / eta + g0 / s) / (mu * to + mu * al + 1.0 / eta);
        let n1 = (mu * to * 2.0 + (u0 + s * l0) / s + u1 / eta + g1 / s) / (mu * to + 1.0 / s + 1.0 / eta);
        let n2 = (mu * to * 4.0 + (u1 + s * l1) / s + u2 / eta) / (mu * to + 1.0 / s + 1.0 / eta);
        let expect = [n0, n1, n2];
        for k in 0..3 {
            assert!((next.primal[k][0] - expect[k]).abs() <= 1e-14);
        }
        assert!((next.duals[0][0] - (l0 - (n1 - n0) / s)).abs() <= 1e-14);
        assert!((next.duals[1][0] - (l1 - (n2 - n1) / s)).abs() <= 1e-14);
    }

    #[test]
    fn converges_to_kkt_point_of_a_linear_quadratic_problem() {
        // minimise μ[T_o/2 (u₀−a)² + α/2 (u₀−b)² + T_o/2 (u₁−c)²] s.t. u₁ = u₀
        let (a, c, to, al) = (1.0, 3.0, 1.0, 0.5);
        let prob = scalar_problem(vec![a, c], 1, to, al, 1.0);
        let b = a; // background is the first observation
        let exact = (to * a + al * b + to * c) / (2.0 * to + al);
        let p = AdmmParams { max_outer: 2000, ..AdmmParams::default() };
        let (state, _) = solve(&prob, &p, &InitMode::Zeros, None).unwrap();
        assert!((state.primal[0][0] - exact).abs() <= 1e-8);
        assert!((state.primal[1][0] - exact).abs() <= 1e-8);
    }

    #[test]
    fn zero_budget_records_initial_metrics_only() {
        let (prob, truth) = lorenz_problem(0.0, 100.0);
        let p = AdmmParams { max_outer: 0, ..AdmmParams::default() };
        let init = InitMode::Rollout(vec![-3.0, -3.0, 10.0]);
        let (state, hist) = solve(&prob, &p, &init, Some(&truth)).unwrap();
        assert_eq!(hist.len(), 1);
        assert_eq!(hist[0].iter, 0);
        assert_eq!(hist[0].constraint_error, 0.0);
        assert!(hist[0].total_error > 0.0);
        assert_eq!(state.outer_iter, 0);
    }

    #[test]
    fn constraint_tolerance_stops_early() {
        let (prob, _) = lorenz_problem(0.0, 100.0);
        let p = AdmmParams { max_outer: 50, constraint_tol: Some(f64::INFINITY), ..AdmmParams::default() };
        let (_, hist) = solve(&prob, &p, &InitMode::Zeros, None).unwrap();
        assert_eq!(hist.len(), 1);
        assert!(hist[0].total_error.is_nan());
    }

    #[test]
    fn lorenz_constraint_error_falls() {
        let (prob, truth) = lorenz_problem(0.0, 100.0);
        let p = AdmmParams { max_outer: 100, ..AdmmParams::default() };
        let init = InitMode::Rollout(vec![-3.0, -3.0, 10.0]);
        let (_, hist) = solve(&prob, &p, &init, Some(&truth)).unwrap();
        assert!(hist[100].constraint_error < hist[1].constraint_error);
        assert!(hist[100].total_error < hist[0].total_error);
        assert!(hist.windows(2).all(|w| w[1].iter == w[0].iter + 1));
    }

    #[test]
    fn gauss_seidel_variant_runs() {
        let (prob, _) = lorenz_problem(0.0, 100.0);
        let p = AdmmParams { max_outer: 20, schedule: Schedule::GaussSeidel, ..AdmmParams::default() };
        let (state, hist) = solve(&prob, &p, &InitMode::Rollout(vec![-3.0, -3.0, 10.0]), None).unwrap();
        assert_eq!(hist.len(), 21);
        assert!(state.primal.iter().flatten().all(|x| x.is_finite()));
    }

    #[test]
    fn smaller_eta_moves_iterates_less() {
        let (prob, _) = lorenz_problem(1.0, 100.0);
        let st = init_state(&prob, &InitMode::Rollout(vec![-3.0, -3.0, 10.0])).unwrap();
        let step_len = |eta: f64| {
            let p = AdmmParams { eta, ..AdmmParams::default() };
            let next = outer_iteration(&st, &prob, &p).unwrap();
            next.primal.iter().zip(&st.primal).map(|(a, b)| norm_sq(&sub(a, b))).sum::<f64>().sqrt()
        };
        let (big, small, tiny) = (step_len(0.1), step_len(1e-4), step_len(1e-5));
        assert!(tiny < small && small < big);
        // linear in eta for small eta, slope about 2.24e3 here
        assert!(small <= 2.5e3 * 1e-4, "{small}");
        assert!((small / tiny - 10.0).abs() < 0.5, "{}", small / tiny);
    }

    #[test]
    fn history_csv_layout() {
        let mut buf = Vec::new();
        let r = IterationRecord { iter: 3, total_error: 0.5, constraint_error: 1e-3, objective: 2.0 };
        write_history_csv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), HISTORY_HEADER);
        assert_eq!(text.lines().nth(1).unwrap(), "3,5.0000000000000000e-1,1.0000000000000000e-3,2.0000000000000000e0");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn unobserved_closed_form_is_the_generic_formula_with_zero_weight(
            u0 in -5.0f64..5.0, u1 in -5.0f64..5.0, u2 in -5.0f64..5.0,
            l0 in -2.0f64..2.0, l1 in -2.0f64..2.0,
            s in 0.1f64..2.0, eta in 0.05f64..1.0,
        ) {
            let prob = scalar_problem(vec![0.0, 0.0], 2, 1.0, 0.0, 1.0);
            let st = given(&prob, &[u0, u1, u2], &[l0, l1]);
            let p = unit(s, eta);
            let got = primal_update_interior(1, &st, &prob, &p).unwrap()[0];
            let a = u0 + s * l0;
            let g = u2 - u1 - s * l1;
            let w = 0.0;
            let generic = (w * 0.0 + a / s + u1 / eta + g / s) / (w + 1.0 / s + 1.0 / eta);
            prop_assert!((got - generic).abs() <= 1e-12 * (1.0 + generic.abs()));
        }
    }
}
