//! First-order shooting baselines: minimize `F(u₀)` directly with adjoint
//! gradients, by gradient descent or nonlinear conjugate gradients.

use std::io::Write;

use crate::error::{check_dim, Error, Result};
use crate::fourdvar::{shooting_objective, AssimilationProblem};
use crate::numerics::{axpy, dot, norm, sub, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMethod {
    GradientDescent,
    FletcherReeves,
    /// Polak–Ribière with `β = max(β, 0)`.
    PolakRibiere,
}

impl BaselineMethod {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "gd" => Some(Self::GradientDescent),
            "cg-fr" => Some(Self::FletcherReeves),
            "cg-pr" => Some(Self::PolakRibiere),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::GradientDescent => "gd",
            Self::FletcherReeves => "cg-fr",
            Self::PolakRibiere => "cg-pr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    pub max_iters: usize,
    /// Largest trial step of the line search.
    pub initial_step: f64,
    /// Backtracking factor in `(0, 1)`.
    pub shrink: f64,
    /// Sufficient-decrease constant in `(0, 0.5]`.
    pub c1: f64,
    pub grad_tol: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            method: BaselineMethod::PolakRibiere,
            max_iters: 500,
            initial_step: 1.0,
            shrink: 0.5,
            c1: 1e-4,
            grad_tol: 1e-5,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Config(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        if !(self.c1 > 0.0 && self.c1 <= 0.5) {
            return Err(Error::Config(format!("c1 must lie in (0, 0.5], got {}", self.c1)));
        }
        if !(self.initial_step > 0.0) || !(self.grad_tol >= 0.0) {
            return Err(Error::Config("initial_step must be > 0 and grad_tol >= 0".into()));
        }
        Ok(())
    }
}

/// One row of the baseline history; `step_size` is 0 for the initial point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineRecord {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub step_size: f64,
}

pub const HISTORY_HEADER: &str = "iter,objective,grad_norm,step_size";

pub fn write_history_csv<W: Write>(mut out: W, history: &[BaselineRecord]) -> std::io::Result<()> {
    writeln!(out, "{HISTORY_HEADER}")?;
    for r in history {
        writeln!(out, "{},{:.16e},{:.16e},{:.16e}", r.iter, r.objective, r.grad_norm, r.step_size)?;
    }
    Ok(())
}

/// `∇F(u₀)` by one forward rollout and a reverse adjoint sweep.
pub fn shooting_gradient(u0: &[f64], prob: &AssimilationProblem) -> Result<StateVector> {
    let model = prob.model.as_ref();
    check_dim(model.dim(), u0.len())?;
    let steps = prob.steps();
    let q = prob.obs.q;
    let t_obs = prob.t_obs();

    let mut states = Vec::with_capacity(steps + 1);
    states.push(u0.to_vec());
    for k in 0..steps {
        let next = model.step(&states[k])?;
        states.push(next);
    }

    let mut lambda = vec![0.0; u0.len()];
    for t in (1..=steps).rev() {
        if t % q == 0 {
            let misfit = prob.norm.weight(&sub(&states[t], &prob.obs.observations[t / q]))?;
            axpy(t_obs, &misfit, &mut lambda);
        }
        lambda = model.adjoint(&states[t - 1], &lambda)?;
    }
    axpy(t_obs, &prob.norm.weight(&sub(u0, &prob.obs.observations[0]))?, &mut lambda);
    axpy(prob.alpha, &prob.norm.weight(&sub(u0, &prob.obs.background))?, &mut lambda);
    Ok(lambda)
}

const MAX_HALVINGS: usize = 60;

struct Accepted {
    point: StateVector,
    objective: f64,
    step: f64,
}

/// Backtracking search for `F(x + t d) ≤ F(x) + c1 t ⟨g, d⟩`, starting at
/// `t0`. Once a step is accepted, the minimizer of the quadratic through
/// `F(x)`, the slope and `F(x + t d)` is tried as well and kept if it is
/// both sufficient and lower; this makes the search exact on quadratics.
fn line_search(
    x: &[f64],
    fx: f64,
    slope: f64,
    d: &[f64],
    t0: f64,
    prob: &AssimilationProblem,
    cfg: &BaselineConfig,
    iteration: usize,
) -> Result<Accepted> {
    let trial = |t: f64| -> Result<(StateVector, f64)> {
        let mut p = x.to_vec();
        axpy(t, d, &mut p);
        let f = shooting_objective(&p, prob)?;
        Ok((p, f))
    };
    let sufficient = |t: f64, f: f64| f.is_finite() && f <= fx + cfg.c1 * t * slope;

    let mut t = t0;
    for _ in 0..=MAX_HALVINGS {
        let (p, f) = trial(t)?;
        if sufficient(t, f) {
            let mut best = Accepted { point: p, objective: f, step: t };
            let curvature = f - fx - slope * t;
            if curvature > 0.0 {
                let tq = -slope * t * t / (2.0 * curvature);
                if tq.is_finite() && tq > 0.0 && tq != t {
                    let (pq, fq) = trial(tq)?;
                    if sufficient(tq, fq) && fq < f {
                        best = Accepted { point: pq, objective: fq, step: tq };
                    }
                }
            }
            return Ok(best);
        }
        t *= cfg.shrink;
    }
    Err(Error::Stall {
        iteration,
        objective: fx,
        last_iterate: x.to_vec(),
    })
}

/// Steepest descent with Armijo backtracking.
pub fn gradient_descent(
    u0_init: &[f64],
    prob: &AssimilationProblem,
    cfg: &BaselineConfig,
) -> Result<(StateVector, Vec<BaselineRecord>)> {
    let cfg = BaselineConfig { method: BaselineMethod::GradientDescent, ..*cfg };
    descend(u0_init, prob, &cfg)
}

/// Nonlinear conjugate gradients (Fletcher–Reeves or Polak–Ribière) with the
/// same line search, restarting along `−g` whenever the direction is not a
/// descent direction.
pub fn nonlinear_cg(
    u0_init: &[f64],
    prob: &AssimilationProblem,
    cfg: &BaselineConfig,
) -> Result<(StateVector, Vec<BaselineRecord>)> {
    if cfg.method == BaselineMethod::GradientDescent {
        return Err(Error::Config("nonlinear_cg needs cg-fr or cg-pr".into()));
    }
    descend(u0_init, prob, cfg)
}

/// Dispatches on `cfg.method`.
pub fn run_baseline(
    u0_init: &[f64],
    prob: &AssimilationProblem,
    cfg: &BaselineConfig,
) -> Result<(StateVector, Vec<BaselineRecord>)> {
    descend(u0_init, prob, cfg)
}

fn descend(
    u0_init: &[f64],
    prob: &AssimilationProblem,
    cfg: &BaselineConfig,
) -> Result<(StateVector, Vec<BaselineRecord>)> {
    cfg.validate()?;
    check_dim(prob.model.dim(), u0_init.len())?;
    let mut x = u0_init.to_vec();
    let mut fx = shooting_objective(&x, prob)?;
    let mut g = shooting_gradient(&x, prob)?;
    let mut history = vec![BaselineRecord { iter: 0, objective: fx, grad_norm: norm(&g), step_size: 0.0 }];
    let mut d: StateVector = g.iter().map(|v| -v).collect();
    let mut t0 = cfg.initial_step;

    for iter in 1..=cfg.max_iters {
        if norm(&g) <= cfg.grad_tol {
            break;
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let acc = line_search(&x, fx, slope, &d, t0, prob, cfg, iter)?;
        let g_new = shooting_gradient(&acc.point, prob)?;

        let beta = match cfg.method {
            BaselineMethod::GradientDescent => 0.0,
            BaselineMethod::FletcherReeves => dot(&g_new, &g_new) / dot(&g, &g),
            BaselineMethod::PolakRibiere => (dot(&g_new, &sub(&g_new, &g)) / dot(&g, &g)).max(0.0),
        };
        d = d.iter().zip(&g_new).map(|(di, gi)| beta * di - gi).collect();

        // warm start: allow the next search to grow past the last step
        t0 = (2.0 * acc.step).min(cfg.initial_step);
        x = acc.point;
        fx = acc.objective;
        g = g_new;
        history.push(BaselineRecord { iter, objective: fx, grad_norm: norm(&g), step_size: acc.step });
    }
    Ok((x, history))
}
