use std::f64::consts::PI;

use crate::error::{check_dim, Error, Result};
use crate::model::Model;
use crate::numerics::{StateVector, TridiagonalMatrix};

use super::DEFAULT_GAMMA;

/// Central-difference scheme on `m` uniform intervals, interior unknowns only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersFdConfig {
    pub m: usize,
    pub gamma: f64,
    pub dt: f64,
}

impl Default for BurgersFdConfig {
    fn default() -> Self {
        // dt = 0.02 violates 2γdt/dx² < 1 at m = 100
        Self {
            m: 100,
            gamma: DEFAULT_GAMMA,
            dt: 0.005,
        }
    }
}

impl BurgersFdConfig {
    pub fn dx(&self) -> f64 {
        PI / self.m as f64
    }

    /// Diffusion number `2γ dt / dx²`; forward Euler needs it below 1.
    pub fn stability_ratio(&self) -> f64 {
        2.0 * self.gamma * self.dt / (self.dx() * self.dx())
    }
}

#[derive(Debug, Clone)]
pub struct BurgersFd {
    cfg: BurgersFdConfig,
    diff: f64,
    adv: f64,
}

impl BurgersFd {
    pub fn new(cfg: BurgersFdConfig) -> Result<Self> {
        if cfg.m < 3 {
            return Err(Error::Config(format!("burgers-fd needs m >= 3, got {}", cfg.m)));
        }
        if !(cfg.dt > 0.0) || !(cfg.gamma >= 0.0) {
            return Err(Error::Config("burgers-fd needs dt > 0 and gamma >= 0".into()));
        }
        let ratio = cfg.stability_ratio();
        if ratio >= 1.0 {
            return Err(Error::Config(format!(
                "burgers-fd forward Euler is unstable: 2*gamma*dt/dx^2 = {ratio:.4} >= 1"
            )));
        }
        let dx = cfg.dx();
        Ok(Self {
            cfg,
            diff: cfg.gamma * cfg.dt / (dx * dx),
            adv: cfg.dt / (4.0 * dx),
        })
    }

    pub fn config(&self) -> &BurgersFdConfig {
        &self.cfg
    }

    /// `u_{0,i} = sin(iπ/m)`
    pub fn initial_state(&self) -> StateVector {
        let m = self.cfg.m;
        (1..m).map(|i| (i as f64 * PI / m as f64).sin()).collect()
    }

    /// One step, also returning how many squared terms were evaluated.
    pub fn step_counted(&self, u: &[f64]) -> Result<(StateVector, usize)> {
        check_dim(self.dim(), u.len())?;
        let n = u.len();
        let (a, b) = (self.diff, self.adv);
        let mut squares = 0;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            squares += 2;
            out[i] = (a * left + b * left * left)
                + (1.0 - 2.0 * a) * u[i]
                + (a * right - b * right * right);
        }
        Ok((out, squares))
    }

    /// Tridiagonal tangent operator at `u`.
    pub fn tangent_matrix(&self, u: &[f64]) -> Result<TridiagonalMatrix> {
        check_dim(self.dim(), u.len())?;
        let n = u.len();
        let (a, b) = (self.diff, self.adv);
        // row i: sub multiplies v_{i-1}, super multiplies v_{i+1}
        let lower = (1..n).map(|i| a + 2.0 * b * u[i - 1]).collect();
        let upper = (0..n - 1).map(|i| a - 2.0 * b * u[i + 1]).collect();
        TridiagonalMatrix::new(lower, vec![1.0 - 2.0 * a; n], upper)
    }
}

impl Model for BurgersFd {
    fn name(&self) -> &str {
        "burgers-fd"
    }

    fn dim(&self) -> usize {
        self.cfg.m - 1
    }

    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn step(&self, u: &[f64]) -> Result<StateVector> {
        Ok(self.step_counted(u)?.0)
    }

    fn tangent(&self, u: &[f64], v: &[f64]) -> Result<StateVector> {
        check_dim(self.dim(), v.len())?;
        Ok(self.tangent_matrix(u)?.apply(v))
    }

    fn adjoint(&self, u: &[f64], w: &[f64]) -> Result<StateVector> {
        check_dim(self.dim(), w.len())?;
        Ok(self.tangent_matrix(u)?.apply_transpose(w))
    }
}
