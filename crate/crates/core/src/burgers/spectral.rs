use crate::error::{check_dim, Error, Result};
use crate::model::Model;
use crate::numerics::StateVector;

use super::DEFAULT_GAMMA;

/// Sine-Galerkin scheme: the state holds the coefficients of
/// `sin(x), ..., sin(m x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersSpectralConfig {
    pub m: usize,
    pub gamma: f64,
    pub dt: f64,
}

impl Default for BurgersSpectralConfig {
    fn default() -> Self {
        // dt = 0.01 gives γ m² dt = 5 on the top mode
        Self {
            m: 100,
            gamma: DEFAULT_GAMMA,
            dt: 0.0025,
        }
    }
}

impl BurgersSpectralConfig {
    /// `γ m² dt`; forward Euler on the top mode needs it below 2.
    pub fn stability_ratio(&self) -> f64 {
        self.gamma * (self.m * self.m) as f64 * self.dt
    }
}

#[derive(Debug, Clone)]
pub struct BurgersSpectral {
    cfg: BurgersSpectralConfig,
}

impl BurgersSpectral {
    pub fn new(cfg: BurgersSpectralConfig) -> Result<Self> {
        if cfg.m < 2 {
            return Err(Error::Config(format!("burgers-spectral needs m >= 2, got {}", cfg.m)));
        }
        if !(cfg.dt > 0.0) || !(cfg.gamma >= 0.0) {
            return Err(Error::Config("burgers-spectral needs dt > 0 and gamma >= 0".into()));
        }
        let ratio = cfg.stability_ratio();
        if ratio >= 2.0 {
            return Err(Error::Config(format!(
                "burgers-spectral forward Euler is unstable: gamma*m^2*dt = {ratio:.4} >= 2"
            )));
        }
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &BurgersSpectralConfig {
        &self.cfg
    }

    /// Coefficients of `sin(x)`: the first unit vector.
    pub fn initial_state(&self) -> StateVector {
        let mut u = vec![0.0; self.cfg.m];
        u[0] = 1.0;
        u
    }

    /// One step, also returning how many quadratic products were formed.
    pub fn step_counted(&self, u: &[f64]) -> Result<(StateVector, usize)> {
        let m = self.cfg.m;
        check_dim(m, u.len())?;
        let (dt, gamma) = (self.cfg.dt, self.cfg.gamma);
        // 1-based coefficient with u_0 = 0
        let c = |l: usize| if l == 0 { 0.0 } else { u[l - 1] };
        let mut products = 0;
        let mut out = vec![0.0; m];

        let mut s = 0.0;
        for l in 1..m {
            s += c(l) * c(l + 1);
            products += 1;
        }
        out[0] = u[0] + dt * (0.5 * s - gamma * u[0]);

        for i in 2..=m {
            let mut conv = 0.0;
            for l in 1..=i {
                conv += c(l) * c(i - l);
            }
            let mut cross = 0.0;
            for l in 1..=m - i {
                cross += c(l) * c(i + l);
            }
            products += m;
            let fi = i as f64;
            out[i - 1] = c(i) - dt * (0.25 * fi * (conv - 2.0 * cross) + gamma * fi * fi * c(i));
        }
        Ok((out, products))
    }

    /// Dense tangent matrix, row-major `m × m`.
    pub fn tangent_matrix(&self, u: &[f64]) -> Result<Vec<f64>> {
        let m = self.cfg.m;
        check_dim(m, u.len())?;
        let (dt, gamma) = (self.cfg.dt, self.cfg.gamma);
        let c = |l: usize| u[l - 1];
        let mut a = vec![0.0; m * m];

        a[0] = 1.0 - dt * gamma;
        for j in 1..=m {
            let mut d = 0.0;
            if j < m {
                d += c(j + 1);
            }
            if j >= 2 {
                d += c(j - 1);
            }
            a[j - 1] += 0.5 * dt * d;
        }

        for i in 2..=m {
            let fi = i as f64;
            let row = &mut a[(i - 1) * m..i * m];
            row[i - 1] = 1.0 - dt * gamma * fi * fi;
            for j in 1..=m {
                let mut d = 0.0;
                if j < i {
                    d += 2.0 * c(i - j);
                }
                if j + i <= m {
                    d -= 2.0 * c(i + j);
                }
                if j > i {
                    d -= 2.0 * c(j - i);
                }
                row[j - 1] -= 0.25 * dt * fi * d;
            }
        }
        Ok(a)
    }
}

impl Model for BurgersSpectral {
    fn name(&self) -> &str {
        "burgers-spectral"
    }

    fn dim(&self) -> usize {
        self.cfg.m
    }

    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn step(&self, u: &[f64]) -> Result<StateVector> {
        Ok(self.step_counted(u)?.0)
    }

    fn tangent(&self, u: &[f64], v: &[f64]) -> Result<StateVector> {
        let m = self.cfg.m;
        check_dim(m, v.len())?;
        let a = self.tangent_matrix(u)?;
        Ok(a.chunks_exact(m)
            .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
            .collect())
    }

    fn adjoint(&self, u: &[f64], w: &[f64]) -> Result<StateVector> {
        let m = self.cfg.m;
        check_dim(m, w.len())?;
        let a = self.tangent_matrix(u)?;
        let mut out = vec![0.0; m];
        for (row, wi) in a.chunks_exact(m).zip(w) {
            for (o, x) in out.iter_mut().zip(row) {
                *o += x * wi;
            }
        }
        Ok(out)
    }
}
