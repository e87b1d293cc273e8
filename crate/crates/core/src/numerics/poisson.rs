use std::f64::consts::PI;

use crate::error::{check_dim, Error, Result};

/// Uniform rectangular grid with `m` intervals per axis.
///
/// Unknowns live on the `(m-1) x (m-1)` interior nodes, flattened row-major
/// with the x index `i` as the row: `idx = (i - 1) * (m - 1) + (j - 1)`.
/// Boundary nodes carry zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub m: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Grid2D {
    pub fn new(m: usize, dx: f64, dy: f64) -> Result<Self> {
        if m < 3 {
            return Err(Error::Config(format!("grid needs m >= 3, got {m}")));
        }
        if !(dx > 0.0 && dy > 0.0) {
            return Err(Error::Config(format!("grid spacings must be positive ({dx}, {dy})")));
        }
        Ok(Self { m, dx, dy })
    }

    /// Interior points per axis.
    pub fn n(&self) -> usize {
        self.m - 1
    }

    pub fn interior_dim(&self) -> usize {
        (self.m - 1) * (self.m - 1)
    }

    /// Flat index of interior node `(i, j)`, both in `1..m`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        (i - 1) * (self.m - 1) + (j - 1)
    }

    /// Value at node `(i, j)` with `0..=m` indexing; boundary nodes read zero.
    #[inline]
    pub fn at(&self, field: &[f64], i: usize, j: usize) -> f64 {
        if i == 0 || j == 0 || i >= self.m || j >= self.m {
            0.0
        } else {
            field[self.idx(i, j)]
        }
    }

    /// Eigenvalue of the 5-point Laplacian for the discrete sine mode `(p, q)`.
    pub fn laplacian_eigenvalue(&self, p: usize, q: usize) -> f64 {
        let m = self.m as f64;
        let sx = (p as f64 * PI / (2.0 * m)).sin();
        let sy = (q as f64 * PI / (2.0 * m)).sin();
        -4.0 * sx * sx / (self.dx * self.dx) - 4.0 * sy * sy / (self.dy * self.dy)
    }

    /// Discrete sine mode `sin(p pi i / m) sin(q pi j / m)` on the interior.
    pub fn sine_mode(&self, p: usize, q: usize) -> Vec<f64> {
        let m = self.m as f64;
        let mut out = vec![0.0; self.interior_dim()];
        for i in 1..self.m {
            for j in 1..self.m {
                out[self.idx(i, j)] = (p as f64 * PI * i as f64 / m).sin()
                    * (q as f64 * PI * j as f64 / m).sin();
            }
        }
        out
    }
}

/// Relaxation controls for [`sor_poisson_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SorParams {
    pub relax: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl SorParams {
    /// Optimal relaxation `2 / (1 + sin(pi/m))`, absolute tolerance 1e-10.
    pub fn for_grid(grid: &Grid2D) -> Self {
        Self {
            relax: 2.0 / (1.0 + (PI / grid.m as f64).sin()),
            tol: 1e-10,
            max_sweeps: 20_000,
        }
    }
}

/// Standard 5-point Laplacian with a zero Dirichlet ghost layer.
pub fn laplacian_apply(field: &[f64], grid: &Grid2D) -> Vec<f64> {
    let n = grid.n();
    let cx = 1.0 / (grid.dx * grid.dx);
    let cy = 1.0 / (grid.dy * grid.dy);
    let mut out = vec![0.0; field.len()];
    for i in 1..=n {
        for j in 1..=n {
            let c = field[grid.idx(i, j)];
            let e = grid.at(field, i + 1, j);
            let w = grid.at(field, i - 1, j);
            let no = grid.at(field, i, j + 1);
            let so = grid.at(field, i, j - 1);
            out[grid.idx(i, j)] = cx * (e + w - 2.0 * c) + cy * (no + so - 2.0 * c);
        }
    }
    out
}

fn residual_inf(psi: &[f64], rhs: &[f64], grid: &Grid2D) -> f64 {
    let n = grid.n();
    let cx = 1.0 / (grid.dx * grid.dx);
    let cy = 1.0 / (grid.dy * grid.dy);
    let mut worst = 0.0_f64;
    for i in 0..n {
        let row = i * n;
        for j in 0..n {
            let c = psi[row + j];
            let e = if i + 1 < n { psi[row + n + j] } else { 0.0 };
            let w = if i > 0 { psi[row - n + j] } else { 0.0 };
            let no = if j + 1 < n { psi[row + j + 1] } else { 0.0 };
            let so = if j > 0 { psi[row + j - 1] } else { 0.0 };
            let r = cx * (e + w - 2.0 * c) + cy * (no + so - 2.0 * c) - rhs[row + j];
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// Solves `Δ_h ψ = rhs` with zero Dirichlet boundary by lexicographic SOR,
/// starting from ψ = 0.
///
/// Sweeps run in row-major order (x index outer). Returns once the
/// max-norm residual of the 5-point system is at most `params.tol`.
pub fn sor_poisson_solve(rhs: &[f64], grid: &Grid2D, params: &SorParams) -> Result<Vec<f64>> {
    check_dim(grid.interior_dim(), rhs.len())?;
    if !(params.relax > 0.0 && params.relax < 2.0) {
        return Err(Error::Config(format!(
            "SOR relaxation must lie in (0, 2), got {}",
            params.relax
        )));
    }
    let n = grid.n();
    let mut psi = vec![0.0; rhs.len()];
    if rhs.iter().all(|&r| r == 0.0) {
        return Ok(psi);
    }
    let cx = 1.0 / (grid.dx * grid.dx);
    let cy = 1.0 / (grid.dy * grid.dy);
    let inv_diag = 1.0 / (2.0 * cx + 2.0 * cy);
    let omega = params.relax;

    let mut residual = f64::INFINITY;
    for sweep in 0..params.max_sweeps {
        for i in 0..n {
            let row = i * n;
            for j in 0..n {
                let e = if i + 1 < n { psi[row + n + j] } else { 0.0 };
                let w = if i > 0 { psi[row - n + j] } else { 0.0 };
                let no = if j + 1 < n { psi[row + j + 1] } else { 0.0 };
                let so = if j > 0 { psi[row + j - 1] } else { 0.0 };
                let gs = (cx * (e + w) + cy * (no + so) - rhs[row + j]) * inv_diag;
                psi[row + j] += omega * (gs - psi[row + j]);
            }
        }
        // the residual costs about as much as a sweep; check every other one
        if sweep % 2 == 1 || sweep + 1 == params.max_sweeps {
            residual = residual_inf(&psi, rhs, grid);
            if residual <= params.tol {
                return Ok(psi);
            }
            if !residual.is_finite() {
                break;
            }
        }
    }
    Err(Error::NonConvergence {
        solver: "SOR",
        iterations: params.max_sweeps,
        residual,
    })
}
