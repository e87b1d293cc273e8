//! Two-dimensional vorticity dynamics `ω_t + J(ψ, ω) = −κ Δ²ω`, `ω = Δψ`,
//! on a square box with `ω = ψ = 0` on the boundary.
//!
//! Space: Arakawa's 9-point Jacobian and the 5-point Laplacian.
//! Time: one prediction and one correction stage, both explicit, sharing the
//! streamfunction of the start-of-step vorticity.

use std::io::Write;

use crate::error::{check_dim, Error, Result};
use crate::model::Model;
use crate::numerics::{dot, laplacian_apply, sor_poisson_solve, Grid2D, RandomStream, SorParams, StateVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VorticityConfig {
    pub grid: Grid2D,
    pub dt: f64,
    pub kappa: f64,
    pub sor: SorParams,
}

impl Default for VorticityConfig {
    fn default() -> Self {
        let grid = Grid2D { m: 20, dx: 0.2, dy: 0.2 };
        Self::for_grid(grid)
    }
}

impl VorticityConfig {
    /// `dt = 3 dx dy`, `κ = 0.001 dx dy`.
    pub fn for_grid(grid: Grid2D) -> Self {
        let cell = grid.dx * grid.dy;
        Self {
            grid,
            dt: 3.0 * cell,
            kappa: 1e-3 * cell,
            sor: SorParams::for_grid(&grid),
        }
    }

    pub fn validate(&self) -> Result<()> {
        Grid2D::new(self.grid.m, self.grid.dx, self.grid.dy)?;
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("vorticity dt must be positive, got {}", self.dt)));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::Config(format!("vorticity kappa must be >= 0, got {}", self.kappa)));
        }
        Ok(())
    }
}

// Stencil neighbours as (di, dj), i along x, j along y.
const OFFSETS: [(isize, isize); 8] = [
    (0, 1),   // N
    (0, -1),  // S
    (1, 0),   // E
    (-1, 0),  // W
    (1, 1),   // NE
    (1, -1),  // SE
    (-1, 1),  // NW
    (-1, -1), // SW
];

#[inline]
fn at(field: &[f64], grid: &Grid2D, i: isize, j: isize) -> f64 {
    let m = grid.m as isize;
    if i <= 0 || j <= 0 || i >= m || j >= m {
        0.0
    } else {
        field[grid.idx(i as usize, j as usize)]
    }
}

/// Arakawa Jacobian `J(u, v) = (J1 + J2 + J3) / 3` on the interior nodes.
pub fn arakawa_jacobian(u: &[f64], v: &[f64], grid: &Grid2D) -> Vec<f64> {
    let n = grid.n() as isize;
    let scale = 1.0 / (12.0 * grid.dx * grid.dy);
    let mut out = vec![0.0; grid.interior_dim()];
    for i in 1..=n {
        for j in 1..=n {
            let u_ = |di: isize, dj: isize| at(u, grid, i + di, j + dj);
            let v_ = |di: isize, dj: isize| at(v, grid, i + di, j + dj);
            let j1 = (u_(1, 0) - u_(-1, 0)) * (v_(0, 1) - v_(0, -1))
                - (u_(0, 1) - u_(0, -1)) * (v_(1, 0) - v_(-1, 0));
            let j2 = u_(1, 0) * (v_(1, 1) - v_(1, -1)) - u_(-1, 0) * (v_(-1, 1) - v_(-1, -1))
                - u_(0, 1) * (v_(1, 1) - v_(-1, 1))
                + u_(0, -1) * (v_(1, -1) - v_(-1, -1));
            let j3 = (u_(1, 1) - u_(-1, 1)) * v_(0, 1) - (u_(1, -1) - u_(-1, -1)) * v_(0, -1)
                - (u_(1, 1) - u_(1, -1)) * v_(1, 0)
                + (u_(-1, 1) - u_(-1, -1)) * v_(-1, 0);
            out[grid.idx(i as usize, j as usize)] = scale * (j1 + j2 + j3);
        }
    }
    out
}

/// `𝕁[u]`: the Arakawa Jacobian with its first argument frozen, stored as
/// eight neighbour coefficients per node (the centre coefficient is zero).
#[derive(Debug, Clone)]
pub struct JacobianOperator {
    grid: Grid2D,
    coeffs: Vec<[f64; 8]>,
}

impl JacobianOperator {
    pub fn new(u: &[f64], grid: &Grid2D) -> Self {
        let n = grid.n() as isize;
        let scale = 1.0 / (12.0 * grid.dx * grid.dy);
        let mut coeffs = Vec::with_capacity(grid.interior_dim());
        for i in 1..=n {
            for j in 1..=n {
                let u_ = |di: isize, dj: isize| at(u, grid, i + di, j + dj);
                let (e, w, no, so) = (u_(1, 0), u_(-1, 0), u_(0, 1), u_(0, -1));
                let (ne, se, nw, sw) = (u_(1, 1), u_(1, -1), u_(-1, 1), u_(-1, -1));
                coeffs.push([
                    scale * ((e - w) + (ne - nw)),
                    scale * (-(e - w) - (se - sw)),
                    scale * (-(no - so) - (ne - se)),
                    scale * ((no - so) + (nw - sw)),
                    scale * (e - no),
                    scale * (so - e),
                    scale * (no - w),
                    scale * (w - so),
                ]);
            }
        }
        Self { grid: *grid, coeffs }
    }

    /// `𝕁[u] v = J(u, v)`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.grid.n() as isize;
        let mut out = vec![0.0; self.coeffs.len()];
        for i in 1..=n {
            for j in 1..=n {
                let p = self.grid.idx(i as usize, j as usize);
                let c = &self.coeffs[p];
                out[p] = OFFSETS
                    .iter()
                    .zip(c)
                    .map(|(&(di, dj), ck)| ck * at(v, &self.grid, i + di, j + dj))
                    .sum();
            }
        }
        out
    }

    /// `𝕁[u]ᵀ w`, scattering each node's coefficients back onto its neighbours.
    pub fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        let n = self.grid.n() as isize;
        let mut out = vec![0.0; self.coeffs.len()];
        for i in 1..=n {
            for j in 1..=n {
                let p = self.grid.idx(i as usize, j as usize);
                let wp = w[p];
                for (&(di, dj), ck) in OFFSETS.iter().zip(&self.coeffs[p]) {
                    let (a, b) = (i + di, j + dj);
                    if a >= 1 && b >= 1 && a <= n && b <= n {
                        out[self.grid.idx(a as usize, b as usize)] += ck * wp;
                    }
                }
            }
        }
        out
    }
}

/// `Δ_h Δ_h w`, with a zero ghost layer for both applications.
pub fn biharmonic_apply(w: &[f64], grid: &Grid2D) -> Vec<f64> {
    laplacian_apply(&laplacian_apply(w, grid), grid)
}

/// The vorticity model; the state is `ω` on the interior nodes.
#[derive(Debug, Clone)]
pub struct Vorticity {
    cfg: VorticityConfig,
}

impl Vorticity {
    pub fn new(cfg: VorticityConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &VorticityConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid2D {
        &self.cfg.grid
    }

    /// `ω_{0,ij} = 5 ε_ij`, `ε ~ N(0, 1)`.
    pub fn initial_state(&self, seed: u64) -> StateVector {
        RandomStream::new(seed)
            .gaussian_draw(self.cfg.grid.interior_dim())
            .into_iter()
            .map(|e| 5.0 * e)
            .collect()
    }

    /// `Δ_h⁻¹ w` by SOR.
    pub fn inverse_laplacian(&self, w: &[f64]) -> Result<StateVector> {
        sor_poisson_solve(w, &self.cfg.grid, &self.cfg.sor)
    }

    /// `w − dt (J(ψ, w) + κ Δ² w)` for a given streamfunction.
    fn advance(&self, base: &[f64], psi: &[f64], w: &[f64]) -> StateVector {
        let g = &self.cfg.grid;
        let jac = arakawa_jacobian(psi, w, g);
        let bih = biharmonic_apply(w, g);
        base.iter()
            .zip(jac.iter().zip(&bih))
            .map(|(b, (j, d))| b - self.cfg.dt * (j + self.cfg.kappa * d))
            .collect()
    }

    /// Prediction stage `ωᵖ = ω − dt (J(ψ, ω) + κ Δ²ω)`, `ψ = Δ⁻¹ω`.
    pub fn predict(&self, w: &[f64]) -> Result<StateVector> {
        check_dim(self.dim(), w.len())?;
        let psi = self.inverse_laplacian(w)?;
        Ok(self.advance(w, &psi, w))
    }

    /// Streamfunction and predicted field, shared by step, tangent and adjoint.
    fn stages(&self, w: &[f64]) -> Result<(StateVector, StateVector)> {
        check_dim(self.dim(), w.len())?;
        let psi = self.inverse_laplacian(w)?;
        let wp = self.advance(w, &psi, w);
        Ok((psi, wp))
    }

    /// `⟨a, (−Δ_h)⁻¹ b⟩`
    pub fn energy_inner(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_dim(self.dim(), a.len())?;
        Ok(-dot(a, &self.inverse_laplacian(b)?))
    }
}

impl Model for Vorticity {
    fn name(&self) -> &str {
        "vorticity2d"
    }

    fn dim(&self) -> usize {
        self.cfg.grid.interior_dim()
    }

    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn step(&self, w: &[f64]) -> Result<StateVector> {
        let (psi, wp) = self.stages(w)?;
        Ok(self.advance(w, &psi, &wp))
    }

    fn tangent(&self, w: &[f64], dw: &[f64]) -> Result<StateVector> {
        check_dim(self.dim(), dw.len())?;
        let g = &self.cfg.grid;
        let (dt, kappa) = (self.cfg.dt, self.cfg.kappa);
        let (psi, wp) = self.stages(w)?;
        let dpsi = self.inverse_laplacian(dw)?;
        let j_psi = JacobianOperator::new(&psi, g);

        // δωᵖ = δω + dt (J(ω, δψ) − J(ψ, δω) − κΔ²δω)
        let a = arakawa_jacobian(w, &dpsi, g);
        let b = j_psi.apply(dw);
        let c = biharmonic_apply(dw, g);
        let dwp: Vec<f64> = (0..dw.len())
            .map(|p| dw[p] + dt * (a[p] - b[p] - kappa * c[p]))
            .collect();

        // δω' = δω + dt (J(ωᵖ, δψ) − J(ψ, δωᵖ) − κΔ²δωᵖ)
        let a = arakawa_jacobian(&wp, &dpsi, g);
        let b = j_psi.apply(&dwp);
        let c = biharmonic_apply(&dwp, g);
        Ok((0..dw.len())
            .map(|p| dw[p] + dt * (a[p] - b[p] - kappa * c[p]))
            .collect())
    }

    fn adjoint(&self, w: &[f64], y: &[f64]) -> Result<StateVector> {
        check_dim(self.dim(), y.len())?;
        let g = &self.cfg.grid;
        let (dt, kappa) = (self.cfg.dt, self.cfg.kappa);
        let (psi, wp) = self.stages(w)?;
        let j_psi = JacobianOperator::new(&psi, g);

        // x = −dt (𝕁[ψ]ᵀ + κΔ²) y carries the correction stage back onto δωᵖ
        let jy = j_psi.apply_transpose(y);
        let by = biharmonic_apply(y, g);
        let x: Vec<f64> = (0..y.len()).map(|p| -dt * (jy[p] + kappa * by[p])).collect();

        // both stages reach δω through δψ = Δ⁻¹δω; one solve serves both
        let jwp = JacobianOperator::new(&wp, g).apply_transpose(y);
        let jw = JacobianOperator::new(w, g).apply_transpose(&x);
        let rhs: Vec<f64> = jwp.iter().zip(&jw).map(|(a, b)| a + b).collect();
        let through_psi = self.inverse_laplacian(&rhs)?;

        let jx = j_psi.apply_transpose(&x);
        let bx = biharmonic_apply(&x, g);
        Ok((0..y.len())
            .map(|p| y[p] + x[p] + dt * (-jx[p] - kappa * bx[p] + through_psi[p]))
            .collect())
    }
}

/// Field snapshot as CSV with header `i,j,omega`, interior nodes row-major.
pub fn write_field_csv<W: Write>(mut out: W, field: &[f64], grid: &Grid2D) -> std::io::Result<()> {
    writeln!(out, "i,j,omega")?;
    for i in 1..grid.m {
        for j in 1..grid.m {
            writeln!(out, "{i},{j},{:.16e}", field[grid.idx(i, j)])?;
        }
    }
    Ok(())
}
