use std::f64::consts::PI;

use crate::error::{check_dim, Error, Result};
use crate::model::Model;
use crate::numerics::{StateVector, TridiagonalMatrix};

use super::DEFAULT_GAMMA;

/// Galerkin scheme with piecewise-linear hat functions on `m` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersFemConfig {
    pub m: usize,
    pub gamma: f64,
    pub dt: f64,
}

impl Default for BurgersFemConfig {
    fn default() -> Self {
        // dt = 0.01 puts the stiffest mode at dt·γ·λ_max ≈ 6
        Self {
            m: 100,
            gamma: DEFAULT_GAMMA,
            dt: 0.0025,
        }
    }
}

impl BurgersFemConfig {
    pub fn dx(&self) -> f64 {
        PI / self.m as f64
    }

    /// `γ dt · 12/dx²`, an upper bound on `γ dt λ(R⁻¹T)`; forward Euler
    /// needs it below 2.
    pub fn stability_ratio(&self) -> f64 {
        12.0 * self.gamma * self.dt / (self.dx() * self.dx())
    }
}

#[derive(Debug, Clone)]
pub struct BurgersFem {
    cfg: BurgersFemConfig,
    mass: TridiagonalMatrix,
    stiffness: TridiagonalMatrix,
}

/// Mass matrix `R = dx · tridiag(1/6, 2/3, 1/6)`.
pub fn mass_matrix(size: usize, dx: f64) -> TridiagonalMatrix {
    TridiagonalMatrix::symmetric_constant(size, 2.0 * dx / 3.0, dx / 6.0)
}

/// Stiffness matrix `T = (1/dx) · tridiag(-1, 2, -1)`.
pub fn stiffness_matrix(size: usize, dx: f64) -> TridiagonalMatrix {
    TridiagonalMatrix::symmetric_constant(size, 2.0 / dx, -1.0 / dx)
}

#[inline]
fn ext(u: &[f64], i: isize) -> f64 {
    // nodal value with the boundary nodes u^0 = u^m = 0; i is 1-based
    if i < 1 || i as usize > u.len() {
        0.0
    } else {
        u[i as usize - 1]
    }
}

/// Convection matrix `S1[u]`: diagonal `(u^{i+1} − u^{i−1})/3`, both
/// off-diagonals of row pair (i, i+1) equal to `(u^{i+1} − u^i)/6`.
pub fn assemble_s1(u: &[f64]) -> TridiagonalMatrix {
    let n = u.len();
    let diag = (1..=n as isize).map(|i| (ext(u, i + 1) - ext(u, i - 1)) / 3.0).collect();
    let off: Vec<f64> = (1..n as isize).map(|i| (ext(u, i + 1) - ext(u, i)) / 6.0).collect();
    TridiagonalMatrix::new(off.clone(), diag, off).expect("consistent diagonals")
}

/// `S2[u]`, the part of `∂(S1[u]u)/∂u` beyond `S1[u]` itself.
///
/// Row i: sub `−(u^{i−1} + 2u^i)/6`, diagonal `(u^{i−1} − u^{i+1})/6`,
/// super `(2u^i + u^{i+1})/6`.
pub fn assemble_s2(u: &[f64]) -> TridiagonalMatrix {
    let n = u.len() as isize;
    let lower = (2..=n).map(|i| -(ext(u, i - 1) + 2.0 * ext(u, i)) / 6.0).collect();
    let diag = (1..=n).map(|i| (ext(u, i - 1) - ext(u, i + 1)) / 6.0).collect();
    let upper = (1..n).map(|i| (2.0 * ext(u, i) + ext(u, i + 1)) / 6.0).collect();
    TridiagonalMatrix::new(lower, diag, upper).expect("consistent diagonals")
}

fn add_tridiagonal(a: &TridiagonalMatrix, b: &TridiagonalMatrix, scale_b: f64) -> TridiagonalMatrix {
    let zip = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + scale_b * q).collect();
    TridiagonalMatrix::new(
        zip(a.lower(), b.lower()),
        zip(a.diagonal(), b.diagonal()),
        zip(a.upper(), b.upper()),
    )
    .expect("same shape")
}

impl BurgersFem {
    pub fn new(cfg: BurgersFemConfig) -> Result<Self> {
        if cfg.m < 3 {
            return Err(Error::Config(format!("burgers-fem needs m >= 3, got {}", cfg.m)));
        }
        if !(cfg.dt > 0.0) || !(cfg.gamma >= 0.0) {
            return Err(Error::Config("burgers-fem needs dt > 0 and gamma >= 0".into()));
        }
        let ratio = cfg.stability_ratio();
        if ratio >= 2.0 {
            return Err(Error::Config(format!(
                "burgers-fem forward Euler is unstable: 12*gamma*dt/dx^2 = {ratio:.4} >= 2"
            )));
        }
        let dx = cfg.dx();
        Ok(Self {
            cfg,
            mass: mass_matrix(cfg.m - 1, dx),
            stiffness: stiffness_matrix(cfg.m - 1, dx),
        })
    }

    pub fn config(&self) -> &BurgersFemConfig {
        &self.cfg
    }

    pub fn mass(&self) -> &TridiagonalMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &TridiagonalMatrix {
        &self.stiffness
    }

    /// `u_0 = R⁻¹ T sin[x]` with `sin[x]` the interior nodal samples.
    pub fn initial_state(&self) -> Result<StateVector> {
        let dx = self.cfg.dx();
        let s: Vec<f64> = (1..self.cfg.m).map(|i| (i as f64 * dx).sin()).collect();
        self.mass.solve(&self.stiffness.apply(&s))
    }

    fn step_impl(&self, u: &[f64], advect: bool) -> Result<(StateVector, usize)> {
        check_dim(self.dim(), u.len())?;
        let mut products = 0;
        let mut rhs = self.stiffness.apply(u);
        for r in rhs.iter_mut() {
            *r *= self.cfg.gamma;
        }
        if advect {
            let s1 = assemble_s1(u);
            let conv = s1.apply(u);
            // each S1 entry is a difference of two nodal values times a third
            products = 2 * (s1.diagonal().len() + s1.lower().len() + s1.upper().len());
            for (r, c) in rhs.iter_mut().zip(conv) {
                *r += c;
            }
        }
        let incr = self.mass.solve(&rhs)?;
        let out = u.iter().zip(incr).map(|(a, b)| a - self.cfg.dt * b).collect();
        Ok((out, products))
    }

    /// One step, also returning how many quadratic products were formed.
    pub fn step_counted(&self, u: &[f64]) -> Result<(StateVector, usize)> {
        self.step_impl(u, true)
    }

    /// The viscous part alone: `u − dt γ R⁻¹ T u`.
    pub fn diffusion_step(&self, u: &[f64]) -> Result<StateVector> {
        Ok(self.step_impl(u, false)?.0)
    }

    /// `S1[u] + S2[u] + γT`, the operator sandwiched by the tangent map.
    fn linear_operator(&self, u: &[f64]) -> TridiagonalMatrix {
        let s = add_tridiagonal(&assemble_s1(u), &assemble_s2(u), 1.0);
        add_tridiagonal(&s, &self.stiffness, self.cfg.gamma)
    }
}

impl Model for BurgersFem {
    fn name(&self) -> &str {
        "burgers-fem"
    }

    fn dim(&self) -> usize {
        self.cfg.m - 1
    }

    fn dt(&self) -> f64 {
        self.cfg.dt
    }

    fn step(&self, u: &[f64]) -> Result<StateVector> {
        Ok(self.step_impl(u, true)?.0)
    }

    /// `[I − dt R⁻¹(S1 + S2 + γT)] v`
    fn tangent(&self, u: &[f64], v: &[f64]) -> Result<StateVector> {
        check_dim(self.dim(), u.len())?;
        check_dim(self.dim(), v.len())?;
        let incr = self.mass.solve(&self.linear_operator(u).apply(v))?;
        Ok(v.iter().zip(incr).map(|(a, b)| a - self.cfg.dt * b).collect())
    }

    /// `[I − dt (S1 + S2 + γT)ᵀ R⁻¹] w`; R is symmetric.
    fn adjoint(&self, u: &[f64], w: &[f64]) -> Result<StateVector> {
        check_dim(self.dim(), u.len())?;
        check_dim(self.dim(), w.len())?;
        let rw = self.mass.solve(w)?;
        let incr = self.linear_operator(u).apply_transpose(&rw);
        Ok(w.iter().zip(incr).map(|(a, b)| a - self.cfg.dt * b).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{dot, norm, RandomStream};
    use nalgebra::{DMatrix, DVector};

    fn model() -> BurgersFem {
        BurgersFem::new(BurgersFemConfig::default()).unwrap()
    }

    fn dense(t: &TridiagonalMatrix) -> DMatrix<f64> {
        let d = t.to_dense();
        let n = d.len();
        DMatrix::from_fn(n, n, |i, j| d[i][j])
    }

    /// `∫ u u_x φ_i dx` for the piecewise-linear interpolant, by 2-point
    /// Gauss quadrature on each element (exact for this quadratic integrand).
    fn galerkin_convection(u: &[f64], dx: f64) -> Vec<f64> {
        let n = u.len();
        let nodal = |i: usize| if i == 0 || i == n + 1 { 0.0 } else { u[i - 1] };
        let gauss = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
        let mut out = vec![0.0; n];
        for e in 0..=n {
            // element [x_e, x_{e+1}]
            let (ul, ur) = (nodal(e), nodal(e + 1));
            let slope = (ur - ul) / dx;
            for &t in &gauss {
                let uq = ul + t * (ur - ul);
                let weight = 0.5 * dx;
                // hat of node e decreases, hat of node e+1 increases on this element
                if e >= 1 {
                    out[e - 1] += weight * uq * slope * (1.0 - t);
                }
                if e + 1 <= n {
                    out[e] += weight * uq * slope * t;
                }
            }
        }
        out
    }

    #[test]
    fn matrices_have_the_printed_entries() {
        let h = model();
        let dx = h.config().dx();
        assert!((h.mass().diagonal()[5] - 2.0 * dx / 3.0).abs() < 1e-16);
        assert!((h.mass().lower()[5] - dx / 6.0).abs() < 1e-16);
        assert!((h.stiffness().diagonal()[5] - 2.0 / dx).abs() < 1e-12);
        assert!((h.stiffness().upper()[5] + 1.0 / dx).abs() < 1e-12);
    }

    #[test]
    fn coarse_time_step_is_rejected_as_unstable() {
        let cfg = BurgersFemConfig { dt: 0.01, ..BurgersFemConfig::default() };
        assert!(matches!(BurgersFem::new(cfg), Err(Error::Config(_))));
    }

    #[test]
    fn s_matrices_at_zero_and_constant() {
        let zero = vec![0.0; 9];
        for m in [assemble_s1(&zero), assemble_s2(&zero)] {
            assert!(m.diagonal().iter().chain(m.lower()).chain(m.upper()).all(|&x| x == 0.0));
        }
        let c = 2.5;
        let s1 = assemble_s1(&vec![c; 9]);
        assert!((s1.diagonal()[0] - c / 3.0).abs() < 1e-15);
        assert!((s1.diagonal()[8] + c / 3.0).abs() < 1e-15);
        assert!(s1.diagonal()[1..8].iter().all(|&x| x == 0.0));
        assert!(s1.lower().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn s1_reproduces_galerkin_convection() {
        let mut rng = RandomStream::new(31);
        let dx = 0.1;
        for _ in 0..10 {
            let u = rng.gaussian_draw(20);
            let s1u = assemble_s1(&u).apply(&u);
            // the printed S1 carries no dx; the Galerkin integral does not either
            let quad = galerkin_convection(&u, dx);
            for (a, b) in s1u.iter().zip(&quad) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
            assert!(dot(&u, &s1u).abs() <= 1e-12 * norm(&u).powi(3));
        }
    }

    #[test]
    fn s2_completes_the_jacobian_of_the_convection() {
        let mut rng = RandomStream::new(32);
        let u = rng.gaussian_draw(15);
        let v = rng.gaussian_draw(15);
        let jv = add_tridiagonal(&assemble_s1(&u), &assemble_s2(&u), 1.0).apply(&v);
        let eps = 1e-6;
        let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
        let um: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - eps * b).collect();
        let fp = assemble_s1(&up).apply(&up);
        let fm = assemble_s1(&um).apply(&um);
        for i in 0..15 {
            let fd = (fp[i] - fm[i]) / (2.0 * eps);
            assert!((fd - jv[i]).abs() <= 1e-8);
        }
    }

    #[test]
    fn step_matches_dense_oracle() {
        let h = model();
        let cfg = *h.config();
        let n = cfg.m - 1;
        let r = dense(h.mass());
        let t = dense(h.stiffness());
        let r_inv = r.clone().try_inverse().unwrap();
        let mut rng = RandomStream::new(33);
        let u = rng.gaussian_draw(n);
        let uv = DVector::from_vec(u.clone());
        let s1 = dense(&assemble_s1(&u));
        let expect = &uv - cfg.dt * &r_inv * (&s1 * &uv + cfg.gamma * &t * &uv);
        let got = h.step(&u).unwrap();
        for i in 0..n {
            assert!((got[i] - expect[i]).abs() <= 1e-12);
        }

        // viscous part decays a sine profile and matches the dense operator
        let s: Vec<f64> = (1..cfg.m).map(|i| (i as f64 * cfg.dx()).sin()).collect();
        let sv = DVector::from_vec(s.clone());
        let expect = &sv - cfg.dt * cfg.gamma * &r_inv * &t * &sv;
        let got = h.diffusion_step(&s).unwrap();
        for i in 0..n {
            assert!((got[i] - expect[i]).abs() <= 1e-12);
            assert!(got[i].abs() < s[i].abs());
        }
    }

    #[test]
    fn zero_state_and_initial_condition() {
        let h = model();
        assert!(h.step(&vec![0.0; 99]).unwrap().iter().all(|&x| x == 0.0));
        let u0 = h.initial_state().unwrap();
        // R⁻¹T sin[x] is the Galerkin approximation of −(sin)'' = sin
        let dx = h.config().dx();
        for (i, v) in u0.iter().enumerate() {
            assert!((v - ((i + 1) as f64 * dx).sin()).abs() < 1e-3);
        }
    }

    #[test]
    fn mass_round_trip_on_sine_samples() {
        let dx = PI / 100.0;
        let r = mass_matrix(99, dx);
        let s: Vec<f64> = (1..100).map(|i| (i as f64 * dx).sin()).collect();
        let back = r.solve(&r.apply(&s)).unwrap();
        for (a, b) in back.iter().zip(&s) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn tangent_and_adjoint() {
        let h = model();
        let mut rng = RandomStream::new(34);
        let u = rng.gaussian_draw(99);
        let v = rng.gaussian_draw(99);
        assert!(h.tangent(&u, &vec![0.0; 99]).unwrap().iter().all(|&x| x == 0.0));
        let eps = 1e-7;
        let up: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
        let base = h.step(&u).unwrap();
        let fd: Vec<f64> = h.step(&up).unwrap().iter().zip(&base).map(|(a, b)| (a - b) / eps).collect();
        let tl = h.tangent(&u, &v).unwrap();
        let diff: Vec<f64> = fd.iter().zip(&tl).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-5 * norm(&tl));
        for _ in 0..100 {
            let u = rng.gaussian_draw(99);
            let v = rng.gaussian_draw(99);
            let w = rng.gaussian_draw(99);
            let lhs = dot(&h.tangent(&u, &v).unwrap(), &w);
            let rhs = dot(&v, &h.adjoint(&u, &w).unwrap());
            assert!((lhs - rhs).abs() <= 1e-11 * norm(&v) * norm(&w));
        }
    }

    #[test]
    fn quadratic_product_count() {
        let h = model();
        let (_, count) = h.step_counted(&h.initial_state().unwrap()).unwrap();
        assert_eq!(count, 6 * h.config().m - 10);
    }
}
