//! Lorenz-63 system advanced by classical RK4.
//!
//! Tangent and adjoint are the exact derivative of the discrete RK4 map,
//! materialized as a 3x3 matrix, so the adjoint is a plain transpose.

use nalgebra::{Matrix3, Vector3};

use crate::error::{check_dim, Error, Result};
use crate::model::Model;
use crate::numerics::StateVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub dt: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            dt: 0.01,
        }
    }
}

impl LorenzParams {
    pub fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("Lorenz dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// The Lorenz vector field `(σ(y−x), x(ρ−z)−y, xy−βz)`.
pub fn lorenz_rhs(u: &Vector3<f64>, p: &LorenzParams) -> Vector3<f64> {
    Vector3::new(
        p.sigma * (u.y - u.x),
        u.x * (p.rho - u.z) - u.y,
        u.x * u.y - p.beta * u.z,
    )
}

/// Jacobian of [`lorenz_rhs`].
pub fn lorenz_jacobian(u: &Vector3<f64>, p: &LorenzParams) -> Matrix3<f64> {
    Matrix3::new(
        -p.sigma, p.sigma, 0.0, //
        p.rho - u.z, -1.0, -u.x, //
        u.y, u.x, -p.beta,
    )
}

pub fn rk4_step(u: &Vector3<f64>, p: &LorenzParams) -> Vector3<f64> {
    let h = p.dt;
    let k1 = lorenz_rhs(u, p);
    let k2 = lorenz_rhs(&(u + 0.5 * h * k1), p);
    let k3 = lorenz_rhs(&(u + 0.5 * h * k2), p);
    let k4 = lorenz_rhs(&(u + h * k3), p);
    u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Derivative of [`rk4_step`] with respect to the state, by the chain rule
/// through the four stages.
pub fn rk4_tangent_matrix(u: &Vector3<f64>, p: &LorenzParams) -> Matrix3<f64> {
    let h = p.dt;
    let id = Matrix3::identity();
    let k1 = lorenz_rhs(u, p);
    let u2 = u + 0.5 * h * k1;
    let k2 = lorenz_rhs(&u2, p);
    let u3 = u + 0.5 * h * k2;
    let k3 = lorenz_rhs(&u3, p);
    let u4 = u + h * k3;

    let d1 = lorenz_jacobian(u, p);
    let d2 = lorenz_jacobian(&u2, p) * (id + 0.5 * h * d1);
    let d3 = lorenz_jacobian(&u3, p) * (id + 0.5 * h * d2);
    let d4 = lorenz_jacobian(&u4, p) * (id + h * d3);
    id + (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
}

pub fn rk4_tangent(u: &Vector3<f64>, v: &Vector3<f64>, p: &LorenzParams) -> Vector3<f64> {
    rk4_tangent_matrix(u, p) * v
}

pub fn rk4_adjoint(u: &Vector3<f64>, w: &Vector3<f64>, p: &LorenzParams) -> Vector3<f64> {
    rk4_tangent_matrix(u, p).transpose() * w
}

/// [`Model`] adapter over slices.
#[derive(Debug, Clone, Copy)]
pub struct Lorenz63 {
    pub params: LorenzParams,
}

impl Lorenz63 {
    pub fn new(params: LorenzParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl Default for Lorenz63 {
    fn default() -> Self {
        Self { params: LorenzParams::default() }
    }
}

fn vec3(u: &[f64]) -> Result<Vector3<f64>> {
    check_dim(3, u.len())?;
    Ok(Vector3::new(u[0], u[1], u[2]))
}

impl Model for Lorenz63 {
    fn name(&self) -> &str {
        "lorenz"
    }

    fn dim(&self) -> usize {
        3
    }

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn step(&self, u: &[f64]) -> Result<StateVector> {
        Ok(rk4_step(&vec3(u)?, &self.params).as_slice().to_vec())
    }

    fn tangent(&self, u: &[f64], v: &[f64]) -> Result<StateVector> {
        Ok(rk4_tangent(&vec3(u)?, &vec3(v)?, &self.params).as_slice().to_vec())
    }

    fn adjoint(&self, u: &[f64], w: &[f64]) -> Result<StateVector> {
        Ok(rk4_adjoint(&vec3(u)?, &vec3(w)?, &self.params).as_slice().to_vec())
    }
}
