//! The callable contract every dynamical model exposes to the assimilation
//! machinery: one time step `H`, its tangent `∇H(u) v` and adjoint
//! `∇H(u)ᵀ w`.

use crate::error::Result;
use crate::numerics::StateVector;

pub trait Model: Send + Sync {
    fn name(&self) -> &str;

    /// Degrees of freedom of one state.
    fn dim(&self) -> usize;

    /// Time step of one application of [`Model::step`].
    fn dt(&self) -> f64;

    fn step(&self, u: &[f64]) -> Result<StateVector>;

    /// `∇H(u) v`
    fn tangent(&self, u: &[f64], v: &[f64]) -> Result<StateVector>;

    /// `∇H(u)ᵀ w`
    fn adjoint(&self, u: &[f64], w: &[f64]) -> Result<StateVector>;
}

/// States `u0, H(u0), ..., H^steps(u0)`.
pub fn rollout(model: &dyn Model, u0: &[f64], steps: usize) -> Result<Vec<StateVector>> {
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(u0.to_vec());
    for k in 0..steps {
        let next = model.step(&traj[k])?;
        traj.push(next);
    }
    Ok(traj)
}

/// Wraps a model and flips the sign of the first adjoint output entry.
///
/// Fault injection for the adjoint checks; never used for assimilation.
pub struct CorruptedAdjoint<M> {
    pub inner: M,
}

impl<M: Model> Model for CorruptedAdjoint<M> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    fn step(&self, u: &[f64]) -> Result<StateVector> {
        self.inner.step(u)
    }

    fn tangent(&self, u: &[f64], v: &[f64]) -> Result<StateVector> {
        self.inner.tangent(u, v)
    }

    fn adjoint(&self, u: &[f64], w: &[f64]) -> Result<StateVector> {
        let mut out = self.inner.adjoint(u, w)?;
        if let Some(first) = out.first_mut() {
            *first = -*first;
        }
        Ok(out)
    }
}

impl<M: Model + ?Sized> Model for Box<M> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn dt(&self) -> f64 {
        (**self).dt()
    }

    fn step(&self, u: &[f64]) -> Result<StateVector> {
        (**self).step(u)
    }

    fn tangent(&self, u: &[f64], v: &[f64]) -> Result<StateVector> {
        (**self).tangent(u, v)
    }

    fn adjoint(&self, u: &[f64], w: &[f64]) -> Result<StateVector> {
        (**self).adjoint(u, w)
    }
}
