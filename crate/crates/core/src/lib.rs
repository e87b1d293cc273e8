//! Nonlinear four-dimensional variational data assimilation solved by a
//! linearized multi-block ADMM, with the shooting-method baselines and the
//! test models it is exercised on.

pub mod admm;
pub mod baselines;
pub mod burgers;
pub mod error;
pub mod fourdvar;
pub mod io;
pub mod lorenz;
pub mod model;
pub mod numerics;
pub mod verify;
pub mod vorticity;

pub use error::{Error, Result};
pub use model::{rollout, CorruptedAdjoint, Model};
