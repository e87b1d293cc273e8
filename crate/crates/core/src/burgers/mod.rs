//! Viscous Burgers' equation `u_t + u u_x = γ u_xx` on `[0, π]` with zero
//! Dirichlet boundary, advanced by forward Euler under three spatial
//! discretizations.

mod fd;
mod fem;
mod spectral;

pub use fd::{BurgersFd, BurgersFdConfig};
pub use fem::{BurgersFem, BurgersFemConfig};
pub use spectral::{BurgersSpectral, BurgersSpectralConfig};

/// Default viscosity.
pub const DEFAULT_GAMMA: f64 = 0.05;

/// Spatial discretization selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurgersScheme {
    FiniteDifference,
    FiniteElement,
    Spectral,
}
