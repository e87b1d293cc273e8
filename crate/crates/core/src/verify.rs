//! Randomized checks of a model's tangent and adjoint maps.

use crate::error::{check_dim, Result};
use crate::model::Model;
use crate::numerics::{dot, norm, sub, RandomStream, StateVector};

/// Worst relative errors seen over all trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    pub trials: usize,
    /// `max |⟨∇H v, w⟩ − ⟨v, ∇Hᵀ w⟩| / (‖∇H v‖ ‖w‖)`
    pub dot_product: f64,
    /// `max ‖(H(u+εv) − H(u−εv))/2ε − ∇H v‖ / ‖∇H v‖`
    pub tangent_fd: f64,
}

/// Draws linearization points `base + spread · ε`.
fn draw_point(rng: &mut RandomStream, base: &[f64], spread: f64) -> StateVector {
    base.iter().zip(rng.gaussian_draw(base.len())).map(|(b, e)| b + spread * e).collect()
}

/// Dot-product identity on `trials` random triples `(u, v, w)`.
pub fn dot_product_error(model: &dyn Model, base: &[f64], spread: f64, trials: usize, seed: u64) -> Result<f64> {
    check_dim(model.dim(), base.len())?;
    let mut rng = RandomStream::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let u = draw_point(&mut rng, base, spread);
        let v = rng.gaussian_draw(base.len());
        let w = rng.gaussian_draw(base.len());
        let tv = model.tangent(&u, &v)?;
        let atw = model.adjoint(&u, &w)?;
        let scale = norm(&tv) * norm(&w);
        let err = (dot(&tv, &w) - dot(&v, &atw)).abs();
        worst = worst.max(if scale > 0.0 { err / scale } else { err });
    }
    Ok(worst)
}

/// Central-difference check of the tangent map at step `eps`.
pub fn tangent_fd_error(
    model: &dyn Model,
    base: &[f64],
    spread: f64,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<f64> {
    check_dim(model.dim(), base.len())?;
    let mut rng = RandomStream::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let u = draw_point(&mut rng, base, spread);
        let v = rng.gaussian_draw(base.len());
        let plus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - eps * b).collect();
        let fd: Vec<f64> = sub(&model.step(&plus)?, &model.step(&minus)?)
            .into_iter()
            .map(|d| d / (2.0 * eps))
            .collect();
        let tv = model.tangent(&u, &v)?;
        let scale = norm(&tv);
        let err = norm(&sub(&fd, &tv));
        worst = worst.max(if scale > 0.0 { err / scale } else { err });
    }
    Ok(worst)
}

/// Both checks with the same seed.
pub fn check_model(model: &dyn Model, base: &[f64], spread: f64, trials: usize, eps: f64, seed: u64) -> Result<CheckReport> {
    Ok(CheckReport {
        trials,
        dot_product: dot_product_error(model, base, spread, trials, seed)?,
        tangent_fd: tangent_fd_error(model, base, spread, trials, eps, seed)?,
    })
}
