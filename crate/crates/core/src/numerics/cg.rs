use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, norm};

/// Conjugate gradient for a symmetric positive-definite operator.
///
/// Stops when `‖A x − b‖ ≤ tol ‖b‖`; gives up after `2 * dim` iterations.
pub fn cg_spd_solve<F>(apply: F, b: &[f64], tol: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let dim = b.len();
    let mut x = vec![0.0; dim];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(x);
    }
    let target = tol * b_norm;
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let max_iter = 2 * dim.max(1);
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverFailure(format!(
                "operator is not positive definite (pᵀAp = {pap:e})"
            )));
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok(x);
        }
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }
    Err(Error::NonConvergence {
        solver: "CG",
        iterations: max_iter,
        residual: rr.sqrt(),
    })
}
