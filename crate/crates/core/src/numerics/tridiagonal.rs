use crate::error::{check_dim, Error, Result};

const PIVOT_EPS: f64 = 1e-14;

/// Square tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    lower: Vec<f64>,
    diagonal: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(lower: Vec<f64>, diagonal: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diagonal.len();
        if n == 0 {
            return Err(Error::Config("tridiagonal matrix must have size >= 1".into()));
        }
        check_dim(n - 1, lower.len())?;
        check_dim(n - 1, upper.len())?;
        Ok(Self {
            lower,
            diagonal,
            upper,
        })
    }

    /// Matrix with constant diagonals `(off, diag, off)`.
    pub fn symmetric_constant(size: usize, diag: f64, off: f64) -> Self {
        Self {
            lower: vec![off; size.saturating_sub(1)],
            diagonal: vec![diag; size],
            upper: vec![off; size.saturating_sub(1)],
        }
    }

    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn transpose(&self) -> Self {
        Self {
            lower: self.upper.clone(),
            diagonal: self.diagonal.clone(),
            upper: self.lower.clone(),
        }
    }

    /// `A x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.size();
        debug_assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diagonal[i] * x[i];
            if i > 0 {
                acc += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// `Aᵀ x`
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let n = self.size();
        debug_assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diagonal[i] * x[i];
            if i > 0 {
                acc += self.upper[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.lower[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Solves `A x = b` with the Thomas algorithm (no pivoting).
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.size();
        check_dim(n, b.len())?;
        let mut c_star = vec![0.0; n];
        let mut x = vec![0.0; n];

        let mut pivot = self.diagonal[0];
        if pivot.abs() < PIVOT_EPS {
            return Err(Error::SolverFailure(format!("zero pivot at row 0 ({pivot:e})")));
        }
        if n > 1 {
            c_star[0] = self.upper[0] / pivot;
        }
        x[0] = b[0] / pivot;
        for i in 1..n {
            pivot = self.diagonal[i] - self.lower[i - 1] * c_star[i - 1];
            if pivot.abs() < PIVOT_EPS {
                return Err(Error::SolverFailure(format!(
                    "zero pivot at row {i} ({pivot:e})"
                )));
            }
            if i + 1 < n {
                c_star[i] = self.upper[i] / pivot;
            }
            x[i] = (b[i] - self.lower[i - 1] * x[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c_star[i] * x[i + 1];
        }
        Ok(x)
    }

    /// Dense row-major copy, mainly for diagnostics and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diagonal[i];
            if i > 0 {
                a[i][i - 1] = self.lower[i - 1];
            }
            if i + 1 < n {
                a[i][i + 1] = self.upper[i];
            }
        }
        a
    }
}
