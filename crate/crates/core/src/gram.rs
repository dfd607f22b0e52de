//! Gram matrix `M = ridge I + sum z z^T` with a maintained inverse.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};

/// Default ridge seed for the Gram matrix.
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Number of Sherman-Morrison updates between full re-inversions.
pub const REINVERT_EVERY: u64 = 10_000;

#[derive(Debug, Clone)]
pub struct GramState {
    dim: usize,
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    update_count: u64,
    ridge: f64,
    scratch: Vec<f64>,
}

impl GramState {
    pub fn new(dim: usize, ridge: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("Gram dimension must be at least 1".into()));
        }
        if !(ridge.is_finite() && ridge > 0.0) {
            return Err(Error::Parameter(format!("ridge must be finite and positive, got {ridge}")));
        }
        Ok(Self {
            dim,
            matrix: DMatrix::identity(dim, dim) * ridge,
            inverse: DMatrix::identity(dim, dim) / ridge,
            update_count: 0,
            ridge,
            scratch: vec![0.0; dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// `M += z z^T`, with the inverse updated by Sherman-Morrison.
    pub fn rank_one_update(&mut self, z: &[f64]) -> Result<()> {
        check_dim(self.dim, z.len())?;
        self.update_count += 1;
        if z.iter().all(|&v| v == 0.0) {
            return Ok(());
        }
        let d = self.dim;
        for c in 0..d {
            for r in 0..d {
                self.matrix[(r, c)] += z[r] * z[c];
            }
        }
        // u = M^-1 z
        for r in 0..d {
            self.scratch[r] = (0..d).map(|c| self.inverse[(r, c)] * z[c]).sum();
        }
        let denom = 1.0 + dot(z, &self.scratch);
        for c in 0..d {
            for r in 0..d {
                self.inverse[(r, c)] -= self.scratch[r] * self.scratch[c] / denom;
            }
        }
        if self.update_count % REINVERT_EVERY == 0 {
            self.reinvert();
        }
        Ok(())
    }

    /// Recomputes the inverse from the matrix by Cholesky factorisation.
    pub fn reinvert(&mut self) {
        if let Some(chol) = self.matrix.clone().cholesky() {
            self.inverse = chol.inverse();
        } else {
            log::warn!("Gram matrix lost positive definiteness; keeping incremental inverse");
        }
    }

    /// `sqrt(x^T M^-1 x)`.
    pub fn weighted_norm(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.quad_form_diff(x, None).sqrt())
    }

    /// `sqrt((a - b)^T M^-1 (a - b))` without materialising the difference.
    pub fn weighted_norm_of_difference(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_dim(self.dim, a.len())?;
        check_dim(self.dim, b.len())?;
        Ok(self.quad_form_diff(a, Some(b)).sqrt())
    }

    // Unchecked hot-path versions used by the policies.
    pub(crate) fn norm_unchecked(&self, x: &[f64]) -> f64 {
        self.quad_form_diff(x, None).sqrt()
    }

    pub(crate) fn diff_norm_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        self.quad_form_diff(a, Some(b)).sqrt()
    }

    fn quad_form_diff(&self, a: &[f64], b: Option<&[f64]>) -> f64 {
        let d = self.dim;
        let v = |k: usize| match b {
            Some(b) => a[k] - b[k],
            None => a[k],
        };
        let inv = self.inverse.as_slice();
        let mut total = 0.0;
        for c in 0..d {
            let vc = v(c);
            if vc == 0.0 {
                continue;
            }
            let col = &inv[c * d..(c + 1) * d];
            let mut s = 0.0;
            for r in 0..d {
                s += col[r] * v(r);
            }
            total += s * vc;
        }
        // Rounding can push a vanishing quadratic form slightly negative.
        total.max(0.0)
    }

    /// Smallest eigenvalue of the Gram matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute deviation of `M M^-1` from the identity.
    pub fn inverse_residual(&self) -> f64 {
        let prod = &self.matrix * &self.inverse;
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((prod[(r, c)] - target).abs());
            }
        }
        worst
    }

    /// Largest absolute asymmetry `|M_rc - M_cr|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..r {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)]).abs());
            }
        }
        worst
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
