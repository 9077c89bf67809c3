//! Small dense symmetric-matrix kernel backing the linear policies.
//!
//! The design matrix inverse is maintained incrementally with rank-one
//! Sherman-Morrison updates, O(d^2) per update instead of O(d^3) for a
//! fresh inversion.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rank-one update denominator {0} is not positive; matrix is no longer positive definite")]
    NumericalBreakdown(f64),
}

/// Row-major square matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    /// `s * I`, the initial state of a ridge design matrix (or its inverse).
    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = s;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    fn check_dim(&self, v: &[f64]) -> Result<(), LinalgError> {
        if v.len() != self.dim {
            return Err(LinalgError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    /// `M v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.check_dim(v)?;
        let mut out = vec![0.0; self.dim];
        for (i, row) in self.data.chunks_exact(self.dim).enumerate() {
            out[i] = dot(row, v);
        }
        Ok(out)
    }

    /// `v^T M v`.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64, LinalgError> {
        self.check_dim(v)?;
        let mut acc = 0.0;
        for (i, row) in self.data.chunks_exact(self.dim).enumerate() {
            acc += v[i] * dot(row, v);
        }
        Ok(acc)
    }

    /// Adds `v v^T` in place (maintains the non-inverted design matrix).
    pub fn add_outer(&mut self, v: &[f64]) -> Result<(), LinalgError> {
        self.check_dim(v)?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i * self.dim + j] += v[i] * v[j];
            }
        }
        Ok(())
    }

    /// Replaces `self` (assumed to be `A^-1`) with `(A + v v^T)^-1` via the
    /// Sherman-Morrison formula, then symmetrizes to bound drift across long
    /// update sequences. A zero `v` leaves the matrix unchanged.
    pub fn sherman_morrison_update(&mut self, v: &[f64]) -> Result<(), LinalgError> {
        self.check_dim(v)?;
        let av = self.matvec(v)?;
        let denom = 1.0 + dot(v, &av);
        // For positive definite A the denominator is >= 1; anything at or
        // below zero means the state is numerically destroyed.
        if denom <= 1e-12 {
            return Err(LinalgError::NumericalBreakdown(denom));
        }
        for i in 0..self.dim {
            let scaled = av[i] / denom;
            for j in 0..self.dim {
                self.data[i * self.dim + j] -= scaled * av[j];
            }
        }
        self.symmetrize();
        Ok(())
    }

    /// `(M + M^T) / 2` in place.
    pub fn symmetrize(&mut self) {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let m = 0.5 * (self.data[i * self.dim + j] + self.data[j * self.dim + i]);
                self.data[i * self.dim + j] = m;
                self.data[j * self.dim + i] = m;
            }
        }
    }

    /// Largest `|M[i][j] - M[j][i]|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.data[i * self.dim + j] - self.data[j * self.dim + i]).abs());
            }
        }
        worst
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
