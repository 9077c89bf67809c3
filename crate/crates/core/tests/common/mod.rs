//! Shared test oracles, kept independent of the library's maintained-inverse
//! path: the design matrix is accumulated directly and inverted from scratch
//! with Gauss-Jordan elimination.

use tagseek_core::linalg::SquareMatrix;

/// Direct dense inversion (Gauss-Jordan with partial pivoting). Panics on a
/// numerically singular input; test matrices are ridge-regularized and never
/// are.
pub fn invert_direct(m: &SquareMatrix) -> SquareMatrix {
    let n = m.dim();
    let mut aug = vec![vec![0.0_f64; 2 * n]; n];
    for i in 0..n {
        for j in 0..n {
            aug[i][j] = m.get(i, j);
        }
        aug[i][n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| {
                aug[a][col].abs().partial_cmp(&aug[b][col].abs()).expect("finite")
            })
            .expect("non-empty");
        aug.swap(col, pivot);
        let diag = aug[col][col];
        assert!(diag.abs() > 1e-14, "singular matrix in test oracle");
        for j in 0..2 * n {
            aug[col][j] /= diag;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = aug[row][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..2 * n {
                aug[row][j] -= factor * aug[col][j];
            }
        }
    }
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, j, aug[i][n + j]);
        }
    }
    out
}

/// `lambda * I + sum v v^T` accumulated directly (no inverse maintenance).
pub fn accumulate_design(dim: usize, lambda: f64, updates: &[Vec<f64>]) -> SquareMatrix {
    let mut a = SquareMatrix::scaled_identity(dim, lambda);
    for v in updates {
        a.add_outer(v).expect("dimensions match");
    }
    a
}

/// LinUCB score computed entirely on the direct-inverse route.
pub fn direct_score(a_inv: &SquareMatrix, b: &[f64], v: &[f64], alpha: f64) -> f64 {
    let theta = a_inv.matvec(b).expect("dimensions match");
    let quad = a_inv.quad_form(v).expect("dimensions match");
    tagseek_core::linalg::dot(v, &theta) + alpha * quad.max(0.0).sqrt()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1.0_f64.max(a.abs()).max(b.abs())
}
