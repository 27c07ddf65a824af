//! Real canonical form of skew-symmetric matrices.
//!
//! Any real skew-symmetric `S` admits an orthogonal `Q` with
//! `Q^T S Q = diag(mu_1 J, ..., mu_m J, 0, ..., 0)` and `mu_k > 0`.
//! This is the factorization behind the vacuum-noise coupling construction.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;

use crate::error::{QlinError, Result};

/// Orthogonal reduction of a skew-symmetric matrix to `(+mu J)`-blocks.
#[derive(Debug, Clone)]
pub struct SkewCanonicalForm {
    /// Orthogonal transform, columns ordered so that consecutive pairs span
    /// the nonzero blocks first.
    pub q: DMatrix<f64>,
    /// Positive block values `mu_k`, one per 2x2 block.
    pub mu: Vec<f64>,
    /// Column index in `q` of the first vector of each block.
    pub block_start: Vec<usize>,
}

impl SkewCanonicalForm {
    /// Reassemble `S` from the factorization (used by tests).
    pub fn reassemble(&self) -> DMatrix<f64> {
        let n = self.q.nrows();
        let mut t = DMatrix::zeros(n, n);
        for (mu, &start) in self.mu.iter().zip(&self.block_start) {
            t[(start, start + 1)] = *mu;
            t[(start + 1, start)] = -*mu;
        }
        &self.q * t * self.q.transpose()
    }
}

/// Compute the skew canonical form of `s`.
///
/// Block values below `tol` are treated as zero blocks. Column pairs are
/// reoriented (swapped) so every retained `mu_k` is positive.
pub fn skew_canonical(s: &DMatrix<f64>, tol: f64) -> Result<SkewCanonicalForm> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(QlinError::Dimension("skew canonical form needs a square matrix".into()));
    }
    let asym = (s + s.transpose()).amax();
    if asym > 1e-8 {
        return Err(QlinError::Precondition(format!(
            "matrix is not skew-symmetric (||S + S^T|| = {asym:.3e})"
        )));
    }
    // Work on the exactly skew part so Schur sees a normal matrix.
    let skew = (s - s.transpose()).scale(0.5);
    let schur = Schur::new(skew);
    let (mut q, t) = schur.unpack();

    let mut mu = Vec::new();
    let mut block_start = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > tol {
            let mut val = t[(i, i + 1)];
            if val < 0.0 {
                q.swap_columns(i, i + 1);
                val = -val;
            }
            mu.push(val);
            block_start.push(i);
            i += 2;
        } else {
            i += 1;
        }
    }
    Ok(SkewCanonicalForm { q, mu, block_start })
}
