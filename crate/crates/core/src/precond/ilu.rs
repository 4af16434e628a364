//! Incomplete LU factorization with zero fill.

use alloc::vec;
use alloc::vec::Vec;

use super::PrecondError;
use crate::krylov::Preconditioner;
use crate::sparse::SparseMatrix;

/// `L` (unit lower) and `U` stored together on the pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: SparseMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &SparseMatrix) -> Result<Self, PrecondError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(PrecondError::Dimension);
        }
        let mut lu = a.clone();
        let row_ptr = lu.row_ptr().to_vec();
        let col_idx = lu.col_idx().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            if let Ok(k) = col_idx[row_ptr[i]..row_ptr[i + 1]].binary_search(&i) {
                diag[i] = row_ptr[i] + k;
            } else {
                return Err(PrecondError::ZeroPivot { row: i });
            }
        }
        let vals = lu.values_mut();
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (row_ptr[i], row_ptr[i + 1]);
            for q in start..end {
                pos[col_idx[q]] = q;
            }
            for q in start..diag[i] {
                let k = col_idx[q];
                let pivot = vals[diag[k]];
                if pivot == 0.0 {
                    return Err(PrecondError::ZeroPivot { row: k });
                }
                let lik = vals[q] / pivot;
                vals[q] = lik;
                for t in diag[k] + 1..row_ptr[k + 1] {
                    let target = pos[col_idx[t]];
                    if target != usize::MAX {
                        vals[target] -= lik * vals[t];
                    }
                }
            }
            if vals[diag[i]] == 0.0 || !vals[diag[i]].is_finite() {
                return Err(PrecondError::ZeroPivot { row: i });
            }
            for q in start..end {
                pos[col_idx[q]] = usize::MAX;
            }
        }
        Ok(Self { lu, diag })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solves `L U z = r`.
    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = self.dim();
        let rp = self.lu.row_ptr();
        let ci = self.lu.col_idx();
        let v = self.lu.values();
        for i in 0..n {
            let mut s = r[i];
            for q in rp[i]..self.diag[i] {
                s -= v[q] * z[ci[q]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for q in self.diag[i] + 1..rp[i + 1] {
                s -= v[q] * z[ci[q]];
            }
            z[i] = s / v[self.diag[i]];
        }
    }

    /// Separate `(L, U)` factors.
    pub fn factors(&self) -> (SparseMatrix, SparseMatrix) {
        let n = self.dim();
        let (mut lt, mut ut) = (Vec::new(), Vec::new());
        for i in 0..n {
            let (cols, vals) = self.lu.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c < i {
                    lt.push((i, c, v));
                } else {
                    ut.push((i, c, v));
                }
            }
            lt.push((i, i, 1.0));
        }
        (
            SparseMatrix::from_triplets(n, n, &lt).expect("in range"),
            SparseMatrix::from_triplets(n, n, &ut).expect("in range"),
        )
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.solve(r, z);
    }
}
