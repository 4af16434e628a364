//! Small dense LU with partial pivoting, used for exact coarse solves.

use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    /// Factors a row-major `n x n` matrix. Returns `None` if a pivot is zero.
    pub fn factor(n: usize, mut a: Vec<f64>) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut best, mut arg) = (a[k * n + k].abs(), k);
            for r in k + 1..n {
                if a[r * n + k].abs() > best {
                    best = a[r * n + k].abs();
                    arg = r;
                }
            }
            if best == 0.0 {
                return None;
            }
            if arg != k {
                for c in 0..n {
                    a.swap(k * n + c, arg * n + c);
                }
                piv.swap(k, arg);
            }
            let d = a[k * n + k];
            for r in k + 1..n {
                let f = a[r * n + k] / d;
                a[r * n + k] = f;
                if f != 0.0 {
                    for c in k + 1..n {
                        a[r * n + c] -= f * a[k * n + c];
                    }
                }
            }
        }
        Some(Self { n, lu: a, piv })
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            x[i] = b[self.piv[i]];
        }
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
    }
}
