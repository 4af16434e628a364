//! Symbol sampling, dense eigenvalues and empirical spectral comparison.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use libm::{cos, sqrt};
use thiserror::Error;

use crate::constitutive::VanGenuchtenParams;
use crate::grid::{Dim, ProblemGrid};
use crate::jacobian::gravity_matrix;
use crate::residual::RichardsProblem;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("matrix has entries outside the three central diagonals")]
    NotTridiagonal,
    #[error("QR iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("empty input")]
    Empty,
    #[error("field has {got} values, grid has {expected} unknowns")]
    SizeMismatch { expected: usize, got: usize },
    #[error("need at least two theta samples")]
    TooFewSamples,
}

/// Samples `f(x, theta)` on interior nodes times a uniform `theta` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid {
    /// Node coordinates as fractions of the domain extent.
    pub points: Vec<[f64; 3]>,
    /// Samples of each `theta` component in `[0, pi]`.
    pub theta: Vec<f64>,
    /// Number of `theta` components (1 or 3).
    pub axes: usize,
    /// Point-major values; within a point the first `theta` component
    /// varies fastest.
    pub values: Vec<f64>,
}

impl SymbolGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Values serialized as little-endian bytes, for exact comparisons.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

/// `theta_j = j pi / (n - 1)`, `j = 0..n`.
pub fn theta_samples(n: usize) -> Result<Vec<f64>, SpectralError> {
    if n < 2 {
        return Err(SpectralError::TooFewSamples);
    }
    Ok((0..n).map(|j| j as f64 * PI / (n - 1) as f64).collect())
}

fn check_field(grid: &ProblemGrid, p: &[f64]) -> Result<(), SpectralError> {
    if p.len() != grid.n_interior() {
        return Err(SpectralError::SizeMismatch { expected: grid.n_interior(), got: p.len() });
    }
    Ok(())
}

fn fractions(grid: &ProblemGrid, m: usize) -> [f64; 3] {
    let (i, j, k) = grid.coordinates(m).expect("index within interior");
    let frac = |c: usize, n: usize| if n > 1 { c as f64 / (n - 1) as f64 } else { 0.0 };
    [frac(i, grid.n[0]), frac(j, grid.n[1]), frac(k, grid.n[2])]
}

/// `C s'(p_i) storage + K(p_i) (2 - 2 cos theta)` with `C = h_z^2 / dt`.
///
/// `storage` is the multiplier of the time term (`rho phi` when included).
pub fn sample_symbol_1d(
    p: &[f64],
    grid: &ProblemGrid,
    params: &VanGenuchtenParams,
    storage: f64,
    n_theta: usize,
) -> Result<SymbolGrid, SpectralError> {
    check_field(grid, p)?;
    let theta = theta_samples(n_theta)?;
    let c = grid.h[2] * grid.h[2] / grid.dt * storage;
    let mut values = Vec::with_capacity(p.len() * theta.len());
    let mut points = Vec::with_capacity(p.len());
    for (m, &pm) in p.iter().enumerate() {
        points.push(fractions(grid, m));
        let (d, k) = (c * params.ds(pm), params.k(pm));
        values.extend(theta.iter().map(|&t| d + k * (2.0 - 2.0 * cos(t))));
    }
    Ok(SymbolGrid { points, theta, axes: 1, values })
}

/// `C rho phi s'(p) + K(p) (8 - 2 cos t1 - 2 cos t2 - 2 cos t3)` with
/// `C = h_z^2 / dt`, for every interior node.
pub fn sample_symbol_3d(
    p: &[f64],
    grid: &ProblemGrid,
    params: &VanGenuchtenParams,
    n_theta: usize,
) -> Result<SymbolGrid, SpectralError> {
    check_field(grid, p)?;
    let theta = theta_samples(n_theta)?;
    let cosines: Vec<f64> = theta.iter().map(|&t| 2.0 * cos(t)).collect();
    let c = grid.h[2] * grid.h[2] / grid.dt * params.rho * params.phi;
    let nt = theta.len();
    let mut values = Vec::with_capacity(p.len() * nt * nt * nt);
    let mut points = Vec::with_capacity(p.len());
    for (m, &pm) in p.iter().enumerate() {
        points.push(fractions(grid, m));
        let (d, k) = (c * params.ds(pm), params.k(pm));
        for c3 in &cosines {
            for c2 in &cosines {
                for c1 in &cosines {
                    values.push(d + k * (8.0 - c1 - c2 - c3));
                }
            }
        }
    }
    Ok(SymbolGrid { points, theta, axes: 3, values })
}

/// Symbol of the problem's own dimension, using its storage convention.
pub fn sample_symbol(problem: &RichardsProblem, p: &[f64], n_theta: usize) -> Result<SymbolGrid, SpectralError> {
    match problem.grid.dim {
        Dim::One => sample_symbol_1d(p, &problem.grid, &problem.params, problem.storage_factor(), n_theta),
        Dim::Three => sample_symbol_3d(p, &problem.grid, &problem.params, n_theta),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigDistribution {
    /// Real parts, ascending.
    pub real: Vec<f64>,
    pub max_imag: f64,
    pub dim: usize,
}

impl EigDistribution {
    pub fn from_parts(re: Vec<f64>, im: &[f64]) -> Self {
        let mut real = re;
        real.sort_by(f64::total_cmp);
        let max_imag = im.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dim = real.len();
        Self { real, max_imag, dim }
    }
}

/// All eigenvalues of a tridiagonal matrix (dense Hessenberg QR).
pub fn eigenvalues_tridiagonal(m: &SparseMatrix) -> Result<EigDistribution, SpectralError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(SpectralError::NotSquare);
    }
    for r in 0..n {
        if m.row(r).0.iter().any(|&c| c + 1 < r || c > r + 1) {
            return Err(SpectralError::NotTridiagonal);
        }
    }
    let (re, im) = hessenberg_eigenvalues(n, m.to_dense())?;
    Ok(EigDistribution::from_parts(re, &im))
}

/// Eigenvalues `(re, im)` of an upper Hessenberg matrix stored row-major,
/// by Francis double-shift QR with deflation.
pub fn hessenberg_eigenvalues(nn: usize, mut h: Vec<f64>) -> Result<(Vec<f64>, Vec<f64>), SpectralError> {
    assert_eq!(h.len(), nn * nn, "dense matrix size");
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    if nn == 0 {
        return Ok((d, e));
    }
    let idx = |i: usize, j: usize| i * nn + j;
    let eps = f64::EPSILON;
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[idx(i, j)].abs();
        }
    }
    let max_total = 30 * nn.max(1);
    let mut total = 0;
    let mut n = nn as isize - 1;
    let mut iter = 0;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);
    while n >= 0 {
        let nu = n as usize;
        let mut l = nu;
        while l > 0 {
            s = h[idx(l - 1, l - 1)].abs() + h[idx(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[idx(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }
        if l == nu {
            d[nu] = h[idx(nu, nu)] + exshift;
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[idx(nu, nu - 1)] * h[idx(nu - 1, nu)];
            p = (h[idx(nu - 1, nu - 1)] - h[idx(nu, nu)]) / 2.0;
            q = p * p + w;
            z = sqrt(q.abs());
            x = h[idx(nu, nu)] + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = if z != 0.0 { x - w / z } else { d[nu - 1] };
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[idx(nu, nu)];
            y = h[idx(nu - 1, nu - 1)];
            w = h[idx(nu, nu - 1)] * h[idx(nu - 1, nu)];
            if iter == 10 {
                exshift += x;
                for i in l..=nu {
                    h[idx(i, i)] -= x;
                }
                s = h[idx(nu, nu - 1)].abs() + h[idx(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = sqrt(s);
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in l..=nu {
                        h[idx(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total += 1;
            if total > max_total {
                return Err(SpectralError::NoConvergence(max_total));
            }
            // Find two consecutive small subdiagonal elements.
            let mut m = nu - 2;
            loop {
                z = h[idx(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[idx(m + 1, m)] + h[idx(m, m + 1)];
                q = h[idx(m + 1, m + 1)] - z - r - s;
                r = h[idx(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[idx(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[idx(m - 1, m - 1)].abs() + z.abs() + h[idx(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                h[idx(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[idx(i, i - 3)] = 0.0;
                }
            }
            // Double QR step on rows l..=n and columns m..=n.
            let mut k = m;
            while k < nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[idx(k, k - 1)];
                    q = h[idx(k + 1, k - 1)];
                    r = if notlast { h[idx(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = sqrt(p * p + q * q + r * r);
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[idx(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[idx(k, k - 1)] = -h[idx(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        p = h[idx(k, j)] + q * h[idx(k + 1, j)];
                        if notlast {
                            p += r * h[idx(k + 2, j)];
                            h[idx(k + 2, j)] -= p * z;
                        }
                        h[idx(k, j)] -= p * x;
                        h[idx(k + 1, j)] -= p * y;
                    }
                    for i in l..=nu.min(k + 3) {
                        p = x * h[idx(i, k)] + y * h[idx(i, k + 1)];
                        if notlast {
                            p += z * h[idx(i, k + 2)];
                            h[idx(i, k + 2)] -= p * r;
                        }
                        h[idx(i, k)] -= p;
                        h[idx(i, k + 1)] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }
    Ok((d, e))
}

/// Sorted symbol values resampled to `n` points at quantiles `(i + 1/2) / n`.
pub fn matched_quantiles(sym: &SymbolGrid, n: usize) -> Vec<f64> {
    let sorted = sym.sorted_values();
    let ns = sorted.len();
    (0..n).map(|i| sorted[(((2 * i + 1) * ns) / (2 * n)).min(ns - 1)]).collect()
}

/// Mean absolute gap between sorted eigenvalues and matched symbol
/// quantiles, divided by the symbol's range.
pub fn distribution_distance(eigs: &EigDistribution, sym: &SymbolGrid) -> Result<f64, SpectralError> {
    if eigs.real.is_empty() || sym.is_empty() {
        return Err(SpectralError::Empty);
    }
    let q = matched_quantiles(sym, eigs.real.len());
    let mean = eigs.real.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>() / q.len() as f64;
    let (lo, hi) = sym.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let range = hi - lo;
    let scale = if range > 0.0 { range } else { hi.abs().max(f64::MIN_POSITIVE) };
    Ok(mean / scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroDistribution {
    /// `h_z max K'(p_i)`.
    pub bound: f64,
    /// `||h_z^2 T||_2` of the transport (gravity) part.
    pub norm: f64,
    pub pass: bool,
}

/// Largest singular value by power iteration on `A^T A`.
pub fn spectral_norm(a: &SparseMatrix, max_iter: usize, tol: f64) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    let at = a.transpose();
    // Smooth positive start so no singular direction is missed by symmetry.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * cos(1.3 * i as f64)).collect();
    let mut av = vec![0.0; a.nrows()];
    let mut w = vec![0.0; n];
    let mut sigma = 0.0;
    for _ in 0..max_iter {
        let nv = sqrt(v.iter().map(|x| x * x).sum());
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        a.apply(&v, &mut av);
        let next = sqrt(av.iter().map(|x| x * x).sum());
        at.apply(&av, &mut w);
        core::mem::swap(&mut v, &mut w);
        let done = (next - sigma).abs() <= tol * next;
        sigma = next;
        if done {
            break;
        }
    }
    sigma
}

/// Checks `||h_z^2 T|| <= h_z max K'` for the gravity part `T` of the
/// Jacobian of a 1D problem at `p`.
pub fn zero_distribution_check(problem: &RichardsProblem, p: &[f64]) -> Result<ZeroDistribution, SpectralError> {
    check_field(&problem.grid, p)?;
    let hz = problem.grid.h[2];
    let mut t = gravity_matrix(problem, p);
    t.scale(hz * hz);
    let norm = spectral_norm(&t, 2000, 1e-12);
    let kmax = p.iter().fold(0.0f64, |m, &v| m.max(problem.params.dk(v).abs()));
    let bound = hz * kmax;
    Ok(ZeroDistribution { bound, norm, pass: norm <= bound * (1.0 + 1e-12) })
}
