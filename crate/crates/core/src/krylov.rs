//! Restarted right-preconditioned GMRES and preconditioned CG.

use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;
use thiserror::Error;

use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KrylovError {
    #[error("operator is not positive definite (p'Ap = {curvature} at iteration {iteration})")]
    Indefinite { iteration: usize, curvature: f64 },
    #[error("right-hand side has length {got}, operator dimension is {expected}")]
    Dimension { expected: usize, got: usize },
}

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        SparseMatrix::apply(self, x, y)
    }
}

/// Action `z = M^{-1} r` of a preconditioner.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

impl<F: Fn(&[f64], &mut [f64])> Preconditioner for F {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self(r, z)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`, recomputed from `x`.
    pub relative_residual: f64,
    pub converged: bool,
    pub breakdown: bool,
    /// Arnoldi least-squares residual estimates (relative), one per step.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    pub restart: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self { restart: 10, tol: 1e-7, max_iter: 200 }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn residual<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x: &[f64], r: &mut [f64]) {
    a.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// GMRES(m) for `A x = b` preconditioned on the right, `A M^{-1} u = b`,
/// `x = M^{-1} u`. Starts from `x0` (zero if `None`).
///
/// The preconditioned basis vectors `M^{-1} v_k` are kept and combined
/// directly (flexible form), so a preconditioner that is only approximately
/// linear, such as a V-cycle with an iterative coarse solve, cannot stall
/// the update.
pub fn gmres<A, M>(
    a: &A,
    b: &[f64],
    x0: Option<&[f64]>,
    m: &M,
    cfg: &GmresConfig,
) -> Result<(Vec<f64>, SolveReport), KrylovError>
where
    A: LinearOperator + ?Sized,
    M: Preconditioner + ?Sized,
{
    let n = a.dim();
    if b.len() != n || x0.is_some_and(|x| x.len() != n) {
        return Err(KrylovError::Dimension { expected: n, got: b.len() });
    }
    let mut report = SolveReport::default();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        report.converged = true;
        return Ok((vec![0.0; n], report));
    }
    let restart = cfg.restart.max(1);
    let mut r = vec![0.0; n];
    residual(a, b, &x, &mut r);
    let mut beta = norm2(&r);
    report.relative_residual = beta / bnorm;
    if report.relative_residual <= cfg.tol {
        report.converged = true;
        return Ok((x, report));
    }

    let mut v: Vec<Vec<f64>> = (0..=restart).map(|_| vec![0.0; n]).collect();
    let mut h = vec![0.0; (restart + 1) * restart];
    let hidx = |i: usize, j: usize| i * restart + j;
    let (mut cs, mut sn, mut g) = (vec![0.0; restart], vec![0.0; restart], vec![0.0; restart + 1]);
    let mut zs: Vec<Vec<f64>> = (0..restart).map(|_| vec![0.0; n]).collect();
    let mut w = vec![0.0; n];
    let mut coef = vec![0.0; restart + 1];

    while report.iterations < cfg.max_iter {
        for (vi, ri) in v[0].iter_mut().zip(&r) {
            *vi = ri / beta;
        }
        g.iter_mut().for_each(|e| *e = 0.0);
        g[0] = beta;
        let mut k = 0;
        while k < restart && report.iterations < cfg.max_iter {
            m.apply(&v[k], &mut zs[k]);
            a.apply(&zs[k], &mut w);
            let wnorm0 = norm2(&w);
            for i in 0..=k {
                let hik = dot(&w, &v[i]);
                h[hidx(i, k)] = hik;
                axpy(-hik, &v[i], &mut w);
            }
            let mut wnorm = norm2(&w);
            // One corrective pass if orthogonality was lost.
            let mut worst = 0.0f64;
            for i in 0..=k {
                coef[i] = dot(&w, &v[i]);
                worst = worst.max(coef[i].abs());
            }
            if worst > 1e-8 * wnorm {
                for i in 0..=k {
                    axpy(-coef[i], &v[i], &mut w);
                    h[hidx(i, k)] += coef[i];
                }
                wnorm = norm2(&w);
            }
            h[hidx(k + 1, k)] = wnorm;
            for i in 0..k {
                let (a0, a1) = (h[hidx(i, k)], h[hidx(i + 1, k)]);
                h[hidx(i, k)] = cs[i] * a0 + sn[i] * a1;
                h[hidx(i + 1, k)] = -sn[i] * a0 + cs[i] * a1;
            }
            let (hk, hk1) = (h[hidx(k, k)], h[hidx(k + 1, k)]);
            let den = libm::hypot(hk, hk1);
            if den == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = hk / den;
                sn[k] = hk1 / den;
            }
            h[hidx(k, k)] = den;
            h[hidx(k + 1, k)] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            report.iterations += 1;
            report.history.push(g[k + 1].abs() / bnorm);
            let happy = wnorm <= 1e-14 * wnorm0.max(f64::MIN_POSITIVE);
            k += 1;
            if happy {
                report.breakdown = true;
                break;
            }
            if g[k].abs() / bnorm <= cfg.tol {
                break;
            }
            let vk = &mut v[k];
            for (vi, wi) in vk.iter_mut().zip(&w) {
                *vi = wi / wnorm;
            }
        }
        // Back substitution for y, then x += Z y with Z = M^{-1} V.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[hidx(i, j)] * y[j];
            }
            let d = h[hidx(i, i)];
            y[i] = if d != 0.0 { s / d } else { 0.0 };
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &zs[i], &mut x);
        }
        residual(a, b, &x, &mut r);
        beta = norm2(&r);
        report.relative_residual = beta / bnorm;
        if report.relative_residual <= cfg.tol {
            report.converged = true;
            break;
        }
        if beta == 0.0 || !beta.is_finite() {
            break;
        }
    }
    Ok((x, report))
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn pcg<A, M>(
    a: &A,
    b: &[f64],
    m: &M,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport), KrylovError>
where
    A: LinearOperator + ?Sized,
    M: Preconditioner + ?Sized,
{
    let n = a.dim();
    if b.len() != n {
        return Err(KrylovError::Dimension { expected: n, got: b.len() });
    }
    let mut report = SolveReport::default();
    let mut x = vec![0.0; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        report.converged = true;
        return Ok((x, report));
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    report.relative_residual = 1.0;
    for it in 1..=max_iter {
        a.apply(&p, &mut q);
        let curvature = dot(&p, &q);
        if curvature <= 0.0 || !curvature.is_finite() {
            return Err(KrylovError::Indefinite { iteration: it, curvature });
        }
        let alpha = rz / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        report.iterations = it;
        report.relative_residual = norm2(&r) / bnorm;
        report.history.push(report.relative_residual);
        if report.relative_residual <= tol {
            report.converged = true;
            break;
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok((x, report))
}
