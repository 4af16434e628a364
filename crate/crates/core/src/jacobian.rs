//! Jacobians of the residual: closed forms for arithmetic and upstream
//! averages, a colored central-difference oracle, the gravity part and the
//! pure-diffusion matrix used to build preconditioners.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::Dim;
use crate::residual::{AverageKind, ResidualError, RichardsProblem};
use crate::sparse::SparseMatrix;

/// Which Newton iterate a Jacobian was built at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Stamp {
    pub time_step: usize,
    pub iterate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    pub matrix: SparseMatrix,
    pub average: AverageKind,
    pub stamp: Stamp,
}

impl JacobianMatrix {
    fn new(matrix: SparseMatrix, average: AverageKind) -> Self {
        Self { matrix, average, stamp: Stamp::default() }
    }
}

/// Sparsity of the 3-point (1D) or 7-point (3D) stencil over interior
/// unknowns, with zero values.
pub fn stencil_pattern(problem: &RichardsProblem) -> SparseMatrix {
    let [ni, nj, nk] = problem.grid.interior();
    let n = ni * nj * nk;
    let stride = [1, ni, ni * nj];
    let dims = [ni, nj, nk];
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(7 * n);
    row_ptr.push(0);
    for m in 0..n {
        let c = [m % ni, (m / ni) % nj, m / (ni * nj)];
        for d in (0..3).rev() {
            if c[d] > 0 {
                col_idx.push(m - stride[d]);
            }
        }
        col_idx.push(m);
        for d in 0..3 {
            if c[d] + 1 < dims[d] {
                col_idx.push(m + stride[d]);
            }
        }
        row_ptr.push(col_idx.len());
    }
    let nnz = col_idx.len();
    SparseMatrix::new(n, n, row_ptr, col_idx, vec![0.0; nnz]).expect("stencil pattern is valid")
}

fn check(problem: &RichardsProblem, p: &[f64]) -> Result<(), ResidualError> {
    if p.len() != problem.n() {
        return Err(ResidualError::SizeMismatch { expected: problem.n(), got: p.len() });
    }
    if !problem.average.has_analytic_jacobian() {
        return Err(ResidualError::UnsupportedAverage(problem.average));
    }
    Ok(())
}

/// Tridiagonal Jacobian of a 1D problem, `tridiag(eta, zeta, xi)`.
pub fn assemble_1d(problem: &RichardsProblem, p: &[f64]) -> Result<JacobianMatrix, ResidualError> {
    check(problem, p)?;
    if problem.grid.dim != Dim::One {
        return Err(ResidualError::SizeMismatch { expected: problem.grid.n[2] - 2, got: p.len() });
    }
    let vg = &problem.params;
    let n = p.len();
    let h = problem.grid.h[2];
    let h2 = h * h;
    let dt = problem.grid.dt;
    let c = problem.storage_factor();
    let nodes = problem.node_values();
    let (bottom, top) = (nodes[0], nodes[n + 1]);
    let at = |m: isize| {
        if m < 0 {
            bottom
        } else if m as usize >= n {
            top
        } else {
            p[m as usize]
        }
    };
    let mut a = stencil_pattern(problem);
    let (row_ptr, _) = (a.row_ptr().to_vec(), ());
    let vals = a.values_mut();
    for i in 0..n {
        let (pm, pc, pp) = (at(i as isize - 1), p[i], at(i as isize + 1));
        let (km, kc, kp) = (vg.k(pm), vg.k(pc), vg.k(pp));
        let (dkm, dkc, dkp) = (vg.dk(pm), vg.dk(pc), vg.dk(pp));
        let ds = c * vg.ds(pc);
        let (zeta, xi, eta) = match problem.average {
            AverageKind::Arithmetic => {
                let zeta = (dt * km + dt * kp + 2.0 * dt * kc + 2.0 * h2 * ds) / (2.0 * dt * h2)
                    - pm * dkc / (2.0 * h2)
                    + pc * dkc / h2
                    - pp * dkc / (2.0 * h2);
                let xi = -(kp + kc + h * dkp) / (2.0 * h2) - pp * dkp / (2.0 * h2) + pc * dkp / (2.0 * h2);
                let eta = -(km + kc - h * dkm) / (2.0 * h2) - pm * dkm / (2.0 * h2) + pc * dkm / (2.0 * h2);
                (zeta, xi, eta)
            }
            _ => {
                let dn = pc - pm >= 0.0;
                let up = pp - pc >= 0.0;
                let zeta = ds / dt - pm / h2 * if dn { dkc } else { 0.0 }
                    - pp / h2 * if up { 0.0 } else { dkc }
                    + pc / h2 * ((if dn { dkc } else { 0.0 }) + if up { 0.0 } else { dkc })
                    + ((if dn { kc } else { km }) + if up { kp } else { kc }) / h2;
                let xi = -dkp / (2.0 * h) - (if up { kp } else { kc }) / h2
                    + pc / h2 * if up { dkp } else { 0.0 }
                    - pp / h2 * if up { dkp } else { 0.0 };
                let eta = dkm / (2.0 * h) - (if dn { kc } else { km }) / h2
                    + pc / h2 * if dn { 0.0 } else { dkm }
                    - pm / h2 * if dn { 0.0 } else { dkm };
                (zeta, xi, eta)
            }
        };
        let mut k = row_ptr[i];
        if i > 0 {
            vals[k] = eta;
            k += 1;
        }
        vals[k] = zeta;
        if i + 1 < n {
            vals[k + 1] = xi;
        }
    }
    Ok(JacobianMatrix::new(a, problem.average))
}

/// Seven-point Jacobian of a 3D problem.
pub fn assemble_3d(problem: &RichardsProblem, p: &[f64]) -> Result<JacobianMatrix, ResidualError> {
    check(problem, p)?;
    Ok(JacobianMatrix::new(assemble_faces(problem, p, true), problem.average))
}

/// Analytic Jacobian in 1D or 3D, falling back to the finite-difference
/// oracle for averages without closed forms.
pub fn assemble(problem: &RichardsProblem, p: &[f64]) -> Result<JacobianMatrix, ResidualError> {
    if !problem.average.has_analytic_jacobian() {
        let pattern = stencil_pattern(problem);
        let m = fd_jacobian(&pattern, p, |x, out| {
            problem.residual(x, p, out).expect("sizes checked");
        });
        return Ok(JacobianMatrix::new(m, problem.average));
    }
    match problem.grid.dim {
        Dim::One => assemble_1d(problem, p),
        Dim::Three => assemble_3d(problem, p),
    }
}

/// Jacobian of the residual with every gravity term removed. This is the
/// matrix the preconditioners are built on.
pub fn diffusion_preconditioner_matrix(
    problem: &RichardsProblem,
    p: &[f64],
) -> Result<SparseMatrix, ResidualError> {
    if p.len() != problem.n() {
        return Err(ResidualError::SizeMismatch { expected: problem.n(), got: p.len() });
    }
    if !problem.average.has_analytic_jacobian() {
        let pattern = stencil_pattern(problem);
        return Ok(fd_jacobian(&pattern, p, |x, out| {
            problem.diffusion_residual(x, p, out).expect("sizes checked");
        }));
    }
    Ok(assemble_faces(problem, p, false))
}

/// The gravity part `G`: `+K'(p_{k-1}) / (2 h_z)` on the lower vertical
/// neighbour and `-K'(p_{k+1}) / (2 h_z)` on the upper one.
pub fn gravity_matrix(problem: &RichardsProblem, p: &[f64]) -> SparseMatrix {
    let vg = &problem.params;
    let [ni, nj, nk] = problem.grid.interior();
    let layer = ni * nj;
    let g = 1.0 / (2.0 * problem.grid.h[2]);
    let mut t = Vec::with_capacity(2 * p.len());
    for m in 0..p.len() {
        let k = m / layer;
        if k > 0 {
            t.push((m, m - layer, g * vg.dk(p[m - layer])));
        }
        if k + 1 < nk {
            t.push((m, m + layer, -g * vg.dk(p[m + layer])));
        }
    }
    SparseMatrix::from_triplets(p.len(), p.len(), &t).expect("indices in range")
}

fn assemble_faces(problem: &RichardsProblem, p: &[f64], gravity: bool) -> SparseMatrix {
    let vg = &problem.params;
    let grid = &problem.grid;
    let full = problem.scatter(p);
    let kf: Vec<f64> = full.iter().map(|&v| vg.k(v)).collect();
    let dkf: Vec<f64> = full.iter().map(|&v| vg.dk(v)).collect();
    let [ni, nj, nk] = grid.interior();
    let dims = [ni, nj, nk];
    let active: Vec<usize> = match grid.dim {
        Dim::One => vec![2],
        Dim::Three => vec![0, 1, 2],
    };
    let node_stride = match grid.dim {
        Dim::One => [0, 0, 1],
        Dim::Three => [1, grid.n[0], grid.n[0] * grid.n[1]],
    };
    let inv_h2 = grid.h.map(|h| if h > 0.0 { 1.0 / (h * h) } else { 0.0 });
    let g = if gravity { 1.0 / (2.0 * grid.h[2]) } else { 0.0 };
    let storage = problem.storage_factor() / grid.dt;
    let upstream = problem.average == AverageKind::Upstream;

    let mut a = stencil_pattern(problem);
    let row_ptr = a.row_ptr().to_vec();
    let vals = a.values_mut();
    for (m, node) in grid.interior_nodes().into_iter().enumerate() {
        let c = [m % ni, (m / ni) % nj, m / (ni * nj)];
        let pc = full[node];
        let mut diag = storage * vg.ds(pc);
        // lower[d], upper[d]: coefficient of the neighbour along axis d.
        let mut lower = [0.0; 3];
        let mut upper = [0.0; 3];
        for &d in &active {
            for side in [-1.0f64, 1.0] {
                let nb = if side < 0.0 { node - node_stride[d] } else { node + node_stride[d] };
                let pn = full[nb];
                // Face orientation: (l, u) along the axis.
                let (pl, pu, kl, ku, dkl, dku) = if side > 0.0 {
                    (pc, pn, kf[node], kf[nb], dkf[node], dkf[nb])
                } else {
                    (pn, pc, kf[nb], kf[node], dkf[nb], dkf[node])
                };
                let (kav, dkav_dl, dkav_du) = if upstream {
                    if pu - pl >= 0.0 {
                        (ku, 0.0, dku)
                    } else {
                        (kl, dkl, 0.0)
                    }
                } else {
                    (0.5 * (kl + ku), 0.5 * dkl, 0.5 * dku)
                };
                let (dkav_dc, dkav_dn) = if side > 0.0 { (dkav_dl, dkav_du) } else { (dkav_du, dkav_dl) };
                let diff = (pc - pn) * inv_h2[d];
                diag += kav * inv_h2[d] + diff * dkav_dc;
                let mut off = -kav * inv_h2[d] + diff * dkav_dn;
                if d == 2 {
                    off += -side * g * dkf[nb];
                }
                if side < 0.0 {
                    lower[d] = off;
                } else {
                    upper[d] = off;
                }
            }
        }
        let mut k = row_ptr[m];
        for d in (0..3).rev() {
            if c[d] > 0 {
                vals[k] = lower[d];
                k += 1;
            }
        }
        vals[k] = diag;
        k += 1;
        for d in 0..3 {
            if c[d] + 1 < dims[d] {
                vals[k] = upper[d];
                k += 1;
            }
        }
    }
    a
}

/// Greedy distance-2 coloring of the columns of `pattern`: two columns
/// sharing a row never share a color.
pub fn column_coloring(pattern: &SparseMatrix) -> (Vec<usize>, usize) {
    let n = pattern.ncols();
    let t = pattern.transpose();
    let mut color = vec![usize::MAX; n];
    let mut forbidden: Vec<usize> = Vec::new();
    let mut ncolors = 0;
    for j in 0..n {
        forbidden.clear();
        for &r in t.row(j).0 {
            for &c in pattern.row(r).0 {
                if color[c] != usize::MAX {
                    forbidden.push(color[c]);
                }
            }
        }
        forbidden.sort_unstable();
        forbidden.dedup();
        let mut pick = 0;
        for &f in &forbidden {
            if f == pick {
                pick += 1;
            } else if f > pick {
                break;
            }
        }
        color[j] = pick;
        ncolors = ncolors.max(pick + 1);
    }
    (color, ncolors)
}

/// Central-difference Jacobian on a known sparsity pattern, with step
/// `max(1e-7 |p_j|, 1e-9)` per column and columns grouped by color.
pub fn fd_jacobian<F: FnMut(&[f64], &mut [f64])>(pattern: &SparseMatrix, p: &[f64], mut f: F) -> SparseMatrix {
    let n = p.len();
    let (color, ncolors) = column_coloring(pattern);
    let step: Vec<f64> = p.iter().map(|v| (1e-7 * v.abs()).max(1e-9)).collect();
    let t = pattern.transpose();
    let mut out = pattern.clone();
    let row_ptr = out.row_ptr().to_vec();
    let col_idx = out.col_idx().to_vec();
    let vals = out.values_mut();
    let (mut plus, mut minus) = (p.to_vec(), p.to_vec());
    let (mut fp, mut fm) = (vec![0.0; pattern.nrows()], vec![0.0; pattern.nrows()]);
    for c in 0..ncolors {
        for j in 0..n {
            if color[j] == c {
                plus[j] = p[j] + step[j];
                minus[j] = p[j] - step[j];
            }
        }
        f(&plus, &mut fp);
        f(&minus, &mut fm);
        for j in 0..n {
            if color[j] != c {
                continue;
            }
            // The true increment may differ from step[j] by rounding.
            let dx = plus[j] - minus[j];
            for &r in t.row(j).0 {
                let pos = row_ptr[r] + col_idx[row_ptr[r]..row_ptr[r + 1]].binary_search(&j).unwrap();
                vals[pos] = (fp[r] - fm[r]) / dx;
            }
            plus[j] = p[j];
            minus[j] = p[j];
        }
    }
    out
}

/// Largest entrywise relative difference between two matrices on the same
/// pattern. Entries smaller than `row_floor` times the largest entry of their
/// row are measured against that floor instead of their own magnitude.
pub fn max_relative_difference(a: &SparseMatrix, b: &SparseMatrix, row_floor: f64) -> f64 {
    assert!(a.same_pattern(b), "patterns differ");
    let mut worst = 0.0f64;
    for r in 0..a.nrows() {
        let (_, va) = a.row(r);
        let (_, vb) = b.row(r);
        let floor = row_floor * va.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in va.iter().zip(vb) {
            let d = (x - y).abs();
            if d > 0.0 {
                worst = worst.max(d / x.abs().max(floor));
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::VanGenuchtenParams;
    use crate::grid::{BoundarySpec, ProblemGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const VG: VanGenuchtenParams = VanGenuchtenParams::infiltration_1d();

    fn problem_1d(n: usize, kind: AverageKind) -> RichardsProblem {
        let g = ProblemGrid::new_1d(n, 40.0, 10, 0.1).unwrap();
        RichardsProblem::new(g, &BoundarySpec::with_top(-61.5, -20.7), VG, kind).unwrap()
    }

    fn problem_3d(n: usize, kind: AverageKind) -> RichardsProblem {
        let g = ProblemGrid::new_3d([n + 2; 3], [3.0, 4.0, 2.0], 10, 0.2).unwrap();
        RichardsProblem::new(g, &BoundarySpec::uniform(-50.0), VG, kind).unwrap()
    }

    fn fd_of(problem: &RichardsProblem, p: &[f64]) -> SparseMatrix {
        fd_jacobian(&stencil_pattern(problem), p, |x, out| problem.residual(x, p, out).unwrap())
    }

    #[test]
    fn coloring_counts() {
        assert_eq!(column_coloring(&stencil_pattern(&problem_1d(20, AverageKind::Arithmetic))).1, 3);
        let pattern = stencil_pattern(&problem_3d(6, AverageKind::Arithmetic));
        let (color, n) = column_coloring(&pattern);
        assert!(n <= 13);
        for r in 0..pattern.nrows() {
            let mut seen: Vec<usize> = pattern.row(r).0.iter().map(|&c| color[c]).collect();
            seen.sort_unstable();
            assert!(seen.windows(2).all(|w| w[0] != w[1]));
        }
    }

    #[test]
    fn fd_recovers_affine_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pr = problem_3d(4, AverageKind::Arithmetic);
        let mut a = stencil_pattern(&pr);
        for v in a.values_mut() {
            *v = rng.gen_range(-5.0..5.0);
        }
        let n = a.nrows();
        let fd = |p: &[f64], b: &[f64]| {
            fd_jacobian(&a, p, |x, out| {
                a.apply(x, out);
                out.iter_mut().zip(b).for_each(|(o, bi)| *o += bi);
            })
        };
        // At the origin the increments are exact up to one rounding.
        let j = fd(&vec![0.0; n], &vec![0.0; n]);
        for (x, y) in a.values().iter().zip(j.values()) {
            assert!((x - y).abs() <= 1e-10 * x.abs());
        }
        // Elsewhere cancellation costs about eps |A p| / step.
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..-1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let j = fd(&p, &b);
        for (x, y) in a.values().iter().zip(j.values()) {
            assert!((x - y).abs() <= 1e-5 * x.abs().max(1.0), "{x} {y}");
        }
    }

    #[test]
    fn one_dimensional_jacobians_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for kind in [AverageKind::Arithmetic, AverageKind::Upstream] {
            let pr = problem_1d(22, kind);
            for _ in 0..10 {
                let p: Vec<f64> = (0..20).map(|_| rng.gen_range(-100.0..-1.0)).collect();
                let j = assemble_1d(&pr, &p).unwrap().matrix;
                assert!(max_relative_difference(&j, &fd_of(&pr, &p), 1e-2) <= 1e-6);
            }
        }
    }

    #[test]
    fn three_dimensional_jacobians_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for kind in [AverageKind::Arithmetic, AverageKind::Upstream] {
            let pr = problem_3d(5, kind);
            for _ in 0..10 {
                let p: Vec<f64> = (0..pr.n()).map(|_| rng.gen_range(-100.0..-1.0)).collect();
                let j = assemble_3d(&pr, &p).unwrap().matrix;
                let e = max_relative_difference(&j, &fd_of(&pr, &p), 1e-2);
                assert!(e <= 1e-6, "{kind:?} {e}");
            }
        }
    }

    #[test]
    fn face_assembly_agrees_with_closed_forms_in_1d() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for kind in [AverageKind::Arithmetic, AverageKind::Upstream] {
            let pr = problem_1d(30, kind);
            let p: Vec<f64> = (0..28).map(|_| rng.gen_range(-100.0..-1.0)).collect();
            let closed = assemble_1d(&pr, &p).unwrap().matrix;
            let faces = assemble_faces(&pr, &p, true);
            assert!(max_relative_difference(&closed, &faces, 0.0) <= 1e-12);
        }
    }

    #[test]
    fn constant_state_entries() {
        let c = -30.0;
        let pr = RichardsProblem::new(
            ProblemGrid::new_1d(12, 40.0, 1, 0.1).unwrap(),
            &BoundarySpec::uniform(c),
            VG,
            AverageKind::Arithmetic,
        )
        .unwrap();
        let j = assemble_1d(&pr, &[c; 10]).unwrap().matrix;
        let h = pr.grid.h[2];
        let (k, dk, ds) = (VG.k(c), VG.dk(c), VG.ds(c));
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        assert!(close(j.get(4, 4), ds / 0.1 + 2.0 * k / (h * h)));
        assert!(close(j.get(4, 5), -k / (h * h) - dk / (2.0 * h)));
        assert!(close(j.get(4, 3), -k / (h * h) + dk / (2.0 * h)));

        let g = ProblemGrid::new_3d([7, 7, 7], [3.0, 4.0, 2.0], 1, 0.2).unwrap();
        let pr = RichardsProblem::new(g, &BoundarySpec::uniform(c), VG, AverageKind::Arithmetic).unwrap();
        let j = assemble_3d(&pr, &vec![c; pr.n()]).unwrap().matrix;
        let [hx, hy, _] = pr.grid.h;
        let m = pr.grid.linear_index(3, 3, 3).unwrap();
        assert!(close(j.get(m, m + 1), -k / (hx * hx)));
        assert!(close(j.get(m, m + 5), -k / (hy * hy)));
        let row_sum: f64 = j.row(m).1.iter().sum();
        assert!((row_sum - ds / 0.2).abs() <= 1e-10 * (ds / 0.2));
    }

    #[test]
    fn upstream_increasing_profile_branches() {
        let pr = problem_1d(8, AverageKind::Upstream);
        // Strictly increasing heads: every face picks its upper node.
        let p: Vec<f64> = (1..=6).map(|i| -61.5 + 5.0 * i as f64).collect();
        let j = assemble_1d(&pr, &p).unwrap().matrix;
        let h = pr.grid.h[2];
        let h2 = h * h;
        let full: Vec<f64> = [-61.5].iter().chain(&p).chain(&[-20.7]).copied().collect();
        for i in 1..=6 {
            let (pm, pc, pp) = (full[i - 1], full[i], full[i + 1]);
            let zeta = VG.ds(pc) / 0.1 + (pc - pm) * VG.dk(pc) / h2 + (VG.k(pc) + VG.k(pp)) / h2;
            assert!((j.get(i - 1, i - 1) - zeta).abs() <= 1e-12 * zeta.abs());
            if i < 6 {
                let xi = -VG.dk(pp) / (2.0 * h) - VG.k(pp) / h2 - (pp - pc) * VG.dk(pp) / h2;
                assert!((j.get(i - 1, i) - xi).abs() <= 1e-12 * xi.abs());
            }
            if i > 1 {
                let eta = VG.dk(pm) / (2.0 * h) - VG.k(pc) / h2;
                assert!((j.get(i - 1, i - 2) - eta).abs() <= 1e-12 * eta.abs());
            }
        }
    }

    #[test]
    fn diffusion_plus_gravity_is_the_jacobian() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for kind in [AverageKind::Arithmetic, AverageKind::Upstream] {
            for pr in [problem_1d(40, kind), problem_3d(5, kind)] {
                let p: Vec<f64> = (0..pr.n()).map(|_| rng.gen_range(-100.0..-1.0)).collect();
                let j = assemble(&pr, &p).unwrap().matrix;
                let d = diffusion_preconditioner_matrix(&pr, &p).unwrap();
                let sum = d.add_scaled(1.0, &gravity_matrix(&pr, &p)).unwrap();
                for r in 0..pr.n() {
                    for (&c, &v) in j.row(r).0.iter().zip(j.row(r).1) {
                        assert!((sum.get(r, c) - v).abs() <= 1e-12 * v.abs().max(1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn fd_fallback_for_other_averages() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let pr = problem_1d(12, AverageKind::Geometric);
        let p: Vec<f64> = (0..10).map(|_| rng.gen_range(-100.0..-1.0)).collect();
        assert!(assemble_1d(&pr, &p).is_err());
        let j = assemble(&pr, &p).unwrap();
        assert_eq!(j.matrix.nnz(), 28);
        let d = diffusion_preconditioner_matrix(&pr, &p).unwrap();
        assert_eq!(d.nnz(), 28);
    }

    #[test]
    fn constant_state_diffusion_matrix_is_symmetric_toeplitz() {
        let c = -30.0;
        let pr = RichardsProblem::new(
            ProblemGrid::new_1d(10, 40.0, 1, 0.1).unwrap(),
            &BoundarySpec::uniform(c),
            VG,
            AverageKind::Arithmetic,
        )
        .unwrap();
        let d = diffusion_preconditioner_matrix(&pr, &[c; 8]).unwrap();
        let h2 = pr.grid.h[2] * pr.grid.h[2];
        for i in 0..8 {
            assert!((d.get(i, i) - (VG.ds(c) / 0.1 + 2.0 * VG.k(c) / h2)).abs() < 1e-12);
            if i + 1 < 8 {
                assert_eq!(d.get(i, i + 1), d.get(i + 1, i));
                assert!((d.get(i, i + 1) + VG.k(c) / h2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn perturbation_sign_follows_diagonal() {
        let pr = problem_3d(4, AverageKind::Arithmetic);
        let p: Vec<f64> = (0..pr.n()).map(|m| -40.0 + (m as f64 * 0.7).sin()).collect();
        let j = assemble_3d(&pr, &p).unwrap().matrix;
        let base = pr.residual_vec(&p, &p).unwrap();
        let m = 21;
        let mut q = p.clone();
        q[m] += 1e-6;
        let pert = pr.residual_vec(&q, &p).unwrap();
        let change = pert[m] - base[m];
        assert_eq!(change.signum(), (j.get(m, m) * 1e-6).signum());
    }
}
