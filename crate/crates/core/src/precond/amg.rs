//! Aggregation-based algebraic multigrid V-cycle.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::OnceCell;

use super::aggregation::{matching_aggregate, vmb_aggregate, AggregationMap};
use super::ilu::Ilu0;
use super::PrecondError;
use crate::dense::DenseLu;
use crate::krylov::{norm2, pcg, Preconditioner};
use crate::sparse::{triple_product, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AggregationKind {
    Vmb { theta: f64 },
    Matching,
}

impl AggregationKind {
    fn aggregate(self, a: &SparseMatrix) -> AggregationMap {
        match self {
            Self::Vmb { theta } => vmb_aggregate(a, theta),
            Self::Matching => matching_aggregate(a),
        }
    }
}

/// Solver on the coarsest level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoarseSolverKind {
    /// ILU(0)-preconditioned CG; falls back to dense LU if CG breaks down.
    Pcg { tol: f64, max_iter: usize },
    Dense,
}

impl Default for CoarseSolverKind {
    fn default() -> Self {
        Self::Pcg { tol: 1e-4, max_iter: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmgConfig {
    pub aggregation: AggregationKind,
    /// Stop coarsening once a level has at most this many dofs.
    pub coarse_stop: usize,
    /// Apply one damped Jacobi sweep to the tentative prolongator.
    pub smoothed: bool,
    pub coarse: CoarseSolverKind,
    pub max_levels: usize,
}

impl Default for AmgConfig {
    fn default() -> Self {
        Self {
            aggregation: AggregationKind::Vmb { theta: 0.08 },
            coarse_stop: 200,
            smoothed: false,
            coarse: CoarseSolverKind::default(),
            max_levels: 25,
        }
    }
}

#[derive(Debug, Clone)]
struct Level {
    a: SparseMatrix,
    diag: Vec<f64>,
    /// Prolongator to this level from the next coarser one.
    p: Option<SparseMatrix>,
    r: Option<SparseMatrix>,
}

impl Level {
    fn new(a: SparseMatrix) -> Self {
        let diag = a.diagonal();
        Self { a, diag, p: None, r: None }
    }
}

#[derive(Debug, Clone)]
enum CoarseSolver {
    Pcg { a: SparseMatrix, ilu: Ilu0, tol: f64, max_iter: usize, fallback: OnceCell<Option<DenseLu>> },
    Dense(Option<DenseLu>),
}

impl CoarseSolver {
    fn build(a: &SparseMatrix, kind: CoarseSolverKind) -> Self {
        match kind {
            CoarseSolverKind::Pcg { tol, max_iter } => match Ilu0::new(a) {
                Ok(ilu) => Self::Pcg { a: a.clone(), ilu, tol, max_iter, fallback: OnceCell::new() },
                Err(_) => Self::Dense(dense_lu(a)),
            },
            CoarseSolverKind::Dense => Self::Dense(dense_lu(a)),
        }
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        match self {
            Self::Pcg { a, ilu, tol, max_iter, fallback } => match pcg(a, b, ilu, *tol, *max_iter) {
                Ok((sol, _)) if sol.iter().all(|v| v.is_finite()) => x.copy_from_slice(&sol),
                _ => solve_dense(fallback.get_or_init(|| dense_lu(a)).as_ref(), b, x),
            },
            Self::Dense(lu) => solve_dense(lu.as_ref(), b, x),
        }
    }
}

fn dense_lu(a: &SparseMatrix) -> Option<DenseLu> {
    DenseLu::factor(a.nrows(), a.to_dense())
}

fn solve_dense(lu: Option<&DenseLu>, b: &[f64], x: &mut [f64]) {
    match lu {
        Some(lu) => lu.solve(b, x),
        None => x.iter_mut().for_each(|v| *v = 0.0),
    }
}

/// Multigrid hierarchy applied as one V(1,1)-cycle per preconditioner call.
#[derive(Debug, Clone)]
pub struct Amg {
    levels: Vec<Level>,
    coarse: CoarseSolver,
    config: AmgConfig,
    stagnated: bool,
}

impl Amg {
    pub fn new(a: &SparseMatrix, config: AmgConfig) -> Result<Self, PrecondError> {
        if a.nrows() != a.ncols() {
            return Err(PrecondError::Dimension);
        }
        let mut levels = vec![Level::new(a.clone())];
        let mut stagnated = false;
        while levels.len() < config.max_levels {
            let fine = levels.last().expect("at least one level");
            let n = fine.a.nrows();
            if n <= config.coarse_stop {
                break;
            }
            let map = config.aggregation.aggregate(&fine.a);
            if map.count >= n || map.count == 0 {
                stagnated = true;
                break;
            }
            let mut p = map.tentative_prolongator();
            if config.smoothed {
                p = smooth_prolongator(&fine.a, &fine.diag, &p);
            }
            let coarse = triple_product(&p, &fine.a).map_err(|_| PrecondError::Dimension)?;
            let last = levels.last_mut().expect("at least one level");
            last.r = Some(p.transpose());
            last.p = Some(p);
            levels.push(Level::new(coarse));
        }
        let coarse = CoarseSolver::build(&levels.last().expect("at least one level").a, config.coarse);
        Ok(Self { levels, coarse, config, stagnated })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.a.nrows()).collect()
    }

    /// Operator of level `l` (0 is the finest).
    pub fn operator(&self, l: usize) -> &SparseMatrix {
        &self.levels[l].a
    }

    /// Prolongator from level `l + 1` to level `l`; `None` on the coarsest.
    pub fn prolongator(&self, l: usize) -> Option<&SparseMatrix> {
        self.levels[l].p.as_ref()
    }

    /// Sum of nonzeros over all levels relative to the finest.
    pub fn operator_complexity(&self) -> f64 {
        let total: usize = self.levels.iter().map(|l| l.a.nnz()).sum();
        total as f64 / self.levels[0].a.nnz().max(1) as f64
    }

    /// True if coarsening stopped because aggregation made no progress.
    pub fn stagnated(&self) -> bool {
        self.stagnated
    }

    pub fn config(&self) -> &AmgConfig {
        &self.config
    }

    /// Swaps in a new finest-level matrix with the same pattern and keeps
    /// the coarse hierarchy.
    pub fn update_smoothers(&mut self, a: &SparseMatrix) -> Result<(), PrecondError> {
        if !self.levels[0].a.same_pattern(a) {
            return Err(PrecondError::PatternMismatch);
        }
        self.levels[0] = Level { p: self.levels[0].p.take(), r: self.levels[0].r.take(), ..Level::new(a.clone()) };
        if self.levels.len() == 1 {
            self.coarse = CoarseSolver::build(a, self.config.coarse);
        }
        Ok(())
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        let level = &self.levels[l];
        let (Some(p), Some(r)) = (&level.p, &level.r) else {
            self.coarse.solve(b, x);
            return;
        };
        x.iter_mut().for_each(|v| *v = 0.0);
        gauss_seidel(&level.a, &level.diag, b, x, true);
        let mut res = vec![0.0; b.len()];
        level.a.apply(x, &mut res);
        for (ri, bi) in res.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let mut bc = vec![0.0; r.nrows()];
        r.apply(&res, &mut bc);
        let mut xc = vec![0.0; bc.len()];
        self.cycle(l + 1, &bc, &mut xc);
        let mut corr = vec![0.0; b.len()];
        p.apply(&xc, &mut corr);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi += ci;
        }
        gauss_seidel(&level.a, &level.diag, b, x, false);
    }
}

impl Preconditioner for Amg {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.cycle(0, r, z);
    }
}

/// One Gauss-Seidel sweep, forward or backward.
fn gauss_seidel(a: &SparseMatrix, diag: &[f64], b: &[f64], x: &mut [f64], backward: bool) {
    let n = a.nrows();
    let mut step = |i: usize| {
        if diag[i] == 0.0 {
            return;
        }
        let (cols, vals) = a.row(i);
        let mut s = b[i];
        for (&c, &v) in cols.iter().zip(vals) {
            if c != i {
                s -= v * x[c];
            }
        }
        x[i] = s / diag[i];
    };
    if backward {
        (0..n).rev().for_each(&mut step);
    } else {
        (0..n).for_each(&mut step);
    }
}

/// Spectral radius estimate of `D^{-1} A` from 20 power iterations.
pub fn jacobi_spectral_radius(a: &SparseMatrix, diag: &[f64]) -> f64 {
    let n = a.nrows();
    // Deterministic start vector with components of both signs.
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let mut w = vec![0.0; n];
    let mut rho = 0.0;
    for _ in 0..20 {
        let nv = norm2(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        a.apply(&v, &mut w);
        for (wi, d) in w.iter_mut().zip(diag) {
            *wi = if *d != 0.0 { *wi / d } else { 0.0 };
        }
        rho = norm2(&w);
        core::mem::swap(&mut v, &mut w);
    }
    rho
}

/// `(I - omega D^{-1} A) P` with `omega = 4 / (3 rho(D^{-1} A))`.
fn smooth_prolongator(a: &SparseMatrix, diag: &[f64], p: &SparseMatrix) -> SparseMatrix {
    let rho = jacobi_spectral_radius(a, diag);
    if !(rho > 0.0 && rho.is_finite()) {
        return p.clone();
    }
    let omega = 4.0 / (3.0 * rho);
    let mut ap = a.matmul(p).expect("conforming shapes");
    let rp = ap.row_ptr().to_vec();
    let vals = ap.values_mut();
    for (i, d) in diag.iter().enumerate() {
        let s = if *d != 0.0 { 1.0 / d } else { 0.0 };
        for v in &mut vals[rp[i]..rp[i + 1]] {
            *v *= s;
        }
    }
    p.add_scaled(-omega, &ap).expect("conforming shapes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{gmres, GmresConfig, IdentityPreconditioner};
    use crate::precond::testing::{laplacian_1d, laplacian_3d, random_vector};

    fn iterations<M: Preconditioner>(a: &SparseMatrix, m: &M) -> usize {
        let b = random_vector(a.nrows(), 11);
        let cfg = GmresConfig { restart: 30, tol: 1e-8, max_iter: 500 };
        let (_, rep) = gmres(a, &b, None, m, &cfg).unwrap();
        assert!(rep.converged);
        rep.iterations
    }

    #[test]
    fn spectral_radius_of_jacobi_laplacian() {
        // eigenvalues of D^{-1} A for the 1D Laplacian are 1 - cos(k pi/(n+1))
        let a = laplacian_1d(40);
        let rho = jacobi_spectral_radius(&a, &a.diagonal());
        let exact = 1.0 - libm::cos(40.0 * core::f64::consts::PI / 41.0);
        assert!(rho <= exact * (1.0 + 1e-12));
        assert!(rho > 0.9 * exact);
    }

    #[test]
    fn coarse_matrices_are_galerkin_products() {
        let a = laplacian_3d(8);
        let amg = Amg::new(&a, AmgConfig { coarse_stop: 20, ..Default::default() }).unwrap();
        assert!(amg.num_levels() >= 2);
        let sizes = amg.level_sizes();
        assert!(sizes.windows(2).all(|w| w[1] < w[0]));
        let p = amg.levels[0].p.as_ref().unwrap();
        let ac = triple_product(p, &a).unwrap();
        let diff = ac.add_scaled(-1.0, &amg.levels[1].a).unwrap();
        assert!(diff.frobenius_norm() < 1e-12 * ac.frobenius_norm());
        // Galerkin coarse operators of an SPD matrix stay symmetric.
        let t = amg.levels[1].a.transpose();
        assert!(t.add_scaled(-1.0, &amg.levels[1].a).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn smoothed_prolongator_preserves_constants_away_from_boundary() {
        let a = laplacian_1d(30);
        let map = vmb_aggregate(&a, 0.08);
        let p = smooth_prolongator(&a, &a.diagonal(), &map.tentative_prolongator());
        let ones = vec![1.0; map.count];
        let pe = p.spmv(&ones).unwrap();
        // A 1 = 0 in the interior rows, so the smoothed prolongator keeps 1 there.
        for v in &pe[1..29] {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vcycle_is_an_effective_preconditioner() {
        let a = laplacian_3d(12);
        let none = iterations(&a, &IdentityPreconditioner);
        for aggregation in [AggregationKind::Vmb { theta: 0.08 }, AggregationKind::Matching] {
            for coarse in [CoarseSolverKind::default(), CoarseSolverKind::Dense] {
                let cfg = AmgConfig { aggregation, coarse, coarse_stop: 50, ..Default::default() };
                let amg = Amg::new(&a, cfg).unwrap();
                assert!(amg.num_levels() >= 2);
                let it = iterations(&a, &amg);
                assert!(it * 3 < none, "{aggregation:?} {coarse:?}: {it} vs {none}");
            }
        }
    }

    #[test]
    fn mesh_independent_iteration_counts() {
        let counts: Vec<usize> = [8, 16]
            .iter()
            .map(|&m| {
                let a = laplacian_3d(m);
                iterations(&a, &Amg::new(&a, AmgConfig { coarse_stop: 50, ..Default::default() }).unwrap())
            })
            .collect();
        assert!(counts[1] <= counts[0] + 4, "{counts:?}");
    }

    #[test]
    fn single_level_solves_exactly() {
        let a = laplacian_1d(50);
        let amg = Amg::new(&a, AmgConfig { coarse: CoarseSolverKind::Dense, ..Default::default() }).unwrap();
        assert_eq!(amg.num_levels(), 1);
        assert_eq!(iterations(&a, &amg), 1);
    }

    #[test]
    fn update_smoothers_checks_pattern() {
        let a = laplacian_3d(8);
        let mut amg = Amg::new(&a, AmgConfig { coarse_stop: 50, ..Default::default() }).unwrap();
        let mut b = a.clone();
        b.scale(2.0);
        amg.update_smoothers(&b).unwrap();
        assert_eq!(amg.levels[0].diag[0], 12.0);
        let c = laplacian_3d(8).add_scaled(1.0, &SparseMatrix::zeros(512, 512)).unwrap();
        assert!(amg.update_smoothers(&c).is_ok());
        assert_eq!(amg.update_smoothers(&laplacian_1d(512)), Err(PrecondError::PatternMismatch));
    }

    #[test]
    fn dense_fallback_handles_indefinite_coarse() {
        // CG sees zero curvature on this system; dense LU answers instead.
        let a = SparseMatrix::from_dense(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(pcg(&a, &[1.0, 1.0], &Ilu0::new(&a).unwrap(), 1e-4, 30).is_err());
        let s = CoarseSolver::build(&a, CoarseSolverKind::default());
        let mut x = vec![0.0; 2];
        s.solve(&[1.0, 1.0], &mut x);
        assert_eq!(x, vec![1.0, -1.0]);
    }

    /// Anisotropic variable-coefficient 7-point operator (SPD M-matrix).
    fn anisotropic(m: usize, seed: u64) -> SparseMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..m * m * m).map(|_| libm::pow(10.0, rng.gen_range(-2.0..0.0))).collect();
        let id = |i: usize, j: usize, k: usize| i + m * (j + m * k);
        let mut t = Vec::new();
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let r = id(i, j, k);
                    let mut diag = 1e-6;
                    let mut nb = [None; 6];
                    if i > 0 { nb[0] = Some((id(i - 1, j, k), 1e-3)); }
                    if i + 1 < m { nb[1] = Some((id(i + 1, j, k), 1e-3)); }
                    if j > 0 { nb[2] = Some((id(i, j - 1, k), 1e-3)); }
                    if j + 1 < m { nb[3] = Some((id(i, j + 1, k), 1e-3)); }
                    if k > 0 { nb[4] = Some((id(i, j, k - 1), 1.0)); }
                    if k + 1 < m { nb[5] = Some((id(i, j, k + 1), 1.0)); }
                    for (q, w) in nb.into_iter().flatten() {
                        let a = w * 2.0 * c[r] * c[q] / (c[r] + c[q]);
                        t.push((r, q, -a));
                        diag += a;
                    }
                    // Dirichlet faces
                    diag += if k == 0 || k + 1 == m { c[r] } else { 0.0 };
                    t.push((r, r, diag));
                }
            }
        }
        SparseMatrix::from_triplets(m * m * m, m * m * m, &t).unwrap()
    }

    #[test]
    fn vcycle_contracts_on_anisotropic_spd() {
        let a = anisotropic(10, 3);
        let b = random_vector(a.nrows(), 4);
        for aggregation in [AggregationKind::Vmb { theta: 0.08 }, AggregationKind::Matching] {
            for smoothed in [true, false] {
                let cfg = AmgConfig { aggregation, smoothed, coarse: CoarseSolverKind::Dense, coarse_stop: 50, ..Default::default() };
                let amg = Amg::new(&a, cfg).unwrap();
                let mut x = vec![0.0; b.len()];
                let mut r = b.clone();
                let mut z = vec![0.0; b.len()];
                for _ in 0..20 {
                    amg.apply(&r, &mut z);
                    x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
                    a.apply(&x, &mut r);
                    r.iter_mut().zip(&b).for_each(|(ri, bi)| *ri = bi - *ri);
                }
                let red = norm2(&r) / norm2(&b);
                assert!(red < 0.1, "{aggregation:?} smoothed={smoothed}: {red}");
            }
        }
    }

    #[test]
    fn unsmoothed_laplacian_coarsens_by_three() {
        let a = laplacian_1d(27);
        let cfg = AmgConfig { coarse_stop: 3, ..Default::default() };
        let amg = Amg::new(&a, cfg).unwrap();
        assert_eq!(amg.level_sizes(), vec![27, 9, 3]);
        for l in &amg.levels[..2] {
            let p = l.p.as_ref().unwrap();
            let ones = vec![1.0; p.nrows()];
            let mut sizes = vec![0.0; p.ncols()];
            p.transpose().apply(&ones, &mut sizes);
            assert!(sizes.iter().all(|&s| s == 3.0));
        }
    }

    #[test]
    fn smoothed_prolongator_matches_damped_jacobi_of_ones() {
        let a = laplacian_3d(6);
        let d = a.diagonal();
        let map = vmb_aggregate(&a, 0.08);
        let p = smooth_prolongator(&a, &d, &map.tentative_prolongator());
        let omega = 4.0 / (3.0 * jacobi_spectral_radius(&a, &d));
        let ones = vec![1.0; a.nrows()];
        let a1 = a.spmv(&ones).unwrap();
        let pe = p.spmv(&vec![1.0; map.count]).unwrap();
        for i in 0..a.nrows() {
            assert!((pe[i] - (1.0 - omega * a1[i] / d[i])).abs() < 1e-12);
        }
    }

    fn dense_symmetric_cycle_check(a: &SparseMatrix, cfg: AmgConfig) {
        let amg = Amg::new(a, cfg).unwrap();
        assert!(amg.num_levels() >= 3);
        let n = a.nrows();
        for seed in 0..5 {
            let x = random_vector(n, 2 * seed);
            let y = random_vector(n, 2 * seed + 1);
            let (mut vx, mut vy) = (vec![0.0; n], vec![0.0; n]);
            amg.apply(&x, &mut vx);
            amg.apply(&y, &mut vy);
            let lhs: f64 = vx.iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(&vy).map(|(a, b)| a * b).sum();
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{lhs} {rhs}");
        }
    }

    #[test]
    fn vcycle_is_symmetric_on_spd_input() {
        for aggregation in [AggregationKind::Vmb { theta: 0.08 }, AggregationKind::Matching] {
            for smoothed in [false, true] {
                let cfg = AmgConfig { aggregation, smoothed, coarse: CoarseSolverKind::Dense, coarse_stop: 10, ..Default::default() };
                dense_symmetric_cycle_check(&laplacian_3d(8), cfg);
            }
        }
    }

    #[test]
    fn error_propagation_contracts_on_1d_model() {
        let a = laplacian_1d(100);
        for smoothed in [false, true] {
            let amg = Amg::new(&a, AmgConfig { smoothed, coarse_stop: 5, ..Default::default() }).unwrap();
            for seed in 0..10 {
                let e = random_vector(100, 40 + seed);
                let mut ae = vec![0.0; 100];
                a.apply(&e, &mut ae);
                let mut vae = vec![0.0; 100];
                amg.apply(&ae, &mut vae);
                let next: Vec<f64> = e.iter().zip(&vae).map(|(x, y)| x - y).collect();
                assert!(norm2(&next) < norm2(&e), "smoothed={smoothed} seed={seed}");
            }
        }
    }

    #[test]
    fn one_level_hierarchy_is_the_coarse_pcg() {
        let a = laplacian_1d(50);
        let amg = Amg::new(&a, AmgConfig::default()).unwrap();
        assert_eq!(amg.num_levels(), 1);
        let b = random_vector(50, 5);
        let mut z = vec![0.0; 50];
        amg.apply(&b, &mut z);
        let (x, _) = pcg(&a, &b, &Ilu0::new(&a).unwrap(), 1e-4, 30).unwrap();
        assert_eq!(z, x);
    }

    #[test]
    fn update_with_same_matrix_is_bitwise_identical() {
        let a = laplacian_3d(8);
        let cfg = AmgConfig { coarse_stop: 50, ..Default::default() };
        let fresh = Amg::new(&a, cfg).unwrap();
        let mut updated = fresh.clone();
        updated.update_smoothers(&a).unwrap();
        let b = random_vector(a.nrows(), 9);
        let (mut x, mut y) = (vec![0.0; b.len()], vec![0.0; b.len()]);
        fresh.apply(&b, &mut x);
        updated.apply(&b, &mut y);
        assert_eq!(x, y);
    }

    #[test]
    fn stale_hierarchy_still_preconditions_richards_jacobian() {
        use crate::constitutive::VanGenuchtenParams;
        use crate::grid::{BoundarySpec, ProblemGrid};
        use crate::jacobian::{assemble, diffusion_preconditioner_matrix};
        use crate::residual::{AverageKind, RichardsProblem};
        let grid = ProblemGrid::new_1d(400, 40.0, 1, 0.1).unwrap();
        let spec = BoundarySpec::with_top(-61.5, -20.7);
        let pr = RichardsProblem::new(grid, &spec, VanGenuchtenParams::infiltration_1d(), AverageKind::Upstream).unwrap();
        let p: Vec<f64> = (0..pr.n()).map(|i| -61.5 + 40.8 * (i as f64 / pr.n() as f64).powi(4)).collect();
        let m = diffusion_preconditioner_matrix(&pr, &p).unwrap();
        let j = assemble(&pr, &p).unwrap().matrix;
        let cfg = AmgConfig { coarse_stop: 20, ..Default::default() };
        let mut m2 = m.clone();
        m2.scale(2.0);
        let mut stale = Amg::new(&m, cfg).unwrap();
        stale.update_smoothers(&m2).unwrap();
        let fresh = Amg::new(&m2, cfg).unwrap();
        let b = random_vector(pr.n(), 17);
        let (mut x, mut y) = (vec![0.0; b.len()], vec![0.0; b.len()]);
        stale.apply(&b, &mut x);
        fresh.apply(&b, &mut y);
        assert_ne!(x, y);
        let gcfg = GmresConfig { restart: 10, tol: 1e-7, max_iter: 1000 };
        let (_, rep) = gmres(&j, &b, None, &stale, &gcfg).unwrap();
        assert!(rep.converged);
    }
}
