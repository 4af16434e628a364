//! One-level additive Schwarz with ILU(0) subdomain solves.
//!
//! `M^{-1} = sum_i P_i M_i^{-1} R_i`, where `R_i` restricts to the index set
//! of subdomain `i` and `M_i = R_i A P_i`.

use alloc::vec;
use alloc::vec::Vec;

use super::ilu::Ilu0;
use super::PrecondError;
use crate::krylov::Preconditioner;
use crate::sparse::SparseMatrix;

/// Non-overlapping owner blocks plus the (possibly overlapping) index set
/// each subdomain solves on.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainPartition {
    pub owner: Vec<usize>,
    pub sets: Vec<Vec<usize>>,
}

impl SubdomainPartition {
    /// Partition from an owner map; sets are the owned dofs.
    pub fn from_owner(owner: Vec<usize>, blocks: usize) -> Self {
        let mut sets = vec![Vec::new(); blocks];
        for (dof, &b) in owner.iter().enumerate() {
            sets[b].push(dof);
        }
        Self { owner, sets }
    }

    /// `m` contiguous chunks of nearly equal size.
    pub fn contiguous(n: usize, m: usize) -> Self {
        let m = m.clamp(1, n.max(1));
        let owner = (0..n).map(|i| i * m / n).collect();
        Self::from_owner(owner, m)
    }

    /// Vertical column blocks of a lexicographic `ni x nj x nk` grid, cut
    /// into `bx x by` pieces in the horizontal plane.
    pub fn columns(interior: [usize; 3], bx: usize, by: usize) -> Self {
        let [ni, nj, nk] = interior;
        let (bx, by) = (bx.clamp(1, ni), by.clamp(1, nj));
        let mut owner = Vec::with_capacity(ni * nj * nk);
        for _ in 0..nk {
            for j in 0..nj {
                for i in 0..ni {
                    owner.push(i * bx / ni + bx * (j * by / nj));
                }
            }
        }
        Self::from_owner(owner, bx * by)
    }

    pub fn blocks(&self) -> usize {
        self.sets.len()
    }

    /// Grows every set by `layers` rings of graph neighbours of `a`.
    pub fn with_overlap(mut self, a: &SparseMatrix, layers: usize) -> Self {
        let n = self.owner.len();
        let mut mark = vec![usize::MAX; n];
        for (b, set) in self.sets.iter_mut().enumerate() {
            for &d in set.iter() {
                mark[d] = b;
            }
            let mut frontier = set.clone();
            for _ in 0..layers {
                let mut next = Vec::new();
                for &d in &frontier {
                    for &c in a.row(d).0 {
                        if mark[c] != b {
                            mark[c] = b;
                            next.push(c);
                        }
                    }
                }
                set.extend_from_slice(&next);
                frontier = next;
            }
            set.sort_unstable();
        }
        self
    }
}

#[derive(Debug, Clone)]
pub struct AdditiveSchwarz {
    sets: Vec<Vec<usize>>,
    local: Vec<Ilu0>,
    n: usize,
}

impl AdditiveSchwarz {
    pub fn new(a: &SparseMatrix, partition: &SubdomainPartition) -> Result<Self, PrecondError> {
        let n = a.nrows();
        if partition.owner.len() != n {
            return Err(PrecondError::Dimension);
        }
        let mut local = Vec::with_capacity(partition.blocks());
        for set in &partition.sets {
            local.push(Ilu0::new(&a.submatrix(set)).map_err(|e| match e {
                PrecondError::ZeroPivot { row } => PrecondError::ZeroPivot { row: set[row] },
                other => other,
            })?);
        }
        Ok(Self { sets: partition.sets.clone(), local, n })
    }
}

impl Preconditioner for AdditiveSchwarz {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        debug_assert_eq!(r.len(), self.n);
        z.iter_mut().for_each(|v| *v = 0.0);
        let mut rl = Vec::new();
        let mut zl = Vec::new();
        for (set, ilu) in self.sets.iter().zip(&self.local) {
            rl.clear();
            rl.extend(set.iter().map(|&d| r[d]));
            zl.resize(set.len(), 0.0);
            ilu.solve(&rl, &mut zl);
            for (&d, v) in set.iter().zip(&zl) {
                z[d] += v;
            }
        }
    }
}
