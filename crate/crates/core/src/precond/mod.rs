//! Preconditioners for the Newton linear systems.

pub mod aggregation;
pub mod amg;
pub mod ilu;
pub mod schwarz;

use thiserror::Error;

use crate::krylov::Preconditioner;
use crate::sparse::SparseMatrix;
use amg::{AggregationKind, Amg, AmgConfig, CoarseSolverKind};
use ilu::Ilu0;
use schwarz::{AdditiveSchwarz, SubdomainPartition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrecondError {
    #[error("zero or missing pivot in row {row}")]
    ZeroPivot { row: usize },
    #[error("matrix dimensions do not match")]
    Dimension,
    #[error("matrix pattern differs from the one the preconditioner was built for")]
    PatternMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecondKind {
    None,
    #[default]
    Ilu0,
    BlockJacobi,
    AdditiveSchwarz,
    AmgVmb,
    AmgMatching,
}

impl PrecondKind {
    pub const ALL: [Self; 6] =
        [Self::None, Self::Ilu0, Self::BlockJacobi, Self::AdditiveSchwarz, Self::AmgVmb, Self::AmgMatching];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Ilu0 => "ilu0",
            Self::BlockJacobi => "bjac",
            Self::AdditiveSchwarz => "as",
            Self::AmgVmb => "amg_vmb",
            Self::AmgMatching => "amg_match",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_amg(self) -> bool {
        matches!(self, Self::AmgVmb | Self::AmgMatching)
    }
}

/// Matrix the preconditioner is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecondTarget {
    /// Jacobian without the gravity (transport) term.
    #[default]
    Diffusion,
    Jacobian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecondOptions {
    pub kind: PrecondKind,
    pub target: PrecondTarget,
    /// Number of subdomains for block Jacobi and additive Schwarz.
    pub blocks: usize,
    /// Overlap layers for additive Schwarz.
    pub overlap: usize,
    pub theta: f64,
    pub coarse_stop: usize,
    pub smoothed: bool,
    pub coarse: CoarseSolverKind,
    /// Keep the AMG hierarchy and only refresh the finest-level smoother
    /// when the Jacobian is rebuilt.
    pub reuse_hierarchy: bool,
}

impl Default for PrecondOptions {
    fn default() -> Self {
        Self {
            kind: PrecondKind::default(),
            target: PrecondTarget::default(),
            blocks: 4,
            overlap: 1,
            theta: 0.08,
            coarse_stop: 200,
            smoothed: false,
            coarse: CoarseSolverKind::default(),
            reuse_hierarchy: true,
        }
    }
}

impl PrecondOptions {
    pub fn amg_config(&self) -> AmgConfig {
        let aggregation = match self.kind {
            PrecondKind::AmgMatching => AggregationKind::Matching,
            _ => AggregationKind::Vmb { theta: self.theta },
        };
        AmgConfig {
            aggregation,
            coarse_stop: self.coarse_stop,
            smoothed: self.smoothed,
            coarse: self.coarse,
            ..AmgConfig::default()
        }
    }
}

/// Splits `m` into `bx * by` with `bx <= by` as close to square as possible.
pub fn near_square_factors(m: usize) -> (usize, usize) {
    let m = m.max(1);
    let mut bx = 1;
    let mut d = 1;
    while d * d <= m {
        if m % d == 0 {
            bx = d;
        }
        d += 1;
    }
    (bx, m / bx)
}

#[derive(Debug, Clone)]
pub enum BuiltPreconditioner {
    Identity,
    Ilu(Ilu0),
    Schwarz(AdditiveSchwarz),
    Amg(Amg),
}

impl Preconditioner for BuiltPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Self::Identity => z.copy_from_slice(r),
            Self::Ilu(m) => m.apply(r, z),
            Self::Schwarz(m) => m.apply(r, z),
            Self::Amg(m) => m.apply(r, z),
        }
    }
}

/// Builds and refreshes the preconditioner each time Newton assembles a
/// new Jacobian.
#[derive(Debug, Clone)]
pub struct PreconditionerFactory {
    options: PrecondOptions,
    interior: [usize; 3],
    built: Option<BuiltPreconditioner>,
    pub builds: usize,
    pub updates: usize,
}

impl PreconditionerFactory {
    /// `interior` is the lexicographic interior grid shape, `[1, 1, n]` in 1D.
    pub fn new(options: PrecondOptions, interior: [usize; 3]) -> Self {
        Self { options, interior, built: None, builds: 0, updates: 0 }
    }

    pub fn options(&self) -> &PrecondOptions {
        &self.options
    }

    pub fn current(&self) -> Option<&BuiltPreconditioner> {
        self.built.as_ref()
    }

    pub fn partition(&self, n: usize) -> SubdomainPartition {
        let [ni, nj, _] = self.interior;
        if ni * nj <= 1 {
            SubdomainPartition::contiguous(n, self.options.blocks)
        } else {
            let (bx, by) = near_square_factors(self.options.blocks);
            SubdomainPartition::columns(self.interior, bx, by)
        }
    }

    pub fn refresh(&mut self, jacobian: &SparseMatrix, diffusion: &SparseMatrix) -> Result<(), PrecondError> {
        let a = match self.options.target {
            PrecondTarget::Diffusion => diffusion,
            PrecondTarget::Jacobian => jacobian,
        };
        if self.options.reuse_hierarchy {
            if let Some(BuiltPreconditioner::Amg(amg)) = &mut self.built {
                if amg.update_smoothers(a).is_ok() {
                    self.updates += 1;
                    return Ok(());
                }
            }
        }
        let o = &self.options;
        let built = match o.kind {
            PrecondKind::None => BuiltPreconditioner::Identity,
            PrecondKind::Ilu0 => BuiltPreconditioner::Ilu(Ilu0::new(a)?),
            PrecondKind::BlockJacobi => {
                BuiltPreconditioner::Schwarz(AdditiveSchwarz::new(a, &self.partition(a.nrows()))?)
            }
            PrecondKind::AdditiveSchwarz => {
                let part = self.partition(a.nrows()).with_overlap(a, o.overlap);
                BuiltPreconditioner::Schwarz(AdditiveSchwarz::new(a, &part)?)
            }
            PrecondKind::AmgVmb | PrecondKind::AmgMatching => BuiltPreconditioner::Amg(Amg::new(a, o.amg_config())?),
        };
        self.built = Some(built);
        self.builds += 1;
        Ok(())
    }
}

impl Preconditioner for PreconditionerFactory {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match &self.built {
            Some(m) => m.apply(r, z),
            None => z.copy_from_slice(r),
        }
    }
}
