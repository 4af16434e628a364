//! Scenario files.
//!
//! A scenario is a small TOML document with `key = value` pairs grouped in
//! sections. Unknown keys are rejected, and every range check names the
//! offending key.

use std::fmt;
use std::path::Path;

use richards_core::grid::{BoundaryKind, BoundarySpec, ProblemGrid};
use richards_core::newton::{LineSearchConfig, NewtonConfig};
use richards_core::precond::amg::CoarseSolverKind;
use richards_core::precond::{PrecondKind, PrecondOptions, PrecondTarget};
use richards_core::{AverageKind, RichardsProblem, VanGenuchtenParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::KitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[serde(rename = "simulate_1d")]
    Simulate1d,
    #[serde(rename = "simulate_3d")]
    Simulate3d,
    #[serde(rename = "spectrum_1d")]
    Spectrum1d,
    PrecondSweep,
    AsEquivalence,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Simulate1d => "simulate_1d",
            Self::Simulate3d => "simulate_3d",
            Self::Spectrum1d => "spectrum_1d",
            Self::PrecondSweep => "precond_sweep",
            Self::AsEquivalence => "as_equivalence",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SoilSection {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub a: f64,
    pub s_s: f64,
    pub s_r: f64,
    pub k_s: f64,
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default = "one")]
    pub phi: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for SoilSection {
    fn default() -> Self {
        let p = VanGenuchtenParams::infiltration_1d();
        Self { alpha: p.alpha, beta: p.beta, gamma: p.gamma, a: p.a, s_s: p.s_s, s_r: p.s_r, k_s: p.k_s, rho: p.rho, phi: p.phi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    UniformDirichlet,
    TopPatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Nodes along x and y; both absent for a 1D column.
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub nz: usize,
    pub lx: Option<f64>,
    pub ly: Option<f64>,
    pub lz: f64,
    pub nt: usize,
    pub dt: f64,
    pub h_r: f64,
    /// Top Dirichlet value of a uniform problem; defaults to `h_r`.
    pub h_top: Option<f64>,
    /// Initial head; defaults to `h_r`.
    pub p0: Option<f64>,
    #[serde(default = "default_bc")]
    pub bc_kind: BcKind,
    #[serde(default = "default_patch")]
    pub patch: [f64; 4],
    #[serde(default = "one")]
    pub alpha_bc: f64,
    #[serde(default = "default_average")]
    pub average: String,
}

fn default_bc() -> BcKind {
    BcKind::UniformDirichlet
}

fn default_patch() -> [f64; 4] {
    [0.25, 0.75, 0.25, 0.75]
}

fn default_average() -> String {
    "upstream".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSection {
    pub eta: f64,
    pub ftol: f64,
    pub max_iter: usize,
    pub reuse_period: usize,
    pub step_growth: f64,
    pub tiny_step: f64,
    /// Uniform entry of the solution scaling `D_u`.
    pub u_scale: f64,
    /// Uniform entry of the residual scaling `D_F`.
    pub f_scale: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
}

impl Default for NewtonSection {
    fn default() -> Self {
        let c = NewtonConfig::default();
        Self {
            eta: c.eta,
            ftol: c.ftol,
            max_iter: c.max_iter,
            reuse_period: c.reuse_period,
            step_growth: c.step_growth,
            tiny_step: c.tiny_step,
            u_scale: 1.0,
            f_scale: 1.0,
            gmres_restart: c.gmres_restart,
            gmres_max_iter: c.gmres_max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrecondSection {
    pub precond: String,
    pub blocks: usize,
    pub overlap: usize,
    pub theta: f64,
    pub coarse_stop: usize,
    pub smoothed: bool,
    /// `diffusion` or `jacobian`.
    pub target: String,
    /// `pcg` or `dense`.
    pub coarse: String,
    pub reuse_hierarchy: bool,
}

impl Default for PrecondSection {
    fn default() -> Self {
        let o = PrecondOptions::default();
        Self {
            precond: o.kind.name().into(),
            blocks: o.blocks,
            overlap: o.overlap,
            theta: o.theta,
            coarse_stop: o.coarse_stop,
            smoothed: o.smoothed,
            target: "diffusion".into(),
            coarse: "pcg".into(),
            reuse_hierarchy: o.reuse_hierarchy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    /// `(time step, Newton iterate)` pairs at which the Jacobian is recorded.
    pub pairs: Vec<[usize; 2]>,
    pub n_theta: usize,
    /// Interface averages to analyse.
    pub averages: Vec<String>,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { pairs: vec![[1, 1], [5, 2], [10, 1]], n_theta: 64, averages: vec!["arithmetic".into(), "upstream".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub preconds: Vec<String>,
    /// Horizontal node counts; empty means the grid section as given.
    pub sizes: Vec<usize>,
    /// Horizontal extent per node for sized runs (`l = extent_per_node * n`).
    pub extent_per_node: Option<f64>,
    /// Nodes per subdomain side for block Jacobi and Schwarz in sized runs;
    /// the block count then grows with the horizontal area.
    pub subdomain_nodes: Option<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { preconds: ["ilu0", "as", "amg_vmb", "amg_match"].map(String::from).to_vec(), sizes: Vec::new(), extent_per_node: None, subdomain_nodes: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub soil: SoilSection,
    pub grid: GridSection,
    #[serde(default)]
    pub newton: NewtonSection,
    #[serde(default)]
    pub precond: PrecondSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

pub fn parse_average(s: &str) -> Option<AverageKind> {
    [AverageKind::Arithmetic, AverageKind::Geometric, AverageKind::Upstream, AverageKind::Integral]
        .into_iter()
        .find(|k| k.name() == s)
}

fn range(key: &str, ok: bool, value: impl fmt::Display) -> Result<(), KitError> {
    if ok {
        Ok(())
    } else {
        Err(KitError::Range { key: key.into(), value: value.to_string() })
    }
}

fn positive(key: &str, v: f64) -> Result<(), KitError> {
    range(key, v > 0.0 && v.is_finite(), v)
}

impl Scenario {
    pub fn from_str(text: &str) -> Result<Self, KitError> {
        let s: Scenario = toml::from_str(text).map_err(|e| KitError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: &Path) -> Result<Self, KitError> {
        let text = std::fs::read_to_string(path).map_err(|e| KitError::Io(format!("{}: {e}", path.display())))?;
        Self::from_str(&text).map_err(|e| match e {
            KitError::Parse(m) => KitError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn is_3d(&self) -> bool {
        self.grid.nx.is_some() || self.grid.ny.is_some()
    }

    /// Checks every range before any computation starts.
    pub fn validate(&self) -> Result<(), KitError> {
        let s = &self.soil;
        positive("soil.alpha", s.alpha)?;
        positive("soil.a", s.a)?;
        range("soil.beta", s.beta > 1.0, s.beta)?;
        range("soil.gamma", s.gamma > 1.0, s.gamma)?;
        positive("soil.k_s", s.k_s)?;
        range("soil.s_s", s.s_s <= 1.0 && s.s_s > s.s_r, s.s_s)?;
        range("soil.s_r", s.s_r >= 0.0, s.s_r)?;
        positive("soil.rho", s.rho)?;
        positive("soil.phi", s.phi)?;

        let g = &self.grid;
        range("grid.nz", g.nz >= 3, g.nz)?;
        positive("grid.lz", g.lz)?;
        positive("grid.dt", g.dt)?;
        range("grid.h_r", g.h_r.is_finite(), g.h_r)?;
        for (key, v) in [("grid.h_top", g.h_top), ("grid.p0", g.p0)] {
            if let Some(v) = v {
                range(key, v.is_finite(), v)?;
            }
        }
        if self.is_3d() {
            for (key, n) in [("grid.nx", g.nx), ("grid.ny", g.ny)] {
                let n = n.ok_or_else(|| KitError::Missing(key.into()))?;
                range(key, n >= 3, n)?;
            }
            for (key, l) in [("grid.lx", g.lx), ("grid.ly", g.ly)] {
                positive(key, l.ok_or_else(|| KitError::Missing(key.into()))?)?;
            }
        } else if g.bc_kind == BcKind::TopPatch {
            return Err(KitError::Range { key: "grid.bc_kind".into(), value: "top_patch needs nx and ny".into() });
        }
        let [x0, x1, y0, y1] = g.patch;
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        range("grid.patch", unit(x0) && unit(x1) && unit(y0) && unit(y1) && x0 <= x1 && y0 <= y1, format!("{:?}", g.patch))?;
        positive("grid.alpha_bc", g.alpha_bc)?;
        range("grid.average", parse_average(&g.average).is_some(), &g.average)?;

        let n = &self.newton;
        range("newton.eta", n.eta > 0.0 && n.eta < 1.0, n.eta)?;
        positive("newton.ftol", n.ftol)?;
        range("newton.max_iter", n.max_iter > 0, n.max_iter)?;
        range("newton.reuse_period", n.reuse_period > 0, n.reuse_period)?;
        positive("newton.step_growth", n.step_growth)?;
        positive("newton.tiny_step", n.tiny_step)?;
        positive("newton.u_scale", n.u_scale)?;
        positive("newton.f_scale", n.f_scale)?;
        range("newton.gmres_restart", n.gmres_restart > 0, n.gmres_restart)?;
        range("newton.gmres_max_iter", n.gmres_max_iter > 0, n.gmres_max_iter)?;

        let p = &self.precond;
        range("precond.precond", PrecondKind::from_name(&p.precond).is_some(), &p.precond)?;
        range("precond.blocks", p.blocks > 0, p.blocks)?;
        range("precond.theta", p.theta >= 0.0 && p.theta < 1.0, p.theta)?;
        range("precond.coarse_stop", p.coarse_stop > 0, p.coarse_stop)?;
        range("precond.target", matches!(p.target.as_str(), "diffusion" | "jacobian"), &p.target)?;
        range("precond.coarse", matches!(p.coarse.as_str(), "pcg" | "dense"), &p.coarse)?;

        let sp = &self.spectrum;
        range("spectrum.n_theta", sp.n_theta >= 2, sp.n_theta)?;
        for a in &sp.averages {
            range("spectrum.averages", parse_average(a).is_some(), a)?;
        }
        let spectrum_run = self.experiment.kind == ExperimentKind::Spectrum1d;
        for pair in sp.pairs.iter().filter(|_| spectrum_run) {
            range("spectrum.pairs", pair[0] >= 1 && pair[0] <= g.nt, format!("{pair:?}"))?;
        }

        let sw = &self.sweep;
        for k in &sw.preconds {
            range("sweep.preconds", PrecondKind::from_name(k).is_some(), k)?;
        }
        for &m in &sw.sizes {
            range("sweep.sizes", m >= 3, m)?;
        }
        if let Some(h) = sw.extent_per_node {
            positive("sweep.extent_per_node", h)?;
        }
        if let Some(m) = sw.subdomain_nodes {
            range("sweep.subdomain_nodes", m > 0, m)?;
        }

        let needs_3d = self.experiment.kind == ExperimentKind::Simulate3d || !sw.sizes.is_empty();
        let needs_1d = matches!(self.experiment.kind, ExperimentKind::Simulate1d | ExperimentKind::Spectrum1d);
        if needs_3d && !self.is_3d() {
            return Err(KitError::Missing("grid.nx".into()));
        }
        if needs_1d && self.is_3d() {
            return Err(KitError::Range { key: "grid.nx".into(), value: format!("{} is a 1D experiment", self.experiment.kind) });
        }
        Ok(())
    }

    pub fn params(&self) -> VanGenuchtenParams {
        let s = &self.soil;
        VanGenuchtenParams {
            alpha: s.alpha,
            beta: s.beta,
            gamma: s.gamma,
            a: s.a,
            s_s: s.s_s,
            s_r: s.s_r,
            k_s: s.k_s,
            rho: s.rho,
            phi: s.phi,
            ..VanGenuchtenParams::infiltration_1d()
        }
    }

    pub fn average(&self) -> AverageKind {
        parse_average(&self.grid.average).expect("validated")
    }

    pub fn boundary(&self) -> BoundarySpec {
        let g = &self.grid;
        let kind = match g.bc_kind {
            BcKind::UniformDirichlet => BoundaryKind::UniformDirichlet,
            BcKind::TopPatch => BoundaryKind::TopPatch,
        };
        BoundarySpec { kind, h_r: g.h_r, h_top: g.h_top, alpha_bc: g.alpha_bc, patch: g.patch }
    }

    /// Mesh with the horizontal node count optionally overridden (sweeps).
    pub fn grid_with(&self, horizontal: Option<usize>) -> Result<ProblemGrid, KitError> {
        let g = &self.grid;
        let grid = if self.is_3d() {
            let nx = horizontal.unwrap_or(g.nx.expect("validated"));
            let ny = horizontal.unwrap_or(g.ny.expect("validated"));
            let (lx, ly) = match (horizontal, self.sweep.extent_per_node) {
                (Some(_), Some(c)) => (c * nx as f64, c * ny as f64),
                _ => (g.lx.expect("validated"), g.ly.expect("validated")),
            };
            ProblemGrid::new_3d([nx, ny, g.nz], [lx, ly, g.lz], g.nt, g.dt)
        } else {
            ProblemGrid::new_1d(g.nz, g.lz, g.nt, g.dt)
        };
        grid.map_err(|e| KitError::Core(e.to_string()))
    }

    pub fn problem(&self) -> Result<RichardsProblem, KitError> {
        self.problem_with(None, self.average())
    }

    pub fn problem_with(&self, horizontal: Option<usize>, average: AverageKind) -> Result<RichardsProblem, KitError> {
        let grid = self.grid_with(horizontal)?;
        RichardsProblem::new(grid, &self.boundary(), self.params(), average).map_err(|e| KitError::Core(e.to_string()))
    }

    pub fn initial_field(&self, problem: &RichardsProblem) -> Vec<f64> {
        vec![self.grid.p0.unwrap_or(self.grid.h_r); problem.n()]
    }

    pub fn newton_config(&self, n: usize) -> NewtonConfig {
        let s = &self.newton;
        let scale = |v: f64| if v == 1.0 { Vec::new() } else { vec![v; n] };
        NewtonConfig {
            eta: s.eta,
            ftol: s.ftol,
            max_iter: s.max_iter,
            reuse_period: s.reuse_period,
            step_growth: s.step_growth,
            tiny_step: s.tiny_step,
            d_u: scale(s.u_scale),
            d_f: scale(s.f_scale),
            line_search: LineSearchConfig::default(),
            gmres_restart: s.gmres_restart,
            gmres_max_iter: s.gmres_max_iter,
        }
    }

    pub fn precond_options(&self) -> PrecondOptions {
        self.precond_options_for(PrecondKind::from_name(&self.precond.precond).expect("validated"))
    }

    pub fn precond_options_for(&self, kind: PrecondKind) -> PrecondOptions {
        let p = &self.precond;
        PrecondOptions {
            kind,
            target: if p.target == "jacobian" { PrecondTarget::Jacobian } else { PrecondTarget::Diffusion },
            blocks: p.blocks,
            overlap: p.overlap,
            theta: p.theta,
            coarse_stop: p.coarse_stop,
            smoothed: p.smoothed,
            coarse: if p.coarse == "dense" { CoarseSolverKind::Dense } else { CoarseSolverKind::default() },
            reuse_hierarchy: p.reuse_hierarchy,
        }
    }

    /// SHA-256 of the canonical serialization, in hex.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
