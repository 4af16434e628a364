//! Backward Euler finite-difference operator `Phi`.
//!
//! For an interior node the residual is
//! `rho phi (s(p) - s(p_old)) / dt + sum over axes (q_+ - q_-) + f`, where the
//! face flux towards the upper neighbour is `-K_av (p_+ - p) / h^2`, and along
//! `z` each face flux also carries `-K(p_neighbour) / (2 h_z)`.

use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;
use thiserror::Error;

use crate::constitutive::{ConstitutiveError, VanGenuchtenParams};
use crate::grid::{BoundarySpec, Dim, GridError, ProblemGrid};
use crate::quadrature::integrate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidualError {
    #[error("expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error("average `{0:?}` has no analytic Jacobian")]
    UnsupportedAverage(AverageKind),
}

/// Interface conductivity rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AverageKind {
    Arithmetic,
    Geometric,
    Upstream,
    Integral,
}

impl AverageKind {
    pub fn name(self) -> &'static str {
        match self {
            AverageKind::Arithmetic => "arithmetic",
            AverageKind::Geometric => "geometric",
            AverageKind::Upstream => "upstream",
            AverageKind::Integral => "integral",
        }
    }

    pub fn has_analytic_jacobian(self) -> bool {
        matches!(self, AverageKind::Arithmetic | AverageKind::Upstream)
    }
}

/// Conductivity on the face between a lower node (`p_l`) and the next node
/// up the axis (`p_u`).
pub fn interface_k(p_l: f64, p_u: f64, kind: AverageKind, params: &VanGenuchtenParams) -> f64 {
    face_k(p_l, p_u, params.k(p_l), params.k(p_u), kind, params)
}

#[inline]
fn face_k(p_l: f64, p_u: f64, k_l: f64, k_u: f64, kind: AverageKind, vg: &VanGenuchtenParams) -> f64 {
    match kind {
        AverageKind::Arithmetic => 0.5 * (k_l + k_u),
        AverageKind::Geometric => sqrt(k_l * k_u),
        AverageKind::Upstream => {
            if p_u - p_l >= 0.0 {
                k_u
            } else {
                k_l
            }
        }
        AverageKind::Integral => {
            if p_l == p_u {
                k_u
            } else {
                integrate(&|p| vg.k(p), p_l, p_u, 1e-12 * vg.k_s) / (p_u - p_l)
            }
        }
    }
}

/// A discretized problem: mesh, soil, averaging rule and Dirichlet data.
#[derive(Debug, Clone)]
pub struct RichardsProblem {
    pub grid: ProblemGrid,
    pub params: VanGenuchtenParams,
    pub average: AverageKind,
    /// Multiply the time term by `rho phi` in 1D (always applied in 3D).
    pub include_rho_phi: bool,
    boundary: Vec<f64>,
    source: Option<Vec<f64>>,
}

impl RichardsProblem {
    pub fn new(
        grid: ProblemGrid,
        spec: &BoundarySpec,
        params: VanGenuchtenParams,
        average: AverageKind,
    ) -> Result<Self, ResidualError> {
        params.validate()?;
        spec.validate()?;
        let boundary = spec.node_values(&grid);
        Ok(Self { grid, params, average, include_rho_phi: false, boundary, source: None })
    }

    /// Replace the Dirichlet data by an explicit full node array (interior
    /// entries are ignored).
    pub fn with_node_values(mut self, values: Vec<f64>) -> Result<Self, ResidualError> {
        check_len(self.grid.n_nodes(), values.len())?;
        self.boundary = values;
        Ok(self)
    }

    pub fn with_source(mut self, f: Vec<f64>) -> Result<Self, ResidualError> {
        check_len(self.grid.n_interior(), f.len())?;
        self.source = Some(f);
        Ok(self)
    }

    pub fn with_average(mut self, average: AverageKind) -> Self {
        self.average = average;
        self
    }

    pub fn n(&self) -> usize {
        self.grid.n_interior()
    }

    pub fn node_values(&self) -> &[f64] {
        &self.boundary
    }

    /// Multiplier of `(s - s_old) / dt`.
    pub fn storage_factor(&self) -> f64 {
        match self.grid.dim {
            Dim::Three => self.params.rho * self.params.phi,
            Dim::One if self.include_rho_phi => self.params.rho * self.params.phi,
            Dim::One => 1.0,
        }
    }

    /// Full node array holding `p` inside and Dirichlet data outside.
    pub fn scatter(&self, p: &[f64]) -> Vec<f64> {
        let mut full = self.boundary.clone();
        for (m, node) in self.grid.interior_nodes().into_iter().enumerate() {
            full[node] = p[m];
        }
        full
    }

    /// `Phi(p_new)` given the previous time level `p_old`.
    pub fn residual(&self, p_new: &[f64], p_old: &[f64], out: &mut [f64]) -> Result<(), ResidualError> {
        self.evaluate(p_new, p_old, out, true)
    }

    /// Residual with the gravity terms removed (pure diffusion).
    pub fn diffusion_residual(
        &self,
        p_new: &[f64],
        p_old: &[f64],
        out: &mut [f64],
    ) -> Result<(), ResidualError> {
        self.evaluate(p_new, p_old, out, false)
    }

    pub fn residual_vec(&self, p_new: &[f64], p_old: &[f64]) -> Result<Vec<f64>, ResidualError> {
        let mut out = vec![0.0; self.n()];
        self.residual(p_new, p_old, &mut out)?;
        Ok(out)
    }

    fn evaluate(
        &self,
        p_new: &[f64],
        p_old: &[f64],
        out: &mut [f64],
        gravity: bool,
    ) -> Result<(), ResidualError> {
        let n = self.n();
        check_len(n, p_new.len())?;
        check_len(n, p_old.len())?;
        check_len(n, out.len())?;
        match self.grid.dim {
            Dim::One => self.residual_1d(p_new, p_old, out, gravity),
            Dim::Three => self.residual_3d(p_new, p_old, out, gravity),
        }
        if let Some(f) = &self.source {
            for (o, fi) in out.iter_mut().zip(f) {
                *o += fi;
            }
        }
        Ok(())
    }

    fn residual_1d(&self, p: &[f64], p_old: &[f64], out: &mut [f64], gravity: bool) {
        let vg = &self.params;
        let n = p.len();
        let h = self.grid.h[2];
        let (h2, g) = (h * h, if gravity { 1.0 / (2.0 * h) } else { 0.0 });
        let c = self.storage_factor() / self.grid.dt;
        let (bottom, top) = (self.boundary[0], self.boundary[n + 1]);
        let at = |m: isize| -> f64 {
            if m < 0 {
                bottom
            } else if m as usize >= n {
                top
            } else {
                p[m as usize]
            }
        };
        for i in 0..n {
            let (pm, pc, pp) = (at(i as isize - 1), p[i], at(i as isize + 1));
            let (km, kc, kp) = (vg.k(pm), vg.k(pc), vg.k(pp));
            let k_up = face_k(pc, pp, kc, kp, self.average, vg);
            let k_dn = face_k(pm, pc, km, kc, self.average, vg);
            let q_up = -k_up * (pp - pc) / h2 - g * kp;
            let q_dn = -k_dn * (pc - pm) / h2 - g * km;
            out[i] = c * (vg.s(pc) - vg.s(p_old[i])) + q_up - q_dn;
        }
    }

    fn residual_3d(&self, p: &[f64], p_old: &[f64], out: &mut [f64], gravity: bool) {
        let vg = &self.params;
        let full = self.scatter(p);
        let kfull: Vec<f64> = full.iter().map(|&v| vg.k(v)).collect();
        let [nx, ny, _] = self.grid.n;
        let stride = [1, nx, nx * ny];
        let inv_h2 = self.grid.h.map(|h| 1.0 / (h * h));
        let g = if gravity { 1.0 / (2.0 * self.grid.h[2]) } else { 0.0 };
        let c = self.storage_factor() / self.grid.dt;
        for (m, node) in self.grid.interior_nodes().into_iter().enumerate() {
            let (pc, kc) = (full[node], kfull[node]);
            let mut acc = c * (vg.s(pc) - vg.s(p_old[m]));
            for d in 0..3 {
                let (lo, hi) = (node - stride[d], node + stride[d]);
                let (pm, pp) = (full[lo], full[hi]);
                let k_up = face_k(pc, pp, kc, kfull[hi], self.average, vg);
                let k_dn = face_k(pm, pc, kfull[lo], kc, self.average, vg);
                acc += -k_up * (pp - pc) * inv_h2[d] + k_dn * (pc - pm) * inv_h2[d];
                if d == 2 {
                    acc += -g * kfull[hi] + g * kfull[lo];
                }
            }
            out[m] = acc;
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), ResidualError> {
    if expected == got {
        Ok(())
    } else {
        Err(ResidualError::SizeMismatch { expected, got })
    }
}
