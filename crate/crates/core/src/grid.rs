//! Tensor mesh, unknown numbering and Dirichlet data.
//!
//! Nodes sit at `x_i = i h_x`, `i = 0..N_x`, with `h = L / (N - 1)`; the
//! outermost layer lies on the boundary. Unknowns are the interior nodes,
//! numbered with `i` fastest, then `j`, then `k`. The `z` axis points up and
//! carries gravity. One-dimensional problems use only the `z` axis.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};
use libm::{exp, log};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("axis {axis} needs at least 3 nodes, got {n}")]
    TooFewNodes { axis: usize, n: usize },
    #[error("`{name}` must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("interior coordinate ({i}, {j}, {k}) out of range")]
    OutOfRange { i: usize, j: usize, k: usize },
    #[error("point ({x}, {y}, {z}) is not on the domain boundary")]
    NotOnBoundary { x: f64, y: f64, z: f64 },
    #[error("patch fractions must satisfy 0 <= lo <= hi <= 1, got {0:?}")]
    BadPatch([f64; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    One,
    Three,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemGrid {
    pub dim: Dim,
    /// Nodes per axis `(N_x, N_y, N_z)`; `(1, 1, N)` in 1D.
    pub n: [usize; 3],
    pub extent: [f64; 3],
    pub h: [f64; 3],
    pub nt: usize,
    pub dt: f64,
}

impl ProblemGrid {
    pub fn new_3d(n: [usize; 3], extent: [f64; 3], nt: usize, dt: f64) -> Result<Self, GridError> {
        for (axis, &na) in n.iter().enumerate() {
            if na < 3 {
                return Err(GridError::TooFewNodes { axis, n: na });
            }
        }
        for (name, &l) in ["lx", "ly", "lz"].iter().zip(extent.iter()) {
            positive(name, l)?;
        }
        positive("dt", dt)?;
        let h = [0, 1, 2].map(|d| extent[d] / (n[d] - 1) as f64);
        Ok(Self { dim: Dim::Three, n, extent, h, nt, dt })
    }

    pub fn new_1d(n: usize, length: f64, nt: usize, dt: f64) -> Result<Self, GridError> {
        if n < 3 {
            return Err(GridError::TooFewNodes { axis: 2, n });
        }
        positive("lz", length)?;
        positive("dt", dt)?;
        Ok(Self {
            dim: Dim::One,
            n: [1, 1, n],
            extent: [0.0, 0.0, length],
            h: [0.0, 0.0, length / (n - 1) as f64],
            nt,
            dt,
        })
    }

    /// Interior nodes per axis.
    pub fn interior(&self) -> [usize; 3] {
        match self.dim {
            Dim::One => [1, 1, self.n[2] - 2],
            Dim::Three => self.n.map(|n| n - 2),
        }
    }

    pub fn n_interior(&self) -> usize {
        self.interior().iter().product()
    }

    /// All nodes including the boundary layer.
    pub fn n_nodes(&self) -> usize {
        self.n.iter().product()
    }

    /// Flat unknown index of interior node `(i, j, k)` (node coordinates,
    /// starting at 1). In 1D pass `i = j = 1`.
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> Result<usize, GridError> {
        let [ni, nj, nk] = self.interior();
        let ok = |c: usize, n: usize| c >= 1 && c <= n;
        if !(ok(i, ni) && ok(j, nj) && ok(k, nk)) {
            return Err(GridError::OutOfRange { i, j, k });
        }
        Ok((i - 1) + ni * ((j - 1) + nj * (k - 1)))
    }

    /// Inverse of [`linear_index`](Self::linear_index).
    pub fn coordinates(&self, m: usize) -> Result<(usize, usize, usize), GridError> {
        let [ni, nj, nk] = self.interior();
        if m >= ni * nj * nk {
            return Err(GridError::OutOfRange { i: m, j: 0, k: 0 });
        }
        Ok((m % ni + 1, (m / ni) % nj + 1, m / (ni * nj) + 1))
    }

    /// Flat index into the full node array (boundary included).
    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        match self.dim {
            Dim::One => k,
            Dim::Three => i + self.n[0] * (j + self.n[1] * k),
        }
    }

    /// Full-array node index of each unknown, in unknown order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        let [ni, nj, nk] = self.interior();
        let mut out = Vec::with_capacity(ni * nj * nk);
        match self.dim {
            Dim::One => out.extend(1..=nk),
            Dim::Three => {
                for k in 1..=nk {
                    for j in 1..=nj {
                        for i in 1..=ni {
                            out.push(self.node_index(i, j, k));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), GridError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(GridError::NonPositive { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    UniformDirichlet,
    /// Saturating patch on the top face, `h_r` elsewhere.
    TopPatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    pub kind: BoundaryKind,
    /// Background Dirichlet value and initial head.
    pub h_r: f64,
    /// Top-face value for `UniformDirichlet`; `None` means `h_r`.
    pub h_top: Option<f64>,
    /// Exponent in the patch profile `ln(e^{a h_r} + (1 - e^{a h_r}) chi) / a`.
    pub alpha_bc: f64,
    /// Patch rectangle as fractions `[x_lo, x_hi, y_lo, y_hi]` of the top face.
    pub patch: [f64; 4],
}

impl BoundarySpec {
    pub fn uniform(h_r: f64) -> Self {
        Self {
            kind: BoundaryKind::UniformDirichlet,
            h_r,
            h_top: None,
            alpha_bc: 1.0,
            patch: [0.25, 0.75, 0.25, 0.75],
        }
    }

    pub fn with_top(h_r: f64, h_top: f64) -> Self {
        Self { h_top: Some(h_top), ..Self::uniform(h_r) }
    }

    pub fn top_patch(h_r: f64) -> Self {
        Self { kind: BoundaryKind::TopPatch, ..Self::uniform(h_r) }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let [x0, x1, y0, y1] = self.patch;
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(x0) && unit(x1) && unit(y0) && unit(y1) && x0 <= x1 && y0 <= y1) {
            return Err(GridError::BadPatch(self.patch));
        }
        positive("alpha_bc", self.alpha_bc)?;
        if !self.h_r.is_finite() || !self.h_top.unwrap_or(0.0).is_finite() {
            return Err(GridError::NonPositive { name: "h_r", value: self.h_r });
        }
        Ok(())
    }

    /// Dirichlet value at a boundary point. The data are constant in time.
    pub fn boundary_value(
        &self,
        grid: &ProblemGrid,
        x: f64,
        y: f64,
        z: f64,
        _t: f64,
    ) -> Result<f64, GridError> {
        let tol = |l: f64| 1e-12 * l.max(1.0);
        let lz = grid.extent[2];
        let top = (z - lz).abs() <= tol(lz);
        let on = match grid.dim {
            Dim::One => top || z.abs() <= tol(lz),
            Dim::Three => {
                let [lx, ly, _] = grid.extent;
                let face = |c: f64, l: f64| c.abs() <= tol(l) || (c - l).abs() <= tol(l);
                face(x, lx) || face(y, ly) || face(z, lz)
            }
        };
        if !on {
            return Err(GridError::NotOnBoundary { x, y, z });
        }
        if !top {
            return Ok(self.h_r);
        }
        Ok(match self.kind {
            BoundaryKind::UniformDirichlet => self.h_top.unwrap_or(self.h_r),
            BoundaryKind::TopPatch => {
                let [lx, ly, _] = grid.extent;
                let [x0, x1, y0, y1] = self.patch;
                let inside = |c: f64, lo: f64, hi: f64, l: f64| {
                    c >= lo * l - tol(l) && c <= hi * l + tol(l)
                };
                let chi = if grid.dim == Dim::Three
                    && inside(x, x0, x1, lx)
                    && inside(y, y0, y1, ly)
                {
                    1.0
                } else {
                    0.0
                };
                patch_profile(self.alpha_bc, self.h_r, chi)
            }
        })
    }

    /// Full node array with Dirichlet values on the boundary layer and zeros
    /// inside.
    pub fn node_values(&self, grid: &ProblemGrid) -> Vec<f64> {
        let mut out = vec![0.0; grid.n_nodes()];
        let [nx, ny, nz] = grid.n;
        let [hx, hy, hz] = grid.h;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let interior = match grid.dim {
                        Dim::One => k > 0 && k < nz - 1,
                        Dim::Three => {
                            i > 0 && i < nx - 1 && j > 0 && j < ny - 1 && k > 0 && k < nz - 1
                        }
                    };
                    if interior {
                        continue;
                    }
                    let (x, y, z) = (i as f64 * hx, j as f64 * hy, k as f64 * hz);
                    let z = if k == nz - 1 { grid.extent[2] } else { z };
                    let x = if grid.dim == Dim::Three && i == nx - 1 { grid.extent[0] } else { x };
                    let y = if grid.dim == Dim::Three && j == ny - 1 { grid.extent[1] } else { y };
                    out[grid.node_index(i, j, k)] = self
                        .boundary_value(grid, x, y, z, 0.0)
                        .expect("boundary layer node");
                }
            }
        }
        out
    }

    /// Constant initial head `h_r`.
    pub fn initial_field(&self, grid: &ProblemGrid) -> Field {
        Field(vec![self.h_r; grid.n_interior()])
    }
}

/// `(1/a) ln(e^{a h_r} + (1 - e^{a h_r}) chi)`; exact for `chi` in {0, 1}.
pub fn patch_profile(alpha: f64, h_r: f64, chi: f64) -> f64 {
    if chi == 0.0 {
        h_r
    } else if chi == 1.0 {
        0.0
    } else {
        let e = exp(alpha * h_r);
        log(e + (1.0 - e) * chi) / alpha
    }
}

/// Pressure head at the interior nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field(pub Vec<f64>);

impl Field {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g3(n: [usize; 3]) -> ProblemGrid {
        ProblemGrid::new_3d(n, [1.0, 2.0, 3.0], 1, 0.1).unwrap()
    }

    #[test]
    fn index_examples() {
        let g = g3([5, 5, 5]);
        assert_eq!(g.linear_index(1, 1, 1).unwrap(), 0);
        assert_eq!(g.linear_index(2, 1, 1).unwrap(), 1);
        assert!(g.linear_index(0, 1, 1).is_err());
        assert!(g.linear_index(4, 1, 1).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = g3([6, 7, 8]);
        let mut seen = vec![false; g.n_interior()];
        for k in 1..=6 {
            for j in 1..=5 {
                for i in 1..=4 {
                    let m = g.linear_index(i, j, k).unwrap();
                    assert!(!seen[m]);
                    seen[m] = true;
                    assert_eq!(g.coordinates(m).unwrap(), (i, j, k));
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn spacing_and_validation() {
        let g = g3([5, 9, 4]);
        assert_eq!(g.h, [0.25, 0.25, 1.0]);
        assert!(ProblemGrid::new_3d([2, 5, 5], [1.0; 3], 1, 0.1).is_err());
        assert!(ProblemGrid::new_3d([5, 5, 5], [1.0; 3], 1, 0.0).is_err());
        let g1 = ProblemGrid::new_1d(800, 40.0, 10, 0.1).unwrap();
        assert_eq!(g1.n_interior(), 798);
        assert_eq!(g1.h[2], 40.0 / 799.0);
    }

    #[test]
    fn patch_boundary_values() {
        let g = ProblemGrid::new_3d([9, 9, 5], [64.0, 64.0, 1.0], 1, 0.2).unwrap();
        let spec = BoundarySpec::top_patch(-61.5);
        assert_eq!(spec.boundary_value(&g, 32.0, 32.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(spec.boundary_value(&g, 4.0, 32.0, 1.0, 0.0).unwrap(), -61.5);
        assert_eq!(spec.boundary_value(&g, 0.0, 32.0, 0.5, 0.0).unwrap(), -61.5);
        assert_eq!(spec.boundary_value(&g, 32.0, 32.0, 0.0, 0.0).unwrap(), -61.5);
        assert!(spec.boundary_value(&g, 32.0, 32.0, 0.5, 0.0).is_err());
        let vals = spec.node_values(&g);
        let top: Vec<f64> = (0..9 * 9).map(|m| vals[m + 81 * 4]).collect();
        assert!(top.iter().all(|&v| v == 0.0 || v == -61.5));
        assert_eq!(top.iter().filter(|&&v| v == 0.0).count(), 25);
    }

    #[test]
    fn patch_profile_limits() {
        assert_eq!(patch_profile(1.0, -61.5, 0.0), -61.5);
        assert_eq!(patch_profile(1.0, -61.5, 1.0), 0.0);
        let mid = patch_profile(0.1, -5.0, 0.5);
        assert!(mid > -5.0 && mid < 0.0);
    }

    #[test]
    fn one_dimensional_data() {
        let g = ProblemGrid::new_1d(11, 40.0, 1, 0.1).unwrap();
        let spec = BoundarySpec::with_top(-61.5, -20.7);
        let v = spec.node_values(&g);
        assert_eq!(v[0], -61.5);
        assert_eq!(v[10], -20.7);
        let p0 = spec.initial_field(&g);
        assert_eq!(p0.len(), 9);
        assert!(p0.iter().all(|&p| p == -61.5));
    }
}
