//! The abstract gradient-discretisation data model, operator assembly, and
//! quality diagnostics.
//!
//! A gradient discretisation supplies three objects over a finite dof set:
//! a piecewise-constant reconstruction `Π` (each dof owns a region of
//! measure `m_i`, so `Π v = Σ v_i 1_{Θ_i}`), a piecewise-constant discrete
//! gradient `∇` (a list of *gradient regions*, each carrying a measure and
//! a constant 2-vector depending linearly on the dofs), and an
//! interpolation `I` by point evaluation at per-dof anchor points. Dirichlet
//! conditions pin the flagged boundary dofs.
//!
//! Because `Π` is piecewise constant, it commutes with superposition:
//! `Π(g(v)) = g(Π v)` holds *exactly* for any map applied componentwise —
//! the property that lets the nonlinear scheme evaluate ζ dof-by-dof.
//!
//! [`diagnostics`] quantifies how good a discretisation is: the
//! consistency defect `S(φ)`, the limit-conformity defect `W(ψ)`, and the
//! discrete Poincaré constant ρ. All three should stay bounded (ρ) or
//! decrease (S, W) under mesh refinement.

pub mod diagnostics;

use crate::linalg::CsrMatrix;
use thiserror::Error;

/// Errors from assembly and diagnostics.
#[derive(Debug, Error)]
pub enum GdmError {
    #[error("dof vector has {got} entries, discretisation has {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("diffusion tensor covers {tensor_cells} cells but region references cell {cell}")]
    TensorCellMismatch { tensor_cells: usize, cell: usize },
    #[error("diffusion tensor not positive definite on cell {cell} (eigenvalue {eigenvalue})")]
    NotElliptic { cell: usize, eigenvalue: f64 },
    #[error("diagnostic linear system: {0}")]
    Singular(#[from] crate::linalg::LinalgError),
    #[error("discretisation has no interior dofs")]
    NoInteriorDofs,
}

/// Symmetric 2×2 diffusion tensor field, constant per mesh cell.
#[derive(Debug, Clone, PartialEq)]
pub enum DiffusionTensor {
    /// Λ = Id everywhere.
    Identity,
    /// Per-cell `[Λ₁₁, Λ₁₂, Λ₂₂]` (symmetry is structural).
    PerCell(Vec<[f64; 3]>),
}

impl DiffusionTensor {
    /// Applies the tensor of `cell` to a vector.
    pub fn apply(&self, cell: usize, g: [f64; 2]) -> [f64; 2] {
        match self {
            DiffusionTensor::Identity => g,
            DiffusionTensor::PerCell(cells) => {
                let [xx, xy, yy] = cells[cell];
                [xx * g[0] + xy * g[1], xy * g[0] + yy * g[1]]
            }
        }
    }

    /// Ellipticity bounds `(μ̲, μ̄)`: the extreme eigenvalues over all cells.
    pub fn ellipticity(&self) -> (f64, f64) {
        match self {
            DiffusionTensor::Identity => (1.0, 1.0),
            DiffusionTensor::PerCell(cells) => {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for c in cells {
                    let (a, b) = eigenvalues(c);
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                (lo, hi)
            }
        }
    }

    /// Checks uniform ellipticity (μ̲ > 0).
    pub fn validate(&self) -> Result<(), GdmError> {
        if let DiffusionTensor::PerCell(cells) = self {
            for (cell, c) in cells.iter().enumerate() {
                let (lo, _) = eigenvalues(c);
                if lo <= 0.0 {
                    return Err(GdmError::NotElliptic {
                        cell,
                        eigenvalue: lo,
                    });
                }
            }
        }
        Ok(())
    }

    fn cell_count(&self) -> Option<usize> {
        match self {
            DiffusionTensor::Identity => None,
            DiffusionTensor::PerCell(c) => Some(c.len()),
        }
    }
}

/// Eigenvalues (min, max) of a symmetric 2×2 matrix `[xx, xy, yy]`.
fn eigenvalues(c: &[f64; 3]) -> (f64, f64) {
    let mid = 0.5 * (c[0] + c[2]);
    let rad = (0.25 * (c[0] - c[2]) * (c[0] - c[2]) + c[1] * c[1]).sqrt();
    (mid - rad, mid + rad)
}

/// One region of constancy of the discrete gradient.
#[derive(Debug, Clone)]
pub struct GradientRegion {
    /// Area of the region.
    pub measure: f64,
    /// Mesh cell containing the region (selects the diffusion tensor).
    pub cell: usize,
    /// Midpoint-rule quadrature node (the region centroid).
    pub quad_point: [f64; 2],
    /// Sparse coefficients: `∇v|_region = Σ coeff_i · v_i`.
    pub coeffs: Vec<(usize, [f64; 2])>,
}

impl GradientRegion {
    /// Evaluates the constant gradient of `v` on this region.
    pub fn gradient(&self, v: &[f64]) -> [f64; 2] {
        let mut g = [0.0, 0.0];
        for &(i, c) in &self.coeffs {
            g[0] += c[0] * v[i];
            g[1] += c[1] * v[i];
        }
        g
    }
}

/// Which concrete discretisation a [`GradientDiscretisation`] came from —
/// carried for the parts of post-processing that need construction details
/// (coarse-to-fine transfer, static condensation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GdKind {
    /// Vertex dofs on a triangulation, mass-lumped on the dual mesh.
    VertexP1,
    /// Cell + edge dofs on a polytopal mesh; cell dofs come first.
    HybridCellEdge { n_cells: usize, r: f64 },
}

/// A gradient discretisation: lumped masses (Π), gradient regions (∇),
/// anchors (I), and the Dirichlet mask.
#[derive(Debug, Clone)]
pub struct GradientDiscretisation {
    pub masses: Vec<f64>,
    pub regions: Vec<GradientRegion>,
    pub is_boundary: Vec<bool>,
    pub anchors: Vec<[f64; 2]>,
    pub kind: GdKind,
}

impl GradientDiscretisation {
    pub fn n_dofs(&self) -> usize {
        self.masses.len()
    }

    /// Indices of non-Dirichlet dofs.
    pub fn interior_dofs(&self) -> Vec<usize> {
        (0..self.n_dofs()).filter(|&i| !self.is_boundary[i]).collect()
    }

    /// Total measure carried by the reconstruction regions.
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Piecewise-constant reconstruction: region values are dof values.
    pub fn reconstruct(&self, v: &[f64]) -> Result<Vec<f64>, GdmError> {
        self.check_len(v)?;
        Ok(v.to_vec())
    }

    /// Interpolation by point evaluation at the anchors.
    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        self.anchors.iter().map(|&x| f(x)).collect()
    }

    /// `∫ Π v dx = Σ m_i v_i`.
    pub fn integral(&self, v: &[f64]) -> f64 {
        self.masses.iter().zip(v).map(|(m, x)| m * x).sum()
    }

    /// `‖Π v‖_{L²(Θ)}`.
    pub fn l2_norm(&self, v: &[f64]) -> f64 {
        self.masses
            .iter()
            .zip(v)
            .map(|(m, x)| m * x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// `‖∇ v‖_{L²(Θ)²}`.
    pub fn grad_norm(&self, v: &[f64]) -> f64 {
        self.regions
            .iter()
            .map(|r| {
                let g = r.gradient(v);
                r.measure * (g[0] * g[0] + g[1] * g[1])
            })
            .sum::<f64>()
            .sqrt()
    }

    fn check_len(&self, v: &[f64]) -> Result<(), GdmError> {
        if v.len() != self.n_dofs() {
            Err(GdmError::SizeMismatch {
                expected: self.n_dofs(),
                got: v.len(),
            })
        } else {
            Ok(())
        }
    }
}

/// Assembles the sparse stiffness matrix `A_ij = ∫ Λ∇e_j · ∇e_i` over all
/// dofs (boundary handling is the stepper's business). Entries are
/// assembled once per unordered pair and mirrored, so `A = Aᵀ` holds
/// bitwise.
pub fn assemble_stiffness(
    gd: &GradientDiscretisation,
    lambda: &DiffusionTensor,
) -> Result<CsrMatrix, GdmError> {
    lambda.validate()?;
    if let Some(tensor_cells) = lambda.cell_count() {
        if let Some(r) = gd.regions.iter().find(|r| r.cell >= tensor_cells) {
            return Err(GdmError::TensorCellMismatch {
                tensor_cells,
                cell: r.cell,
            });
        }
    }
    let mut triplets = Vec::new();
    for region in &gd.regions {
        for (a, &(i, ci)) in region.coeffs.iter().enumerate() {
            let lci = lambda.apply(region.cell, ci);
            for &(j, cj) in &region.coeffs[a..] {
                let val = region.measure * (lci[0] * cj[0] + lci[1] * cj[1]);
                triplets.push((i, j, val));
                if i != j {
                    triplets.push((j, i, val));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(gd.n_dofs(), triplets))
}

#[cfg(test)]
pub(crate) mod testgd {
    use super::*;

    /// A hand-made two-dof discretisation on the unit square: dof 0 interior
    /// with anchor (1/3, 1/2), dof 1 boundary. One gradient region covering
    /// the square with ∇v = (v₁ − v₀)·(1, 0) + v₀·(0, 1).
    pub fn toy_two_dof() -> GradientDiscretisation {
        GradientDiscretisation {
            masses: vec![0.5, 0.5],
            regions: vec![GradientRegion {
                measure: 1.0,
                cell: 0,
                quad_point: [0.5, 0.5],
                coeffs: vec![(0, [-1.0, 1.0]), (1, [1.0, 0.0])],
            }],
            is_boundary: vec![false, true],
            anchors: vec![[1.0 / 3.0, 0.5], [1.0, 0.5]],
            kind: GdKind::VertexP1,
        }
    }
}
