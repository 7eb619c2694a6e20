//! Coarse-to-fine transfer of dof vectors by point evaluation at the fine
//! anchors.
//!
//! For every fine anchor the coarse cell containing it is located once; the
//! evaluation is then a fixed sparse affine combination of coarse dofs,
//! stored as `v[base] + Σ w_k (v[dof_k] − v[base])`. The difference form
//! makes two properties exact in floating point: constant coarse fields are
//! reproduced bitwise by every mode, and when the fine anchors coincide
//! with the coarse anchors the transfer is the identity.
//!
//! Modes:
//!
//! * [`InterpMode::GradientLinear`] — vertex discretisations evaluate the
//!   piecewise-linear function through the cell's vertex values; cell+edge
//!   discretisations extrapolate linearly from the cell value along the
//!   consistent cell gradient, `w_K + ∇_K w · (x − x_K)`.
//! * [`InterpMode::Constant`] — copy the value whose reconstruction region
//!   contains the point (the nearest vertex in barycentric terms, or the
//!   cell value). Mandatory for convex-functional quantities like Ξ, where
//!   linear extrapolation can leave the admissible range.

use super::ExperimentsError;
use crate::gdm::{GdKind, GradientDiscretisation};
use crate::mesh::{CellLocator, GeometryCache, PolytopalMesh};

/// How a located coarse cell turns into an evaluation rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpMode {
    /// Piecewise-linear evaluation (P1 through vertices, or cell value plus
    /// cell gradient).
    GradientLinear,
    /// Piecewise-constant copy of the owning reconstruction region.
    Constant,
}

/// Precomputed sparse transfer from one coarse discretisation to a set of
/// fine anchors.
#[derive(Debug, Clone)]
pub struct Interpolator {
    /// Per fine dof: base coarse dof and difference weights; the value is
    /// `v[base] + Σ w (v[dof] − v[base])`.
    entries: Vec<(usize, Vec<(usize, f64)>)>,
}

impl Interpolator {
    /// Locates every fine anchor in the coarse mesh and precomputes its
    /// evaluation weights. When the fine anchors are exactly the coarse
    /// anchors the transfer is the identity.
    pub fn new(
        coarse_mesh: &PolytopalMesh,
        coarse_geom: &GeometryCache,
        coarse_gd: &GradientDiscretisation,
        fine_anchors: &[[f64; 2]],
        mode: InterpMode,
    ) -> Result<Self, ExperimentsError> {
        if fine_anchors.len() == coarse_gd.n_dofs()
            && fine_anchors
                .iter()
                .zip(&coarse_gd.anchors)
                .all(|(a, b)| a == b)
        {
            return Ok(Self {
                entries: (0..fine_anchors.len()).map(|i| (i, Vec::new())).collect(),
            });
        }
        let locator = CellLocator::new(coarse_mesh);
        let mut entries = Vec::with_capacity(fine_anchors.len());
        for (index, &x) in fine_anchors.iter().enumerate() {
            let cell = locator.locate(coarse_mesh, x).map_err(|_| {
                ExperimentsError::Location {
                    index,
                    x: x[0],
                    y: x[1],
                }
            })?;
            entries.push(match (coarse_gd.kind, mode) {
                (GdKind::VertexP1, InterpMode::GradientLinear) => {
                    vertex_p1_weights(coarse_mesh, cell, x)
                }
                (GdKind::VertexP1, InterpMode::Constant) => {
                    nearest_vertex(coarse_mesh, cell, x)
                }
                (GdKind::HybridCellEdge { n_cells, .. }, InterpMode::GradientLinear) => {
                    cell_gradient_weights(coarse_mesh, coarse_geom, n_cells, cell, x)
                }
                (GdKind::HybridCellEdge { .. }, InterpMode::Constant) => (cell, Vec::new()),
            });
        }
        Ok(Self { entries })
    }

    /// Applies the transfer to a coarse dof vector.
    pub fn apply(&self, coarse: &[f64]) -> Vec<f64> {
        self.entries
            .iter()
            .map(|(base, weights)| {
                let b = coarse[*base];
                b + weights
                    .iter()
                    .map(|&(dof, w)| w * (coarse[dof] - b))
                    .sum::<f64>()
            })
            .collect()
    }

    /// Number of fine dofs produced.
    pub fn n_fine(&self) -> usize {
        self.entries.len()
    }
}

/// Barycentric coordinates of `x` in triangle `cell`, relative to its
/// first vertex: returns `(λ_b, λ_c)` with `λ_a = 1 − λ_b − λ_c`.
fn barycentric(mesh: &PolytopalMesh, cell: usize, x: [f64; 2]) -> (f64, f64) {
    let vs = &mesh.cells()[cell].vertices;
    let [pa, pb, pc] = [
        mesh.vertices()[vs[0]],
        mesh.vertices()[vs[1]],
        mesh.vertices()[vs[2]],
    ];
    let (ab, ac, ax) = (
        [pb[0] - pa[0], pb[1] - pa[1]],
        [pc[0] - pa[0], pc[1] - pa[1]],
        [x[0] - pa[0], x[1] - pa[1]],
    );
    let det = ab[0] * ac[1] - ab[1] * ac[0];
    let lb = (ax[0] * ac[1] - ax[1] * ac[0]) / det;
    let lc = (ab[0] * ax[1] - ab[1] * ax[0]) / det;
    (lb, lc)
}

/// P1 evaluation: `w_a + λ_b (w_b − w_a) + λ_c (w_c − w_a)`.
fn vertex_p1_weights(
    mesh: &PolytopalMesh,
    cell: usize,
    x: [f64; 2],
) -> (usize, Vec<(usize, f64)>) {
    let vs = &mesh.cells()[cell].vertices;
    let (lb, lc) = barycentric(mesh, cell, x);
    (vs[0], vec![(vs[1], lb), (vs[2], lc)])
}

/// The vertex whose dual (barycentric-majority) region owns `x`; first
/// maximum wins, making ties deterministic.
fn nearest_vertex(mesh: &PolytopalMesh, cell: usize, x: [f64; 2]) -> (usize, Vec<(usize, f64)>) {
    let vs = &mesh.cells()[cell].vertices;
    let (lb, lc) = barycentric(mesh, cell, x);
    let lambdas = [1.0 - lb - lc, lb, lc];
    let mut best = 0;
    for k in 1..3 {
        if lambdas[k] > lambdas[best] {
            best = k;
        }
    }
    (vs[best], Vec::new())
}

/// Cell-value-plus-gradient evaluation for cell+edge discretisations:
/// `w_K + Σ_σ (|σ|/|K|)(n_{K,σ}·(x − x_K))(w_σ − w_K)`, which is the
/// consistent cell gradient written in difference form (the weights sum
/// against a closed polygon, so constants are exact).
fn cell_gradient_weights(
    mesh: &PolytopalMesh,
    geom: &GeometryCache,
    n_cells: usize,
    cell: usize,
    x: [f64; 2],
) -> (usize, Vec<(usize, f64)>) {
    let xk = geom.cell_center(cell);
    let dx = [x[0] - xk[0], x[1] - xk[1]];
    let inv_area = 1.0 / geom.cell_area(cell);
    let weights = mesh.cells()[cell]
        .edges
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            let n = geom.normal(cell, j);
            let w = geom.edge_length(e) * inv_area * (n[0] * dx[0] + n[1] * dx[1]);
            (n_cells + e, w)
        })
        .collect();
    (cell, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::{build_hmm, build_mlp1};
    use crate::mesh::testutil::two_triangle_square;
    use crate::mesh::DualMesh;

    fn mlp1_square() -> (PolytopalMesh, GeometryCache, GradientDiscretisation) {
        let mesh = two_triangle_square();
        let geom = GeometryCache::new(&mesh).unwrap();
        let dual = DualMesh::new(&mesh, &geom).unwrap();
        let gd = build_mlp1(&mesh, &geom, &dual).unwrap();
        (mesh, geom, gd)
    }

    fn hmm_square(r: f64) -> (PolytopalMesh, GeometryCache, GradientDiscretisation) {
        let mesh = two_triangle_square();
        let geom = GeometryCache::new(&mesh).unwrap();
        let gd = build_hmm(&mesh, &geom, r).unwrap();
        (mesh, geom, gd)
    }

    #[test]
    fn same_anchors_give_bitwise_identity() {
        for mode in [InterpMode::GradientLinear, InterpMode::Constant] {
            let (mesh, geom, gd) = hmm_square(0.5);
            let interp = Interpolator::new(&mesh, &geom, &gd, &gd.anchors, mode).unwrap();
            let v: Vec<f64> = (0..gd.n_dofs()).map(|i| (i as f64).sin() * 3.0).collect();
            assert_eq!(interp.apply(&v), v);
        }
    }

    #[test]
    fn affine_fields_are_reproduced_exactly() {
        let f = |x: [f64; 2]| 0.75 * x[0] - 1.25 * x[1] + 0.5;
        // Vertex P1 from the coarse square to a fine point set.
        let (mesh, geom, gd) = mlp1_square();
        let targets = [[0.1, 0.05], [0.9, 0.4], [0.5, 0.5], [0.25, 0.7], [1.0, 1.0]];
        let w: Vec<f64> = gd.anchors.iter().map(|&x| f(x)).collect();
        let interp =
            Interpolator::new(&mesh, &geom, &gd, &targets, InterpMode::GradientLinear).unwrap();
        for (got, x) in interp.apply(&w).iter().zip(&targets) {
            assert!((got - f(*x)).abs() <= 1e-12, "P1 at {x:?}: {got}");
        }
        // Cell+edge: dof values are anchor values of the affine field.
        let (mesh, geom, gd) = hmm_square(0.5);
        let w: Vec<f64> = gd.anchors.iter().map(|&x| f(x)).collect();
        let interp =
            Interpolator::new(&mesh, &geom, &gd, &targets, InterpMode::GradientLinear).unwrap();
        for (got, x) in interp.apply(&w).iter().zip(&targets) {
            assert!((got - f(*x)).abs() <= 1e-12, "cell+edge at {x:?}: {got}");
        }
    }

    #[test]
    fn modes_agree_bitwise_on_constant_fields() {
        let (mesh, geom, gd) = hmm_square(0.3);
        let targets = [[0.21, 0.11], [0.7, 0.9], [0.5, 0.25]];
        let w = vec![std::f64::consts::PI; gd.n_dofs()];
        for mode in [InterpMode::GradientLinear, InterpMode::Constant] {
            let interp = Interpolator::new(&mesh, &geom, &gd, &targets, mode).unwrap();
            assert_eq!(interp.apply(&w), vec![std::f64::consts::PI; 3]);
        }
        let (mesh, geom, gd) = mlp1_square();
        let w = vec![-2.5; gd.n_dofs()];
        for mode in [InterpMode::GradientLinear, InterpMode::Constant] {
            let interp = Interpolator::new(&mesh, &geom, &gd, &targets, mode).unwrap();
            assert_eq!(interp.apply(&w), vec![-2.5; 3]);
        }
    }

    #[test]
    fn constant_mode_copies_the_owning_cell() {
        // Two coarse cells: lower-right triangle is cell 0, upper-left is
        // cell 1; the constant transfer copies the containing cell's value.
        let (mesh, geom, gd) = hmm_square(0.5);
        let mut w = vec![0.0; gd.n_dofs()];
        w[0] = 7.0;
        w[1] = -3.0;
        let targets = [[0.7, 0.2], [0.2, 0.7]];
        let interp = Interpolator::new(&mesh, &geom, &gd, &targets, InterpMode::Constant).unwrap();
        assert_eq!(interp.apply(&w), vec![7.0, -3.0]);
    }

    #[test]
    fn constant_mode_takes_barycentric_majority_vertex() {
        let (mesh, geom, gd) = mlp1_square();
        let w = vec![10.0, 20.0, 30.0, 40.0]; // vertex dof values
        // Deep inside the dual region of vertex 1 = (1, 0).
        let interp =
            Interpolator::new(&mesh, &geom, &gd, &[[0.9, 0.05]], InterpMode::Constant).unwrap();
        assert_eq!(interp.apply(&w), vec![20.0]);
        // Near (0, 0) in cell 0.
        let interp =
            Interpolator::new(&mesh, &geom, &gd, &[[0.05, 0.02]], InterpMode::Constant).unwrap();
        assert_eq!(interp.apply(&w), vec![10.0]);
    }

    #[test]
    fn outside_point_is_a_location_error() {
        let (mesh, geom, gd) = mlp1_square();
        let err = Interpolator::new(
            &mesh,
            &geom,
            &gd,
            &[[3.0, 3.0]],
            InterpMode::GradientLinear,
        )
        .unwrap_err();
        assert!(matches!(err, ExperimentsError::Location { index: 0, .. }));
    }
}
