//! Precomputed cell/edge geometry.
//!
//! For every cell `K`: area `|K|` and centroid `x_K`. For every edge `σ`:
//! length `|σ|` and midpoint. For every (cell, side) pair: the outward unit
//! normal `n_{K,σ}`, the orthogonal distance `d_{K,σ}` from `x_K` to the
//! line supporting `σ`, and the hull sub-volume `|D_{K,σ}| = |σ| d_{K,σ}/2`.
//! Cells must be star-shaped with respect to their centroid (`d_{K,σ} > 0`),
//! which holds for every convex cell, including ones with straight-angle
//! vertices.

use super::{MeshError, PolytopalMesh};

/// Geometry quantities derived from a [`PolytopalMesh`].
#[derive(Debug, Clone)]
pub struct GeometryCache {
    cell_area: Vec<f64>,
    cell_center: Vec<[f64; 2]>,
    edge_length: Vec<f64>,
    edge_midpoint: Vec<[f64; 2]>,
    // Indexed per cell, aligned with the cell's side ordering.
    normals: Vec<Vec<[f64; 2]>>,
    distances: Vec<Vec<f64>>,
    subvolumes: Vec<Vec<f64>>,
}

impl GeometryCache {
    /// Computes all cached quantities, rejecting degenerate cells.
    pub fn new(mesh: &PolytopalMesh) -> Result<Self, MeshError> {
        let verts = mesh.vertices();
        let nc = mesh.n_cells();
        let mut cell_area = Vec::with_capacity(nc);
        let mut cell_center = Vec::with_capacity(nc);
        let mut normals = Vec::with_capacity(nc);
        let mut distances = Vec::with_capacity(nc);
        let mut subvolumes = Vec::with_capacity(nc);

        for (ci, cell) in mesh.cells().iter().enumerate() {
            let k = cell.len();
            let mut area2 = 0.0;
            let mut cx = 0.0;
            let mut cy = 0.0;
            for j in 0..k {
                let p = verts[cell.vertices[j]];
                let q = verts[cell.vertices[(j + 1) % k]];
                let w = p[0] * q[1] - q[0] * p[1];
                area2 += w;
                cx += (p[0] + q[0]) * w;
                cy += (p[1] + q[1]) * w;
            }
            let area = area2 / 2.0;
            if !(area > 0.0) || !area.is_finite() {
                return Err(MeshError::Degenerate {
                    cell: ci,
                    message: format!("area {area} is not positive"),
                });
            }
            let center = [cx / (3.0 * area2), cy / (3.0 * area2)];

            let mut cell_normals = Vec::with_capacity(k);
            let mut cell_dist = Vec::with_capacity(k);
            let mut cell_sub = Vec::with_capacity(k);
            for j in 0..k {
                let p = verts[cell.vertices[j]];
                let q = verts[cell.vertices[(j + 1) % k]];
                let t = [q[0] - p[0], q[1] - p[1]];
                let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
                if len == 0.0 {
                    return Err(MeshError::Degenerate {
                        cell: ci,
                        message: format!("side {j} has zero length"),
                    });
                }
                // CCW loop ⇒ outward normal is the tangent rotated by −π/2.
                let n = [t[1] / len, -t[0] / len];
                let d = (p[0] - center[0]) * n[0] + (p[1] - center[1]) * n[1];
                if !(d > 0.0) {
                    return Err(MeshError::Degenerate {
                        cell: ci,
                        message: format!(
                            "centre-to-side distance {d} on side {j}: cell is not \
                             star-shaped with respect to its centroid"
                        ),
                    });
                }
                cell_normals.push(n);
                cell_dist.push(d);
                cell_sub.push(len * d / 2.0);
            }
            cell_area.push(area);
            cell_center.push(center);
            normals.push(cell_normals);
            distances.push(cell_dist);
            subvolumes.push(cell_sub);
        }

        let mut edge_length = Vec::with_capacity(mesh.n_edges());
        let mut edge_midpoint = Vec::with_capacity(mesh.n_edges());
        for e in mesh.edges() {
            let p = verts[e.vertices.0];
            let q = verts[e.vertices.1];
            edge_length.push(((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt());
            edge_midpoint.push([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]);
        }

        Ok(Self {
            cell_area,
            cell_center,
            edge_length,
            edge_midpoint,
            normals,
            distances,
            subvolumes,
        })
    }

    /// Cell area `|K|`.
    pub fn cell_area(&self, cell: usize) -> f64 {
        self.cell_area[cell]
    }

    /// Cell centroid `x_K`.
    pub fn cell_center(&self, cell: usize) -> [f64; 2] {
        self.cell_center[cell]
    }

    /// Edge length `|σ|`.
    pub fn edge_length(&self, edge: usize) -> f64 {
        self.edge_length[edge]
    }

    /// Edge midpoint `x̄_σ`.
    pub fn edge_midpoint(&self, edge: usize) -> [f64; 2] {
        self.edge_midpoint[edge]
    }

    /// Outward unit normal of side `side` of `cell`.
    pub fn normal(&self, cell: usize, side: usize) -> [f64; 2] {
        self.normals[cell][side]
    }

    /// Orthogonal distance `d_{K,σ}` from the centroid to side `side`.
    pub fn distance(&self, cell: usize, side: usize) -> f64 {
        self.distances[cell][side]
    }

    /// Hull sub-volume `|D_{K,σ}|` of side `side`.
    pub fn subvolume(&self, cell: usize, side: usize) -> f64 {
        self.subvolumes[cell][side]
    }

    /// Total meshed area `Σ_K |K|`.
    pub fn total_area(&self) -> f64 {
        self.cell_area.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::testutil::{two_triangle_square, unit_triangle};
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_triangle_quantities() {
        let m = unit_triangle();
        let g = GeometryCache::new(&m).unwrap();
        assert_abs_diff_eq!(g.cell_area(0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.cell_center(0)[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.cell_center(0)[1], 1.0 / 3.0, epsilon = 1e-15);
        // The hypotenuse is side 1 of the loop (0,0) → (1,0) → (0,1).
        let n = g.normal(0, 1);
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(n[0], s, epsilon = 1e-15);
        assert_abs_diff_eq!(n[1], s, epsilon = 1e-15);
    }

    #[test]
    fn hull_decomposition_identity() {
        let m = two_triangle_square();
        let g = GeometryCache::new(&m).unwrap();
        for ci in 0..m.n_cells() {
            let total: f64 = (0..m.cells()[ci].len()).map(|j| g.subvolume(ci, j)).sum();
            assert_abs_diff_eq!(total, g.cell_area(ci), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(g.total_area(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_polygon_normal_identity() {
        let m = two_triangle_square();
        let g = GeometryCache::new(&m).unwrap();
        for (ci, cell) in m.cells().iter().enumerate() {
            let mut sum = [0.0f64; 2];
            for j in 0..cell.len() {
                let n = g.normal(ci, j);
                let len = g.edge_length(cell.edges[j]);
                sum[0] += len * n[0];
                sum[1] += len * n[1];
            }
            assert_abs_diff_eq!(sum[0], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(sum[1], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn regular_hexagon_subvolumes() {
        // One regular hexagon; the hull decomposition must tile it.
        let r = 1.0f64;
        let vertices: Vec<[f64; 2]> = (0..6)
            .map(|i| {
                let a = std::f64::consts::PI / 3.0 * i as f64;
                [r * a.cos(), r * a.sin()]
            })
            .collect();
        let m = PolytopalMesh::from_parts(vertices, vec![vec![0, 1, 2, 3, 4, 5]]).unwrap();
        let g = GeometryCache::new(&m).unwrap();
        let total: f64 = (0..6).map(|j| g.subvolume(0, j)).sum();
        assert_abs_diff_eq!(total, g.cell_area(0), epsilon = 1e-12);
        assert_abs_diff_eq!(g.cell_area(0), 1.5 * 3.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn straight_angle_vertices_are_fine() {
        // Unit square with a collinear midpoint on the bottom side; the
        // degenerate-looking corner must not trip the star-shape check.
        let m = PolytopalMesh::from_parts(
            vec![
                [0.0, 0.0],
                [0.5, 0.0],
                [1.0, 0.0],
                [1.0, 1.0],
                [0.0, 1.0],
                [0.5, -0.5],
            ],
            vec![vec![0, 1, 2, 3, 4], vec![0, 5, 1], vec![1, 5, 2]],
        )
        .unwrap();
        let g = GeometryCache::new(&m).unwrap();
        assert_abs_diff_eq!(g.cell_area(0), 1.0, epsilon = 1e-15);
        let total: f64 = (0..5).map(|j| g.subvolume(0, j)).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }
}
