//! Vertex-centred dual mesh of a triangulation.
//!
//! Around each vertex, the dual region is bounded by segments linking the
//! midpoints of the incident edges and the centroids of the incident
//! triangles. Inside one triangle, the corner quadrilateral
//! (vertex, first midpoint, centroid, second midpoint) has exactly one third
//! of the triangle's area, so the dual volumes partition the domain.

use super::{GeometryCache, MeshError, PolytopalMesh};

/// Dual volumes and boundary flags, one entry per mesh vertex.
#[derive(Debug, Clone)]
pub struct DualMesh {
    volumes: Vec<f64>,
    boundary: Vec<bool>,
}

impl DualMesh {
    /// Builds the dual of a triangulation.
    pub fn new(mesh: &PolytopalMesh, _geom: &GeometryCache) -> Result<Self, MeshError> {
        let verts = mesh.vertices();
        let mut volumes = vec![0.0f64; mesh.n_vertices()];
        for (ci, cell) in mesh.cells().iter().enumerate() {
            if cell.len() != 3 {
                return Err(MeshError::NotTriangular(ci));
            }
            let [a, b, c] = [cell.vertices[0], cell.vertices[1], cell.vertices[2]];
            let (pa, pb, pc) = (verts[a], verts[b], verts[c]);
            let centroid = [
                (pa[0] + pb[0] + pc[0]) / 3.0,
                (pa[1] + pb[1] + pc[1]) / 3.0,
            ];
            // Midpoint/centroid corner quadrilateral per vertex, by shoelace.
            for (v, prev, next) in [(a, pc, pb), (b, pa, pc), (c, pb, pa)] {
                let p = verts[v];
                let m1 = [(p[0] + next[0]) / 2.0, (p[1] + next[1]) / 2.0];
                let m2 = [(p[0] + prev[0]) / 2.0, (p[1] + prev[1]) / 2.0];
                volumes[v] += quad_area(p, m1, centroid, m2);
            }
        }
        let boundary = (0..mesh.n_vertices())
            .map(|v| mesh.is_boundary_vertex(v))
            .collect();
        Ok(Self { volumes, boundary })
    }

    /// Dual volume of each vertex.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Whether each vertex lies on the boundary.
    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }
}

fn quad_area(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let cross = |p: [f64; 2], q: [f64; 2]| p[0] * q[1] - q[0] * p[1];
    (cross(a, b) + cross(b, c) + cross(c, d) + cross(d, a)) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::testutil::{two_triangle_square, unit_triangle};
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_triangle_thirds() {
        let m = unit_triangle();
        let g = GeometryCache::new(&m).unwrap();
        let d = DualMesh::new(&m, &g).unwrap();
        for &v in d.volumes() {
            assert_abs_diff_eq!(v, 0.5 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_triangle_square_partition() {
        let m = two_triangle_square();
        let g = GeometryCache::new(&m).unwrap();
        let d = DualMesh::new(&m, &g).unwrap();
        let total: f64 = d.volumes().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        // Vertices 0 and 2 sit on the shared diagonal: one third from each
        // of the two triangles.
        assert_abs_diff_eq!(d.volumes()[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.volumes()[2], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.volumes()[1], 1.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.volumes()[3], 1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn polygonal_cell_rejected() {
        let m = PolytopalMesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap();
        let g = GeometryCache::new(&m).unwrap();
        assert!(matches!(
            DualMesh::new(&m, &g),
            Err(MeshError::NotTriangular(0))
        ));
    }
}
