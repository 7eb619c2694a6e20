//! Polytopal meshes of a two-dimensional domain.
//!
//! A [`PolytopalMesh`] is a conforming partition of a simply connected
//! polygonal domain into simple, counterclockwise-oriented cells. Edges are
//! derived from the cell loops: every interior edge is shared by exactly two
//! cells (traversed in opposite directions), every boundary edge by exactly
//! one. Euler's relation `V − E + C = 1` is enforced at load time.
//!
//! Conventions:
//! * vertex, edge and cell ids are 0-based and dense;
//! * a cell stores its vertex loop `v_0 … v_{k−1}` (CCW) and the matching
//!   edge ids, where side `j` connects `v_j` to `v_{j+1 mod k}`;
//! * an edge stores its endpoints as `(min, max)` plus the adjacent cells.
//!
//! [`GeometryCache`] precomputes areas, centroids, edge lengths/midpoints,
//! outward unit normals, orthogonal centre–edge distances `d_{K,σ}` and the
//! sub-volumes `|D_{K,σ}|` of the centre/edge hulls. [`DualMesh`] carries
//! the vertex-centred dual volumes of a triangulation (midpoint/centroid
//! polygons). [`CellLocator`] answers point-location queries with a
//! deterministic lowest-id tie-break on shared boundaries.

mod dual;
mod format;
mod geometry;
mod locate;

pub use dual::DualMesh;
pub use geometry::GeometryCache;
pub use locate::CellLocator;

use std::path::Path;
use thiserror::Error;

/// Errors raised while reading or validating a mesh.
#[derive(Debug, Error)]
pub enum MeshError {
    /// The file could not be read at all.
    #[error("cannot read mesh file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Malformed text: wrong token counts, unparsable numbers, bad headers.
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    /// Structurally invalid mesh: bad indices, non-manifold or duplicate
    /// cells, isolated vertices, or a violated Euler relation.
    #[error("topology error: {0}")]
    Topology(String),
    /// A cell whose vertex loop is clockwise or degenerate.
    #[error("orientation error in cell {cell}: {message}")]
    Orientation { cell: usize, message: String },
    /// A cell with non-positive area or a non-star-shaped geometry.
    #[error("degenerate cell {cell}: {message}")]
    Degenerate { cell: usize, message: String },
    /// Point-location query outside the meshed domain.
    #[error("point ({0}, {1}) lies outside the meshed domain")]
    OutsideDomain(f64, f64),
    /// An operation that requires a triangulation met a polygonal cell.
    #[error("cell {0} is not a triangle (operation requires a triangulation)")]
    NotTriangular(usize),
}

/// One edge of the mesh: endpoint vertex ids (ordered `min < max`) and the
/// one or two adjacent cells.
#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoint vertex ids with `vertices.0 < vertices.1`.
    pub vertices: (usize, usize),
    /// Cell on one side; for interior edges [`Edge::other_cell`] holds too.
    pub cell: usize,
    /// The second adjacent cell, absent on the boundary.
    pub other_cell: Option<usize>,
}

impl Edge {
    /// Whether the edge lies on the domain boundary.
    pub fn is_boundary(&self) -> bool {
        self.other_cell.is_none()
    }
}

/// One cell: its CCW vertex loop and the edge id of each side.
#[derive(Debug, Clone)]
pub struct Cell {
    /// Vertex ids, counterclockwise, no repeats.
    pub vertices: Vec<usize>,
    /// `edges[j]` joins `vertices[j]` to `vertices[(j+1) % k]`.
    pub edges: Vec<usize>,
}

impl Cell {
    /// Number of sides.
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// True only for the empty placeholder (never constructed by loaders).
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// A validated conforming polytopal mesh.
#[derive(Debug, Clone)]
pub struct PolytopalMesh {
    vertices: Vec<[f64; 2]>,
    edges: Vec<Edge>,
    cells: Vec<Cell>,
    boundary_vertex: Vec<bool>,
    bbox: ([f64; 2], [f64; 2]),
}

impl PolytopalMesh {
    /// Builds and validates a mesh from raw vertex coordinates and CCW cell
    /// vertex loops. This is the single validation path; the file loader
    /// delegates here.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        cell_loops: Vec<Vec<usize>>,
    ) -> Result<Self, MeshError> {
        if vertices.is_empty() || cell_loops.is_empty() {
            return Err(MeshError::Topology(
                "mesh needs at least one vertex and one cell".into(),
            ));
        }
        let nv = vertices.len();
        for (ci, loop_) in cell_loops.iter().enumerate() {
            if loop_.len() < 3 {
                return Err(MeshError::Topology(format!(
                    "cell {ci} has fewer than 3 vertices"
                )));
            }
            let mut seen = loop_.clone();
            seen.sort_unstable();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(MeshError::Topology(format!(
                    "cell {ci} repeats a vertex"
                )));
            }
            if let Some(&v) = loop_.iter().find(|&&v| v >= nv) {
                return Err(MeshError::Topology(format!(
                    "cell {ci} references vertex {v} out of range (V = {nv})"
                )));
            }
        }

        // Duplicate-cell detection on the canonical sorted vertex set.
        {
            let mut keys: Vec<(Vec<usize>, usize)> = cell_loops
                .iter()
                .enumerate()
                .map(|(ci, l)| {
                    let mut k = l.clone();
                    k.sort_unstable();
                    (k, ci)
                })
                .collect();
            keys.sort();
            if let Some(w) = keys.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(MeshError::Topology(format!(
                    "duplicate cells {} and {}",
                    w[0].1, w[1].1
                )));
            }
        }

        // Orientation and simplicity.
        for (ci, loop_) in cell_loops.iter().enumerate() {
            let area2 = signed_area2(&vertices, loop_);
            if area2 <= 0.0 {
                return Err(MeshError::Orientation {
                    cell: ci,
                    message: format!("signed area {} is not positive", area2 / 2.0),
                });
            }
            if loop_.len() > 3 && !is_simple(&vertices, loop_) {
                return Err(MeshError::Orientation {
                    cell: ci,
                    message: "vertex loop self-intersects".into(),
                });
            }
        }

        // Derive edges; directed traversal detects conformity violations.
        let mut edge_map: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut cells: Vec<Cell> = Vec::with_capacity(cell_loops.len());
        for (ci, loop_) in cell_loops.iter().enumerate() {
            let k = loop_.len();
            let mut cell_edges = Vec::with_capacity(k);
            for j in 0..k {
                let (a, b) = (loop_[j], loop_[(j + 1) % k]);
                let key = (a.min(b), a.max(b));
                match edge_map.get(&key) {
                    None => {
                        edge_map.insert(key, edges.len());
                        cell_edges.push(edges.len());
                        edges.push(Edge {
                            vertices: key,
                            cell: ci,
                            other_cell: None,
                        });
                    }
                    Some(&ei) => {
                        let e = &mut edges[ei];
                        if e.other_cell.is_some() {
                            return Err(MeshError::Topology(format!(
                                "edge ({}, {}) is shared by more than two cells",
                                key.0, key.1
                            )));
                        }
                        e.other_cell = Some(ci);
                        cell_edges.push(ei);
                    }
                }
            }
            cells.push(Cell {
                vertices: loop_.clone(),
                edges: cell_edges,
            });
        }

        // Conformity of shared edges: the two traversals must be opposite.
        // Because edges were keyed undirected, verify via directed multiset.
        {
            let mut directed: std::collections::HashMap<(usize, usize), usize> =
                std::collections::HashMap::new();
            for loop_ in &cell_loops {
                let k = loop_.len();
                for j in 0..k {
                    let d = (loop_[j], loop_[(j + 1) % k]);
                    *directed.entry(d).or_insert(0) += 1;
                }
            }
            for (&(a, b), &count) in &directed {
                if count > 1 || (count == 1 && directed.get(&(b, a)).copied().unwrap_or(0) > 1) {
                    return Err(MeshError::Topology(format!(
                        "directed edge ({a}, {b}) traversed {count} times: cells overlap"
                    )));
                }
            }
        }

        // Isolated vertices.
        let mut used = vec![false; nv];
        for e in &edges {
            used[e.vertices.0] = true;
            used[e.vertices.1] = true;
        }
        if let Some(v) = used.iter().position(|&u| !u) {
            return Err(MeshError::Topology(format!(
                "vertex {v} is not used by any cell (dangling)"
            )));
        }

        // Euler relation for a simply connected planar subdivision.
        let (v, e, c) = (nv as i64, edges.len() as i64, cells.len() as i64);
        if v - e + c != 1 {
            return Err(MeshError::Topology(format!(
                "Euler relation violated: V − E + C = {} − {} + {} = {} (want 1)",
                v,
                e,
                c,
                v - e + c
            )));
        }

        let mut boundary_vertex = vec![false; nv];
        for e in edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[e.vertices.0] = true;
            boundary_vertex[e.vertices.1] = true;
        }

        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }

        Ok(Self {
            vertices,
            edges,
            cells,
            boundary_vertex,
            bbox: (lo, hi),
        })
    }

    /// Loads a mesh from the plain-text format:
    ///
    /// ```text
    /// # comments
    /// vertices <V>
    /// <x> <y>              (V lines)
    /// cells <C>
    /// <k> <i0> ... <ik-1>  (C lines, 0-based CCW vertex ids)
    /// ```
    ///
    /// Triangle lists and general polygon lists share this format (`k` = 3
    /// for every cell of a triangulation).
    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        format::load(path.as_ref())
    }

    /// Vertex coordinates.
    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// All edges, interior and boundary.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// All cells.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Number of vertices.
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Number of edges.
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of cells.
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Whether vertex `v` lies on the domain boundary.
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    /// Axis-aligned bounding box `(lower, upper)` of the vertex set.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        self.bbox
    }

    /// True when every cell is a triangle.
    pub fn is_triangulation(&self) -> bool {
        self.cells.iter().all(|c| c.len() == 3)
    }

    /// Largest cell diameter (maximum vertex-pair distance within a cell);
    /// the mesh-size value reported by the experiment tables.
    pub fn max_cell_diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for cell in &self.cells {
            let k = cell.len();
            for i in 0..k {
                let p = self.vertices[cell.vertices[i]];
                for j in i + 1..k {
                    let q = self.vertices[cell.vertices[j]];
                    let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                    best = best.max(d2);
                }
            }
        }
        best.sqrt()
    }
}

/// Twice the signed area of the vertex loop (positive iff CCW).
fn signed_area2(vertices: &[[f64; 2]], loop_: &[usize]) -> f64 {
    let k = loop_.len();
    let mut s = 0.0;
    for j in 0..k {
        let p = vertices[loop_[j]];
        let q = vertices[loop_[(j + 1) % k]];
        s += p[0] * q[1] - q[0] * p[1];
    }
    s
}

/// Simplicity check: no two non-adjacent sides intersect.
fn is_simple(vertices: &[[f64; 2]], loop_: &[usize]) -> bool {
    let k = loop_.len();
    let seg = |j: usize| -> ([f64; 2], [f64; 2]) {
        (vertices[loop_[j]], vertices[loop_[(j + 1) % k]])
    };
    for a in 0..k {
        for b in a + 1..k {
            // Skip adjacent sides (they share one endpoint by construction).
            if b == a + 1 || (a == 0 && b == k - 1) {
                continue;
            }
            let (p1, p2) = seg(a);
            let (q1, q2) = seg(b);
            if segments_cross(p1, p2, q1, q2) {
                return false;
            }
        }
    }
    true
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Proper or touching intersection of two closed segments.
fn segments_cross(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: [f64; 2], b: [f64; 2], c: [f64; 2], d: f64| {
        d == 0.0
            && c[0] >= a[0].min(b[0])
            && c[0] <= a[0].max(b[0])
            && c[1] >= a[1].min(b[1])
            && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::PolytopalMesh;

    /// The unit right triangle (0,0), (1,0), (0,1) as a one-cell mesh.
    pub fn unit_triangle() -> PolytopalMesh {
        PolytopalMesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![vec![0, 1, 2]],
        )
        .unwrap()
    }

    /// The unit square split along the main diagonal into two triangles.
    pub fn two_triangle_square() -> PolytopalMesh {
        PolytopalMesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![vec![0, 1, 2], vec![0, 2, 3]],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle_counts() {
        let m = testutil::unit_triangle();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.n_edges(), 3);
        assert_eq!(m.n_vertices(), 3);
        assert!(m.is_triangulation());
        assert!(m.edges().iter().all(Edge::is_boundary));
    }

    #[test]
    fn two_triangle_square_sharing() {
        let m = testutil::two_triangle_square();
        assert_eq!((m.n_cells(), m.n_edges(), m.n_vertices()), (2, 5, 4));
        let diagonal = m
            .edges()
            .iter()
            .find(|e| e.vertices == (0, 2))
            .expect("diagonal edge");
        assert!(!diagonal.is_boundary());
        assert_eq!(diagonal.other_cell, Some(1));
        // Every vertex touches the boundary here.
        assert!((0..4).all(|v| m.is_boundary_vertex(v)));
    }

    #[test]
    fn euler_relation_enforced() {
        for m in [testutil::unit_triangle(), testutil::two_triangle_square()] {
            let lhs = m.n_vertices() as i64 - m.n_edges() as i64 + m.n_cells() as i64;
            assert_eq!(lhs, 1);
        }
    }

    #[test]
    fn clockwise_cell_rejected() {
        let err = PolytopalMesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![vec![0, 2, 1]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::Orientation { cell: 0, .. }));
    }

    #[test]
    fn duplicate_cell_rejected() {
        let err = PolytopalMesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![vec![0, 1, 2], vec![1, 2, 0]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::Topology(_)));
    }

    #[test]
    fn out_of_range_index_rejected() {
        let err = PolytopalMesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![vec![0, 1, 7]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::Topology(_)));
    }

    #[test]
    fn overlapping_cells_rejected() {
        // Two copies of the same square traversed CCW share all four
        // directed edges — caught as duplicate cells or overlap.
        let err = PolytopalMesh::from_parts(
            vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [1.0, 1.0],
                [0.0, 1.0],
                [0.5, 0.5],
            ],
            vec![vec![0, 1, 2, 3], vec![0, 1, 4]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::Topology(_)));
    }

    #[test]
    fn self_intersecting_quad_rejected() {
        // Asymmetric bowtie with positive signed area (+1): the loop
        // (0,0)→(0,1)→(2,0)→(2,2) crosses itself at (2/3, 2/3), so it must
        // be rejected even though the orientation test alone would pass.
        let err = PolytopalMesh::from_parts(
            vec![[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 1.0]],
            vec![vec![0, 3, 2, 1]],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            MeshError::Orientation { .. } | MeshError::Topology(_)
        ));
    }

    #[test]
    fn collinear_boundary_vertices_accepted() {
        // A square with a midpoint vertex on its bottom side (angle π),
        // attached to a triangle below through the two half-edges.
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
        assert_eq!(m.n_cells(), 3);
        assert_eq!(m.max_cell_diameter(), 2.0f64.sqrt());
    }
}
