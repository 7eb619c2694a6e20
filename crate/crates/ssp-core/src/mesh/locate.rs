//! Point location with a uniform background grid.
//!
//! Cells are binned by bounding box into a `g × g` grid sized to the mesh;
//! a query tests the candidate cells of the point's bin with an exact
//! point-in-polygon predicate (winding number plus an on-segment check, so
//! closed cells contain their boundary). Points shared by several closed
//! cells resolve to the lowest cell id, making downstream interpolation
//! deterministic.

use super::{MeshError, PolytopalMesh};

/// Spatial index over the cells of one mesh.
#[derive(Debug, Clone)]
pub struct CellLocator {
    lo: [f64; 2],
    inv_step: [f64; 2],
    grid: usize,
    bins: Vec<Vec<u32>>,
    pad: f64,
}

impl CellLocator {
    /// Builds the index. Grid resolution scales with `√C` so bins hold a
    /// handful of cells each.
    pub fn new(mesh: &PolytopalMesh) -> Self {
        let (lo, hi) = mesh.bounding_box();
        let grid = ((mesh.n_cells() as f64).sqrt().ceil() as usize).max(1);
        let extent = [(hi[0] - lo[0]).max(1e-300), (hi[1] - lo[1]).max(1e-300)];
        let pad = 1e-12 * extent[0].max(extent[1]);
        let inv_step = [grid as f64 / extent[0], grid as f64 / extent[1]];
        let mut bins = vec![Vec::new(); grid * grid];
        let verts = mesh.vertices();
        for (ci, cell) in mesh.cells().iter().enumerate() {
            let mut clo = [f64::INFINITY; 2];
            let mut chi = [f64::NEG_INFINITY; 2];
            for &v in &cell.vertices {
                for d in 0..2 {
                    clo[d] = clo[d].min(verts[v][d]);
                    chi[d] = chi[d].max(verts[v][d]);
                }
            }
            let bin = |x: f64, d: usize| -> usize {
                (((x - lo[d]) * inv_step[d]).floor() as isize).clamp(0, grid as isize - 1) as usize
            };
            let (i0, i1) = (bin(clo[0] - pad, 0), bin(chi[0] + pad, 0));
            let (j0, j1) = (bin(clo[1] - pad, 1), bin(chi[1] + pad, 1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    bins[j * grid + i].push(ci as u32);
                }
            }
        }
        Self {
            lo,
            inv_step,
            grid,
            bins,
            pad,
        }
    }

    /// Finds the lowest-id cell whose closure contains `point`.
    pub fn locate(&self, mesh: &PolytopalMesh, point: [f64; 2]) -> Result<usize, MeshError> {
        let bin = |x: f64, d: usize| -> usize {
            (((x - self.lo[d]) * self.inv_step[d]).floor() as isize)
                .clamp(0, self.grid as isize - 1) as usize
        };
        let candidates = &self.bins[bin(point[1], 1) * self.grid + bin(point[0], 0)];
        let verts = mesh.vertices();
        let mut best: Option<usize> = None;
        for &ci in candidates {
            let cell = &mesh.cells()[ci as usize];
            if contains(verts, &cell.vertices, point, self.pad) {
                best = Some(match best {
                    Some(b) => b.min(ci as usize),
                    None => ci as usize,
                });
            }
        }
        best.ok_or(MeshError::OutsideDomain(point[0], point[1]))
    }
}

/// Closed-polygon containment: winding number for the interior, plus an
/// explicit on-segment test with absolute tolerance `tol` for the boundary.
fn contains(verts: &[[f64; 2]], loop_: &[usize], p: [f64; 2], tol: f64) -> bool {
    let k = loop_.len();
    let mut winding = 0i32;
    for j in 0..k {
        let a = verts[loop_[j]];
        let b = verts[loop_[(j + 1) % k]];
        // On-segment check.
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if cross.abs() <= tol * len.max(1.0)
            && p[0] >= a[0].min(b[0]) - tol
            && p[0] <= a[0].max(b[0]) + tol
            && p[1] >= a[1].min(b[1]) - tol
            && p[1] <= a[1].max(b[1]) + tol
        {
            return true;
        }
        // Winding-number crossing rules.
        if a[1] <= p[1] {
            if b[1] > p[1] && cross > 0.0 {
                winding += 1;
            }
        } else if b[1] <= p[1] && cross < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::testutil::two_triangle_square;

    #[test]
    fn diagonal_point_takes_lowest_id() {
        let m = two_triangle_square();
        let loc = CellLocator::new(&m);
        // (0.5, 0.5) lies on the shared diagonal of cells 0 and 1.
        assert_eq!(loc.locate(&m, [0.5, 0.5]).unwrap(), 0);
    }

    #[test]
    fn centroids_find_their_own_cell() {
        let m = two_triangle_square();
        let g = crate::mesh::GeometryCache::new(&m).unwrap();
        let loc = CellLocator::new(&m);
        for ci in 0..m.n_cells() {
            assert_eq!(loc.locate(&m, g.cell_center(ci)).unwrap(), ci);
        }
    }

    #[test]
    fn outside_point_errors() {
        let m = two_triangle_square();
        let loc = CellLocator::new(&m);
        assert!(matches!(
            loc.locate(&m, [2.0, 2.0]),
            Err(MeshError::OutsideDomain(..))
        ));
    }

    #[test]
    fn agrees_with_exhaustive_scan() {
        let m = two_triangle_square();
        let loc = CellLocator::new(&m);
        let verts = m.vertices();
        // Deterministic pseudo-random points in the unit square.
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let p = [next(), next()];
            let brute = (0..m.n_cells())
                .find(|&ci| super::contains(verts, &m.cells()[ci].vertices, p, 1e-12));
            assert_eq!(loc.locate(&m, p).ok(), brute);
        }
    }
}
