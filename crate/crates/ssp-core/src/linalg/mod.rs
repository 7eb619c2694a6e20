//! Sparse and banded linear algebra for the implicit stepper and the
//! GDM diagnostics.
//!
//! The Newton systems are sparse, nonsymmetric (column-scaled by ζ′) and
//! not diagonally dominant — ζ′ vanishes on the enthalpy plateau — so the
//! solver of record is a banded LU factorisation **with partial pivoting**
//! after a reverse Cuthill–McKee reordering keeps the band narrow. The
//! symbolic work (ordering, bandwidth) is computed once per sparsity
//! pattern and reused across Newton iterations and time steps.

mod band;
mod csr;
mod rcm;
mod solver;

pub use band::{BandMatrix, LinalgError};
pub use csr::CsrMatrix;
pub use rcm::reverse_cuthill_mckee;
pub use solver::{solve_once, SparseSolver};

/// A permutation carried in both directions.
#[derive(Debug, Clone)]
pub struct Permutation {
    /// `new_to_old[k]` is the original index placed at position `k`.
    pub new_to_old: Vec<usize>,
    /// `old_to_new[i]` is the position of original index `i`.
    pub old_to_new: Vec<usize>,
}

impl Permutation {
    /// Builds the inverse map from a forward map.
    pub fn from_new_to_old(new_to_old: Vec<usize>) -> Self {
        let mut old_to_new = vec![0usize; new_to_old.len()];
        for (new, &old) in new_to_old.iter().enumerate() {
            old_to_new[old] = new;
        }
        Self {
            new_to_old,
            old_to_new,
        }
    }

    /// Identity permutation of length `n`.
    pub fn identity(n: usize) -> Self {
        Self::from_new_to_old((0..n).collect())
    }

    /// Number of indices.
    pub fn len(&self) -> usize {
        self.new_to_old.len()
    }

    /// True when empty.
    pub fn is_empty(&self) -> bool {
        self.new_to_old.is_empty()
    }
}
