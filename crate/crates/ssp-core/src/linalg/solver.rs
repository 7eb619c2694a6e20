//! Sparse direct solver: bandwidth reduction by reverse Cuthill–McKee,
//! then pivoted band LU, with one step of iterative refinement to meet a
//! residual contract.
//!
//! The nonlinear solver refactors a matrix with a fixed sparsity pattern
//! many times, so the analysis (ordering and band extents) is done once and
//! reused across refills.

use super::band::{BandMatrix, LinalgError};
use super::csr::CsrMatrix;
use super::rcm::reverse_cuthill_mckee;
use super::Permutation;

/// Direct solver bound to one sparsity pattern.
#[derive(Debug, Clone)]
pub struct SparseSolver {
    perm: Permutation,
    n: usize,
    band: BandMatrix,
    factored: bool,
}

impl SparseSolver {
    /// Chooses the ordering and band extents for `pattern`; values are
    /// ignored at this stage.
    pub fn analyze(pattern: &CsrMatrix) -> Self {
        let perm = reverse_cuthill_mckee(pattern);
        let n = pattern.n();
        // Band extents of the permuted pattern.
        let (mut kl, mut ku) = (0usize, 0usize);
        for i in 0..n {
            let pi = perm.old_to_new[i];
            for (j, _) in pattern.row_entries(i) {
                let pj = perm.old_to_new[j];
                if pi > pj {
                    kl = kl.max(pi - pj);
                } else {
                    ku = ku.max(pj - pi);
                }
            }
        }
        let band = BandMatrix::new(n, kl, ku);
        Self {
            perm,
            n,
            band,
            factored: false,
        }
    }

    /// Refills the band storage from `matrix` (same pattern as analyzed, or
    /// a subpattern) and factorizes.
    pub fn factor(&mut self, matrix: &CsrMatrix) -> Result<(), LinalgError> {
        assert_eq!(matrix.n(), self.n, "pattern size changed since analysis");
        self.band.reset();
        for i in 0..self.n {
            let pi = self.perm.old_to_new[i];
            for (j, v) in matrix.row_entries(i) {
                self.band.add(pi, self.perm.old_to_new[j], v);
            }
        }
        self.band.factor()?;
        self.factored = true;
        Ok(())
    }

    /// Solves with the current factorization.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert!(self.factored, "solve before factor");
        assert_eq!(b.len(), self.n);
        let mut pb = vec![0.0; self.n];
        for (i, &bi) in b.iter().enumerate() {
            pb[self.perm.old_to_new[i]] = bi;
        }
        self.band.solve_in_place(&mut pb);
        let mut x = vec![0.0; self.n];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = pb[self.perm.old_to_new[i]];
        }
        x
    }

    /// Solves and enforces `‖Ax − b‖ ≤ tol·(1 + ‖b‖)` (Euclidean norms),
    /// applying up to two steps of iterative refinement before giving up.
    pub fn solve_checked(
        &self,
        matrix: &CsrMatrix,
        b: &[f64],
        tol: f64,
    ) -> Result<Vec<f64>, LinalgError> {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let residual = |x: &[f64]| {
            let ax = matrix.apply(x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            r
        };
        let bound = tol * (1.0 + norm(b));
        let mut x = self.solve(b);
        for _ in 0..2 {
            let r = residual(&x);
            if norm(&r) <= bound {
                return Ok(x);
            }
            let d = self.solve(&r);
            for (xi, di) in x.iter_mut().zip(&d) {
                *xi += di;
            }
        }
        let r = norm(&residual(&x));
        if r <= bound {
            Ok(x)
        } else {
            Err(LinalgError::ResidualTooLarge {
                residual: r,
                bound,
            })
        }
    }
}

/// One-shot solve for callers without a pattern to reuse.
pub fn solve_once(matrix: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>, LinalgError> {
    let mut solver = SparseSolver::analyze(matrix);
    solver.factor(matrix)?;
    solver.solve_checked(matrix, b, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn solves_tridiagonal_system() {
        let a = laplacian_1d(20);
        let b = vec![1.0; 20];
        let x = solve_once(&a, &b, 1e-12).unwrap();
        let ax = a.apply(&x);
        for (got, want) in ax.iter().zip(&b) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn refactor_with_new_values_same_pattern() {
        let a = laplacian_1d(10);
        let mut solver = SparseSolver::analyze(&a);
        solver.factor(&a).unwrap();
        let x1 = solver.solve(&vec![1.0; 10]);
        // Scale the matrix by 2: solution halves.
        let doubled = CsrMatrix::from_triplets(
            10,
            (0..10)
                .flat_map(|i| {
                    a.row_entries(i)
                        .map(move |(j, v)| (i, j, 2.0 * v))
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>(),
        );
        solver.factor(&doubled).unwrap();
        let x2 = solver.solve(&vec![1.0; 10]);
        for (a1, a2) in x1.iter().zip(&x2) {
            assert_abs_diff_eq!(a1, &(2.0 * a2), epsilon = 1e-12);
        }
    }

    #[test]
    fn residual_contract_enforced() {
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin()).collect();
        let x = solve_once(&a, &b, 1e-12).unwrap();
        let ax = a.apply(&x);
        let r: f64 = b
            .iter()
            .zip(&ax)
            .map(|(bi, ai)| (bi - ai) * (bi - ai))
            .sum::<f64>()
            .sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(r <= 1e-12 * (1.0 + bn));
    }

    #[test]
    fn singular_matrix_reported() {
        let a = CsrMatrix::from_triplets(2, [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(solve_once(&a, &[1.0, 2.0], 1e-10).is_err());
    }
}
