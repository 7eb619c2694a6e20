//! Banded LU factorisation with partial pivoting.
//!
//! Storage follows the LAPACK band convention: a matrix with `kl`
//! subdiagonals and `ku` superdiagonals is held column-wise in a
//! `(2·kl + ku + 1) × n` array — the extra `kl` superdiagonals receive the
//! fill produced by row interchanges, so factorisation is done in place.
//! Entry `(i, j)` lives at offset `j·ldab + (kl + ku + i − j)`.

use thiserror::Error;

/// Errors from the direct solver.
#[derive(Debug, Error)]
pub enum LinalgError {
    /// A zero pivot: the matrix is singular to working precision.
    #[error("singular matrix: zero pivot at column {column}")]
    SingularPivot { column: usize },
    /// A NaN or infinite pivot: upstream data was not finite.
    #[error("non-finite pivot at column {column}")]
    NonFinitePivot { column: usize },
    /// The solution failed the residual contract even after refinement.
    #[error("linear solve residual {residual:.3e} exceeds bound {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
}

/// Square banded matrix with in-place pivoted LU.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
    ipiv: Vec<usize>,
    factored: bool,
}

impl BandMatrix {
    /// Allocates an `n × n` zero matrix with bandwidths `(kl, ku)`.
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        assert!(n > 0, "empty system");
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
            ipiv: vec![0; n],
            factored: false,
        }
    }

    /// Dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Zeroes all entries so the storage can be refilled (the symbolic
    /// structure — bandwidths — is retained).
    pub fn reset(&mut self) {
        self.data.fill(0.0);
        self.factored = false;
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(i + self.kl + self.ku >= j && j + self.kl >= i, "({i},{j}) outside band");
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    /// Adds `v` to entry `(i, j)`; the entry must lie within the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(!self.factored, "matrix already factored");
        assert!(
            (j >= i && j - i <= self.ku) || (i >= j && i - j <= self.kl),
            "entry ({i}, {j}) outside band (kl = {}, ku = {})",
            self.kl,
            self.ku
        );
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    /// Reads entry `(i, j)` (zero outside the band; only meaningful before
    /// factorisation).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if (j >= i && j - i <= self.ku + if self.factored { self.kl } else { 0 })
            || (i >= j && i - j <= self.kl)
        {
            self.data[self.offset(i, j)]
        } else {
            0.0
        }
    }

    /// In-place LU with partial pivoting (band analogue of `dgbtrf`).
    pub fn factor(&mut self) -> Result<(), LinalgError> {
        assert!(!self.factored, "matrix already factored");
        let (n, kl, kw) = (self.n, self.kl, self.kl + self.ku);
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // Pivot search down column j.
            let mut p = 0usize;
            let mut best = self.data[self.offset(j, j)].abs();
            for i in 1..=km {
                let v = self.data[self.offset(j + i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            let pivot_off = self.offset(j + p, j);
            let pivot = self.data[pivot_off];
            if !pivot.is_finite() {
                return Err(LinalgError::NonFinitePivot { column: j });
            }
            if pivot == 0.0 {
                return Err(LinalgError::SingularPivot { column: j });
            }
            self.ipiv[j] = j + p;
            let jmax = (j + kw).min(n - 1);
            if p != 0 {
                for col in j..=jmax {
                    let a = self.offset(j, col);
                    let b = self.offset(j + p, col);
                    self.data.swap(a, b);
                }
            }
            let diag = self.data[self.offset(j, j)];
            for i in 1..=km {
                let sub = self.offset(j + i, j);
                let m = self.data[sub] / diag;
                self.data[sub] = m;
                if m != 0.0 {
                    for col in j + 1..=jmax {
                        let upper = self.data[self.offset(j, col)];
                        if upper != 0.0 {
                            let o = self.offset(j + i, col);
                            self.data[o] -= m * upper;
                        }
                    }
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place using the computed factors.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert!(self.factored, "factor() must succeed first");
        assert_eq!(b.len(), self.n);
        let (n, kl, kw) = (self.n, self.kl, self.kl + self.ku);
        for j in 0..n {
            let piv = self.ipiv[j];
            if piv != j {
                b.swap(j, piv);
            }
            let bj = b[j];
            if bj != 0.0 {
                let km = kl.min(n - 1 - j);
                for i in 1..=km {
                    b[j + i] -= self.data[self.offset(j + i, j)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let x = b[j] / self.data[self.offset(j, j)];
            b[j] = x;
            if x != 0.0 {
                let imin = j.saturating_sub(kw);
                for i in imin..j {
                    b[i] -= self.data[self.offset(i, j)] * x;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;

    fn lcg(state: &mut u64) -> f64 {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn identity_solve() {
        let mut a = BandMatrix::new(4, 0, 0);
        for i in 0..4 {
            a.add(i, i, 1.0);
        }
        a.factor().unwrap();
        let mut b = vec![3.0, -1.0, 0.5, 2.0];
        a.solve_in_place(&mut b);
        assert_eq!(b, vec![3.0, -1.0, 0.5, 2.0]);
    }

    #[test]
    fn diagonal_solve_divides() {
        let mut a = BandMatrix::new(3, 1, 1);
        for (i, d) in [2.0, -4.0, 0.5].iter().enumerate() {
            a.add(i, i, *d);
        }
        a.factor().unwrap();
        let mut b = vec![2.0, 2.0, 2.0];
        a.solve_in_place(&mut b);
        assert_eq!(b, vec![1.0, -0.5, 4.0]);
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] is singular for unpivoted LU.
        let mut a = BandMatrix::new(2, 1, 1);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.factor().unwrap();
        let mut b = vec![5.0, 7.0];
        a.solve_in_place(&mut b);
        assert!((b[0] - 7.0).abs() < 1e-14 && (b[1] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_reported() {
        let mut a = BandMatrix::new(2, 1, 1);
        a.add(0, 0, 1.0);
        a.add(1, 0, 2.0);
        // Column 1 is entirely zero.
        match a.factor() {
            Err(LinalgError::SingularPivot { column }) => assert_eq!(column, 1),
            other => panic!("expected singular pivot, got {other:?}"),
        }
    }

    #[test]
    fn random_banded_matches_dense_oracle() {
        let n = 50;
        let (kl, ku) = (5, 5);
        let mut state = 42u64;
        let mut band = BandMatrix::new(n, kl, ku);
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let v = lcg(&mut state) + if i == j { 10.0 } else { 0.0 };
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let mut b: Vec<f64> = (0..n).map(|_| lcg(&mut state)).collect();
        let rhs = nalgebra::DVector::from_column_slice(&b);
        band.factor().unwrap();
        band.solve_in_place(&mut b);
        let x_oracle = dense.clone().lu().solve(&rhs).unwrap();
        for i in 0..n {
            assert!(
                (b[i] - x_oracle[i]).abs() < 1e-9,
                "component {i}: {} vs {}",
                b[i],
                x_oracle[i]
            );
        }
        // Residual contract of the solver: ‖Ax − b‖ ≤ 1e−10 (1 + ‖b‖).
        let x = nalgebra::DVector::from_column_slice(&b);
        let res = (&dense * &x - &rhs).norm();
        assert!(res <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn non_dominant_plateau_like_system() {
        // Rows with zero diagonal blocks mimic a Jacobian column-scaled by
        // ζ′ = 0 on the plateau: partial pivoting must still factor it.
        let n = 30;
        let mut triplets = Vec::new();
        for i in 0..n {
            let zp = if i % 3 == 0 { 0.0 } else { 1.0 };
            triplets.push((i, i, 1e-3 + 2.0 * zp));
            if i + 1 < n {
                triplets.push((i, i + 1, -1.0 * if (i + 1) % 3 == 0 { 0.0 } else { 1.0 }));
                triplets.push((i + 1, i, -1.0 * zp));
            }
        }
        let a = CsrMatrix::from_triplets(n, triplets);
        let mut band = BandMatrix::new(n, 1, 1);
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                band.add(r, c, v);
            }
        }
        band.factor().unwrap();
        let mut b = vec![1.0; n];
        band.solve_in_place(&mut b);
        // Verify the residual directly against the CSR form.
        let mut res = a.apply(&b);
        for r in &mut res {
            *r -= 1.0;
        }
        let norm = res.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm <= 1e-10 * (1.0 + (n as f64).sqrt()));
    }
}
