//! Continuous piecewise-linear nondecreasing nonlinearities and their
//! primitives.

use thiserror::Error;

/// Errors from [`ZetaFunction`] construction or inversion.
#[derive(Debug, Error)]
pub enum ZetaError {
    #[error("breakpoints must be strictly increasing and finite")]
    Breakpoints,
    #[error("need exactly one more slope than breakpoints (got {slopes} slopes, {breakpoints} breakpoints)")]
    SlopeCount { slopes: usize, breakpoints: usize },
    #[error("slopes must be finite and nonnegative")]
    Slopes,
    #[error("value {0} is not attained by ζ")]
    NotAttained(f64),
}

/// A continuous piecewise-linear nondecreasing map `ζ` with `ζ(0) = 0`,
/// together with its primitive `Ξ(z) = ∫₀^z ζ(s) ds`.
///
/// The map is stored as strictly increasing breakpoints plus one slope per
/// piece (one more slope than breakpoints); values at the breakpoints are
/// precomputed so evaluation is exact piecewise-affine arithmetic. The
/// derivative at a breakpoint is by convention the right-hand slope.
#[derive(Debug, Clone)]
pub struct ZetaFunction {
    /// Strictly increasing abscissae where the slope changes.
    breakpoints: Vec<f64>,
    /// Slope on each piece; `slopes[i]` applies on `[breakpoints[i-1], breakpoints[i])`.
    slopes: Vec<f64>,
    /// `ζ(breakpoints[i])`, anchored by ζ(0) = 0.
    values: Vec<f64>,
    /// `Ξ(breakpoints[i])`.
    xi_values: Vec<f64>,
    /// Maximal slope (the map is `lipschitz`-Lipschitz).
    lipschitz: f64,
    /// Coercivity constants: |ζ(s)| ≥ coercive_c·|s| − coercive_d.
    coercive_c: f64,
    coercive_d: f64,
    /// Growth constants: s² ≤ growth_k1·Ξ(s) + growth_k2.
    growth_k1: f64,
    growth_k2: f64,
    /// Maximal interval on which ζ is constant, if any piece has slope 0.
    plateau: Option<(f64, f64)>,
}

impl ZetaFunction {
    /// Builds a nonlinearity from breakpoints and per-piece slopes.
    ///
    /// `coercive` is the pair `(c, d)` with `|ζ(s)| ≥ c|s| − d` and
    /// `growth` the pair `(K₁, K₂)` with `s² ≤ K₁Ξ(s) + K₂`; both are
    /// trusted here and exercised by randomized tests.
    pub fn new(
        breakpoints: Vec<f64>,
        slopes: Vec<f64>,
        coercive: (f64, f64),
        growth: (f64, f64),
    ) -> Result<Self, ZetaError> {
        if breakpoints.iter().any(|b| !b.is_finite())
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(ZetaError::Breakpoints);
        }
        if slopes.len() != breakpoints.len() + 1 {
            return Err(ZetaError::SlopeCount {
                slopes: slopes.len(),
                breakpoints: breakpoints.len(),
            });
        }
        if slopes.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(ZetaError::Slopes);
        }

        // Anchor ζ(0) = 0 and Ξ(0) = 0, then accumulate along breakpoints.
        // `piece_of(0)` tells which slope applies around the origin.
        let mut values = vec![0.0; breakpoints.len()];
        let mut xi_values = vec![0.0; breakpoints.len()];
        let k0 = breakpoints.partition_point(|&b| b <= 0.0);
        // Walk right from 0: breakpoints k0, k0+1, ...
        let mut v = 0.0;
        let mut xi = 0.0;
        let mut x = 0.0;
        for i in k0..breakpoints.len() {
            let dx = breakpoints[i] - x;
            let s = slopes[i];
            xi += v * dx + 0.5 * s * dx * dx;
            v += s * dx;
            x = breakpoints[i];
            values[i] = v;
            xi_values[i] = xi;
        }
        // Walk left from 0: breakpoints k0-1, k0-2, ...
        let mut v = 0.0;
        let mut xi = 0.0;
        let mut x = 0.0;
        for i in (0..k0).rev() {
            let dx = x - breakpoints[i];
            let s = slopes[i + 1];
            xi -= v * dx - 0.5 * s * dx * dx;
            v -= s * dx;
            x = breakpoints[i];
            values[i] = v;
            xi_values[i] = xi;
        }

        // Maximal flat interval: merge consecutive zero-slope pieces.
        let mut plateau: Option<(f64, f64)> = None;
        for (i, &s) in slopes.iter().enumerate() {
            if s != 0.0 {
                continue;
            }
            let lo = if i == 0 {
                f64::NEG_INFINITY
            } else {
                breakpoints[i - 1]
            };
            let hi = if i == breakpoints.len() {
                f64::INFINITY
            } else {
                breakpoints[i]
            };
            plateau = Some(match plateau {
                None => (lo, hi),
                Some((plo, phi)) => (plo.min(lo), phi.max(hi)),
            });
        }

        let lipschitz = slopes.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            breakpoints,
            slopes,
            values,
            xi_values,
            lipschitz,
            coercive_c: coercive.0,
            coercive_d: coercive.1,
            growth_k1: growth.0,
            growth_k2: growth.1,
            plateau,
        })
    }

    /// The built-in latent-heat nonlinearity: identity below 1, flat on
    /// `[1, 2]`, shifted identity above 2.
    pub fn latent_heat() -> Self {
        Self::new(vec![1.0, 2.0], vec![1.0, 0.0, 1.0], (1.0, 1.0), (8.0, 4.0))
            .expect("built-in data is valid")
    }

    /// The identity map (no latent heat; the problem is the stochastic heat
    /// equation).
    pub fn identity() -> Self {
        Self::new(vec![], vec![1.0], (1.0, 0.0), (2.0, 0.0)).expect("built-in data is valid")
    }

    /// Index of the piece whose slope applies at `s` (right-hand convention
    /// at breakpoints): the number of breakpoints `≤ s`.
    fn piece_of(&self, s: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= s)
    }

    /// Evaluates `ζ(s)`.
    pub fn zeta(&self, s: f64) -> f64 {
        let k = self.piece_of(s);
        let (x0, v0) = self.anchor(k);
        v0 + self.slopes[k] * (s - x0)
    }

    /// Right-hand derivative `ζ'(s)` (at a breakpoint, the slope of the
    /// piece to the right).
    pub fn zeta_prime(&self, s: f64) -> f64 {
        self.slopes[self.piece_of(s)]
    }

    /// Evaluates the primitive `Ξ(s) = ∫₀^s ζ`; always nonnegative since ζ
    /// is nondecreasing with ζ(0) = 0.
    pub fn xi(&self, s: f64) -> f64 {
        let k = self.piece_of(s);
        let (x0, v0) = self.anchor(k);
        let xi0 = if k == 0 {
            if self.breakpoints.is_empty() {
                0.0
            } else {
                // Anchor is breakpoints[0]; its Ξ is stored.
                self.xi_values[0]
            }
        } else {
            self.xi_values[k - 1]
        };
        let dx = s - x0;
        xi0 + v0 * dx + 0.5 * self.slopes[k] * dx * dx
    }

    /// Anchor point (abscissa, ζ-value) for piece `k`.
    fn anchor(&self, k: usize) -> (f64, f64) {
        if k == 0 {
            if self.breakpoints.is_empty() {
                (0.0, 0.0)
            } else {
                (self.breakpoints[0], self.values[0])
            }
        } else {
            (self.breakpoints[k - 1], self.values[k - 1])
        }
    }

    /// Leftmost preimage of `y` under ζ; values on a plateau map to its left
    /// endpoint. Errors when `y` lies outside the range of ζ.
    pub fn inverse(&self, y: f64) -> Result<f64, ZetaError> {
        if !y.is_finite() {
            return Err(ZetaError::NotAttained(y));
        }
        // Scan pieces left to right and return as soon as one attains y.
        let n = self.breakpoints.len();
        for k in 0..=n {
            let (x0, v0) = self.anchor(k);
            let s = self.slopes[k];
            let lo_v = if k == 0 { f64::NEG_INFINITY } else { self.values[k - 1] };
            let hi_v = if k == n { f64::INFINITY } else { self.values[k] };
            if y < lo_v || y > hi_v {
                continue;
            }
            if s > 0.0 {
                return Ok(x0 + (y - v0) / s);
            }
            if y == v0 {
                // Flat piece: leftmost preimage is its left boundary.
                return if k == 0 {
                    Err(ZetaError::NotAttained(y))
                } else {
                    Ok(self.breakpoints[k - 1])
                };
            }
        }
        Err(ZetaError::NotAttained(y))
    }

    /// Lipschitz constant of ζ (the largest slope).
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Coercivity constants `(c, d)` with `|ζ(s)| ≥ c|s| − d`.
    pub fn coercivity(&self) -> (f64, f64) {
        (self.coercive_c, self.coercive_d)
    }

    /// Growth constants `(K₁, K₂)` with `s² ≤ K₁Ξ(s) + K₂`.
    pub fn growth(&self) -> (f64, f64) {
        (self.growth_k1, self.growth_k2)
    }

    /// Maximal interval on which ζ is constant, if any.
    pub fn plateau(&self) -> Option<(f64, f64)> {
        self.plateau
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn latent_heat_frozen_values() {
        let z = ZetaFunction::latent_heat();
        assert_eq!(z.zeta(1.5), 1.0);
        assert_eq!(z.zeta(3.0), 2.0);
        assert_eq!(z.zeta(-2.0), -2.0);
        assert_eq!(z.xi(2.0), 1.5);
        assert_eq!(z.xi(3.0), 3.0);
        assert_eq!(z.xi(-2.0), 2.0);
        assert_eq!(z.zeta(0.0), 0.0);
        assert_eq!(z.xi(0.0), 0.0);
        assert_eq!(z.plateau(), Some((1.0, 2.0)));
        assert_eq!(z.lipschitz(), 1.0);
    }

    #[test]
    fn zeta_prime_right_hand_convention() {
        let z = ZetaFunction::latent_heat();
        assert_eq!(z.zeta_prime(0.5), 1.0);
        assert_eq!(z.zeta_prime(1.0), 0.0); // right-hand slope at the kink
        assert_eq!(z.zeta_prime(1.5), 0.0);
        assert_eq!(z.zeta_prime(2.0), 1.0);
        assert_eq!(z.zeta_prime(5.0), 1.0);
    }

    #[test]
    fn inverse_leftmost_preimage() {
        let z = ZetaFunction::latent_heat();
        assert_abs_diff_eq!(z.inverse(-1.0).unwrap(), -1.0);
        assert_abs_diff_eq!(z.inverse(0.5).unwrap(), 0.5);
        // Plateau value: leftmost preimage.
        assert_abs_diff_eq!(z.inverse(1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(z.inverse(2.0).unwrap(), 3.0);
    }

    #[test]
    fn xi_matches_numeric_quadrature() {
        // Composite Simpson on ∫₀^s ζ as an independent oracle.
        let z = ZetaFunction::latent_heat();
        for &s in &[-3.0, -0.7, 0.3, 1.0, 1.37, 2.0, 2.9, 7.5] {
            let n = 20_000;
            let h = s / n as f64;
            let mut acc = z.zeta(0.0) + z.zeta(s);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * z.zeta(i as f64 * h);
            }
            let quad = acc * h / 3.0;
            assert_abs_diff_eq!(z.xi(s), quad, epsilon = 1e-8);
        }
    }

    #[test]
    fn negative_breakpoints_anchor_correctly() {
        // ζ with a kink left of the origin: slope 2 below −1, slope 1 above.
        let z = ZetaFunction::new(vec![-1.0], vec![2.0, 1.0], (1.0, 2.0), (4.0, 16.0)).unwrap();
        assert_abs_diff_eq!(z.zeta(0.0), 0.0);
        assert_abs_diff_eq!(z.zeta(-1.0), -1.0);
        assert_abs_diff_eq!(z.zeta(-2.0), -3.0);
        assert_abs_diff_eq!(z.xi(-1.0), 0.5);
        // ∫₀^{-2} ζ = ∫_{-2}^0 (−ζ)... directly: Ξ(−2) = Ξ(−1) + ∫_{−1}^{−2} ζ
        // = 0.5 + ∫_{−2}^{−1} (−ζ(s)) ds with ζ linear from −3 to −1: mean −2,
        // so Ξ(−2) = 0.5 + 2 = 2.5.
        assert_abs_diff_eq!(z.xi(-2.0), 2.5);
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            ZetaFunction::new(vec![2.0, 1.0], vec![1.0, 0.0, 1.0], (1.0, 1.0), (8.0, 4.0)),
            Err(ZetaError::Breakpoints)
        ));
        assert!(matches!(
            ZetaFunction::new(vec![1.0], vec![1.0], (1.0, 1.0), (8.0, 4.0)),
            Err(ZetaError::SlopeCount { .. })
        ));
        assert!(matches!(
            ZetaFunction::new(vec![1.0], vec![1.0, -0.5], (1.0, 1.0), (8.0, 4.0)),
            Err(ZetaError::Slopes)
        ));
        let z = ZetaFunction::latent_heat();
        assert!(z.inverse(f64::NAN).is_err());
    }

    proptest! {
        /// Ξ is convex with derivative ζ: Ξ(b) − Ξ(a) ≤ (b − a)ζ(b).
        #[test]
        fn xi_convexity_upper_bound(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let z = ZetaFunction::latent_heat();
            let lhs = z.xi(b) - z.xi(a);
            let rhs = (b - a) * z.zeta(b);
            prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()));
        }

        /// Inverse-Lipschitz estimate:
        /// (b − a)(ζ(b) − ζ(a)) ≥ L⁻¹|ζ(b) − ζ(a)|² with L the Lipschitz
        /// constant of ζ.
        #[test]
        fn inverse_lipschitz(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let z = ZetaFunction::latent_heat();
            let dz = z.zeta(b) - z.zeta(a);
            let lhs = (b - a) * dz;
            let rhs = dz * dz / z.lipschitz();
            prop_assert!(lhs >= rhs - 1e-10 * (1.0 + rhs.abs()));
        }

        /// |ζ(s)|² ≤ 2·L·Ξ(s) with L the Lipschitz constant.
        #[test]
        fn zeta_squared_xi_bound(s in -100.0f64..100.0) {
            let z = ZetaFunction::latent_heat();
            let lhs = z.zeta(s) * z.zeta(s);
            let rhs = 2.0 * z.lipschitz() * z.xi(s);
            prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()));
        }

        /// Stored growth constants: s² ≤ K₁Ξ(s) + K₂.
        #[test]
        fn growth_constants_hold(s in -100.0f64..100.0) {
            let z = ZetaFunction::latent_heat();
            let (k1, k2) = z.growth();
            prop_assert!(s * s <= k1 * z.xi(s) + k2 + 1e-9);
        }

        /// Stored coercivity constants: |ζ(s)| ≥ c|s| − d.
        #[test]
        fn coercivity_holds(s in -100.0f64..100.0) {
            let z = ZetaFunction::latent_heat();
            let (c, d) = z.coercivity();
            prop_assert!(z.zeta(s).abs() >= c * s.abs() - d - 1e-9);
        }

        /// Monotone and continuous: ζ(a) ≤ ζ(b) for a ≤ b, with the gap
        /// bounded by the Lipschitz constant.
        #[test]
        fn monotone_and_lipschitz(a in -50.0f64..50.0, d in 0.0f64..50.0) {
            let z = ZetaFunction::latent_heat();
            let (za, zb) = (z.zeta(a), z.zeta(a + d));
            prop_assert!(zb >= za - 1e-12);
            prop_assert!(zb - za <= z.lipschitz() * d + 1e-10);
        }

        /// Ξ is nonnegative everywhere.
        #[test]
        fn xi_nonnegative(s in -1e6f64..1e6) {
            let z = ZetaFunction::latent_heat();
            prop_assert!(z.xi(s) >= 0.0);
        }

        /// inverse ∘ ζ is a (leftmost) preimage: ζ(inverse(ζ(s))) = ζ(s)
        /// and inverse(ζ(s)) ≤ s.
        #[test]
        fn inverse_section(s in -50.0f64..50.0) {
            let z = ZetaFunction::latent_heat();
            let y = z.zeta(s);
            let p = z.inverse(y).unwrap();
            prop_assert!((z.zeta(p) - y).abs() <= 1e-12 * (1.0 + y.abs()));
            prop_assert!(p <= s + 1e-12);
        }
    }
}
