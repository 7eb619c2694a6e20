//! Stefan-problem data: the enthalpy nonlinearity and the test problems.
//!
//! The degenerate parabolic problem is `∂_t u = div(Λ ∇ζ(u)) + noise`,
//! where `u` is the enthalpy and `ζ` a continuous piecewise-linear
//! nondecreasing map with `ζ(0) = 0` whose flat interval (the *plateau*)
//! encodes latent heat; the spatial set where `u` lies strictly inside the
//! plateau is the *mushy region* where solid and liquid coexist.
//!
//! The built-in nonlinearity is
//!
//! ```text
//! ζ(u) = u        (u ≤ 1)
//!        1        (1 ≤ u ≤ 2)
//!        u − 1    (u ≥ 2)
//! ```
//!
//! with primitive `Ξ(z) = ∫₀^z ζ`:
//!
//! ```text
//! Ξ(z) = z²/2            (z ≤ 1)
//!        z − 1/2          (1 ≤ z ≤ 2)
//!        (z−1)²/2 + 1     (z ≥ 2)
//! ```
//!
//! Two test problems are provided. **Test 1** prescribes initial and
//! Dirichlet data from the travelling-front exact solution
//! `u = 2·e^{t−x₁}` on the liquid side `x₁ < t` and `u = e^{t−x₁}` on
//! `x₁ > t` (the interface value is taken from the liquid side). **Test 2**
//! starts from `u ≡ 2` with constant boundary datum `ζ(u) = −1`, i.e.
//! `u = −1`: a freezing front moves in from the boundary and develops a
//! mushy region.
//!
//! The noise amplitude is `g(u) = nf·√Ξ(u)` per unit Brownian increment,
//! with the configurable noise factor `nf ≥ 0`.

mod zeta;

pub use zeta::{ZetaError, ZetaFunction};

use crate::gdm::DiffusionTensor;
use std::sync::Arc;

type SpaceFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
type SpaceTimeFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;

/// Initial/boundary data and (optionally) an exact solution.
#[derive(Clone)]
enum ProblemData {
    /// Travelling-front problem driven by the exact solution.
    Test1,
    /// Constant initial enthalpy 2, boundary temperature −1.
    Test2 { boundary_enthalpy: f64 },
    /// User-supplied data, mostly for tests.
    Custom {
        initial: SpaceFn,
        boundary: SpaceTimeFn,
        exact: Option<SpaceTimeFn>,
    },
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProblemData::Test1 => write!(f, "Test1"),
            ProblemData::Test2 { boundary_enthalpy } => {
                write!(f, "Test2 {{ boundary_enthalpy: {boundary_enthalpy} }}")
            }
            ProblemData::Custom { exact, .. } => {
                write!(f, "Custom {{ exact: {} }}", exact.is_some())
            }
        }
    }
}

/// Complete problem description handed to the stepper and experiments.
#[derive(Debug, Clone)]
pub struct StefanModel {
    zeta: ZetaFunction,
    nf: f64,
    lambda: DiffusionTensor,
    t_final: f64,
    data: ProblemData,
}

impl StefanModel {
    /// Test 1: exact-solution-driven travelling front.
    pub fn test1(nf: f64) -> Self {
        Self {
            zeta: ZetaFunction::latent_heat(),
            nf,
            lambda: DiffusionTensor::Identity,
            t_final: 1.0,
            data: ProblemData::Test1,
        }
    }

    /// Test 2: freezing of an initially liquid domain.
    pub fn test2(nf: f64) -> Self {
        let zeta = ZetaFunction::latent_heat();
        let boundary_enthalpy = zeta
            .inverse(-1.0)
            .expect("−1 is in the range of the built-in ζ");
        Self {
            zeta,
            nf,
            lambda: DiffusionTensor::Identity,
            t_final: 1.0,
            data: ProblemData::Test2 { boundary_enthalpy },
        }
    }

    /// Fully custom problem (used heavily by tests).
    pub fn custom(
        zeta: ZetaFunction,
        nf: f64,
        initial: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
        boundary: impl Fn([f64; 2], f64) -> f64 + Send + Sync + 'static,
        exact: Option<SpaceTimeFn>,
    ) -> Self {
        Self {
            zeta,
            nf,
            lambda: DiffusionTensor::Identity,
            t_final: 1.0,
            data: ProblemData::Custom {
                initial: Arc::new(initial),
                boundary: Arc::new(boundary),
                exact,
            },
        }
    }

    /// Replaces the noise factor.
    pub fn with_nf(mut self, nf: f64) -> Self {
        assert!(nf >= 0.0, "noise factor must be nonnegative");
        self.nf = nf;
        self
    }

    /// Replaces the final time.
    pub fn with_t_final(mut self, t: f64) -> Self {
        assert!(t > 0.0);
        self.t_final = t;
        self
    }

    /// Replaces the diffusion tensor.
    pub fn with_diffusion(mut self, lambda: DiffusionTensor) -> Self {
        self.lambda = lambda;
        self
    }

    /// The enthalpy nonlinearity.
    pub fn zeta(&self) -> &ZetaFunction {
        &self.zeta
    }

    /// Noise factor `nf`.
    pub fn nf(&self) -> f64 {
        self.nf
    }

    /// Diffusion tensor Λ.
    pub fn diffusion(&self) -> &DiffusionTensor {
        &self.lambda
    }

    /// Final time `T`.
    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Initial enthalpy `u₀(x)`.
    pub fn initial_value(&self, x: [f64; 2]) -> f64 {
        match &self.data {
            ProblemData::Test1 => exact_test1(x, 0.0),
            ProblemData::Test2 { .. } => 2.0,
            ProblemData::Custom { initial, .. } => initial(x),
        }
    }

    /// Dirichlet enthalpy datum at position `x`, time `t`.
    pub fn boundary_value(&self, x: [f64; 2], t: f64) -> f64 {
        match &self.data {
            ProblemData::Test1 => exact_test1(x, t),
            ProblemData::Test2 { boundary_enthalpy } => *boundary_enthalpy,
            ProblemData::Custom { boundary, .. } => boundary(x, t),
        }
    }

    /// Exact solution, when the problem has one.
    pub fn exact_value(&self, x: [f64; 2], t: f64) -> Option<f64> {
        match &self.data {
            ProblemData::Test1 => Some(exact_test1(x, t)),
            ProblemData::Test2 { .. } => None,
            ProblemData::Custom { exact, .. } => exact.as_ref().map(|e| e(x, t)),
        }
    }

    /// Per-dof noise amplitude `g(u) = nf·√Ξ(u)`.
    pub fn noise_amplitude(&self, u: f64) -> f64 {
        self.nf * self.zeta.xi(u).sqrt()
    }

    /// Spatial gradient of `ζ(u)` for the exact solution, when the problem
    /// has one in closed form. Matches the interface convention of
    /// [`exact_test1`]: the liquid branch applies on `x₁ = t` for `t > 0`.
    pub fn exact_zeta_gradient(&self, x: [f64; 2], t: f64) -> Option<[f64; 2]> {
        match &self.data {
            // ζ(2e^{t−x₁}) = 2e^{t−x₁} − 1 in the liquid phase and
            // ζ(e^{t−x₁}) = e^{t−x₁} in the solid phase; both differentiate
            // in x₁ to minus the exponential with the phase factor.
            ProblemData::Test1 => {
                let e = (t - x[0]).exp();
                let liquid = x[0] < t || (x[0] == t && t > 0.0);
                Some([if liquid { -2.0 * e } else { -e }, 0.0])
            }
            _ => None,
        }
    }
}

/// Exact Test-1 solution: `2e^{t−x₁}` for `x₁ < t` (liquid), `e^{t−x₁}` for
/// `x₁ > t` (solid). On the interface `x₁ = t` the liquid-side value 2 is
/// used for `t > 0`; at `t = 0` the initial datum is the solid branch, so
/// `(x₁, t) = (0, 0)` evaluates to 1.
pub fn exact_test1(x: [f64; 2], t: f64) -> f64 {
    let e = (t - x[0]).exp();
    if x[0] < t {
        2.0 * e
    } else if x[0] > t {
        e
    } else if t > 0.0 {
        2.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_test1_branches() {
        assert_abs_diff_eq!(exact_test1([0.0, 0.3], 0.0), 1.0);
        assert_abs_diff_eq!(exact_test1([0.5, 0.1], 0.25), (0.25f64 - 0.5).exp());
        assert_abs_diff_eq!(exact_test1([0.25, 0.9], 0.5), 2.0 * 0.25f64.exp());
        // Interface convention: liquid side for positive times.
        assert_abs_diff_eq!(exact_test1([0.5, 0.0], 0.5), 2.0);
    }

    #[test]
    fn exact_zeta_gradient_matches_finite_differences() {
        let model = StefanModel::test1(0.0);
        let z = ZetaFunction::latent_heat();
        let h = 1e-6;
        // Points safely away from the interface x₁ = t on either side.
        for &(x1, t) in &[(0.2, 0.7), (0.8, 0.3), (0.05, 0.5), (0.9, 0.1)] {
            let g = model.exact_zeta_gradient([x1, 0.4], t).unwrap();
            let fd_x = (z.zeta(exact_test1([x1 + h, 0.4], t))
                - z.zeta(exact_test1([x1 - h, 0.4], t)))
                / (2.0 * h);
            let fd_y = (z.zeta(exact_test1([x1, 0.4 + h], t))
                - z.zeta(exact_test1([x1, 0.4 - h], t)))
                / (2.0 * h);
            assert_abs_diff_eq!(g[0], fd_x, epsilon = 1e-8);
            assert_abs_diff_eq!(g[1], fd_y, epsilon = 1e-12);
        }
        // Interface convention: liquid slope for t > 0, solid at t = 0.
        assert_eq!(model.exact_zeta_gradient([0.5, 0.0], 0.5), Some([-2.0, 0.0]));
        assert_eq!(model.exact_zeta_gradient([0.0, 0.0], 0.0), Some([-1.0, 0.0]));
        assert_eq!(StefanModel::test2(1.0).exact_zeta_gradient([0.5, 0.5], 0.5), None);
    }

    #[test]
    fn exact_test1_zeta_continuous_across_interface() {
        let z = ZetaFunction::latent_heat();
        // u → 2 from the liquid side, u → 1 from the solid side; both map
        // to temperature 1 under the plateau.
        assert_abs_diff_eq!(z.zeta(2.0), 1.0);
        assert_abs_diff_eq!(z.zeta(1.0), 1.0);
    }

    #[test]
    fn exact_test1_satisfies_pde_in_both_branches() {
        // Central finite differences on ∂_t u − Δζ(u) away from x₁ = t.
        let z = ZetaFunction::latent_heat();
        let h = 1e-4;
        let mut state = 7u64;
        let mut unif = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut checked = 0;
        while checked < 20 {
            let (x1, x2, t) = (unif(), unif(), unif());
            // Stay clear of the interface so the stencil sees one branch.
            if (x1 - t).abs() < 10.0 * h || !(0.01..0.99).contains(&x1) || !(0.01..0.99).contains(&t)
            {
                continue;
            }
            let u = |x1: f64, x2: f64, t: f64| exact_test1([x1, x2], t);
            let zu = |x1: f64, x2: f64, t: f64| z.zeta(u(x1, x2, t));
            let ut = (u(x1, x2, t + h) - u(x1, x2, t - h)) / (2.0 * h);
            let lap = (zu(x1 + h, x2, t) + zu(x1 - h, x2, t) - 2.0 * zu(x1, x2, t)) / (h * h)
                + (zu(x1, x2 + h, t) + zu(x1, x2 - h, t) - 2.0 * zu(x1, x2, t)) / (h * h);
            assert!(
                (ut - lap).abs() <= 1e-4,
                "PDE residual {} at ({x1}, {x2}, {t})",
                ut - lap
            );
            checked += 1;
        }
    }

    #[test]
    fn stefan_interface_condition() {
        // The front x₁ = t moves at speed 1; the jump of ∂_{x₁}ζ(u) across
        // it must equal the latent-heat jump times the speed. Liquid side:
        // ∂ζ/∂x₁ = −2e^{t−x₁} → −2; solid side: −e^{t−x₁} → −1; jump = 1 =
        // speed × (u_liquid − u_solid) = 1 × (2 − 1).
        // The difference stencil (half-width d) must sit strictly on one
        // side of the front, so the evaluation offset is kept much larger.
        let t = 0.4;
        let eps = 1e-5;
        let z = ZetaFunction::latent_heat();
        let flux = |x1: f64| {
            let d = 1e-8;
            (z.zeta(exact_test1([x1 + d, 0.5], t)) - z.zeta(exact_test1([x1 - d, 0.5], t)))
                / (2.0 * d)
        };
        let jump = flux(t + 2.0 * eps) - flux(t - 2.0 * eps);
        assert_abs_diff_eq!(jump, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn test2_data() {
        let m = StefanModel::test2(1.0);
        assert_abs_diff_eq!(m.initial_value([0.3, 0.7]), 2.0);
        assert_abs_diff_eq!(m.boundary_value([0.0, 0.5], 0.42), -1.0);
        assert!(m.exact_value([0.5, 0.5], 0.1).is_none());
    }

    #[test]
    fn noise_amplitude_values() {
        let m = StefanModel::test1(1.0);
        assert_abs_diff_eq!(m.noise_amplitude(0.0), 0.0);
        assert_abs_diff_eq!(m.noise_amplitude(2.0), 1.5f64.sqrt(), epsilon = 1e-12);
        let m0 = m.with_nf(0.0);
        assert_abs_diff_eq!(m0.noise_amplitude(17.3), 0.0);
    }
}
