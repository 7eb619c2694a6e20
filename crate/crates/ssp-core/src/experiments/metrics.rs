//! Relative error metrics between trajectories on nested space-time grids.
//!
//! All three metrics are *relative*: numerator and denominator are
//! accumulated separately over Monte Carlo paths and divided once at the
//! end, so the expectation sits inside the outer root and the `1/P`
//! factors cancel. A `0/0` ratio is reported as `0` (the reference
//! compared against itself).
//!
//! Fields are piecewise constant in time on `(t_{n-1}, t_n]`, so the
//! space-time integrals sum the states `n = 1..=N` (the initial state
//! carries no time measure). A coarse trajectory with `N_c` steps is
//! compared on the fine grid by holding its state `n = ⌈j N_c / N_f⌉`
//! over each fine interval `(t_{j-1}, t_j]`.

use super::{ExperimentsError, PathTrajectory};
use crate::gdm::GradientDiscretisation;
use crate::model::{StefanModel, ZetaFunction};

use super::interp::Interpolator;

/// Relative errors of one comparison: space-time `L²` of ζ(u), space-time
/// `H¹`-seminorm of ζ(u) through the reconstructed gradient, and final-time
/// `L¹` of Ξ(u).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    /// `‖ζ(u_c) − ζ(u_ref)‖ / ‖ζ(u_ref)‖` in `L²` over space-time.
    pub l2_zeta: f64,
    /// Same ratio for the reconstructed-gradient seminorm.
    pub h1_zeta: f64,
    /// `‖Ξ(u_c) − Ξ(u_ref)‖ / ‖Ξ(u_ref)‖` in `L¹` at the final time.
    pub l1_xi_final: f64,
}

/// Accumulates error numerators and denominators over paths; call
/// [`ErrorAccumulator::add_path`] once per path and
/// [`ErrorAccumulator::finish`] at the end.
#[derive(Debug, Clone)]
pub struct ErrorAccumulator {
    t_final: f64,
    num_l2: f64,
    den_l2: f64,
    num_h1: f64,
    den_h1: f64,
    num_xi: f64,
    den_xi: f64,
}

impl ErrorAccumulator {
    /// A fresh accumulator for trajectories spanning `[0, t_final]`.
    pub fn new(t_final: f64) -> Self {
        Self {
            t_final,
            num_l2: 0.0,
            den_l2: 0.0,
            num_h1: 0.0,
            den_h1: 0.0,
            num_xi: 0.0,
            den_xi: 0.0,
        }
    }

    /// Merges another accumulator (used to reduce per-path results in a
    /// fixed order).
    pub fn merge(&mut self, other: &Self) {
        self.num_l2 += other.num_l2;
        self.den_l2 += other.den_l2;
        self.num_h1 += other.num_h1;
        self.den_h1 += other.den_h1;
        self.num_xi += other.num_xi;
        self.den_xi += other.den_xi;
    }

    /// Adds one path's comparison of `coarse` against `reference`.
    ///
    /// `reference` lives on `fine_gd`; `coarse` is transferred to the fine
    /// anchors with `field_interp` (piecewise-linear, for ζ values) and
    /// `constant_interp` (piecewise-constant, for the convex quantity Ξ).
    /// The coarse step count must divide the reference step count.
    pub fn add_path(
        &mut self,
        reference: &PathTrajectory,
        coarse: &PathTrajectory,
        fine_gd: &GradientDiscretisation,
        field_interp: &Interpolator,
        constant_interp: &Interpolator,
        zeta: &ZetaFunction,
    ) -> Result<(), ExperimentsError> {
        let nf = reference.n_steps();
        let nc = coarse.n_steps();
        if nf == 0 {
            return Err(ExperimentsError::MalformedTrajectory {
                expected: 2,
                got: reference.states.len(),
            });
        }
        if nc == 0 {
            return Err(ExperimentsError::MalformedTrajectory {
                expected: 2,
                got: coarse.states.len(),
            });
        }
        if nf % nc != 0 {
            return Err(ExperimentsError::GridMismatch {
                coarse: nc,
                reference: nf,
            });
        }
        let n_dofs = fine_gd.n_dofs();
        for state in &reference.states {
            if state.len() != n_dofs {
                return Err(ExperimentsError::SizeMismatch {
                    expected: n_dofs,
                    got: state.len(),
                });
            }
        }
        for interp in [field_interp, constant_interp] {
            if interp.n_fine() != n_dofs {
                return Err(ExperimentsError::SizeMismatch {
                    expected: n_dofs,
                    got: interp.n_fine(),
                });
            }
        }
        let n_coarse = coarse.states[0].len();
        for state in &coarse.states {
            if state.len() != n_coarse {
                return Err(ExperimentsError::SizeMismatch {
                    expected: n_coarse,
                    got: state.len(),
                });
            }
        }

        let dt_fine = self.t_final / nf as f64;
        let ratio = nf / nc;
        let mut held_step = 0;
        let mut coarse_zeta = Vec::new();
        let mut ref_zeta = vec![0.0; n_dofs];
        let mut diff = vec![0.0; n_dofs];
        for j in 1..=nf {
            // The coarse state held over the fine interval (t_{j-1}, t_j].
            let n = (j + ratio - 1) / ratio;
            if n != held_step {
                let values: Vec<f64> =
                    coarse.states[n].iter().map(|&u| zeta.zeta(u)).collect();
                coarse_zeta = field_interp.apply(&values);
                held_step = n;
            }
            for (i, &u) in reference.states[j].iter().enumerate() {
                ref_zeta[i] = zeta.zeta(u);
                diff[i] = ref_zeta[i] - coarse_zeta[i];
            }
            for i in 0..n_dofs {
                let m = fine_gd.masses[i];
                self.num_l2 += dt_fine * m * diff[i] * diff[i];
                self.den_l2 += dt_fine * m * ref_zeta[i] * ref_zeta[i];
            }
            for region in &fine_gd.regions {
                let gd = region.gradient(&diff);
                let gr = region.gradient(&ref_zeta);
                self.num_h1 += dt_fine * region.measure * (gd[0] * gd[0] + gd[1] * gd[1]);
                self.den_h1 += dt_fine * region.measure * (gr[0] * gr[0] + gr[1] * gr[1]);
            }
        }

        let coarse_xi: Vec<f64> = coarse.states[nc].iter().map(|&u| zeta.xi(u)).collect();
        let xi_fine = constant_interp.apply(&coarse_xi);
        for (i, &u) in reference.states[nf].iter().enumerate() {
            let xi_ref = zeta.xi(u);
            self.num_xi += fine_gd.masses[i] * (xi_ref - xi_fine[i]).abs();
            self.den_xi += fine_gd.masses[i] * xi_ref;
        }
        Ok(())
    }

    /// Adds one path's comparison against the model's exact solution, with
    /// a right-endpoint quadrature in time (states `n = 1..=N` at
    /// `t = n δt`). Value metrics sample ζ and Ξ of the exact enthalpy at
    /// the anchors; the gradient metric compares the reconstructed gradient
    /// with the exact ∇ζ at the quadrature points — the quantities the
    /// convergence theory bounds. Requires a model with an exact value and
    /// an exact ζ-gradient in closed form.
    pub fn add_exact_path(
        &mut self,
        traj: &PathTrajectory,
        gd: &GradientDiscretisation,
        model: &StefanModel,
    ) -> Result<(), ExperimentsError> {
        let n_steps = traj.n_steps();
        if n_steps == 0 {
            return Err(ExperimentsError::MalformedTrajectory {
                expected: 2,
                got: traj.states.len(),
            });
        }
        let n_dofs = gd.n_dofs();
        for state in &traj.states {
            if state.len() != n_dofs {
                return Err(ExperimentsError::SizeMismatch {
                    expected: n_dofs,
                    got: state.len(),
                });
            }
        }
        // Exactness is a property of the model, not of the point probed.
        let probe = gd.anchors.first().copied().unwrap_or([0.0, 0.0]);
        if model.exact_value(probe, model.t_final()).is_none()
            || model.exact_zeta_gradient(probe, model.t_final()).is_none()
        {
            return Err(ExperimentsError::NoExactSolution);
        }

        let zeta = model.zeta();
        let dt = model.t_final() / n_steps as f64;
        let mut zu = vec![0.0; n_dofs];
        for n in 1..=n_steps {
            let t = n as f64 * dt;
            for (i, &u) in traj.states[n].iter().enumerate() {
                zu[i] = zeta.zeta(u);
                let zex = zeta.zeta(model.exact_value(gd.anchors[i], t).expect("probed"));
                let d = zu[i] - zex;
                self.num_l2 += dt * gd.masses[i] * d * d;
                self.den_l2 += dt * gd.masses[i] * zex * zex;
            }
            for region in &gd.regions {
                let gu = region.gradient(&zu);
                let gex = model
                    .exact_zeta_gradient(region.quad_point, t)
                    .expect("probed");
                let dx = gu[0] - gex[0];
                let dy = gu[1] - gex[1];
                self.num_h1 += dt * region.measure * (dx * dx + dy * dy);
                self.den_h1 += dt * region.measure * (gex[0] * gex[0] + gex[1] * gex[1]);
            }
        }
        let t = model.t_final();
        for (i, &u) in traj.states[n_steps].iter().enumerate() {
            let xi_ex = zeta.xi(model.exact_value(gd.anchors[i], t).expect("probed"));
            self.num_xi += gd.masses[i] * (zeta.xi(u) - xi_ex).abs();
            self.den_xi += gd.masses[i] * xi_ex;
        }
        Ok(())
    }

    /// Final relative errors; `0/0` ratios (self-comparison) are `0`.
    pub fn finish(&self) -> ErrorMetrics {
        ErrorMetrics {
            l2_zeta: ratio(self.num_l2, self.den_l2).sqrt(),
            h1_zeta: ratio(self.num_h1, self.den_h1).sqrt(),
            l1_xi_final: ratio(self.num_xi, self.den_xi),
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Relative errors of one trajectory against the model's exact solution;
/// see [`ErrorAccumulator::add_exact_path`] for the quadrature convention.
pub fn exact_errors(
    traj: &PathTrajectory,
    gd: &GradientDiscretisation,
    model: &StefanModel,
) -> Result<ErrorMetrics, ExperimentsError> {
    let mut acc = ErrorAccumulator::new(model.t_final());
    acc.add_exact_path(traj, gd, model)?;
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::build_mlp1;
    use crate::experiments::interp::InterpMode;
    use crate::mesh::testutil::two_triangle_square;
    use crate::mesh::{DualMesh, GeometryCache, PolytopalMesh};

    fn mlp1_square() -> (PolytopalMesh, GeometryCache, GradientDiscretisation) {
        let mesh = two_triangle_square();
        let geom = GeometryCache::new(&mesh).unwrap();
        let dual = DualMesh::new(&mesh, &geom).unwrap();
        let gd = build_mlp1(&mesh, &geom, &dual).unwrap();
        (mesh, geom, gd)
    }

    fn identity_interps(
        mesh: &PolytopalMesh,
        geom: &GeometryCache,
        gd: &GradientDiscretisation,
    ) -> (Interpolator, Interpolator) {
        let field =
            Interpolator::new(mesh, geom, gd, &gd.anchors, InterpMode::GradientLinear).unwrap();
        let constant =
            Interpolator::new(mesh, geom, gd, &gd.anchors, InterpMode::Constant).unwrap();
        (field, constant)
    }

    fn constant_trajectory(levels: &[f64], n_dofs: usize) -> PathTrajectory {
        PathTrajectory {
            states: levels.iter().map(|&v| vec![v; n_dofs]).collect(),
            total_newton_iterations: 0,
            total_relaxations: 0,
            max_step_iterations: 0,
        }
    }

    #[test]
    fn empty_accumulator_reports_zero() {
        let m = ErrorAccumulator::new(1.0).finish();
        assert_eq!((m.l2_zeta, m.h1_zeta, m.l1_xi_final), (0.0, 0.0, 0.0));
    }

    #[test]
    fn reference_compared_to_itself_is_exactly_zero() {
        let (mesh, geom, gd) = mlp1_square();
        let (field, constant) = identity_interps(&mesh, &geom, &gd);
        let zeta = ZetaFunction::latent_heat();
        let states: Vec<Vec<f64>> = (0..3)
            .map(|n| (0..gd.n_dofs()).map(|i| (n * 7 + i) as f64 * 0.3).collect())
            .collect();
        let traj = PathTrajectory {
            states,
            total_newton_iterations: 5,
            total_relaxations: 0,
            max_step_iterations: 3,
        };
        let mut acc = ErrorAccumulator::new(1.0);
        acc.add_path(&traj, &traj, &gd, &field, &constant, &zeta)
            .unwrap();
        let m = acc.finish();
        assert_eq!((m.l2_zeta, m.h1_zeta, m.l1_xi_final), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_fields_match_the_closed_form() {
        // ζ = identity, two steps of spatially constant states: every mass
        // and gradient detail drops out and the metrics have closed forms.
        let (mesh, geom, gd) = mlp1_square();
        let (field, constant) = identity_interps(&mesh, &geom, &gd);
        let zeta = ZetaFunction::identity();
        let reference = constant_trajectory(&[0.0, 1.0, 2.0], gd.n_dofs());
        let coarse = constant_trajectory(&[0.0, 0.5, 1.0], gd.n_dofs());
        let mut acc = ErrorAccumulator::new(1.0);
        acc.add_path(&reference, &coarse, &gd, &field, &constant, &zeta)
            .unwrap();
        let m = acc.finish();
        // L²: √(0.5·(0.25 + 1) / 0.5·(1 + 4)) = √0.25.
        assert!((m.l2_zeta - 0.5).abs() <= 1e-12, "l2 = {}", m.l2_zeta);
        // Constant fields have zero gradients on both sides: 0/0 → 0.
        assert_eq!(m.h1_zeta, 0.0);
        // Ξ(s) = s²/2: |2 − 0.5| / 2 = 0.75.
        assert!(
            (m.l1_xi_final - 0.75).abs() <= 1e-12,
            "xi = {}",
            m.l1_xi_final
        );
    }

    #[test]
    fn coarse_states_are_held_over_their_fine_windows() {
        // N_f = 4 against N_c = 2: fine steps 1,2 see coarse state 1 and
        // fine steps 3,4 see coarse state 2 (right-continuous hold).
        let (mesh, geom, gd) = mlp1_square();
        let (field, constant) = identity_interps(&mesh, &geom, &gd);
        let zeta = ZetaFunction::identity();
        let reference = constant_trajectory(&[0.0, 1.0, 2.0, 3.0, 4.0], gd.n_dofs());
        let coarse = constant_trajectory(&[0.0, 1.0, 3.0], gd.n_dofs());
        let mut acc = ErrorAccumulator::new(1.0);
        acc.add_path(&reference, &coarse, &gd, &field, &constant, &zeta)
            .unwrap();
        let m = acc.finish();
        // num = 0.25·(0² + 1² + 0² + 1²), den = 0.25·(1 + 4 + 9 + 16).
        let expected = (2.0f64 / 30.0).sqrt();
        assert!(
            (m.l2_zeta - expected).abs() <= 1e-12,
            "l2 = {} expected {expected}",
            m.l2_zeta
        );
        // Final states differ (coarse 3 vs reference 4): with Ξ(s) = s²/2
        // the relative L¹ error is |4.5 − 8| / 8 on the unit square.
        assert!(
            (m.l1_xi_final - 0.4375).abs() <= 1e-12,
            "xi = {}",
            m.l1_xi_final
        );
    }

    #[test]
    fn two_path_toy_ensemble_matches_spreadsheet_arithmetic() {
        // 2-dof toy discretisation: masses (0.5, 0.5), one gradient region
        // of measure 1 with ∇v = (v₁ − v₀, v₀); ζ = identity, Ξ(s) = s²/2.
        // Reference has 2 steps, coarse has 1 (held over both windows);
        // identical anchors make both interpolators the identity. Every
        // number below is hand-computed.
        let gd = crate::gdm::testgd::toy_two_dof();
        let mesh = two_triangle_square();
        let geom = GeometryCache::new(&mesh).unwrap();
        let field =
            Interpolator::new(&mesh, &geom, &gd, &gd.anchors, InterpMode::GradientLinear)
                .unwrap();
        let constant =
            Interpolator::new(&mesh, &geom, &gd, &gd.anchors, InterpMode::Constant).unwrap();
        let zeta = ZetaFunction::identity();
        let traj = |states: &[[f64; 2]]| PathTrajectory {
            states: states.iter().map(|s| s.to_vec()).collect(),
            total_newton_iterations: 0,
            total_relaxations: 0,
            max_step_iterations: 0,
        };
        let mut acc = ErrorAccumulator::new(1.0);
        // Path A: ref u¹ = (1,2), u² = (3,1); coarse v¹ = (2,0).
        acc.add_path(
            &traj(&[[0.0; 2], [1.0, 2.0], [3.0, 1.0]]),
            &traj(&[[0.0; 2], [2.0, 0.0]]),
            &gd,
            &field,
            &constant,
            &zeta,
        )
        .unwrap();
        // Path B: ref u¹ = (0,1), u² = (1,1); coarse v¹ = (1,3).
        acc.add_path(
            &traj(&[[0.0; 2], [0.0, 1.0], [1.0, 1.0]]),
            &traj(&[[0.0; 2], [1.0, 3.0]]),
            &gd,
            &field,
            &constant,
            &zeta,
        )
        .unwrap();
        let m = acc.finish();
        // L²: path A num 0.5·(2.5 + 1), den 0.5·(2.5 + 5);
        //     path B num 0.5·(2.5 + 2), den 0.5·(0.5 + 1) → √(4 / 4.5).
        assert!((m.l2_zeta - (4.0f64 / 4.5).sqrt()).abs() <= 1e-12, "{}", m.l2_zeta);
        // H¹: path A num 0.5·(10 + 1), den 0.5·(2 + 13);
        //     path B num 0.5·(2 + 4), den 0.5·(1 + 1) → √(8.5 / 8.5) = 1.
        assert!((m.h1_zeta - 1.0).abs() <= 1e-12, "{}", m.h1_zeta);
        // Ξ: path A num 0.5·2.5 + 0.5·0.5, den 0.5·5;
        //    path B num 0.5·0 + 0.5·4, den 0.5·1 → 3.5/3.
        assert!((m.l1_xi_final - 3.5 / 3.0).abs() <= 1e-12, "{}", m.l1_xi_final);
    }

    #[test]
    fn grid_and_size_mismatches_are_rejected() {
        let (mesh, geom, gd) = mlp1_square();
        let (field, constant) = identity_interps(&mesh, &geom, &gd);
        let zeta = ZetaFunction::latent_heat();
        let reference = constant_trajectory(&[0.0, 1.0, 2.0, 3.0, 4.0], gd.n_dofs());
        let coarse = constant_trajectory(&[0.0, 1.0, 2.0, 3.0], gd.n_dofs());
        let mut acc = ErrorAccumulator::new(1.0);
        let err = acc
            .add_path(&reference, &coarse, &gd, &field, &constant, &zeta)
            .unwrap_err();
        assert!(matches!(
            err,
            ExperimentsError::GridMismatch {
                coarse: 3,
                reference: 4
            }
        ));

        // Compatible step counts (2 % 1 == 0) but wrong state width.
        let bad = constant_trajectory(&[0.0, 1.0, 2.0], gd.n_dofs() + 1);
        let one_step = constant_trajectory(&[0.0, 1.0], gd.n_dofs());
        let err = acc
            .add_path(&bad, &one_step, &gd, &field, &constant, &zeta)
            .unwrap_err();
        assert!(matches!(err, ExperimentsError::SizeMismatch { .. }));

        let empty = constant_trajectory(&[0.0], gd.n_dofs());
        let err = acc
            .add_path(&empty, &empty, &gd, &field, &constant, &zeta)
            .unwrap_err();
        assert!(matches!(err, ExperimentsError::MalformedTrajectory { .. }));
    }

    #[test]
    fn exact_solution_sampled_at_anchors_has_zero_value_error() {
        let (_, _, gd) = mlp1_square();
        let model = crate::model::StefanModel::test1(0.0);
        let n_steps = 2;
        let states: Vec<Vec<f64>> = (0..=n_steps)
            .map(|n| {
                let t = n as f64 * model.t_final() / n_steps as f64;
                gd.anchors
                    .iter()
                    .map(|&x| model.exact_value(x, t).unwrap())
                    .collect()
            })
            .collect();
        let traj = PathTrajectory {
            states,
            total_newton_iterations: 0,
            total_relaxations: 0,
            max_step_iterations: 0,
        };
        let m = exact_errors(&traj, &gd, &model).unwrap();
        // Pointwise agreement at anchors: value-based metrics vanish; the
        // gradient metric sees genuine interpolation error on this h = 1
        // mesh and must stay a finite positive number.
        assert_eq!(m.l2_zeta, 0.0);
        assert_eq!(m.l1_xi_final, 0.0);
        assert!(m.h1_zeta.is_finite() && m.h1_zeta > 0.0, "{}", m.h1_zeta);
    }

    #[test]
    fn models_without_an_exact_solution_are_rejected() {
        let (_, _, gd) = mlp1_square();
        let model = crate::model::StefanModel::test2(1.0);
        let traj = constant_trajectory(&[2.0, 2.0], gd.n_dofs());
        assert!(matches!(
            exact_errors(&traj, &gd, &model),
            Err(ExperimentsError::NoExactSolution)
        ));
    }
}
