//! Time integration of one noise path: implicit diffusion, explicit
//! multiplicative noise, and a damped Newton solve of the degenerate
//! nonlinear system at every step.
//!
//! One backward-Euler step from `u^n` to `v = u^{n+1}` solves, on the
//! interior dofs,
//!
//! ```text
//! m_i v_i + δt (A ζ(v))_i = m_i (u^n_i + g(u^n_i) ΔW_i),
//! ```
//!
//! with boundary dofs pinned to the Dirichlet datum at `t^{n+1}`. The noise
//! enters explicitly through the previous value, so every state depends
//! only on the increments seen so far. Residuals are measured in the
//! lumped-mass weighted norm `‖G‖ = √(Σ G_i²/m_i)` (dofs with zero mass are
//! weighted by the mean positive mass so the norm stays finite).
//!
//! The Jacobian `D_m + δt·A·diag(ζ′(v))` keeps one sparsity pattern across
//! all iterations and steps, so its ordering is analyzed once and only the
//! numeric factorization is redone. Updates are damped: θ starts at 1 and
//! halves until `‖G(v+θδ)‖ ≤ (1−θ/4)‖G(v)‖`; if the halving budget runs
//! out, the full step is accepted anyway and counted as a *relaxation*.
//! A non-finite residual at an accepted point aborts the path — that is the
//! designated failure mode when the noise amplitude drives the iterate out
//! of floating-point range.
//!
//! For cell+edge discretisations the cell block of the Jacobian is diagonal
//! (no gradient region couples two cells), so cell unknowns are eliminated
//! locally and only the edge Schur complement is factored — static
//! condensation, enabled automatically when every cell carries positive
//! mass (`r > 0`).

use crate::gdm::{GdKind, GradientDiscretisation};
use crate::linalg::{CsrMatrix, LinalgError, SparseSolver};
use crate::model::StefanModel;
use crate::noise::{BrownianDriver, NoiseError};
use thiserror::Error;

/// Residual bound for the inner linear solves.
const LINEAR_TOL: f64 = 1e-10;

/// Failure modes of a single path.
#[derive(Debug, Error)]
pub enum StepError {
    #[error(
        "Newton did not converge at step {step} after {iterations} iterations \
         (residual history: {history:?})"
    )]
    NewtonDiverged {
        step: usize,
        iterations: usize,
        history: Vec<f64>,
    },
    #[error("linear solve failed at step {step}: {source}")]
    LinearSolve {
        step: usize,
        #[source]
        source: LinalgError,
    },
    #[error("non-finite residual at step {step}: the iterate left floating-point range")]
    NonFinite { step: usize },
    #[error("noise increment vector has {got} entries, discretisation has {expected}")]
    NoiseSize { expected: usize, got: usize },
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Damped-Newton parameters.
#[derive(Debug, Clone, Copy)]
pub struct NewtonConfig {
    /// Absolute residual tolerance; each step converges at
    /// `tolerance · (1 + ‖rhs‖)` in the mass-weighted norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Damping halvings allowed per iteration before relaxing.
    pub max_halvings: usize,
    /// Accept `v + θδ` once `‖G‖` drops below `(1 − θ·sufficient_decrease)`
    /// times the previous residual.
    pub sufficient_decrease: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 50,
            max_halvings: 30,
            sufficient_decrease: 0.25,
        }
    }
}

/// The discrete solution at one time level together with the Newton
/// statistics of the step that produced it.
#[derive(Debug, Clone)]
pub struct SchemeState {
    pub step: usize,
    pub time: f64,
    /// Enthalpy dofs; boundary entries equal the Dirichlet datum at `time`.
    pub u: Vec<f64>,
    /// Cached `ζ(u)`, kept consistent with `u`.
    pub zeta_u: Vec<f64>,
    /// Newton iterations spent on this step (0 for the initial state).
    pub newton_iterations: usize,
    /// Relaxed (non-decreasing) updates accepted during this step.
    pub relaxations: usize,
}

/// Aggregates over a full path run.
#[derive(Debug, Clone)]
pub struct PathSummary {
    pub final_state: SchemeState,
    pub steps: usize,
    pub total_newton_iterations: usize,
    pub total_relaxations: usize,
    pub max_step_iterations: usize,
}

/// The interpolated initial state: `u_i = u₀(anchor_i)` with boundary dofs
/// overridden by the Dirichlet datum at `t = 0`.
pub fn initial_state(gd: &GradientDiscretisation, model: &StefanModel) -> SchemeState {
    let mut u = gd.interpolate(|x| model.initial_value(x));
    for i in 0..gd.n_dofs() {
        if gd.is_boundary[i] {
            u[i] = model.boundary_value(gd.anchors[i], 0.0);
        }
    }
    let zeta_u = u.iter().map(|&s| model.zeta().zeta(s)).collect();
    SchemeState {
        step: 0,
        time: 0.0,
        u,
        zeta_u,
        newton_iterations: 0,
        relaxations: 0,
    }
}

/// How the linearised system is solved.
enum SolvePlan {
    /// Factor the full interior Jacobian.
    Full { solver: SparseSolver },
    /// Eliminate the (diagonal) cell block and factor the edge Schur
    /// complement.
    Condensed {
        n_cells: usize,
        /// Interior edge dofs in ascending order.
        edges: Vec<usize>,
        /// Full dof id → position in `edges`, `usize::MAX` elsewhere.
        edge_of: Vec<usize>,
        solver: SparseSolver,
    },
}

/// Time stepper bound to one discretisation, stiffness operator and model.
pub struct Stepper<'a> {
    gd: &'a GradientDiscretisation,
    stiffness: &'a CsrMatrix,
    model: &'a StefanModel,
    config: NewtonConfig,
    interior: Vec<usize>,
    /// Full dof id → position in `interior`, `usize::MAX` for boundary.
    interior_of: Vec<usize>,
    /// Norm weights per interior position: `1/m_i`, or one over the mean
    /// positive mass where `m_i = 0`.
    weights: Vec<f64>,
    plan: SolvePlan,
    /// Accepted residual norms of the most recent step (diagnostics).
    last_residual_history: Vec<f64>,
}

impl<'a> Stepper<'a> {
    /// Builds a stepper; static condensation is used automatically for
    /// cell+edge discretisations with positive cell mass.
    pub fn new(
        gd: &'a GradientDiscretisation,
        stiffness: &'a CsrMatrix,
        model: &'a StefanModel,
        config: NewtonConfig,
    ) -> Self {
        let condense = matches!(gd.kind, GdKind::HybridCellEdge { r, .. } if r > 0.0);
        Self::with_condensation(gd, stiffness, model, config, condense)
    }

    /// Builds a stepper that always factors the full interior Jacobian.
    pub fn without_condensation(
        gd: &'a GradientDiscretisation,
        stiffness: &'a CsrMatrix,
        model: &'a StefanModel,
        config: NewtonConfig,
    ) -> Self {
        Self::with_condensation(gd, stiffness, model, config, false)
    }

    fn with_condensation(
        gd: &'a GradientDiscretisation,
        stiffness: &'a CsrMatrix,
        model: &'a StefanModel,
        config: NewtonConfig,
        condense: bool,
    ) -> Self {
        assert!(config.tolerance > 0.0, "Newton tolerance must be positive");
        assert!(config.max_iterations >= 1, "Newton needs at least one iteration");
        assert_eq!(
            stiffness.n(),
            gd.n_dofs(),
            "stiffness dimension does not match the discretisation"
        );
        let n = gd.n_dofs();
        let interior = gd.interior_dofs();
        let mut interior_of = vec![usize::MAX; n];
        for (ii, &i) in interior.iter().enumerate() {
            interior_of[i] = ii;
        }
        let positive: Vec<f64> = interior
            .iter()
            .map(|&i| gd.masses[i])
            .filter(|&m| m > 0.0)
            .collect();
        let fallback = if positive.is_empty() {
            1.0
        } else {
            positive.len() as f64 / positive.iter().sum::<f64>()
        };
        let weights: Vec<f64> = interior
            .iter()
            .map(|&i| {
                let m = gd.masses[i];
                if m > 0.0 {
                    1.0 / m
                } else {
                    fallback
                }
            })
            .collect();

        let plan = if condense {
            let n_cells = match gd.kind {
                GdKind::HybridCellEdge { n_cells, .. } => n_cells,
                GdKind::VertexP1 => panic!("condensation needs a cell+edge discretisation"),
            };
            assert!(
                (0..n_cells).all(|c| !gd.is_boundary[c]),
                "condensation assumes every cell dof is interior"
            );
            let edges: Vec<usize> = interior.iter().copied().filter(|&i| i >= n_cells).collect();
            let mut edge_of = vec![usize::MAX; n];
            for (ee, &e) in edges.iter().enumerate() {
                edge_of[e] = ee;
            }
            // Schur pattern: edge-edge stiffness couplings plus the fill
            // from eliminating each cell against its interior edges.
            let mut pattern = Vec::new();
            for (ee, &fe) in edges.iter().enumerate() {
                pattern.push((ee, ee, 1.0));
                for (j, _) in stiffness.row_entries(fe) {
                    if edge_of[j] != usize::MAX {
                        pattern.push((ee, edge_of[j], 1.0));
                    }
                }
            }
            for c in 0..n_cells {
                let nbr: Vec<usize> = stiffness
                    .row_entries(c)
                    .filter_map(|(j, _)| (edge_of[j] != usize::MAX).then_some(edge_of[j]))
                    .collect();
                for &a in &nbr {
                    for &b in &nbr {
                        pattern.push((a, b, 1.0));
                    }
                }
            }
            let solver = SparseSolver::analyze(&CsrMatrix::from_triplets(edges.len(), pattern));
            SolvePlan::Condensed {
                n_cells,
                edges,
                edge_of,
                solver,
            }
        } else {
            let mut pattern = Vec::new();
            for (ii, &i) in interior.iter().enumerate() {
                pattern.push((ii, ii, 1.0));
                for (j, _) in stiffness.row_entries(i) {
                    if interior_of[j] != usize::MAX {
                        pattern.push((ii, interior_of[j], 1.0));
                    }
                }
            }
            let solver = SparseSolver::analyze(&CsrMatrix::from_triplets(interior.len(), pattern));
            SolvePlan::Full { solver }
        };

        Self {
            gd,
            stiffness,
            model,
            config,
            interior,
            interior_of,
            weights,
            plan,
            last_residual_history: Vec::new(),
        }
    }

    /// Accepted residual norms of the most recent Newton solve.
    pub fn last_residual_history(&self) -> &[f64] {
        &self.last_residual_history
    }

    /// Mass-weighted norm of an interior-length vector.
    fn weighted_norm(&self, g: &[f64]) -> f64 {
        g.iter()
            .zip(&self.weights)
            .map(|(gi, w)| w * gi * gi)
            .sum::<f64>()
            .sqrt()
    }

    /// Interior residual `G_i = m_i v_i + δt (A ζ(v))_i − rhs_i`.
    fn residual(&self, v: &[f64], zeta_v: &[f64], rhs: &[f64], dt: f64) -> Vec<f64> {
        let az = self.stiffness.apply(zeta_v);
        self.interior
            .iter()
            .map(|&i| self.gd.masses[i] * v[i] + dt * az[i] - rhs[i])
            .collect()
    }

    /// Solves `J δ = −G` for the interior update; returns a full-length
    /// vector with zeros on boundary dofs.
    fn newton_direction(
        &mut self,
        v: &[f64],
        g: &[f64],
        dt: f64,
        step: usize,
    ) -> Result<Vec<f64>, StepError> {
        let lin_err = |source| StepError::LinearSolve { step, source };
        let zeta = self.model.zeta();
        let zp: Vec<f64> = v.iter().map(|&s| zeta.zeta_prime(s)).collect();
        let mut delta = vec![0.0; self.gd.n_dofs()];
        match &mut self.plan {
            SolvePlan::Full { solver } => {
                let mut triplets = Vec::new();
                for (ii, &i) in self.interior.iter().enumerate() {
                    triplets.push((ii, ii, self.gd.masses[i]));
                    for (j, a) in self.stiffness.row_entries(i) {
                        let jj = self.interior_of[j];
                        if jj != usize::MAX {
                            triplets.push((ii, jj, dt * a * zp[j]));
                        }
                    }
                }
                let jac = CsrMatrix::from_triplets(self.interior.len(), triplets);
                solver.factor(&jac).map_err(lin_err)?;
                let neg_g: Vec<f64> = g.iter().map(|x| -x).collect();
                let x = solver.solve_checked(&jac, &neg_g, LINEAR_TOL).map_err(lin_err)?;
                for (ii, &i) in self.interior.iter().enumerate() {
                    delta[i] = x[ii];
                }
            }
            SolvePlan::Condensed {
                n_cells,
                edges,
                edge_of,
                solver,
            } => {
                let n_cells = *n_cells;
                // Diagonal cell block J_cc (a region never couples two cells).
                let jcc: Vec<f64> = (0..n_cells)
                    .map(|c| self.gd.masses[c] + dt * self.stiffness.get(c, c) * zp[c])
                    .collect();
                // Reduced right-hand side: −G_e + J_ec J_cc⁻¹ G_c.
                let mut red: Vec<f64> = edges
                    .iter()
                    .map(|&fe| -g[self.interior_of[fe]])
                    .collect();
                for c in 0..n_cells {
                    let gc = g[self.interior_of[c]];
                    for (j, a) in self.stiffness.row_entries(c) {
                        if edge_of[j] != usize::MAX {
                            red[edge_of[j]] += dt * a * zp[c] * gc / jcc[c];
                        }
                    }
                }
                // Schur complement S = J_ee − J_ec J_cc⁻¹ J_ce.
                let mut triplets = Vec::new();
                for (ee, &fe) in edges.iter().enumerate() {
                    triplets.push((ee, ee, self.gd.masses[fe]));
                    for (j, a) in self.stiffness.row_entries(fe) {
                        if edge_of[j] != usize::MAX {
                            triplets.push((ee, edge_of[j], dt * a * zp[j]));
                        }
                    }
                }
                for c in 0..n_cells {
                    let nbr: Vec<(usize, f64)> = self
                        .stiffness
                        .row_entries(c)
                        .filter_map(|(j, a)| {
                            (edge_of[j] != usize::MAX).then_some((edge_of[j], a))
                        })
                        .collect();
                    for &(ea, aa) in &nbr {
                        let jec = dt * aa * zp[c];
                        for &(eb, ab) in &nbr {
                            let jce = dt * ab * zp[edges[eb]];
                            triplets.push((ea, eb, -jec * jce / jcc[c]));
                        }
                    }
                }
                let schur = CsrMatrix::from_triplets(edges.len(), triplets);
                solver.factor(&schur).map_err(lin_err)?;
                let de = solver.solve_checked(&schur, &red, LINEAR_TOL).map_err(lin_err)?;
                for (ee, &fe) in edges.iter().enumerate() {
                    delta[fe] = de[ee];
                }
                // Back-substitute the cell updates.
                for c in 0..n_cells {
                    let mut acc = -g[self.interior_of[c]];
                    for (j, a) in self.stiffness.row_entries(c) {
                        if edge_of[j] != usize::MAX {
                            acc -= dt * a * zp[j] * delta[j];
                        }
                    }
                    delta[c] = acc / jcc[c];
                }
            }
        }
        Ok(delta)
    }

    /// Advances one backward-Euler step of length `dt` using the per-dof
    /// noise increments `dw`.
    pub fn step(
        &mut self,
        state: &SchemeState,
        dw: &[f64],
        dt: f64,
    ) -> Result<SchemeState, StepError> {
        assert!(dt > 0.0, "step length must be positive");
        let n = self.gd.n_dofs();
        if dw.len() != n {
            return Err(StepError::NoiseSize {
                expected: n,
                got: dw.len(),
            });
        }
        let step = state.step + 1;
        let t_next = state.time + dt;
        let zeta = self.model.zeta();

        // Explicit noise: rhs_i = m_i (u_i + g(u_i) ΔW_i) at the old state.
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let amp = self.model.noise_amplitude(state.u[i]);
                self.gd.masses[i] * (state.u[i] + amp * dw[i])
            })
            .collect();
        let rhs_int: Vec<f64> = self.interior.iter().map(|&i| rhs[i]).collect();
        let rhs_norm = self.weighted_norm(&rhs_int);
        if !rhs_norm.is_finite() {
            return Err(StepError::NonFinite { step });
        }
        let tol = self.config.tolerance * (1.0 + rhs_norm);

        // Initial guess: previous solution with the new boundary datum.
        let mut v = state.u.clone();
        for i in 0..n {
            if self.gd.is_boundary[i] {
                v[i] = self.model.boundary_value(self.gd.anchors[i], t_next);
            }
        }
        let mut zeta_v: Vec<f64> = v.iter().map(|&s| zeta.zeta(s)).collect();
        let mut g = self.residual(&v, &zeta_v, &rhs, dt);
        let mut res = self.weighted_norm(&g);
        if !res.is_finite() {
            return Err(StepError::NonFinite { step });
        }
        self.last_residual_history.clear();
        self.last_residual_history.push(res);

        let mut iterations = 0;
        let mut relaxations = 0;
        while res > tol {
            if iterations == self.config.max_iterations {
                return Err(StepError::NewtonDiverged {
                    step,
                    iterations,
                    history: self.last_residual_history.clone(),
                });
            }
            iterations += 1;
            let delta = self.newton_direction(&v, &g, dt, step)?;

            // Damped line search; the θ = 1 trial is kept for the
            // relaxation fallback.
            let mut theta = 1.0;
            let mut halvings = 0;
            let mut full_trial: Option<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> = None;
            loop {
                let trial: Vec<f64> = v
                    .iter()
                    .zip(&delta)
                    .map(|(vi, di)| vi + theta * di)
                    .collect();
                let zeta_trial: Vec<f64> = trial.iter().map(|&s| zeta.zeta(s)).collect();
                let g_trial = self.residual(&trial, &zeta_trial, &rhs, dt);
                let res_trial = self.weighted_norm(&g_trial);
                if theta == 1.0 {
                    full_trial = Some((trial.clone(), zeta_trial.clone(), g_trial.clone(), res_trial));
                }
                let decreased = res_trial.is_finite()
                    && res_trial <= (1.0 - theta * self.config.sufficient_decrease) * res;
                if decreased {
                    v = trial;
                    zeta_v = zeta_trial;
                    g = g_trial;
                    res = res_trial;
                    break;
                }
                if halvings == self.config.max_halvings {
                    // Relax: accept the undamped step regardless.
                    let (tv, tz, tg, tr) =
                        full_trial.take().expect("θ = 1 is always tried first");
                    if !tr.is_finite() {
                        return Err(StepError::NonFinite { step });
                    }
                    v = tv;
                    zeta_v = tz;
                    g = tg;
                    res = tr;
                    relaxations += 1;
                    break;
                }
                halvings += 1;
                theta *= 0.5;
            }
            if !res.is_finite() {
                return Err(StepError::NonFinite { step });
            }
            self.last_residual_history.push(res);
        }

        Ok(SchemeState {
            step,
            time: t_next,
            u: v,
            zeta_u: zeta_v,
            newton_iterations: iterations,
            relaxations,
        })
    }

    /// Runs all `n_steps` uniform steps of one path, calling `observer` on
    /// every state (initial state included). `n_steps` must divide the
    /// driver's finest grid.
    pub fn run_path(
        &mut self,
        driver: &BrownianDriver,
        n_steps: usize,
        mut observer: impl FnMut(&SchemeState),
    ) -> Result<PathSummary, StepError> {
        assert!(n_steps >= 1);
        let n = self.gd.n_dofs();
        let scalar = if driver.q_spec().is_some() {
            None
        } else {
            Some(driver.increments_for(n_steps)?)
        };
        let dt = self.model.t_final() / n_steps as f64;
        let mut state = initial_state(self.gd, self.model);
        observer(&state);
        let mut total_newton_iterations = 0;
        let mut total_relaxations = 0;
        let mut max_step_iterations = 0;
        for step in 0..n_steps {
            let dw = match &scalar {
                Some(incs) => vec![incs[step]; n],
                None => driver.q_wiener_increments(n_steps, step, &self.gd.anchors)?,
            };
            state = self.step(&state, &dw, dt)?;
            total_newton_iterations += state.newton_iterations;
            total_relaxations += state.relaxations;
            max_step_iterations = max_step_iterations.max(state.newton_iterations);
            observer(&state);
        }
        Ok(PathSummary {
            final_state: state,
            steps: n_steps,
            total_newton_iterations,
            total_relaxations,
            max_step_iterations,
        })
    }
}
