//! Monte Carlo ensembles over nested discretisation levels.
//!
//! [`run_ensemble`] runs `P` independent noise paths through every level of
//! an [`EnsembleSpec`] and reduces them into an [`ExperimentReport`]. All
//! levels of one ensemble share a single driver family: each path draws one
//! fine Brownian (or Q-Wiener) path and every level consumes aggregated
//! increments of it, so coarse and reference runs see the same randomness.
//!
//! Paths are embarrassingly parallel (the `parallel` feature maps them over
//! a rayon pool); reduction happens sequentially in path-index order, so
//! the report is bitwise independent of the worker schedule. Reference
//! trajectories — the dominant cost — can be cached to disk per path and
//! are reused byte-identically, Newton statistics included.

use std::path::{Path, PathBuf};

use super::interp::{InterpMode, Interpolator};
use super::metrics::{ErrorAccumulator, ErrorMetrics};
use super::{mushy_area, ExperimentsError, PathTrajectory};
use crate::disc::{build_hmm, build_mlp1};
use crate::gdm::{assemble_stiffness, GradientDiscretisation};
use crate::linalg::CsrMatrix;
use crate::mesh::{DualMesh, GeometryCache, PolytopalMesh};
use crate::model::{StefanModel, ZetaFunction};
use crate::noise::{BrownianDriver, QWienerSpec};
use crate::stepper::{NewtonConfig, Stepper};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Spatial scheme of one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Mass-lumped conforming P1 on a triangulation.
    Mlp1,
    /// Hybrid cell+edge scheme on a polytopal mesh.
    Hmm,
}

/// Driving noise shared by all levels of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    /// A single Brownian motion multiplying the whole amplitude field.
    Scalar,
    /// A truncated Q-Wiener expansion.
    QWiener(QWienerSpec),
}

/// What the coarse levels are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    /// The last level of the spec, which must be strictly finest; its own
    /// errors are exactly zero.
    FinestLevel,
    /// The model's closed-form solution (deterministic problems only).
    ExactSolution,
}

/// One discretisation level of an ensemble.
#[derive(Debug, Clone)]
pub struct LevelSpec {
    /// Name used in the report (and in output tables).
    pub label: String,
    /// Mesh file the level is built on.
    pub mesh: PathBuf,
    /// Spatial scheme.
    pub scheme: Scheme,
    /// Cell-mass parameter of the hybrid scheme (ignored by `Mlp1`).
    pub r: f64,
    /// Uniform time steps; must be a power of two so every level divides
    /// the shared fine noise grid.
    pub n_steps: usize,
}

/// Full description of a Monte Carlo convergence experiment.
pub struct EnsembleSpec {
    /// Levels in coarse-to-fine order; with [`ReferenceKind::FinestLevel`]
    /// the last one is the reference.
    pub levels: Vec<LevelSpec>,
    /// Number of Monte Carlo paths `P`.
    pub paths: u32,
    /// Base seed; path `p` uses the stream `(seed, p)`.
    pub seed: u64,
    /// The problem being solved.
    pub model: StefanModel,
    /// Driving noise.
    pub noise: NoiseKind,
    /// Open interval of enthalpies counted as mushy.
    pub plateau: (f64, f64),
    /// Newton solver configuration.
    pub newton: NewtonConfig,
    /// Error reference.
    pub reference: ReferenceKind,
    /// Directory for cached reference trajectories (`FinestLevel` only).
    pub cache_dir: Option<PathBuf>,
    /// Cache file prefix; must uniquely identify model, reference level,
    /// noise family, step count, and seed.
    pub cache_tag: String,
}

/// Time series of the mushy-region area over one level's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MushySeries {
    /// Time of each state, `t_n = n δt` including `t = 0`.
    pub times: Vec<f64>,
    /// Ensemble mean of the mushy area per state.
    pub expectation: Vec<f64>,
    /// Unbiased (divisor `P − 1`) standard deviation; empty when `P < 2`.
    pub std_dev: Vec<f64>,
}

/// Everything measured on one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    /// Level label from the spec.
    pub label: String,
    /// Mesh size (largest cell diameter).
    pub h: f64,
    /// Number of discrete unknowns.
    pub n_dofs: usize,
    /// Time steps.
    pub n_steps: usize,
    /// Relative errors against the reference.
    pub errors: ErrorMetrics,
    /// `√E[‖ζ(u)‖²]` over space-time.
    pub norm_l2_zeta: f64,
    /// `√E[‖∇ζ(u)‖²]` over space-time.
    pub norm_h1_zeta: f64,
    /// `E[∫ Ξ(u)]` at the final time.
    pub norm_xi_final: f64,
    /// Newton iterations averaged over all steps and paths.
    pub mean_newton_per_step: f64,
    /// Relaxed (non-decreasing) Newton updates over all steps and paths.
    pub total_relaxations: usize,
    /// Largest per-step Newton iteration count seen.
    pub max_newton_iterations: usize,
    /// Mushy-region statistics.
    pub mushy: MushySeries,
}

/// The reduced outcome of one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    /// Per-level results in spec order.
    pub levels: Vec<LevelReport>,
    /// Paths run.
    pub paths: u32,
    /// Base seed used.
    pub seed: u64,
}

/// A level after meshes are loaded: operators plus transfer to the
/// reference anchors.
struct LevelSetup {
    label: String,
    h: f64,
    n_steps: usize,
    gd: GradientDiscretisation,
    stiffness: CsrMatrix,
    /// `(gradient-linear, constant)` transfer to the reference anchors;
    /// `None` on the reference level itself and in exact-reference mode.
    interps: Option<(Interpolator, Interpolator)>,
}

/// One path's additive contribution to one level.
struct LevelContribution {
    err: ErrorAccumulator,
    l2_sq: f64,
    h1_sq: f64,
    xi_final: f64,
    mushy: Vec<f64>,
    newton_its: usize,
    relaxations: usize,
    max_its: usize,
}

/// Running totals of one level across paths.
struct LevelTally {
    err: ErrorAccumulator,
    l2_sq: f64,
    h1_sq: f64,
    xi_final: f64,
    mushy_paths: Vec<Vec<f64>>,
    newton_its: usize,
    relaxations: usize,
    max_its: usize,
}

impl LevelTally {
    fn new(t_final: f64, paths: usize) -> Self {
        Self {
            err: ErrorAccumulator::new(t_final),
            l2_sq: 0.0,
            h1_sq: 0.0,
            xi_final: 0.0,
            mushy_paths: Vec::with_capacity(paths),
            newton_its: 0,
            relaxations: 0,
            max_its: 0,
        }
    }

    fn absorb(&mut self, c: LevelContribution) {
        self.err.merge(&c.err);
        self.l2_sq += c.l2_sq;
        self.h1_sq += c.h1_sq;
        self.xi_final += c.xi_final;
        self.mushy_paths.push(c.mushy);
        self.newton_its += c.newton_its;
        self.relaxations += c.relaxations;
        self.max_its = self.max_its.max(c.max_its);
    }
}

/// Runs the full ensemble and reduces it to a report. Deterministic for a
/// fixed spec: path results are combined in path-index order regardless of
/// how they were scheduled.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<ExperimentReport, ExperimentsError> {
    validate_spec(spec)?;
    let setups = build_levels(spec)?;
    if let Some(dir) = &spec.cache_dir {
        std::fs::create_dir_all(dir).map_err(|e| cache_err(dir, e))?;
    }
    let n_max = setups.iter().map(|s| s.n_steps).max().expect("nonempty");

    let results = map_paths(spec.paths, |p| run_one_path(spec, &setups, n_max, p));

    let t_final = spec.model.t_final();
    let mut tallies: Vec<LevelTally> = setups
        .iter()
        .map(|_| LevelTally::new(t_final, spec.paths as usize))
        .collect();
    for result in results {
        let contributions = result?;
        for (tally, contribution) in tallies.iter_mut().zip(contributions) {
            tally.absorb(contribution);
        }
    }

    let p = spec.paths as f64;
    let levels = setups
        .iter()
        .zip(tallies)
        .map(|(setup, tally)| {
            let dt = t_final / setup.n_steps as f64;
            let times: Vec<f64> = (0..=setup.n_steps).map(|k| k as f64 * dt).collect();
            LevelReport {
                label: setup.label.clone(),
                h: setup.h,
                n_dofs: setup.gd.n_dofs(),
                n_steps: setup.n_steps,
                errors: tally.err.finish(),
                norm_l2_zeta: (tally.l2_sq / p).sqrt(),
                norm_h1_zeta: (tally.h1_sq / p).sqrt(),
                norm_xi_final: tally.xi_final / p,
                mean_newton_per_step: tally.newton_its as f64
                    / (p * setup.n_steps as f64),
                total_relaxations: tally.relaxations,
                max_newton_iterations: tally.max_its,
                mushy: series_stats(times, &tally.mushy_paths),
            }
        })
        .collect();
    Ok(ExperimentReport {
        levels,
        paths: spec.paths,
        seed: spec.seed,
    })
}

/// Mushy-region statistics of a standalone trajectory ensemble on one
/// discretisation. Requires `P ≥ 2` (the standard deviation uses divisor
/// `P − 1`) and a nonempty plateau interval.
pub fn mushy_stats(
    trajectories: &[PathTrajectory],
    gd: &GradientDiscretisation,
    t_final: f64,
    plateau: (f64, f64),
) -> Result<MushySeries, ExperimentsError> {
    if plateau.0 >= plateau.1 {
        return Err(ExperimentsError::EmptyPlateau(plateau.0, plateau.1));
    }
    if trajectories.len() < 2 {
        return Err(ExperimentsError::TooFewPaths {
            needed: 2,
            got: trajectories.len(),
        });
    }
    let n_states = trajectories[0].states.len();
    if n_states < 2 {
        return Err(ExperimentsError::MalformedTrajectory {
            expected: 2,
            got: n_states,
        });
    }
    for traj in trajectories {
        if traj.states.len() != n_states {
            return Err(ExperimentsError::MalformedTrajectory {
                expected: n_states,
                got: traj.states.len(),
            });
        }
        for state in &traj.states {
            if state.len() != gd.n_dofs() {
                return Err(ExperimentsError::SizeMismatch {
                    expected: gd.n_dofs(),
                    got: state.len(),
                });
            }
        }
    }
    let per_path: Vec<Vec<f64>> = trajectories
        .iter()
        .map(|traj| {
            traj.states
                .iter()
                .map(|u| mushy_area(gd, u, plateau))
                .collect()
        })
        .collect();
    let dt = t_final / (n_states - 1) as f64;
    let times = (0..n_states).map(|k| k as f64 * dt).collect();
    Ok(series_stats(times, &per_path))
}

fn validate_spec(spec: &EnsembleSpec) -> Result<(), ExperimentsError> {
    if spec.plateau.0 >= spec.plateau.1 {
        return Err(ExperimentsError::EmptyPlateau(spec.plateau.0, spec.plateau.1));
    }
    if spec.paths == 0 {
        return Err(ExperimentsError::TooFewPaths { needed: 1, got: 0 });
    }
    if spec.levels.is_empty() {
        return Err(ExperimentsError::InvalidLevel {
            label: "(spec)".into(),
            message: "at least one level is required".into(),
        });
    }
    for level in &spec.levels {
        if !level.n_steps.is_power_of_two() {
            return Err(ExperimentsError::InvalidLevel {
                label: level.label.clone(),
                message: format!(
                    "time step count {} must be a nonzero power of two",
                    level.n_steps
                ),
            });
        }
    }
    match spec.reference {
        ReferenceKind::FinestLevel => {
            let reference = spec.levels.last().expect("nonempty");
            for coarse in &spec.levels[..spec.levels.len() - 1] {
                if coarse.n_steps > reference.n_steps
                    || reference.n_steps % coarse.n_steps != 0
                {
                    return Err(ExperimentsError::GridMismatch {
                        coarse: coarse.n_steps,
                        reference: reference.n_steps,
                    });
                }
            }
        }
        ReferenceKind::ExactSolution => {
            let t = spec.model.t_final();
            if spec.model.exact_value([0.0, 0.0], t).is_none()
                || spec.model.exact_zeta_gradient([0.0, 0.0], t).is_none()
            {
                return Err(ExperimentsError::NoExactSolution);
            }
        }
    }
    Ok(())
}

fn build_levels(spec: &EnsembleSpec) -> Result<Vec<LevelSetup>, ExperimentsError> {
    struct Built {
        mesh: PolytopalMesh,
        geom: GeometryCache,
        gd: GradientDiscretisation,
        stiffness: CsrMatrix,
        h: f64,
    }
    let mut built = Vec::with_capacity(spec.levels.len());
    for level in &spec.levels {
        let mesh = PolytopalMesh::load(&level.mesh)?;
        let geom = GeometryCache::new(&mesh)?;
        let gd = match level.scheme {
            Scheme::Mlp1 => {
                let dual = DualMesh::new(&mesh, &geom)?;
                build_mlp1(&mesh, &geom, &dual)?
            }
            Scheme::Hmm => build_hmm(&mesh, &geom, level.r)?,
        };
        let stiffness = assemble_stiffness(&gd, spec.model.diffusion())?;
        let h = mesh_size(&mesh);
        built.push(Built {
            mesh,
            geom,
            gd,
            stiffness,
            h,
        });
    }

    if spec.reference == ReferenceKind::FinestLevel {
        let h_ref = built.last().expect("nonempty").h;
        for (level, b) in spec.levels.iter().zip(&built).take(built.len() - 1) {
            if b.h <= h_ref {
                return Err(ExperimentsError::InvalidLevel {
                    label: level.label.clone(),
                    message: format!(
                        "reference level must be strictly finest (h = {} vs coarse h = {})",
                        h_ref, b.h
                    ),
                });
            }
        }
    }

    let ref_anchors = (spec.reference == ReferenceKind::FinestLevel)
        .then(|| built.last().expect("nonempty").gd.anchors.clone());
    let n_levels = built.len();
    built
        .into_iter()
        .zip(&spec.levels)
        .enumerate()
        .map(|(index, (b, level))| {
            let interps = match &ref_anchors {
                Some(anchors) if index + 1 < n_levels => Some((
                    Interpolator::new(
                        &b.mesh,
                        &b.geom,
                        &b.gd,
                        anchors,
                        InterpMode::GradientLinear,
                    )?,
                    Interpolator::new(&b.mesh, &b.geom, &b.gd, anchors, InterpMode::Constant)?,
                )),
                _ => None,
            };
            Ok(LevelSetup {
                label: level.label.clone(),
                h: b.h,
                n_steps: level.n_steps,
                gd: b.gd,
                stiffness: b.stiffness,
                interps,
            })
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn map_paths<F>(paths: u32, f: F) -> Vec<Result<Vec<LevelContribution>, ExperimentsError>>
where
    F: Fn(u32) -> Result<Vec<LevelContribution>, ExperimentsError> + Sync + Send,
{
    (0..paths).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_paths<F>(paths: u32, f: F) -> Vec<Result<Vec<LevelContribution>, ExperimentsError>>
where
    F: Fn(u32) -> Result<Vec<LevelContribution>, ExperimentsError> + Sync + Send,
{
    (0..paths).map(f).collect()
}

fn run_one_path(
    spec: &EnsembleSpec,
    setups: &[LevelSetup],
    n_max: usize,
    path: u32,
) -> Result<Vec<LevelContribution>, ExperimentsError> {
    let t_final = spec.model.t_final();
    let driver = match spec.noise {
        NoiseKind::Scalar => BrownianDriver::generate(spec.seed, path, n_max, t_final)?,
        NoiseKind::QWiener(q) => {
            BrownianDriver::generate_q(spec.seed, path, n_max, t_final, q)?
        }
    };
    let zeta = spec.model.zeta();
    let mut contributions = Vec::with_capacity(setups.len());
    match spec.reference {
        ReferenceKind::ExactSolution => {
            for setup in setups {
                let traj = run_level(spec, setup, &driver, path)?;
                let mut err = ErrorAccumulator::new(t_final);
                err.add_exact_path(&traj, &setup.gd, &spec.model)?;
                contributions.push(contribution(&traj, setup, err, spec));
            }
        }
        ReferenceKind::FinestLevel => {
            let (ref_setup, coarse_setups) = setups.split_last().expect("nonempty");
            let ref_traj = reference_trajectory(spec, ref_setup, &driver, path)?;
            for setup in coarse_setups {
                let traj = run_level(spec, setup, &driver, path)?;
                let mut err = ErrorAccumulator::new(t_final);
                let (field, constant) = setup.interps.as_ref().expect("built for coarse");
                err.add_path(&ref_traj, &traj, &ref_setup.gd, field, constant, zeta)?;
                contributions.push(contribution(&traj, setup, err, spec));
            }
            // The reference level itself: empty accumulator ⇒ exact zeros.
            contributions.push(contribution(
                &ref_traj,
                ref_setup,
                ErrorAccumulator::new(t_final),
                spec,
            ));
        }
    }
    Ok(contributions)
}

fn run_level(
    spec: &EnsembleSpec,
    setup: &LevelSetup,
    driver: &BrownianDriver,
    path: u32,
) -> Result<PathTrajectory, ExperimentsError> {
    let mut stepper = Stepper::new(&setup.gd, &setup.stiffness, &spec.model, spec.newton);
    let mut states = Vec::with_capacity(setup.n_steps + 1);
    let summary = stepper
        .run_path(driver, setup.n_steps, |s| states.push(s.u.clone()))
        .map_err(|source| ExperimentsError::PathFailed { path, source })?;
    Ok(PathTrajectory {
        states,
        total_newton_iterations: summary.total_newton_iterations,
        total_relaxations: summary.total_relaxations,
        max_step_iterations: summary.max_step_iterations,
    })
}

fn reference_trajectory(
    spec: &EnsembleSpec,
    setup: &LevelSetup,
    driver: &BrownianDriver,
    path: u32,
) -> Result<PathTrajectory, ExperimentsError> {
    let file = spec
        .cache_dir
        .as_ref()
        .map(|dir| dir.join(format!("{}-p{:04}.bin", spec.cache_tag, path)));
    if let Some(file) = &file {
        if let Some(traj) = load_trajectory(file, setup.gd.n_dofs(), setup.n_steps)? {
            return Ok(traj);
        }
    }
    let traj = run_level(spec, setup, driver, path)?;
    if let Some(file) = &file {
        save_trajectory(file, &traj)?;
    }
    Ok(traj)
}

fn contribution(
    traj: &PathTrajectory,
    setup: &LevelSetup,
    err: ErrorAccumulator,
    spec: &EnsembleSpec,
) -> LevelContribution {
    let (l2_sq, h1_sq, xi_final) =
        space_time_norms(&setup.gd, spec.model.zeta(), traj, spec.model.t_final());
    let mushy = traj
        .states
        .iter()
        .map(|u| mushy_area(&setup.gd, u, spec.plateau))
        .collect();
    LevelContribution {
        err,
        l2_sq,
        h1_sq,
        xi_final,
        mushy,
        newton_its: traj.total_newton_iterations,
        relaxations: traj.total_relaxations,
        max_its: traj.max_step_iterations,
    }
}

/// Squared space-time norms of ζ(u) (values and reconstructed gradients)
/// plus the final-time energy `∫ Ξ(u)`.
fn space_time_norms(
    gd: &GradientDiscretisation,
    zeta: &ZetaFunction,
    traj: &PathTrajectory,
    t_final: f64,
) -> (f64, f64, f64) {
    let n_steps = traj.n_steps();
    let dt = t_final / n_steps as f64;
    let mut zu = vec![0.0; gd.n_dofs()];
    let mut l2_sq = 0.0;
    let mut h1_sq = 0.0;
    for n in 1..=n_steps {
        for (i, &u) in traj.states[n].iter().enumerate() {
            zu[i] = zeta.zeta(u);
        }
        for (z, m) in zu.iter().zip(&gd.masses) {
            l2_sq += dt * m * z * z;
        }
        for region in &gd.regions {
            let g = region.gradient(&zu);
            h1_sq += dt * region.measure * (g[0] * g[0] + g[1] * g[1]);
        }
    }
    let xi_final = super::energy(gd, zeta, &traj.states[n_steps]);
    (l2_sq, h1_sq, xi_final)
}

/// Mean and unbiased standard deviation per time index; the deviation is
/// left empty for fewer than two paths.
fn series_stats(times: Vec<f64>, per_path: &[Vec<f64>]) -> MushySeries {
    let p = per_path.len();
    let len = times.len();
    let mut expectation = vec![0.0; len];
    for series in per_path {
        for (e, v) in expectation.iter_mut().zip(series) {
            *e += v;
        }
    }
    for e in &mut expectation {
        *e /= p as f64;
    }
    let std_dev = if p >= 2 {
        let mut sum_sq = vec![0.0; len];
        for series in per_path {
            for (s, (v, e)) in sum_sq.iter_mut().zip(series.iter().zip(&expectation)) {
                let d = v - e;
                *s += d * d;
            }
        }
        sum_sq
            .into_iter()
            .map(|s| (s / (p as f64 - 1.0)).sqrt())
            .collect()
    } else {
        Vec::new()
    };
    MushySeries {
        times,
        expectation,
        std_dev,
    }
}

/// Largest cell diameter of the mesh, the `h` used by level reports and by
/// the `δt ≤ h²` step-count policy.
pub fn mesh_size(mesh: &PolytopalMesh) -> f64 {
    let vertices = mesh.vertices();
    let mut max_sq: f64 = 0.0;
    for cell in mesh.cells() {
        for (k, &a) in cell.vertices.iter().enumerate() {
            for &b in &cell.vertices[k + 1..] {
                let (pa, pb) = (vertices[a], vertices[b]);
                let dx = pa[0] - pb[0];
                let dy = pa[1] - pb[1];
                max_sq = max_sq.max(dx * dx + dy * dy);
            }
        }
    }
    max_sq.sqrt()
}

fn cache_err(path: &Path, source: std::io::Error) -> ExperimentsError {
    ExperimentsError::CacheIo {
        path: path.display().to_string(),
        source,
    }
}

/// Cache layout: five little-endian `u64` words — dof count, step count,
/// total Newton iterations, total relaxations, max per-step iterations —
/// followed by `(N+1)·n_dofs` little-endian `f64` state values. A missing,
/// truncated, or mismatched file reads as `None` and is recomputed.
const CACHE_HEADER: usize = 40;

fn load_trajectory(
    file: &Path,
    n_dofs: usize,
    n_steps: usize,
) -> Result<Option<PathTrajectory>, ExperimentsError> {
    let bytes = match std::fs::read(file) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(cache_err(file, e)),
    };
    if bytes.len() != CACHE_HEADER + (n_steps + 1) * n_dofs * 8 {
        return Ok(None);
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    if word(0) != n_dofs as u64 || word(1) != n_steps as u64 {
        return Ok(None);
    }
    let mut offset = CACHE_HEADER;
    let mut states = Vec::with_capacity(n_steps + 1);
    for _ in 0..=n_steps {
        let mut state = Vec::with_capacity(n_dofs);
        for _ in 0..n_dofs {
            state.push(f64::from_le_bytes(
                bytes[offset..offset + 8].try_into().expect("8 bytes"),
            ));
            offset += 8;
        }
        states.push(state);
    }
    Ok(Some(PathTrajectory {
        states,
        total_newton_iterations: word(2) as usize,
        total_relaxations: word(3) as usize,
        max_step_iterations: word(4) as usize,
    }))
}

fn save_trajectory(file: &Path, traj: &PathTrajectory) -> Result<(), ExperimentsError> {
    let n_dofs = traj.states[0].len();
    let mut bytes = Vec::with_capacity(CACHE_HEADER + traj.states.len() * n_dofs * 8);
    for word in [
        n_dofs as u64,
        traj.n_steps() as u64,
        traj.total_newton_iterations as u64,
        traj.total_relaxations as u64,
        traj.max_step_iterations as u64,
    ] {
        bytes.extend_from_slice(&word.to_le_bytes());
    }
    for state in &traj.states {
        for &v in state {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(file, bytes).map_err(|e| cache_err(file, e))
}
