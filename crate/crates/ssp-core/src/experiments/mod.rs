//! Monte Carlo ensembles and their post-processing: coarse-to-fine
//! interpolation, relative space-time error metrics against a discrete or
//! exact reference, norm tables, Newton statistics, and mushy-region
//! (plateau occupation) time series.
//!
//! The central entry point is [`run_ensemble`]: it runs `P` independent
//! noise paths through every requested discretisation level, compares each
//! level against the reference, and reduces the per-path results *in path
//! order*, so a report is bit-for-bit identical no matter how paths were
//! scheduled across workers. With the `parallel` feature (default), paths
//! are distributed over a thread pool; without it they run sequentially —
//! producing the same bytes.
//!
//! Discrete fields are piecewise constant in time: the value on the
//! interval `(t^{n−1}, t^n]` is the state at `t^n`, so all space-time
//! integrals are exact sums over steps — no quadrature error in time. When
//! comparing grids, fine step `j` reads the coarse field at step
//! `⌈j·N_c/N_f⌉`.

mod ensemble;
mod interp;
mod metrics;

pub use ensemble::{
    mesh_size, mushy_stats, run_ensemble, EnsembleSpec, ExperimentReport, LevelReport,
    LevelSpec, MushySeries, NoiseKind, ReferenceKind, Scheme,
};
pub use interp::{InterpMode, Interpolator};
pub use metrics::{exact_errors, ErrorAccumulator, ErrorMetrics};

use crate::disc::DiscError;
use crate::gdm::{GdmError, GradientDiscretisation};
use crate::mesh::MeshError;
use crate::model::ZetaFunction;
use crate::noise::NoiseError;
use crate::stepper::StepError;
use thiserror::Error;

/// Failure modes of ensemble runs and post-processing.
#[derive(Debug, Error)]
pub enum ExperimentsError {
    #[error("path {path} failed: {source}")]
    PathFailed {
        path: u32,
        #[source]
        source: StepError,
    },
    #[error("fine anchor {index} at ({x}, {y}) lies outside the coarse mesh")]
    Location { index: usize, x: f64, y: f64 },
    #[error("coarse step count {coarse} does not divide the reference step count {reference}")]
    GridMismatch { coarse: usize, reference: usize },
    #[error("trajectory holds {got} states, expected {expected}")]
    MalformedTrajectory { expected: usize, got: usize },
    #[error("dof vector has {got} entries, expected {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("need at least {needed} paths, got {got}")]
    TooFewPaths { needed: usize, got: usize },
    #[error("level {label}: {message}")]
    InvalidLevel { label: String, message: String },
    #[error("the model has no exact solution to compare against")]
    NoExactSolution,
    #[error("plateau interval ({0}, {1}) is empty")]
    EmptyPlateau(f64, f64),
    #[error("trajectory cache {path}: {source}")]
    CacheIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Disc(#[from] DiscError),
    #[error(transparent)]
    Gdm(#[from] GdmError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// One path's discrete trajectory (`N + 1` states, `t = 0` included) plus
/// the Newton effort that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrajectory {
    /// Dof vectors `u^0, …, u^N`.
    pub states: Vec<Vec<f64>>,
    pub total_newton_iterations: usize,
    pub total_relaxations: usize,
    pub max_step_iterations: usize,
}

impl PathTrajectory {
    /// Number of time steps `N`.
    pub fn n_steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

/// Smallest power-of-two step count `N` with `T/N ≤ h²`, the coupling that
/// keeps the first-order time error from dominating the spatial error.
pub fn steps_for(t_final: f64, h: f64) -> usize {
    assert!(t_final > 0.0 && h > 0.0);
    let mut n = 1usize;
    while t_final / n as f64 > h * h {
        n = n
            .checked_mul(2)
            .expect("step count overflow: mesh size is unreasonably small");
    }
    n
}

/// `∫ Ξ(Π u) dx = Σ m_i Ξ(u_i)` — the energy functional of the scheme.
pub fn energy(gd: &GradientDiscretisation, zeta: &ZetaFunction, u: &[f64]) -> f64 {
    gd.masses
        .iter()
        .zip(u)
        .map(|(m, &s)| m * zeta.xi(s))
        .sum()
}

/// Measure of the region where the reconstruction lies strictly inside the
/// plateau interval: `Σ m_i` over dofs with `lo < u_i < hi`.
pub fn mushy_area(gd: &GradientDiscretisation, u: &[f64], plateau: (f64, f64)) -> f64 {
    let (lo, hi) = plateau;
    // Fold from +0.0: an empty iterator's `sum()` is -0.0, which would put
    // a spurious sign on areas in emitted tables.
    gd.masses
        .iter()
        .zip(u)
        .filter(|(_, &s)| lo < s && s < hi)
        .fold(0.0, |acc, (m, _)| acc + m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gdm::testgd::toy_two_dof;

    #[test]
    fn step_counts_follow_the_dyadic_coupling() {
        // T = 1 and the bundled triangular family's mesh sizes.
        assert_eq!(steps_for(1.0, 0.25), 16);
        assert_eq!(steps_for(1.0, 0.125), 64);
        assert_eq!(steps_for(1.0, 0.0625), 256);
        assert_eq!(steps_for(1.0, 0.05), 512);
        assert_eq!(steps_for(1.0, 0.03125), 1024);
        assert_eq!(steps_for(1.0, 0.015625), 4096);
        // Halving T halves the required resolution.
        assert_eq!(steps_for(0.5, 0.25), 8);
    }

    #[test]
    fn mushy_area_counts_strict_interior_only() {
        let gd = toy_two_dof(); // masses 0.5, 0.5
        let plateau = (1.0, 2.0);
        assert_eq!(mushy_area(&gd, &[1.5, 1.5], plateau), 1.0);
        assert_eq!(mushy_area(&gd, &[1.5, 3.0], plateau), 0.5);
        // Endpoints are excluded.
        assert_eq!(mushy_area(&gd, &[1.0, 2.0], plateau), 0.0);
        assert_eq!(mushy_area(&gd, &[2.5, 0.0], plateau), 0.0);
    }

    #[test]
    fn energy_is_the_lumped_xi_integral() {
        let gd = toy_two_dof();
        let zeta = ZetaFunction::latent_heat();
        // Ξ(3) = 3 and Ξ(1) = 0.5 for the built-in latent-heat map.
        assert_eq!(energy(&gd, &zeta, &[3.0, 1.0]), 0.5 * 3.0 + 0.5 * 0.5);
    }
}
