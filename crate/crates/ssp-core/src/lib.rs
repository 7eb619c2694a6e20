//! Solver library for a stochastic Stefan problem with multiplicative noise,
//! discretised by gradient schemes on polytopal meshes.
//!
//! The library is organised bottom-up:
//!
//! * [`mesh`] — polytopal mesh loading, validation, geometry caches, the
//!   dual (vertex-centred) mesh of a triangulation, and point location.
//! * [`linalg`] — the sparse/banded linear algebra used by the implicit
//!   stepper: CSR matrices, reverse Cuthill–McKee ordering, and a banded LU
//!   factorisation with partial pivoting.
//! * [`model`] — the Stefan problem data: the piecewise-linear enthalpy map
//!   ζ, its primitive Ξ, noise amplitude, diffusion tensor, boundary/initial
//!   data for the two built-in test problems, and the Test-1 exact solution.
//! * [`noise`] — reproducible hierarchical Brownian increments on a finest
//!   dyadic grid with bit-exact aggregation to coarser grids, plus an
//!   optional truncated spectral (Q-type) expansion.
//! * [`gdm`] — the gradient-discretisation data model: lumped masses,
//!   gradient regions, stiffness assembly, and the quality diagnostics
//!   S_D, W_D and the discrete Poincaré constant ρ.
//! * [`disc`] — the two concrete discretisations: mass-lumped P1 on
//!   triangulations and a mass-lumped hybrid mimetic mixed (HMM) method on
//!   general polytopal meshes.
//! * [`stepper`] — one path of the implicit-diffusion / explicit-noise
//!   scheme with a damped semismooth Newton solve per time step.
//! * [`experiments`] — Monte Carlo ensembles, coarse-to-fine interpolation,
//!   relative error metrics, mushy-region statistics, and the reference
//!   trajectory cache.
//!
//! Determinism is a design contract throughout: given the same seed and
//! configuration, every quantity in this crate is bit-for-bit reproducible,
//! independent of thread count (the `parallel` feature only changes how
//! work is scheduled, never the arithmetic or its order in reductions).

pub mod disc;
pub mod experiments;
pub mod gdm;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod noise;
pub mod stepper;
