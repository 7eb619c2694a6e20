//! Reproducible Wiener paths on a finest dyadic time grid, with bit-exact
//! aggregation to every coarser dyadic grid and an optional truncated
//! Q-Wiener expansion.
//!
//! # Counter-based generation
//!
//! Every finest-grid increment is a pure function of `(seed, path, mode,
//! step)`: a ChaCha12 generator is keyed by the master seed, its stream is
//! set to `mode · 2³² + path`, and its word position to `2 · step`, so one
//! 64-bit draw yields the increment. Any increment is therefore computable
//! independently in O(1), and ensembles can be generated in any order, on
//! any number of threads, with identical results.
//!
//! # Exact hierarchical aggregation
//!
//! Each raw Gaussian increment is rounded to the grid of multiples of
//! 2⁻⁴⁰. Every partial sum of increments along a path is then also a
//! multiple of 2⁻⁴⁰; as long as such a sum stays below 2¹³ in magnitude
//! (astronomically safe for Brownian paths on [0, 1]) it is exactly
//! representable in an `f64`, and IEEE-754 addition of exactly
//! representable sums is exact. Consequently coarse increments — chunk
//! sums of fine ones — are *bitwise* identical no matter the association
//! order, and `W(T)` is the same at every aggregation level. The rounding
//! perturbs each increment by at most 2⁻⁴¹, far below statistical
//! resolution.
//!
//! # Q-Wiener mode
//!
//! `W(t, x) = Σ_k q_k W_k(t) e_k(x)` over `K` modes with independent scalar
//! paths `W_k`. Mode 0 is the normalised constant `e₀ ≡ 1` and *is* the
//! scalar driver (same underlying path), so `K = 1, q₀ = 1` reproduces
//! scalar noise exactly; modes `k ≥ 1` are the tensor sines
//! `2·sin(aπx₁)sin(bπx₂)` enumerated along anti-diagonals
//! `(1,1), (1,2), (2,1), (1,3), …`. Coefficients follow a power law
//! `q_k = (k+1)^{−s}` or a geometric law `q_k = γ^k`.
//!
//! # Persistence
//!
//! Paths can be saved for cross-run reuse: a header of three little-endian
//! `u64`s (seed, N_max, path count) followed by, per path, `N_max`
//! little-endian `f64` fine increments.

mod normal;

pub use normal::{inverse_normal_cdf, standard_normal_from_u64, u64_to_uniform};

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

/// Rounding grid for increments; see the module docs for why this makes
/// chunk sums exact.
pub const QUANTUM: f64 = 1.0 / (1u64 << 40) as f64;

/// Errors from driver construction, aggregation queries, and persistence.
#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("finest step count {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("{n} does not divide the finest step count {n_max}")]
    NonDivisor { n: usize, n_max: usize },
    #[error("driver has no Q-Wiener configuration")]
    QModeAbsent,
    #[error("mode {mode} out of range (driver has {modes} modes)")]
    ModeOutOfRange { mode: usize, modes: usize },
    #[error("noise file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("noise file {path}: {message}")]
    Format { path: String, message: String },
}

/// Coefficient law for the Q-Wiener expansion; both are square-summable
/// over any truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientLaw {
    /// `q_k = (k+1)^{−exponent}` for 0-based mode `k`.
    Power { exponent: f64 },
    /// `q_k = ratio^k` for 0-based mode `k`, with `0 < ratio < 1`.
    Geometric { ratio: f64 },
}

impl CoefficientLaw {
    /// Coefficient `q_k` of 0-based mode `k`.
    pub fn coefficient(&self, mode: usize) -> f64 {
        match *self {
            CoefficientLaw::Power { exponent } => ((mode + 1) as f64).powf(-exponent),
            CoefficientLaw::Geometric { ratio } => ratio.powi(mode as i32),
        }
    }
}

/// Truncated Q-Wiener configuration: number of modes and coefficient law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QWienerSpec {
    pub modes: usize,
    pub law: CoefficientLaw,
}

/// Spatial basis function of 0-based mode `k` at `x ∈ (0,1)²`; mode 0 is
/// the normalised constant, higher modes tensor sines ordered along
/// anti-diagonals.
pub fn basis_value(mode: usize, x: [f64; 2]) -> f64 {
    if mode == 0 {
        return 1.0;
    }
    let (a, b) = basis_pair(mode);
    let pi = std::f64::consts::PI;
    2.0 * (a as f64 * pi * x[0]).sin() * (b as f64 * pi * x[1]).sin()
}

/// Frequency pair (a, b) of sine mode `k ≥ 1`: the k-th entry of the
/// anti-diagonal enumeration (1,1), (1,2), (2,1), (1,3), (2,2), (3,1), …
fn basis_pair(mode: usize) -> (usize, usize) {
    let mut j = mode;
    let mut d = 2usize;
    while j > d - 1 {
        j -= d - 1;
        d += 1;
    }
    (j, d - j)
}

/// One path of the driving noise: quantised fine increments per mode on the
/// finest grid, immutable after generation.
#[derive(Clone)]
pub struct BrownianDriver {
    seed: u64,
    path_index: u32,
    n_max: usize,
    dt_min: f64,
    /// Fine increments per mode; `mode_increments[0]` is the scalar path.
    mode_increments: Vec<Vec<f64>>,
    q_spec: Option<QWienerSpec>,
}

impl std::fmt::Debug for BrownianDriver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BrownianDriver")
            .field("seed", &self.seed)
            .field("path_index", &self.path_index)
            .field("n_max", &self.n_max)
            .field("dt_min", &self.dt_min)
            .field("modes", &self.mode_increments.len())
            .field("q_spec", &self.q_spec)
            .finish()
    }
}

/// Raw 64-bit word for `(seed, path, mode, step)` — the counter-based core.
/// Production paths are generated sequentially ([`generate_mode`]); tests
/// use this random-access form to pin the two addressing modes together.
#[cfg(test)]
fn counter_word(seed: u64, path_index: u32, mode: u32, step: u64) -> u64 {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((mode as u64) << 32 | path_index as u64);
    rng.set_word_pos((2 * step) as u128);
    rng.next_u64()
}

/// Rounds to the nearest multiple of [`QUANTUM`].
fn quantize(x: f64) -> f64 {
    (x / QUANTUM).round() * QUANTUM
}

fn generate_mode(seed: u64, path_index: u32, mode: u32, n_max: usize, dt_min: f64) -> Vec<f64> {
    // Sequential draws from one generator; identical to per-step
    // counter_word calls because each u64 consumes exactly two words.
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream((mode as u64) << 32 | path_index as u64);
    let scale = dt_min.sqrt();
    (0..n_max)
        .map(|_| quantize(scale * standard_normal_from_u64(rng.next_u64())))
        .collect()
}

impl BrownianDriver {
    /// Generates the scalar driver for `(seed, path_index)` with `n_max`
    /// fine steps on `[0, t_final]`.
    pub fn generate(
        seed: u64,
        path_index: u32,
        n_max: usize,
        t_final: f64,
    ) -> Result<Self, NoiseError> {
        if n_max == 0 || !n_max.is_power_of_two() {
            return Err(NoiseError::NotPowerOfTwo(n_max));
        }
        assert!(t_final > 0.0);
        let dt_min = t_final / n_max as f64;
        Ok(Self {
            seed,
            path_index,
            n_max,
            dt_min,
            mode_increments: vec![generate_mode(seed, path_index, 0, n_max, dt_min)],
            q_spec: None,
        })
    }

    /// Generates a driver carrying `spec.modes` independent mode paths for
    /// the truncated Q-Wiener expansion.
    pub fn generate_q(
        seed: u64,
        path_index: u32,
        n_max: usize,
        t_final: f64,
        spec: QWienerSpec,
    ) -> Result<Self, NoiseError> {
        assert!(spec.modes >= 1, "Q-Wiener expansion needs at least one mode");
        let mut driver = Self::generate(seed, path_index, n_max, t_final)?;
        for mode in 1..spec.modes {
            driver.mode_increments.push(generate_mode(
                seed,
                path_index,
                mode as u32,
                n_max,
                driver.dt_min,
            ));
        }
        driver.q_spec = Some(spec);
        Ok(driver)
    }

    /// Builds a scalar driver from explicit fine increments (persistence
    /// reload and perturbation tests).
    pub fn from_increments(
        seed: u64,
        path_index: u32,
        t_final: f64,
        increments: Vec<f64>,
    ) -> Result<Self, NoiseError> {
        let n_max = increments.len();
        if n_max == 0 || !n_max.is_power_of_two() {
            return Err(NoiseError::NotPowerOfTwo(n_max));
        }
        assert!(t_final > 0.0);
        Ok(Self {
            seed,
            path_index,
            n_max,
            dt_min: t_final / n_max as f64,
            mode_increments: vec![increments],
            q_spec: None,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u32 {
        self.path_index
    }

    /// Finest step count (a power of two).
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Finest step length.
    pub fn dt_min(&self) -> f64 {
        self.dt_min
    }

    /// Scalar fine increments (mode 0).
    pub fn fine_increments(&self) -> &[f64] {
        &self.mode_increments[0]
    }

    pub fn q_spec(&self) -> Option<&QWienerSpec> {
        self.q_spec.as_ref()
    }

    /// Scalar increments on the coarse grid with `n` steps; each entry is
    /// the exact sum of its `n_max / n` fine increments.
    pub fn increments_for(&self, n: usize) -> Result<Vec<f64>, NoiseError> {
        self.mode_increments_for(0, n)
    }

    /// Coarse increments of mode `mode`.
    pub fn mode_increments_for(&self, mode: usize, n: usize) -> Result<Vec<f64>, NoiseError> {
        let fine = self
            .mode_increments
            .get(mode)
            .ok_or(NoiseError::ModeOutOfRange {
                mode,
                modes: self.mode_increments.len(),
            })?;
        if n == 0 || self.n_max % n != 0 {
            return Err(NoiseError::NonDivisor {
                n,
                n_max: self.n_max,
            });
        }
        let chunk = self.n_max / n;
        Ok(fine.chunks(chunk).map(|c| c.iter().sum()).collect())
    }

    /// Terminal value `W(T)` of the scalar path — identical at every
    /// aggregation level by exactness of the chunk sums.
    pub fn w_final(&self) -> f64 {
        self.mode_increments[0].iter().sum()
    }

    /// Per-dof spatial noise increment of coarse step `step` (0-based) on
    /// the grid with `n` steps: `Σ_k q_k ΔW_k^{(step)} e_k(anchor_i)`.
    pub fn q_wiener_increments(
        &self,
        n: usize,
        step: usize,
        anchors: &[[f64; 2]],
    ) -> Result<Vec<f64>, NoiseError> {
        let spec = self.q_spec.ok_or(NoiseError::QModeAbsent)?;
        let mut out = vec![0.0; anchors.len()];
        for mode in 0..spec.modes {
            let dw = self.mode_increments_for(mode, n)?[step];
            let q = spec.law.coefficient(mode);
            for (o, &x) in out.iter_mut().zip(anchors) {
                *o += q * dw * basis_value(mode, x);
            }
        }
        Ok(out)
    }
}

/// Saves fine-increment paths: header (seed, N_max, count) as little-endian
/// `u64`s, then `count × N_max` little-endian `f64`s.
pub fn save_paths(
    file: &Path,
    seed: u64,
    n_max: usize,
    paths: &[Vec<f64>],
) -> Result<(), NoiseError> {
    let io_err = |source| NoiseError::Io {
        path: file.display().to_string(),
        source,
    };
    let mut buf = Vec::with_capacity(24 + paths.len() * n_max * 8);
    buf.extend_from_slice(&seed.to_le_bytes());
    buf.extend_from_slice(&(n_max as u64).to_le_bytes());
    buf.extend_from_slice(&(paths.len() as u64).to_le_bytes());
    for p in paths {
        assert_eq!(p.len(), n_max, "all paths must have N_max increments");
        for &v in p {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(file).map_err(io_err)?;
    f.write_all(&buf).map_err(io_err)
}

/// Loads a path file; returns (seed, N_max, paths).
pub fn load_paths(file: &Path) -> Result<(u64, usize, Vec<Vec<f64>>), NoiseError> {
    let io_err = |source| NoiseError::Io {
        path: file.display().to_string(),
        source,
    };
    let fmt_err = |message: String| NoiseError::Format {
        path: file.display().to_string(),
        message,
    };
    let mut bytes = Vec::new();
    std::fs::File::open(file)
        .map_err(io_err)?
        .read_to_end(&mut bytes)
        .map_err(io_err)?;
    if bytes.len() < 24 {
        return Err(fmt_err("truncated header".into()));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
    let seed = word(0);
    let n_max = word(1) as usize;
    let count = word(2) as usize;
    if n_max == 0 || !n_max.is_power_of_two() {
        return Err(fmt_err(format!("N_max {n_max} is not a power of two")));
    }
    let expected = 24 + count
        .checked_mul(n_max)
        .and_then(|w| w.checked_mul(8))
        .ok_or_else(|| fmt_err("path count overflows".into()))?;
    if bytes.len() != expected {
        return Err(fmt_err(format!(
            "expected {expected} bytes for {count} paths of {n_max} increments, found {}",
            bytes.len()
        )));
    }
    let mut paths = Vec::with_capacity(count);
    let mut off = 24;
    for _ in 0..count {
        let mut p = Vec::with_capacity(n_max);
        for _ in 0..n_max {
            p.push(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()));
            off += 8;
        }
        paths.push(p);
    }
    Ok((seed, n_max, paths))
}
