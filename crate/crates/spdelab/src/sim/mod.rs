//! Lattice Monte Carlo for the stochastic wave and heat equations.
//!
//! The continuum problem on R^d is replaced by a periodic lattice: the
//! torus [0, L)^d sampled at N points per axis carries band-limited
//! homogeneous noise whose per-mode variances are the spectral cell
//! masses μ(C_k), and the mild dynamics advance by exact mode-wise
//! propagators with the forcing σ(u) Ẇ + b(u) frozen at the left
//! endpoint of each step. For L and N large the law of u(t, 0)
//! approaches the continuum one; for constant σ the variance of the
//! scheme is available in closed form ([`discrete_linear_variance`]),
//! which separates lattice bias from Monte Carlo error in tests.
//!
//! Layers:
//!
//! * [`grid`]: torus geometry, FFT-ordered frequencies, axis-wise FFT
//!   plans.
//! * [`noise`]: spectral cell masses and Hermitian Gaussian increments.
//! * [`field`]: hat-space states and the one-step Duhamel update.
//! * [`run`]: seeded replica drivers, smoothing pairs, increment
//!   moments, and the stochastic-convolution/drift isometry check.

pub mod field;
pub mod grid;
pub mod noise;
pub mod run;

pub use field::{FieldState, Stepper};
pub use grid::{FftPlan, LatticeGrid, MAX_LATTICE_POINTS};
pub use noise::{build_noise_weights, synthesize_increment, NoiseSynth};
pub use run::{
    discrete_linear_variance, increment_curve, increment_moment, isometry_check,
    linear_exact_samples, run_replicas, simulate_at_origin, simulate_field, simulate_linear_exact,
    smoothing_curve, smoothing_pair, smoothing_replicas, IsometryReport, MomentEstimate,
    ReplicaResult, SmoothingPoint,
};
