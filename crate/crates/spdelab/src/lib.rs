//! Numerical laboratory for stochastic wave and heat equations driven by
//! spatially homogeneous Gaussian noise.
//!
//! The crate has three layers:
//!
//! * **Spectral functionals** ([`kernels`], [`measures`], [`verify`]):
//!   quadrature for g, g₁, g₂ of the hypothesis set (A6), the increment
//!   integrals I₁–I₄, and the finiteness/modulus checks (A1)/(A3), all by
//!   radial reduction with explicit oscillatory tail bounds.
//! * **Lattice Monte Carlo** ([`sim`]): spectral synthesis of the noise on
//!   a periodic lattice, exact free-flow propagators in Fourier space, the
//!   coupled smoothing decomposition u^ε, and the exact Gaussian sampler
//!   for linear models.
//! * **Density analysis** ([`besov`], [`kde`], [`crit`]): iterated
//!   differences Δ_h^n, discrete B^s_{1,∞} norms, Gaussian-derivative L¹
//!   norms via Hermite polynomials, kernel density estimation, and the
//!   difference-decay criterion for density smoothness.
//!
//! The exponent algebra ([`exponents`]) ties the layers together:
//! γ̄ = (min(γ₁, γ₂) + δ)/γ and s_max = 1 − 1/γ̄.

pub mod besov;
pub mod crit;
pub mod error;
pub mod exponents;
pub mod fit;
pub mod hermite;
pub mod kde;
pub mod kernels;
pub mod measures;
pub mod model;
pub mod quad;
pub mod sim;
mod radial;
pub mod stats;
pub mod verify;

pub use besov::{besov_norm, besov_report, finite_difference, BesovReport, GridFunction};
pub use crit::{
    criterion_decay, master_bound_check, phi_family, DecayReport, DecayRow, MasterBoundPoint,
    MasterBoundReport, TestFunction,
};
pub use error::{Error, Result};
pub use exponents::{
    analytic_exponents, optimal_parameters, rational_exponents, ExponentFamily, ExponentReport,
    ExponentValue, OptimalParameters, Provenance, RationalExponents, RationalFamily,
};
pub use fit::{fit_exponent, geometric_grid, FitDiagnostics};
pub use hermite::{gaussian_derivative_l1, hermite};
pub use kde::{kde, silverman_bandwidth, DensityEstimate};
pub use kernels::{Family, SpectralKernel, SupEstimate};
pub use measures::{Atom, MeasureKind, SpectralMeasure};
pub use model::{Coefficient, ModelSpec};
pub use sim::{
    build_noise_weights, discrete_linear_variance, increment_curve, increment_moment,
    isometry_check, linear_exact_samples, run_replicas, simulate_at_origin, simulate_field,
    simulate_linear_exact, smoothing_curve, smoothing_pair, smoothing_replicas, FieldState,
    IsometryReport, LatticeGrid, MomentEstimate, NoiseSynth, ReplicaResult, SmoothingPoint,
    Stepper,
};
pub use stats::{
    erf, erfc, kolmogorov_cdf, kolmogorov_quantile, ks_test, mean_variance, normal_cdf, KsReport,
};
pub use verify::{
    check_a1, check_a3, compute_g, compute_g1, compute_g2, compute_increments, fitted_exponents,
    g_table, increment_table, A1Report, A3Report, CaveatValue, GRow, IncrementRow, Increments,
    QuadratureConfig,
};
