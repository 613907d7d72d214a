//! Fourier transforms FΛ(t)(ξ) of fundamental solutions.
//!
//! The wave family has FΛ(t)(ξ) = sin(t|ξ|)/|ξ| with the continuous
//! extension t at ξ = 0; the heat family has FΛ(t)(ξ) = exp(−4π²t|ξ|²).
//! Both are radial in ξ, which every downstream quadrature exploits.
//! Custom kernels plug in through an explicit radial evaluator; physical
//! space fundamental solutions are not accepted.

use std::fmt;
use std::sync::Arc;

/// Kernel family tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Wave,
    Heat,
    Custom,
}

/// Supremum estimate for sup_η |FΛ(t)(η)|².
#[derive(Clone, Copy, Debug)]
pub struct SupEstimate {
    /// Estimated supremum value.
    pub value: f64,
    /// Radius |η| at (or toward) which the supremum is attained.
    pub eta: f64,
    /// True when the value comes from a finite search grid rather than a
    /// closed form, hence is only a lower bound for the supremum.
    pub lower_estimate: bool,
}

/// Evaluator of FΛ(t)(ξ) for a radial kernel.
#[derive(Clone)]
pub enum SpectralKernel {
    Wave,
    Heat,
    Custom {
        /// (t, |ξ|) ↦ FΛ(t)(ξ); must be continuous and radial.
        eval_radial: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        /// Optional closed form for sup_η |FΛ(t)(η)|².
        sup_sq_closed_form: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    },
}

impl fmt::Debug for SpectralKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralKernel::Wave => write!(f, "SpectralKernel::Wave"),
            SpectralKernel::Heat => write!(f, "SpectralKernel::Heat"),
            SpectralKernel::Custom { .. } => write!(f, "SpectralKernel::Custom"),
        }
    }
}

impl SpectralKernel {
    pub fn family(&self) -> Family {
        match self {
            SpectralKernel::Wave => Family::Wave,
            SpectralKernel::Heat => Family::Heat,
            SpectralKernel::Custom { .. } => Family::Custom,
        }
    }

    /// FΛ(t)(ξ) as a function of t ≥ 0 and the radius r = |ξ| ≥ 0.
    pub fn eval_radial(&self, t: f64, r: f64) -> f64 {
        debug_assert!(t >= 0.0 && r >= 0.0);
        match self {
            SpectralKernel::Wave => {
                let x = t * r;
                // sin(tr)/r loses precision near x = 0; the series in x
                // keeps the removable singularity smooth.
                if x.abs() < 1e-4 {
                    t * (1.0 - x * x / 6.0 * (1.0 - x * x / 20.0))
                } else {
                    (x).sin() / r
                }
            }
            SpectralKernel::Heat => {
                (-4.0 * std::f64::consts::PI * std::f64::consts::PI * t * r * r).exp()
            }
            SpectralKernel::Custom { eval_radial, .. } => eval_radial(t, r),
        }
    }

    /// FΛ(t)(ξ) for a frequency vector ξ ∈ R^d.
    pub fn eval(&self, t: f64, xi: &[f64]) -> f64 {
        let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.eval_radial(t, r)
    }

    /// sup_η |FΛ(t)(η)|². Wave: t² (limit |η| → 0); Heat: 1 (η = 0);
    /// Custom without a closed form: log-spaced radial search with
    /// golden-section refinement, flagged as a lower estimate.
    pub fn sup_kernel_sq(&self, t: f64) -> SupEstimate {
        debug_assert!(t >= 0.0);
        match self {
            SpectralKernel::Wave => SupEstimate {
                value: t * t,
                eta: 0.0,
                lower_estimate: false,
            },
            SpectralKernel::Heat => SupEstimate {
                value: 1.0,
                eta: 0.0,
                lower_estimate: false,
            },
            SpectralKernel::Custom {
                sup_sq_closed_form: Some(s),
                ..
            } => SupEstimate {
                value: s(t),
                eta: f64::NAN,
                lower_estimate: false,
            },
            SpectralKernel::Custom { eval_radial, .. } => {
                let f = |r: f64| {
                    let v = eval_radial(t, r);
                    v * v
                };
                let (lo, hi) = (1e-6_f64, 1e3_f64);
                let m = 240;
                let mut best = (lo, f(lo));
                for i in 0..=m {
                    let r = lo * (hi / lo).powf(i as f64 / m as f64);
                    let v = f(r);
                    if v > best.1 {
                        best = (r, v);
                    }
                }
                let bl = best.0 / (hi / lo).powf(1.0 / m as f64);
                let bh = best.0 * (hi / lo).powf(1.0 / m as f64);
                let (eta, value) = crate::quad::golden_max(&f, bl, bh, 80);
                SupEstimate {
                    value,
                    eta,
                    lower_estimate: true,
                }
            }
        }
    }
}
