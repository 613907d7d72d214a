//! Full problem description for ∂u = Λ-smoothed noise with coefficients.
//!
//! A model couples a kernel family, a spectral measure, a horizon T, and
//! the two scalar coefficients σ, b of the mild equation
//!
//! ```text
//! u(t,x) = ∫₀ᵗ∫ Λ(t−s, x−y) σ(u(s,y)) M(ds,dy)
//!        + ∫₀ᵗ∫ Λ(t−s, x−y) b(u(s,y)) dy ds.
//! ```
//!
//! Coefficients come from a small named registry so their Lipschitz
//! constants and ellipticity floors are known rather than declared on
//! trust; declarations are still cross-checked on a sample grid at
//! construction time.

use crate::error::{Error, Result};
use crate::kernels::SpectralKernel;
use crate::measures::SpectralMeasure;

/// Scalar coefficient from the built-in registry.
///
/// Registry syntax: `const:c`, `affine:a,b` for x ↦ a + b·x, and
/// `sin1p:c` for x ↦ c·(1 + sin(x)/2). The sine variant keeps
/// inf |σ| = c/2 > 0 for c > 0, giving a bounded nonlinear coefficient
/// with a strictly positive ellipticity floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coefficient {
    Const(f64),
    Affine { a: f64, b: f64 },
    Sin1p(f64),
}

impl Coefficient {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Const(c) => *c,
            Coefficient::Affine { a, b } => a + b * x,
            Coefficient::Sin1p(c) => c * (1.0 + 0.5 * x.sin()),
        }
    }

    /// Exact Lipschitz constant on R.
    pub fn lipschitz(&self) -> f64 {
        match self {
            Coefficient::Const(_) => 0.0,
            Coefficient::Affine { b, .. } => b.abs(),
            Coefficient::Sin1p(c) => 0.5 * c.abs(),
        }
    }

    /// Exact infimum of |coefficient| over R.
    pub fn inf_abs(&self) -> f64 {
        match self {
            Coefficient::Const(c) => c.abs(),
            // a + bx hits zero unless b = 0.
            Coefficient::Affine { a, b } => {
                if *b == 0.0 {
                    a.abs()
                } else {
                    0.0
                }
            }
            Coefficient::Sin1p(c) => 0.5 * c.abs(),
        }
    }

    /// Parse a registry string such as `const:1.5`, `affine:0.2,1`,
    /// `sin1p:1`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Domain(msg);
        let (name, args) = s
            .split_once(':')
            .ok_or_else(|| bad(format!("coefficient '{s}' is missing ':' arguments")))?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("coefficient '{s}': '{p}' is not a number")))
            })
            .collect::<Result<_>>()?;
        let want = |n: usize| -> Result<()> {
            if nums.len() != n {
                Err(bad(format!(
                    "coefficient '{name}' takes {n} argument(s), got {}",
                    nums.len()
                )))
            } else {
                Ok(())
            }
        };
        match name {
            "const" => {
                want(1)?;
                Ok(Coefficient::Const(nums[0]))
            }
            "affine" => {
                want(2)?;
                Ok(Coefficient::Affine {
                    a: nums[0],
                    b: nums[1],
                })
            }
            "sin1p" => {
                want(1)?;
                Ok(Coefficient::Sin1p(nums[0]))
            }
            _ => Err(bad(format!(
                "unknown coefficient '{name}': expected const, affine, or sin1p"
            ))),
        }
    }
}

impl std::fmt::Display for Coefficient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Coefficient::Const(c) => write!(f, "const:{c}"),
            Coefficient::Affine { a, b } => write!(f, "affine:{a},{b}"),
            Coefficient::Sin1p(c) => write!(f, "sin1p:{c}"),
        }
    }
}

/// Complete SPDE problem description.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub kernel: SpectralKernel,
    pub measure: SpectralMeasure,
    /// Spatial dimension; always equals measure.d.
    pub d: usize,
    /// Time horizon T > 0.
    pub t_max: f64,
    pub sigma: Coefficient,
    pub b: Coefficient,
    /// Declared ellipticity floor: inf |σ| ≥ sigma0. Zero is accepted so
    /// degenerate test models (σ ≡ 0) can be stepped; density conclusions
    /// need sigma0 > 0.
    pub sigma0: f64,
    /// Declared Lipschitz constants (L_σ, L_b).
    pub lipschitz_bounds: (f64, f64),
}

impl ModelSpec {
    /// Validates the declared constants against the registry closed forms
    /// and a sampled grid on [−50, 50].
    pub fn new(
        kernel: SpectralKernel,
        measure: SpectralMeasure,
        t_max: f64,
        sigma: Coefficient,
        b: Coefficient,
        sigma0: f64,
        lipschitz_bounds: (f64, f64),
    ) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Domain(format!("horizon T must be > 0, got {t_max}")));
        }
        if !(sigma0 >= 0.0) {
            return Err(Error::Domain(format!("sigma0 must be ≥ 0, got {sigma0}")));
        }
        if sigma.inf_abs() < sigma0 * (1.0 - 1e-12) {
            return Err(Error::Domain(format!(
                "declared sigma0 = {sigma0} exceeds inf |σ| = {}",
                sigma.inf_abs()
            )));
        }
        if sigma.lipschitz() > lipschitz_bounds.0 * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "σ has Lipschitz constant {}, declared bound {}",
                sigma.lipschitz(),
                lipschitz_bounds.0
            )));
        }
        if b.lipschitz() > lipschitz_bounds.1 * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "b has Lipschitz constant {}, declared bound {}",
                b.lipschitz(),
                lipschitz_bounds.1
            )));
        }
        let model = ModelSpec {
            d: measure.d,
            kernel,
            measure,
            t_max,
            sigma,
            b,
            sigma0,
            lipschitz_bounds,
        };
        model.sampled_checks()?;
        Ok(model)
    }

    /// Convenience constructor deriving sigma0 and the Lipschitz bounds
    /// from the registry closed forms.
    pub fn with_derived_bounds(
        kernel: SpectralKernel,
        measure: SpectralMeasure,
        t_max: f64,
        sigma: Coefficient,
        b: Coefficient,
    ) -> Result<Self> {
        let sigma0 = sigma.inf_abs();
        let bounds = (sigma.lipschitz(), b.lipschitz());
        Self::new(kernel, measure, t_max, sigma, b, sigma0, bounds)
    }

    /// Sampled verification of |σ(x)| ≥ σ₀ and of both Lipschitz bounds
    /// on a fixed grid of points and pairs in [−50, 50].
    fn sampled_checks(&self) -> Result<()> {
        let m = 401;
        let xs: Vec<f64> = (0..m).map(|i| -50.0 + 100.0 * i as f64 / (m - 1) as f64).collect();
        for &x in &xs {
            if self.sigma.eval(x).abs() < self.sigma0 * (1.0 - 1e-12) {
                return Err(Error::Domain(format!(
                    "|σ({x})| = {} falls below sigma0 = {}",
                    self.sigma.eval(x).abs(),
                    self.sigma0
                )));
            }
        }
        for w in xs.windows(7) {
            let (x, y) = (w[0], w[6]);
            let gap = (y - x).abs();
            let ds = (self.sigma.eval(y) - self.sigma.eval(x)).abs();
            let db = (self.b.eval(y) - self.b.eval(x)).abs();
            if ds > self.lipschitz_bounds.0 * gap * (1.0 + 1e-9) {
                return Err(Error::Domain(format!(
                    "σ violates its declared Lipschitz bound near x = {x}"
                )));
            }
            if db > self.lipschitz_bounds.1 * gap * (1.0 + 1e-9) {
                return Err(Error::Domain(format!(
                    "b violates its declared Lipschitz bound near x = {x}"
                )));
            }
        }
        Ok(())
    }
}
