//! Exponent algebra: (δ, γ, γ₁, γ₂) ↦ γ̄ ↦ s_max.
//!
//! The density of u(t, x) lies in the Besov space B^s_{1,∞} for every
//! s < s_max = 1 − 1/γ̄ with γ̄ = (min(γ₁, γ₂) + δ)/γ, provided γ̄ > 1.
//! The built-in families have closed-form exponents:
//!
//! | family         | δ       | γ = γ₁  | γ₂ | γ̄             | s_max           |
//! |----------------|---------|---------|----|----------------|-----------------|
//! | wave, Riesz β  | 2 − β   | 3 − β   | 3  | (5−2β)/(3−β)   | (2−β)/(5−2β)    |
//! | wave, finite μ | 2       | 3       | 3  | 5/3            | 2/5             |
//! | heat, Riesz β  | 1 − β/2 | 1 − β/2 | 1  | 2              | 1/2             |
//! | heat, finite μ | 1       | 1       | 1  | 2              | 1/2             |
//!
//! A rational-arithmetic path reproduces the table exactly; the floating
//! path feeds reports and mixed analytic/fitted pipelines.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::FitDiagnostics;

/// Built-in kernel/measure family with its scaling parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExponentFamily {
    WaveRiesz { beta: f64 },
    WaveFinite,
    HeatRiesz { beta: f64 },
    HeatFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Analytic,
    Fitted,
}

/// One exponent together with how it was obtained.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentValue {
    pub value: f64,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitDiagnostics>,
}

impl ExponentValue {
    pub fn analytic(value: f64) -> Self {
        ExponentValue {
            value,
            provenance: Provenance::Analytic,
            fit: None,
        }
    }

    pub fn fitted(fit: FitDiagnostics) -> Self {
        ExponentValue {
            value: fit.slope,
            provenance: Provenance::Fitted,
            fit: Some(fit),
        }
    }
}

/// The (δ, γ, γ₁, γ₂, γ̄, s_max) tuple with provenance per component.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentReport {
    pub delta: ExponentValue,
    pub gamma: ExponentValue,
    pub gamma1: ExponentValue,
    pub gamma2: ExponentValue,
    pub gamma_bar: f64,
    pub s_max: f64,
}

impl ExponentReport {
    /// Assembles γ̄ and s_max from the four primary exponents.
    pub fn from_components(
        delta: ExponentValue,
        gamma: ExponentValue,
        gamma1: ExponentValue,
        gamma2: ExponentValue,
    ) -> Result<Self> {
        if !(gamma.value > 0.0) {
            return Err(Error::Domain(format!(
                "gamma must be positive, got {}",
                gamma.value
            )));
        }
        let gamma_bar = (gamma1.value.min(gamma2.value) + delta.value) / gamma.value;
        let s_max = 1.0 - 1.0 / gamma_bar;
        Ok(ExponentReport {
            delta,
            gamma,
            gamma1,
            gamma2,
            gamma_bar,
            s_max,
        })
    }
}

/// Exact exponent tuple over the rationals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RationalExponents {
    pub delta: Ratio<i64>,
    pub gamma: Ratio<i64>,
    pub gamma1: Ratio<i64>,
    pub gamma2: Ratio<i64>,
    pub gamma_bar: Ratio<i64>,
    pub s_max: Ratio<i64>,
}

/// Built-in family with an exactly rational scaling parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RationalFamily {
    WaveRiesz { beta: Ratio<i64> },
    WaveFinite,
    HeatRiesz { beta: Ratio<i64> },
    HeatFinite,
}

fn ratio(n: i64, d: i64) -> Ratio<i64> {
    Ratio::new(n, d)
}

/// Exact exponent algebra. γ̄ and s_max are computed from the components
/// via the general formulas and cross-checked against the per-family
/// closed forms; any mismatch is a programming error, not data.
pub fn rational_exponents(family: RationalFamily) -> Result<RationalExponents> {
    let one = ratio(1, 1);
    let (delta, gamma, gamma1, gamma2) = match family {
        RationalFamily::WaveRiesz { beta } => {
            validate_rational_beta(beta)?;
            (ratio(2, 1) - beta, ratio(3, 1) - beta, ratio(3, 1) - beta, ratio(3, 1))
        }
        RationalFamily::WaveFinite => (ratio(2, 1), ratio(3, 1), ratio(3, 1), ratio(3, 1)),
        RationalFamily::HeatRiesz { beta } => {
            validate_rational_beta(beta)?;
            let e = one - beta / ratio(2, 1);
            (e, e, e, one)
        }
        RationalFamily::HeatFinite => (one, one, one, one),
    };
    let gamma_bar = (gamma1.min(gamma2) + delta) / gamma;
    let s_max = one - one / gamma_bar;
    let closed_form_s = match family {
        RationalFamily::WaveRiesz { beta } => {
            (ratio(2, 1) - beta) / (ratio(5, 1) - ratio(2, 1) * beta)
        }
        RationalFamily::WaveFinite => ratio(2, 5),
        RationalFamily::HeatRiesz { .. } | RationalFamily::HeatFinite => ratio(1, 2),
    };
    assert_eq!(s_max, closed_form_s, "exponent algebra drifted from the closed form");
    if let RationalFamily::HeatRiesz { .. } | RationalFamily::HeatFinite = family {
        assert_eq!(gamma_bar, ratio(2, 1));
    }
    Ok(RationalExponents {
        delta,
        gamma,
        gamma1,
        gamma2,
        gamma_bar,
        s_max,
    })
}

fn validate_rational_beta(beta: Ratio<i64>) -> Result<()> {
    if beta <= ratio(0, 1) || beta >= ratio(2, 1) {
        return Err(Error::Domain(format!(
            "Riesz exponent beta must lie in (0, 2), got {beta}"
        )));
    }
    Ok(())
}

/// Closed-form exponents with provenance Analytic. The β range check here
/// covers only β ∈ (0, 2); the dimension cap β < d is a property of the
/// measure and checked at measure construction.
pub fn analytic_exponents(family: ExponentFamily) -> Result<ExponentReport> {
    let (delta, gamma, gamma1, gamma2) = match family {
        ExponentFamily::WaveRiesz { beta } => {
            validate_beta(beta)?;
            (2.0 - beta, 3.0 - beta, 3.0 - beta, 3.0)
        }
        ExponentFamily::WaveFinite => (2.0, 3.0, 3.0, 3.0),
        ExponentFamily::HeatRiesz { beta } => {
            validate_beta(beta)?;
            let e = 1.0 - beta / 2.0;
            (e, e, e, 1.0)
        }
        ExponentFamily::HeatFinite => (1.0, 1.0, 1.0, 1.0),
    };
    let report = ExponentReport::from_components(
        ExponentValue::analytic(delta),
        ExponentValue::analytic(gamma),
        ExponentValue::analytic(gamma1),
        ExponentValue::analytic(gamma2),
    )?;
    let closed_form_s = match family {
        ExponentFamily::WaveRiesz { beta } => (2.0 - beta) / (5.0 - 2.0 * beta),
        ExponentFamily::WaveFinite => 0.4,
        ExponentFamily::HeatRiesz { .. } | ExponentFamily::HeatFinite => 0.5,
    };
    assert!(
        (report.s_max - closed_form_s).abs() < 1e-14,
        "exponent algebra drifted from the closed form"
    );
    Ok(report)
}

fn validate_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 2.0) || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "Riesz exponent beta must lie in (0, 2), got {beta}"
        )));
    }
    Ok(())
}

/// The optimizing parameters of the Besov estimate: α = 1/γ̄, ρ = 2, and
/// the coupling rule ε(t, h) = (t/2)|h|^{ρ/γ}. The boundary identity
/// α·ρ·γ̄/2 = 1 holds by construction.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OptimalParameters {
    pub alpha: f64,
    pub rho: f64,
    /// γ of the report, kept so epsilon() is self-contained.
    pub gamma: f64,
}

impl OptimalParameters {
    /// ε = (t/2)|h|^{ρ/γ}.
    pub fn epsilon(&self, t: f64, h: f64) -> f64 {
        0.5 * t * h.abs().powf(self.rho / self.gamma)
    }
}

pub fn optimal_parameters(report: &ExponentReport) -> Result<OptimalParameters> {
    if !(report.gamma_bar > 1.0) {
        return Err(Error::Domain(format!(
            "Besov criterion needs gamma_bar > 1, got {}",
            report.gamma_bar
        )));
    }
    let p = OptimalParameters {
        alpha: 1.0 / report.gamma_bar,
        rho: 2.0,
        gamma: report.gamma.value,
    };
    debug_assert!((p.alpha * p.rho * report.gamma_bar / 2.0 - 1.0).abs() < 1e-12);
    Ok(p)
}
