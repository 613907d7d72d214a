//! Log-log least squares for scaling exponents.
//!
//! Every "≤ C t^γ" statement in the hypothesis set becomes a measurable
//! slope: fit log(value) against log(t) and report (slope, intercept, R²).
//! Constants are never asserted, only the slopes are.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FitDiagnostics {
    /// Fitted exponent: d log(value) / d log(t).
    pub slope: f64,
    /// log of the fitted constant.
    pub intercept: f64,
    /// Coefficient of determination in log-log coordinates.
    pub r_squared: f64,
}

/// Least-squares fit of log(value) vs log(t).
///
/// Callers should supply at least 8 strictly increasing abscissas, ideally
/// geometrically spaced so each scale carries equal weight. Exact power
/// laws are recovered to 10⁻¹⁰ in the slope with R² = 1.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<FitDiagnostics> {
    if points.len() < 8 {
        return Err(Error::Degenerate(format!(
            "exponent fit needs at least 8 points, got {}",
            points.len()
        )));
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::Domain(format!(
                "abscissas must be strictly increasing, got {} after {}",
                w[1].0, w[0].0
            )));
        }
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(t, v)| {
            if t > 0.0 && v > 0.0 && t.is_finite() && v.is_finite() {
                Ok((t.ln(), v.ln()))
            } else {
                Err(Error::Domain(format!(
                    "power-law fit needs strictly positive finite points, got ({t}, {v})"
                )))
            }
        })
        .collect::<Result<_>>()?;
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    // A constant series fits its own mean perfectly; avoid 0/0.
    let r_squared = if syy <= 1e-28 * n {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    Ok(FitDiagnostics {
        slope,
        intercept,
        r_squared,
    })
}

/// Geometric grid of m points from lo to hi inclusive.
pub fn geometric_grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && m >= 2);
    (0..m)
        .map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64))
        .collect()
}
