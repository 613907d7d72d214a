//! Spectral measures μ of spatially homogeneous noises.
//!
//! Three kinds are supported: the Riesz family μ(dξ) = |ξ|^{β−d} dξ with
//! 0 < β < min(2, d), finite atomic measures Σ mᵢ δ_{ξᵢ}, and finite
//! measures with a radial Lebesgue density. All are nonnegative and
//! symmetric under ξ ↦ −ξ (atom lists are symmetrized on construction),
//! which is what makes the synthesized noise real-valued.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::sphere_area;

/// One atom of a finite atomic spectral measure.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub xi: Vec<f64>,
    pub mass: f64,
}

#[derive(Clone)]
pub enum MeasureKind {
    /// μ(dξ) = |ξ|^{β−d} dξ.
    Riesz { beta: f64 },
    /// μ = Σ mᵢ (δ_{ξᵢ} + δ_{−ξᵢ})/2, stored with both signed atoms listed.
    FiniteAtoms(Vec<Atom>),
    /// μ(dξ) = f(|ξ|) dξ with f ≥ 0 integrable.
    FiniteRadialDensity(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureKind::Riesz { beta } => write!(f, "Riesz {{ beta: {beta} }}"),
            MeasureKind::FiniteAtoms(a) => write!(f, "FiniteAtoms({} atoms)", a.len()),
            MeasureKind::FiniteRadialDensity(_) => write!(f, "FiniteRadialDensity(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectralMeasure {
    pub kind: MeasureKind,
    /// Spatial (and frequency) dimension d ≥ 1.
    pub d: usize,
}

impl SpectralMeasure {
    /// Riesz measure; requires 0 < β < min(2, d).
    pub fn riesz(d: usize, beta: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        let cap = 2.0_f64.min(d as f64);
        if !(beta > 0.0 && beta < cap) || !beta.is_finite() {
            return Err(Error::Domain(format!(
                "Riesz exponent beta must lie in (0, {cap}) for d = {d}, got {beta}"
            )));
        }
        Ok(SpectralMeasure {
            kind: MeasureKind::Riesz { beta },
            d,
        })
    }

    /// Finite atomic measure. Atoms are symmetrized: each input (ξ, m)
    /// contributes m/2 at ξ and m/2 at −ξ (so ξ = 0 keeps mass m), keeping
    /// μ symmetric. Requires every mass ≥ 0 and a positive total.
    pub fn finite_atoms(d: usize, atoms: &[(Vec<f64>, f64)]) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        let mut total = 0.0;
        let mut sym = Vec::new();
        for (xi, mass) in atoms {
            if xi.len() != d {
                return Err(Error::Domain(format!(
                    "atom frequency has dimension {}, expected {d}",
                    xi.len()
                )));
            }
            if !(*mass >= 0.0) || !mass.is_finite() {
                return Err(Error::Domain(format!("atom mass must be ≥ 0, got {mass}")));
            }
            total += mass;
            if xi.iter().all(|x| *x == 0.0) {
                sym.push(Atom {
                    xi: xi.clone(),
                    mass: *mass,
                });
            } else {
                let neg: Vec<f64> = xi.iter().map(|x| -x).collect();
                sym.push(Atom {
                    xi: xi.clone(),
                    mass: 0.5 * mass,
                });
                sym.push(Atom {
                    xi: neg,
                    mass: 0.5 * mass,
                });
            }
        }
        if !(total > 0.0) {
            return Err(Error::Domain(
                "finite atomic measure needs strictly positive total mass".into(),
            ));
        }
        Ok(SpectralMeasure {
            kind: MeasureKind::FiniteAtoms(sym),
            d,
        })
    }

    /// Finite measure with radial density f(|ξ|); f must be ≥ 0 and decay
    /// fast enough that ∫ f(|ξ|) dξ < ∞ (checked only where integrated).
    pub fn finite_radial(d: usize, density: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        Ok(SpectralMeasure {
            kind: MeasureKind::FiniteRadialDensity(density),
            d,
        })
    }

    /// Density of μ at radius r > 0. Errors for atomic measures, which
    /// have no density.
    pub fn radial_weight(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("radius must be positive, got {r}")));
        }
        match &self.kind {
            MeasureKind::Riesz { beta } => Ok(r.powf(beta - self.d as f64)),
            MeasureKind::FiniteRadialDensity(f) => Ok(f(r)),
            MeasureKind::FiniteAtoms(_) => Err(Error::Domain(
                "atomic measures have no radial density".into(),
            )),
        }
    }

    /// Total mass for atomic measures.
    pub fn total_atom_mass(&self) -> Option<f64> {
        match &self.kind {
            MeasureKind::FiniteAtoms(atoms) => Some(atoms.iter().map(|a| a.mass).sum()),
            _ => None,
        }
    }

    /// ω_{d−1} ∫₀^∞ G(r) f(r) r^{d−1} dr weight factor helper: surface
    /// area of the unit sphere in this dimension.
    pub fn sphere_factor(&self) -> f64 {
        sphere_area(self.d)
    }
}
