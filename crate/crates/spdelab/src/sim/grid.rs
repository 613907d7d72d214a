//! Periodic lattice geometry and Fourier transforms.
//!
//! The torus [0, L)^d is sampled at N points per axis, x_j = jL/N, and
//! carries the discrete frequencies ξ_k = 2πk/L with signed indices
//! k ∈ {0, 1, …, N/2−1, −N/2, …, −1} in standard FFT order. Fields are
//! stored flat with axis 0 fastest; the transform pair is
//!
//! ```text
//! u(x_j) = Σ_k û_k e^{+i ξ_k · x_j},    û = Forward(u)/N^d,
//! ```
//!
//! so a Hermitian coefficient array (û_{−k} = conj û_k) synthesizes a
//! real field. Multi-dimensional transforms run axis by axis through a
//! single 1-d plan; axis 0 is contiguous and processed in place, higher
//! axes go through a gather/scatter line buffer.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Hard cap on N^d lattice points; keeps a handful of complex fields
/// comfortably inside desk-scale memory.
pub const MAX_LATTICE_POINTS: usize = 1 << 22;

/// Uniform periodic lattice on [0, L)^d.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeGrid {
    pub d: usize,
    /// Points per axis; a power of two ≥ 8.
    pub n: usize,
    /// Torus side length.
    pub l: f64,
}

impl LatticeGrid {
    pub fn new(d: usize, n: usize, l: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Domain(format!(
                "lattice dimension must be 1, 2, or 3, got {d}"
            )));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Domain(format!(
                "points per axis must be a power of two ≥ 8, got {n}"
            )));
        }
        if !l.is_finite() || !(l > 0.0) {
            return Err(Error::Domain(format!("torus side must be > 0, got {l}")));
        }
        let points = n.checked_pow(d as u32).unwrap_or(usize::MAX);
        if points > MAX_LATTICE_POINTS {
            return Err(Error::Domain(format!(
                "lattice has {points} points, budget is {MAX_LATTICE_POINTS}"
            )));
        }
        Ok(LatticeGrid { d, n, l })
    }

    /// Total number of lattice points N^d.
    pub fn points(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Signed frequency index of axis position i.
    pub fn signed_freq(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Frequency component ξ = 2πk/L of axis position i.
    pub fn xi_component(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.signed_freq(i) as f64 / self.l
    }

    /// Axis positions of a flat index; unused axes are 0.
    pub fn decompose(&self, flat: usize) -> [usize; 3] {
        debug_assert!(flat < self.points());
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for slot in idx.iter_mut().take(self.d) {
            *slot = rest % self.n;
            rest /= self.n;
        }
        idx
    }

    /// |ξ| of the frequency at a flat index.
    pub fn xi_norm(&self, flat: usize) -> f64 {
        let idx = self.decompose(flat);
        let mut sq = 0.0;
        for &i in idx.iter().take(self.d) {
            let c = self.xi_component(i);
            sq += c * c;
        }
        sq.sqrt()
    }

    /// Largest |k_i| of the signed frequency at a flat index.
    pub fn freq_inf_norm(&self, flat: usize) -> i64 {
        let idx = self.decompose(flat);
        idx.iter()
            .take(self.d)
            .map(|&i| self.signed_freq(i).abs())
            .max()
            .unwrap_or(0)
    }

    /// Flat index of −k; fixed points are the self-conjugate modes.
    pub fn conj_index(&self, flat: usize) -> usize {
        let idx = self.decompose(flat);
        let mut out = 0usize;
        for axis in (0..self.d).rev() {
            let c = (self.n - idx[axis]) % self.n;
            out = out * self.n + c;
        }
        out
    }

    /// Physical coordinate of axis position j.
    pub fn site_coord(&self, j: usize) -> f64 {
        self.l * j as f64 / self.n as f64
    }
}

/// Reusable 1-d plans plus line scratch for axis-wise d-dimensional
/// transforms. Forward and inverse are both unnormalized; hat
/// coefficients carry the 1/N^d factor, applied by the caller.
pub struct FftPlan {
    d: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Clone for FftPlan {
    fn clone(&self) -> Self {
        FftPlan {
            d: self.d,
            n: self.n,
            forward: Arc::clone(&self.forward),
            inverse: Arc::clone(&self.inverse),
            line: vec![Complex64::default(); self.line.len()],
            scratch: vec![Complex64::default(); self.scratch.len()],
        }
    }
}

impl FftPlan {
    pub fn new(grid: &LatticeGrid) -> FftPlan {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n);
        let inverse = planner.plan_fft_inverse(grid.n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        FftPlan {
            d: grid.d,
            n: grid.n,
            forward,
            inverse,
            line: vec![Complex64::default(); grid.n],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    fn transform(&mut self, data: &mut [Complex64], fwd: bool) {
        debug_assert_eq!(data.len(), self.n.pow(self.d as u32));
        let fft = if fwd { &self.forward } else { &self.inverse };
        // Axis 0 lines are contiguous; process handles all chunks at once.
        fft.process_with_scratch(data, &mut self.scratch);
        let mut stride = self.n;
        for _axis in 1..self.d {
            let lines = data.len() / self.n;
            for line_idx in 0..lines {
                let inner = line_idx % stride;
                let outer = line_idx / stride;
                let base = outer * stride * self.n + inner;
                for j in 0..self.n {
                    self.line[j] = data[base + j * stride];
                }
                fft.process_with_scratch(&mut self.line, &mut self.scratch);
                for j in 0..self.n {
                    data[base + j * stride] = self.line[j];
                }
            }
            stride *= self.n;
        }
    }

    /// Whether this plan was built for the given lattice shape.
    pub fn matches(&self, grid: &LatticeGrid) -> bool {
        self.d == grid.d && self.n == grid.n
    }

    /// Unnormalized forward transform along every axis.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    /// Unnormalized inverse transform along every axis.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.transform(data, false);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn grid_validation() {
        assert!(LatticeGrid::new(2, 64, 4.0).is_ok());
        assert!(LatticeGrid::new(0, 64, 4.0).is_err());
        assert!(LatticeGrid::new(4, 64, 4.0).is_err());
        assert!(LatticeGrid::new(2, 48, 4.0).is_err());
        assert!(LatticeGrid::new(2, 4, 4.0).is_err());
        assert!(LatticeGrid::new(2, 64, 0.0).is_err());
        assert!(LatticeGrid::new(2, 64, f64::NAN).is_err());
        // 256^3 = 16.8M points exceeds the budget; 128^3 = 2M fits.
        assert!(LatticeGrid::new(3, 256, 4.0).is_err());
        assert!(LatticeGrid::new(3, 128, 4.0).is_ok());
    }

    #[test]
    fn frequency_layout_matches_fft_order() {
        let g = LatticeGrid::new(1, 8, 4.0).unwrap();
        let freqs: Vec<i64> = (0..8).map(|i| g.signed_freq(i)).collect();
        assert_eq!(freqs, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!((g.xi_component(1) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((g.xi_component(7) + std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let g = LatticeGrid::new(2, 8, 4.0).unwrap();
        // Flat index of (k1, k2) = (3, 4): 3 + 8*4 = 35; |ξ| = (π/2)·5.
        assert!((g.xi_norm(35) - 2.5 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(g.freq_inf_norm(35), 4);
    }

    #[test]
    fn conjugation_is_an_involution_with_fixed_points() {
        for (d, n) in [(1usize, 16usize), (2, 8), (3, 8)] {
            let g = LatticeGrid::new(d, n, 2.0).unwrap();
            let mut fixed = 0;
            for flat in 0..g.points() {
                let c = g.conj_index(flat);
                assert_eq!(g.conj_index(c), flat, "involution at {flat}");
                // ξ(−k) = −ξ(k) except at the self-conjugate modes.
                assert!((g.xi_norm(c) - g.xi_norm(flat)).abs() < 1e-12);
                if c == flat {
                    fixed += 1;
                }
            }
            assert_eq!(fixed, 1usize << d, "self-conjugate count in d = {d}");
        }
    }

    #[test]
    fn fft_roundtrip_and_parseval() {
        let g = LatticeGrid::new(2, 16, 3.0).unwrap();
        let mut plan = FftPlan::new(&g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let orig: Vec<Complex64> = (0..g.points())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut data = orig.clone();
        plan.forward(&mut data);
        let scale = 1.0 / g.points() as f64;
        let hat: Vec<Complex64> = data.iter().map(|z| z * scale).collect();
        let phys_energy: f64 = orig.iter().map(|z| z.norm_sqr()).sum();
        let hat_energy: f64 = hat.iter().map(|z| z.norm_sqr()).sum();
        assert!(
            ((phys_energy - g.points() as f64 * hat_energy) / phys_energy).abs() < 1e-12,
            "Parseval: {phys_energy} vs {}",
            g.points() as f64 * hat_energy
        );
        let mut back = hat;
        plan.inverse(&mut back);
        for (a, b) in back.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12, "roundtrip");
        }
    }

    #[test]
    fn inverse_convention_synthesizes_cosines() {
        // û with equal mass at ±k gives u(x) = 2 a cos(ξ_k x).
        let g = LatticeGrid::new(1, 8, 4.0).unwrap();
        let mut plan = FftPlan::new(&g);
        let mut hat = vec![Complex64::default(); 8];
        hat[1] = Complex64::new(0.5, 0.0);
        hat[7] = Complex64::new(0.5, 0.0);
        plan.inverse(&mut hat);
        for j in 0..8 {
            let expect = (g.xi_component(1) * g.site_coord(j)).cos();
            assert!(
                (hat[j].re - expect).abs() < 1e-12 && hat[j].im.abs() < 1e-12,
                "site {j}: {} vs {expect}",
                hat[j].re
            );
        }
        // Odd coefficient pair gives a sine, fixing the sign convention.
        let mut hat = vec![Complex64::default(); 8];
        hat[1] = Complex64::new(0.0, -0.5);
        hat[7] = Complex64::new(0.0, 0.5);
        plan.inverse(&mut hat);
        let expect = (g.xi_component(1) * g.site_coord(1)).sin();
        assert!((hat[1].re - expect).abs() < 1e-12, "{} vs {expect}", hat[1].re);
    }

    #[test]
    fn axes_are_transformed_independently()
    {
        // A rank-one field f(x, y) = a(x) b(y) transforms to â ⊗ b̂.
        let g = LatticeGrid::new(2, 8, 1.0).unwrap();
        let mut plan = FftPlan::new(&g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut field: Vec<Complex64> = Vec::with_capacity(64);
        for j in 0..8 {
            for i in 0..8 {
                field.push(Complex64::new(a[i] * b[j], 0.0));
            }
        }
        plan.forward(&mut field);
        let mut ah: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut bh: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let g1 = LatticeGrid::new(1, 8, 1.0).unwrap();
        let mut plan1 = FftPlan::new(&g1);
        plan1.forward(&mut ah);
        plan1.forward(&mut bh);
        for j in 0..8 {
            for i in 0..8 {
                let expect = ah[i] * bh[j];
                assert!((field[i + 8 * j] - expect).norm() < 1e-10, "mode ({i},{j})");
            }
        }
    }
}
