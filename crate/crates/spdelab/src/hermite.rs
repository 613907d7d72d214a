//! Hermite polynomials and Gaussian-derivative L¹ norms.
//!
//! Physicists' convention: H₀ = 1, H₁(y) = 2y, and
//!
//! ```text
//! H_{n+1}(y) = 2y·H_n(y) − 2n·H_{n−1}(y),
//! ```
//!
//! the convention under which the n-th derivative of the centered Gaussian
//! density φ_{σ²} carries the factor (σ²)^{-n/2}. The L¹ norm
//!
//! ```text
//! ‖φ^{(n)}‖_{L¹} = n! · 2^{-n/2} · (σ²)^{-n/2} · ∫|H_n(y)| e^{-y²} dy / √π
//! ```
//!
//! is assembled from the absolute Hermite moment ∫|H_n| e^{-y²} dy, which
//! has no closed form for n ≥ 2 and is computed once per order and cached.
//! The integrand is smooth between consecutive roots of H_n, so the moment
//! is integrated piecewise with the roots as panel edges: every piece is
//! analytic and Gauss-Legendre converges to near machine precision.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use crate::quad::integrate_gl;

/// H_n(y) by the three-term recurrence.
pub fn hermite(n: usize, y: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, 2.0 * y);
    for k in 1..n {
        let p2 = 2.0 * y * p1 - 2.0 * k as f64 * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// The n real roots of H_n, ascending. All roots lie strictly inside
/// |y| < √(2n+1), and consecutive roots are separated by more than
/// π/√(2n+1), so a scan finer than that separation brackets each one.
fn hermite_roots(n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let r = ((2 * n + 1) as f64).sqrt();
    let m = 16 * n + 16;
    let mut roots = Vec::with_capacity(n);
    let grid: Vec<(f64, f64)> = (0..=m)
        .map(|i| {
            let x = -r + 2.0 * r * i as f64 / m as f64;
            (x, hermite(n, x))
        })
        .collect();
    for w in grid.windows(2) {
        let (x0, v0) = w[0];
        let (x1, v1) = w[1];
        if v0 == 0.0 {
            roots.push(x0);
            continue;
        }
        if v1 == 0.0 || v0.signum() == v1.signum() {
            continue;
        }
        let (mut lo, mut hi, mut vlo) = (x0, x1, v0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let vm = hermite(n, mid);
            if vm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if vm.signum() == vlo.signum() {
                lo = mid;
                vlo = vm;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    debug_assert_eq!(roots.len(), n);
    roots
}

/// ∫ |H_n(y)| e^{-y²} dy, piecewise Gauss-Legendre between the roots.
/// Pieces longer than 1 are subdivided into unit panels; the window edge
/// √(2n+1) + 8 leaves a tail below machine precision relative to the
/// moment itself.
fn hermite_abs_moment(n: usize) -> f64 {
    let edge = ((2 * n + 1) as f64).sqrt() + 8.0;
    let mut cuts = vec![-edge];
    cuts.extend(hermite_roots(n));
    cuts.push(edge);
    let f = |y: f64| hermite(n, y).abs() * (-y * y).exp();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let panels = ((b - a).ceil() as usize).max(1);
        for p in 0..panels {
            let pa = a + (b - a) * p as f64 / panels as f64;
            let pb = a + (b - a) * (p + 1) as f64 / panels as f64;
            total += integrate_gl(&f, pa, pb, 24);
        }
    }
    total
}

fn moment_cache() -> &'static Mutex<HashMap<usize, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached_abs_moment(n: usize) -> f64 {
    if let Some(v) = moment_cache().lock().unwrap().get(&n) {
        return *v;
    }
    let v = hermite_abs_moment(n);
    moment_cache().lock().unwrap().insert(n, v);
    v
}

/// ‖φ^{(n)}‖_{L¹} for the centered Gaussian density with the given
/// variance: n! · 2^{-n/2} · variance^{-n/2} · ∫|H_n| e^{-y²} dy / √π.
/// The variance scaling is exact by construction; the n-dependent factor
/// is quadrature, cached per order.
pub fn gaussian_derivative_l1(n: usize, variance: f64) -> f64 {
    debug_assert!(variance > 0.0, "variance must be positive");
    let nf = (1..=n).fold(1.0, |acc, k| acc * k as f64);
    let scale = nf * (0.5f64).powf(n as f64 / 2.0) * variance.powf(-(n as f64) / 2.0);
    scale * cached_abs_moment(n) / PI.sqrt()
}
