//! Quadrature toolbox shared by the spectral functionals.
//!
//! Three integration regimes cover everything the crate needs:
//!
//! * composite Gauss–Legendre on panels for smooth integrands,
//! * tanh–sinh (double-exponential) rules for panels with an integrable
//!   endpoint singularity `s^{β-1}` or `log(1/s)`,
//! * half-period panel splitting for oscillatory factors `sin(ω r)` so no
//!   panel spans more than a quarter period.
//!
//! The module also provides the angular factor
//!
//! ```text
//! A_d(ρ, a) = ∫_{S^{d-1}} |ρ u − a e₁|^{β-d} dS(u)
//! ```
//!
//! which converts shifted Riesz integrals ∫ G(|ζ|) |ζ − a e₁|^{β-d} dζ into
//! one-dimensional radial integrals ∫₀^∞ G(ρ) ρ^{d-1} A_d(ρ, a) dρ.
//! Closed forms exist for d = 1 and d = 3; other dimensions reduce to a
//! polar integral with an integrable concentration at θ = 0 when ρ ≈ a.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
pub struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn gl_cache() -> &'static Mutex<HashMap<usize, Arc<GlRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GlRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss–Legendre rule on [-1, 1], cached per order.
///
/// Nodes are the roots of the Legendre polynomial P_n, found by Newton
/// iteration from the Chebyshev-like initial guess cos(π (i + 3/4)/(n + 1/2)).
pub fn gauss_legendre(n: usize) -> Arc<GlRule> {
    assert!(n >= 1, "rule order must be positive");
    if let Some(rule) = gl_cache().lock().unwrap().get(&n) {
        return Arc::clone(rule);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            dp = if n == 1 {
                1.0
            } else {
                n as f64 * (x * p1 - p0) / (x * x - 1.0)
            };
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    let rule = Arc::new(GlRule { nodes, weights });
    gl_cache()
        .lock()
        .unwrap()
        .insert(n, Arc::clone(&rule));
    rule
}

/// ∫_a^b f(x) dx by a single n-point Gauss–Legendre panel.
pub fn integrate_gl<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in rule.nodes.iter().zip(rule.weights.iter()) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// ∫ f over the panels delimited by `edges` (ascending), n-point rule each.
pub fn integrate_panels<F: Fn(f64) -> f64 + ?Sized>(f: &F, edges: &[f64], n: usize) -> f64 {
    edges
        .windows(2)
        .map(|p| integrate_gl(f, p[0], p[1], n))
        .sum()
}

/// ∫₀^len f(s) ds where f may blow up like s^{β-1} (β > 0) or log(1/s) at
/// s = 0; the argument handed to f is the exact distance from the endpoint,
/// so callers can evaluate |ρ - c|-type factors without cancellation.
///
/// Tanh–sinh rule: s(t) = len/(1 + e^{π sinh t}), truncated where the
/// transformed integrand falls below ~1e-13 relative for the given
/// singularity strength. `beta_min` is a lower bound on β; pass 1.0 for
/// bounded or logarithmic integrands.
pub fn integrate_de_singular<F: Fn(f64) -> f64 + ?Sized>(f: &F, len: f64, beta_min: f64) -> f64 {
    assert!(len >= 0.0 && beta_min > 0.0);
    if len == 0.0 {
        return 0.0;
    }
    let h = 1.0 / 16.0;
    let b = beta_min.min(1.0);
    let mut t_max = 5.0_f64;
    for _ in 0..4 {
        t_max = ((30.0 + t_max) / (b * PI)).asinh();
    }
    let k_max = (t_max / h).ceil() as i64;
    let mut sum = 0.0;
    for k in -k_max..=k_max {
        let t = k as f64 * h;
        let u = PI * t.sinh();
        // q = 1/(1+e^u) decays to 0 as t → +∞ (the singular end).
        let q = 1.0 / (1.0 + u.exp());
        let w = len * PI * t.cosh() * q * (1.0 - q);
        if w == 0.0 || !w.is_finite() {
            continue;
        }
        sum += w * f(len * q);
    }
    sum * h
}

/// Ascending panel edges over [a, b] spaced at most π/(2 ω) apart, so an
/// oscillatory factor sin(ω x) or cos(ω x) varies by at most a quarter
/// period per panel. Degenerates to the single panel [a, b] for small ω.
pub fn oscillation_edges(a: f64, b: f64, omega: f64) -> Vec<f64> {
    assert!(b >= a && omega >= 0.0);
    let step = if omega > 0.0 { 0.5 * PI / omega } else { f64::INFINITY };
    let mut edges = vec![a];
    if step.is_finite() && step < b - a {
        let mut k = (a / step).floor() + 1.0;
        while k * step < b - 1e-12 * (b - a) {
            if k * step > a + 1e-12 * (b - a) {
                edges.push(k * step);
            }
            k += 1.0;
        }
    }
    edges.push(b);
    edges
}

/// Golden-section search for the maximum of a unimodal f on [lo, hi].
/// Returns (argmax, max). For multimodal f this refines whichever local
/// maximum the bracket isolates, so seed it from a grid scan.
pub fn golden_max<F: Fn(f64) -> f64 + ?Sized>(f: &F, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Surface measure ω_{d-1} of the unit sphere S^{d-1} ⊂ R^d:
/// ω_{d-1} = 2 π^{d/2} / Γ(d/2); ω_0 = 2 counts the two points of S^0.
pub fn sphere_area(d: usize) -> f64 {
    assert!(d >= 1, "dimension must be positive");
    let gamma_half = if d % 2 == 0 {
        // Γ(m) = (m-1)! for integer m = d/2.
        let m = d / 2;
        (1..m).map(|k| k as f64).product::<f64>()
    } else {
        // Γ(m + 1/2) = (2m-1)!! √π / 2^m for m = (d-1)/2.
        let m = (d - 1) / 2;
        let mut v = PI.sqrt();
        for k in 0..m {
            v *= (2 * k + 1) as f64 / 2.0;
        }
        v
    };
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half
}

/// Angular factor A_d(ρ, a) = ∫_{S^{d-1}} |ρ u − a e₁|^{β-d} dS(u) for the
/// Riesz density |ξ|^{β-d}, 0 < β < min(2, d). Homogeneous of degree β - d
/// and symmetric in (ρ, a); A_d(ρ, 0) = ω_{d-1} ρ^{β-d}.
///
/// For β ≤ 1 the factor blows up like |ρ - a|^{β-1} (like log for β = 1)
/// across the sphere-through-the-shift locus ρ = a; callers must keep that
/// singularity on panel boundaries. Requires ρ ≠ a when β ≤ 1.
pub fn angular_factor(d: usize, beta: f64, rho: f64, a: f64) -> f64 {
    assert!(d >= 1 && beta > 0.0 && beta < 2.0_f64.min(d as f64));
    assert!(rho > 0.0 && a >= 0.0);
    if a == 0.0 {
        return sphere_area(d) * rho.powf(beta - d as f64);
    }
    match d {
        1 => (rho - a).abs().powf(beta - 1.0) + (rho + a).powf(beta - 1.0),
        3 => {
            let diff = (rho - a).abs();
            if beta == 1.0 {
                2.0 * PI * ((rho + a) / diff).ln() / (rho * a)
            } else {
                2.0 * PI * ((rho + a).powf(beta - 1.0) - diff.powf(beta - 1.0))
                    / (rho * a * (beta - 1.0))
            }
        }
        _ => angular_factor_numeric(d, beta, rho, a),
    }
}

/// Direct polar quadrature of A_d for dimensions without a closed form:
/// ω_{d-2} ∫₀^π (ρ² + a² − 2 ρ a cos θ)^{(β-d)/2} sin^{d-2} θ dθ.
///
/// The integrand concentrates at θ = 0 with scale |ρ-a|/√(ρa), so the θ
/// range is integrated by the tanh–sinh rule from that end.
pub fn angular_factor_numeric(d: usize, beta: f64, rho: f64, a: f64) -> f64 {
    angular_numeric_gap(d, beta, rho, a, (rho - a) * (rho - a))
}

/// A_d(a + s, a) with the gap s = ρ - a supplied exactly (s may be negative
/// for ρ < a). Tanh-sinh panels hand out exact distances from the singular
/// locus, and recovering ρ - a by subtraction there would cancel to zero.
pub(crate) fn angular_factor_gap(d: usize, beta: f64, a: f64, s: f64) -> f64 {
    let rho = a + s;
    debug_assert!(a > 0.0 && rho > 0.0 && s != 0.0);
    match d {
        1 => s.abs().powf(beta - 1.0) + (rho + a).powf(beta - 1.0),
        3 => {
            if beta == 1.0 {
                2.0 * PI * ((rho + a) / s.abs()).ln() / (rho * a)
            } else {
                2.0 * PI * ((rho + a).powf(beta - 1.0) - s.abs().powf(beta - 1.0))
                    / (rho * a * (beta - 1.0))
            }
        }
        _ => angular_numeric_gap(d, beta, rho, a, s * s),
    }
}

fn angular_numeric_gap(d: usize, beta: f64, rho: f64, a: f64, diff2: f64) -> f64 {
    assert!(d >= 2);
    let db = d as f64;
    let expo = 0.5 * (beta - db);
    // At θ the squared distance is (ρ-a)² + 2ρa(1 - cos θ); evaluating via
    // 1 - cos θ = 2 sin²(θ/2) keeps precision for θ near 0.
    let g = |theta: f64| {
        let half = 0.5 * theta;
        let dist2 = diff2 + 4.0 * rho * a * half.sin() * half.sin();
        dist2.powf(expo) * theta.sin().powf(db - 2.0)
    };
    // Near θ = 0 the integrand peaks with width |ρ-a|/√(ρa); at exact
    // coincidence it degenerates to θ^{β-2}, integrable only for β > 1, and
    // callers exclude ρ = a when β ≤ 1.  A small strength widens the
    // tanh-sinh node range so the peak is resolved even when ρ ≈ a.
    let strength = (beta + db - 2.0).max(0.05).min(1.0);
    sphere_area(d - 1) * integrate_de_singular(&g, PI, strength)
}
