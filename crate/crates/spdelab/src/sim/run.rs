//! Monte Carlo drivers over the lattice dynamics.
//!
//! Replica r of a run with master seed s draws its noise from ChaCha8
//! stream (s, r), so results are bitwise reproducible for any thread
//! count and any replica subset. Linear models (σ and b both constant)
//! run on a spectral fast path that evolves only the canonical half of
//! the mode set and never leaves hat space; it consumes normal draws in
//! exactly the canonical pair order of the generic path, so the two
//! paths see identical noise and agree to rounding.
//!
//! The smoothing drivers realize the one-point decomposition behind the
//! density analysis: the path is frozen at time t − ε, the coefficients
//! are pinned to their values at the frozen origin, and both the true
//! path and the frozen branch are driven by the same increments to time
//! t. The isometry driver splits u = S + D into stochastic convolution
//! and drift parts evolved under the same flow and compares both
//! second moments against the quadrature bounds
//!
//! ```text
//! E[S(t,0)²] ≤ Σ_j Ê[σ(u(s_j,0))²] (G₁(t−s_j) − G₁(t−s_{j+1})),
//! E[D(t,0)²] ≤ Σ_j Ê[b(u(s_j,0))²] ∫_{t−s_{j+1}}^{t−s_j} sup_η |FΛ(r)(η)|² dr,
//! ```
//!
//! with G₁ the shift-supremum kernel functional, evaluated exactly at
//! the step boundaries so the right-hand sides carry no extra time
//! discretization error.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::field::{build_prop_tables, propagate_modes, FieldState, PropTables, Stepper};
use super::grid::LatticeGrid;
use super::noise::{build_noise_weights, canonical_pairs, draw_hermitian_hat, real_field};
use crate::error::{Error, Result};
use crate::kernels::Family;
use crate::model::{Coefficient, ModelSpec};
use crate::quad::integrate_gl;
use crate::stats::mean_variance;
use crate::verify::{compute_g, compute_g1, QuadratureConfig};

/// One replica record: the solution at (t, 0) and, for smoothing runs,
/// the frozen-coefficient branch value. `seed` is the RNG stream index
/// under the run's master seed.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ReplicaResult {
    pub u_t0: f64,
    pub u_eps_t0: Option<f64>,
    pub seed: u64,
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub replicas: usize,
}

/// One point of a smoothing-error curve: E[(u(t,0) − u^ε(t,0))²] at ε.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SmoothingPoint {
    pub eps: f64,
    pub moment: MomentEstimate,
}

/// Empirical second moments of the noise and drift parts at (t, 0)
/// against their quadrature bounds.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IsometryReport {
    pub noise_lhs: f64,
    pub noise_se: f64,
    pub noise_rhs: f64,
    pub drift_lhs: f64,
    pub drift_se: f64,
    pub drift_rhs: f64,
    pub replicas: usize,
    /// True when both moments sit below their bounds within 3 SE.
    pub within: bool,
}

pub(crate) fn checked_steps(value: f64, dt: f64, label: &str) -> Result<usize> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::Domain(format!("{label} must be ≥ 0, got {value}")));
    }
    let q = value / dt;
    let n = q.round();
    if (q - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::Domain(format!(
            "{label} = {value} is not an integral number of steps of dt = {dt}"
        )));
    }
    Ok(n as usize)
}

fn validate_run(model: &ModelSpec, grid: &LatticeGrid, dt: f64, t: f64) -> Result<usize> {
    if model.kernel.family() == Family::Custom {
        return Err(Error::Domain(
            "time stepping is defined for the wave and heat families only".into(),
        ));
    }
    if model.d != grid.d {
        return Err(Error::Domain(format!(
            "model dimension {} does not match lattice dimension {}",
            model.d, grid.d
        )));
    }
    if !dt.is_finite() || !(dt > 0.0) {
        return Err(Error::Domain(format!("step length must be > 0, got {dt}")));
    }
    if !(t > 0.0) || t > model.t_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "time {t} must lie in (0, T] with T = {}",
            model.t_max
        )));
    }
    checked_steps(t, dt, "t")
}

fn is_linear(model: &ModelSpec) -> bool {
    matches!(model.sigma, Coefficient::Const(_)) && matches!(model.b, Coefficient::Const(_))
}

/// Canonical-half spectral evolution for constant coefficients. Each
/// pair i holds the mode at its lower flat index; the conjugate partner
/// is implicit. Draw order per step matches `draw_hermitian_hat`.
#[derive(Clone)]
struct FastCtx {
    family: Family,
    self_pair: Vec<bool>,
    w: Vec<f64>,
    a: Vec<f64>,
    s: Vec<f64>,
    r: Vec<f64>,
    u: Vec<Complex64>,
    v: Vec<Complex64>,
    sigma: f64,
    b: f64,
    dt: f64,
    sqrt_dt: f64,
}

impl FastCtx {
    fn new(
        family: Family,
        pairs: &[(u32, u32)],
        weights: &[f64],
        props: &PropTables,
        dt: f64,
        sigma: f64,
        b: f64,
    ) -> FastCtx {
        let m = pairs.len();
        let wave = family == Family::Wave;
        let mut ctx = FastCtx {
            family,
            self_pair: Vec::with_capacity(m),
            w: Vec::with_capacity(m),
            a: Vec::with_capacity(m),
            s: Vec::with_capacity(if wave { m } else { 0 }),
            r: Vec::with_capacity(if wave { m } else { 0 }),
            u: vec![Complex64::default(); m],
            v: vec![Complex64::default(); if wave { m } else { 0 }],
            sigma,
            b,
            dt,
            sqrt_dt: dt.sqrt(),
        };
        for &(lo, hi) in pairs {
            let k = lo as usize;
            ctx.self_pair.push(lo == hi);
            ctx.w.push(weights[k]);
            ctx.a.push(props.a[k]);
            if wave {
                ctx.s.push(props.s[k]);
                ctx.r.push(props.r[k]);
            }
        }
        ctx
    }

    fn reset(&mut self) {
        self.u.fill(Complex64::default());
        self.v.fill(Complex64::default());
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) {
        let amp = self.sigma * self.sqrt_dt;
        let drift = self.b * self.dt;
        for i in 0..self.u.len() {
            let z = if self.self_pair[i] {
                let x: f64 = rng.sample(StandardNormal);
                Complex64::new(x, 0.0)
            } else {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
            };
            let mut f = z * (self.w[i] * amp);
            if i == 0 {
                // Pair 0 is the zero mode; a constant drift lives there.
                f.re += drift;
            }
            match self.family {
                Family::Wave => {
                    let v = self.v[i] + f;
                    let u = self.u[i];
                    self.u[i] = u * self.a[i] + v * self.s[i];
                    self.v[i] = u * self.r[i] + v * self.a[i];
                }
                _ => {
                    self.u[i] = (self.u[i] + f) * self.a[i];
                }
            }
        }
    }

    /// u(t, 0) = Σ_k û_k over the full spectrum.
    fn origin(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.u.len() {
            total += if self.self_pair[i] {
                self.u[i].re
            } else {
                2.0 * self.u[i].re
            };
        }
        total
    }
}

/// Full nonlinear stepping through physical space.
#[derive(Clone)]
struct GenericCtx {
    stepper: Stepper,
    pairs: Arc<Vec<(u32, u32)>>,
    weights: Arc<Vec<f64>>,
    hat: Vec<Complex64>,
    sqrt_dt: f64,
}

impl GenericCtx {
    fn draw_increment(&mut self, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        draw_hermitian_hat(&self.pairs, &self.weights, self.sqrt_dt, rng, &mut self.hat);
        self.stepper.plan.inverse(&mut self.hat);
        real_field(&self.hat)
    }

    fn step(&mut self, state: &mut FieldState, rng: &mut ChaCha8Rng) -> Result<()> {
        let inc = self.draw_increment(rng)?;
        self.stepper.step(state, &inc)
    }
}

#[derive(Clone)]
enum Path {
    Fast(FastCtx),
    Generic(GenericCtx),
}

struct RunSetup {
    grid: LatticeGrid,
    family: Family,
    steps: usize,
    weights: Arc<Vec<f64>>,
    pairs: Arc<Vec<(u32, u32)>>,
    proto: Path,
}

fn setup_run(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
    force_generic: bool,
) -> Result<RunSetup> {
    let steps = validate_run(model, grid, dt, t)?;
    let family = model.kernel.family();
    let weights = Arc::new(build_noise_weights(grid, &model.measure)?);
    let pairs = Arc::new(canonical_pairs(grid));
    let proto = if is_linear(model) && !force_generic {
        let props = build_prop_tables(model, grid, dt);
        let (sigma, b) = match (model.sigma, model.b) {
            (Coefficient::Const(s), Coefficient::Const(b)) => (s, b),
            _ => unreachable!(),
        };
        Path::Fast(FastCtx::new(family, &pairs, &weights, &props, dt, sigma, b))
    } else {
        let stepper = Stepper::new(model, grid, dt)?;
        Path::Generic(GenericCtx {
            stepper,
            pairs: Arc::clone(&pairs),
            weights: Arc::clone(&weights),
            hat: vec![Complex64::default(); grid.points()],
            sqrt_dt: dt.sqrt(),
        })
    };
    Ok(RunSetup {
        grid: grid.clone(),
        family,
        steps,
        weights,
        pairs,
        proto,
    })
}

fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Runs one replica to the final time, recording u(·, 0) at the given
/// step counts (ascending, last equal to `steps`).
fn run_recording(
    path: &mut Path,
    setup: &RunSetup,
    rng: &mut ChaCha8Rng,
    record_at: &[usize],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(record_at.len());
    match path {
        Path::Fast(ctx) => {
            ctx.reset();
            let mut next = 0usize;
            for j in 0..=setup.steps {
                while next < record_at.len() && record_at[next] == j {
                    out.push(ctx.origin());
                    next += 1;
                }
                if j < setup.steps {
                    ctx.step(rng);
                }
            }
        }
        Path::Generic(ctx) => {
            let mut state = FieldState::zero(setup.family, &setup.grid)?;
            let mut next = 0usize;
            for j in 0..=setup.steps {
                while next < record_at.len() && record_at[next] == j {
                    out.push(state.origin_value());
                    next += 1;
                }
                if j < setup.steps {
                    ctx.step(&mut state, rng)?;
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn run_replicas_mode(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
    seed: u64,
    replicas: usize,
    force_generic: bool,
) -> Result<Vec<f64>> {
    let setup = setup_run(model, grid, dt, t, force_generic)?;
    let record = vec![setup.steps];
    (0..replicas)
        .into_par_iter()
        .map_init(
            || setup.proto.clone(),
            |path, rep| {
                let mut rng = replica_rng(seed, rep as u64);
                run_recording(path, &setup, &mut rng, &record).map(|vals| vals[0])
            },
        )
        .collect()
}

/// u(t, 0) for independent replicas; replica r uses RNG stream (seed, r).
pub fn run_replicas(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
    seed: u64,
    replicas: usize,
) -> Result<Vec<f64>> {
    run_replicas_mode(model, grid, dt, t, seed, replicas, false)
}

/// Single-replica u(t, 0) on stream (seed, 0).
pub fn simulate_at_origin(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
    seed: u64,
) -> Result<f64> {
    Ok(run_replicas(model, grid, dt, t, seed, 1)?[0])
}

/// Physical field u(t, ·) of a single replica on stream (seed, 0),
/// stepped through the full nonlinear path.
pub fn simulate_field(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let setup = setup_run(model, grid, dt, t, true)?;
    let mut path = setup.proto.clone();
    let mut rng = replica_rng(seed, 0);
    let Path::Generic(ctx) = &mut path else {
        unreachable!()
    };
    let mut state = FieldState::zero(setup.family, &setup.grid)?;
    for _ in 0..setup.steps {
        ctx.step(&mut state, &mut rng)?;
    }
    ctx.stepper.physical(&state)
}

/// dt Σ_j Σ_k μ(C_k) FΛ(j dt)(ξ_k)², the exact variance of u(t, 0) for
/// the linear lattice scheme with σ ≡ 1, b ≡ 0.
pub fn discrete_linear_variance(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
) -> Result<f64> {
    let steps = validate_run(model, grid, dt, t)?;
    let weights = build_noise_weights(grid, &model.measure)?;
    let mut total = 0.0;
    for j in 1..=steps {
        let gap = j as f64 * dt;
        let mut shell = 0.0;
        for (flat, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                let f = model.kernel.eval_radial(gap, grid.xi_norm(flat));
                shell += w * w * f * f;
            }
        }
        total += shell;
    }
    Ok(total * dt)
}

fn moment_from_squares(sq: &[f64]) -> Result<MomentEstimate> {
    let (mean, var) = mean_variance(sq)?;
    Ok(MomentEstimate {
        value: mean,
        std_error: (var / sq.len() as f64).sqrt(),
        replicas: sq.len(),
    })
}

/// E[(u(t,0) − u(s,0))²] at several earlier times on one set of paths.
pub fn increment_curve(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    s_list: &[f64],
    t: f64,
    seed: u64,
    replicas: usize,
) -> Result<Vec<MomentEstimate>> {
    let setup = setup_run(model, grid, dt, t, false)?;
    if replicas < 2 {
        return Err(Error::Degenerate(format!(
            "moment estimation needs at least 2 replicas, got {replicas}"
        )));
    }
    let mut s_steps = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let steps = checked_steps(s, dt, "s")?;
        if steps > setup.steps {
            return Err(Error::Domain(format!("s = {s} exceeds t = {t}")));
        }
        s_steps.push(steps);
    }
    // One record list: sorted unique step counts plus the final step.
    let mut record: Vec<usize> = s_steps.clone();
    record.push(setup.steps);
    record.sort_unstable();
    record.dedup();
    let rows: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map_init(
            || setup.proto.clone(),
            |path, rep| {
                let mut rng = replica_rng(seed, rep as u64);
                run_recording(path, &setup, &mut rng, &record)
            },
        )
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(s_list.len());
    for &steps in &s_steps {
        let at = record.binary_search(&steps).unwrap();
        let end = record.len() - 1;
        let sq: Vec<f64> = rows
            .iter()
            .map(|row| {
                let diff = row[end] - row[at];
                diff * diff
            })
            .collect();
        out.push(moment_from_squares(&sq)?);
    }
    Ok(out)
}

/// E[(u(t,0) − u(s,0))²] for one gap.
pub fn increment_moment(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    s: f64,
    t: f64,
    seed: u64,
    replicas: usize,
) -> Result<MomentEstimate> {
    Ok(increment_curve(model, grid, dt, &[s], t, seed, replicas)?[0])
}

/// Frozen snapshot of a path at the branch time.
struct Snap {
    u: Vec<Complex64>,
    v: Vec<Complex64>,
    origin: f64,
    rng: ChaCha8Rng,
}

struct SmoothSetup {
    run: RunSetup,
    branch_template: FastCtx,
    sigma: Coefficient,
    b: Coefficient,
    eps_steps: Vec<usize>,
}

fn setup_smoothing(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
    eps_list: &[f64],
) -> Result<SmoothSetup> {
    let run = setup_run(model, grid, dt, t, false)?;
    let mut eps_steps = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let steps = checked_steps(eps, dt, "eps")?;
        if steps > run.steps {
            return Err(Error::Domain(format!(
                "smoothing scale eps = {eps} exceeds t = {t}"
            )));
        }
        eps_steps.push(steps);
    }
    let props = build_prop_tables(model, grid, dt);
    let branch_template = FastCtx::new(run.family, &run.pairs, &run.weights, &props, dt, 0.0, 0.0);
    Ok(SmoothSetup {
        run,
        branch_template,
        sigma: model.sigma,
        b: model.b,
        eps_steps,
    })
}

/// Σ_k û_k in canonical pair order. The smoothing drivers sum the
/// origin this way on every path so that a zero-length branch
/// reproduces u(t, 0) bitwise.
fn pair_origin(state: &FieldState, pairs: &[(u32, u32)]) -> f64 {
    let mut total = 0.0;
    for &(lo, hi) in pairs {
        let re = state.u_hat[lo as usize].re;
        total += if lo == hi { re } else { 2.0 * re };
    }
    total
}

fn snap_from_state(state: &FieldState, pairs: &[(u32, u32)], rng: &ChaCha8Rng) -> Snap {
    let mut u = Vec::with_capacity(pairs.len());
    for &(lo, _) in pairs {
        u.push(state.u_hat[lo as usize]);
    }
    let v = match &state.v_hat {
        Some(v_hat) => pairs.iter().map(|&(lo, _)| v_hat[lo as usize]).collect(),
        None => Vec::new(),
    };
    Snap {
        u,
        v,
        origin: pair_origin(state, pairs),
        rng: rng.clone(),
    }
}

/// One smoothing replica: returns u(t, 0) and the branch values u^ε(t, 0)
/// in the order of `setup.eps_steps`.
fn run_smoothing_replica(
    setup: &SmoothSetup,
    path: &mut Path,
    branch: &mut FastCtx,
    seed: u64,
    rep: u64,
) -> Result<(f64, Vec<f64>)> {
    let run = &setup.run;
    let mut rng = replica_rng(seed, rep);
    let mut snaps: Vec<Option<Snap>> = setup.eps_steps.iter().map(|_| None).collect();
    let u_t0 = match path {
        Path::Fast(ctx) => {
            ctx.reset();
            for j in 0..=run.steps {
                for (i, &es) in setup.eps_steps.iter().enumerate() {
                    if run.steps - es == j {
                        snaps[i] = Some(Snap {
                            u: ctx.u.clone(),
                            v: ctx.v.clone(),
                            origin: ctx.origin(),
                            rng: rng.clone(),
                        });
                    }
                }
                if j < run.steps {
                    ctx.step(&mut rng);
                }
            }
            ctx.origin()
        }
        Path::Generic(ctx) => {
            let mut state = FieldState::zero(run.family, &run.grid)?;
            for j in 0..=run.steps {
                for (i, &es) in setup.eps_steps.iter().enumerate() {
                    if run.steps - es == j {
                        snaps[i] = Some(snap_from_state(&state, &run.pairs, &rng));
                    }
                }
                if j < run.steps {
                    ctx.step(&mut state, &mut rng)?;
                }
            }
            pair_origin(&state, &run.pairs)
        }
    };
    let mut branch_vals = Vec::with_capacity(setup.eps_steps.len());
    for (i, &es) in setup.eps_steps.iter().enumerate() {
        let snap = snaps[i].take().expect("snapshot recorded");
        branch.u.copy_from_slice(&snap.u);
        if !branch.v.is_empty() {
            branch.v.copy_from_slice(&snap.v);
        }
        branch.sigma = setup.sigma.eval(snap.origin);
        branch.b = setup.b.eval(snap.origin);
        let mut brng = snap.rng;
        for _ in 0..es {
            branch.step(&mut brng);
        }
        branch_vals.push(branch.origin());
    }
    Ok((u_t0, branch_vals))
}

/// Smoothing error curve E[(u(t,0) − u^ε(t,0))²] over a grid of ε.
/// Both paths share noise; ε = 0 reproduces u(t, 0) exactly.
pub fn smoothing_curve(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
    eps_list: &[f64],
    seed: u64,
    replicas: usize,
) -> Result<Vec<SmoothingPoint>> {
    if replicas < 2 {
        return Err(Error::Degenerate(format!(
            "moment estimation needs at least 2 replicas, got {replicas}"
        )));
    }
    let setup = setup_smoothing(model, grid, dt, t, eps_list)?;
    let rows: Vec<(f64, Vec<f64>)> = (0..replicas)
        .into_par_iter()
        .map_init(
            || (setup.run.proto.clone(), setup.branch_template.clone()),
            |(path, branch), rep| run_smoothing_replica(&setup, path, branch, seed, rep as u64),
        )
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(eps_list.len());
    for (i, &eps) in eps_list.iter().enumerate() {
        let sq: Vec<f64> = rows
            .iter()
            .map(|(u, branch)| {
                let diff = u - branch[i];
                diff * diff
            })
            .collect();
        out.push(SmoothingPoint {
            eps,
            moment: moment_from_squares(&sq)?,
        });
    }
    Ok(out)
}

/// Per-replica smoothing rows: u(t, 0) then u^ε(t, 0) for every ε in
/// `eps_list` order, all branches driven by common noise.
pub(crate) fn smoothing_samples(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
    eps_list: &[f64],
    seed: u64,
    replicas: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let setup = setup_smoothing(model, grid, dt, t, eps_list)?;
    (0..replicas)
        .into_par_iter()
        .map_init(
            || (setup.run.proto.clone(), setup.branch_template.clone()),
            |(path, branch), rep| run_smoothing_replica(&setup, path, branch, seed, rep as u64),
        )
        .collect()
}

/// Smoothing records for independent replicas at one ε.
pub fn smoothing_replicas(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
    eps: f64,
    seed: u64,
    replicas: usize,
) -> Result<Vec<ReplicaResult>> {
    let setup = setup_smoothing(model, grid, dt, t, &[eps])?;
    (0..replicas)
        .into_par_iter()
        .map_init(
            || (setup.run.proto.clone(), setup.branch_template.clone()),
            |(path, branch), rep| {
                run_smoothing_replica(&setup, path, branch, seed, rep as u64).map(
                    |(u_t0, branch_vals)| ReplicaResult {
                        u_t0,
                        u_eps_t0: Some(branch_vals[0]),
                        seed: rep as u64,
                    },
                )
            },
        )
        .collect()
}

/// One smoothing pair on stream (seed, 0).
pub fn smoothing_pair(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
    eps: f64,
    seed: u64,
) -> Result<ReplicaResult> {
    let setup = setup_smoothing(model, grid, dt, t, &[eps])?;
    let mut path = setup.run.proto.clone();
    let mut branch = setup.branch_template.clone();
    let (u_t0, branch_vals) = run_smoothing_replica(&setup, &mut path, &mut branch, seed, 0)?;
    Ok(ReplicaResult {
        u_t0,
        u_eps_t0: Some(branch_vals[0]),
        seed: 0,
    })
}

/// Exact sampler of the constant-coefficient law: u(t, 0) ~ N(0, σ₁² g(t)).
pub fn linear_exact_samples(
    sigma1: f64,
    model: &ModelSpec,
    t: f64,
    seed: u64,
    replicas: usize,
) -> Result<Vec<f64>> {
    match model.sigma {
        Coefficient::Const(c) if c == sigma1 => {}
        _ => {
            return Err(Error::Domain(format!(
                "exact law needs σ ≡ const {sigma1}, model has {}",
                model.sigma
            )))
        }
    }
    match model.b {
        Coefficient::Const(c) if c == 0.0 => {}
        _ => {
            return Err(Error::Domain(format!(
                "exact law needs b ≡ 0, model has {}",
                model.b
            )))
        }
    }
    if !(t > 0.0) || t > model.t_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "time {t} must lie in (0, T] with T = {}",
            model.t_max
        )));
    }
    let cfg = QuadratureConfig::default();
    let g = compute_g(model, &cfg, t)?;
    let amp = sigma1 * g.sqrt();
    Ok((0..replicas)
        .map(|rep| {
            let mut rng = replica_rng(seed, rep as u64);
            let z: f64 = rng.sample(StandardNormal);
            amp * z
        })
        .collect())
}

/// One draw from the exact constant-coefficient law on stream (seed, 0).
pub fn simulate_linear_exact(sigma1: f64, model: &ModelSpec, t: f64, seed: u64) -> Result<f64> {
    Ok(linear_exact_samples(sigma1, model, t, seed, 1)?[0])
}

#[derive(Clone)]
struct IsoCtx {
    stepper: Stepper,
    pairs: Arc<Vec<(u32, u32)>>,
    weights: Arc<Vec<f64>>,
    hat: Vec<Complex64>,
    f_sigma: Vec<Complex64>,
    f_b: Vec<Complex64>,
}

struct IsoOut {
    s_sq: f64,
    d_sq: f64,
    sigma_sq: Vec<f64>,
    b_sq: Vec<f64>,
}

fn run_iso_replica(ctx: &mut IsoCtx, steps: usize, seed: u64, rep: u64) -> Result<IsoOut> {
    let family = ctx.stepper.family;
    let grid = ctx.stepper.grid().clone();
    let dt = ctx.stepper.dt();
    let mut rng = replica_rng(seed, rep);
    let mut state = FieldState::zero(family, &grid)?;
    let mut drift = FieldState::zero(family, &grid)?;
    let mut sigma_sq = Vec::with_capacity(steps);
    let mut b_sq = Vec::with_capacity(steps);
    let scale = 1.0 / grid.points() as f64;
    for _ in 0..steps {
        let u_phys = ctx.stepper.physical(&state)?;
        let s0 = ctx.stepper.sigma.eval(u_phys[0]);
        let b0 = ctx.stepper.b.eval(u_phys[0]);
        sigma_sq.push(s0 * s0);
        b_sq.push(b0 * b0);
        draw_hermitian_hat(
            &ctx.pairs,
            &ctx.weights,
            dt.sqrt(),
            &mut rng,
            &mut ctx.hat,
        );
        ctx.stepper.plan.inverse(&mut ctx.hat);
        let inc = real_field(&ctx.hat)?;
        for j in 0..u_phys.len() {
            let u = u_phys[j];
            ctx.f_sigma[j] = Complex64::new(ctx.stepper.sigma.eval(u) * inc[j], 0.0);
            ctx.f_b[j] = Complex64::new(ctx.stepper.b.eval(u) * dt, 0.0);
        }
        ctx.stepper.plan.forward(&mut ctx.f_sigma);
        ctx.stepper.plan.forward(&mut ctx.f_b);
        for j in 0..ctx.f_sigma.len() {
            ctx.f_sigma[j] = (ctx.f_sigma[j] + ctx.f_b[j]) * scale;
            ctx.f_b[j] *= scale;
        }
        let ok_u = propagate_modes(
            &ctx.stepper.props,
            family,
            &mut state.u_hat,
            state.v_hat.as_mut(),
            &ctx.f_sigma,
        );
        let ok_d = propagate_modes(
            &ctx.stepper.props,
            family,
            &mut drift.u_hat,
            drift.v_hat.as_mut(),
            &ctx.f_b,
        );
        state.time += dt;
        drift.time += dt;
        if !ok_u || !ok_d {
            return Err(Error::Instability(format!(
                "non-finite mode amplitude at t = {:.6}",
                state.time
            )));
        }
    }
    let d0 = drift.origin_value();
    let s0 = state.origin_value() - d0;
    Ok(IsoOut {
        s_sq: s0 * s0,
        d_sq: d0 * d0,
        sigma_sq,
        b_sq,
    })
}

/// Splits u = S + D and checks both E[S(t,0)²] and E[D(t,0)²] against
/// the quadrature bounds built from G₁ and sup_η |FΛ|².
pub fn isometry_check(
    model: &ModelSpec,
    grid: &LatticeGrid,
    dt: f64,
    t: f64,
    seed: u64,
    replicas: usize,
) -> Result<IsometryReport> {
    let steps = validate_run(model, grid, dt, t)?;
    if replicas < 2 {
        return Err(Error::Degenerate(format!(
            "moment estimation needs at least 2 replicas, got {replicas}"
        )));
    }
    let stepper = Stepper::new(model, grid, dt)?;
    let proto = IsoCtx {
        stepper,
        pairs: Arc::new(canonical_pairs(grid)),
        weights: Arc::new(build_noise_weights(grid, &model.measure)?),
        hat: vec![Complex64::default(); grid.points()],
        f_sigma: vec![Complex64::default(); grid.points()],
        f_b: vec![Complex64::default(); grid.points()],
    };
    let outs: Vec<IsoOut> = (0..replicas)
        .into_par_iter()
        .map_init(
            || proto.clone(),
            |ctx, rep| run_iso_replica(ctx, steps, seed, rep as u64),
        )
        .collect::<Result<_>>()?;
    let m = replicas as f64;
    let s_sq: Vec<f64> = outs.iter().map(|o| o.s_sq).collect();
    let d_sq: Vec<f64> = outs.iter().map(|o| o.d_sq).collect();
    let noise = moment_from_squares(&s_sq)?;
    let drift = moment_from_squares(&d_sq)?;
    let mut sig2_mean = vec![0.0; steps];
    let mut b2_mean = vec![0.0; steps];
    for o in &outs {
        for j in 0..steps {
            sig2_mean[j] += o.sigma_sq[j] / m;
            b2_mean[j] += o.b_sq[j] / m;
        }
    }
    // G₁ at every step boundary gap; differences give exact ∫ Γ₁ over
    // each step, so the bound has no extra time-discretization error.
    let cfg = QuadratureConfig::default();
    let mut g1 = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let gap = (steps - j) as f64 * dt;
        g1.push(compute_g1(model, &cfg, gap)?.value);
    }
    let mut noise_rhs = 0.0;
    let mut drift_rhs = 0.0;
    for j in 0..steps {
        noise_rhs += sig2_mean[j] * (g1[j] - g1[j + 1]);
        let lo = (steps - j - 1) as f64 * dt;
        let hi = (steps - j) as f64 * dt;
        let sup = integrate_gl(
            &|r: f64| model.kernel.sup_kernel_sq(r).value,
            lo,
            hi,
            8,
        );
        drift_rhs += b2_mean[j] * sup;
    }
    let within = noise.value <= noise_rhs + 3.0 * noise.std_error
        && drift.value <= drift_rhs + 3.0 * drift.std_error;
    Ok(IsometryReport {
        noise_lhs: noise.value,
        noise_se: noise.std_error,
        noise_rhs,
        drift_lhs: drift.value,
        drift_se: drift.std_error,
        drift_rhs,
        replicas,
        within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::SpectralKernel;
    use crate::measures::SpectralMeasure;

    fn wave_model(d: usize, beta: f64, sigma: Coefficient, b: Coefficient) -> ModelSpec {
        ModelSpec::with_derived_bounds(
            SpectralKernel::Wave,
            SpectralMeasure::riesz(d, beta).unwrap(),
            4.0,
            sigma,
            b,
        )
        .unwrap()
    }

    fn heat_model(d: usize, beta: f64, sigma: Coefficient, b: Coefficient) -> ModelSpec {
        ModelSpec::with_derived_bounds(
            SpectralKernel::Heat,
            SpectralMeasure::riesz(d, beta).unwrap(),
            4.0,
            sigma,
            b,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_run_parameters() {
        let g = LatticeGrid::new(1, 16, 4.0).unwrap();
        let m = wave_model(1, 0.5, Coefficient::Const(1.0), Coefficient::Const(0.0));
        assert!(run_replicas(&m, &g, 0.1, 0.35, 1, 2).is_err());
        assert!(run_replicas(&m, &g, 0.1, 0.0, 1, 2).is_err());
        assert!(run_replicas(&m, &g, 0.1, 100.0, 1, 2).is_err());
        assert!(run_replicas(&m, &g, -0.1, 0.5, 1, 2).is_err());
        let g2 = LatticeGrid::new(2, 16, 4.0).unwrap();
        assert!(run_replicas(&m, &g2, 0.1, 0.5, 1, 2).is_err());
        assert!(increment_moment(&m, &g, 0.125, 0.75, 0.5, 1, 8).is_err());
        assert!(smoothing_curve(&m, &g, 0.125, 0.5, &[0.75], 1, 8).is_err());
        assert!(smoothing_curve(&m, &g, 0.125, 0.5, &[0.25], 1, 1).is_err());
        assert!(run_replicas(&m, &g, 0.125, 0.5, 1, 0).unwrap().is_empty());
    }

    #[test]
    fn replicas_are_deterministic_for_any_thread_count() {
        let g = LatticeGrid::new(1, 16, 4.0).unwrap();
        let m = wave_model(1, 0.5, Coefficient::Sin1p(1.0), Coefficient::Const(0.1));
        let run = || -> Vec<f64> { run_replicas(&m, &g, 0.125, 0.5, 42, 12).unwrap() };
        let base = run();
        for threads in [1usize, 3] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let other = pool.install(run);
            assert_eq!(base, other, "thread count {threads}");
        }
        assert!(base.iter().all(|v| v.is_finite()));
        // Distinct streams give distinct paths.
        assert!(base.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn fast_and_generic_paths_agree_on_linear_models() {
        for m in [
            wave_model(1, 0.5, Coefficient::Const(1.5), Coefficient::Const(0.3)),
            heat_model(1, 0.5, Coefficient::Const(0.7), Coefficient::Const(-0.2)),
        ] {
            let g = LatticeGrid::new(1, 32, 4.0).unwrap();
            let fast = run_replicas_mode(&m, &g, 0.0625, 0.5, 11, 8, false).unwrap();
            let gen = run_replicas_mode(&m, &g, 0.0625, 0.5, 11, 8, true).unwrap();
            for (a, b) in fast.iter().zip(&gen) {
                assert!(
                    (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                    "fast {a} vs generic {b}"
                );
            }
        }
    }

    #[test]
    fn linear_variance_matches_the_discrete_sum() {
        let g = LatticeGrid::new(1, 64, 4.0).unwrap();
        let dt = 0.03125;
        let t = 0.5;
        for (m, sig) in [
            (
                wave_model(1, 0.5, Coefficient::Const(2.0), Coefficient::Const(0.0)),
                2.0,
            ),
            (
                heat_model(1, 0.5, Coefficient::Const(1.0), Coefficient::Const(0.0)),
                1.0,
            ),
        ] {
            let samples = run_replicas(&m, &g, dt, t, 3, 4000).unwrap();
            let (mean, var) = mean_variance(&samples).unwrap();
            let expect = sig * sig * discrete_linear_variance(&m, &g, dt, t).unwrap();
            let se_var = expect * (2.0f64 / 4000.0).sqrt();
            assert!(mean.abs() < 3.0 * (expect / 4000.0).sqrt() * 1.5);
            assert!(
                (var - expect).abs() < 3.0 * se_var,
                "var {var} vs {expect} ± {se_var}"
            );
        }
    }

    #[test]
    fn discrete_variance_approaches_the_continuum_functional() {
        let m = wave_model(2, 1.0, Coefficient::Const(1.0), Coefficient::Const(0.0));
        let cfg = QuadratureConfig::default();
        let g_cont = compute_g(&m, &cfg, 0.5).unwrap();
        let rel = |n: usize, l: f64, steps: usize| {
            let g = LatticeGrid::new(2, n, l).unwrap();
            let v = discrete_linear_variance(&m, &g, 0.5 / steps as f64, 0.5).unwrap();
            (v - g_cont) / g_cont
        };
        // Production resolution sits within a fraction of a percent of g.
        assert!(rel(128, 4.0, 64).abs() < 0.01);
        // Extending the frequency band only adds spectral mass, so the
        // near-time-exact lattice deficit shrinks monotonically.
        let coarse_band = rel(64, 4.0, 512);
        let wide_band = rel(128, 4.0, 512);
        assert!(coarse_band < 0.0 && wide_band < 0.0);
        assert!(
            wide_band.abs() < coarse_band.abs(),
            "{wide_band} vs {coarse_band}"
        );
        // Step refinement at a fixed lattice contracts first order in dt.
        let d1 = rel(64, 4.0, 512) - rel(64, 4.0, 128);
        let d2 = rel(64, 4.0, 2048) - rel(64, 4.0, 512);
        let ratio = d1 / d2;
        assert!((2.5..6.0).contains(&ratio), "contraction ratio {ratio}");
    }

    #[test]
    fn increment_moments_vanish_at_zero_gap() {
        let g = LatticeGrid::new(1, 16, 4.0).unwrap();
        let m = wave_model(1, 0.5, Coefficient::Const(1.0), Coefficient::Const(0.0));
        let est = increment_moment(&m, &g, 0.125, 0.5, 0.5, 5, 16).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.std_error, 0.0);
        let curve = increment_curve(&m, &g, 0.125, &[0.0, 0.25, 0.375], 0.5, 5, 64).unwrap();
        // E[(u(t) − u(s))²] shrinks as s approaches t.
        assert!(curve[0].value > curve[2].value);
        assert!(curve.iter().all(|e| e.value >= 0.0 && e.replicas == 64));
    }

    #[test]
    fn smoothing_is_exact_for_linear_models_and_zero_eps() {
        let g = LatticeGrid::new(1, 32, 4.0).unwrap();
        let lin = wave_model(1, 0.5, Coefficient::Const(1.2), Coefficient::Const(0.4));
        let curve = smoothing_curve(&lin, &g, 0.0625, 0.5, &[0.0, 0.125, 0.375], 17, 12).unwrap();
        for point in &curve {
            assert_eq!(
                point.moment.value, 0.0,
                "linear smoothing branch must be exact at eps = {}",
                point.eps
            );
        }
        // Nonlinear model, eps = 0: the branch copies the final state.
        let nl = wave_model(1, 0.5, Coefficient::Sin1p(1.0), Coefficient::Const(0.0));
        let pair = smoothing_pair(&nl, &g, 0.0625, 0.5, 0.0, 23).unwrap();
        assert_eq!(pair.u_eps_t0, Some(pair.u_t0));
        // Full-horizon freeze runs the branch from the zero state.
        let full = smoothing_pair(&nl, &g, 0.0625, 0.5, 0.5, 23).unwrap();
        assert!(full.u_eps_t0.unwrap().is_finite());
        assert_ne!(full.u_eps_t0, Some(pair.u_t0));
    }

    #[test]
    fn smoothing_error_grows_with_eps_for_nonlinear_sigma() {
        let g = LatticeGrid::new(1, 64, 4.0).unwrap();
        let m = wave_model(1, 0.5, Coefficient::Sin1p(1.0), Coefficient::Const(0.0));
        let dt = 0.5 / 64.0;
        let eps = [4.0 * dt, 16.0 * dt, 32.0 * dt];
        let curve = smoothing_curve(&m, &g, dt, 0.5, &eps, 29, 200).unwrap();
        let v: Vec<f64> = curve.iter().map(|p| p.moment.value).collect();
        assert!(v.iter().all(|&x| x > 0.0));
        assert!(
            v[2] > 10.0 * v[0],
            "smoothing error should grow strongly: {v:?}"
        );
    }

    #[test]
    fn isometry_bounds_hold_for_constant_and_nonlinear_sigma() {
        let g = LatticeGrid::new(1, 64, 4.0).unwrap();
        let dt = 0.5 / 32.0;
        let lin = wave_model(1, 0.5, Coefficient::Const(1.3), Coefficient::Const(0.0));
        let rep = isometry_check(&lin, &g, dt, 0.5, 31, 1500).unwrap();
        assert!(rep.within, "{rep:?}");
        // Constant σ saturates the bound up to lattice bias and MC error.
        assert!(
            (rep.noise_lhs - rep.noise_rhs).abs() < 3.0 * rep.noise_se + 0.05 * rep.noise_rhs,
            "{rep:?}"
        );
        assert_eq!(rep.drift_lhs, 0.0);

        let nl = wave_model(1, 0.5, Coefficient::Sin1p(1.0), Coefficient::Const(0.2));
        let rep = isometry_check(&nl, &g, dt, 0.5, 37, 600).unwrap();
        assert!(rep.within, "{rep:?}");
        assert!(rep.noise_lhs > 0.0 && rep.drift_lhs > 0.0);
    }

    #[test]
    fn constant_drift_matches_the_triangular_sum_in_the_split() {
        let g = LatticeGrid::new(1, 32, 4.0).unwrap();
        let dt = 0.03125;
        let t = 0.5;
        let m = wave_model(1, 0.5, Coefficient::Const(0.4), Coefficient::Const(0.8));
        let rep = isometry_check(&m, &g, dt, t, 3, 50).unwrap();
        let expect = 0.8 * t * (t + dt) / 2.0;
        assert!(
            (rep.drift_lhs - expect * expect).abs() < 1e-10,
            "{} vs {}",
            rep.drift_lhs,
            expect * expect
        );
        assert!(rep.within, "{rep:?}");
    }

    #[test]
    fn exact_linear_law_matches_g() {
        let m = wave_model(1, 0.5, Coefficient::Const(1.5), Coefficient::Const(0.0));
        let samples = linear_exact_samples(1.5, &m, 0.5, 7, 5000).unwrap();
        let cfg = QuadratureConfig::default();
        let g = compute_g(&m, &cfg, 0.5).unwrap();
        let expect = 1.5 * 1.5 * g;
        let (mean, var) = mean_variance(&samples).unwrap();
        assert!(mean.abs() < 3.0 * (expect / 5000.0).sqrt());
        assert!((var - expect).abs() < 3.0 * expect * (2.0f64 / 5000.0).sqrt());
        assert_eq!(
            samples[0],
            simulate_linear_exact(1.5, &m, 0.5, 7).unwrap()
        );
        // Model mismatches are rejected.
        assert!(simulate_linear_exact(1.0, &m, 0.5, 7).is_err());
        let nl = wave_model(1, 0.5, Coefficient::Sin1p(1.0), Coefficient::Const(0.0));
        assert!(simulate_linear_exact(1.0, &nl, 0.5, 7).is_err());
        let drifted = wave_model(1, 0.5, Coefficient::Const(1.0), Coefficient::Const(0.5));
        assert!(simulate_linear_exact(1.0, &drifted, 0.5, 7).is_err());
    }

    #[test]
    fn field_law_is_stationary_across_sites() {
        let g = LatticeGrid::new(1, 32, 4.0).unwrap();
        let m = wave_model(1, 0.5, Coefficient::Sin1p(1.0), Coefficient::Const(0.0));
        let reps = 400usize;
        let sites = [0usize, 11, 23];
        let mut sq = [0.0f64; 3];
        for rep in 0..reps {
            let field = simulate_field(&m, &g, 0.0625, 0.5, 1000 + rep as u64).unwrap();
            for (i, &s) in sites.iter().enumerate() {
                sq[i] += field[s] * field[s];
            }
        }
        let m0 = sq[0] / reps as f64;
        for i in 1..3 {
            let mi = sq[i] / reps as f64;
            // Second moments agree across sites within 3 SE.
            let se = m0 * (2.0f64 / reps as f64).sqrt();
            assert!((mi - m0).abs() < 3.0 * se * 1.5, "site {i}: {mi} vs {m0}");
        }
    }
}
