//! The energy `I = J − H` of the nonlocal Dirichlet problem, its gradient,
//! a seeded steepest-descent minimizer and the λ₁ Rayleigh-quotient estimate.

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{GridDomain, GridFunction};
use crate::error::{Error, Result};
use crate::operator::{flux, OperatorContext};
use crate::orlicz::{gagliardo_modular, gagliardo_seminorm};

/// Tolerance used when comparing `q` with the lower index.
const REGIME_EPS: f64 = 1e-12;
const STEP_MIN: f64 = 1e-14;
const STEP_MAX: f64 = 1e12;

/// An odd source term sampled at `t ≥ 0`, piecewise linear, extended
/// linearly past the last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSource {
    t: Vec<f64>,
    f: Vec<f64>,
    prim: Vec<f64>,
}

impl SampledSource {
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = samples.to_vec();
        match pts.first() {
            Some(&(t0, _)) if t0 > 0.0 => pts.insert(0, (0.0, 0.0)),
            Some(&(t0, f0)) if t0 == 0.0 && f0 != 0.0 => {
                return Err(Error::Config("sampled source must vanish at t = 0".into()))
            }
            Some(_) => {}
            None => return Err(Error::Config("sampled source needs at least one sample".into())),
        }
        if pts.len() < 2 {
            return Err(Error::Config("sampled source needs a sample with t > 0".into()));
        }
        for (k, w) in pts.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) || !w[1].1.is_finite() {
                return Err(Error::Config(format!(
                    "sampled source: t must increase strictly, bad sample {}",
                    k + 1
                )));
            }
        }
        let mut prim = vec![0.0];
        for w in pts.windows(2) {
            let last = *prim.last().unwrap();
            prim.push(last + 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0));
        }
        let (t, f) = pts.into_iter().unzip();
        Ok(Self { t, f, prim })
    }

    fn segment(&self, t: f64) -> usize {
        let k = self.t.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(self.t.len() - 2)
    }

    fn slope(&self, k: usize) -> f64 {
        (self.f[k + 1] - self.f[k]) / (self.t[k + 1] - self.t[k])
    }

    pub fn value(&self, t: f64) -> f64 {
        let a = t.abs();
        let k = self.segment(a);
        let v = self.f[k] + self.slope(k) * (a - self.t[k]);
        v.copysign(t) * (t != 0.0) as u8 as f64
    }

    /// Exact primitive of the piecewise-linear interpolant (even in `t`).
    pub fn primitive(&self, t: f64) -> f64 {
        let a = t.abs();
        let k = self.segment(a);
        let d = a - self.t[k];
        self.prim[k] + self.f[k] * d + 0.5 * self.slope(k) * d * d
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.f.iter().copied())
    }
}

/// Shape of the right-hand side `f(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Form {
    /// `θ₂ |t|^{q−2} t` on all of Ω.
    PurePower,
    /// `θ₂ |t|^{q−2} t + shift·θ₁` on `Ω∖Ω₀` and `θ₂ |t|^{q−2} t` on Ω₀, with `shift ∈ [0, 1]`.
    ShiftedPower { shift: f64 },
    /// A sampled odd source, the same at every node of Ω.
    Custom(SampledSource),
}

/// Right-hand side `f` with growth constants `θ₁, θ₂`, exponent `q` and subdomain Ω₀.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    form: Form,
    theta1: f64,
    theta2: f64,
    q: f64,
    omega0: Vec<bool>,
}

fn signed_power(t: f64, e: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.abs().powf(e).copysign(t)
    }
}

/// Sample points for the growth checks on custom sources.
fn growth_grid() -> impl Iterator<Item = f64> {
    (0..=240).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 240.0))
}

impl Nonlinearity {
    pub fn new(form: Form, theta1: f64, theta2: f64, q: f64, gd: &GridDomain) -> Result<Self> {
        if !(theta1 > 0.0 && theta1.is_finite()) {
            return Err(Error::Config(format!("theta1 must be positive, got {theta1}")));
        }
        if !(theta2 >= 0.0 && theta2.is_finite()) {
            return Err(Error::Config(format!("theta2 must be nonnegative, got {theta2}")));
        }
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::Config(format!("q must exceed 1, got {q}")));
        }
        match &form {
            Form::PurePower | Form::ShiftedPower { .. } if theta2 > theta1 => {
                return Err(Error::Config(format!(
                    "built-in sources need theta2 <= theta1 for the upper growth bound, got {theta2} > {theta1}"
                )));
            }
            Form::ShiftedPower { shift } if !(0.0..=1.0).contains(shift) => {
                return Err(Error::Config(format!("shift must lie in [0, 1], got {shift}")));
            }
            _ => {}
        }
        let nl = Self { form, theta1, theta2, q, omega0: gd.omega0_mask().to_vec() };
        if let Form::Custom(src) = &nl.form {
            nl.check_custom(src)?;
        }
        Ok(nl)
    }

    fn check_custom(&self, src: &SampledSource) -> Result<()> {
        let mut signed_ok = true;
        for t in growth_grid() {
            let f = src.value(t);
            let upper = self.theta1 * (1.0 + t.powf(self.q - 1.0));
            if f.abs() > upper * (1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "custom source violates |f| <= theta1 (1 + |t|^(q-1)) at t = {t:e}"
                )));
            }
            let lower = self.theta2 * t.powf(self.q - 1.0);
            if f.abs() < lower * (1.0 - 1e-12) {
                return Err(Error::Config(format!(
                    "custom source violates |f| >= theta2 |t|^(q-1) at t = {t:e}"
                )));
            }
            signed_ok &= f >= lower * (1.0 - 1e-12);
        }
        if !signed_ok {
            warn!("custom source meets |f| >= theta2 |t|^(q-1) only in absolute value; F >= theta2 |t|^q / q may fail");
        }
        Ok(())
    }

    pub fn form(&self) -> &Form {
        &self.form
    }
    pub fn theta1(&self) -> f64 {
        self.theta1
    }
    pub fn theta2(&self) -> f64 {
        self.theta2
    }
    pub fn q(&self) -> f64 {
        self.q
    }

    /// `f(x_i, t)`.
    pub fn f(&self, i: usize, t: f64) -> f64 {
        match &self.form {
            Form::PurePower => self.theta2 * signed_power(t, self.q - 1.0),
            Form::ShiftedPower { shift } => {
                let base = self.theta2 * signed_power(t, self.q - 1.0);
                if self.omega0[i] {
                    base
                } else {
                    base + shift * self.theta1
                }
            }
            Form::Custom(src) => src.value(t),
        }
    }

    /// `F(x_i, t) = ∫₀ᵗ f(x_i, τ) dτ`.
    pub fn primitive(&self, i: usize, t: f64) -> f64 {
        match &self.form {
            Form::PurePower => self.theta2 * t.abs().powf(self.q) / self.q,
            Form::ShiftedPower { shift } => {
                let base = self.theta2 * t.abs().powf(self.q) / self.q;
                if self.omega0[i] {
                    base
                } else {
                    base + shift * self.theta1 * t
                }
            }
            Form::Custom(src) => src.primitive(t),
        }
    }
}

/// Descent and λ₁-search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Stop when the sup-norm of the nodal gradient is at most this.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub armijo_shrink: f64,
    /// Seeding amplitudes, strictly decreasing from 1.
    pub seed_scan: Vec<f64>,
    pub deterministic_reduction: bool,
    pub rng_seed: u64,
    pub lambda1_starts: usize,
    pub lambda1_iters: usize,
    /// Stop a λ₁ start when the relative decrease of the quotient over 25 steps drops below this.
    pub lambda1_tol: f64,
    /// A λ₁ value to use for the regime check instead of estimating it.
    pub lambda1: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iters: 20_000,
            armijo_c: 1e-4,
            armijo_shrink: 0.5,
            seed_scan: (0..=20).map(|k| 0.5f64.powi(k)).collect(),
            deterministic_reduction: true,
            rng_seed: 0,
            lambda1_starts: 20,
            lambda1_iters: 2_000,
            lambda1_tol: 1e-10,
            lambda1: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be positive");
        }
        if self.max_iters == 0 || self.lambda1_starts == 0 || self.lambda1_iters == 0 {
            return bad("iteration counts must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad("armijo_shrink must lie in (0, 1)");
        }
        if !(self.lambda1_tol > 0.0) {
            return bad("lambda1_tol must be positive");
        }
        if self.seed_scan.is_empty() || self.seed_scan.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return bad("seed_scan values must lie in (0, 1]");
        }
        if self.seed_scan.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("seed_scan must be strictly decreasing");
        }
        if let Some(l) = self.lambda1 {
            if !(l > 0.0) {
                return bad("lambda1 must be positive");
            }
        }
        Ok(())
    }
}

/// Result of [`minimize`].
#[derive(Debug, Clone)]
pub struct Solution {
    pub u: GridFunction,
    pub energy: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub nontrivial: bool,
    pub seed_t: Option<f64>,
    /// False when `max_iters` was reached (or the line search stalled) above `grad_tol`.
    pub converged: bool,
    /// Energy after every accepted step, starting with the initial guess.
    pub history: Vec<f64>,
}

/// `J(u) = φ(u)`.
pub fn eval_j(ctx: &OperatorContext<'_>, u: &GridFunction) -> f64 {
    gagliardo_modular(ctx.nf, ctx.kt, u)
}

/// `H(u) = Σ_{i∈Ω} F(x_i, u_i) h^N`.
pub fn eval_h(nl: &Nonlinearity, gd: &GridDomain, u: &GridFunction) -> f64 {
    let v = u.values();
    gd.omega_nodes().iter().map(|&i| nl.primitive(i, v[i])).sum::<f64>() * gd.cell_volume()
}

pub fn eval_i(ctx: &OperatorContext<'_>, nl: &Nonlinearity, u: &GridFunction) -> f64 {
    eval_j(ctx, u) - eval_h(nl, ctx.gd, u)
}

/// Nodal gradient `g_i = ∂I/∂u_i`, so that `Σ g_i v_i = ⟨(−Δ)^s_a u, v⟩ − Σ f(x_i, u_i) v_i h^N`.
pub fn grad_i(ctx: &OperatorContext<'_>, nl: &Nonlinearity, u: &GridFunction) -> GridFunction {
    let mut g = flux(ctx, u);
    let hn = ctx.gd.cell_volume();
    let v = u.values();
    for &i in ctx.gd.omega_nodes() {
        g[i] -= nl.f(i, v[i]) * hn;
    }
    GridFunction::from_values(ctx.gd, g).expect("gradient vanishes on the buffer")
}

/// First `t` of the scan with `I(t·bump) < 0`, together with that energy.
pub fn seed_nontrivial(
    ctx: &OperatorContext<'_>,
    nl: &Nonlinearity,
    bump: &GridFunction,
    cfg: &SolverConfig,
) -> Result<Option<(f64, f64)>> {
    for (i, &b) in bump.values().iter().enumerate() {
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::Precondition(format!("bump value {b} at node {i} outside [0, 1]")));
        }
        if b != 0.0 && !ctx.gd.in_omega0(i) {
            return Err(Error::Precondition(format!("bump is nonzero at node {i} outside omega0")));
        }
    }
    if bump.is_zero() {
        return Err(Error::Precondition("bump vanishes identically".into()));
    }
    for &t in &cfg.seed_scan {
        let e = eval_i(ctx, nl, &bump.scaled(t));
        debug!("seed scan t={t:e} I={e:e}");
        if e < 0.0 {
            return Ok(Some((t, e)));
        }
    }
    Ok(None)
}

/// Refuses problems outside the coercive regime: `q < p₀`, or `q = p₀` with `θ₁ < λ₁/2`.
pub fn check_regime(ctx: &OperatorContext<'_>, nl: &Nonlinearity, cfg: &SolverConfig) -> Result<()> {
    let p0 = ctx.nf.p_lower();
    let q = nl.q();
    if q < p0 - REGIME_EPS {
        return Ok(());
    }
    if q > p0 + REGIME_EPS {
        return Err(Error::Regime(format!("q = {q} exceeds the lower index p0 = {p0}")));
    }
    let lambda1 = match cfg.lambda1 {
        Some(l) => l,
        None => lambda1_estimate(ctx, cfg)?.value,
    };
    if nl.theta1() < 0.5 * lambda1 {
        Ok(())
    } else {
        Err(Error::Regime(format!(
            "q = p0 = {p0} needs theta1 < lambda1/2, got theta1 = {} and lambda1 <= {lambda1}",
            nl.theta1()
        )))
    }
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Two-point step `⟨s, s⟩ / ⟨s, y⟩`, clamped; `None` without positive curvature.
fn bb_step(s: &[f64], y: &[f64]) -> Option<f64> {
    let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
    (sy > 0.0).then(|| (sq_norm(s) / sy).clamp(STEP_MIN, STEP_MAX))
}

/// Steepest descent with Armijo backtracking from the seeded start.
pub fn minimize(ctx: &OperatorContext<'_>, nl: &Nonlinearity, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    check_regime(ctx, nl, cfg)?;
    let bump = ctx.gd.omega0_bump();
    let seed = seed_nontrivial(ctx, nl, &bump, cfg)?;
    let start = match seed {
        Some((t, _)) => bump.scaled(t),
        None => {
            warn!("seed scan found no t with I(t bump) < 0; starting from u = 0");
            GridFunction::zeros(ctx.gd)
        }
    };
    let mut sol = descend(ctx, nl, cfg, start);
    sol.seed_t = seed.map(|(t, _)| t);
    Ok(sol)
}

/// The descent loop of [`minimize`] from an arbitrary start.
pub fn descend(
    ctx: &OperatorContext<'_>,
    nl: &Nonlinearity,
    cfg: &SolverConfig,
    start: GridFunction,
) -> Solution {
    let mut u = start;
    let mut e = eval_i(ctx, nl, &u);
    let mut g = grad_i(ctx, nl, &u);
    let mut history = vec![e];
    let mut step = 1.0;
    let mut iters = 0;
    let mut converged = false;
    while iters < cfg.max_iters {
        if g.sup_norm() <= cfg.grad_tol {
            converged = true;
            break;
        }
        let gg = sq_norm(g.values());
        let mut alpha = step;
        let accepted = loop {
            let cand = u.axpy(-alpha, &g);
            let ec = eval_i(ctx, nl, &cand);
            if ec <= e - cfg.armijo_c * alpha * gg {
                break Some((cand, ec));
            }
            alpha *= cfg.armijo_shrink;
            if alpha < STEP_MIN {
                break None;
            }
        };
        let Some((next, e_next)) = accepted else {
            warn!("line search stalled at iteration {iters} with |g| = {:e}", g.sup_norm());
            break;
        };
        let g_next = grad_i(ctx, nl, &next);
        let s: Vec<f64> = next.values().iter().zip(u.values()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.values().iter().zip(g.values()).map(|(a, b)| a - b).collect();
        step = bb_step(&s, &y).unwrap_or(alpha / cfg.armijo_shrink);
        u = next;
        e = e_next;
        g = g_next;
        history.push(e);
        iters += 1;
    }
    if !converged && g.sup_norm() <= cfg.grad_tol {
        converged = true;
    }
    let grad_norm = g.sup_norm();
    Solution { u, energy: e, grad_norm, iters, nontrivial: e < 0.0, seed_t: None, converged, history }
}

/// Best quotient found by [`lambda1_estimate`]; an upper bound on λ₁.
#[derive(Debug, Clone)]
pub struct Lambda1 {
    pub value: f64,
    pub minimizer: GridFunction,
    /// Index of the random start that produced the minimizer.
    pub start: usize,
}

fn seminorm(ctx: &OperatorContext<'_>, u: &GridFunction) -> f64 {
    match ctx.nf.homogeneous_degree() {
        Some(p) => gagliardo_modular(ctx.nf, ctx.kt, u).powf(1.0 / p),
        None => gagliardo_seminorm(ctx.nf, ctx.kt, u),
    }
}

fn lp_power(gd: &GridDomain, u: &GridFunction, p: f64) -> f64 {
    let v = u.values();
    gd.omega_nodes().iter().map(|&i| v[i].abs().powf(p)).sum::<f64>() * gd.cell_volume()
}

/// `[u]_{s,A}^{p₀} / Σ_{i∈Ω} |u_i|^{p₀} h^N`.
pub fn rayleigh_quotient(ctx: &OperatorContext<'_>, u: &GridFunction) -> f64 {
    let p0 = ctx.nf.p_lower();
    seminorm(ctx, u).powf(p0) / lp_power(ctx.gd, u, p0)
}

/// `log Q(u)` and its nodal gradient.
fn log_quotient(ctx: &OperatorContext<'_>, u: &GridFunction) -> (f64, Vec<f64>) {
    let p0 = ctx.nf.p_lower();
    let gd = ctx.gd;
    let hn = gd.cell_volume();
    let sigma = seminorm(ctx, u);
    let v = u.scaled(1.0 / sigma);
    let dphi = flux(ctx, &v);
    let pvv: f64 = dphi.iter().zip(v.values()).map(|(a, b)| a * b).sum();
    let lp = lp_power(gd, u, p0);
    let uv = u.values();
    let grad = (0..gd.len())
        .map(|i| {
            if !gd.in_omega(i) {
                return 0.0;
            }
            p0 * dphi[i] / (sigma * pvv) - p0 * signed_power(uv[i], p0 - 1.0) * hn / lp
        })
        .collect();
    (p0 * sigma.ln() - lp.ln(), grad)
}

fn normalized(u: GridFunction) -> GridFunction {
    let m = u.sup_norm();
    u.scaled(1.0 / m)
}

fn lambda1_run(ctx: &OperatorContext<'_>, cfg: &SolverConfig, start: GridFunction) -> (f64, GridFunction) {
    const WINDOW: usize = 25;
    let mut u = normalized(start);
    let (mut l, mut g) = log_quotient(ctx, &u);
    let mut trail = vec![l];
    let mut step = 1.0 / g.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    for _ in 0..cfg.lambda1_iters {
        let gg = sq_norm(&g);
        if gg == 0.0 {
            break;
        }
        let mut alpha = step;
        let accepted = loop {
            let cand = GridFunction::from_values(
                ctx.gd,
                u.values().iter().zip(&g).map(|(a, b)| a - alpha * b).collect(),
            )
            .expect("descent step vanishes on the buffer");
            if !cand.is_zero() {
                let cand = normalized(cand);
                let (lc, gc) = log_quotient(ctx, &cand);
                if lc <= l - cfg.armijo_c * alpha * gg {
                    break Some((cand, lc, gc));
                }
            }
            alpha *= cfg.armijo_shrink;
            if alpha < STEP_MIN * step.min(1.0) {
                break None;
            }
        };
        let Some((next, l_next, g_next)) = accepted else { break };
        let s: Vec<f64> = next.values().iter().zip(u.values()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        step = bb_step(&s, &y).unwrap_or(alpha / cfg.armijo_shrink);
        u = next;
        l = l_next;
        g = g_next;
        trail.push(l);
        if trail.len() > WINDOW && trail[trail.len() - 1 - WINDOW] - l < cfg.lambda1_tol {
            break;
        }
    }
    (l.exp(), u)
}

/// Minimizes the Rayleigh quotient from `lambda1_starts` seeded random starts.
/// Start `k` draws from a ChaCha8 stream seeded with `rng_seed + k`.
pub fn lambda1_estimate(ctx: &OperatorContext<'_>, cfg: &SolverConfig) -> Result<Lambda1> {
    cfg.validate()?;
    let runs: Vec<(f64, GridFunction)> = (0..cfg.lambda1_starts)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(k as u64));
            let start = GridFunction::random(ctx.gd, &mut rng);
            lambda1_run(ctx, cfg, start)
        })
        .collect();
    let (start, (value, minimizer)) = runs
        .into_iter()
        .enumerate()
        .reduce(|best, cur| if cur.1 .0 < best.1 .0 { cur } else { best })
        .expect("at least one start");
    Ok(Lambda1 { value, minimizer, start })
}
