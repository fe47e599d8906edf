//! Orlicz modulars, Luxemburg norms, Gagliardo modulars and seminorms, and
//! the inequality checks built on them.

use std::cell::Cell;
use std::fmt::Write as _;

use crate::domain::{GridDomain, GridFunction, KernelTable, Region};
use crate::error::{Error, Result};
use crate::nfunction::{NFunction, YoungFunction};

/// Relative bracket width at which the normalizing root is accepted.
pub const ROOT_REL_TOL: f64 = 1e-12;
/// `|log m(λ)|` below which the root is accepted outright.
const ROOT_LOG_TOL: f64 = 1e-15;
/// Half-width of the band around σ = 1 where the sandwich bounds are only reported.
pub const SANDWICH_BAND: f64 = 1e-6;
pub const SANDWICH_TOL: f64 = 1e-8;
pub const HOLDER_TOL: f64 = 1e-9;
pub const POINCARE_TOL: f64 = 1e-6;

/// `Σ_{i∈Ω} A(|u_i|) h^N`.
pub fn modular<Y: YoungFunction + ?Sized>(nf: &Y, gd: &GridDomain, u: &GridFunction) -> f64 {
    scaled_modular(nf, gd, u, 1.0)
}

fn scaled_modular<Y: YoungFunction + ?Sized>(
    nf: &Y,
    gd: &GridDomain,
    u: &GridFunction,
    c: f64,
) -> f64 {
    let v = u.values();
    gd.omega_nodes().iter().map(|&i| nf.value(c * v[i])).sum::<f64>() * gd.cell_volume()
}

/// A positive root of `m(λ) = 1` together with the number of evaluations of `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: f64,
    pub iterations: usize,
}

/// Finds `inf{λ > 0 : m(λ) ≤ 1}` for a continuous nonincreasing `m` with
/// `m(0⁺) > 1`.
///
/// The bracket `[1/2, 1]` (or `[1, 2]`) is halved or doubled until it
/// straddles the level set, then shrunk by bisection. Interior points are
/// chosen by regula falsi on `log m` against `log λ` (Illinois variant), which
/// keeps the bracket but needs far fewer evaluations than plain midpoints on
/// near-power-law modulars. Every fourth step is a plain midpoint.
pub fn normalizing_root<F: FnMut(f64) -> f64>(mut m: F) -> Root {
    let iterations = Cell::new(0usize);
    let mut eval = |lambda: f64| {
        iterations.set(iterations.get() + 1);
        m(lambda)
    };
    let m1 = eval(1.0);
    if m1 == 1.0 {
        return Root { value: 1.0, iterations: 1 };
    }
    let (mut lo, mut m_lo, mut hi, mut m_hi);
    if m1 > 1.0 {
        (lo, m_lo) = (1.0, m1);
        hi = 2.0;
        loop {
            m_hi = eval(hi);
            if m_hi <= 1.0 {
                break;
            }
            (lo, m_lo) = (hi, m_hi);
            hi *= 2.0;
        }
    } else {
        (hi, m_hi) = (1.0, m1);
        lo = 0.5;
        loop {
            m_lo = eval(lo);
            if m_lo > 1.0 {
                break;
            }
            (hi, m_hi) = (lo, m_lo);
            lo *= 0.5;
        }
    }
    let (mut xa, mut ga) = (lo.ln(), m_lo.ln());
    let (mut xb, mut gb) = (hi.ln(), m_hi.ln());
    let mut side = 0i8;
    let mut step = 0usize;
    while xb - xa > ROOT_REL_TOL && gb != 0.0 {
        step += 1;
        let mid = 0.5 * (xa + xb);
        let x = if step.is_multiple_of(4) || !ga.is_finite() || !gb.is_finite() {
            mid
        } else {
            let x = (xa * gb - xb * ga) / (gb - ga);
            if x > xa && x < xb {
                x
            } else {
                mid
            }
        };
        let g = eval(x.exp()).ln();
        if g.abs() < ROOT_LOG_TOL {
            return Root { value: x.exp(), iterations: iterations.get() };
        }
        if g > 0.0 {
            (xa, ga) = (x, g);
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        } else {
            (xb, gb) = (x, g);
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        }
    }
    Root { value: xb.exp(), iterations: iterations.get() }
}

/// Luxemburg norm `inf{λ > 0 : Σ A(|u_i|/λ) h^N ≤ 1}`.
pub fn luxemburg_norm<Y: YoungFunction + ?Sized>(nf: &Y, gd: &GridDomain, u: &GridFunction) -> f64 {
    luxemburg_root(nf, gd, u).value
}

pub fn luxemburg_root<Y: YoungFunction + ?Sized>(nf: &Y, gd: &GridDomain, u: &GridFunction) -> Root {
    if u.is_zero() {
        return Root { value: 0.0, iterations: 0 };
    }
    normalizing_root(|lambda| scaled_modular(nf, gd, u, 1.0 / lambda))
}

/// Gagliardo modular `φ(u) = Σ_{i≠j} A(|u_i − u_j|/|x_i − x_j|^s) μ_{ij}` over `B × B`.
pub fn gagliardo_modular(nf: &NFunction, kt: &KernelTable, u: &GridFunction) -> f64 {
    let rows = support(u);
    scaled_gagliardo(nf, kt, u, &rows, 1.0)
}

/// Nodes where `u ≠ 0`. Pairs with both ends outside the support contribute
/// nothing, and a pair with one end outside is visited once, so it is counted twice.
pub(crate) fn support(u: &GridFunction) -> Vec<usize> {
    u.values()
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| (v != 0.0).then_some(i))
        .collect()
}

pub(crate) fn scaled_gagliardo(
    nf: &NFunction,
    kt: &KernelTable,
    u: &GridFunction,
    rows: &[usize],
    c: f64,
) -> f64 {
    let v = u.values();
    kt.reduction().sum_rows(rows, |i| {
        let ui = v[i];
        let mut acc = 0.0;
        for (j, &uj) in v.iter().enumerate() {
            if j == i || uj == ui {
                continue;
            }
            let pair = kt.pair(i, j);
            let term = nf.value(c * (ui - uj) / pair.dist_s) * pair.weight;
            acc += if uj == 0.0 { 2.0 * term } else { term };
        }
        acc
    })
}

/// Gagliardo seminorm `[u]_{s,A} = inf{λ > 0 : φ(u/λ) ≤ 1}`.
pub fn gagliardo_seminorm(nf: &NFunction, kt: &KernelTable, u: &GridFunction) -> f64 {
    gagliardo_root(nf, kt, u).value
}

pub fn gagliardo_root(nf: &NFunction, kt: &KernelTable, u: &GridFunction) -> Root {
    let rows = support(u);
    if rows.is_empty() {
        return Root { value: 0.0, iterations: 0 };
    }
    normalizing_root(|lambda| scaled_gagliardo(nf, kt, u, &rows, 1.0 / lambda))
}

/// Norms and modulars of one grid function.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormReport {
    pub luxemburg: f64,
    pub gagliardo_seminorm: f64,
    pub full_norm: f64,
    pub modular: f64,
    pub gagliardo_modular: f64,
    /// Evaluations spent by both root finders.
    pub bracket_iterations: usize,
}

impl NormReport {
    pub const CSV_HEADER: &'static str =
        "luxemburg,gagliardo_seminorm,full_norm,modular,gagliardo_modular,bracket_iterations";

    pub fn compute(nf: &NFunction, gd: &GridDomain, kt: &KernelTable, u: &GridFunction) -> Self {
        let lux = luxemburg_root(nf, gd, u);
        let semi = gagliardo_root(nf, kt, u);
        Self {
            luxemburg: lux.value,
            gagliardo_seminorm: semi.value,
            full_norm: lux.value + semi.value,
            modular: modular(nf, gd, u),
            gagliardo_modular: gagliardo_modular(nf, kt, u),
            bracket_iterations: lux.iterations + semi.iterations,
        }
    }

    fn fields(&self) -> [(&'static str, String); 6] {
        [
            ("luxemburg", format!("{:.16e}", self.luxemburg)),
            ("gagliardo_seminorm", format!("{:.16e}", self.gagliardo_seminorm)),
            ("full_norm", format!("{:.16e}", self.full_norm)),
            ("modular", format!("{:.16e}", self.modular)),
            ("gagliardo_modular", format!("{:.16e}", self.gagliardo_modular)),
            ("bracket_iterations", self.bracket_iterations.to_string()),
        ]
    }

    /// One `key=value` line per field.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// A single CSV data row matching [`NormReport::CSV_HEADER`].
    pub fn to_csv_row(&self) -> String {
        self.fields().map(|(_, v)| v).join(",")
    }
}

/// `(|Σ u_i v_i h^N|, 2 ‖u‖_A ‖v‖_Ā)`.
pub fn holder_check(nf: &NFunction, gd: &GridDomain, u: &GridFunction, v: &GridFunction) -> (f64, f64) {
    let lhs = gd.omega_nodes().iter().map(|&i| u.values()[i] * v.values()[i]).sum::<f64>().abs()
        * gd.cell_volume();
    if lhs == 0.0 && (u.is_zero() || v.is_zero()) {
        return (0.0, 0.0);
    }
    let rhs = 2.0 * luxemburg_norm(nf, gd, u) * luxemburg_norm(&nf.conjugate(), gd, v);
    (lhs, rhs)
}

/// Outcome of comparing `φ(u)` against the powers of `σ = [u]_{s,A}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub sigma: f64,
    pub phi: f64,
    pub lower: f64,
    pub upper: f64,
    /// `None` inside the band `|σ − 1| ≤ 1e-6`, where both branches degenerate.
    pub holds: Option<bool>,
}

impl SandwichReport {
    /// Smallest relative distance of `φ` to the violated side (negative when violated).
    pub fn slack(&self) -> f64 {
        ((self.phi - self.lower) / self.lower).min((self.upper - self.phi) / self.upper)
    }
}

pub fn sandwich_check(nf: &NFunction, kt: &KernelTable, u: &GridFunction) -> Result<SandwichReport> {
    if u.is_zero() {
        return Err(Error::Precondition("sandwich check needs u != 0".into()));
    }
    let sigma = gagliardo_seminorm(nf, kt, u);
    let phi = gagliardo_modular(nf, kt, u);
    let (p0, p1) = (nf.p_lower(), nf.p_upper());
    let (lower, upper) = if sigma > 1.0 {
        (sigma.powf(p0), sigma.powf(p1))
    } else {
        (sigma.powf(p1), sigma.powf(p0))
    };
    let holds = ((sigma - 1.0).abs() > SANDWICH_BAND).then_some(
        phi >= lower * (1.0 - SANDWICH_TOL) && phi <= upper * (1.0 + SANDWICH_TOL),
    );
    Ok(SandwichReport { sigma, phi, lower, upper, holds })
}

/// `‖u‖_A ≤ μ [u]_{s,A}` with `μ = diam(Ω ∪ B_R)^{N+s} / |B_R|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareReport {
    pub lhs: f64,
    pub mu: f64,
    pub rhs: f64,
}

impl PoincareReport {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + POINCARE_TOL)
    }
}

/// The Poincaré constant for a ball `B_R` outside Ω.
pub fn poincare_constant(gd: &GridDomain, s: f64, ball: &Region) -> Result<f64> {
    let Region::Ball { center, radius } = ball else {
        return Err(Error::Config("poincare region must be a ball".into()));
    };
    if center.len() != gd.dim() || !(*radius > 0.0) {
        return Err(Error::Config(format!("malformed ball {ball:?}")));
    }
    for ((c, lo), hi) in center.iter().zip(gd.box_lo()).zip(gd.box_hi()) {
        if c - radius < *lo || c + radius > *hi {
            return Err(Error::Config(format!("ball {ball:?} leaves the computational box")));
        }
    }
    if gd.omega().gap(ball) <= 0.0 {
        return Err(Error::Config(format!("ball {ball:?} intersects omega")));
    }
    let diam = gd.omega().union_diameter(ball);
    Ok(diam.powf(gd.dim() as f64 + s) / ball.measure())
}

pub fn poincare_check(
    nf: &NFunction,
    gd: &GridDomain,
    kt: &KernelTable,
    u: &GridFunction,
    ball: &Region,
) -> Result<PoincareReport> {
    let mu = poincare_constant(gd, kt.s(), ball)?;
    let lhs = luxemburg_norm(nf, gd, u);
    let rhs = mu * gagliardo_seminorm(nf, kt, u);
    Ok(PoincareReport { lhs, mu, rhs })
}
