//! The discrete fractional a-Laplacian and its weak-form pairing.
//!
//! With `μ_{ij} = h^{2N}/|x_i − x_j|^N` and `h_{ij}(w) = (w_i − w_j)/|x_i − x_j|^s`,
//!
//! ```text
//! (−Δ)^s_a u (x_i) = 2 Σ_{j≠i} a(|h_{ij}(u)|) sgn(u_i − u_j) h^N / |x_i − x_j|^{N+s}
//! ⟨(−Δ)^s_a u, v⟩   =   Σ_{i≠j} a(|h_{ij}(u)|) sgn(u_i − u_j) h_{ij}(v) μ_{ij}
//! ```
//!
//! The operator carries the leading factor 2 and the pairing carries none, so
//! `⟨(−Δ)^s_a u, v⟩ = Σ_i apply(u)_i v_i h^N`. Both are the derivative of the
//! Gagliardo modular.

use rayon::prelude::*;

use crate::domain::{GridDomain, GridFunction, KernelTable};
use crate::error::{Error, Result};
use crate::nfunction::NFunction;

/// An N-function together with the grid and kernel it acts on.
#[derive(Debug, Clone, Copy)]
pub struct OperatorContext<'a> {
    pub nf: &'a NFunction,
    pub gd: &'a GridDomain,
    pub kt: &'a KernelTable,
}

impl<'a> OperatorContext<'a> {
    pub fn new(nf: &'a NFunction, gd: &'a GridDomain, kt: &'a KernelTable) -> Result<Self> {
        if !kt.matches(gd) {
            return Err(Error::Precondition("kernel table was built on a different grid".into()));
        }
        Ok(Self { nf, gd, kt })
    }
}

/// `Σ_{j≠i} a(|h_{ij}(u)|) sgn(u_i − u_j) μ_{ij} / |x_i − x_j|^s`.
fn row_flux(ctx: &OperatorContext<'_>, v: &[f64], i: usize) -> f64 {
    let ui = v[i];
    let mut acc = 0.0;
    for (j, &uj) in v.iter().enumerate() {
        let diff = ui - uj;
        if j == i || diff == 0.0 {
            continue;
        }
        let pair = ctx.kt.pair(i, j);
        acc += ctx.nf.density(diff / pair.dist_s) * diff.signum() * pair.weight / pair.dist_s;
    }
    acc
}

/// The operator on Ω nodes; buffer nodes are set to 0.
pub fn apply(ctx: &OperatorContext<'_>, u: &GridFunction) -> GridFunction {
    let flux = flux(ctx, u);
    let scale = 1.0 / ctx.gd.cell_volume();
    let values = flux.into_iter().map(|g| g * scale).collect();
    GridFunction::from_values(ctx.gd, values).expect("operator output vanishes on the buffer")
}

/// `h^N · apply(u)`, the gradient of the Gagliardo modular in nodal coordinates.
pub(crate) fn flux(ctx: &OperatorContext<'_>, u: &GridFunction) -> Vec<f64> {
    let v = u.values();
    let omega = ctx.gd.omega_mask();
    (0..v.len())
        .into_par_iter()
        .map(|i| if omega[i] { 2.0 * row_flux(ctx, v, i) } else { 0.0 })
        .collect()
}

/// `⟨(−Δ)^s_a u, v⟩` as a direct double sum over ordered pairs.
///
/// The summand is symmetric under `i ↔ j`, so rows run over Ω only and a
/// column in the buffer is counted twice to account for its own row.
pub fn pairing(ctx: &OperatorContext<'_>, u: &GridFunction, v: &GridFunction) -> f64 {
    let (uu, vv) = (u.values(), v.values());
    let omega = ctx.gd.omega_mask();
    ctx.kt.reduction().sum_rows(ctx.gd.omega_nodes(), |i| {
        let mut acc = 0.0;
        for j in 0..uu.len() {
            let du = uu[i] - uu[j];
            if j == i || du == 0.0 {
                continue;
            }
            let pair = ctx.kt.pair(i, j);
            let term = ctx.nf.density(du / pair.dist_s) * du.signum() * (vv[i] - vv[j])
                / pair.dist_s
                * pair.weight;
            acc += if omega[j] { term } else { 2.0 * term };
        }
        acc
    })
}
