//! Uniform grids on a computational box, the singular kernel table for the
//! measure `|x−y|^{−N} dx dy`, and grid functions vanishing outside Ω.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfunction::NFunction;
use crate::quad;
use crate::reduce::Reduction;

/// Open subsets of the plane (or line) used for Ω, Ω₀ and Poincaré balls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::Ball { center, .. } => center.len(),
        }
    }

    fn validate(&self, dim: usize, what: &str) -> Result<()> {
        let ok = match self {
            Region::Box { lo, hi } => {
                lo.len() == dim && hi.len() == dim && lo.iter().zip(hi).all(|(a, b)| a < b)
            }
            Region::Ball { center, radius } => center.len() == dim && *radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{what}: malformed {dim}-D region {self:?}")))
        }
    }

    /// Strict membership with a relative slack of `eps` on the boundary.
    pub fn contains(&self, x: &[f64], eps: f64) -> bool {
        match self {
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&xi, (&l, &u))| xi > l + eps && xi < u - eps),
            Region::Ball { center, radius } => dist(x, center) < radius - eps,
        }
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
            Region::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    pub fn measure(&self) -> f64 {
        match self {
            Region::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            Region::Ball { radius, .. } => match self.dim() {
                1 => 2.0 * radius,
                2 => PI * radius * radius,
                n => unit_ball_volume(n) * radius.powi(n as i32),
            },
        }
    }

    fn extreme_points(&self) -> Vec<Vec<f64>> {
        match self {
            Region::Box { lo, hi } => {
                let mut pts = vec![Vec::new()];
                for (l, u) in lo.iter().zip(hi) {
                    pts = pts
                        .into_iter()
                        .flat_map(|p| {
                            [*l, *u].into_iter().map(move |c| {
                                let mut q = p.clone();
                                q.push(c);
                                q
                            })
                        })
                        .collect();
                }
                pts
            }
            Region::Ball { center, .. } => vec![center.clone()],
        }
    }

    /// Largest distance from `p` to a point of the closure.
    fn farthest_from(&self, p: &[f64]) -> f64 {
        match self {
            Region::Box { .. } => self
                .extreme_points()
                .iter()
                .map(|c| dist(c, p))
                .fold(0.0, f64::max),
            Region::Ball { center, radius } => dist(center, p) + radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Region::Box { lo, hi } => dist(lo, hi),
            Region::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Diameter of the union of two regions.
    pub fn union_diameter(&self, other: &Region) -> f64 {
        let cross = match (self, other) {
            (Region::Ball { center, radius }, r) | (r, Region::Ball { center, radius }) => {
                r.farthest_from(center) + radius
            }
            (a, b) => a
                .extreme_points()
                .iter()
                .map(|p| b.farthest_from(p))
                .fold(0.0, f64::max),
        };
        cross.max(self.diameter()).max(other.diameter())
    }

    /// Smallest distance between the closures; zero when they touch or overlap.
    pub fn gap(&self, other: &Region) -> f64 {
        match (self, other) {
            (Region::Ball { center: c1, radius: r1 }, Region::Ball { center: c2, radius: r2 }) => {
                (dist(c1, c2) - r1 - r2).max(0.0)
            }
            (Region::Box { lo, hi }, Region::Ball { center, radius })
            | (Region::Ball { center, radius }, Region::Box { lo, hi }) => {
                let d2: f64 = center
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(&c, (&l, &u))| {
                        let e = (l - c).max(0.0).max(c - u);
                        e * e
                    })
                    .sum();
                (d2.sqrt() - radius).max(0.0)
            }
            (Region::Box { lo: l1, hi: h1 }, Region::Box { lo: l2, hi: h2 }) => {
                let d2: f64 = (0..l1.len())
                    .map(|k| {
                        let e = (l2[k] - h1[k]).max(l1[k] - h2[k]).max(0.0);
                        e * e
                    })
                    .sum();
                d2.sqrt()
            }
        }
    }

    /// A profile in `[0, 1]` that vanishes on the boundary: a product of sines
    /// on boxes and `cos²` of the scaled radius on balls.
    pub fn bump(&self, x: &[f64]) -> f64 {
        if !self.contains(x, 0.0) {
            return 0.0;
        }
        match self {
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&xi, (&l, &u))| (PI * (xi - l) / (u - l)).sin())
                .product(),
            Region::Ball { center, radius } => {
                let c = (0.5 * PI * dist(x, center) / radius).cos();
                c * c
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Surface measure of the unit sphere in ℝᴺ: 2 on the line, 2π in the plane.
pub fn sphere_surface(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

/// A uniform grid on the box `B`, with masks for Ω and Ω₀.
#[derive(Debug, Clone)]
pub struct GridDomain {
    dim: usize,
    box_lo: Vec<f64>,
    box_hi: Vec<f64>,
    h: f64,
    counts: [usize; 2],
    coords: Vec<f64>,
    multi: Vec<[usize; 2]>,
    omega: Region,
    omega0: Region,
    omega_mask: Vec<bool>,
    omega0_mask: Vec<bool>,
    omega_nodes: Vec<usize>,
    diam_omega: f64,
}

impl GridDomain {
    /// Enumerates grid nodes lexicographically (first coordinate slowest) and
    /// marks the nodes of Ω and Ω₀. `omega0` defaults to Ω.
    pub fn build(
        dim: usize,
        box_lo: &[f64],
        box_hi: &[f64],
        h: f64,
        omega: Region,
        omega0: Option<Region>,
    ) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Config(format!("dim must be 1 or 2, got {dim}")));
        }
        if box_lo.len() != dim || box_hi.len() != dim {
            return Err(Error::Config("box corners must have `dim` coordinates".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Config(format!("grid spacing must be positive, got {h}")));
        }
        let mut counts = [1usize; 2];
        for k in 0..dim {
            let cells = (box_hi[k] - box_lo[k]) / h;
            let rounded = cells.round();
            if !(rounded >= 1.0) || (cells - rounded).abs() > 1e-9 * rounded.max(1.0) {
                return Err(Error::Config(format!(
                    "h = {h} does not divide the box extent {} on axis {k}",
                    box_hi[k] - box_lo[k]
                )));
            }
            counts[k] = rounded as usize + 1;
        }
        omega.validate(dim, "omega")?;
        let (olo, ohi) = omega.bounds();
        for k in 0..dim {
            if !(olo[k] > box_lo[k] && ohi[k] < box_hi[k]) {
                return Err(Error::Config(format!(
                    "omega must lie strictly inside the box (axis {k}: omega [{}, {}], box [{}, {}])",
                    olo[k], ohi[k], box_lo[k], box_hi[k]
                )));
            }
        }
        let omega0 = omega0.unwrap_or_else(|| omega.clone());
        omega0.validate(dim, "omega0")?;

        let n = counts[0] * counts[1];
        let eps = 1e-9 * h;
        let mut coords = Vec::with_capacity(n * dim);
        let mut multi = Vec::with_capacity(n);
        let mut omega_mask = Vec::with_capacity(n);
        let mut omega0_mask = Vec::with_capacity(n);
        for ix in 0..counts[0] {
            for iy in 0..counts[1] {
                let idx = [ix, iy];
                let x: Vec<f64> = (0..dim).map(|k| box_lo[k] + idx[k] as f64 * h).collect();
                let in_omega = omega.contains(&x, eps);
                let in_omega0 = omega0.contains(&x, eps);
                if in_omega0 && !in_omega {
                    return Err(Error::Config(format!("omega0 node {x:?} lies outside omega")));
                }
                coords.extend_from_slice(&x);
                multi.push(idx);
                omega_mask.push(in_omega);
                omega0_mask.push(in_omega0);
            }
        }
        let omega_nodes: Vec<usize> = (0..n).filter(|&i| omega_mask[i]).collect();
        if omega_nodes.is_empty() {
            return Err(Error::Config("omega contains no grid nodes".into()));
        }
        if !omega0_mask.iter().any(|&b| b) {
            return Err(Error::Config("omega0 contains no grid nodes".into()));
        }
        let mut gd = Self {
            dim,
            box_lo: box_lo.to_vec(),
            box_hi: box_hi.to_vec(),
            h,
            counts,
            coords,
            multi,
            omega,
            omega0,
            omega_mask,
            omega0_mask,
            omega_nodes,
            diam_omega: 0.0,
        };
        let mut diam: f64 = 0.0;
        for (a, &i) in gd.omega_nodes.iter().enumerate() {
            for &j in &gd.omega_nodes[a + 1..] {
                diam = diam.max(dist(gd.node(i), gd.node(j)));
            }
        }
        gd.diam_omega = diam + h;
        Ok(gd)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn box_lo(&self) -> &[f64] {
        &self.box_lo
    }
    pub fn box_hi(&self) -> &[f64] {
        &self.box_hi
    }
    pub fn counts(&self) -> [usize; 2] {
        self.counts
    }
    pub fn len(&self) -> usize {
        self.multi.len()
    }
    pub fn is_empty(&self) -> bool {
        self.multi.is_empty()
    }
    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
    pub fn multi_index(&self, i: usize) -> [usize; 2] {
        self.multi[i]
    }
    pub fn omega(&self) -> &Region {
        &self.omega
    }
    pub fn omega0(&self) -> &Region {
        &self.omega0
    }
    pub fn in_omega(&self, i: usize) -> bool {
        self.omega_mask[i]
    }
    pub fn in_omega0(&self, i: usize) -> bool {
        self.omega0_mask[i]
    }
    pub fn omega_mask(&self) -> &[bool] {
        &self.omega_mask
    }
    pub fn omega0_mask(&self) -> &[bool] {
        &self.omega0_mask
    }
    /// Indices of the Ω nodes, increasing.
    pub fn omega_nodes(&self) -> &[usize] {
        &self.omega_nodes
    }
    pub fn diam_omega(&self) -> f64 {
        self.diam_omega
    }
    /// `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }
    /// Discrete measure of Ω: node count times `h^N`.
    pub fn omega_measure(&self) -> f64 {
        self.omega_nodes.len() as f64 * self.cell_volume()
    }
    pub fn omega0_measure(&self) -> f64 {
        self.omega0_mask.iter().filter(|&&b| b).count() as f64 * self.cell_volume()
    }
    /// Distance from Ω to the box boundary; the kernel sums ignore interactions beyond it.
    pub fn buffer_width(&self) -> f64 {
        let (lo, hi) = self.omega.bounds();
        (0..self.dim)
            .map(|k| (lo[k] - self.box_lo[k]).min(self.box_hi[k] - hi[k]))
            .fold(f64::INFINITY, f64::min)
    }

    /// The Ω₀ profile sampled on the grid.
    pub fn omega0_bump(&self) -> GridFunction {
        let values = (0..self.len())
            .map(|i| if self.omega0_mask[i] { self.omega0.bump(self.node(i)) } else { 0.0 })
            .collect();
        GridFunction { values }
    }
}

/// Real values on the grid nodes, zero on every buffer node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(gd: &GridDomain) -> Self {
        Self { values: vec![0.0; gd.len()] }
    }

    pub fn from_values(gd: &GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != gd.len() {
            return Err(Error::Precondition(format!(
                "expected {} node values, got {}",
                gd.len(),
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Precondition(format!("value at node {i} is not finite")));
            }
            if !gd.in_omega(i) && *v != 0.0 {
                return Err(Error::Precondition(format!(
                    "buffer node {i} at {:?} carries nonzero value {v}",
                    gd.node(i)
                )));
            }
        }
        Ok(Self { values })
    }

    /// Samples `f` on Ω and sets the buffer to zero.
    pub fn from_fn(gd: &GridDomain, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..gd.len())
            .map(|i| if gd.in_omega(i) { f(gd.node(i)) } else { 0.0 })
            .collect();
        Self { values }
    }

    /// Uniform values in `[-1, 1]` on Ω.
    pub fn random<R: Rng + ?Sized>(gd: &GridDomain, rng: &mut R) -> Self {
        let values = (0..gd.len())
            .map(|i| if gd.in_omega(i) { rng.gen_range(-1.0..=1.0) } else { 0.0 })
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| c * v).collect() }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &GridFunction) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    /// Writes `x[,y],u` rows in node order with 17 significant digits.
    pub fn write_csv<W: Write>(&self, gd: &GridDomain, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: &[&str] = if gd.dim() == 1 { &["x", "u"] } else { &["x", "y", "u"] };
        w.write_record(header).map_err(csv_io)?;
        for (i, v) in self.values.iter().enumerate() {
            let mut rec: Vec<String> = gd.node(i).iter().map(|c| format!("{c:.16e}")).collect();
            rec.push(format!("{v:.16e}"));
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a function written by [`GridFunction::write_csv`]. Rows must follow
    /// the node order of `gd`; the first offending row is reported (1-based,
    /// header excluded).
    pub fn read_csv<R: Read>(gd: &GridDomain, input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let expected: &[&str] = if gd.dim() == 1 { &["x", "u"] } else { &["x", "y", "u"] };
        let header = rdr.headers().map_err(|e| Error::Data { row: 0, msg: e.to_string() })?;
        if header.iter().ne(expected.iter().copied()) {
            return Err(Error::Data {
                row: 0,
                msg: format!("header {:?}, expected {expected:?}", header.iter().collect::<Vec<_>>()),
            });
        }
        let tol = 1e-6 * gd.h();
        let mut values = Vec::with_capacity(gd.len());
        for (k, rec) in rdr.records().enumerate() {
            let row = k + 1;
            let rec = rec.map_err(|e| Error::Data { row, msg: e.to_string() })?;
            if k >= gd.len() {
                return Err(Error::Data { row, msg: format!("more rows than the {} grid nodes", gd.len()) });
            }
            let nums: Vec<f64> = rec
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Data { row, msg: format!("unparseable field: {e}") })?;
            let (coords, u) = nums.split_at(gd.dim());
            if coords.iter().zip(gd.node(k)).any(|(a, b)| (a - b).abs() > tol) {
                return Err(Error::Data {
                    row,
                    msg: format!("node {coords:?} out of order, expected {:?}", gd.node(k)),
                });
            }
            let u = u[0];
            if !u.is_finite() {
                return Err(Error::Data { row, msg: "value is not finite".into() });
            }
            if !gd.in_omega(k) && u != 0.0 {
                return Err(Error::Data { row, msg: format!("nonzero value {u} outside omega") });
            }
            values.push(u);
        }
        if values.len() != gd.len() {
            return Err(Error::Data {
                row: values.len() + 1,
                msg: format!("expected {} rows, found {}", gd.len(), values.len()),
            });
        }
        Ok(Self { values })
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Geometry of one node pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    /// `|x_i − x_j|`
    pub dist: f64,
    /// `|x_i − x_j|^s`
    pub dist_s: f64,
    /// `h^{2N} / |x_i − x_j|^N`
    pub weight: f64,
}

/// Pair data for the discrete measure `dμ = |x−y|^{−N} dx dy` on `B × B`.
///
/// On a uniform grid the pair geometry depends only on the absolute index
/// offset, so one entry per offset is stored.
#[derive(Debug, Clone)]
pub struct KernelTable {
    s: f64,
    dim: usize,
    h: f64,
    cell_volume: f64,
    ny: usize,
    multi: Vec<[usize; 2]>,
    pairs: Vec<Pair>,
    tail_bound: f64,
    reduction: Reduction,
}

impl KernelTable {
    pub fn build(gd: &GridDomain, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("fractional order must lie in (0, 1), got {s}")));
        }
        let dim = gd.dim();
        let h = gd.h();
        let [nx, ny] = gd.counts();
        let mut pairs = Vec::with_capacity(nx * ny);
        for dx in 0..nx {
            for dy in 0..ny {
                let d = h * ((dx * dx + dy * dy) as f64).sqrt();
                pairs.push(if dx == 0 && dy == 0 {
                    Pair { dist: 0.0, dist_s: 0.0, weight: 0.0 }
                } else {
                    Pair {
                        dist: d,
                        dist_s: d.powf(s),
                        weight: h.powi(2 * dim as i32) / d.powi(dim as i32),
                    }
                });
            }
        }
        let r = gd.buffer_width();
        Ok(Self {
            s,
            dim,
            h,
            cell_volume: gd.cell_volume(),
            ny,
            multi: (0..gd.len()).map(|i| gd.multi_index(i)).collect(),
            pairs,
            tail_bound: sphere_surface(dim) * r.powf(-s) / s,
            reduction: Reduction::Ordered,
        })
    }

    pub fn with_reduction(mut self, reduction: Reduction) -> Self {
        self.reduction = reduction;
        self
    }

    pub fn reduction(&self) -> Reduction {
        self.reduction
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }
    pub fn len(&self) -> usize {
        self.multi.len()
    }
    pub fn is_empty(&self) -> bool {
        self.multi.is_empty()
    }

    /// True when the table was built on a grid of this shape and spacing.
    pub fn matches(&self, gd: &GridDomain) -> bool {
        self.len() == gd.len() && self.h == gd.h() && self.dim == gd.dim()
    }

    /// Pair geometry for nodes `i ≠ j`; the diagonal entry has zero weight.
    #[inline]
    pub fn pair(&self, i: usize, j: usize) -> &Pair {
        let [ai, bi] = self.multi[i];
        let [aj, bj] = self.multi[j];
        &self.pairs[ai.abs_diff(aj) * self.ny + bi.abs_diff(bj)]
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.pair(i, j).weight
    }

    /// `Σ_{i≠j} weight(i, j)` over all ordered pairs of `B × B`.
    pub fn total_weight(&self) -> f64 {
        let [nx, ny] = [
            self.multi.iter().map(|m| m[0]).max().unwrap_or(0) + 1,
            self.ny,
        ];
        let mut total = 0.0;
        for dx in 0..nx {
            for dy in 0..ny {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let mx = if dx == 0 { nx } else { 2 * (nx - dx) };
                let my = if dy == 0 { ny } else { 2 * (ny - dy) };
                total += (mx * my) as f64 * self.pairs[dx * ny + dy].weight;
            }
        }
        total
    }

    /// Bound `|S^{N−1}| R^{−s}/s` on the far-field interactions dropped by
    /// truncating to the box, `R` being the buffer width.
    pub fn far_field_tail(&self) -> f64 {
        self.tail_bound
    }
}

fn check_order(s: f64, dim: usize) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("fractional order must lie in (0, 1), got {s}")));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::Domain(format!("dim must be 1 or 2, got {dim}")));
    }
    Ok(())
}

/// `∫_{ℝᴺ} A(δ(x)/|x|^s) |x|^{−N} dx` with `δ(x) = min{1, |x|}`, by radial
/// quadrature split at `|x| = 1`.
///
/// After `r = e^{∓y}` both halves become `∫₀^∞ A(e^{−c y}) dy` with
/// `c = 1−s` inside the unit ball and `c = s` outside.
pub fn delta_integral_check(nf: &NFunction, s: f64, dim: usize) -> Result<f64> {
    check_order(s, dim)?;
    let a1 = nf.value(1.0);
    let p0 = nf.p_lower();
    let mut total = 0.0;
    for c in [1.0 - s, s] {
        // A(e^{−cy}) ≤ A(1) e^{−c p₀ y}; cut where the tail is below 1e-16 A(1)
        let y_max = (1e16f64).ln() / (c * p0);
        let est = quad::integrate(|y| nf.value((-c * y).exp()), 0.0, y_max, nf.quad_tol(), 0.0)
            .map_err(|e| Error::Accuracy { value: e.value, achieved: e.error })?;
        total += est.value + a1 * (-c * p0 * y_max).exp() / (c * p0);
    }
    Ok(sphere_surface(dim) * total)
}

/// Majorant `A(1)|S^{N−1}|(1/s + 1/(1−s))` of [`delta_integral_check`].
pub fn delta_integral_bound(nf: &NFunction, s: f64, dim: usize) -> f64 {
    nf.value(1.0) * sphere_surface(dim) * (1.0 / s + 1.0 / (1.0 - s))
}

/// Cell-centred grid analogue of [`delta_integral_check`] on the ball of
/// radius `radius`, returned with the bound `|S^{N−1}| A(R^{−s})/(s p₀)` on
/// the neglected exterior.
pub fn delta_integral_grid(
    nf: &NFunction,
    s: f64,
    dim: usize,
    h: f64,
    radius: f64,
) -> Result<(f64, f64)> {
    check_order(s, dim)?;
    let n = (radius / h).ceil() as i64;
    let cell = h.powi(dim as i32);
    let integrand = |r: f64| {
        let delta = r.min(1.0);
        nf.value(delta / r.powf(s)) / r.powi(dim as i32)
    };
    let mut sum = 0.0;
    let centre = |k: i64| (k as f64 + 0.5) * h;
    if dim == 1 {
        for k in -n..n {
            let r = centre(k).abs();
            if r <= radius {
                sum += integrand(r);
            }
        }
    } else {
        for kx in -n..n {
            for ky in -n..n {
                let r = centre(kx).hypot(centre(ky));
                if r <= radius {
                    sum += integrand(r);
                }
            }
        }
    }
    let tail = sphere_surface(dim) * nf.value(radius.powf(-s)) / (s * nf.p_lower());
    Ok((sum * cell, tail))
}
