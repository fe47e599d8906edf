//! N-functions (Young functions) `A`, their densities `a = A'`, numeric
//! conjugates and growth indices.

use crate::error::{Error, Result};
use crate::quad;

/// Absolute tolerance of the generalized-inverse bisection.
pub const BISECT_TOL: f64 = 1e-12;
/// Default relative tolerance for one-dimensional quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
/// Range and resolution of the log-spaced grid used for index estimates.
pub const INDEX_GRID_LO: f64 = 1e-8;
pub const INDEX_GRID_HI: f64 = 1e8;
pub const INDEX_GRID_POINTS: usize = 2000;

/// Something that can be integrated against a measure: `A` itself or its conjugate.
pub trait YoungFunction {
    /// `A(|t|)` (even extension).
    fn value(&self, t: f64) -> f64;
}

/// Monotone density sampled at knots, linearly interpolated and linearly
/// extended past the last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    knots: Vec<f64>,
    density: Vec<f64>,
    primitive: Vec<f64>,
}

impl DensityTable {
    /// Builds a table from `(t, a(t))` samples. A leading `(0, 0)` sample is
    /// inserted when absent.
    pub fn new(samples: &[(f64, f64)]) -> Result<Self> {
        let mut knots = Vec::with_capacity(samples.len() + 1);
        let mut density = Vec::with_capacity(samples.len() + 1);
        if samples.first().is_none_or(|&(t, _)| t > 0.0) {
            knots.push(0.0);
            density.push(0.0);
        }
        for &(t, a) in samples {
            if !t.is_finite() || !a.is_finite() || t < 0.0 {
                return Err(Error::InvalidNFunction(format!("bad sample ({t}, {a})")));
            }
            if let Some(&last) = knots.last() {
                if t <= last {
                    return Err(Error::InvalidNFunction(
                        "sample abscissae must be strictly increasing".into(),
                    ));
                }
            }
            knots.push(t);
            density.push(a);
        }
        if density[0] != 0.0 {
            return Err(Error::InvalidNFunction("density must vanish at 0".into()));
        }
        if knots.len() < 2 {
            return Err(Error::InvalidNFunction("need at least one positive sample".into()));
        }
        for w in density.windows(2) {
            if w[1] < w[0] {
                return Err(Error::InvalidNFunction("density must be nondecreasing".into()));
            }
        }
        if density[1] <= 0.0 {
            return Err(Error::InvalidNFunction(
                "density must be positive for t > 0 (A would vanish)".into(),
            ));
        }
        let n = knots.len();
        if density[n - 1] <= density[n - 2] {
            return Err(Error::InvalidNFunction(
                "last segment must be strictly increasing so that a(t) -> infinity".into(),
            ));
        }
        let mut primitive = vec![0.0; n];
        for k in 1..n {
            let dt = knots[k] - knots[k - 1];
            primitive[k] = primitive[k - 1] + 0.5 * dt * (density[k] + density[k - 1]);
        }
        Ok(Self { knots, density, primitive })
    }

    fn segment(&self, t: f64) -> usize {
        let k = self.knots.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(self.knots.len() - 2)
    }

    fn slope(&self, k: usize) -> f64 {
        (self.density[k + 1] - self.density[k]) / (self.knots[k + 1] - self.knots[k])
    }

    fn density_at(&self, t: f64) -> f64 {
        let k = self.segment(t);
        self.density[k] + self.slope(k) * (t - self.knots[k])
    }

    fn primitive_at(&self, t: f64) -> f64 {
        let k = self.segment(t);
        let dt = t - self.knots[k];
        self.primitive[k] + self.density[k] * dt + 0.5 * self.slope(k) * dt * dt
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots.iter().copied().zip(self.density.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    /// `A(t) = t^p`
    Power(f64),
    /// `A(t) = t^p / p`
    PowerNormalized(f64),
    /// `A(t) = t^p log(1 + t)`
    PowerLog(f64),
    Tabulated(DensityTable),
}

/// Simonenko indices `p₀ = inf t a(t)/A(t)` and `p⁰ = sup t a(t)/A(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Indices {
    pub p_lower: f64,
    pub p_upper: f64,
    /// True when the values come from the sampled grid rather than a closed form.
    pub estimated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NFunction {
    kind: Kind,
    indices: Indices,
    quad_tol: f64,
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidNFunction(format!("exponent must satisfy 1 < p < inf, got {p}")))
    }
}

/// The log-spaced grid `[1e-8, 1e8]` used for sup/inf estimates.
pub fn index_grid() -> Vec<f64> {
    let (lo, hi) = (INDEX_GRID_LO.ln(), INDEX_GRID_HI.ln());
    let step = (hi - lo) / (INDEX_GRID_POINTS - 1) as f64;
    (0..INDEX_GRID_POINTS).map(|k| (lo + step * k as f64).exp()).collect()
}

impl NFunction {
    pub fn power(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self::exact(Kind::Power(p), p, p))
    }

    pub fn power_normalized(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self::exact(Kind::PowerNormalized(p), p, p))
    }

    /// `t a(t)/A(t) = p + t/((1+t) log(1+t))` decreases from `p+1` at `0⁺` to `p` at infinity.
    pub fn power_log(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self::exact(Kind::PowerLog(p), p, p + 1.0))
    }

    pub fn tabulated(samples: &[(f64, f64)]) -> Result<Self> {
        let table = DensityTable::new(samples)?;
        let mut nf = Self {
            kind: Kind::Tabulated(table),
            indices: Indices { p_lower: f64::NAN, p_upper: f64::NAN, estimated: true },
            quad_tol: DEFAULT_QUAD_TOL,
        };
        nf.indices = nf.grid_indices()?;
        if !(nf.indices.p_lower > 1.0 && nf.indices.p_upper.is_finite()) {
            return Err(Error::InvalidNFunction(format!(
                "indices ({}, {}) violate 1 < p0 <= p^0 < inf",
                nf.indices.p_lower, nf.indices.p_upper
            )));
        }
        Ok(nf)
    }

    fn exact(kind: Kind, p_lower: f64, p_upper: f64) -> Self {
        Self {
            kind,
            indices: Indices { p_lower, p_upper, estimated: false },
            quad_tol: DEFAULT_QUAD_TOL,
        }
    }

    pub fn with_quad_tol(mut self, tol: f64) -> Self {
        self.quad_tol = tol;
        self
    }

    /// Replaces the stored indices without checking them against the density.
    /// Used to inject faults into the certification checks.
    pub fn with_indices(mut self, p_lower: f64, p_upper: f64) -> Self {
        self.indices = Indices { p_lower, p_upper, estimated: self.indices.estimated };
        self
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn p_lower(&self) -> f64 {
        self.indices.p_lower
    }

    pub fn p_upper(&self) -> f64 {
        self.indices.p_upper
    }

    /// True for the kinds with `A(ct) = c^p A(t)`.
    pub fn homogeneous_degree(&self) -> Option<f64> {
        match self.kind {
            Kind::Power(p) | Kind::PowerNormalized(p) => Some(p),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Power(p) => format!("power(p={p})"),
            Kind::PowerNormalized(p) => format!("power_normalized(p={p})"),
            Kind::PowerLog(p) => format!("power_log(p={p})"),
            Kind::Tabulated(t) => format!("tabulated({} knots)", t.knots.len()),
        }
    }

    /// `A(|t|)`.
    pub fn value(&self, t: f64) -> f64 {
        let t = t.abs();
        match &self.kind {
            Kind::Power(p) => t.powf(*p),
            Kind::PowerNormalized(p) => t.powf(*p) / p,
            Kind::PowerLog(p) => t.powf(*p) * t.ln_1p(),
            Kind::Tabulated(table) => table.primitive_at(t),
        }
    }

    /// `a(|t|)`.
    pub fn density(&self, t: f64) -> f64 {
        let t = t.abs();
        match &self.kind {
            Kind::Power(p) => p * t.powf(p - 1.0),
            Kind::PowerNormalized(p) => t.powf(p - 1.0),
            Kind::PowerLog(p) => {
                let tp1 = t.powf(p - 1.0);
                p * tp1 * t.ln_1p() + tp1 * t / (1.0 + t)
            }
            Kind::Tabulated(table) => table.density_at(t),
        }
    }

    /// `(A(t), a(t))` for `t ≥ 0`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("N-function argument must be finite and >= 0, got {t}")));
        }
        Ok((self.value(t), self.density(t)))
    }

    /// `ā(t) = sup{ s : a(s) ≤ t }`.
    pub fn conjugate_density(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        match self.kind {
            Kind::Power(p) => (t / p).powf(1.0 / (p - 1.0)),
            Kind::PowerNormalized(p) => t.powf(1.0 / (p - 1.0)),
            _ => self.generalized_inverse(t),
        }
    }

    fn generalized_inverse(&self, t: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = 1.0;
        if self.density(hi) <= t {
            while self.density(hi) <= t {
                lo = hi;
                hi *= 2.0;
            }
        } else {
            while hi > f64::MIN_POSITIVE && self.density(0.5 * hi) > t {
                hi *= 0.5;
            }
            lo = 0.5 * hi;
        }
        // relative resolution: the absolute 1e-12 alone is too coarse for small t
        loop {
            let width = hi - lo;
            if width <= (BISECT_TOL * hi).max(4.0 * f64::EPSILON * hi) {
                break;
            }
            let mid = lo + 0.5 * width;
            if self.density(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `Ā(t) = ∫₀ᵗ ā(s) ds`.
    pub fn conjugate_eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("conjugate argument must be finite and >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        match self.kind {
            Kind::Power(p) => {
                let q = p / (p - 1.0);
                Ok(p.powf(-1.0 / (p - 1.0)) * t.powf(q) / q)
            }
            Kind::PowerNormalized(p) => {
                let q = p / (p - 1.0);
                Ok(t.powf(q) / q)
            }
            _ => {
                // s = t w² flattens the root-type growth of ā near the origin
                let integrand = |w: f64| 2.0 * t * w * self.conjugate_density(t * w * w);
                quad::integrate(integrand, 0.0, 1.0, self.quad_tol, 1e-300)
                    .map(|e| e.value)
                    .map_err(|e| Error::Accuracy { value: e.value, achieved: e.error })
            }
        }
    }

    /// `A(t) + Ā(s) − s t`, nonnegative by Young's inequality.
    pub fn young_residual(&self, s: f64, t: f64) -> Result<f64> {
        let (a_t, _) = self.eval(t)?;
        let conj = self.conjugate_eval(s)?;
        Ok(a_t + conj - s * t)
    }

    pub fn simonenko_indices(&self) -> Indices {
        self.indices
    }

    fn grid_indices(&self) -> Result<Indices> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in index_grid() {
            let big_a = self.value(t);
            if !(big_a > 0.0) {
                return Err(Error::InvalidNFunction(format!("A({t:e}) = {big_a} is not positive")));
            }
            let ratio = t * self.density(t) / big_a;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        Ok(Indices { p_lower: lo, p_upper: hi, estimated: true })
    }

    /// Grid supremum of `A(2t)/A(t)`; bounded by `2^{p⁰}`.
    pub fn delta2_constant(&self) -> f64 {
        index_grid()
            .into_iter()
            .filter_map(|t| {
                let base = self.value(t);
                let doubled = self.value(2.0 * t);
                (base > 0.0 && doubled.is_finite()).then(|| doubled / base)
            })
            .fold(0.0, f64::max)
    }

    /// Grid supremum of `Ā(a(t))/A(t)`, the empirical constant of `Ā(a(t)) ≤ c A(t)`.
    pub fn conjugate_ratio_sup(&self) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for t in index_grid() {
            let base = self.value(t);
            if !(base > 0.0) {
                continue;
            }
            let conj = self.conjugate_eval(self.density(t))?;
            if conj.is_finite() {
                sup = sup.max(conj / base);
            }
        }
        Ok(sup)
    }

    pub fn conjugate(&self) -> Conjugate<'_> {
        Conjugate { nf: self }
    }
}

impl YoungFunction for NFunction {
    fn value(&self, t: f64) -> f64 {
        NFunction::value(self, t)
    }
}

/// The conjugate N-function `Ā` of a borrowed `A`.
#[derive(Debug, Clone, Copy)]
pub struct Conjugate<'a> {
    nf: &'a NFunction,
}

impl YoungFunction for Conjugate<'_> {
    fn value(&self, t: f64) -> f64 {
        match self.nf.conjugate_eval(t.abs()) {
            Ok(v) => v,
            Err(Error::Accuracy { value, achieved }) => {
                log::warn!("conjugate quadrature at t={t:e} stopped with error {achieved:e}");
                value
            }
            Err(e) => unreachable!("conjugate_eval on |t|: {e}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn closed_form_evaluations() {
        assert_eq!(NFunction::power(2.0).unwrap().eval(3.0).unwrap(), (9.0, 6.0));
        assert_eq!(NFunction::power_normalized(2.0).unwrap().eval(3.0).unwrap(), (4.5, 3.0));
        let (big, small) = NFunction::power_log(2.0).unwrap().eval(1.0).unwrap();
        assert!(close(big, 2f64.ln(), 1e-15));
        assert!(close(small, 2.0 * 2f64.ln() + 0.5, 1e-15));
    }

    #[test]
    fn power_log_primitive_matches_quadrature_of_density() {
        let nf = NFunction::power_log(2.0).unwrap();
        for t in [0.1, 1.0, 7.5] {
            let q = quad::integrate(|s| nf.density(s), 0.0, t, 1e-13, 0.0).unwrap().value;
            assert!(close(nf.value(t), q, 1e-12), "t={t}");
        }
    }

    #[test]
    fn negative_argument_is_domain_error() {
        let nf = NFunction::power(2.0).unwrap();
        assert!(matches!(nf.eval(-1.0), Err(Error::Domain(_))));
        assert!(matches!(nf.conjugate_eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn exponents_at_or_below_one_are_rejected() {
        assert!(NFunction::power(1.0).is_err());
        assert!(NFunction::power_log(0.5).is_err());
        assert!(NFunction::power_normalized(f64::INFINITY).is_err());
    }

    #[test]
    fn power_conjugates() {
        let p2 = NFunction::power(2.0).unwrap();
        assert!(close(p2.conjugate_density(3.0), 1.5, 1e-15));
        assert!(close(p2.conjugate_eval(2.0).unwrap(), 1.0, 1e-15));
        let n2 = NFunction::power_normalized(2.0).unwrap();
        assert!(close(n2.conjugate_density(3.0), 3.0, 1e-15));
        assert!(close(n2.conjugate_eval(4.0).unwrap(), 8.0, 1e-15));
    }

    #[test]
    fn power_log_conjugate_density_at_one() {
        // independent bisection on the hand-differentiated density
        let g = |s: f64| 2.0 * s * s.ln_1p() + s * s / (1.0 + s) - 1.0;
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) <= 0.0 { lo = mid } else { hi = mid }
        }
        let nf = NFunction::power_log(2.0).unwrap();
        let got = nf.conjugate_density(1.0);
        assert!((got - lo).abs() < 2e-12);
        assert!((got - 0.687_675_756_432_642_7).abs() < 2e-12);
    }

    #[test]
    fn power_log_conjugate_value_matches_simpson() {
        let nf = NFunction::power_log(2.0).unwrap();
        // composite Simpson on the substituted integrand s = w²
        let n = 4000;
        let f = |w: f64| 2.0 * w * nf.conjugate_density(w * w);
        let hstep = 1.0 / n as f64;
        let mut acc = f(0.0) + f(1.0);
        for k in 1..n {
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * hstep);
        }
        let simpson = acc * hstep / 3.0;
        let got = nf.conjugate_eval(1.0).unwrap();
        assert!(close(got, simpson, 1e-10));
        assert!(close(got, 0.440_183_533_322_554_3, 1e-10));
    }

    #[test]
    fn young_residual_examples() {
        for nf in [
            NFunction::power(2.0).unwrap(),
            NFunction::power_log(2.0).unwrap(),
            NFunction::power_normalized(3.0).unwrap(),
        ] {
            assert_eq!(nf.young_residual(0.0, 0.0).unwrap(), 0.0);
        }
        let n2 = NFunction::power_normalized(2.0).unwrap();
        assert!(n2.young_residual(1.0, 1.0).unwrap().abs() < 1e-15);
        let pl = NFunction::power_log(2.0).unwrap();
        let r = pl.young_residual(2.0, 3.0).unwrap();
        assert!(r > 0.0);
        assert!(close(r, 7.785_549_657_457_144, 1e-9));
    }

    #[test]
    fn indices_and_delta2() {
        let p = NFunction::power(2.5).unwrap().simonenko_indices();
        assert_eq!((p.p_lower, p.p_upper, p.estimated), (2.5, 2.5, false));
        let pl = NFunction::power_log(2.0).unwrap();
        assert_eq!((pl.p_lower(), pl.p_upper()), (2.0, 3.0));
        // grid oracle for the closed-form indices
        let ratios: Vec<f64> = index_grid()
            .into_iter()
            .map(|t| 2.0 + t / ((1.0 + t) * t.ln_1p()))
            .collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        // the infimum is only approached like 1/log t, so the grid stays well above it
        assert!((2.0..2.06).contains(&lo));
        assert!(hi <= 3.0 && hi > 3.0 - 1e-6);

        assert!(close(NFunction::power(2.0).unwrap().delta2_constant(), 4.0, 1e-12));
        assert!(close(NFunction::power_normalized(3.0).unwrap().delta2_constant(), 8.0, 1e-12));
        let d = pl.delta2_constant();
        assert!(d > 4.0 && d <= 8.0, "{d}");
    }

    #[test]
    fn conjugate_ratio_bounds() {
        let r = NFunction::power_normalized(2.0).unwrap().conjugate_ratio_sup().unwrap();
        assert!(close(r, 1.0, 1e-12));
        let r = NFunction::power(2.0).unwrap().conjugate_ratio_sup().unwrap();
        assert!(close(r, 1.0, 1e-12));
        let r = NFunction::power_log(2.0).unwrap().conjugate_ratio_sup().unwrap();
        // t a/A ∈ [2, 3] gives Ā(a(t))/A(t) = t a/A - 1 ∈ [1, 2]
        assert!((1.0..=2.0 + 1e-8).contains(&r), "{r}");
    }

    #[test]
    fn tabulated_density() {
        let nf = NFunction::tabulated(&[(1.0, 1.0), (2.0, 3.0), (4.0, 4.0)]).unwrap();
        assert_eq!(nf.density(0.5), 0.5);
        assert_eq!(nf.density(1.5), 2.0);
        // linear extension with the last slope 1/2
        assert_eq!(nf.density(6.0), 5.0);
        assert!(close(nf.value(2.0), 0.5 + 2.0, 1e-15));
        let q = quad::integrate(|s| nf.density(s), 0.0, 9.0, 1e-13, 0.0).unwrap().value;
        assert!(close(nf.value(9.0), q, 1e-9));
        let idx = nf.simonenko_indices();
        assert!(idx.estimated && idx.p_lower > 1.0 && idx.p_upper < 10.0);
        // generalized inverse of a piecewise-linear density
        assert!((nf.conjugate_density(2.0) - 1.5).abs() < 1e-11);
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        assert!(NFunction::tabulated(&[(1.0, 2.0), (0.5, 3.0)]).is_err());
        assert!(NFunction::tabulated(&[(1.0, 2.0), (2.0, 1.0)]).is_err());
        assert!(NFunction::tabulated(&[(0.0, 1.0), (2.0, 3.0)]).is_err());
        assert!(NFunction::tabulated(&[(1.0, 2.0), (2.0, 2.0)]).is_err());
        assert!(NFunction::tabulated(&[(1.0, 0.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn conjugate_involution_for_power_kinds() {
        // the conjugate of t^p/p is t^{p'}/p'; conjugating again returns p
        for p in [1.5, 2.0, 3.0] {
            let nf = NFunction::power_normalized(p).unwrap();
            let pc = p / (p - 1.0);
            let conj = NFunction::power_normalized(pc).unwrap();
            for t in [0.01, 0.3, 1.0, 4.0, 20.0] {
                assert!(close(nf.conjugate_eval(t).unwrap(), conj.value(t), 1e-12));
                assert!(close(conj.conjugate_eval(t).unwrap(), nf.value(t), 1e-8));
            }
        }
    }
}
