use fracorlicz::operator::{apply, OperatorContext};
use fracorlicz::orlicz::{gagliardo_seminorm, luxemburg_norm, modular};
use fracorlicz::{GridDomain, GridFunction, KernelTable, NFunction, Region, YoungFunction};
use proptest::prelude::*;

fn line() -> GridDomain {
    GridDomain::build(1, &[-0.5], &[1.5], 0.1, Region::Box { lo: vec![0.0], hi: vec![1.0] }, None)
        .unwrap()
}

fn builtin(kind: u8, p: f64) -> NFunction {
    match kind {
        0 => NFunction::power(p),
        1 => NFunction::power_normalized(p),
        _ => NFunction::power_log(p),
    }
    .unwrap()
}

fn tabulated() -> NFunction {
    NFunction::tabulated(&[(0.0, 0.0), (1.0, 1.0), (2.0, 3.0), (4.0, 8.0)]).unwrap()
}

fn omega_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, n)
}

fn function(gd: &GridDomain, omega: &[f64]) -> GridFunction {
    let mut it = omega.iter();
    let values = (0..gd.len()).map(|i| if gd.in_omega(i) { *it.next().unwrap() } else { 0.0 }).collect();
    GridFunction::from_values(gd, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_bounds(kind in 0u8..3, p in 1.2..4.0f64, t in 1e-4..1e3f64, sigma in 1.0..20.0f64) {
        let nf = builtin(kind, p);
        let (p0, p1) = (nf.p_lower(), nf.p_upper());
        let a = nf.value(t);
        let scaled = nf.value(sigma * t);
        prop_assert!(sigma.powf(p0) * a <= scaled * (1.0 + 1e-9));
        prop_assert!(scaled <= sigma.powf(p1) * a * (1.0 + 1e-9));
        let tau = 1.0 / sigma;
        prop_assert!(a <= tau.powf(p0) * nf.value(t / tau) * (1.0 + 1e-9));
        prop_assert!(a * (1.0 + 1e-9) >= tau.powf(p1) * nf.value(t / tau));
    }

    #[test]
    fn midpoint_convexity(kind in 0u8..4, p in 1.2..4.0f64, t1 in 0.0..50.0f64, t2 in 0.0..50.0f64) {
        let nf = if kind == 3 { tabulated() } else { builtin(kind, p) };
        let mid = nf.value(0.5 * (t1 + t2));
        prop_assert!(mid <= 0.5 * (nf.value(t1) + nf.value(t2)) * (1.0 + 1e-12) + 1e-300);
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        prop_assert!(nf.density(lo) <= nf.density(hi));
    }

    #[test]
    fn young_residual_nonnegative(kind in 0u8..3, p in 1.3..3.5f64, s in 0.0..20.0f64, t in 0.0..20.0f64) {
        let nf = builtin(kind, p);
        let a = nf.value(t);
        let c = nf.conjugate_eval(s).unwrap();
        let r = nf.young_residual(s, t).unwrap();
        prop_assert!(r >= -nf.quad_tol() * (1.0 + a + c));
    }

    #[test]
    fn legendre_recovers_a(kind in 0u8..3, p in 1.3..3.5f64, t in 1e-2..20.0f64) {
        // A(t) = sup_s (st − Ā(s)), attained at s = a(t)
        let nf = builtin(kind, p);
        let s = nf.density(t);
        let back = s * t - nf.conjugate_eval(s).unwrap();
        prop_assert!((back - nf.value(t)).abs() <= 1e-8 * nf.value(t).max(1e-12));
        let conj = nf.conjugate();
        for f in [0.9, 1.1] {
            prop_assert!(f * s * t - conj.value(f * s) <= back * (1.0 + 1e-10));
        }
    }

    #[test]
    fn luxemburg_triangle_and_normalization(kind in 0u8..3, p in 1.3..3.5f64,
                                            u in omega_values(9), v in omega_values(9)) {
        let gd = line();
        let nf = builtin(kind, p);
        let (u, v) = (function(&gd, &u), function(&gd, &v));
        let nu = luxemburg_norm(&nf, &gd, &u);
        let nv = luxemburg_norm(&nf, &gd, &v);
        prop_assert!(luxemburg_norm(&nf, &gd, &u.axpy(1.0, &v)) <= nu + nv + 1e-9);
        if !u.is_zero() {
            prop_assert!((modular(&nf, &gd, &u.scaled(1.0 / nu)) - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn monotonicity(kind in 0u8..3, p in 1.3..3.5f64, u in omega_values(9), shrink in prop::collection::vec(0.0..1.0f64, 9)) {
        let gd = line();
        let nf = builtin(kind, p);
        let big = function(&gd, &u);
        let small_vals: Vec<f64> = u.iter().zip(&shrink).map(|(a, b)| a * b).collect();
        let small = function(&gd, &small_vals);
        prop_assert!(modular(&nf, &gd, &small) <= modular(&nf, &gd, &big) * (1.0 + 1e-12));
        prop_assert!(luxemburg_norm(&nf, &gd, &small) <= luxemburg_norm(&nf, &gd, &big) * (1.0 + 1e-10));
    }

    #[test]
    fn seminorm_absolute_homogeneity(p in 1.3..3.5f64, c in -5.0..5.0f64, u in omega_values(9)) {
        prop_assume!(c.abs() > 1e-3);
        let gd = line();
        let kt = KernelTable::build(&gd, 0.5).unwrap();
        let nf = builtin(2, p);
        let u = function(&gd, &u);
        let a = gagliardo_seminorm(&nf, &kt, &u);
        let b = gagliardo_seminorm(&nf, &kt, &u.scaled(c));
        prop_assert!((b - c.abs() * a).abs() <= 1e-9 * b.max(1e-300));
    }

    #[test]
    fn operator_is_odd(kind in 0u8..3, p in 1.3..3.5f64, u in omega_values(9)) {
        let gd = line();
        let kt = KernelTable::build(&gd, 0.3).unwrap();
        let nf = builtin(kind, p);
        let ctx = OperatorContext::new(&nf, &gd, &kt).unwrap();
        let u = function(&gd, &u);
        let plus = apply(&ctx, &u);
        let minus = apply(&ctx, &u.scaled(-1.0));
        for (a, b) in plus.values().iter().zip(minus.values()) {
            prop_assert_eq!(*a, -*b);
        }
    }
}

#[test]
fn index_constants_for_power_log() {
    let nf = NFunction::power_log(2.0).unwrap();
    let k = nf.delta2_constant();
    assert!(k > 4.0 && k <= 8.0);
    let c = nf.conjugate_ratio_sup().unwrap();
    assert!(c.is_finite() && c >= 1.0);
}
