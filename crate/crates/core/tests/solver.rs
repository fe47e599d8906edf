use fracorlicz::energy::{
    descend, eval_i, lambda1_estimate, minimize, rayleigh_quotient, Form, Nonlinearity, SampledSource,
    SolverConfig,
};
use fracorlicz::operator::{pairing, OperatorContext};
use fracorlicz::orlicz::gagliardo_seminorm;
use fracorlicz::{GridDomain, GridFunction, KernelTable, NFunction, Region};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn line(h: f64) -> GridDomain {
    GridDomain::build(1, &[-0.5], &[1.5], h, Region::Box { lo: vec![0.0], hi: vec![1.0] }, None)
        .unwrap()
}

fn canonical(h: f64) -> (GridDomain, KernelTable, NFunction) {
    let gd = line(h);
    let kt = KernelTable::build(&gd, 0.5).unwrap();
    (gd, kt, NFunction::power_normalized(2.0).unwrap())
}

/// Smallest eigenvalue of the quadratic form `φ(u) = Σ_{i≠j} (u_i−u_j)² h²/(2|x_i−x_j|^{1+2s})`
/// on Ω nodes, divided by the `L²` mass matrix `h·I`.
fn lambda1_eigen(gd: &GridDomain, s: f64) -> f64 {
    let h = gd.h();
    let omega: Vec<usize> = (0..gd.len()).filter(|&i| gd.in_omega(i)).collect();
    let c = |i: usize, j: usize| {
        let d = (gd.node(i)[0] - gd.node(j)[0]).abs();
        h * h / d.powf(1.0 + 2.0 * s)
    };
    let n = omega.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (a, &i) in omega.iter().enumerate() {
        m[(a, a)] = (0..gd.len()).filter(|&j| j != i).map(|j| c(i, j)).sum();
        for (b, &j) in omega.iter().enumerate() {
            if a != b {
                m[(a, b)] = -c(i, j);
            }
        }
    }
    m.symmetric_eigen().eigenvalues.min() / h
}

#[test]
fn lambda1_matches_eigenvalue_oracle() {
    let (gd, kt, nf) = canonical(0.05);
    let ctx = OperatorContext::new(&nf, &gd, &kt).unwrap();
    let est = lambda1_estimate(&ctx, &SolverConfig::default()).unwrap();
    let exact = lambda1_eigen(&gd, 0.5);
    assert!(est.value >= exact * (1.0 - 1e-9));
    assert!((est.value - exact) / exact < 0.02, "{} vs {exact}", est.value);

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let ensemble_min = (0..2000)
        .map(|_| rayleigh_quotient(&ctx, &GridFunction::random(&gd, &mut rng)))
        .fold(f64::INFINITY, f64::min);
    assert!(est.value <= ensemble_min);

    let other = lambda1_estimate(&ctx, &SolverConfig { rng_seed: 99, ..SolverConfig::default() }).unwrap();
    assert!((other.value - est.value).abs() < 0.05 * est.value);
}

#[test]
fn quotient_of_returned_minimizer_is_scale_free() {
    let (gd, kt, nf) = canonical(0.1);
    let ctx = OperatorContext::new(&nf, &gd, &kt).unwrap();
    let est = lambda1_estimate(&ctx, &SolverConfig { lambda1_starts: 3, ..SolverConfig::default() }).unwrap();
    for c in [1e-3, -2.0, 40.0] {
        let q = rayleigh_quotient(&ctx, &est.minimizer.scaled(c));
        assert!((q - est.value).abs() < 1e-9 * est.value);
    }
}

#[test]
fn canonical_solution_is_stationary() {
    let (gd, kt, nf) = canonical(0.01);
    let ctx = OperatorContext::new(&nf, &gd, &kt).unwrap();
    let nl = Nonlinearity::new(Form::PurePower, 1.0, 1.0, 1.5, &gd).unwrap();
    let cfg = SolverConfig::default();
    let sol = minimize(&ctx, &nl, &cfg).unwrap();
    assert!(sol.converged && sol.nontrivial);
    let n_omega = gd.omega_nodes().len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let v = GridFunction::random(&gd, &mut rng);
        let rhs: f64 = gd.omega_nodes().iter().map(|&i| nl.f(i, sol.u.values()[i]) * v.values()[i]).sum::<f64>()
            * gd.cell_volume();
        let residual = (pairing(&ctx, &sol.u, &v) - rhs).abs();
        assert!(residual <= cfg.grad_tol * v.sup_norm() * n_omega);
    }
    // The minimizer of a sublinear problem is positive in Ω.
    assert!(gd.omega_nodes().iter().all(|&i| sol.u.values()[i] > 0.0));
}

#[test]
fn refinement_keeps_the_energy() {
    let nl_energy = |h: f64| {
        let (gd, kt, nf) = canonical(h);
        let ctx = OperatorContext::new(&nf, &gd, &kt).unwrap();
        let nl = Nonlinearity::new(Form::PurePower, 1.0, 1.0, 1.5, &gd).unwrap();
        minimize(&ctx, &nl, &SolverConfig::default()).unwrap().energy
    };
    let coarse = nl_energy(0.02);
    let fine = nl_energy(0.01);
    assert!(fine <= coarse || (fine - coarse).abs() <= 0.05 * coarse.abs(), "{coarse} -> {fine}");
}

#[test]
fn coercivity_surrogate_on_random_functions() {
    let (gd, kt, nf) = canonical(0.02);
    let ctx = OperatorContext::new(&nf, &gd, &kt).unwrap();
    let (theta1, q) = (1.0, 1.5);
    let nl = Nonlinearity::new(Form::PurePower, theta1, 1.0, q, &gd).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let samples: Vec<(GridFunction, f64)> = (0..50)
        .map(|k| {
            let u = GridFunction::random(&gd, &mut rng);
            let u = u.scaled((1.5 + k as f64) / gagliardo_seminorm(&nf, &kt, &u));
            let norm = gagliardo_seminorm(&nf, &kt, &u);
            (u, norm)
        })
        .collect();
    let lq = |u: &GridFunction| {
        gd.omega_nodes().iter().map(|&i| u.values()[i].abs().powf(q)).sum::<f64>() * gd.cell_volume()
    };
    let c = samples.iter().map(|(u, n)| lq(u) / n.powf(q)).fold(0.0, f64::max);
    for (u, norm) in &samples {
        assert!(*norm > 1.0);
        let lower = norm.powf(nf.p_lower()) - theta1 * c * norm.powf(q) - theta1 * gd.omega_measure();
        assert!(eval_i(&ctx, &nl, u) >= lower);
    }
}

#[test]
fn other_sources_converge() {
    let gd = GridDomain::build(
        1,
        &[-0.5],
        &[1.5],
        0.025,
        Region::Box { lo: vec![0.0], hi: vec![1.0] },
        Some(Region::Box { lo: vec![0.2], hi: vec![0.8] }),
    )
    .unwrap();
    let kt = KernelTable::build(&gd, 0.6).unwrap();
    let nf = NFunction::power_log(2.0).unwrap();
    let ctx = OperatorContext::new(&nf, &gd, &kt).unwrap();
    let table: Vec<(f64, f64)> = (0..=160)
        .map(|k| 10f64.powf(-4.0 + 0.05 * k as f64))
        .map(|t| (t, 0.75 * t.sqrt()))
        .collect();
    let sources = [
        Form::ShiftedPower { shift: 0.5 },
        Form::Custom(SampledSource::new(&table).unwrap()),
    ];
    for form in sources {
        let nl = Nonlinearity::new(form, 1.0, 0.5, 1.5, &gd).unwrap();
        let sol = minimize(&ctx, &nl, &SolverConfig::default()).unwrap();
        assert!(sol.converged && sol.nontrivial, "{:?}", sol.grad_norm);
        assert!(sol.history.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn iteration_cap_is_reported() {
    let (gd, kt, nf) = canonical(0.02);
    let ctx = OperatorContext::new(&nf, &gd, &kt).unwrap();
    let nl = Nonlinearity::new(Form::PurePower, 1.0, 1.0, 1.5, &gd).unwrap();
    let cfg = SolverConfig { max_iters: 2, ..SolverConfig::default() };
    let start = gd.omega0_bump().scaled(0.5);
    let sol = descend(&ctx, &nl, &cfg, start);
    assert!(!sol.converged && sol.iters == 2 && sol.grad_norm > cfg.grad_tol);
}
