//! Batch subcommands: `nfun`, `norm`, `verify`, `solve`, `lambda1`.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 configuration error,
//! 3 data error, 4 non-convergence, 5 regime violation.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::domain::{delta_integral_bound, delta_integral_check, GridDomain, GridFunction};
use crate::energy::{eval_i, grad_i, lambda1_estimate, minimize, Nonlinearity};
use crate::error::{Error, Result};
use crate::nfunction::{Kind, NFunction};
use crate::operator::{pairing, OperatorContext};
use crate::orlicz::{
    gagliardo_modular, gagliardo_seminorm, holder_check, poincare_check, sandwich_check, NormReport,
    HOLDER_TOL, POINCARE_TOL, SANDWICH_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NONCONVERGED: i32 = 4;
pub const EXIT_REGIME: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "fracorlicz", version, about = "Fractional Orlicz-Sobolev toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `run.out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed; overrides `solver.rng_seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Force fixed-order reductions (bit-identical results for any thread count).
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Size of the worker pool.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report A, a, the conjugate, indices and the Δ₂ / conjugate-ratio constants.
    Nfun,
    /// Norms and modulars of a grid function read from CSV.
    Norm {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the inequality certification suite.
    Verify,
    /// Minimize the energy and write the solution.
    Solve,
    /// Estimate λ₁ (an upper bound) and write the minimizing function.
    Lambda1,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Data { .. } | Error::Io(_) => EXIT_DATA,
        Error::Regime(_) => EXIT_REGIME,
        Error::Accuracy { .. } => EXIT_VERIFY,
        Error::Config(_) | Error::Domain(_) | Error::InvalidNFunction(_) | Error::Precondition(_) => {
            EXIT_CONFIG
        }
    }
}

/// Parses arguments already split by clap and runs the subcommand; returns the exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.solver.rng_seed = seed;
    }
    if cli.deterministic {
        cfg.solver.deterministic_reduction = true;
    }
    if let Some(out) = &cli.out {
        cfg.run.out = Some(out.clone());
    }
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.run.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn write_function(path: &Path, gd: &GridDomain, u: &GridFunction) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    u.write_csv(gd, &mut w)?;
    w.flush()?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Nfun => {
            let report = nfun_report(&cfg.nfunction()?)?;
            print!("{report}");
            if cfg.run.out.is_some() {
                write_text(&out_dir(&cfg)?.join("nfun.txt"), &report)?;
            }
            Ok(EXIT_OK)
        }
        Command::Norm { input } => {
            let nf = cfg.nfunction()?;
            let gd = cfg.grid()?;
            let kt = cfg.kernel(&gd)?;
            let file = File::open(input)
                .map_err(|e| Error::Data { row: 0, msg: format!("cannot open {}: {e}", input.display()) })?;
            let u = GridFunction::read_csv(&gd, file)?;
            let report = NormReport::compute(&nf, &gd, &kt, &u);
            print!("{}", report.to_key_value());
            if cfg.run.out.is_some() {
                let csv = format!("{}\n{}\n", NormReport::CSV_HEADER, report.to_csv_row());
                write_text(&out_dir(&cfg)?.join("norm.csv"), &csv)?;
            }
            Ok(EXIT_OK)
        }
        Command::Verify => {
            let checks = verify(&cfg)?;
            let report = render_checks(&checks);
            print!("{report}");
            if cfg.run.out.is_some() {
                write_text(&out_dir(&cfg)?.join("verify.txt"), &report)?;
            }
            let failed = checks.iter().any(|c| c.verdict == Verdict::Fail);
            Ok(if failed { EXIT_VERIFY } else { EXIT_OK })
        }
        Command::Solve => {
            let nf = cfg.nfunction()?;
            let gd = cfg.grid()?;
            let kt = cfg.kernel(&gd)?;
            let nl = cfg.nonlinearity(&gd)?;
            let ctx = OperatorContext::new(&nf, &gd, &kt)?;
            let sol = minimize(&ctx, &nl, &cfg.solver)?;
            let dir = out_dir(&cfg)?;
            write_function(&dir.join("solution.csv"), &gd, &sol.u)?;
            let mut meta = String::new();
            let _ = writeln!(meta, "energy={:.16e}", sol.energy);
            let _ = writeln!(meta, "grad_norm={:.16e}", sol.grad_norm);
            let _ = writeln!(meta, "iters={}", sol.iters);
            let _ = writeln!(meta, "converged={}", sol.converged);
            let _ = writeln!(meta, "nontrivial={}", sol.nontrivial);
            let seed = sol.seed_t.map_or("none".to_string(), |t| format!("{t:.16e}"));
            let _ = writeln!(meta, "seed_t={seed}");
            let mut echo = cfg.clone();
            echo.run.out = None;
            let _ = write!(meta, "\n# config\n{}", echo.to_toml());
            write_text(&dir.join("solution_meta.txt"), &meta)?;
            print!("{meta}");
            Ok(if sol.converged { EXIT_OK } else { EXIT_NONCONVERGED })
        }
        Command::Lambda1 => {
            let nf = cfg.nfunction()?;
            let gd = cfg.grid()?;
            let kt = cfg.kernel(&gd)?;
            let ctx = OperatorContext::new(&nf, &gd, &kt)?;
            let est = lambda1_estimate(&ctx, &cfg.solver)?;
            let dir = out_dir(&cfg)?;
            write_function(&dir.join("lambda1_minimizer.csv"), &gd, &est.minimizer)?;
            let text = format!("lambda1_upper_bound={:.16e}\nstart={}\n", est.value, est.start);
            write_text(&dir.join("lambda1.txt"), &text)?;
            print!("{text}");
            Ok(EXIT_OK)
        }
    }
}

/// Sample table and constants for one N-function.
pub fn nfun_report(nf: &NFunction) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "nfunction={}", nf.name());
    let _ = writeln!(out, "{:>12} {:>24} {:>24} {:>24} {:>24}", "t", "A", "a", "conj_a", "conj_A");
    for t in [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let (a_val, d_val) = nf.eval(t)?;
        let _ = writeln!(
            out,
            "{t:>12.4e} {a_val:>24.16e} {d_val:>24.16e} {:>24.16e} {:>24.16e}",
            nf.conjugate_density(t),
            nf.conjugate_eval(t)?
        );
    }
    let idx = nf.simonenko_indices();
    let _ = writeln!(out, "p_lower={}", idx.p_lower);
    let _ = writeln!(out, "p_upper={}", idx.p_upper);
    let _ = writeln!(out, "indices_estimated={}", idx.estimated);
    let _ = writeln!(out, "delta2_constant={:.16e}", nf.delta2_constant());
    let _ = writeln!(out, "conjugate_ratio_sup={:.16e}", nf.conjugate_ratio_sup()?);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

/// One line of the certification report. `slack ≥ 0` means the inequality holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub verdict: Verdict,
}

impl Check {
    fn new(name: &'static str, lhs: f64, rhs: f64, slack: f64) -> Self {
        let verdict = if slack >= 0.0 { Verdict::Pass } else { Verdict::Fail };
        Self { name, lhs, rhs, slack, verdict }
    }

    fn skip(name: &'static str) -> Self {
        Self { name, lhs: f64::NAN, rhs: f64::NAN, slack: f64::NAN, verdict: Verdict::Skip }
    }
}

pub fn render_checks(checks: &[Check]) -> String {
    let mut out = format!("{:<20} {:>24} {:>24} {:>12} verdict\n", "name", "lhs", "rhs", "slack");
    for c in checks {
        let verdict = match c.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        };
        let _ = writeln!(
            out,
            "{:<20} {:>24.16e} {:>24.16e} {:>12.4e} {verdict}",
            c.name, c.lhs, c.rhs, c.slack
        );
    }
    out
}

const VERIFY_FUNCTIONS: usize = 20;
const YOUNG_POINTS: usize = 40;
const YOUNG_TOL: f64 = 1e-9;
const YOUNG_EQ_TOL: f64 = 1e-8;
const GRADIENT_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-6;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

/// `min over (s,t) of (A(t) + Ā(s) − st)/(1 + A(t) + Ā(s))`, and the worst
/// relative equality gap at `s = a(t)`.
fn young_checks(nf: &NFunction) -> Result<[Check; 2]> {
    let grid = log_grid(1e-3, 1e2, YOUNG_POINTS);
    let conj: Vec<f64> = grid.iter().map(|&s| nf.conjugate_eval(s)).collect::<Result<_>>()?;
    let mut worst = f64::INFINITY;
    for (&s, &cs) in grid.iter().zip(&conj) {
        for &t in &grid {
            let at = nf.value(t);
            worst = worst.min((at + cs - s * t) / (1.0 + at + cs));
        }
    }
    let mut gap = 0.0f64;
    for &t in &grid {
        let s = nf.density(t);
        let at = nf.value(t);
        let cs = nf.conjugate_eval(s)?;
        gap = gap.max((at + cs - s * t).abs() / (1.0 + at + cs));
    }
    Ok([
        Check::new("young", worst, -YOUNG_TOL, worst + YOUNG_TOL),
        Check::new("young_equality", gap, YOUNG_EQ_TOL, YOUNG_EQ_TOL - gap),
    ])
}

/// Runs every inequality check on the configured problem.
pub fn verify(cfg: &RunConfig) -> Result<Vec<Check>> {
    let nf = cfg.nfunction()?;
    let gd = cfg.grid()?;
    let kt = cfg.kernel(&gd)?;
    let nl = cfg.nonlinearity(&gd)?;
    let ctx = OperatorContext::new(&nf, &gd, &kt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.solver.rng_seed);
    let mut checks = Vec::new();

    checks.extend(young_checks(&nf)?);

    let mut worst = (0.0, 0.0, f64::INFINITY);
    for _ in 0..VERIFY_FUNCTIONS {
        let u = GridFunction::random(&gd, &mut rng);
        let v = GridFunction::random(&gd, &mut rng).scaled(3.0);
        let (lhs, rhs) = holder_check(&nf, &gd, &u, &v);
        let slack = (rhs * (1.0 + HOLDER_TOL) - lhs) / rhs;
        if slack < worst.2 {
            worst = (lhs, rhs, slack);
        }
    }
    checks.push(Check::new("holder", worst.0, worst.1, worst.2));

    let mut worst = (0.0, 0.0, f64::INFINITY);
    for k in 0..VERIFY_FUNCTIONS {
        let u = GridFunction::random(&gd, &mut rng);
        let sigma = [0.25, 0.5, 2.0, 4.0][k % 4];
        let u = u.scaled(sigma / gagliardo_seminorm(&nf, &kt, &u));
        let rep = sandwich_check(&nf, &kt, &u)?;
        let slack = rep.slack() + SANDWICH_TOL;
        if slack < worst.2 {
            let bound = if rep.phi < rep.lower { rep.lower } else { rep.upper };
            worst = (rep.phi, bound, slack);
        }
    }
    checks.push(Check::new("sandwich", worst.0, worst.1, worst.2));

    match &cfg.domain.ball {
        Some(ball) => {
            let mut worst = (0.0, 0.0, f64::INFINITY);
            for _ in 0..VERIFY_FUNCTIONS {
                let u = GridFunction::random(&gd, &mut rng);
                let rep = poincare_check(&nf, &gd, &kt, &u, ball)?;
                let slack = (rep.rhs * (1.0 + POINCARE_TOL) - rep.lhs) / rep.rhs;
                if slack < worst.2 {
                    worst = (rep.lhs, rep.rhs, slack);
                }
            }
            checks.push(Check::new("poincare", worst.0, worst.1, worst.2));
        }
        None => checks.push(Check::skip("poincare")),
    }

    let ratio = nf.conjugate_ratio_sup()?;
    checks.push(Check::new(
        "conjugate_ratio",
        ratio,
        f64::INFINITY,
        if ratio.is_finite() { 1.0 } else { -1.0 },
    ));

    let k = nf.delta2_constant();
    let bound = 2f64.powf(nf.p_upper());
    checks.push(Check::new("delta2", k, bound, (bound * (1.0 + 1e-9) - k) / bound));

    let s = kt.s();
    let value = delta_integral_check(&nf, s, gd.dim())?;
    let bound = delta_integral_bound(&nf, s, gd.dim());
    checks.push(Check::new("delta_integral", value, bound, (bound - value) / bound));
    if let Kind::Power(p) = nf.kind() {
        let exact = crate::domain::sphere_surface(gd.dim()) * (1.0 / (s * p) + 1.0 / ((1.0 - s) * p));
        let err = (value - exact).abs() / exact;
        checks.push(Check::new("delta_integral_exact", value, exact, 5e-3 - err));
    }

    let mut worst = (0.0, 0.0, f64::INFINITY);
    for k in 0..VERIFY_FUNCTIONS {
        let u = GridFunction::random(&gd, &mut rng).scaled([0.1, 1.0, 10.0][k % 3]);
        let phi = gagliardo_modular(&nf, &kt, &u);
        let p = pairing(&ctx, &u, &u);
        let lo = nf.p_lower() * phi;
        let hi = nf.p_upper() * phi;
        let slack = ((p - lo) / lo).min((hi - p) / hi) + 1e-9;
        if slack < worst.2 {
            worst = (p, if p < lo { lo } else { hi }, slack);
        }
    }
    checks.push(Check::new("pairing_bracket", worst.0, worst.1, worst.2));

    checks.push(gradient_check(&ctx, &nl, &mut rng));
    Ok(checks)
}

fn gradient_check(ctx: &OperatorContext<'_>, nl: &Nonlinearity, rng: &mut ChaCha8Rng) -> Check {
    let mut worst = (0.0, 0.0, f64::INFINITY);
    for _ in 0..5 {
        let u = GridFunction::random(ctx.gd, rng);
        let v = GridFunction::random(ctx.gd, rng);
        let eps = FD_STEP * (1.0 + u.sup_norm());
        let fd = (eval_i(ctx, nl, &u.axpy(eps, &v)) - eval_i(ctx, nl, &u.axpy(-eps, &v))) / (2.0 * eps);
        let an = grad_i(ctx, nl, &u).dot(&v);
        let slack = GRADIENT_TOL - (fd - an).abs() / an.abs().max(1e-300);
        if slack < worst.2 {
            worst = (fd, an, slack);
        }
    }
    Check::new("gradient", worst.0, worst.1, worst.2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: &str) -> RunConfig {
        RunConfig::parse(&format!(
            r#"
[nfunction]
kind = "{kind}"
p = 2.0

[domain]
dim = 1
box_lo = [-0.5]
box_hi = [1.5]
h = 0.05
omega = {{ shape = "box", lo = [0.0], hi = [1.0] }}
ball = {{ shape = "ball", center = [1.3], radius = 0.15 }}

[fractional]
s = 0.5
"#
        ))
        .unwrap()
    }

    #[test]
    fn verify_passes_for_builtins() {
        for kind in ["power", "power_normalized", "power_log"] {
            let checks = verify(&config(kind)).unwrap();
            for c in &checks {
                assert_ne!(c.verdict, Verdict::Fail, "{kind}: {c:?}");
            }
        }
    }

    #[test]
    fn wrong_lower_index_fails_sandwich() {
        let mut cfg = config("power_log");
        cfg.nfunction.p_lower = Some(3.0);
        let checks = verify(&cfg).unwrap();
        let sandwich = checks.iter().find(|c| c.name == "sandwich").unwrap();
        assert_eq!(sandwich.verdict, Verdict::Fail);
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Data { row: 2, msg: "x".into() }), EXIT_DATA);
        assert_eq!(exit_code(&Error::Regime("x".into())), EXIT_REGIME);
    }

    #[test]
    fn nfun_report_lists_indices() {
        let report = nfun_report(&NFunction::power_log(2.0).unwrap()).unwrap();
        assert!(report.contains("p_lower=2\n") && report.contains("p_upper=3\n"));
    }
}
