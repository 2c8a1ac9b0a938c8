//! End-to-end acceptance run. Prints one line per criterion and exits with
//! a failure status if any criterion fails or exceeds its time budget.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bohrlab::dirichlet::{
    bohr_cahen_abscissa, bohr_lift, bohr_push, default_hp_quadrature, hp_norm, vertical_average_norm, AbscissaKind,
    CoefficientRule, DirichletPoly,
};
use bohrlab::inequalities::{
    check_main_proposition, check_projection_suite, check_rotation_suite, check_sum_shift_lemma, check_sum_shift_suite,
    check_weighted_monomial_bound, joint_quadrature, random_poly, select_k0, weighted_analysis, Constants, TrialConfig,
    DEFAULT_SAFETY_FACTOR,
};
use bohrlab::multiindex::{factorize, index_of, MultiIndex, PrimeTable};
use bohrlab::polys::{polarize, PolarizationMethod, VectorPoly};
use bohrlab::rng;
use bohrlab::spaces::{SpaceDescriptor, Vector};
use bohrlab::torus::{fourier_coefficient, GridSpec, Quadrature};
use bohrlab::{Result, C64};
use rand::seq::SliceRandom;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn hilbert(dim: usize) -> SpaceDescriptor {
    SpaceDescriptor::lq(2.0, dim).unwrap()
}

/// Primes below `limit` by trial division.
fn primes_below(limit: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for n in 2..limit {
        if out.iter().take_while(|&&p| p * p <= n).all(|&p| n % p != 0) {
            out.push(n);
        }
    }
    out
}

/// Smallest `k` with `p_k^{ε/q'} > e·c·(Σ_{p<10⁶} p^{-(1+ε)} + p_J^{-ε}/ε)`.
fn k0_oracle(primes: &[u64], q: f64, eps: f64, c: f64) -> usize {
    let sum: f64 = primes.iter().rev().map(|&p| (p as f64).powf(-(1.0 + eps))).sum();
    let tail = (*primes.last().unwrap() as f64).powf(-eps) / eps;
    let threshold = std::f64::consts::E * c * (sum + tail);
    let exponent = eps * (1.0 - 1.0 / q);
    primes.iter().position(|&p| (p as f64).powf(exponent) > threshold).unwrap() + 1
}

fn bohr_roundtrip(table: &PrimeTable) -> Result<Outcome> {
    let mut mismatches = 0u64;
    for n in 1..=1_000_000u64 {
        if index_of(&factorize(n, table)?, table)? != n {
            mismatches += 1;
        }
    }
    let mut r = rng::stream(1, 0);
    let mut bad_series = 0;
    for _ in 0..1000 {
        let size = r.gen_range(1..=16);
        let support: Vec<u64> = (0..size).map(|_| r.gen_range(1..=1_000_000)).collect();
        let dim = r.gen_range(1..=3);
        let d = DirichletPoly::random(&mut r, hilbert(dim), &support)?;
        if bohr_push(&bohr_lift(&d, table)?, table)? != d {
            bad_series += 1;
        }
    }
    Ok(outcome(
        mismatches == 0 && bad_series == 0,
        format!("{mismatches} integer mismatches in 1..=10^6, {bad_series}/1000 series mismatches"),
    ))
}

fn spectral_quadrature() -> Result<Outcome> {
    let mut r = rng::stream(2, 0);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..1000 {
        let vars = r.gen_range(1..=4);
        let dim = r.gen_range(1..=3);
        let terms = r.gen_range(1..=8);
        let support: Vec<MultiIndex> = (0..terms)
            .map(|_| MultiIndex::from_dense(&(0..vars).map(|_| r.gen_range(0..=5)).collect::<Vec<_>>()))
            .collect();
        let p = VectorPoly::random_on(&mut r, hilbert(dim), vars, &support)?;
        let spec = GridSpec::new(vars, p.max_axis_degree() as usize + 1)?;
        for (alpha, c) in p.coeffs() {
            let dense: Vec<i64> = alpha.to_dense(vars).into_iter().map(i64::from).collect();
            let got = fourier_coefficient(|z| p.evaluate(z).unwrap().0, dim, &dense, spec)?;
            worst = worst.max(Vector(got).max_abs_diff(c));
            checked += 1;
        }
    }
    Ok(outcome(worst <= 1e-12, format!("{checked} coefficients, worst error {worst:.2e}")))
}

/// Integers up to 2000 whose prime factors are at most 7.
fn smooth_pool() -> Vec<u64> {
    (1..=2000u64)
        .filter(|&n| {
            let mut m = n;
            for p in [2, 3, 5, 7] {
                while m % p == 0 {
                    m /= p;
                }
            }
            m == 1
        })
        .collect()
}

fn parseval(table: &PrimeTable) -> Result<Outcome> {
    let pool = smooth_pool();
    let mut r = rng::stream(3, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let size = r.gen_range(1..=8);
        let support: Vec<u64> = pool.choose_multiple(&mut r, size).copied().collect();
        let d = DirichletPoly::random(&mut r, SpaceDescriptor::scalar(), &support)?;
        let expected = d.coeffs().values().map(|a| a.0[0].norm_sqr()).sum::<f64>().sqrt();
        let got = hp_norm(&d, 2.0, &default_hp_quadrature(&d, 2.0, table)?, table)?;
        worst = worst.max((got - expected).abs());
    }
    Ok(outcome(worst <= 1e-10, format!("worst |H_2 norm - coefficient norm| {worst:.2e}")))
}

fn ergodic(table: &PrimeTable) -> Result<Outcome> {
    let mut r = rng::stream(4, 0);
    let widths = [1e2, 1e3, 1e4];
    let mut errors = [0.0; 3];
    for _ in 0..50 {
        let size = r.gen_range(1..=8);
        let pool: Vec<u64> = (1..=30).collect();
        let support: Vec<u64> = pool.choose_multiple(&mut r, size).copied().collect();
        let d = DirichletPoly::random(&mut r, SpaceDescriptor::scalar(), &support)?;
        let exact = hp_norm(&d, 2.0, &default_hp_quadrature(&d, 2.0, table)?, table)?;
        for (e, &t) in errors.iter_mut().zip(&widths) {
            // 40 nodes per unit length resolve every frequency log n ≤ log 30
            let v = vertical_average_norm(&d, 2.0, t, (80.0 * t) as usize)?;
            *e += (v - exact).abs() / 50.0;
        }
    }
    let gain = errors[0] / errors[2];
    Ok(outcome(
        gain >= 5.0,
        format!(
            "mean error {:.2e} / {:.2e} / {:.2e} at T = 1e2 / 1e3 / 1e4, reduction {gain:.1}x",
            errors[0], errors[1], errors[2]
        ),
    ))
}

fn polarization() -> Result<Outcome> {
    let mut r = rng::stream(5, 0);
    let (mut methods, mut diagonal) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let vars = r.gen_range(1..=4);
        let m = r.gen_range(1..=4);
        let dim = r.gen_range(1..=3);
        let p = VectorPoly::random_homogeneous(&mut r, hilbert(dim), vars, m)?;
        let fast = polarize(&p, PolarizationMethod::Coefficient)?;
        let slow = polarize(&p, PolarizationMethod::SignSum)?;
        for alpha in p.coeffs().keys() {
            let t = alpha.to_tuple();
            methods = methods.max(fast.entry(&t).max_abs_diff(&slow.entry(&t)));
        }
        let z: Vec<C64> = (0..vars).map(|_| rng::unit_disc(&mut r)).collect();
        diagonal = diagonal.max(fast.evaluate(&vec![z.clone(); m as usize])?.max_abs_diff(&p.evaluate(&z)?));
    }
    Ok(outcome(
        methods <= 1e-10 && diagonal <= 1e-10,
        format!("method disagreement {methods:.2e}, diagonal error {diagonal:.2e}"),
    ))
}

fn projection() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut pass = true;
    for p in [1.0, 2.0] {
        let cfg = TrialConfig::new(hilbert(2), 2.0, 2, 3).with_trials(1000).with_seed(6).with_records();
        let rep = check_projection_suite(&cfg, p)?;
        let lost =
            rep.records.iter().filter(|t| t.label.as_deref() == Some("coefficients") && t.raw_ratio != 0.0).count();
        let worst =
            rep.records.iter().filter(|t| t.label.as_deref() == Some("norm")).map(|t| t.raw_ratio).fold(0.0, f64::max);
        pass &= lost == 0 && worst <= 1.0 + 1e-3;
        parts.push(format!("p={p}: worst norm ratio {worst:.6}, {lost} coefficient mismatches"));
    }
    Ok(outcome(pass, parts.join("; ")))
}

fn lemmas() -> Result<Outcome> {
    let space = hilbert(2);
    let rotation = check_rotation_suite(&TrialConfig::new(space, 2.0, 1, 1).with_trials(1000).with_seed(7))?;
    let shift = check_sum_shift_suite(&TrialConfig::new(space, 2.0, 3, 2).with_trials(1000).with_seed(7))?;
    let z = VectorPoly::scalar(1, &[(&[1], C64::new(1.0, 0.0))])?;
    let mut closed = true;
    let mut shown = Vec::new();
    for quad in [Quadrature::default(), joint_quadrature(2, 7)] {
        let rec = check_sum_shift_lemma(&z, 2, &quad)?.worst_trial.expect("one trial");
        closed &=
            (rec.lhs - 4.0 / std::f64::consts::PI).abs() <= 0.01 && (rec.rhs - 2.0).abs() <= 0.01 && rec.ratio <= 1.0;
        shown.push(format!("{:.4}", rec.lhs));
    }
    Ok(outcome(
        rotation.pass && shift.pass && closed,
        format!(
            "rotation worst {:.4}, sum-shift worst {:.4}, closed form LHS {} vs 4/pi = {:.4}, RHS 2",
            rotation.worst_ratio,
            shift.worst_ratio,
            shown.join(" / "),
            4.0 / std::f64::consts::PI
        ),
    ))
}

fn main_proposition() -> Result<Outcome> {
    let mut pass = true;
    let mut worst = (0.0f64, String::new());
    for q in [2.0, 3.0] {
        let space = SpaceDescriptor::lq(q, 2)?;
        for m in 1..=3u32 {
            for vars in 2..=4usize {
                let seed = 100 * q as u64 + 10 * m as u64 + vars as u64;
                let constants = Constants::estimate(&space, q, vars, 2000, seed, DEFAULT_SAFETY_FACTOR)?;
                let cfg = TrialConfig::new(space, q, m, vars).with_trials(1000).with_seed(seed);
                let rep = check_main_proposition(&cfg, &constants)?;
                pass &= rep.pass && rep.worst_ratio <= 1.0;
                if rep.worst_ratio >= worst.0 {
                    worst = (rep.worst_ratio, format!("q={q} m={m} N={vars}"));
                }
            }
        }
    }
    Ok(outcome(pass, format!("18 cells, worst ratio {:.4} at {}", worst.0, worst.1)))
}

fn weighted(table: &PrimeTable) -> Result<Outcome> {
    let primes = primes_below(1_000_000);
    let unit = select_k0(2.0, 1.0, 1.0, 1.0, table, table.len())?;
    let unit_oracle = k0_oracle(&primes, 2.0, 1.0, 1.0);

    let space = hilbert(2);
    let constants = Constants::estimate(&space, 2.0, 3, 2000, 9, DEFAULT_SAFETY_FACTOR)?;
    let empirical = select_k0(2.0, 1.0, constants.cotype, constants.kahane, table, table.len())?;
    let empirical_oracle = k0_oracle(&primes, 2.0, 1.0, constants.cotype * constants.kahane);

    let quad = Quadrature::default();
    let mut r = rng::stream(9, 0);
    let (mut rho, mut failures, mut worst) = (0.0f64, 0, 0.0f64);
    for _ in 0..100 {
        let (vars, degree) = (r.gen_range(1..=3), r.gen_range(0..=3));
        let f = random_poly(&mut r, space, vars, degree)?;
        let analysis = weighted_analysis(&f, 2.0, &constants, 1.0, table, &quad)?;
        rho = rho.max(analysis.rho);
        let rep = check_weighted_monomial_bound(&f, 2.0, &constants, 1.0, table, &quad)?;
        worst = worst.max(rep.worst_ratio);
        failures += usize::from(!rep.pass);
    }
    Ok(outcome(
        unit.k0 == unit_oracle && empirical.k0 == empirical_oracle && rho <= 1.0 && failures == 0,
        format!(
            "k0 = {} (oracle {}) at C=K=1, k0 = {} (oracle {}) at C={:.4} K={:.4}; rho {:.4}; {failures}/100 failures, worst ratio {:.4}",
            unit.k0, unit_oracle, empirical.k0, empirical_oracle, constants.cotype, constants.kahane, rho, worst
        ),
    ))
}

fn abscissa() -> Result<Outcome> {
    let ones = bohr_cahen_abscissa(&CoefficientRule::Constant { value: 1.0 }, AbscissaKind::SigmaA, 1_000_000)?;
    let harmonic = bohr_cahen_abscissa(&CoefficientRule::PowerDecay { theta: 1.0 }, AbscissaKind::SigmaA, 1_000_000)?;
    Ok(outcome(
        (ones.value - 1.0).abs() <= 0.05 && harmonic.value.abs() <= 0.1,
        format!("a_n = 1: {:.4}; a_n = 1/n: {:.4}", ones.value, harmonic.value),
    ))
}

fn determinism() -> Result<Outcome> {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_bohrlab"))
            .args(["--threads", threads, "verify", "all", "--seed", "7"])
            .env_remove("BOHRLAB_CACHE")
            .output()
            .expect("binary runs")
    };
    let outputs = [run("1"), run("1"), run("4")];
    let same = outputs.iter().all(|o| o.stdout == outputs[0].stdout && o.status.code() == outputs[0].status.code());
    let lines = String::from_utf8_lossy(&outputs[0].stdout).lines().count();
    Ok(outcome(
        same && outputs[0].status.success() && lines == 8,
        format!("{lines} reports, {} bytes, identical across 1/1/4 threads: {same}", outputs[0].stdout.len()),
    ))
}

fn main() -> ExitCode {
    let table = PrimeTable::default();
    type Criterion<'a> = (&'a str, u64, Box<dyn Fn() -> Result<Outcome> + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("bohr roundtrip", 10, Box::new(|| bohr_roundtrip(&table))),
        ("exact spectral quadrature", 30, Box::new(spectral_quadrature)),
        ("parseval", 10, Box::new(|| parseval(&table))),
        ("ergodic consistency", 60, Box::new(|| ergodic(&table))),
        ("polarization", 60, Box::new(polarization)),
        ("projection", 60, Box::new(projection)),
        ("lemma suite", 120, Box::new(lemmas)),
        ("main proposition", 600, Box::new(main_proposition)),
        ("weighted pipeline", 300, Box::new(|| weighted(&table))),
        ("abscissa estimators", 30, Box::new(abscissa)),
        ("determinism", 600, Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= Duration::from_secs(*limit), o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {:<26} {}  {:.2}s (limit {limit}s)  {detail}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
