//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

use steklov_core::experiments::{
    compare_pullback, count_increases, run_sweep, write_report_csv, PullbackConfig, SweepConfig, SweepResult,
};
use steklov_core::fem::{rayleigh_gradient, rayleigh_quotient, solve_p2, EnergyFunctional, SolverConfig};
use steklov_core::geometry::{build_base_domain, generate_mesh, ChartFn, DomainKind, OscillationSpec};
use steklov_core::measures::DiscreteBoundaryMeasure;
use steklov_core::transforms::{homogenized_weight, weakstar_test};
use steklov_core::windows::{optimize_window, OptimizerConfig, Window};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn weight_identity() -> Outcome {
    let osc = OscillationSpec::zero(1.0).unwrap();
    let worst = (0..20)
        .map(|i| -2.0 + 4.0 * i as f64 / 19.0)
        .map(|s| (homogenized_weight(s, &osc, 16) - 1.0).abs())
        .fold(0.0, f64::max);
    check(worst <= 1e-12, format!("max |m - 1| = {worst:.3e}"))
}

/// Round-off allowance when checking that a sequence does not increase.
const ROUNDOFF: f64 = 1e-12;

type TestFn = fn(f64) -> f64;

fn weak_star() -> Outcome {
    let osc = OscillationSpec::sin_squared(1.0).unwrap();
    // curved, with equal end slopes, so no test function has a vanishing limit
    let phi = ChartFn::polynomial(vec![1.0, 1.0, -2.0, 4.0 / 3.0]);
    let ks = [4, 8, 16, 32];
    let tests: [(&str, TestFn); 3] =
        [("1", |_| 1.0), ("cos", |x| (2.0 * std::f64::consts::PI * x).cos()), ("x", |x| x)];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, g) in tests {
        let rows = weakstar_test(&g, &ks, &osc, &phi).unwrap();
        let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let last = rows.last().unwrap();
        let rel = last.error / last.limit.abs();
        pass &= count_increases(&errs, ROUNDOFF) == 0 && rel <= 0.02;
        detail.push(format!("g={name}: k=32 rel {rel:.2e}"));
    }
    // integer cells on a flat chart carry the cell average exactly
    let exact = weakstar_test(&|_| 1.0, &ks, &osc, &ChartFn::flat(1.0)).unwrap();
    let worst = exact.iter().map(|r| r.error).fold(0.0, f64::max);
    pass &= worst <= 1e-10;
    detail.push(format!("g=1 flat chart: max error {worst:.2e}"));
    check(pass, detail.join(", "))
}

/// `λ = u′(1)/u(1)` for the radial solution of `u″ + u′/r = u`, `u(0) = 1`,
/// by RK4 started from the series `1 + r²/4`.
fn radial_shooting() -> f64 {
    let f = |r: f64, y: [f64; 2]| [y[1], y[0] - y[1] / r];
    let r0 = 1e-4;
    let mut y = [1.0 + r0 * r0 / 4.0, r0 / 2.0];
    let n = 20_000;
    let dr = (1.0 - r0) / n as f64;
    let mut r = r0;
    for _ in 0..n {
        let k1 = f(r, y);
        let k2 = f(r + dr / 2.0, [y[0] + dr / 2.0 * k1[0], y[1] + dr / 2.0 * k1[1]]);
        let k3 = f(r + dr / 2.0, [y[0] + dr / 2.0 * k2[0], y[1] + dr / 2.0 * k2[1]]);
        let k4 = f(r + dr, [y[0] + dr * k3[0], y[1] + dr * k3[1]]);
        for i in 0..2 {
            y[i] += dr / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += dr;
    }
    y[1] / y[0]
}

fn disk_oracle() -> Outcome {
    let d = build_base_domain(DomainKind::UnitDisk, ChartFn::flat(1.0), 0.02).unwrap();
    let mesh = generate_mesh(&d, 0.02).unwrap();
    let energy = EnergyFunctional::new(&mesh, 2.0).unwrap();
    let s = DiscreteBoundaryMeasure::surface(&mesh);
    let pair = solve_p2(&energy, &Window::empty(s.weights.len()), &s, &SolverConfig::default()).unwrap();
    let oracle = radial_shooting();
    let rel = (pair.lambda - oracle).abs() / oracle;
    check(rel <= 5e-3, format!("lambda {:.6} vs oracle {oracle:.6}, rel {rel:.2e}", pair.lambda))
}

fn gradient_check() -> Outcome {
    let d = build_base_domain(DomainKind::SquareTopChart, ChartFn::flat(1.0), 0.1).unwrap();
    let mesh = generate_mesh(&d, 0.1).unwrap();
    let energy = EnergyFunctional::new(&mesh, 3.0).unwrap();
    let s = DiscreteBoundaryMeasure::surface(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let u: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.random_range(0.5..1.5)).collect();
        let g = rayleigh_gradient(&energy, &s, &u).unwrap();
        let step = 1e-5;
        let fd: Vec<f64> = (0..u.len())
            .map(|i| {
                let (mut up, mut dn) = (u.clone(), u.clone());
                up[i] += step;
                dn[i] -= step;
                (rayleigh_quotient(&energy, &s, &up).unwrap() - rayleigh_quotient(&energy, &s, &dn).unwrap())
                    / (2.0 * step)
            })
            .collect();
        let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = fd.iter().map(|b| b * b).sum::<f64>().sqrt();
        worst = worst.max(num / den);
    }
    check(worst <= 1e-5, format!("max relative error {worst:.2e}"))
}

fn pullback_consistency() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (a, tol) in [(2.0, 0.01), (1.0, 0.02)] {
        let c = compare_pullback(&PullbackConfig { a, k: 16, p: 2.0, alpha: 0.3, ..Default::default() }).unwrap();
        pass &= c.gap <= tol;
        detail.push(format!("a={a}: gap {:.2e}", c.gap));
    }
    check(pass, detail.join(", "))
}

fn sweep(a: f64, ks: Vec<usize>) -> SweepResult {
    run_sweep(&SweepConfig { a, ks, p: 2.0, alpha: 0.3, ..Default::default() }).unwrap()
}

fn csv(r: &SweepResult) -> Vec<u8> {
    let mut buf = Vec::new();
    write_report_csv(r, &mut buf).unwrap();
    buf
}

fn subcritical(r: &SweepResult) -> Outcome {
    let mut pass = r.rows.iter().all(|row| row.ok());
    let mut below = true;
    let mut scaled = true;
    for row in &r.rows {
        match &row.bound {
            Some(b) => {
                below &= row.lambda <= b.bound;
                scaled &= b.bound / row.eps.sqrt() <= b.c_hat;
            }
            None => {
                below = false;
                scaled = false;
            }
        }
    }
    let slope = r.fit.as_ref().map_or(f64::NAN, |f| f.slope);
    pass &= below && scaled && (0.35..=0.65).contains(&slope);
    check(pass, format!("lambda <= bound: {below}, bound/eps^0.5 <= C_hat: {scaled}, slope {slope:.3}"))
}

fn gaps(r: &SweepResult) -> Vec<f64> {
    r.rows.iter().map(|row| row.rel_gap).collect()
}

fn supercritical(r: &SweepResult) -> Outcome {
    let g = gaps(r);
    let last = r.row(32).map_or(f64::NAN, |row| row.rel_gap);
    let ups = count_increases(&g, ROUNDOFF);
    check(last <= 0.05 && ups <= 1, format!("gaps {}, increases {ups}", fmt(&g)))
}

fn critical(r: &SweepResult, plain: &SweepResult) -> Outcome {
    let g = gaps(r);
    let last = r.row(32).map_or(f64::NAN, |row| row.rel_gap);
    let ups = count_increases(&g, ROUNDOFF);
    let star = r.reference.as_ref().unwrap().lambda;
    let lambda = plain.reference.as_ref().unwrap().lambda;
    check(
        last <= 0.10 && ups == 0 && star < lambda,
        format!("gaps {}, increases {ups}, lambda* {star:.6} < lambda {lambda:.6}", fmt(&g)),
    )
}

fn window_convergence(r: &SweepResult) -> Outcome {
    let dd: Vec<f64> = r.rows.iter().map(|row| row.delta_measure).collect();
    let ups = count_increases(&dd, ROUNDOFF);
    let last = r.row(32).map_or(f64::NAN, |row| row.weakstar_err);
    check(ups == 0 && last <= 0.05, format!("window differences {}, k=32 weak error {last:.2e}", fmt(&dd)))
}

fn optimizer_sanity() -> Outcome {
    let d = build_base_domain(DomainKind::SquareTopChart, ChartFn::flat(1.0), 0.1).unwrap();
    let mesh = generate_mesh(&d, 0.1).unwrap();
    let energy = EnergyFunctional::new(&mesh, 2.0).unwrap();
    let s = DiscreteBoundaryMeasure::surface(&mesh);
    let cfg = OptimizerConfig::default();
    let opt = optimize_window(&energy, 0.3, &s, &cfg).unwrap();
    let target = 0.3 * s.total();
    let best: Vec<f64> = opt.trace.steps.iter().map(|st| st.best_lambda).collect();
    let monotone = count_increases(&best, ROUNDOFF) == 0;
    let exact = opt.trace.steps.iter().all(|st| (st.measure - target).abs() <= 1e-12);
    let n = s.weights.len();
    let oracle = (0..n)
        .map(|j| {
            let w = Window::contiguous_arc(&s.weights, 0.3, j).unwrap();
            solve_p2(&energy, &w, &s, &cfg.solver).unwrap().lambda
        })
        .fold(f64::INFINITY, f64::min);
    let lambda = opt.eigenpair.lambda;
    check(
        monotone && exact && lambda <= oracle,
        format!(
            "monotone {monotone}, measure exact {exact}, lambda {lambda:.6} vs arc oracle {oracle:.6} over {n} arcs"
        ),
    )
}

fn fmt(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", "))
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome, failures: &mut usize) {
    let t = Instant::now();
    let out = f();
    let took = t.elapsed();
    let pass = out.pass && took <= limit;
    if !pass {
        *failures += 1;
    }
    println!(
        "criterion {id:>2} {name:<24} {} ({:.1}s) {}",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        out.detail
    );
}

fn main() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let mut failures = 0;
    run(1, "weight identity", Duration::from_secs(1), weight_identity, &mut failures);
    run(2, "weak-star convergence", Duration::from_secs(10), weak_star, &mut failures);
    run(3, "disk oracle", Duration::from_secs(30), disk_oracle, &mut failures);
    run(4, "gradient check", Duration::from_secs(10), gradient_check, &mut failures);
    run(5, "pullback consistency", min(5), pullback_consistency, &mut failures);

    let mut sub = None;
    run(
        6,
        "subcritical regime",
        min(20),
        || {
            let r = sweep(0.5, vec![4, 8, 16, 32, 64]);
            let out = subcritical(&r);
            sub = Some(r);
            out
        },
        &mut failures,
    );

    let mut plain = None;
    run(
        7,
        "supercritical regime",
        min(15),
        || {
            let r = sweep(2.0, vec![4, 8, 16, 32]);
            let out = supercritical(&r);
            plain = Some(r);
            out
        },
        &mut failures,
    );

    let mut crit = None;
    run(
        8,
        "critical regime",
        min(20),
        || {
            let r = sweep(1.0, vec![4, 8, 16, 32]);
            let out = critical(&r, plain.as_ref().unwrap());
            crit = Some(r);
            out
        },
        &mut failures,
    );
    // shares the sweep above
    run(9, "window convergence", min(20), || window_convergence(crit.as_ref().unwrap()), &mut failures);
    run(10, "optimizer sanity", min(10), optimizer_sanity, &mut failures);
    run(
        11,
        "determinism",
        min(20),
        || {
            let first = csv(sub.as_ref().unwrap());
            let again = csv(&sweep(0.5, vec![4, 8, 16, 32, 64]));
            check(first == again, format!("{} bytes, identical {}", first.len(), first == again))
        },
        &mut failures,
    );

    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
