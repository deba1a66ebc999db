//! Acceptance gate. Each test prints one `ACn PASS|FAIL` line and then
//! asserts, so `cargo test --test acceptance -- --nocapture --test-threads=1`
//! gives a readable summary.

#![allow(clippy::excessive_precision, clippy::type_complexity)]

use caputo_core::solver::{Corrector, PeceConfig, PicardConfig, Quadrature, SolverChoice};
use caputo_core::*;
use libm::erfc;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma as sgamma;
use std::time::Instant;

fn verdict(id: &str, pass: bool, detail: String) {
    println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id} failed: {detail}");
}

fn order(a: f64) -> FractionalOrder {
    FractionalOrder::new(a).unwrap()
}

/// Direct power series with statrs Γ; adequate for |z| ≲ 3.
fn ml_series(alpha: f64, z: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..400 {
        let term = z.powi(k) / sgamma(alpha * k as f64 + 1.0);
        s += term;
        if k > 10 && term.abs() < 1e-18 {
            break;
        }
    }
    s
}

/// Least-squares slope of log(err) against log(h).
fn ls_order(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Consecutive defects under refinement must not increase, except when both
/// sit at the roundoff floor.
const ROUNDOFF_FLOOR: f64 = 1e-12;

fn non_increasing(d: &[f64]) -> bool {
    d.windows(2).all(|w| w[1] <= w[0] || w[1] <= ROUNDOFF_FLOOR)
}

#[test]
fn ac1_mittag_leffler_oracle() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let t = -50.0 + 100.0 * i as f64 / 999.0;
        let e = mittag_leffler(1.0, t).unwrap();
        worst = worst.max(((e - t.exp()) / t.exp()).abs());
    }
    let v = mittag_leffler(0.5, 1.0).unwrap();
    // E_{1/2}(z) = e^{z²} erfc(-z), and the frozen high-precision value.
    let closed = std::f64::consts::E * erfc(-1.0);
    let series = ml_series(0.5, 1.0);
    let frozen = 5.008_980_080_762_283_5;
    let err = (v - closed).abs().max((v - series).abs()).max((v - frozen).abs());
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        "AC1",
        worst <= 1e-10 && err <= 1e-10 && elapsed < 1.0,
        format!("max rel err E_1 vs exp {worst:.2e}; |E_0.5(1) - oracle| {err:.2e}; {elapsed:.3}s"),
    );
}

#[test]
fn ac2_linear_solution_oracle() {
    let start = Instant::now();
    let ns = [64usize, 128, 256];
    let hs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let cfg = PeceConfig {
        corrector: Corrector::Single,
        quadrature: Quadrature::Corrected,
    };
    let mut ok = true;
    let mut lines = Vec::new();
    for &a in &[0.3, 0.5, 0.8] {
        for &lam in &[1.0, -1.0] {
            let field = VectorField::linear(1, lam);
            let kernel = Kernel::caputo(order(a));
            let mut errs = Vec::new();
            for &h in &hs {
                let grid = UniformGrid::with_horizon(h, 2.0).unwrap();
                let f = GridFunction::constant(grid, &[1.0]).unwrap();
                let t = solve_pece(&field, kernel, &f, grid, &cfg).unwrap();
                let e = (0..=grid.steps())
                    .map(|j| (t.value(j)[0] - ml_series(a, lam * grid.time(j).powf(a))).abs())
                    .fold(0.0, f64::max);
                errs.push(e);
            }
            let p = ls_order(&hs, &errs);
            let c = errs
                .iter()
                .zip(&hs)
                .map(|(e, h)| e / h.powf(1.0 + a))
                .fold(0.0, f64::max);
            let good = (p - (1.0 + a)).abs() <= 0.2;
            ok &= good;
            lines.push(format!(
                "α={a} λ={lam:+}: order {p:.3} (target {:.1}), C={c:.3}, err@1/256 {:.2e}{}",
                1.0 + a,
                errs[2],
                if good { "" } else { " <- out of range" }
            ));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    for l in &lines {
        println!("    {l}");
    }
    verdict("AC2", ok && elapsed < 10.0, format!("6 cases, {elapsed:.2}s"));
}

#[test]
fn ac3_contraction_certificate() {
    let h = 1.0 / 128.0;
    let grid = UniformGrid::with_horizon(h, 2.0).unwrap();
    let corpus: Vec<(VectorField, f64)> = vec![
        (VectorField::linear(1, 1.0), 1.0),
        (VectorField::linear(1, -1.0), 1.0),
        (VectorField::logistic(1, -0.5, 1.5).unwrap(), 0.2),
        (VectorField::logistic(1, -0.5, 1.5).unwrap(), 1.3),
    ];
    let mut worst_ratio = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut warnings = 0;
    for &a in &[0.3, 0.5, 0.8] {
        let kernel = Kernel::caputo(order(a));
        for (field, x0) in &corpus {
            let f = GridFunction::constant(grid, &[*x0]).unwrap();
            let cfg = PicardConfig {
                max_iterations: 1000,
                ..Default::default()
            };
            let p = solve_picard(field, kernel, &f, grid, &cfg).unwrap();
            let q = solve_pece(
                field,
                kernel,
                &f,
                grid,
                &PeceConfig {
                    corrector: Corrector::converged(),
                    quadrature: Quadrature::ProductTrapezoidal,
                },
            )
            .unwrap();
            worst_ratio = p.contraction_ratios.iter().copied().fold(worst_ratio, f64::max);
            worst_gap = worst_gap.max(sup_dist_on(&p.states, &q.states, 2.0).unwrap());
            warnings += p.warnings.len();
        }
    }
    verdict(
        "AC3",
        worst_ratio <= 0.55 && worst_gap <= 1e-8 && warnings == 0,
        format!("max ratio {worst_ratio:.4}; Picard vs PECE {worst_gap:.2e}; warnings {warnings}"),
    );
}

fn random_input(rng: &mut ChaCha8Rng, grid: UniformGrid) -> GridFunction {
    let c0 = rng.gen_range(-1.5..1.5);
    let c1 = rng.gen_range(-1.0..1.0);
    let amp = rng.gen_range(0.0..0.5);
    let om = rng.gen_range(0.5..6.0);
    let ph = rng.gen_range(0.0..6.3);
    GridFunction::from_fn(grid, 1, |t, o| o[0] = c0 + c1 * t * t + amp * (om * t + ph).sin()).unwrap()
}

#[test]
fn ac4_gronwall_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_401);
    let grid = UniformGrid::with_horizon(1.0 / 64.0, 2.0).unwrap();
    let fields = [
        VectorField::linear(1, 1.0),
        VectorField::linear(1, -1.0),
        VectorField::logistic(1, -0.5, 1.5).unwrap(),
        VectorField::linear_forced(1, 1.0, 2.0),
    ];
    let solver = SolverChoice::default();
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    let mut runs = 0;
    for field in &fields {
        for _ in 0..50 {
            let a = rng.gen_range(0.2..0.95);
            let kernel = Kernel::caputo(order(a));
            let f = random_input(&mut rng, grid);
            let h = random_input(&mut rng, grid);
            let r = verify_continuity(field, kernel, &f, &h, grid, &solver, 1e-6).unwrap();
            runs += 1;
            if !r.pass {
                violations += 1;
            }
            worst_margin = worst_margin.min(r.tolerance - r.defect);
        }
    }
    verdict(
        "AC4",
        violations == 0,
        format!("{runs} pairs, {violations} violations, smallest margin {worst_margin:.3e}"),
    );
}

fn semigroup_engine(a: f64, h: f64, field: VectorField, solver: Option<SolverChoice>) -> SemigroupEngine {
    let mut d = Discretization::new(Kernel::caputo(order(a)), h)
        .unwrap()
        .with_metric(MetricParams::new(2).unwrap());
    if let Some(s) = solver {
        d = d.with_solver(s).unwrap();
    }
    SemigroupEngine::new(d, field)
}

#[test]
fn ac5_semigroup_law() {
    let start = Instant::now();
    let ns = [64usize, 128, 256];
    let single = SolverChoice::Pece(PeceConfig::default());
    let corpus: Vec<(&str, VectorField, Box<dyn Fn(f64) -> f64>, f64, f64)> = vec![
        ("linear-1", VectorField::linear(1, -1.0), Box::new(|_| 1.0), 0.5, 0.5),
        (
            "linear+1",
            VectorField::linear(1, 1.0),
            Box::new(|t: f64| 1.0 + 0.3 * t.sin()),
            0.5,
            0.25,
        ),
        (
            "logistic",
            VectorField::logistic(1, -0.5, 1.5).unwrap(),
            Box::new(|t: f64| 0.2 + 0.1 * (3.0 * t).cos()),
            0.75,
            0.5,
        ),
    ];
    let mut ok = true;
    for (name, field, input, sigma, tau) in &corpus {
        // The engine's converged corrector is what the criterion applies to.
        // The single-corrector runs are printed for comparison: there the
        // node equations are only solved to O(h^{1+α}), which the defect shows.
        for (label, solver) in [("converged", None), ("single, info", Some(single))] {
            let mut defects = Vec::new();
            let mut trivial = 0.0f64;
            for &n in &ns {
                let h = 1.0 / n as f64;
                let e = semigroup_engine(0.5, h, field.clone(), solver);
                let grid = UniformGrid::with_horizon(h, 3.0).unwrap();
                let f = GridFunction::from_fn(grid, 1, |t, o| o[0] = input(t)).unwrap();
                defects.push(e.semigroup_defect(*sigma, *tau, &f).unwrap().defect);
                trivial = trivial
                    .max(e.semigroup_defect(0.0, *tau, &f).unwrap().defect)
                    .max(e.semigroup_defect(*sigma, 0.0, &f).unwrap().defect);
            }
            let good = non_increasing(&defects) && defects[2] <= 1e-4 && trivial <= 1e-12;
            if solver.is_none() {
                ok &= good;
            }
            println!(
                "    {name} ({label}): defects {:.2e} {:.2e} {:.2e}, rate {:.2}; σ=0/τ=0 {trivial:.1e}{}",
                defects[0],
                defects[1],
                defects[2],
                (defects[1] / defects[2]).log2(),
                if good { "" } else { " <- above criterion" }
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict("AC5", ok && elapsed < 30.0, format!("{elapsed:.2}s"));
}

#[test]
fn ac6_shift_identity() {
    let h = 1.0 / 256.0;
    let grid = UniformGrid::with_horizon(h, 3.0).unwrap();
    let corpus = [
        VectorField::linear(1, 1.0),
        VectorField::linear(1, -1.0),
        VectorField::logistic(1, -0.5, 1.5).unwrap(),
        VectorField::zero(1),
    ];
    let f = GridFunction::from_fn(grid, 1, |t, o| o[0] = 0.4 + 0.2 * (2.0 * t).sin()).unwrap();
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut tol = 0.0;
    for field in corpus {
        let e = semigroup_engine(0.5, h, field, None);
        for tau in [0.0, 0.5, 1.25] {
            let r = e.shift_identity_residual(tau, &f).unwrap();
            ok &= r.pass;
            worst = worst.max(r.defect);
            tol = r.tolerance;
        }
    }
    verdict(
        "AC6",
        ok,
        format!("worst relative residual {worst:.2e} (limit {tol:.0e})"),
    );
}

#[test]
fn ac7_steady_state_invariance() {
    let field = VectorField::logistic(1, -0.5, 1.5).unwrap();
    let e = semigroup_engine(0.5, 1.0 / 64.0, field, None);
    let mut worst = 0.0f64;
    for x in [0.0, 1.0] {
        for tau in [0.25, 1.0, 2.5] {
            worst = worst.max(e.steady_state_residual(&[x], tau).unwrap().defect);
        }
    }
    let half = e.steady_state_residual(&[0.5], 1.0).unwrap();
    let g_norm = half.detail("g_norm").unwrap();
    verdict(
        "AC7",
        worst <= 1e-12 && !half.pass && (g_norm - 0.25).abs() < 1e-15 && half.defect > 0.0,
        format!(
            "x*∈{{0,1}} residual {worst:.1e}; x*=0.5 residual {:.3e}, ‖g‖ = {g_norm}",
            half.defect
        ),
    );
}

/// Tanh-sinh quadrature of `φ(u)` on `[lo, hi]`, with the integrand given
/// the distance `u - lo` directly so the endpoint singularity at `lo` is
/// resolved without cancellation.
fn tanh_sinh<F: Fn(f64) -> f64>(phi: F, lo: f64, hi: f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mut prev = f64::NAN;
    let mut k = 1.0;
    for level in 0..12 {
        let step = 0.5f64.powi(level);
        let mut sum = 0.0;
        let mut j: i64 = -((6.0 / step) as i64);
        while (j as f64) * step <= 6.0 {
            let x = j as f64 * step;
            let s = std::f64::consts::FRAC_PI_2 * x.sinh();
            let c = s.cosh();
            let w = std::f64::consts::FRAC_PI_2 * x.cosh() / (c * c);
            // distance from lo: half·(1 + tanh s) = half·e^s / cosh s
            let d_lo = half * s.exp() / c;
            if d_lo > 0.0 && d_lo < 2.0 * half {
                sum += w * phi(lo + d_lo);
            }
            j += 1;
        }
        let est = sum * step * half;
        if (est - prev).abs() <= 1e-15 * est.abs() {
            return est;
        }
        prev = est;
        k = est;
    }
    k
}

#[test]
fn ac8_kernel_identities() {
    let taus = [0.1, 0.5, 1.0, 2.0, 5.0];
    let thetas = [0.0, 0.1, 0.5, 1.0, 3.0];
    let mut worst = 0.0f64;
    for &a in &[0.3, 0.5, 0.8] {
        for &tau in &taus {
            for &theta in &thetas {
                // ∫_0^τ (τ+θ-s)^{α-1} ds = ∫_θ^{τ+θ} u^{α-1} du, singular at u = 0 when θ = 0.
                let q = if theta == 0.0 {
                    tanh_sinh(|u: f64| u.powf(a - 1.0), 0.0, tau)
                } else {
                    tanh_sinh(|u: f64| u.powf(a - 1.0), theta, tau + theta)
                } / sgamma(a);
                let closed = kernel_mass(order(a), tau, theta);
                worst = worst.max((q - closed).abs());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = 0;
    for _ in 0..10_000 {
        let a = rng.gen_range(0.05..0.99);
        let beta = rng.gen_range(1e-3..10.0);
        let t = rng.gen_range(1e-6..50.0);
        let s = rng.gen_range(0.0..t);
        if s >= t {
            continue;
        }
        let plain = Kernel::caputo(order(a)).eval(t, s).unwrap();
        let temp = Kernel::new(order(a), beta).unwrap().eval(t, s).unwrap();
        if !(temp > 0.0 && temp <= plain) {
            bad += 1;
        }
    }
    verdict(
        "AC8",
        worst <= 1e-10 && bad == 0,
        format!("kernel mass max |err| {worst:.2e} on 3×5×5 grid; tempered domination violations {bad}/10000"),
    );
}

#[test]
fn ac9_cocycle_law() {
    let ns = [64usize, 128, 256];
    let single = SolverChoice::Pece(PeceConfig::default());
    let mut ok = true;
    for (label, solver) in [("converged", None), ("single, info", Some(single))] {
        let mut defects = Vec::new();
        for &n in &ns {
            let h = 1.0 / n as f64;
            let mut d = Discretization::new(Kernel::caputo(order(0.5)), h).unwrap();
            if let Some(s) = solver {
                d = d.with_solver(s).unwrap();
            }
            let skew = SkewProductEngine::new(d);
            let grid = UniformGrid::with_horizon(h, 3.0).unwrap();
            let f = GridFunction::constant(grid, &[1.0]).unwrap();
            let s = SkewState::new(f, TimedField::new(VectorField::linear_forced(1, 1.0, 1.0))).unwrap();
            defects.push(skew.cocycle_defect(0.5, 0.5, &s).unwrap().defect);
        }
        let good = non_increasing(&defects) && defects[2] <= 1e-3;
        if solver.is_none() {
            ok &= good;
        }
        println!(
            "    linear_forced ({label}): defects {:.2e} {:.2e} {:.2e}, rate {:.2}",
            defects[0],
            defects[1],
            defects[2],
            (defects[1] / defects[2]).log2()
        );
    }
    // Autonomous reduction against the semigroup engine on the same data.
    let h = 1.0 / 128.0;
    let grid = UniformGrid::with_horizon(h, 3.0).unwrap();
    let f = GridFunction::from_fn(grid, 1, |t, o| o[0] = 0.3 + 0.1 * t).unwrap();
    let field = VectorField::logistic(1, -0.5, 1.5).unwrap();
    let disc = Discretization::new(Kernel::caputo(order(0.5)), h).unwrap();
    let auto = SemigroupEngine::new(disc.clone(), field.clone());
    let skew = SkewProductEngine::new(disc);
    let s = SkewState::new(f.clone(), TimedField::new(field)).unwrap();
    let a = auto.semigroup_defect(0.5, 1.0, &f).unwrap().defect;
    let b = skew.cocycle_defect(0.5, 1.0, &s).unwrap().defect;
    let ta = auto.apply_t(1.0, &f).unwrap();
    let tb = skew.apply_t_skew(1.0, &s).unwrap();
    let gap = sup_dist_on(&ta, &tb, ta.horizon()).unwrap();
    let reduction = (a - b).abs() <= 1e-15 && gap <= 1e-15;
    verdict(
        "AC9",
        ok && reduction,
        format!("autonomous reduction |Δdefect| {:.1e}, |ΔT| {gap:.1e}", (a - b).abs()),
    );
}

#[test]
fn ac10_metric_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ineq_bad = 0;
    for _ in 0..100_000 {
        let y = 10f64.powf(rng.gen_range(-8.0..4.0)) * rng.gen_range(0.0..1.0);
        let z = 10f64.powf(rng.gen_range(-8.0..4.0)) * rng.gen_range(0.0..1.0);
        let x = rng.gen_range(0.0..=1.0) * (y + z);
        let lhs = x / (1.0 + x);
        let rhs = y / (1.0 + y) + z;
        // four ulps of room for the rounding of the two quotients
        if lhs > rhs * (1.0 + 4.0 * f64::EPSILON) {
            ineq_bad += 1;
        }
    }
    let grid = UniformGrid::with_horizon(0.125, 4.0).unwrap();
    let p = MetricParams::new(4).unwrap();
    let mut axiom_bad = 0;
    for _ in 0..1000 {
        let mk = |rng: &mut ChaCha8Rng| {
            let scale = 10f64.powf(rng.gen_range(-3.0..2.0));
            let vals: Vec<f64> = (0..(grid.steps() + 1) * 2)
                .map(|_| scale * rng.gen_range(-1.0..1.0))
                .collect();
            GridFunction::from_values(grid, 2, vals).unwrap()
        };
        let (f, g, k) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
        let fg = rho(&f, &g, &p).unwrap().value;
        let gf = rho(&g, &f, &p).unwrap().value;
        let fk = rho(&f, &k, &p).unwrap().value;
        let kg = rho(&k, &g, &p).unwrap().value;
        let ff = rho(&f, &f, &p).unwrap().value;
        if fg != gf || fg > fk + kg + 1e-15 || ff != 0.0 || fg > 1.0 || (fg == 0.0) != (f == g) {
            axiom_bad += 1;
        }
        // ρ_n is nondecreasing in n
        let levels: Vec<f64> = (1..=4).map(|n| rho_n(&f, &g, n).unwrap()).collect();
        if levels.windows(2).any(|w| w[1] < w[0]) {
            axiom_bad += 1;
        }
    }
    verdict(
        "AC10",
        ineq_bad == 0 && axiom_bad == 0,
        format!("x/(1+x) inequality violations {ineq_bad}/100000; metric axiom violations {axiom_bad}/1000"),
    );
}
