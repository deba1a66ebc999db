use caputo_core::solver::{solve_picard_from, sup_norm, weighted_norm};
use caputo_core::*;
use statrs::function::gamma::gamma_lr;

fn order(a: f64) -> FractionalOrder {
    FractionalOrder::new(a).unwrap()
}

fn converged() -> PeceConfig {
    PeceConfig {
        corrector: Corrector::converged(),
        quadrature: Quadrature::ProductTrapezoidal,
    }
}

#[test]
fn near_unit_order_approaches_exponential() {
    let grid = UniformGrid::with_horizon(1.0 / 256.0, 1.0).unwrap();
    let f = GridFunction::constant(grid, &[1.0]).unwrap();
    let k = Kernel::caputo(order(0.999));
    let t = solve_pece(&VectorField::linear(1, 1.0), k, &f, grid, &PeceConfig::default()).unwrap();
    let e = std::f64::consts::E;
    assert!((t.last()[0] - e).abs() / e < 0.02);
}

#[test]
fn picard_reproduces_weight_function() {
    // g(x) = γx, f ≡ 1 gives E_α(γ t^α).
    let gamma = 1.5;
    let grid = UniformGrid::with_horizon(1.0 / 128.0, 1.0).unwrap();
    let f = GridFunction::constant(grid, &[1.0]).unwrap();
    let k = Kernel::caputo(order(0.6));
    let cfg = PicardConfig {
        quadrature: Quadrature::Corrected,
        ..Default::default()
    };
    let t = solve_picard(&VectorField::linear(1, gamma), k, &f, grid, &cfg).unwrap();
    let w = WeightParams::new(gamma, order(0.6)).unwrap();
    for j in (0..=grid.steps()).step_by(16) {
        let want = w.weight(grid.time(j)).unwrap();
        assert!((t.value(j)[0] - want).abs() < 2e-4 * want, "node {j}");
    }
}

#[test]
fn picard_and_pece_agree_on_decay() {
    let grid = UniformGrid::with_horizon(1.0 / 128.0, 1.0).unwrap();
    let f = GridFunction::constant(grid, &[1.0]).unwrap();
    let k = Kernel::caputo(order(0.5));
    let field = VectorField::linear(1, -1.0);
    let p = solve_picard(&field, k, &f, grid, &PicardConfig::default()).unwrap();
    let q = solve_pece(&field, k, &f, grid, &converged()).unwrap();
    assert!(sup_dist_on(&p.states, &q.states, 1.0).unwrap() < 1e-8);
    assert!((p.last()[0] - 0.427_583_576_155_807).abs() < 2e-3);
}

#[test]
fn picard_limit_does_not_depend_on_start() {
    let grid = UniformGrid::with_horizon(1.0 / 64.0, 2.0).unwrap();
    let f = GridFunction::from_fn(grid, 1, |t, o| o[0] = 0.3 + 0.2 * t.sin()).unwrap();
    let zero = GridFunction::constant(grid, &[0.0]).unwrap();
    let k = Kernel::caputo(order(0.4));
    let field = VectorField::logistic(1, -0.5, 1.5).unwrap();
    let cfg = PicardConfig::default();
    let a = solve_picard(&field, k, &f, grid, &cfg).unwrap();
    let b = solve_picard_from(&field, k, &f, &zero, grid, &cfg).unwrap();
    assert!(sup_dist_on(&a.states, &b.states, 2.0).unwrap() <= 2.0 * cfg.tolerance);
}

#[test]
fn weighted_residual_is_small() {
    let grid = UniformGrid::with_horizon(1.0 / 64.0, 1.0).unwrap();
    let f = GridFunction::constant(grid, &[2.0]).unwrap();
    let k = Kernel::caputo(order(0.5));
    let field = VectorField::linear(1, -2.0);
    let t = solve_picard(&field, k, &f, grid, &PicardConfig::default()).unwrap();
    assert!(t.residual <= 1e-10);
    // ‖x‖_γ ≤ ‖x‖_∞ since the weight is at least one.
    let wn = weighted_norm(&t.states, 4.0, k).unwrap();
    assert!(wn <= sup_norm(&t.states) + 1e-15);
}

#[test]
fn every_solver_starts_at_input() {
    let grid = UniformGrid::with_horizon(0.05, 1.0).unwrap();
    let f = GridFunction::from_fn(grid, 2, |t, o| {
        o[0] = 0.7 + t;
        o[1] = -0.2;
    })
    .unwrap();
    let k = Kernel::caputo(order(0.5));
    let field = VectorField::linear_forced(2, 1.0, 3.0);
    let choices = [
        SolverChoice::Picard(PicardConfig::default()),
        SolverChoice::Pece(PeceConfig::default()),
        SolverChoice::Pece(converged()),
        SolverChoice::Pece(PeceConfig {
            corrector: Corrector::Single,
            quadrature: Quadrature::Corrected,
        }),
    ];
    for c in choices {
        let t = c.solve(&field, k, &f, grid).unwrap();
        assert_eq!(t.value(0), f.node(0));
        assert_eq!(t.states.steps(), grid.steps());
    }
}

#[test]
fn tempered_kernel_against_incomplete_gamma() {
    // g ≡ 1: x(t) = x₀ + P(α, βt)/β^α. The exponential is frozen per panel,
    // so the error is O(h^{1+α}) and must shrink accordingly.
    let (a, beta) = (0.6, 2.0);
    let k = Kernel::new(order(a), beta).unwrap();
    let one = VectorField::constant(vec![1.0]).unwrap();
    let mut errs = Vec::new();
    for n in [64.0, 128.0, 256.0] {
        let grid = UniformGrid::with_horizon(1.0 / n, 2.0).unwrap();
        let f = GridFunction::constant(grid, &[0.5]).unwrap();
        let t = solve_pece(&one, k, &f, grid, &PeceConfig::default()).unwrap();
        let mut worst = 0.0f64;
        for j in 1..=grid.steps() {
            let want = 0.5 + gamma_lr(a, beta * grid.time(j)) / beta.powf(a);
            worst = worst.max((t.value(j)[0] - want).abs());
        }
        errs.push(worst);
    }
    assert!(errs[1] < 1e-3);
    for w in errs.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!(rate > 1.4, "{errs:?}");
    }
    // corrections are not defined for the tempered kernel
    let grid = UniformGrid::with_horizon(0.1, 1.0).unwrap();
    let f = GridFunction::constant(grid, &[0.5]).unwrap();
    let bad = PeceConfig {
        corrector: Corrector::Single,
        quadrature: Quadrature::Corrected,
    };
    assert!(solve_pece(&VectorField::linear(1, 1.0), k, &f, grid, &bad).is_err());
}

#[test]
fn continuity_examples() {
    let grid = UniformGrid::with_horizon(1.0 / 64.0, 1.0).unwrap();
    let k = Kernel::caputo(order(0.5));
    let field = VectorField::linear(1, -1.0);
    let f = GridFunction::constant(grid, &[1.0]).unwrap();
    let h = GridFunction::constant(grid, &[1.1]).unwrap();
    let s = SolverChoice::default();
    let same = verify_continuity(&field, k, &f, &f, grid, &s, 1e-6).unwrap();
    assert_eq!(same.defect, 0.0);
    assert!(same.pass);
    let r = verify_continuity(&field, k, &f, &h, grid, &s, 1e-6).unwrap();
    assert!(r.pass);
    assert!(r.defect <= 0.501);
    assert!((r.detail("bound").unwrap() - 0.500_898_008).abs() < 1e-8);

    // A bump confined to the last tenth of the interval.
    let bumped = GridFunction::from_fn(grid, 1, |t, o| {
        o[0] = 1.0 + if t > 0.9 { 0.1 * (t - 0.9) / 0.1 } else { 0.0 }
    })
    .unwrap();
    let r = verify_continuity(&field, k, &f, &bumped, grid, &s, 1e-6).unwrap();
    assert!(r.defect < r.detail("bound").unwrap());
}

#[test]
fn gronwall_bound_is_attained_in_the_linear_growth_case() {
    // g(x) = x with a constant input gap c gives |x_f - x_h| = c·E_α(t^α),
    // so the bound is sharp at t = T and the discrete solutions stay below it.
    let grid = UniformGrid::with_horizon(1.0 / 128.0, 1.0).unwrap();
    let k = Kernel::caputo(order(0.5));
    let field = VectorField::linear(1, 1.0);
    let f = GridFunction::constant(grid, &[1.0]).unwrap();
    let h = GridFunction::constant(grid, &[1.1]).unwrap();
    let r = verify_continuity(&field, k, &f, &h, grid, &SolverChoice::default(), 0.0).unwrap();
    let bound = r.detail("bound").unwrap();
    assert!(r.pass);
    assert!(r.defect > 0.98 * bound);
}
