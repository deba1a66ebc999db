//! Adaptive Gauss-Legendre integration for smooth integrands on finite
//! intervals. Used internally by the Mittag-Leffler evaluation on the
//! negative half-line.

use std::sync::OnceLock;

const ORDER: usize = 20;
const MAX_DEPTH: u32 = 48;

struct Rule {
    nodes: [f64; ORDER],
    weights: [f64; ORDER],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        Rule { nodes, weights }
    })
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let r = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    r.nodes
        .iter()
        .zip(r.weights.iter())
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Integrates `f` over each interval between consecutive `breaks`, bisecting
/// until the panel estimate agrees with its two halves to within
/// `rel_tol` of the running total. Returns `None` if some panel cannot be
/// resolved within the depth limit.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, breaks: &[f64], rel_tol: f64) -> Option<f64> {
    let coarse: f64 = breaks.windows(2).map(|w| fixed(&f, w[0], w[1])).sum();
    let scale = coarse.abs().max(f64::MIN_POSITIVE);
    let mut total = 0.0;
    let mut comp = 0.0;
    let mut stack: Vec<(f64, f64, f64, u32)> = breaks
        .windows(2)
        .rev()
        .map(|w| (w[0], w[1], fixed(&f, w[0], w[1]), 0))
        .collect();
    while let Some((a, b, whole, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let left = fixed(&f, a, m);
        let right = fixed(&f, m, b);
        let err = (left + right - whole).abs();
        let width_share = ((b - a) / (breaks[breaks.len() - 1] - breaks[0])).max(1e-3);
        if err <= rel_tol * scale * width_share || err <= 1e-300 {
            // Neumaier summation of accepted panels.
            let v = left + right;
            let t = total + v;
            if total.abs() >= v.abs() {
                comp += (total - t) + v;
            } else {
                comp += (v - t) + total;
            }
            total = t;
        } else if depth >= MAX_DEPTH {
            return None;
        } else {
            stack.push((m, b, right, depth + 1));
            stack.push((a, m, left, depth + 1));
        }
    }
    Some(total + comp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x.powi(7) - 3.0 * x * x, &[0.0, 2.0], 1e-14).unwrap();
        assert!((v - (32.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_two() {
        let s: f64 = rule().weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn peaked_integrand() {
        // Lorentzian of width 1e-3 centred inside the interval.
        let eps = 1e-3;
        let v = integrate(|x| eps / ((x - 0.3).powi(2) + eps * eps), &[0.0, 0.3, 1.0], 1e-13).unwrap();
        let exact = (0.7f64 / eps).atan() + (0.3f64 / eps).atan();
        assert!((v - exact).abs() < 1e-11 * exact);
    }
}
