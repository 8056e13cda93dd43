//! Quadrature building blocks: Gauss-Legendre rules, composite oscillatory
//! integration and the periodic trapezoid rule.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Nodes are found by Newton iteration on the Legendre polynomial starting
/// from the Chebyshev angle estimate; accurate to a few ulps for the orders
/// used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_pair(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// Legendre P_n and its derivative at x via the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A fixed Gauss-Legendre panel rule reused across composite integrations.
#[derive(Debug, Clone)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PanelRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        PanelRule { nodes, weights }
    }

    /// Integrate f over [a, b] with a single panel.
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, a: f64, b: f64, mut f: F) -> Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }

    pub fn integrate_real<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }
}

/// Composite Gauss-Legendre with a total node budget of at least `n_total`,
/// split into panels of `panel_size` nodes. The budget is what oscillation
/// counting prescribes; panels keep the per-node cost flat.
pub fn composite_complex<F>(a: f64, b: f64, n_total: usize, rule: &PanelRule, mut f: F) -> Complex64
where
    F: FnMut(f64) -> Complex64,
{
    let panels = n_total.div_ceil(rule.nodes.len()).max(1);
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..panels {
        let pa = a + j as f64 * h;
        acc += rule.integrate(pa, pa + h, &mut f);
    }
    acc
}

/// Oscillation-resolving quadrature of  int_a^b e^{i t p(x)} q(x) dx  with at
/// least `nodes_per_period` nodes per period of the phase sweep t*(p(b)-p(a)),
/// refined by doubling until two successive levels agree to `tol`.
///
/// Used as the independent oracle against stationary-phase estimates.
pub fn oscillatory_integral<P, Q>(
    a: f64,
    b: f64,
    t: f64,
    p: P,
    q: Q,
    nodes_per_period: f64,
    tol: f64,
) -> Result<Complex64>
where
    P: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
{
    let sweep = (t * (p(b) - p(a))).abs() / (2.0 * std::f64::consts::PI);
    let mut n = ((nodes_per_period * sweep).ceil() as usize).max(64);
    let rule = PanelRule::new(24);
    let f = |x: f64| Complex64::from_polar(1.0, t * p(x)) * q(x);
    let mut prev = composite_complex(a, b, n, &rule, f);
    for _ in 0..6 {
        n *= 2;
        let cur = composite_complex(a, b, n, &rule, f);
        if (cur - prev).norm() < tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Convergence(format!(
        "oscillatory integral did not stabilize below {tol:.1e} (t = {t})"
    )))
}

/// Periodic trapezoid rule for a smooth 2*pi-periodic integrand, doubled until
/// two levels agree to `tol`. Converges geometrically for analytic integrands.
pub fn periodic_trapezoid<F>(mut f: F, m0: usize, tol: f64, max_doublings: usize) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    let eval = |f: &mut F, m: usize| -> Complex64 {
        let h = 2.0 * std::f64::consts::PI / m as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..m {
            acc += f(j as f64 * h);
        }
        acc * h
    };
    let mut m = m0.max(8);
    let mut prev = eval(&mut f, m);
    for _ in 0..max_doublings {
        m *= 2;
        let cur = eval(&mut f, m);
        if (cur - prev).norm() <= tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Convergence(format!(
        "periodic trapezoid rule did not reach {tol:.1e} with {m} points"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // n-point rule is exact up to degree 2n-1.
        let (x, w) = gauss_legendre(6);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_abs_diff_eq!(int, 2.0 / 11.0, epsilon = 1e-14);
        let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(7)).sum();
        assert_abs_diff_eq!(odd, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [1, 2, 5, 24, 97] {
            let (_, w) = gauss_legendre(n);
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn composite_handles_oscillation() {
        // int_0^pi e^{i 40 x} dx = (e^{i 40 pi} - 1) / (40 i)
        let rule = PanelRule::new(24);
        let got = composite_complex(0.0, std::f64::consts::PI, 1600, &rule, |x| {
            Complex64::from_polar(1.0, 40.0 * x)
        });
        let expect = (Complex64::from_polar(1.0, 40.0 * std::f64::consts::PI)
            - Complex64::new(1.0, 0.0))
            / Complex64::new(0.0, 40.0);
        assert!((got - expect).norm() < 1e-13);
    }

    #[test]
    fn trapezoid_bessel_value() {
        // (1/2pi) int e^{i tau cos x} dx = J_0(tau), tau = 2.
        let got = periodic_trapezoid(|x| Complex64::from_polar(1.0, 2.0 * x.cos()), 16, 1e-13, 10)
            .unwrap()
            / (2.0 * std::f64::consts::PI);
        assert_abs_diff_eq!(got.re, 0.223890779141235, epsilon = 1e-12);
        assert!(got.im.abs() < 1e-13);
    }
}
