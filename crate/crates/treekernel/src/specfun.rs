//! Chebyshev polynomials, the spherical function of the (q+1)-regular tree,
//! and a quadrature-based Bessel evaluator used for line validation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;

/// Branching parameter q >= 2 of the (q+1)-regular tree.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct TreeDegree(u32);

impl TreeDegree {
    pub fn new(q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::Config(format!(
                "branching parameter q must be >= 2, got {q}"
            )));
        }
        Ok(TreeDegree(q))
    }

    #[inline]
    pub fn q(self) -> f64 {
        self.0 as f64
    }

    #[inline]
    pub fn q_int(self) -> u32 {
        self.0
    }

    /// Spectral radius 2*sqrt(q) of the adjacency matrix.
    #[inline]
    pub fn spectral_radius(self) -> f64 {
        2.0 * self.q().sqrt()
    }
}

/// (P_n(x), Q_n(x)): Chebyshev polynomials of the first and second kind,
/// P_n(cos t) = cos(n t), Q_n(cos t) = sin((n+1)t)/sin t.
///
/// The three-term recurrence is used throughout so that |x| > 1 is handled
/// uniformly.
pub fn chebyshev_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    let (mut q0, mut q1) = (1.0, 2.0 * x);
    if n == 0 {
        return (1.0, 1.0);
    }
    for _ in 1..n {
        (p0, p1) = (p1, 2.0 * x * p1 - p0);
        (q0, q1) = (q1, 2.0 * x * q1 - q0);
    }
    (p1, q1)
}

/// Q_0..Q_n as a table (second-kind values at x).
fn chebyshev_q_table(n: usize, x: f64) -> Vec<f64> {
    let mut q = Vec::with_capacity(n + 1);
    q.push(1.0);
    if n >= 1 {
        q.push(2.0 * x);
    }
    for k in 2..=n {
        q.push(2.0 * x * q[k - 1] - q[k - 2]);
    }
    q
}

/// Spherical function of the (q+1)-regular tree at distance n:
/// Phi_n(lambda) = q^(-n/2) ( 2 P_n(u) + (q-1) Q_n(u) ) / (q+1),
/// u = lambda / (2 sqrt(q)).
pub fn spherical(n: usize, lambda: f64, deg: TreeDegree) -> f64 {
    let q = deg.q();
    let u = lambda / deg.spectral_radius();
    let (p, qq) = chebyshev_pair(n, u);
    q.powf(-(n as f64) / 2.0) * (2.0 * p + (q - 1.0) * qq) / (q + 1.0)
}

/// First or second lambda-derivative of the spherical function.
///
/// Uses P_n' = n Q_{n-1} together with the expansion of Q_n as a sum of P_k,
/// which gives the running recurrences Q_n' = Q_{n-2}' + 2n Q_{n-1} and
/// Q_n'' = Q_{n-2}'' + 2n Q_{n-1}'. Everything stays polynomial, so the band
/// endpoints need no special casing.
pub fn spherical_deriv(n: usize, lambda: f64, deg: TreeDegree, order: u8) -> f64 {
    assert!(order == 1 || order == 2, "order must be 1 or 2");
    let q = deg.q();
    let u = lambda / deg.spectral_radius();
    if n == 0 {
        return 0.0;
    }
    let qt = chebyshev_q_table(n, u);
    // Q_k' for k = 0..n
    let mut qp = vec![0.0; n + 1];
    if n >= 1 {
        qp[1] = 2.0;
    }
    for k in 2..=n {
        qp[k] = qp[k - 2] + 2.0 * k as f64 * qt[k - 1];
    }
    let pp = n as f64 * qt[n - 1]; // P_n'
    let chain = 1.0 / deg.spectral_radius();
    let prefac = q.powf(-(n as f64) / 2.0) / (q + 1.0);
    match order {
        1 => prefac * (2.0 * pp + (q - 1.0) * qp[n]) * chain,
        _ => {
            let mut qpp = vec![0.0; n + 1];
            for k in 2..=n {
                qpp[k] = qpp[k - 2] + 2.0 * k as f64 * qp[k - 1];
            }
            let ppp = n as f64 * qp[n - 1]; // P_n''
            prefac * (2.0 * ppp + (q - 1.0) * qpp[n]) * chain * chain
        }
    }
}

/// Closed form of Phi_n at the spectral edge 2*sqrt(q).
pub fn spherical_at_edge(n: usize, deg: TreeDegree) -> f64 {
    let q = deg.q();
    q.powf(-(n as f64) / 2.0) * (2.0 + (n as f64 + 1.0) * (q - 1.0)) / (q + 1.0)
}

/// Bessel function J_k(tau) by periodic-trapezoid quadrature of
/// (1/2pi) int_0^{2pi} e^{i k x} e^{i tau cos x} dx = i^k J_k(tau).
///
/// The quadrature doubles its node count until self-consistent below 1e-13
/// and fails if that never happens; the imaginary residue of i^{-k} times the
/// integral must be below 1e-12.
pub fn bessel_j(k: i32, tau: f64) -> Result<f64> {
    let m0 = (1.5 * tau.abs() + 2.0 * k.abs() as f64 + 16.0).ceil() as usize;
    let integral = quad::periodic_trapezoid(
        |x| Complex64::from_polar(1.0, k as f64 * x + tau * x.cos()),
        m0,
        1e-13,
        12,
    )? / (2.0 * std::f64::consts::PI);
    // i^{-k}
    let phase = Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_2 * k as f64);
    let val = phase * integral;
    if val.im.abs() > 1e-12 {
        return Err(Error::Convergence(format!(
            "bessel_j({k}, {tau}): imaginary residue {:.2e} above 1e-12",
            val.im.abs()
        )));
    }
    Ok(val.re)
}
