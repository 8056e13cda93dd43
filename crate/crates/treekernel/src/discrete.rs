//! Evolution kernel e^{itA}(v, w) of the adjacency matrix on the
//! (q+1)-regular combinatorial tree, its large-time leading term, and two
//! independent oracles (radial Jacobi reduction of the tree, Bessel identity
//! on the integer line).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{composite_complex, PanelRule};
use crate::specfun::{self, TreeDegree};

/// One kernel evaluation together with how it was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    Asymptotic,
    Oracle,
}

#[derive(Debug, Clone, Copy)]
pub struct DiscreteKernelSample {
    pub t: f64,
    pub n: usize,
    pub value: Complex64,
    pub method: Method,
}

impl DiscreteKernelSample {
    /// Evaluate the kernel at (t, n) with the requested method. The unitary
    /// contraction bound |value| <= 1 is enforced up to rounding.
    pub fn compute(t: f64, n: usize, deg: TreeDegree, method: Method) -> Result<Self> {
        let value = match method {
            Method::Quadrature => kernel_numeric(t, n, deg)?,
            Method::Asymptotic => kernel_main_term(t, n, deg)?,
            Method::Oracle => {
                let dim = (n as f64 + deg.spectral_radius() * t.abs() + 50.0).ceil() as usize + 1;
                radial_oracle(t, n, deg, dim)?[n]
            }
        };
        if method != Method::Asymptotic && value.norm() > 1.0 + 1e-9 {
            return Err(Error::Invariant(format!(
                "kernel magnitude {} exceeds 1 at t = {t}, n = {n}",
                value.norm()
            )));
        }
        Ok(DiscreteKernelSample { t, n, value, method })
    }
}

/// Spectral density factor Psi(lambda) on [-2 sqrt(q), 2 sqrt(q)]:
/// Psi = (q+1) sqrt(4q - lambda^2) / (2 ((q+1)^2 - lambda^2)).
pub fn psi(lambda: f64, deg: TreeDegree) -> Result<f64> {
    let q = deg.q();
    let rad = 4.0 * q - lambda * lambda;
    if rad < -1e-12 * q {
        return Err(Error::Domain(format!(
            "lambda = {lambda} outside the spectrum [-2 sqrt(q), 2 sqrt(q)]"
        )));
    }
    Ok((q + 1.0) * rad.max(0.0).sqrt() / (2.0 * ((q + 1.0) * (q + 1.0) - lambda * lambda)))
}

/// Im G^{lambda+i0}(v, w) = Psi(lambda) * Phi_n(lambda) at distance n.
pub fn spectral_density(lambda: f64, n: usize, deg: TreeDegree) -> Result<f64> {
    Ok(psi(lambda, deg)? * specfun::spherical(n, lambda, deg))
}

/// The theta-space amplitude g of the diagonal density derivative:
/// g(theta) = sqrt(q) cos(theta) (q+1) (6q - 4q cos^2 - q^2 - 1)
///            / ((q+1)^2 - 4q cos^2)^2.
pub fn theta_amplitude(deg: TreeDegree, theta: f64) -> f64 {
    let q = deg.q();
    let c = theta.cos();
    let denom = (q + 1.0) * (q + 1.0) - 4.0 * q * c * c;
    q.sqrt() * c * (q + 1.0) * (6.0 * q - 4.0 * q * c * c - q * q - 1.0) / (denom * denom)
}

/// g(0) = -sqrt(q) (q+1) / (q-1)^2, the value entering every main term.
pub fn theta_amplitude_at_zero(deg: TreeDegree) -> f64 {
    let q = deg.q();
    -q.sqrt() * (q + 1.0) / ((q - 1.0) * (q - 1.0))
}

/// Kernel by quadrature of the spectral integral,
/// (1/pi) int e^{it lambda} Psi(lambda) Phi_n(lambda) d lambda,
/// after lambda = 2 sqrt(q) cos(theta) (the integrand is then smooth).
///
/// Node count max(64, ceil(40 sqrt(q) |t|)), doubled until the value moves by
/// less than 1e-11; fails after 4 doublings.
pub fn kernel_numeric(t: f64, n: usize, deg: TreeDegree) -> Result<Complex64> {
    let q = deg.q();
    let two_sq = deg.spectral_radius();
    let rule = PanelRule::new(24);
    let amp = |theta: f64| {
        let c = theta.cos();
        let s = theta.sin();
        let lam = two_sq * c;
        let dens = (q + 1.0) * 4.0 * q * s * s
            / (2.0 * ((q + 1.0) * (q + 1.0) - 4.0 * q * c * c));
        dens * specfun::spherical(n, lam, deg)
    };
    let f = |theta: f64| Complex64::from_polar(1.0, t * two_sq * theta.cos()) * amp(theta);
    let mut nodes = ((40.0 * q.sqrt() * t.abs()).ceil() as usize).max(64);
    let mut prev = composite_complex(0.0, std::f64::consts::PI, nodes, &rule, f);
    for _ in 0..4 {
        nodes *= 2;
        let cur = composite_complex(0.0, std::f64::consts::PI, nodes, &rule, f);
        if (cur - prev).norm() < 1e-11 {
            return Ok(cur / std::f64::consts::PI);
        }
        prev = cur;
    }
    Err(Error::Convergence(format!(
        "discrete kernel quadrature did not settle at t = {t}, n = {n}"
    )))
}

/// Leading large-time term of the kernel:
/// even n:  sin(2 sqrt(q) t - pi/4) * C_n / (sqrt(pi) t^{3/2}),
/// odd  n:  -i sin(2 sqrt(q) t + pi/4) * C_n / (sqrt(pi) t^{3/2}),
/// with C_n = q^{1/4 - n/2} (2 + (n+1)(q-1)) / (q-1)^2.
pub fn kernel_main_term(t: f64, n: usize, deg: TreeDegree) -> Result<Complex64> {
    if t <= 0.0 {
        return Err(Error::Domain("main term requires t > 0".into()));
    }
    let q = deg.q();
    let nf = n as f64;
    let coeff = q.powf(0.25 - nf / 2.0) * (2.0 + (nf + 1.0) * (q - 1.0))
        / ((q - 1.0) * (q - 1.0));
    let scale = coeff / (std::f64::consts::PI.sqrt() * t.powf(1.5));
    let phase = deg.spectral_radius() * t;
    if n % 2 == 0 {
        Ok(Complex64::new(scale * (phase - std::f64::consts::FRAC_PI_4).sin(), 0.0))
    } else {
        Ok(Complex64::new(0.0, -scale * (phase + std::f64::consts::FRAC_PI_4).sin()))
    }
}

/// Shell sizes of the tree: N_0 = 1, N_n = (q+1) q^{n-1}.
pub fn shell_size(n: usize, deg: TreeDegree) -> f64 {
    if n == 0 {
        1.0
    } else {
        (deg.q() + 1.0) * deg.q().powi(n as i32 - 1)
    }
}

/// Independent oracle: compress the adjacency matrix to radial shells around
/// v, giving the N x N Jacobi matrix with off-diagonals sqrt(q+1), sqrt(q),
/// sqrt(q), ...; then e^{itJ} e_0 by dense symmetric eigendecomposition.
/// Returns the kernel at distances 0..=n_max.
pub fn radial_oracle(t: f64, n_max: usize, deg: TreeDegree, n_dim: usize) -> Result<Vec<Complex64>> {
    let margin = n_max as f64 + deg.spectral_radius() * t.abs() + 50.0;
    if (n_dim as f64) < margin {
        return Err(Error::Domain(format!(
            "oracle dimension {n_dim} below propagation margin {margin:.0}"
        )));
    }
    let mut j = DMatrix::<f64>::zeros(n_dim, n_dim);
    let b0 = (deg.q() + 1.0).sqrt();
    let b = deg.q().sqrt();
    for i in 0..n_dim - 1 {
        let off = if i == 0 { b0 } else { b };
        j[(i, i + 1)] = off;
        j[(i + 1, i)] = off;
    }
    let eig = j.symmetric_eigen();
    // u = V diag(e^{it w}) V^T e_0
    let mut u = vec![Complex64::new(0.0, 0.0); n_max + 1];
    for k in 0..n_dim {
        let w = eig.eigenvalues[k];
        let phase = Complex64::from_polar(1.0, t * w);
        let v0 = eig.eigenvectors[(0, k)];
        for (row, acc) in u.iter_mut().enumerate() {
            *acc += phase * (v0 * eig.eigenvectors[(row, k)]);
        }
    }
    Ok(u.iter()
        .enumerate()
        .map(|(n, v)| v / shell_size(n, deg).sqrt())
        .collect())
}

/// Kernel of e^{itA} on the integer line: i^n J_n(2t), evaluated through the
/// Fourier-integral quadrature (not through any tree formula).
pub fn line_kernel(t: f64, n: i32) -> Result<Complex64> {
    let j = specfun::bessel_j(n, 2.0 * t)?;
    let phase = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2 * n as f64);
    Ok(phase * j)
}

/// Phase-peak times of the diagonal main term, |sin(2 sqrt(q) t - pi/4)| = 1:
/// t_k = (k pi + 3 pi/4) / (2 sqrt(q)).
pub fn peak_times(deg: TreeDegree, t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    peak_times_for(deg, 0, t_min, t_max, count)
}

/// Peak times of the main term at distance n; odd distances carry the
/// shifted sine sin(2 sqrt(q) t + pi/4).
pub fn peak_times_for(
    deg: TreeDegree,
    distance: usize,
    t_min: f64,
    t_max: f64,
    count: usize,
) -> Vec<f64> {
    let offset = if distance % 2 == 0 { 0.75 } else { 0.25 };
    let two_sq = deg.spectral_radius();
    let k_min = ((t_min * two_sq - offset * std::f64::consts::PI) / std::f64::consts::PI)
        .ceil()
        .max(0.0) as i64;
    let k_max =
        ((t_max * two_sq - offset * std::f64::consts::PI) / std::f64::consts::PI).floor() as i64;
    if k_max < k_min {
        return Vec::new();
    }
    let count = count.max(2);
    let mut ts = Vec::with_capacity(count);
    // geometric spread over the admissible k range to keep log t roughly even
    let lo = (k_min.max(1)) as f64;
    let hi = k_max as f64;
    for i in 0..count {
        let f = i as f64 / (count - 1) as f64;
        let k = (lo * (hi / lo).powf(f)).round() as i64;
        let t = (k as f64 + offset) * std::f64::consts::PI / two_sq;
        if ts.last().map(|&last: &f64| t > last + 1e-9).unwrap_or(true) {
            ts.push(t);
        }
    }
    ts
}
