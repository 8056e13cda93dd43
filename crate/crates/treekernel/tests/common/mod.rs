//! Shared test oracles, independent of the library's computation paths.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Power-series Bessel oracle in exact rational arithmetic:
/// J_k(tau) = sum_m (-1)^m (tau/2)^{2m+k} / (m! (m+k)!).
///
/// tau is taken as the exact rational value of the f64 argument, so the
/// series has no rounding at all until the final conversion; this survives
/// the catastrophic cancellation that kills a double-precision sum for
/// tau beyond ~15.
pub fn bessel_series_exact(k: u32, tau: f64) -> f64 {
    assert!(tau >= 0.0 && tau.is_finite());
    let half = rational_from_f64(tau / 2.0);
    let half_sq = &half * &half;
    // m = 0 term: (tau/2)^k / k!
    let mut term = pow_rational(&half, k);
    for j in 1..=k {
        term /= BigRational::from_integer(BigInt::from(j));
    }
    let mut total = BigRational::zero();
    let mut m: u32 = 0;
    loop {
        total += &term;
        m += 1;
        term = -term * &half_sq
            / BigRational::from_integer(BigInt::from(m) * BigInt::from(m + k));
        // the terms decay factorially once 2m > tau; run well past that
        if m > (2.0 * tau) as u32 + 40 && term.abs().to_f64().unwrap_or(0.0) < 1e-40 {
            break;
        }
    }
    total.to_f64().expect("rational to f64")
}

fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

fn pow_rational(base: &BigRational, exp: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

/// Least-squares slope of log(magnitude) against log(t).
pub fn log_log_slope(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples.iter().map(|(t, m)| (t.ln(), m.ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Log-spaced grid of `count` points on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}
