//! Gragg-Bulirsch-Stoer integration for the small linear systems arising on
//! a single metric edge.
//!
//! The modified-midpoint base method has an even-power error expansion, so
//! polynomial extrapolation in h^2 gives very high order per macro step. The
//! controller targets an absolute tolerance and rejects steps whose
//! extrapolation estimate exceeds it.

use crate::error::{Error, Result};

const SEQ: [usize; 8] = [2, 4, 6, 8, 10, 12, 14, 16];

/// One Gragg modified-midpoint sweep over [x, x+h_total] with n substeps.
fn midpoint<F>(f: &F, x: f64, y: &[f64], h_total: f64, n: usize, out: &mut [f64])
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y.len();
    let h = h_total / n as f64;
    let mut z0 = y.to_vec();
    let mut z1 = vec![0.0; dim];
    let mut dy = vec![0.0; dim];
    f(x, &z0, &mut dy);
    for i in 0..dim {
        z1[i] = z0[i] + h * dy[i];
    }
    for k in 1..n {
        f(x + k as f64 * h, &z1, &mut dy);
        for i in 0..dim {
            let znew = z0[i] + 2.0 * h * dy[i];
            z0[i] = z1[i];
            z1[i] = znew;
        }
    }
    f(x + h_total, &z1, &mut dy);
    for i in 0..dim {
        out[i] = 0.5 * (z1[i] + z0[i] + h * dy[i]);
    }
}

/// Integrate y' = f(x, y) from x0 to x1 (x1 > x0), updating y in place.
pub fn integrate<F>(f: &F, x0: f64, x1: f64, y: &mut [f64], atol: f64, h_init: f64) -> Result<()>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let dim = y.len();
    let span = x1 - x0;
    if span <= 0.0 {
        return Ok(());
    }
    let levels = SEQ.len();
    // rows_prev[k] = T_{j-1,k}, rows_cur[k] = T_{j,k} (Aitken-Neville columns).
    let mut rows_prev: Vec<Vec<f64>> = vec![vec![0.0; dim]; levels];
    let mut rows_cur: Vec<Vec<f64>> = vec![vec![0.0; dim]; levels];
    let mut x = x0;
    let mut h = h_init.min(span).max(span * 1e-12);
    let mut steps = 0usize;
    while x < x1 - 1e-14 * span {
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::Convergence("ODE step budget exhausted".into()));
        }
        if h < 1e-13 * span {
            return Err(Error::Convergence("ODE step-size underflow".into()));
        }
        let h_step = h.min(x1 - x);
        let mut accepted_level = None;
        let mut err = f64::INFINITY;
        for j in 0..levels {
            midpoint(f, x, y, h_step, SEQ[j], &mut rows_cur[0]);
            for k in 1..=j {
                let ratio = (SEQ[j] as f64 / SEQ[j - k] as f64).powi(2);
                for i in 0..dim {
                    let prev = rows_prev[k - 1][i];
                    let cur = rows_cur[k - 1][i];
                    rows_cur[k][i] = cur + (cur - prev) / (ratio - 1.0);
                }
            }
            if j >= 2 {
                err = (0..dim)
                    .map(|i| (rows_cur[j][i] - rows_cur[j - 1][i]).abs())
                    .fold(0.0f64, f64::max);
                if err <= atol {
                    accepted_level = Some(j);
                    break;
                }
            }
            std::mem::swap(&mut rows_prev, &mut rows_cur);
        }
        match accepted_level {
            Some(j) => {
                y.copy_from_slice(&rows_cur[j]);
                x += h_step;
                let order = 2.0 * j as f64 + 1.0;
                let factor =
                    (0.25 * atol / err.max(1e-300)).powf(1.0 / order).clamp(0.2, 4.0);
                h = (h_step * factor).min(span);
            }
            None => {
                h = h_step * 0.25;
            }
        }
    }
    Ok(())
}

/// Integrate from `x0` through each stop in `stops` (sorted ascending, all
/// >= x0), invoking `emit(x, y)` exactly at every stop.
pub fn integrate_through<F, E>(
    f: &F,
    x0: f64,
    y0: &[f64],
    stops: &[f64],
    atol: f64,
    mut emit: E,
) -> Result<()>
where
    F: Fn(f64, &[f64], &mut [f64]),
    E: FnMut(f64, &[f64]),
{
    let mut y = y0.to_vec();
    let mut x = x0;
    let total: f64 = stops.last().map(|s| s - x0).unwrap_or(0.0);
    let mut h = (total / 16.0).max(1e-6);
    for &s in stops {
        if s > x + 1e-15 {
            integrate(f, x, s, &mut y, atol, h)?;
            h = (s - x).max(1e-6);
            x = s;
        }
        emit(x, &y);
    }
    Ok(())
}
