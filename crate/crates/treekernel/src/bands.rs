//! AC-spectrum decomposition of the quantum tree: Dirichlet values (roots of
//! s), band edges (level sets w = +-2 sqrt(q)), and inversion of w on a band
//! for the theta-parametrization used by every band quadrature.

use crate::edge_ode::{w_eval, QuantumTreeModel};
use crate::error::{Error, Result};

/// One band I_n = [a, b] of AC spectrum together with the orientation of w
/// on it and the Dirichlet value just above it.
#[derive(Debug, Clone, Copy)]
pub struct Band {
    /// 1-based band index
    pub index: usize,
    pub a: f64,
    pub b: f64,
    /// +1 if w increases across the band, -1 if it decreases; equals (-1)^n
    pub w_sign: f64,
    /// delta_n, the Dirichlet value separating this band from the next
    pub dirichlet_above: f64,
}

impl Band {
    /// Value of w at the left edge a (always +-2 sqrt(q)).
    pub fn w_at_a(&self, two_sqrt_q: f64) -> f64 {
        -self.w_sign * two_sqrt_q
    }
    pub fn contains(&self, lambda: f64) -> bool {
        let slack = 1e-9 * self.b.abs().max(1.0);
        lambda >= self.a - slack && lambda <= self.b + slack
    }
}

fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Hybrid secant/bisection refinement of a bracketed root of f.
fn refine_root<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    mut f_hi: f64,
    xtol: f64,
) -> Result<f64> {
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo * f_hi > 0.0 {
        return Err(Error::Invariant(format!(
            "root refinement called without a sign change on [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        if hi - lo < xtol {
            break;
        }
        // secant proposal, clipped into the bracket interior
        let mut x = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        let margin = 0.01 * (hi - lo);
        if !(x > lo + margin && x < hi - margin) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx * f_lo < 0.0 {
            hi = x;
            f_hi = fx;
        } else {
            lo = x;
            f_lo = fx;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First `n_max` roots of s(lambda) (the Dirichlet values), each bracketed by
/// scanning s around the unperturbed guesses (n pi / L)^2 with a margin of
/// ||W||_inf (min-max shift bound) and refined to 1e-11.
pub fn dirichlet_values(model: &QuantumTreeModel, n_max: usize) -> Result<Vec<f64>> {
    if n_max < 1 {
        return Err(Error::Config("n_max must be >= 1".into()));
    }
    {
        let cache = model.dirichlet_cache.read().unwrap();
        if cache.len() >= n_max {
            return Ok(cache[..n_max].to_vec());
        }
    }
    let length = model.length();
    let sup_w = model.potential_sup_norm();
    let s_at = |lam: f64| -> Result<f64> { Ok(model.s_values_at(lam, &[length])?[0]) };

    let mut margin = sup_w + 1e-6;
    let mut roots = Vec::new();
    for attempt in 0..2 {
        roots.clear();
        let lam_lo = (std::f64::consts::PI / length).powi(2) - margin;
        let lam_hi = ((n_max as f64 + 0.5) * std::f64::consts::PI / length).powi(2) + margin;
        // scan grid: uniform in sqrt(lambda) above zero (resolves the
        // near-periodic sign pattern), uniform in lambda below zero
        let mut grid = Vec::new();
        if lam_lo < 0.0 {
            let steps = (8.0 * (-lam_lo) / (std::f64::consts::PI / length).powi(2)).ceil() as usize;
            for i in 0..=steps.max(8) {
                grid.push(lam_lo + (0.0 - lam_lo) * i as f64 / steps.max(8) as f64);
            }
        }
        let u_lo = lam_lo.max(0.0).sqrt();
        let u_hi = lam_hi.sqrt();
        let du = std::f64::consts::PI / (24.0 * length);
        let steps = ((u_hi - u_lo) / du).ceil() as usize;
        for i in 0..=steps {
            grid.push((u_lo + (u_hi - u_lo) * i as f64 / steps as f64).powi(2));
        }
        grid.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

        let mut prev_lam = grid[0];
        let mut prev_s = s_at(prev_lam)?;
        for &lam in &grid[1..] {
            let cur_s = s_at(lam)?;
            if sign_of(prev_s) != sign_of(cur_s) && sign_of(prev_s) != 0 {
                let root = refine_root(&mut |x| s_at(x), prev_lam, lam, prev_s, cur_s, 1e-12)?;
                roots.push(root);
                if roots.len() == n_max {
                    break;
                }
            }
            prev_lam = lam;
            prev_s = cur_s;
        }
        if roots.len() == n_max {
            break;
        }
        if attempt == 0 {
            margin = 2.0 * margin + 1.0;
        } else {
            return Err(Error::Invariant(format!(
                "found {} Dirichlet values, expected {n_max} (margin {margin})",
                roots.len()
            )));
        }
    }
    // Extend the cache but keep already-published values bit-stable, so
    // bands and proxies built earlier stay consistent with later calls.
    let mut cache = model.dirichlet_cache.write().unwrap();
    if cache.len() < roots.len() {
        let keep = cache.len();
        roots[..keep].copy_from_slice(&cache[..keep]);
        *cache = roots.clone();
    } else {
        let n = roots.len();
        roots.copy_from_slice(&cache[..n]);
    }
    Ok(roots)
}

/// Locate the first `n_max` bands: in each gap interval walled by Dirichlet
/// values, find the unique crossings of w = +-2 sqrt(q) and assemble the
/// band record. Verifies w(delta_n) = (-1)^n (q+1) and the single-crossing
/// property on the way.
pub fn compute_bands(model: &QuantumTreeModel, n_max: usize) -> Result<Vec<Band>> {
    if n_max < 1 {
        return Err(Error::Config("n_max must be >= 1".into()));
    }
    {
        let cache = model.band_cache.read().unwrap();
        if cache.len() >= n_max {
            return Ok(cache[..n_max].to_vec());
        }
    }
    let q = model.q();
    let two_sq = 2.0 * q.sqrt();
    let deltas = dirichlet_values(model, n_max)?;
    let w0 = |lam: f64| -> Result<f64> { w_eval(model, lam, 0) };

    // weak periodicity check at the Dirichlet values
    for (i, &d) in deltas.iter().enumerate() {
        let n = i + 1;
        let expect = if n % 2 == 0 { q + 1.0 } else { -(q + 1.0) };
        let got = w0(d)?;
        if (got - expect).abs() > 1e-6 * (q + 1.0) {
            return Err(Error::Invariant(format!(
                "w(delta_{n}) = {got:.9}, expected {expect:.9}"
            )));
        }
    }

    // left wall for band 1: march down until w > 2 sqrt(q)
    let mut wall = deltas[0] - (std::f64::consts::PI / model.length()).powi(2)
        - 2.0 * model.potential_sup_norm()
        - 1.0;
    let mut step = (std::f64::consts::PI / model.length()).powi(2) + 1.0;
    for _ in 0..80 {
        if w0(wall)? > two_sq + 0.5 {
            break;
        }
        wall -= step;
        step *= 2.0;
    }
    if w0(wall)? <= two_sq {
        return Err(Error::Invariant("could not bracket the bottom of the spectrum".into()));
    }

    let mut bands = Vec::with_capacity(n_max);
    let mut lo_wall = wall;
    for n in 1..=n_max {
        let hi_wall = deltas[n - 1];
        let f_plus = |lam: f64| -> Result<f64> { Ok(w0(lam)? - two_sq) };
        let f_minus = |lam: f64| -> Result<f64> { Ok(w0(lam)? + two_sq) };
        // single-crossing verification on a scan grid
        let mut plus_changes = 0;
        let mut minus_changes = 0;
        let mut prev_p = f_plus(lo_wall)?;
        let mut prev_m = f_minus(lo_wall)?;
        let mut grid_p = vec![(lo_wall, prev_p)];
        let mut grid_m = vec![(lo_wall, prev_m)];
        const SCAN: usize = 96;
        for i in 1..=SCAN {
            let lam = lo_wall + (hi_wall - lo_wall) * i as f64 / SCAN as f64;
            let wp = f_plus(lam)?;
            let wm = f_minus(lam)?;
            if sign_of(wp) != sign_of(prev_p) {
                plus_changes += 1;
            }
            if sign_of(wm) != sign_of(prev_m) {
                minus_changes += 1;
            }
            prev_p = wp;
            prev_m = wm;
            grid_p.push((lam, wp));
            grid_m.push((lam, wm));
        }
        if plus_changes != 1 || minus_changes != 1 {
            return Err(Error::Invariant(format!(
                "band {n}: expected single crossings of +-2 sqrt(q) in ({lo_wall:.6}, {hi_wall:.6}), found {plus_changes}/{minus_changes}"
            )));
        }
        let locate = |grid: &[(f64, f64)], f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
            for w in grid.windows(2) {
                let ((l0, v0), (l1, v1)) = (w[0], w[1]);
                if sign_of(v0) != sign_of(v1) {
                    return refine_root(|x| f(x), l0, l1, v0, v1, 1e-12);
                }
            }
            Err(Error::Invariant(format!("band {n}: crossing disappeared during refinement")))
        };
        let r_plus = locate(&grid_p, &f_plus)?;
        let r_minus = locate(&grid_m, &f_minus)?;
        let (a, b) = (r_plus.min(r_minus), r_plus.max(r_minus));
        // parity: odd bands descend from +2 sqrt(q), even bands ascend
        let w_sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let ordered_ok = if n % 2 == 1 { a == r_plus } else { a == r_minus };
        if !ordered_ok {
            return Err(Error::Invariant(format!(
                "band {n}: edge ordering contradicts the (-1)^n orientation of w"
            )));
        }
        bands.push(Band { index: n, a, b, w_sign, dirichlet_above: hi_wall });
        lo_wall = hi_wall;
    }
    let mut cache = model.band_cache.write().unwrap();
    if cache.len() < bands.len() {
        let keep = cache.len();
        bands[..keep].copy_from_slice(&cache[..keep]);
        *cache = bands.clone();
    } else {
        let n = bands.len();
        bands.copy_from_slice(&cache[..n]);
    }
    Ok(bands)
}

/// The unique lambda in [band.a, band.b] with w(lambda) = target,
/// |target| <= 2 sqrt(q). Safeguarded Newton on w with bisection fallback,
/// to |w(lambda) - target| <= 1e-11.
pub fn invert_w_on_band(model: &QuantumTreeModel, band: &Band, target: f64) -> Result<f64> {
    invert_w_on_band_seeded(model, band, target, None)
}

/// Same as [`invert_w_on_band`] with an optional warm start (used when
/// sweeping theta along a band).
pub fn invert_w_on_band_seeded(
    model: &QuantumTreeModel,
    band: &Band,
    target: f64,
    seed: Option<f64>,
) -> Result<f64> {
    let two_sq = 2.0 * model.q().sqrt();
    if target.abs() > two_sq * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("target {target} outside [-2 sqrt(q), 2 sqrt(q)]")));
    }
    let target = target.clamp(-two_sq, two_sq);
    // endpoints are known exactly
    if (target - band.w_at_a(two_sq)).abs() < 1e-13 {
        return Ok(band.a);
    }
    if (target + band.w_at_a(two_sq)).abs() < 1e-13 {
        return Ok(band.b);
    }
    let (mut lo, mut hi) = (band.a, band.b);
    let mut x = seed
        .filter(|s| (lo..=hi).contains(s))
        .unwrap_or(0.5 * (lo + hi));
    for _ in 0..80 {
        let ep = model.endpoints(x)?;
        let qp1 = model.q() + 1.0;
        let w = qp1 * ep.c + model.alpha() * ep.s;
        let dw = qp1 * ep.dc + model.alpha() * ep.ds;
        let resid = w - target;
        if resid.abs() <= 1e-11 {
            return Ok(x);
        }
        // shrink the bracket using the sign of w on the band
        if resid * band.w_sign > 0.0 {
            // w(x) above target on an increasing band -> root is left of x
            hi = x.min(hi);
        } else {
            lo = x.max(lo);
        }
        let newton = x - resid / dw;
        x = if dw != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * band.b.abs().max(1.0) {
            return Ok(x);
        }
    }
    Err(Error::Convergence(format!(
        "w inversion did not reach 1e-11 on band {} (target {target})",
        band.index
    )))
}
