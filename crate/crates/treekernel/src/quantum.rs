//! The AC-part evolution kernel on the quantum tree: spectral densities on
//! the bands, the wavefunction correlation Phi(lambda, x, y), band-summed
//! quadrature of the kernel, and its first-order large-time term.
//!
//! Per band the integral is taken in the variable theta with
//! w(lambda) = 2 sqrt(q) cos(theta); the phase lambda(theta) and the smooth
//! amplitude are resolved once per (band, query) into Chebyshev interpolants
//! (backed by dense Hermite tables), after which a time sweep only pays for
//! quadrature nodes, not ODE solves.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::bands::{compute_bands, invert_w_on_band_seeded, Band};
use crate::discrete;
use crate::edge_ode::{w_eval, QuantumTreeModel};
use crate::error::{Error, Result};
use crate::interp::{Chebyshev, DenseTable};
use crate::quad::{composite_complex, PanelRule};
use crate::specfun;

/// Relative position of the two kernel arguments on the tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelQuery {
    /// x = y = some vertex
    DiagonalVertex,
    /// both points on one edge, at distances x and y from the same endpoint
    SameEdge { x: f64, y: f64 },
    /// points on distinct edges joined by a path (v_0, ..., v_k), k >= 2;
    /// x measured from v_0 along the first edge (toward v_1), y from
    /// v_{k-1} along the last edge (toward v_k)
    DistinctEdges { k: usize, x: f64, y: f64 },
}

impl KernelQuery {
    pub fn validate(&self, length: f64) -> Result<()> {
        let check = |v: f64, name: &str| -> Result<()> {
            if !(0.0..=length).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} outside [0, {length}]")));
            }
            Ok(())
        };
        match self {
            KernelQuery::DiagonalVertex => Ok(()),
            KernelQuery::SameEdge { x, y } => {
                check(*x, "x")?;
                check(*y, "y")
            }
            KernelQuery::DistinctEdges { k, x, y } => {
                if *k < 2 {
                    return Err(Error::Config(
                        "distinct-edge query needs path length k >= 2".into(),
                    ));
                }
                check(*x, "x")?;
                check(*y, "y")
            }
        }
    }
}

/// Hashable cache key for a query (positions by bit pattern).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QueryKey {
    kind: u8,
    k: u32,
    xb: u64,
    yb: u64,
}

impl From<&KernelQuery> for QueryKey {
    fn from(q: &KernelQuery) -> Self {
        match q {
            KernelQuery::DiagonalVertex => QueryKey { kind: 0, k: 0, xb: 0, yb: 0 },
            KernelQuery::SameEdge { x, y } => {
                QueryKey { kind: 1, k: 0, xb: x.to_bits(), yb: y.to_bits() }
            }
            KernelQuery::DistinctEdges { k, x, y } => {
                QueryKey { kind: 2, k: *k as u32, xb: x.to_bits(), yb: y.to_bits() }
            }
        }
    }
}

pub(crate) type ProxyKey = (usize, QueryKey);

/// Kernel value together with the reported band-truncation tail estimate.
#[derive(Debug, Clone, Copy)]
pub struct KernelValue {
    pub value: Complex64,
    /// estimated magnitude of the dropped bands (O(n_bands^{-1/2}) envelope);
    /// infinite when t = 0, where no decay reasoning applies
    pub tail: f64,
}

/// Contribution of a single band: leading term, quadrature value, and the
/// envelope magnitude used for truncation accounting.
#[derive(Debug, Clone, Copy)]
pub struct BandContribution {
    pub n: usize,
    pub main: Complex64,
    pub numeric: Complex64,
    pub magnitude_bound: f64,
}

/// Locate the band containing lambda, extending the band table as needed.
pub fn locate_band(model: &QuantumTreeModel, lambda: f64) -> Result<Band> {
    let guess = (lambda.max(0.0).sqrt() * model.length() / std::f64::consts::PI).ceil() as usize + 2;
    let bands = compute_bands(model, guess.max(1))?;
    bands
        .iter()
        .find(|b| b.contains(lambda))
        .copied()
        .ok_or_else(|| Error::Domain(format!("lambda = {lambda} lies outside the AC spectrum")))
}

/// Spectral density Psi_1(lambda) = Im G(o, o) = (-1)^{n+1} s(lambda)
/// Psi(w(lambda)) on band n.
pub fn psi1(model: &QuantumTreeModel, lambda: f64) -> Result<f64> {
    let band = locate_band(model, lambda)?;
    psi1_on_band(model, lambda, &band)
}

pub(crate) fn psi1_on_band(model: &QuantumTreeModel, lambda: f64, band: &Band) -> Result<f64> {
    let ep = model.endpoints(lambda)?;
    let w = (model.q() + 1.0) * ep.c + model.alpha() * ep.s;
    let psi = discrete::psi(w.clamp(-2.0 * model.q().sqrt(), 2.0 * model.q().sqrt()), model.degree())?;
    Ok(-band.w_sign * ep.s * psi)
}

/// Boundary value mu^-(lambda) = (w - i eps sqrt(4q - w^2)) / (2q) with
/// eps = sgn w' taken from the band table.
pub fn mu_minus(model: &QuantumTreeModel, lambda: f64) -> Result<Complex64> {
    let band = locate_band(model, lambda)?;
    let q = model.q();
    let w = w_eval(model, lambda, 0)?;
    let rad = (4.0 * q - w * w).max(0.0).sqrt();
    Ok(Complex64::new(w / (2.0 * q), -band.w_sign * rad / (2.0 * q)))
}

/// Correlation Phi(lambda, x, y) = Im G(x, y) / Im G(o, o).
pub fn correlation(model: &QuantumTreeModel, lambda: f64, query: &KernelQuery) -> Result<f64> {
    query.validate(model.length())?;
    locate_band(model, lambda)?;
    correlation_unchecked(model, lambda, query)
}

fn correlation_unchecked(model: &QuantumTreeModel, lambda: f64, query: &KernelQuery) -> Result<f64> {
    let length = model.length();
    match *query {
        KernelQuery::DiagonalVertex => Ok(1.0),
        KernelQuery::SameEdge { x, y } => {
            let ep = model.endpoints(lambda)?;
            let s = ep.s;
            debug_assert!(s != 0.0, "s vanishes inside a band");
            let w = (model.q() + 1.0) * ep.c + model.alpha() * ep.s;
            let sv = model.s_values_at(lambda, &[length - x, length - y, x, y])?;
            let (slx, sly, sx, sy) = (sv[0], sv[1], sv[2], sv[3]);
            Ok((slx * sly + sx * sy + w / (model.q() + 1.0) * (slx * sy + sx * sly)) / (s * s))
        }
        KernelQuery::DistinctEdges { k, x, y } => {
            let ep = model.endpoints(lambda)?;
            let s = ep.s;
            let w = (model.q() + 1.0) * ep.c + model.alpha() * ep.s;
            let sv = model.s_values_at(lambda, &[length - x, length - y, x, y])?;
            let (slx, sly, sx, sy) = (sv[0], sv[1], sv[2], sv[3]);
            let deg = model.degree();
            let phi_k = specfun::spherical(k, w, deg);
            let phi_k1 = specfun::spherical(k - 1, w, deg);
            let phi_k2 = specfun::spherical(k - 2, w, deg);
            Ok((slx * sy * phi_k + (slx * sly + sx * sy) * phi_k1 + sx * sly * phi_k2) / (s * s))
        }
    }
}

/// Per-band interpolants of the theta-parametrized phase and amplitude, plus
/// the edge data entering the leading term.
pub struct BandProxy {
    pub band: Band,
    phase: DenseTable,
    amplitude: DenseTable,
    /// sqrt(|w'|)|s| Phi at the two edges, signed s
    pub s_a: f64,
    pub s_b: f64,
    pub dw_a: f64,
    pub dw_b: f64,
    pub phi_a: f64,
    pub phi_b: f64,
}

impl BandProxy {
    fn build(model: &QuantumTreeModel, band: &Band, query: &KernelQuery) -> Result<Self> {
        let q = model.q();
        let two_sq = 2.0 * q.sqrt();
        // memoized joint sample (phase, amplitude) at theta
        let memo: std::cell::RefCell<HashMap<u64, (f64, f64)>> = std::cell::RefCell::new(HashMap::new());
        let seed: std::cell::RefCell<Option<f64>> = std::cell::RefCell::new(None);
        let sample = |theta: f64| -> Result<(f64, f64)> {
            if let Some(hit) = memo.borrow().get(&theta.to_bits()) {
                return Ok(*hit);
            }
            let target = two_sq * theta.cos();
            let lam = invert_w_on_band_seeded(model, band, target, *seed.borrow())?;
            *seed.borrow_mut() = Some(lam);
            let ep = model.endpoints(lam)?;
            let dw = (model.q() + 1.0) * ep.dc + model.alpha() * ep.ds;
            let phi = correlation_unchecked(model, lam, query)?;
            // Psi(w) * 2 sqrt(q) sin(theta) with 4q - w^2 = 4q sin^2(theta)
            // taken from the parametrization (exact, avoids cancellation)
            let sin = theta.sin();
            let cos = theta.cos();
            let dens = (q + 1.0) * 4.0 * q * sin * sin
                / (2.0 * ((q + 1.0) * (q + 1.0) - 4.0 * q * cos * cos));
            let amp = -band.w_sign * ep.s * dens * phi / dw.abs();
            Ok((lam, amp))
        };
        let phase_ch = Chebyshev::fit_adaptive(0.0, std::f64::consts::PI, 1e-12, |th| {
            sample(th).map(|v| v.0).unwrap_or(f64::NAN)
        })?;
        let amp_ch = Chebyshev::fit_adaptive(0.0, std::f64::consts::PI, 3e-9, |th| {
            sample(th).map(|v| v.1).unwrap_or(f64::NAN)
        })?;
        if phase_ch.coeffs.iter().any(|c| !c.is_finite())
            || amp_ch.coeffs.iter().any(|c| !c.is_finite())
        {
            return Err(Error::Convergence(format!(
                "band {} proxy sampling failed",
                band.index
            )));
        }
        let amp_scale = amp_ch.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let phase = DenseTable::from_chebyshev_checked(&phase_ch, 2e-13 * band.b.abs().max(1.0))?;
        let amplitude = DenseTable::from_chebyshev_checked(&amp_ch, 1e-9 * amp_scale.max(1e-300))?;

        let ep_a = model.endpoints(band.a)?;
        let ep_b = model.endpoints(band.b)?;
        let dw_a = (model.q() + 1.0) * ep_a.dc + model.alpha() * ep_a.ds;
        let dw_b = (model.q() + 1.0) * ep_b.dc + model.alpha() * ep_b.ds;
        let phi_a = correlation_unchecked(model, band.a, query)?;
        let phi_b = correlation_unchecked(model, band.b, query)?;
        Ok(BandProxy {
            band: *band,
            phase,
            amplitude,
            s_a: ep_a.s,
            s_b: ep_b.s,
            dw_a,
            dw_b,
            phi_a,
            phi_b,
        })
    }

    /// Quadrature of this band's integral at time t (without the 1/pi).
    fn integrate(&self, t: f64, rule: &PanelRule) -> Complex64 {
        let nodes = ((40.0 * t.abs() * (self.band.b - self.band.a)
            / (2.0 * std::f64::consts::PI))
            .ceil() as usize)
            .max(64);
        composite_complex(0.0, std::f64::consts::PI, nodes, rule, |theta| {
            Complex64::from_polar(1.0, t * self.phase.eval(theta)) * self.amplitude.eval(theta)
        })
    }

    /// Leading term of this band's contribution to the kernel (including the
    /// 1/pi of the spectral integral), and the triangle-inequality envelope
    /// of its magnitude.
    fn main_term(&self, t: f64, model: &QuantumTreeModel) -> (Complex64, f64) {
        let q = model.q();
        let band = &self.band;
        let prefactor = q.powf(0.25) * (q + 1.0)
            / ((q - 1.0) * (q - 1.0) * std::f64::consts::PI.sqrt() * t.powf(1.5));
        let sign = if band.index % 2 == 0 { 1.0 } else { -1.0 }; // (-1)^n
        let coef_a = self.dw_a.abs().sqrt() * self.s_a * self.phi_a;
        let coef_b = self.dw_b.abs().sqrt() * self.s_b * self.phi_b;
        let term_a = Complex64::from_polar(1.0, band.a * t + std::f64::consts::FRAC_PI_4) * coef_a;
        let term_b = Complex64::from_polar(1.0, band.b * t - std::f64::consts::FRAC_PI_4) * coef_b;
        // i * (-1)^{n+1} * prefactor * (term_a - term_b) / 2, derived from the
        // band-wise endpoint stationary-phase estimate
        let val = Complex64::new(0.0, -sign * prefactor) * (term_a - term_b) * 0.5;
        let envelope = prefactor * (coef_a.abs() + coef_b.abs()) * 0.5;
        (val, envelope)
    }
}

fn proxy(model: &QuantumTreeModel, band: &Band, query: &KernelQuery) -> Result<Arc<BandProxy>> {
    let key: ProxyKey = (band.index, QueryKey::from(query));
    if let Some(hit) = model.proxy_cache.read().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let built = Arc::new(BandProxy::build(model, band, query)?);
    model
        .proxy_cache
        .write()
        .unwrap()
        .entry(key)
        .or_insert_with(|| built.clone());
    Ok(built)
}

/// Tail estimate for truncation after `n_bands` bands: fit the O(n^{-3/2})
/// envelope on the last computed bands and integrate it past the cutoff.
fn tail_estimate(model: &QuantumTreeModel, proxies: &[Arc<BandProxy>], t: f64) -> f64 {
    if t.abs() < 1e-9 {
        return f64::INFINITY;
    }
    let q = model.q();
    let prefactor = q.powf(0.25) * (q + 1.0)
        / ((q - 1.0) * (q - 1.0) * std::f64::consts::PI.sqrt() * t.abs().powf(1.5));
    let take = proxies.len().min(5);
    let mut c_hat = 0.0f64;
    for p in &proxies[proxies.len() - take..] {
        let coef = 0.5
            * (p.dw_a.abs().sqrt() * p.s_a.abs() * p.phi_a.abs()
                + p.dw_b.abs().sqrt() * p.s_b.abs() * p.phi_b.abs());
        c_hat = c_hat.max(coef * (p.band.index as f64).powf(1.5));
    }
    // sum_{n > N} c_hat n^{-3/2} <= 2 c_hat / sqrt(N)
    prefactor * 2.0 * c_hat / (proxies.len() as f64).sqrt()
}

/// Kernel e^{itH} 1_ac(H)(x, y) truncated to the first `n_bands` bands:
/// (1/pi) sum_n int_{I_n} e^{it lambda} Psi_1(lambda) Phi(lambda, x, y)
/// d lambda, each band integral taken in theta.
pub fn kernel_numeric(
    model: &QuantumTreeModel,
    t: f64,
    query: &KernelQuery,
    n_bands: usize,
) -> Result<KernelValue> {
    if n_bands < 1 {
        return Err(Error::Config("n_bands must be >= 1".into()));
    }
    query.validate(model.length())?;
    let bands = compute_bands(model, n_bands)?;
    let rule = PanelRule::new(24);
    let mut proxies = Vec::with_capacity(n_bands);
    for band in &bands {
        proxies.push(proxy(model, band, query)?);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for p in &proxies {
        acc += p.integrate(t, &rule);
    }
    Ok(KernelValue {
        value: acc / std::f64::consts::PI,
        tail: tail_estimate(model, &proxies, t),
    })
}

/// First-order large-time term of the kernel over the first `n_bands` bands,
/// with the absolute-convergence tail bound of the dropped part.
pub fn kernel_main_term(
    model: &QuantumTreeModel,
    t: f64,
    query: &KernelQuery,
    n_bands: usize,
) -> Result<KernelValue> {
    if t <= 0.0 {
        return Err(Error::Domain("main term requires t > 0".into()));
    }
    if n_bands < 1 {
        return Err(Error::Config("n_bands must be >= 1".into()));
    }
    query.validate(model.length())?;
    let bands = compute_bands(model, n_bands)?;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut proxies = Vec::with_capacity(n_bands);
    for band in &bands {
        let p = proxy(model, band, query)?;
        let (main, _) = p.main_term(t, model);
        acc += main;
        proxies.push(p);
    }
    Ok(KernelValue { value: acc, tail: tail_estimate(model, &proxies, t) })
}

/// The theta-space integrand amplitude of one band (the kernel integrand is
/// e^{it lambda(theta)} times this). It carries the Jacobian, so it vanishes
/// identically at the band edges theta = 0, pi.
pub fn band_amplitude(
    model: &QuantumTreeModel,
    band_index: usize,
    query: &KernelQuery,
    theta: f64,
) -> Result<f64> {
    query.validate(model.length())?;
    let bands = compute_bands(model, band_index)?;
    let p = proxy(model, &bands[band_index - 1], query)?;
    Ok(p.amplitude.eval(theta))
}

/// Main term and quadrature value of one band, for like-for-like comparison.
pub fn band_contribution(
    model: &QuantumTreeModel,
    t: f64,
    band_index: usize,
    query: &KernelQuery,
) -> Result<BandContribution> {
    if t <= 0.0 {
        return Err(Error::Domain("band contribution requires t > 0".into()));
    }
    query.validate(model.length())?;
    let bands = compute_bands(model, band_index)?;
    let p = proxy(model, &bands[band_index - 1], query)?;
    let rule = PanelRule::new(24);
    let numeric = p.integrate(t, &rule) / std::f64::consts::PI;
    let (main, envelope) = p.main_term(t, model);
    Ok(BandContribution { n: band_index, main, numeric, magnitude_bound: envelope })
}

/// Times at which the band-1 interference pattern of the main term peaks:
/// (b_1 - a_1) t = 3 pi/2 (mod 2 pi). Returns `count` such times spread
/// geometrically across [t_min, t_max].
pub fn peak_times(model: &QuantumTreeModel, t_min: f64, t_max: f64, count: usize) -> Result<Vec<f64>> {
    let bands = compute_bands(model, 1)?;
    let delta = bands[0].b - bands[0].a;
    let k_of = |t: f64| (t * delta / std::f64::consts::PI - 1.5) / 2.0;
    let k_min = k_of(t_min).ceil().max(0.0);
    let k_max = k_of(t_max).floor();
    if k_max < k_min {
        return Err(Error::Config("no interference peaks inside the time window".into()));
    }
    let count = count.max(2);
    let mut ts = Vec::with_capacity(count);
    let lo = k_min.max(1.0);
    for i in 0..count {
        let f = i as f64 / (count - 1) as f64;
        let k = (lo * (k_max / lo).powf(f)).round();
        let t = (2.0 * k + 1.5) * std::f64::consts::PI / delta;
        if ts.last().map(|&last: &f64| t > last + 1e-9).unwrap_or(true) && t <= t_max * (1.0 + 1e-12)
        {
            ts.push(t);
        }
    }
    Ok(ts)
}

/// Free-line kernel (q = 1, W = alpha = 0 continuum model): closed form
/// (1/2) sqrt(i/(pi t)) e^{-i t v^2 / 4} with v = |x - y| / t.
pub fn free_line_kernel(t: f64, v: f64) -> Result<Complex64> {
    if t <= 0.0 {
        return Err(Error::Domain("free-line kernel requires t > 0".into()));
    }
    let root_i = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    Ok(0.5 * root_i / (std::f64::consts::PI * t).sqrt()
        * Complex64::from_polar(1.0, -t * v * v / 4.0))
}

/// The same kernel from its defining spectral integral,
/// (1/2 pi) int_R e^{it(k^2 + v k)} dk, by oscillation-resolving quadrature
/// on a window around the stationary point plus integration-by-parts tail
/// corrections.
pub fn free_line_kernel_numeric(t: f64, v: f64) -> Result<Complex64> {
    if t <= 0.0 {
        return Err(Error::Domain("free-line kernel requires t > 0".into()));
    }
    let phase = |k: f64| k * k + v * k;
    let dphase = |k: f64| 2.0 * k + v;
    let center = -0.5 * v;
    let half_window = 12.0;
    let (a, b) = (center - half_window, center + half_window);
    let rule = PanelRule::new(24);
    let f = |k: f64| Complex64::from_polar(1.0, t * phase(k));
    let it = Complex64::new(0.0, t);
    // two integrations by parts at each window edge; the остаток is
    // O(1/(t^2 (2K)^3)), far below the 1e-6 validation tolerance
    let tail_right = -f(b) / (it * dphase(b)) - 2.0 * f(b) / ((it * it) * dphase(b).powi(3));
    let tail_left = f(a) / (it * dphase(a)) + 2.0 * f(a) / ((it * it) * dphase(a).powi(3));
    let periods = t * (phase(b) - phase(center)).abs() / std::f64::consts::PI;
    let mut nodes = ((24.0 * periods).ceil() as usize).max(256);
    let mut prev = composite_complex(a, b, nodes, &rule, f);
    for _ in 0..4 {
        nodes *= 2;
        let cur = composite_complex(a, b, nodes, &rule, f);
        if (cur - prev).norm() < 1e-9 {
            return Ok((cur + tail_left + tail_right) / (2.0 * std::f64::consts::PI));
        }
        prev = cur;
    }
    Err(Error::Convergence("free-line quadrature did not settle".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use crate::specfun::TreeDegree;
    use approx::assert_abs_diff_eq;

    fn model(q: u32, alpha: f64, w: Potential) -> QuantumTreeModel {
        QuantumTreeModel::new(TreeDegree::new(q).unwrap(), 1.0, alpha, w).unwrap()
    }

    fn mid_lambda(m: &QuantumTreeModel, n: usize) -> f64 {
        let bands = compute_bands(m, n).unwrap();
        0.5 * (bands[n - 1].a + bands[n - 1].b)
    }

    #[test]
    fn psi1_vanishes_at_band_edges_and_is_nonnegative() {
        let m = model(2, 0.0, Potential::Cosine { amplitude: 0.5 });
        let bands = compute_bands(&m, 6).unwrap();
        for band in &bands {
            assert!(psi1(&m, band.a).unwrap().abs() < 1e-6);
            assert!(psi1(&m, band.b).unwrap().abs() < 1e-6);
            for i in 1..10 {
                let lam = band.a + (band.b - band.a) * i as f64 / 10.0;
                assert!(psi1(&m, lam).unwrap() >= 0.0, "band {} lam {lam}", band.index);
            }
        }
    }

    #[test]
    fn psi1_free_closed_form() {
        // W = 0, alpha = 0: Psi1 = |sin(r)/r| * Psi((q+1) cos r), r = sqrt(lambda)
        let m = model(2, 0.0, Potential::Zero);
        for n in [1usize, 2, 3] {
            let lam = mid_lambda(&m, n);
            let r = lam.sqrt();
            let expect = (r.sin() / r).abs()
                * discrete::psi(3.0 * r.cos(), m.degree()).unwrap();
            assert_abs_diff_eq!(psi1(&m, lam).unwrap(), expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn psi1_rejects_gap_energies() {
        let m = model(2, 0.0, Potential::Zero);
        let bands = compute_bands(&m, 2).unwrap();
        let gap = 0.5 * (bands[0].b + bands[0].dirichlet_above);
        assert!(psi1(&m, gap).is_err());
    }

    #[test]
    fn mu_minus_modulus_and_product() {
        let m = model(3, 0.4, Potential::Cosine { amplitude: 0.6 });
        for n in [1usize, 2, 4] {
            let lam = mid_lambda(&m, n);
            let mu = mu_minus(&m, lam).unwrap();
            assert_abs_diff_eq!(mu.norm(), 1.0 / 3.0f64.sqrt(), epsilon = 1e-9);
            // q mu^+ mu^- = 1 with mu^+ the conjugate partner on the band
            let mu_plus = mu.conj();
            assert!((3.0 * mu * mu_plus - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
        // at a band edge mu^- is real +-1/sqrt(q)
        let bands = compute_bands(&m, 1).unwrap();
        let mu_a = mu_minus(&m, bands[0].a).unwrap();
        assert!(mu_a.im.abs() < 1e-5);
        assert_abs_diff_eq!(mu_a.re.abs(), 1.0 / 3.0f64.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn correlation_identities() {
        let m = model(2, 0.0, Potential::Cosine { amplitude: 0.5 });
        for n in 1..=4 {
            let lam = mid_lambda(&m, n);
            // Psi2(lambda, 0, 0) = 1
            let v = correlation(&m, lam, &KernelQuery::SameEdge { x: 0.0, y: 0.0 }).unwrap();
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn correlation_free_cosine_form() {
        // W = 0, alpha = 0, same edge: Phi = cos(sqrt(lambda) (x - y))
        let m = model(2, 0.0, Potential::Zero);
        for n in 1..=3 {
            let lam = mid_lambda(&m, n);
            for (x, y) in [(0.2, 0.7), (0.0, 0.5), (1.0 / 3.0, 1.0 / 3.0)] {
                let v = correlation(&m, lam, &KernelQuery::SameEdge { x, y }).unwrap();
                assert_abs_diff_eq!(v, (lam.sqrt() * (x - y)).cos(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn correlation_continuity_across_shared_vertex() {
        // Psi3(lambda, 2, x, 0) must equal Psi2(lambda, x, L): the second
        // point sits at the shared vertex, approached from either edge.
        let m = model(2, 0.5, Potential::Cosine { amplitude: 0.5 });
        for n in 1..=3 {
            let lam = mid_lambda(&m, n);
            for x in [0.0, 0.3, 0.8, 1.0] {
                let from_psi3 =
                    correlation(&m, lam, &KernelQuery::DistinctEdges { k: 2, x, y: 0.0 }).unwrap();
                let from_psi2 = correlation(&m, lam, &KernelQuery::SameEdge { x, y: 1.0 }).unwrap();
                assert_abs_diff_eq!(from_psi3, from_psi2, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn correlation_decays_in_path_length() {
        let m = model(2, 0.0, Potential::Cosine { amplitude: 0.5 });
        let bands = compute_bands(&m, 1).unwrap();
        let q = m.q();
        let mut max_by_k = Vec::new();
        for k in 2..=12usize {
            let mut max_abs = 0.0f64;
            for i in 1..=9 {
                let lam = bands[0].a + (bands[0].b - bands[0].a) * i as f64 / 10.0;
                let v = correlation(&m, lam, &KernelQuery::DistinctEdges { k, x: 0.3, y: 0.6 })
                    .unwrap();
                max_abs = max_abs.max(v.abs());
            }
            max_by_k.push((k, max_abs));
        }
        // log max <= log C - (k/2) log q + 3 log k
        let c_log = max_by_k
            .iter()
            .map(|(k, m)| m.ln() + (*k as f64) * 0.5 * q.ln() - 3.0 * (*k as f64).ln())
            .fold(f64::NEG_INFINITY, f64::max);
        for (k, m) in &max_by_k {
            let bound = c_log - (*k as f64) * 0.5 * q.ln() + 3.0 * (*k as f64).ln();
            assert!(m.ln() <= bound + 1e-9, "k={k}");
        }
        // and the magnitudes really shrink overall
        assert!(max_by_k.last().unwrap().1 < 0.05 * max_by_k[0].1);
    }

    #[test]
    fn band_edge_amplitude_vanishes_for_all_query_kinds() {
        let m = model(2, 0.0, Potential::Cosine { amplitude: 0.5 });
        let queries = [
            KernelQuery::DiagonalVertex,
            KernelQuery::SameEdge { x: 0.3, y: 0.55 },
            KernelQuery::DistinctEdges { k: 3, x: 0.2, y: 0.7 },
        ];
        for q in &queries {
            for n in 1..=10usize {
                for theta in [0.0, std::f64::consts::PI] {
                    let a = band_amplitude(&m, n, q, theta).unwrap();
                    assert!(a.abs() <= 1e-9, "band {n} theta {theta}: {a:.3e}");
                }
            }
        }
    }

    #[test]
    fn kernel_at_zero_time_is_band_mass() {
        let m = model(2, 0.0, Potential::Zero);
        let k1 = kernel_numeric(&m, 0.0, &KernelQuery::DiagonalVertex, 1).unwrap();
        let k3 = kernel_numeric(&m, 0.0, &KernelQuery::DiagonalVertex, 3).unwrap();
        assert!(k1.value.im.abs() < 1e-10);
        assert!(k1.value.re > 0.0);
        assert!(k3.value.re > k1.value.re);
        assert!(k1.tail.is_infinite());
    }

    #[test]
    fn kernel_conjugation() {
        let m = model(2, 0.0, Potential::Zero);
        let q = KernelQuery::SameEdge { x: 0.25, y: 0.5 };
        let plus = kernel_numeric(&m, 6.0, &q, 4).unwrap().value;
        let minus = kernel_numeric(&m, -6.0, &q, 4).unwrap().value;
        assert!((plus.conj() - minus).norm() < 1e-10);
    }

    #[test]
    fn single_band_main_term_matches_quadrature_decay() {
        // |numeric - main| for one band decays like t^{-2}; at t = 400 it is
        // already below a percent of the main term.
        let m = model(2, 0.0, Potential::Zero);
        let c1 = band_contribution(&m, 400.0, 1, &KernelQuery::DiagonalVertex).unwrap();
        assert!(c1.main.norm() > 0.0);
        assert!(c1.main.norm() <= c1.magnitude_bound * (1.0 + 1e-12));
        let r400 = (c1.numeric - c1.main).norm();
        assert!(r400 < 0.05 * c1.main.norm(), "residual {r400:.3e}");
        let c2 = band_contribution(&m, 1600.0, 1, &KernelQuery::DiagonalVertex).unwrap();
        let r1600 = (c2.numeric - c2.main).norm();
        // t^{-2} scaling: 4x time -> ~16x smaller, allow slack factor 3
        assert!(r1600 < 3.0 * r400 / 16.0, "r400 {r400:.3e} r1600 {r1600:.3e}");
    }

    #[test]
    fn free_model_edge_coefficient_closed_form() {
        // W = 0, alpha = 0: |w'|^{1/2} |s| = sqrt(L (q+1)/2) (|sin(sqrt(l) L)| / sqrt(l))^{3/2}
        let m = model(2, 0.0, Potential::Zero);
        let bands = compute_bands(&m, 5).unwrap();
        for band in &bands {
            for lam in [band.a, band.b] {
                let ep = m.endpoints(lam).unwrap();
                let dw = 3.0 * ep.dc;
                let got = dw.abs().sqrt() * ep.s.abs();
                let r = lam.sqrt();
                let expect = (3.0f64 / 2.0).sqrt() * (r.sin().abs() / r).powf(1.5);
                assert_abs_diff_eq!(got, expect, epsilon = 1e-9 * expect);
            }
        }
    }

    #[test]
    fn main_term_series_tail_is_cauchy() {
        let m = model(2, 0.0, Potential::Zero);
        let t = 150.0;
        let q = KernelQuery::DiagonalVertex;
        let v10 = kernel_main_term(&m, t, &q, 10).unwrap();
        let v20 = kernel_main_term(&m, t, &q, 20).unwrap();
        let v40 = kernel_main_term(&m, t, &q, 40).unwrap();
        assert!((v20.value - v10.value).norm() <= v10.tail * 1.5);
        assert!((v40.value - v20.value).norm() <= v20.tail * 1.5);
        assert!(v40.tail < v10.tail);
    }

    #[test]
    fn free_line_closed_form_and_numeric() {
        for (t, v) in [(50.0, 0.0), (50.0, 0.3), (200.0, 0.1)] {
            let closed = free_line_kernel(t, v).unwrap();
            assert_abs_diff_eq!(closed.norm(), 1.0 / (4.0 * std::f64::consts::PI * t).sqrt(), epsilon = 1e-12);
            let numeric = free_line_kernel_numeric(t, v).unwrap();
            assert!(
                (closed - numeric).norm() < 1e-6,
                "t={t} v={v}: {:.3e}",
                (closed - numeric).norm()
            );
        }
        // modulus independent of v
        let a = free_line_kernel(50.0, 0.0).unwrap().norm();
        let b = free_line_kernel(50.0, 1.7).unwrap().norm();
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
    }

    #[test]
    fn query_validation() {
        let m = model(2, 0.0, Potential::Zero);
        assert!(KernelQuery::SameEdge { x: -0.1, y: 0.0 }.validate(1.0).is_err());
        assert!(KernelQuery::DistinctEdges { k: 1, x: 0.0, y: 0.0 }.validate(1.0).is_err());
        assert!(kernel_numeric(&m, 1.0, &KernelQuery::DiagonalVertex, 0).is_err());
    }

    #[test]
    fn peak_times_inside_window() {
        let m = model(2, 0.0, Potential::Zero);
        let ts = peak_times(&m, 50.0, 800.0, 10).unwrap();
        assert!(ts.len() >= 8);
        for t in &ts {
            assert!((50.0..=800.0 + 1e-9).contains(t));
        }
    }
}
