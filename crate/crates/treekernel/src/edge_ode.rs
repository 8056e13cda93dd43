//! Transfer quantities on one metric edge of the quantum tree.
//!
//! For the eigenproblem  -psi'' + W psi = lambda psi  on [0, L] we track the
//! basis solutions C (cosine-like, C(0)=1, C'(0)=0) and S (sine-like, S(0)=0,
//! S'(0)=1), their first and second lambda-derivatives via the variational
//! systems, the discriminant-like  w(lambda) = (q+1) c(lambda) + alpha
//! s(lambda)  with c = C(L), s = S(L), and a truncated iterated-integral
//! series for s and c that serves as an independent oracle for the ODE path.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::ode;
use crate::potential::Potential;
use crate::quad::gauss_legendre;
use crate::specfun::TreeDegree;

/// Equilateral quantum tree model: branching q, edge length L, delta
/// coupling alpha at every vertex, and the same potential W on every edge.
pub struct QuantumTreeModel {
    degree: TreeDegree,
    length: f64,
    alpha: f64,
    potential: Potential,
    edge_symmetric: bool,
    endpoint_cache: RwLock<HashMap<u64, EdgeEndpoints>>,
    pub(crate) dirichlet_cache: RwLock<Vec<f64>>,
    pub(crate) band_cache: RwLock<Vec<crate::bands::Band>>,
    pub(crate) proxy_cache: RwLock<HashMap<crate::quantum::ProxyKey, Arc<crate::quantum::BandProxy>>>,
}

/// Endpoint data of the edge solutions at one lambda.
#[derive(Debug, Clone, Copy)]
pub struct EdgeEndpoints {
    pub c: f64,
    pub cp: f64,
    pub s: f64,
    pub sp: f64,
    pub dc: f64,
    pub ds: f64,
    pub d2c: f64,
    pub d2s: f64,
}

/// Edge solutions sampled on a grid: values, x-derivatives, and the first two
/// lambda-derivatives of C and S.
#[derive(Debug, Clone)]
pub struct EdgeSolutionTable {
    pub lambda: f64,
    pub x_grid: Vec<f64>,
    pub c: Vec<f64>,
    pub s: Vec<f64>,
    pub cp: Vec<f64>,
    pub sp: Vec<f64>,
    pub dc: Vec<f64>,
    pub ds: Vec<f64>,
    pub d2c: Vec<f64>,
    pub d2s: Vec<f64>,
}

/// Truncated series value with its analytic tail bound.
#[derive(Debug, Clone)]
pub struct VolterraSum {
    pub value: f64,
    pub tail_bound: f64,
    /// individual correction terms S_1..S_K (or the c-series analogues)
    pub terms: Vec<f64>,
}

// State layout for the edge system (12 components):
// [C, C', S, S', dC, dC', dS, dS', d2C, d2C', d2S, d2S']
const DIM: usize = 12;

impl QuantumTreeModel {
    pub fn new(degree: TreeDegree, length: f64, alpha: f64, potential: Potential) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Config(format!("edge length must be positive, got {length}")));
        }
        if !alpha.is_finite() {
            return Err(Error::Config("coupling constant must be finite".into()));
        }
        let edge_symmetric = potential.is_edge_symmetric(length, 1e-10);
        Ok(QuantumTreeModel {
            degree,
            length,
            alpha,
            potential,
            edge_symmetric,
            endpoint_cache: RwLock::new(HashMap::new()),
            dirichlet_cache: RwLock::new(Vec::new()),
            band_cache: RwLock::new(Vec::new()),
            proxy_cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn degree(&self) -> TreeDegree {
        self.degree
    }
    pub fn q(&self) -> f64 {
        self.degree.q()
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn potential(&self) -> &Potential {
        &self.potential
    }
    /// Whether W satisfies W(L-x) = W(x); non-symmetric tables are accepted
    /// but flagged, and the C(L) = S'(L) identity no longer holds.
    pub fn is_edge_symmetric(&self) -> bool {
        self.edge_symmetric
    }
    pub fn potential_sup_norm(&self) -> f64 {
        self.potential.sup_norm(self.length)
    }

    fn w_at(&self, x: f64) -> f64 {
        self.potential.eval(x, self.length)
    }

    /// Full 12-component right-hand side of the edge + variational systems.
    fn rhs(&self, lambda: f64) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
        move |x, y, dy| {
            let v = self.w_at(x) - lambda;
            // C, S
            dy[0] = y[1];
            dy[1] = v * y[0];
            dy[2] = y[3];
            dy[3] = v * y[2];
            // dC, dS: -u'' + (W - lambda) u = y  =>  u'' = (W - lambda) u - y
            dy[4] = y[5];
            dy[5] = v * y[4] - y[0];
            dy[6] = y[7];
            dy[7] = v * y[6] - y[2];
            // d2C, d2S: forcing 2 * (first derivative)
            dy[8] = y[9];
            dy[9] = v * y[8] - 2.0 * y[4];
            dy[10] = y[11];
            dy[11] = v * y[10] - 2.0 * y[6];
        }
    }

    /// Stops = requested xs merged with potential breakpoints (breakpoints
    /// are integrated through but not reported).
    fn integrate_edge(&self, lambda: f64, xs: &[f64], atol: f64) -> Result<Vec<(f64, [f64; DIM])>> {
        let mut stops: Vec<f64> = xs.to_vec();
        stops.extend(self.potential.breakpoints(self.length));
        stops.retain(|x| *x > 0.0);
        stops.sort_by(|a, b| a.partial_cmp(b).unwrap());
        stops.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

        let mut y0 = [0.0; DIM];
        y0[0] = 1.0; // C(0) = 1
        y0[3] = 1.0; // S'(0) = 1
        let f = self.rhs(lambda);
        let mut out = Vec::with_capacity(xs.len());
        let wanted: Vec<f64> = xs.to_vec();
        ode::integrate_through(&f, 0.0, &y0, &stops, atol, |x, y| {
            if wanted.iter().any(|w| (w - x).abs() < 1e-14) {
                let mut arr = [0.0; DIM];
                arr.copy_from_slice(y);
                out.push((x, arr));
            }
        })?;
        // x = 0 may be requested directly
        let mut res = Vec::with_capacity(xs.len());
        for &x in xs {
            if x <= 0.0 {
                res.push((0.0, y0));
            } else {
                let found = out
                    .iter()
                    .find(|(ox, _)| (ox - x).abs() < 1e-14)
                    .ok_or_else(|| Error::Convergence(format!("missing output point {x}")))?;
                res.push(*found);
            }
        }
        Ok(res)
    }

    /// Endpoint values of all tracked quantities at lambda (cached).
    pub fn endpoints(&self, lambda: f64) -> Result<EdgeEndpoints> {
        let key = lambda.to_bits();
        if let Some(hit) = self.endpoint_cache.read().unwrap().get(&key) {
            return Ok(*hit);
        }
        let states = self.integrate_edge(lambda, &[self.length], 1e-13)?;
        let y = states[0].1;
        let wronskian = y[0] * y[3] - y[1] * y[2];
        if (wronskian - 1.0).abs() > 1e-10 {
            return Err(Error::Invariant(format!(
                "Wronskian drifted to {wronskian:.14} at lambda = {lambda}"
            )));
        }
        let ep = EdgeEndpoints {
            c: y[0],
            cp: y[1],
            s: y[2],
            sp: y[3],
            dc: y[4],
            ds: y[6],
            d2c: y[8],
            d2s: y[10],
        };
        self.endpoint_cache.write().unwrap().insert(key, ep);
        Ok(ep)
    }

    /// Fast path: S_lambda at the given positions (2-component integration).
    pub fn s_values_at(&self, lambda: f64, xs: &[f64]) -> Result<Vec<f64>> {
        let mut stops: Vec<f64> = xs.iter().copied().filter(|x| *x > 0.0).collect();
        stops.extend(self.potential.breakpoints(self.length));
        stops.sort_by(|a, b| a.partial_cmp(b).unwrap());
        stops.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let f = move |x: f64, y: &[f64], dy: &mut [f64]| {
            let v = self.w_at(x) - lambda;
            dy[0] = y[1];
            dy[1] = v * y[0];
        };
        let mut table: Vec<(f64, f64)> = Vec::new();
        ode::integrate_through(&f, 0.0, &[0.0, 1.0], &stops, 1e-13, |x, y| {
            table.push((x, y[0]));
        })?;
        xs.iter()
            .map(|&x| {
                if x <= 0.0 {
                    return Ok(0.0);
                }
                table
                    .iter()
                    .find(|(ox, _)| (ox - x).abs() < 1e-14)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| Error::Convergence(format!("missing output point {x}")))
            })
            .collect()
    }
}

/// Solve the edge problem at lambda on a uniform grid with `grid_size`
/// panels, returning all tracked solution data.
pub fn solve_edge(model: &QuantumTreeModel, lambda: f64, grid_size: usize) -> Result<EdgeSolutionTable> {
    if grid_size < 16 {
        return Err(Error::Config("grid_size must be at least 16".into()));
    }
    let length = model.length();
    let xs: Vec<f64> = (0..=grid_size).map(|i| length * i as f64 / grid_size as f64).collect();
    let states = model.integrate_edge(lambda, &xs, 1e-13)?;
    for (x, y) in &states {
        let wronskian = y[0] * y[3] - y[1] * y[2];
        if (wronskian - 1.0).abs() > 1e-10 {
            return Err(Error::Invariant(format!(
                "Wronskian drifted to {wronskian:.14} at x = {x}, lambda = {lambda}"
            )));
        }
    }
    let pick = |idx: usize| -> Vec<f64> { states.iter().map(|(_, y)| y[idx]).collect() };
    Ok(EdgeSolutionTable {
        lambda,
        x_grid: xs,
        c: pick(0),
        cp: pick(1),
        s: pick(2),
        sp: pick(3),
        dc: pick(4),
        ds: pick(6),
        d2c: pick(8),
        d2s: pick(10),
    })
}

/// w, w' or w'' at lambda: w = (q+1) c + alpha s and its lambda-derivatives.
pub fn w_eval(model: &QuantumTreeModel, lambda: f64, order: u8) -> Result<f64> {
    let ep = model.endpoints(lambda)?;
    let qp1 = model.q() + 1.0;
    Ok(match order {
        0 => qp1 * ep.c + model.alpha() * ep.s,
        1 => qp1 * ep.dc + model.alpha() * ep.ds,
        2 => qp1 * ep.d2c + model.alpha() * ep.d2s,
        _ => return Err(Error::Config("w_eval order must be 0, 1 or 2".into())),
    })
}

/// cos(sqrt(lambda) x), continued to cosh for lambda < 0.
pub(crate) fn basis_cos(lambda: f64, x: f64) -> f64 {
    let z = lambda * x * x;
    if z.abs() < 1e-4 {
        // cos(sqrt(z)) = 1 - z/2 + z^2/24 - z^3/720
        1.0 - z / 2.0 + z * z / 24.0 - z * z * z / 720.0
    } else if lambda > 0.0 {
        (lambda.sqrt() * x).cos()
    } else {
        ((-lambda).sqrt() * x).cosh()
    }
}

/// sin(sqrt(lambda) x)/sqrt(lambda), continued through lambda = 0 (-> x).
pub(crate) fn basis_sinc(lambda: f64, x: f64) -> f64 {
    let z = lambda * x * x;
    if z.abs() < 1e-4 {
        x * (1.0 - z / 6.0 + z * z / 120.0 - z * z * z / 5040.0)
    } else if lambda > 0.0 {
        let r = lambda.sqrt();
        (r * x).sin() / r
    } else {
        let r = (-lambda).sqrt();
        (r * x).sinh() / r
    }
}

/// Iterated-integral series engine over the ordered simplex, shared by the
/// s- and c-series. Each term
///   u_{k+1}(x) = int_0^x sinc(lambda, x-t) W(t) u_k(t) dt
/// is evaluated on a composite Gauss grid; the kernel is split as
/// sinc(x-t) = sinc(x) cos(t) - cos(x) sinc(t) so prefix sums over complete
/// panels plus one partial-panel integral (with barycentric interpolation of
/// u_k inside the panel) give every node value in one sweep.
struct SimplexSeries<'m> {
    model: &'m QuantumTreeModel,
    lambda: f64,
    /// panel boundaries 0 = e_0 < ... < e_P = L
    edges: Vec<f64>,
    /// reference Gauss nodes/weights on [-1, 1] and barycentric weights
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
    bary: Vec<f64>,
    /// all physical nodes, panel-major
    nodes: Vec<f64>,
}

impl<'m> SimplexSeries<'m> {
    fn new(model: &'m QuantumTreeModel, lambda: f64) -> Self {
        let length = model.length();
        let osc = lambda.max(0.0).sqrt() * length;
        let panels = ((0.8 * osc).ceil() as usize).max(8);
        let g = 12;
        let (ref_nodes, ref_weights) = gauss_legendre(g);
        let mut bary = vec![1.0; g];
        for i in 0..g {
            for j in 0..g {
                if i != j {
                    bary[i] /= ref_nodes[i] - ref_nodes[j];
                }
            }
        }
        let mut edges: Vec<f64> = (0..=panels).map(|i| length * i as f64 / panels as f64).collect();
        // split panels at potential discontinuities
        for bp in model.potential.breakpoints(length) {
            if !edges.iter().any(|e| (e - bp).abs() < 1e-12) {
                edges.push(bp);
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut nodes = Vec::with_capacity((edges.len() - 1) * g);
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            for &xi in &ref_nodes {
                nodes.push(0.5 * (a + b) + 0.5 * (b - a) * xi);
            }
        }
        SimplexSeries { model, lambda, edges, ref_nodes, ref_weights, bary, nodes }
    }

    /// Apply the Volterra kernel once: out(x) = int_0^x sinc(x-t) W(t) u(t) dt
    /// for x at every node, plus the value at L.
    fn apply(&self, u: &[f64]) -> (Vec<f64>, f64) {
        let lam = self.lambda;
        let g = self.ref_nodes.len();
        let npanels = self.edges.len() - 1;
        // integrand factors at nodes
        let h: Vec<f64> = self
            .nodes
            .iter()
            .zip(u)
            .map(|(&x, &ux)| self.model.w_at(x) * ux)
            .collect();
        // complete-panel integrals of cos*h and sinc*h
        let mut panel_cos = vec![0.0; npanels];
        let mut panel_sin = vec![0.0; npanels];
        for p in 0..npanels {
            let half = 0.5 * (self.edges[p + 1] - self.edges[p]);
            let mut ac = 0.0;
            let mut as_ = 0.0;
            for i in 0..g {
                let x = self.nodes[p * g + i];
                let w = self.ref_weights[i] * half;
                ac += w * basis_cos(lam, x) * h[p * g + i];
                as_ += w * basis_sinc(lam, x) * h[p * g + i];
            }
            panel_cos[p] = ac;
            panel_sin[p] = as_;
        }
        // prefix sums
        let mut pre_cos = vec![0.0; npanels + 1];
        let mut pre_sin = vec![0.0; npanels + 1];
        for p in 0..npanels {
            pre_cos[p + 1] = pre_cos[p] + panel_cos[p];
            pre_sin[p + 1] = pre_sin[p] + panel_sin[p];
        }
        let mut out = vec![0.0; self.nodes.len()];
        for p in 0..npanels {
            let a = self.edges[p];
            let b = self.edges[p + 1];
            for i in 0..g {
                let x = self.nodes[p * g + i];
                // partial integral over [a, x] with u interpolated inside panel p
                let half = 0.5 * (x - a);
                let mid = 0.5 * (x + a);
                let mut ac = 0.0;
                let mut as_ = 0.0;
                for j in 0..g {
                    let tx = mid + half * self.ref_nodes[j];
                    let uj = self.interp_panel(u, p, a, b, tx);
                    let wj = self.ref_weights[j] * half;
                    let hj = self.model.w_at(tx) * uj;
                    ac += wj * basis_cos(lam, tx) * hj;
                    as_ += wj * basis_sinc(lam, tx) * hj;
                }
                let total_cos = pre_cos[p] + ac;
                let total_sin = pre_sin[p] + as_;
                out[p * g + i] = basis_sinc(lam, x) * total_cos - basis_cos(lam, x) * total_sin;
            }
        }
        let l = *self.edges.last().unwrap();
        let out_l = basis_sinc(lam, l) * pre_cos[npanels] - basis_cos(lam, l) * pre_sin[npanels];
        (out, out_l)
    }

    /// Barycentric interpolation of u within panel p at physical point tx.
    fn interp_panel(&self, u: &[f64], p: usize, a: f64, b: f64, tx: f64) -> f64 {
        let g = self.ref_nodes.len();
        let xi = (2.0 * tx - (a + b)) / (b - a);
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..g {
            let d = xi - self.ref_nodes[j];
            if d.abs() < 1e-14 {
                return u[p * g + j];
            }
            let t = self.bary[j] / d;
            num += t * u[p * g + j];
            den += t;
        }
        num / den
    }

    fn run(&self, cosine_seed: bool, k_max: usize) -> (f64, Vec<f64>) {
        let lam = self.lambda;
        let mut u: Vec<f64> = self
            .nodes
            .iter()
            .map(|&x| if cosine_seed { basis_cos(lam, x) } else { basis_sinc(lam, x) })
            .collect();
        let l = *self.edges.last().unwrap();
        let u_l = if cosine_seed { basis_cos(lam, l) } else { basis_sinc(lam, l) };
        let mut total = u_l;
        let mut terms = Vec::with_capacity(k_max);
        for _ in 0..k_max {
            let (nu, nl) = self.apply(&u);
            u = nu;
            terms.push(nl);
            total += nl;
        }
        (total, terms)
    }
}

fn volterra_tail(sup_w: f64, length: f64, lambda: f64, k_max: usize, c_series: bool) -> f64 {
    // s-series term bound b_k = ||W||^k L^k / (lambda^{(k+1)/2} k!);
    // the c-series carries one factor lambda^{-1/2} less.
    let ratio = sup_w * length / lambda.sqrt(); // b_{k+1}/b_k = ratio/(k+1)
    let mut b = if c_series { 1.0 } else { 1.0 / lambda.sqrt() }; // b_0
    for k in 1..=k_max + 1 {
        b *= ratio / k as f64;
    }
    let mut tail = 0.0;
    let mut k = k_max + 1;
    loop {
        tail += b;
        k += 1;
        b *= ratio / k as f64;
        if b <= tail * 1e-18 + 1e-300 || k > k_max + 300 {
            break;
        }
    }
    tail
}

/// Truncated series for s(lambda) = S_lambda(L):
/// sin(sqrt(lambda) L)/sqrt(lambda) + sum_{k<=K} S_k(lambda), with the
/// analytic bound on the dropped tail.
pub fn volterra_s(model: &QuantumTreeModel, lambda: f64, k_max: usize) -> Result<VolterraSum> {
    if lambda <= 0.0 {
        return Err(Error::Domain("volterra series requires lambda > 0".into()));
    }
    let eng = SimplexSeries::new(model, lambda);
    let (value, terms) = eng.run(false, k_max);
    let tail = volterra_tail(model.potential_sup_norm(), model.length(), lambda, k_max, false);
    Ok(VolterraSum { value, tail_bound: tail, terms })
}

/// Truncated series for c(lambda) = C_lambda(L).
pub fn volterra_c(model: &QuantumTreeModel, lambda: f64, k_max: usize) -> Result<VolterraSum> {
    if lambda <= 0.0 {
        return Err(Error::Domain("volterra series requires lambda > 0".into()));
    }
    let eng = SimplexSeries::new(model, lambda);
    let (value, terms) = eng.run(true, k_max);
    let tail = volterra_tail(model.potential_sup_norm(), model.length(), lambda, k_max, true);
    Ok(VolterraSum { value, tail_bound: tail, terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn model(q: u32, alpha: f64, w: Potential) -> QuantumTreeModel {
        QuantumTreeModel::new(TreeDegree::new(q).unwrap(), 1.0, alpha, w).unwrap()
    }

    #[test]
    fn free_edge_closed_forms() {
        let m = model(2, 0.0, Potential::Zero);
        for &lam in &[0.25, 2.0, 60.0, 250.0] {
            let t = solve_edge(&m, lam, 48).unwrap();
            let r = lam.sqrt();
            for (i, &x) in t.x_grid.iter().enumerate() {
                assert_abs_diff_eq!(t.c[i], (r * x).cos(), epsilon = 1e-11);
                assert_abs_diff_eq!(t.s[i], (r * x).sin() / r, epsilon = 1e-11);
                assert_abs_diff_eq!(t.cp[i], -r * (r * x).sin(), epsilon = 1e-9);
                assert_abs_diff_eq!(t.sp[i], (r * x).cos(), epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn free_edge_negative_and_zero_lambda() {
        let m = model(2, 0.0, Potential::Zero);
        let t = solve_edge(&m, -9.0, 16).unwrap();
        let last = t.x_grid.len() - 1;
        assert_abs_diff_eq!(t.c[last], 3.0f64.cosh(), epsilon = 1e-10);
        assert_abs_diff_eq!(t.s[last], 3.0f64.sinh() / 3.0, epsilon = 1e-10);
        let t0 = solve_edge(&m, 0.0, 16).unwrap();
        assert_abs_diff_eq!(t0.s[last], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t0.c[last], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn wronskian_is_one_on_grid() {
        let m = model(2, 0.5, Potential::Cosine { amplitude: 0.8 });
        for &lam in &[-3.0, 1.5, 30.0, 400.0] {
            let t = solve_edge(&m, lam, 32).unwrap();
            for i in 0..t.x_grid.len() {
                let wr = t.c[i] * t.sp[i] - t.cp[i] * t.s[i];
                assert_abs_diff_eq!(wr, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn lambda_derivatives_match_finite_differences() {
        let m = model(2, 0.0, Potential::Cosine { amplitude: 1.0 });
        for &lam in &[5.0, 30.0, 120.0] {
            let ep = m.endpoints(lam).unwrap();
            let h = 1e-5;
            let plus = m.endpoints(lam + h).unwrap();
            let minus = m.endpoints(lam - h).unwrap();
            let fd_ds = (plus.s - minus.s) / (2.0 * h);
            assert_abs_diff_eq!(ep.ds, fd_ds, epsilon = 1e-6 * ep.ds.abs().max(1e-4));
            let fd_dc = (plus.c - minus.c) / (2.0 * h);
            assert_abs_diff_eq!(ep.dc, fd_dc, epsilon = 1e-6 * ep.dc.abs().max(1e-4));
            let fd_d2s = (plus.ds - minus.ds) / (2.0 * h);
            assert_abs_diff_eq!(ep.d2s, fd_d2s, epsilon = 1e-4 * ep.d2s.abs().max(1e-3));
        }
    }

    #[test]
    fn zero_potential_free_solutions_in_w() {
        // W = 0, alpha = 0: w = (q+1) cos(sqrt(lambda) L), and the derivative
        // formula -L (q+1) sin(sqrt(lambda) L) / (2 sqrt(lambda)) is exact.
        let m = model(2, 0.0, Potential::Zero);
        for &lam in &[2.0f64, 19.0, 77.0] {
            let r = lam.sqrt();
            assert_abs_diff_eq!(w_eval(&m, lam, 0).unwrap(), 3.0 * r.cos(), epsilon = 1e-11);
            assert_abs_diff_eq!(
                w_eval(&m, lam, 1).unwrap(),
                -3.0 * r.sin() / (2.0 * r),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn symmetric_potential_edge_identity() {
        // W(L-x) = W(x) forces C(L) = S'(L).
        let m = model(3, 0.7, Potential::Cosine { amplitude: 1.3 });
        assert!(m.is_edge_symmetric());
        for &lam in &[4.0, 26.0, 150.0] {
            let ep = m.endpoints(lam).unwrap();
            assert_abs_diff_eq!(ep.c, ep.sp, epsilon = 1e-9);
        }
    }

    #[test]
    fn non_symmetric_table_is_flagged() {
        let xs: Vec<f64> = (0..=32).map(|i| i as f64 / 32.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x).collect();
        let p = Potential::Table(crate::interp::CubicSpline::new(xs, ys).unwrap());
        let m = model(2, 0.0, p);
        assert!(!m.is_edge_symmetric());
    }

    #[test]
    fn s_values_fast_path_agrees_with_full_solve() {
        let m = model(2, 0.0, Potential::Cosine { amplitude: 0.5 });
        let lam = 33.0;
        let xs = [0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0];
        let fast = m.s_values_at(lam, &xs).unwrap();
        let states = m.integrate_edge(lam, &xs, 1e-13).unwrap();
        for (i, (_, y)) in states.iter().enumerate() {
            assert_abs_diff_eq!(fast[i], y[2], epsilon = 1e-11);
        }
    }

    #[test]
    fn volterra_zero_potential_is_exact() {
        let m = model(2, 0.0, Potential::Zero);
        for k in [0usize, 3, 8] {
            let v = volterra_s(&m, 25.0, k).unwrap();
            assert_abs_diff_eq!(v.value, 5.0f64.sin() / 5.0, epsilon = 1e-13);
            assert!(v.terms.iter().all(|t| t.abs() < 1e-15));
            let c = volterra_c(&m, 25.0, k).unwrap();
            assert_abs_diff_eq!(c.value, 5.0f64.cos(), epsilon = 1e-13);
        }
    }

    #[test]
    fn volterra_terms_obey_paper_bound() {
        let m = model(2, 0.0, Potential::Cosine { amplitude: 1.0 });
        for &lam in &[10.0, 25.0] {
            let v = volterra_s(&m, lam, 8).unwrap();
            for (k0, term) in v.terms.iter().enumerate() {
                let k = k0 + 1;
                let mut fact = 1.0;
                for j in 1..=k {
                    fact *= j as f64;
                }
                let bound = 1.0 / (lam.powf((k as f64 + 1.0) / 2.0) * fact);
                assert!(
                    term.abs() <= bound * (1.0 + 1e-9),
                    "lam={lam} k={k}: {term:.3e} vs {bound:.3e}"
                );
            }
        }
    }

    #[test]
    fn volterra_cross_validates_ode_solution() {
        let m = model(2, 0.0, Potential::Cosine { amplitude: 1.0 });
        for &lam in &[10.0, 25.0, 100.0] {
            for &k in &[4usize, 8] {
                let v = volterra_s(&m, lam, k).unwrap();
                let s_ode = m.endpoints(lam).unwrap().s;
                let diff = (v.value - s_ode).abs();
                // 2e-12 covers the documented 1e-12 solver tolerance; the
                // analytic tail at lambda = 100, K = 8 is far below it.
                assert!(
                    diff <= v.tail_bound + 2e-12,
                    "lam={lam} K={k}: diff {diff:.3e} tail {:.3e}",
                    v.tail_bound
                );
            }
        }
    }

    #[test]
    fn large_lambda_free_asymptotics_slope() {
        // s(lambda) - sin(sqrt(lambda) L)/sqrt(lambda) = O(1/lambda)
        let m = model(2, 0.0, Potential::Cosine { amplitude: 1.0 });
        let mut pts = Vec::new();
        for j in 1..=4 {
            let lam = 10.0f64.powi(j);
            let s = m.endpoints(lam).unwrap().s;
            let free = lam.sqrt().sin() / lam.sqrt();
            let dev = (s - free).abs().max(1e-300);
            pts.push((lam.ln(), dev.ln()));
        }
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(slope <= -1.0 + 0.15, "slope {slope}");
    }

    #[test]
    fn model_is_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<QuantumTreeModel>();
        assert_send_sync::<EdgeSolutionTable>();
        // concurrent lookups against the write-once caches
        let m = std::sync::Arc::new(model(2, 0.0, Potential::Cosine { amplitude: 0.5 }));
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let m = m.clone();
                std::thread::spawn(move || {
                    let lam = 10.0 + i as f64;
                    m.endpoints(lam).unwrap().s
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(QuantumTreeModel::new(TreeDegree::new(2).unwrap(), 0.0, 0.0, Potential::Zero).is_err());
        assert!(QuantumTreeModel::new(TreeDegree::new(2).unwrap(), 1.0, f64::NAN, Potential::Zero).is_err());
        let m = model(2, 0.0, Potential::Zero);
        assert!(solve_edge(&m, 1.0, 8).is_err());
        assert!(volterra_s(&m, -1.0, 4).is_err());
    }

    #[test]
    fn well_potential_breakpoints_are_respected() {
        let m = model(2, 0.0, Potential::Well { depth: 5.0, width: 0.5 });
        // Piecewise-constant potential: inside the well the local wavenumber
        // is sqrt(lambda + 5). Check the Wronskian still holds to tolerance.
        let t = solve_edge(&m, 12.0, 32).unwrap();
        for i in 0..t.x_grid.len() {
            let wr = t.c[i] * t.sp[i] - t.cp[i] * t.s[i];
            assert_abs_diff_eq!(wr, 1.0, epsilon = 1e-9);
        }
    }
}
