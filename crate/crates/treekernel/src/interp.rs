//! Interpolation machinery: Chebyshev interpolants (adaptive construction,
//! Clenshaw evaluation, differentiation, dense resampling) and a natural
//! cubic spline for tabulated potentials.

use crate::error::{Error, Result};

/// A Chebyshev series on [a, b]: f(x) = sum_k c_k T_k(u), u = scaled x.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    pub a: f64,
    pub b: f64,
    /// c[0] is the plain constant term (already halved relative to the DCT).
    pub coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolate f at n+1 Chebyshev-Lobatto points on [a, b].
    pub fn fit<F: FnMut(f64) -> f64>(a: f64, b: f64, n: usize, mut f: F) -> Self {
        assert!(n >= 2 && b > a);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let vals: Vec<f64> = (0..=n)
            .map(|j| f(mid + half * (j as f64 * std::f64::consts::PI / n as f64).cos()))
            .collect();
        let mut coeffs = vec![0.0; n + 1];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.5 * (vals[0] + if k % 2 == 0 { vals[n] } else { -vals[n] });
            for (j, v) in vals.iter().enumerate().take(n).skip(1) {
                acc += v * (k as f64 * j as f64 * std::f64::consts::PI / n as f64).cos();
            }
            *c = 2.0 * acc / n as f64;
        }
        coeffs[0] *= 0.5;
        coeffs[n] *= 0.5;
        Chebyshev { a, b, coeffs }
    }

    /// Adaptive fit: double the degree until the coefficient tail drops below
    /// tol * (series scale), then trim negligible trailing coefficients.
    pub fn fit_adaptive<F: Fn(f64) -> f64>(a: f64, b: f64, tol: f64, f: F) -> Result<Self> {
        let mut n = 32;
        loop {
            let ch = Chebyshev::fit(a, b, n, &f);
            let scale = ch.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let tail = ch.coeffs[n - 3..=n].iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if tail <= tol * scale.max(1e-300) {
                return Ok(ch.trimmed(tol));
            }
            if n >= 4096 {
                return Err(Error::Convergence(format!(
                    "chebyshev fit on [{a}, {b}] not resolved at degree {n}"
                )));
            }
            n *= 2;
        }
    }

    fn trimmed(mut self, tol: f64) -> Self {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut keep = self.coeffs.len();
        while keep > 3 && self.coeffs[keep - 1].abs() <= 0.5 * tol * scale.max(1e-300) {
            keep -= 1;
        }
        self.coeffs.truncate(keep);
        self
    }

    fn to_unit(&self, x: f64) -> f64 {
        (2.0 * x - (self.a + self.b)) / (self.b - self.a)
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let u = self.to_unit(x);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * u * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs[0] + u * b1 - b2
    }

    /// Series of the derivative df/dx.
    pub fn derivative(&self) -> Chebyshev {
        let n = self.coeffs.len();
        let mut d = vec![0.0; n.max(2)];
        if n >= 2 {
            let mut dk1 = 0.0; // d_{k+1}
            let mut dk2 = 0.0; // d_{k+2}
            for k in (1..n).rev() {
                let dk = dk2 + 2.0 * k as f64 * self.coeffs[k];
                d[k - 1] = dk;
                dk2 = dk1;
                dk1 = dk;
            }
            d[0] *= 0.5;
        }
        let scale = 2.0 / (self.b - self.a);
        for c in d.iter_mut() {
            *c *= scale;
        }
        d.truncate(n.max(2) - 1);
        Chebyshev { a: self.a, b: self.b, coeffs: d }
    }
}

/// Uniform-grid cubic Hermite resampling of a Chebyshev interpolant.
///
/// Evaluation is ~20 flops per call, which matters in the oscillatory
/// quadrature hot loop where the interpolant is hit millions of times.
#[derive(Debug, Clone)]
pub struct DenseTable {
    a: f64,
    inv_h: f64,
    h: f64,
    vals: Vec<f64>,
    ders: Vec<f64>,
}

impl DenseTable {
    pub fn from_chebyshev(ch: &Chebyshev, min_points: usize) -> Self {
        let n = (32 * ch.coeffs.len()).max(min_points).max(256);
        let h = (ch.b - ch.a) / n as f64;
        let d = ch.derivative();
        let vals: Vec<f64> = (0..=n).map(|i| ch.eval(ch.a + i as f64 * h)).collect();
        let ders: Vec<f64> = (0..=n).map(|i| d.eval(ch.a + i as f64 * h)).collect();
        DenseTable { a: ch.a, inv_h: 1.0 / h, h, vals, ders }
    }

    /// Like [`Self::from_chebyshev`] but doubles the grid until the cell
    /// midpoints deviate from the Chebyshev series by less than `abs_tol`.
    pub fn from_chebyshev_checked(ch: &Chebyshev, abs_tol: f64) -> Result<Self> {
        let mut min_points = 32 * ch.coeffs.len();
        for _ in 0..8 {
            let table = Self::from_chebyshev(ch, min_points);
            let n = table.vals.len() - 1;
            let worst = (0..n)
                .map(|i| {
                    let x = table.a + (i as f64 + 0.5) * table.h;
                    (table.eval(x) - ch.eval(x)).abs()
                })
                .fold(0.0f64, f64::max);
            if worst <= abs_tol {
                return Ok(table);
            }
            min_points = 2 * n;
        }
        Err(Error::Convergence(format!(
            "dense resampling could not reach {abs_tol:.1e}"
        )))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let s = (x - self.a) * self.inv_h;
        let i = (s as usize).min(self.vals.len() - 2);
        let u = s - i as f64;
        let (f0, f1) = (self.vals[i], self.vals[i + 1]);
        let (d0, d1) = (self.ders[i] * self.h, self.ders[i + 1] * self.h);
        let u2 = u * u;
        let u3 = u2 * u;
        f0 * (2.0 * u3 - 3.0 * u2 + 1.0)
            + d0 * (u3 - 2.0 * u2 + u)
            + f1 * (-2.0 * u3 + 3.0 * u2)
            + d1 * (u3 - u2)
    }
}

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>, // second derivatives at the knots
}

impl CubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 3 || ys.len() != n {
            return Err(Error::Config("spline needs at least 3 points".into()));
        }
        for w in xs.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config("spline abscissae must be strictly increasing".into()));
            }
        }
        // Thomas algorithm for the natural-spline tridiagonal system.
        let mut m = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        for i in 2..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let factor = h0 / diag[i - 1];
            diag[i] -= factor * upper[i - 1];
            rhs[i] -= factor * rhs[i - 1];
        }
        for i in (1..n - 1).rev() {
            let next = if i + 1 < n - 1 { m[i + 1] } else { 0.0 };
            m[i] = (rhs[i] - upper[i] * next) / diag[i];
        }
        Ok(CubicSpline { xs, ys, m })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn chebyshev_reproduces_oscillatory_function() {
        let ch = Chebyshev::fit_adaptive(0.0, 1.0, 1e-13, |x| (30.0 * x).sin() * (1.0 + x)).unwrap();
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            assert_abs_diff_eq!(ch.eval(x), (30.0 * x).sin() * (1.0 + x), epsilon = 1e-11);
        }
    }

    #[test]
    fn chebyshev_derivative_matches() {
        let ch = Chebyshev::fit_adaptive(-1.0, 2.0, 1e-13, |x| (x * x).exp() * x.cos()).unwrap();
        let d = ch.derivative();
        let exact = |x: f64| (x * x).exp() * (2.0 * x * x.cos() - x.sin());
        for i in 0..=30 {
            let x = -1.0 + 3.0 * i as f64 / 30.0;
            assert_abs_diff_eq!(d.eval(x), exact(x), epsilon = 1e-8 * exact(x).abs().max(1.0));
        }
    }

    #[test]
    fn dense_table_tracks_chebyshev() {
        let ch = Chebyshev::fit_adaptive(0.2, 4.0, 1e-13, |x| (8.0 * x).cos() / x).unwrap();
        let table = DenseTable::from_chebyshev_checked(&ch, 2e-10).unwrap();
        for i in 0..=997 {
            let x = 0.2 + 3.8 * i as f64 / 997.0;
            assert!((table.eval(x) - ch.eval(x)).abs() < 4e-10);
        }
    }

    #[test]
    fn spline_interpolates_smooth_data() {
        let xs: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (2.0 * std::f64::consts::PI * x).cos()).collect();
        let sp = CubicSpline::new(xs, ys).unwrap();
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            let exact = (2.0 * std::f64::consts::PI * x).cos();
            // natural end conditions leave an O(h^2) layer near the ends
            let tol = if (0.1..=0.9).contains(&x) { 5e-4 } else { 3e-2 };
            assert!((sp.eval(x) - exact).abs() < tol, "x={x}");
        }
    }

    #[test]
    fn spline_rejects_bad_input() {
        assert!(CubicSpline::new(vec![0.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(CubicSpline::new(vec![0.0, 1.0, 0.5], vec![0.0, 1.0, 2.0]).is_err());
    }
}
