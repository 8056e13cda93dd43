//! Edge potentials: builtins, tabulated data with spline interpolation, and
//! the text parsers behind `--potential`.

use crate::error::{Error, Result};
use crate::interp::CubicSpline;

/// Potential W on a single edge [0, L]. Builtins are edge-symmetric by
/// construction; tabulated potentials are checked at model construction.
#[derive(Debug, Clone)]
pub enum Potential {
    Zero,
    /// W(x) = amplitude * cos(2 pi x / L)
    Cosine { amplitude: f64 },
    /// W(x) = -depth on the centered window of the given width, 0 elsewhere
    Well { depth: f64, width: f64 },
    /// W(x) from a sampled table, cubic-spline interpolated
    Table(CubicSpline),
}

impl Potential {
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Cosine { amplitude } => {
                amplitude * (2.0 * std::f64::consts::PI * x / length).cos()
            }
            Potential::Well { depth, width } => {
                if (x - 0.5 * length).abs() < 0.5 * width {
                    -depth
                } else {
                    0.0
                }
            }
            Potential::Table(spline) => spline.eval(x),
        }
    }

    /// Sup-norm bound used by the series tail estimates.
    pub fn sup_norm(&self, length: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Cosine { amplitude } => amplitude.abs(),
            Potential::Well { depth, .. } => depth.abs(),
            Potential::Table(_) => {
                let mut m: f64 = 0.0;
                for i in 0..=512 {
                    m = m.max(self.eval(length * i as f64 / 512.0, length).abs());
                }
                1.05 * m
            }
        }
    }

    /// Interior discontinuities the ODE integrator must not step across.
    pub fn breakpoints(&self, length: f64) -> Vec<f64> {
        match self {
            Potential::Well { width, .. } => {
                let lo = 0.5 * (length - width);
                let hi = 0.5 * (length + width);
                [lo, hi]
                    .into_iter()
                    .filter(|x| *x > 0.0 && *x < length)
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    /// W(L - x) = W(x) within tol on a symmetric grid.
    pub fn is_edge_symmetric(&self, length: f64, tol: f64) -> bool {
        (0..=256).all(|i| {
            let x = length * i as f64 / 256.0;
            (self.eval(x, length) - self.eval(length - x, length)).abs() <= tol
        })
    }
}

/// Parse a potential spec: `zero`, `cosine:A`, `well:depth,width` or
/// `table:PATH` (two-column CSV `x,value` with a header row).
pub fn parse_potential(spec: &str) -> Result<Potential> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("zero") {
        return Ok(Potential::Zero);
    }
    if let Some(rest) = spec.strip_prefix("cosine:") {
        let amplitude: f64 = rest
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad cosine amplitude {rest:?}")))?;
        if !amplitude.is_finite() {
            return Err(Error::Config("cosine amplitude must be finite".into()));
        }
        return Ok(Potential::Cosine { amplitude });
    }
    if let Some(rest) = spec.strip_prefix("well:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Config(format!("well spec needs depth,width: {rest:?}")));
        }
        let depth: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad well depth {:?}", parts[0])))?;
        let width: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad well width {:?}", parts[1])))?;
        if !depth.is_finite() || !width.is_finite() || width <= 0.0 {
            return Err(Error::Config("well depth/width out of range".into()));
        }
        return Ok(Potential::Well { depth, width });
    }
    if let Some(path) = spec.strip_prefix("table:") {
        let text = std::fs::read_to_string(path.trim())
            .map_err(|e| Error::Config(format!("cannot read potential table {path:?}: {e}")))?;
        return parse_potential_table(&text);
    }
    Err(Error::Config(format!(
        "unknown potential spec {spec:?} (expected zero | cosine:A | well:depth,width | table:PATH)"
    )))
}

/// Parse the two-column `x,value` CSV body of a tabulated potential.
/// A header row is required; blank lines are ignored.
pub fn parse_potential_table(text: &str) -> Result<Potential> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty potential table".into()))?;
    if header.trim().parse::<f64>().is_ok()
        || header.split(',').next().unwrap_or("").trim().parse::<f64>().is_ok()
    {
        return Err(Error::Config("potential table must start with a header row".into()));
    }
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut cols = line.split(',');
        let (cx, cw) = (cols.next().unwrap_or(""), cols.next().unwrap_or(""));
        if cols.next().is_some() {
            return Err(Error::Config(format!("table row {} has more than 2 columns", i + 2)));
        }
        let x: f64 = cx
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad x value {cx:?} in table row {}", i + 2)))?;
        let w: f64 = cw
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad potential value {cw:?} in table row {}", i + 2)))?;
        if !x.is_finite() || !w.is_finite() {
            return Err(Error::Config(format!("non-finite entry in table row {}", i + 2)));
        }
        xs.push(x);
        ws.push(w);
    }
    let spline = CubicSpline::new(xs, ws)?;
    Ok(Potential::Table(spline))
}
