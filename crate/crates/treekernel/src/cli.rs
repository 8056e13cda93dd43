//! Batch front end: resolved run configuration, task dispatch, table
//! output (CSV with provenance comments, or JSON), and the log-log decay
//! fitter used to verify the t^{-3/2} law.

use std::io::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bands::compute_bands;
use crate::discrete;
use crate::edge_ode::{w_eval, QuantumTreeModel};
use crate::error::{Error, Result};
use crate::potential::parse_potential;
use crate::quad::oscillatory_integral;
use crate::quantum::{self, KernelQuery};
use crate::specfun::TreeDegree;
use crate::stationary_phase::{endpoint_estimate, fresnel_problem, CriticalEnd, PhaseProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    DiscreteKernel,
    QuantumKernel,
    Bands,
    SpCheck,
    DecayFit,
    LineCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
}

/// Fully resolved run configuration; serialized into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub task: Task,
    pub q: u32,
    pub edge_length: f64,
    pub alpha: f64,
    pub potential: String,
    pub t_grid: Vec<f64>,
    pub query: String,
    pub distance: usize,
    pub n_bands: usize,
    pub problem: String,
    pub target: String,
    pub format: OutFormat,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: Task::Bands,
            q: 2,
            edge_length: 1.0,
            alpha: 0.0,
            potential: "zero".into(),
            t_grid: Vec::new(),
            query: "diag".into(),
            distance: 0,
            n_bands: 40,
            problem: "fresnel:1,1".into(),
            target: "discrete".into(),
            format: OutFormat::Csv,
            out: None,
        }
    }
}

/// Optional fields accepted from a TOML config file; command-line flags
/// override anything set here.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub q: Option<u32>,
    pub edge_length: Option<f64>,
    pub alpha: Option<f64>,
    pub potential: Option<String>,
    pub query: Option<String>,
    pub distance: Option<usize>,
    pub n_bands: Option<usize>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub t_count: Option<usize>,
    pub t_peaks: Option<bool>,
    pub problem: Option<String>,
    pub target: Option<String>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
}

pub fn parse_file_config(text: &str) -> Result<FileConfig> {
    toml::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
}

/// Parse a query spec: `diag`, `same-edge:x,y` or `edges:k,x,y`.
pub fn parse_query(spec: &str) -> Result<KernelQuery> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("diag") {
        return Ok(KernelQuery::DiagonalVertex);
    }
    if let Some(rest) = spec.strip_prefix("same-edge:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Config(format!("same-edge query needs x,y: {rest:?}")));
        }
        let x: f64 = parts[0].trim().parse().map_err(|_| Error::Config(format!("bad x {:?}", parts[0])))?;
        let y: f64 = parts[1].trim().parse().map_err(|_| Error::Config(format!("bad y {:?}", parts[1])))?;
        return Ok(KernelQuery::SameEdge { x, y });
    }
    if let Some(rest) = spec.strip_prefix("edges:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("edges query needs k,x,y: {rest:?}")));
        }
        let k: usize = parts[0].trim().parse().map_err(|_| Error::Config(format!("bad k {:?}", parts[0])))?;
        let x: f64 = parts[1].trim().parse().map_err(|_| Error::Config(format!("bad x {:?}", parts[1])))?;
        let y: f64 = parts[2].trim().parse().map_err(|_| Error::Config(format!("bad y {:?}", parts[2])))?;
        return Ok(KernelQuery::DistinctEdges { k, x, y });
    }
    Err(Error::Config(format!(
        "unknown query {spec:?} (expected diag | same-edge:x,y | edges:k,x,y)"
    )))
}

/// A result table: column names plus uniform rows. Numbers are kept as f64
/// until serialization so CSV and JSON carry identical content.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
    fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn config_json(config: &RunConfig) -> String {
    serde_json::to_string(config).unwrap_or_else(|_| "{}".into())
}

/// Render the table in the configured format, with library version and the
/// full resolved config embedded for provenance.
pub fn render(config: &RunConfig, table: &Table) -> String {
    match config.format {
        OutFormat::Csv => {
            let mut out = String::new();
            out.push_str(&format!("# treekernel {}\n", env!("CARGO_PKG_VERSION")));
            out.push_str(&format!("# config: {}\n", config_json(config)));
            out.push_str(&table.columns.join(","));
            out.push('\n');
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        OutFormat::Json => {
            // Row numbers are written with the same {:.17e} text as the CSV
            // cells, so the two formats carry bit-identical numeric content.
            let meta = serde_json::json!({
                "version": env!("CARGO_PKG_VERSION"),
                "config": serde_json::from_str::<serde_json::Value>(&config_json(config)).unwrap(),
            });
            let mut s = String::new();
            s.push_str("{\n");
            s.push_str(&format!("  \"_meta\": {},\n", serde_json::to_string(&meta).unwrap()));
            s.push_str(&format!(
                "  \"columns\": {},\n",
                serde_json::to_string(&table.columns).unwrap()
            ));
            s.push_str("  \"rows\": [\n");
            for (i, row) in table.rows.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
                let sep = if i + 1 == table.rows.len() { "" } else { "," };
                s.push_str(&format!("    [{}]{}\n", cells.join(", "), sep));
            }
            s.push_str("  ]\n}\n");
            s
        }
    }
}

fn validate_t_grid(config: &RunConfig, needs_positive: bool) -> Result<()> {
    if config.t_grid.is_empty() {
        return Err(Error::Config("empty time grid".into()));
    }
    for w in config.t_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Config("time grid must be strictly increasing".into()));
        }
    }
    if needs_positive && config.t_grid[0] <= 0.0 {
        return Err(Error::Config("asymptotic tasks need strictly positive times".into()));
    }
    Ok(())
}

fn build_model(config: &RunConfig) -> Result<QuantumTreeModel> {
    let deg = TreeDegree::new(config.q)?;
    let potential = parse_potential(&config.potential)?;
    let model = QuantumTreeModel::new(deg, config.edge_length, config.alpha, potential)?;
    if !model.is_edge_symmetric() {
        eprintln!("warning: potential is not edge-symmetric; asymptotics assume W(L-x) = W(x)");
    }
    Ok(model)
}

/// Least-squares line through (log t, log magnitude).
pub fn decay_fit(samples: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if samples.len() < 8 {
        return Err(Error::Config(format!(
            "decay fit needs at least 8 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|(t, m)| *t <= 0.0 || *m <= 0.0) {
        return Err(Error::Config("decay fit needs positive times and magnitudes".into()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|(t, m)| (t.ln(), m.ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-12 * n * sxx.max(1.0) {
        return Err(Error::Config("degenerate decay-fit input (all times equal)".into()));
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((slope, intercept, r2))
}

/// The tree-diagonal stationary-phase test problem: phase 2 sqrt(q) cos on
/// [0, pi/2] with the theta-space amplitude g, critical point at 0.
pub fn tree_diag_problem(deg: TreeDegree) -> PhaseProblem {
    let two_sq = deg.spectral_radius();
    let d = deg;
    PhaseProblem {
        p: Box::new(move |th| two_sq * th.cos()),
        dp: Box::new(move |th| -two_sq * th.sin()),
        d2p: Box::new(move |th| -two_sq * th.cos()),
        d3p: Box::new(move |th| two_sq * th.sin()),
        amp: Box::new(move |th| discrete::theta_amplitude(d, th)),
        damp: Box::new(move |th| {
            // analytic derivative is long; a tight central difference is
            // enough for the single q'(c) entry of the bound
            let h = 1e-6;
            (discrete::theta_amplitude(d, th + h) - discrete::theta_amplitude(d, th - h))
                / (2.0 * h)
        }),
        a: 0.0,
        b: std::f64::consts::FRAC_PI_2,
        critical_end: CriticalEnd::Left,
    }
}

fn parse_sp_problem(spec: &str, deg: TreeDegree) -> Result<(PhaseProblem, f64, f64)> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("fresnel:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Config(format!("fresnel problem needs alpha,A: {rest:?}")));
        }
        let alpha: f64 = parts[0].trim().parse().map_err(|_| Error::Config("bad alpha".into()))?;
        let a_cut: f64 = parts[1].trim().parse().map_err(|_| Error::Config("bad cutoff".into()))?;
        if alpha == 0.0 || !alpha.is_finite() || !(a_cut > 0.0) {
            return Err(Error::Config("fresnel problem needs alpha != 0, A > 0".into()));
        }
        Ok((fresnel_problem(alpha, a_cut), alpha, a_cut))
    } else if spec.eq_ignore_ascii_case("tree-diag") {
        Ok((tree_diag_problem(deg), 0.0, 0.0))
    } else {
        Err(Error::Config(format!(
            "unknown sp problem {spec:?} (expected fresnel:alpha,A | tree-diag)"
        )))
    }
}

fn task_discrete(config: &RunConfig) -> Result<Table> {
    validate_t_grid(config, true)?;
    let deg = TreeDegree::new(config.q)?;
    let mut table = Table::new(&["t", "n", "re", "im", "abs", "main_re", "main_im", "residual"]);
    for &t in &config.t_grid {
        let k = discrete::kernel_numeric(t, config.distance, deg)?;
        let m = discrete::kernel_main_term(t, config.distance, deg)?;
        table.push(vec![
            t,
            config.distance as f64,
            k.re,
            k.im,
            k.norm(),
            m.re,
            m.im,
            (k - m).norm(),
        ]);
    }
    Ok(table)
}

fn task_quantum(config: &RunConfig) -> Result<Table> {
    validate_t_grid(config, true)?;
    let model = build_model(config)?;
    let query = parse_query(&config.query)?;
    let mut table = Table::new(&[
        "t", "re", "im", "abs", "main_re", "main_im", "residual", "tail_bound",
    ]);
    for &t in &config.t_grid {
        let k = quantum::kernel_numeric(&model, t, &query, config.n_bands)?;
        let m = quantum::kernel_main_term(&model, t, &query, config.n_bands)?;
        if k.tail.is_finite() && k.tail > 1e-3 * k.value.norm() {
            eprintln!(
                "warning: t = {t}: band-truncation tail {:.2e} above 1e-3 of |kernel| {:.2e}",
                k.tail,
                k.value.norm()
            );
        }
        table.push(vec![
            t,
            k.value.re,
            k.value.im,
            k.value.norm(),
            m.value.re,
            m.value.im,
            (k.value - m.value).norm(),
            m.tail,
        ]);
    }
    Ok(table)
}

fn task_bands(config: &RunConfig) -> Result<Table> {
    let model = build_model(config)?;
    let bands = compute_bands(&model, config.n_bands)?;
    let mut table =
        Table::new(&["n", "a_n", "b_n", "delta_n", "w_sign", "dw_a", "dw_b"]);
    for band in &bands {
        table.push(vec![
            band.index as f64,
            band.a,
            band.b,
            band.dirichlet_above,
            band.w_sign,
            w_eval(&model, band.a, 1)?,
            w_eval(&model, band.b, 1)?,
        ]);
    }
    Ok(table)
}

fn task_sp_check(config: &RunConfig) -> Result<Table> {
    validate_t_grid(config, true)?;
    let deg = TreeDegree::new(config.q)?;
    let (prob, _, _) = parse_sp_problem(&config.problem, deg)?;
    let mut table = Table::new(&[
        "t", "numeric_re", "numeric_im", "main_re", "main_im", "err", "bound", "bound_satisfied",
    ]);
    for &t in &config.t_grid {
        let est = endpoint_estimate(&prob, t)?;
        let truth = oscillatory_integral(prob.a, prob.b, t, |x| (prob.p)(x), |x| (prob.amp)(x), 24.0, 1e-11)?;
        let err = (truth - est.main).norm();
        table.push(vec![
            t,
            truth.re,
            truth.im,
            est.main.re,
            est.main.im,
            err,
            est.bound,
            if err <= est.bound { 1.0 } else { 0.0 },
        ]);
    }
    Ok(table)
}

fn task_decay_fit(config: &RunConfig) -> Result<Table> {
    validate_t_grid(config, true)?;
    let samples: Vec<(f64, f64)> = match config.target.as_str() {
        "discrete" => {
            let deg = TreeDegree::new(config.q)?;
            config
                .t_grid
                .iter()
                .map(|&t| Ok((t, discrete::kernel_numeric(t, config.distance, deg)?.norm())))
                .collect::<Result<_>>()?
        }
        "quantum" => {
            let model = build_model(config)?;
            let query = parse_query(&config.query)?;
            config
                .t_grid
                .iter()
                .map(|&t| {
                    Ok((t, quantum::kernel_numeric(&model, t, &query, config.n_bands)?.value.norm()))
                })
                .collect::<Result<_>>()?
        }
        "line" => config
            .t_grid
            .iter()
            .map(|&t| Ok((t, discrete::line_kernel(t, config.distance as i32)?.norm())))
            .collect::<Result<_>>()?,
        other => {
            return Err(Error::Config(format!(
                "unknown decay-fit target {other:?} (expected discrete | quantum | line)"
            )))
        }
    };
    let (slope, intercept, r2) = decay_fit(&samples)?;
    let mut table = Table::new(&[
        "t", "magnitude", "fit_residual", "slope", "intercept", "r_squared",
    ]);
    for (t, m) in &samples {
        let resid = m.ln() - (slope * t.ln() + intercept);
        table.push(vec![*t, *m, resid, slope, intercept, r2]);
    }
    Ok(table)
}

fn task_line_check(config: &RunConfig) -> Result<Table> {
    validate_t_grid(config, true)?;
    let mut table = Table::new(&["t", "n", "re", "im", "abs", "envelope"]);
    for &t in &config.t_grid {
        let k = discrete::line_kernel(t, config.distance as i32)?;
        table.push(vec![
            t,
            config.distance as f64,
            k.re,
            k.im,
            k.norm(),
            1.0 / (std::f64::consts::PI * t).sqrt(),
        ]);
    }
    Ok(table)
}

/// Execute the configured task and produce its table.
pub fn run_table(config: &RunConfig) -> Result<Table> {
    match config.task {
        Task::DiscreteKernel => task_discrete(config),
        Task::QuantumKernel => task_quantum(config),
        Task::Bands => task_bands(config),
        Task::SpCheck => task_sp_check(config),
        Task::DecayFit => task_decay_fit(config),
        Task::LineCheck => task_line_check(config),
    }
}

/// Execute the task and write the rendered table to the configured path (or
/// stdout when none is set).
pub fn run(config: &RunConfig) -> Result<()> {
    let table = run_table(config)?;
    let text = render(config, &table);
    match &config.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {path:?}: {e}"))),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Config(format!("stdout: {e}")))
        }
    }
}

/// Build the time grid from the flag set: peak sampling when requested,
/// otherwise log-spaced (uniform if t_min <= 0).
pub fn build_t_grid(
    config: &RunConfig,
    t_min: f64,
    t_max: f64,
    t_count: usize,
    t_peaks: bool,
) -> Result<Vec<f64>> {
    if !(t_max >= t_min) || t_count == 0 {
        return Err(Error::Config("need t_min <= t_max and t_count >= 1".into()));
    }
    if t_peaks {
        let quantum_peaks = config.task == Task::QuantumKernel
            || (config.task == Task::DecayFit && config.target == "quantum");
        if quantum_peaks {
            let model = build_model(config)?;
            quantum::peak_times(&model, t_min, t_max, t_count)
        } else {
            let deg = TreeDegree::new(config.q)?;
            let ts = discrete::peak_times_for(deg, config.distance, t_min, t_max, t_count);
            if ts.is_empty() {
                return Err(Error::Config("no phase peaks inside the time window".into()));
            }
            Ok(ts)
        }
    } else if t_count == 1 {
        Ok(vec![t_min])
    } else if t_min > 0.0 {
        Ok((0..t_count)
            .map(|i| t_min * (t_max / t_min).powf(i as f64 / (t_count - 1) as f64))
            .collect())
    } else {
        Ok((0..t_count)
            .map(|i| t_min + (t_max - t_min) * i as f64 / (t_count - 1) as f64)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn query_parser() {
        assert!(matches!(parse_query("diag").unwrap(), KernelQuery::DiagonalVertex));
        assert!(matches!(
            parse_query("same-edge:0.2,0.7").unwrap(),
            KernelQuery::SameEdge { .. }
        ));
        match parse_query("edges:3,0.1,0.9").unwrap() {
            KernelQuery::DistinctEdges { k, x, y } => {
                assert_eq!(k, 3);
                assert_abs_diff_eq!(x, 0.1);
                assert_abs_diff_eq!(y, 0.9);
            }
            _ => panic!("wrong variant"),
        }
        assert!(parse_query("none").is_err());
        assert!(parse_query("same-edge:0.2").is_err());
        assert!(parse_query("edges:a,b,c").is_err());
    }

    #[test]
    fn decay_fit_recovers_synthetic_laws() {
        let ts: Vec<f64> = (0..12).map(|i| 50.0 * 1.5f64.powi(i)).collect();
        let s32: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 2.7 * t.powf(-1.5))).collect();
        let (slope, _, r2) = decay_fit(&s32).unwrap();
        assert_abs_diff_eq!(slope, -1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r2, 1.0, epsilon = 1e-12);
        let s12: Vec<(f64, f64)> = ts.iter().map(|&t| (t, 0.4 * t.powf(-0.5))).collect();
        let (slope, _, _) = decay_fit(&s12).unwrap();
        assert_abs_diff_eq!(slope, -0.5, epsilon = 1e-12);
        assert!(decay_fit(&s12[..5]).is_err());
    }

    #[test]
    fn file_config_parses_and_rejects_unknown_keys() {
        let fc = parse_file_config("q = 3\nalpha = 0.5\npotential = \"cosine:1\"\n").unwrap();
        assert_eq!(fc.q, Some(3));
        assert_eq!(fc.alpha, Some(0.5));
        assert!(parse_file_config("qq = 3\n").is_err());
        assert!(parse_file_config("q = \"two\"\n").is_err());
    }

    #[test]
    fn bands_table_matches_closed_form() {
        let config = RunConfig { task: Task::Bands, n_bands: 3, ..Default::default() };
        let table = run_table(&config).unwrap();
        assert_eq!(table.rows.len(), 3);
        let theta = (2.0 * 2.0f64.sqrt() / 3.0).acos();
        assert_abs_diff_eq!(table.rows[0][1], theta * theta, epsilon = 1e-10);
        // delta_1 = pi^2
        assert_abs_diff_eq!(table.rows[0][3], std::f64::consts::PI.powi(2), epsilon = 1e-9);
    }

    #[test]
    fn tree_diag_profile_matches_desingularized_form() {
        // For the phase 2 sqrt(q) cos(theta) with the theta-space amplitude g,
        // the comparison profile has the explicit analytic form
        //   Q11 = (q+1) / (((q-1)^2 + 4q sin^2)^2 (q-1)^2) *
        //         [ (q-1)^4/4 (tan(t/4) + tan(t/2))
        //           + 2q (q-1)^2 sin(t) (cos(t) + 2 cos(t/2))
        //           + 8 q^2 sin^3(t) cos(t/2) ],
        // finite at 0 with limit 0.
        use crate::stationary_phase::{q11_critical_value, q11_profile};
        let q = 2.0f64;
        let prob = tree_diag_problem(TreeDegree::new(2).unwrap());
        let closed = |th: f64| {
            let s = th.sin();
            let denom = ((q - 1.0).powi(2) + 4.0 * q * s * s).powi(2) * (q - 1.0).powi(2);
            (q + 1.0) / denom
                * ((q - 1.0).powi(4) / 4.0 * ((th / 4.0).tan() + (th / 2.0).tan())
                    + 2.0 * q * (q - 1.0).powi(2) * s * (th.cos() + 2.0 * (th / 2.0).cos())
                    + 8.0 * q * q * s.powi(3) * (th / 2.0).cos())
        };
        for i in 1..=15 {
            let th = 0.1 * i as f64;
            assert_abs_diff_eq!(q11_profile(&prob, th).unwrap(), closed(th), epsilon = 1e-9);
        }
        // the limit at the critical endpoint is 0, matched by the profile as
        // theta -> 0+
        assert_abs_diff_eq!(q11_critical_value(&prob), 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(q11_profile(&prob, 1e-3).unwrap(), closed(1e-3), epsilon = 1e-6);
    }

    #[test]
    fn sp_check_fresnel_row() {
        let config = RunConfig {
            task: Task::SpCheck,
            problem: "fresnel:1,1".into(),
            t_grid: vec![100.0],
            ..Default::default()
        };
        let table = run_table(&config).unwrap();
        let row = &table.rows[0];
        // bound = 1/(A |alpha| t) = 0.01, satisfied
        assert_abs_diff_eq!(row[6], 0.01, epsilon = 1e-10);
        assert_abs_diff_eq!(row[7], 1.0);
    }

    #[test]
    fn rendering_is_deterministic_and_formats_agree() {
        let config = RunConfig {
            task: Task::DiscreteKernel,
            t_grid: vec![1.0, 5.0, 20.0],
            distance: 1,
            ..Default::default()
        };
        let table1 = run_table(&config).unwrap();
        let table2 = run_table(&config).unwrap();
        let csv1 = render(&config, &table1);
        let csv2 = render(&config, &table2);
        assert_eq!(csv1, csv2);
        // JSON carries identical numeric content: the row literals are the
        // exact same {:.17e} strings as the CSV cells
        let json_cfg = RunConfig { format: OutFormat::Json, ..config.clone() };
        let json = render(&json_cfg, &table1);
        assert!(serde_json::from_str::<serde_json::Value>(&json).is_ok());
        for (i, row) in table1.rows.iter().enumerate() {
            for v in row.iter() {
                assert!(json.contains(&format!("{v:.17e}")), "row {i} value {v} missing");
            }
        }
        // CSV cells parse back to identical bits
        for (i, line) in csv1.lines().skip(3).enumerate() {
            for (j, cell) in line.split(',').enumerate() {
                let cv: f64 = cell.parse().unwrap();
                assert_eq!(cv.to_bits(), table1.rows[i][j].to_bits());
            }
        }
    }

    #[test]
    fn t_grid_validation() {
        let bad = RunConfig {
            task: Task::DiscreteKernel,
            t_grid: vec![5.0, 2.0],
            ..Default::default()
        };
        assert!(matches!(run_table(&bad), Err(Error::Config(_))));
        let nonpos = RunConfig {
            task: Task::DiscreteKernel,
            t_grid: vec![-1.0, 2.0],
            ..Default::default()
        };
        assert!(matches!(run_table(&nonpos), Err(Error::Config(_))));
    }

    #[test]
    fn line_check_rows() {
        let config = RunConfig {
            task: Task::LineCheck,
            t_grid: vec![1.0, 5.0],
            distance: 1,
            ..Default::default()
        };
        let table = run_table(&config).unwrap();
        assert_eq!(table.rows.len(), 2);
        // i J_1(2): modulus
        assert_abs_diff_eq!(table.rows[0][4], 0.5767248077568734, epsilon = 1e-11);
    }
}
