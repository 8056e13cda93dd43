use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use treekernel::cli::{
    build_t_grid, parse_file_config, run, FileConfig, OutFormat, RunConfig, Task,
};

/// Evolution kernels on (q+1)-regular combinatorial and quantum trees.
#[derive(Parser)]
#[command(name = "treekernel", version, about)]
struct Cli {
    /// TOML config file; command-line flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default, Clone)]
struct ModelArgs {
    /// branching parameter q >= 2
    #[arg(long)]
    q: Option<u32>,
    /// edge length L
    #[arg(long)]
    edge_length: Option<f64>,
    /// vertex coupling constant alpha
    #[arg(long)]
    alpha: Option<f64>,
    /// potential: zero | cosine:A | well:depth,width | table:PATH
    #[arg(long)]
    potential: Option<String>,
}

#[derive(Args, Default, Clone)]
struct TimeArgs {
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    t_count: Option<usize>,
    /// sample at phase peaks of the leading term instead of a log grid
    #[arg(long)]
    t_peaks: bool,
}

#[derive(Args, Default, Clone)]
struct OutArgs {
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel of e^{itA} on the combinatorial tree at one distance
    DiscreteKernel {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        time: TimeArgs,
        /// distance n = d(v, w)
        #[arg(long)]
        distance: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// AC-part kernel of e^{itH} on the quantum tree
    QuantumKernel {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        time: TimeArgs,
        /// query: diag | same-edge:x,y | edges:k,x,y
        #[arg(long)]
        query: Option<String>,
        #[arg(long)]
        n_bands: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Band table: edges, Dirichlet values, w orientation and w' at the edges
    Bands {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n_bands: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Certified stationary-phase check on a named problem
    SpCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        time: TimeArgs,
        /// problem: fresnel:alpha,A | tree-diag
        #[arg(long)]
        problem: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Log-log decay fit of kernel magnitudes
    DecayFit {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        time: TimeArgs,
        /// target: discrete | quantum | line
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        distance: Option<usize>,
        #[arg(long)]
        query: Option<String>,
        #[arg(long)]
        n_bands: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Integer-line kernel i^n J_n(2t) against its dispersive envelope
    LineCheck {
        #[command(flatten)]
        time: TimeArgs,
        #[arg(long)]
        distance: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn resolve(cli: Cli) -> treekernel::Result<RunConfig> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                treekernel::Error::Config(format!("cannot read config {path:?}: {e}"))
            })?;
            parse_file_config(&text)?
        }
        None => FileConfig::default(),
    };
    let mut config = RunConfig::default();

    let apply_model = |config: &mut RunConfig, m: &ModelArgs, file: &FileConfig| {
        config.q = m.q.or(file.q).unwrap_or(config.q);
        config.edge_length = m.edge_length.or(file.edge_length).unwrap_or(config.edge_length);
        config.alpha = m.alpha.or(file.alpha).unwrap_or(config.alpha);
        config.potential =
            m.potential.clone().or_else(|| file.potential.clone()).unwrap_or_else(|| config.potential.clone());
    };
    let parse_format = |s: Option<String>| -> treekernel::Result<Option<OutFormat>> {
        match s.as_deref() {
            None => Ok(None),
            Some("csv") => Ok(Some(OutFormat::Csv)),
            Some("json") => Ok(Some(OutFormat::Json)),
            Some(other) => Err(treekernel::Error::Config(format!(
                "unknown format {other:?} (expected csv | json)"
            ))),
        }
    };
    let apply_out = |config: &mut RunConfig, o: &OutArgs, file: &FileConfig| -> treekernel::Result<()> {
        let file_fmt = parse_format(file.format.clone())?;
        let flag_fmt = parse_format(o.format.clone())?;
        config.format = flag_fmt.or(file_fmt).unwrap_or(config.format);
        config.out = o.out.clone().or_else(|| file.out.clone());
        Ok(())
    };
    let time_grid = |config: &RunConfig, t: &TimeArgs, file: &FileConfig, d_min: f64, d_max: f64, d_count: usize| {
        let t_min = t.t_min.or(file.t_min).unwrap_or(d_min);
        let t_max = t.t_max.or(file.t_max).unwrap_or(d_max);
        let t_count = t.t_count.or(file.t_count).unwrap_or(d_count);
        let t_peaks = t.t_peaks || file.t_peaks.unwrap_or(false);
        build_t_grid(config, t_min, t_max, t_count, t_peaks)
    };

    match &cli.command {
        Command::DiscreteKernel { model, time, distance, out } => {
            config.task = Task::DiscreteKernel;
            apply_model(&mut config, model, &file);
            apply_out(&mut config, out, &file)?;
            config.distance = distance.or(file.distance).unwrap_or(0);
            config.t_grid = time_grid(&config, time, &file, 1.0, 100.0, 8)?;
        }
        Command::QuantumKernel { model, time, query, n_bands, out } => {
            config.task = Task::QuantumKernel;
            apply_model(&mut config, model, &file);
            apply_out(&mut config, out, &file)?;
            config.query = query.clone().or_else(|| file.query.clone()).unwrap_or_else(|| "diag".into());
            config.n_bands = n_bands.or(file.n_bands).unwrap_or(40);
            config.t_grid = time_grid(&config, time, &file, 50.0, 800.0, 8)?;
        }
        Command::Bands { model, n_bands, out } => {
            config.task = Task::Bands;
            apply_model(&mut config, model, &file);
            apply_out(&mut config, out, &file)?;
            config.n_bands = n_bands.or(file.n_bands).unwrap_or(10);
        }
        Command::SpCheck { model, time, problem, out } => {
            config.task = Task::SpCheck;
            apply_model(&mut config, model, &file);
            apply_out(&mut config, out, &file)?;
            config.problem =
                problem.clone().or_else(|| file.problem.clone()).unwrap_or_else(|| "fresnel:1,1".into());
            config.t_grid = time_grid(&config, time, &file, 10.0, 1000.0, 3)?;
        }
        Command::DecayFit { model, time, target, distance, query, n_bands, out } => {
            config.task = Task::DecayFit;
            apply_model(&mut config, model, &file);
            apply_out(&mut config, out, &file)?;
            config.target =
                target.clone().or_else(|| file.target.clone()).unwrap_or_else(|| "discrete".into());
            config.distance = distance.or(file.distance).unwrap_or(0);
            config.query = query.clone().or_else(|| file.query.clone()).unwrap_or_else(|| "diag".into());
            config.n_bands = n_bands.or(file.n_bands).unwrap_or(40);
            // peak sampling is the default for decay fits
            let peaks = TimeArgs { t_peaks: true, ..time.clone() };
            config.t_grid = time_grid(&config, &peaks, &file, 50.0, 1000.0, 12)?;
        }
        Command::LineCheck { time, distance, out } => {
            config.task = Task::LineCheck;
            apply_out(&mut config, out, &file)?;
            config.distance = distance.or(file.distance).unwrap_or(0);
            config.t_grid = time_grid(&config, time, &file, 1.0, 20.0, 6)?;
        }
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
