//! Command-line interface: argument definitions and command handlers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::baseline::{gauss_seidel, random_initial_guess, PenaltyScaling};
use crate::cycles::DecompositionMode;
use crate::error::{Error, Result};
use crate::estimator::{
    efficiency_index, error_estimate, local_true_error, true_error, BasisChoice, CycleSolver,
    ErrorEstimate, EstimatorConfig,
};
use crate::experiments::{compare_with_baseline, grid_experiment, grid_field, random_rhs};
use crate::graph::{l_seminorm, Graph, VertexFunction};
use crate::io::report::{
    write_rows, write_trace_csv, ExperimentReport, ExperimentRow, PerEdgeDump, PerEdgeRow,
    TOOL_VERSION,
};
use crate::io::{
    preprocess_with_labels, read_matrix_market, sample_and_rhs, uniform_grid, GridSpec,
};
use crate::schwarz::SweepOrder;

#[derive(Debug, Parser)]
#[command(
    name = "laplacian-apost",
    version,
    about = "Guaranteed error estimates for graph Laplacian systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the energy error of an approximate solution.
    Estimate(EstimateArgs),
    /// Write the per-edge estimates in canonical edge order.
    DumpLocal(EstimateArgs),
    /// Run the uniform-grid study over several levels and sweep counts.
    GridExperiment(GridArgs),
    /// Compare the estimator with the alternating two-term bound.
    CompareBaseline(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Matrix Market file holding the weighted adjacency.
    #[arg(
        long,
        required_unless_present = "grid_level",
        conflicts_with = "grid_level"
    )]
    pub input: Option<PathBuf>,
    /// Uniform triangle grid of the unit square with 2^level cells per side.
    #[arg(long)]
    pub grid_level: Option<u32>,
    /// Right-hand side, one value per input vertex (whitespace separated).
    #[arg(long, conflicts_with = "grid_level")]
    pub rhs_file: Option<PathBuf>,
    /// Subtract the mean from the right-hand side before solving.
    #[arg(long)]
    pub project_rhs: bool,
    /// Seed for the right-hand side and the initial guess.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gauss–Seidel sweeps producing the approximate solution.
    #[arg(long, default_value_t = 3)]
    pub smoother_iterations: usize,
    /// Start the smoother from zero instead of a random guess.
    #[arg(long)]
    pub zero_guess: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    Fundamental,
    Face,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecompositionArg {
    Vertex,
    SingleCycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Schwarz,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    Squared,
    Linear,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long, default_value_t = 3)]
    pub sweeps: usize,
    /// Defaults to `face` for grid inputs and `fundamental` otherwise.
    #[arg(long, value_enum)]
    pub basis: Option<BasisArg>,
    #[arg(long, value_enum, default_value_t = DecompositionArg::Vertex)]
    pub decomposition: DecompositionArg,
    /// `ascending` or `random:SEED`.
    #[arg(long, default_value = "ascending", value_parser = parse_sweep_order)]
    pub sweep_order: SweepOrder,
    #[arg(long, value_enum, default_value_t = SolverArg::Schwarz)]
    pub solver: SolverArg,
    /// 1-based root vertex of the spanning tree.
    #[arg(long, default_value_t = 1)]
    pub root: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Also compute the energy error against a reference solve.
    #[arg(long)]
    pub with_true_error: bool,
    /// Write the per-sweep objective trace to this CSV file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Levels as `5..7` (inclusive) or `5,6,7`.
    #[arg(long, default_value = "5..7", value_parser = parse_levels)]
    pub levels: Levels,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    pub sweeps_list: Vec<usize>,
    #[arg(long, default_value = "ascending", value_parser = parse_sweep_order)]
    pub sweep_order: SweepOrder,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Iteration cap for the alternating process.
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = PenaltyArg::Squared)]
    pub penalty: PenaltyArg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Levels(pub Vec<u32>);

fn parse_levels(s: &str) -> std::result::Result<Levels, String> {
    let levels = if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u32 = b.trim().parse().map_err(|e| format!("{e}"))?;
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse::<u32>().map_err(|e| format!("{e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?
    };
    if levels.is_empty() {
        return Err("empty level range".into());
    }
    Ok(Levels(levels))
}

fn parse_sweep_order(s: &str) -> std::result::Result<SweepOrder, String> {
    match s {
        "ascending" => Ok(SweepOrder::Ascending),
        _ => match s.strip_prefix("random:") {
            Some(seed) => seed
                .parse()
                .map(SweepOrder::Random)
                .map_err(|e| format!("bad seed: {e}")),
            None => Err(format!("expected `ascending` or `random:SEED`, got `{s}`")),
        },
    }
}

/// A graph, right-hand side and approximate solution ready for estimation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub label: String,
    pub graph: Graph,
    pub f: VertexFunction,
    pub v: VertexFunction,
    /// Known solution, when the right-hand side was built from it.
    pub u: Option<VertexFunction>,
    pub grid: Option<GridSpec>,
    /// Input label of each vertex, 1-based.
    pub labels: Vec<usize>,
}

impl Problem {
    pub fn load(args: &ProblemArgs) -> Result<Self> {
        let (label, graph, f, u, grid, labels) = match (&args.input, args.grid_level) {
            (_, Some(level)) => {
                let grid = uniform_grid(level)?;
                let (u, f) = sample_and_rhs(&grid.graph, &grid.coords, grid_field)?;
                let labels = (1..=grid.graph.n()).collect();
                (
                    format!("grid-l{level}"),
                    grid.graph,
                    f,
                    Some(u),
                    Some(grid.spec),
                    labels,
                )
            }
            (Some(path), None) => {
                let raw = read_matrix_market(path)?;
                let pre = preprocess_with_labels(&raw.edges, raw.n)?;
                let f = match &args.rhs_file {
                    Some(rhs) => {
                        let values = read_vector(rhs, raw.n)?;
                        VertexFunction(pre.original_labels.iter().map(|&l| values[l - 1]).collect())
                    }
                    None => random_rhs(pre.graph.n(), args.seed),
                };
                let label = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                (label, pre.graph, f, None, None, pre.original_labels)
            }
            (None, None) => {
                return Err(Error::Io(
                    "either --input or --grid-level is required".into(),
                ))
            }
        };
        let f = if args.project_rhs { f.mean_free() } else { f };
        let v0 = if args.zero_guess {
            VertexFunction::zeros(graph.n())
        } else {
            random_initial_guess(graph.n(), args.seed)
        };
        let v = gauss_seidel(&graph, &f, &v0, args.smoother_iterations)?;
        Ok(Problem {
            label,
            graph,
            f,
            v,
            u,
            grid,
            labels,
        })
    }

    /// Energy error and the solution it was measured against.
    pub fn true_error(&self) -> Result<(f64, VertexFunction)> {
        match &self.u {
            Some(u) => Ok((l_seminorm(&self.graph, &u.sub(&self.v))?, u.clone())),
            None => true_error(&self.graph, &self.v, &self.f),
        }
    }
}

/// Reads whitespace-separated reals, skipping `#` and `%` comment lines.
pub fn read_vector(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut values = Vec::with_capacity(expected);
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|e| Error::Parse {
                line: k + 1,
                message: format!("{tok}: {e}"),
            })?);
        }
    }
    if values.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: values.len(),
        });
    }
    Ok(values)
}

pub fn estimator_config(args: &EstimatorArgs, problem: &Problem) -> Result<EstimatorConfig> {
    let basis = match (args.basis, problem.grid) {
        (Some(BasisArg::Face), Some(spec)) | (None, Some(spec)) => BasisChoice::Face(spec),
        (Some(BasisArg::Face), None) => {
            return Err(Error::NotAGridGraph(
                "the face basis needs a --grid-level input".into(),
            ))
        }
        (Some(BasisArg::Fundamental), _) | (None, None) => BasisChoice::Fundamental,
    };
    if args.root == 0 || args.root > problem.graph.n() {
        return Err(Error::InvalidRoot {
            root: args.root,
            n: problem.graph.n(),
        });
    }
    Ok(EstimatorConfig {
        basis,
        decomposition: match args.decomposition {
            DecompositionArg::Vertex => DecompositionMode::Vertex,
            DecompositionArg::SingleCycle => DecompositionMode::SingleCycle,
        },
        sweeps: args.sweeps,
        root: args.root - 1,
        order: args.sweep_order,
        solver: match args.solver {
            SolverArg::Schwarz => CycleSolver::Schwarz,
            SolverArg::Exact => CycleSolver::Exact,
        },
    })
}

fn describe(cfg: &EstimatorConfig, problem: &ProblemArgs) -> String {
    let basis = match cfg.basis {
        BasisChoice::Fundamental => "fundamental",
        BasisChoice::Face(_) => "face",
    };
    let decomposition = match cfg.decomposition {
        DecompositionMode::Vertex => "vertex",
        DecompositionMode::SingleCycle => "single-cycle",
    };
    let order = match cfg.order {
        SweepOrder::Ascending => "ascending".to_string(),
        SweepOrder::Random(s) => format!("random:{s}"),
    };
    let solver = match cfg.solver {
        CycleSolver::Schwarz => "schwarz",
        CycleSolver::Exact => "exact",
    };
    format!(
        "basis={basis} decomposition={decomposition} sweeps={} order={order} solver={solver} root={} smoother={} zero_guess={} project_rhs={}",
        cfg.sweeps,
        cfg.root + 1,
        problem.smoother_iterations,
        problem.zero_guess,
        problem.project_rhs
    )
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::DumpLocal(args) => cmd_dump_local(&args),
        Command::GridExperiment(args) => cmd_grid_experiment(&args),
        Command::CompareBaseline(args) => cmd_compare_baseline(&args),
    }
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let problem = Problem::load(&args.problem)?;
    let cfg = estimator_config(&args.estimator, &problem)?;
    let est = error_estimate(&problem.graph, &problem.v, &problem.f, &cfg)?;
    let (true_err, eff) = if args.with_true_error {
        let (err, _) = problem.true_error()?;
        (Some(err), Some(efficiency_index(est.psi, err)?))
    } else {
        (None, None)
    };
    if let Some(path) = &args.trace {
        write_trace_csv(BufWriter::new(File::create(path)?), &est.trace)?;
    }
    let mut report = ExperimentReport::new(args.problem.seed, describe(&cfg, &args.problem));
    report.rows.push(ExperimentRow {
        label: problem.label.clone(),
        n: problem.graph.n(),
        m: problem.graph.m(),
        true_error: true_err,
        psi: est.psi,
        eff,
        sweeps: est.sweeps,
        seconds: est.seconds,
    });
    let mut out = open_output(&args.output.output)?;
    match args.output.format {
        FormatArg::Csv => report.write_csv(&mut out)?,
        FormatArg::Json => report.write_json(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_dump_local(args: &EstimateArgs) -> Result<()> {
    let problem = Problem::load(&args.problem)?;
    let cfg = estimator_config(&args.estimator, &problem)?;
    let g = &problem.graph;
    let est = error_estimate(g, &problem.v, &problem.f, &cfg)?;
    let true_e = if args.with_true_error {
        let (_, u) = problem.true_error()?;
        Some(local_true_error(g, &u, &problem.v)?)
    } else {
        None
    };
    let dump = per_edge_dump(&problem, &est, true_e.as_deref());
    let mut out = open_output(&args.output.output)?;
    match args.output.format {
        FormatArg::Csv => dump.write_csv(
            &mut out,
            &format!(
                "{TOOL_VERSION} seed={} {}",
                args.problem.seed,
                describe(&cfg, &args.problem)
            ),
        )?,
        FormatArg::Json => dump.write_json(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_grid_experiment(args: &GridArgs) -> Result<()> {
    for &level in &args.levels.0 {
        GridSpec::new(level)?;
    }
    let order = match args.sweep_order {
        SweepOrder::Ascending => "ascending".to_string(),
        SweepOrder::Random(s) => format!("random:{s}"),
    };
    let mut report = ExperimentReport::new(0, format!("basis=face v=zero order={order}"));
    for &level in &args.levels.0 {
        report
            .rows
            .extend(grid_experiment(level, &args.sweeps_list, args.sweep_order)?);
    }
    let mut out = open_output(&args.output.output)?;
    match args.output.format {
        FormatArg::Csv => report.write_csv(&mut out)?,
        FormatArg::Json => report.write_json(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_compare_baseline(args: &CompareArgs) -> Result<()> {
    let problem = Problem::load(&args.problem)?;
    let cfg = estimator_config(&args.estimator, &problem)?;
    let scaling = match args.penalty {
        PenaltyArg::Squared => PenaltyScaling::Squared,
        PenaltyArg::Linear => PenaltyScaling::Linear,
    };
    let rows = compare_with_baseline(
        &problem.graph,
        &problem.v,
        &problem.f,
        &cfg,
        args.max_iter,
        scaling,
    )?;
    let mut out = open_output(&args.output.output)?;
    match args.output.format {
        FormatArg::Csv => {
            writeln!(
                out,
                "# {TOOL_VERSION} seed={} {} penalty={}",
                args.problem.seed,
                describe(&cfg, &args.problem),
                match args.penalty {
                    PenaltyArg::Squared => "squared",
                    PenaltyArg::Linear => "linear",
                }
            )?;
            write_rows(&mut out, &rows)?;
        }
        FormatArg::Json => {
            serde_json::to_writer_pretty(&mut out, &rows).map_err(|e| Error::Io(e.to_string()))?
        }
    }
    out.flush()?;
    Ok(())
}

/// Per-edge estimates in canonical edge order, labeled with input labels.
pub fn per_edge_dump(
    problem: &Problem,
    est: &ErrorEstimate,
    true_e: Option<&[f64]>,
) -> PerEdgeDump {
    let edges = problem
        .graph
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| PerEdgeRow {
            i: problem.labels[e.hi],
            j: problem.labels[e.lo],
            w: e.weight,
            psi_e: est.per_edge[k],
            true_e: true_e.map(|t| t[k]),
        })
        .collect();
    PerEdgeDump {
        psi: est.psi,
        sum_psi_e_sq: est.per_edge.iter().map(|x| x * x).sum(),
        edges,
    }
}

/// Process exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}
