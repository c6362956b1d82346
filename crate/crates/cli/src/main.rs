//! Command-line front-end: analysis reports, Laplacian construction,
//! kernel vectors, balancing, trajectory simulation, consensus
//! prediction, available-storage computation, and chain-complex checks,
//! all over the JSON schemas defined in `phynet::json`.
//!
//! The binary adds no mathematics of its own: every report field is the
//! result of a single library call, serialized verbatim. Identical
//! inputs and flags produce byte-identical outputs.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use phynet::complexes::{entropy_rate, heat_field, validate_complex, HeatComplexSystem};
use phynet::dynamics::{
    conserved_quantity_drift, energy_rate, gradient_flow_field, try_simulate, Trajectory,
};
use phynet::graph::DirectedGraph;
use phynet::json::{
    complex_from_json, consensus_from_json, graph_from_json, heat_system_from_json,
    laplacian_to_json, simulation_from_json, storage_system_from_json, to_json_pretty, SigmaDto,
    StorageResultDto,
};
use phynet::kirchhoff::{balance, consensus_value, sigma_left, sigma_per_component, sigma_right};
use phynet::laplacian::{
    consensus_laplacian, flow_laplacian, symmetric_laplacian, LaplacianKind, LaplacianMatrix,
};
use phynet::storage::{
    available_storage_general, available_storage_generalized, controllability_check,
};
use phynet::Error;

const EXIT_PARSE: i32 = 2;
const EXIT_STRUCTURE: i32 = 3;
const EXIT_NUMERIC: i32 = 4;
const EXIT_CONTROLLABILITY: i32 = 5;
const EXIT_INCOMPLETE: i32 = 6;

const EXIT_HELP: &str = "Exit codes:
  0  success
  2  parse or schema violation (malformed JSON, bad indices, bad flags)
  3  structural refusal (connectivity, Laplacian kind, chain validity)
  4  numeric failure (non-finite state, indeterminate kernel)
  5  generalized system is not controllable
  6  system description incomplete (no inverse derivative provided)";

#[derive(Parser)]
#[command(
    name = "phynet",
    version,
    about = "Analysis, simulation, and storage computations for network systems",
    after_help = EXIT_HELP
)]
struct Cli {
    /// Input JSON file; repeat the flag to batch over several files
    #[arg(long, global = true, value_name = "FILE")]
    input: Vec<PathBuf>,

    /// Output file for reports or trajectory CSV; stdout when omitted
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Override the scale-derived tolerance for the PSD verdict in
    /// analysis reports
    #[arg(long, global = true, value_name = "TOL")]
    tolerance: Option<f64>,

    /// Worker threads for batch runs over multiple inputs; outputs keep
    /// input order regardless
    #[arg(long, global = true, default_value_t = 1, value_name = "K")]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Connectivity, kernel vector, and balance report for a graph
    Analyze {
        /// Laplacian flavor the report describes
        #[arg(long, value_enum, default_value_t = KindArg::Flow)]
        kind: KindArg,
        /// Fail (exit 3) unless a positive balancing exists, i.e. the
        /// graph is strongly connected
        #[arg(long)]
        require_balanceable: bool,
        /// Initial state for a consensus-value prediction, e.g. 1.0,2.5
        #[arg(long, value_delimiter = ',', value_name = "X0", allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
    },
    /// Build a Laplacian matrix from a graph
    Laplacian {
        #[arg(long, value_enum)]
        kind: KindArg,
    },
    /// Right-kernel vector of the flow Laplacian (spanning-tree weights)
    Sigma,
    /// Diagonal balancing of the flow Laplacian
    Balance,
    /// Integrate the gradient flow and write the trajectory CSV
    Simulate {
        /// Override the file's time step
        #[arg(long)]
        dt: Option<f64>,
        /// Override the file's horizon
        #[arg(long = "horizon", visible_alias = "T")]
        horizon: Option<f64>,
    },
    /// Predict the consensus value from the Laplacian's left kernel
    Consensus,
    /// Available storage: value, minimizer, and multiplier
    Storage {
        /// State to evaluate at, e.g. 3.0,1.0 (overrides the file's x)
        #[arg(long, value_delimiter = ',', value_name = "X", allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
        /// Check controllability explicitly before solving
        #[arg(long)]
        check_controllability: bool,
    },
    /// Chain-complex operations
    Complex {
        #[command(subcommand)]
        action: ComplexAction,
    },
}

#[derive(Subcommand)]
enum ComplexAction {
    /// Check that consecutive boundary operators compose to zero
    Validate,
    /// Integrate the heat field on a 2-complex and write the CSV
    Simulate {
        /// Override the file's time step
        #[arg(long)]
        dt: Option<f64>,
        /// Override the file's horizon
        #[arg(long = "horizon", visible_alias = "T")]
        horizon: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Symmetric,
    Flow,
    Consensus,
}

/// A command failure: process exit code plus the message for stderr.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match &error {
            Error::InvalidInput(_)
            | Error::EmptyGraph
            | Error::IndexOutOfRange { .. }
            | Error::SelfLoop { .. }
            | Error::NonPositiveWeight { .. }
            | Error::DimensionMismatch { .. } => EXIT_PARSE,
            Error::InvalidLaplacian { .. }
            | Error::WrongKind { .. }
            | Error::DisconnectedInput { .. }
            | Error::NotStronglyConnected { .. }
            | Error::NoSpanningTree
            | Error::NotBalanced { .. }
            | Error::DimensionChainBroken { .. }
            | Error::LevelOutOfRange { .. }
            | Error::NotMetzler { .. }
            | Error::NotDiagonallyDominant { .. }
            | Error::NotStrictlyConvex { .. }
            | Error::NonPositiveMass { .. }
            | Error::ZeroSigmaEntry { .. }
            | Error::GraphTooLargeForOracle { .. } => EXIT_STRUCTURE,
            Error::NumericallyIndeterminate { .. }
            | Error::NonFiniteState { .. }
            | Error::BracketingFailed { .. }
            | Error::OutOfEntropyDomain { .. } => EXIT_NUMERIC,
            Error::NotControllable { .. } => EXIT_CONTROLLABILITY,
            Error::NoInverseProvided { .. } => EXIT_INCOMPLETE,
        };
        Failure::new(code, error.to_string())
    }
}

type CmdResult<T> = Result<T, Failure>;

fn main() {
    let cli = Cli::parse();
    if let Err(failure) = run(&cli) {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}

fn run(cli: &Cli) -> CmdResult<()> {
    let texts = read_inputs(&cli.input)?;
    let output = cli.output.as_deref();
    match &cli.command {
        Command::Analyze { kind, require_balanceable, x0 } => {
            let results = map_inputs(&texts, cli.jobs, |text| {
                cmd_analyze(text, *kind, *require_balanceable, x0.as_deref(), cli.tolerance)
            });
            emit_reports(results, output)
        }
        Command::Laplacian { kind } => {
            let results = map_inputs(&texts, cli.jobs, |text| cmd_laplacian(text, *kind));
            emit_reports(results, output)
        }
        Command::Sigma => {
            let results = map_inputs(&texts, cli.jobs, cmd_sigma);
            emit_reports(results, output)
        }
        Command::Balance => {
            let results = map_inputs(&texts, cli.jobs, cmd_balance);
            emit_reports(results, output)
        }
        Command::Consensus => {
            let results = map_inputs(&texts, cli.jobs, cmd_consensus);
            emit_reports(results, output)
        }
        Command::Storage { x, check_controllability } => {
            let results = map_inputs(&texts, cli.jobs, |text| {
                cmd_storage(text, x.as_deref(), *check_controllability)
            });
            emit_reports(results, output)
        }
        Command::Simulate { dt, horizon } => {
            cmd_simulate(single_input(&texts)?, *dt, *horizon, output)
        }
        Command::Complex { action } => match action {
            ComplexAction::Validate => {
                let any_invalid = AtomicBool::new(false);
                let results = map_inputs(&texts, cli.jobs, |text| {
                    let (report, valid) = cmd_complex_validate(text)?;
                    if !valid {
                        any_invalid.store(true, Ordering::Relaxed);
                    }
                    Ok(report)
                });
                emit_reports(results, output)?;
                if any_invalid.load(Ordering::Relaxed) {
                    return Err(Failure::new(
                        EXIT_STRUCTURE,
                        "boundary operators do not compose to zero",
                    ));
                }
                Ok(())
            }
            ComplexAction::Simulate { dt, horizon } => {
                cmd_complex_simulate(single_input(&texts)?, *dt, *horizon, output)
            }
        },
    }
}

fn read_inputs(paths: &[PathBuf]) -> CmdResult<Vec<String>> {
    if paths.is_empty() {
        return Err(Failure::new(EXIT_PARSE, "at least one --input file is required"));
    }
    paths
        .iter()
        .map(|path| {
            std::fs::read_to_string(path).map_err(|e| {
                Failure::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display()))
            })
        })
        .collect()
}

fn single_input(texts: &[String]) -> CmdResult<&str> {
    match texts {
        [one] => Ok(one),
        _ => Err(Failure::new(
            EXIT_PARSE,
            "this subcommand takes exactly one --input file",
        )),
    }
}

/// Applies `f` to each input, in parallel when `jobs > 1`, and returns
/// the results in input order.
fn map_inputs<F>(texts: &[String], jobs: usize, f: F) -> Vec<CmdResult<String>>
where
    F: Fn(&str) -> CmdResult<String> + Sync,
{
    if jobs <= 1 || texts.len() <= 1 {
        return texts.iter().map(|text| f(text)).collect();
    }
    let slots: Vec<Mutex<Option<CmdResult<String>>>> =
        texts.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(texts.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= texts.len() {
                    break;
                }
                *slots[i].lock().unwrap() = Some(f(&texts[i]));
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

/// Prints one JSON document per input, in input order. The first
/// failure aborts the whole batch so partial batches never masquerade
/// as complete ones.
fn emit_reports(results: Vec<CmdResult<String>>, output: Option<&Path>) -> CmdResult<()> {
    let mut documents = Vec::with_capacity(results.len());
    for result in results {
        documents.push(result?);
    }
    write_text(output, &(documents.join("\n") + "\n"))
}

fn write_text(output: Option<&Path>, text: &str) -> CmdResult<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            Failure::new(1, format!("cannot write {}: {e}", path.display()))
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn build_laplacian(graph: &DirectedGraph, kind: KindArg) -> LaplacianMatrix {
    match kind {
        KindArg::Symmetric => symmetric_laplacian(graph),
        KindArg::Flow => flow_laplacian(graph),
        KindArg::Consensus => consensus_laplacian(graph),
    }
}

fn one_based(components: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    components
        .into_iter()
        .map(|component| component.into_iter().map(|v| v + 1).collect())
        .collect()
}

fn sorted_symmetric_eigenvalues(l: &LaplacianMatrix) -> Vec<f64> {
    let eigen = nalgebra::linalg::SymmetricEigen::new(l.symmetric_part());
    let mut values: Vec<f64> = eigen.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

#[derive(Serialize)]
struct AnalysisReport {
    vertices: usize,
    edges: usize,
    weak_components: Vec<Vec<usize>>,
    strong_components: Vec<Vec<usize>>,
    strongly_connected: bool,
    balanceable: bool,
    laplacian_kind: String,
    balanced: bool,
    sigma: SigmaDto,
    symmetric_part_eigenvalues: Vec<f64>,
    min_symmetric_eigenvalue: f64,
    symmetric_part_psd: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    consensus_value: Option<f64>,
}

fn cmd_analyze(
    text: &str,
    kind: KindArg,
    require_balanceable: bool,
    x0: Option<&[f64]>,
    tolerance: Option<f64>,
) -> CmdResult<String> {
    let graph = graph_from_json(text)?;
    let strongly_connected = graph.is_strongly_connected();
    if require_balanceable && !strongly_connected {
        return Err(Failure::new(
            EXIT_STRUCTURE,
            "graph is not strongly connected, so no positive balancing exists",
        ));
    }
    let laplacian = build_laplacian(&graph, kind);
    let sigma = sigma_per_component(&flow_laplacian(&graph))?;
    let eigenvalues = sorted_symmetric_eigenvalues(&laplacian);
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(0.0);
    let psd_tolerance = tolerance.unwrap_or_else(|| laplacian.eigenvalue_tolerance());
    let consensus = match x0 {
        None => None,
        Some(values) => Some(consensus_value(
            &laplacian,
            &DVector::from_row_slice(values),
        )?),
    };
    let report = AnalysisReport {
        vertices: graph.vertex_count(),
        edges: graph.edge_count(),
        weak_components: one_based(graph.connected_components()),
        strong_components: one_based(graph.strongly_connected_components()),
        strongly_connected,
        balanceable: strongly_connected,
        laplacian_kind: laplacian.kind().as_str().to_string(),
        balanced: laplacian.is_balanced(),
        sigma: SigmaDto::from_sigma(&sigma),
        symmetric_part_eigenvalues: eigenvalues,
        min_symmetric_eigenvalue: min_eigenvalue,
        symmetric_part_psd: min_eigenvalue >= -psd_tolerance,
        consensus_value: consensus,
    };
    Ok(to_json_pretty(&report))
}

fn cmd_laplacian(text: &str, kind: KindArg) -> CmdResult<String> {
    let graph = graph_from_json(text)?;
    Ok(laplacian_to_json(&build_laplacian(&graph, kind)))
}

fn cmd_sigma(text: &str) -> CmdResult<String> {
    let graph = graph_from_json(text)?;
    let sigma = sigma_right(&flow_laplacian(&graph))?;
    Ok(to_json_pretty(&SigmaDto::from_sigma(&sigma)))
}

fn cmd_balance(text: &str) -> CmdResult<String> {
    let graph = graph_from_json(text)?;
    let (balanced, _) = balance(&flow_laplacian(&graph))?;
    Ok(laplacian_to_json(&balanced))
}

#[derive(Serialize)]
struct ConsensusReport {
    value: f64,
}

fn cmd_consensus(text: &str) -> CmdResult<String> {
    let dto = consensus_from_json(text)?;
    let laplacian = dto.laplacian.to_laplacian()?;
    let value = consensus_value(&laplacian, &DVector::from_vec(dto.x0))?;
    Ok(to_json_pretty(&ConsensusReport { value }))
}

fn cmd_storage(
    text: &str,
    x_flag: Option<&[f64]>,
    check_controllability: bool,
) -> CmdResult<String> {
    let dto = storage_system_from_json(text)?;
    let hamiltonian = dto.hamiltonian.to_spec()?;
    let x = match x_flag {
        Some(values) => DVector::from_row_slice(values),
        None => match &dto.x {
            Some(values) => DVector::from_vec(values.clone()),
            None => {
                return Err(Failure::new(
                    EXIT_PARSE,
                    "no state given: pass --x or put \"x\" in the system file",
                ))
            }
        },
    };
    let result = match &dto.generalized {
        None => available_storage_general(&hamiltonian, &x)?,
        Some(generalized) => {
            let system = generalized.to_system(hamiltonian)?;
            if check_controllability && !controllability_check(&system) {
                return Err(Failure::new(
                    EXIT_CONTROLLABILITY,
                    "generalized system is not controllable on the incidence subspace",
                ));
            }
            available_storage_generalized(&system, &x)?
        }
    };
    Ok(to_json_pretty(&StorageResultDto::from_result(&result)))
}

/// Left-kernel weights for the conserved CSV column. Flow, balanced,
/// and symmetric Laplacians have vanishing column sums, so 1 is exact;
/// consensus Laplacians use the kernel vector when it is nonzero.
fn conserved_weights(l: &LaplacianMatrix) -> DVector<f64> {
    if l.kind() == LaplacianKind::Consensus {
        if let Ok(sigma) = sigma_left(l) {
            if sigma.values().max() > 0.0 {
                return sigma.normalized().clone();
            }
        }
    }
    DVector::from_element(l.n(), 1.0)
}

/// Renders the trajectory CSV. A row evaluation failure stops the
/// render and is handed back together with the rows written so far.
fn render_csv(
    trajectory: &Trajectory,
    state_prefix: &str,
    value_headers: [&str; 3],
    mut row_values: impl FnMut(&DVector<f64>) -> CmdResult<[f64; 3]>,
) -> (String, Option<Failure>) {
    let n = trajectory.states().first().map_or(0, |s| s.len());
    let mut out = String::from("t");
    for i in 1..=n {
        out.push_str(&format!(",{state_prefix}{i}"));
    }
    for header in value_headers {
        out.push_str(&format!(",{header}"));
    }
    out.push('\n');
    for (t, state) in trajectory.times().iter().zip(trajectory.states()) {
        let values = match row_values(state) {
            Ok(values) => values,
            Err(failure) => return (out, Some(failure)),
        };
        out.push_str(&format!("{t}"));
        for v in state.iter() {
            out.push_str(&format!(",{v}"));
        }
        for v in values {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    (out, None)
}

fn require_positive(value: f64, name: &str) -> CmdResult<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Failure::new(EXIT_PARSE, format!("{name} must be positive, got {value}")))
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    final_time: f64,
    final_state: Vec<f64>,
    total_dissipated: f64,
    conserved_drift: f64,
}

fn cmd_simulate(
    text: &str,
    dt_flag: Option<f64>,
    horizon_flag: Option<f64>,
    output: Option<&Path>,
) -> CmdResult<()> {
    let dto = simulation_from_json(text)?;
    let laplacian = dto.laplacian.to_laplacian()?;
    let hamiltonian = dto.hamiltonian.to_spec()?;
    let x0 = DVector::from_vec(dto.x0.clone());
    if x0.len() != laplacian.n() {
        return Err(Failure::new(
            EXIT_PARSE,
            format!("x0 has length {}, expected {}", x0.len(), laplacian.n()),
        ));
    }
    let dt = dt_flag.unwrap_or(dto.dt);
    let horizon = horizon_flag.unwrap_or(dto.horizon);
    require_positive(dt, "dt")?;
    require_positive(horizon, "T")?;

    let weights = conserved_weights(&laplacian);
    let field = gradient_flow_field(&laplacian, &hamiltonian).map_err(Failure::from)?;
    let (trajectory, interrupted) = match try_simulate(|x| Ok(field(x)), &x0, dt, horizon) {
        Ok(trajectory) => (trajectory, None),
        Err(Error::NonFiniteState { time, partial }) => {
            let failure = Failure::new(
                EXIT_NUMERIC,
                format!("state became non-finite at t = {time}; partial trajectory preserved"),
            );
            (*partial, Some(failure))
        }
        Err(other) => return Err(other.into()),
    };

    let (csv, row_failure) = render_csv(
        &trajectory,
        "x",
        ["H", "conserved", "dissipation_rate"],
        |state| {
            Ok([
                hamiltonian.value(state),
                weights.dot(state),
                -energy_rate(&laplacian, &hamiltonian, state),
            ])
        },
    );
    write_text(output, &csv)?;
    if let Some(failure) = interrupted.or(row_failure) {
        return Err(failure);
    }

    let summary = SimulateSummary {
        final_time: trajectory.final_time(),
        final_state: trajectory.final_state().iter().copied().collect(),
        total_dissipated: hamiltonian.value(&x0) - hamiltonian.value(trajectory.final_state()),
        conserved_drift: conserved_quantity_drift(&trajectory, &weights),
    };
    println!("{}", to_json_pretty(&summary));
    Ok(())
}

#[derive(Serialize)]
struct ComplexReport {
    valid: bool,
    order: usize,
    cells: Vec<usize>,
}

fn cmd_complex_validate(text: &str) -> CmdResult<(String, bool)> {
    let complex = complex_from_json(text)?;
    let valid = validate_complex(&complex);
    let report = ComplexReport {
        valid,
        order: complex.order(),
        cells: complex.cell_counts().to_vec(),
    };
    Ok((to_json_pretty(&report), valid))
}

#[derive(Serialize)]
struct HeatSummary {
    final_time: f64,
    final_state: Vec<f64>,
    entropy_produced: f64,
    conserved_drift: f64,
}

fn cmd_complex_simulate(
    text: &str,
    dt_flag: Option<f64>,
    horizon_flag: Option<f64>,
    output: Option<&Path>,
) -> CmdResult<()> {
    let dto = heat_system_from_json(text)?;
    let system: HeatComplexSystem = dto.to_system()?;
    let u0 = DVector::from_vec(dto.u0.clone());
    if u0.len() != system.face_count() {
        return Err(Failure::new(
            EXIT_PARSE,
            format!("u0 has length {}, expected {}", u0.len(), system.face_count()),
        ));
    }
    let dt = dt_flag.unwrap_or(dto.dt);
    let horizon = horizon_flag.unwrap_or(dto.horizon);
    require_positive(dt, "dt")?;
    require_positive(horizon, "T")?;

    let ones = DVector::from_element(u0.len(), 1.0);
    let (trajectory, interrupted) = match try_simulate(heat_field(&system), &u0, dt, horizon) {
        Ok(trajectory) => (trajectory, None),
        Err(Error::NonFiniteState { time, partial }) => {
            let failure = Failure::new(
                EXIT_NUMERIC,
                format!("state became non-finite at t = {time}; partial trajectory preserved"),
            );
            (*partial, Some(failure))
        }
        Err(other) => return Err(other.into()),
    };

    let (csv, row_failure) = render_csv(
        &trajectory,
        "u",
        ["s", "conserved", "entropy_rate"],
        |state| {
            Ok([
                system.entropy_value(state).map_err(Failure::from)?,
                ones.dot(state),
                entropy_rate(&system, state).map_err(Failure::from)?,
            ])
        },
    );
    write_text(output, &csv)?;
    if let Some(failure) = interrupted.or(row_failure) {
        return Err(failure);
    }

    let summary = HeatSummary {
        final_time: trajectory.final_time(),
        final_state: trajectory.final_state().iter().copied().collect(),
        entropy_produced: system.entropy_value(trajectory.final_state())?
            - system.entropy_value(&u0)?,
        conserved_drift: conserved_quantity_drift(&trajectory, &ones),
    };
    println!("{}", to_json_pretty(&summary));
    Ok(())
}
