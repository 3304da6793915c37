use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use testflow::engine::{run_test, EngineError, RandomAgent, ReplanningAgent, SystemAgent, Termination, TestExecutionTrace, TestSetup};
use testflow::flow::{verify_cuts, CutSolution, FlowError, SolverMode};
use testflow::scenario_file::{synthesize, AgentKind, ScenarioFile};
use testflow::scenarios::{render_frames, Products, Scenario};

/// Synthesizes test environments: cuts on a product graph that force a
/// system under test through the behaviors a test specification asks for.
#[derive(Parser)]
#[command(name = "testflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute and verify a cut set for a scenario.
    Synth {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Comma-separated regularization weights to sweep.
        #[arg(long, value_delimiter = ',')]
        lambda_grid: Option<Vec<f64>>,
        /// Cut threshold for the relaxed solver.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a reactive test with a cut file and write a JSON-lines trace.
    Run {
        scenario: PathBuf,
        cuts: PathBuf,
        #[arg(long, value_enum)]
        agent: Option<Agent>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a cut file against a scenario.
    Verify {
        scenario: PathBuf,
        cuts: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a trace as ASCII frames, one per step.
    Render {
        scenario: PathBuf,
        trace: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Relaxed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Agent {
    Replanning,
    Random,
}

/// Failure classes, mapped onto exit codes 1, 2 and 3.
enum Failure {
    Usage(String),
    Rejected(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Rejected(_) => 2,
            Failure::Internal(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Rejected(m) | Failure::Internal(m) => f.write_str(m),
        }
    }
}

impl From<FlowError> for Failure {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::EmptyClass(_)
            | FlowError::Infeasible(_)
            | FlowError::NoFeasibleLambda
            | FlowError::GraphHashMismatch { .. }
            | FlowError::UnknownEdge(_) => Failure::Rejected(e.to_string()),
            FlowError::BadLambda(_) => Failure::Usage(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::BadTrace(_) => Failure::Usage(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

struct Loaded {
    file: ScenarioFile,
    scenario: Scenario,
    products: Products,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let bad = |e: &dyn fmt::Display| Failure::Usage(format!("{}: {e}", path.display()));
    let file = ScenarioFile::from_json(&read(path)?).map_err(|e| bad(&e))?;
    let scenario = file.build().map_err(|e| bad(&e))?;
    let products = scenario.products().map_err(|e| Failure::Internal(e.to_string()))?;
    log::info!(
        "{}: G has {} nodes and {} edges, S has {} nodes",
        file.name,
        products.graph.num_nodes(),
        products.graph.num_edges(),
        products.system.num_nodes()
    );
    Ok(Loaded { file, scenario, products })
}

fn load_cuts(path: &Path, l: &Loaded) -> Result<(CutSolution, std::collections::BTreeSet<usize>), Failure> {
    let sol: CutSolution =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let cuts = sol.cut_indices(&l.products.graph)?;
    Ok((sol, cuts))
}

fn synth(
    scenario: &Path,
    mode: Option<Mode>,
    grid: Option<Vec<f64>>,
    threshold: Option<f64>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let l = load(scenario)?;
    let mut opts = l.file.solve_options();
    if let Some(m) = mode {
        opts.mode = match m {
            Mode::Exact => SolverMode::ExactMilp,
            Mode::Relaxed => SolverMode::RelaxedIterative,
        };
    }
    if let Some(t) = threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(Failure::Usage(format!("threshold must lie in [0, 1], got {t}")));
        }
        opts.threshold = t;
    }
    let grid = grid.unwrap_or_else(|| l.file.solver.lambda_grid.clone());
    let sol = synthesize(&l.products, &grid, &opts)?;
    write(out, &(serde_json::to_string_pretty(&sol).expect("serializable") + "\n"))?;
    eprintln!("{}: {} cuts, total flow {}, bypass flow {}", l.file.name, sol.cuts.len(), sol.total_flow, sol.bypass_flow);
    if sol.verification.passed {
        Ok(())
    } else {
        Err(Failure::Rejected("cut set failed verification".into()))
    }
}

fn run(
    scenario: &Path,
    cuts: &Path,
    agent: Option<Agent>,
    seed: Option<u64>,
    max_steps: Option<usize>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let l = load(scenario)?;
    let (_, cuts) = load_cuts(cuts, &l)?;
    let seed = seed.unwrap_or(l.file.agent.seed);
    let mut agent: Box<dyn SystemAgent> = match agent {
        Some(Agent::Replanning) => Box::new(ReplanningAgent),
        Some(Agent::Random) => Box::new(RandomAgent::new(seed)),
        None if l.file.agent.kind == AgentKind::Random => Box::new(RandomAgent::new(seed)),
        None => l.file.agent.make(),
    };
    let setup = TestSetup {
        name: &l.file.name,
        ts: &l.scenario.ts,
        system: &l.products.system,
        graph: &l.products.graph,
        sys_spec: &l.scenario.sys_spec,
        test_spec: &l.scenario.test_spec,
        cuts: &cuts,
    };
    let trace = run_test(&setup, agent.as_mut(), max_steps.or(l.file.max_steps))?;
    write(out, &trace.to_json_lines())?;
    let s = &trace.summary;
    eprintln!(
        "{}: {:?} after {} steps, system {:?}, test {:?}",
        l.file.name, s.termination, s.steps, s.system_verdict, s.test_verdict
    );
    if s.termination == Termination::Deadlock {
        Err(Failure::Internal("the system deadlocked under the active constraints".into()))
    } else if s.test_escaped {
        Err(Failure::Rejected("the system met its specification without meeting the test".into()))
    } else {
        Ok(())
    }
}

fn verify(scenario: &Path, cuts: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let l = load(scenario)?;
    let (_, cuts) = load_cuts(cuts, &l)?;
    let report = verify_cuts(&l.products.graph, &l.products.system, &cuts)?;
    write(out, &(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Rejected("cut set failed verification".into()))
    }
}

fn render(scenario: &Path, trace: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let l = load(scenario)?;
    let trace = TestExecutionTrace::from_json_lines(&read(trace)?)?;
    if trace.header.graph_hash != l.products.graph.canonical_hash() {
        return Err(Failure::Rejected(format!("trace was recorded on a different graph ({})", trace.header.graph_hash)));
    }
    write(out, &render_frames(&l.scenario, &trace).join("\n"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TESTFLOW_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Synth { scenario, mode, lambda_grid, threshold, out } => {
            synth(&scenario, mode, lambda_grid, threshold, out.as_deref())
        }
        Command::Run { scenario, cuts, agent, seed, max_steps, out } => {
            run(&scenario, &cuts, agent, seed, max_steps, out.as_deref())
        }
        Command::Verify { scenario, cuts, out } => verify(&scenario, &cuts, out.as_deref()),
        Command::Render { scenario, trace, out } => render(&scenario, &trace, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
