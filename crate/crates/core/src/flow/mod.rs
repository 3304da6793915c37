//! Cut synthesis on the virtual product graph: the multi-commodity flow
//! program, its solvers, and independent checks of the resulting cuts.

pub mod lp;
pub mod maxflow;
pub mod milp;
pub mod network;
pub mod oracle;
pub mod problem;
pub mod synthesis;
pub mod verify;

use thiserror::Error;

use crate::product::ProductError;

pub use oracle::{brute_force_oracle, OracleResult};
pub use problem::{build_flow_problem, FlowProblem};
pub use synthesis::{
    extract_cuts, mcf_opt, sweep_lambda, CutSolution, SolveOptions, SolverMode, DEFAULT_LAMBDA_GRID,
};
pub use verify::{verify_cuts, VerificationReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("expected a virtual product graph and a system product")]
    WrongGraphKind,
    #[error("regularization weight must be finite and nonnegative, got {0}")]
    BadLambda(f64),
    #[error("the {0} node set is empty")]
    EmptyClass(&'static str),
    #[error("no cut set satisfies the constraints: {0}")]
    Infeasible(String),
    #[error("no value in the lambda grid produced verified cuts")]
    NoFeasibleLambda,
    #[error("graph has {edges} edges; exhaustive search needs at most 25 or max_cut_size at most 4 (got {max_cut_size})")]
    TooLarge { edges: usize, max_cut_size: usize },
    #[error("branch-and-bound node limit reached without an optimal solution")]
    NodeLimit,
    #[error("cut file was made for graph {expected}, current graph is {found}")]
    GraphHashMismatch { expected: String, found: String },
    #[error("cut edge {0} does not exist in the graph")]
    UnknownEdge(String),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Product(#[from] ProductError),
}
