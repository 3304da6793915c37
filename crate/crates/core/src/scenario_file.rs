//! Declarative scenario files (JSON) and the end-to-end pipeline on them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{RandomAgent, ReplanningAgent, ScriptedAgent, SystemAgent};
use crate::flow::{build_flow_problem, sweep_lambda, CutSolution, FlowError, SolveOptions, SolverMode, DEFAULT_LAMBDA_GRID};
use crate::scenarios::{build_corridor, build_grid, build_mode_grid, Products, Scenario, ScenarioError, World};

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("invalid scenario file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("declared propositions differ from the world's labels: missing {missing:?}, unused {unused:?}")]
    Propositions { missing: BTreeSet<String>, unused: BTreeSet<String> },
    #[error("legend key `{0}` must be a single lowercase letter")]
    Legend(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorldSpec {
    Corridor {
        length: usize,
        start: usize,
        goals: Vec<usize>,
        keys: Vec<usize>,
    },
    AsciiMap {
        map: Vec<String>,
        #[serde(default)]
        legend: BTreeMap<String, Vec<String>>,
    },
    ModeGrid {
        map: Vec<String>,
        #[serde(default)]
        legend: BTreeMap<String, Vec<String>>,
        modes: Vec<String>,
        /// Directed mode switches `[from, to]`.
        mode_edges: Vec<(String, String)>,
        start_mode: String,
        move_modes: Vec<String>,
        /// Mode -> proposition a cell must carry to switch into that mode.
        #[serde(default)]
        switch_at: BTreeMap<String, String>,
        /// Proposition -> the only mode in which cells carrying it can be left.
        #[serde(default)]
        gates: BTreeMap<String, String>,
    },
}

fn default_grid() -> Vec<f64> {
    DEFAULT_LAMBDA_GRID.to_vec()
}

fn default_threshold() -> f64 {
    0.9
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub mode: SolverMode,
    #[serde(default = "default_grid")]
    pub lambda_grid: Vec<f64>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "yes")]
    pub hard_bypass: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { mode: SolverMode::default(), lambda_grid: default_grid(), threshold: 0.9, hard_bypass: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    #[default]
    Replanning,
    Random,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    #[serde(default)]
    pub kind: AgentKind,
    #[serde(default)]
    pub seed: u64,
    /// Action names for the scripted agent.
    #[serde(default)]
    pub actions: Vec<String>,
}

impl AgentConfig {
    pub fn make(&self) -> Box<dyn SystemAgent> {
        match self.kind {
            AgentKind::Replanning => Box::new(ReplanningAgent),
            AgentKind::Random => Box::new(RandomAgent::new(self.seed)),
            AgentKind::Scripted => Box::new(ScriptedAgent::new(self.actions.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub world: WorldSpec,
    pub propositions: Vec<String>,
    pub sys_spec: String,
    pub test_spec: String,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub max_steps: Option<usize>,
}

fn legend(raw: &BTreeMap<String, Vec<String>>) -> Result<BTreeMap<char, Vec<String>>, ScenarioFileError> {
    raw.iter()
        .map(|(k, v)| {
            let mut chars = k.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_lowercase() => Ok((c, v.clone())),
                _ => Err(ScenarioFileError::Legend(k.clone())),
            }
        })
        .collect()
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<Scenario, ScenarioFileError> {
        let scenario = match &self.world {
            WorldSpec::Corridor { length, start, goals, keys } => {
                let mut s = build_corridor(*length, *start, goals, keys)?;
                let props = s.ts.propositions().to_vec();
                s.sys_spec = crate::ltl::parse_spec(&self.sys_spec, crate::ltl::Role::System, &props)
                    .map_err(ScenarioError::from)?;
                s.test_spec = crate::ltl::parse_spec(&self.test_spec, crate::ltl::Role::Test, &props)
                    .map_err(ScenarioError::from)?;
                s.name = self.name.clone();
                s
            }
            WorldSpec::AsciiMap { map, legend: raw } => {
                let grid = build_grid(&map.join("\n"), &legend(raw)?)?;
                Scenario::new(&self.name, World::Grid(grid), &self.sys_spec, &self.test_spec)?
            }
            WorldSpec::ModeGrid { map, legend: raw, modes, mode_edges, start_mode, move_modes, switch_at, gates } => {
                let grid = build_grid(&map.join("\n"), &legend(raw)?)?;
                let mg = build_mode_grid(
                    grid,
                    modes.clone(),
                    mode_edges.clone(),
                    start_mode.clone(),
                    move_modes.iter().cloned().collect(),
                    switch_at.clone(),
                    gates.clone(),
                )?;
                Scenario::new(&self.name, World::Modes(mg), &self.sys_spec, &self.test_spec)?
            }
        };
        let declared: BTreeSet<String> = self.propositions.iter().cloned().collect();
        let actual: BTreeSet<String> = scenario.ts.propositions().iter().map(|p| p.as_str().to_string()).collect();
        if declared != actual {
            return Err(ScenarioFileError::Propositions {
                missing: actual.difference(&declared).cloned().collect(),
                unused: declared.difference(&actual).cloned().collect(),
            });
        }
        Ok(scenario)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            mode: self.solver.mode,
            hard_bypass: self.solver.hard_bypass,
            threshold: self.solver.threshold,
            ..SolveOptions::default()
        }
    }
}

/// Builds the flow problem and sweeps the weight grid (a single solve when
/// the bypass constraint is hard in exact mode).
pub fn synthesize(products: &Products, grid: &[f64], opts: &SolveOptions) -> Result<CutSolution, FlowError> {
    let lambda = grid.first().copied().unwrap_or(1.0);
    let problem = build_flow_problem(&products.graph, &products.system, lambda)?;
    sweep_lambda(&problem, grid, opts).map(|(_, s)| s)
}
