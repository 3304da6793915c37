//! Reactive test execution: follows the system on the virtual product graph,
//! blocks the physical transitions behind cut edges as they become relevant,
//! and lifts them whenever the joint automaton state changes.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ltl::{evaluate_trace, LabelSet, ReachAvoidSpec, Verdict};
use crate::product::{ProductGraph, TransitionSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("agent chose action `{action}` at {state}, which is not enabled")]
    AgentIllegalMove { state: String, action: String },
    #[error("no product successor from {node} under `{action}`")]
    NoSuccessor { node: String, action: String },
    #[error("cut edge {0} is out of range")]
    BadCut(usize),
    #[error("malformed trace: {0}")]
    BadTrace(String),
}

/// A physical transition, by state and action names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Move {
    pub from: String,
    pub action: String,
    pub to: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    SystemAccepted,
    /// The current state has no enabled transition.
    Deadlock,
    /// The agent found no way to its goal under the current constraints.
    AgentStuck,
    MaxSteps,
    ScriptExhausted,
    SafetyViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub record: String,
    pub scenario: String,
    pub agent: String,
    pub graph_hash: String,
    pub max_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub s: String,
    pub g: String,
    pub bpi: String,
    pub activated: Vec<Move>,
    pub retracted: Vec<Move>,
    /// Action taken to arrive here; `None` at step 0.
    pub action: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub record: String,
    pub termination: Termination,
    pub system_verdict: Verdict,
    pub test_verdict: Verdict,
    pub test_escaped: bool,
    pub steps: usize,
    /// Constraints lifted when the run ended.
    pub retracted_at_end: Vec<Move>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestExecutionTrace {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
    pub summary: TraceSummary,
}

impl TestExecutionTrace {
    /// Header line, one line per step, then the summary line.
    pub fn to_json_lines(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("serializable");
        out.push('\n');
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("serializable"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.summary).expect("serializable"));
        out.push('\n');
        out
    }

    pub fn from_json_lines(text: &str) -> Result<Self, EngineError> {
        let bad = |e: serde_json::Error| EngineError::BadTrace(e.to_string());
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.len() < 2 {
            return Err(EngineError::BadTrace("needs a header and a summary line".into()));
        }
        let header: TraceHeader = serde_json::from_str(lines[0]).map_err(bad)?;
        let summary: TraceSummary = serde_json::from_str(lines[lines.len() - 1]).map_err(bad)?;
        let steps = lines[1..lines.len() - 1]
            .iter()
            .map(|l| serde_json::from_str(l).map_err(bad))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, steps, summary })
    }

    /// Transitions blocked just after each step was taken.
    pub fn active_after_each_step(&self) -> Vec<BTreeSet<Move>> {
        let mut active = BTreeSet::new();
        self.steps
            .iter()
            .map(|s| {
                for m in &s.retracted {
                    active.remove(m);
                }
                active.extend(s.activated.iter().cloned());
                active.clone()
            })
            .collect()
    }

    pub fn states(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.s.as_str()).collect()
    }
}

// ---------------------------------------------------------------------------
// Agents

/// What an agent sees when choosing its next move.
pub struct AgentView<'a> {
    pub ts: &'a TransitionSystem,
    pub system: &'a ProductGraph,
    /// Current transition-system state and system-automaton state.
    pub state: usize,
    pub q_sys: usize,
    /// Enabled actions at `state`, sorted by action name.
    pub enabled: &'a [usize],
    /// Blocked transition-system edges.
    pub blocked: &'a BTreeSet<usize>,
}

pub enum Choice {
    Act(usize),
    NoPath,
    Exhausted,
}

pub trait SystemAgent {
    fn describe(&self) -> String;
    fn choose(&mut self, view: &AgentView) -> Choice;
}

/// Follows a shortest path on the system product to an accepting node,
/// recomputed every step under the constraints currently in place. Ties
/// go to the lexicographically smallest action name.
#[derive(Debug, Clone, Default)]
pub struct ReplanningAgent;

impl SystemAgent for ReplanningAgent {
    fn describe(&self) -> String {
        "replanning".into()
    }

    fn choose(&mut self, view: &AgentView) -> Choice {
        match replanning_agent_step(view) {
            Some(a) => Choice::Act(a),
            None => Choice::NoPath,
        }
    }
}

/// Distance to acceptance on the system product, avoiding blocked edges.
fn distances_to_goal(ts: &TransitionSystem, system: &ProductGraph, blocked: &BTreeSet<usize>) -> Vec<usize> {
    let index: HashMap<(usize, usize), usize> =
        ts.edges().iter().enumerate().map(|(i, e)| ((e.from, e.action), i)).collect();
    let allowed: Vec<bool> = system
        .edges()
        .iter()
        .map(|e| !blocked.contains(&index[&(system.node(e.from).state, e.action)]))
        .collect();
    let mut dist = vec![usize::MAX; system.num_nodes()];
    let mut queue = VecDeque::new();
    for v in 0..system.num_nodes() {
        if system.is_accepting_sys(v) {
            dist[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &e in system.incoming(v) {
            let u = system.edge(e).from;
            if allowed[e] && dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// First action of a shortest path to the system goal, or `None` when the
/// goal is unreachable under the current constraints.
pub fn replanning_agent_step(view: &AgentView) -> Option<usize> {
    let dist = distances_to_goal(view.ts, view.system, view.blocked);
    let here = view.system.node_index(view.state, view.q_sys)?;
    let mut best: Option<(usize, usize)> = None;
    for &a in view.enabled {
        let Some(e) = view.system.edge_by_action(here, a) else { continue };
        let d = dist[view.system.edge(e).to];
        if d == usize::MAX {
            continue;
        }
        // `enabled` is sorted by name, so the first minimum wins ties.
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((a, d));
        }
    }
    best.map(|(a, _)| a)
}

/// Uniformly random enabled action from a seeded ChaCha stream.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl SystemAgent for RandomAgent {
    fn describe(&self) -> String {
        format!("random(seed={})", self.seed)
    }

    fn choose(&mut self, view: &AgentView) -> Choice {
        match view.enabled.choose(&mut self.rng) {
            Some(&a) => Choice::Act(a),
            None => Choice::NoPath,
        }
    }
}

/// Replays a fixed list of action names.
#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    actions: Vec<String>,
    at: usize,
}

impl ScriptedAgent {
    pub fn new(actions: Vec<String>) -> Self {
        Self { actions, at: 0 }
    }

    /// Replays the actions recorded in a trace.
    pub fn from_trace(trace: &TestExecutionTrace) -> Self {
        Self::new(trace.steps.iter().filter_map(|s| s.action.clone()).collect())
    }
}

impl SystemAgent for ScriptedAgent {
    fn describe(&self) -> String {
        format!("scripted({} actions)", self.actions.len())
    }

    fn choose(&mut self, view: &AgentView) -> Choice {
        let Some(name) = self.actions.get(self.at) else { return Choice::Exhausted };
        self.at += 1;
        match view.ts.action_index(name) {
            Some(a) => Choice::Act(a),
            // Unknown names surface as illegal moves.
            None => Choice::Act(usize::MAX),
        }
    }
}

// ---------------------------------------------------------------------------
// Engine

/// Everything the engine needs about the test.
pub struct TestSetup<'a> {
    pub name: &'a str,
    pub ts: &'a TransitionSystem,
    pub system: &'a ProductGraph,
    pub graph: &'a ProductGraph,
    pub sys_spec: &'a ReachAvoidSpec,
    pub test_spec: &'a ReachAvoidSpec,
    /// Cut edges of `graph`.
    pub cuts: &'a BTreeSet<usize>,
}

/// Successor of `g` in the virtual product graph under `action`.
pub fn update_state(graph: &ProductGraph, g: usize, action: usize) -> Option<usize> {
    graph.edge_by_action(g, action).map(|e| graph.edge(e).to)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub system: Verdict,
    pub test: Verdict,
    /// The system specification holds but the test specification does not.
    pub test_escaped: bool,
}

/// Evaluates both specifications on the label sequence of a run.
pub fn check_execution(labels: &[LabelSet], sys: &ReachAvoidSpec, test: &ReachAvoidSpec) -> Verdicts {
    let system = evaluate_trace(sys, labels);
    let test = evaluate_trace(test, labels);
    Verdicts { system, test, test_escaped: system == Verdict::Satisfied && test != Verdict::Satisfied }
}

fn ts_edge_index(ts: &TransitionSystem, from: usize, action: usize) -> Option<usize> {
    ts.edges().iter().position(|e| e.from == from && e.action == action)
}

/// Runs one test. `max_steps` defaults to ten times the number of nodes of
/// the virtual product graph.
pub fn run_test(
    setup: &TestSetup,
    agent: &mut dyn SystemAgent,
    max_steps: Option<usize>,
) -> Result<TestExecutionTrace, EngineError> {
    let TestSetup { ts, system, graph, cuts, .. } = *setup;
    if let Some(&e) = cuts.iter().find(|&&e| e >= graph.num_edges()) {
        return Err(EngineError::BadCut(e));
    }
    let max_steps = max_steps.unwrap_or(10 * graph.num_nodes());
    let mv = |e: usize| {
        let edge = ts.edges()[e];
        Move {
            from: ts.state_name(edge.from).to_string(),
            action: ts.action_name(edge.action).to_string(),
            to: ts.state_name(edge.to).to_string(),
        }
    };
    // Transition-system edges behind the cut edges leaving `g`.
    let triggered = |g: usize| -> Vec<usize> {
        graph
            .outgoing(g)
            .iter()
            .filter(|e| cuts.contains(e))
            .filter_map(|&e| ts_edge_index(ts, graph.node(g).state, graph.edge(e).action))
            .collect()
    };
    let mut order: Vec<usize> = (0..ts.actions().len()).collect();
    order.sort_by(|&a, &b| ts.action_name(a).cmp(ts.action_name(b)));

    let mut g = graph.initial()[0];
    let mut active: BTreeSet<usize> = BTreeSet::new();
    let mut steps = Vec::new();
    let mut labels = vec![ts.label(graph.node(g).state).clone()];
    let first: Vec<usize> = triggered(g);
    active.extend(first.iter().copied());
    steps.push(StepRecord {
        step: 0,
        s: ts.state_name(graph.node(g).state).to_string(),
        g: graph.node_name(g),
        bpi: graph.q_info(graph.node(g).q).name.clone(),
        activated: first.iter().map(|&e| mv(e)).collect(),
        retracted: Vec::new(),
        action: None,
    });

    let termination = loop {
        if graph.is_accepting_sys(g) {
            break Termination::SystemAccepted;
        }
        if steps.len() > max_steps {
            break Termination::MaxSteps;
        }
        let s = graph.node(g).state;
        let enabled: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&a| ts_edge_index(ts, s, a).is_some_and(|e| !active.contains(&e)))
            .collect();
        if enabled.is_empty() {
            break Termination::Deadlock;
        }
        let q_sys = graph.q_info(graph.node(g).q).pair.map_or(0, |p| p.0);
        let view = AgentView { ts, system, state: s, q_sys, enabled: &enabled, blocked: &active };
        let action = match agent.choose(&view) {
            Choice::Act(a) => a,
            Choice::NoPath => break Termination::AgentStuck,
            Choice::Exhausted => break Termination::ScriptExhausted,
        };
        if !enabled.contains(&action) {
            return Err(EngineError::AgentIllegalMove {
                state: ts.state_name(s).to_string(),
                action: if action < ts.actions().len() { ts.action_name(action).to_string() } else { "?".into() },
            });
        }
        let next_state = ts.successor(s, action).expect("enabled action has a successor");
        labels.push(ts.label(next_state).clone());
        let Some(next) = update_state(graph, g, action) else {
            // The pruned graph omits nodes that violate the safety formula.
            if evaluate_trace(setup.sys_spec, &labels) == Verdict::ViolatedSafety
                || evaluate_trace(setup.test_spec, &labels) == Verdict::ViolatedSafety
            {
                steps.push(StepRecord {
                    step: steps.len(),
                    s: ts.state_name(next_state).to_string(),
                    g: String::new(),
                    bpi: String::new(),
                    activated: Vec::new(),
                    retracted: Vec::new(),
                    action: Some(ts.action_name(action).to_string()),
                });
                break Termination::SafetyViolation;
            }
            return Err(EngineError::NoSuccessor { node: graph.node_name(g), action: ts.action_name(action).to_string() });
        };
        let mut retracted = Vec::new();
        if graph.node(next).q != graph.node(g).q {
            retracted = active.iter().map(|&e| mv(e)).collect();
            active.clear();
        }
        let mut activated = Vec::new();
        for e in triggered(next) {
            if active.insert(e) {
                activated.push(mv(e));
            }
        }
        g = next;
        steps.push(StepRecord {
            step: steps.len(),
            s: ts.state_name(next_state).to_string(),
            g: graph.node_name(g),
            bpi: graph.q_info(graph.node(g).q).name.clone(),
            activated,
            retracted,
            action: Some(ts.action_name(action).to_string()),
        });
    };

    let verdicts = check_execution(&labels, setup.sys_spec, setup.test_spec);
    Ok(TestExecutionTrace {
        header: TraceHeader {
            record: "header".into(),
            scenario: setup.name.to_string(),
            agent: agent.describe(),
            graph_hash: graph.canonical_hash(),
            max_steps,
        },
        summary: TraceSummary {
            record: "summary".into(),
            termination,
            system_verdict: verdicts.system,
            test_verdict: verdicts.test,
            test_escaped: verdicts.test_escaped,
            steps: steps.len() - 1,
            retracted_at_end: active.iter().map(|&e| mv(e)).collect(),
        },
        steps,
    })
}
