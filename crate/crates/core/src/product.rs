//! Transition systems and the product constructions built on them: the
//! system product `T ⊗ B_sys`, the specification product `B_sys × B_test`
//! and the virtual product graph `T ⊗ B_Π` on which cuts are synthesized.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ltl::{AtomicProposition, BuchiAutomaton, LabelSet, PropFormula, SpecError, Transition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProductError {
    #[error("invalid transition system: {0}")]
    InvalidSystem(String),
    #[error("automaton uses propositions outside the transition system: {0:?}")]
    PropositionMismatch(BTreeSet<String>),
    #[error("the specification product must be synchronous for the virtual product graph")]
    AsynchronousSpecProduct,
    #[error("asynchronous product needs at least two automata")]
    TooFewAutomata,
    #[error("no node accepts the system specification")]
    EmptyTarget,
    #[error("no node accepts only the test specification")]
    EmptyIntermediate,
    #[error("unknown specification-product state {0}")]
    UnknownState(usize),
    #[error("edge {0} has no image in the system product")]
    DanglingEdge(usize),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

// ---------------------------------------------------------------------------
// Transition system

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TsEdge {
    pub from: usize,
    pub action: usize,
    pub to: usize,
}

/// Labeled transition system `(S, A, E, I, AP, L)` with `E: S × A -> S`.
#[derive(Debug, Clone)]
pub struct TransitionSystem {
    states: Vec<String>,
    actions: Vec<String>,
    edges: Vec<TsEdge>,
    out: Vec<Vec<usize>>,
    initial: Vec<usize>,
    propositions: Vec<AtomicProposition>,
    labels: Vec<LabelSet>,
}

impl TransitionSystem {
    pub fn new(
        states: Vec<String>,
        actions: Vec<String>,
        edges: Vec<TsEdge>,
        initial: Vec<usize>,
        propositions: Vec<AtomicProposition>,
        labels: Vec<LabelSet>,
    ) -> Result<Self, ProductError> {
        let n = states.len();
        let bad = |msg: String| Err(ProductError::InvalidSystem(msg));
        if labels.len() != n {
            return bad(format!("{} labels for {} states", labels.len(), n));
        }
        if initial.is_empty() {
            return bad("no initial state".into());
        }
        if initial.iter().any(|&s| s >= n) {
            return bad("initial state out of range".into());
        }
        let known: BTreeSet<&str> = propositions.iter().map(|p| p.as_str()).collect();
        for (s, l) in labels.iter().enumerate() {
            if let Some(p) = l.iter().find(|p| !known.contains(p.as_str())) {
                return bad(format!("state {} carries undeclared proposition {p}", states[s]));
            }
        }
        let mut out = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (i, e) in edges.iter().enumerate() {
            if e.from >= n || e.to >= n || e.action >= actions.len() {
                return bad(format!("edge {i} out of range"));
            }
            if !seen.insert((e.from, e.action)) {
                return bad(format!(
                    "state {} has two successors under action {}",
                    states[e.from], actions[e.action]
                ));
            }
            out[e.from].push(i);
        }
        for list in &mut out {
            list.sort_by_key(|&i| (edges[i].action, edges[i].to));
        }
        Ok(Self { states, actions, edges, out, initial, propositions, labels })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|n| n == name)
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|n| n == name)
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn edges(&self) -> &[TsEdge] {
        &self.edges
    }

    pub fn outgoing(&self, s: usize) -> impl Iterator<Item = &TsEdge> + '_ {
        self.out[s].iter().map(|&i| &self.edges[i])
    }

    pub fn successor(&self, s: usize, action: usize) -> Option<usize> {
        self.outgoing(s).find(|e| e.action == action).map(|e| e.to)
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn propositions(&self) -> &[AtomicProposition] {
        &self.propositions
    }

    pub fn label(&self, s: usize) -> &LabelSet {
        &self.labels[s]
    }

    fn check_automaton(&self, b: &BuchiAutomaton) -> Result<(), ProductError> {
        let known: BTreeSet<String> =
            self.propositions.iter().map(|p| p.as_str().to_string()).collect();
        let extra: BTreeSet<String> = b.propositions().difference(&known).cloned().collect();
        if extra.is_empty() {
            Ok(())
        } else {
            Err(ProductError::PropositionMismatch(extra))
        }
    }
}

// ---------------------------------------------------------------------------
// Specification product

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductMode {
    #[default]
    Synchronous,
    Asynchronous,
}

/// Product of several automata over tuples of component states, with
/// union acceptance and per-component acceptance flags.
#[derive(Debug, Clone)]
pub struct SpecProductAutomaton {
    pub automaton: BuchiAutomaton,
    pub mode: ProductMode,
    tuples: Vec<Vec<usize>>,
    component_accepting: Vec<Vec<bool>>,
    sink: Vec<bool>,
}

impl SpecProductAutomaton {
    pub fn num_states(&self) -> usize {
        self.tuples.len()
    }

    pub fn components(&self, q: usize) -> &[usize] {
        &self.tuples[q]
    }

    pub fn pair(&self, q: usize) -> (usize, usize) {
        (self.tuples[q][0], self.tuples[q][1])
    }

    pub fn state_of(&self, components: &[usize]) -> Option<usize> {
        self.tuples.iter().position(|t| t == components)
    }

    pub fn acc_sys(&self, q: usize) -> bool {
        self.component_accepting[q][0]
    }

    pub fn acc_test(&self, q: usize) -> bool {
        self.component_accepting[q][1]
    }

    pub fn is_sink(&self, q: usize) -> bool {
        self.sink[q]
    }

    /// States reachable from the initial state under any label.
    pub fn reachable_states(&self) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = self.automaton.initial().iter().copied().collect();
        let mut queue: VecDeque<usize> = seen.iter().copied().collect();
        while let Some(q) = queue.pop_front() {
            for t in self.automaton.outgoing(q) {
                if t.guard.is_satisfiable() && seen.insert(t.to) {
                    queue.push_back(t.to);
                }
            }
        }
        seen
    }
}

fn tuple_states(automata: &[&BuchiAutomaton]) -> Vec<Vec<usize>> {
    let mut tuples = vec![Vec::new()];
    for b in automata {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                (0..b.num_states()).map(move |q| {
                    let mut t = t.clone();
                    t.push(q);
                    t
                })
            })
            .collect();
    }
    tuples
}

fn assemble(
    automata: &[&BuchiAutomaton],
    tuples: Vec<Vec<usize>>,
    transitions: Vec<Transition>,
    mode: ProductMode,
) -> SpecProductAutomaton {
    let index: HashMap<&[usize], usize> =
        tuples.iter().enumerate().map(|(i, t)| (t.as_slice(), i)).collect();
    let names = tuples
        .iter()
        .map(|t| {
            t.iter()
                .zip(automata)
                .map(|(&q, b)| b.state_name(q))
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    let initial_tuple: Vec<usize> = automata.iter().map(|b| b.initial()[0]).collect();
    let component_accepting: Vec<Vec<bool>> = tuples
        .iter()
        .map(|t| t.iter().zip(automata).map(|(&q, b)| b.is_accepting(q)).collect())
        .collect();
    let accepting = (0..tuples.len()).filter(|&i| component_accepting[i].iter().any(|&a| a)).collect();
    let sink = tuples.iter().map(|t| t.iter().zip(automata).any(|(&q, b)| b.is_sink(q))).collect();
    let automaton =
        BuchiAutomaton::new(names, transitions, vec![index[initial_tuple.as_slice()]], accepting, None)
            .expect("product indices are in range");
    SpecProductAutomaton { automaton, mode, tuples, component_accepting, sink }
}

/// Interleaving product: each transition moves exactly one component along
/// one of its own transitions while the others stay put.
pub fn async_product(automata: &[BuchiAutomaton]) -> Result<SpecProductAutomaton, ProductError> {
    if automata.len() < 2 {
        return Err(ProductError::TooFewAutomata);
    }
    let refs: Vec<&BuchiAutomaton> = automata.iter().collect();
    let tuples = tuple_states(&refs);
    let index: HashMap<Vec<usize>, usize> =
        tuples.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    let mut transitions = Vec::new();
    for (from, tuple) in tuples.iter().enumerate() {
        for (i, b) in automata.iter().enumerate() {
            for t in b.outgoing(tuple[i]) {
                let mut target = tuple.clone();
                target[i] = t.to;
                transitions.push(Transition { from, guard: t.guard.clone(), to: index[&target] });
            }
        }
    }
    Ok(assemble(&refs, tuples, transitions, ProductMode::Asynchronous))
}

/// Product of the system and test automata. In synchronous mode both
/// components step on every label.
pub fn spec_product(
    b_sys: &BuchiAutomaton,
    b_test: &BuchiAutomaton,
    mode: ProductMode,
) -> SpecProductAutomaton {
    if mode == ProductMode::Asynchronous {
        return async_product(&[b_sys.clone(), b_test.clone()]).expect("two automata");
    }
    let refs = [b_sys, b_test];
    let tuples = tuple_states(&refs);
    let width = b_test.num_states();
    let mut transitions = Vec::new();
    for (from, tuple) in tuples.iter().enumerate() {
        for t1 in b_sys.outgoing(tuple[0]) {
            for t2 in b_test.outgoing(tuple[1]) {
                let guard = PropFormula::and_all([t1.guard.clone(), t2.guard.clone()]);
                transitions.push(Transition { from, guard, to: t1.to * width + t2.to });
            }
        }
    }
    assemble(&refs, tuples, transitions, ProductMode::Synchronous)
}

// ---------------------------------------------------------------------------
// Product graphs

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductKind {
    System,
    Virtual,
    Spec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    Source,
    Intermediate,
    Target,
    Plain,
}

/// Automaton-state metadata carried by a product graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QInfo {
    pub name: String,
    /// `(q_sys, q_test)` component indices for virtual products.
    pub pair: Option<(usize, usize)>,
    pub acc_sys: bool,
    pub acc_test: bool,
    pub sink: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductNode {
    pub state: usize,
    pub q: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductEdge {
    pub from: usize,
    pub action: usize,
    pub to: usize,
}

/// Explicit product graph whose nodes pair a transition-system state with an
/// automaton state.
#[derive(Debug, Clone)]
pub struct ProductGraph {
    kind: ProductKind,
    ts_names: Vec<String>,
    action_names: Vec<String>,
    q_info: Vec<QInfo>,
    nodes: Vec<ProductNode>,
    index: HashMap<ProductNode, usize>,
    edges: Vec<ProductEdge>,
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
    initial: Vec<usize>,
    classes: Vec<NodeClass>,
}

/// Applies the synchronous-product rule to every state pair.
fn synchronous(
    ts: &TransitionSystem,
    b: &BuchiAutomaton,
    q_info: Vec<QInfo>,
    kind: ProductKind,
) -> ProductGraph {
    let nq = b.num_states();
    let nodes: Vec<ProductNode> = (0..ts.num_states())
        .flat_map(|state| (0..nq).map(move |q| ProductNode { state, q }))
        .collect();
    let node_id = |state: usize, q: usize| state * nq + q;
    let mut edges = Vec::new();
    for e in ts.edges() {
        let label = ts.label(e.to);
        for q in 0..nq {
            for p in b.successors(q, label) {
                edges.push(ProductEdge { from: node_id(e.from, q), action: e.action, to: node_id(e.to, p) });
            }
        }
    }
    let mut initial = Vec::new();
    for &s0 in ts.initial() {
        for &q0 in b.initial() {
            for q in b.successors(q0, ts.label(s0)) {
                initial.push(node_id(s0, q));
            }
        }
    }
    initial.sort_unstable();
    initial.dedup();
    ProductGraph::assemble(kind, ts, q_info, nodes, edges, initial)
}

impl ProductGraph {
    fn assemble(
        kind: ProductKind,
        ts: &TransitionSystem,
        q_info: Vec<QInfo>,
        nodes: Vec<ProductNode>,
        mut edges: Vec<ProductEdge>,
        initial: Vec<usize>,
    ) -> Self {
        edges.sort_unstable();
        edges.dedup();
        let n = nodes.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            out[e.from].push(i);
            inc[e.to].push(i);
        }
        let index = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut g = Self {
            kind,
            ts_names: (0..ts.num_states()).map(|s| ts.state_name(s).to_string()).collect(),
            action_names: ts.actions().to_vec(),
            q_info,
            nodes,
            index,
            edges,
            out,
            inc,
            initial,
            classes: Vec::new(),
        };
        g.classes = g.compute_classes();
        g
    }

    fn compute_classes(&self) -> Vec<NodeClass> {
        let initial: BTreeSet<usize> = self.initial.iter().copied().collect();
        (0..self.nodes.len())
            .map(|v| {
                let info = &self.q_info[self.nodes[v].q];
                if self.kind == ProductKind::Virtual && info.acc_sys {
                    NodeClass::Target
                } else if self.kind == ProductKind::Virtual && info.acc_test {
                    NodeClass::Intermediate
                } else if initial.contains(&v) {
                    NodeClass::Source
                } else {
                    NodeClass::Plain
                }
            })
            .collect()
    }

    /// Restricts the graph to nodes reachable from the initial set, dropping
    /// nodes whose automaton state is a safety sink.
    pub fn pruned(&self) -> ProductGraph {
        let keep = |v: usize| !self.q_info[self.nodes[v].q].sink;
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::new();
        for &v in &self.initial {
            if keep(v) && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &e in &self.out[v] {
                let w = self.edges[e].to;
                if keep(w) && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for v in 0..self.nodes.len() {
            if seen[v] {
                remap[v] = nodes.len();
                nodes.push(self.nodes[v]);
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| seen[e.from] && seen[e.to])
            .map(|e| ProductEdge { from: remap[e.from], action: e.action, to: remap[e.to] })
            .collect();
        let initial = self.initial.iter().filter(|&&v| seen[v]).map(|&v| remap[v]).collect();
        let n = nodes.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        let edges: Vec<ProductEdge> = edges;
        for (i, e) in edges.iter().enumerate() {
            out[e.from].push(i);
            inc[e.to].push(i);
        }
        let index = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut g = ProductGraph {
            kind: self.kind,
            ts_names: self.ts_names.clone(),
            action_names: self.action_names.clone(),
            q_info: self.q_info.clone(),
            nodes,
            index,
            edges,
            out,
            inc,
            initial,
            classes: Vec::new(),
        };
        g.classes = g.compute_classes();
        g
    }

    pub fn kind(&self) -> ProductKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, v: usize) -> ProductNode {
        self.nodes[v]
    }

    pub fn node_index(&self, state: usize, q: usize) -> Option<usize> {
        self.index.get(&ProductNode { state, q }).copied()
    }

    pub fn nodes(&self) -> &[ProductNode] {
        &self.nodes
    }

    pub fn edge(&self, e: usize) -> ProductEdge {
        self.edges[e]
    }

    pub fn edges(&self) -> &[ProductEdge] {
        &self.edges
    }

    pub fn outgoing(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn incoming(&self, v: usize) -> &[usize] {
        &self.inc[v]
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn class(&self, v: usize) -> NodeClass {
        self.classes[v]
    }

    pub fn q_info(&self, q: usize) -> &QInfo {
        &self.q_info[q]
    }

    pub fn num_q(&self) -> usize {
        self.q_info.len()
    }

    pub fn is_accepting_sys(&self, v: usize) -> bool {
        self.q_info[self.nodes[v].q].acc_sys
    }

    pub fn is_accepting_test(&self, v: usize) -> bool {
        self.q_info[self.nodes[v].q].acc_test
    }

    pub fn ts_name(&self, s: usize) -> &str {
        &self.ts_names[s]
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.action_names[a]
    }

    /// Stable textual identifier `state|q`.
    pub fn node_name(&self, v: usize) -> String {
        let n = self.nodes[v];
        format!("{}|{}", self.ts_names[n.state], self.q_info[n.q].name)
    }

    pub fn node_by_name(&self, name: &str) -> Option<usize> {
        (0..self.nodes.len()).find(|&v| self.node_name(v) == name)
    }

    pub fn edge_by_action(&self, v: usize, action: usize) -> Option<usize> {
        self.out[v].iter().copied().find(|&e| self.edges[e].action == action)
    }

    /// Nodes with automaton state `q`.
    pub fn map_bpi_to_g(&self, q: usize) -> Result<Vec<usize>, ProductError> {
        if q >= self.q_info.len() {
            return Err(ProductError::UnknownState(q));
        }
        Ok((0..self.nodes.len()).filter(|&v| self.nodes[v].q == q).collect())
    }

    /// Outgoing edges of the nodes active at automaton state `q`.
    pub fn active_cut_candidates(&self, q: usize) -> Result<Vec<usize>, ProductError> {
        let nodes = self.map_bpi_to_g(q)?;
        let mut out: Vec<usize> = nodes.iter().flat_map(|&v| self.out[v].iter().copied()).collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Automaton states that occur on some node.
    pub fn active_q(&self) -> BTreeSet<usize> {
        self.nodes.iter().map(|n| n.q).collect()
    }

    pub fn project_to_ts(&self, v: usize) -> usize {
        self.nodes[v].state
    }

    pub fn project_to_bpi(&self, v: usize) -> usize {
        self.nodes[v].q
    }

    /// `(s, (q_sys, q_test)) -> (s, q_sys)`, as a node of `s_prod`.
    pub fn project_node_to_system(&self, v: usize, s_prod: &ProductGraph) -> Option<usize> {
        let n = self.nodes[v];
        let (q_sys, _) = self.q_info[n.q].pair?;
        s_prod.node_index(n.state, q_sys)
    }

    /// Image of a virtual-product edge on the system product.
    pub fn map_cut_to_system(&self, e: usize, s_prod: &ProductGraph) -> Result<usize, ProductError> {
        let edge = self.edges[e];
        let (u, v) = match (
            self.project_node_to_system(edge.from, s_prod),
            self.project_node_to_system(edge.to, s_prod),
        ) {
            (Some(u), Some(v)) => (u, v),
            _ => return Err(ProductError::DanglingEdge(e)),
        };
        s_prod.out[u]
            .iter()
            .copied()
            .find(|&f| s_prod.edges[f].action == edge.action && s_prod.edges[f].to == v)
            .ok_or(ProductError::DanglingEdge(e))
    }

    /// Constraints visible on the system product at automaton state `q`:
    /// the mapped images of `C_G(q)`, where an edge hit several times keeps
    /// the largest cut value.
    pub fn context_cuts(
        &self,
        s_prod: &ProductGraph,
        q: usize,
        cut_value: impl Fn(usize) -> f64,
    ) -> Result<BTreeMap<usize, f64>, ProductError> {
        let mut out = BTreeMap::new();
        for e in self.active_cut_candidates(q)? {
            let image = self.map_cut_to_system(e, s_prod)?;
            let value = cut_value(e);
            let slot = out.entry(image).or_insert(value);
            if value > *slot {
                *slot = value;
            }
        }
        Ok(out)
    }

    /// Nodes reachable from `from` using only edges accepted by `allow`.
    pub fn reach_forward(&self, from: &[usize], allow: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &v in from {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &e in &self.out[v] {
                let w = self.edges[e].to;
                if allow(e) && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Nodes that reach `to` using only edges accepted by `allow`.
    pub fn reach_backward(&self, to: &[usize], allow: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &v in to {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &e in &self.inc[v] {
                let u = self.edges[e].from;
                if allow(e) && !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    pub fn dump(&self) -> GraphDump {
        GraphDump {
            kind: self.kind,
            nodes: (0..self.nodes.len())
                .map(|v| NodeDump {
                    id: self.node_name(v),
                    class: self.classes[v],
                    state: self.ts_names[self.nodes[v].state].clone(),
                    q: self.q_info[self.nodes[v].q].name.clone(),
                    initial: self.initial.contains(&v),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRef {
                    from: self.node_name(e.from),
                    action: self.action_names[e.action].clone(),
                    to: self.node_name(e.to),
                })
                .collect(),
        }
    }

    /// Graphviz rendering for debugging.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph product {\n");
        for v in 0..self.nodes.len() {
            let shape = match self.classes[v] {
                NodeClass::Source => "box",
                NodeClass::Intermediate => "diamond",
                NodeClass::Target => "doublecircle",
                NodeClass::Plain => "ellipse",
            };
            let _ = writeln!(
                s,
                "  n{v} [label=\"{}\", shape={shape}, class=\"{:?}\"];",
                self.node_name(v),
                self.classes[v]
            );
        }
        for e in &self.edges {
            let _ = writeln!(s, "  n{} -> n{} [label=\"{}\"];", e.from, e.to, self.action_names[e.action]);
        }
        s.push_str("}\n");
        s
    }

    /// SHA-256 of the canonical JSON dump.
    pub fn canonical_hash(&self) -> String {
        let json = serde_json::to_vec(&self.dump()).expect("serializable");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDump {
    pub id: String,
    pub class: NodeClass,
    pub state: String,
    pub q: String,
    pub initial: bool,
}

/// Edge identified by its endpoint node ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeRef {
    pub from: String,
    pub action: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDump {
    pub kind: ProductKind,
    pub nodes: Vec<NodeDump>,
    pub edges: Vec<EdgeRef>,
}

// ---------------------------------------------------------------------------
// Constructions

/// Synchronous product `T ⊗ B` over all of `S × Q`.
pub fn sync_product(ts: &TransitionSystem, b: &BuchiAutomaton) -> Result<ProductGraph, ProductError> {
    ts.check_automaton(b)?;
    let q_info = (0..b.num_states())
        .map(|q| QInfo {
            name: b.state_name(q).to_string(),
            pair: None,
            acc_sys: b.is_accepting(q),
            acc_test: false,
            sink: b.is_sink(q),
        })
        .collect();
    Ok(synchronous(ts, b, q_info, ProductKind::System))
}

/// `G = T ⊗ B_Π`, restricted to reachable nodes outside the safety sinks,
/// with source/intermediate/target classes assigned.
pub fn virtual_product(
    ts: &TransitionSystem,
    bpi: &SpecProductAutomaton,
) -> Result<ProductGraph, ProductError> {
    if bpi.mode != ProductMode::Synchronous {
        return Err(ProductError::AsynchronousSpecProduct);
    }
    ts.check_automaton(&bpi.automaton)?;
    let q_info = (0..bpi.num_states())
        .map(|q| QInfo {
            name: bpi.automaton.state_name(q).to_string(),
            pair: Some(bpi.pair(q)),
            acc_sys: bpi.acc_sys(q),
            acc_test: bpi.acc_test(q),
            sink: bpi.is_sink(q),
        })
        .collect();
    Ok(synchronous(ts, &bpi.automaton, q_info, ProductKind::Virtual).pruned())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeClasses {
    pub source: Vec<usize>,
    pub intermediate: Vec<usize>,
    pub target: Vec<usize>,
}

/// Source, intermediate and target node sets of a virtual product graph.
/// A node accepting for both specifications is a target; an initial node
/// that is already intermediate or target is not a source.
pub fn classify_nodes(g: &ProductGraph) -> Result<NodeClasses, ProductError> {
    let of = |c: NodeClass| (0..g.num_nodes()).filter(|&v| g.class(v) == c).collect::<Vec<_>>();
    let classes = NodeClasses {
        source: of(NodeClass::Source),
        intermediate: of(NodeClass::Intermediate),
        target: of(NodeClass::Target),
    };
    if classes.target.is_empty() {
        return Err(ProductError::EmptyTarget);
    }
    if classes.intermediate.is_empty() {
        return Err(ProductError::EmptyIntermediate);
    }
    Ok(classes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceReturnReport {
    pub passed: bool,
    /// States with no path back to a source.
    pub path_violations: Vec<String>,
    /// States with no direct edge to a source (the stricter reading).
    pub edge_violations: Vec<String>,
}

/// Checks that every non-accepting system-product node can return to a
/// source node. Accepting nodes end the test and unreachable nodes never
/// occur, so neither is checked.
pub fn check_source_return_assumption(s_prod: &ProductGraph) -> SourceReturnReport {
    let sources = s_prod.initial().to_vec();
    let back = s_prod.reach_backward(&sources, |_| true);
    let forward = s_prod.reach_forward(&sources, |_| true);
    let source_set: BTreeSet<usize> = sources.iter().copied().collect();
    let mut path_violations = Vec::new();
    let mut edge_violations = Vec::new();
    for v in 0..s_prod.num_nodes() {
        if !forward[v] || s_prod.is_accepting_sys(v) || s_prod.q_info(s_prod.node(v).q).sink {
            continue;
        }
        if !back[v] {
            path_violations.push(s_prod.node_name(v));
        }
        let direct = source_set.contains(&v)
            || s_prod.outgoing(v).iter().any(|&e| source_set.contains(&s_prod.edge(e).to));
        if !direct {
            edge_violations.push(s_prod.node_name(v));
        }
    }
    SourceReturnReport { passed: path_violations.is_empty(), path_violations, edge_violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{build_nba, parse_spec, unit_automaton, Role};

    fn props(names: &[&str]) -> Vec<AtomicProposition> {
        names.iter().map(|n| AtomicProposition::new(*n).unwrap()).collect()
    }

    /// Corridor `c1 .. cn` with left/right moves.
    fn corridor(n: usize, start: usize, labels: &[(usize, &str)], ap: &[&str]) -> TransitionSystem {
        let states = (1..=n).map(|i| format!("c{i}")).collect();
        let mut edges = Vec::new();
        for i in 0..n {
            if i > 0 {
                edges.push(TsEdge { from: i, action: 0, to: i - 1 });
            }
            if i + 1 < n {
                edges.push(TsEdge { from: i, action: 1, to: i + 1 });
            }
        }
        let mut ls = vec![LabelSet::new(); n];
        for &(c, p) in labels {
            ls[c - 1].insert(p.to_string());
        }
        TransitionSystem::new(states, vec!["left".into(), "right".into()], edges, vec![start - 1], props(ap), ls)
            .unwrap()
    }

    fn goal_nba(ap: &[&str]) -> BuchiAutomaton {
        build_nba(&parse_spec("<> (goal)", Role::System, &props(ap)).unwrap()).unwrap()
    }

    #[test]
    fn rejects_nondeterministic_edges() {
        let err = TransitionSystem::new(
            vec!["a".into(), "b".into()],
            vec!["go".into()],
            vec![TsEdge { from: 0, action: 0, to: 1 }, TsEdge { from: 0, action: 0, to: 0 }],
            vec![0],
            vec![],
            vec![LabelSet::new(), LabelSet::new()],
        );
        assert!(matches!(err, Err(ProductError::InvalidSystem(_))));
    }

    #[test]
    fn three_cell_corridor_product() {
        let ts = corridor(3, 1, &[(3, "goal")], &["goal"]);
        let b = goal_nba(&["goal"]);
        let s = sync_product(&ts, &b).unwrap();
        assert_eq!(s.num_nodes(), 6);
        // 4 ts edges, each lifted once per automaton state
        assert_eq!(s.num_edges(), 8);
        let acc: Vec<usize> = (0..6).filter(|&v| s.is_accepting_sys(v)).collect();
        assert_eq!(acc.len(), 3);
        let target = s.node_index(2, 1).unwrap();
        let reach = s.reach_forward(s.initial(), |_| true);
        assert!(reach[target]);
        assert_eq!(s.initial(), &[s.node_index(0, 0).unwrap()]);
    }

    #[test]
    fn unit_automaton_product_mirrors_ts() {
        let ts = corridor(4, 2, &[], &[]);
        let s = sync_product(&ts, &unit_automaton()).unwrap();
        assert_eq!(s.num_nodes(), ts.num_states());
        assert_eq!(s.num_edges(), ts.edges().len());
        assert!(s.nodes().iter().all(|n| n.q == 0));
    }

    #[test]
    fn edgeless_ts_gives_edgeless_product() {
        let ts = TransitionSystem::new(
            vec!["only".into()],
            vec![],
            vec![],
            vec![0],
            props(&["goal"]),
            vec![LabelSet::new()],
        )
        .unwrap();
        let s = sync_product(&ts, &goal_nba(&["goal"])).unwrap();
        assert_eq!(s.num_edges(), 0);
    }

    #[test]
    fn proposition_mismatch_detected() {
        let ts = corridor(3, 1, &[], &[]);
        assert!(matches!(sync_product(&ts, &goal_nba(&["goal"])), Err(ProductError::PropositionMismatch(_))));
    }

    #[test]
    fn async_product_moves_one_component() {
        let a = goal_nba(&["goal"]);
        let b = build_nba(&parse_spec("<> (k)", Role::Test, &props(&["k"])).unwrap()).unwrap();
        let p = async_product(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(p.num_states(), 4);
        for t in p.automaton.transitions() {
            let (u, v) = (p.components(t.from), p.components(t.to));
            assert!(u.iter().zip(v).filter(|(x, y)| x != y).count() <= 1);
        }
        // F = union of component acceptance
        for q in 0..4 {
            assert_eq!(p.automaton.is_accepting(q), p.acc_sys(q) || p.acc_test(q));
        }
        let via = spec_product(&a, &b, ProductMode::Asynchronous);
        assert_eq!(via.automaton.transitions(), p.automaton.transitions());
        assert!(async_product(&[a]).is_err());
    }

    #[test]
    fn sync_spec_product_of_goal_and_keys() {
        let ap = ["goal", "k1", "k2"];
        let sys = goal_nba(&ap);
        let test = build_nba(&parse_spec("<> (k1) && <> (k2)", Role::Test, &props(&ap)).unwrap()).unwrap();
        let p = spec_product(&sys, &test, ProductMode::Synchronous);
        assert_eq!(p.num_states(), 8);
        assert!(p.reachable_states().len() <= 8);
        let both = p.state_of(&[1, 3]).unwrap();
        assert!(p.acc_sys(both) && p.acc_test(both));
        // determinism on every label
        for mask in 0..8u32 {
            let l: LabelSet = ap.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, s)| s.to_string()).collect();
            for q in 0..8 {
                assert_eq!(p.automaton.successors(q, &l).len(), 1);
            }
        }
    }

    #[test]
    fn self_product_stays_on_diagonal() {
        let b = build_nba(&parse_spec("<> (k1) && <> (k2)", Role::Test, &props(&["k1", "k2"])).unwrap()).unwrap();
        let p = spec_product(&b, &b, ProductMode::Synchronous);
        for q in p.reachable_states() {
            let (x, y) = p.pair(q);
            assert_eq!(x, y);
        }
    }

    fn corridor5() -> (TransitionSystem, ProductGraph, ProductGraph) {
        let ap = ["goal", "key_1", "key_2"];
        let ts = corridor(5, 3, &[(1, "goal"), (5, "goal"), (2, "key_1"), (4, "key_2")], &ap);
        let sys = goal_nba(&ap);
        let test =
            build_nba(&parse_spec("<> (key_1) && <> (key_2)", Role::Test, &props(&ap)).unwrap()).unwrap();
        let bpi = spec_product(&sys, &test, ProductMode::Synchronous);
        let g = virtual_product(&ts, &bpi).unwrap();
        let s = sync_product(&ts, &sys).unwrap().pruned();
        (ts, g, s)
    }

    #[test]
    fn corridor_classes() {
        let (_, g, _) = corridor5();
        let c = classify_nodes(&g).unwrap();
        assert_eq!(c.source.len(), 1);
        assert_eq!(g.node_name(c.source[0]), "c3|q0,q0");
        for &v in &c.intermediate {
            assert!(g.is_accepting_test(v) && !g.is_accepting_sys(v));
        }
        for &v in &c.target {
            assert!(g.is_accepting_sys(v));
        }
        // key_1 then key_2 without touching a goal
        assert!(c.intermediate.iter().any(|&v| g.node_name(v) == "c4|q0,q3"));
    }

    #[test]
    fn mappings_partition_nodes_and_edges() {
        let (_, g, s) = corridor5();
        let mut nodes = 0;
        let mut edges = 0;
        for q in 0..g.num_q() {
            nodes += g.map_bpi_to_g(q).unwrap().len();
            edges += g.active_cut_candidates(q).unwrap().len();
        }
        assert_eq!(nodes, g.num_nodes());
        assert_eq!(edges, g.num_edges());
        assert!(matches!(g.map_bpi_to_g(99), Err(ProductError::UnknownState(99))));
        for v in 0..g.num_nodes() {
            assert!(g.map_bpi_to_g(g.project_to_bpi(v)).unwrap().contains(&v));
            let sv = g.project_node_to_system(v, &s).unwrap();
            assert_eq!(s.node(sv).state, g.project_to_ts(v));
        }
        for e in 0..g.num_edges() {
            g.map_cut_to_system(e, &s).unwrap();
        }
    }

    #[test]
    fn corridor_passes_source_return() {
        let (_, _, s) = corridor5();
        let report = check_source_return_assumption(&s);
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn one_way_chain_fails_source_return() {
        let states = vec!["a".into(), "b".into(), "c".into()];
        let edges = vec![TsEdge { from: 0, action: 0, to: 1 }, TsEdge { from: 1, action: 0, to: 2 }];
        let mut ls = vec![LabelSet::new(); 3];
        ls[2].insert("goal".into());
        let ts = TransitionSystem::new(states, vec!["next".into()], edges, vec![0], props(&["goal"]), ls).unwrap();
        let s = sync_product(&ts, &goal_nba(&["goal"])).unwrap().pruned();
        let report = check_source_return_assumption(&s);
        assert!(!report.passed);
        assert_eq!(report.path_violations, vec!["b|q0".to_string()]);
    }

    #[test]
    fn dump_and_hash_are_stable() {
        let (_, g, _) = corridor5();
        assert_eq!(g.canonical_hash(), corridor5().1.canonical_hash());
        let dump = g.dump();
        assert_eq!(dump.nodes.len(), g.num_nodes());
        assert!(g.to_dot().starts_with("digraph"));
    }
}
