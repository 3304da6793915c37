//! Combinatorial re-check of a cut set on the virtual product graph.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::maxflow::{FlowNetwork, UNBOUNDED};
use super::FlowError;
use crate::product::{classify_nodes, ProductError, ProductGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextCheck {
    pub q: String,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Max flow from the sources to the targets avoiding intermediate nodes.
    pub bypass_flow: i64,
    pub bypass_ok: bool,
    pub flow_source_to_intermediate: i64,
    pub flow_intermediate_to_target: i64,
    /// `min` of the two tester flows.
    pub total_flow: i64,
    pub total_flow_ok: bool,
    pub contexts: Vec<ContextCheck>,
    pub contexts_ok: bool,
    pub passed: bool,
}

/// Unit-capacity max flow on `g` without the `cuts` edges. Edges leaving a
/// sink or touching an `avoid` node carry nothing.
pub(crate) fn cut_graph_flow(
    g: &ProductGraph,
    cuts: &BTreeSet<usize>,
    sources: &[usize],
    sinks: &[usize],
    avoid: &BTreeSet<usize>,
) -> i64 {
    let sources: Vec<usize> = sources.iter().copied().filter(|v| !avoid.contains(v)).collect();
    let mut net = FlowNetwork::new(g.num_nodes());
    for (e, edge) in g.edges().iter().enumerate() {
        if cuts.contains(&e) || sinks.contains(&edge.from) || avoid.contains(&edge.from) || avoid.contains(&edge.to) {
            continue;
        }
        net.add_arc(edge.from, edge.to, 1);
    }
    net.max_flow_between(&sources, sinks)
}

/// Whether the system product still has a path from `sources` to
/// `targets` once the images of the cuts active at `q` are removed.
fn context_path(g: &ProductGraph, s_prod: &ProductGraph, cuts: &BTreeSet<usize>, q: usize, sources: &[usize], targets: &BTreeSet<usize>) -> Result<bool, ProductError> {
    let mut blocked = BTreeSet::new();
    for e in g.active_cut_candidates(q)? {
        if cuts.contains(&e) {
            blocked.insert(g.map_cut_to_system(e, s_prod)?);
        }
    }
    let reach = s_prod.reach_forward(sources, |e| !blocked.contains(&e) && !targets.contains(&s_prod.edge(e).from));
    Ok(targets.iter().any(|&v| reach[v]))
}

/// Checks that the cut graph has no bypass flow, keeps a total flow of at
/// least one, and leaves the system a way to its goal at every automaton
/// state.
pub fn verify_cuts(g: &ProductGraph, s_prod: &ProductGraph, cuts: &BTreeSet<usize>) -> Result<VerificationReport, FlowError> {
    let classes = classify_nodes(g).map_err(FlowError::Product)?;
    let none = BTreeSet::new();
    let inter: BTreeSet<usize> = classes.intermediate.iter().copied().collect();
    let bypass = cut_graph_flow(g, cuts, g.initial(), &classes.target, &inter);
    let si = cut_graph_flow(g, cuts, g.initial(), &classes.intermediate, &none);
    let it = cut_graph_flow(g, cuts, &classes.intermediate, &classes.target, &none);
    let total = si.min(it);

    let project = |nodes: &[usize]| -> BTreeSet<usize> {
        nodes.iter().filter_map(|&v| g.project_node_to_system(v, s_prod)).collect()
    };
    let sys_sources: Vec<usize> = project(g.initial()).into_iter().collect();
    let sys_targets = project(&classes.target);
    let uncut = context_path(g, s_prod, &BTreeSet::new(), 0, &sys_sources, &sys_targets).map_err(FlowError::Product)?;

    let mut contexts = Vec::new();
    for q in g.active_q() {
        // Without an uncut path the constraint is dropped, as in synthesis.
        let ok = !uncut || context_path(g, s_prod, cuts, q, &sys_sources, &sys_targets).map_err(FlowError::Product)?;
        contexts.push(ContextCheck { q: g.q_info(q).name.clone(), ok });
    }
    let contexts_ok = contexts.iter().all(|c| c.ok);
    let bypass_ok = bypass == 0;
    let total_flow_ok = (1..UNBOUNDED).contains(&total);
    Ok(VerificationReport {
        bypass_flow: bypass,
        bypass_ok,
        flow_source_to_intermediate: si,
        flow_intermediate_to_target: it,
        total_flow: total,
        total_flow_ok,
        contexts,
        contexts_ok,
        passed: bypass_ok && total_flow_ok && contexts_ok,
    })
}
