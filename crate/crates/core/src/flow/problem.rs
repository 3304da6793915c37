//! The cut-synthesis instance: node classes, commodity networks, cuttable
//! edges and the per-state context blocks on the system product.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::FlowError;
use crate::product::{classify_nodes, ProductError, ProductGraph, ProductKind};

/// A commodity's network: arcs of `G` that lie on some source-to-sink path.
#[derive(Debug, Clone, Default)]
pub struct Commodity {
    pub sources: Vec<usize>,
    pub sinks: Vec<usize>,
    pub arcs: Vec<usize>,
}

/// Reachability constraint on the system product for one automaton state
/// `q`: a path from the source images to the target images must survive
/// the mapped cuts active at `q`.
#[derive(Debug, Clone)]
pub struct ContextBlock {
    pub q: usize,
    /// System-product edges on some source-to-target path.
    pub arcs: Vec<usize>,
    /// System-product edge -> cuttable `G` edges mapped onto it.
    pub mapped: BTreeMap<usize, Vec<usize>>,
}

/// Sizes of the unreduced program, one variable per edge and commodity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FullFormCounts {
    pub variables: usize,
    pub capacity_rows: usize,
    pub cut_rows: usize,
    pub conservation_rows: usize,
}

#[derive(Debug, Clone)]
pub struct FlowProblem<'a> {
    pub graph: &'a ProductGraph,
    pub system: &'a ProductGraph,
    pub lambda: f64,
    pub source_to_intermediate: Commodity,
    pub intermediate_to_target: Commodity,
    /// Source-to-target arcs avoiding intermediate nodes. These are exactly
    /// the edges worth cutting: cutting anything else cannot lower the
    /// bypass flow and can only shrink the other flows.
    pub bypass: Commodity,
    pub cuttable: Vec<usize>,
    pub system_sources: Vec<usize>,
    pub system_targets: Vec<usize>,
    pub contexts: Vec<ContextBlock>,
    /// Automaton states whose context constraint was dropped because the
    /// system product has no source-to-target path even without cuts.
    pub unsatisfiable_contexts: Vec<usize>,
}

impl FlowProblem<'_> {
    pub fn is_cuttable(&self, e: usize) -> bool {
        self.cuttable.binary_search(&e).is_ok()
    }

    /// True when some initial node already accepts the system specification,
    /// so no cut set can remove the bypass.
    pub fn bypass_uncuttable(&self) -> bool {
        self.bypass.sources.iter().any(|v| self.bypass.sinks.contains(v))
    }

    pub fn full_form_counts(&self) -> FullFormCounts {
        let e = self.graph.num_edges();
        FullFormCounts {
            variables: 4 * e + 1 + self.system.num_edges() * self.graph.num_q(),
            capacity_rows: 4 * e,
            cut_rows: 3 * e,
            conservation_rows: 3 * self.graph.num_nodes(),
        }
    }
}

fn restrict(g: &ProductGraph, sources: &[usize], sinks: &[usize], blocked: &BTreeSet<usize>) -> Commodity {
    let sink_set: BTreeSet<usize> = sinks.iter().copied().collect();
    let open = |e: usize| {
        let edge = g.edge(e);
        !sink_set.contains(&edge.from) && !blocked.contains(&edge.from) && !blocked.contains(&edge.to)
    };
    let fwd = g.reach_forward(sources, open);
    let bwd = g.reach_backward(sinks, open);
    let arcs = (0..g.num_edges())
        .filter(|&e| {
            let edge = g.edge(e);
            open(e) && fwd[edge.from] && bwd[edge.to]
        })
        .collect();
    Commodity { sources: sources.to_vec(), sinks: sinks.to_vec(), arcs }
}

/// Builds the synthesis instance for `g = T ⊗ B_Π` and `s_prod = T ⊗ B_sys`.
pub fn build_flow_problem<'a>(
    g: &'a ProductGraph,
    s_prod: &'a ProductGraph,
    lambda: f64,
) -> Result<FlowProblem<'a>, FlowError> {
    if g.kind() != ProductKind::Virtual || s_prod.kind() != ProductKind::System {
        return Err(FlowError::WrongGraphKind);
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(FlowError::BadLambda(lambda));
    }
    let classes = classify_nodes(g).map_err(|e| match e {
        ProductError::EmptyTarget => FlowError::EmptyClass("target"),
        ProductError::EmptyIntermediate => FlowError::EmptyClass("intermediate"),
        other => FlowError::Product(other),
    })?;
    let initial = g.initial().to_vec();
    let inter: BTreeSet<usize> = classes.intermediate.iter().copied().collect();
    let none = BTreeSet::new();

    let si = restrict(g, &initial, &classes.intermediate, &none);
    let it = restrict(g, &classes.intermediate, &classes.target, &none);
    let bypass_sources: Vec<usize> = initial.iter().copied().filter(|v| !inter.contains(v)).collect();
    let bypass = restrict(g, &bypass_sources, &classes.target, &inter);
    let cuttable = bypass.arcs.clone();

    let project = |nodes: &[usize]| -> Vec<usize> {
        let set: BTreeSet<usize> = nodes.iter().filter_map(|&v| g.project_node_to_system(v, s_prod)).collect();
        set.into_iter().collect()
    };
    let system_sources = project(&initial);
    let system_targets = project(&classes.target);

    let fwd = s_prod.reach_forward(&system_sources, |_| true);
    let bwd = s_prod.reach_backward(&system_targets, |_| true);
    let connected = system_targets.iter().any(|&v| fwd[v]);
    let sys_arcs: Vec<usize> = (0..s_prod.num_edges())
        .filter(|&e| {
            let edge = s_prod.edge(e);
            fwd[edge.from] && bwd[edge.to] && !system_targets.contains(&edge.from)
        })
        .collect();
    let direct = system_sources.iter().any(|v| system_targets.contains(v));

    let cut_set: BTreeSet<usize> = cuttable.iter().copied().collect();
    let mut contexts = Vec::new();
    let mut unsatisfiable_contexts = Vec::new();
    for q in g.active_q() {
        let candidates: Vec<usize> = g
            .active_cut_candidates(q)
            .map_err(FlowError::Product)?
            .into_iter()
            .filter(|e| cut_set.contains(e))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        if !connected {
            unsatisfiable_contexts.push(q);
            continue;
        }
        if direct {
            continue;
        }
        let mut mapped: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for e in candidates {
            let image = g.map_cut_to_system(e, s_prod).map_err(FlowError::Product)?;
            if sys_arcs.binary_search(&image).is_ok() {
                mapped.entry(image).or_default().push(e);
            }
        }
        if !mapped.is_empty() {
            contexts.push(ContextBlock { q, arcs: sys_arcs.clone(), mapped });
        }
    }
    if !unsatisfiable_contexts.is_empty() {
        log::warn!("{} context constraints dropped: no uncut source-target path", unsatisfiable_contexts.len());
    }

    Ok(FlowProblem {
        graph: g,
        system: s_prod,
        lambda,
        source_to_intermediate: si,
        intermediate_to_target: it,
        bypass,
        cuttable,
        system_sources,
        system_targets,
        contexts,
        unsatisfiable_contexts,
    })
}
