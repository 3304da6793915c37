mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use testflow::flow::maxflow::FlowNetwork;
use testflow::flow::network::{max_flow_lp, min_cut_lp, CapArc};
use testflow::flow::synthesis::exact_program;
use testflow::flow::{
    brute_force_oracle, build_flow_problem, mcf_opt, sweep_lambda, verify_cuts, FlowError, SolveOptions, SolverMode,
};
use testflow::product::{ProductGraph, TransitionSystem, TsEdge};

use common::{load, random_instance, SYNTHESIZABLE};

fn digraph(nodes: usize, density: f64, seed: u64) -> Vec<CapArc> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut arcs = Vec::new();
    for u in 0..nodes {
        for v in 0..nodes {
            if u != v && rng.gen_bool(density) {
                arcs.push(CapArc { from: u, to: v, cap: 1.0 });
            }
        }
    }
    arcs
}

fn dinic(nodes: usize, arcs: &[CapArc], s: usize, t: usize) -> i64 {
    let mut net = FlowNetwork::new(nodes);
    for a in arcs {
        net.add_arc(a.from, a.to, a.cap as i64);
    }
    net.max_flow(s, t)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn max_flow_equals_min_cut_on_unit_digraphs(nodes in 2usize..=12, density in 0.1f64..0.6, seed in any::<u64>()) {
        let arcs = digraph(nodes, density, seed);
        let flow = max_flow_lp(nodes, &arcs, &[0], &[nodes - 1]).unwrap();
        let cut = min_cut_lp(nodes, &arcs, &[0], &[nodes - 1]).unwrap().unwrap();
        prop_assert_eq!(flow, cut.value);
        prop_assert_eq!(flow.fract(), 0.0);
        prop_assert_eq!(flow as i64, dinic(nodes, &arcs, 0, nodes - 1));
        let cut_arcs: f64 = cut.arc_cut.iter().sum();
        prop_assert_eq!(cut_arcs, cut.value);
    }
}

fn small_instances(count: usize) -> Vec<common::RandomInstance> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < count {
        seed += 1;
        let Some(inst) = random_instance(seed, 4 + (seed % 3) as usize) else { continue };
        let g = &inst.products.graph;
        if g.num_edges() > 25 || build_flow_problem(g, &inst.products.system, 1.0).is_err() {
            continue;
        }
        out.push(inst);
    }
    out
}

#[test]
fn exact_solver_agrees_with_exhaustive_search() {
    let opts = SolveOptions::default();
    let mut feasible = 0;
    for inst in small_instances(40) {
        let (g, s) = (&inst.products.graph, &inst.products.system);
        let oracle = brute_force_oracle(g, s, g.num_edges()).unwrap();
        let p = build_flow_problem(g, s, 1.0).unwrap();
        match mcf_opt(&p, &opts) {
            Ok(sol) => {
                feasible += 1;
                let cuts = sol.cut_indices(g).unwrap();
                assert_eq!(Some(sol.total_flow.round() as i64), oracle.best_flow);
                assert_eq!(Some(cuts.len()), oracle.min_cuts());
                assert!(oracle.optimal.contains(&cuts), "solver set {cuts:?} not among {:?}", oracle.optimal);
                assert!(sol.verification.passed);
            }
            Err(FlowError::Infeasible(_)) => assert_eq!(oracle.best_flow, None),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
    assert!(feasible >= 10, "corpus too thin: {feasible} feasible instances");
}

#[test]
fn bundled_solutions_are_sound() {
    for name in SYNTHESIZABLE {
        let l = load(name);
        let sol = l.synthesize().unwrap();
        let (g, s) = (&l.products.graph, &l.products.system);
        let cuts = sol.cut_indices(g).unwrap();
        // The system's best response under the cuts is recomputed from scratch.
        let report = verify_cuts(g, s, &cuts).unwrap();
        assert_eq!(report.bypass_flow as f64, sol.bypass_flow, "{name}");
        assert!(sol.t > 0.0);
        assert_eq!(1.0 / sol.t, sol.total_flow);
        assert_eq!(
            sol.total_flow,
            report.flow_source_to_intermediate.min(report.flow_intermediate_to_target) as f64,
            "{name}"
        );
        assert!(sol.profile.iter().all(|p| p.value == 0.0 || p.value == 1.0));
    }
}

#[test]
fn lambda_sweep_on_corridor() {
    let l = load("corridor_5");
    let (g, s) = (&l.products.graph, &l.products.system);
    let p = build_flow_problem(g, s, 1.0).unwrap();
    let soft = SolveOptions { hard_bypass: false, ..SolveOptions::default() };

    let mut flows = Vec::new();
    for lambda in [0.5, 1.0] {
        let (chosen, sol) = sweep_lambda(&p, &[lambda], &soft).unwrap();
        assert_eq!(chosen, Some(lambda));
        assert!(sol.verification.passed);
        flows.push(sol.total_flow);
    }
    assert_eq!(flows[0], flows[1]);

    let (chosen, sol) = sweep_lambda(&p, &[0.5, 1.0], &soft).unwrap();
    assert_eq!(chosen, Some(0.5));
    assert_eq!(sol.cuts.len(), 2);

    let (none, hard) = sweep_lambda(&p, &[0.5, 1.0], &SolveOptions::default()).unwrap();
    assert_eq!(none, None);
    assert_eq!(hard.lambda, None);
    assert_eq!(hard.cuts, sol.cuts);
}

#[test]
fn free_bypass_is_rejected_by_verification() {
    let l = load("corridor_5");
    let p = build_flow_problem(&l.products.graph, &l.products.system, 0.0).unwrap();
    let soft = SolveOptions { hard_bypass: false, ..SolveOptions::default() };
    let sol = mcf_opt(&p, &soft).unwrap();
    assert!(!sol.verification.bypass_ok);
    assert_eq!(sweep_lambda(&p, &[0.0], &soft).unwrap_err(), FlowError::NoFeasibleLambda);
}

#[test]
fn relaxed_mode_profile_is_normalized() {
    let l = load("corridor_5");
    let p = build_flow_problem(&l.products.graph, &l.products.system, 1.0).unwrap();
    let opts = SolveOptions { mode: SolverMode::RelaxedIterative, ..SolveOptions::default() };
    let sol = mcf_opt(&p, &opts).unwrap();
    assert_eq!(sol.mode, SolverMode::RelaxedIterative);
    assert!(sol.profile.iter().all(|p| (0.0..=1.0 + 1e-9).contains(&p.value)));
    assert!(sol.t > 0.0 && sol.t <= 1.0 + 1e-9);
    let above: usize = sol.profile.iter().filter(|p| p.value >= opts.threshold).count();
    assert_eq!(above, sol.cuts.len());
}

#[test]
fn lp_export_lists_every_row_and_integer() {
    let l = load("corridor_5");
    let p = build_flow_problem(&l.products.graph, &l.products.system, 1.0).unwrap();
    let mip = exact_program(&p, true);
    let text = mip.lp.to_lp_format(&mip.integer);
    assert!(text.starts_with("Minimize\n"));
    let rows = text.lines().skip_while(|l| *l != "Subject To").skip(1).take_while(|l| *l != "Bounds").count();
    assert_eq!(rows, mip.lp.num_constraints());
    let general = text.lines().skip_while(|l| *l != "General").skip(1).take_while(|l| *l != "End").count();
    assert_eq!(general, p.cuttable.len());
}

#[test]
fn full_form_counts_on_corridor() {
    let l = load("corridor_5");
    let (g, s) = (&l.products.graph, &l.products.system);
    let p = build_flow_problem(g, s, 1.0).unwrap();
    let c = p.full_form_counts();
    assert_eq!((g.num_nodes(), g.num_edges(), s.num_edges(), g.num_q()), (19, 34, 16, 8));
    assert_eq!(c.capacity_rows, 136);
    assert_eq!(c.cut_rows, 102);
    assert_eq!(c.conservation_rows, 57);
    assert_eq!(c.variables, 4 * 34 + 1 + 16 * 8);
}

#[test]
fn forced_topology_needs_no_cuts() {
    // c1 -> c2(key) -> c3(goal): every run meets the key.
    let l = testflow::scenarios::build_corridor(3, 1, &[3], &[2]).unwrap();
    let pr = l.products().unwrap();
    let oracle = brute_force_oracle(&pr.graph, &pr.system, 4).unwrap();
    assert_eq!(oracle.optimal, vec![BTreeSet::new()]);
    let p = build_flow_problem(&pr.graph, &pr.system, 1.0).unwrap();
    let sol = mcf_opt(&p, &SolveOptions::default()).unwrap();
    assert!(sol.cuts.is_empty());
    assert_eq!(sol.total_flow, 1.0);
}

#[test]
fn oracle_refuses_large_exhaustive_search() {
    let l = load("corridor_9");
    let err = brute_force_oracle(&l.products.graph, &l.products.system, 5).unwrap_err();
    assert!(matches!(err, FlowError::TooLarge { .. }));
}

fn with_extra_edge(ts: &TransitionSystem, seed: u64) -> Option<TransitionSystem> {
    let n = ts.num_states();
    let na = ts.actions().len();
    let free: Vec<(usize, usize)> =
        (0..n).flat_map(|s| (0..na).map(move |a| (s, a))).filter(|&(s, a)| ts.successor(s, a).is_none()).collect();
    if free.is_empty() {
        return None;
    }
    let (s, a) = free[seed as usize % free.len()];
    let mut edges = ts.edges().to_vec();
    edges.push(TsEdge { from: s, action: a, to: (seed as usize / 7) % n });
    TransitionSystem::new(
        (0..n).map(|s| ts.state_name(s).to_string()).collect(),
        ts.actions().to_vec(),
        edges,
        ts.initial().to_vec(),
        ts.propositions().to_vec(),
        (0..n).map(|s| ts.label(s).clone()).collect(),
    )
    .ok()
}

fn optimal_flow(g: &ProductGraph, s: &ProductGraph) -> Option<f64> {
    let p = build_flow_problem(g, s, 1.0).ok()?;
    mcf_opt(&p, &SolveOptions::default()).ok().map(|sol| sol.total_flow)
}

#[test]
fn adding_an_edge_never_lowers_the_optimal_flow() {
    let mut compared = 0;
    for (k, inst) in small_instances(30).into_iter().enumerate() {
        let Some(before) = optimal_flow(&inst.products.graph, &inst.products.system) else { continue };
        let Some(ts) = with_extra_edge(&inst.ts, k as u64 * 31 + 5) else { continue };
        let b_sys = &inst.products.b_sys;
        let system = testflow::product::sync_product(&ts, b_sys).unwrap();
        let graph = testflow::product::virtual_product(&ts, &inst.products.bpi).unwrap();
        let after = optimal_flow(&graph, &system).expect("the smaller graph's cuts extend to the larger one");
        assert!(after >= before, "flow dropped from {before} to {after}");
        compared += 1;
    }
    assert!(compared >= 10);
}
