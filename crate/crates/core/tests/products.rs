mod common;

use testflow::product::{check_source_return_assumption, classify_nodes, NodeClass};

use common::{load, random_instance, BUNDLED};

#[test]
fn product_edges_project_onto_both_factors() {
    let mut checked = 0;
    for seed in 0..200 {
        let Some(inst) = random_instance(seed, 5) else { continue };
        let (ts, pr) = (&inst.ts, &inst.products);
        for (g, automaton) in [(&pr.graph, &pr.bpi.automaton), (&pr.system, &pr.b_sys)] {
            for e in g.edges() {
                let (from, to) = (g.node(e.from), g.node(e.to));
                assert_eq!(ts.successor(from.state, e.action), Some(to.state));
                assert_eq!(automaton.step(from.q, ts.label(to.state)), Some(to.q));
            }
            for &v in g.initial() {
                let n = g.node(v);
                assert!(ts.initial().contains(&n.state));
                let q0 = automaton.initial()[0];
                assert_eq!(automaton.step(q0, ts.label(n.state)), Some(n.q));
            }
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn virtual_product_keeps_only_reachable_safe_nodes() {
    for name in BUNDLED {
        let l = load(name);
        let g = &l.products.graph;
        let reach = g.reach_forward(g.initial(), |_| true);
        assert!(reach.iter().all(|&r| r), "{name}: unreachable node kept");
        assert!((0..g.num_nodes()).all(|v| !g.q_info(g.node(v).q).sink), "{name}: sink node kept");
    }
}

#[test]
fn node_classes_follow_acceptance() {
    for name in BUNDLED {
        let l = load(name);
        let g = &l.products.graph;
        let Ok(classes) = classify_nodes(g) else { continue };
        for &v in &classes.target {
            assert!(g.is_accepting_sys(v));
            assert_eq!(g.class(v), NodeClass::Target);
        }
        for &v in &classes.intermediate {
            assert!(g.is_accepting_test(v) && !g.is_accepting_sys(v));
        }
        for &v in &classes.source {
            assert!(g.initial().contains(&v));
        }
    }
}

#[test]
fn every_bundled_system_product_can_return_to_its_source() {
    for name in BUNDLED {
        let l = load(name);
        let report = check_source_return_assumption(&l.products.system);
        assert!(report.passed, "{name}: {:?}", report.path_violations);
    }
}

#[test]
fn cut_images_exist_in_the_system_product() {
    for name in BUNDLED {
        let l = load(name);
        let (g, s) = (&l.products.graph, &l.products.system);
        for e in 0..g.num_edges() {
            let image = s.edge(g.map_cut_to_system(e, s).unwrap());
            let edge = g.edge(e);
            assert_eq!(image.action, edge.action);
            assert_eq!(s.node(image.from).state, g.node(edge.from).state);
            assert_eq!(s.node(image.to).state, g.node(edge.to).state);
        }
    }
}

#[test]
fn canonical_hash_is_stable_and_discriminating() {
    let a = load("corridor_5").products.graph.canonical_hash();
    let b = load("corridor_5").products.graph.canonical_hash();
    let c = load("corridor_7").products.graph.canonical_hash();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.len(), 64);
}
