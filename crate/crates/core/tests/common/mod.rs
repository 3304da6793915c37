#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use testflow::engine::{run_test, SystemAgent, TestExecutionTrace, TestSetup};
use testflow::flow::{CutSolution, FlowError};
use testflow::ltl::{parse_spec, AtomicProposition, Role};
use testflow::product::{ProductGraph, TransitionSystem, TsEdge};
use testflow::scenario_file::{synthesize, ScenarioFile};
use testflow::scenarios::{Products, Scenario};

pub const BUNDLED: [&str; 6] =
    ["corridor_5", "corridor_7", "corridor_9", "beaver_rescue", "motion_primitives", "key_behind_goal"];

/// Bundled scenarios that admit a verified cut set.
pub const SYNTHESIZABLE: [&str; 5] = ["corridor_5", "corridor_7", "corridor_9", "beaver_rescue", "motion_primitives"];

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub struct Loaded {
    pub file: ScenarioFile,
    pub scenario: Scenario,
    pub products: Products,
}

impl Loaded {
    pub fn synthesize(&self) -> Result<CutSolution, FlowError> {
        synthesize(&self.products, &self.file.solver.lambda_grid, &self.file.solve_options())
    }

    pub fn run(&self, cuts: &BTreeSet<usize>, agent: &mut dyn SystemAgent) -> TestExecutionTrace {
        let setup = TestSetup {
            name: &self.file.name,
            ts: &self.scenario.ts,
            system: &self.products.system,
            graph: &self.products.graph,
            sys_spec: &self.scenario.sys_spec,
            test_spec: &self.scenario.test_spec,
            cuts,
        };
        run_test(&setup, agent, self.file.max_steps).expect("engine run")
    }
}

pub fn load(name: &str) -> Loaded {
    let text = std::fs::read_to_string(scenario_dir().join(format!("{name}.json"))).expect("bundled scenario");
    let file = ScenarioFile::from_json(&text).expect("valid scenario file");
    let scenario = file.build().expect("scenario builds");
    let products = scenario.products().expect("products");
    Loaded { file, scenario, products }
}

/// A small random transition system with `goal`, `k1`, `k2` labels and a
/// reach-avoid pair over them. `None` when the draw is degenerate.
pub struct RandomInstance {
    pub ts: TransitionSystem,
    pub products: Products,
}

pub fn random_instance(seed: u64, states: usize) -> Option<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let actions = vec!["a".to_string(), "b".to_string(), "c".to_string()];
    let mut edges = Vec::new();
    for s in 0..states {
        for a in 0..actions.len() {
            if rng.gen_bool(0.55) {
                edges.push(TsEdge { from: s, action: a, to: rng.gen_range(0..states) });
            }
        }
    }
    let props = ["goal", "k1", "k2"];
    let mut labels = vec![BTreeSet::new(); states];
    for l in labels.iter_mut().skip(1) {
        for p in props {
            if rng.gen_bool(0.25) {
                l.insert(p.to_string());
            }
        }
    }
    let aps: Vec<AtomicProposition> = props.iter().map(|p| AtomicProposition::new(*p).unwrap()).collect();
    let ts = TransitionSystem::new(
        (0..states).map(|s| format!("s{s}")).collect(),
        actions,
        edges,
        vec![0],
        aps.clone(),
        labels,
    )
    .ok()?;
    let test = if rng.gen_bool(0.5) { "<> (k1)" } else { "<> (k1) && <> (k2)" };
    let sys = parse_spec("<> (goal)", Role::System, &aps).ok()?;
    let test = parse_spec(test, Role::Test, &aps).ok()?;
    let b_sys = testflow::ltl::build_nba(&sys).ok()?;
    let b_test = testflow::ltl::build_nba(&test).ok()?;
    let bpi = testflow::product::spec_product(&b_sys, &b_test, testflow::product::ProductMode::Synchronous);
    let system = testflow::product::sync_product(&ts, &b_sys).ok()?;
    let graph = testflow::product::virtual_product(&ts, &bpi).ok()?;
    Some(RandomInstance { ts, products: Products { b_sys, b_test, bpi, system, graph } })
}

/// Outcome of enumerating simple paths of `g` minus `cuts` from an initial
/// node up to the first system-accepting node.
pub struct PathCensus {
    pub paths: usize,
    pub escaping: usize,
    pub truncated: bool,
}

pub fn simple_path_census(g: &ProductGraph, cuts: &BTreeSet<usize>, limit: usize) -> PathCensus {
    let mut census = PathCensus { paths: 0, escaping: 0, truncated: false };
    let mut on_path = vec![false; g.num_nodes()];
    for &v in g.initial() {
        walk(g, cuts, v, g.is_accepting_test(v), &mut on_path, &mut census, limit);
    }
    census
}

fn walk(
    g: &ProductGraph,
    cuts: &BTreeSet<usize>,
    v: usize,
    witnessed: bool,
    on_path: &mut [bool],
    census: &mut PathCensus,
    limit: usize,
) {
    if census.paths >= limit {
        census.truncated = true;
        return;
    }
    if g.is_accepting_sys(v) {
        census.paths += 1;
        if !witnessed {
            census.escaping += 1;
        }
        return;
    }
    on_path[v] = true;
    for &e in g.outgoing(v) {
        let w = g.edge(e).to;
        if cuts.contains(&e) || on_path[w] {
            continue;
        }
        walk(g, cuts, w, witnessed || g.is_accepting_test(w), on_path, census, limit);
    }
    on_path[v] = false;
}

/// Name -> index lookup for product graph edges given as `EdgeRef`s.
pub fn edge_names(g: &ProductGraph) -> HashMap<(String, String, String), usize> {
    (0..g.num_edges())
        .map(|e| {
            let edge = g.edge(e);
            ((g.node_name(edge.from), g.action_name(edge.action).to_string(), g.node_name(edge.to)), e)
        })
        .collect()
}
