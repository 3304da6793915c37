//! WebAssembly bindings for the browser demo. Each export takes and returns
//! JSON text so the page can show the documents as they are.

use std::collections::BTreeSet;

use testflow::engine::{run_test as run, RandomAgent, ReplanningAgent, SystemAgent, TestExecutionTrace, TestSetup};
use testflow::flow::CutSolution;
use testflow::scenario_file::{synthesize as synth, ScenarioFile};
use testflow::scenarios::{render_frames as frames, Products, Scenario};
use wasm_bindgen::prelude::*;

pub const BUNDLED: [(&str, &str); 6] = [
    ("corridor_5", include_str!("../../../scenarios/corridor_5.json")),
    ("corridor_7", include_str!("../../../scenarios/corridor_7.json")),
    ("corridor_9", include_str!("../../../scenarios/corridor_9.json")),
    ("beaver_rescue", include_str!("../../../scenarios/beaver_rescue.json")),
    ("motion_primitives", include_str!("../../../scenarios/motion_primitives.json")),
    ("key_behind_goal", include_str!("../../../scenarios/key_behind_goal.json")),
];

struct Loaded {
    file: ScenarioFile,
    scenario: Scenario,
    products: Products,
}

fn load(text: &str) -> Result<Loaded, String> {
    let file = ScenarioFile::from_json(text).map_err(|e| e.to_string())?;
    let scenario = file.build().map_err(|e| e.to_string())?;
    let products = scenario.products().map_err(|e| e.to_string())?;
    Ok(Loaded { file, scenario, products })
}

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Cut file for a scenario document.
pub fn synthesize_json(scenario: &str) -> Result<String, String> {
    let l = load(scenario)?;
    let sol = synth(&l.products, &l.file.solver.lambda_grid, &l.file.solve_options()).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string_pretty(&sol).expect("serializable"))
}

/// JSON-lines trace of one reactive test. `agent` is `replanning` or `random`.
pub fn run_json(scenario: &str, cuts: &str, agent: &str, seed: u64) -> Result<String, String> {
    let l = load(scenario)?;
    let cuts: BTreeSet<usize> = if cuts.trim().is_empty() {
        BTreeSet::new()
    } else {
        let sol: CutSolution = serde_json::from_str(cuts).map_err(|e| e.to_string())?;
        sol.cut_indices(&l.products.graph).map_err(|e| e.to_string())?
    };
    let mut agent: Box<dyn SystemAgent> = match agent {
        "replanning" => Box::new(ReplanningAgent),
        "random" => Box::new(RandomAgent::new(seed)),
        other => return Err(format!("unknown agent `{other}`")),
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
    let trace = run(&setup, agent.as_mut(), l.file.max_steps).map_err(|e| e.to_string())?;
    Ok(trace.to_json_lines())
}

/// ASCII frames of a trace as a JSON array of strings.
pub fn frames_json(scenario: &str, trace: &str) -> Result<String, String> {
    let l = load(scenario)?;
    let trace = TestExecutionTrace::from_json_lines(trace).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&frames(&l.scenario, &trace)).expect("serializable"))
}

#[wasm_bindgen]
pub fn scenario_names() -> String {
    serde_json::to_string(&BUNDLED.iter().map(|(n, _)| *n).collect::<Vec<_>>()).expect("serializable")
}

#[wasm_bindgen]
pub fn scenario_source(name: &str) -> Result<String, JsError> {
    bundled(name).map(str::to_string).ok_or_else(|| JsError::new(&format!("no bundled scenario `{name}`")))
}

#[wasm_bindgen]
pub fn synthesize(scenario: &str) -> Result<String, JsError> {
    synthesize_json(scenario).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn run_test(scenario: &str, cuts: &str, agent: &str, seed: u32) -> Result<String, JsError> {
    run_json(scenario, cuts, agent, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn render_frames(scenario: &str, trace: &str) -> Result<String, JsError> {
    frames_json(scenario, trace).map_err(|e| JsError::new(&e))
}
