//! Grid-world builders and text rendering.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::{Move, TestExecutionTrace};
use crate::ltl::{build_nba, parse_spec, AtomicProposition, BuchiAutomaton, LabelSet, ReachAvoidSpec, Role, SpecError};
use crate::product::{
    spec_product, sync_product, virtual_product, ProductError, ProductGraph, ProductMode, SpecProductAutomaton,
    TransitionSystem, TsEdge,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error("map line {line}, column {col}: {msg}")]
    MapParse { line: usize, col: usize, msg: String },
    #[error("bad mode graph: {0}")]
    BadModeGraph(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Product(#[from] ProductError),
}

pub type Cell = (usize, usize);

/// Rectangular grid with walls, labeled cells and a start cell. A grid of
/// height one with `corridor` set is a 1-D corridor with `left`/`right`
/// moves and states `c1 .. cn`; otherwise states are `r{row}c{col}` with
/// compass moves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridWorld {
    pub width: usize,
    pub height: usize,
    pub blocked: BTreeSet<Cell>,
    pub labels: BTreeMap<Cell, BTreeSet<String>>,
    pub start: Cell,
    pub corridor: bool,
}

const COMPASS: [(&str, isize, isize); 4] = [("east", 0, 1), ("north", -1, 0), ("south", 1, 0), ("west", 0, -1)];

impl GridWorld {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let inside = |&(r, c): &Cell| r < self.height && c < self.width;
        if self.width == 0 || self.height == 0 {
            return Err(ScenarioError::BadGeometry("empty grid".into()));
        }
        if !inside(&self.start) || self.blocked.contains(&self.start) {
            return Err(ScenarioError::BadGeometry("start cell is outside the grid or blocked".into()));
        }
        if let Some(c) = self.labels.keys().find(|c| !inside(c)) {
            return Err(ScenarioError::BadGeometry(format!("labeled cell {c:?} is outside the grid")));
        }
        if self.corridor && self.height != 1 {
            return Err(ScenarioError::BadGeometry("a corridor has height one".into()));
        }
        Ok(())
    }

    pub fn cell_name(&self, (r, c): Cell) -> String {
        if self.corridor {
            format!("c{}", c + 1)
        } else {
            format!("r{r}c{c}")
        }
    }

    /// Free cells in row-major order.
    pub fn cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|r| (0..self.width).map(move |c| (r, c)))
            .filter(|c| !self.blocked.contains(c))
            .collect()
    }

    pub fn label(&self, cell: Cell) -> BTreeSet<String> {
        self.labels.get(&cell).cloned().unwrap_or_default()
    }

    pub fn propositions(&self) -> BTreeSet<String> {
        self.labels.values().flatten().cloned().collect()
    }

    /// `(action, neighbor)` pairs of a free cell, sorted by action name.
    pub fn moves(&self, (r, c): Cell) -> Vec<(&'static str, Cell)> {
        let mut out = Vec::new();
        if self.corridor {
            if c > 0 {
                out.push(("left", (r, c - 1)));
            }
            if c + 1 < self.width {
                out.push(("right", (r, c + 1)));
            }
            out.retain(|(_, n)| !self.blocked.contains(n));
            return out;
        }
        for (name, dr, dc) in COMPASS {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr < 0 || nc < 0 || nr as usize >= self.height || nc as usize >= self.width {
                continue;
            }
            let n = (nr as usize, nc as usize);
            if !self.blocked.contains(&n) {
                out.push((name, n));
            }
        }
        out
    }

    pub fn transition_system(&self) -> Result<TransitionSystem, ScenarioError> {
        self.validate()?;
        let cells = self.cells();
        let index: BTreeMap<Cell, usize> = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let actions: Vec<String> = if self.corridor {
            vec!["left".into(), "right".into()]
        } else {
            COMPASS.iter().map(|(n, ..)| n.to_string()).collect()
        };
        let mut edges = Vec::new();
        for &cell in &cells {
            for (name, n) in self.moves(cell) {
                let action = actions.iter().position(|a| a == name).expect("known action");
                edges.push(TsEdge { from: index[&cell], action, to: index[&n] });
            }
        }
        let propositions = to_props(&self.propositions())?;
        TransitionSystem::new(
            cells.iter().map(|&c| self.cell_name(c)).collect(),
            actions,
            edges,
            vec![index[&self.start]],
            propositions,
            cells.iter().map(|&c| self.label(c)).collect(),
        )
        .map_err(ScenarioError::from)
    }

    /// The map in the ASCII legend, using `legend` (letter -> propositions)
    /// for labeled cells.
    pub fn to_ascii(&self, legend: &BTreeMap<char, Vec<String>>) -> String {
        let reverse: BTreeMap<BTreeSet<String>, char> =
            legend.iter().map(|(&ch, props)| (props.iter().cloned().collect(), ch)).collect();
        let mut s = String::new();
        for r in 0..self.height {
            for c in 0..self.width {
                let ch = if self.blocked.contains(&(r, c)) {
                    '#'
                } else if (r, c) == self.start {
                    'S'
                } else {
                    let l = self.label((r, c));
                    if l.is_empty() {
                        '.'
                    } else {
                        reverse.get(&l).copied().unwrap_or('?')
                    }
                };
                s.push(ch);
            }
            s.push('\n');
        }
        s
    }
}

fn to_props(names: &BTreeSet<String>) -> Result<Vec<AtomicProposition>, ScenarioError> {
    names.iter().map(|n| AtomicProposition::new(n.clone()).map_err(ScenarioError::from)).collect()
}

/// Parses an ASCII map: `#` wall, `.` free, `S` start, lowercase letters
/// bound to propositions through `legend`.
pub fn build_grid(map_text: &str, legend: &BTreeMap<char, Vec<String>>) -> Result<GridWorld, ScenarioError> {
    let rows: Vec<&str> = map_text.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
    if rows.is_empty() {
        return Err(ScenarioError::MapParse { line: 1, col: 1, msg: "empty map".into() });
    }
    let width = rows[0].chars().count();
    let mut blocked = BTreeSet::new();
    let mut labels = BTreeMap::new();
    let mut start = None;
    for (r, row) in rows.iter().enumerate() {
        if row.chars().count() != width {
            return Err(ScenarioError::MapParse { line: r + 1, col: 1, msg: format!("expected {width} columns") });
        }
        for (c, ch) in row.chars().enumerate() {
            let err = |msg: String| ScenarioError::MapParse { line: r + 1, col: c + 1, msg };
            match ch {
                '#' => {
                    blocked.insert((r, c));
                }
                '.' => {}
                'S' => {
                    if start.replace((r, c)).is_some() {
                        return Err(err("second start cell".into()));
                    }
                }
                'a'..='z' => {
                    let props = legend.get(&ch).ok_or_else(|| err(format!("letter `{ch}` has no legend entry")))?;
                    labels.insert((r, c), props.iter().cloned().collect::<BTreeSet<_>>());
                }
                other => return Err(err(format!("unexpected character `{other}`"))),
            }
        }
    }
    let start = start.ok_or(ScenarioError::MapParse { line: 1, col: 1, msg: "no start cell `S`".into() })?;
    let grid = GridWorld { width, height: rows.len(), blocked, labels, start, corridor: false };
    grid.validate()?;
    Ok(grid)
}

// ---------------------------------------------------------------------------
// Mode grids

/// Grid locations paired with locomotion modes. Location moves are only
/// available in `move_modes`; `to_<mode>` switches follow `mode_edges`,
/// optionally only at cells carrying a given proposition. A cell carrying a
/// gate proposition can only be left in that gate's mode. Each state is
/// labeled with its cell labels plus its mode name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeGrid {
    pub grid: GridWorld,
    pub modes: Vec<String>,
    pub mode_edges: Vec<(String, String)>,
    pub start_mode: String,
    pub move_modes: BTreeSet<String>,
    /// Target mode -> proposition required at the cell for switching into it.
    pub switch_at: BTreeMap<String, String>,
    /// Proposition -> the only mode in which a cell carrying it can be left.
    pub gates: BTreeMap<String, String>,
}

/// Validates the mode graph (every mode reachable from the start mode) and
/// returns the assembled mode grid.
pub fn build_mode_grid(
    grid: GridWorld,
    modes: Vec<String>,
    mode_edges: Vec<(String, String)>,
    start_mode: String,
    move_modes: BTreeSet<String>,
    switch_at: BTreeMap<String, String>,
    gates: BTreeMap<String, String>,
) -> Result<ModeGrid, ScenarioError> {
    grid.validate()?;
    let known: BTreeSet<&String> = modes.iter().collect();
    if known.len() != modes.len() {
        return Err(ScenarioError::BadModeGraph("duplicate mode".into()));
    }
    for m in &modes {
        AtomicProposition::new(m.clone())?;
    }
    let referenced = mode_edges
        .iter()
        .flat_map(|(a, b)| [a, b])
        .chain([&start_mode])
        .chain(move_modes.iter())
        .chain(switch_at.keys())
        .chain(gates.values());
    for m in referenced {
        if !known.contains(m) {
            return Err(ScenarioError::BadModeGraph(format!("unknown mode `{m}`")));
        }
    }
    let mut seen: BTreeSet<&String> = BTreeSet::from([&start_mode]);
    let mut queue = VecDeque::from([&start_mode]);
    while let Some(m) = queue.pop_front() {
        for (a, b) in &mode_edges {
            if a == m && seen.insert(b) {
                queue.push_back(b);
            }
        }
    }
    if let Some(m) = modes.iter().find(|m| !seen.contains(m)) {
        return Err(ScenarioError::BadModeGraph(format!("mode `{m}` is unreachable from `{start_mode}`")));
    }
    if let Some(p) = gates.keys().find(|p| grid.cells().into_iter().all(|c| !grid.label(c).contains(*p))) {
        return Err(ScenarioError::BadModeGraph(format!("gate proposition `{p}` labels no cell")));
    }
    Ok(ModeGrid { grid, modes, mode_edges, start_mode, move_modes, switch_at, gates })
}

impl ModeGrid {
    pub fn state_name(&self, cell: Cell, mode: &str) -> String {
        format!("{}:{mode}", self.grid.cell_name(cell))
    }

    pub fn transition_system(&self) -> Result<TransitionSystem, ScenarioError> {
        let cells = self.grid.cells();
        let nm = self.modes.len();
        let id = |ci: usize, mi: usize| ci * nm + mi;
        let cell_index: BTreeMap<Cell, usize> = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut actions: BTreeSet<String> = BTreeSet::new();
        for &c in &cells {
            for (name, _) in self.grid.moves(c) {
                actions.insert(name.to_string());
            }
        }
        for (_, b) in &self.mode_edges {
            actions.insert(format!("to_{b}"));
        }
        let actions: Vec<String> = actions.into_iter().collect();
        let act = |name: &str| actions.iter().position(|a| a == name).expect("collected action");

        let mut states = Vec::new();
        let mut labels = Vec::new();
        let mut edges = Vec::new();
        for (ci, &c) in cells.iter().enumerate() {
            for (mi, m) in self.modes.iter().enumerate() {
                states.push(self.state_name(c, m));
                let mut l = self.grid.label(c);
                l.insert(m.clone());
                labels.push(l);
                let cell_labels = self.grid.label(c);
                let gate: Option<&String> =
                    self.gates.iter().find(|(p, _)| cell_labels.contains(*p)).map(|(_, g)| g);
                let can_move = match gate {
                    Some(g) => g == m,
                    None => self.move_modes.contains(m),
                };
                if can_move {
                    for (name, n) in self.grid.moves(c) {
                        edges.push(TsEdge { from: id(ci, mi), action: act(name), to: id(cell_index[&n], mi) });
                    }
                }
                for (a, b) in &self.mode_edges {
                    if a != m {
                        continue;
                    }
                    if let Some(p) = self.switch_at.get(b) {
                        if !self.grid.label(c).contains(p) {
                            continue;
                        }
                    }
                    let mj = self.modes.iter().position(|x| x == b).expect("validated mode");
                    edges.push(TsEdge { from: id(ci, mi), action: act(&format!("to_{b}")), to: id(ci, mj) });
                }
            }
        }
        let mut props = self.grid.propositions();
        props.extend(self.modes.iter().cloned());
        let start_mode = self.modes.iter().position(|m| *m == self.start_mode).expect("validated mode");
        TransitionSystem::new(
            states,
            actions,
            edges,
            vec![id(cell_index[&self.grid.start], start_mode)],
            to_props(&props)?,
            labels,
        )
        .map_err(ScenarioError::from)
    }
}

// ---------------------------------------------------------------------------
// Scenarios

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum World {
    Grid(GridWorld),
    Modes(ModeGrid),
}

impl World {
    pub fn grid(&self) -> &GridWorld {
        match self {
            World::Grid(g) => g,
            World::Modes(m) => &m.grid,
        }
    }

    pub fn transition_system(&self) -> Result<TransitionSystem, ScenarioError> {
        match self {
            World::Grid(g) => g.transition_system(),
            World::Modes(m) => m.transition_system(),
        }
    }

    /// Cell and mode of a transition-system state name.
    fn locate(&self, state: &str) -> Option<(Cell, Option<String>)> {
        let (cell_part, mode) = match state.split_once(':') {
            Some((c, m)) => (c, Some(m.to_string())),
            None => (state, None),
        };
        let g = self.grid();
        g.cells().into_iter().find(|&c| g.cell_name(c) == cell_part).map(|c| (c, mode))
    }
}

/// A world together with its system and test specifications.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub world: World,
    pub ts: TransitionSystem,
    pub sys_spec: ReachAvoidSpec,
    pub test_spec: ReachAvoidSpec,
}

/// Automata and product graphs of a scenario.
#[derive(Debug, Clone)]
pub struct Products {
    pub b_sys: BuchiAutomaton,
    pub b_test: BuchiAutomaton,
    pub bpi: SpecProductAutomaton,
    /// `T ⊗ B_sys`.
    pub system: ProductGraph,
    /// `T ⊗ B_Π`.
    pub graph: ProductGraph,
}

impl Scenario {
    /// Parses both specifications against the world's propositions.
    pub fn new(name: &str, world: World, sys_spec: &str, test_spec: &str) -> Result<Self, ScenarioError> {
        let ts = world.transition_system()?;
        let props = ts.propositions().to_vec();
        Ok(Self {
            name: name.to_string(),
            world,
            sys_spec: parse_spec(sys_spec, Role::System, &props)?,
            test_spec: parse_spec(test_spec, Role::Test, &props)?,
            ts,
        })
    }

    pub fn products(&self) -> Result<Products, ScenarioError> {
        let b_sys = build_nba(&self.sys_spec)?;
        let b_test = build_nba(&self.test_spec)?;
        let bpi = spec_product(&b_sys, &b_test, ProductMode::Synchronous);
        let system = sync_product(&self.ts, &b_sys)?;
        let graph = virtual_product(&self.ts, &bpi)?;
        Ok(Products { b_sys, b_test, bpi, system, graph })
    }
}

/// Corridor `c1 .. cn` (1-based cells) with `goal` on the goal cells and
/// `key_i` on the i-th key cell. The system must reach a goal; the test
/// requires every key.
pub fn build_corridor(n: usize, start: usize, goal_cells: &[usize], key_cells: &[usize]) -> Result<Scenario, ScenarioError> {
    let all: Vec<usize> = goal_cells.iter().chain(key_cells).copied().collect();
    if n == 0 || start == 0 || start > n || all.iter().any(|&c| c == 0 || c > n) {
        return Err(ScenarioError::BadGeometry(format!("cells must lie in 1..={n}")));
    }
    if all.iter().collect::<BTreeSet<_>>().len() != all.len() {
        return Err(ScenarioError::BadGeometry("goal and key cells must be distinct".into()));
    }
    if goal_cells.is_empty() || key_cells.is_empty() {
        return Err(ScenarioError::BadGeometry("need at least one goal and one key".into()));
    }
    let mut labels: BTreeMap<Cell, BTreeSet<String>> = BTreeMap::new();
    for &g in goal_cells {
        labels.entry((0, g - 1)).or_default().insert("goal".into());
    }
    for (i, &k) in key_cells.iter().enumerate() {
        labels.entry((0, k - 1)).or_default().insert(format!("key_{}", i + 1));
    }
    let grid = GridWorld { width: n, height: 1, blocked: BTreeSet::new(), labels, start: (0, start - 1), corridor: true };
    let test: Vec<String> = (1..=key_cells.len()).map(|i| format!("<> (key_{i})")).collect();
    Scenario::new(&format!("corridor_{n}"), World::Grid(grid), "<> (goal)", &test.join(" && "))
}

/// Text frame of the world at `step` of a trace: `@` marks the agent, `#`
/// walls and the cell of each currently blocked move (its labeled end if it
/// has one, else the cell it enters), lowercase
/// letters labeled cells (first letter of the first label). Blocked mode
/// switches are listed below the map.
pub fn render_ascii(scenario: &Scenario, trace: &TestExecutionTrace, step: usize) -> String {
    let active = trace.active_after_each_step();
    let step = step.min(trace.steps.len().saturating_sub(1));
    let blocked: BTreeSet<Move> = active.get(step).cloned().unwrap_or_default();
    let world = &scenario.world;
    let grid = world.grid();
    let here = trace.steps.get(step).and_then(|s| world.locate(&s.s));
    let mut walls: BTreeSet<Cell> = BTreeSet::new();
    let mut switches = Vec::new();
    for m in &blocked {
        match (world.locate(&m.from), world.locate(&m.to)) {
            (Some((a, _)), Some((b, _))) if a != b => {
                let labeled = |c: &Cell| grid.labels.get(c).is_some_and(|l| !l.is_empty());
                walls.insert(if labeled(&a) && !labeled(&b) { a } else { b });
            }
            _ => switches.push(format!("{} {}", m.from, m.action)),
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "step {step}");
    for r in 0..grid.height {
        for c in 0..grid.width {
            let cell = (r, c);
            let ch = if here.as_ref().is_some_and(|(h, _)| *h == cell) {
                '@'
            } else if grid.blocked.contains(&cell) || walls.contains(&cell) {
                '#'
            } else if let Some(l) = grid.labels.get(&cell).and_then(|l| l.iter().next()) {
                l.chars().next().unwrap_or('.').to_ascii_lowercase()
            } else {
                '.'
            };
            out.push(ch);
        }
        out.push('\n');
    }
    if let Some((_, Some(mode))) = &here {
        let _ = writeln!(out, "mode: {mode}");
    }
    if !switches.is_empty() {
        let _ = writeln!(out, "blocked: {}", switches.join(", "));
    }
    out
}

/// One frame per trace step.
pub fn render_frames(scenario: &Scenario, trace: &TestExecutionTrace) -> Vec<String> {
    (0..trace.steps.len()).map(|i| render_ascii(scenario, trace, i)).collect()
}

/// Label sequence of a trace's states.
pub fn trace_labels(ts: &TransitionSystem, trace: &TestExecutionTrace) -> Vec<LabelSet> {
    trace.steps.iter().filter_map(|s| ts.state_index(&s.s).map(|i| ts.label(i).clone())).collect()
}
