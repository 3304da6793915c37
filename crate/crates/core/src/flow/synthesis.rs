//! Solving the cut-synthesis program.
//!
//! All flow variables are normalized by the total flow `F`, with `t = 1/F`.
//! Exact mode uses binary cut indicators `b_e` (cut value `d_e = t·b_e`);
//! since every normalized flow is at most `t ≤ 1`, the cut rows
//! `f_e + d_e ≤ t` become `f_e ≤ t` and `f_e + b_e ≤ 1`. The system's inner
//! max-flow over the bypass network is replaced by its min-cut dual, which
//! turns the min-max into a single minimization.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::lp::{simplex_solve, Cmp, LinearProgram, LpStatus, Sense, INF};
use super::milp::{branch_and_bound_with, MilpSettings, MilpStatus, MixedIntegerProgram};
use super::network::{max_flow_lp, min_cut_lp, CapArc};
use super::problem::{Commodity, FlowProblem};
use super::verify::{verify_cuts, VerificationReport};
use super::FlowError;
use crate::product::{EdgeRef, ProductGraph};

pub const DEFAULT_LAMBDA_GRID: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
const OBJECTIVE_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    #[default]
    ExactMilp,
    RelaxedIterative,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub mode: SolverMode,
    /// Require zero bypass flow as a constraint instead of penalizing it.
    pub hard_bypass: bool,
    pub threshold: f64,
    pub milp: MilpSettings,
    pub max_rounds: usize,
    pub round_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mode: SolverMode::ExactMilp,
            hard_bypass: true,
            threshold: 0.9,
            milp: MilpSettings::default(),
            max_rounds: 100,
            round_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub edge: EdgeRef,
    /// `d_e / t` in `[0, 1]`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramStats {
    pub graph_nodes: usize,
    pub graph_edges: usize,
    pub system_nodes: usize,
    pub system_edges: usize,
    pub cuttable_edges: usize,
    pub context_blocks: usize,
    pub variables: usize,
    pub constraints: usize,
    /// Branch-and-bound nodes (exact) or best-response rounds (relaxed).
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutSolution {
    pub graph_hash: String,
    pub mode: SolverMode,
    pub hard_bypass: bool,
    /// `None` when the weight plays no role (hard bypass constraint).
    pub lambda: Option<f64>,
    pub cuts: Vec<EdgeRef>,
    pub profile: Vec<ProfileEntry>,
    pub objective: f64,
    pub t: f64,
    pub total_flow: f64,
    pub bypass_flow: f64,
    pub converged: bool,
    pub stats: ProgramStats,
    pub verification: VerificationReport,
}

impl CutSolution {
    /// Resolves the cut edges on `g`, refusing a graph with a different hash.
    pub fn cut_indices(&self, g: &ProductGraph) -> Result<BTreeSet<usize>, FlowError> {
        let found = g.canonical_hash();
        if found != self.graph_hash {
            return Err(FlowError::GraphHashMismatch { expected: self.graph_hash.clone(), found });
        }
        edge_indices(g, &self.cuts)
    }
}

pub(crate) fn edge_indices(g: &ProductGraph, edges: &[EdgeRef]) -> Result<BTreeSet<usize>, FlowError> {
    let dump = g.dump();
    edges
        .iter()
        .map(|r| {
            dump.edges
                .iter()
                .position(|e| e == r)
                .ok_or_else(|| FlowError::UnknownEdge(format!("{} -{}-> {}", r.from, r.action, r.to)))
        })
        .collect()
}

fn edge_ref(g: &ProductGraph, e: usize) -> EdgeRef {
    let edge = g.edge(e);
    EdgeRef { from: g.node_name(edge.from), action: g.action_name(edge.action).to_string(), to: g.node_name(edge.to) }
}

/// Edges whose normalized cut value reaches `threshold`.
pub fn extract_cuts(profile: &[(usize, f64)], threshold: f64) -> BTreeSet<usize> {
    profile.iter().filter(|&&(_, v)| v >= threshold).map(|&(e, _)| e).collect()
}

// ---------------------------------------------------------------------------
// Program construction

/// How cuts enter a capacity row.
#[derive(Clone, Copy)]
enum CutForm {
    /// `f + b ≤ 1` with binary `b`.
    Binary,
    /// `f + d ≤ t` with continuous `d`.
    Continuous,
}

struct Builder<'p, 'a> {
    p: &'p FlowProblem<'a>,
    lp: LinearProgram,
    t: usize,
    /// Cut variable per cuttable edge, aligned with `p.cuttable`.
    cut: Vec<usize>,
    form: CutForm,
}

impl<'p, 'a> Builder<'p, 'a> {
    fn new(p: &'p FlowProblem<'a>, form: CutForm) -> Self {
        let mut lp = LinearProgram::new(Sense::Minimize);
        let t = lp.add_var("t", 0.0, 1.0, 1.0);
        let cut = p
            .cuttable
            .iter()
            .map(|&e| {
                let name = match form {
                    CutForm::Binary => format!("b{e}"),
                    CutForm::Continuous => format!("d{e}"),
                };
                lp.add_var(name, 0.0, 1.0, 0.0)
            })
            .collect();
        let mut b = Self { p, lp, t, cut, form };
        if let CutForm::Continuous = form {
            for i in 0..b.cut.len() {
                let d = b.cut[i];
                b.lp.add_constraint(format!("dcap{i}"), vec![(d, 1.0), (t, -1.0)], Cmp::Le, 0.0);
            }
        }
        b
    }

    fn cut_var(&self, e: usize) -> Option<usize> {
        self.p.cuttable.binary_search(&e).ok().map(|i| self.cut[i])
    }

    /// Adds one normalized flow: per-arc variables in `[0, t]` reduced by
    /// the listed cuts, conservation with super arcs at sources and sinks,
    /// and a lower bound on the total source outflow (`1`, or `t` when
    /// `demand_t` is set).
    fn add_flow(&mut self, tag: &str, arcs: &[(usize, usize, Vec<usize>)], sources: &[usize], sinks: &[usize], demand_t: bool) {
        let t = self.t;
        let mut balance: std::collections::BTreeMap<usize, Vec<(usize, f64)>> = Default::default();
        for (i, (from, to, cuts)) in arcs.iter().enumerate() {
            let f = self.lp.add_var(format!("{tag}_f{i}"), 0.0, 1.0, 0.0);
            self.lp.add_constraint(format!("{tag}_cap{i}"), vec![(f, 1.0), (t, -1.0)], Cmp::Le, 0.0);
            for &c in cuts {
                match self.form {
                    CutForm::Binary => {
                        self.lp.add_constraint(format!("{tag}_cut{i}"), vec![(f, 1.0), (c, 1.0)], Cmp::Le, 1.0)
                    }
                    CutForm::Continuous => self.lp.add_constraint(
                        format!("{tag}_cut{i}"),
                        vec![(f, 1.0), (c, 1.0), (t, -1.0)],
                        Cmp::Le,
                        0.0,
                    ),
                };
            }
            balance.entry(*from).or_default().push((f, -1.0));
            balance.entry(*to).or_default().push((f, 1.0));
        }
        let mut supply = Vec::new();
        for &s in sources {
            let v = self.lp.add_var(format!("{tag}_src{s}"), 0.0, INF, 0.0);
            balance.entry(s).or_default().push((v, 1.0));
            supply.push((v, 1.0));
        }
        for &s in sinks {
            let v = self.lp.add_var(format!("{tag}_snk{s}"), 0.0, INF, 0.0);
            balance.entry(s).or_default().push((v, -1.0));
        }
        for (v, terms) in balance {
            self.lp.add_constraint(format!("{tag}_bal{v}"), terms, Cmp::Eq, 0.0);
        }
        if demand_t {
            supply.push((t, -1.0));
            self.lp.add_constraint(format!("{tag}_demand"), supply, Cmp::Ge, 0.0);
        } else {
            self.lp.add_constraint(format!("{tag}_demand"), supply, Cmp::Ge, 1.0);
        }
    }

    fn commodity_arcs(&self, c: &Commodity) -> Vec<(usize, usize, Vec<usize>)> {
        let g = self.p.graph;
        c.arcs
            .iter()
            .map(|&e| {
                let edge = g.edge(e);
                (edge.from, edge.to, self.cut_var(e).into_iter().collect())
            })
            .collect()
    }

    fn add_tester_flows(&mut self) {
        let si = self.commodity_arcs(&self.p.source_to_intermediate);
        let it = self.commodity_arcs(&self.p.intermediate_to_target);
        let c = &self.p.source_to_intermediate;
        let (src, snk) = (c.sources.clone(), c.sinks.clone());
        self.add_flow("si", &si, &src, &snk, false);
        let c = &self.p.intermediate_to_target;
        let (src, snk) = (c.sources.clone(), c.sinks.clone());
        self.add_flow("it", &it, &src, &snk, false);
    }

    fn add_contexts(&mut self) {
        let s = self.p.system;
        for block in &self.p.contexts {
            let arcs: Vec<(usize, usize, Vec<usize>)> = block
                .arcs
                .iter()
                .map(|&e| {
                    let edge = s.edge(e);
                    let cuts = block.mapped.get(&e).map_or(Vec::new(), |gs| {
                        gs.iter().filter_map(|&g| self.cut_var(g)).collect()
                    });
                    (edge.from, edge.to, cuts)
                })
                .collect();
            let (src, snk) = (self.p.system_sources.clone(), self.p.system_targets.clone());
            self.add_flow(&format!("ctx{}", block.q), &arcs, &src, &snk, true);
        }
    }

    /// Node potentials for the bypass network; sources pinned to 1, targets to 0.
    fn potentials(&mut self, binary: bool) -> (std::collections::BTreeMap<usize, usize>, Vec<usize>) {
        let g = self.p.graph;
        let c = &self.p.bypass;
        let mut nodes: BTreeSet<usize> = c.sources.iter().chain(&c.sinks).copied().collect();
        for &e in &c.arcs {
            nodes.insert(g.edge(e).from);
            nodes.insert(g.edge(e).to);
        }
        let mut pi = std::collections::BTreeMap::new();
        let mut integer = Vec::new();
        for v in nodes {
            let (lo, hi) = if c.sources.contains(&v) {
                (1.0, 1.0)
            } else if c.sinks.contains(&v) {
                (0.0, 0.0)
            } else {
                (0.0, 1.0)
            };
            let var = self.lp.add_var(format!("pi{v}"), lo, hi, 0.0);
            if binary && lo < hi {
                integer.push(var);
            }
            pi.insert(v, var);
        }
        (pi, integer)
    }

    /// Hard bypass: a zero-capacity cut separates sources from targets,
    /// `π_u − π_v ≤ b_e` on every bypass arc.
    fn add_hard_bypass(&mut self) {
        let (pi, _) = self.potentials(false);
        let g = self.p.graph;
        for &e in &self.p.bypass.arcs.clone() {
            let edge = g.edge(e);
            let b = self.cut_var(e).expect("bypass arcs are cuttable");
            self.lp.add_constraint(format!("sep{e}"), vec![(pi[&edge.from], 1.0), (pi[&edge.to], -1.0), (b, -1.0)], Cmp::Le, 0.0);
        }
    }

    /// Soft bypass: `Σ z_e` equals `t` times the min cut of the arcs left
    /// uncut, with `z_e ≥ t + y_e − 1 − b_e` linearizing `z_e = t·y_e·(1 − b_e)`.
    /// Returns the integer potentials and the `z` variables.
    fn add_soft_bypass(&mut self, lambda: f64) -> (Vec<usize>, Vec<usize>) {
        let (pi, integer) = self.potentials(true);
        let g = self.p.graph;
        let t = self.t;
        let mut zs = Vec::new();
        for &e in &self.p.bypass.arcs.clone() {
            let edge = g.edge(e);
            let b = self.cut_var(e).expect("bypass arcs are cuttable");
            let y = self.lp.add_var(format!("y{e}"), 0.0, 1.0, 0.0);
            let z = self.lp.add_var(format!("z{e}"), 0.0, INF, lambda);
            self.lp.add_constraint(format!("dual{e}"), vec![(y, 1.0), (pi[&edge.from], -1.0), (pi[&edge.to], 1.0)], Cmp::Ge, 0.0);
            self.lp.add_constraint(format!("lin{e}"), vec![(z, 1.0), (t, -1.0), (y, -1.0), (b, 1.0)], Cmp::Ge, -1.0);
            zs.push(z);
        }
        (integer, zs)
    }
}

fn stats(p: &FlowProblem, lp: &LinearProgram, iterations: usize) -> ProgramStats {
    ProgramStats {
        graph_nodes: p.graph.num_nodes(),
        graph_edges: p.graph.num_edges(),
        system_nodes: p.system.num_nodes(),
        system_edges: p.system.num_edges(),
        cuttable_edges: p.cuttable.len(),
        context_blocks: p.contexts.len(),
        variables: lp.num_vars(),
        constraints: lp.num_constraints(),
        iterations,
    }
}

/// The exact program in mixed-integer form, for export.
pub fn exact_program(p: &FlowProblem, hard_bypass: bool) -> MixedIntegerProgram {
    build_exact(p, hard_bypass).0
}

fn build_exact(p: &FlowProblem, hard_bypass: bool) -> (MixedIntegerProgram, usize, Vec<usize>, Vec<usize>) {
    let mut b = Builder::new(p, CutForm::Binary);
    b.add_tester_flows();
    b.add_contexts();
    let mut integer = b.cut.clone();
    let zs = if hard_bypass {
        b.add_hard_bypass();
        Vec::new()
    } else {
        let (pis, zs) = b.add_soft_bypass(p.lambda);
        integer.extend(pis);
        zs
    };
    let (t, cut) = (b.t, b.cut);
    (MixedIntegerProgram { lp: b.lp, integer }, t, cut, zs)
}

// ---------------------------------------------------------------------------
// Solvers

/// Solves the program and verifies the extracted cuts.
pub fn mcf_opt(p: &FlowProblem, opts: &SolveOptions) -> Result<CutSolution, FlowError> {
    if p.bypass_uncuttable() {
        return Err(FlowError::Infeasible("an initial node already satisfies the system specification".into()));
    }
    match opts.mode {
        SolverMode::ExactMilp => solve_exact(p, opts),
        SolverMode::RelaxedIterative => solve_relaxed(p, opts),
    }
}

/// Rounds a relaxation's cut indicators at a few thresholds and proposes
/// the first unseen cut set that passes the combinatorial checks.
struct CutRounding<'p, 'g> {
    problem: &'p FlowProblem<'g>,
    cut: Vec<usize>,
    hard_bypass: bool,
    tried: HashSet<Vec<usize>>,
}

impl CutRounding<'_, '_> {
    fn propose(&mut self, values: &[f64]) -> Option<Vec<(usize, f64)>> {
        for threshold in [0.5, 1e-6] {
            let chosen: Vec<usize> = (0..self.cut.len()).filter(|&i| values[self.cut[i]] > threshold).collect();
            if !self.tried.insert(chosen.clone()) {
                continue;
            }
            let edges: BTreeSet<usize> = chosen.iter().map(|&i| self.problem.cuttable[i]).collect();
            let Ok(report) = verify_cuts(self.problem.graph, self.problem.system, &edges) else {
                continue;
            };
            let ok = report.total_flow_ok && report.contexts_ok && (report.bypass_ok || !self.hard_bypass);
            if ok {
                return Some(
                    self.cut.iter().enumerate().map(|(i, &c)| (c, if chosen.contains(&i) { 1.0 } else { 0.0 })).collect(),
                );
            }
        }
        None
    }
}

fn run_milp(
    mip: &MixedIntegerProgram,
    settings: &MilpSettings,
    rounding: &mut CutRounding,
) -> Result<(Vec<f64>, f64, usize), FlowError> {
    let sol = branch_and_bound_with(mip, settings, &mut |v: &[f64]| rounding.propose(v))?;
    match sol.status {
        MilpStatus::Optimal => Ok((sol.values, sol.objective, sol.nodes)),
        MilpStatus::Infeasible => Err(FlowError::Infeasible("no cut set keeps the tester flows and system reachability".into())),
        MilpStatus::Unbounded => unreachable!("all variables of the cut program are bounded below and the objective is nonnegative"),
        MilpStatus::NodeLimit => Err(FlowError::NodeLimit),
    }
}

fn solve_exact(p: &FlowProblem, opts: &SolveOptions) -> Result<CutSolution, FlowError> {
    let (mut mip, t, cut, zs) = build_exact(p, opts.hard_bypass);
    let mut rounding = CutRounding { problem: p, cut: cut.clone(), hard_bypass: opts.hard_bypass, tried: HashSet::new() };
    let (first, optimum, mut nodes) = run_milp(&mip, &opts.milp, &mut rounding)?;
    let first_t = first[t];

    // Second phase: fewest cuts among optimal solutions.
    let mut objective_row: Vec<(usize, f64)> = vec![(t, 1.0)];
    objective_row.extend(zs.iter().map(|&z| (z, p.lambda)));
    mip.lp.add_constraint("optimal", objective_row, Cmp::Le, optimum + OBJECTIVE_SLACK * (1.0 + optimum.abs()));
    for j in 0..mip.lp.num_vars() {
        mip.lp.set_cost(j, 0.0);
    }
    for &c in &cut {
        mip.lp.set_cost(c, 1.0);
    }
    rounding.tried.clear();
    let (mut values, count, n2) = run_milp(&mip, &opts.milp, &mut rounding).unwrap_or((first, f64::NAN, 0));
    nodes += n2;

    // Third phase: lexicographically smallest edge set of that size.
    if count.is_finite() && count > 0.5 {
        let k = count.round();
        mip.lp.add_constraint("fewest", cut.iter().map(|&c| (c, 1.0)).collect(), Cmp::Le, k + 0.5);
        for j in 0..mip.lp.num_vars() {
            mip.lp.set_cost(j, 0.0);
        }
        let mut chosen = 0.0;
        for &c in &cut {
            if chosen >= k - 0.5 {
                mip.lp.set_bounds(c, 0.0, 0.0);
                continue;
            }
            if values[c] > 0.5 {
                mip.lp.set_bounds(c, 1.0, 1.0);
                chosen += 1.0;
                continue;
            }
            mip.lp.set_bounds(c, 1.0, 1.0);
            rounding.tried.clear();
            match branch_and_bound_with(&mip, &opts.milp, &mut |v: &[f64]| rounding.propose(v))? {
                s if s.status == MilpStatus::Optimal => {
                    nodes += s.nodes;
                    values = s.values;
                    chosen += 1.0;
                }
                s => {
                    nodes += s.nodes;
                    mip.lp.set_bounds(c, 0.0, 0.0);
                }
            }
        }
    }

    // Later phases may drift by the objective slack; snap back to the optimum.
    let tv = if (values[t] - first_t).abs() < 1e-6 { first_t } else { values[t] };
    let profile: Vec<(usize, f64)> =
        p.cuttable.iter().zip(&cut).map(|(&e, &c)| (e, values[c].round())).collect();
    let cuts = extract_cuts(&profile, 0.5);
    let bypass = if opts.hard_bypass { 0.0 } else { zs.iter().map(|&z| values[z]).sum::<f64>() / tv };
    finish(p, opts, cuts, profile, optimum, tv, bypass, true, stats(p, &mip.lp, nodes))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    p: &FlowProblem,
    opts: &SolveOptions,
    cuts: BTreeSet<usize>,
    profile: Vec<(usize, f64)>,
    objective: f64,
    t: f64,
    bypass: f64,
    converged: bool,
    stats: ProgramStats,
) -> Result<CutSolution, FlowError> {
    let g = p.graph;
    let verification = verify_cuts(g, p.system, &cuts)?;
    Ok(CutSolution {
        graph_hash: g.canonical_hash(),
        mode: opts.mode,
        hard_bypass: opts.hard_bypass && opts.mode == SolverMode::ExactMilp,
        lambda: if opts.hard_bypass && opts.mode == SolverMode::ExactMilp { None } else { Some(p.lambda) },
        cuts: cuts.iter().map(|&e| edge_ref(g, e)).collect(),
        profile: profile.into_iter().map(|(e, value)| ProfileEntry { edge: edge_ref(g, e), value }).collect(),
        objective,
        t,
        total_flow: 1.0 / t,
        bypass_flow: bypass,
        converged,
        stats,
        verification,
    })
}

/// System best response: max bypass flow under capacities `1 − d_e/t`,
/// and the min cut certifying it.
fn system_response(p: &FlowProblem, ratio: &[f64]) -> Result<(f64, Vec<f64>), FlowError> {
    let g = p.graph;
    let c = &p.bypass;
    let arcs: Vec<CapArc> = c
        .arcs
        .iter()
        .enumerate()
        .map(|(i, &e)| CapArc { from: g.edge(e).from, to: g.edge(e).to, cap: (1.0 - ratio[i]).max(0.0) })
        .collect();
    let value = max_flow_lp(g.num_nodes(), &arcs, &c.sources, &c.sinks)?;
    let cut = min_cut_lp(g.num_nodes(), &arcs, &c.sources, &c.sinks)?.expect("sources and targets are disjoint");
    Ok((value, cut.arc_cut))
}

/// Alternating best responses: the tester solves an LP against the
/// system's last min cut, then the system recomputes its max flow.
fn solve_relaxed(p: &FlowProblem, opts: &SolveOptions) -> Result<CutSolution, FlowError> {
    let mut b = Builder::new(p, CutForm::Continuous);
    b.add_tester_flows();
    b.add_contexts();
    let (t, cut) = (b.t, b.cut.clone());
    let mut lp = b.lp;
    // Bypass arcs are exactly the cuttable edges, in the same order.
    let (mut bypass, mut y) = system_response(p, &vec![0.0; cut.len()])?;
    let mut best: Option<(f64, f64, Vec<f64>, f64)> = None;
    let mut previous = f64::INFINITY;
    let mut converged = false;
    let mut rounds = 0;
    log::debug!("relaxed start: uncut bypass flow {bypass}");

    while rounds < opts.max_rounds {
        rounds += 1;
        let weight: f64 = y.iter().sum();
        lp.set_cost(t, 1.0 + p.lambda * weight);
        for (i, &d) in cut.iter().enumerate() {
            lp.set_cost(d, -p.lambda * y[i]);
        }
        let sol = simplex_solve(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(FlowError::Infeasible("tester program has no feasible flow".into()));
        }
        let tv = sol.values[t];
        let ratio: Vec<f64> = cut.iter().map(|&d| (sol.values[d] / tv).clamp(0.0, 1.0)).collect();
        let response = system_response(p, &ratio)?;
        bypass = response.0;
        y = response.1;
        let objective = tv + p.lambda * tv * bypass;
        log::debug!("round {rounds}: t = {tv:.6}, bypass = {bypass:.6}, objective = {objective:.6}");
        if best.as_ref().is_none_or(|(o, ..)| objective < *o - 1e-12) {
            best = Some((objective, tv, ratio, bypass));
        }
        if (objective - previous).abs() < opts.round_tolerance {
            converged = true;
            break;
        }
        previous = objective;
    }
    let (objective, tv, ratio, bypass) = best.expect("at least one round");
    if !converged {
        log::warn!("relaxed iteration stopped after {rounds} rounds without converging");
    }
    let profile: Vec<(usize, f64)> = p.cuttable.iter().copied().zip(ratio).collect();
    let cuts = extract_cuts(&profile, opts.threshold);
    finish(p, opts, cuts, profile, objective, tv, bypass, converged, stats(p, &lp, rounds))
}

/// Solves once per weight and keeps the verified solution with the largest
/// total flow, then the fewest cuts, then the smallest edge list. With the
/// hard bypass constraint in exact mode the weight is irrelevant and a
/// single solve is returned.
pub fn sweep_lambda(p: &FlowProblem, grid: &[f64], opts: &SolveOptions) -> Result<(Option<f64>, CutSolution), FlowError> {
    if opts.mode == SolverMode::ExactMilp && opts.hard_bypass {
        let sol = mcf_opt(p, opts)?;
        return if sol.verification.passed { Ok((None, sol)) } else { Err(FlowError::NoFeasibleLambda) };
    }
    let mut best: Option<(f64, CutSolution, Vec<usize>)> = None;
    for &lambda in grid {
        let mut q = p.clone();
        q.lambda = lambda;
        let sol = match mcf_opt(&q, opts) {
            Ok(s) => s,
            Err(FlowError::Infeasible(msg)) => {
                log::info!("lambda {lambda}: infeasible ({msg})");
                continue;
            }
            Err(e) => return Err(e),
        };
        if !sol.verification.passed {
            log::info!("lambda {lambda}: cuts fail verification");
            continue;
        }
        let ids: Vec<usize> = edge_indices(p.graph, &sol.cuts)?.into_iter().collect();
        let better = match &best {
            None => true,
            Some((_, b, bids)) => {
                let (f, bf) = (sol.verification.total_flow, b.verification.total_flow);
                f > bf || (f == bf && (ids.len() < bids.len() || (ids.len() == bids.len() && ids < *bids)))
            }
        };
        if better {
            best = Some((lambda, sol, ids));
        }
    }
    best.map(|(l, s, _)| (Some(l), s)).ok_or(FlowError::NoFeasibleLambda)
}
