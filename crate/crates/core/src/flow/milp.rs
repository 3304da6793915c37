//! Branch-and-bound over the simplex relaxation.
//!
//! Open nodes are explored best-first on the parent's relaxation bound;
//! ties go to the deeper node, then to the older one. Branching picks the
//! most fractional integer variable (lowest index on ties), so the search
//! is fully deterministic.
//!
//! An optional rounding heuristic sees every node relaxation and may propose
//! values for the integer variables; a proposal that yields a better
//! integral solution becomes the incumbent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lp::{simplex_solve, LinearProgram, LpError, LpStatus};

#[derive(Debug, Clone)]
pub struct MixedIntegerProgram {
    pub lp: LinearProgram,
    pub integer: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct MilpSettings {
    pub max_nodes: usize,
    pub integrality_tol: f64,
    /// Nodes whose bound is within this margin of the incumbent are pruned.
    pub prune_tol: f64,
}

impl Default for MilpSettings {
    fn default() -> Self {
        Self { max_nodes: 200_000, integrality_tol: 1e-6, prune_tol: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node budget exhausted; the incumbent (if any) is not proven optimal.
    NodeLimit,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub nodes: usize,
}

struct OpenNode {
    bound: f64,
    depth: usize,
    seq: usize,
    fixes: Vec<(usize, f64, f64)>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenNode {}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenNode {
    // BinaryHeap is a max-heap: "greater" means explored first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Proposes integer values from a node relaxation, as `(variable, value)`.
pub type Rounding<'h> = dyn FnMut(&[f64]) -> Option<Vec<(usize, f64)>> + 'h;

/// Minimizes (or maximizes) `mip` with the listed variables integral.
pub fn branch_and_bound(mip: &MixedIntegerProgram, settings: &MilpSettings) -> Result<MilpSolution, LpError> {
    branch_and_bound_with(mip, settings, &mut |_: &[f64]| None)
}

/// [`branch_and_bound`] with a rounding heuristic.
pub fn branch_and_bound_with(
    mip: &MixedIntegerProgram,
    settings: &MilpSettings,
    rounding: &mut Rounding<'_>,
) -> Result<MilpSolution, LpError> {
    let sign = match mip.lp.sense {
        super::lp::Sense::Minimize => 1.0,
        super::lp::Sense::Maximize => -1.0,
    };
    let mut heap = BinaryHeap::new();
    heap.push(OpenNode { bound: f64::NEG_INFINITY, depth: 0, seq: 0, fixes: Vec::new() });
    let mut seq = 1;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut explored = 0;

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= *best - settings.prune_tol {
                continue;
            }
        }
        if explored >= settings.max_nodes {
            let (objective, values) = incumbent.map_or((f64::NAN, Vec::new()), |(o, v)| (sign * o, v));
            return Ok(MilpSolution { status: MilpStatus::NodeLimit, values, objective, nodes: explored });
        }
        explored += 1;

        let mut lp = mip.lp.clone();
        for &(j, lo, hi) in &node.fixes {
            lp.set_bounds(j, lo, hi);
        }
        let relax = simplex_solve(&lp)?;
        match relax.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Ok(MilpSolution {
                    status: MilpStatus::Unbounded,
                    values: Vec::new(),
                    objective: f64::NAN,
                    nodes: explored,
                })
            }
            LpStatus::Optimal => {}
        }
        let bound = sign * relax.objective;
        if let Some((best, _)) = &incumbent {
            if bound >= *best - settings.prune_tol {
                continue;
            }
        }

        let mut branch: Option<(usize, f64)> = None;
        for &j in &mip.integer {
            let v = relax.values[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > settings.integrality_tol && branch.is_none_or(|(_, f)| frac > f + 1e-12) {
                branch = Some((j, frac));
            }
        }
        if branch.is_some() {
            let proposal = rounding(&relax.values).filter(|prop| {
                prop.iter().all(|&(j, v)| {
                    let (lo, hi) = lp.bounds(j);
                    v >= lo - settings.integrality_tol && v <= hi + settings.integrality_tol
                })
            });
            if let Some(proposal) = proposal {
                let mut fixed = lp.clone();
                for &(j, v) in &proposal {
                    fixed.set_bounds(j, v, v);
                }
                let sol = simplex_solve(&fixed)?;
                if sol.status == LpStatus::Optimal {
                    let value = sign * sol.objective;
                    let integral = mip.integer.iter().all(|&j| {
                        let v = sol.values[j];
                        (v - v.round()).abs() <= settings.integrality_tol
                    });
                    if integral && incumbent.as_ref().is_none_or(|(best, _)| value < *best - settings.prune_tol) {
                        let mut values = sol.values;
                        for &j in &mip.integer {
                            values[j] = values[j].round();
                        }
                        incumbent = Some((value, values));
                        if bound >= value - settings.prune_tol {
                            continue;
                        }
                    }
                }
            }
        }
        match branch {
            None => {
                let mut values = relax.values;
                for &j in &mip.integer {
                    values[j] = values[j].round();
                }
                incumbent = Some((bound, values));
            }
            Some((j, _)) => {
                let v = relax.values[j];
                let (lo, hi) = lp.bounds(j);
                let mut down = node.fixes.clone();
                down.push((j, lo, v.floor()));
                let mut up = node.fixes;
                up.push((j, v.ceil(), hi));
                for fixes in [down, up] {
                    heap.push(OpenNode { bound, depth: node.depth + 1, seq, fixes });
                    seq += 1;
                }
            }
        }
    }

    Ok(match incumbent {
        Some((objective, values)) => {
            MilpSolution { status: MilpStatus::Optimal, values, objective: sign * objective, nodes: explored }
        }
        None => MilpSolution { status: MilpStatus::Infeasible, values: Vec::new(), objective: f64::NAN, nodes: explored },
    })
}
