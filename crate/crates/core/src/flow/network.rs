//! Max-flow and min-cut as linear programs over a small arc list. The two
//! programs are LP duals of each other; both go through the simplex solver.

use super::lp::{simplex_solve, Cmp, LinearProgram, LpError, LpStatus, Sense, INF};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapArc {
    pub from: usize,
    pub to: usize,
    pub cap: f64,
}

/// Value of a maximum flow from `sources` to `sinks`. Sources and sinks
/// are joined through uncapacitated super arcs.
pub fn max_flow_lp(nodes: usize, arcs: &[CapArc], sources: &[usize], sinks: &[usize]) -> Result<f64, LpError> {
    let mut lp = LinearProgram::new(Sense::Maximize);
    let flow: Vec<usize> = arcs.iter().enumerate().map(|(i, a)| lp.add_var(format!("f{i}"), 0.0, a.cap, 0.0)).collect();
    let mut balance: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes];
    for (i, a) in arcs.iter().enumerate() {
        balance[a.from].push((flow[i], -1.0));
        balance[a.to].push((flow[i], 1.0));
    }
    for &s in sources {
        let v = lp.add_var(format!("src{s}"), 0.0, INF, 1.0);
        balance[s].push((v, 1.0));
    }
    for &t in sinks {
        let v = lp.add_var(format!("snk{t}"), 0.0, INF, 0.0);
        balance[t].push((v, -1.0));
    }
    for (v, terms) in balance.into_iter().enumerate() {
        if !terms.is_empty() {
            lp.add_constraint(format!("bal{v}"), terms, Cmp::Eq, 0.0);
        }
    }
    let sol = simplex_solve(&lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => sol.objective,
        LpStatus::Unbounded => INF,
        LpStatus::Infeasible => unreachable!("zero flow is feasible"),
    })
}

#[derive(Debug, Clone)]
pub struct MinCut {
    pub value: f64,
    /// Per-arc cut indicator `y_e`.
    pub arc_cut: Vec<f64>,
    /// Node potentials `π_v`, 1 on the source side.
    pub potential: Vec<f64>,
}

/// Dual of [`max_flow_lp`]: minimize `Σ cap_e y_e` subject to
/// `y_e ≥ π_u − π_v`, `π = 1` on sources and `π = 0` on sinks.
/// Returns `None` when a source is also a sink.
pub fn min_cut_lp(
    nodes: usize,
    arcs: &[CapArc],
    sources: &[usize],
    sinks: &[usize],
) -> Result<Option<MinCut>, LpError> {
    if sources.iter().any(|s| sinks.contains(s)) {
        return Ok(None);
    }
    let mut lp = LinearProgram::new(Sense::Minimize);
    let pi: Vec<usize> = (0..nodes)
        .map(|v| {
            let (lo, hi) = if sources.contains(&v) {
                (1.0, 1.0)
            } else if sinks.contains(&v) {
                (0.0, 0.0)
            } else {
                (0.0, 1.0)
            };
            lp.add_var(format!("pi{v}"), lo, hi, 0.0)
        })
        .collect();
    let y: Vec<usize> = arcs.iter().enumerate().map(|(i, a)| lp.add_var(format!("y{i}"), 0.0, INF, a.cap)).collect();
    for (i, a) in arcs.iter().enumerate() {
        lp.add_constraint(format!("cut{i}"), vec![(y[i], 1.0), (pi[a.from], -1.0), (pi[a.to], 1.0)], Cmp::Ge, 0.0);
    }
    let sol = simplex_solve(&lp)?;
    debug_assert_eq!(sol.status, LpStatus::Optimal);
    Ok(Some(MinCut {
        value: sol.objective,
        arc_cut: y.iter().map(|&j| sol.values[j]).collect(),
        potential: pi.iter().map(|&j| sol.values[j]).collect(),
    }))
}
