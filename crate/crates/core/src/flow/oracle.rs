//! Exhaustive search over cut sets, for cross-checking the optimizer on
//! small graphs.

use std::collections::BTreeSet;

use super::verify::verify_cuts;
use super::FlowError;
use crate::product::ProductGraph;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// Largest total flow among valid cut sets, if any exist.
    pub best_flow: Option<i64>,
    /// All valid cut sets of minimum size that reach `best_flow`.
    pub optimal: Vec<BTreeSet<usize>>,
    pub examined: usize,
}

impl OracleResult {
    pub fn min_cuts(&self) -> Option<usize> {
        self.optimal.first().map(|s| s.len())
    }
}

/// Enumerates subsets of edges in increasing size, keeping those that pass
/// [`verify_cuts`]. Supersets of a kept set are skipped: removing more
/// edges never raises any flow, so they are dominated. Enumeration stops
/// early once a kept set matches the uncut total flow.
pub fn brute_force_oracle(g: &ProductGraph, s_prod: &ProductGraph, max_cut_size: usize) -> Result<OracleResult, FlowError> {
    let m = g.num_edges();
    if m > 25 && max_cut_size > 4 {
        return Err(FlowError::TooLarge { edges: m, max_cut_size });
    }
    let ceiling = verify_cuts(g, s_prod, &BTreeSet::new())?.total_flow;
    let mut kept: Vec<BTreeSet<usize>> = Vec::new();
    let mut best: Option<(i64, usize)> = None;
    let mut optimal = Vec::new();
    let mut examined = 0;

    for size in 0..=max_cut_size.min(m) {
        if matches!(best, Some((f, _)) if f == ceiling) {
            break;
        }
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            let set: BTreeSet<usize> = combo.iter().copied().collect();
            if !kept.iter().any(|k| k.is_subset(&set)) {
                examined += 1;
                let report = verify_cuts(g, s_prod, &set)?;
                if report.passed {
                    let f = report.total_flow;
                    match best {
                        Some((bf, _)) if f < bf => {}
                        Some((bf, bs)) if f == bf => {
                            if size == bs {
                                optimal.push(set.clone());
                            }
                        }
                        _ => {
                            best = Some((f, size));
                            optimal = vec![set.clone()];
                        }
                    }
                    kept.push(set);
                }
            }
            if !next_combination(&mut combo, m) {
                break;
            }
        }
    }
    Ok(OracleResult { best_flow: best.map(|(f, _)| f), optimal, examined })
}

/// Advances `combo` to the next k-subset of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
