//! Integer max-flow (Dinic) used for verification and by the oracle.

use std::collections::VecDeque;

pub const UNBOUNDED: i64 = i64::MAX / 4;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: i64,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self { adj: vec![Vec::new(); nodes], arcs: Vec::new() }
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: i64) {
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc { to: from, cap: 0 });
    }

    /// Maximum flow from `sources` to `sinks` through unbounded super arcs.
    /// Returns [`UNBOUNDED`] when a source is also a sink.
    pub fn max_flow_between(&mut self, sources: &[usize], sinks: &[usize]) -> i64 {
        if sources.iter().any(|s| sinks.contains(s)) {
            return UNBOUNDED;
        }
        let s = self.add_node();
        let t = self.add_node();
        for &v in sources {
            self.add_arc(s, v, UNBOUNDED);
        }
        for &v in sinks {
            self.add_arc(v, t, UNBOUNDED);
        }
        self.max_flow(s, t)
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let n = self.adj.len();
        let mut total = 0i64;
        loop {
            let mut level = vec![usize::MAX; n];
            level[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                for &a in &self.adj[v] {
                    let arc = &self.arcs[a];
                    if arc.cap > 0 && level[arc.to] == usize::MAX {
                        level[arc.to] = level[v] + 1;
                        queue.push_back(arc.to);
                    }
                }
            }
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0usize; n];
            loop {
                let pushed = self.augment(s, t, UNBOUNDED, &level, &mut next);
                if pushed == 0 {
                    break;
                }
                total = total.saturating_add(pushed);
                if total >= UNBOUNDED {
                    return UNBOUNDED;
                }
            }
        }
    }

    fn augment(&mut self, v: usize, t: usize, limit: i64, level: &[usize], next: &mut [usize]) -> i64 {
        if v == t {
            return limit;
        }
        while next[v] < self.adj[v].len() {
            let a = self.adj[v][next[v]];
            let (to, cap) = (self.arcs[a].to, self.arcs[a].cap);
            if cap > 0 && level[to] == level[v] + 1 {
                let pushed = self.augment(to, t, limit.min(cap), level, next);
                if pushed > 0 {
                    self.arcs[a].cap -= pushed;
                    self.arcs[a ^ 1].cap += pushed;
                    return pushed;
                }
            }
            next[v] += 1;
        }
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond() {
        let mut net = FlowNetwork::new(4);
        for (u, v) in [(0, 1), (0, 2), (1, 3), (2, 3), (1, 2)] {
            net.add_arc(u, v, 1);
        }
        assert_eq!(net.max_flow(0, 3), 2);
    }

    #[test]
    fn shared_source_and_sink_is_unbounded() {
        let mut net = FlowNetwork::new(2);
        net.add_arc(0, 1, 1);
        assert_eq!(net.max_flow_between(&[0], &[0, 1]), UNBOUNDED);
    }

    #[test]
    fn multi_source() {
        let mut net = FlowNetwork::new(4);
        net.add_arc(0, 2, 1);
        net.add_arc(1, 2, 1);
        net.add_arc(2, 3, 5);
        assert_eq!(net.max_flow_between(&[0, 1], &[3]), 2);
    }
}
