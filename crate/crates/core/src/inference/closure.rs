//! Minimum of `cᵀy` over hierarchy-consistent binary vectors, as a maximum
//! weight closure solved by max-flow/min-cut.
//!
//! Selecting node `j` earns `-c_j`. A source arc carries each positive
//! profit, a sink arc each negative one, and every hierarchy arc
//! `(parent, child)` becomes an uncuttable arc `child -> parent`, so any
//! finite cut's source side is closed under parents. The source side of the
//! minimum cut that is reachable in the residual graph is the smallest
//! optimal closure, hence also the lexicographically smallest optimum.

use std::collections::VecDeque;

use crate::error::{check_dim, Result};
use crate::hierarchy::HierarchyDag;

struct Edge {
    to: usize,
    cap: f64,
    rev: usize,
}

struct Dinic {
    graph: Vec<Vec<Edge>>,
    level: Vec<i64>,
    iter: Vec<usize>,
    eps: f64,
}

impl Dinic {
    fn new(n: usize, eps: f64) -> Self {
        Dinic {
            graph: (0..n).map(|_| Vec::new()).collect(),
            level: vec![-1; n],
            iter: vec![0; n],
            eps,
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        let rev_from = self.graph[to].len();
        let rev_to = self.graph[from].len();
        self.graph[from].push(Edge { to, cap, rev: rev_from });
        self.graph[to].push(Edge {
            to: from,
            cap: 0.0,
            rev: rev_to,
        });
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for e in &self.graph[v] {
                if e.cap > self.eps && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[v] + 1;
                    queue.push_back(e.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, pushed: f64) -> f64 {
        if v == t {
            return pushed;
        }
        while self.iter[v] < self.graph[v].len() {
            let i = self.iter[v];
            let (to, cap) = (self.graph[v][i].to, self.graph[v][i].cap);
            if cap > self.eps && self.level[v] < self.level[to] {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > 0.0 {
                    self.graph[v][i].cap -= got;
                    let rev = self.graph[v][i].rev;
                    self.graph[to][rev].cap += got;
                    return got;
                }
            }
            self.iter[v] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return total;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                total += f;
            }
        }
    }

    /// Nodes reachable from `s` through arcs with residual capacity.
    fn reachable(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.graph.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for e in &self.graph[v] {
                if e.cap > self.eps && !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        seen
    }
}

/// Exact minimizer of `costsᵀy` subject to `y_child <= y_parent` on every
/// arc, `y` binary.
pub fn solve_hierarchy(costs: &[f64], dag: &HierarchyDag) -> Result<Vec<u8>> {
    let d = dag.len();
    check_dim(d, costs.len())?;
    let total: f64 = costs.iter().map(|c| c.abs()).sum();
    let infinite = 2.0 * total + 1.0;
    let (source, sink) = (d, d + 1);
    let mut net = Dinic::new(d + 2, 1e-12 * (total + 1.0));
    for (j, &c) in costs.iter().enumerate() {
        if c < 0.0 {
            net.add_edge(source, j, -c);
        } else if c > 0.0 {
            net.add_edge(j, sink, c);
        }
    }
    for &(parent, child) in dag.arcs() {
        net.add_edge(child, parent, infinite);
    }
    net.max_flow(source, sink);
    let side = net.reachable(source);
    Ok((0..d).map(|j| u8::from(side[j])).collect())
}
