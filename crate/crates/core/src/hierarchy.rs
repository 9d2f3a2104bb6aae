//! Label hierarchies: DAGs whose arcs point from parent to child.

use rand::Rng;

use crate::error::{EcrmError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyDag {
    d: usize,
    arcs: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl HierarchyDag {
    /// Builds a DAG on nodes `0..d` from `(parent, child)` arcs.
    pub fn new(d: usize, arcs: Vec<(usize, usize)>) -> Result<Self> {
        if d == 0 {
            return Err(EcrmError::InvalidParameter("hierarchy needs at least one node".into()));
        }
        let mut parents = vec![Vec::new(); d];
        let mut children = vec![Vec::new(); d];
        for &(p, c) in &arcs {
            if p >= d || c >= d {
                return Err(EcrmError::InvalidParameter(format!(
                    "arc ({p}, {c}) references a node outside 0..{d}"
                )));
            }
            if p == c {
                return Err(EcrmError::Cycle(format!("self-loop on node {p}")));
            }
            if children[p].contains(&c) {
                return Err(EcrmError::InvalidParameter(format!("duplicate arc ({p}, {c})")));
            }
            parents[c].push(p);
            children[p].push(c);
        }
        let topo = topological_order(d, &parents, &children)
            .ok_or_else(|| EcrmError::Cycle("hierarchy arcs contain a directed cycle".into()))?;
        Ok(HierarchyDag {
            d,
            arcs,
            parents,
            children,
            topo,
        })
    }

    /// A single node with no arcs.
    pub fn singleton() -> Self {
        HierarchyDag::new(1, Vec::new()).expect("one node is a valid DAG")
    }

    /// A chain `0 -> 1 -> ... -> d-1`.
    pub fn chain(d: usize) -> Result<Self> {
        HierarchyDag::new(d, (1..d).map(|j| (j - 1, j)).collect())
    }

    /// Random arborescence rooted at 0; node `j` gets a uniform parent in `0..j`.
    pub fn random_tree<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Self> {
        let arcs = (1..d).map(|j| (rng.gen_range(0..j), j)).collect();
        HierarchyDag::new(d, arcs)
    }

    /// Random DAG: a random tree plus extra forward arcs added with probability `extra`.
    pub fn random_dag<R: Rng + ?Sized>(d: usize, extra: f64, rng: &mut R) -> Result<Self> {
        let mut arcs: Vec<(usize, usize)> = (1..d).map(|j| (rng.gen_range(0..j), j)).collect();
        for j in 2..d {
            for p in 0..j {
                if !arcs.contains(&(p, j)) && rng.gen_bool(extra) {
                    arcs.push((p, j));
                }
            }
        }
        HierarchyDag::new(d, arcs)
    }

    pub fn len(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.d == 0
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn parents(&self, j: usize) -> &[usize] {
        &self.parents[j]
    }

    pub fn children(&self, j: usize) -> &[usize] {
        &self.children[j]
    }

    /// Nodes in an order where every parent precedes its children.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.d).filter(|&j| self.parents[j].is_empty()).collect()
    }

    pub fn is_arborescence(&self) -> bool {
        self.roots().len() == 1 && self.parents.iter().all(|p| p.len() <= 1)
    }

    /// The unique root, or an error when the DAG is not an arborescence.
    pub fn require_arborescence(&self) -> Result<usize> {
        let roots = self.roots();
        if roots.len() != 1 {
            return Err(EcrmError::NotArborescence(format!(
                "expected one root, found {}",
                roots.len()
            )));
        }
        if let Some(j) = (0..self.d).find(|&j| self.parents[j].len() > 1) {
            return Err(EcrmError::NotArborescence(format!(
                "node {j} has {} parents",
                self.parents[j].len()
            )));
        }
        Ok(roots[0])
    }

    /// All strict ancestors of `j`, sorted ascending.
    pub fn ancestors(&self, j: usize) -> Vec<usize> {
        let mut seen = vec![false; self.d];
        let mut stack = self.parents[j].clone();
        while let Some(k) = stack.pop() {
            if !seen[k] {
                seen[k] = true;
                stack.extend_from_slice(&self.parents[k]);
            }
        }
        (0..self.d).filter(|&k| seen[k]).collect()
    }

    /// Nodes adjacent to `k` (parents and children) together with `k` itself, sorted.
    pub fn neighborhood(&self, k: usize) -> Vec<usize> {
        let mut out = vec![k];
        out.extend_from_slice(&self.parents[k]);
        out.extend_from_slice(&self.children[k]);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `y_child <= y_parent` on every arc, with `y` binary.
    pub fn is_consistent(&self, y: &[u8]) -> bool {
        y.len() == self.d
            && y.iter().all(|&v| v <= 1)
            && self.arcs.iter().all(|&(p, c)| y[c] <= y[p])
    }
}

fn topological_order(d: usize, parents: &[Vec<usize>], children: &[Vec<usize>]) -> Option<Vec<usize>> {
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    // Smallest ready node first keeps the order deterministic.
    let mut ready: std::collections::BTreeSet<usize> =
        (0..d).filter(|&j| indegree[j] == 0).collect();
    let mut order = Vec::with_capacity(d);
    while let Some(j) = ready.pop_first() {
        order.push(j);
        for &c in &children[j] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    (order.len() == d).then_some(order)
}
