//! Structured output domains, their linear constraint systems and a
//! brute-force total-unimodularity check.

use crate::error::{check_dim, EcrmError, Result};
use crate::hierarchy::HierarchyDag;
use crate::label::{validate_ranking, Label, LabelKind};

/// Default per-constraint tolerance for continuous spaces.
pub const FLOW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum OutputSpace {
    /// Label subsets closed under taking parents.
    Hierarchy(HierarchyDag),
    /// Permutations of `d` items, i.e. perfect matchings of items to ranks.
    Assignment { d: usize },
    /// Nonnegative arc flows conserving mass with the network's supplies.
    Flow(FlowNetwork),
    /// An explicit, duplicate-free list of outputs.
    Explicit(Vec<Label>),
}

impl OutputSpace {
    pub fn explicit(items: Vec<Label>) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| EcrmError::InvalidParameter("explicit space is empty".into()))?;
        let (kind, len) = (first.kind(), first.len());
        for (i, item) in items.iter().enumerate() {
            if item.kind() != kind || item.len() != len {
                return Err(EcrmError::InvalidLabel(format!("item {i} differs in kind or length")));
            }
            if items[..i].contains(item) {
                return Err(EcrmError::InvalidLabel(format!("item {i} is a duplicate")));
            }
        }
        Ok(OutputSpace::Explicit(items))
    }

    /// `{-1, +1}` as one-dimensional vectors.
    pub fn binary() -> Self {
        OutputSpace::Explicit(vec![Label::Vector(vec![-1.0]), Label::Vector(vec![1.0])])
    }

    /// True for the `{-1, +1}` classification space.
    pub fn is_binary(&self) -> bool {
        match self {
            OutputSpace::Explicit(items) if items.len() == 2 => {
                let mut vals: Vec<f64> = items
                    .iter()
                    .filter_map(|l| match l {
                        Label::Vector(v) if v.len() == 1 => Some(v[0]),
                        _ => None,
                    })
                    .collect();
                vals.sort_by(f64::total_cmp);
                vals == [-1.0, 1.0]
            }
            _ => false,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            OutputSpace::Hierarchy(_) => "hierarchy",
            OutputSpace::Assignment { .. } => "assignment",
            OutputSpace::Flow(_) => "flow",
            OutputSpace::Explicit(_) => "explicit",
        }
    }

    pub fn label_kind(&self) -> LabelKind {
        match self {
            OutputSpace::Hierarchy(_) => LabelKind::Bits,
            OutputSpace::Assignment { .. } => LabelKind::Ranking,
            OutputSpace::Flow(_) => LabelKind::Vector,
            OutputSpace::Explicit(items) => items[0].kind(),
        }
    }

    /// Length of every output in the space.
    pub fn label_len(&self) -> usize {
        match self {
            OutputSpace::Hierarchy(dag) => dag.len(),
            OutputSpace::Assignment { d } => *d,
            OutputSpace::Flow(net) => net.arcs().len(),
            OutputSpace::Explicit(items) => items[0].len(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, OutputSpace::Flow(_))
    }

    /// Whether `y` satisfies the space's constraints. `tol` only matters for
    /// flows; discrete kinds are checked exactly.
    pub fn is_feasible(&self, y: &Label, tol: f64) -> Result<bool> {
        if y.kind() != self.label_kind() {
            return Err(EcrmError::InvalidLabel(format!(
                "{} label for a {} space",
                y.kind(),
                self.kind_name()
            )));
        }
        check_dim(self.label_len(), y.len())?;
        Ok(match (self, y) {
            (OutputSpace::Hierarchy(dag), Label::Bits(b)) => dag.is_consistent(b),
            (OutputSpace::Assignment { .. }, Label::Ranking(r)) => validate_ranking(r).is_ok(),
            (OutputSpace::Flow(net), Label::Vector(v)) => net.is_feasible(v, tol),
            (OutputSpace::Explicit(items), y) => items.contains(y),
            _ => false,
        })
    }

    /// Lexicographically smallest member; the prediction when every weight is zero.
    pub fn smallest(&self) -> Result<Label> {
        match self {
            OutputSpace::Hierarchy(dag) => Ok(Label::Bits(vec![0; dag.len()])),
            OutputSpace::Assignment { d } => Ok(Label::Ranking((1..=*d).collect())),
            OutputSpace::Explicit(items) => Ok(items
                .iter()
                .min_by(|a, b| a.lex_cmp(b))
                .cloned()
                .expect("explicit spaces are non-empty")),
            OutputSpace::Flow(net) => {
                let vertices: Vec<Label> = net
                    .enumerate_paths(100_000)?
                    .iter()
                    .map(|p| Label::Vector(net.path_flow(p)))
                    .collect();
                vertices
                    .into_iter()
                    .min_by(|a, b| a.lex_cmp(b))
                    .ok_or_else(|| EcrmError::InvalidNetwork("no source-sink path".into()))
            }
        }
    }
}

/// A directed network with external supplies `b` (outflow minus inflow at each node).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    nodes: usize,
    arcs: Vec<(usize, usize)>,
    supply: Vec<f64>,
    out_arcs: Vec<Vec<usize>>,
    in_arcs: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(nodes: usize, arcs: Vec<(usize, usize)>, supply: Vec<f64>) -> Result<Self> {
        check_dim(nodes, supply.len())?;
        let mut out_arcs = vec![Vec::new(); nodes];
        let mut in_arcs = vec![Vec::new(); nodes];
        for (a, &(t, h)) in arcs.iter().enumerate() {
            if t >= nodes || h >= nodes {
                return Err(EcrmError::InvalidNetwork(format!("arc {a} ({t}, {h}) out of range")));
            }
            if t == h {
                return Err(EcrmError::InvalidNetwork(format!("arc {a} is a self-loop")));
            }
            out_arcs[t].push(a);
            in_arcs[h].push(a);
        }
        if supply.iter().any(|b| !b.is_finite()) {
            return Err(EcrmError::InvalidNetwork("non-finite supply".into()));
        }
        let total: f64 = supply.iter().sum();
        let scale = supply.iter().map(|b| b.abs()).sum::<f64>().max(1.0);
        if total.abs() > 1e-9 * scale {
            return Err(EcrmError::InvalidNetwork(format!("supplies sum to {total}, not zero")));
        }
        Ok(FlowNetwork {
            nodes,
            arcs,
            supply,
            out_arcs,
            in_arcs,
        })
    }

    /// The six-node, ten-arc benchmark network with one unit of flow from
    /// node 0 (source) to node 5 (sink).
    pub fn benchmark() -> Self {
        let arcs = vec![
            (0, 1),
            (0, 2),
            (1, 2),
            (1, 3),
            (2, 4),
            (1, 4),
            (2, 3),
            (3, 4),
            (3, 5),
            (4, 5),
        ];
        let supply = vec![1.0, 0.0, 0.0, 0.0, 0.0, -1.0];
        FlowNetwork::new(6, arcs, supply).expect("benchmark network is valid")
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn supply(&self) -> &[f64] {
        &self.supply
    }

    pub fn out_arcs(&self, node: usize) -> &[usize] {
        &self.out_arcs[node]
    }

    pub fn in_arcs(&self, node: usize) -> &[usize] {
        &self.in_arcs[node]
    }

    /// Outflow minus inflow at every node.
    pub fn divergence(&self, flow: &[f64]) -> Vec<f64> {
        let mut div = vec![0.0; self.nodes];
        for (&(t, h), &f) in self.arcs.iter().zip(flow) {
            div[t] += f;
            div[h] -= f;
        }
        div
    }

    /// Largest conservation violation `|div_j - b_j|`.
    pub fn conservation_residual(&self, flow: &[f64]) -> f64 {
        self.divergence(flow)
            .iter()
            .zip(&self.supply)
            .fold(0.0, |acc, (d, b)| acc.max((d - b).abs()))
    }

    pub fn is_feasible(&self, flow: &[f64], tol: f64) -> bool {
        flow.len() == self.arcs.len()
            && flow.iter().all(|&f| f.is_finite() && f >= -tol)
            && self.conservation_residual(flow) <= tol
    }

    /// Nodes in topological order, or `None` when the network has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree: Vec<usize> = self.in_arcs.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..self.nodes).filter(|&j| indegree[j] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes);
        while let Some(j) = ready.pop_first() {
            order.push(j);
            for &a in &self.out_arcs[j] {
                let h = self.arcs[a].1;
                indegree[h] -= 1;
                if indegree[h] == 0 {
                    ready.insert(h);
                }
            }
        }
        (order.len() == self.nodes).then_some(order)
    }

    pub fn require_acyclic(&self) -> Result<Vec<usize>> {
        self.topological_order()
            .ok_or_else(|| EcrmError::Cycle("flow network has a directed cycle".into()))
    }

    /// `(source, sink, amount)` when exactly one node supplies `amount > 0`
    /// and one node absorbs it, with zero supply elsewhere.
    pub fn unit_source_sink(&self) -> Result<(usize, usize, f64)> {
        let sources: Vec<usize> = (0..self.nodes).filter(|&j| self.supply[j] > 0.0).collect();
        let sinks: Vec<usize> = (0..self.nodes).filter(|&j| self.supply[j] < 0.0).collect();
        match (sources.as_slice(), sinks.as_slice()) {
            (&[s], &[t]) => Ok((s, t, self.supply[s])),
            _ => Err(EcrmError::Unsupported(
                "solvers need exactly one source and one sink".into(),
            )),
        }
    }

    /// All source-sink paths as arc-index lists, in depth-first arc order.
    pub fn enumerate_paths(&self, cap: usize) -> Result<Vec<Vec<usize>>> {
        self.require_acyclic()?;
        let (s, t, _) = self.unit_source_sink()?;
        let mut paths = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        self.paths_from(s, t, &mut stack, &mut paths, cap)?;
        Ok(paths)
    }

    fn paths_from(
        &self,
        node: usize,
        sink: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<()> {
        if node == sink {
            if out.len() >= cap {
                return Err(EcrmError::CapExceeded { cap });
            }
            out.push(stack.clone());
            return Ok(());
        }
        for &a in &self.out_arcs[node] {
            stack.push(a);
            self.paths_from(self.arcs[a].1, sink, stack, out, cap)?;
            stack.pop();
        }
        Ok(())
    }

    /// Arc vector carrying the full source amount along `path`.
    pub fn path_flow(&self, path: &[usize]) -> Vec<f64> {
        let amount = self.unit_source_sink().map_or(1.0, |(_, _, a)| a);
        let mut flow = vec![0.0; self.arcs.len()];
        for &a in path {
            flow[a] += amount;
        }
        flow
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Integer constraint system `A y (<=|>=|=) b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMatrix {
    pub entries: Vec<Vec<i64>>,
    pub rhs: Vec<i64>,
    pub senses: Vec<Sense>,
    pub cols: usize,
}

impl ConstraintMatrix {
    /// A bare matrix with `<= 0` rows, for TU checks of arbitrary input.
    pub fn from_rows(entries: Vec<Vec<i64>>) -> Result<Self> {
        let cols = entries.first().map_or(0, Vec::len);
        for row in &entries {
            check_dim(cols, row.len())?;
        }
        let n = entries.len();
        Ok(ConstraintMatrix {
            entries,
            rhs: vec![0; n],
            senses: vec![Sense::Le; n],
            cols,
        })
    }

    pub fn nrows(&self) -> usize {
        self.entries.len()
    }

    /// `A y` compared against `b` row by row.
    pub fn is_satisfied(&self, y: &[i64]) -> bool {
        self.entries.iter().zip(&self.rhs).zip(&self.senses).all(|((row, &b), sense)| {
            let lhs: i64 = row.iter().zip(y).map(|(a, v)| a * v).sum();
            match sense {
                Sense::Le => lhs <= b,
                Sense::Ge => lhs >= b,
                Sense::Eq => lhs == b,
            }
        })
    }
}

/// One `<= 0` row per arc `(parent, child)`: `+1` on the child, `-1` on the parent.
pub fn hierarchy_constraint_matrix(dag: &HierarchyDag) -> ConstraintMatrix {
    let d = dag.len();
    let entries: Vec<Vec<i64>> = dag
        .arcs()
        .iter()
        .map(|&(p, c)| {
            let mut row = vec![0; d];
            row[c] = 1;
            row[p] = -1;
            row
        })
        .collect();
    let n = entries.len();
    ConstraintMatrix {
        entries,
        rhs: vec![0; n],
        senses: vec![Sense::Le; n],
        cols: d,
    }
}

/// Row and column sums of the `d x d` assignment indicator, each equal to 1.
pub fn assignment_constraint_matrix(d: usize) -> ConstraintMatrix {
    let mut entries = Vec::with_capacity(2 * d);
    for j in 0..d {
        let mut row = vec![0; d * d];
        row[j * d..(j + 1) * d].iter_mut().for_each(|v| *v = 1);
        entries.push(row);
    }
    for k in 0..d {
        let mut row = vec![0; d * d];
        for j in 0..d {
            row[j * d + k] = 1;
        }
        entries.push(row);
    }
    ConstraintMatrix {
        rhs: vec![1; 2 * d],
        senses: vec![Sense::Eq; 2 * d],
        entries,
        cols: d * d,
    }
}

/// Node-arc incidence rows (`+1` at the tail, `-1` at the head) with the
/// supplies as equality right-hand sides. Supplies must be integral.
pub fn flow_constraint_matrix(net: &FlowNetwork) -> Result<ConstraintMatrix> {
    let m = net.arcs().len();
    let mut entries = vec![vec![0; m]; net.num_nodes()];
    for (a, &(t, h)) in net.arcs().iter().enumerate() {
        entries[t][a] = 1;
        entries[h][a] = -1;
    }
    let rhs = net
        .supply()
        .iter()
        .map(|&b| {
            if b.fract() == 0.0 {
                Ok(b as i64)
            } else {
                Err(EcrmError::InvalidParameter(format!("supply {b} is not integral")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConstraintMatrix {
        senses: vec![Sense::Eq; net.num_nodes()],
        rhs,
        entries,
        cols: m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuVerdict {
    True,
    False,
    Unknown,
}

impl TuVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            TuVerdict::True => "true",
            TuVerdict::False => "false",
            TuVerdict::Unknown => "unknown",
        }
    }
}

pub const DEFAULT_TU_CAP: u128 = 2_000_000;

/// Number of square submatrices of an `n x d` matrix.
pub fn square_submatrix_count(n: usize, d: usize) -> u128 {
    (1..=n.min(d)).fold(0u128, |acc, k| {
        acc.saturating_add(binomial(n, k).saturating_mul(binomial(d, k)))
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Exhaustive total-unimodularity test. Returns `Unknown` when the number
/// of square submatrices exceeds `size_cap`, unless an entry outside
/// `{-1, 0, 1}` already settles the answer.
pub fn is_totally_unimodular(a: &ConstraintMatrix, size_cap: u128) -> TuVerdict {
    if a.entries.iter().flatten().any(|v| !(-1..=1).contains(v)) {
        return TuVerdict::False;
    }
    let (n, d) = (a.nrows(), a.cols);
    if square_submatrix_count(n, d) > size_cap {
        return TuVerdict::Unknown;
    }
    let mut buf = Vec::new();
    for k in 2..=n.min(d) {
        let mut rows: Vec<usize> = (0..k).collect();
        loop {
            let mut cols: Vec<usize> = (0..k).collect();
            loop {
                buf.clear();
                for &r in &rows {
                    buf.extend(cols.iter().map(|&c| i128::from(a.entries[r][c])));
                }
                let det = bareiss_determinant(&mut buf, k);
                if !(-1..=1).contains(&det) {
                    return TuVerdict::False;
                }
                if !next_combination(&mut cols, d) {
                    break;
                }
            }
            if !next_combination(&mut rows, n) {
                break;
            }
        }
    }
    TuVerdict::True
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in (i + 1)..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exact integer determinant by fraction-free elimination; `m` is row-major `k x k`.
fn bareiss_determinant(m: &mut [i128], k: usize) -> i128 {
    let mut sign = 1;
    let mut prev = 1i128;
    for col in 0..k {
        if m[col * k + col] == 0 {
            match ((col + 1)..k).find(|&r| m[r * k + col] != 0) {
                Some(r) => {
                    for c in 0..k {
                        m.swap(col * k + c, r * k + c);
                    }
                    sign = -sign;
                }
                None => return 0,
            }
        }
        let pivot = m[col * k + col];
        for r in (col + 1)..k {
            for c in (col + 1)..k {
                m[r * k + c] = (m[r * k + c] * pivot - m[r * k + col] * m[col * k + c]) / prev;
            }
        }
        prev = pivot;
    }
    sign * m[k * k - 1]
}

/// All members of a discrete space, sorted lexicographically.
pub fn enumerate_space(space: &OutputSpace, cap: usize) -> Result<Vec<Label>> {
    match space {
        OutputSpace::Explicit(items) => {
            if items.len() > cap {
                return Err(EcrmError::CapExceeded { cap });
            }
            let mut out = items.clone();
            out.sort_by(|a, b| a.lex_cmp(b));
            Ok(out)
        }
        OutputSpace::Assignment { d } => {
            let count = (1..=*d).try_fold(1usize, |acc, k| acc.checked_mul(k));
            if count.map_or(true, |c| c > cap) {
                return Err(EcrmError::CapExceeded { cap });
            }
            let mut perm: Vec<usize> = (1..=*d).collect();
            let mut out = vec![Label::Ranking(perm.clone())];
            while next_permutation(&mut perm) {
                out.push(Label::Ranking(perm.clone()));
            }
            Ok(out)
        }
        OutputSpace::Hierarchy(dag) => {
            let order = dag.topological_order();
            let mut y = vec![0u8; dag.len()];
            let mut out = Vec::new();
            closed_sets(dag, order, 0, &mut y, &mut out, cap)?;
            out.sort_by(|a, b| a.lex_cmp(b));
            Ok(out)
        }
        OutputSpace::Flow(_) => Err(EcrmError::Unsupported(
            "flow polytopes are continuous and cannot be enumerated".into(),
        )),
    }
}

fn closed_sets(
    dag: &HierarchyDag,
    order: &[usize],
    pos: usize,
    y: &mut Vec<u8>,
    out: &mut Vec<Label>,
    cap: usize,
) -> Result<()> {
    if pos == order.len() {
        if out.len() >= cap {
            return Err(EcrmError::CapExceeded { cap });
        }
        out.push(Label::Bits(y.clone()));
        return Ok(());
    }
    let j = order[pos];
    y[j] = 0;
    closed_sets(dag, order, pos + 1, y, out, cap)?;
    if dag.parents(j).iter().all(|&p| y[p] == 1) {
        y[j] = 1;
        closed_sets(dag, order, pos + 1, y, out, cap)?;
        y[j] = 0;
    }
    Ok(())
}

pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}
