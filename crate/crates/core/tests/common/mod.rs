//! Shared fixtures and oracles. Nothing here calls into the solvers under test.
#![allow(dead_code)]

use ecrm_core::{FlowNetwork, HierarchyDag, KernelSpec, Label, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_kernel(rng: &mut ChaCha8Rng) -> KernelSpec {
    if rng.gen_bool(0.5) {
        KernelSpec::Linear
    } else {
        KernelSpec::rbf(rng.gen_range(0.1..2.0)).unwrap()
    }
}

/// Kernel value written out directly.
pub fn kernel_value(kernel: &KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    match kernel {
        KernelSpec::Linear => a.iter().zip(b).map(|(u, v)| u * v).sum(),
        KernelSpec::Rbf { gamma } => {
            let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
            (-gamma * d2).exp()
        }
    }
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// `(K + m lambda I)^-1 v(x)` by elimination.
pub fn ridge_weights(kernel: &KernelSpec, lambda: f64, inputs: &Matrix, x: &[f64]) -> Vec<f64> {
    let m = inputs.nrows();
    let a = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| kernel_value(kernel, inputs.row(i), inputs.row(j)) + if i == j { m as f64 * lambda } else { 0.0 })
                .collect()
        })
        .collect();
    let v = (0..m).map(|i| kernel_value(kernel, inputs.row(i), x)).collect();
    gauss_solve(a, v)
}

/// Every 0/1 vector of length `d` with no child above its parent.
pub fn closed_subsets(dag: &HierarchyDag) -> Vec<Vec<u8>> {
    let d = dag.len();
    (0u32..1 << d)
        .map(|mask| (0..d).map(|j| ((mask >> j) & 1) as u8).collect::<Vec<u8>>())
        .filter(|y| dag.arcs().iter().all(|&(p, c)| y[c] <= y[p]))
        .collect()
}

/// Node labels grown from the roots, each open child switched on with probability 1/2.
pub fn random_closed(rng: &mut ChaCha8Rng, dag: &HierarchyDag) -> Vec<u8> {
    let mut y = vec![0u8; dag.len()];
    for &j in dag.topological_order() {
        if dag.parents(j).iter().all(|&p| y[p] == 1) && rng.gen_bool(0.5) {
            y[j] = 1;
        }
    }
    y
}

/// All permutations of `1..=d` as rank vectors.
pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..left.len() {
            let v = left.remove(i);
            prefix.push(v);
            go(prefix, left, out);
            prefix.pop();
            left.insert(i, v);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (1..=d).collect(), &mut out);
    out
}

pub fn random_permutation(rng: &mut ChaCha8Rng, d: usize) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (1..=d).collect();
    p.shuffle(rng);
    p
}

/// Source-sink paths of an acyclic unit-flow network, as arc lists, by DFS.
pub fn st_paths(net: &FlowNetwork, source: usize, sink: usize) -> Vec<Vec<usize>> {
    fn go(net: &FlowNetwork, at: usize, sink: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if at == sink {
            out.push(path.clone());
            return;
        }
        for (a, &(t, h)) in net.arcs().iter().enumerate() {
            if t == at {
                path.push(a);
                go(net, h, sink, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(net, source, sink, &mut Vec::new(), &mut out);
    out
}

/// Flows that send `k/steps` of the unit along each path, over all
/// compositions of `steps`.
pub fn path_grid(net: &FlowNetwork, source: usize, sink: usize, steps: usize) -> Vec<Vec<f64>> {
    let paths = st_paths(net, source, sink);
    let mut out = Vec::new();
    let mut counts = vec![0usize; paths.len()];
    fn go(i: usize, left: usize, counts: &mut Vec<usize>, paths: &[Vec<usize>], dim: usize, steps: usize, out: &mut Vec<Vec<f64>>) {
        if i + 1 == paths.len() {
            counts[i] = left;
            let mut f = vec![0.0; dim];
            for (p, &c) in paths.iter().zip(counts.iter()) {
                for &a in p {
                    f[a] += c as f64 / steps as f64;
                }
            }
            out.push(f);
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            go(i + 1, left - c, counts, paths, dim, steps, out);
        }
    }
    go(0, steps, &mut counts, &paths, net.arcs().len(), steps, &mut out);
    out
}

/// Random label: a mixture of paths with weights that are multiples of `1/steps`.
pub fn random_grid_flow(rng: &mut ChaCha8Rng, paths: &[Vec<usize>], dim: usize, steps: usize) -> Vec<f64> {
    let mut f = vec![0.0; dim];
    for _ in 0..steps {
        let p = &paths[rng.gen_range(0..paths.len())];
        for &a in p {
            f[a] += 1.0 / steps as f64;
        }
    }
    f
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum()
}

pub fn l2sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// `sum_i w_i l(y, y_i)` for vector labels.
pub fn weighted_vector_risk(weights: &[f64], labels: &[Label], y: &[f64], loss: fn(&[f64], &[f64]) -> f64) -> f64 {
    weights
        .iter()
        .zip(labels)
        .map(|(w, l)| w * loss(y, l.as_vector().unwrap()))
        .sum()
}

/// Largest absolute divergence error from the supplies.
pub fn conservation_residual(net: &FlowNetwork, flow: &[f64]) -> f64 {
    let mut div = vec![0.0; net.num_nodes()];
    for (a, &(t, h)) in net.arcs().iter().enumerate() {
        div[t] += flow[a];
        div[h] -= flow[a];
    }
    div.iter()
        .zip(net.supply())
        .map(|(d, b)| (d - b).abs())
        .fold(0.0, f64::max)
}
