//! Additive risk model for hierarchical multilabel outputs with a joint
//! input-output kernel.
//!
//! Each node `j` gets its own risk estimate `f(y_j, x)` of the per-node loss
//! `1(y_j != Y_j)`. Basis functions are indexed by (sample `i`, node `k`,
//! value `v`) and the joint kernel between `(x, u at j)` and `(x', v at k)` is
//! `k(x, x') 1(u = v) 1(j in N(k))`, where the neighborhood `N(k)` is `k`
//! alone or `k` with its parents and children. This gives
//!
//! `f(y_j, x) = sum_i sum_{k in N(j)} (a_ik1 y_j + a_ik0 (1 - y_j)) k(x, x_i)`
//!
//! and a risk that is affine in `y`, so inference is a hierarchy closure.
//!
//! The coefficients minimize `|G a - t|² + lambda |a|²` over all `2md`
//! targets `t_iju = 1(u != y_ij)`, with `G = K ⊗ N ⊗ I₂` the joint Gram.

use crate::error::{check_dim, EcrmError, Result};
use crate::hierarchy::HierarchyDag;
use crate::inference::{solve_hierarchy, Certificate, InferenceResult};
use crate::kernel::{gram_matrix, KernelSpec};
use crate::label::Label;
use crate::linalg::{dot, Cholesky, Matrix};
use crate::losses::linear_value;

/// Largest `2md` solved by a dense factorization; beyond it, conjugate gradients.
pub const DENSE_LIMIT: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    SelfOnly,
    Adjacent,
}

impl Neighborhood {
    pub fn name(self) -> &'static str {
        match self {
            Neighborhood::SelfOnly => "self",
            Neighborhood::Adjacent => "adjacent",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "self" => Some(Neighborhood::SelfOnly),
            "adjacent" => Some(Neighborhood::Adjacent),
            _ => None,
        }
    }

    /// `N(k)` for every node, sorted.
    pub fn sets(self, dag: &HierarchyDag) -> Vec<Vec<usize>> {
        (0..dag.len())
            .map(|k| match self {
                Neighborhood::SelfOnly => vec![k],
                Neighborhood::Adjacent => dag.neighborhood(k),
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct AdditiveModel {
    kernel: KernelSpec,
    lambda: f64,
    dag: HierarchyDag,
    neighborhood: Neighborhood,
    inputs: Matrix,
    /// `alpha[(i * d + k) * 2 + v]`.
    alpha: Vec<f64>,
}

/// Per-node risks `off_j = f(0, x)` and `on_j = f(1, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRisks {
    pub off: Vec<f64>,
    pub on: Vec<f64>,
}

impl NodeRisks {
    /// Slope `on - off` of the risk in each coordinate.
    pub fn coefficients(&self) -> Vec<f64> {
        self.on.iter().zip(&self.off).map(|(a, b)| a - b).collect()
    }

    pub fn offset(&self) -> f64 {
        self.off.iter().sum()
    }
}

impl AdditiveModel {
    /// Rebuilds a model from stored coefficients.
    pub fn from_parts(
        kernel: KernelSpec,
        lambda: f64,
        dag: HierarchyDag,
        neighborhood: Neighborhood,
        inputs: Matrix,
        alpha: Vec<f64>,
    ) -> Result<Self> {
        check_dim(2 * inputs.nrows() * dag.len(), alpha.len())?;
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(EcrmError::Singular("non-finite coefficients".into()));
        }
        Ok(AdditiveModel {
            kernel,
            lambda,
            dag,
            neighborhood,
            inputs,
            alpha,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dag(&self) -> &HierarchyDag {
        &self.dag
    }

    pub fn neighborhood(&self) -> Neighborhood {
        self.neighborhood
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn node_risks(&self, x: &[f64]) -> Result<NodeRisks> {
        check_dim(self.inputs.ncols(), x.len())?;
        let d = self.dag.len();
        let mut sums = vec![[0.0f64; 2]; d];
        for (i, xi) in self.inputs.rows_iter().enumerate() {
            let kv = self.kernel.eval(x, xi)?;
            for (k, s) in sums.iter_mut().enumerate() {
                let base = (i * d + k) * 2;
                s[0] += self.alpha[base] * kv;
                s[1] += self.alpha[base + 1] * kv;
            }
        }
        let sets = self.neighborhood.sets(&self.dag);
        let mut off = vec![0.0; d];
        let mut on = vec![0.0; d];
        for j in 0..d {
            for &k in &sets[j] {
                off[j] += sums[k][0];
                on[j] += sums[k][1];
            }
        }
        Ok(NodeRisks { off, on })
    }
}

/// `G a` for `G = K ⊗ N ⊗ I₂`.
fn joint_matvec(gram: &Matrix, sets: &[Vec<usize>], a: &[f64]) -> Vec<f64> {
    let m = gram.nrows();
    let d = sets.len();
    let mut mixed = vec![0.0; m * d * 2];
    for i in 0..m {
        for j in 0..d {
            for &k in &sets[j] {
                for v in 0..2 {
                    mixed[(i * d + j) * 2 + v] += a[(i * d + k) * 2 + v];
                }
            }
        }
    }
    let mut out = vec![0.0; m * d * 2];
    for i in 0..m {
        let row = gram.row(i);
        let dst = &mut out[i * d * 2..(i + 1) * d * 2];
        for (ip, &kv) in row.iter().enumerate() {
            if kv == 0.0 {
                continue;
            }
            for (o, s) in dst.iter_mut().zip(&mixed[ip * d * 2..(ip + 1) * d * 2]) {
                *o += kv * s;
            }
        }
    }
    out
}

fn targets(labels: &[Label], d: usize) -> Result<Vec<f64>> {
    let mut t = Vec::with_capacity(labels.len() * d * 2);
    for label in labels {
        let bits = label.as_bits()?;
        check_dim(d, bits.len())?;
        for &b in bits {
            t.push(if b == 0 { 0.0 } else { 1.0 });
            t.push(if b == 1 { 0.0 } else { 1.0 });
        }
    }
    Ok(t)
}

fn adjacency(sets: &[Vec<usize>]) -> Matrix {
    let d = sets.len();
    let mut n = Matrix::zeros(d, d);
    for (j, set) in sets.iter().enumerate() {
        for &k in set {
            n.row_mut(j)[k] = 1.0;
        }
    }
    n
}

/// Training objective `|G a - t|² + lambda |a|²`.
pub fn additive_objective(
    kernel: &KernelSpec,
    lambda: f64,
    inputs: &Matrix,
    labels: &[Label],
    dag: &HierarchyDag,
    neighborhood: Neighborhood,
    alpha: &[f64],
) -> Result<f64> {
    let d = dag.len();
    let t = targets(labels, d)?;
    check_dim(t.len(), alpha.len())?;
    let gram = gram_matrix(kernel, inputs);
    let fit = joint_matvec(&gram, &neighborhood.sets(dag), alpha);
    let residual: f64 = fit.iter().zip(&t).map(|(f, y)| (f - y) * (f - y)).sum();
    Ok(residual + lambda * dot(alpha, alpha))
}

/// Fits the coefficients from the normal equations
/// `(G² + lambda I) a = G t`. `G²` is `K² ⊗ N² ⊗ I₂`, so the two label
/// values decouple into identical `md × md` systems, factored densely up to
/// [`DENSE_LIMIT`] coefficients and solved by conjugate gradients otherwise.
pub fn fit_additive(
    kernel: KernelSpec,
    lambda: f64,
    inputs: Matrix,
    labels: &[Label],
    dag: &HierarchyDag,
    neighborhood: Neighborhood,
) -> Result<AdditiveModel> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(EcrmError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let m = inputs.nrows();
    if m == 0 {
        return Err(EcrmError::InvalidParameter("training set is empty".into()));
    }
    check_dim(m, labels.len())?;
    for (i, label) in labels.iter().enumerate() {
        if !dag.is_consistent(label.as_bits()?) {
            return Err(EcrmError::InvalidLabel(format!("label {i} violates the hierarchy")));
        }
    }
    let d = dag.len();
    let sets = neighborhood.sets(dag);
    let gram = gram_matrix(&kernel, &inputs);
    let t = targets(labels, d)?;
    let rhs = joint_matvec(&gram, &sets, &t);
    let alpha = if 2 * m * d <= DENSE_LIMIT {
        dense_solve(&gram, &sets, lambda, &rhs)?
    } else {
        conjugate_gradient(&gram, &sets, lambda, &rhs)?
    };
    AdditiveModel::from_parts(kernel, lambda, dag.clone(), neighborhood, inputs, alpha)
}

fn dense_solve(gram: &Matrix, sets: &[Vec<usize>], lambda: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let m = gram.nrows();
    let d = sets.len();
    let k2 = gram.matmul(gram)?;
    let adj = adjacency(sets);
    let n2 = adj.matmul(&adj)?;
    let size = m * d;
    let mut system = Matrix::zeros(size, size);
    for i in 0..m {
        for k in 0..d {
            let row = system.row_mut(i * d + k);
            for ip in 0..m {
                let kv = k2[(i, ip)];
                for kp in 0..d {
                    row[ip * d + kp] = kv * n2[(k, kp)];
                }
            }
        }
    }
    system.add_diagonal(lambda);
    let factor = Cholesky::factor(&system).map_err(|_| {
        EcrmError::Singular("joint-kernel normal equations are not numerically positive definite".into())
    })?;
    let mut alpha = vec![0.0; 2 * size];
    for v in 0..2 {
        let b: Vec<f64> = (0..size).map(|r| rhs[r * 2 + v]).collect();
        let sol = factor.solve(&b)?;
        for (r, s) in sol.into_iter().enumerate() {
            alpha[r * 2 + v] = s;
        }
    }
    Ok(alpha)
}

fn conjugate_gradient(gram: &Matrix, sets: &[Vec<usize>], lambda: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let apply = |v: &[f64]| -> Vec<f64> {
        let gv = joint_matvec(gram, sets, v);
        let mut out = joint_matvec(gram, sets, &gv);
        for (o, x) in out.iter_mut().zip(v) {
            *o += lambda * x;
        }
        out
    };
    let n = rhs.len();
    let norm_b = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; n];
    if norm_b == 0.0 {
        return Ok(x);
    }
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..(10 * n).max(100) {
        if rr.sqrt() <= 1e-10 * norm_b {
            return Ok(x);
        }
        let ap = apply(&p);
        let step = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr.sqrt() <= 1e-7 * norm_b {
        Ok(x)
    } else {
        Err(EcrmError::Singular("conjugate gradients did not reach the residual tolerance".into()))
    }
}

/// `R(y|x) = sum_j f(y_j, x)`.
pub fn additive_risk(model: &AdditiveModel, x: &[f64], y: &Label) -> Result<f64> {
    let bits = y.as_bits()?;
    if !model.dag.is_consistent(bits) {
        return Err(EcrmError::InvalidLabel("label violates the hierarchy".into()));
    }
    let risks = model.node_risks(x)?;
    Ok(bits
        .iter()
        .zip(risks.on.iter().zip(&risks.off))
        .map(|(&b, (on, off))| if b == 1 { *on } else { *off })
        .sum())
}

/// Exact minimizer of the additive risk over the hierarchy.
pub fn infer_additive(model: &AdditiveModel, x: &[f64]) -> Result<InferenceResult> {
    let risks = model.node_risks(x)?;
    let coefficients = risks.coefficients();
    let bits = solve_hierarchy(&coefficients, &model.dag)?;
    let objective = risks.offset() + linear_value(&coefficients, &bits);
    Ok(InferenceResult {
        y_star: Label::Bits(bits),
        objective,
        certificate: Certificate::Exact,
    })
}
