//! Synthetic data. Flows come from a random-utility path choice model:
//! every source-sink path `P_k` has utility `u_k = theta_kᵀx + tau g_k` with
//! `g_k` standard Gumbel. The unit of supply is split across paths by the
//! softmax of `u / tau` and the flow on an arc is the total share of the
//! paths using it. Small `tau` concentrates the flow on the best path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gumbel, StandardNormal};

use super::Dataset;
use crate::error::{EcrmError, Result};
use crate::hierarchy::HierarchyDag;
use crate::label::Label;
use crate::linalg::{dot, Matrix};
use crate::risk::ConditionalSampler;
use crate::spaces::{FlowNetwork, OutputSpace};

pub const DEFAULT_INPUT_DIM: usize = 20;

#[derive(Debug, Clone)]
pub struct FlowGeneratorSpec {
    network: FlowNetwork,
    paths: Vec<Vec<usize>>,
    /// One row of utility coefficients per path.
    theta: Matrix,
    tau: f64,
}

impl FlowGeneratorSpec {
    /// Draws `theta` entrywise from `N(0, 1)` with its own seed.
    pub fn new(network: FlowNetwork, input_dim: usize, tau: f64, theta_seed: u64) -> Result<Self> {
        let paths = network.enumerate_paths(100_000)?;
        let mut rng = ChaCha8Rng::seed_from_u64(theta_seed);
        let data = (0..paths.len() * input_dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let theta = Matrix::from_vec(paths.len(), input_dim, data)?;
        Self::with_theta(network, theta, tau)
    }

    pub fn with_theta(network: FlowNetwork, theta: Matrix, tau: f64) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(EcrmError::InvalidParameter(format!("tau must be nonnegative, got {tau}")));
        }
        if theta.as_slice().iter().any(|t| !t.is_finite()) {
            return Err(EcrmError::InvalidParameter("theta must be finite".into()));
        }
        let paths = network.enumerate_paths(100_000)?;
        if paths.len() != theta.nrows() {
            return Err(EcrmError::DimensionMismatch {
                expected: paths.len(),
                found: theta.nrows(),
            });
        }
        if theta.ncols() == 0 {
            return Err(EcrmError::InvalidParameter("input dimension must be positive".into()));
        }
        Ok(FlowGeneratorSpec {
            network,
            paths,
            theta,
            tau,
        })
    }

    /// The six-node benchmark network with 20-dimensional inputs.
    pub fn benchmark(tau: f64, theta_seed: u64) -> Result<Self> {
        Self::new(FlowNetwork::benchmark(), DEFAULT_INPUT_DIM, tau, theta_seed)
    }

    pub fn network(&self) -> &FlowNetwork {
        &self.network
    }

    pub fn paths(&self) -> &[Vec<usize>] {
        &self.paths
    }

    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn input_dim(&self) -> usize {
        self.theta.ncols()
    }

    /// Path shares for given Gumbel draws.
    pub fn path_shares(&self, x: &[f64], gumbels: &[f64]) -> Vec<f64> {
        let mean: Vec<f64> = self.theta.rows_iter().map(|t| dot(t, x)).collect();
        if self.tau == 0.0 {
            let best = (0..mean.len())
                .max_by(|&a, &b| mean[a].total_cmp(&mean[b]).then(b.cmp(&a)))
                .expect("at least one path");
            let mut shares = vec![0.0; mean.len()];
            shares[best] = 1.0;
            return shares;
        }
        let scores: Vec<f64> = mean.iter().zip(gumbels).map(|(u, g)| u / self.tau + g).collect();
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.iter().map(|e| e / total).collect()
    }

    /// Arc flows carrying the supply along paths in proportion to `shares`.
    pub fn flow_from_shares(&self, shares: &[f64]) -> Vec<f64> {
        let amount = self.network.unit_source_sink().map_or(1.0, |(_, _, a)| a);
        let mut flow = vec![0.0; self.network.arcs().len()];
        for (path, share) in self.paths.iter().zip(shares) {
            for &a in path {
                flow[a] += amount * share;
            }
        }
        flow
    }

    fn draw_label(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let gumbel = Gumbel::new(0.0, 1.0).expect("unit scale");
        let g: Vec<f64> = (0..self.paths.len()).map(|_| gumbel.sample(rng)).collect();
        self.flow_from_shares(&self.path_shares(x, &g))
    }
}

impl ConditionalSampler for FlowGeneratorSpec {
    fn sample(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Label> {
        if x.len() != self.input_dim() {
            return Err(EcrmError::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(Label::Vector(self.draw_label(x, rng)))
    }
}

/// `m` samples with `x` uniform on the unit hypercube. Sample `i` uses
/// stream `i` of a generator seeded with `seed`, so any subset of samples
/// can be produced independently.
pub fn simulate_flow_data(spec: &FlowGeneratorSpec, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(EcrmError::InvalidParameter("sample count must be positive".into()));
    }
    let p = spec.input_dim();
    let mut inputs = Vec::with_capacity(m * p);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let x: Vec<f64> = (0..p).map(|_| rng.gen::<f64>()).collect();
        labels.push(Label::Vector(spec.draw_label(&x, &mut rng)));
        inputs.extend(x);
    }
    Dataset::new(Matrix::from_vec(m, p, inputs)?, labels, OutputSpace::Flow(spec.network.clone()))
}

/// Random hierarchy workload: a uniform random tree on `d` nodes, inputs
/// uniform on `[0, 1]^p`, and labels grown from the root with each child of
/// a selected node selected with probability 1/2.
pub fn simulate_hierarchy_data(m: usize, p: usize, d: usize, seed: u64) -> Result<(HierarchyDag, Dataset)> {
    if m == 0 || p == 0 || d == 0 {
        return Err(EcrmError::InvalidParameter("m, p and d must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dag = HierarchyDag::random_tree(d, &mut rng)?;
    let inputs: Vec<f64> = (0..m * p).map(|_| rng.gen::<f64>()).collect();
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let mut y = vec![0u8; d];
        for &j in dag.topological_order() {
            let open = dag.parents(j).iter().all(|&q| y[q] == 1);
            if open && rng.gen_bool(0.5) {
                y[j] = 1;
            }
        }
        labels.push(Label::Bits(y));
    }
    let data = Dataset::new(Matrix::from_vec(m, p, inputs)?, labels, OutputSpace::Hierarchy(dag.clone()))?;
    Ok((dag, data))
}
