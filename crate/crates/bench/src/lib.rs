//! Fixtures shared by the benchmarks.

use ecrm_core::data::{simulate_flow_data, simulate_hierarchy_data};
use ecrm_core::{Dataset, FlowGeneratorSpec, HierarchyDag, KernelSpec, Label, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rbf() -> KernelSpec {
    KernelSpec::rbf(0.5).expect("positive bandwidth")
}

/// A random tree with `d` nodes and `m` labelled samples in 10 dimensions.
pub fn hierarchy_data(m: usize, d: usize) -> (HierarchyDag, Dataset) {
    simulate_hierarchy_data(m, 10, d, 17).expect("valid sizes")
}

pub fn flow_data(m: usize) -> Dataset {
    let spec = FlowGeneratorSpec::benchmark(1.0, 7).expect("benchmark network");
    simulate_flow_data(&spec, m, 23).expect("valid sizes")
}

/// `m` random rankings of `d` items with inputs in 5 dimensions.
pub fn ranking_data(m: usize, d: usize) -> (Matrix, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let inputs = (0..m * 5).map(|_| rng.gen::<f64>()).collect();
    let labels = (0..m)
        .map(|_| {
            let mut ranks: Vec<usize> = (1..=d).collect();
            for i in (1..d).rev() {
                ranks.swap(i, rng.gen_range(0..=i));
            }
            Label::Ranking(ranks)
        })
        .collect();
    (Matrix::from_vec(m, 5, inputs).expect("shape"), labels)
}

pub fn query(p: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..p).map(|_| rng.gen::<f64>()).collect()
}
