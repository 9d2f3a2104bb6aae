//! Solver outputs checked against independent reference computations.

mod common;

use common::*;
use ecrm_core::data::{knn_local_risk_predict, KrrProjector};
use ecrm_core::inference::{project_onto_flow, solve_flow_abs, solve_flow_sq};
use ecrm_core::kernel::{estimate_conditional_risk, weighted_risk};
use ecrm_core::{
    infer, minimize_risk, Certificate, Dataset, FlowNetwork, HierarchyDag, InterceptMode, KernelSpec, Label, LossSpec,
    OutputSpace, SolverParams, TrainedModel,
};
use rand::Rng;

fn hamming(a: &[u8], b: &[u8]) -> f64 {
    a.iter().zip(b).filter(|(u, v)| u != v).count() as f64
}

/// Root penalty 1, each child gets its parent's penalty over the number of siblings.
fn sibling_penalties(dag: &HierarchyDag) -> Vec<f64> {
    let d = dag.len();
    let mut parent = vec![None; d];
    for &(p, c) in dag.arcs() {
        parent[c] = Some(p);
    }
    let mut c = vec![0.0; d];
    for j in 0..d {
        // Parents have smaller ids in the random trees used here.
        c[j] = match parent[j] {
            None => 1.0,
            Some(p) => c[p] / dag.arcs().iter().filter(|&&(q, _)| q == p).count() as f64,
        };
    }
    c
}

/// Penalty of every node where the labels first disagree along the path from the root.
fn hierarchical_by_definition(dag: &HierarchyDag, c: &[f64], a: &[u8], b: &[u8]) -> f64 {
    let d = dag.len();
    let mut parent = vec![None; d];
    for &(p, ch) in dag.arcs() {
        parent[ch] = Some(p);
    }
    (0..d)
        .filter(|&j| {
            if a[j] == b[j] {
                return false;
            }
            let mut k = parent[j];
            while let Some(q) = k {
                if a[q] != b[q] {
                    return false;
                }
                k = parent[q];
            }
            true
        })
        .map(|j| c[j])
        .sum()
}

#[test]
fn weights_and_risks_match_elimination() {
    let mut rng = rng(11);
    for _ in 0..50 {
        let m = rng.gen_range(1..=10);
        let p = rng.gen_range(1..=5);
        let d = rng.gen_range(1..=6);
        let kernel = random_kernel(&mut rng);
        let lambda = rng.gen_range(0.01..1.0);
        let inputs = random_matrix(&mut rng, m, p);
        let dag = HierarchyDag::random_tree(d, &mut rng).unwrap();
        let labels: Vec<Label> = (0..m).map(|_| Label::Bits(random_closed(&mut rng, &dag))).collect();
        let model = TrainedModel::fit(kernel.clone(), lambda, inputs.clone(), labels.clone(), InterceptMode::None).unwrap();
        let x = random_vec(&mut rng, p);
        let oracle = ridge_weights(&kernel, lambda, &inputs, &x);
        let w = model.weights(&x).unwrap();
        for (a, b) in w.values.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
        }
        for y in closed_subsets(&dag) {
            // The per-output ridge fit of the loss series, evaluated at x.
            let series: Vec<f64> = labels.iter().map(|l| hamming(&y, l.as_bits().unwrap())).collect();
            let direct: f64 = series.iter().zip(&oracle).map(|(s, w)| s * w).sum();
            let est = estimate_conditional_risk(&model, &LossSpec::Hamming, &Label::Bits(y), &x).unwrap();
            assert!((est - direct).abs() <= 1e-8, "{est} vs {direct}");
        }
    }
}

#[test]
fn centered_intercept_is_mean_plus_ridge_on_residuals() {
    let mut rng = rng(12);
    for _ in 0..20 {
        let m = rng.gen_range(2..=8);
        let kernel = random_kernel(&mut rng);
        let inputs = random_matrix(&mut rng, m, 3);
        let labels: Vec<Label> = (0..m).map(|_| Label::Ranking(random_permutation(&mut rng, 4))).collect();
        let model = TrainedModel::fit(kernel.clone(), 0.2, inputs.clone(), labels.clone(), InterceptMode::Centered).unwrap();
        let x = random_vec(&mut rng, 3);
        let w = ridge_weights(&kernel, 0.2, &inputs, &x);
        for y in permutations(4) {
            let series: Vec<f64> = labels
                .iter()
                .map(|l| y.iter().zip(l.as_ranking().unwrap()).map(|(a, b)| a.abs_diff(*b) as f64).sum())
                .collect();
            let mean = series.iter().sum::<f64>() / m as f64;
            let direct = mean + series.iter().zip(&w).map(|(s, wi)| wi * (s - mean)).sum::<f64>();
            let est = estimate_conditional_risk(&model, &LossSpec::Footrule, &Label::Ranking(y), &x).unwrap();
            assert!((est - direct).abs() <= 1e-9);
        }
    }
}

#[test]
fn hierarchy_inference_matches_enumeration() {
    let mut rng = rng(13);
    for trial in 0..200 {
        let d = rng.gen_range(1..=12);
        let m = rng.gen_range(1..=8);
        let dag = HierarchyDag::random_tree(d, &mut rng).unwrap();
        let labels: Vec<Vec<u8>> = (0..m).map(|_| random_closed(&mut rng, &dag)).collect();
        let wrapped: Vec<Label> = labels.iter().cloned().map(Label::Bits).collect();
        let weights = random_vec(&mut rng, m);
        let c = sibling_penalties(&dag);
        let hier = LossSpec::hierarchical(&dag).unwrap();
        for (loss, eval) in [
            (LossSpec::Hamming, Box::new(|a: &[u8], b: &[u8]| hamming(a, b)) as Box<dyn Fn(&[u8], &[u8]) -> f64>),
            (hier, Box::new(|a: &[u8], b: &[u8]| hierarchical_by_definition(&dag, &c, a, b))),
        ] {
            let risk = |y: &[u8]| -> f64 { labels.iter().zip(&weights).map(|(l, w)| w * eval(y, l)).sum() };
            let best = closed_subsets(&dag).iter().map(|y| risk(y)).fold(f64::INFINITY, f64::min);
            let res = minimize_risk(&weights, &wrapped, &loss, &OutputSpace::Hierarchy(dag.clone()), &SolverParams::default())
                .unwrap();
            let y = res.y_star.as_bits().unwrap();
            assert!(dag.is_consistent(y));
            assert_eq!(res.certificate, Certificate::Exact);
            assert!((risk(y) - best).abs() <= 1e-9, "trial {trial}: {} vs {best}", risk(y));
            assert!((res.objective - best).abs() <= 1e-9);
        }
    }
}

#[test]
fn closed_form_hierarchical_loss_matches_definition() {
    let mut rng = rng(14);
    for _ in 0..30 {
        let d = rng.gen_range(1..=9);
        let dag = HierarchyDag::random_tree(d, &mut rng).unwrap();
        let c = sibling_penalties(&dag);
        let LossSpec::Hierarchical { penalties, .. } = LossSpec::hierarchical(&dag).unwrap() else {
            unreachable!()
        };
        for (a, b) in penalties.iter().zip(&c) {
            assert!((a - b).abs() <= 1e-15);
        }
        let members = closed_subsets(&dag);
        for a in &members {
            for b in &members {
                let closed = ecrm_core::losses::hierarchical_loss_closed(&dag, &c, a, b).unwrap();
                assert!((closed - hierarchical_by_definition(&dag, &c, a, b)).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn assignment_inference_matches_enumeration() {
    let mut rng = rng(15);
    for _ in 0..100 {
        let d = rng.gen_range(1..=7);
        let m = rng.gen_range(1..=6);
        let labels: Vec<Vec<usize>> = (0..m).map(|_| random_permutation(&mut rng, d)).collect();
        let wrapped: Vec<Label> = labels.iter().cloned().map(Label::Ranking).collect();
        let weights = random_vec(&mut rng, m);
        let footrule = |a: &[usize], b: &[usize]| -> f64 { a.iter().zip(b).map(|(u, v)| u.abs_diff(*v) as f64).sum() };
        let perm_hamming = |a: &[usize], b: &[usize]| -> f64 { 2.0 * a.iter().zip(b).filter(|(u, v)| u != v).count() as f64 };
        for (loss, eval) in [
            (LossSpec::Footrule, &footrule as &dyn Fn(&[usize], &[usize]) -> f64),
            (LossSpec::Hamming, &perm_hamming),
        ] {
            let risk = |y: &[usize]| -> f64 { labels.iter().zip(&weights).map(|(l, w)| w * eval(y, l)).sum() };
            let best = permutations(d).iter().map(|y| risk(y)).fold(f64::INFINITY, f64::min);
            let res = minimize_risk(&weights, &wrapped, &loss, &OutputSpace::Assignment { d }, &SolverParams::default()).unwrap();
            let y = res.y_star.as_ranking().unwrap();
            let mut sorted = y.to_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, (1..=d).collect::<Vec<_>>());
            assert!((risk(y) - best).abs() <= 1e-9);
        }
    }
}

fn flow_setup(seed: u64, m: usize, steps: usize) -> (FlowNetwork, Vec<Vec<usize>>, Vec<Label>, rand_chacha::ChaCha8Rng) {
    let net = FlowNetwork::benchmark();
    let paths = st_paths(&net, 0, 5);
    let mut rng = rng(seed);
    let labels = (0..m)
        .map(|_| Label::Vector(random_grid_flow(&mut rng, &paths, net.arcs().len(), steps)))
        .collect();
    (net, paths, labels, rng)
}

#[test]
fn absolute_flow_with_nonnegative_weights_matches_grid() {
    let grid = path_grid(&FlowNetwork::benchmark(), 0, 5, 10);
    for seed in 0..12 {
        let (net, _, labels, mut rng) = flow_setup(100 + seed, 6, 10);
        let weights: Vec<f64> = (0..labels.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let best = grid
            .iter()
            .map(|g| weighted_vector_risk(&weights, &labels, g, l1))
            .fold(f64::INFINITY, f64::min);
        let res = solve_flow_abs(&weights, &labels, &net, &SolverParams::default()).unwrap();
        let y = res.y_star.as_vector().unwrap();
        assert_eq!(res.certificate, Certificate::Exact);
        assert!(conservation_residual(&net, y) <= 1e-9 && y.iter().all(|&f| f >= -1e-12));
        let value = weighted_vector_risk(&weights, &labels, y, l1);
        assert!((value - best).abs() <= 1e-9, "seed {seed}: {value} vs {best}");
        assert!((res.objective - value).abs() <= 1e-9);
    }
}

#[test]
fn absolute_flow_with_mixed_weights_never_beats_grid() {
    // With breakpoints on the 1/10 grid every cell vertex is a grid flow, so
    // the grid minimum is the global minimum.
    let grid = path_grid(&FlowNetwork::benchmark(), 0, 5, 10);
    let mut hits = 0;
    for seed in 0..12 {
        let (net, _, labels, mut rng) = flow_setup(200 + seed, 6, 10);
        let weights = random_vec(&mut rng, labels.len());
        let best = grid
            .iter()
            .map(|g| weighted_vector_risk(&weights, &labels, g, l1))
            .fold(f64::INFINITY, f64::min);
        let res = solve_flow_abs(&weights, &labels, &net, &SolverParams::default()).unwrap();
        let y = res.y_star.as_vector().unwrap();
        assert!(conservation_residual(&net, y) <= 1e-9 && y.iter().all(|&f| f >= -1e-12));
        let value = weighted_vector_risk(&weights, &labels, y, l1);
        assert!((res.objective - value).abs() <= 1e-9);
        assert!(value >= best - 1e-9);
        if value <= best + 1e-9 {
            hits += 1;
        }
    }
    assert!(hits >= 9, "global optimum found on {hits} of 12");
}

#[test]
fn absolute_flow_on_path_labels_is_linear_and_exact() {
    let vertices = path_grid(&FlowNetwork::benchmark(), 0, 5, 1);
    for seed in 0..10 {
        let (net, _, labels, mut rng) = flow_setup(300 + seed, 5, 1);
        let weights = random_vec(&mut rng, labels.len());
        let best = vertices
            .iter()
            .map(|g| weighted_vector_risk(&weights, &labels, g, l1))
            .fold(f64::INFINITY, f64::min);
        let res = solve_flow_abs(&weights, &labels, &net, &SolverParams::default()).unwrap();
        let value = weighted_vector_risk(&weights, &labels, res.y_star.as_vector().unwrap(), l1);
        assert!((value - best).abs() <= 1e-9, "{value} vs {best}");
    }
}

#[test]
fn square_flow_mixed_weights_certifies_small_gap() {
    let grid = path_grid(&FlowNetwork::benchmark(), 0, 5, 10);
    for seed in 0..10 {
        let (net, _, labels, mut rng) = flow_setup(400 + seed, 6, 10);
        let mut weights = random_vec(&mut rng, labels.len());
        // Keep the total weight positive so the objective stays convex.
        weights[0] = weights.iter().map(|w| w.abs()).sum::<f64>();
        let best = grid
            .iter()
            .map(|g| weighted_vector_risk(&weights, &labels, g, l2sq))
            .fold(f64::INFINITY, f64::min);
        let res = solve_flow_sq(&weights, &labels, &net, &SolverParams::default()).unwrap();
        let gap = match res.certificate {
            Certificate::Gap(g) => g,
            Certificate::Exact => 0.0,
            Certificate::Heuristic => panic!("convex case must be certified"),
        };
        assert!(gap <= 1e-6, "gap {gap}");
        let y = res.y_star.as_vector().unwrap();
        assert!(conservation_residual(&net, y) <= 1e-9);
        let value = weighted_vector_risk(&weights, &labels, y, l2sq);
        assert!((res.objective - value).abs() <= 1e-9);
        assert!(value <= best + gap + 1e-12);
    }
}

#[test]
fn square_flow_nonnegative_weights_returns_weighted_mean() {
    let (net, _, labels, mut rng) = flow_setup(500, 7, 10);
    let weights: Vec<f64> = (0..7).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let res = solve_flow_sq(&weights, &labels, &net, &SolverParams::default()).unwrap();
    assert_eq!(res.certificate, Certificate::Exact);
    let y = res.y_star.as_vector().unwrap();
    for a in 0..net.arcs().len() {
        let mean: f64 = weights.iter().zip(&labels).map(|(w, l)| w * l.as_vector().unwrap()[a]).sum::<f64>() / total;
        assert!((y[a] - mean).abs() <= 1e-12);
    }
}

#[test]
fn square_flow_negative_total_picks_best_vertex() {
    let vertices = path_grid(&FlowNetwork::benchmark(), 0, 5, 1);
    for seed in 0..10 {
        let (net, _, labels, mut rng) = flow_setup(600 + seed, 5, 10);
        let mut weights = random_vec(&mut rng, labels.len());
        weights[0] = -weights.iter().map(|w| w.abs()).sum::<f64>();
        let best = vertices
            .iter()
            .map(|g| weighted_vector_risk(&weights, &labels, g, l2sq))
            .fold(f64::INFINITY, f64::min);
        let res = solve_flow_sq(&weights, &labels, &net, &SolverParams::default()).unwrap();
        assert_eq!(res.certificate, Certificate::Exact);
        let value = weighted_vector_risk(&weights, &labels, res.y_star.as_vector().unwrap(), l2sq);
        assert!((value - best).abs() <= 1e-9);
    }
}

#[test]
fn reported_objective_is_the_estimated_risk() {
    let mut rng = rng(16);
    let params = SolverParams::default();
    for _ in 0..20 {
        let m = 6;
        let inputs = random_matrix(&mut rng, m, 2);
        let x = random_vec(&mut rng, 2);
        let kernel = KernelSpec::rbf(0.7).unwrap();
        let dag = HierarchyDag::random_tree(5, &mut rng).unwrap();
        let cases: Vec<(Vec<Label>, LossSpec, OutputSpace)> = vec![
            (
                (0..m).map(|_| Label::Bits(random_closed(&mut rng, &dag))).collect(),
                LossSpec::hierarchical(&dag).unwrap(),
                OutputSpace::Hierarchy(dag.clone()),
            ),
            (
                (0..m).map(|_| Label::Ranking(random_permutation(&mut rng, 5))).collect(),
                LossSpec::Footrule,
                OutputSpace::Assignment { d: 5 },
            ),
            (
                (0..m).map(|_| Label::Vector(vec![if rng.gen_bool(0.5) { 1.0 } else { -1.0 }])).collect(),
                LossSpec::ZeroOne,
                OutputSpace::binary(),
            ),
        ];
        for (labels, loss, space) in cases {
            let model = TrainedModel::fit(kernel.clone(), 0.1, inputs.clone(), labels, InterceptMode::None).unwrap();
            let res = infer(&model, &loss, &space, &x, &params).unwrap();
            let est = estimate_conditional_risk(&model, &loss, &res.y_star, &x).unwrap();
            assert!((res.objective - est).abs() <= 1e-8);
        }
    }
}

#[test]
fn knn_is_risk_minimization_with_neighbor_weights() {
    let mut rng = rng(17);
    let dag = HierarchyDag::random_tree(6, &mut rng).unwrap();
    let m = 15;
    let inputs = random_matrix(&mut rng, m, 3);
    let labels: Vec<Label> = (0..m).map(|_| Label::Bits(random_closed(&mut rng, &dag))).collect();
    let space = OutputSpace::Hierarchy(dag);
    let data = Dataset::new(inputs.clone(), labels.clone(), space.clone()).unwrap();
    for _ in 0..20 {
        let x = random_vec(&mut rng, 3);
        let k = rng.gen_range(1..=m);
        let mut order: Vec<(f64, usize)> = (0..m).map(|i| (l2sq(inputs.row(i), &x), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut w = vec![0.0; m];
        for &(_, i) in &order[..k] {
            w[i] = 1.0 / k as f64;
        }
        let params = SolverParams::default();
        let direct = minimize_risk(&w, &labels, &LossSpec::Hamming, &space, &params).unwrap();
        let knn = knn_local_risk_predict(&data, &LossSpec::Hamming, &x, k, &params).unwrap();
        assert_eq!(knn, direct);
    }
}

#[test]
fn projection_baseline_is_feasible_and_fixes_feasible_points() {
    let net = FlowNetwork::benchmark();
    let paths = st_paths(&net, 0, 5);
    let mut rng = rng(18);
    let feasible = random_grid_flow(&mut rng, &paths, net.arcs().len(), 7);
    let proj = project_onto_flow(&feasible, &net, 1e-10).unwrap();
    assert!(l2sq(&proj.point, &feasible).sqrt() <= 1e-6);

    let m = 12;
    let inputs = random_matrix(&mut rng, m, 2);
    let labels: Vec<Label> = (0..m)
        .map(|_| Label::Vector(random_grid_flow(&mut rng, &paths, net.arcs().len(), 10)))
        .collect();
    let data = Dataset::new(inputs.clone(), labels.clone(), OutputSpace::Flow(net.clone())).unwrap();
    let kernel = KernelSpec::rbf(1.0).unwrap();
    let fitted = KrrProjector::fit(&data, kernel.clone(), 0.05).unwrap();
    for _ in 0..10 {
        let x = random_vec(&mut rng, 2);
        let w = ridge_weights(&kernel, 0.05, &inputs, &x);
        let raw = fitted.raw(&x).unwrap();
        for a in 0..raw.len() {
            let direct: f64 = w.iter().zip(&labels).map(|(wi, l)| wi * l.as_vector().unwrap()[a]).sum();
            assert!((raw[a] - direct).abs() <= 1e-9);
        }
        let (y, gap) = fitted.predict(data.space(), &x).unwrap();
        let y = y.as_vector().unwrap();
        assert!(gap <= 1e-6);
        assert!(conservation_residual(&net, y) <= 1e-9 && y.iter().all(|&f| f >= -1e-12));
    }
}

#[test]
fn zero_one_on_explicit_space_is_weighted_vote() {
    let mut rng = rng(19);
    let items: Vec<Label> = (0..5).map(|i| Label::Bits(vec![(i & 1) as u8, ((i >> 1) & 1) as u8, (i >> 2) as u8])).collect();
    let space = OutputSpace::explicit(items.clone()).unwrap();
    for _ in 0..50 {
        let labels: Vec<Label> = (0..8).map(|_| items[rng.gen_range(0..5)].clone()).collect();
        let weights = random_vec(&mut rng, 8);
        let res = minimize_risk(&weights, &labels, &LossSpec::ZeroOne, &space, &SolverParams::default()).unwrap();
        let total: f64 = weights.iter().sum();
        let best = items
            .iter()
            .map(|c| {
                let agree: f64 = labels.iter().zip(&weights).filter(|(l, _)| *l == c).map(|(_, w)| w).sum();
                total - agree
            })
            .fold(f64::INFINITY, f64::min);
        let value = weighted_risk(&LossSpec::ZeroOne, &labels, &weights, &res.y_star).unwrap();
        assert!((value - best).abs() <= 1e-12);
    }
}
