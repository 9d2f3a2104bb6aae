//! Inference over single-source, single-sink flow polytopes on acyclic
//! networks. Vertices of such a polytope are source-sink paths carrying the
//! full supply, so a shortest-path computation is the linear minimization
//! oracle for every Frank–Wolfe style method here.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Certificate, InferenceResult, SolverParams};
use crate::error::{check_dim, EcrmError, Result};
use crate::label::Label;
use crate::linalg::{dot, squared_distance};
use crate::losses::{vector_loss, VectorLoss};
use crate::spaces::{FlowNetwork, FLOW_TOLERANCE};

/// Cached structure of a flow polytope: topological order and the
/// source/sink pair.
#[derive(Debug, Clone)]
pub struct FlowPolytope<'a> {
    net: &'a FlowNetwork,
    order: Vec<usize>,
    source: usize,
    sink: usize,
    amount: f64,
}

/// Result of a Euclidean projection onto the polytope.
#[derive(Debug, Clone)]
pub struct Projection {
    pub point: Vec<f64>,
    /// Frank–Wolfe gap of `|y - target|²` at `point`; bounds its suboptimality.
    pub gap: f64,
    pub iterations: usize,
    pub active: Vec<(Vec<usize>, f64)>,
}

impl<'a> FlowPolytope<'a> {
    pub fn new(net: &'a FlowNetwork) -> Result<Self> {
        let order = net.require_acyclic()?;
        let (source, sink, amount) = net.unit_source_sink()?;
        Ok(FlowPolytope {
            net,
            order,
            source,
            sink,
            amount,
        })
    }

    pub fn network(&self) -> &FlowNetwork {
        self.net
    }

    pub fn amount(&self) -> f64 {
        self.amount
    }

    pub fn dim(&self) -> usize {
        self.net.arcs().len()
    }

    /// Minimum-cost source-sink path under arbitrary (also negative) arc
    /// costs, by dynamic programming in topological order. Ties keep the
    /// first arc relaxed, scanning nodes in order and arcs by index.
    pub fn lmo_path(&self, costs: &[f64]) -> Result<Vec<usize>> {
        check_dim(self.dim(), costs.len())?;
        let n = self.net.num_nodes();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        dist[self.source] = 0.0;
        for &u in &self.order {
            if !dist[u].is_finite() {
                continue;
            }
            for &a in self.net.out_arcs(u) {
                let v = self.net.arcs()[a].1;
                let cand = dist[u] + costs[a];
                if cand < dist[v] {
                    dist[v] = cand;
                    pred[v] = Some(a);
                }
            }
        }
        if !dist[self.sink].is_finite() {
            return Err(EcrmError::InvalidNetwork("sink is unreachable from the source".into()));
        }
        let mut path = Vec::new();
        let mut node = self.sink;
        while node != self.source {
            let a = pred[node].expect("reachable node has a predecessor");
            path.push(a);
            node = self.net.arcs()[a].0;
        }
        path.reverse();
        Ok(path)
    }

    pub fn vertex(&self, path: &[usize]) -> Vec<f64> {
        let mut flow = vec![0.0; self.dim()];
        for &a in path {
            flow[a] += self.amount;
        }
        flow
    }

    /// Euclidean projection of `target` by pairwise Frank–Wolfe with exact
    /// line search, stopping once the duality gap is at most `tol`.
    pub fn project(
        &self,
        target: &[f64],
        tol: f64,
        max_iters: usize,
        warm: Option<&[(Vec<usize>, f64)]>,
    ) -> Result<Projection> {
        check_dim(self.dim(), target.len())?;
        let mut active: Vec<(Vec<usize>, f64, Vec<f64>)> = match warm {
            Some(set) if !set.is_empty() => {
                let total: f64 = set.iter().map(|(_, w)| w).sum();
                set.iter()
                    .map(|(p, w)| (p.clone(), w / total, self.vertex(p)))
                    .collect()
            }
            _ => {
                let neg: Vec<f64> = target.iter().map(|t| -t).collect();
                let p = self.lmo_path(&neg)?;
                let v = self.vertex(&p);
                vec![(p, 1.0, v)]
            }
        };
        let mut y = combine(&active, self.dim());
        let mut gap = f64::INFINITY;
        let mut iterations = 0;
        while iterations < max_iters {
            let grad: Vec<f64> = y.iter().zip(target).map(|(a, b)| 2.0 * (a - b)).collect();
            let s_path = self.lmo_path(&grad)?;
            let s = self.vertex(&s_path);
            gap = dot(&grad, &y) - dot(&grad, &s);
            if gap <= tol {
                break;
            }
            iterations += 1;
            let away = (0..active.len())
                .max_by(|&i, &j| dot(&grad, &active[i].2).total_cmp(&dot(&grad, &active[j].2)))
                .expect("active set is never empty");
            let dir: Vec<f64> = s.iter().zip(&active[away].2).map(|(a, b)| a - b).collect();
            let dd = dot(&dir, &dir);
            if dd == 0.0 {
                break;
            }
            let max_step = active[away].1;
            let step = (-dot(&grad, &dir) / (2.0 * dd)).clamp(0.0, max_step);
            for (yi, di) in y.iter_mut().zip(&dir) {
                *yi += step * di;
            }
            match active.iter().position(|(p, _, _)| *p == s_path) {
                Some(i) => active[i].1 += step,
                None => active.push((s_path, step, s)),
            }
            let away_idx = active
                .iter()
                .position(|(p, _, _)| *p == active[away].0)
                .expect("away vertex is active");
            if step >= max_step {
                active.remove(away_idx);
            } else {
                active[away_idx].1 -= step;
            }
            active.retain(|(_, w, _)| *w > 0.0);
            if iterations % 64 == 0 {
                y = combine(&active, self.dim());
            }
        }
        let total: f64 = active.iter().map(|(_, w, _)| w).sum();
        active.iter_mut().for_each(|(_, w, _)| *w /= total);
        let point = combine(&active, self.dim());
        Ok(Projection {
            point,
            gap: gap.max(0.0),
            iterations,
            active: active.into_iter().map(|(p, w, _)| (p, w)).collect(),
        })
    }

    /// Minimizes `sum_a phi_a(y_a)` where each `phi_a` is convex piecewise
    /// linear, by successive shortest paths in the residual network of the
    /// implicit segment expansion. Exact up to floating-point rounding.
    fn min_convex_separable(&self, arcs: &mut [PiecewiseArc]) -> Result<Vec<f64>> {
        let n = self.net.num_nodes();
        let mut remaining = self.amount;
        let mut guard = 0usize;
        let max_rounds = 4 * arcs.iter().map(|a| a.breaks.len() + 2).sum::<usize>() + 16;
        while remaining > 0.0 {
            guard += 1;
            if guard > max_rounds {
                return Err(EcrmError::Singular("convex flow did not converge".into()));
            }
            // Bellman-Ford over residual arcs; (arc, forward?) predecessor.
            let mut dist = vec![f64::INFINITY; n];
            let mut pred: Vec<Option<(usize, bool)>> = vec![None; n];
            dist[self.source] = 0.0;
            for _ in 0..n {
                let mut changed = false;
                for (a, &(t, h)) in self.net.arcs().iter().enumerate() {
                    let arc = &arcs[a];
                    if dist[t].is_finite() {
                        let (cap, cost) = arc.forward();
                        if cap > 0.0 && dist[t] + cost < dist[h] - 1e-13 {
                            dist[h] = dist[t] + cost;
                            pred[h] = Some((a, true));
                            changed = true;
                        }
                    }
                    if dist[h].is_finite() {
                        let (cap, cost) = arc.backward();
                        if cap > 0.0 && dist[h] + cost < dist[t] - 1e-13 {
                            dist[t] = dist[h] + cost;
                            pred[t] = Some((a, false));
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if !dist[self.sink].is_finite() {
                return Err(EcrmError::InvalidNetwork("no augmenting path to the sink".into()));
            }
            let mut path = Vec::new();
            let mut node = self.sink;
            let mut bottleneck = remaining;
            while node != self.source {
                let (a, fwd) = pred[node].expect("reachable");
                let cap = if fwd { arcs[a].forward().0 } else { arcs[a].backward().0 };
                bottleneck = bottleneck.min(cap);
                path.push((a, fwd));
                let (t, h) = self.net.arcs()[a];
                node = if fwd { t } else { h };
                if path.len() > n {
                    return Err(EcrmError::Singular("negative cycle in residual network".into()));
                }
            }
            for &(a, fwd) in &path {
                if fwd {
                    arcs[a].push(bottleneck);
                } else {
                    arcs[a].pull(bottleneck);
                }
            }
            remaining = if bottleneck >= remaining { 0.0 } else { remaining - bottleneck };
        }
        Ok(arcs.iter().map(|a| a.flow).collect())
    }

    /// Exact minimizer of `sum_i w_i |y - y_i|_1 - linearᵀy` for `w >= 0`.
    fn min_weighted_l1(&self, weights: &[f64], labels: &[&[f64]], linear: Option<&[f64]>) -> Result<Vec<f64>> {
        let mut arcs: Vec<PiecewiseArc> = (0..self.dim())
            .map(|a| {
                let points: Vec<(f64, f64)> = labels.iter().zip(weights).map(|(y, &w)| (y[a], w)).collect();
                let shift = linear.map_or(0.0, |l| -l[a]);
                PiecewiseArc::new(&points, shift, self.amount)
            })
            .collect();
        let mut y = self.min_convex_separable(&mut arcs)?;
        clean_flow(&mut y);
        Ok(y)
    }
}

fn combine(active: &[(Vec<usize>, f64, Vec<f64>)], dim: usize) -> Vec<f64> {
    let mut y = vec![0.0; dim];
    for (_, w, v) in active {
        for (yi, vi) in y.iter_mut().zip(v) {
            *yi += w * vi;
        }
    }
    y
}

fn clean_flow(y: &mut [f64]) {
    for v in y.iter_mut() {
        if *v < 0.0 && *v > -1e-15 {
            *v = 0.0;
        }
    }
}

/// Convex piecewise-linear arc cost on `[0, cap]` with the current flow.
#[derive(Debug, Clone)]
struct PiecewiseArc {
    breaks: Vec<f64>,
    slopes: Vec<f64>,
    cap: f64,
    flow: f64,
    segment: usize,
}

impl PiecewiseArc {
    /// Cost `sum (w |y - p|) + shift * y` from `(p, w)` pairs with `w >= 0`.
    fn new(points: &[(f64, f64)], shift: f64, cap: f64) -> Self {
        let mut inside: Vec<(f64, f64)> = points
            .iter()
            .copied()
            .filter(|&(p, w)| w > 0.0 && p > 0.0 && p < cap)
            .collect();
        inside.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut breaks: Vec<f64> = Vec::new();
        let mut masses: Vec<f64> = Vec::new();
        for (p, w) in inside {
            if breaks.last() == Some(&p) {
                *masses.last_mut().expect("paired with breaks") += w;
            } else {
                breaks.push(p);
                masses.push(w);
            }
        }
        let below: f64 = points.iter().filter(|&&(p, _)| p <= 0.0).map(|&(_, w)| w).sum();
        let above: f64 = points.iter().filter(|&&(p, _)| p > 0.0).map(|&(_, w)| w).sum();
        let mut slopes = Vec::with_capacity(breaks.len() + 1);
        let mut slope = below - above + shift;
        slopes.push(slope);
        for m in &masses {
            slope += 2.0 * m;
            slopes.push(slope);
        }
        PiecewiseArc {
            breaks,
            slopes,
            cap,
            flow: 0.0,
            segment: 0,
        }
    }

    fn lo(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.breaks[k - 1]
        }
    }

    fn hi(&self, k: usize) -> f64 {
        if k == self.breaks.len() {
            self.cap
        } else {
            self.breaks[k]
        }
    }

    fn forward_segment(&self) -> usize {
        if self.flow >= self.hi(self.segment) && self.segment < self.breaks.len() {
            self.segment + 1
        } else {
            self.segment
        }
    }

    fn backward_segment(&self) -> usize {
        if self.flow <= self.lo(self.segment) && self.segment > 0 {
            self.segment - 1
        } else {
            self.segment
        }
    }

    fn forward(&self) -> (f64, f64) {
        let k = self.forward_segment();
        ((self.hi(k) - self.flow).max(0.0), self.slopes[k])
    }

    fn backward(&self) -> (f64, f64) {
        let k = self.backward_segment();
        ((self.flow - self.lo(k)).max(0.0), -self.slopes[k])
    }

    fn push(&mut self, delta: f64) {
        let k = self.forward_segment();
        let hi = self.hi(k);
        self.flow = if self.flow + delta >= hi - 1e-15 * self.cap.max(1.0) && delta >= hi - self.flow {
            hi
        } else {
            self.flow + delta
        };
        self.segment = k;
    }

    fn pull(&mut self, delta: f64) {
        let k = self.backward_segment();
        let lo = self.lo(k);
        self.flow = if delta >= self.flow - lo { lo } else { self.flow - delta };
        self.segment = k;
    }
}

fn check_labels<'a>(net: &FlowNetwork, labels: &'a [Label]) -> Result<Vec<&'a [f64]>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let v = l.as_vector()?;
            check_dim(net.arcs().len(), v.len())?;
            if !net.is_feasible(v, FLOW_TOLERANCE) {
                return Err(EcrmError::InvalidLabel(format!("training flow {i} violates conservation")));
            }
            Ok(v)
        })
        .collect()
}

/// Linear minimization oracle: indicator flow of a minimum-cost path.
pub fn lmo_flow(costs: &[f64], net: &FlowNetwork) -> Result<Vec<f64>> {
    let poly = FlowPolytope::new(net)?;
    let path = poly.lmo_path(costs)?;
    Ok(poly.vertex(&path))
}

/// Euclidean projection onto the flow polytope to duality gap `tol`.
pub fn project_onto_flow(target: &[f64], net: &FlowNetwork, tol: f64) -> Result<Projection> {
    FlowPolytope::new(net)?.project(target, tol, 100_000, None)
}

fn absolute_objective(weights: &[f64], labels: &[&[f64]], y: &[f64]) -> f64 {
    weights
        .iter()
        .zip(labels)
        .map(|(w, l)| w * vector_loss(VectorLoss::Absolute, y, l).expect("dimensions checked"))
        .sum()
}

fn square_objective(weights: &[f64], labels: &[&[f64]], y: &[f64]) -> f64 {
    weights.iter().zip(labels).map(|(w, l)| w * squared_distance(y, l)).sum()
}

fn zero_weight_result(net: &FlowNetwork) -> Result<InferenceResult> {
    let y = crate::spaces::OutputSpace::Flow(net.clone()).smallest()?;
    Ok(InferenceResult {
        y_star: y,
        objective: 0.0,
        certificate: Certificate::Exact,
    })
}

/// Minimizes `sum_i w_i |y - y_i|²` over the flow polytope.
///
/// With total weight `W > 0` the objective is `W |y - ybar|²` plus a
/// constant, `ybar = sum w_i y_i / W`; nonnegative weights make `ybar` a
/// convex combination of feasible flows, otherwise it is projected. With
/// `W = 0` the objective is linear and with `W < 0` concave, so a vertex is
/// optimal.
pub fn solve_flow_sq(weights: &[f64], labels: &[Label], net: &FlowNetwork, params: &SolverParams) -> Result<InferenceResult> {
    check_dim(labels.len(), weights.len())?;
    let ys = check_labels(net, labels)?;
    if weights.iter().all(|&w| w == 0.0) {
        return zero_weight_result(net);
    }
    let poly = FlowPolytope::new(net)?;
    let dim = poly.dim();
    let total: f64 = weights.iter().sum();
    let mut moment = vec![0.0; dim];
    for (w, y) in weights.iter().zip(&ys) {
        for (m, v) in moment.iter_mut().zip(y.iter()) {
            *m += w * v;
        }
    }
    let (point, certificate) = if total > 0.0 {
        let center: Vec<f64> = moment.iter().map(|m| m / total).collect();
        if weights.iter().all(|&w| w >= 0.0) {
            (center, Certificate::Exact)
        } else {
            let proj = poly.project(&center, params.gap_tol / total, params.projection_iters, None)?;
            let cert = Certificate::Gap(proj.gap * total);
            (proj.point, cert)
        }
    } else if total == 0.0 {
        let costs: Vec<f64> = moment.iter().map(|m| -2.0 * m).collect();
        (poly.vertex(&poly.lmo_path(&costs)?), Certificate::Exact)
    } else {
        match net.enumerate_paths(params.enumeration_cap) {
            Ok(paths) => {
                let best = paths
                    .iter()
                    .map(|p| poly.vertex(p))
                    .min_by(|a, b| {
                        square_objective(weights, &ys, a)
                            .total_cmp(&square_objective(weights, &ys, b))
                            .then_with(|| Label::Vector(a.clone()).lex_cmp(&Label::Vector(b.clone())))
                    })
                    .expect("at least one path");
                (best, Certificate::Exact)
            }
            Err(EcrmError::CapExceeded { .. }) => {
                (concave_vertex_search(&poly, weights, &ys, params)?, Certificate::Heuristic)
            }
            Err(e) => return Err(e),
        }
    };
    let objective = square_objective(weights, &ys, &point);
    Ok(InferenceResult {
        y_star: Label::Vector(point),
        objective,
        certificate,
    })
}

/// Multi-start vertex search for a concave quadratic: repeatedly move to the
/// vertex minimizing the linearization at the current point.
fn concave_vertex_search(poly: &FlowPolytope<'_>, weights: &[f64], ys: &[&[f64]], params: &SolverParams) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..params.restarts.max(1) {
        let costs: Vec<f64> = (0..poly.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y = poly.vertex(&poly.lmo_path(&costs)?);
        for _ in 0..params.max_iters {
            let mut grad = vec![0.0; poly.dim()];
            for (w, l) in weights.iter().zip(ys) {
                for ((g, a), b) in grad.iter_mut().zip(&y).zip(l.iter()) {
                    *g += 2.0 * w * (a - b);
                }
            }
            let next = poly.vertex(&poly.lmo_path(&grad)?);
            if square_objective(weights, ys, &next) >= square_objective(weights, ys, &y) {
                break;
            }
            y = next;
        }
        let val = square_objective(weights, ys, &y);
        if best.as_ref().map_or(true, |(b, _)| val < *b) {
            best = Some((val, y));
        }
    }
    Ok(best.expect("at least one restart").1)
}

/// Minimizes `sum_i w_i |y - y_i|_1` over the flow polytope.
///
/// Nonnegative weights give a convex separable piecewise-linear problem,
/// solved exactly as a convex-cost flow. Mixed signs give a difference of
/// two convex functions; candidates come from the convex relaxation with
/// negative weights dropped and from projected-subgradient restarts, each
/// polished by the convex-concave procedure (linearize the concave part,
/// solve the convex flow problem, repeat). The best candidate is returned
/// with a heuristic certificate.
pub fn solve_flow_abs(weights: &[f64], labels: &[Label], net: &FlowNetwork, params: &SolverParams) -> Result<InferenceResult> {
    check_dim(labels.len(), weights.len())?;
    let ys = check_labels(net, labels)?;
    if weights.iter().all(|&w| w == 0.0) {
        return zero_weight_result(net);
    }
    let poly = FlowPolytope::new(net)?;
    if weights.iter().all(|&w| w >= 0.0) {
        let y = poly.min_weighted_l1(weights, &ys, None)?;
        let objective = absolute_objective(weights, &ys, &y);
        return Ok(InferenceResult {
            y_star: Label::Vector(y),
            objective,
            certificate: Certificate::Exact,
        });
    }

    let positive: Vec<f64> = weights.iter().map(|&w| w.max(0.0)).collect();
    let start = poly.min_weighted_l1(&positive, &ys, None)?;
    let mut best = convex_concave_polish(&poly, weights, &ys, start)?;
    let mut best_val = absolute_objective(weights, &ys, &best);

    let paths = net.enumerate_paths(params.enumeration_cap).ok();
    for restart in 0..params.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(restart as u64 + 1);
        let init = random_interior_point(&poly, paths.as_deref(), &mut rng)?;
        let y = projected_subgradient(&poly, weights, &ys, init, params)?;
        let y = convex_concave_polish(&poly, weights, &ys, y)?;
        let val = absolute_objective(weights, &ys, &y);
        let better = val < best_val
            || (val == best_val && Label::Vector(y.clone()).lex_cmp(&Label::Vector(best.clone())).is_lt());
        if better {
            best = y;
            best_val = val;
        }
    }
    Ok(InferenceResult {
        y_star: Label::Vector(best),
        objective: best_val,
        certificate: Certificate::Heuristic,
    })
}

fn random_interior_point(poly: &FlowPolytope<'_>, paths: Option<&[Vec<usize>]>, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let chosen: Vec<Vec<usize>> = match paths {
        Some(all) if !all.is_empty() => {
            let k = rng.gen_range(1..=all.len().min(3));
            all.choose_multiple(rng, k).cloned().collect()
        }
        _ => {
            let costs: Vec<f64> = (0..poly.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            vec![poly.lmo_path(&costs)?]
        }
    };
    let mix: Vec<f64> = chosen.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = mix.iter().sum();
    let mut y = vec![0.0; poly.dim()];
    for (p, m) in chosen.iter().zip(&mix) {
        for (yi, vi) in y.iter_mut().zip(poly.vertex(p)) {
            *yi += m / total * vi;
        }
    }
    Ok(y)
}

/// Projected subgradient descent with step `a / (1 + t b)` along the
/// normalized subgradient; returns the best iterate.
pub fn projected_subgradient(
    poly: &FlowPolytope<'_>,
    weights: &[f64],
    ys: &[&[f64]],
    start: Vec<f64>,
    params: &SolverParams,
) -> Result<Vec<f64>> {
    let dim = poly.dim();
    let mut y = start;
    let mut best_val = absolute_objective(weights, ys, &y);
    let mut best = y.clone();
    let mut active: Option<Vec<(Vec<usize>, f64)>> = None;
    for t in 0..params.max_iters {
        let mut g = vec![0.0; dim];
        for (w, l) in weights.iter().zip(ys) {
            for ((gi, a), b) in g.iter_mut().zip(&y).zip(l.iter()) {
                let diff = a - b;
                if diff != 0.0 {
                    *gi += w * diff.signum();
                }
            }
        }
        let norm = dot(&g, &g).sqrt();
        if norm == 0.0 {
            break;
        }
        let step = params.step_scale / (1.0 + t as f64 * params.step_decay);
        let target: Vec<f64> = y.iter().zip(&g).map(|(a, gi)| a - step * gi / norm).collect();
        let proj = poly.project(&target, 1e-8, params.projection_iters, active.as_deref())?;
        y = proj.point;
        active = Some(proj.active);
        let val = absolute_objective(weights, ys, &y);
        if val < best_val {
            best_val = val;
            best = y.clone();
        }
    }
    Ok(best)
}

/// Convex-concave procedure for mixed-sign weights: split the objective
/// into `G - H` with `G, H` convex, replace `H` by its linearization at the
/// current point and solve the convex problem exactly. Monotone in the
/// objective; stops when the decrease falls below `1e-12`.
fn convex_concave_polish(poly: &FlowPolytope<'_>, weights: &[f64], ys: &[&[f64]], start: Vec<f64>) -> Result<Vec<f64>> {
    let positive: Vec<f64> = weights.iter().map(|&w| w.max(0.0)).collect();
    let negative: Vec<f64> = weights.iter().map(|&w| (-w).max(0.0)).collect();
    let mut y = start;
    let mut val = absolute_objective(weights, ys, &y);
    for _ in 0..100 {
        let mut slope = vec![0.0; poly.dim()];
        for (w, l) in negative.iter().zip(ys) {
            if *w == 0.0 {
                continue;
            }
            for ((s, a), b) in slope.iter_mut().zip(&y).zip(l.iter()) {
                let diff = a - b;
                if diff != 0.0 {
                    *s += w * diff.signum();
                }
            }
        }
        let next = poly.min_weighted_l1(&positive, ys, Some(&slope))?;
        let next_val = absolute_objective(weights, ys, &next);
        if next_val < val - 1e-12 {
            y = next;
            val = next_val;
        } else {
            break;
        }
    }
    Ok(y)
}
