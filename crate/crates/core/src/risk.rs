//! Margin surrogate of the ECRM predictor's loss, the generalization bound
//! built on it, and Monte-Carlo conditional risks for synthetic studies.
//!
//! With `R` the estimated risk at `x` and `D(y') = min R - R(y') <= 0`, the
//! surrogate is `min(L, max_{y'} l(y', y) + D(y') / rho)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, EcrmError, Result};
use crate::inference::{minimize_risk, Certificate, SolverParams};
use crate::kernel::{weighted_risk, TrainedModel};
use crate::label::Label;
use crate::linalg::Matrix;
use crate::losses::LossSpec;
use crate::spaces::{enumerate_space, OutputSpace};

#[derive(Debug, Clone)]
pub struct SurrogateConfig {
    pub rho: f64,
    /// Cap `L`, an upper bound on the loss over the space.
    pub bound: f64,
    pub space: OutputSpace,
}

impl SurrogateConfig {
    pub fn new(rho: f64, bound: f64, space: OutputSpace) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(EcrmError::InvalidParameter(format!("rho must be positive, got {rho}")));
        }
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(EcrmError::InvalidParameter(format!("loss bound must be nonnegative, got {bound}")));
        }
        Ok(SurrogateConfig { rho, bound, space })
    }

    /// Uses the exact `sup l` of the loss over `space` as the cap.
    pub fn with_loss_bound(rho: f64, loss: &LossSpec, space: OutputSpace) -> Result<Self> {
        let bound = loss.upper_bound(&space)?;
        Self::new(rho, bound, space)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateValue {
    pub value: f64,
    pub certificate: Certificate,
}

fn combine(a: Certificate, scale_a: f64, b: Certificate) -> Certificate {
    match (a, b) {
        (Certificate::Exact, Certificate::Exact) => Certificate::Exact,
        (Certificate::Heuristic, _) | (_, Certificate::Heuristic) => Certificate::Heuristic,
        (a, b) => {
            let gap = |c: Certificate| if let Certificate::Gap(g) = c { g } else { 0.0 };
            Certificate::Gap(gap(a) * scale_a + gap(b))
        }
    }
}

/// Whether the inner maximization is done by listing the space.
fn enumerable(loss: &LossSpec, space: &OutputSpace) -> bool {
    match space {
        OutputSpace::Explicit(_) => true,
        OutputSpace::Flow(_) => false,
        _ => !loss.is_additive(),
    }
}

/// `min_{y''} R(y'') - R(y')` for explicit weights.
pub fn delta_weights(
    weights: &[f64],
    labels: &[Label],
    loss: &LossSpec,
    space: &OutputSpace,
    y_prime: &Label,
    params: &SolverParams,
) -> Result<f64> {
    if !space.is_feasible(y_prime, crate::spaces::FLOW_TOLERANCE)? {
        return Err(EcrmError::InvalidLabel("y' is not in the output space".into()));
    }
    let value = weighted_risk(loss, labels, weights, y_prime)?;
    let min = if enumerable(loss, space) {
        let mut min = f64::INFINITY;
        for y in enumerate_space(space, params.enumeration_cap)? {
            min = min.min(weighted_risk(loss, labels, weights, &y)?);
        }
        min
    } else {
        minimize_risk(weights, labels, loss, space, params)?.objective
    };
    Ok((min - value).min(0.0))
}

pub fn delta(
    model: &TrainedModel,
    loss: &LossSpec,
    space: &OutputSpace,
    y_prime: &Label,
    x: &[f64],
    params: &SolverParams,
) -> Result<f64> {
    let w = model.weights(x)?;
    delta_weights(&w.values, model.labels(), loss, space, y_prime, params)
}

/// `l(h(x), y)` where `h(x)` minimizes the estimated risk; among tied
/// minimizers the one with the highest loss is charged. Ties are detected
/// exactly on enumerable spaces; elsewhere the solver's minimizer is used.
pub fn realized_loss_weights(
    weights: &[f64],
    labels: &[Label],
    loss: &LossSpec,
    space: &OutputSpace,
    y: &Label,
    params: &SolverParams,
) -> Result<f64> {
    if enumerable(loss, space) {
        let members = enumerate_space(space, params.enumeration_cap)?;
        let risks = members
            .iter()
            .map(|m| weighted_risk(loss, labels, weights, m))
            .collect::<Result<Vec<f64>>>()?;
        let min = risks.iter().copied().fold(f64::INFINITY, f64::min);
        let mut worst = f64::NEG_INFINITY;
        for (m, r) in members.iter().zip(&risks) {
            if *r == min {
                worst = worst.max(loss.eval(m, y)?);
            }
        }
        Ok(worst)
    } else {
        let h = minimize_risk(weights, labels, loss, space, params)?;
        loss.eval(&h.y_star, y)
    }
}

pub fn realized_loss(
    model: &TrainedModel,
    loss: &LossSpec,
    space: &OutputSpace,
    x: &[f64],
    y: &Label,
    params: &SolverParams,
) -> Result<f64> {
    let w = model.weights(x)?;
    realized_loss_weights(&w.values, model.labels(), loss, space, y, params)
}

/// The capped surrogate for explicit weights.
///
/// Enumerable spaces evaluate every `l(y', y) + D(y') / rho` directly. For
/// additive losses on hierarchies and assignments the inner maximum is the
/// negated minimum of `sum_i (w_i / rho) l(y', y_i) - l(y', y)`, again an
/// additive objective, so the exact solvers apply. Flows go through the same
/// reformulation with the flow solvers, whose certificate is passed on.
pub fn surrogate_loss_weights(
    weights: &[f64],
    labels: &[Label],
    loss: &LossSpec,
    cfg: &SurrogateConfig,
    y: &Label,
    params: &SolverParams,
) -> Result<SurrogateValue> {
    check_dim(labels.len(), weights.len())?;
    let space = &cfg.space;
    if !space.is_feasible(y, crate::spaces::FLOW_TOLERANCE)? {
        return Err(EcrmError::InvalidLabel("target is not in the output space".into()));
    }
    if enumerable(loss, space) {
        let members = enumerate_space(space, params.enumeration_cap)?;
        let risks = members
            .iter()
            .map(|m| weighted_risk(loss, labels, weights, m))
            .collect::<Result<Vec<f64>>>()?;
        let min = risks.iter().copied().fold(f64::INFINITY, f64::min);
        let mut best = f64::NEG_INFINITY;
        for (m, r) in members.iter().zip(&risks) {
            best = best.max(loss.eval(m, y)? + (min - r) / cfg.rho);
        }
        return Ok(SurrogateValue {
            value: best.min(cfg.bound),
            certificate: Certificate::Exact,
        });
    }

    let inner = minimize_risk(weights, labels, loss, space, params)?;
    let mut ext_weights: Vec<f64> = weights.iter().map(|w| w / cfg.rho).collect();
    ext_weights.push(-1.0);
    let mut ext_labels = labels.to_vec();
    ext_labels.push(y.clone());
    let outer = minimize_risk(&ext_weights, &ext_labels, loss, space, params)?;
    // Recompute the maximized term at the returned y' for consistency.
    let at = &outer.y_star;
    let margin = inner.objective - weighted_risk(loss, labels, weights, at)?;
    let value = (loss.eval(at, y)? + margin.min(0.0) / cfg.rho).max(loss.eval(&inner.y_star, y)?);
    let certificate = combine(inner.certificate, 1.0 / cfg.rho, outer.certificate);
    Ok(SurrogateValue {
        value: value.min(cfg.bound),
        certificate,
    })
}

pub fn surrogate_loss(
    model: &TrainedModel,
    loss: &LossSpec,
    cfg: &SurrogateConfig,
    x: &[f64],
    y: &Label,
    params: &SolverParams,
) -> Result<SurrogateValue> {
    let w = model.weights(x)?;
    surrogate_loss_weights(&w.values, model.labels(), loss, cfg, y, params)
}

/// Mean surrogate over a sample; the certificate is the weakest seen.
pub fn empirical_surrogate_risk(
    model: &TrainedModel,
    loss: &LossSpec,
    cfg: &SurrogateConfig,
    inputs: &Matrix,
    labels: &[Label],
    params: &SolverParams,
) -> Result<SurrogateValue> {
    check_dim(inputs.nrows(), labels.len())?;
    if labels.is_empty() {
        return Err(EcrmError::InvalidParameter("empty sample".into()));
    }
    let mut total = 0.0;
    let mut certificate = Certificate::Exact;
    for (x, y) in inputs.rows_iter().zip(labels) {
        let s = surrogate_loss(model, loss, cfg, x, y, params)?;
        total += s.value;
        certificate = match (certificate, s.certificate) {
            (Certificate::Heuristic, _) | (_, Certificate::Heuristic) => Certificate::Heuristic,
            (Certificate::Gap(a), Certificate::Gap(b)) => Certificate::Gap(a.max(b)),
            (Certificate::Gap(a), Certificate::Exact) | (Certificate::Exact, Certificate::Gap(a)) => Certificate::Gap(a),
            (Certificate::Exact, Certificate::Exact) => Certificate::Exact,
        };
    }
    Ok(SurrogateValue {
        value: total / labels.len() as f64,
        certificate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub empirical: f64,
    pub loss_bound: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub rho: f64,
    pub delta: f64,
    pub m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    pub nu: f64,
    pub empirical: f64,
    /// `4 L nu / (rho m)`.
    pub stability: f64,
    /// `L (8 nu / rho + 1) sqrt(ln(1/delta) / 2m)`.
    pub confidence: f64,
    pub total: f64,
}

/// `nu = kappa/lambda + (kappa/lambda)^(3/2)`.
pub fn nu(kappa: f64, lambda: f64) -> f64 {
    let r = kappa / lambda;
    r + r.powf(1.5)
}

pub fn generalization_bound(b: &BoundInputs) -> Result<BoundTerms> {
    let positive = |v: f64| v > 0.0 && v.is_finite();
    if !(b.delta > 0.0 && b.delta < 1.0) {
        return Err(EcrmError::InvalidParameter(format!("delta must lie in (0, 1), got {}", b.delta)));
    }
    if !positive(b.lambda) || !positive(b.rho) || !positive(b.kappa) || b.m == 0 {
        return Err(EcrmError::InvalidParameter("lambda, rho, kappa and m must be positive".into()));
    }
    if !(b.loss_bound >= 0.0) || !b.empirical.is_finite() {
        return Err(EcrmError::InvalidParameter("loss bound and empirical risk must be finite".into()));
    }
    let nu = nu(b.kappa, b.lambda);
    let m = b.m as f64;
    let stability = 4.0 * b.loss_bound * nu / (b.rho * m);
    let confidence = b.loss_bound * (8.0 * nu / b.rho + 1.0) * ((1.0 / b.delta).ln() / (2.0 * m)).sqrt();
    Ok(BoundTerms {
        nu,
        empirical: b.empirical,
        stability,
        confidence,
        total: b.empirical + stability + confidence,
    })
}

/// A conditional law of `Y` given `X = x` that can be sampled.
pub trait ConditionalSampler {
    fn sample(&self, x: &[f64], rng: &mut ChaCha8Rng) -> Result<Label>;
}

/// `n` draws of `Y | X = x` from a generator seeded with `seed`.
pub fn sample_conditional(sampler: &dyn ConditionalSampler, x: &[f64], n: usize, seed: u64) -> Result<Vec<Label>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sampler.sample(x, &mut rng)).collect()
}

/// Monte-Carlo `E[l(y, Y)]` over the given draws.
pub fn conditional_risk(loss: &LossSpec, y: &Label, draws: &[Label]) -> Result<f64> {
    if draws.is_empty() {
        return Err(EcrmError::InvalidParameter("no Monte-Carlo draws".into()));
    }
    let weights = vec![1.0 / draws.len() as f64; draws.len()];
    weighted_risk(loss, draws, &weights, y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesEstimate {
    pub risk: f64,
    pub minimizer: Label,
    pub certificate: Certificate,
}

/// `min_y` of the Monte-Carlo risk over the given draws. Uniform weights are
/// nonnegative, so the continuous cases are convex.
pub fn bayes_risk_from_draws(draws: &[Label], loss: &LossSpec, space: &OutputSpace, params: &SolverParams) -> Result<BayesEstimate> {
    if draws.is_empty() {
        return Err(EcrmError::InvalidParameter("no Monte-Carlo draws".into()));
    }
    let weights = vec![1.0 / draws.len() as f64; draws.len()];
    let res = minimize_risk(&weights, draws, loss, space, params)?;
    Ok(BayesEstimate {
        risk: res.objective,
        minimizer: res.y_star,
        certificate: res.certificate,
    })
}

pub fn bayes_conditional_risk(
    sampler: &dyn ConditionalSampler,
    x: &[f64],
    loss: &LossSpec,
    space: &OutputSpace,
    n_mc: usize,
    seed: u64,
    params: &SolverParams,
) -> Result<BayesEstimate> {
    let draws = sample_conditional(sampler, x, n_mc, seed)?;
    bayes_risk_from_draws(&draws, loss, space, params)
}
