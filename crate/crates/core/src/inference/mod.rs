//! Minimizing the estimated conditional risk `sum_i w_i l(y, y_i)` over an
//! output space.

mod assignment;
mod closure;
mod flow;

pub use assignment::{assignment_cost, solve_assignment};
pub use closure::solve_hierarchy;
pub use flow::{lmo_flow, project_onto_flow, projected_subgradient, solve_flow_abs, solve_flow_sq, FlowPolytope, Projection};

use std::fmt;

use crate::error::{check_dim, EcrmError, Result};
use crate::kernel::{weighted_risk, TrainedModel};
use crate::label::Label;
use crate::linalg::Matrix;
use crate::losses::{additive_coefficients, LossSpec};
use crate::spaces::{enumerate_space, OutputSpace};

/// How much to trust `InferenceResult::objective` as the minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Certificate {
    Exact,
    /// Objective is within the given amount of the minimum.
    Gap(f64),
    Heuristic,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Exact => write!(f, "exact"),
            Certificate::Gap(g) => write!(f, "gap({g})"),
            Certificate::Heuristic => write!(f, "heuristic"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub y_star: Label,
    pub objective: f64,
    pub certificate: Certificate,
}

/// Knobs of the iterative flow solvers. The subgradient step at iteration
/// `t` is `step_scale / (1 + t * step_decay)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub max_iters: usize,
    pub step_scale: f64,
    pub step_decay: f64,
    pub gap_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub enumeration_cap: usize,
    pub projection_iters: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_iters: 500,
            step_scale: 1.0,
            step_decay: 0.1,
            gap_tol: 1e-6,
            restarts: 5,
            seed: 0,
            enumeration_cap: 1_000_000,
            projection_iters: 10_000,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iters > 0
            && self.step_scale > 0.0
            && self.step_decay >= 0.0
            && self.gap_tol > 0.0
            && self.enumeration_cap > 0
            && self.projection_iters > 0;
        if ok {
            Ok(())
        } else {
            Err(EcrmError::InvalidParameter("solver parameters must be positive".into()))
        }
    }
}

/// Exhaustive minimizer over a discrete space. Members are visited in
/// lexicographic order and only a strict improvement replaces the incumbent,
/// so ties go to the lexicographically smallest output.
pub fn brute_force_argmin<F>(space: &OutputSpace, mut objective: F, cap: usize) -> Result<(Label, f64)>
where
    F: FnMut(&Label) -> Result<f64>,
{
    let mut best: Option<(Label, f64)> = None;
    for y in enumerate_space(space, cap)? {
        let v = objective(&y)?;
        if best.as_ref().map_or(true, |(_, b)| v < *b) {
            best = Some((y, v));
        }
    }
    best.ok_or_else(|| EcrmError::InvalidParameter("empty output space".into()))
}

/// `+1` iff `sum_i w_i y_i >= 0`, for labels in `{-1, +1}`.
pub fn sign_rule(weights: &[f64], labels: &[Label]) -> Result<f64> {
    check_dim(labels.len(), weights.len())?;
    let mut score = 0.0;
    for (w, y) in weights.iter().zip(labels) {
        score += w * y.as_vector()?[0];
    }
    Ok(if score >= 0.0 { 1.0 } else { -1.0 })
}

/// Minimizes `sum_i w_i l(y, y_i)` over `space`.
///
/// Every predictor in the crate goes through here, with weights from the
/// kernel model, from neighbor averaging, or from Monte-Carlo samples.
pub fn minimize_risk(
    weights: &[f64],
    labels: &[Label],
    loss: &LossSpec,
    space: &OutputSpace,
    params: &SolverParams,
) -> Result<InferenceResult> {
    check_dim(labels.len(), weights.len())?;
    params.validate()?;
    for (i, y) in labels.iter().enumerate() {
        if y.kind() != space.label_kind() || y.len() != space.label_len() {
            return Err(EcrmError::InvalidLabel(format!(
                "training label {i} does not match the {} space",
                space.kind_name()
            )));
        }
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(EcrmError::Singular("non-finite weights".into()));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Ok(InferenceResult {
            y_star: space.smallest()?,
            objective: 0.0,
            certificate: Certificate::Exact,
        });
    }
    let risk = |y: &Label| weighted_risk(loss, labels, weights, y);
    let exact = |y: Label| -> Result<InferenceResult> {
        let objective = risk(&y)?;
        Ok(InferenceResult {
            y_star: y,
            objective,
            certificate: Certificate::Exact,
        })
    };
    match (loss, space) {
        (LossSpec::ZeroOne, s) if s.is_binary() => exact(Label::Vector(vec![sign_rule(weights, labels)?])),
        (_, OutputSpace::Explicit(_)) => {
            let (y, objective) = brute_force_argmin(space, risk, params.enumeration_cap)?;
            Ok(InferenceResult {
                y_star: y,
                objective,
                certificate: Certificate::Exact,
            })
        }
        (LossSpec::Hamming | LossSpec::Hierarchical { .. }, OutputSpace::Hierarchy(dag)) => {
            let objective = additive_coefficients(loss, labels, weights)?;
            exact(Label::Bits(solve_hierarchy(&objective.coefficients, dag)?))
        }
        (LossSpec::Hamming | LossSpec::Footrule, OutputSpace::Assignment { d }) => {
            let objective = additive_coefficients(loss, labels, weights)?;
            let costs = Matrix::from_vec(*d, *d, objective.coefficients)?;
            let matching = solve_assignment(&costs)?;
            exact(Label::Ranking(matching.iter().map(|k| k + 1).collect()))
        }
        (LossSpec::Absolute, OutputSpace::Flow(net)) => solve_flow_abs(weights, labels, net, params),
        (LossSpec::Square, OutputSpace::Flow(net)) => solve_flow_sq(weights, labels, net, params),
        (LossSpec::ZeroOne, s) if s.is_discrete() => {
            let (y, objective) = brute_force_argmin(space, risk, params.enumeration_cap)?;
            Ok(InferenceResult {
                y_star: y,
                objective,
                certificate: Certificate::Exact,
            })
        }
        (loss, space) => Err(EcrmError::Unsupported(format!(
            "{} loss on a {} space",
            loss.kind().name(),
            space.kind_name()
        ))),
    }
}

/// The ECRM prediction `argmin_y R(y|x)`.
pub fn infer(
    model: &TrainedModel,
    loss: &LossSpec,
    space: &OutputSpace,
    x: &[f64],
    params: &SolverParams,
) -> Result<InferenceResult> {
    let w = model.weights(x)?;
    minimize_risk(&w.values, model.labels(), loss, space, params)
}
