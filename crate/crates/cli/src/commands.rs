use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ecrm_core::data::{
    format_features, format_labels, knn_local_risk_predict, load_features, load_hierarchy, load_labels, load_matrix,
    load_network, simulate_flow_data, simulate_hierarchy_data, KrrProjector,
};
use ecrm_core::model_io::{load_model, save_model};
use ecrm_core::risk::{empirical_surrogate_risk, surrogate_loss};
use ecrm_core::spaces::is_totally_unimodular;
use ecrm_core::{
    fit_additive, generalization_bound, infer, infer_additive, BoundInputs, Certificate, Dataset, EcrmError,
    FlowGeneratorSpec, FlowNetwork, HierarchyDag, InterceptMode, KernelSpec, Label, LabelKind, LossSpec, Matrix,
    Neighborhood, OutputSpace, Result, SavedModel, SolverParams, SurrogateConfig, TrainedModel,
};

use crate::args::*;

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Surrogate(a) => surrogate(a),
        Command::Bound(a) => bound(a),
        Command::SimulateFlow(a) => simulate(a),
        Command::Bench(a) => bench(a),
        Command::TuCheck(a) => tu_check(a),
        Command::Baseline(a) => baseline(a),
    }
}

fn invalid(msg: impl Into<String>) -> EcrmError {
    EcrmError::InvalidParameter(msg.into())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn solver_params(a: &SolverArgs) -> Result<SolverParams> {
    let params = SolverParams {
        max_iters: a.max_iters,
        step_scale: a.step_scale,
        step_decay: a.step_decay,
        gap_tol: a.gap_tol,
        restarts: a.restarts,
        seed: a.seed,
        ..SolverParams::default()
    };
    params.validate()?;
    Ok(params)
}

fn kernel_spec(kind: KernelArg, gamma: Option<f64>) -> Result<KernelSpec> {
    match (kind, gamma) {
        (KernelArg::Linear, None) => Ok(KernelSpec::Linear),
        (KernelArg::Linear, Some(_)) => Err(invalid("--gamma only applies to the rbf kernel")),
        (KernelArg::Rbf, Some(g)) => KernelSpec::rbf(g),
        (KernelArg::Rbf, None) => Err(invalid("the rbf kernel needs --gamma")),
    }
}

fn network(a: &SpaceArgs) -> Result<FlowNetwork> {
    match &a.network {
        Some(path) => load_network(path),
        None => Ok(FlowNetwork::benchmark()),
    }
}

fn hierarchy(a: &SpaceArgs, d: Option<usize>) -> Result<HierarchyDag> {
    let dag = match (&a.hierarchy, d) {
        (Some(path), _) => load_hierarchy(path)?,
        (None, Some(d)) => HierarchyDag::new(d, Vec::new())?,
        (None, None) => return Err(invalid("the hierarchy space needs --hierarchy")),
    };
    if let Some(d) = d {
        if dag.len() != d {
            return Err(EcrmError::DimensionMismatch {
                expected: d,
                found: dag.len(),
            });
        }
    }
    Ok(dag)
}

/// The output space, with `kind`/`len` describing the labels it must hold.
/// Without `--space` the space follows the label kind: bits live on the
/// hierarchy (flat when no file is given), ranks on the assignment space,
/// scalars on `{-1, +1}` and other vectors on the flow network.
fn resolve_space(a: &SpaceArgs, labels: Option<(LabelKind, usize)>) -> Result<OutputSpace> {
    let kind = match (a.space, labels) {
        (Some(s), _) => s,
        (None, Some((LabelKind::Bits, _))) => SpaceKind::Hierarchy,
        (None, Some((LabelKind::Ranking, _))) => SpaceKind::Assignment,
        (None, Some((LabelKind::Vector, 1))) => SpaceKind::Binary,
        (None, Some((LabelKind::Vector, _))) => SpaceKind::Flow,
        (None, None) => return Err(invalid("--space is required here")),
    };
    let len = labels.map(|(_, n)| n);
    let space = match kind {
        SpaceKind::Hierarchy => OutputSpace::Hierarchy(hierarchy(a, len)?),
        SpaceKind::Assignment => match len {
            Some(d) => OutputSpace::Assignment { d },
            None => return Err(invalid("cannot size the assignment space without labels")),
        },
        SpaceKind::Flow => OutputSpace::Flow(network(a)?),
        SpaceKind::Binary => OutputSpace::binary(),
    };
    if let Some((k, n)) = labels {
        if space.label_kind() != k || space.label_len() != n {
            return Err(EcrmError::InvalidLabel(format!(
                "{} labels of length {n} do not fit the {} space",
                k.name(),
                space.kind_name()
            )));
        }
    }
    Ok(space)
}

/// Hamming on hierarchies, footrule on assignments, absolute on flows and
/// zero-one otherwise.
fn resolve_loss(loss: Option<LossArg>, space: &OutputSpace) -> Result<LossSpec> {
    let loss = loss.unwrap_or(match space {
        OutputSpace::Hierarchy(_) => LossArg::Hamming,
        OutputSpace::Assignment { .. } => LossArg::Footrule,
        OutputSpace::Flow(_) => LossArg::Absolute,
        OutputSpace::Explicit(_) => LossArg::ZeroOne,
    });
    Ok(match loss {
        LossArg::ZeroOne => LossSpec::ZeroOne,
        LossArg::Hamming => LossSpec::Hamming,
        LossArg::Hierarchical => match space {
            OutputSpace::Hierarchy(dag) => LossSpec::hierarchical(dag)?,
            _ => return Err(invalid("the hierarchical loss needs a hierarchy space")),
        },
        LossArg::Footrule => LossSpec::Footrule,
        LossArg::Absolute => LossSpec::Absolute,
        LossArg::Square => LossSpec::Square,
    })
}

fn space_label_kind(space: Option<SpaceKind>) -> Result<LabelKind> {
    match space {
        Some(SpaceKind::Hierarchy) => Ok(LabelKind::Bits),
        Some(SpaceKind::Assignment) => Ok(LabelKind::Ranking),
        Some(SpaceKind::Flow | SpaceKind::Binary) => Ok(LabelKind::Vector),
        None => Err(invalid("--space is required to read training labels")),
    }
}

fn model_labels(model: &SavedModel) -> (LabelKind, usize) {
    match model {
        SavedModel::Standard(m) => (m.labels()[0].kind(), m.labels()[0].len()),
        SavedModel::Additive(a) => (LabelKind::Bits, a.dag().len()),
    }
}

fn standard(model: &SavedModel) -> Result<&TrainedModel> {
    match model {
        SavedModel::Standard(m) => Ok(m),
        SavedModel::Additive(_) => Err(EcrmError::Unsupported("this command needs a standard model".into())),
    }
}

fn check_rows(x: &Matrix, labels: &[Label]) -> Result<()> {
    if x.nrows() != labels.len() {
        return Err(EcrmError::DimensionMismatch {
            expected: x.nrows(),
            found: labels.len(),
        });
    }
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let kind = space_label_kind(a.space.space)?;
    let x = load_features(&a.x)?;
    let labels = load_labels(&a.labels, kind)?;
    check_rows(&x, &labels)?;
    let len = labels.first().map(Label::len);
    let space = resolve_space(&a.space, len.map(|n| (kind, n)))?;
    let data = Dataset::new(x, labels, space)?;
    let kernel = kernel_spec(a.kernel.kernel, a.kernel.gamma)?;
    let intercept = match a.intercept {
        InterceptArg::None => InterceptMode::None,
        InterceptArg::Centered => InterceptMode::Centered,
    };
    let model = match a.variant {
        VariantArg::Standard => SavedModel::Standard(TrainedModel::fit(
            kernel,
            a.kernel.lambda,
            data.inputs().clone(),
            data.labels().to_vec(),
            intercept,
        )?),
        VariantArg::Additive => {
            let OutputSpace::Hierarchy(dag) = data.space() else {
                return Err(invalid("the additive variant needs a hierarchy space"));
            };
            if intercept != InterceptMode::None {
                return Err(invalid("the additive variant has no intercept option"));
            }
            let hood = match a.neighborhood {
                NeighborhoodArg::SelfOnly => Neighborhood::SelfOnly,
                NeighborhoodArg::Adjacent => Neighborhood::Adjacent,
            };
            SavedModel::Additive(fit_additive(
                kernel,
                a.kernel.lambda,
                data.inputs().clone(),
                data.labels(),
                dag,
                hood,
            )?)
        }
    };
    save_model(&a.out, &model)
}

/// Predictions for every row of `x`, with the weakest certificate seen.
fn predictions(
    model: &SavedModel,
    x: &Matrix,
    space: &OutputSpace,
    loss: &LossSpec,
    params: &SolverParams,
) -> Result<Vec<Label>> {
    let mut out = Vec::with_capacity(x.nrows());
    let mut heuristic = 0usize;
    for row in x.rows_iter() {
        let res = match model {
            SavedModel::Standard(m) => infer(m, loss, space, row, params)?,
            SavedModel::Additive(a) => infer_additive(a, row)?,
        };
        if res.certificate == Certificate::Heuristic {
            heuristic += 1;
        }
        out.push(res.y_star);
    }
    if heuristic > 0 {
        eprintln!("note: {heuristic} of {} predictions are heuristic", x.nrows());
    }
    Ok(out)
}

fn additive_loss_check(model: &SavedModel, loss: &LossSpec) -> Result<()> {
    if matches!(model, SavedModel::Additive(_)) && *loss != LossSpec::Hamming {
        return Err(EcrmError::Unsupported("additive models predict under the hamming loss".into()));
    }
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let space = resolve_space(&a.space, Some(model_labels(&model)))?;
    let loss = resolve_loss(a.loss, &space)?;
    additive_loss_check(&model, &loss)?;
    let params = solver_params(&a.solver)?;
    let x = load_features(&a.x)?;
    let preds = predictions(&model, &x, &space, &loss, &params)?;
    emit(a.out.as_deref(), &format_labels(&preds))
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let (kind, len) = model_labels(&model);
    let space = resolve_space(&a.space, Some((kind, len)))?;
    let loss = resolve_loss(a.loss, &space)?;
    additive_loss_check(&model, &loss)?;
    let params = solver_params(&a.solver)?;
    let x = load_features(&a.x)?;
    let labels = load_labels(&a.labels, kind)?;
    check_rows(&x, &labels)?;
    if labels.is_empty() {
        return Err(invalid("no evaluation samples"));
    }
    let preds = predictions(&model, &x, &space, &loss, &params)?;
    let mut total = 0.0;
    for (p, y) in preds.iter().zip(&labels) {
        total += loss.eval(p, y)?;
    }
    emit(None, &format!("mean_loss {}\n", total / labels.len() as f64))
}

struct RiskInputs {
    model: TrainedModel,
    loss: LossSpec,
    cfg: SurrogateConfig,
    x: Matrix,
    labels: Vec<Label>,
    params: SolverParams,
}

#[allow(clippy::too_many_arguments)]
fn risk_inputs(
    model: &Path,
    x: &Path,
    labels: &Path,
    space: &SpaceArgs,
    loss: Option<LossArg>,
    rho: f64,
    cap: Option<f64>,
    solver: &SolverArgs,
) -> Result<RiskInputs> {
    let saved = load_model(model)?;
    let model = standard(&saved)?.clone();
    let (kind, len) = model_labels(&saved);
    let space = resolve_space(space, Some((kind, len)))?;
    let loss = resolve_loss(loss, &space)?;
    let cfg = match cap {
        Some(c) => SurrogateConfig::new(rho, c, space)?,
        None => SurrogateConfig::with_loss_bound(rho, &loss, space)?,
    };
    let x = load_features(x)?;
    let labels = load_labels(labels, kind)?;
    check_rows(&x, &labels)?;
    if labels.is_empty() {
        return Err(invalid("no samples"));
    }
    Ok(RiskInputs {
        model,
        loss,
        cfg,
        x,
        labels,
        params: solver_params(solver)?,
    })
}

fn surrogate(a: SurrogateArgs) -> Result<()> {
    let r = risk_inputs(&a.model, &a.x, &a.labels, &a.space, a.loss, a.rho, a.cap, &a.solver)?;
    let mut text = String::new();
    let mut total = 0.0;
    for (row, y) in r.x.rows_iter().zip(&r.labels) {
        let s = surrogate_loss(&r.model, &r.loss, &r.cfg, row, y, &r.params)?;
        total += s.value;
        text.push_str(&format!("{} {}\n", s.value, s.certificate));
    }
    text.push_str(&format!("mean {}\n", total / r.labels.len() as f64));
    emit(None, &text)
}

fn bound(a: BoundArgs) -> Result<()> {
    let r = risk_inputs(&a.model, &a.x, &a.labels, &a.space, a.loss, a.rho, a.cap, &a.solver)?;
    let empirical = empirical_surrogate_risk(&r.model, &r.loss, &r.cfg, &r.x, &r.labels, &r.params)?;
    if empirical.certificate != Certificate::Exact {
        eprintln!("note: empirical surrogate certificate is {}", empirical.certificate);
    }
    let kappa = a.kappa.unwrap_or_else(|| r.model.kernel().diagonal_sup(r.model.inputs()));
    let terms = generalization_bound(&BoundInputs {
        empirical: empirical.value,
        loss_bound: r.cfg.bound,
        kappa,
        lambda: r.model.lambda(),
        rho: r.cfg.rho,
        delta: a.delta,
        m: r.model.num_samples(),
    })?;
    emit(
        None,
        &format!(
            "empirical {}\nstability {}\nconfidence {}\ntotal {}\n",
            terms.empirical, terms.stability, terms.confidence, terms.total
        ),
    )
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let net = match &a.network {
        Some(path) => load_network(path)?,
        None => FlowNetwork::benchmark(),
    };
    let spec = FlowGeneratorSpec::new(net, a.p, a.tau, a.theta_seed)?;
    let data = simulate_flow_data(&spec, a.m, a.seed)?;
    fs::write(&a.x_out, format_features(data.inputs()))?;
    fs::write(&a.y_out, format_labels(data.labels()))?;
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn bench(a: BenchArgs) -> Result<()> {
    if a.repeats == 0 || a.d.is_empty() {
        return Err(invalid("need at least one size and one repeat"));
    }
    let kernel = KernelSpec::rbf(a.gamma)?;
    let mut text = String::from("d,train_seconds\n");
    for &d in &a.d {
        let (_, data) = simulate_hierarchy_data(a.m, a.p, d, a.seed)?;
        let mut times = Vec::with_capacity(a.repeats);
        // One untimed fit warms the allocator and caches.
        for rep in 0..=a.repeats {
            let start = Instant::now();
            let model = TrainedModel::fit(
                kernel.clone(),
                a.lambda,
                data.inputs().clone(),
                data.labels().to_vec(),
                InterceptMode::None,
            )?;
            let elapsed = start.elapsed().as_secs_f64();
            drop(model);
            if rep > 0 {
                times.push(elapsed);
            }
        }
        text.push_str(&format!("{d},{}\n", median(times)));
    }
    emit(None, &text)
}

fn tu_check(a: TuArgs) -> Result<()> {
    let matrix = load_matrix(&a.matrix)?;
    emit(None, &format!("{}\n", is_totally_unimodular(&matrix, a.cap).as_str()))
}

fn baseline(a: BaselineArgs) -> Result<()> {
    let kind = space_label_kind(a.space.space)?;
    let train_x = load_features(&a.train_x)?;
    let labels = load_labels(&a.train_labels, kind)?;
    check_rows(&train_x, &labels)?;
    let len = labels.first().map(Label::len);
    let space = resolve_space(&a.space, len.map(|n| (kind, n)))?;
    let data = Dataset::new(train_x, labels, space)?;
    let x = load_features(&a.x)?;
    let mut preds = Vec::with_capacity(x.nrows());
    match a.method {
        BaselineMethod::Knn => {
            let loss = resolve_loss(a.loss, data.space())?;
            let params = solver_params(&a.solver)?;
            for row in x.rows_iter() {
                preds.push(knn_local_risk_predict(&data, &loss, row, a.k, &params)?.y_star);
            }
        }
        BaselineMethod::KrrProject => {
            let kernel = kernel_spec(a.kernel, a.gamma)?;
            let fitted = KrrProjector::fit(&data, kernel, a.lambda)?;
            for row in x.rows_iter() {
                preds.push(fitted.predict(data.space(), row)?.0);
            }
        }
    }
    emit(a.out.as_deref(), &format_labels(&preds))
}
