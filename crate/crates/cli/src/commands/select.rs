use pollsel::equilibrium::{EquilibriumMoments, MomentsMethod};
use pollsel::objective::{estimator_coefficients, ObservationSet};
use pollsel::selector::{exact_select, greedy_select, SelectionResult};

use super::Context;
use crate::cli::{Method, SelectArgs};
use crate::document::{Estimator, GraphSummary, ResultDocument, Selection};
use crate::error::CliResult;
use crate::input::{load_instance, Instance};

pub fn moments_note(m: &EquilibriumMoments) -> Option<String> {
    (m.method == MomentsMethod::Lyapunov)
        .then(|| "closed-form covariance rejected for this instance; the Lyapunov solution was used".to_string())
}

pub const ESTIMATOR_NOTE: &str =
    "the estimator is the best linear predictor of the mean regular opinion from the observed agents; \
     it equals the conditional mean only under Gaussian noise";

pub fn selection_block(
    inst: &Instance,
    m: &EquilibriumMoments,
    method: &'static str,
    res: &SelectionResult,
) -> CliResult<Selection> {
    let r = inst.ops.n_regular();
    let regular = inst.graph.regular();
    let labels = inst.graph.labels();
    let k = ObservationSet::new(res.chosen.clone(), r)?;
    let est = estimator_coefficients(&m.c, &m.mu, &k)?;
    let g_final = *res.g_values.last().unwrap_or(&0.0);
    Ok(Selection {
        method,
        k: res.chosen.len(),
        ids: res.chosen.iter().map(|&p| labels[regular[p]]).collect(),
        gains: res.gains.clone(),
        f_values: res.f_values.clone(),
        g_values: res.g_values.clone(),
        residual_fractions: res.residual_fractions(),
        var_total: res.f_values[0] + res.g_values[0],
        estimator: Estimator {
            coefficients: est.alpha.iter().copied().collect(),
            intercept: est.intercept,
            mse: g_final / (r * r) as f64,
        },
    })
}

pub fn run(ctx: &Context<'_>, args: &SelectArgs) -> CliResult<()> {
    let inst = load_instance((&args.graph).into())?;
    let m = EquilibriumMoments::compute(&inst.ops, &inst.noise, &inst.u, &ctx.tolerances())?;
    let (name, res) = match args.method {
        Method::Greedy => ("greedy", greedy_select(&m.c, args.k)?),
        Method::Exact => ("exact", exact_select(&m.c, args.k, args.budget)?),
    };
    let mut meta = ctx.meta();
    meta.eval_count = Some(res.eval_count);
    meta.timing.selection_s = Some(res.wall_time.as_secs_f64());
    meta.notes.extend(moments_note(&m));
    meta.notes.push(ESTIMATOR_NOTE.to_string());
    let mut doc = ResultDocument::new("select", meta);
    doc.graph = Some(GraphSummary::of(&inst));
    doc.moments_method = Some(m.method);
    doc.selection = Some(selection_block(&inst, &m, name, &res)?);
    ctx.finish(doc)
}
