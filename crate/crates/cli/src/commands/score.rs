use pollsel::centrality::{
    base_matrix, bonacich, eta_scores, intercentrality, ranking_report, var_reduction_scores, BonacichBase, Measure,
};
use pollsel::equilibrium::{EquilibriumMoments, MomentsMethod};

use super::{list, Context};
use crate::cli::ScoreArgs;
use crate::document::{GraphSummary, ResultDocument, Scores};
use crate::error::{CliError, CliResult};
use crate::input::load_instance;

pub const SINGLETON_NOTE: &str = "with the closed-form covariance, var_reduction_k = sigma_k^2 * eta_k: \
     the factor is the noise variance sigma_k^2, not the standard deviation sigma_k";

pub fn run(ctx: &Context<'_>, args: &ScoreArgs) -> CliResult<()> {
    let measures: Vec<Measure> = list(&args.measures).map(str::parse).collect::<Result<_, _>>()?;
    if measures.is_empty() {
        return Err(CliError::Usage("--measures is empty".into()));
    }
    let base: BonacichBase = args.matrix.parse()?;
    let inst = load_instance((&args.graph).into())?;
    let m = EquilibriumMoments::compute(&inst.ops, &inst.noise, &inst.u, &ctx.tolerances())?;
    let g = base_matrix(&inst.graph, &inst.ops, base);

    let mut scores = Vec::with_capacity(measures.len());
    for measure in &measures {
        scores.push(match measure {
            Measure::VarReduction => var_reduction_scores(&m.c),
            Measure::Eta => eta_scores(&inst.ops.a)?,
            Measure::Bonacich => bonacich(&g, args.attenuation)?,
            Measure::Intercentrality => intercentrality(&g, args.attenuation)?,
        });
    }
    let report = ranking_report(&scores)?;

    let mut meta = ctx.meta();
    meta.notes.extend(super::select::moments_note(&m));
    if measures.contains(&Measure::Eta) {
        meta.notes.push(SINGLETON_NOTE.to_string());
        if m.method == MomentsMethod::Lyapunov {
            meta.notes
                .push("the closed form does not apply here, so eta need not track var_reduction".to_string());
        }
    }
    let labels = inst.graph.labels();
    let regular = inst.graph.regular();
    let mut doc = ResultDocument::new("score", meta);
    doc.graph = Some(GraphSummary::of(&inst));
    doc.moments_method = Some(m.method);
    doc.scores = Some(Scores {
        attenuation: args.attenuation,
        base_matrix: args.matrix.clone(),
        argmax_ids: report.argmax.iter().map(|a| a.map(|p| labels[regular[p]])).collect(),
        kendall: report.kendall,
        measures: scores,
    });
    ctx.finish(doc)
}
