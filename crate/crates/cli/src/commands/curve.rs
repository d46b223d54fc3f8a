use pollsel::equilibrium::EquilibriumMoments;
use pollsel::selector::{exact_select, greedy_select};

use super::{list, Context};
use crate::cli::CurveArgs;
use crate::document::{CurveRow, GraphSummary, ResultDocument};
use crate::error::{CliError, CliResult};
use crate::input::load_instance;

pub fn run(ctx: &Context<'_>, args: &CurveArgs) -> CliResult<()> {
    let mut greedy = false;
    let mut exact = false;
    for m in list(&args.methods) {
        match m {
            "greedy" => greedy = true,
            "exact" => exact = true,
            other => return Err(CliError::Usage(format!("unknown method '{other}'"))),
        }
    }
    if !greedy && !exact {
        return Err(CliError::Usage("--methods is empty".into()));
    }
    let inst = load_instance((&args.graph).into())?;
    let m = EquilibriumMoments::compute(&inst.ops, &inst.noise, &inst.u, &ctx.tolerances())?;
    let mut meta = ctx.meta();
    meta.notes.extend(super::select::moments_note(&m));
    meta.notes
        .push("residual_pct = 100 * G(K) / 1'C1, so the empty set is 100%".to_string());

    let mut rows = Vec::new();
    if greedy {
        let res = greedy_select(&m.c, args.max_k)?;
        meta.eval_count = Some(res.eval_count);
        meta.timing.selection_s = Some(res.wall_time.as_secs_f64());
        for (k, f) in res.residual_fractions().iter().enumerate() {
            rows.push(CurveRow {
                k,
                method: "greedy",
                residual_pct: 100.0 * f,
            });
        }
    }
    if exact {
        for k in 0..=args.max_k {
            let res = exact_select(&m.c, k, args.budget)?;
            rows.push(CurveRow {
                k,
                method: "exact",
                residual_pct: 100.0 * res.residual_fractions()[k],
            });
        }
    }
    let mut doc = ResultDocument::new("curve", meta);
    doc.graph = Some(GraphSummary::of(&inst));
    doc.moments_method = Some(m.method);
    doc.curve = Some(rows);
    ctx.finish(doc)
}
