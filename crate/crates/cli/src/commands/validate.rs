use nalgebra::{DMatrix, DVector};
use pollsel::centrality::{eta_scores, intercentrality};
use pollsel::equilibrium::{
    closed_form_diagnostics, covariance_lyapunov, mean, EquilibriumMoments, MomentsMethod, NoiseModel,
};
use pollsel::graph::{
    generate_random_reachable, generate_uniform_strength, generate_watts_strogatz, normalize, RandomGraphParams,
    SocialGraph,
};
use pollsel::linalg::rel_diff_scalar;
use pollsel::mcsim::{check_agreement, check_moments, empirical_moments, simulate, NoiseFamily, SimConfig};
use pollsel::objective::{f_score, ObservationSet};
use pollsel::selector::{
    extend_inverse, greedy_bound, greedy_select, guarantee_check, marginal_gain, submodularity_audit, AuditOptions,
    GreedyState, DEFAULT_SUBSET_BUDGET,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use statrs::distribution::{ContinuousCDF, Normal};

use super::Context;
use crate::cli::{InstanceFamily, SelfLoops, Suite, ValidateArgs};
use crate::document::{GraphSummary, ResultDocument, Validation};
use crate::error::{CliError, CliResult};
use crate::input::{load_instance, GraphSource, Instance};

struct Outcome {
    passed: bool,
    summary: String,
    reports: serde_json::Value,
}

fn instance_from(graph: SocialGraph, noise: NoiseModel, u: DVector<f64>) -> CliResult<Instance> {
    let ops = normalize(&graph)?;
    Ok(Instance { graph, ops, noise, u })
}

fn random_instance(family: InstanceFamily, max_r: usize, rng: &mut ChaCha8Rng) -> CliResult<Instance> {
    let r = rng.random_range(2..=max_r.max(2));
    let params = RandomGraphParams::new(r, rng.random_range(1..=3));
    let seed = rng.random();
    let graph = match family {
        InstanceFamily::ClosedForm => generate_uniform_strength(params, seed)?,
        InstanceFamily::General | InstanceFamily::Proportional => generate_random_reachable(params, seed)?,
    };
    let ops = normalize(&graph)?;
    let sigma2 = match family {
        InstanceFamily::ClosedForm => vec![rng.random_range(0.1..5.0); r],
        InstanceFamily::General => (0..r).map(|_| rng.random_range(0.1..5.0)).collect(),
        InstanceFamily::Proportional => {
            let scale = rng.random_range(0.1..2.0);
            graph.regular().iter().map(|&i| scale * ops.w[i]).collect()
        }
    };
    let u = DVector::from_element(graph.stubborn().len(), 1.0);
    instance_from(graph, NoiseModel::new(sigma2)?, u)
}

/// The user's graph when given, otherwise `trials` generated instances.
fn instances(args: &ValidateArgs, ctx: &Context<'_>, default_max_r: usize) -> CliResult<Vec<Instance>> {
    if let Some(graph) = &args.graph {
        return Ok(vec![load_instance(GraphSource {
            graph,
            stubborn: args.stubborn.as_deref(),
            stubborn_file: args.stubborn_file.as_deref(),
            sigma2: &args.sigma2,
            opinions: &args.opinions,
            self_loops: SelfLoops::Reject,
        })?]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.global.seed);
    let max_r = args.max_r.unwrap_or(default_max_r);
    (0..args.trials)
        .map(|_| random_instance(args.instances, max_r, &mut rng))
        .collect()
}

fn covariance(ctx: &Context<'_>, inst: &Instance) -> CliResult<DMatrix<f64>> {
    Ok(covariance_lyapunov(&inst.ops.a, &inst.noise, ctx.global.tol_lyapunov)?)
}

fn moments_suite(ctx: &Context<'_>, args: &ValidateArgs) -> CliResult<Outcome> {
    if args.replicas < 2 {
        return Err(CliError::Usage("--replicas must be at least 2".into()));
    }
    let named: Vec<(String, Instance)> = if args.graph.is_some() {
        instances(args, ctx, 0)?
            .into_iter()
            .map(|i| ("graph".to_string(), i))
            .collect()
    } else {
        let chain = SocialGraph::new(
            DMatrix::from_row_slice(3, 3, &[0., 1., 0., 1., 0., 1., 0., 1., 0.]),
            [2],
        )?;
        let ws = generate_watts_strogatz(15, 4, 0.3, 7, 3)?;
        vec![
            (
                "chain".to_string(),
                instance_from(chain, NoiseModel::uniform(2, 1.0)?, DVector::from_element(1, 1.0))?,
            ),
            (
                "ws15".to_string(),
                instance_from(
                    ws,
                    NoiseModel::uniform(12, 1.0)?,
                    DVector::from_vec(vec![0.0, 0.5, 1.0]),
                )?,
            ),
        ]
    };
    let mut passed = true;
    let mut reports = Vec::new();
    let mut worst_z: f64 = 0.0;
    for (name, inst) in &named {
        let mu = mean(&inst.ops, &inst.u)?;
        let c = covariance(ctx, inst)?;
        let r = inst.ops.n_regular();
        let mut emps = Vec::new();
        for family in NoiseFamily::ALL {
            let cfg = SimConfig::new(&inst.ops, args.replicas, ctx.global.seed, family, inst.u.clone());
            let emp = empirical_moments(&simulate(&inst.ops, &inst.noise, &cfg)?)?;
            let chk = check_moments(&emp, &mu, &c, args.n_se);
            passed &= chk.passed();
            worst_z = worst_z.max(chk.max_mean_z).max(chk.max_cov_z);
            reports.push(json!({"instance": name, "family": family.to_string(), "horizon": cfg.horizon, "check": chk}));
            emps.push(emp);
        }
        let pairs = [(0, 1), (0, 2), (1, 2)];
        let tests = pairs.len() * (r + r * (r + 1) / 2);
        let z = Normal::standard().inverse_cdf(1.0 - 0.01 / (2.0 * tests as f64));
        for (a, b) in pairs {
            let chk = check_agreement(&emps[a], &emps[b], z);
            passed &= chk.passed();
            reports.push(json!({
                "instance": name,
                "families": [NoiseFamily::ALL[a].to_string(), NoiseFamily::ALL[b].to_string()],
                "check": chk,
            }));
        }
    }
    Ok(Outcome {
        passed,
        summary: format!(
            "{} instance(s), {} replicas per family, largest deviation {worst_z:.2} SE (limit {})",
            named.len(),
            args.replicas,
            args.n_se
        ),
        reports: json!(reports),
    })
}

fn submodularity_suite(ctx: &Context<'_>, args: &ValidateArgs) -> CliResult<Outcome> {
    let opts = AuditOptions {
        exhaustive_limit: args.max_r.unwrap_or(8),
        seed: ctx.global.seed,
        ..AuditOptions::default()
    };
    let mut passed = true;
    let (mut min_f, mut min_g) = (f64::INFINITY, f64::INFINITY);
    let mut failures = Vec::new();
    let insts = instances(args, ctx, 7)?;
    for (t, inst) in insts.iter().enumerate() {
        let rep = submodularity_audit(&covariance(ctx, inst)?, &opts)?;
        min_f = min_f.min(rep.min_slack_f);
        min_g = min_g.min(rep.min_slack_g);
        if !rep.passed() {
            passed = false;
            failures.push(json!({"trial": t, "report": rep}));
        }
    }
    Ok(Outcome {
        passed,
        summary: format!(
            "{} instance(s), min slack F {min_f:.3e}, min slack G {min_g:.3e}, {} with violations",
            insts.len(),
            failures.len()
        ),
        reports: json!({"min_slack_f": min_f, "min_slack_g": min_g, "failures": failures}),
    })
}

fn guarantee_suite(ctx: &Context<'_>, args: &ValidateArgs) -> CliResult<Outcome> {
    let mut reports = Vec::new();
    for inst in instances(args, ctx, 12)? {
        let c = covariance(ctx, &inst)?;
        for s in 1..=5.min(c.nrows()) {
            reports.push(guarantee_check(&c, s, DEFAULT_SUBSET_BUDGET)?);
        }
    }
    let min = reports.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        passed: reports.iter().all(|r| r.passed),
        summary: format!(
            "{} checks, min ratio {min:.6}, bound {:.6}",
            reports.len(),
            greedy_bound()
        ),
        reports: json!(reports),
    })
}

fn incremental_suite(ctx: &Context<'_>, args: &ValidateArgs) -> CliResult<Outcome> {
    let (mut worst_gain, mut worst_f, mut count_ok, mut runs) = (0.0f64, 0.0f64, true, 0);
    for inst in instances(args, ctx, 60)? {
        let c = covariance(ctx, &inst)?;
        let r = c.nrows();
        let s = r.min(20);
        let res = greedy_select(&c, s)?;
        runs += 1;
        count_ok &= res.eval_count == r * s - s * s.saturating_sub(1) / 2;
        let mut state = GreedyState::new(&c);
        for (t, &pick) in res.chosen.iter().enumerate() {
            let k = ObservationSet::new(res.chosen[..t].to_vec(), r)?;
            let f_k = f_score(&c, &k)?;
            for i in k.complement(r) {
                let gain = marginal_gain(&state, &c, i)?;
                worst_gain = worst_gain.max(rel_diff_scalar(f_k + gain, f_score(&c, &k.with(i))?));
            }
            state = extend_inverse(state, &c, pick)?;
            worst_f = worst_f.max(rel_diff_scalar(state.f_current(), f_score(&c, &k.with(pick))?));
        }
    }
    Ok(Outcome {
        passed: worst_gain <= 1e-8 && worst_f <= 1e-8 && count_ok,
        summary: format!(
            "{runs} greedy run(s), max relative deviation: gains {worst_gain:.3e}, F {worst_f:.3e}; evaluation counts {}",
            if count_ok { "exact" } else { "WRONG" }
        ),
        reports: json!({"runs": runs, "max_gain_deviation": worst_gain, "max_f_deviation": worst_f, "eval_count_law": count_ok}),
    })
}

fn closed_form_suite(ctx: &Context<'_>, args: &ValidateArgs) -> CliResult<Outcome> {
    let tol = ctx.tolerances();
    let mut diags = Vec::new();
    for inst in instances(args, ctx, 30)? {
        diags.push(closed_form_diagnostics(&inst.ops.a, &inst.noise, &tol)?);
    }
    let accepted = diags.iter().filter(|d| d.accepted).count();
    let sound = diags.iter().filter(|d| d.accepted).all(|d| d.rel_error <= 1e-8);
    let worst_accepted = diags
        .iter()
        .filter(|d| d.accepted)
        .map(|d| d.rel_error)
        .fold(0.0, f64::max);
    let worst_rejected = diags
        .iter()
        .filter(|d| !d.accepted)
        .map(|d| d.rel_error)
        .fold(0.0, f64::max);
    Ok(Outcome {
        passed: sound,
        summary: format!(
            "{accepted}/{} accepted; worst error of an accepted closed form {worst_accepted:.3e}, of a rejected one {worst_rejected:.3e}",
            diags.len()
        ),
        reports: json!(diags),
    })
}

fn identities_suite(ctx: &Context<'_>, args: &ValidateArgs) -> CliResult<Outcome> {
    let tol = ctx.tolerances();
    let (mut worst_ic, mut worst_sq, mut closed) = (0.0f64, 0.0f64, 0usize);
    let insts = instances(args, ctx, 30)?;
    for inst in &insts {
        let eta = eta_scores(&inst.ops.a)?;
        let ic = intercentrality(&(&inst.ops.a * &inst.ops.a), 1.0)?;
        for (e, i) in eta.scores.iter().zip(&ic.scores) {
            worst_ic = worst_ic.max(rel_diff_scalar(*e, *i));
        }
        let m = EquilibriumMoments::compute(&inst.ops, &inst.noise, &inst.u, &tol)?;
        if m.method == MomentsMethod::ClosedForm {
            closed += 1;
            let r = inst.ops.n_regular();
            for k in 0..r {
                let f = f_score(&m.c, &ObservationSet::new(vec![k], r)?)?;
                worst_sq = worst_sq.max(rel_diff_scalar(f, inst.noise.sigma2()[k] * eta.scores[k]));
            }
        }
    }
    Ok(Outcome {
        passed: worst_ic <= 1e-10 && worst_sq <= 1e-10,
        summary: format!(
            "eta vs intercentrality of A^2: worst {worst_ic:.3e} over {} instance(s); var_reduction vs sigma^2 eta: worst {worst_sq:.3e} over {closed} closed-form instance(s)",
            insts.len()
        ),
        reports: json!({
            "eta_intercentrality_max_rel": worst_ic,
            "singleton_max_rel": worst_sq,
            "closed_form_instances": closed,
            "note": super::score::SINGLETON_NOTE,
        }),
    })
}

pub fn run(ctx: &Context<'_>, args: &ValidateArgs) -> CliResult<()> {
    let (name, outcome) = match args.suite {
        Suite::Moments => ("moments", moments_suite(ctx, args)?),
        Suite::Submodularity => ("submodularity", submodularity_suite(ctx, args)?),
        Suite::GreedyGuarantee => ("greedy-guarantee", guarantee_suite(ctx, args)?),
        Suite::Incremental => ("incremental", incremental_suite(ctx, args)?),
        Suite::ClosedForm => ("closed-form", closed_form_suite(ctx, args)?),
        Suite::Identities => ("identities", identities_suite(ctx, args)?),
    };
    let mut doc = ResultDocument::new("validate", ctx.meta());
    if args.graph.is_some() {
        doc.graph = Some(GraphSummary::of(&instances(args, ctx, 0)?.remove(0)));
    }
    let passed = outcome.passed;
    let summary = outcome.summary.clone();
    doc.validation = Some(Validation {
        suite: name,
        passed,
        summary: outcome.summary,
        reports: outcome.reports,
    });
    ctx.finish(doc)?;
    if passed {
        Ok(())
    } else {
        Err(CliError::AuditFailed(format!("{name}: {summary}")))
    }
}
