use std::time::Instant;

use pollsel::equilibrium::Tolerances;

use crate::cli::{Cli, Command, Format, GlobalArgs};
use crate::document::{emit, to_csv, to_json, Meta, ResultDocument, Timing, ToleranceSummary};
use crate::error::{CliError, CliResult};

mod curve;
mod generate;
mod score;
mod select;
mod validate;

pub struct Context<'a> {
    pub global: &'a GlobalArgs,
    start: Instant,
}

impl Context<'_> {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            lyapunov: self.global.tol_lyapunov,
            symmetry: self.global.tol_sym,
            ..Tolerances::default()
        }
    }

    pub fn meta(&self) -> Meta {
        Meta {
            tool: "pollsel",
            version: env!("CARGO_PKG_VERSION"),
            seed: self.global.seed,
            tolerances: ToleranceSummary {
                lyapunov: self.global.tol_lyapunov,
                symmetry: self.global.tol_sym,
            },
            timing: Timing::default(),
            eval_count: None,
            notes: Vec::new(),
        }
    }

    pub fn finish(&self, mut doc: ResultDocument) -> CliResult<()> {
        doc.meta.timing.total_s = self.start.elapsed().as_secs_f64();
        let text = match self.global.format {
            Format::Json => to_json(&doc)?,
            Format::Csv => to_csv(&doc),
        };
        emit(&text, self.global.out.as_deref())
    }
}

fn check_globals(g: &GlobalArgs) -> CliResult<()> {
    for (flag, v) in [("--tol-lyapunov", g.tol_lyapunov), ("--tol-sym", g.tol_sym)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Usage(format!("{flag} must be a positive number, got {v}")));
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    check_globals(&cli.global)?;
    let ctx = Context {
        global: &cli.global,
        start: Instant::now(),
    };
    match &cli.command {
        Command::Generate(a) => generate::run(&ctx, a),
        Command::Select(a) => select::run(&ctx, a),
        Command::Score(a) => score::run(&ctx, a),
        Command::Curve(a) => curve::run(&ctx, a),
        Command::Validate(a) => validate::run(&ctx, a),
    }
}

/// Splits a comma-separated flag value.
pub fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}
