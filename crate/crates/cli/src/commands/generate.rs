use std::path::PathBuf;

use pollsel::graph::{
    generate_cycle, generate_random_weighted, generate_watts_strogatz, normalize, write_edge_list, write_stubborn_list,
};

use super::Context;
use crate::cli::{GenerateArgs, Model};
use crate::document::write_atomic;
use crate::error::{CliError, CliResult};

pub fn run(ctx: &Context<'_>, args: &GenerateArgs) -> CliResult<()> {
    let seed = ctx.global.seed;
    let g = match args.model {
        Model::Ws => generate_watts_strogatz(args.n, args.k, args.beta, seed, args.stubborn_count)?,
        Model::Cycle => generate_cycle(args.n, args.stubborn_count)?,
        Model::Weighted => {
            let edges = args
                .edges
                .ok_or_else(|| CliError::Usage("--edges is required for the weighted model".into()))?;
            generate_random_weighted(args.n, edges, args.max_weight, args.stubborn_count, seed)?
        }
    };
    let ops = normalize(&g)?;

    let mut edges = Vec::new();
    write_edge_list(&g, &mut edges)?;
    let mut stubborn = Vec::new();
    write_stubborn_list(&g, &mut stubborn)?;

    let stubborn_ids: Vec<String> = g.stubborn().iter().map(|&i| g.labels()[i].to_string()).collect();
    let summary = format!(
        "{:?} graph: {} nodes, {} edges, stubborn {}, {} regular, spectral radius {:.6}",
        args.model,
        g.n_nodes(),
        g.n_edges(),
        stubborn_ids.join(","),
        g.regular().len(),
        ops.rho
    )
    .to_lowercase();

    let stubborn_path = args.stubborn_out.clone().or_else(|| {
        ctx.global.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".stubborn");
            PathBuf::from(s)
        })
    });
    match &ctx.global.out {
        Some(path) => {
            write_atomic(path, &edges)?;
            println!("{summary}");
        }
        None => {
            print!("{}", String::from_utf8_lossy(&edges));
            eprintln!("{summary}");
        }
    }
    if let Some(path) = stubborn_path {
        write_atomic(&path, &stubborn)?;
    }
    Ok(())
}
