use std::path::PathBuf;

use clap::Args;
use sepnmf::outliers::{extract_with_outliers, OutlierOptions};
use sepnmf::{Error, SelectorSpec};
use serde::Serialize;

use crate::failure::{Failure, Outcome};
use crate::input::{join_indices, load_matrix, parse_selector};
use crate::manifest::{write_json, RunManifest};

pub const OUTLIERS_SCHEMA: &str = "sepnmf.outliers/1";

#[derive(Debug, Args, Serialize)]
pub struct OutliersArgs {
    /// Matrix file, CSV or raw.
    pub input: PathBuf,
    /// Number of columns to keep.
    #[arg(short = 'r', long = "rank")]
    pub r: usize,
    /// Maximum number of outlier columns.
    #[arg(short = 't', long = "outliers")]
    pub t: usize,
    #[arg(long, default_value = "l2", value_parser = parse_selector)]
    pub selector: SelectorSpec,
    /// Abundance solver tolerance; defaults to 1e-8 times the Frobenius norm.
    #[arg(long)]
    pub qp_tol: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    pub qp_max_iters: usize,
    /// Solve the per-column problems in parallel.
    #[arg(long)]
    pub parallel: bool,
    /// Fail (exit 3) instead of warning when the solver does not converge.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Serialize)]
struct Scored {
    index: usize,
    score: f64,
}

#[derive(Serialize)]
struct OutliersReport {
    schema: &'static str,
    rows: usize,
    cols: usize,
    indices: Vec<usize>,
    /// Kept and discarded indices, highest score first.
    scores: Vec<Scored>,
    /// l1 norm of every row of the weight matrix, in extraction order.
    row_norms: Vec<Scored>,
    first_stage: Vec<usize>,
    objective: f64,
    iterations: usize,
    converged: bool,
    manifest: RunManifest,
}

pub fn run(args: &OutliersArgs) -> Outcome<()> {
    let (m, bytes) = load_matrix(&args.input)?;
    let opts = OutlierOptions {
        qp_tol: args.qp_tol,
        qp_max_iters: args.qp_max_iters,
        parallel: args.parallel,
        ..OutlierOptions::new(args.r, args.t).selector(args.selector)
    };
    let out = extract_with_outliers(&m, &opts).map_err(|e| Failure::from_lib("extraction", e))?;
    if !out.abundances.converged {
        let err = Error::MaxItersExceeded {
            iterations: out.abundances.iterations,
        };
        if args.strict {
            return Err(Failure::from_lib("abundance solve", err));
        }
        eprintln!("warning: abundance solve: {err}");
    }

    let one_based: Vec<usize> = out.indices.iter().map(|i| i + 1).collect();
    let kept_scores: Vec<String> = out.scores[..out.indices.len()]
        .iter()
        .map(|(_, s)| format!("{s}"))
        .collect();
    println!("{}", join_indices(&one_based));
    println!("scores {}", kept_scores.join(" "));
    let discarded = out.discarded();
    if !discarded.is_empty() {
        let pairs: Vec<String> = discarded.iter().map(|(i, s)| format!("{}:{s}", i + 1)).collect();
        println!("discarded {}", pairs.join(" "));
    }

    if let Some(path) = &args.json {
        let scored = |pairs: &[(usize, f64)]| {
            pairs
                .iter()
                .map(|&(i, score)| Scored { index: i + 1, score })
                .collect()
        };
        let g = &out.abundances.g;
        let row_norms = out
            .first_stage
            .indices
            .iter()
            .enumerate()
            .map(|(row, &i)| Scored {
                index: i + 1,
                score: g.row(row).iter().map(|v| v.abs()).sum(),
            })
            .collect();
        let report = OutliersReport {
            schema: OUTLIERS_SCHEMA,
            rows: m.rows(),
            cols: m.cols(),
            indices: one_based,
            scores: scored(&out.scores),
            row_norms,
            first_stage: out.first_stage.one_based(),
            objective: out.abundances.objective,
            iterations: out.abundances.iterations,
            converged: out.abundances.converged,
            manifest: RunManifest::new(args, None).input(&args.input, &bytes),
        };
        write_json(path, &report)?;
    }
    Ok(())
}
