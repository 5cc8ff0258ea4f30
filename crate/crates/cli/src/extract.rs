use std::path::PathBuf;

use clap::Args;
use sepnmf::spa::{l1_normalize_columns, theorem_bound, TheoremBound};
use sepnmf::{extract, ExtractionOptions, SelectorSpec, Variant};
use serde::Serialize;

use crate::failure::{Failure, Outcome};
use crate::input::{join_indices, load_matrix, parse_selector};
use crate::manifest::{write_json, RunManifest};

pub const EXTRACT_SCHEMA: &str = "sepnmf.extract/1";

#[derive(Debug, Args, Serialize)]
pub struct ExtractArgs {
    /// Matrix file, CSV or raw (detected from the content).
    pub input: PathBuf,
    /// Number of columns to extract.
    #[arg(short = 'r', long = "rank")]
    pub r: usize,
    /// `l2`, `robust:<alpha>` or `pnorm:<p>`.
    #[arg(long, default_value = "l2", value_parser = parse_selector)]
    pub selector: SelectorSpec,
    /// Norm-downdating variant (l2 only).
    #[arg(long, conflicts_with = "naive")]
    pub fast: bool,
    /// Explicit residual updates (the default).
    #[arg(long)]
    pub naive: bool,
    /// Scale columns to unit l1 norm first.
    #[arg(long)]
    pub normalize: bool,
    /// Stop early once the largest residual column norm is at most this.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Evaluate the robustness bound on the extracted columns.
    #[arg(long)]
    pub bound: bool,
    /// Write a JSON report here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Serialize)]
struct ExtractReport<'a> {
    schema: &'static str,
    rows: usize,
    cols: usize,
    indices: Vec<usize>,
    step_scores: &'a [f64],
    residual_norms: &'a [f64],
    bound: Option<TheoremBound>,
    manifest: RunManifest,
}

pub fn run(args: &ExtractArgs) -> Outcome<()> {
    let (m, bytes) = load_matrix(&args.input)?;
    let (rows, cols) = m.shape();
    if args.r > rows.min(cols) {
        return Err(Failure::usage(
            "dimension check",
            format!(
                "r = {} exceeds min(rows, cols) for a {rows}x{cols} matrix",
                args.r
            ),
        ));
    }
    let variant = if args.fast {
        Variant::FastUpdate
    } else {
        Variant::Naive
    };
    let mut opts = ExtractionOptions::new(args.r)
        .selector(args.selector)
        .variant(variant)
        .l1_normalize(args.normalize);
    if let Some(tol) = args.tol {
        opts = opts.residual_tol(tol);
    }
    let res = extract(&m, &opts).map_err(|e| Failure::from_lib("extraction", e))?;
    println!("{}", join_indices(&res.one_based()));

    let bound = if args.bound {
        let source = if args.normalize {
            l1_normalize_columns(&m).0
        } else {
            m.clone()
        };
        let w = source
            .select_columns(&res.indices)
            .map_err(|e| Failure::from_lib("bound", e))?;
        let b = theorem_bound(&w, &args.selector).map_err(|e| Failure::from_lib("bound", e))?;
        println!("bound eps_max {:.6e} err_factor {:.6e}", b.eps_max, b.err_factor);
        Some(b)
    } else {
        None
    };

    if let Some(path) = &args.json {
        let report = ExtractReport {
            schema: EXTRACT_SCHEMA,
            rows,
            cols,
            indices: res.one_based(),
            step_scores: &res.step_scores,
            residual_norms: &res.residual_norms,
            bound,
            manifest: RunManifest::new(args, None).input(&args.input, &bytes),
        };
        write_json(path, &report)?;
    }
    Ok(())
}
