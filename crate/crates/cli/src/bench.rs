use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use sepnmf::metrics::{
    bound_report, default_grid, geometric_grid, sweep_many, Algorithm, BoundStats, RecoveryReport,
};
use sepnmf::SelectorSpec;
use serde::Serialize;

use crate::failure::{Failure, Outcome};
use crate::manifest::{write_json, RunManifest};
use crate::synth::ScaleArgs;

pub const BENCH_SCHEMA: &str = "sepnmf.bench/1";

/// Noise levels to sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// Per-suite geometric default with `--points` values.
    Default,
    Geometric {
        lo: f64,
        hi: f64,
        count: usize,
    },
    List(Vec<f64>),
}

impl FromStr for GridSpec {
    type Err = String;

    /// `default`, `geom:<lo>:<hi>:<count>` or a comma-separated list.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "default" {
            return Ok(GridSpec::Default);
        }
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad grid value {v:?}"))
        };
        if let Some(rest) = s.strip_prefix("geom:") {
            let parts: Vec<&str> = rest.split(':').collect();
            let [lo, hi, count] = parts[..] else {
                return Err(format!("expected geom:<lo>:<hi>:<count>, got {s:?}"));
            };
            let count = count
                .trim()
                .parse()
                .map_err(|_| format!("bad grid count {count:?}"))?;
            return Ok(GridSpec::Geometric {
                lo: num(lo)?,
                hi: num(hi)?,
                count,
            });
        }
        let values = s.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
        Ok(GridSpec::List(values))
    }
}

impl GridSpec {
    fn deltas(&self, exp_id: u8, points: usize) -> sepnmf::Result<Vec<f64>> {
        match self {
            GridSpec::Default => default_grid(exp_id, points),
            GridSpec::Geometric { lo, hi, count } => geometric_grid(*lo, *hi, *count),
            GridSpec::List(v) => Ok(v.clone()),
        }
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|e| format!("{v:?}: {e}")))
        .collect()
}

fn parse_exps(s: &str) -> Result<Vec<u8>, String> {
    let exps = parse_list::<u8>(s)?;
    match exps.iter().find(|e| !(1..=4).contains(*e)) {
        Some(e) => Err(format!("experiment {e} is not in 1..=4")),
        None => Ok(exps),
    }
}

fn parse_algs(s: &str) -> Result<Vec<Algorithm>, String> {
    if s.trim() == "all" {
        return Ok(Algorithm::ALL.to_vec());
    }
    parse_list(s)
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Comma-separated experiment suites.
    #[arg(long, default_value = "1,2,3,4", value_parser = parse_exps)]
    pub exp: std::vec::Vec<u8>,
    /// Comma-separated algorithms (spa, spa-fast, ppi, vca, sivm) or `all`.
    #[arg(long = "alg", default_value = "spa,ppi,vca,sivm", value_parser = parse_algs)]
    pub algorithms: std::vec::Vec<Algorithm>,
    /// `default`, `geom:<lo>:<hi>:<count>` or a comma-separated list.
    #[arg(long, default_value = "default")]
    pub grid: GridSpec,
    /// Number of grid points for `--grid default`.
    #[arg(long, default_value_t = 60)]
    pub points: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub scale: ScaleArgs,
    /// Random draws for the bound comparison; 0 skips it.
    #[arg(long, default_value_t = 100)]
    pub bound_draws: usize,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "SEPNMF_JOBS", default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct AlgorithmSummary {
    algorithm: Algorithm,
    threshold_full: f64,
    threshold_99: f64,
    last_full: f64,
    failures: usize,
}

#[derive(Serialize)]
struct ExperimentSummary {
    exp_id: u8,
    m: usize,
    r: usize,
    n: usize,
    grid: Vec<f64>,
    algorithms: Vec<AlgorithmSummary>,
    bound: Option<BoundStats>,
}

#[derive(Serialize)]
struct BenchSummary {
    schema: &'static str,
    trials: usize,
    seed: u64,
    experiments: Vec<ExperimentSummary>,
}

pub fn run(args: &BenchArgs) -> Outcome<()> {
    if args.algorithms.is_empty() {
        return Err(Failure::usage("config", "no algorithms selected"));
    }
    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::io("writing output", &args.out_dir, e))?;
    let mut csv = format!("{}\n", RecoveryReport::CSV_HEADER);
    let mut experiments = Vec::new();
    for &exp_id in &args.exp {
        let template = args.scale.config(exp_id, 0.0, args.seed)?;
        let grid = args
            .grid
            .deltas(exp_id, args.points)
            .map_err(|e| Failure::from_lib("grid", e))?;
        eprintln!(
            "exp {exp_id}: {} grid points x {} trials",
            grid.len(),
            args.trials
        );
        let reports = sweep_many(
            &args.algorithms,
            &template,
            &grid,
            args.trials,
            args.seed,
            args.jobs,
        )
        .map_err(|e| Failure::from_lib("sweep", e))?;
        for rep in &reports {
            csv.push_str(&rep.csv_rows());
        }
        let bound = if args.bound_draws > 0 {
            let mut stats = bound_report(&template, &SelectorSpec::L2, args.bound_draws, args.seed)
                .map_err(|e| Failure::from_lib("bound", e))?;
            stats.observed_delta = reports
                .iter()
                .find(|rep| matches!(rep.algorithm, Algorithm::Spa | Algorithm::SpaFast))
                .map(|rep| rep.threshold_full);
            Some(stats)
        } else {
            None
        };
        experiments.push(ExperimentSummary {
            exp_id,
            m: template.m,
            r: template.r,
            n: template.n(),
            grid,
            algorithms: reports
                .iter()
                .map(|rep| AlgorithmSummary {
                    algorithm: rep.algorithm,
                    threshold_full: rep.threshold_full,
                    threshold_99: rep.threshold_99,
                    last_full: rep.last_full,
                    failures: rep.per_delta.iter().map(|row| row.failures).sum(),
                })
                .collect(),
            bound,
        });
    }
    let csv_path = args.out_dir.join("recovery.csv");
    fs::write(&csv_path, csv).map_err(|e| Failure::io("writing output", &csv_path, e))?;
    let summary = BenchSummary {
        schema: BENCH_SCHEMA,
        trials: args.trials,
        seed: args.seed,
        experiments,
    };
    write_json(&args.out_dir.join("summary.json"), &summary)?;
    write_json(
        &args.out_dir.join("manifest.json"),
        &RunManifest::new(args, Some(args.seed)),
    )?;
    for e in &summary.experiments {
        for a in &e.algorithms {
            println!(
                "exp {} {:<8} threshold {:.3e} (99%: {:.3e})",
                e.exp_id,
                a.algorithm.name(),
                a.threshold_full,
                a.threshold_99
            );
        }
        if let Some(b) = &e.bound {
            println!("exp {} bound    predicted {:.3e}", e.exp_id, b.predicted_delta);
        }
    }
    Ok(())
}
