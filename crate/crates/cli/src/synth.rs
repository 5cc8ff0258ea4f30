use std::path::PathBuf;

use clap::{Args, ValueEnum};
use sepnmf::io::{write_matrix, MatrixFormat};
use sepnmf::synth::{generate, ExperimentConfig, InstanceSidecar};
use serde::Serialize;

use crate::failure::{Failure, Outcome};
use crate::manifest::{with_suffix, write_json, RunManifest};

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Csv,
    Raw,
}

impl FileFormat {
    fn extension(self) -> &'static str {
        match self {
            FileFormat::Csv => ".csv",
            FileFormat::Raw => ".bin",
        }
    }

    fn matrix_format(self) -> MatrixFormat {
        match self {
            FileFormat::Csv => MatrixFormat::Csv,
            FileFormat::Raw => MatrixFormat::RawF64,
        }
    }
}

/// Instance size shared by `synth` and `bench`.
#[derive(Debug, Args, Serialize)]
pub struct ScaleArgs {
    /// Desk scale (m=40, r=8) instead of full scale (m=200, r=20).
    #[arg(long)]
    pub desk: bool,
    /// Override the number of rows.
    #[arg(short = 'm', long = "rows")]
    pub m: Option<usize>,
    /// Override the number of endmembers.
    #[arg(short = 'r', long = "rank")]
    pub r: Option<usize>,
    /// Override the number of mixed columns (Dirichlet suites only).
    #[arg(long)]
    pub mixtures: Option<usize>,
}

impl ScaleArgs {
    pub fn config(&self, exp_id: u8, delta: f64, seed: u64) -> Outcome<ExperimentConfig> {
        let mut cfg = if self.desk {
            ExperimentConfig::desk(exp_id, delta, seed)
        } else {
            ExperimentConfig::full(exp_id, delta, seed)
        };
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(r) = self.r {
            cfg.r = r;
        }
        if self.mixtures.is_some() {
            cfg.n_mix = self.mixtures;
        }
        cfg.validate().map_err(|e| Failure::from_lib("config", e))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Experiment suite, 1 to 4.
    #[arg(long)]
    pub exp: u8,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub scale: ScaleArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FileFormat,
    /// Output prefix; writes PREFIX.csv (or .bin), PREFIX.truth.json and
    /// PREFIX.manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SynthArgs) -> Outcome<()> {
    let cfg = args.scale.config(args.exp, args.delta, args.seed)?;
    let (m, truth) = generate(&cfg).map_err(|e| Failure::from_lib("generation", e))?;
    let matrix_path = with_suffix(&args.out, args.format.extension());
    write_matrix(&matrix_path, &m, args.format.matrix_format())
        .map_err(|e| Failure::usage("writing output", e.to_string()))?;
    let sidecar = InstanceSidecar::new(&cfg, &truth);
    write_json(&with_suffix(&args.out, ".truth.json"), &sidecar)?;
    write_json(
        &with_suffix(&args.out, ".manifest.json"),
        &RunManifest::new(args, Some(args.seed)),
    )?;
    println!("{} {}x{}", matrix_path.display(), m.rows(), m.cols());
    Ok(())
}
