//! Recovery scoring, robustness sweeps over the noise level and the
//! comparison between observed thresholds and the worst-case bound.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, BaselineOptions};
use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseMatrix};
use crate::rng::derive_seed;
use crate::selectors::SelectorSpec;
use crate::spa::{extract, theorem_bound, ExtractionOptions, ExtractionResult, Variant};
use crate::synth::{generate, generate_w, ExperimentConfig, GroundTruth};

/// Fraction of endmembers hit by at least one extracted pure column.
/// Several copies of the same endmember count once; mixtures count for
/// nothing.
pub fn recovery_fraction(indices: &[usize], truth: &GroundTruth) -> f64 {
    let r = truth.r();
    if r == 0 {
        return 0.0;
    }
    let mut hit = vec![false; r];
    for &j in indices {
        if let Some(Some(k)) = truth.pure_column_map.get(j) {
            hit[*k] = true;
        }
    }
    hit.iter().filter(|&&h| h).count() as f64 / r as f64
}

/// Whether each extracted column can be paired with a distinct column of
/// `W` at ℓ2 distance at most `tol`.
pub fn spectral_match(extracted: &DenseMatrix, w: &DenseMatrix, tol: f64) -> bool {
    if extracted.rows() != w.rows() || extracted.cols() > w.cols() {
        return false;
    }
    let close: Vec<Vec<usize>> = extracted
        .columns()
        .map(|e| {
            (0..w.cols())
                .filter(|&k| {
                    let d: Vec<f64> = e.iter().zip(w.col(k)).map(|(a, b)| a - b).collect();
                    norm2(&d) <= tol
                })
                .collect()
        })
        .collect();
    // augmenting paths; sizes here are tiny
    let mut owner: Vec<Option<usize>> = vec![None; w.cols()];
    fn augment(i: usize, close: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &k in &close[i] {
            if seen[k] {
                continue;
            }
            seen[k] = true;
            if owner[k].map_or(true, |o| augment(o, close, owner, seen)) {
                owner[k] = Some(i);
                return true;
            }
        }
        false
    }
    (0..close.len()).all(|i| augment(i, &close, &mut owner, &mut vec![false; w.cols()]))
}

/// Extraction algorithms compared in the benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Spa,
    SpaFast,
    Ppi,
    Vca,
    Sivm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Spa,
        Algorithm::SpaFast,
        Algorithm::Ppi,
        Algorithm::Vca,
        Algorithm::Sivm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Spa => "spa",
            Algorithm::SpaFast => "spa-fast",
            Algorithm::Ppi => "ppi",
            Algorithm::Vca => "vca",
            Algorithm::Sivm => "sivm",
        }
    }

    /// Extracts `r` columns; `seed` drives the randomized baselines.
    pub fn run(&self, m: &DenseMatrix, r: usize, seed: u64) -> Result<ExtractionResult> {
        let opts = BaselineOptions::new(r, seed);
        match self {
            Algorithm::Spa => extract(m, &ExtractionOptions::new(r)),
            Algorithm::SpaFast => extract(m, &ExtractionOptions::new(r).variant(Variant::FastUpdate)),
            Algorithm::Ppi => baselines::ppi(m, &opts),
            Algorithm::Vca => baselines::vca(m, &opts),
            Algorithm::Sivm => baselines::sivm(m, &opts),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| {
                Error::InvalidOptions(format!(
                    "unknown algorithm {s:?}; expected spa, spa-fast, ppi, vca or sivm"
                ))
            })
    }
}

/// `count` points from `lo` to `hi` evenly spaced in log scale.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
        return Err(Error::InvalidOptions(format!(
            "bad grid: {count} points over [{lo}, {hi}]"
        )));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// Grid bracketing the interesting range for an experiment suite.
pub fn default_grid(exp_id: u8, count: usize) -> Result<Vec<f64>> {
    let (lo, hi) = match exp_id {
        1 | 2 => (1e-3, 1.0),
        3 => (1e-5, 1e-1),
        4 => (1e-6, 1e-2),
        _ => {
            return Err(Error::InvalidOptions(format!(
                "experiment id must be 1, 2, 3 or 4, got {exp_id}"
            )))
        }
    };
    geometric_grid(lo, hi, count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub mean_recovery: f64,
    pub min_recovery: f64,
    pub trials: usize,
    /// Trials whose extractor returned an error (scored as zero).
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub algorithm: Algorithm,
    pub exp_id: u8,
    pub m: usize,
    pub r: usize,
    pub seed: u64,
    pub per_delta: Vec<DeltaRow>,
    /// Largest grid `delta` such that every trial at it and at every smaller
    /// grid point is fully recovered; 0 if the first grid point fails.
    pub threshold_full: f64,
    /// Same with mean recovery at least 0.99 as the criterion.
    pub threshold_99: f64,
    /// Largest grid `delta` with every trial fully recovered, ignoring
    /// failures at smaller values; 0 if none.
    pub last_full: f64,
    pub bound_predicted: Option<f64>,
}

impl RecoveryReport {
    pub const CSV_HEADER: &'static str = "exp,algorithm,m,r,delta,mean_recovery,min_recovery,trials,failures";

    /// One line per grid point, without header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for row in &self.per_delta {
            out.push_str(&format!(
                "{},{},{},{},{:.6e},{:.6},{:.6},{},{}\n",
                self.exp_id,
                self.algorithm,
                self.m,
                self.r,
                row.delta,
                row.mean_recovery,
                row.min_recovery,
                row.trials,
                row.failures
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::CSV_HEADER, self.csv_rows())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    fn from_rows(
        algorithm: Algorithm,
        template: &ExperimentConfig,
        seed: u64,
        per_delta: Vec<DeltaRow>,
    ) -> Self {
        let prefix = |ok: fn(&DeltaRow) -> bool| {
            per_delta
                .iter()
                .take_while(|row| ok(row))
                .last()
                .map_or(0.0, |row| row.delta)
        };
        let threshold_full = prefix(|row| row.min_recovery == 1.0);
        let threshold_99 = prefix(|row| row.mean_recovery >= 0.99);
        let last_full = per_delta
            .iter()
            .filter(|row| row.min_recovery == 1.0)
            .map(|row| row.delta)
            .fold(0.0, f64::max);
        Self {
            algorithm,
            exp_id: template.exp_id,
            m: template.m,
            r: template.r,
            seed,
            per_delta,
            threshold_full,
            threshold_99,
            last_full,
            bound_predicted: None,
        }
    }
}

/// Seed of trial `trial` at grid point `delta_index`.
pub fn trial_seed(master: u64, delta_index: usize, trial: usize) -> u64 {
    derive_seed(master, &[delta_index as u64, trial as u64])
}

/// Runs every algorithm on the same `trials` instances per grid point.
/// Reports come back in the order of `algorithms`. `jobs = 0` uses the
/// ambient rayon pool; the output does not depend on `jobs`.
pub fn sweep_many(
    algorithms: &[Algorithm],
    template: &ExperimentConfig,
    deltas: &[f64],
    trials: usize,
    seed: u64,
    jobs: usize,
) -> Result<Vec<RecoveryReport>> {
    template.validate()?;
    if trials == 0 {
        return Err(Error::InvalidOptions("trials must be at least 1".into()));
    }
    if deltas.windows(2).any(|p| !(p[0] <= p[1])) {
        return Err(Error::InvalidOptions("deltas must be sorted ascending".into()));
    }
    if let Some(bad) = deltas.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
        return Err(Error::InvalidOptions(format!("bad delta {bad}")));
    }

    let cells: Vec<(usize, usize)> = (0..deltas.len())
        .flat_map(|d| (0..trials).map(move |t| (d, t)))
        .collect();
    // (recovery, failed) per algorithm per cell
    let run_cell = |&(d, t): &(usize, usize)| -> Result<Vec<(f64, bool)>> {
        let s = trial_seed(seed, d, t);
        let cfg = template.with_delta(deltas[d]).with_seed(s);
        let (m, truth) = generate(&cfg)?;
        Ok(algorithms
            .iter()
            .map(|alg| match alg.run(&m, cfg.r, s) {
                Ok(res) => (recovery_fraction(&res.indices, &truth), false),
                Err(_) => (0.0, true),
            })
            .collect())
    };
    let outcomes: Vec<Vec<(f64, bool)>> = if jobs == 0 {
        cells.par_iter().map(run_cell).collect::<Result<_>>()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidOptions(format!("thread pool: {e}")))?
            .install(|| cells.par_iter().map(run_cell).collect::<Result<_>>())?
    };

    Ok(algorithms
        .iter()
        .enumerate()
        .map(|(a, alg)| {
            let rows = deltas
                .iter()
                .enumerate()
                .map(|(d, &delta)| {
                    let cell = &outcomes[d * trials..(d + 1) * trials];
                    let values = cell.iter().map(|o| o[a].0);
                    DeltaRow {
                        delta,
                        mean_recovery: values.clone().sum::<f64>() / trials as f64,
                        min_recovery: values.fold(1.0, f64::min),
                        trials,
                        failures: cell.iter().filter(|o| o[a].1).count(),
                    }
                })
                .collect();
            RecoveryReport::from_rows(*alg, template, seed, rows)
        })
        .collect())
}

/// Single-algorithm [`sweep_many`].
pub fn sweep(
    algorithm: Algorithm,
    template: &ExperimentConfig,
    deltas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<RecoveryReport> {
    Ok(sweep_many(&[algorithm], template, deltas, trials, seed, 0)?.remove(0))
}

/// Averages of the worst-case bound over random draws of `W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundStats {
    pub exp_id: u8,
    pub draws: usize,
    pub avg_kappa: f64,
    pub avg_k: f64,
    pub avg_sigma_r: f64,
    pub avg_eps_max: f64,
    /// Mean of `max_i ‖n_i‖ / delta`.
    pub avg_noise_per_delta: f64,
    /// Mean over draws of `eps_max / (max_i ‖n_i‖ / delta)`: the noise
    /// level at which the bound starts to guarantee recovery.
    pub predicted_delta: f64,
    pub observed_delta: Option<f64>,
}

/// Largest noise column norm per unit `delta` for one instance.
pub fn noise_per_delta(config: &ExperimentConfig) -> Result<f64> {
    let (_, truth) = generate(&config.with_delta(1.0))?;
    Ok(truth.max_noise_norm())
}

/// Evaluates the bound on `draws` instances of the suite (seeds derived
/// from `seed`) and converts it to a noise level.
pub fn bound_report(
    template: &ExperimentConfig,
    selector: &SelectorSpec,
    draws: usize,
    seed: u64,
) -> Result<BoundStats> {
    template.validate()?;
    if draws == 0 {
        return Err(Error::InvalidOptions("draws must be at least 1".into()));
    }
    let per_draw: Vec<[f64; 6]> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let cfg = template.with_seed(derive_seed(seed, &[i as u64]));
            let w = generate_w(&cfg)?;
            let bound = theorem_bound(&w, selector)?;
            let unit = noise_per_delta(&cfg)?;
            Ok([
                bound.geometry.kappa,
                bound.geometry.k_max,
                bound.geometry.sigma_min,
                bound.eps_max,
                unit,
                bound.eps_max / unit,
            ])
        })
        .collect::<Result<_>>()?;
    let mean = |k: usize| per_draw.iter().map(|v| v[k]).sum::<f64>() / draws as f64;
    Ok(BoundStats {
        exp_id: template.exp_id,
        draws,
        avg_kappa: mean(0),
        avg_k: mean(1),
        avg_sigma_r: mean(2),
        avg_eps_max: mean(3),
        avg_noise_per_delta: mean(4),
        predicted_delta: mean(5),
        observed_delta: None,
    })
}
