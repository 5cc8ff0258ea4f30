//! Outlier-tolerant extraction.
//!
//! Over-extract `r + t` columns, express every column of the input as a
//! combination of them with weights in the unit simplex, and keep the `r`
//! extracted columns whose weight rows carry the most total mass. In the
//! noiseless model a true endmember row sums to `1 + Σ H'(i,:) > 1` while an
//! outlier only represents itself and its row sums to exactly one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, simplex_project, svd, DenseMatrix};
use crate::selectors::SelectorSpec;
use crate::spa::{extract, ExtractionOptions, ExtractionResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierOptions {
    pub r: usize,
    /// Maximum number of outliers.
    pub t: usize,
    pub selector: SelectorSpec,
    /// Fixed-point tolerance of the abundance solver; unset means
    /// `1e-8 ‖M‖_F`.
    pub qp_tol: Option<f64>,
    pub qp_max_iters: usize,
    /// Solve the per-column problems on the rayon pool.
    pub parallel: bool,
}

impl OutlierOptions {
    pub fn new(r: usize, t: usize) -> Self {
        Self {
            r,
            t,
            selector: SelectorSpec::L2,
            qp_tol: None,
            qp_max_iters: 5000,
            parallel: false,
        }
    }

    pub fn selector(mut self, selector: SelectorSpec) -> Self {
        self.selector = selector;
        self
    }

    fn validate(&self, m: &DenseMatrix) -> Result<()> {
        if self.r < 2 {
            return Err(Error::InvalidOptions(format!(
                "r must be at least 2, got {}",
                self.r
            )));
        }
        let (rows, cols) = m.shape();
        if self.r + self.t > rows.min(cols) {
            return Err(Error::InvalidOptions(format!(
                "r + t = {} exceeds min(rows, cols) = {}",
                self.r + self.t,
                rows.min(cols)
            )));
        }
        if self.t > rows - self.r {
            return Err(Error::InvalidOptions(format!(
                "t = {} exceeds rows - r = {}",
                self.t,
                rows - self.r
            )));
        }
        if self.qp_max_iters == 0 {
            return Err(Error::InvalidOptions("qp_max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Minimizer of `‖M - A G‖_F²` over `G` with columns in the unit simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbundanceSolution {
    /// `A.cols x M.cols`.
    pub g: DenseMatrix,
    pub objective: f64,
    /// Largest per-column iteration count.
    pub iterations: usize,
    /// False when some column hit the iteration cap before the tolerance.
    pub converged: bool,
}

/// Accelerated projected gradient, one independent problem per column of
/// `M`, step `1 / σ_max(A)²`, momentum reset whenever the objective would
/// increase. Stops a column once
/// `‖g - P(g - ∇/L)‖ <= tol`.
pub fn simplex_least_squares(
    a: &DenseMatrix,
    m: &DenseMatrix,
    tol: f64,
    max_iters: usize,
) -> Result<AbundanceSolution> {
    solve_abundances(a, m, tol, max_iters, false)
}

fn solve_abundances(
    a: &DenseMatrix,
    m: &DenseMatrix,
    tol: f64,
    max_iters: usize,
    parallel: bool,
) -> Result<AbundanceSolution> {
    if a.rows() != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows, data has {}",
            a.rows(),
            m.rows()
        )));
    }
    let k = a.cols();
    let gram = a.transpose_matmul(a)?;
    let lipschitz = svd(a)?.sigma_max().powi(2);
    let problem = ColumnProblem {
        gram: &gram,
        k,
        step: if lipschitz > 0.0 { 1.0 / lipschitz } else { 0.0 },
        tol,
        max_iters,
    };

    let solve = |j: usize| {
        let atm: Vec<f64> = (0..k).map(|i| dot(a.col(i), m.col(j))).collect();
        problem.solve(&atm)
    };
    let columns: Vec<ColumnSolution> = if parallel {
        (0..m.cols()).into_par_iter().map(solve).collect()
    } else {
        (0..m.cols()).map(solve).collect()
    };

    let mut g = DenseMatrix::zeros(k, m.cols());
    let mut objective = 0.0;
    let mut iterations = 0;
    let mut converged = true;
    for (j, col) in columns.into_iter().enumerate() {
        g.col_mut(j).copy_from_slice(&col.x);
        let mut residual = m.col(j).to_vec();
        for (i, &gi) in col.x.iter().enumerate() {
            axpy(-gi, a.col(i), &mut residual);
        }
        objective += dot(&residual, &residual);
        iterations = iterations.max(col.iterations);
        converged &= col.converged;
    }
    Ok(AbundanceSolution {
        g,
        objective,
        iterations,
        converged,
    })
}

struct ColumnProblem<'a> {
    gram: &'a DenseMatrix,
    k: usize,
    step: f64,
    tol: f64,
    max_iters: usize,
}

struct ColumnSolution {
    x: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl ColumnProblem<'_> {
    /// `f(c) - f(x)` for `f(x) = ‖m - A x‖²`, written as
    /// `(c - x)ᵀ(AᵀA(c + x) - 2Aᵀm)` so that `‖m‖²` never enters and small
    /// residuals do not cancel.
    fn increase(&self, c: &[f64], x: &[f64], atm: &[f64]) -> f64 {
        let sum: Vec<f64> = c.iter().zip(x).map(|(a, b)| a + b).collect();
        let gs = self.gram_times(&sum);
        c.iter()
            .zip(x)
            .zip(gs.iter().zip(atm))
            .map(|((ci, xi), (g, b))| (ci - xi) * (g - 2.0 * b))
            .sum()
    }

    fn gram_times(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                for (o, g) in out.iter_mut().zip(self.gram.col(i)) {
                    *o += xi * g;
                }
            }
        }
        out
    }

    /// Half-gradient `AᵀA x - Aᵀm`; the factor two is folded into the step.
    fn gradient(&self, x: &[f64], atm: &[f64]) -> Vec<f64> {
        let mut g = self.gram_times(x);
        g.iter_mut().zip(atm).for_each(|(gi, b)| *gi -= b);
        g
    }

    fn projected_step(&self, x: &[f64], atm: &[f64]) -> Vec<f64> {
        let g = self.gradient(x, atm);
        let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - self.step * gi).collect();
        simplex_project(&trial)
    }

    fn fixed_point_residual(&self, x: &[f64], atm: &[f64]) -> f64 {
        let p = self.projected_step(x, atm);
        x.iter()
            .zip(&p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn solve(&self, atm: &[f64]) -> ColumnSolution {
        let mut x = simplex_project(&vec![1.0 / self.k as f64; self.k]);
        let mut previous = x.clone();
        let mut momentum = 1.0_f64;
        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iters {
            if self.fixed_point_residual(&x, atm) <= self.tol {
                converged = true;
                break;
            }
            iterations += 1;
            let next_momentum = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
            let beta = (momentum - 1.0) / next_momentum;
            let y: Vec<f64> = x
                .iter()
                .zip(&previous)
                .map(|(xi, pi)| xi + beta * (xi - pi))
                .collect();
            let mut candidate = self.projected_step(&y, atm);
            if self.increase(&candidate, &x, atm) > 0.0 {
                // restart: a plain projected-gradient step never increases f
                momentum = 1.0;
                candidate = self.projected_step(&x, atm);
                if self.increase(&candidate, &x, atm) > 0.0 {
                    // rounding-level increase: stay put
                    candidate = x.clone();
                }
            } else {
                momentum = next_momentum;
            }
            previous = std::mem::replace(&mut x, candidate);
        }
        if !converged && self.fixed_point_residual(&x, atm) <= self.tol {
            converged = true;
        }
        ColumnSolution {
            x,
            iterations,
            converged,
        }
    }
}

/// Row ℓ1 norms of `G` paired with the matching entries of `indices`,
/// sorted by decreasing score; equal scores keep the order of `indices`.
pub fn outlier_score_report(g: &DenseMatrix, indices: &[usize]) -> Result<Vec<(usize, f64)>> {
    if g.rows() != indices.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weight rows for {} indices",
            g.rows(),
            indices.len()
        )));
    }
    let mut scores: Vec<(usize, f64)> = indices
        .iter()
        .enumerate()
        .map(|(row, &idx)| (idx, g.row(row).iter().map(|v| v.abs()).sum()))
        .collect();
    scores.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierExtraction {
    /// The `r` retained indices, highest score first.
    pub indices: Vec<usize>,
    /// Scores of every over-extracted index, highest first.
    pub scores: Vec<(usize, f64)>,
    /// The `r + t` columns found by the first stage (may be fewer on rank
    /// deficiency, as long as at least `r` were found).
    pub first_stage: ExtractionResult,
    pub abundances: AbundanceSolution,
}

impl OutlierExtraction {
    /// Extracted indices that were scored but not retained.
    pub fn discarded(&self) -> Vec<(usize, f64)> {
        self.scores[self.indices.len()..].to_vec()
    }
}

/// Extract `r` columns from a matrix containing up to `t` outlier columns.
pub fn extract_with_outliers(m: &DenseMatrix, opts: &OutlierOptions) -> Result<OutlierExtraction> {
    opts.validate(m)?;
    let wanted = opts.r + opts.t;
    let first_stage = match extract(m, &ExtractionOptions::new(wanted).selector(opts.selector)) {
        Ok(res) => res,
        Err(Error::RankDeficiency { found, indices, .. }) if found >= opts.r => {
            // keep whatever was found; scoring can still separate r columns
            ExtractionResult {
                step_scores: Vec::new(),
                residual_norms: Vec::new(),
                indices,
            }
        }
        Err(e) => return Err(e),
    };
    let basis = m.select_columns(&first_stage.indices)?;
    let tol = opts.qp_tol.unwrap_or(1e-8 * m.frobenius_norm());
    let abundances = solve_abundances(&basis, m, tol, opts.qp_max_iters, opts.parallel)?;
    let scores = outlier_score_report(&abundances.g, &first_stage.indices)?;
    let indices = scores.iter().take(opts.r).map(|&(idx, _)| idx).collect();
    Ok(OutlierExtraction {
        indices,
        scores,
        first_stage,
        abundances,
    })
}
