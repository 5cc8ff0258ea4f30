//! Recursive extraction of the columns spanning a separable matrix.
//!
//! Each step selects the residual column maximizing the selector `f`,
//! then projects every residual column onto the orthogonal complement of
//! the selected one. With `f = ‖·‖₂²` this is the successive projection
//! algorithm; the `FastUpdate` variant never forms the residual and
//! instead downdates the column norms through the identity
//! `‖(I - qqᵀ)v‖² = ‖v‖² - (qᵀv)²` for unit `q`.
//!
//! Ties (relative score gap below `1e-12`) are broken by the value of `f`
//! on the columns of the input matrix, then by the smallest index. When
//! `l1_normalize` is set, "input matrix" means the normalized matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    column_norms_sq, dot, norm2, norm_sq_after_projection, project_out_in_place, DenseMatrix, WGeometry,
};
use crate::selectors::SelectorSpec;

const TIE_RELATIVE: f64 = 1e-12;
const DEFAULT_RESIDUAL_RELATIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Materializes and updates the residual matrix.
    Naive,
    /// Norm downdating; only valid for the squared ℓ2 selector.
    FastUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOptions {
    pub target_r: Option<usize>,
    /// Absolute stopping threshold on the largest residual column norm.
    /// Unset means `1e-12` times the largest input column norm.
    pub residual_tol: Option<f64>,
    pub selector: SelectorSpec,
    pub variant: Variant,
    pub l1_normalize: bool,
}

impl ExtractionOptions {
    /// Extract `r` columns with the squared ℓ2 selector.
    pub fn new(r: usize) -> Self {
        Self {
            target_r: Some(r),
            residual_tol: None,
            selector: SelectorSpec::L2,
            variant: Variant::Naive,
            l1_normalize: false,
        }
    }

    /// Extract until the residual norm drops to `tol`.
    pub fn until_residual(tol: f64) -> Self {
        Self {
            target_r: None,
            residual_tol: Some(tol),
            ..Self::new(0)
        }
    }

    pub fn selector(mut self, selector: SelectorSpec) -> Self {
        self.selector = selector;
        self
    }

    pub fn variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn l1_normalize(mut self, on: bool) -> Self {
        self.l1_normalize = on;
        self
    }

    pub fn residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = Some(tol);
        self
    }

    fn validate(&self, m: &DenseMatrix) -> Result<()> {
        if self.target_r.is_none() && self.residual_tol.is_none() {
            return Err(Error::InvalidOptions(
                "either a target rank or a residual tolerance is required".into(),
            ));
        }
        if let Some(tol) = self.residual_tol {
            if !(tol >= 0.0) || !tol.is_finite() {
                return Err(Error::InvalidOptions(format!(
                    "residual tolerance must be a nonnegative number, got {tol}"
                )));
            }
        }
        if let Some(r) = self.target_r {
            let limit = m.rows().min(m.cols());
            if r > limit {
                return Err(Error::InvalidOptions(format!(
                    "cannot extract {r} columns from a {}x{} matrix",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        if self.variant == Variant::FastUpdate && !self.selector.is_squared_l2() {
            return Err(Error::InvalidOptions(
                "the fast norm-update variant requires the l2 selector".into(),
            ));
        }
        Ok(())
    }
}

/// Indices (0-based, in extraction order) plus per-step diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub indices: Vec<usize>,
    /// Selector value of the chosen residual column at each step.
    pub step_scores: Vec<f64>,
    /// Largest residual column norm after each step's projection.
    pub residual_norms: Vec<f64>,
}

impl ExtractionResult {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices shifted to 1-based numbering.
    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }
}

/// Run the recursive extraction on `m`.
pub fn extract(m: &DenseMatrix, opts: &ExtractionOptions) -> Result<ExtractionResult> {
    opts.validate(m)?;
    let normalized;
    let input = if opts.l1_normalize {
        normalized = l1_normalize_columns(m).0;
        &normalized
    } else {
        m
    };
    let initial_max = column_norms_sq(input).into_iter().fold(0.0_f64, f64::max).sqrt();
    let tol = opts
        .residual_tol
        .unwrap_or(DEFAULT_RESIDUAL_RELATIVE_TOL * initial_max);
    let limit = input.rows().min(input.cols());
    let wanted = opts.target_r.unwrap_or(limit).min(limit);
    let original_scores: Vec<f64> = input.columns().map(|c| opts.selector.evaluate(c)).collect();

    let result = match opts.variant {
        Variant::Naive => run_naive(input, &opts.selector, &original_scores, wanted, tol)?,
        Variant::FastUpdate => run_fast(input, &original_scores, wanted, tol)?,
    };
    if let Some(r) = opts.target_r {
        if result.indices.len() < r {
            return Err(Error::RankDeficiency {
                found: result.indices.len(),
                requested: r,
                indices: result.indices,
            });
        }
    }
    Ok(result)
}

/// Squared-ℓ2 extraction of `r` columns with norm downdating.
pub fn extract_fast(m: &DenseMatrix, r: usize) -> Result<ExtractionResult> {
    extract(m, &ExtractionOptions::new(r).variant(Variant::FastUpdate))
}

fn run_naive(
    m: &DenseMatrix,
    selector: &SelectorSpec,
    original_scores: &[f64],
    wanted: usize,
    tol: f64,
) -> Result<ExtractionResult> {
    let mut residual = m.clone();
    let mut taken = vec![false; m.cols()];
    let mut out = ExtractionResult {
        indices: Vec::with_capacity(wanted),
        step_scores: Vec::with_capacity(wanted),
        residual_norms: Vec::with_capacity(wanted),
    };
    let mut max_norm = max_column_norm(&residual);
    while out.indices.len() < wanted && max_norm > tol {
        let scores: Vec<f64> = residual.columns().map(|c| selector.evaluate(c)).collect();
        let Some(pick) = select(&scores, original_scores, &taken) else {
            break;
        };
        if !(scores[pick] > 0.0) {
            break;
        }
        let direction = residual.col(pick).to_vec();
        project_out_in_place(&mut residual, &direction)?;
        taken[pick] = true;
        max_norm = max_column_norm(&residual);
        out.indices.push(pick);
        out.step_scores.push(scores[pick]);
        out.residual_norms.push(max_norm);
    }
    Ok(out)
}

fn run_fast(m: &DenseMatrix, original_scores: &[f64], wanted: usize, tol: f64) -> Result<ExtractionResult> {
    let mut norms_sq = column_norms_sq(m);
    let mut taken = vec![false; m.cols()];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(wanted);
    let mut out = ExtractionResult {
        indices: Vec::with_capacity(wanted),
        step_scores: Vec::with_capacity(wanted),
        residual_norms: Vec::with_capacity(wanted),
    };
    let mut max_norm = norms_sq.iter().copied().fold(0.0, f64::max).sqrt();
    while out.indices.len() < wanted && max_norm > tol {
        let Some(pick) = select(&norms_sq, original_scores, &taken) else {
            break;
        };
        if !(norms_sq[pick] > 0.0) {
            break;
        }
        // residual direction of the chosen column, orthonormalized against
        // the stored basis (modified Gram–Schmidt, two passes)
        let mut q = m.col(pick).to_vec();
        for _pass in 0..2 {
            for b in &basis {
                let coef = dot(b, &q);
                q.iter_mut().zip(b).for_each(|(x, y)| *x -= coef * y);
            }
        }
        let len = norm2(&q);
        if !(len > 0.0) {
            break;
        }
        q.iter_mut().for_each(|x| *x /= len);

        let score = norms_sq[pick];
        for (j, col) in m.columns().enumerate() {
            norms_sq[j] = norm_sq_after_projection(norms_sq[j], dot(&q, col), 1.0)?;
        }
        taken[pick] = true;
        norms_sq[pick] = 0.0;
        basis.push(q);
        max_norm = norms_sq.iter().copied().fold(0.0, f64::max).sqrt();
        out.indices.push(pick);
        out.step_scores.push(score);
        out.residual_norms.push(max_norm);
    }
    Ok(out)
}

fn max_column_norm(m: &DenseMatrix) -> f64 {
    column_norms_sq(m).into_iter().fold(0.0, f64::max).sqrt()
}

/// Argmax of `scores` over untaken columns with the two-level tie rule.
fn select(scores: &[f64], original: &[f64], taken: &[bool]) -> Option<usize> {
    let best = scores
        .iter()
        .zip(taken)
        .filter(|(_, &t)| !t)
        .map(|(&s, _)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return None;
    }
    let near = |value: f64, top: f64| top - value <= TIE_RELATIVE * top.abs();
    let tied: Vec<usize> = (0..scores.len())
        .filter(|&j| !taken[j] && near(scores[j], best))
        .collect();
    if tied.len() == 1 {
        return Some(tied[0]);
    }
    let best_original = tied
        .iter()
        .map(|&j| original[j])
        .fold(f64::NEG_INFINITY, f64::max);
    tied.into_iter().find(|&j| near(original[j], best_original))
}

/// Divide each nonzero column by its ℓ1 norm. Zero columns are kept with
/// scale 1. Returns the normalized matrix and the divisors.
pub fn l1_normalize_columns(m: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
    let mut out = m.clone();
    let mut scales = Vec::with_capacity(m.cols());
    for j in 0..m.cols() {
        let l1: f64 = m.col(j).iter().map(|v| v.abs()).sum();
        let scale = if l1 > 0.0 { l1 } else { 1.0 };
        out.col_mut(j).iter_mut().for_each(|v| *v /= scale);
        scales.push(scale);
    }
    (out, scales)
}

/// Noise level below which extraction is guaranteed to land within
/// `eps * err_factor` of the columns of `W`, for the given selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    /// Largest admissible per-column noise norm `ε`.
    pub eps_max: f64,
    /// `1 + 80 K(W)² L / (σ_r(W)² μ)`; the recovery error is at most
    /// `ε` times this factor.
    pub err_factor: f64,
    pub geometry: WGeometry,
    pub mu: f64,
    pub lipschitz: f64,
}

/// Evaluate the robustness bound
/// `ε < σ_r min(1/(2√(r-1)), ¼√(μ/L)) / (1 + 80 K² L / (σ_r² μ))`.
///
/// The selector's local constants are taken on the ball of radius `K(W)`
/// unless the selector carries its own radius.
pub fn theorem_bound(w: &DenseMatrix, selector: &SelectorSpec) -> Result<TheoremBound> {
    let geometry = WGeometry::of(w)?;
    let r = w.cols();
    let sigma = geometry.sigma_min;
    if !(sigma > 1e-300) || r > w.rows() {
        return Err(Error::RankDeficiency {
            found: w.rows().min(r),
            requested: r,
            indices: Vec::new(),
        });
    }
    let radius = selector.radius.unwrap_or(geometry.k_max);
    let c = selector.constants(radius, w.rows());
    let err_factor = 1.0 + 80.0 * geometry.k_max.powi(2) * c.lipschitz / (sigma * sigma * c.mu);
    let dimension_term = if r >= 2 {
        1.0 / (2.0 * ((r - 1) as f64).sqrt())
    } else {
        f64::INFINITY
    };
    let conditioning_term = 0.25 * (c.mu / c.lipschitz).sqrt();
    Ok(TheoremBound {
        eps_max: sigma * dimension_term.min(conditioning_term) / err_factor,
        err_factor,
        geometry,
        mu: c.mu,
        lipschitz: c.lipschitz,
    })
}
