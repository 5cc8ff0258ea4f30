//! Comparison algorithms: pure pixel index (PPI), vertex component
//! analysis (VCA) and simplex volume maximization (SiVM).
//!
//! All randomness comes from `BaselineOptions::seed`, so results are
//! reproducible given `(input, seed)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, orthonormalize_columns, svd, DenseMatrix};
use crate::rng::{tags, Stream};
use crate::spa::ExtractionResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineOptions {
    pub r: usize,
    pub seed: u64,
    /// Number of random directions drawn by PPI.
    pub ppi_k: usize,
    /// Reduce the data with PCA before running VCA.
    pub vca_use_pca: bool,
}

impl BaselineOptions {
    pub fn new(r: usize, seed: u64) -> Self {
        Self {
            r,
            seed,
            ppi_k: 1000,
            vca_use_pca: true,
        }
    }

    fn validate(&self, m: &DenseMatrix, max_r: usize) -> Result<()> {
        if self.r == 0 {
            return Err(Error::InvalidOptions("r must be at least 1".into()));
        }
        if self.ppi_k == 0 {
            return Err(Error::InvalidOptions("ppi_k must be at least 1".into()));
        }
        if self.r > max_r {
            return Err(Error::InvalidOptions(format!(
                "cannot extract {} columns from a {}x{} matrix",
                self.r,
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }
}

/// First index attaining the maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}

/// First index attaining the minimum.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = j;
        }
    }
    best
}

/// Raw PPI vote counts: for each of `ppi_k` uniform directions `c`, the
/// columns attaining the max and the min of `cᵀM` each get one vote (one
/// vote in total when they coincide). Equal values go to the smallest index.
pub fn ppi_scores(m: &DenseMatrix, opts: &BaselineOptions) -> Result<Vec<u64>> {
    opts.validate(m, m.cols())?;
    let mut rng = Stream::derived(opts.seed, &[tags::ALGORITHM]);
    let mut scores = vec![0u64; m.cols()];
    let mut projections = vec![0.0; m.cols()];
    for _ in 0..opts.ppi_k {
        let c = rng.unit_vector(m.rows());
        for (p, col) in projections.iter_mut().zip(m.columns()) {
            *p = dot(&c, col);
        }
        let hi = argmax(&projections);
        let lo = argmin(&projections);
        scores[hi] += 1;
        if lo != hi {
            scores[lo] += 1;
        }
    }
    Ok(scores)
}

/// Pure pixel index: the `r` columns with the most votes, ties to the
/// smallest index. `step_scores` holds the vote counts.
pub fn ppi(m: &DenseMatrix, opts: &BaselineOptions) -> Result<ExtractionResult> {
    let scores = ppi_scores(m, opts)?;
    let mut order: Vec<usize> = (0..m.cols()).collect();
    order.sort_by(|&a, &b| scores[b].cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(opts.r);
    Ok(ExtractionResult {
        step_scores: order.iter().map(|&j| scores[j] as f64).collect(),
        residual_norms: Vec::new(),
        indices: order,
    })
}

/// Vertex component analysis.
///
/// With `vca_use_pca`, the mean-centered data are projected onto their top
/// `r - 1` principal directions and a constant coordinate equal to the
/// largest projected norm is appended, giving `r`-dimensional points that
/// keep the affine structure. Then, `r` times: draw one Gaussian direction,
/// project it onto the orthogonal complement of the columns extracted so
/// far, and take the column maximizing `|cᵀy|`.
pub fn vca(m: &DenseMatrix, opts: &BaselineOptions) -> Result<ExtractionResult> {
    opts.validate(m, m.rows().min(m.cols()))?;
    let data = if opts.vca_use_pca {
        pca_reduce(m, opts.r, opts.seed)?
    } else {
        m.clone()
    };
    let dim = data.rows();
    let mut rng = Stream::derived(opts.seed, &[tags::ALGORITHM]);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(opts.r);
    let mut taken = vec![false; data.cols()];
    let mut out = ExtractionResult {
        indices: Vec::with_capacity(opts.r),
        step_scores: Vec::with_capacity(opts.r),
        residual_norms: Vec::new(),
    };
    let scale = data.columns().map(norm2).fold(0.0, f64::max);
    while out.indices.len() < opts.r {
        let mut c: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
        for _pass in 0..2 {
            for b in &basis {
                let coef = dot(b, &c);
                c.iter_mut().zip(b).for_each(|(x, y)| *x -= coef * y);
            }
        }
        let len = norm2(&c);
        if !(len > 1e-12) {
            break;
        }
        c.iter_mut().for_each(|x| *x /= len);
        let mut pick = None;
        let mut best = 0.0;
        for (j, col) in data.columns().enumerate() {
            if taken[j] {
                continue;
            }
            let v = dot(&c, col).abs();
            if v > best {
                best = v;
                pick = Some(j);
            }
        }
        let Some(pick) = pick.filter(|_| best > 1e-12 * scale) else {
            break;
        };
        // extend the orthonormal basis with the chosen point
        let mut q = data.col(pick).to_vec();
        for _pass in 0..2 {
            for b in &basis {
                let coef = dot(b, &q);
                q.iter_mut().zip(b).for_each(|(x, y)| *x -= coef * y);
            }
        }
        let qlen = norm2(&q);
        if !(qlen > 1e-12 * scale) {
            break;
        }
        q.iter_mut().for_each(|x| *x /= qlen);
        basis.push(q);
        taken[pick] = true;
        out.indices.push(pick);
        out.step_scores.push(best);
    }
    if out.indices.len() < opts.r {
        return Err(Error::RankDeficiency {
            found: out.indices.len(),
            requested: opts.r,
            indices: out.indices,
        });
    }
    Ok(out)
}

/// Largest matrix side handled by the exact SVD inside PCA; beyond it a
/// seeded subspace iteration finds the leading directions.
const EXACT_PCA_LIMIT: usize = 64;
const SUBSPACE_OVERSAMPLING: usize = 10;
const SUBSPACE_POWER_STEPS: usize = 6;

fn pca_reduce(m: &DenseMatrix, r: usize, seed: u64) -> Result<DenseMatrix> {
    let (rows, cols) = m.shape();
    let mut mean = vec![0.0; rows];
    for col in m.columns() {
        mean.iter_mut().zip(col).for_each(|(a, b)| *a += b);
    }
    mean.iter_mut().for_each(|a| *a /= cols as f64);
    let mut centered = m.clone();
    for j in 0..cols {
        centered
            .col_mut(j)
            .iter_mut()
            .zip(&mean)
            .for_each(|(x, mu)| *x -= mu);
    }

    let components = (r - 1).min(rows).min(cols);
    let mut reduced = DenseMatrix::zeros(components + 1, cols);
    if components > 0 {
        let directions = leading_left_singular_vectors(&centered, components, seed)?;
        let coords = directions.transpose_matmul(&centered)?;
        for j in 0..cols {
            reduced.col_mut(j)[..components].copy_from_slice(coords.col(j));
        }
    }
    let lift = reduced.columns().map(norm2).fold(0.0, f64::max).max(1.0);
    for j in 0..cols {
        reduced.set(components, j, lift);
    }
    Ok(reduced)
}

fn leading_left_singular_vectors(a: &DenseMatrix, k: usize, seed: u64) -> Result<DenseMatrix> {
    let (rows, cols) = a.shape();
    if rows.min(cols) <= EXACT_PCA_LIMIT {
        let u = svd(a)?.u;
        let keep: Vec<usize> = (0..k.min(u.cols())).collect();
        return u.select_columns(&keep);
    }
    let block = (k + SUBSPACE_OVERSAMPLING).min(rows).min(cols);
    let mut rng = Stream::derived(seed, &[tags::PCA]);
    let omega = DenseMatrix::new(cols, block, (0..cols * block).map(|_| rng.normal()).collect())?;
    let mut q = a.matmul(&omega)?;
    orthonormalize_columns(&mut q);
    for _ in 0..SUBSPACE_POWER_STEPS {
        let mut z = a.transpose_matmul(&q)?;
        orthonormalize_columns(&mut z);
        q = a.matmul(&z)?;
        orthonormalize_columns(&mut q);
    }
    // Rayleigh–Ritz on the captured subspace
    let small = q.transpose_matmul(a)?;
    let s = svd(&small)?;
    let rotated = q.matmul(&s.u)?;
    let keep: Vec<usize> = (0..k.min(rotated.cols())).collect();
    rotated.select_columns(&keep)
}

/// Simplex volume maximization with a distance-geometry volume proxy.
///
/// Seeds the selection with a far-apart pair: `a`, the column farthest from
/// column 0, and `b`, the column farthest from `a`. It then repeatedly adds
/// the column maximizing `Σ_{i∈S} ln(d(m_j, m_i)² + η)`, `η = 1e-12`, over
/// the selected set `S`. If all pairwise distances between vertices are
/// equal, this score grows with the simplex volume.
pub fn sivm(m: &DenseMatrix, opts: &BaselineOptions) -> Result<ExtractionResult> {
    opts.validate(m, m.cols())?;

    const ETA: f64 = 1e-12;
    let dist_sq_to = |i: usize| -> Vec<f64> {
        let anchor = m.col(i);
        m.columns()
            .map(|c| c.iter().zip(anchor).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect()
    };
    let a = argmax(&dist_sq_to(0));
    let mut taken = vec![false; m.cols()];
    let mut score = vec![0.0; m.cols()];
    let mut out = ExtractionResult {
        indices: Vec::with_capacity(opts.r),
        step_scores: Vec::with_capacity(opts.r),
        residual_norms: Vec::new(),
    };
    let mut next = Some(a);
    while let Some(pick) = next {
        taken[pick] = true;
        out.indices.push(pick);
        out.step_scores.push(score[pick]);
        if out.indices.len() == opts.r {
            break;
        }
        for (s, d) in score.iter_mut().zip(dist_sq_to(pick)) {
            *s += (d + ETA).ln();
        }
        next = None;
        for j in 0..m.cols() {
            if !taken[j] && next.map_or(true, |p: usize| score[j] > score[p]) {
                next = Some(j);
            }
        }
    }
    Ok(out)
}
