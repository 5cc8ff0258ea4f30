//! Dense column-major matrices and the numerical kernels shared by the
//! extraction algorithms: column norms, orthogonal-complement projections,
//! the rank-one norm-update identity, a one-sided Jacobi SVD and the
//! Euclidean projection onto the unit simplex `{x >= 0, sum(x) <= 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real matrix stored column by column.
///
/// Every constructor rejects empty shapes and non-finite entries, so code
/// holding a `DenseMatrix` can assume `rows >= 1`, `cols >= 1` and finite data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UncheckedMatrix")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct UncheckedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<UncheckedMatrix> for DenseMatrix {
    type Error = Error;

    fn try_from(m: UncheckedMatrix) -> Result<Self> {
        Self::new(m.rows, m.cols, m.data)
    }
}

impl DenseMatrix {
    /// Build from column-major `data`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!(
                "matrix must have at least one row and one column, got {rows}x{cols}"
            )));
        }
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::InvalidShape(format!("{rows}x{cols} overflows the address space")))?;
        if data.len() != expected {
            return Err(Error::InvalidShape(format!(
                "{rows}x{cols} matrix needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos % rows,
                col: pos / rows,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from row-major `data`.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::InvalidShape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        let mut col_major = vec![0.0; data.len()];
        for i in 0..rows {
            for j in 0..cols {
                col_major[j * rows + i] = data[i * cols + j];
            }
        }
        Self::new(rows, cols, col_major)
    }

    /// Build from a slice of rows, e.g. `&[vec![1.0, 0.0], vec![0.0, 1.0]]`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != ncols) {
            return Err(Error::InvalidShape("rows have different lengths".into()));
        }
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::from_row_major(nrows, ncols, &flat)
    }

    /// Build from a list of equally long columns.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, |c| c.as_ref().len());
        if columns.iter().any(|c| c.as_ref().len() != nrows) {
            return Err(Error::InvalidShape("columns have different lengths".into()));
        }
        let data = columns.iter().flat_map(|c| c.as_ref().iter().copied()).collect();
        Self::new(nrows, ncols, data)
    }

    /// All-zero matrix. Panics on an empty shape.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix shape {rows}x{cols}");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Column-major storage.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[col * self.rows + row] = value;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub(crate) fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.rows)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.data[i * self.cols + j] = self.data[j * self.rows + i];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let target = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, &b) in other.col(j).iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                axpy(b, self.col(k), target);
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`, computed without forming the transpose.
    pub fn transpose_matmul(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for j in 0..other.cols {
            let b = other.col(j);
            for i in 0..self.cols {
                out.data[j * self.cols + i] = dot(self.col(i), b);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { data, ..*self })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            data: self.data.iter().map(|v| v * factor).collect(),
            ..*self
        }
    }

    /// Copy of the listed columns, in the listed order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidShape("no columns selected".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.cols) {
            return Err(Error::DimensionMismatch(format!(
                "column index {bad} out of range for {} columns",
                self.cols
            )));
        }
        let data = indices
            .iter()
            .flat_map(|&j| self.col(j).iter().copied())
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: indices.len(),
            data,
        })
    }

    /// Horizontal concatenation `[a, b, ...]`.
    pub fn hconcat(blocks: &[&Self]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidShape("nothing to concatenate".into()))?;
        if blocks.iter().any(|b| b.rows != first.rows) {
            return Err(Error::DimensionMismatch(
                "blocks have different row counts".into(),
            ));
        }
        let data = blocks.iter().flat_map(|b| b.data.iter().copied()).collect();
        Ok(Self {
            rows: first.rows,
            cols: blocks.iter().map(|b| b.cols).sum(),
            data,
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Row-major copy, convenient for printing and CSV output.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.transpose().data
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Squared Euclidean norm of every column.
pub fn column_norms_sq(m: &DenseMatrix) -> Vec<f64> {
    m.columns().map(|c| dot(c, c)).collect()
}

/// `(I - u uᵀ / ‖u‖²) R`: removes from every column of `R` its component
/// along `u`.
pub fn project_out(r: &DenseMatrix, u: &[f64]) -> Result<DenseMatrix> {
    let mut out = r.clone();
    project_out_in_place(&mut out, u)?;
    Ok(out)
}

pub(crate) fn project_out_in_place(r: &mut DenseMatrix, u: &[f64]) -> Result<()> {
    if u.len() != r.rows {
        return Err(Error::DimensionMismatch(format!(
            "direction has length {}, matrix has {} rows",
            u.len(),
            r.rows
        )));
    }
    let norm_sq = dot(u, u);
    if norm_sq == 0.0 {
        return Err(Error::ZeroDirection);
    }
    for j in 0..r.cols {
        let col = r.col_mut(j);
        let coef = dot(u, col) / norm_sq;
        if coef != 0.0 {
            axpy(-coef, u, col);
        }
    }
    Ok(())
}

/// Squared norm of `v` after projecting onto the orthogonal complement of
/// `u`, from `‖v‖²`, `uᵀv` and `‖u‖²` alone.
///
/// Cancellation can make the difference slightly negative when `v` is
/// nearly parallel to `u`; the result is clamped at zero.
pub fn norm_sq_after_projection(norm_sq_v: f64, dot_uv: f64, norm_sq_u: f64) -> Result<f64> {
    if norm_sq_u == 0.0 {
        return Err(Error::ZeroDirection);
    }
    Ok((norm_sq_v - dot_uv * dot_uv / norm_sq_u).max(0.0))
}

/// Compact singular value decomposition `M = U diag(S) Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: DenseMatrix,
    /// Non-increasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// `cols x k` with orthonormal columns.
    pub v: DenseMatrix,
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    pub fn sigma_min(&self) -> f64 {
        *self.singular_values.last().expect("non-empty")
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            us.col_mut(j).iter_mut().for_each(|x| *x *= s);
        }
        us.matmul(&self.v.transpose()).expect("conformant factors")
    }
}

const JACOBI_MAX_SWEEPS: usize = 60;
const JACOBI_TOL: f64 = 1e-12;

/// One-sided (Hestenes) Jacobi SVD with cyclic sweeps.
///
/// Wide matrices are handled through their transpose so the rotations
/// always act on the shorter dimension.
pub fn svd(m: &DenseMatrix) -> Result<Svd> {
    if m.rows < m.cols {
        let t = svd_tall(&m.transpose())?;
        return Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    svd_tall(m)
}

fn svd_tall(m: &DenseMatrix) -> Result<Svd> {
    let (rows, n) = m.shape();
    let mut a = m.data.clone();
    let mut v = DenseMatrix::identity(n).data;
    let frob_sq: f64 = a.iter().map(|x| x * x).sum();
    // columns below this squared norm are rounding noise and are left alone
    let negligible = (f64::EPSILON * f64::EPSILON) * frob_sq * 1e-4;

    let mut converged = n == 1;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (head, tail) = a.split_at_mut(q * rows);
                let ap = &mut head[p * rows..(p + 1) * rows];
                let aq = &mut tail[..rows];
                let alpha = dot(ap, ap);
                let beta = dot(aq, aq);
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = dot(ap, aq);
                if gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(ap, aq, c, s);
                let (vhead, vtail) = v.split_at_mut(q * n);
                rotate(&mut vhead[p * n..(p + 1) * n], &mut vtail[..n], c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure {
            sweeps: JACOBI_MAX_SWEEPS,
        });
    }

    let norms: Vec<f64> = a.chunks_exact(rows).map(norm2).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let sigma_max = norms[order[0]];
    let rank_floor = sigma_max * (rows.max(n) as f64) * f64::EPSILON;
    let mut u = DenseMatrix::zeros(rows, n);
    let mut vs = DenseMatrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        singular_values.push(s);
        vs.col_mut(k).copy_from_slice(&v[j * n..(j + 1) * n]);
        if s > rank_floor && s > 0.0 {
            let src = &a[j * rows..(j + 1) * rows];
            for (dst, x) in u.col_mut(k).iter_mut().zip(src) {
                *dst = x / s;
            }
        } else {
            deficient.push(k);
        }
    }
    complete_orthonormal_columns(&mut u, &deficient);
    Ok(Svd {
        u,
        singular_values,
        v: vs,
    })
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (a, b) = (*xi, *yi);
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// Fill the listed (zero) columns of `u` with unit vectors orthogonal to
/// every other column, drawing candidates from the standard basis.
fn complete_orthonormal_columns(u: &mut DenseMatrix, missing: &[usize]) {
    let rows = u.rows;
    let mut candidate = 0;
    for &k in missing {
        loop {
            assert!(candidate < rows, "standard basis exhausted");
            let mut e = vec![0.0; rows];
            e[candidate] = 1.0;
            candidate += 1;
            for _pass in 0..2 {
                for j in 0..u.cols {
                    if j == k {
                        continue;
                    }
                    let coef = dot(u.col(j), &e);
                    axpy(-coef, u.col(j), &mut e);
                }
            }
            let norm = norm2(&e);
            if norm > 0.5 {
                for (dst, x) in u.col_mut(k).iter_mut().zip(&e) {
                    *dst = x / norm;
                }
                break;
            }
        }
    }
}

/// Singular values only, non-increasing.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.singular_values)
}

/// Orthonormalize the columns of `q` in place with modified Gram–Schmidt
/// plus one re-orthogonalization pass. Columns that collapse numerically
/// are zeroed and reported as `false` in the returned mask.
pub(crate) fn orthonormalize_columns(q: &mut DenseMatrix) -> Vec<bool> {
    let mut kept = vec![true; q.cols];
    for j in 0..q.cols {
        let original = norm2(q.col(j));
        for _pass in 0..2 {
            for i in 0..j {
                if !kept[i] {
                    continue;
                }
                let (head, tail) = q.data.split_at_mut(j * q.rows);
                let qi = &head[i * q.rows..(i + 1) * q.rows];
                let qj = &mut tail[..q.rows];
                let coef = dot(qi, qj);
                axpy(-coef, qi, qj);
            }
        }
        let norm = norm2(q.col(j));
        if norm > 1e-10 * original && norm > 0.0 {
            q.col_mut(j).iter_mut().for_each(|x| *x /= norm);
        } else {
            q.col_mut(j).iter_mut().for_each(|x| *x = 0.0);
            kept[j] = false;
        }
    }
    kept
}

/// Euclidean projection onto `{x >= 0, sum(x) <= 1}`.
///
/// Clips to the nonnegative orthant first; when the clipped vector already
/// sums to at most one it is the answer, otherwise the sum constraint is
/// active and the sort-based projection onto `{x >= 0, sum(x) = 1}` applies.
pub fn simplex_project(x: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return clipped;
    }
    let mut sorted = clipped.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &value) in sorted.iter().enumerate() {
        cumulative += value;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if value - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    clipped.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// Geometry of the columns of `W` that drives the robustness bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WGeometry {
    /// Largest column norm `K(W)`.
    pub k_max: f64,
    /// Smallest column norm `ν(W)`.
    pub nu: f64,
    /// Smallest pairwise column distance `γ(W)`; infinite for one column.
    pub gamma: f64,
    /// `min(ν, γ/√2)`.
    pub omega: f64,
    /// `σ_r(W)` with `r` the number of columns (zero when `rows < cols`).
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `σ_max / σ_min`, infinite for rank-deficient `W`.
    pub kappa: f64,
}

impl WGeometry {
    pub fn of(w: &DenseMatrix) -> Result<Self> {
        let norms: Vec<f64> = column_norms_sq(w).into_iter().map(f64::sqrt).collect();
        let k_max = norms.iter().copied().fold(0.0, f64::max);
        let nu = norms.iter().copied().fold(f64::INFINITY, f64::min);
        let mut gamma = f64::INFINITY;
        for i in 0..w.cols {
            for j in i + 1..w.cols {
                let d: f64 = w
                    .col(i)
                    .iter()
                    .zip(w.col(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                gamma = gamma.min(d);
            }
        }
        let omega = nu.min(gamma / std::f64::consts::SQRT_2);
        let s = singular_values(w)?;
        let sigma_max = s[0];
        let sigma_min = if w.rows < w.cols { 0.0 } else { *s.last().unwrap() };
        let kappa = if sigma_min > 0.0 {
            sigma_max / sigma_min
        } else {
            f64::INFINITY
        };
        Ok(Self {
            k_max,
            nu,
            gamma,
            omega,
            sigma_min,
            sigma_max,
            kappa,
        })
    }
}
