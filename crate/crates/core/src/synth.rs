//! Synthetic noisy separable matrices.
//!
//! Four experiment suites combine a generator for `W` with a generator for
//! `(H, N)`:
//!
//! | exp | `W`              | `H`, `N`                        |
//! |-----|------------------|---------------------------------|
//! | 1   | uniform          | middle points, outward noise    |
//! | 2   | uniform          | Dirichlet mixtures, Gaussian    |
//! | 3   | ill-conditioned  | middle points, outward noise    |
//! | 4   | ill-conditioned  | Dirichlet mixtures, Gaussian    |
//!
//! Everything is a pure function of the seed. Sub-streams are split by tag
//! (`W`, mixing weights, noise) so that changing `delta` leaves `W` and `H`
//! untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm2, svd, DenseMatrix};
use crate::rng::{tags, Stream};

/// One instance of an experiment suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub exp_id: u8,
    pub m: usize,
    pub r: usize,
    pub delta: f64,
    pub seed: u64,
    /// Dirichlet columns for experiments 2 and 4; `None` means `10 r`.
    #[serde(default)]
    pub n_mix: Option<usize>,
}

impl ExperimentConfig {
    /// Full-size setting: `m = 200`, `r = 20`.
    pub fn full(exp_id: u8, delta: f64, seed: u64) -> Self {
        Self {
            exp_id,
            m: 200,
            r: 20,
            delta,
            seed,
            n_mix: None,
        }
    }

    /// Reduced setting with the same structure: `m = 40`, `r = 8`.
    pub fn desk(exp_id: u8, delta: f64, seed: u64) -> Self {
        Self {
            m: 40,
            r: 8,
            ..Self::full(exp_id, delta, seed)
        }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn ill_conditioned(&self) -> bool {
        matches!(self.exp_id, 3 | 4)
    }

    pub fn dirichlet(&self) -> bool {
        matches!(self.exp_id, 2 | 4)
    }

    pub fn mixtures(&self) -> usize {
        self.n_mix.unwrap_or(10 * self.r)
    }

    /// Number of columns of the generated matrix.
    pub fn n(&self) -> usize {
        if self.dirichlet() {
            2 * self.r + self.mixtures()
        } else {
            self.r + self.r * self.r.saturating_sub(1) / 2
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.exp_id) {
            return Err(Error::InvalidOptions(format!(
                "experiment id must be 1, 2, 3 or 4, got {}",
                self.exp_id
            )));
        }
        if self.r < 2 {
            return Err(Error::InvalidOptions("r must be at least 2".into()));
        }
        if self.m < self.r {
            return Err(Error::InvalidOptions(format!(
                "m = {} is smaller than r = {}",
                self.m, self.r
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidOptions(format!(
                "delta must be finite and nonnegative, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// The clean factors, the noise, and which columns of `M` are pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub w: DenseMatrix,
    pub h: DenseMatrix,
    pub n: DenseMatrix,
    /// Endmember index for each pure column of `M`, `None` for mixtures.
    pub pure_column_map: Vec<Option<usize>>,
}

impl GroundTruth {
    pub fn r(&self) -> usize {
        self.w.cols()
    }

    /// Largest column norm of the noise matrix.
    pub fn max_noise_norm(&self) -> f64 {
        self.n.columns().map(norm2).fold(0.0, f64::max)
    }
}

/// `m x r` with i.i.d. uniform `[0, 1)` entries.
pub fn gen_w_uniform(m: usize, r: usize, seed: u64) -> DenseMatrix {
    let mut rng = Stream::derived(seed, &[tags::W_FACTOR]);
    let data = (0..m * r).map(|_| rng.uniform()).collect();
    DenseMatrix::new(m, r, data).expect("shape matches data")
}

/// `U diag(1, a, ..., a^(r-1)) Vᵀ` with `a^(r-1) = 1e-3`, where `U`, `V`
/// come from the thin SVD of a uniform draw. Condition number exactly 1000.
pub fn gen_w_illconditioned(m: usize, r: usize, seed: u64) -> Result<DenseMatrix> {
    if m < r || r == 0 {
        return Err(Error::InvalidShape(format!(
            "need m >= r >= 1, got m = {m}, r = {r}"
        )));
    }
    let base = svd(&gen_w_uniform(m, r, seed))?;
    let ratio = if r > 1 {
        10f64.powf(-3.0 / (r - 1) as f64)
    } else {
        1.0
    };
    let mut scaled_u = base.u.clone();
    for k in 0..r {
        let s = ratio.powi(k as i32);
        scaled_u.col_mut(k).iter_mut().for_each(|x| *x *= s);
    }
    scaled_u.matmul(&base.v.transpose())
}

/// `H = [I, H']` where `H'` holds every half-half pair `(e_i + e_j) / 2`,
/// `i < j`, in lexicographic order. Pure columns are exact; the mixtures are
/// pushed away from the centroid `w̄` of `W`: `n_i = delta (m_i - w̄)`.
pub fn gen_middle_points(w: &DenseMatrix, delta: f64) -> Result<(DenseMatrix, GroundTruth)> {
    check_delta(delta)?;
    let (m, r) = w.shape();
    let pairs = r * r.saturating_sub(1) / 2;
    let mut h = DenseMatrix::zeros(r, r + pairs);
    for k in 0..r {
        h.set(k, k, 1.0);
    }
    let mut col = r;
    for i in 0..r {
        for j in i + 1..r {
            h.set(i, col, 0.5);
            h.set(j, col, 0.5);
            col += 1;
        }
    }
    let clean = w.matmul(&h)?;

    let mut centroid = vec![0.0; m];
    for c in w.columns() {
        centroid.iter_mut().zip(c).for_each(|(a, b)| *a += b / r as f64);
    }
    let mut noise = DenseMatrix::zeros(m, r + pairs);
    for j in r..r + pairs {
        let src = clean.col(j);
        noise
            .col_mut(j)
            .iter_mut()
            .zip(src.iter().zip(&centroid))
            .for_each(|(n, (x, c))| *n = delta * (x - c));
    }
    let noisy = clean.add(&noise)?;
    let pure_column_map = (0..r + pairs).map(|j| (j < r).then_some(j)).collect();
    Ok((
        noisy,
        GroundTruth {
            w: w.clone(),
            h,
            n: noise,
            pure_column_map,
        },
    ))
}

/// `H = [I, I, H']` with `n_mix` Dirichlet columns sharing one parameter
/// vector drawn uniformly from `(0, 1]`; every noise entry is
/// `delta` times a standard normal.
pub fn gen_dirichlet_gaussian(
    w: &DenseMatrix,
    n_mix: usize,
    delta: f64,
    seed: u64,
) -> Result<(DenseMatrix, GroundTruth)> {
    check_delta(delta)?;
    let (m, r) = w.shape();
    let n = 2 * r + n_mix;
    let mut h = DenseMatrix::zeros(r, n);
    for k in 0..r {
        h.set(k, k, 1.0);
        h.set(k, r + k, 1.0);
    }
    let mut mixing = Stream::derived(seed, &[tags::MIXING]);
    // 1 - U keeps the shape parameters away from zero
    let shape: Vec<f64> = (0..r).map(|_| 1.0 - mixing.uniform()).collect();
    for j in 2 * r..n {
        h.col_mut(j).copy_from_slice(&mixing.dirichlet(&shape));
    }
    let clean = w.matmul(&h)?;

    let mut noise_rng = Stream::derived(seed, &[tags::NOISE]);
    let noise_data = (0..m * n).map(|_| delta * noise_rng.normal()).collect();
    let noise = DenseMatrix::new(m, n, noise_data)?;
    let noisy = clean.add(&noise)?;
    let pure_column_map = (0..n).map(|j| (j < 2 * r).then_some(j % r)).collect();
    Ok((
        noisy,
        GroundTruth {
            w: w.clone(),
            h,
            n: noise,
            pure_column_map,
        },
    ))
}

fn check_delta(delta: f64) -> Result<()> {
    if delta >= 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidOptions(format!(
            "delta must be finite and nonnegative, got {delta}"
        )))
    }
}

/// `W` for a configuration, independent of `delta`.
pub fn generate_w(config: &ExperimentConfig) -> Result<DenseMatrix> {
    config.validate()?;
    if config.ill_conditioned() {
        gen_w_illconditioned(config.m, config.r, config.seed)
    } else {
        Ok(gen_w_uniform(config.m, config.r, config.seed))
    }
}

/// The noisy matrix and its ground truth.
pub fn generate(config: &ExperimentConfig) -> Result<(DenseMatrix, GroundTruth)> {
    let w = generate_w(config)?;
    if config.dirichlet() {
        gen_dirichlet_gaussian(&w, config.mixtures(), config.delta, config.seed)
    } else {
        gen_middle_points(&w, config.delta)
    }
}

pub const SIDECAR_SCHEMA: &str = "sepnmf.instance/1";

/// JSON companion of an exported instance. Column indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSidecar {
    pub schema: String,
    pub config: ExperimentConfig,
    pub rows: usize,
    pub cols: usize,
    /// Endmember (1-based) for each column, `null` for mixtures.
    pub pure_column_map: Vec<Option<usize>>,
    /// 1-based column indices of each endmember's pure copies.
    pub pure_columns: Vec<Vec<usize>>,
    pub max_noise_norm: f64,
}

impl InstanceSidecar {
    pub fn new(config: &ExperimentConfig, truth: &GroundTruth) -> Self {
        let mut pure_columns = vec![Vec::new(); truth.r()];
        for (j, k) in truth.pure_column_map.iter().enumerate() {
            if let Some(k) = k {
                pure_columns[*k].push(j + 1);
            }
        }
        Self {
            schema: SIDECAR_SCHEMA.to_string(),
            config: *config,
            rows: truth.w.rows(),
            cols: truth.pure_column_map.len(),
            pure_column_map: truth.pure_column_map.iter().map(|k| k.map(|k| k + 1)).collect(),
            pure_columns,
            max_noise_norm: truth.max_noise_norm(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar serializes")
    }

    /// Parses and validates a sidecar.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text).map_err(|e| Error::Parse(format!("sidecar: {e}")))?;
        if s.schema != SIDECAR_SCHEMA {
            return Err(Error::Parse(format!("sidecar: unknown schema {:?}", s.schema)));
        }
        s.config.validate()?;
        if (s.rows, s.cols) != (s.config.m, s.config.n()) {
            return Err(Error::Parse(format!(
                "sidecar: shape {}x{} does not match the configuration",
                s.rows, s.cols
            )));
        }
        if s.pure_column_map.len() != s.cols {
            return Err(Error::Parse(format!(
                "sidecar: {} map entries for {} columns",
                s.pure_column_map.len(),
                s.cols
            )));
        }
        let r = s.pure_columns.len();
        for (j, k) in s.pure_column_map.iter().enumerate() {
            if let Some(k) = *k {
                if k == 0 || k > r || !s.pure_columns[k - 1].contains(&(j + 1)) {
                    return Err(Error::Parse(format!(
                        "sidecar: column {} maps to endmember {k} inconsistently",
                        j + 1
                    )));
                }
            }
        }
        let listed: usize = s.pure_columns.iter().map(Vec::len).sum();
        let mapped = s.pure_column_map.iter().flatten().count();
        if listed != mapped {
            return Err(Error::Parse(
                "sidecar: pure_columns and pure_column_map disagree".into(),
            ));
        }
        Ok(s)
    }

    /// Zero-based map, as used by the metrics.
    pub fn zero_based_map(&self) -> Vec<Option<usize>> {
        self.pure_column_map.iter().map(|k| k.map(|k| k - 1)).collect()
    }
}
