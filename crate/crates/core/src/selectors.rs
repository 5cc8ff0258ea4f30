//! Strongly convex selector functions `f` with `f(0) = 0`.
//!
//! The extraction step picks the residual column maximizing `f`; only the
//! ordering of `f` values matters there. The strong-convexity parameter `μ`
//! and gradient-Lipschitz constant `L` enter the robustness bound and the
//! sandwich `μ/2 ‖x‖² <= f(x) <= L/2 ‖x‖²`.
//!
//! Constants, per family, on the Euclidean ball of radius `K` in `R^m`:
//!
//! | family            | `μ`                          | `L`                 |
//! |-------------------|------------------------------|---------------------|
//! | `‖x‖₂²`           | 2                            | 2                   |
//! | `Σ x²/(α+|x|)`    | `2α²/(α+K)³`                 | `2/α`               |
//! | `‖x‖_p²`, p <= 2  | `2(p-1)`                     | `2 m^(2/p-1)`       |
//! | `‖x‖_p²`, p >= 2  | `2 m^(2/p-1)`                | `2(p-1)`            |
//!
//! For the robust family with `α = K` the ratio `L/μ` is 8.
//!
//! For `‖x‖_p²` the entries built from the norm-equivalence factor
//! `m^(2/p-1)` are sandwich constants only: when `p < 2` the gradient is not
//! Lipschitz near the coordinate hyperplanes, and when `p > 2` the function
//! is not strongly convex there. The other entry of each row is a genuine
//! strong-convexity (resp. gradient-Lipschitz) constant in the ℓ2 geometry.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorKind {
    /// `f(x) = ‖x‖₂²`
    SquaredL2,
    /// `f(x) = Σ x_i² / (α + |x_i|)`
    RobustRational { alpha: f64 },
    /// `f(x) = ‖x‖_p²`
    PNormSquared { p: f64 },
}

/// A selector function together with the radius of the ball on which its
/// local constants are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorSpec {
    pub kind: SelectorKind,
    /// Unset means "use the largest column norm of the input".
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorConstants {
    pub mu: f64,
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectorParseError {
    #[error("unknown selector `{0}` (expected l2, robust:<alpha> or pnorm:<p>)")]
    Unknown(String),
    #[error("invalid parameter `{value}` for {family}: {reason}")]
    BadParameter {
        family: &'static str,
        value: String,
        reason: &'static str,
    },
}

impl SelectorSpec {
    pub const L2: Self = Self {
        kind: SelectorKind::SquaredL2,
        radius: None,
    };

    pub fn squared_l2() -> Self {
        Self::L2
    }

    /// Panics unless `alpha` is positive and finite.
    pub fn robust(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha.is_finite(), "alpha must be positive");
        Self {
            kind: SelectorKind::RobustRational { alpha },
            radius: None,
        }
    }

    /// Panics unless `1 < p < ∞`.
    pub fn pnorm(p: f64) -> Self {
        assert!(p > 1.0 && p.is_finite(), "p must lie in (1, inf)");
        Self {
            kind: SelectorKind::PNormSquared { p },
            radius: None,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = Some(radius);
        self
    }

    pub fn is_squared_l2(&self) -> bool {
        matches!(self.kind, SelectorKind::SquaredL2)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self.kind {
            SelectorKind::SquaredL2 => x.iter().map(|v| v * v).sum(),
            SelectorKind::RobustRational { alpha } => x.iter().map(|v| v * v / (alpha + v.abs())).sum(),
            SelectorKind::PNormSquared { p } => {
                let n = pnorm(x, p);
                n * n
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self.kind {
            SelectorKind::SquaredL2 => x.iter().map(|v| 2.0 * v).collect(),
            SelectorKind::RobustRational { alpha } => x
                .iter()
                .map(|&v| {
                    let d = alpha + v.abs();
                    v * (2.0 * alpha + v.abs()) / (d * d)
                })
                .collect(),
            SelectorKind::PNormSquared { p } => {
                let n = pnorm(x, p);
                if n == 0.0 {
                    return vec![0.0; x.len()];
                }
                x.iter()
                    .map(|&v| 2.0 * v.signum() * (v.abs() / n).powf(p - 1.0) * n)
                    .collect()
            }
        }
    }

    /// `(μ, L)` on the ball of radius `radius` in dimension `dim`.
    pub fn constants(&self, radius: f64, dim: usize) -> SelectorConstants {
        match self.kind {
            SelectorKind::SquaredL2 => SelectorConstants {
                mu: 2.0,
                lipschitz: 2.0,
            },
            SelectorKind::RobustRational { alpha } => SelectorConstants {
                mu: 2.0 * alpha * alpha / (alpha + radius).powi(3),
                lipschitz: 2.0 / alpha,
            },
            SelectorKind::PNormSquared { p } => {
                let equivalence = (dim.max(1) as f64).powf(2.0 / p - 1.0);
                if p <= 2.0 {
                    SelectorConstants {
                        mu: 2.0 * (p - 1.0),
                        lipschitz: 2.0 * equivalence,
                    }
                } else {
                    SelectorConstants {
                        mu: 2.0 * equivalence,
                        lipschitz: 2.0 * (p - 1.0),
                    }
                }
            }
        }
    }

    /// Whether `μ/2 ‖x‖² <= f(x) <= L/2 ‖x‖²` holds at `x` (for `‖x‖ <= radius`)
    /// up to `1e-9 (1 + ‖x‖²)`.
    pub fn sandwich_check(&self, x: &[f64], radius: f64) -> bool {
        let c = self.constants(radius, x.len());
        let norm_sq: f64 = x.iter().map(|v| v * v).sum();
        let f = self.evaluate(x);
        let tol = 1e-9 * (1.0 + norm_sq);
        c.mu / 2.0 * norm_sq - tol <= f && f <= c.lipschitz / 2.0 * norm_sq + tol
    }
}

fn pnorm(x: &[f64], p: f64) -> f64 {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let sum: f64 = x.iter().map(|v| (v.abs() / scale).powf(p)).sum();
    scale * sum.powf(1.0 / p)
}

impl fmt::Display for SelectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SelectorKind::SquaredL2 => write!(f, "l2"),
            SelectorKind::RobustRational { alpha } => write!(f, "robust:{alpha}"),
            SelectorKind::PNormSquared { p } => write!(f, "pnorm:{p}"),
        }
    }
}

impl FromStr for SelectorSpec {
    type Err = SelectorParseError;

    /// Parses `l2`, `robust:<alpha>` or `pnorm:<p>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (family, param) = match s.split_once(':') {
            Some((family, param)) => (family, Some(param)),
            None => (s, None),
        };
        match (family, param) {
            ("l2", None) => Ok(Self::L2),
            ("robust", Some(v)) => {
                let alpha = parse_param("robust", v)?;
                if !(alpha > 0.0) {
                    return Err(bad("robust", v, "alpha must be positive"));
                }
                Ok(Self::robust(alpha))
            }
            ("pnorm", Some(v)) => {
                let p = parse_param("pnorm", v)?;
                if !(p > 1.0) {
                    return Err(bad("pnorm", v, "p must be greater than 1"));
                }
                Ok(Self::pnorm(p))
            }
            _ => Err(SelectorParseError::Unknown(s.to_string())),
        }
    }
}

fn parse_param(family: &'static str, value: &str) -> Result<f64, SelectorParseError> {
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| bad(family, value, "not a number"))?;
    if !v.is_finite() {
        return Err(bad(family, value, "must be finite"));
    }
    Ok(v)
}

fn bad(family: &'static str, value: &str, reason: &'static str) -> SelectorParseError {
    SelectorParseError::BadParameter {
        family,
        value: value.to_string(),
        reason,
    }
}
