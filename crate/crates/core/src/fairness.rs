//! Fairness indices over per-undertaking granted importance, plus the
//! inequity and assigned-share measures used to report results.
//!
//! All indices are oriented so that 1 means perfect equality. Inputs are
//! first passed through [`alpha_transform`], which raises each importance
//! sum to the sensitivity exponent so that small shortfalls are amplified.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Jain,
    Gini,
    Atkinson,
    /// Revenue maximization without a fairness factor.
    #[serde(rename = "revenue")]
    RevenueOnly,
}

impl IndexKind {
    pub const ALL: [IndexKind; 4] = [
        IndexKind::Jain,
        IndexKind::Gini,
        IndexKind::Atkinson,
        IndexKind::RevenueOnly,
    ];

    /// Sensitivity used when none is given.
    pub fn default_alpha(self) -> f64 {
        match self {
            IndexKind::Gini => 10.0,
            _ => 25.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IndexKind::Jain => "jain",
            IndexKind::Gini => "gini",
            IndexKind::Atkinson => "atkinson",
            IndexKind::RevenueOnly => "revenue",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jain" => Ok(IndexKind::Jain),
            "gini" => Ok(IndexKind::Gini),
            "atkinson" => Ok(IndexKind::Atkinson),
            "revenue" | "revenue-only" | "revenueonly" => Ok(IndexKind::RevenueOnly),
            other => Err(Error::Parse(format!("unknown index kind '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessConfig {
    pub index_kind: IndexKind,
    /// Sensitivity exponent, at least 1.
    pub alpha: f64,
    /// Inequality aversion for the Atkinson index. `f64::INFINITY` selects the
    /// min-based branch.
    pub epsilon: f64,
}

impl FairnessConfig {
    pub fn new(index_kind: IndexKind, alpha: f64) -> Self {
        Self {
            index_kind,
            alpha,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_defaults(index_kind: IndexKind) -> Self {
        Self::new(index_kind, index_kind.default_alpha())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "alpha must be >= 1, got {}",
                self.alpha
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Domain(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Index value of the α-transformed importance sums.
    ///
    /// Revenue-only mode still needs an equity notion for conflict repair and
    /// falls back to the Jain index here.
    pub fn equity(&self, importance_sums: &[f64]) -> Result<f64> {
        let x = alpha_transform(importance_sums, self.alpha)?;
        match self.index_kind {
            IndexKind::Jain | IndexKind::RevenueOnly => jain(&x),
            IndexKind::Gini => gini_fairness(&x),
            IndexKind::Atkinson => atkinson_fairness(&x, self.epsilon),
        }
    }

    /// Multiplier applied to revenue in the objective.
    pub fn fitness_factor(&self, importance_sums: &[f64]) -> Result<f64> {
        match self.index_kind {
            IndexKind::RevenueOnly => Ok(1.0),
            _ => self.equity(importance_sums),
        }
    }
}

fn check_non_negative(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Domain("empty vector".into()));
    }
    if let Some(bad) = x.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!(
            "entry {bad} is not a finite non-negative value"
        )));
    }
    Ok(())
}

/// Raises every importance sum to `alpha`.
pub fn alpha_transform(importance_sums: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha >= 1.0) {
        return Err(Error::Domain(format!("alpha must be >= 1, got {alpha}")));
    }
    if let Some(bad) = importance_sums.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("negative importance sum {bad}")));
    }
    Ok(importance_sums.iter().map(|v| v.powf(alpha)).collect())
}

/// Jain's index `(Σx)² / (n·Σx²)`, in `[1/n, 1]`. All-zero input counts as equal.
pub fn jain(x: &[f64]) -> Result<f64> {
    check_non_negative(x)?;
    let n = x.len() as f64;
    let sum: f64 = x.iter().sum();
    let sum_sq: f64 = x.iter().map(|v| v * v).sum();
    if sum_sq == 0.0 {
        return Ok(1.0);
    }
    Ok((sum * sum / (n * sum_sq)).min(1.0))
}

/// Gini coefficient, mean absolute pairwise difference over twice the mean.
pub fn gini_coefficient(x: &[f64]) -> Result<f64> {
    check_non_negative(x)?;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Ok(0.0);
    }
    let mut diff = 0.0;
    for a in x {
        for b in x {
            diff += (a - b).abs();
        }
    }
    Ok(diff / (2.0 * n * n * mean))
}

/// `1 − G`.
pub fn gini_fairness(x: &[f64]) -> Result<f64> {
    Ok(1.0 - gini_coefficient(x)?)
}

/// Atkinson index with inequality aversion `epsilon`.
///
/// Three branches: the generalized mean for `ε ≠ 1`, the geometric mean at
/// `ε = 1`, and the minimum at `ε = ∞`. A zero entry drives the geometric
/// and minimum branches to full inequality.
pub fn atkinson_index(x: &[f64], epsilon: f64) -> Result<f64> {
    check_non_negative(x)?;
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Ok(0.0);
    }
    let equally_distributed = if epsilon.is_infinite() {
        x.iter().copied().fold(f64::INFINITY, f64::min)
    } else if epsilon == 1.0 {
        if x.contains(&0.0) {
            0.0
        } else {
            (x.iter().map(|v| v.ln()).sum::<f64>() / n).exp()
        }
    } else {
        let e = 1.0 - epsilon;
        if e < 0.0 && x.contains(&0.0) {
            0.0
        } else {
            (x.iter().map(|v| v.powf(e)).sum::<f64>() / n).powf(1.0 / e)
        }
    };
    Ok((1.0 - equally_distributed / mean).clamp(0.0, 1.0))
}

/// `1 − A(ε)`.
pub fn atkinson_fairness(x: &[f64], epsilon: f64) -> Result<f64> {
    Ok(1.0 - atkinson_index(x, epsilon)?)
}

/// Sum of `|Iᵢ − Iⱼ|` over unordered pairs.
pub fn pairwise_difference_sum(importance: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (i, a) in importance.iter().enumerate() {
        for b in &importance[i + 1..] {
            sum += (a - b).abs();
        }
    }
    sum
}

/// Largest pairwise difference sum reachable with `n` values in `[0, 1]`.
pub fn max_inequity_value(n: usize) -> f64 {
    let n = n as f64;
    if n as usize % 2 == 0 {
        n * n / 4.0
    } else {
        (n * n - 1.0) / 4.0
    }
}

/// Pairwise disparity as a percentage of its maximum.
pub fn inequity_percent(importance: &[f64]) -> Result<f64> {
    if importance.len() < 2 {
        return Err(Error::Domain(format!(
            "inequity needs at least two undertakings, got {}",
            importance.len()
        )));
    }
    Ok(100.0 * pairwise_difference_sum(importance) / max_inequity_value(importance.len()))
}

/// Mean granted importance, in percent.
pub fn assigned_importance_percent(importance: &[f64]) -> f64 {
    if importance.is_empty() {
        return 0.0;
    }
    100.0 * importance.iter().sum::<f64>() / importance.len() as f64
}

/// Capacity-weighted granted importance, in percent.
///
/// Normalized by the capacity total so that equal capacities reproduce
/// [`assigned_importance_percent`].
pub fn assigned_capacity_percent(importance: &[f64], capacities: &[f64]) -> Result<f64> {
    if importance.len() != capacities.len() {
        return Err(Error::Shape(format!(
            "{} importance values for {} capacities",
            importance.len(),
            capacities.len()
        )));
    }
    let total: f64 = capacities.iter().sum();
    if total <= 0.0 {
        return Err(Error::Domain("capacities sum to zero".into()));
    }
    let weighted: f64 = importance.iter().zip(capacities).map(|(i, c)| i * c).sum();
    Ok(100.0 * weighted / total)
}
