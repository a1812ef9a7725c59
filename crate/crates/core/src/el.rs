//! Empirical likelihood ratio statistic for a univariate mean.
//!
//! For `mu0` strictly inside the sample hull the weights are
//! `p_i = 1 / (n (1 + λ (y_i − mu0)))`, where λ is the root of
//!
//! ```text
//! g(λ) = Σ (y_i − mu0) / (1 + λ (y_i − mu0))
//! ```
//!
//! and the statistic is `ℓ(mu0) = −2 log R(mu0) = 2 Σ log(1 + λ (y_i − mu0))`.
//! `g` is strictly decreasing on the feasible interval, and since every
//! weight is at most one the root lies in the closed interval where all
//! `1 + λ z_i ≥ 1/n`. The solver runs Newton steps inside that bracket and
//! falls back to bisection whenever a step would leave it.
//!
//! Data are shifted by `mu0` and divided by the sample range before
//! solving; λ is reported on the original scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{chisq1_cdf, chisq1_sf};

const MAX_NEWTON: usize = 100;

/// Observations y₁..yₙ; nonempty and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("sample must contain at least one observation"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite observation {bad}")));
        }
        Ok(Sample { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElStatus {
    /// `mu0` lies strictly inside the convex hull of the sample.
    Interior,
    /// `mu0` lies on or outside the hull; R(mu0) = 0 and ℓ = +∞.
    HullViolation,
    /// Every observation equals `mu0`; ℓ = 0.
    Degenerate,
}

impl ElStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ElStatus::Interior => "Interior",
            ElStatus::HullViolation => "HullViolation",
            ElStatus::Degenerate => "Degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElResult {
    pub statistic: f64,
    /// Dual multiplier on the original scale. Absent on hull violation,
    /// like the weights.
    pub lambda: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub status: ElStatus,
}

impl ElResult {
    /// Asymptotic p-value `1 − F_{χ²₁}(ℓ)`.
    pub fn p_value(&self) -> f64 {
        chisq1_sf(self.statistic).unwrap_or(0.0)
    }
}

enum Position {
    Interior { scale: f64 },
    Outside,
    AtPoint,
}

fn locate(values: &[f64], mu0: f64) -> Position {
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if min == max && min == mu0 {
        Position::AtPoint
    } else if mu0 <= min || mu0 >= max {
        Position::Outside
    } else {
        Position::Interior { scale: max - min }
    }
}

#[inline]
fn dual_terms(values: &[f64], mu0: f64, inv_scale: f64, lambda: f64) -> (f64, f64, f64) {
    let mut g = 0.0;
    let mut dg = 0.0;
    let mut magnitude = 0.0;
    for &y in values {
        let z = (y - mu0) * inv_scale;
        let r = z / (1.0 + lambda * z);
        g += r;
        dg -= r * r;
        magnitude += r.abs();
    }
    (g, dg, magnitude)
}

// Root of g on the scaled data. Requires min < mu0 < max.
fn solve_scaled_multiplier(values: &[f64], mu0: f64, inv_scale: f64) -> f64 {
    let n = values.len() as f64;
    let (zmin, zmax) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
        let z = (y - mu0) * inv_scale;
        (lo.min(z), hi.max(z))
    });
    let floor = 1.0 / n - 1.0;
    let mut lo = floor / zmax;
    let mut hi = floor / zmin;
    // g is a sum of n terms; stop once it is at rounding level.
    let rel_tol = 1e-15 * n;

    let mut lambda = 0.0;
    for _ in 0..MAX_NEWTON {
        let (g, dg, magnitude) = dual_terms(values, mu0, inv_scale, lambda);
        if g.abs() <= rel_tol * magnitude {
            return lambda;
        }
        if g > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let mut next = lambda - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - lambda).abs() <= 1e-15 * (1.0 + lambda.abs()) {
            return next;
        }
        lambda = next;
    }

    // Safeguarded bisection to a relative bracket width of 1e-13.
    while hi - lo > 1e-13 * lo.abs().max(hi.abs()).max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (g, _, _) = dual_terms(values, mu0, inv_scale, mid);
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn statistic_from_multiplier(values: &[f64], mu0: f64, inv_scale: f64, lambda: f64) -> f64 {
    let sum: f64 = values
        .iter()
        .map(|&y| (lambda * (y - mu0) * inv_scale).ln_1p())
        .sum();
    (2.0 * sum).max(0.0)
}

/// ℓ(mu0) alone, without allocating the weight vector. `values` must be
/// nonempty and `mu0` finite.
pub fn log_ratio_statistic(values: &[f64], mu0: f64) -> f64 {
    match locate(values, mu0) {
        Position::AtPoint => 0.0,
        Position::Outside => f64::INFINITY,
        Position::Interior { scale } => {
            let inv = 1.0 / scale;
            let lambda = solve_scaled_multiplier(values, mu0, inv);
            statistic_from_multiplier(values, mu0, inv, lambda)
        }
    }
}

/// Empirical likelihood ratio statistic, multiplier and weights at `mu0`.
pub fn el_statistic(sample: &Sample, mu0: f64) -> Result<ElResult> {
    if !mu0.is_finite() {
        return Err(Error::domain(format!("hypothesized mean must be finite, got {mu0}")));
    }
    let values = sample.values();
    let n = values.len() as f64;
    let result = match locate(values, mu0) {
        Position::AtPoint => ElResult {
            statistic: 0.0,
            lambda: Some(0.0),
            weights: Some(vec![1.0 / n; values.len()]),
            status: ElStatus::Degenerate,
        },
        Position::Outside => ElResult {
            statistic: f64::INFINITY,
            lambda: None,
            weights: None,
            status: ElStatus::HullViolation,
        },
        Position::Interior { scale } => {
            let inv = 1.0 / scale;
            let lambda = solve_scaled_multiplier(values, mu0, inv);
            let weights = values
                .iter()
                .map(|&y| 1.0 / (n * (1.0 + lambda * (y - mu0) * inv)))
                .collect();
            ElResult {
                statistic: statistic_from_multiplier(values, mu0, inv, lambda),
                lambda: Some(lambda * inv),
                weights: Some(weights),
                status: ElStatus::Interior,
            }
        }
    };
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Asymptotic coverage `F_{χ²₁}(c)`.
    pub level: f64,
    pub critical_value: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, mu: f64) -> bool {
        self.lower <= mu && mu <= self.upper
    }
}

/// `{μ : ℓ(μ) ≤ c}` as an interval, by bisection outward from the mean.
pub fn el_confidence_interval(sample: &Sample, critical_value: f64) -> Result<ConfidenceInterval> {
    if !(critical_value > 0.0) || !critical_value.is_finite() {
        return Err(Error::domain(format!(
            "critical value must be positive and finite, got {critical_value}"
        )));
    }
    if sample.len() < 2 || sample.min() == sample.max() {
        return Err(Error::DegenerateSample);
    }
    let values = sample.values();
    let center = sample.mean();
    let upper = crossing(values, center, sample.max(), critical_value);
    let lower = crossing(values, center, sample.min(), critical_value);
    Ok(ConfidenceInterval {
        lower,
        upper,
        level: chisq1_cdf(critical_value)?,
        critical_value,
    })
}

// Point between `inside` (ℓ small) and `edge` (ℓ = ∞) where ℓ = c.
fn crossing(values: &[f64], inside: f64, edge: f64, c: f64) -> f64 {
    let tol = 1e-10 * c.max(1.0);
    let mut near = inside;
    let mut far = edge;
    for _ in 0..400 {
        let mid = 0.5 * (near + far);
        if mid == near || mid == far {
            break;
        }
        let l = log_ratio_statistic(values, mid);
        if (l - c).abs() <= tol {
            return mid;
        }
        if l < c {
            near = mid;
        } else {
            far = mid;
        }
    }
    near
}
