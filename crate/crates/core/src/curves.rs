//! Standard curves: realized size against sample size at a fixed nominal
//! level, the scaled deviation `n·|α̂ₙ − α|`, and realized against nominal
//! level at a fixed sample size.

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::mc::{batch_with_cache, BatchCache, McConfig, ReplicateBatch};
use crate::rng::derive_seed;
use crate::zhang::predicted_size;

/// Rows of the published critical value tables.
pub const TABLE_SAMPLE_SIZES: [usize; 6] = [10, 15, 20, 30, 50, 100];

/// Columns (coverage levels 1 − α) of the published tables.
pub const TABLE_COVERAGES: [f64; 9] = [0.7, 0.8, 0.85, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99];

/// 10, 15, ..., 100.
pub fn default_n_grid() -> Vec<usize> {
    (2..=20).map(|k| 5 * k).collect()
}

/// 0.005, 0.010, ..., 0.500.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 200.0).collect()
}

/// Seed of the batch for sample size `n` within a run seeded by `seed`.
/// Curves and tables share it, so they reuse each other's cached batches.
pub fn seed_for_n(seed: u64, n: usize) -> u64 {
    derive_seed(seed, n as u64)
}

/// The batch a curve or table uses for sample size `n`.
pub fn batch_for_n(
    spec: &DistributionSpec,
    n: usize,
    cfg: &McConfig,
    cache: Option<&BatchCache>,
) -> Result<ReplicateBatch> {
    batch_with_cache(spec, n, &cfg.with_seed(seed_for_n(cfg.seed, n)), cache)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    VsSampleSize,
    VsNominalLevel,
    ScaledDeviation,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::VsSampleSize => "VsSampleSize",
            CurveKind::VsNominalLevel => "VsNominalLevel",
            CurveKind::ScaledDeviation => "ScaledDeviation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// n, or the nominal α.
    pub abscissa: f64,
    /// Realized size; for scaled-deviation curves, `n·|α̂ₙ − α|`.
    pub alpha_hat: f64,
    pub std_error: f64,
    pub zhang_prediction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardCurve {
    pub kind: CurveKind,
    /// The α held fixed (vs-n and scaled curves) or the n (vs-level curves).
    pub fixed_value: f64,
    pub spec: DistributionSpec,
    pub points: Vec<CurvePoint>,
    pub replicates: usize,
    pub seed: u64,
    /// Fraction of replicates with a hull violation; vs-level curves only.
    pub hull_violation_rate: Option<f64>,
}

fn zhang_for(spec: &DistributionSpec, n: usize, alpha: f64) -> Option<f64> {
    predicted_size(n, alpha, &spec.moments()).ok()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must be in (0, 1), got {alpha}")))
    }
}

/// Realized size at nominal `alpha` for each n of `n_grid`, one fresh batch
/// per n.
pub fn curve_vs_n(
    spec: &DistributionSpec,
    alpha: f64,
    n_grid: &[usize],
    cfg: &McConfig,
    cache: Option<&BatchCache>,
) -> Result<StandardCurve> {
    check_alpha(alpha)?;
    if n_grid.is_empty() {
        return Err(Error::domain("n grid is empty"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("n grid must be strictly increasing"));
    }
    let mut points = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let batch = batch_for_n(spec, n, cfg, cache)?;
        let size = batch.empirical_size(alpha)?;
        points.push(CurvePoint {
            abscissa: n as f64,
            alpha_hat: size.alpha_hat,
            std_error: size.std_error,
            zhang_prediction: zhang_for(spec, n, alpha),
        });
    }
    Ok(StandardCurve {
        kind: CurveKind::VsSampleSize,
        fixed_value: alpha,
        spec: *spec,
        points,
        replicates: cfg.replicates,
        seed: cfg.seed,
        hull_violation_rate: None,
    })
}

/// Replace each ordinate of a vs-n curve by `n·|α̂ₙ − α|`.
pub fn curve_scaled_deviation(curve: &StandardCurve) -> Result<StandardCurve> {
    if curve.kind != CurveKind::VsSampleSize {
        return Err(Error::WrongCurveKind {
            expected: CurveKind::VsSampleSize.as_str(),
            found: curve.kind.as_str(),
        });
    }
    let alpha = curve.fixed_value;
    let points = curve
        .points
        .iter()
        .map(|p| {
            let n = p.abscissa;
            CurvePoint {
                abscissa: n,
                alpha_hat: n * (p.alpha_hat - alpha).abs(),
                std_error: n * p.std_error,
                zhang_prediction: p.zhang_prediction.map(|z| n * (z - alpha).abs()),
            }
        })
        .collect();
    Ok(StandardCurve {
        kind: CurveKind::ScaledDeviation,
        points,
        ..curve.clone()
    })
}

/// Realized against nominal level, all points thresholding one batch.
pub fn curve_from_batch(batch: &ReplicateBatch, alpha_grid: &[f64], seed: u64) -> Result<StandardCurve> {
    if alpha_grid.is_empty() {
        return Err(Error::domain("alpha grid is empty"));
    }
    if alpha_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("alpha grid must be strictly increasing"));
    }
    let n = batch.n();
    let mut points = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        check_alpha(alpha)?;
        let size = batch.empirical_size(alpha)?;
        points.push(CurvePoint {
            abscissa: alpha,
            alpha_hat: size.alpha_hat,
            std_error: size.std_error,
            zhang_prediction: zhang_for(batch.spec(), n, alpha),
        });
    }
    Ok(StandardCurve {
        kind: CurveKind::VsNominalLevel,
        fixed_value: n as f64,
        spec: *batch.spec(),
        points,
        replicates: batch.replicates(),
        seed,
        hull_violation_rate: Some(batch.hull_violation_rate()),
    })
}

pub fn curve_vs_alpha(
    spec: &DistributionSpec,
    n: usize,
    alpha_grid: &[f64],
    cfg: &McConfig,
    cache: Option<&BatchCache>,
) -> Result<StandardCurve> {
    let batch = batch_for_n(spec, n, cfg, cache)?;
    curve_from_batch(&batch, alpha_grid, cfg.seed)
}
