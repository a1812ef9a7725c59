//! Calibrated critical values from standard curves.
//!
//! For a target size α and a realized-vs-nominal curve at fixed n, take the
//! largest realized size ≤ α and the smallest ≥ α, interpolate their nominal
//! levels linearly to obtain `α_approx`, and use the χ²₁ quantile at
//! `1 − α_approx` as the critical value. A cell is NA when
//!
//! * the hull-violation rate alone already reaches α (`FloorUnreachable`),
//! * no curve point lies on one side of α (`BracketMissing`), or
//! * `α_approx` falls below 10/B, so fewer than ten tail replicates back
//!   the quantile (`QuantileOverflow`).

use serde::{Deserialize, Serialize};

use crate::curves::{
    batch_for_n, curve_from_batch, default_alpha_grid, CurveKind, StandardCurve, TABLE_COVERAGES,
    TABLE_SAMPLE_SIZES,
};
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::mc::{BatchCache, McConfig};
use crate::special::{chisq1_quantile, chisq1_sf};

/// Offset that makes calibrated tests conservative at B = 10⁶.
pub const CONSERVATIVE_OFFSET: f64 = 5e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NaReason {
    None,
    FloorUnreachable,
    BracketMissing,
    QuantileOverflow,
}

impl NaReason {
    pub fn as_str(self) -> &'static str {
        match self {
            NaReason::None => "None",
            NaReason::FloorUnreachable => "FloorUnreachable",
            NaReason::BracketMissing => "BracketMissing",
            NaReason::QuantileOverflow => "QuantileOverflow",
        }
    }

    pub fn parse(s: &str) -> Option<NaReason> {
        match s {
            "None" => Some(NaReason::None),
            "FloorUnreachable" => Some(NaReason::FloorUnreachable),
            "BracketMissing" => Some(NaReason::BracketMissing),
            "QuantileOverflow" => Some(NaReason::QuantileOverflow),
            _ => None,
        }
    }
}

/// The two curve points whose realized sizes enclose the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower_nominal: f64,
    pub lower_alpha_hat: f64,
    pub upper_nominal: f64,
    pub upper_alpha_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub n: usize,
    pub target_alpha: f64,
    pub alpha_approx: Option<f64>,
    pub critical_value: Option<f64>,
    pub na_reason: NaReason,
    pub bracket: Option<Bracket>,
}

impl CalibrationCell {
    pub fn is_na(&self) -> bool {
        self.na_reason != NaReason::None
    }

    fn na(n: usize, target_alpha: f64, reason: NaReason, bracket: Option<Bracket>) -> Self {
        CalibrationCell {
            n,
            target_alpha,
            alpha_approx: None,
            critical_value: None,
            na_reason: reason,
            bracket,
        }
    }
}

/// Calibrated critical value for size `target_alpha` from a vs-level curve.
/// `offset` is subtracted from the interpolated nominal level.
pub fn calibrate(curve: &StandardCurve, target_alpha: f64, offset: f64) -> Result<CalibrationCell> {
    if curve.kind != CurveKind::VsNominalLevel {
        return Err(Error::WrongCurveKind {
            expected: CurveKind::VsNominalLevel.as_str(),
            found: curve.kind.as_str(),
        });
    }
    if !(target_alpha > 0.0 && target_alpha < 1.0) {
        return Err(Error::domain(format!("target alpha must be in (0, 1), got {target_alpha}")));
    }
    if offset.is_nan() || offset < 0.0 || !offset.is_finite() {
        return Err(Error::domain(format!("offset must be >= 0, got {offset}")));
    }
    let n = curve.fixed_value as usize;
    let points = &curve.points;
    if points.windows(2).any(|w| w[1].alpha_hat < w[0].alpha_hat) {
        return Err(Error::NonInjective { target: target_alpha });
    }

    if let Some(floor) = curve.hull_violation_rate {
        if floor >= target_alpha {
            return Ok(CalibrationCell::na(n, target_alpha, NaReason::FloorUnreachable, None));
        }
    }

    let hits: Vec<usize> = (0..points.len())
        .filter(|&i| points[i].alpha_hat == target_alpha)
        .collect();
    let (alpha_approx, bracket) = match hits.as_slice() {
        [i] => {
            let p = points[*i];
            let bracket = Bracket {
                lower_nominal: p.abscissa,
                lower_alpha_hat: p.alpha_hat,
                upper_nominal: p.abscissa,
                upper_alpha_hat: p.alpha_hat,
            };
            (p.abscissa, bracket)
        }
        [] => {
            // Monotone curve: the upper bracket directly follows the lower.
            let below = points.iter().rposition(|p| p.alpha_hat < target_alpha);
            let above = points.iter().position(|p| p.alpha_hat > target_alpha);
            let (Some(i), Some(j)) = (below, above) else {
                return Ok(CalibrationCell::na(n, target_alpha, NaReason::BracketMissing, None));
            };
            let (lo, hi) = (points[i], points[j]);
            let weight = (target_alpha - lo.alpha_hat) / (hi.alpha_hat - lo.alpha_hat);
            let bracket = Bracket {
                lower_nominal: lo.abscissa,
                lower_alpha_hat: lo.alpha_hat,
                upper_nominal: hi.abscissa,
                upper_alpha_hat: hi.alpha_hat,
            };
            (lo.abscissa + weight * (hi.abscissa - lo.abscissa), bracket)
        }
        _ => return Err(Error::NonInjective { target: target_alpha }),
    };

    let adjusted = alpha_approx - offset;
    let resolution = 10.0 / curve.replicates as f64;
    if adjusted < resolution || adjusted <= 0.0 {
        return Ok(CalibrationCell::na(
            n,
            target_alpha,
            NaReason::QuantileOverflow,
            Some(bracket),
        ));
    }
    Ok(CalibrationCell {
        n,
        target_alpha,
        alpha_approx: Some(adjusted),
        critical_value: Some(chisq1_quantile(1.0 - adjusted)?),
        na_reason: NaReason::None,
        bracket: Some(bracket),
    })
}

/// Layout and calibration settings of a critical value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSettings {
    pub n_values: Vec<usize>,
    /// Target coverage levels 1 − α, one column each.
    pub coverages: Vec<f64>,
    /// Nominal levels of the standard curve used for interpolation.
    pub alpha_grid: Vec<f64>,
    pub offset: f64,
}

impl Default for TableSettings {
    fn default() -> Self {
        TableSettings {
            n_values: TABLE_SAMPLE_SIZES.to_vec(),
            coverages: TABLE_COVERAGES.to_vec(),
            alpha_grid: default_alpha_grid(),
            offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub spec: DistributionSpec,
    pub settings: TableSettings,
    /// `cells[row][column]`, rows by n and columns by coverage.
    pub cells: Vec<Vec<CalibrationCell>>,
    pub replicates: usize,
    pub seed: u64,
}

impl CalibrationTable {
    pub fn cell(&self, n: usize, coverage: f64) -> Option<&CalibrationCell> {
        let row = self.settings.n_values.iter().position(|&m| m == n)?;
        let col = self
            .settings
            .coverages
            .iter()
            .position(|&c| (c - coverage).abs() < 1e-12)?;
        Some(&self.cells[row][col])
    }

    /// A table holding given critical values (`None` for NA), e.g. to
    /// check published numbers with [`table_sanity`].
    pub fn from_values(
        spec: DistributionSpec,
        n_values: Vec<usize>,
        coverages: Vec<f64>,
        values: &[Vec<Option<f64>>],
    ) -> Result<Self> {
        if values.len() != n_values.len() || values.iter().any(|r| r.len() != coverages.len()) {
            return Err(Error::domain("value grid does not match the table layout"));
        }
        let mut cells = Vec::with_capacity(n_values.len());
        for (row, &n) in values.iter().zip(&n_values) {
            let mut out = Vec::with_capacity(row.len());
            for (value, &coverage) in row.iter().zip(&coverages) {
                let target_alpha = 1.0 - coverage;
                out.push(match value {
                    Some(c) => CalibrationCell {
                        n,
                        target_alpha,
                        alpha_approx: Some(chisq1_sf(*c)?),
                        critical_value: Some(*c),
                        na_reason: NaReason::None,
                        bracket: None,
                    },
                    None => CalibrationCell::na(n, target_alpha, NaReason::BracketMissing, None),
                });
            }
            cells.push(out);
        }
        Ok(CalibrationTable {
            spec,
            settings: TableSettings {
                n_values,
                coverages,
                alpha_grid: Vec::new(),
                offset: 0.0,
            },
            cells,
            replicates: 0,
            seed: 0,
        })
    }
}

/// One batch per n, shared by every column of that row.
pub fn build_table(
    spec: &DistributionSpec,
    settings: &TableSettings,
    cfg: &McConfig,
    cache: Option<&BatchCache>,
) -> Result<CalibrationTable> {
    if settings.n_values.is_empty() || settings.coverages.is_empty() {
        return Err(Error::domain("table needs at least one row and one column"));
    }
    if let Some(c) = settings.coverages.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
        return Err(Error::domain(format!("coverage must be in (0, 1), got {c}")));
    }
    let mut cells = Vec::with_capacity(settings.n_values.len());
    for &n in &settings.n_values {
        let batch = batch_for_n(spec, n, cfg, cache)?;
        let curve = curve_from_batch(&batch, &settings.alpha_grid, cfg.seed)?;
        let row = settings
            .coverages
            .iter()
            .map(|&coverage| calibrate(&curve, 1.0 - coverage, settings.offset))
            .collect::<Result<Vec<_>>>()?;
        cells.push(row);
    }
    Ok(CalibrationTable {
        spec: *spec,
        settings: settings.clone(),
        cells,
        replicates: cfg.replicates,
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SanityViolation {
    /// Critical value did not decrease from the smaller to the larger n.
    ColumnNotDecreasing { coverage: f64, n_small: usize, n_large: usize },
    /// Critical value did not increase with the coverage level.
    RowNotIncreasing { n: usize, coverage_low: f64, coverage_high: f64 },
    /// Critical value below the asymptotic χ²₁ quantile.
    BelowAsymptotic { n: usize, coverage: f64, value: f64, asymptotic: f64 },
    /// The largest-n cell is not the closest to the asymptotic quantile.
    NotConverging { coverage: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SanityReport {
    pub violations: Vec<SanityViolation>,
}

impl SanityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Consistency checks over the non-NA cells of a table.
pub fn table_sanity(table: &CalibrationTable) -> SanityReport {
    let mut violations = Vec::new();
    let ns = &table.settings.n_values;
    let covs = &table.settings.coverages;
    let value = |r: usize, c: usize| table.cells[r][c].critical_value;

    for (c, &coverage) in covs.iter().enumerate() {
        let present: Vec<(usize, f64)> = (0..ns.len())
            .filter_map(|r| value(r, c).map(|v| (r, v)))
            .collect();
        for w in present.windows(2) {
            if w[1].1 >= w[0].1 {
                violations.push(SanityViolation::ColumnNotDecreasing {
                    coverage,
                    n_small: ns[w[0].0],
                    n_large: ns[w[1].0],
                });
            }
        }
        let Ok(asymptotic) = chisq1_quantile(coverage) else {
            continue;
        };
        for &(r, v) in &present {
            if v < asymptotic {
                violations.push(SanityViolation::BelowAsymptotic {
                    n: ns[r],
                    coverage,
                    value: v,
                    asymptotic,
                });
            }
        }
        if let Some(&(last_row, last)) = present.last() {
            if last_row == ns.len() - 1 {
                let gap = (last - asymptotic).abs();
                if present[..present.len() - 1]
                    .iter()
                    .any(|&(_, v)| (v - asymptotic).abs() <= gap)
                {
                    violations.push(SanityViolation::NotConverging { coverage });
                }
            }
        }
    }

    for (r, &n) in ns.iter().enumerate() {
        let present: Vec<(usize, f64)> = (0..covs.len())
            .filter_map(|c| value(r, c).map(|v| (c, v)))
            .collect();
        for w in present.windows(2) {
            if w[1].1 <= w[0].1 {
                violations.push(SanityViolation::RowNotIncreasing {
                    n,
                    coverage_low: covs[w[0].0],
                    coverage_high: covs[w[1].0],
                });
            }
        }
    }
    SanityReport { violations }
}
