//! File formats: curve and table emission as CSV, JSON and aligned text,
//! table re-parsing, and the plain data-file reader.
//!
//! Numbers are written with Rust's shortest round-trip formatting, missing
//! values as the literal `NA`. Every CSV ends with `# key=value` metadata
//! lines (spec, B, seed, version, moments) that suffice to regenerate it.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::calibration::{Bracket, CalibrationCell, CalibrationTable, NaReason, TableSettings};
use crate::curves::{CurveKind, StandardCurve};
use crate::distributions::{DistributionSpec, MomentSummary};
use crate::el::ElResult;
use crate::error::{Error, Result};
use crate::special::chisq1_quantile;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const NA: &str = "NA";

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), num)
}

fn list<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

fn moments_text(m: &MomentSummary) -> String {
    format!(
        "mean={};variance={};skewness={};kurtosis={}",
        opt(m.mean),
        opt(m.variance),
        opt(m.skewness),
        opt(m.kurtosis)
    )
}

fn write_csv(header: &[&str], rows: &[Vec<String>], meta: &[(&str, String)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    let mut out = String::from_utf8(bytes).expect("csv output is utf-8");
    for (key, value) in meta {
        let _ = writeln!(out, "# {key}={value}");
    }
    Ok(out)
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

// ---------------------------------------------------------------- curves

pub const CURVE_COLUMNS: [&str; 10] = [
    "kind",
    "family",
    "params",
    "fixed_value",
    "abscissa",
    "alpha_hat",
    "std_error",
    "zhang_prediction",
    "nominal_coverage",
    "realized_coverage",
];

/// One curve point with the curve's identifying columns, in both the size
/// and the coverage convention. Coverage columns are absent for
/// scaled-deviation curves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRecord {
    pub kind: &'static str,
    pub family: &'static str,
    pub params: String,
    pub fixed_value: f64,
    pub abscissa: f64,
    pub alpha_hat: f64,
    pub std_error: f64,
    pub zhang_prediction: Option<f64>,
    pub nominal_coverage: Option<f64>,
    pub realized_coverage: Option<f64>,
}

pub fn curve_records(curve: &StandardCurve) -> Vec<CurveRecord> {
    curve
        .points
        .iter()
        .map(|p| {
            let (nominal, realized) = match curve.kind {
                CurveKind::VsNominalLevel => (Some(1.0 - p.abscissa), Some(1.0 - p.alpha_hat)),
                CurveKind::VsSampleSize => (Some(1.0 - curve.fixed_value), Some(1.0 - p.alpha_hat)),
                CurveKind::ScaledDeviation => (None, None),
            };
            CurveRecord {
                kind: curve.kind.as_str(),
                family: curve.spec.family().name(),
                params: list(&curve.spec.params()),
                fixed_value: curve.fixed_value,
                abscissa: p.abscissa,
                alpha_hat: p.alpha_hat,
                std_error: p.std_error,
                zhang_prediction: p.zhang_prediction,
                nominal_coverage: nominal,
                realized_coverage: realized,
            }
        })
        .collect()
}

fn curve_meta(curve: &StandardCurve) -> Vec<(&'static str, String)> {
    let mut meta = vec![
        ("spec", curve.spec.to_string()),
        ("B", curve.replicates.to_string()),
        ("seed", curve.seed.to_string()),
        ("version", VERSION.to_string()),
        ("moments", moments_text(&curve.spec.moments())),
    ];
    if let Some(rate) = curve.hull_violation_rate {
        meta.push(("hull_violation_rate", num(rate)));
    }
    meta
}

pub fn curve_to_csv(curve: &StandardCurve) -> Result<String> {
    let rows: Vec<Vec<String>> = curve_records(curve)
        .into_iter()
        .map(|r| {
            vec![
                r.kind.to_string(),
                r.family.to_string(),
                r.params,
                num(r.fixed_value),
                num(r.abscissa),
                num(r.alpha_hat),
                num(r.std_error),
                opt(r.zhang_prediction),
                opt(r.nominal_coverage),
                opt(r.realized_coverage),
            ]
        })
        .collect();
    write_csv(&CURVE_COLUMNS, &rows, &curve_meta(curve))
}

#[derive(Serialize)]
struct JsonDoc<T> {
    metadata: BTreeMap<&'static str, String>,
    records: Vec<T>,
}

pub fn curve_to_json(curve: &StandardCurve) -> String {
    json(&JsonDoc {
        metadata: curve_meta(curve).into_iter().collect(),
        records: curve_records(curve),
    })
}

pub fn curve_to_text(curve: &StandardCurve) -> String {
    let abscissa = match curve.kind {
        CurveKind::VsNominalLevel => "alpha",
        _ => "n",
    };
    let ordinate = match curve.kind {
        CurveKind::ScaledDeviation => "n|dev|",
        _ => "alpha_hat",
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} curve for {}, {} = {}, B = {}, seed = {}",
        curve.kind.as_str(),
        curve.spec,
        if curve.kind == CurveKind::VsNominalLevel { "n" } else { "alpha" },
        curve.fixed_value,
        curve.replicates,
        curve.seed
    );
    let _ = writeln!(out, "{abscissa:>8} {ordinate:>10} {:>10} {:>10}", "se", "predicted");
    for p in &curve.points {
        let predicted = p.zhang_prediction.map_or_else(|| NA.to_string(), |z| format!("{z:.5}"));
        let _ = writeln!(
            out,
            "{:>8} {:>10.5} {:>10.5} {:>10}",
            num(p.abscissa),
            p.alpha_hat,
            p.std_error,
            predicted
        );
    }
    if let Some(rate) = curve.hull_violation_rate {
        let _ = writeln!(out, "hull violation rate {rate:.5}");
    }
    out
}

// ---------------------------------------------------------------- tables

pub const TABLE_COLUMNS: [&str; 10] = [
    "n",
    "coverage",
    "target_alpha",
    "alpha_approx",
    "critical_value",
    "na_reason",
    "lower_nominal",
    "lower_alpha_hat",
    "upper_nominal",
    "upper_alpha_hat",
];

/// One table cell, mirroring a CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRecord {
    pub n: usize,
    pub coverage: f64,
    pub target_alpha: f64,
    pub alpha_approx: Option<f64>,
    pub critical_value: Option<f64>,
    pub na_reason: &'static str,
    pub lower_nominal: Option<f64>,
    pub lower_alpha_hat: Option<f64>,
    pub upper_nominal: Option<f64>,
    pub upper_alpha_hat: Option<f64>,
}

pub fn table_records(table: &CalibrationTable) -> Vec<TableRecord> {
    let mut records = Vec::new();
    for row in &table.cells {
        for (cell, &coverage) in row.iter().zip(&table.settings.coverages) {
            let b = cell.bracket;
            records.push(TableRecord {
                n: cell.n,
                coverage,
                target_alpha: cell.target_alpha,
                alpha_approx: cell.alpha_approx,
                critical_value: cell.critical_value,
                na_reason: cell.na_reason.as_str(),
                lower_nominal: b.map(|b| b.lower_nominal),
                lower_alpha_hat: b.map(|b| b.lower_alpha_hat),
                upper_nominal: b.map(|b| b.upper_nominal),
                upper_alpha_hat: b.map(|b| b.upper_alpha_hat),
            });
        }
    }
    records
}

fn table_meta(table: &CalibrationTable) -> Vec<(&'static str, String)> {
    vec![
        ("spec", table.spec.to_string()),
        ("B", table.replicates.to_string()),
        ("seed", table.seed.to_string()),
        ("offset", num(table.settings.offset)),
        ("version", VERSION.to_string()),
        ("moments", moments_text(&table.spec.moments())),
        ("n_values", list(&table.settings.n_values)),
        ("coverages", list(&table.settings.coverages)),
        ("alpha_grid", list(&table.settings.alpha_grid)),
    ]
}

pub fn table_to_csv(table: &CalibrationTable) -> Result<String> {
    let rows: Vec<Vec<String>> = table_records(table)
        .into_iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.coverage),
                num(r.target_alpha),
                opt(r.alpha_approx),
                opt(r.critical_value),
                r.na_reason.to_string(),
                opt(r.lower_nominal),
                opt(r.lower_alpha_hat),
                opt(r.upper_nominal),
                opt(r.upper_alpha_hat),
            ]
        })
        .collect();
    write_csv(&TABLE_COLUMNS, &rows, &table_meta(table))
}

pub fn table_to_json(table: &CalibrationTable) -> String {
    json(&JsonDoc {
        metadata: table_meta(table).into_iter().collect(),
        records: table_records(table),
    })
}

/// Rows n, columns 1 − α, three decimals, `NA` for missing cells.
pub fn table_to_text(table: &CalibrationTable) -> String {
    let width = 7;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Critical values for {} (B = {}, seed = {}, offset = {})",
        table.spec, table.replicates, table.seed, table.settings.offset
    );
    let _ = write!(out, "{:<8}", "n \\ 1-a");
    for c in &table.settings.coverages {
        let _ = write!(out, " {:>width$}", num(*c));
    }
    out.push('\n');
    for row in &table.cells {
        let _ = write!(out, "{:<8}", row.first().map_or(0, |c| c.n));
        for cell in row {
            let text = cell
                .critical_value
                .map_or_else(|| NA.to_string(), |v| format!("{v:.3}"));
            let _ = write!(out, " {text:>width$}");
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<8}", "chi2(1)");
    for c in &table.settings.coverages {
        let text = chisq1_quantile(*c).map_or_else(|_| NA.to_string(), |q| format!("{q:.3}"));
        let _ = write!(out, " {text:>width$}");
    }
    out.push('\n');
    out
}

fn split_meta(text: &str) -> (String, BTreeMap<String, String>) {
    let mut body = String::new();
    let mut meta = BTreeMap::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    (body, meta)
}

fn parse_num(field: &str, what: &'static str) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::format(what, format!("not a number: {field:?}")))
}

fn parse_opt(field: &str, what: &'static str) -> Result<Option<f64>> {
    if field == NA {
        Ok(None)
    } else {
        parse_num(field, what).map(Some)
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &'static str) -> Result<Vec<T>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|t| t.parse().map_err(|_| Error::format(what, format!("bad entry {t:?}"))))
        .collect()
}

/// Inverse of [`table_to_csv`]: the result equals the emitted table.
pub fn table_from_csv(text: &str) -> Result<CalibrationTable> {
    const WHAT: &str = "table csv";
    let (body, meta) = split_meta(text);
    let get = |key: &str| {
        meta.get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::format(WHAT, format!("missing metadata {key:?}")))
    };
    let spec: DistributionSpec = get("spec")?.parse()?;
    let replicates = get("B")?
        .parse()
        .map_err(|_| Error::format(WHAT, "bad B"))?;
    let seed = get("seed")?
        .parse()
        .map_err(|_| Error::format(WHAT, "bad seed"))?;
    let settings = TableSettings {
        n_values: parse_list(get("n_values")?, WHAT)?,
        coverages: parse_list(get("coverages")?, WHAT)?,
        alpha_grid: parse_list(get("alpha_grid")?, WHAT)?,
        offset: parse_num(get("offset")?, WHAT)?,
    };

    let mut reader = csv::Reader::from_reader(body.as_bytes());
    if reader.headers()?.iter().ne(TABLE_COLUMNS) {
        return Err(Error::format(WHAT, "unexpected header"));
    }
    let columns = settings.coverages.len();
    let mut cells: Vec<Vec<CalibrationCell>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let r = record?;
        let f = |k: usize| r.get(k).unwrap_or("");
        let bracket = match (
            parse_opt(f(6), WHAT)?,
            parse_opt(f(7), WHAT)?,
            parse_opt(f(8), WHAT)?,
            parse_opt(f(9), WHAT)?,
        ) {
            (Some(a), Some(b), Some(c), Some(d)) => Some(Bracket {
                lower_nominal: a,
                lower_alpha_hat: b,
                upper_nominal: c,
                upper_alpha_hat: d,
            }),
            (None, None, None, None) => None,
            _ => return Err(Error::format(WHAT, format!("partial bracket in row {}", i + 1))),
        };
        let cell = CalibrationCell {
            n: f(0)
                .parse()
                .map_err(|_| Error::format(WHAT, format!("bad n in row {}", i + 1)))?,
            target_alpha: parse_num(f(2), WHAT)?,
            alpha_approx: parse_opt(f(3), WHAT)?,
            critical_value: parse_opt(f(4), WHAT)?,
            na_reason: NaReason::parse(f(5))
                .ok_or_else(|| Error::format(WHAT, format!("bad na_reason {:?}", f(5))))?,
            bracket,
        };
        if columns == 0 {
            return Err(Error::format(WHAT, "no coverage columns"));
        }
        if i % columns == 0 {
            cells.push(Vec::with_capacity(columns));
        }
        cells.last_mut().expect("row pushed").push(cell);
    }
    let shape_ok = cells.len() == settings.n_values.len()
        && cells.iter().all(|r| r.len() == columns)
        && cells
            .iter()
            .zip(&settings.n_values)
            .all(|(row, &n)| row.iter().all(|c| c.n == n));
    if !shape_ok {
        return Err(Error::format(WHAT, "cells do not match the n/coverage layout"));
    }
    Ok(CalibrationTable {
        spec,
        settings,
        cells,
        replicates,
        seed,
    })
}

// ---------------------------------------------------------------- misc

/// One `coverage,quantile` row per level.
pub fn quantiles_to_csv(coverages: &[f64]) -> Result<String> {
    let rows = coverages
        .iter()
        .map(|&c| Ok(vec![num(c), num(chisq1_quantile(c)?)]))
        .collect::<Result<Vec<_>>>()?;
    write_csv(&["coverage", "quantile"], &rows, &[("version", VERSION.to_string())])
}

#[derive(Serialize)]
struct QuantileRecord {
    coverage: f64,
    quantile: f64,
}

pub fn quantiles_to_json(coverages: &[f64]) -> Result<String> {
    let records = coverages
        .iter()
        .map(|&c| {
            Ok(QuantileRecord {
                coverage: c,
                quantile: chisq1_quantile(c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json(&records))
}

pub fn quantiles_to_text(coverages: &[f64]) -> Result<String> {
    let mut out = format!("{:>8} {:>8}\n", "1-a", "c");
    for &c in coverages {
        let _ = writeln!(out, "{:>8} {:>8.3}", num(c), chisq1_quantile(c)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElRecord {
    pub n: usize,
    pub mu0: f64,
    pub statistic: f64,
    pub lambda: Option<f64>,
    pub status: &'static str,
    pub p_value: f64,
}

impl ElRecord {
    pub fn new(n: usize, mu0: f64, result: &ElResult) -> Self {
        ElRecord {
            n,
            mu0,
            statistic: result.statistic,
            lambda: result.lambda,
            status: result.status.as_str(),
            p_value: result.p_value(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let row = vec![
            self.n.to_string(),
            num(self.mu0),
            num(self.statistic),
            opt(self.lambda),
            self.status.to_string(),
            num(self.p_value),
        ];
        write_csv(
            &["n", "mu0", "statistic", "lambda", "status", "p_value"],
            &[row],
            &[("version", VERSION.to_string())],
        )
    }

    /// JSON has no infinity; an infinite statistic is written as `null`.
    pub fn to_json(&self) -> String {
        json(&serde_json::json!({
            "n": self.n,
            "mu0": self.mu0,
            "statistic": self.statistic.is_finite().then_some(self.statistic),
            "lambda": self.lambda,
            "status": self.status,
            "p_value": self.p_value,
        }))
    }

    pub fn to_text(&self) -> String {
        format!(
            "n         {}\nmu0       {}\nstatistic {}\nlambda    {}\nstatus    {}\np-value   {}\n",
            self.n,
            num(self.mu0),
            num(self.statistic),
            opt(self.lambda),
            self.status,
            num(self.p_value)
        )
    }
}

/// Reads one number per line. Blank lines and lines starting with `#` are
/// skipped; anything else that is not a finite number is an error naming
/// its line.
pub fn read_data(input: impl BufRead) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ => {
                return Err(Error::format(
                    "data file",
                    format!("line {}: not a finite number: {t:?}", i + 1),
                ))
            }
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::build_table;
    use crate::curves::{curve_scaled_deviation, curve_vs_alpha, curve_vs_n};
    use crate::el::{el_statistic, Sample};
    use crate::mc::McConfig;

    fn small_table() -> CalibrationTable {
        let settings = TableSettings {
            n_values: vec![10, 20],
            coverages: vec![0.8, 0.95, 0.99],
            ..TableSettings::default()
        };
        build_table(&"exp(1)".parse().unwrap(), &settings, &McConfig::new(2000, 5), None).unwrap()
    }

    #[test]
    fn table_csv_round_trip_is_exact() {
        let table = small_table();
        assert!(table.cells.iter().flatten().any(|c| c.is_na()));
        let csv = table_to_csv(&table).unwrap();
        assert!(csv.contains(",NA,"));
        assert!(csv.contains("# spec=exp(1)\n# B=2000\n# seed=5\n"));
        let back = table_from_csv(&csv).unwrap();
        assert_eq!(back, table);
        assert_eq!(table_to_csv(&back).unwrap(), csv);
    }

    #[test]
    fn table_csv_rejects_damage() {
        let csv = table_to_csv(&small_table()).unwrap();
        assert!(table_from_csv(&csv.replace("# seed=5\n", "")).is_err());
        assert!(table_from_csv(&csv.replace("BracketMissing", "Whatever")).is_err());
        let truncated: String = csv.lines().enumerate().filter(|(i, _)| *i != 2).map(|(_, l)| format!("{l}\n")).collect();
        assert!(table_from_csv(&truncated).is_err());
    }

    #[test]
    fn text_table_layout() {
        let text = table_to_text(&small_table());
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("n \\ 1-a"));
        assert!(lines[2].starts_with("10 ") && lines[2].contains("NA"));
        assert!(lines[4].starts_with("chi2(1)") && lines[4].contains("3.841"));
    }

    #[test]
    fn json_mirrors_csv_columns() {
        let table = small_table();
        let v: serde_json::Value = serde_json::from_str(&table_to_json(&table)).unwrap();
        let records = v["records"].as_array().unwrap();
        assert_eq!(records.len(), 6);
        let keys: Vec<&str> = records[0].as_object().unwrap().keys().map(String::as_str).collect();
        let mut expected = TABLE_COLUMNS.to_vec();
        expected.sort_unstable();
        let mut keys_sorted = keys.clone();
        keys_sorted.sort_unstable();
        assert_eq!(keys_sorted, expected);
        assert_eq!(v["metadata"]["B"], "2000");
    }

    #[test]
    fn curve_emission() {
        let spec: DistributionSpec = "normal(0,1)".parse().unwrap();
        let cfg = McConfig::new(500, 2);
        let level = curve_vs_alpha(&spec, 10, &[0.05, 0.1], &cfg, None).unwrap();
        let csv = curve_to_csv(&level).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CURVE_COLUMNS.join(","));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&first[..5], &["VsNominalLevel", "normal", "0;1", "10", "0.05"]);
        assert_eq!(first[8], "0.95");
        assert!(csv.contains("# hull_violation_rate="));

        let by_n = curve_vs_n(&"t(3.5)".parse().unwrap(), 0.05, &[10], &cfg, None).unwrap();
        assert!(curve_to_csv(&by_n).unwrap().contains(",NA,0.95,"));
        let scaled = curve_scaled_deviation(&by_n).unwrap();
        assert!(curve_to_csv(&scaled).unwrap().contains(",NA,NA,NA\n"));
        let v: serde_json::Value = serde_json::from_str(&curve_to_json(&level)).unwrap();
        assert_eq!(v["records"][1]["abscissa"], 0.1);
        assert!(curve_to_text(&level).contains("alpha_hat"));
    }

    #[test]
    fn quantile_outputs() {
        let text = quantiles_to_text(&[0.95, 0.99]).unwrap();
        assert!(text.contains("3.841") && text.contains("6.635"));
        assert!(quantiles_to_csv(&[0.95]).unwrap().starts_with("coverage,quantile\n0.95,3.84"));
        assert!(quantiles_to_csv(&[1.0]).is_err());
    }

    #[test]
    fn el_record_formats() {
        let sample = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        let outside = ElRecord::new(3, 5.0, &el_statistic(&sample, 5.0).unwrap());
        assert_eq!(outside.status, "HullViolation");
        assert_eq!(outside.p_value, 0.0);
        assert!(outside.to_csv().unwrap().contains("3,5,inf,NA,HullViolation,0"));
        let v: serde_json::Value = serde_json::from_str(&outside.to_json()).unwrap();
        assert!(v["statistic"].is_null());
        let centre = ElRecord::new(3, 2.0, &el_statistic(&sample, 2.0).unwrap());
        assert!(centre.to_text().contains("p-value   1"));
    }

    #[test]
    fn data_reader() {
        let ok = read_data("# header\n1.5\n\n  -2\n3e1\n".as_bytes()).unwrap();
        assert_eq!(ok, vec![1.5, -2.0, 30.0]);
        let err = read_data("1\n2\nabc\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(read_data("nan\n".as_bytes()).is_err());
    }
}
