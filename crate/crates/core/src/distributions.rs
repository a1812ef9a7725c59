//! Parent distributions with exact moments, densities and samplers.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::el::Sample;
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::special::{ln_gamma, std_normal_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    Exponential,
    Uniform,
    Gamma,
    ChiSquare,
    Laplace,
    StudentT,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Exponential => "exp",
            Family::Uniform => "unif",
            Family::Gamma => "gamma",
            Family::ChiSquare => "chisq",
            Family::Laplace => "laplace",
            Family::StudentT => "t",
        }
    }

    fn arity(self) -> usize {
        match self {
            Family::Exponential | Family::ChiSquare | Family::StudentT => 1,
            _ => 2,
        }
    }

    fn from_name(name: &str) -> Option<Family> {
        let family = match name {
            "normal" | "n" | "gauss" | "gaussian" => Family::Normal,
            "exp" | "exponential" => Family::Exponential,
            "unif" | "uniform" | "u" => Family::Uniform,
            "gamma" => Family::Gamma,
            "chisq" | "chi2" | "chisquare" | "chi-square" | "chi_square" => Family::ChiSquare,
            "laplace" | "lap" => Family::Laplace,
            "t" | "student" | "student-t" | "studentt" => Family::StudentT,
            _ => return None,
        };
        Some(family)
    }
}

/// A parent distribution. Parameters follow the usual textbook notation:
/// normal (mean, variance), exponential (rate), uniform (lower, upper),
/// gamma (shape, rate), chi-square (degrees of freedom), Laplace
/// (location, scale) and Student's t (degrees of freedom).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DistributionSpec {
    Normal { mean: f64, variance: f64 },
    Exponential { rate: f64 },
    Uniform { lower: f64, upper: f64 },
    Gamma { shape: f64, rate: f64 },
    ChiSquare { dof: f64 },
    Laplace { location: f64, scale: f64 },
    StudentT { dof: f64 },
}

/// Exact moments. Skewness and kurtosis use the standardized (non-excess)
/// convention, so the normal has kurtosis 3. `None` marks a moment that
/// does not exist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub eighth_moment_finite: bool,
}

impl MomentSummary {
    pub fn mean(&self) -> Result<f64> {
        self.mean.ok_or(Error::UndefinedMoment("mean"))
    }

    pub fn variance(&self) -> Result<f64> {
        self.variance.ok_or(Error::UndefinedMoment("variance"))
    }

    pub fn skewness(&self) -> Result<f64> {
        self.skewness.ok_or(Error::UndefinedMoment("skewness"))
    }

    pub fn kurtosis(&self) -> Result<f64> {
        self.kurtosis.ok_or(Error::UndefinedMoment("kurtosis"))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} must be finite, got {v}")))
    }
}

impl DistributionSpec {
    pub fn normal(mean: f64, variance: f64) -> Result<Self> {
        finite("mean", mean)?;
        positive("variance", variance)?;
        Ok(DistributionSpec::Normal { mean, variance })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(DistributionSpec::Exponential { rate })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        finite("lower", lower)?;
        finite("upper", upper)?;
        if lower >= upper {
            return Err(Error::InvalidSpec(format!(
                "uniform needs lower < upper, got ({lower}, {upper})"
            )));
        }
        Ok(DistributionSpec::Uniform { lower, upper })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("rate", rate)?;
        Ok(DistributionSpec::Gamma { shape, rate })
    }

    pub fn chi_square(dof: f64) -> Result<Self> {
        positive("degrees of freedom", dof)?;
        Ok(DistributionSpec::ChiSquare { dof })
    }

    pub fn laplace(location: f64, scale: f64) -> Result<Self> {
        finite("location", location)?;
        positive("scale", scale)?;
        Ok(DistributionSpec::Laplace { location, scale })
    }

    pub fn student_t(dof: f64) -> Result<Self> {
        positive("degrees of freedom", dof)?;
        Ok(DistributionSpec::StudentT { dof })
    }

    pub fn from_parts(family: Family, params: &[f64]) -> Result<Self> {
        if params.len() != family.arity() {
            return Err(Error::InvalidSpec(format!(
                "{} takes {} parameter(s), got {}",
                family.name(),
                family.arity(),
                params.len()
            )));
        }
        match family {
            Family::Normal => Self::normal(params[0], params[1]),
            Family::Exponential => Self::exponential(params[0]),
            Family::Uniform => Self::uniform(params[0], params[1]),
            Family::Gamma => Self::gamma(params[0], params[1]),
            Family::ChiSquare => Self::chi_square(params[0]),
            Family::Laplace => Self::laplace(params[0], params[1]),
            Family::StudentT => Self::student_t(params[0]),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            DistributionSpec::Normal { .. } => Family::Normal,
            DistributionSpec::Exponential { .. } => Family::Exponential,
            DistributionSpec::Uniform { .. } => Family::Uniform,
            DistributionSpec::Gamma { .. } => Family::Gamma,
            DistributionSpec::ChiSquare { .. } => Family::ChiSquare,
            DistributionSpec::Laplace { .. } => Family::Laplace,
            DistributionSpec::StudentT { .. } => Family::StudentT,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            DistributionSpec::Normal { mean, variance } => vec![mean, variance],
            DistributionSpec::Exponential { rate } => vec![rate],
            DistributionSpec::Uniform { lower, upper } => vec![lower, upper],
            DistributionSpec::Gamma { shape, rate } => vec![shape, rate],
            DistributionSpec::ChiSquare { dof } => vec![dof],
            DistributionSpec::Laplace { location, scale } => vec![location, scale],
            DistributionSpec::StudentT { dof } => vec![dof],
        }
    }

    /// Closed-form moments.
    pub fn moments(&self) -> MomentSummary {
        let all = |mean: f64, variance: f64, skewness: f64, kurtosis: f64| MomentSummary {
            mean: Some(mean),
            variance: Some(variance),
            skewness: Some(skewness),
            kurtosis: Some(kurtosis),
            eighth_moment_finite: true,
        };
        match *self {
            DistributionSpec::Normal { mean, variance } => all(mean, variance, 0.0, 3.0),
            DistributionSpec::Exponential { rate } => all(1.0 / rate, 1.0 / (rate * rate), 2.0, 9.0),
            DistributionSpec::Uniform { lower, upper } => {
                all(0.5 * (lower + upper), (upper - lower).powi(2) / 12.0, 0.0, 1.8)
            }
            DistributionSpec::Gamma { shape, rate } => all(
                shape / rate,
                shape / (rate * rate),
                2.0 / shape.sqrt(),
                3.0 + 6.0 / shape,
            ),
            DistributionSpec::ChiSquare { dof } => {
                all(dof, 2.0 * dof, (8.0 / dof).sqrt(), 3.0 + 12.0 / dof)
            }
            DistributionSpec::Laplace { location, scale } => {
                all(location, 2.0 * scale * scale, 0.0, 6.0)
            }
            DistributionSpec::StudentT { dof } => MomentSummary {
                mean: (dof > 1.0).then_some(0.0),
                variance: (dof > 2.0).then(|| dof / (dof - 2.0)),
                skewness: (dof > 3.0).then_some(0.0),
                kurtosis: (dof > 4.0).then(|| 3.0 + 6.0 / (dof - 4.0)),
                eighth_moment_finite: dof > 8.0,
            },
        }
    }

    /// Lebesgue density; zero outside the support.
    pub fn density(&self, y: f64) -> f64 {
        match *self {
            DistributionSpec::Normal { mean, variance } => {
                let sd = variance.sqrt();
                std_normal_pdf((y - mean) / sd) / sd
            }
            DistributionSpec::Exponential { rate } => {
                if y < 0.0 {
                    0.0
                } else {
                    rate * (-rate * y).exp()
                }
            }
            DistributionSpec::Uniform { lower, upper } => {
                if y < lower || y > upper {
                    0.0
                } else {
                    1.0 / (upper - lower)
                }
            }
            DistributionSpec::Gamma { shape, rate } => gamma_density(shape, rate, y),
            DistributionSpec::ChiSquare { dof } => gamma_density(0.5 * dof, 0.5, y),
            DistributionSpec::Laplace { location, scale } => {
                (-(y - location).abs() / scale).exp() / (2.0 * scale)
            }
            DistributionSpec::StudentT { dof } => {
                let ln_norm = ln_gamma(0.5 * (dof + 1.0))
                    - ln_gamma(0.5 * dof)
                    - 0.5 * (dof * PI).ln();
                (ln_norm - 0.5 * (dof + 1.0) * (y * y / dof).ln_1p()).exp()
            }
        }
    }

    /// Draw one variate from `stream`.
    pub fn draw(&self, stream: &mut RandomStream) -> f64 {
        match *self {
            DistributionSpec::Normal { mean, variance } => {
                mean + variance.sqrt() * stream.standard_normal()
            }
            DistributionSpec::Exponential { rate } => stream.standard_exponential() / rate,
            DistributionSpec::Uniform { lower, upper } => {
                lower + (upper - lower) * stream.uniform()
            }
            DistributionSpec::Gamma { shape, rate } => stream.standard_gamma(shape) / rate,
            DistributionSpec::ChiSquare { dof } => 2.0 * stream.standard_gamma(0.5 * dof),
            DistributionSpec::Laplace { location, scale } => {
                let u = stream.uniform() - 0.5;
                location - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            DistributionSpec::StudentT { dof } => {
                let z = stream.standard_normal();
                let chi = 2.0 * stream.standard_gamma(0.5 * dof);
                z / (chi / dof).sqrt()
            }
        }
    }

    /// Fill `out` with i.i.d. draws.
    pub fn fill(&self, out: &mut [f64], stream: &mut RandomStream) {
        for slot in out {
            *slot = self.draw(stream);
        }
    }

    pub fn sample(&self, n: usize, stream: &mut RandomStream) -> Result<Sample> {
        let mut values = vec![0.0; n];
        self.fill(&mut values, stream);
        Sample::new(values)
    }
}

fn gamma_density(shape: f64, rate: f64, y: f64) -> f64 {
    if y < 0.0 || (y == 0.0 && shape > 1.0) {
        return 0.0;
    }
    if y == 0.0 {
        return if shape == 1.0 { rate } else { f64::INFINITY };
    }
    (shape * rate.ln() + (shape - 1.0) * y.ln() - rate * y - ln_gamma(shape)).exp()
}

fn fmt_param(v: f64) -> String {
    format!("{v}")
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params().into_iter().map(fmt_param).collect();
        write!(f, "{}({})", self.family().name(), params.join(","))
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parses `family(p1,p2,...)`, case-insensitively, e.g. `normal(0,1)`,
    /// `Gamma(2, 1)`, `t(5)`. Named presets are accepted as well.
    fn from_str(input: &str) -> Result<Self> {
        let trimmed = input.trim();
        let lower = trimmed.to_ascii_lowercase();
        if let Some(spec) = preset(&lower) {
            return Ok(spec);
        }
        let parse_err = |token: &str| Error::SpecParse {
            input: input.to_string(),
            token: token.to_string(),
        };

        let open = lower.find('(').ok_or_else(|| parse_err(&lower))?;
        let name = lower[..open].trim();
        let family = Family::from_name(name).ok_or_else(|| parse_err(name))?;
        let rest = &lower[open + 1..];
        let close = rest.rfind(')').ok_or_else(|| parse_err(rest))?;
        let tail = rest[close + 1..].trim();
        if !tail.is_empty() {
            return Err(parse_err(tail));
        }
        let body = rest[..close].trim();
        let params = if body.is_empty() {
            Vec::new()
        } else {
            body.split(',')
                .map(|tok| {
                    let tok = tok.trim();
                    tok.parse::<f64>().map_err(|_| parse_err(tok))
                })
                .collect::<Result<Vec<f64>>>()?
        };
        DistributionSpec::from_parts(family, &params)
    }
}

/// Named configurations: the standard parents plus the matched-moment
/// pairs (Laplace vs gamma with equal mean, variance and kurtosis; normal
/// vs t(5) with equal mean, variance and skewness).
pub const PRESETS: &[(&str, &str)] = &[
    ("std-normal", "normal(0,1)"),
    ("std-exp", "exp(1)"),
    ("std-unif", "unif(0,1)"),
    ("gamma21", "gamma(2,1)"),
    ("chisq1", "chisq(1)"),
    ("pair-skew-gamma", "gamma(2,1)"),
    ("pair-skew-laplace", "laplace(2,1)"),
    ("pair-kurt-normal", "normal(0,1.6666666666666667)"),
    ("pair-kurt-t5", "t(5)"),
];

pub fn preset(name: &str) -> Option<DistributionSpec> {
    PRESETS
        .iter()
        .find(|(key, _)| key.eq_ignore_ascii_case(name))
        .and_then(|(_, text)| text.parse().ok())
}

/// The parents used for the published critical value tables.
pub fn table_catalog() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::Normal { mean: 0.0, variance: 1.0 },
        DistributionSpec::Exponential { rate: 1.0 },
        DistributionSpec::Uniform { lower: 0.0, upper: 1.0 },
        DistributionSpec::Gamma { shape: 2.0, rate: 1.0 },
        DistributionSpec::ChiSquare { dof: 1.0 },
    ]
}

/// Every distribution shipped with the crate, presets included.
pub fn full_catalog() -> Vec<DistributionSpec> {
    let mut specs = table_catalog();
    specs.push(DistributionSpec::Laplace { location: 2.0, scale: 1.0 });
    specs.push(DistributionSpec::Normal { mean: 0.0, variance: 5.0 / 3.0 });
    specs.push(DistributionSpec::StudentT { dof: 5.0 });
    specs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> DistributionSpec {
        s.parse().unwrap()
    }

    #[test]
    fn moments_match_closed_forms() {
        let m = spec("exp(1)").moments();
        assert_eq!(
            (m.mean, m.variance, m.skewness, m.kurtosis),
            (Some(1.0), Some(1.0), Some(2.0), Some(9.0))
        );
        let m = spec("unif(0,1)").moments();
        assert_eq!((m.skewness, m.kurtosis), (Some(0.0), Some(1.8)));
        let m = spec("normal(3,4)").moments();
        assert_eq!((m.skewness, m.kurtosis), (Some(0.0), Some(3.0)));
        let m = spec("gamma(2,1)").moments();
        assert!((m.skewness.unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.kurtosis, Some(6.0));
    }

    #[test]
    fn student_t_moment_existence() {
        let m = spec("t(5)").moments();
        assert_eq!(m.variance, Some(5.0 / 3.0));
        assert_eq!(m.kurtosis, Some(9.0));
        assert!(!m.eighth_moment_finite);
        let m = spec("t(4)").moments();
        assert!(m.kurtosis.is_none());
        assert!(m.skewness.is_some());
        let m = spec("t(2)").moments();
        assert!(m.variance.is_none() && m.mean.is_some());
        let m = spec("t(1)").moments();
        assert!(m.mean.is_none());
        assert!(spec("t(9)").moments().eighth_moment_finite);
    }

    #[test]
    fn matched_pairs_agree_on_moments() {
        let g = preset("pair-skew-gamma").unwrap().moments();
        let l = preset("pair-skew-laplace").unwrap().moments();
        assert_eq!(g.mean, l.mean);
        assert_eq!(g.variance, l.variance);
        assert_eq!(g.kurtosis, l.kurtosis);
        assert_ne!(g.skewness, l.skewness);

        let n = preset("pair-kurt-normal").unwrap().moments();
        let t = preset("pair-kurt-t5").unwrap().moments();
        assert_eq!(n.mean, t.mean);
        assert!((n.variance.unwrap() - t.variance.unwrap()).abs() < 1e-15);
        assert_eq!(n.skewness, t.skewness);
        assert!(t.kurtosis.unwrap() > n.kurtosis.unwrap());
    }

    #[test]
    fn pearson_bound_holds_across_catalog() {
        for s in full_catalog() {
            let m = s.moments();
            if let (Some(s1), Some(s2)) = (m.skewness, m.kurtosis) {
                assert!(s2 >= s1 * s1 + 1.0, "{s}");
                assert!(s2 / 2.0 > s1 * s1 / 3.0, "{s}");
            }
        }
    }

    #[test]
    fn density_values() {
        assert_eq!(spec("exp(1)").density(-1.0), 0.0);
        assert_eq!(spec("laplace(0,1)").density(0.0), 0.5);
        assert!((spec("normal(0,1)").density(0.0) - 0.398_94).abs() < 1e-5);
        assert_eq!(spec("unif(0,1)").density(1.5), 0.0);
        assert_eq!(spec("gamma(2,1)").density(-0.1), 0.0);
        // chi-square(2) is exponential with rate 1/2
        assert!((spec("chisq(2)").density(1.3) - 0.5 * (-0.65f64).exp()).abs() < 1e-14);
        // t(1) is Cauchy
        assert!((spec("t(1)").density(0.5) - 1.0 / (PI * 1.25)).abs() < 1e-14);
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(spec("Normal(0, 1)"), DistributionSpec::normal(0.0, 1.0).unwrap());
        assert_eq!(spec("GAMMA(2,1)").to_string(), "gamma(2,1)");
        assert_eq!(spec("t(5)").to_string(), "t(5)");
        assert_eq!(spec("chi2(1)"), DistributionSpec::chi_square(1.0).unwrap());
        let round: DistributionSpec = spec("unif(-1.5,2.25)").to_string().parse().unwrap();
        assert_eq!(round, spec("unif(-1.5,2.25)"));
        assert_eq!(spec("std-exp"), spec("exp(1)"));
    }

    #[test]
    fn parse_errors_name_token() {
        match "weibull(1,2)".parse::<DistributionSpec>() {
            Err(Error::SpecParse { token, .. }) => assert_eq!(token, "weibull"),
            other => panic!("{other:?}"),
        }
        match "normal(0,abc)".parse::<DistributionSpec>() {
            Err(Error::SpecParse { token, .. }) => assert_eq!(token, "abc"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            "normal(0,-1)".parse::<DistributionSpec>(),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            "exp(1,2)".parse::<DistributionSpec>(),
            Err(Error::InvalidSpec(_))
        ));
        assert!("unif(2,1)".parse::<DistributionSpec>().is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = spec("gamma(0.5,2)");
        let a = s.sample(50, &mut RandomStream::new(9, 1)).unwrap();
        let b = s.sample(50, &mut RandomStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_sample_mean() {
        let s = spec("unif(0,1)");
        let x = s.sample(1_000_000, &mut RandomStream::new(1, 0)).unwrap();
        assert!((x.mean() - 0.5).abs() < 0.004);
    }
}
