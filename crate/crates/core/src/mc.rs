//! Monte Carlo engine: B replicate statistics at the true mean of a parent
//! distribution, and the empirical test size derived from them.
//!
//! Replicate `b` draws from [`RandomStream::new(seed, b)`](RandomStream), so
//! a batch is bit-identical for any worker count. Samples whose hull
//! excludes the true mean carry `ℓ = +∞` and are always rejected.

use rayon::prelude::*;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::distributions::{DistributionSpec, Family};
use crate::el::log_ratio_statistic;
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::special::chisq1_quantile;

pub const DEFAULT_REPLICATES: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 20_240_601;

/// Replicate count, base seed and worker count for a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub replicates: usize,
    pub seed: u64,
    /// `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            replicates: DEFAULT_REPLICATES,
            seed: DEFAULT_SEED,
            workers: None,
        }
    }
}

impl McConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        McConfig {
            replicates,
            seed,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Run `f` on a pool with the configured number of workers.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.workers {
            None => Ok(f()),
            Some(k) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(k.max(1))
                    .build()
                    .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

/// Sorted replicate statistics for one (distribution, n, B, seed).
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateBatch {
    statistics: Vec<f64>,
    n: usize,
    spec: DistributionSpec,
    mu0: f64,
    seed: u64,
    hull_violations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeEstimate {
    pub alpha_hat: f64,
    pub std_error: f64,
}

impl ReplicateBatch {
    /// Assemble a batch from raw statistics (any order).
    pub fn from_statistics(
        spec: DistributionSpec,
        n: usize,
        seed: u64,
        mut statistics: Vec<f64>,
    ) -> Result<Self> {
        if statistics.is_empty() {
            return Err(Error::domain("a batch needs at least one replicate"));
        }
        if statistics.iter().any(|s| s.is_nan() || *s < 0.0) {
            return Err(Error::domain("statistics must be nonnegative numbers"));
        }
        let mu0 = spec.moments().mean()?;
        statistics.sort_by(f64::total_cmp);
        let hull_violations = statistics.iter().rev().take_while(|s| s.is_infinite()).count();
        Ok(ReplicateBatch {
            statistics,
            n,
            spec,
            mu0,
            seed,
            hull_violations,
        })
    }

    pub fn statistics(&self) -> &[f64] {
        &self.statistics
    }

    pub fn replicates(&self) -> usize {
        self.statistics.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hull_violations(&self) -> usize {
        self.hull_violations
    }

    pub fn hull_violation_rate(&self) -> f64 {
        self.hull_violations as f64 / self.replicates() as f64
    }

    /// Fraction of statistics strictly above `critical_value`.
    pub fn rejection_rate(&self, critical_value: f64) -> f64 {
        let at_or_below = self.statistics.partition_point(|&s| s <= critical_value);
        (self.replicates() - at_or_below) as f64 / self.replicates() as f64
    }

    /// Realized size of the nominal level-`alpha` test and its binomial
    /// standard error.
    pub fn empirical_size(&self, alpha: f64) -> Result<SizeEstimate> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha must be in (0, 1), got {alpha}")));
        }
        let alpha_hat = self.rejection_rate(chisq1_quantile(1.0 - alpha)?);
        let std_error = (alpha_hat * (1.0 - alpha_hat) / self.replicates() as f64).sqrt();
        Ok(SizeEstimate {
            alpha_hat,
            std_error,
        })
    }

    /// Empirical (1 − alpha)-quantile: the order statistic at 0-based
    /// index ⌊(1 − alpha)·B⌋, clamped to the last one.
    pub fn empirical_critical_value(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha must be in (0, 1), got {alpha}")));
        }
        let b = self.replicates();
        let index = (((1.0 - alpha) * b as f64) + 1e-9).floor() as usize;
        let value = self.statistics[index.min(b - 1)];
        if value.is_infinite() {
            return Err(Error::QuantileInHullMass);
        }
        Ok(value)
    }

    fn header(&self) -> String {
        format!(
            "# elr-batch spec={} n={} B={} seed={} mu0={} hull_violations={}",
            self.spec,
            self.n,
            self.replicates(),
            self.seed,
            self.mu0,
            self.hull_violations
        )
    }

    /// Header line with metadata, then one statistic per line (`inf` for
    /// hull violations), ascending.
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "{}", self.header())?;
        for s in &self.statistics {
            writeln!(out, "{s}")?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format("batch file", "empty file"))??;
        let fields = header
            .strip_prefix("# elr-batch ")
            .ok_or_else(|| Error::format("batch file", "missing header"))?;
        let mut spec = None;
        let mut n = None;
        let mut b = None;
        let mut seed = None;
        for field in fields.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::format("batch file", format!("bad field {field:?}")))?;
            let bad = |_| Error::format("batch file", format!("bad value in {field:?}"));
            match key {
                "spec" => spec = Some(value.parse::<DistributionSpec>()?),
                "n" => n = Some(value.parse::<usize>().map_err(bad)?),
                "B" => b = Some(value.parse::<usize>().map_err(bad)?),
                "seed" => seed = Some(value.parse::<u64>().map_err(bad)?),
                _ => {}
            }
        }
        let missing = |k: &str| Error::format("batch file", format!("header lacks {k}"));
        let spec = spec.ok_or_else(|| missing("spec"))?;
        let n = n.ok_or_else(|| missing("n"))?;
        let b = b.ok_or_else(|| missing("B"))?;
        let seed = seed.ok_or_else(|| missing("seed"))?;

        let mut statistics = Vec::with_capacity(b);
        for (i, line) in lines.enumerate() {
            let line = line?;
            let value = line.trim().parse::<f64>().map_err(|_| {
                Error::format("batch file", format!("line {}: {:?}", i + 2, line))
            })?;
            statistics.push(value);
        }
        if statistics.len() != b {
            return Err(Error::format(
                "batch file",
                format!("header says B={b} but {} statistics follow", statistics.len()),
            ));
        }
        ReplicateBatch::from_statistics(spec, n, seed, statistics)
    }
}

fn check_admissible(spec: &DistributionSpec) -> Result<f64> {
    let moments = spec.moments();
    let mean = moments
        .mean
        .ok_or_else(|| Error::Unsupported(spec.to_string(), "the mean does not exist"))?;
    if moments.variance.is_none() {
        return Err(Error::Unsupported(spec.to_string(), "the variance is infinite"));
    }
    Ok(mean)
}

/// Simulate `cfg.replicates` statistics ℓ⁽ᵇ⁾(μ0) from samples of size `n`,
/// with μ0 the exact mean of `spec`.
pub fn run_batch(spec: &DistributionSpec, n: usize, cfg: &McConfig) -> Result<ReplicateBatch> {
    if n < 2 {
        return Err(Error::domain(format!("sample size must be at least 2, got {n}")));
    }
    if cfg.replicates == 0 {
        return Err(Error::domain("at least one replicate is required"));
    }
    let mu0 = check_admissible(spec)?;
    let seed = cfg.seed;
    let statistics: Vec<f64> = cfg.install(|| {
        (0..cfg.replicates as u64)
            .into_par_iter()
            .map_init(
                || vec![0.0; n],
                |buf, b| {
                    let mut stream = RandomStream::new(seed, b);
                    spec.fill(buf, &mut stream);
                    log_ratio_statistic(buf, mu0)
                },
            )
            .collect()
    })?;
    ReplicateBatch::from_statistics(*spec, n, seed, statistics)
}

/// Directory of persisted batches keyed by (family, params, n, B, seed).
#[derive(Debug, Clone)]
pub struct BatchCache {
    dir: PathBuf,
}

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "ELR_CACHE_DIR";

impl BatchCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        BatchCache { dir: dir.into() }
    }

    /// Cache rooted at `$ELR_CACHE_DIR`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_DIR_ENV).map(BatchCache::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, spec: &DistributionSpec, n: usize, replicates: usize, seed: u64) -> PathBuf {
        let params: Vec<String> = spec.params().iter().map(|p| format!("{p}")).collect();
        let family: Family = spec.family();
        self.dir.join(format!(
            "{}_{}_n{}_B{}_s{}.batch",
            family.name(),
            params.join("_"),
            n,
            replicates,
            seed
        ))
    }

    pub fn load(
        &self,
        spec: &DistributionSpec,
        n: usize,
        replicates: usize,
        seed: u64,
    ) -> Result<Option<ReplicateBatch>> {
        let path = self.path_for(spec, n, replicates, seed);
        if !path.exists() {
            return Ok(None);
        }
        let batch = ReplicateBatch::read_from(BufReader::new(fs::File::open(path)?))?;
        if batch.spec() != spec || batch.n() != n || batch.replicates() != replicates || batch.seed() != seed {
            return Err(Error::format("batch file", "cached batch does not match its key"));
        }
        Ok(Some(batch))
    }

    pub fn store(&self, batch: &ReplicateBatch) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(batch.spec(), batch.n(), batch.replicates(), batch.seed());
        let tmp = path.with_extension("tmp");
        {
            let mut out = BufWriter::new(fs::File::create(&tmp)?);
            batch.write_to(&mut out)?;
            out.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn get_or_run(&self, spec: &DistributionSpec, n: usize, cfg: &McConfig) -> Result<ReplicateBatch> {
        if let Some(batch) = self.load(spec, n, cfg.replicates, cfg.seed)? {
            return Ok(batch);
        }
        let batch = run_batch(spec, n, cfg)?;
        self.store(&batch)?;
        Ok(batch)
    }
}

/// Run a batch, going through `cache` when one is given.
pub fn batch_with_cache(
    spec: &DistributionSpec,
    n: usize,
    cfg: &McConfig,
    cache: Option<&BatchCache>,
) -> Result<ReplicateBatch> {
    match cache {
        Some(cache) => cache.get_or_run(spec, n, cfg),
        None => run_batch(spec, n, cfg),
    }
}
