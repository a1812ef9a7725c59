use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use elr_core::calibration::{build_table, table_sanity, TableSettings};
use elr_core::curves::{
    curve_scaled_deviation, curve_vs_alpha, curve_vs_n, default_alpha_grid, default_n_grid,
    StandardCurve, TABLE_COVERAGES, TABLE_SAMPLE_SIZES,
};
use elr_core::distributions::DistributionSpec;
use elr_core::el::{el_statistic, Sample};
use elr_core::mc::{BatchCache, McConfig, CACHE_DIR_ENV, DEFAULT_REPLICATES, DEFAULT_SEED};
use elr_core::report;

#[derive(Parser)]
#[command(name = "elr", version, about = "Empirical likelihood ratio test of a mean: statistics, standard curves, calibrated critical values")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ELR statistic, Lagrange multiplier and asymptotic p-value for a data file.
    Elr {
        /// Text file with one number per line; `#` lines are comments.
        data: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        mu0: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Realized size against sample size at a fixed nominal level.
    CurveN {
        #[command(flatten)]
        sim: Simulation,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Comma-separated sample sizes [default: 10,15,...,100].
        #[arg(long = "n-grid", value_delimiter = ',')]
        n_grid: Vec<usize>,
        /// Emit n·|α̂ₙ − α| instead of α̂ₙ.
        #[arg(long)]
        scaled: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Realized against nominal level at a fixed sample size.
    CurveAlpha {
        #[command(flatten)]
        sim: Simulation,
        #[arg(long)]
        n: usize,
        /// Comma-separated nominal levels [default: 0.005,0.010,...,0.5].
        #[arg(long = "alpha-grid", value_delimiter = ',')]
        alpha_grid: Vec<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Calibrated critical values for one sample size.
    Calibrate {
        #[command(flatten)]
        sim: Simulation,
        #[arg(long)]
        n: usize,
        /// Target size; shorthand for a single --coverage of 1 − alpha.
        #[arg(long, conflicts_with = "coverage")]
        alpha: Option<f64>,
        #[command(flatten)]
        cal: CalibrationArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Full critical value table, rows n and columns 1 − α.
    Table {
        #[command(flatten)]
        sim: Simulation,
        /// Comma-separated rows [default: 10,15,20,30,50,100].
        #[arg(long = "n-grid", value_delimiter = ',')]
        n_grid: Vec<usize>,
        #[command(flatten)]
        cal: CalibrationArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Asymptotic χ²₁ critical values.
    Quantiles {
        /// Comma-separated coverage levels [default: the table columns].
        #[arg(long, value_delimiter = ',')]
        coverage: Vec<f64>,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct Simulation {
    /// Parent distribution, e.g. `normal(0,1)`, `exp(1)`, `gamma(2,1)`, `t(5)`.
    #[arg(long)]
    dist: String,
    /// Monte Carlo replicates (at least 100).
    #[arg(long = "B", default_value_t = DEFAULT_REPLICATES, value_parser = parse_replicates)]
    replicates: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads [default: all cores]. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Directory for cached replicate batches.
    #[arg(long = "cache-dir", env = CACHE_DIR_ENV)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrationArgs {
    /// Comma-separated target coverage levels 1 − α [default: table columns].
    #[arg(long, value_delimiter = ',')]
    coverage: Vec<f64>,
    /// Comma-separated nominal levels of the standard curve.
    #[arg(long = "alpha-grid", value_delimiter = ',')]
    alpha_grid: Vec<f64>,
    /// Subtracted from the interpolated nominal level (5e-4 gives a conservative test).
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
}

#[derive(Args)]
struct Output {
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

fn parse_replicates(s: &str) -> Result<usize, String> {
    let b: usize = s.parse().map_err(|_| format!("not a count: {s}"))?;
    if b < 100 {
        return Err(format!("B must be at least 100, got {b}"));
    }
    Ok(b)
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

impl Simulation {
    fn spec(&self) -> AnyResult<DistributionSpec> {
        Ok(self.dist.parse()?)
    }

    fn config(&self) -> McConfig {
        let cfg = McConfig::new(self.replicates, self.seed);
        match self.workers {
            Some(w) => cfg.with_workers(w),
            None => cfg,
        }
    }

    fn cache(&self) -> Option<BatchCache> {
        self.cache_dir.as_ref().map(BatchCache::new)
    }
}

impl CalibrationArgs {
    fn settings(&self, n_values: Vec<usize>, coverages: Vec<f64>) -> TableSettings {
        TableSettings {
            n_values,
            coverages: if coverages.is_empty() { TABLE_COVERAGES.to_vec() } else { coverages },
            alpha_grid: if self.alpha_grid.is_empty() {
                default_alpha_grid()
            } else {
                self.alpha_grid.clone()
            },
            offset: self.offset,
        }
    }
}

impl Output {
    fn emit(&self, text: &str) -> AnyResult<()> {
        match &self.out {
            Some(path) => fs::write(path, text)?,
            None => io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

fn emit_curve(curve: &StandardCurve, out: &Output) -> AnyResult<()> {
    let text = match out.format {
        Format::Csv => report::curve_to_csv(curve)?,
        Format::Json => report::curve_to_json(curve),
        Format::Text => report::curve_to_text(curve),
    };
    out.emit(&text)
}

fn run_table(sim: &Simulation, settings: &TableSettings, out: &Output) -> AnyResult<()> {
    let table = build_table(&sim.spec()?, settings, &sim.config(), sim.cache().as_ref())?;
    let text = match out.format {
        Format::Csv => report::table_to_csv(&table)?,
        Format::Json => report::table_to_json(&table),
        Format::Text => report::table_to_text(&table),
    };
    out.emit(&text)?;
    let sanity = table_sanity(&table);
    for v in &sanity.violations {
        eprintln!("warning: {v:?}");
    }
    Ok(())
}

fn run(cli: Cli) -> AnyResult<()> {
    match cli.command {
        Command::Elr { data, mu0, out } => {
            let file = fs::File::open(&data).map_err(|e| format!("{}: {e}", data.display()))?;
            let values = report::read_data(BufReader::new(file))
                .map_err(|e| format!("{}: {e}", data.display()))?;
            let sample = Sample::new(values)?;
            let record = report::ElRecord::new(sample.len(), mu0, &el_statistic(&sample, mu0)?);
            let text = match out.format {
                Format::Csv => record.to_csv()?,
                Format::Json => record.to_json(),
                Format::Text => record.to_text(),
            };
            out.emit(&text)
        }
        Command::CurveN {
            sim,
            alpha,
            n_grid,
            scaled,
            out,
        } => {
            let grid = if n_grid.is_empty() { default_n_grid() } else { n_grid };
            let curve = curve_vs_n(&sim.spec()?, alpha, &grid, &sim.config(), sim.cache().as_ref())?;
            let curve = if scaled { curve_scaled_deviation(&curve)? } else { curve };
            emit_curve(&curve, &out)
        }
        Command::CurveAlpha {
            sim,
            n,
            alpha_grid,
            out,
        } => {
            let grid = if alpha_grid.is_empty() { default_alpha_grid() } else { alpha_grid };
            let curve = curve_vs_alpha(&sim.spec()?, n, &grid, &sim.config(), sim.cache().as_ref())?;
            emit_curve(&curve, &out)
        }
        Command::Calibrate {
            sim,
            n,
            alpha,
            cal,
            out,
        } => {
            let coverages = match alpha {
                Some(a) => vec![1.0 - a],
                None => cal.coverage.clone(),
            };
            run_table(&sim, &cal.settings(vec![n], coverages), &out)
        }
        Command::Table { sim, n_grid, cal, out } => {
            let rows = if n_grid.is_empty() { TABLE_SAMPLE_SIZES.to_vec() } else { n_grid };
            run_table(&sim, &cal.settings(rows, cal.coverage.clone()), &out)
        }
        Command::Quantiles { coverage, out } => {
            let levels = if coverage.is_empty() { TABLE_COVERAGES.to_vec() } else { coverage };
            let text = match out.format {
                Format::Csv => report::quantiles_to_csv(&levels)?,
                Format::Json => report::quantiles_to_json(&levels)?,
                Format::Text => report::quantiles_to_text(&levels)?,
            };
            out.emit(&text)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
