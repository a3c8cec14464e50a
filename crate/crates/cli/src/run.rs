//! `aci run`: one algorithm over one or more series from a CSV file.

use std::fs;
use std::path::Path;

use aci_core::simgen::estimate_d;
use aci_core::stream::EtaConvention;
use aci_core::{
    build_algorithm, run_stream, ConstructorKind, EvalRange, MaxRadius, Method, RunConfig, RunReport, StreamStep,
    TargetLevel,
};
use anyhow::{bail, Context};
use serde_json::{Map, Value};

use crate::args::{InputFormat, RunArgs};
use crate::error::{usage, CliResult};
use crate::io::{read_flusight_csv, read_input, write_intervals, OutputRecord, Series};

/// Where the maximum radius comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DSource {
    None,
    Fixed(MaxRadius),
    /// Largest absolute residual over these rows.
    Window(EvalRange),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: RunConfig,
    pub d: DSource,
    pub eval_range: Option<EvalRange>,
    pub log_transform: bool,
    pub sa_windows: Vec<usize>,
    /// Rows of this season warm up the run and calibrate D.
    pub warmup_season: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub steps: Vec<StreamStep>,
    pub records: Vec<OutputRecord>,
    pub report: RunReport,
}

impl RunOptions {
    pub fn from_args(args: &RunArgs) -> CliResult<Self> {
        let alpha = TargetLevel::new(args.alpha).map_err(|e| usage(e.to_string()))?;
        let mut config = RunConfig::new(args.method, alpha);
        if let Some(c) = args.constructor {
            config.constructor = c;
        }
        config.gamma = args.gamma;
        if let Some(grid) = &args.gamma_grid {
            config.gamma_grid = grid.clone();
        }
        config.theta1 = args.theta1;
        config.lifetime_multiplier = args.lifetime_g;
        config.interval_length = args.interval_length;
        config.eta_convention = EtaConvention::Coverage;
        let d = match (args.d, args.calibrate_d) {
            (Some(d), _) => DSource::Fixed(MaxRadius::new(d).map_err(|e| usage(e.to_string()))?),
            (None, Some(w)) => DSource::Window(w),
            (None, None) => DSource::None,
        };
        if args.warmup_season.is_some() && args.input_format != InputFormat::Flusight {
            return Err(usage("--warmup-season needs --input-format flusight"));
        }
        if args.sa_windows.contains(&0) {
            return Err(usage("strongly adaptive regret windows must be positive"));
        }
        Ok(Self {
            config,
            d,
            eval_range: args.eval_range,
            log_transform: args.log_transform,
            sa_windows: args.sa_windows.clone(),
            warmup_season: args.warmup_season.clone(),
        })
    }

    /// Checks everything that does not depend on the data.
    pub fn validate(&self) -> CliResult<()> {
        let mut probe = self.config.clone();
        let d_known =
            self.d != DSource::None || self.warmup_season.is_some() || probe.constructor == ConstructorKind::Quantile;
        if d_known {
            probe.max_radius = Some(MaxRadius::new(1.0).expect("positive"));
        }
        probe.validate().map_err(|e| usage(format!("{e}; pass --D or --calibrate-D")))
    }
}

fn warmup_rows(series: &Series, season: &str) -> anyhow::Result<usize> {
    let n = series.seasons.iter().take_while(|s| s.as_deref() == Some(season)).count();
    if n == 0 {
        bail!("series {:?} does not start with season {season}", series.group.as_deref().unwrap_or(""));
    }
    if n == series.rows.len() {
        bail!("series {:?} has no rows after the warm-up season", series.group.as_deref().unwrap_or(""));
    }
    Ok(n)
}

/// Runs one series. Metrics are computed on the working scale (log scale
/// under `log_transform`); output bounds are on the original scale.
pub fn run_series(series: &Series, opts: &RunOptions) -> anyhow::Result<RunOutput> {
    let group = series.group.as_deref().unwrap_or("");
    let mut pairs = series.pairs();
    if opts.log_transform {
        if let Some(r) = series.rows.iter().find(|r| r.y <= 0.0 || r.mu_hat <= 0.0) {
            bail!("log transform needs positive values (group {group:?}, t = {})", r.t);
        }
        for p in &mut pairs {
            *p = (p.0.ln(), p.1.ln());
        }
    }
    let n = pairs.len();
    let warm = opts.warmup_season.as_deref().map(|s| warmup_rows(series, s)).transpose()?;

    let residuals: Vec<f64> = pairs.iter().map(|(m, y)| y - m).collect();
    let d = match &opts.d {
        DSource::Fixed(d) => Some(*d),
        DSource::Window(w) => {
            Some(estimate_d(&residuals, *w).with_context(|| format!("calibrating D for group {group:?}"))?)
        }
        DSource::None => match warm {
            Some(k) => Some(estimate_d(&residuals, EvalRange::new(1, k))?),
            None => None,
        },
    };
    let mut config = opts.config.clone();
    config.max_radius = d.or_else(|| {
        (config.constructor == ConstructorKind::Quantile && matches!(config.method, Method::SfOgd | Method::Saocp))
            .then(|| MaxRadius::new(1.0).expect("positive"))
    });
    let mut algo = build_algorithm(&config)?;
    let steps = run_stream(&mut algo, pairs)?;

    let eval = opts.eval_range.unwrap_or(match warm {
        Some(k) => EvalRange::new(k + 1, n),
        None => EvalRange::full(n),
    });
    let mut report = RunReport::compute(&steps, eval, config.alpha, &opts.sa_windows)
        .with_context(|| format!("evaluation range for group {group:?}"))?;
    if let Some(d) = config.max_radius {
        report = report.with_max_radius(d.get());
    }

    let records = steps
        .iter()
        .zip(&series.rows)
        .map(|(s, row)| {
            let (mut lower, mut upper) = (s.interval.lower, s.interval.upper);
            if opts.log_transform {
                lower = lower.exp();
                upper = upper.exp();
            }
            OutputRecord {
                t: row.t,
                y: row.y,
                mu_hat: row.mu_hat,
                lower,
                upper,
                covered: u8::from(s.covered()),
                theta: s.theta,
                width: upper - lower,
            }
        })
        .collect();
    Ok(RunOutput { steps, records, report })
}

fn sanitize(name: &str) -> String {
    let s: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect();
    if s.is_empty() || s.starts_with('.') {
        format!("_{s}")
    } else {
        s
    }
}

fn write_run(dir: &Path, out: &RunOutput) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_intervals(&dir.join("intervals.csv"), &out.records)?;
    let json = serde_json::to_string_pretty(&out.report.to_json())?;
    fs::write(dir.join("metrics.json"), json + "\n")?;
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let opts = RunOptions::from_args(args)?;
    opts.validate()?;
    let series = match args.input_format {
        InputFormat::Plain => read_input(&args.input)?,
        InputFormat::Flusight => read_flusight_csv(&args.input)?,
    };
    let grouped = series.len() > 1 || series.iter().any(|s| s.group.is_some());
    let mut summary = Map::new();
    for s in &series {
        let out = run_series(s, &opts)?;
        let name = s.group.clone().unwrap_or_default();
        log::info!(
            "{} {name}: coverage {:.4} over rows {}..={}",
            opts.config.method,
            out.report.empirical_coverage,
            out.report.eval_range.start,
            out.report.eval_range.end
        );
        if grouped {
            write_run(&args.out.join(sanitize(&name)), &out)?;
            summary.insert(name, out.report.to_json());
        } else {
            write_run(&args.out, &out)?;
        }
    }
    if grouped {
        fs::create_dir_all(&args.out).context("creating output directory")?;
        let json = serde_json::to_string_pretty(&Value::Object(summary)).context("serializing summary")?;
        fs::write(args.out.join("summary.json"), json + "\n").context("writing summary.json")?;
    }
    Ok(())
}
