//! `aci bench`: the two simulation studies over a grid of cells.
//!
//! * `shift`: 500 Gaussian outcomes around a zero prediction whose scale
//!   grows by the study parameter after step 250. Scored on steps 51..=500.
//! * `arma`: 600 rows of the Friedman regression with ARMA(1,1) noise
//!   (`psi = xi =` the study parameter) and the oracle mean as predictor.
//!   D is the largest residual over rows 200..=249, the algorithms run on
//!   rows 250..=600, and scoring covers rows 300..=600.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use aci_core::metrics::DEFAULT_SA_WINDOWS;
use aci_core::simgen::{
    estimate_d, gen_friedman, gen_shift_stream, oracle_predictor, ArmaSpec, FriedmanSpec, RngSeed, ShiftSpec,
};
use aci_core::{
    build_algorithm, run_stream, ConstructorKind, EvalRange, MaxRadius, Method, RunConfig, RunReport, StreamStep,
    TargetLevel,
};
use anyhow::{Context, Result};
use clap::ValueEnum;
use rayon::prelude::*;

use crate::args::BenchArgs;
use crate::error::{usage, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum)]
pub enum Study {
    Arma,
    Shift,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Arma => "arma",
            Study::Shift => "shift",
        }
    }

    pub fn default_params(self) -> Vec<f64> {
        match self {
            Study::Arma => vec![0.1, 0.8, 0.9, 0.95, 0.99],
            Study::Shift => vec![0.0, 0.5],
        }
    }
}

/// The four methods compared in both studies.
pub const STUDY_METHODS: [Method; 4] = [Method::AgAci, Method::SfOgd, Method::Saocp, Method::Faci];

/// Inputs for one simulated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyData {
    pub pairs: Vec<(f64, f64)>,
    /// Maximum radius for each constructor.
    pub d_linear: f64,
    pub d_quantile: f64,
    /// Scored steps, relative to `pairs`.
    pub eval: EvalRange,
}

impl StudyData {
    pub fn d(&self, kind: ConstructorKind) -> f64 {
        match kind {
            ConstructorKind::Linear => self.d_linear,
            ConstructorKind::Quantile => self.d_quantile,
        }
    }
}

pub fn study_data(study: Study, param: f64, seed: u64) -> Result<StudyData> {
    match study {
        Study::Shift => {
            let pairs = gen_shift_stream(&ShiftSpec::new(param), RngSeed(seed));
            let residuals: Vec<f64> = pairs.iter().map(|(m, y)| y - m).collect();
            let d = estimate_d(&residuals, EvalRange::new(1, 50))?.get();
            let eval = EvalRange::new(51, pairs.len());
            Ok(StudyData { pairs, d_linear: d, d_quantile: 1.0, eval })
        }
        Study::Arma => {
            let rows = gen_friedman(&FriedmanSpec { length: 600 }, &ArmaSpec::symmetric(param, 600), RngSeed(seed))?;
            let preds: Vec<f64> = rows.iter().map(|r| oracle_predictor(&r.features)).collect();
            let residuals: Vec<f64> = rows.iter().zip(&preds).map(|(r, p)| r.outcome - p).collect();
            let d = estimate_d(&residuals, EvalRange::new(200, 249))?.get();
            let pairs: Vec<(f64, f64)> = preds.iter().zip(&rows).skip(249).map(|(p, r)| (*p, r.outcome)).collect();
            let eval = EvalRange::new(300 - 249, pairs.len());
            Ok(StudyData { pairs, d_linear: d, d_quantile: d, eval })
        }
    }
}

/// One (study, seed, method, level, parameter) combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub study: Study,
    pub seed: u64,
    pub method: Method,
    pub alpha: f64,
    pub param: f64,
}

impl Cell {
    fn sort_key(&self) -> (Study, Method, u64, u64, u64) {
        (self.study, self.method, ordered(self.alpha), ordered(self.param), self.seed)
    }
}

/// Order-preserving map from finite floats to integers.
fn ordered(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// Configuration used for `method` on `data`: native constructor, default
/// grid, `D` per constructor and `gamma = D / sqrt(3)`.
pub fn study_config(method: Method, alpha: TargetLevel, data: &StudyData) -> Result<RunConfig> {
    let mut config = RunConfig::new(method, alpha);
    let d = data.d(config.constructor);
    config.max_radius = Some(MaxRadius::new(d)?);
    config.gamma = Some(d / 3f64.sqrt());
    Ok(config)
}

pub fn run_cell_steps(cell: &Cell) -> Result<(StudyData, Vec<StreamStep>)> {
    let data = study_data(cell.study, cell.param, cell.seed)?;
    let config = study_config(cell.method, TargetLevel::new(cell.alpha)?, &data)?;
    let mut algo = build_algorithm(&config)?;
    let steps = run_stream(&mut algo, data.pairs.iter().copied())?;
    Ok((data, steps))
}

pub fn run_cell(cell: &Cell, sa_windows: &[usize]) -> Result<RunReport> {
    let (data, steps) = run_cell_steps(cell)?;
    let report = RunReport::compute(&steps, data.eval, TargetLevel::new(cell.alpha)?, sa_windows)?;
    let d = data.d(cell.method.native_constructor());
    Ok(report.with_max_radius(d))
}

/// Every combination, sorted by (study, method, level, parameter, seed).
pub fn grid(study: Study, methods: &[Method], alphas: &[f64], params: &[f64], seeds: u64) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &method in methods {
        for &alpha in alphas {
            for &param in params {
                for seed in 1..=seeds {
                    cells.push(Cell { study, seed, method, alpha, param });
                }
            }
        }
    }
    cells.sort_by_key(Cell::sort_key);
    cells.dedup_by_key(|c| c.sort_key());
    cells
}

/// Runs the cells on `workers` threads. Results come back in cell order
/// whatever the completion order.
pub fn run_cells(cells: &[Cell], workers: usize, sa_windows: &[usize]) -> Result<Vec<(Cell, RunReport)>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().context("building worker pool")?;
    let mut out: Vec<(Cell, RunReport)> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| {
                let r = run_cell(c, sa_windows).with_context(|| format!("cell {c:?}"))?;
                Ok((*c, r))
            })
            .collect::<Result<_>>()
    })?;
    out.sort_by_key(|(c, _)| c.sort_key());
    Ok(out)
}

/// Metric columns in output order.
pub fn metric_names(sa_windows: &[usize]) -> Vec<String> {
    let mut names: Vec<String> =
        ["empirical_coverage", "coverage_error", "mean_width", "infinite_width_count", "path_length", "regret"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    let mut w = sa_windows.to_vec();
    w.sort_unstable();
    w.dedup();
    names.extend(w.iter().map(|m| format!("sa_regret.{m}")));
    names
}

/// Named metric from a report; `None` when absent or null.
pub fn metric(report: &RunReport, name: &str) -> Option<f64> {
    report.to_json().get(name).and_then(|v| v.as_f64())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_runs_csv(path: &Path, results: &[(Cell, RunReport)], sa_windows: &[usize]) -> Result<()> {
    let names = metric_names(sa_windows);
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut header: Vec<String> = ["study", "seed", "method", "alpha", "param"].iter().map(|s| s.to_string()).collect();
    header.extend(names.iter().cloned());
    header.extend(["eval_start", "eval_end", "D"].iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for (c, r) in results {
        let mut row = vec![
            c.study.name().to_string(),
            c.seed.to_string(),
            c.method.to_string(),
            c.alpha.to_string(),
            c.param.to_string(),
        ];
        row.extend(names.iter().map(|n| fmt_opt(metric(r, n))));
        row.push(r.eval_range.start.to_string());
        row.push(r.eval_range.end.to_string());
        row.push(fmt_opt(r.max_radius));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Linear-interpolation sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub study: Study,
    pub method: Method,
    pub alpha: f64,
    pub param: f64,
    pub metric: String,
    /// Seeds with a value for this metric.
    pub n: usize,
    pub mean: f64,
    pub q10: f64,
    pub q90: f64,
}

/// Cell key with alpha and param as ordered bits; value keeps the raw floats.
type CellGroups<'a> = BTreeMap<(Study, Method, u64, u64), (f64, f64, Vec<&'a RunReport>)>;

/// Mean and 10% / 90% quantiles over seeds for every cell and metric.
pub fn aggregate(results: &[(Cell, RunReport)], sa_windows: &[usize]) -> Vec<AggregateRow> {
    let names = metric_names(sa_windows);
    let mut cells: CellGroups = BTreeMap::new();
    for (c, r) in results {
        cells
            .entry((c.study, c.method, ordered(c.alpha), ordered(c.param)))
            .or_insert((c.alpha, c.param, Vec::new()))
            .2
            .push(r);
    }
    let mut rows = Vec::new();
    for ((study, method, _, _), (alpha, param, reports)) in cells {
        for name in &names {
            let mut vals: Vec<f64> = reports.iter().filter_map(|r| metric(r, name)).collect();
            if vals.is_empty() {
                continue;
            }
            vals.sort_by(f64::total_cmp);
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            rows.push(AggregateRow {
                study,
                method,
                alpha,
                param,
                metric: name.clone(),
                n: vals.len(),
                mean,
                q10: quantile_sorted(&vals, 0.1),
                q90: quantile_sorted(&vals, 0.9),
            });
        }
    }
    rows
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["study", "method", "alpha", "param", "metric", "n", "mean", "q10", "q90"])?;
    for r in rows {
        w.write_record([
            r.study.name().to_string(),
            r.method.to_string(),
            r.alpha.to_string(),
            r.param.to_string(),
            r.metric.clone(),
            r.n.to_string(),
            r.mean.to_string(),
            r.q10.to_string(),
            r.q90.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Worker count, with `CONFORMAL_WORKERS` overriding the flag.
pub fn resolve_workers(flag: usize, env: Option<&str>) -> CliResult<usize> {
    let n = match env {
        Some(v) => {
            v.trim().parse::<usize>().map_err(|_| usage(format!("CONFORMAL_WORKERS must be an integer, got {v:?}")))?
        }
        None => flag,
    };
    if n < 1 {
        return Err(usage("worker count must be at least 1"));
    }
    Ok(n)
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    let env = std::env::var("CONFORMAL_WORKERS").ok();
    let workers = resolve_workers(args.workers, env.as_deref())?;
    for &a in &args.alphas {
        TargetLevel::new(a).map_err(|e| usage(e.to_string()))?;
    }
    if args.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let params = args.params.clone().unwrap_or_else(|| args.study.default_params());
    if args.study == Study::Arma {
        if let Some(p) = params.iter().find(|p| p.is_nan() || p.abs() >= 1.0) {
            return Err(usage(format!("ARMA parameter {p} is not stationary")));
        }
    } else if let Some(p) = params.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(usage(format!("shift size must be nonnegative, got {p}")));
    }
    let sa_windows = if args.sa_windows.is_empty() { DEFAULT_SA_WINDOWS.to_vec() } else { args.sa_windows.clone() };
    if sa_windows.contains(&0) {
        return Err(usage("strongly adaptive regret windows must be positive"));
    }

    let cells = grid(args.study, &args.methods, &args.alphas, &params, args.seeds);
    log::info!("running {} cells on {workers} workers", cells.len());
    let results = run_cells(&cells, workers, &sa_windows)?;
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    write_runs_csv(&args.out.join("runs.csv"), &results, &sa_windows)?;
    write_aggregate_csv(&args.out.join("aggregate.csv"), &aggregate(&results, &sa_windows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&x, 0.0), 1.0);
        assert_eq!(quantile_sorted(&x, 1.0), 5.0);
        assert!((quantile_sorted(&x, 0.1) - 1.4).abs() < 1e-12);
        assert_eq!(quantile_sorted(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn ordered_keys_sort_like_floats() {
        let xs = [-2.5, -0.0, 0.0, 0.1, 0.9, 3.0];
        for w in xs.windows(2) {
            assert!(ordered(w[0]) <= ordered(w[1]));
        }
    }

    #[test]
    fn shift_grid_shape() {
        let cells = grid(Study::Shift, &STUDY_METHODS, &[0.9], &Study::Shift.default_params(), 50);
        assert_eq!(cells.len(), 50 * 4 * 2);
    }

    #[test]
    fn study_windows() {
        let s = study_data(Study::Arma, 0.1, 1).unwrap();
        assert_eq!(s.pairs.len(), 351);
        assert_eq!(s.eval, EvalRange::new(51, 351));
        let s = study_data(Study::Shift, 0.5, 1).unwrap();
        assert_eq!(s.pairs.len(), 500);
        assert_eq!(s.eval, EvalRange::new(51, 500));
        assert_eq!(s.d_quantile, 1.0);
    }

    #[test]
    fn workers_from_env() {
        assert_eq!(resolve_workers(3, None).unwrap(), 3);
        assert_eq!(resolve_workers(3, Some("5")).unwrap(), 5);
        assert!(resolve_workers(0, None).is_err());
        assert!(resolve_workers(2, Some("x")).is_err());
    }
}
