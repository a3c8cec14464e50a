//! Evaluation of completed runs: coverage, width, path length and regret
//! against the best fixed parameter in hindsight.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::algorithms::pinball;
use crate::error::{Error, Result};
use crate::stream::{StreamStep, TargetLevel};

/// Window lengths reported for strongly adaptive regret by default.
pub const DEFAULT_SA_WINDOWS: [usize; 3] = [20, 50, 100];

/// Inclusive 1-based step range `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EvalRange {
    pub start: usize,
    pub end: usize,
}

impl EvalRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    /// The whole run.
    pub fn full(len: usize) -> Self {
        Self { start: 1, end: len }
    }

    /// From `start` to the end of the run.
    pub fn from(start: usize, len: usize) -> Self {
        Self { start, end: len }
    }

    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    /// Checks the range against a run of `len` steps and returns the slice.
    pub fn slice<'a, T>(&self, items: &'a [T]) -> Result<&'a [T]> {
        let len = items.len();
        if self.start == 0 || self.end < self.start || self.end > len {
            return Err(Error::BadRange { start: self.start, end: self.end, len });
        }
        Ok(&items[self.start - 1..self.end])
    }
}

impl std::str::FromStr for EvalRange {
    type Err = Error;

    /// `start:end`, both 1-based and inclusive.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("expected start:end, got {s:?}"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let start = a.trim().parse().map_err(|_| bad())?;
        let end = b.trim().parse().map_err(|_| bad())?;
        Ok(Self { start, end })
    }
}

pub fn empirical_coverage(steps: &[StreamStep], range: EvalRange) -> Result<f64> {
    let s = range.slice(steps)?;
    let covered = s.iter().filter(|x| x.covered()).count();
    Ok(covered as f64 / s.len() as f64)
}

/// Empirical coverage minus the target; negative means undercoverage.
pub fn coverage_error(steps: &[StreamStep], range: EvalRange, alpha: TargetLevel) -> Result<f64> {
    Ok(empirical_coverage(steps, range)? - alpha.get())
}

/// Mean of the finite widths plus the number of infinite ones left out.
pub fn mean_width(steps: &[StreamStep], range: EvalRange) -> Result<(f64, usize)> {
    let widths: Vec<f64> = range.slice(steps)?.iter().map(|s| s.interval.width()).collect();
    mean_of_finite(&widths)
}

pub fn mean_of_finite(widths: &[f64]) -> Result<(f64, usize)> {
    let finite: Vec<f64> = widths.iter().copied().filter(|w| w.is_finite()).collect();
    let infinite = widths.len() - finite.len();
    if finite.is_empty() {
        return Err(Error::AllInfinite { count: infinite });
    }
    Ok((finite.iter().sum::<f64>() / finite.len() as f64, infinite))
}

/// Total variation of the widths over the range, and the number of
/// successive pairs skipped because one side was infinite.
pub fn path_length(steps: &[StreamStep], range: EvalRange) -> Result<(f64, usize)> {
    let s = range.slice(steps)?;
    if s.len() < 2 {
        return Err(Error::BadRange { start: range.start, end: range.end, len: steps.len() });
    }
    let widths: Vec<f64> = s.iter().map(|x| x.interval.width()).collect();
    Ok(total_variation(&widths))
}

pub fn total_variation(widths: &[f64]) -> (f64, usize) {
    let mut total = 0.0;
    let mut skipped = 0;
    for w in widths.windows(2) {
        if w[0].is_finite() && w[1].is_finite() {
            total += (w[1] - w[0]).abs();
        } else {
            skipped += 1;
        }
    }
    (total, skipped)
}

/// Cumulative pinball loss of a constant parameter.
pub fn cumulative_loss(theta: f64, radii: &[f64], alpha: TargetLevel) -> f64 {
    radii.iter().map(|&r| pinball(theta, r, alpha)).sum()
}

/// Minimizer of the cumulative pinball loss over constant parameters, and
/// the minimal loss.
///
/// The objective is piecewise linear with kinks at the radii, so some
/// order statistic attains the minimum. All of them are scored in one
/// pass with prefix sums and the winner's loss is then recomputed directly.
pub fn best_fixed_theta(radii: &[f64], alpha: TargetLevel) -> Result<(f64, f64)> {
    if radii.is_empty() {
        return Err(Error::Empty);
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let total: f64 = sorted.iter().sum();
    let a = alpha.get();
    let mut below = 0.0;
    let mut best = (sorted[0], f64::INFINITY);
    let mut i = 0;
    while i < n {
        let theta = sorted[i];
        // Include every tie so the split is exact at this breakpoint.
        while i < n && sorted[i] == theta {
            below += sorted[i];
            i += 1;
        }
        let k = i as f64;
        let loss = (1.0 - a) * (k * theta - below) + a * ((total - below) - (n as f64 - k) * theta);
        if loss < best.1 {
            best = (theta, loss);
        }
    }
    let theta = best.0;
    Ok((theta, cumulative_loss(theta, radii, alpha)))
}

/// Cumulative loss of `thetas` minus that of the best fixed parameter.
/// Signed: a sequence that tracks the radii can beat every constant.
pub fn regret(thetas: &[f64], radii: &[f64], alpha: TargetLevel) -> Result<f64> {
    if thetas.len() != radii.len() {
        return Err(Error::LengthMismatch { left: thetas.len(), right: radii.len() });
    }
    let online: f64 = thetas.iter().zip(radii).map(|(&th, &r)| pinball(th, r, alpha)).sum();
    let (_, best) = best_fixed_theta(radii, alpha)?;
    Ok(online - best)
}

/// Largest regret over every contiguous window of length `m`.
pub fn strongly_adaptive_regret(thetas: &[f64], radii: &[f64], alpha: TargetLevel, m: usize) -> Result<f64> {
    if thetas.len() != radii.len() {
        return Err(Error::LengthMismatch { left: thetas.len(), right: radii.len() });
    }
    let n = thetas.len();
    if m == 0 || m > n {
        return Err(Error::BadWindow { m, len: n });
    }
    let mut worst = f64::NEG_INFINITY;
    for start in 0..=n - m {
        let r = regret(&thetas[start..start + m], &radii[start..start + m], alpha)?;
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Everything reported for one run over one evaluation range.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub empirical_coverage: f64,
    pub coverage_error: f64,
    /// `None` when every interval in the range was infinite.
    pub mean_width: Option<f64>,
    pub infinite_width_count: usize,
    pub path_length: f64,
    /// `None` for methods without a single parameter trajectory.
    pub regret: Option<f64>,
    pub sa_regret: BTreeMap<usize, Option<f64>>,
    pub eval_range: EvalRange,
    pub max_radius: Option<f64>,
}

impl RunReport {
    /// Window lengths longer than the range are skipped.
    pub fn compute(steps: &[StreamStep], range: EvalRange, alpha: TargetLevel, sa_windows: &[usize]) -> Result<Self> {
        let s = range.slice(steps)?;
        let empirical_coverage = empirical_coverage(steps, range)?;
        let (mean_width, infinite_width_count) = match mean_width(steps, range) {
            Ok((w, c)) => (Some(w), c),
            Err(Error::AllInfinite { count }) => (None, count),
            Err(e) => return Err(e),
        };
        let widths: Vec<f64> = s.iter().map(|x| x.interval.width()).collect();
        let (path_length, _) = total_variation(&widths);

        let thetas: Option<Vec<f64>> = s.iter().map(|x| x.theta).collect();
        let radii: Vec<f64> = s.iter().map(|x| x.radius).collect();
        let regret = thetas.as_ref().map(|th| regret(th, &radii, alpha)).transpose()?;
        let mut sa_regret = BTreeMap::new();
        for &m in sa_windows {
            if m == 0 || m > s.len() {
                log::warn!("skipping strongly adaptive regret window {m}: range has {} steps", s.len());
                continue;
            }
            let v = thetas.as_ref().map(|th| strongly_adaptive_regret(th, &radii, alpha, m)).transpose()?;
            sa_regret.insert(m, v);
        }
        Ok(Self {
            empirical_coverage,
            coverage_error: empirical_coverage - alpha.get(),
            mean_width,
            infinite_width_count,
            path_length,
            regret,
            sa_regret,
            eval_range: range,
            max_radius: None,
        })
    }

    pub fn with_max_radius(mut self, d: f64) -> Self {
        self.max_radius = Some(d);
        self
    }

    /// Flat JSON object; missing values are `null`.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("empirical_coverage".into(), self.empirical_coverage.into());
        m.insert("coverage_error".into(), self.coverage_error.into());
        m.insert("mean_width".into(), self.mean_width.into());
        m.insert("infinite_width_count".into(), self.infinite_width_count.into());
        m.insert("path_length".into(), self.path_length.into());
        m.insert("regret".into(), self.regret.into());
        for (w, v) in &self.sa_regret {
            m.insert(format!("sa_regret.{w}"), (*v).into());
        }
        m.insert("eval_start".into(), self.eval_range.start.into());
        m.insert("eval_end".into(), self.eval_range.end.into());
        if let Some(d) = self.max_radius {
            m.insert("D".into(), d.into());
        }
        Value::Object(m)
    }
}
