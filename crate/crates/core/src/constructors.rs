//! Nested interval constructors and the radii they induce.
//!
//! Two constructors are provided. The linear one uses the parameter as the
//! half-width directly. The quantile one uses the parameter as a quantile
//! level over the nonconformity scores seen so far.
//!
//! Out-of-range parameters follow one convention for both: a negative
//! half-width (including `-inf`) produces the empty interval, and a
//! quantile level above 1 produces an infinitely wide interval.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::stream::{ConstructorKind, PredictionInterval};

/// Nonconformity score `S(prediction, outcome)`.
pub type ScoreFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Absolute residual `|prediction - outcome|`.
#[inline]
pub fn absolute_residual(prediction: f64, outcome: f64) -> f64 {
    (prediction - outcome).abs()
}

/// Append-only multiset of past nonconformity scores, kept sorted.
#[derive(Clone)]
pub struct NonconformityScoreStore {
    sorted: Vec<f64>,
    score_fn: Option<ScoreFn>,
}

impl fmt::Debug for NonconformityScoreStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonconformityScoreStore")
            .field("len", &self.sorted.len())
            .field("custom_score", &self.score_fn.is_some())
            .finish()
    }
}

impl Default for NonconformityScoreStore {
    fn default() -> Self {
        Self::new()
    }
}

impl NonconformityScoreStore {
    /// Empty store scored by the absolute residual.
    pub fn new() -> Self {
        Self { sorted: Vec::new(), score_fn: None }
    }

    /// Store with a custom score. The score must be nonnegative and vanish
    /// when prediction and outcome agree; both are probed here.
    pub fn with_score_fn(score_fn: ScoreFn) -> Result<Self> {
        for (mu, y) in [(0.0, 0.0), (1.0, 1.0), (-2.5, -2.5), (0.0, 1.0), (1.0, 0.0), (3.0, -7.0)] {
            let s = score_fn(mu, y);
            if s.is_nan() || s < 0.0 || (mu == y && s != 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "score function must be nonnegative with S(mu, mu) = 0; S({mu}, {y}) = {s}"
                )));
            }
        }
        Ok(Self { sorted: Vec::new(), score_fn: Some(score_fn) })
    }

    /// Store pre-filled with `scores` (useful for tests and replays).
    pub fn from_scores<I: IntoIterator<Item = f64>>(scores: I) -> Self {
        let mut sorted: Vec<f64> = scores.into_iter().collect();
        sorted.sort_by(f64::total_cmp);
        Self { sorted, score_fn: None }
    }

    pub fn score(&self, prediction: f64, outcome: f64) -> f64 {
        match &self.score_fn {
            Some(f) => f(prediction, outcome),
            None => absolute_residual(prediction, outcome),
        }
    }

    pub fn push(&mut self, score: f64) {
        debug_assert!(score >= 0.0, "negative nonconformity score {score}");
        let at = self.sorted.partition_point(|s| *s <= score);
        self.sorted.insert(at, score);
    }

    /// Score the pair and append it.
    pub fn record(&mut self, prediction: f64, outcome: f64) {
        let s = self.score(prediction, outcome);
        self.push(s);
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn max(&self) -> Option<f64> {
        self.sorted.last().copied()
    }
}

/// `[prediction - theta, prediction + theta]`, empty for `theta < 0`.
pub fn linear_interval(prediction: f64, theta: f64) -> PredictionInterval {
    PredictionInterval::symmetric(prediction, theta)
}

pub fn linear_radius(prediction: f64, outcome: f64) -> f64 {
    (prediction - outcome).abs()
}

/// Rank `k` in `1..=n` used for level `theta`: the smallest `k` with
/// `k / n >= theta`. Callers guarantee `0 < theta <= 1` and `n >= 1`.
fn order_index(theta: f64, n: usize) -> usize {
    let nf = n as f64;
    let mut k = ((theta * nf).ceil() as usize).clamp(1, n);
    // ceil(theta * n) can be off by one after rounding; settle it against
    // the same k / n comparison the radius uses.
    while k > 1 && ((k - 1) as f64) / nf >= theta {
        k -= 1;
    }
    while k < n && (k as f64) / nf < theta {
        k += 1;
    }
    k
}

/// Empirical `theta`-quantile: the `ceil(theta * n)`-th smallest score.
///
/// `theta <= 0` gives `-inf`, `theta > 1` gives `+inf`, and an empty store
/// gives `+inf` for any positive level.
pub fn empirical_quantile(theta: f64, store: &NonconformityScoreStore) -> f64 {
    if theta <= 0.0 || theta.is_nan() {
        return f64::NEG_INFINITY;
    }
    if theta > 1.0 || store.is_empty() {
        return f64::INFINITY;
    }
    store.sorted[order_index(theta, store.len()) - 1]
}

/// Symmetric interval whose half-width is the empirical quantile.
pub fn quantile_interval(prediction: f64, theta: f64, store: &NonconformityScoreStore) -> PredictionInterval {
    PredictionInterval::symmetric(prediction, empirical_quantile(theta, store))
}

/// Smallest level on the grid `{k / n}` whose quantile interval covers the
/// outcome. Returns `1 + 1/n` when the score exceeds every stored score,
/// and `0` for an empty store (any positive level covers).
pub fn quantile_radius(prediction: f64, outcome: f64, store: &NonconformityScoreStore) -> f64 {
    let n = store.len();
    if n == 0 {
        return 0.0;
    }
    let s = store.score(prediction, outcome);
    let k = store.sorted.partition_point(|x| *x < s) + 1;
    if k > n {
        1.0 + 1.0 / n as f64
    } else {
        k as f64 / n as f64
    }
}

/// A constructor together with whatever state it needs.
#[derive(Debug, Clone)]
pub enum IntervalConstructor {
    Linear,
    Quantile(NonconformityScoreStore),
}

impl IntervalConstructor {
    pub fn new(kind: ConstructorKind) -> Self {
        match kind {
            ConstructorKind::Linear => Self::Linear,
            ConstructorKind::Quantile => Self::Quantile(NonconformityScoreStore::new()),
        }
    }

    pub fn kind(&self) -> ConstructorKind {
        match self {
            Self::Linear => ConstructorKind::Linear,
            Self::Quantile(_) => ConstructorKind::Quantile,
        }
    }

    /// Half-width for parameter `theta`; may be infinite, negative means empty.
    pub fn half_width(&self, theta: f64) -> f64 {
        match self {
            Self::Linear => theta,
            Self::Quantile(store) => empirical_quantile(theta, store),
        }
    }

    pub fn interval(&self, prediction: f64, theta: f64) -> PredictionInterval {
        PredictionInterval::symmetric(prediction, self.half_width(theta))
    }

    pub fn radius(&self, prediction: f64, outcome: f64) -> f64 {
        match self {
            Self::Linear => linear_radius(prediction, outcome),
            Self::Quantile(store) => quantile_radius(prediction, outcome, store),
        }
    }

    /// Fold the realized pair into the constructor's state.
    pub fn record(&mut self, prediction: f64, outcome: f64) {
        if let Self::Quantile(store) = self {
            store.record(prediction, outcome);
        }
    }

    /// Largest finite half-width the constructor can currently produce
    /// (the top stored score); `None` for the linear constructor or an
    /// empty store.
    pub fn largest_finite_half_width(&self) -> Option<f64> {
        match self {
            Self::Linear => None,
            Self::Quantile(store) => store.max(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(xs: &[f64]) -> NonconformityScoreStore {
        NonconformityScoreStore::from_scores(xs.iter().copied())
    }

    #[test]
    fn linear_examples() {
        let iv = linear_interval(0.0, 0.5);
        assert_eq!((iv.lower, iv.upper), (-0.5, 0.5));
        let iv = linear_interval(2.0, 0.0);
        assert_eq!((iv.lower, iv.upper), (2.0, 2.0));
        assert!(!iv.is_empty());
        let iv = linear_interval(1.0, -0.3);
        assert_eq!((iv.lower, iv.upper, iv.width()), (1.0, 1.0, 0.0));
        assert!(iv.is_empty());
    }

    #[test]
    fn linear_radius_examples() {
        assert_eq!(linear_radius(0.0, 0.5), 0.5);
        assert_eq!(linear_radius(-1.0, 1.0), 2.0);
        assert_eq!(linear_radius(3.0, 3.0), 0.0);
    }

    #[test]
    fn quantile_examples() {
        let s = store(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(empirical_quantile(0.8, &s), 4.0);
        assert_eq!(empirical_quantile(1.0, &s), 5.0);
        assert_eq!(empirical_quantile(1.2, &store(&[1.0, 2.0])), f64::INFINITY);
        assert_eq!(empirical_quantile(0.0, &s), f64::NEG_INFINITY);
        assert_eq!(empirical_quantile(0.5, &store(&[])), f64::INFINITY);
    }

    #[test]
    fn quantile_interval_examples() {
        let iv = quantile_interval(0.0, 1.0, &store(&[1.0, 2.0, 3.0]));
        assert_eq!((iv.lower, iv.upper), (-3.0, 3.0));
        let iv = quantile_interval(10.0, 0.5, &store(&[1.0, 2.0, 3.0, 4.0]));
        assert_eq!((iv.lower, iv.upper), (8.0, 12.0));
        let iv = quantile_interval(0.0, -0.1, &store(&[1.0, 2.0]));
        assert!(iv.is_empty());
        assert_eq!((iv.lower, iv.upper), (0.0, 0.0));
        let iv = quantile_interval(0.0, -0.1, &store(&[]));
        assert!(iv.is_empty());
    }

    #[test]
    fn quantile_radius_examples() {
        assert_eq!(quantile_radius(0.0, 3.5, &store(&[1.0, 2.0, 3.0, 4.0, 5.0])), 0.8);
        assert_eq!(quantile_radius(0.0, -0.5, &store(&[1.0, 2.0])), 0.5);
        assert_eq!(quantile_radius(0.0, 2.0, &store(&[1.0])), 2.0);
        assert_eq!(quantile_radius(0.0, 2.0, &store(&[])), 0.0);
    }

    #[test]
    fn ties_cover_at_first_equal_score() {
        let s = store(&[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(quantile_radius(5.0, 7.0, &s), 0.5);
        assert!(quantile_interval(5.0, 0.5, &s).contains(7.0));
        assert!(!quantile_interval(5.0, 0.25, &s).contains(7.0));
    }

    #[test]
    fn grid_levels_select_their_own_rank() {
        for n in 1..200usize {
            for k in 1..=n {
                assert_eq!(order_index(k as f64 / n as f64, n), k, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn store_keeps_order_and_counts() {
        let mut s = NonconformityScoreStore::new();
        for (mu, y) in [(0.0, 3.0), (1.0, 0.0), (2.0, 2.5), (0.0, -3.0)] {
            s.record(mu, y);
        }
        assert_eq!(s.sorted(), &[0.5, 1.0, 3.0, 3.0]);
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn custom_score_validation() {
        let ok: ScoreFn = Arc::new(|mu, y| (mu - y).powi(2));
        assert!(NonconformityScoreStore::with_score_fn(ok).is_ok());
        let shifted: ScoreFn = Arc::new(|mu: f64, y: f64| (mu - y).abs() + 1.0);
        assert!(NonconformityScoreStore::with_score_fn(shifted).is_err());
        let signed: ScoreFn = Arc::new(|mu, y| y - mu);
        assert!(NonconformityScoreStore::with_score_fn(signed).is_err());
    }

    #[test]
    fn constructor_records_only_for_quantile() {
        let mut lin = IntervalConstructor::new(ConstructorKind::Linear);
        lin.record(0.0, 1.0);
        assert_eq!(lin.largest_finite_half_width(), None);
        let mut q = IntervalConstructor::new(ConstructorKind::Quantile);
        q.record(0.0, 1.0);
        q.record(0.0, -4.0);
        assert_eq!(q.largest_finite_half_width(), Some(4.0));
        assert_eq!(q.half_width(0.5), 1.0);
    }
}
