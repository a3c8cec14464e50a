//! Bernstein online aggregation under the quantile loss.
//!
//! Each expert keeps its own learning rate, tuned from the running
//! variance and range of its loss relative to the mixture.

use super::convex_combination;

/// Quantile loss of forecast `x` for outcome `y` at level `tau`.
#[inline]
pub fn quantile_loss(x: f64, y: f64, tau: f64) -> f64 {
    if y >= x {
        tau * (y - x)
    } else {
        (1.0 - tau) * (x - y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoaCombiner {
    tau: f64,
    prior: Vec<f64>,
    weights: Vec<f64>,
    /// Cumulative centered loss per expert.
    cum_loss: Vec<f64>,
    /// Cumulative squared centered loss per expert.
    cum_sq: Vec<f64>,
    /// Largest absolute centered loss seen per expert.
    max_abs: Vec<f64>,
}

impl BoaCombiner {
    /// Uniform prior over `k` experts.
    pub fn new(k: usize, tau: f64) -> Self {
        assert!(k >= 1, "BOA needs at least one expert");
        assert!(tau > 0.0 && tau < 1.0, "quantile level must lie in (0, 1)");
        let prior = vec![1.0 / k as f64; k];
        Self { tau, weights: prior.clone(), prior, cum_loss: vec![0.0; k], cum_sq: vec![0.0; k], max_abs: vec![0.0; k] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Per-expert learning rates; zero for an expert with no loss variation.
    pub fn learning_rates(&self) -> Vec<f64> {
        let k = self.len();
        if k == 1 {
            return vec![0.0];
        }
        let log_k = (k as f64).ln();
        self.cum_sq
            .iter()
            .zip(&self.max_abs)
            .map(|(&v, &e)| if v > 0.0 { (1.0 / e).min((log_k / v).sqrt()) } else { 0.0 })
            .collect()
    }

    /// Weighted mean of the expert forecasts.
    pub fn combine(&self, forecasts: &[f64]) -> f64 {
        assert_eq!(forecasts.len(), self.len());
        convex_combination(forecasts, &self.weights)
    }

    /// Fold in outcome `y` given the forecasts that were combined.
    pub fn update(&mut self, forecasts: &[f64], y: f64) {
        let mixture = self.combine(forecasts);
        let mixture_loss = quantile_loss(mixture, y, self.tau);
        for (k, &x) in forecasts.iter().enumerate() {
            let l = quantile_loss(x, y, self.tau) - mixture_loss;
            self.cum_loss[k] += l;
            self.cum_sq[k] += l * l;
            self.max_abs[k] = self.max_abs[k].max(l.abs());
        }
        let etas = self.learning_rates();
        let log_w: Vec<f64> = (0..self.len())
            .map(|k| {
                let eta = etas[k];
                let exponent = if eta > 0.0 { -eta * self.cum_loss[k] - eta * eta * self.cum_sq[k] } else { 0.0 };
                self.prior[k].ln() + exponent
            })
            .collect();
        let top = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = raw.iter().sum();
        self.weights = raw.into_iter().map(|w| w / total).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn loss_examples() {
        assert_relative_eq!(quantile_loss(0.0, 1.0, 0.05), 0.05);
        assert_relative_eq!(quantile_loss(1.0, 0.0, 0.05), 0.95);
        assert_eq!(quantile_loss(2.0, 2.0, 0.3), 0.0);
    }

    #[test]
    fn identical_experts_stay_uniform() {
        let mut b = BoaCombiner::new(4, 0.05);
        for i in 0..100 {
            b.update(&[1.0; 4], (i as f64).sin());
        }
        for w in b.weights() {
            assert_relative_eq!(*w, 0.25, max_relative = 1e-12);
        }
        assert!(b.learning_rates().iter().all(|e| *e == 0.0));
    }

    #[test]
    fn concentrates_on_better_expert() {
        // The 0.5 quantile of y uniform on {-1, 1} at tau = 0.5 is anything in
        // [-1, 1]; an expert at 5 is strictly worse than one at 0.
        let mut b = BoaCombiner::new(2, 0.5);
        for i in 0..500 {
            let y = if i % 2 == 0 { 1.0 } else { -1.0 };
            b.update(&[0.0, 5.0], y);
        }
        assert!(b.weights()[0] > 0.99, "{:?}", b.weights());
        assert!(b.learning_rates().iter().all(|e| e.is_finite() && *e > 0.0));
    }

    #[test]
    fn single_expert_is_passthrough() {
        let mut b = BoaCombiner::new(1, 0.9);
        for i in 0..20 {
            b.update(&[i as f64], 0.0);
            assert_eq!(b.combine(&[3.5]), 3.5);
        }
    }
}
