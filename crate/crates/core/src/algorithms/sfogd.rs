//! Scale-free online gradient descent on the pinball loss.
//!
//! The step is normalized by the root of the running sum of squared
//! subgradients, the current one included, so the trajectory scales
//! linearly with the learning rate and the radii.

use super::pinball::pinball_subgradient;
use crate::constructors::IntervalConstructor;
use crate::stream::{Method, OnlineIntervalAlgorithm, Proposal, TargetLevel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfOgdState {
    pub theta: f64,
    pub gamma: f64,
    /// Running sum of squared subgradients; never decreases.
    pub grad_sq_sum: f64,
}

impl SfOgdState {
    pub fn new(theta: f64, gamma: f64) -> Self {
        Self { theta, gamma, grad_sq_sum: 0.0 }
    }

    /// One descent step given whether the current parameter missed.
    /// `|g|` is `alpha` or `1 - alpha`, so the denominator is never zero.
    #[inline]
    pub fn step(&mut self, err: bool, alpha: TargetLevel) {
        let g = pinball_subgradient(err, alpha);
        self.grad_sq_sum += g * g;
        self.theta -= self.gamma * g / self.grad_sq_sum.sqrt();
    }
}

#[derive(Debug, Clone)]
pub struct SfOgd {
    state: SfOgdState,
    alpha: TargetLevel,
    constructor: IntervalConstructor,
}

impl SfOgd {
    pub fn new(alpha: TargetLevel, gamma: f64, theta1: f64, constructor: IntervalConstructor) -> Self {
        Self { state: SfOgdState::new(theta1, gamma), alpha, constructor }
    }

    pub fn state(&self) -> SfOgdState {
        self.state
    }
}

impl OnlineIntervalAlgorithm for SfOgd {
    fn method(&self) -> Method {
        Method::SfOgd
    }

    fn propose(&self, prediction: f64) -> Proposal {
        Proposal { interval: self.constructor.interval(prediction, self.state.theta), theta: Some(self.state.theta) }
    }

    fn observe(&mut self, prediction: f64, outcome: f64) -> f64 {
        let err = !self.constructor.interval(prediction, self.state.theta).contains(outcome);
        let radius = self.constructor.radius(prediction, outcome);
        self.state.step(err, self.alpha);
        self.constructor.record(prediction, outcome);
        radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lvl(a: f64) -> TargetLevel {
        TargetLevel::new(a).unwrap()
    }

    #[test]
    fn first_step_examples() {
        let mut s = SfOgdState::new(0.0, 1.0);
        s.step(true, lvl(0.8));
        assert_relative_eq!(s.theta, 1.0, max_relative = 1e-15);
        let mut s = SfOgdState::new(0.0, 1.0);
        s.step(false, lvl(0.8));
        assert_relative_eq!(s.theta, -1.0, max_relative = 1e-15);
    }

    #[test]
    fn repeated_misses_shrink_by_root_two() {
        let mut s = SfOgdState::new(0.0, 1.0);
        s.step(true, lvl(0.8));
        let first = s.theta;
        s.step(true, lvl(0.8));
        let second = s.theta - first;
        assert!(second.abs() < first.abs());
        assert_relative_eq!(first / second, 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn grad_sum_monotone() {
        let mut s = SfOgdState::new(0.3, 0.2);
        let mut last = 0.0;
        for i in 0..50 {
            s.step(i % 3 == 0, lvl(0.9));
            assert!(s.grad_sq_sum > last);
            last = s.grad_sq_sum;
        }
    }
}
