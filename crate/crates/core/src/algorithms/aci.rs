//! Adaptive conformal inference: online subgradient descent on the
//! pinball loss with a fixed learning rate.

use crate::constructors::IntervalConstructor;
use crate::stream::{Method, OnlineIntervalAlgorithm, Proposal, TargetLevel};

/// Parameter and learning rate of a single ACI learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AciState {
    pub theta: f64,
    pub gamma: f64,
}

impl AciState {
    pub fn new(theta: f64, gamma: f64) -> Self {
        Self { theta, gamma }
    }

    /// `theta += gamma * (err - (1 - alpha))`: widen by `gamma * alpha`
    /// after a miss, shrink by `gamma * (1 - alpha)` after a cover.
    #[inline]
    pub fn step(&mut self, err: bool, alpha: TargetLevel) {
        let e = if err { 1.0 } else { 0.0 };
        self.theta += self.gamma * (e - alpha.miscoverage());
    }
}

/// ACI bound to an interval constructor.
#[derive(Debug, Clone)]
pub struct Aci {
    state: AciState,
    alpha: TargetLevel,
    constructor: IntervalConstructor,
}

impl Aci {
    pub fn new(alpha: TargetLevel, gamma: f64, theta1: f64, constructor: IntervalConstructor) -> Self {
        Self { state: AciState::new(theta1, gamma), alpha, constructor }
    }

    pub fn state(&self) -> AciState {
        self.state
    }

    pub fn constructor(&self) -> &IntervalConstructor {
        &self.constructor
    }
}

impl OnlineIntervalAlgorithm for Aci {
    fn method(&self) -> Method {
        Method::Aci
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
