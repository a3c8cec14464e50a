//! Strongly adaptive online conformal prediction.
//!
//! A new SF-OGD expert is started at every step from the previous output.
//! Each expert lives for `g` times the largest power of two dividing its
//! birth index, so at any time the live experts cover every recent scale
//! with `O(g log t)` members. Experts are mixed with coin-betting weights
//! on their excess pinball loss, scaled by the maximum radius.

use super::convex_combination;
use super::pinball::pinball;
use super::sfogd::SfOgdState;
use crate::constructors::IntervalConstructor;
use crate::stream::{MaxRadius, Method, OnlineIntervalAlgorithm, Proposal, TargetLevel};

/// `g * 2^n` where `2^n` is the largest power of two dividing `birth`.
pub fn saocp_lifetime(birth: usize, g: usize) -> usize {
    assert!(birth >= 1, "birth indices start at 1");
    g << birth.trailing_zeros()
}

/// Whether the expert born at `birth` is consulted at step `t`.
#[inline]
pub fn is_active(birth: usize, t: usize, g: usize) -> bool {
    birth <= t && t < birth + saocp_lifetime(birth, g)
}

/// Unnormalized prior mass `a^-2 / (1 + floor(log2 a))` for an expert of age `a`.
pub fn prior_mass(age: usize) -> f64 {
    assert!(age >= 1);
    let a = age as f64;
    let log2_floor = (usize::BITS - 1 - age.leading_zeros()) as f64;
    1.0 / (a * a * (1.0 + log2_floor))
}

/// Which index the prior mass is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorIndex {
    /// The expert's birth step, so long-lived experts dominate.
    #[default]
    Birth,
    /// The expert's age `t - birth + 1`, so the newest expert dominates.
    Age,
}

/// Prior over the active experts at step `t`.
pub fn saocp_prior(active_births: &[usize], t: usize, index: PriorIndex) -> Vec<f64> {
    let raw: Vec<f64> = active_births
        .iter()
        .map(|&b| match index {
            PriorIndex::Birth => prior_mass(b),
            PriorIndex::Age => prior_mass(t - b + 1),
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|m| m / total).collect()
}

#[derive(Debug, Clone, PartialEq)]
struct Expert {
    birth: usize,
    learner: SfOgdState,
    weight: f64,
    sum_g: f64,
    sum_wg: f64,
}

#[derive(Debug, Clone)]
pub struct Saocp {
    experts: Vec<Expert>,
    /// Completed steps.
    t: usize,
    /// Output of the last completed step (`theta_0` before the first).
    last_theta: f64,
    gamma: f64,
    lifetime_multiplier: usize,
    max_radius: MaxRadius,
    alpha: TargetLevel,
    constructor: IntervalConstructor,
    radius_violations: usize,
    prior_index: PriorIndex,
}

struct Mixture {
    births: Vec<usize>,
    thetas: Vec<f64>,
    probs: Vec<f64>,
    theta: f64,
}

impl Saocp {
    pub fn new(
        alpha: TargetLevel,
        gamma: f64,
        theta0: f64,
        max_radius: MaxRadius,
        lifetime_multiplier: usize,
        constructor: IntervalConstructor,
    ) -> Self {
        assert!(lifetime_multiplier >= 1);
        Self {
            experts: Vec::new(),
            t: 0,
            last_theta: theta0,
            gamma,
            lifetime_multiplier,
            max_radius,
            alpha,
            constructor,
            radius_violations: 0,
            prior_index: PriorIndex::default(),
        }
    }

    pub fn with_prior_index(mut self, index: PriorIndex) -> Self {
        self.prior_index = index;
        self
    }

    /// Birth indices of the experts active at the last completed step.
    pub fn active_births(&self) -> Vec<usize> {
        self.experts.iter().map(|e| e.birth).collect()
    }

    /// Number of observed radii at or above `D`.
    pub fn radius_violations(&self) -> usize {
        self.radius_violations
    }

    /// Parameters of the experts that will be mixed at the next step,
    /// the newborn included.
    pub fn next_expert_thetas(&self) -> Vec<f64> {
        self.mixture().thetas
    }

    /// Expert weights `w` for the experts active at the last completed step.
    pub fn weights(&self) -> Vec<f64> {
        self.experts.iter().map(|e| e.weight).collect()
    }

    fn mixture(&self) -> Mixture {
        let t = self.t + 1;
        let g = self.lifetime_multiplier;
        let mut births = Vec::with_capacity(self.experts.len() + 1);
        let mut thetas = Vec::with_capacity(self.experts.len() + 1);
        let mut weights = Vec::with_capacity(self.experts.len() + 1);
        for e in self.experts.iter().filter(|e| is_active(e.birth, t, g)) {
            births.push(e.birth);
            thetas.push(e.learner.theta);
            weights.push(e.weight);
        }
        births.push(t);
        thetas.push(self.last_theta);
        weights.push(0.0);

        let prior = saocp_prior(&births, t, self.prior_index);
        let raw: Vec<f64> = prior.iter().zip(&weights).map(|(p, w)| p * w.max(0.0)).collect();
        let total: f64 = raw.iter().sum();
        let probs = if total > 0.0 { raw.into_iter().map(|x| x / total).collect() } else { prior };
        let theta = if t == 1 { 0.0 } else { convex_combination(&thetas, &probs) };
        Mixture { births, thetas, probs, theta }
    }
}

impl OnlineIntervalAlgorithm for Saocp {
    fn method(&self) -> Method {
        Method::Saocp
    }

    fn propose(&self, prediction: f64) -> Proposal {
        let theta = self.mixture().theta;
        Proposal { interval: self.constructor.interval(prediction, theta), theta: Some(theta) }
    }

    fn observe(&mut self, prediction: f64, outcome: f64) -> f64 {
        let t = self.t + 1;
        let g = self.lifetime_multiplier;
        let mix = self.mixture();
        debug_assert_eq!(mix.births.len(), mix.probs.len());
        let theta = mix.theta;
        let r = self.constructor.radius(prediction, outcome);
        if r >= self.max_radius.get() {
            self.radius_violations += 1;
            log::debug!("step {t}: radius {r} is not below D = {}", self.max_radius.get());
        }

        self.experts.retain(|e| is_active(e.birth, t, g));
        self.experts.push(Expert {
            birth: t,
            learner: SfOgdState::new(self.last_theta, self.gamma),
            weight: 0.0,
            sum_g: 0.0,
            sum_wg: 0.0,
        });

        let meta_loss = pinball(theta, r, self.alpha);
        let d = self.max_radius.get();
        for e in &mut self.experts {
            let excess = (meta_loss - pinball(e.learner.theta, r, self.alpha)) / d;
            let grad = if e.weight > 0.0 { excess } else { excess.max(0.0) };
            e.sum_g += grad;
            e.sum_wg += e.weight * grad;

            let err = !self.constructor.interval(prediction, e.learner.theta).contains(outcome);
            e.learner.step(err, self.alpha);

            let age = (t - e.birth + 1) as f64;
            e.weight = e.sum_g / age * (1.0 + e.sum_wg);
        }

        self.last_theta = theta;
        self.t = t;
        self.constructor.record(prediction, outcome);
        r
    }
}
