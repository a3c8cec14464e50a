//! Fully adaptive conformal inference: exponential reweighting over a
//! grid of ACI experts with fixed-share mixing.

use std::collections::VecDeque;

use super::aci::AciState;
use super::convex_combination;
use super::pinball::pinball;
use crate::constructors::IntervalConstructor;
use crate::stream::{ConstructorKind, EtaConvention, Method, OnlineIntervalAlgorithm, Proposal, TargetLevel};

/// Closed-form learning rate
/// `sqrt(3 / I) * sqrt((ln(K I) + 2) / (a^2 (1-a)^3 + (1-a)^2 a^3))`.
pub fn faci_eta_default(k: usize, interval_length: usize, level: f64) -> f64 {
    let i = interval_length as f64;
    let inner = level.powi(2) * (1.0 - level).powi(3) + (1.0 - level).powi(2) * level.powi(3);
    (3.0 / i).sqrt() * (((k as f64 * i).ln() + 2.0) / inner).sqrt()
}

/// Online learning rate `sqrt((ln(I K) + 2) / sum of recent losses)`;
/// `fallback` when the window is empty or sums to zero.
pub fn faci_eta_online<I>(window: I, k: usize, interval_length: usize, fallback: f64) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let total: f64 = window.into_iter().sum();
    if total > 0.0 && total.is_finite() {
        (((interval_length as f64 * k as f64).ln() + 2.0) / total).sqrt()
    } else {
        fallback
    }
}

/// One exponential-weights step with fixed-share mixing.
///
/// Returns the new (unnormalized) weights and the pre-mixing total
/// `W = sum_k w_k exp(-eta * loss_k)`; the mixing step preserves it.
pub fn faci_weight_update(weights: &[f64], losses: &[f64], eta: f64, sigma: f64) -> (Vec<f64>, f64) {
    debug_assert_eq!(weights.len(), losses.len());
    let k = weights.len() as f64;
    let decayed: Vec<f64> = weights.iter().zip(losses).map(|(w, l)| w * (-eta * l).exp()).collect();
    let total: f64 = decayed.iter().sum();
    let mixed = decayed.iter().map(|w| (1.0 - sigma) * w + total * sigma / k).collect();
    (mixed, total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSchedule {
    Fixed(f64),
    /// Recomputed each step from the last `interval_length` losses, using
    /// the closed form until the window has mass.
    Online {
        fallback: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Faci {
    experts: Vec<AciState>,
    /// Kept normalized to sum to one.
    weights: Vec<f64>,
    sigma: f64,
    eta: EtaSchedule,
    interval_length: usize,
    loss_window: VecDeque<f64>,
    alpha: TargetLevel,
    constructor: IntervalConstructor,
    last_eta: Option<f64>,
}

impl Faci {
    /// Defaults: `sigma = 1 / (2 I)`, closed-form `eta` for the quantile
    /// constructor and the online schedule for the linear one.
    pub fn new(
        alpha: TargetLevel,
        gammas: &[f64],
        theta1: f64,
        interval_length: usize,
        convention: EtaConvention,
        constructor: IntervalConstructor,
    ) -> Self {
        let k = gammas.len();
        let level = match convention {
            EtaConvention::Coverage => alpha.get(),
            EtaConvention::Miscoverage => alpha.miscoverage(),
        };
        let closed = faci_eta_default(k, interval_length, level);
        let eta = match constructor.kind() {
            ConstructorKind::Quantile => EtaSchedule::Fixed(closed),
            ConstructorKind::Linear => EtaSchedule::Online { fallback: closed },
        };
        Self::with_schedule(
            alpha,
            gammas,
            theta1,
            interval_length,
            1.0 / (2.0 * interval_length as f64),
            eta,
            constructor,
        )
    }

    pub fn with_schedule(
        alpha: TargetLevel,
        gammas: &[f64],
        theta1: f64,
        interval_length: usize,
        sigma: f64,
        eta: EtaSchedule,
        constructor: IntervalConstructor,
    ) -> Self {
        assert!(!gammas.is_empty(), "FACI needs at least one expert");
        let k = gammas.len();
        Self {
            experts: gammas.iter().map(|g| AciState::new(theta1, *g)).collect(),
            weights: vec![1.0 / k as f64; k],
            sigma,
            eta,
            interval_length,
            loss_window: VecDeque::with_capacity(interval_length),
            alpha,
            constructor,
            last_eta: None,
        }
    }

    pub fn expert_thetas(&self) -> Vec<f64> {
        self.experts.iter().map(|e| e.theta).collect()
    }

    /// Current expert probabilities.
    pub fn probabilities(&self) -> &[f64] {
        &self.weights
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Learning rate used in the most recent update.
    pub fn last_eta(&self) -> Option<f64> {
        self.last_eta
    }

    pub fn theta(&self) -> f64 {
        convex_combination(&self.expert_thetas(), &self.weights)
    }

    fn current_eta(&self) -> f64 {
        match self.eta {
            EtaSchedule::Fixed(eta) => eta,
            EtaSchedule::Online { fallback } => {
                faci_eta_online(self.loss_window.iter().copied(), self.experts.len(), self.interval_length, fallback)
            }
        }
    }
}

impl OnlineIntervalAlgorithm for Faci {
    fn method(&self) -> Method {
        Method::Faci
    }

    fn propose(&self, prediction: f64) -> Proposal {
        let theta = self.theta();
        Proposal { interval: self.constructor.interval(prediction, theta), theta: Some(theta) }
    }

    fn observe(&mut self, prediction: f64, outcome: f64) -> f64 {
        let theta = self.theta();
        let r = self.constructor.radius(prediction, outcome);
        let losses: Vec<f64> = self.experts.iter().map(|e| pinball(e.theta, r, self.alpha)).collect();

        let eta = self.current_eta();
        self.last_eta = Some(eta);
        // Shifting every loss by the same amount rescales all weights
        // equally, which the normalization below undoes.
        let floor = losses.iter().copied().fold(f64::INFINITY, f64::min);
        let shifted: Vec<f64> = losses.iter().map(|l| l - floor).collect();
        let (mixed, _) = faci_weight_update(&self.weights, &shifted, eta, self.sigma);
        let total: f64 = mixed.iter().sum();
        self.weights = mixed.into_iter().map(|w| w / total).collect();

        if self.interval_length > 0 {
            if self.loss_window.len() == self.interval_length {
                self.loss_window.pop_front();
            }
            self.loss_window.push_back(pinball(theta, r, self.alpha));
        }

        for expert in &mut self.experts {
            let err = !self.constructor.interval(prediction, expert.theta).contains(outcome);
            expert.step(err, self.alpha);
        }
        self.constructor.record(prediction, outcome);
        r
    }
}
