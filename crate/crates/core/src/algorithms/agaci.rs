//! Aggregated ACI: a grid of ACI learners whose lower and upper bounds are
//! combined separately by two online quantile aggregators.

use super::aci::AciState;
use super::boa::BoaCombiner;
use crate::constructors::IntervalConstructor;
use crate::stream::{Method, OnlineIntervalAlgorithm, PredictionInterval, Proposal, TargetLevel};

#[derive(Debug, Clone)]
pub struct AgAci {
    experts: Vec<AciState>,
    lower: BoaCombiner,
    upper: BoaCombiner,
    alpha: TargetLevel,
    constructor: IntervalConstructor,
    crossings: usize,
}

/// Half-widths ready for aggregation.
enum Widths {
    /// Every expert is unbounded.
    Unbounded,
    /// Every expert is empty.
    Empty,
    /// Finite surrogates, one per expert.
    Finite(Vec<f64>),
}

impl AgAci {
    pub fn new(alpha: TargetLevel, gammas: &[f64], theta1: f64, constructor: IntervalConstructor) -> Self {
        assert!(!gammas.is_empty(), "AgACI needs at least one expert");
        let k = gammas.len();
        let tail = alpha.miscoverage() / 2.0;
        Self {
            experts: gammas.iter().map(|g| AciState::new(theta1, *g)).collect(),
            lower: BoaCombiner::new(k, tail),
            upper: BoaCombiner::new(k, 1.0 - tail),
            alpha,
            constructor,
            crossings: 0,
        }
    }

    pub fn expert_thetas(&self) -> Vec<f64> {
        self.experts.iter().map(|e| e.theta).collect()
    }

    /// Raw expert intervals for the next step.
    pub fn candidate_bounds(&self, prediction: f64) -> Vec<PredictionInterval> {
        self.experts.iter().map(|e| self.constructor.interval(prediction, e.theta)).collect()
    }

    pub fn lower_weights(&self) -> &[f64] {
        self.lower.weights()
    }

    pub fn upper_weights(&self) -> &[f64] {
        self.upper.weights()
    }

    /// Steps whose aggregated bounds crossed.
    pub fn crossings(&self) -> usize {
        self.crossings
    }

    /// `+inf` half-widths become the largest finite one the constructor
    /// can produce and `-inf` ones become zero, unless every expert agrees.
    fn widths(&self) -> Widths {
        let raw: Vec<f64> = self.experts.iter().map(|e| self.constructor.half_width(e.theta)).collect();
        if raw.iter().all(|h| *h == f64::INFINITY) {
            return Widths::Unbounded;
        }
        if raw.iter().all(|h| *h < 0.0) {
            return Widths::Empty;
        }
        let cap = self.constructor.largest_finite_half_width();
        let mut out = Vec::with_capacity(raw.len());
        for h in raw {
            out.push(match h {
                f64::INFINITY => match cap {
                    Some(c) => c,
                    None => return Widths::Unbounded,
                },
                f64::NEG_INFINITY => 0.0,
                h => h,
            });
        }
        Widths::Finite(out)
    }

    fn bounds(prediction: f64, widths: &[f64]) -> (Vec<f64>, Vec<f64>) {
        widths.iter().map(|h| (prediction - h, prediction + h)).unzip()
    }

    fn aggregate(&self, prediction: f64) -> (PredictionInterval, bool) {
        match self.widths() {
            Widths::Unbounded => (PredictionInterval::symmetric(prediction, f64::INFINITY), false),
            Widths::Empty => (PredictionInterval::empty_at(prediction), false),
            Widths::Finite(w) => {
                let (lo, hi) = Self::bounds(prediction, &w);
                let l = self.lower.combine(&lo);
                let u = self.upper.combine(&hi);
                if l <= u {
                    (PredictionInterval::new(l, u), false)
                } else {
                    (PredictionInterval::empty_at(0.5 * (l + u)), true)
                }
            }
        }
    }
}

impl OnlineIntervalAlgorithm for AgAci {
    fn method(&self) -> Method {
        Method::AgAci
    }

    fn propose(&self, prediction: f64) -> Proposal {
        Proposal { interval: self.aggregate(prediction).0, theta: None }
    }

    fn observe(&mut self, prediction: f64, outcome: f64) -> f64 {
        let (_, crossed) = self.aggregate(prediction);
        if crossed {
            self.crossings += 1;
            log::debug!("aggregated bounds crossed at prediction {prediction}");
        }
        if let Widths::Finite(w) = self.widths() {
            let (lo, hi) = Self::bounds(prediction, &w);
            self.lower.update(&lo, outcome);
            self.upper.update(&hi, outcome);
        }
        let radius = self.constructor.radius(prediction, outcome);
        for e in &mut self.experts {
            let err = !self.constructor.interval(prediction, e.theta).contains(outcome);
            e.step(err, self.alpha);
        }
        self.constructor.record(prediction, outcome);
        radius
    }
}
