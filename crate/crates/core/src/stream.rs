//! Domain types and the predict-then-observe stream protocol.
//!
//! Every algorithm in this crate is driven through [`Stream`]: the interval
//! for step `t` is requested with [`Stream::predict`], which hands back a
//! [`PendingStep`] that must be resolved with the realized outcome before
//! the next prediction can be requested. The borrow checker enforces the
//! ordering, so an outcome can never leak into the interval it is scored
//! against.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Target empirical coverage `alpha`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TargetLevel(f64);

impl TargetLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidLevel(alpha))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 - alpha`.
    #[inline]
    pub fn miscoverage(self) -> f64 {
        1.0 - self.0
    }
}

/// Assumed strict upper bound on every radius.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MaxRadius(f64);

impl MaxRadius {
    pub fn new(d: f64) -> Result<Self> {
        if d > 0.0 && d.is_finite() {
            Ok(Self(d))
        } else {
            Err(Error::InvalidParameter(format!("maximum radius must be positive and finite, got {d}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// A closed interval `[lower, upper]` over the extended reals.
///
/// Negative half-widths produce the *empty* interval. It is reported with
/// both endpoints at the prediction and zero width, but contains nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    empty: bool,
}

impl PredictionInterval {
    /// Closed interval; the endpoints are reordered if given backwards.
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower: lower.min(upper), upper: lower.max(upper), empty: false }
    }

    /// Symmetric interval around `center`. A negative (or `-inf`) half-width
    /// yields the empty interval anchored at `center`.
    pub fn symmetric(center: f64, half_width: f64) -> Self {
        if half_width < 0.0 {
            Self::empty_at(center)
        } else {
            Self { lower: center - half_width, upper: center + half_width, empty: false }
        }
    }

    pub fn empty_at(center: f64) -> Self {
        Self { lower: center, upper: center, empty: true }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Closed membership: endpoints count as covered.
    #[inline]
    pub fn contains(&self, y: f64) -> bool {
        !self.empty && self.lower <= y && y <= self.upper
    }

    /// `upper - lower`; zero for the empty interval, possibly `+inf`.
    #[inline]
    pub fn width(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.upper - self.lower
        }
    }

    #[inline]
    pub fn is_infinite_width(&self) -> bool {
        self.width().is_infinite()
    }

    /// `self ⊆ other`. The empty interval is a subset of everything.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.empty || (!other.empty && other.lower <= self.lower && self.upper <= other.upper)
    }
}

/// One completed time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamStep {
    /// 1-based index.
    pub t: usize,
    pub prediction: f64,
    pub outcome: f64,
    pub interval: PredictionInterval,
    /// `true` when the outcome fell outside the interval.
    pub err: bool,
    /// Constructor parameter used at this step. AgACI aggregates bounds
    /// directly and has no single parameter, so it reports `None`.
    pub theta: Option<f64>,
    /// Smallest parameter whose constructed interval covers the outcome.
    pub radius: f64,
}

impl StreamStep {
    #[inline]
    pub fn covered(&self) -> bool {
        !self.err
    }
}

/// The five online interval algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Aci,
    AgAci,
    Faci,
    SfOgd,
    Saocp,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Aci, Method::AgAci, Method::Faci, Method::SfOgd, Method::Saocp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Aci => "ACI",
            Method::AgAci => "AgACI",
            Method::Faci => "FACI",
            Method::SfOgd => "SF-OGD",
            Method::Saocp => "SAOCP",
        }
    }

    /// Constructor each method was originally presented with.
    pub fn native_constructor(self) -> ConstructorKind {
        match self {
            Method::Aci | Method::AgAci | Method::Faci => ConstructorKind::Quantile,
            Method::SfOgd | Method::Saocp => ConstructorKind::Linear,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('_', "-").as_str() {
            "ACI" => Ok(Method::Aci),
            "AGACI" => Ok(Method::AgAci),
            "FACI" => Ok(Method::Faci),
            "SF-OGD" | "SFOGD" => Ok(Method::SfOgd),
            "SAOCP" => Ok(Method::Saocp),
            _ => Err(Error::InvalidParameter(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstructorKind {
    Linear,
    Quantile,
}

impl ConstructorKind {
    pub fn name(self) -> &'static str {
        match self {
            ConstructorKind::Linear => "linear",
            ConstructorKind::Quantile => "quantile",
        }
    }
}

impl fmt::Display for ConstructorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConstructorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ConstructorKind::Linear),
            "quantile" | "conformal" => Ok(ConstructorKind::Quantile),
            _ => Err(Error::InvalidParameter(format!("unknown constructor '{s}'"))),
        }
    }
}

/// Which level is plugged into the closed-form FACI learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EtaConvention {
    /// `alpha` is the target coverage.
    #[default]
    Coverage,
    /// `alpha` is replaced by the miscoverage `1 - alpha`.
    Miscoverage,
}

/// Default AgACI/FACI learning-rate grid.
pub const DEFAULT_GAMMA_GRID: [f64; 8] = [0.001, 0.002, 0.004, 0.008, 0.016, 0.032, 0.064, 0.128];

/// Everything needed to instantiate one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub alpha: TargetLevel,
    pub constructor: ConstructorKind,
    /// Starting parameter; `None` picks `alpha` for the quantile
    /// constructor and `0` for the linear one.
    pub theta1: Option<f64>,
    /// ACI / SF-OGD / SAOCP learning rate; SF-OGD and SAOCP fall back to
    /// `D / sqrt(3)`.
    pub gamma: Option<f64>,
    pub gamma_grid: Vec<f64>,
    pub max_radius: Option<MaxRadius>,
    pub lifetime_multiplier: usize,
    pub interval_length: usize,
    pub eta_convention: EtaConvention,
}

/// Learning rate used by ACI when none is supplied.
pub const DEFAULT_ACI_GAMMA: f64 = 0.01;

impl RunConfig {
    /// Defaults for `method` with its native constructor.
    pub fn new(method: Method, alpha: TargetLevel) -> Self {
        Self {
            method,
            alpha,
            constructor: method.native_constructor(),
            theta1: None,
            gamma: None,
            gamma_grid: DEFAULT_GAMMA_GRID.to_vec(),
            max_radius: None,
            lifetime_multiplier: 8,
            interval_length: 100,
            eta_convention: EtaConvention::Coverage,
        }
    }

    pub fn with_constructor(mut self, constructor: ConstructorKind) -> Self {
        self.constructor = constructor;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_max_radius(mut self, d: MaxRadius) -> Self {
        self.max_radius = Some(d);
        self
    }

    pub fn with_theta1(mut self, theta1: f64) -> Self {
        self.theta1 = Some(theta1);
        self
    }

    pub fn with_gamma_grid(mut self, grid: Vec<f64>) -> Self {
        self.gamma_grid = grid;
        self
    }

    pub fn effective_theta1(&self) -> f64 {
        self.theta1.unwrap_or(match self.constructor {
            ConstructorKind::Quantile => self.alpha.get(),
            ConstructorKind::Linear => 0.0,
        })
    }

    /// Resolved single learning rate for ACI, SF-OGD and SAOCP.
    pub fn effective_gamma(&self) -> Result<f64> {
        let gamma = match (self.gamma, self.method) {
            (Some(g), _) => g,
            (None, Method::Aci) => DEFAULT_ACI_GAMMA,
            (None, _) => match self.max_radius {
                Some(d) => d.get() / 3f64.sqrt(),
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "{} needs a learning rate or a maximum radius",
                        self.method
                    )))
                }
            },
        };
        let ok = match self.method {
            // gamma = 0 freezes ACI, which is occasionally useful.
            Method::Aci => gamma >= 0.0 && gamma.is_finite(),
            _ => gamma > 0.0 && gamma.is_finite(),
        };
        if ok {
            Ok(gamma)
        } else {
            Err(Error::InvalidParameter(format!("learning rate must be positive, got {gamma}")))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.effective_theta1().is_finite() {
            return Err(Error::InvalidParameter("theta1 must be finite".into()));
        }
        match self.method {
            Method::Aci | Method::SfOgd => {
                self.effective_gamma()?;
            }
            Method::AgAci | Method::Faci => {
                if self.gamma_grid.is_empty() {
                    return Err(Error::InvalidParameter("learning-rate grid is empty".into()));
                }
                if self.gamma_grid.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
                    return Err(Error::InvalidParameter("learning rates must be positive".into()));
                }
                if self.gamma_grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidParameter("learning-rate grid must be strictly increasing".into()));
                }
                if self.method == Method::Faci && self.interval_length == 0 {
                    return Err(Error::InvalidParameter("interval length must be at least 1".into()));
                }
            }
            Method::Saocp => {
                if self.max_radius.is_none() {
                    return Err(Error::InvalidParameter("SAOCP needs a maximum radius D".into()));
                }
                if self.lifetime_multiplier == 0 {
                    return Err(Error::InvalidParameter("lifetime multiplier must be at least 1".into()));
                }
                self.effective_gamma()?;
            }
        }
        Ok(())
    }
}

/// What an algorithm emits for the current step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub interval: PredictionInterval,
    pub theta: Option<f64>,
}

/// A stateful predict-then-observe interval machine.
///
/// `propose` must be a pure function of the state built from past
/// observations. `observe` folds in the realized outcome for the prediction
/// last proposed and returns that step's radius. Drive implementations
/// through [`Stream`], which guarantees the calls alternate.
pub trait OnlineIntervalAlgorithm: Send {
    fn method(&self) -> Method;

    fn propose(&self, prediction: f64) -> Proposal;

    fn observe(&mut self, prediction: f64, outcome: f64) -> f64;
}

impl<A: OnlineIntervalAlgorithm + ?Sized> OnlineIntervalAlgorithm for Box<A> {
    fn method(&self) -> Method {
        (**self).method()
    }

    fn propose(&self, prediction: f64) -> Proposal {
        (**self).propose(prediction)
    }

    fn observe(&mut self, prediction: f64, outcome: f64) -> f64 {
        (**self).observe(prediction, outcome)
    }
}

/// Drives an algorithm one step at a time.
#[derive(Debug)]
pub struct Stream<A> {
    algorithm: A,
    t: usize,
}

impl<A: OnlineIntervalAlgorithm> Stream<A> {
    pub fn new(algorithm: A) -> Self {
        Self { algorithm, t: 0 }
    }

    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.t
    }

    pub fn algorithm(&self) -> &A {
        &self.algorithm
    }

    pub fn into_inner(self) -> A {
        self.algorithm
    }

    /// Request the interval for the next step.
    pub fn predict(&mut self, prediction: f64) -> Result<PendingStep<'_, A>> {
        let t = self.t + 1;
        if !prediction.is_finite() {
            return Err(Error::NonFinite { what: "prediction", t, value: prediction });
        }
        let proposal = self.algorithm.propose(prediction);
        Ok(PendingStep { stream: self, t, prediction, proposal })
    }

    /// Convenience wrapper for `predict(..)?.observe(..)`.
    pub fn step(&mut self, prediction: f64, outcome: f64) -> Result<StreamStep> {
        self.predict(prediction)?.observe(outcome)
    }
}

/// An interval that has been emitted but not yet scored.
#[derive(Debug)]
pub struct PendingStep<'a, A> {
    stream: &'a mut Stream<A>,
    t: usize,
    prediction: f64,
    proposal: Proposal,
}

impl<A: OnlineIntervalAlgorithm> PendingStep<'_, A> {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn interval(&self) -> PredictionInterval {
        self.proposal.interval
    }

    pub fn theta(&self) -> Option<f64> {
        self.proposal.theta
    }

    /// Reveal the outcome. A non-finite outcome is rejected and leaves the
    /// algorithm untouched.
    pub fn observe(self, outcome: f64) -> Result<StreamStep> {
        if !outcome.is_finite() {
            return Err(Error::NonFinite { what: "outcome", t: self.t, value: outcome });
        }
        let radius = self.stream.algorithm.observe(self.prediction, outcome);
        self.stream.t = self.t;
        let interval = self.proposal.interval;
        Ok(StreamStep {
            t: self.t,
            prediction: self.prediction,
            outcome,
            interval,
            err: !interval.contains(outcome),
            theta: self.proposal.theta,
            radius,
        })
    }
}

/// Run `algorithm` over `(prediction, outcome)` pairs in order.
pub fn run_stream<A, I>(algorithm: &mut A, pairs: I) -> Result<Vec<StreamStep>>
where
    A: OnlineIntervalAlgorithm,
    I: IntoIterator<Item = (f64, f64)>,
{
    let pairs = pairs.into_iter();
    let mut out = Vec::with_capacity(pairs.size_hint().0);
    let mut stream = Stream::new(algorithm);
    for (prediction, outcome) in pairs {
        out.push(stream.step(prediction, outcome)?);
    }
    if out.is_empty() {
        return Err(Error::Empty);
    }
    Ok(out)
}

impl<A: OnlineIntervalAlgorithm + ?Sized> OnlineIntervalAlgorithm for &mut A {
    fn method(&self) -> Method {
        (**self).method()
    }

    fn propose(&self, prediction: f64) -> Proposal {
        (**self).propose(prediction)
    }

    fn observe(&mut self, prediction: f64, outcome: f64) -> f64 {
        (**self).observe(prediction, outcome)
    }
}
