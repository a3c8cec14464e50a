//! Online conformal prediction intervals for streams of point forecasts.
//!
//! An [`OnlineIntervalAlgorithm`] turns each point prediction into an
//! interval, then learns from the realized outcome. Drive one with
//! [`Stream`] or [`run_stream`], and score the finished run with
//! [`metrics::RunReport`].

pub mod algorithms;
pub mod constructors;
pub mod error;
pub mod metrics;
pub mod simgen;
pub mod stream;

pub use algorithms::build_algorithm;
pub use constructors::{IntervalConstructor, NonconformityScoreStore};
pub use error::{Error, Result};
pub use metrics::{EvalRange, RunReport};
pub use stream::{
    run_stream, ConstructorKind, MaxRadius, Method, OnlineIntervalAlgorithm, PredictionInterval, RunConfig, Stream,
    StreamStep, TargetLevel,
};
