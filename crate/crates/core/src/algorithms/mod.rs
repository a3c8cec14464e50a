//! Online interval algorithms and the shared machinery they use.

pub mod aci;
pub mod agaci;
pub mod boa;
pub mod faci;
pub mod pinball;
pub mod saocp;
pub mod sfogd;

pub use aci::{Aci, AciState};
pub use agaci::AgAci;
pub use boa::{quantile_loss, BoaCombiner};
pub use faci::{faci_eta_default, faci_eta_online, faci_weight_update, EtaSchedule, Faci};
pub use pinball::{pinball, pinball_subgradient};
pub use saocp::{is_active, prior_mass, saocp_lifetime, saocp_prior, PriorIndex, Saocp};
pub use sfogd::{SfOgd, SfOgdState};

use crate::constructors::IntervalConstructor;
use crate::error::{Error, Result};
use crate::stream::{Method, OnlineIntervalAlgorithm, RunConfig};

/// `sum w x / sum w`, computed as an offset from the smallest value and
/// clamped so the result never leaves `[min x, max x]`.
pub fn convex_combination(values: &[f64], weights: &[f64]) -> f64 {
    assert_eq!(values.len(), weights.len());
    assert!(!values.is_empty());
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return lo;
    }
    let total: f64 = weights.iter().sum();
    let offset: f64 = values.iter().zip(weights).map(|(x, w)| w * (x - lo)).sum::<f64>() / total;
    (lo + offset).clamp(lo, hi)
}

/// Instantiate the algorithm described by `config`.
pub fn build_algorithm(config: &RunConfig) -> Result<Box<dyn OnlineIntervalAlgorithm>> {
    config.validate()?;
    let constructor = IntervalConstructor::new(config.constructor);
    let theta1 = config.effective_theta1();
    let alpha = config.alpha;
    Ok(match config.method {
        Method::Aci => Box::new(Aci::new(alpha, config.effective_gamma()?, theta1, constructor)),
        Method::SfOgd => Box::new(SfOgd::new(alpha, config.effective_gamma()?, theta1, constructor)),
        Method::AgAci => Box::new(AgAci::new(alpha, &config.gamma_grid, theta1, constructor)),
        Method::Faci => Box::new(Faci::new(
            alpha,
            &config.gamma_grid,
            theta1,
            config.interval_length,
            config.eta_convention,
            constructor,
        )),
        Method::Saocp => {
            let d = config.max_radius.ok_or_else(|| Error::InvalidParameter("SAOCP needs D".into()))?;
            Box::new(Saocp::new(alpha, config.effective_gamma()?, theta1, d, config.lifetime_multiplier, constructor))
        }
    })
}
