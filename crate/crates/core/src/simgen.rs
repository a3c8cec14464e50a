//! Seeded data generators for the simulation studies.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)` and turns
//! uniforms into normals with `rand_distr::StandardNormal` (ziggurat), so
//! equal seeds give bit-identical output on every platform. Where a
//! generator needs two independent streams it uses ChaCha stream ids 0
//! and 1 under the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metrics::EvalRange;
use crate::stream::MaxRadius;

/// Smallest maximum radius handed out by [`estimate_d`].
pub const MIN_MAX_RADIUS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    fn rng_stream(self, stream: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_stream(stream);
        rng
    }
}

/// ARMA(1,1) noise `e_t = psi e_{t-1} + z_t + xi z_{t-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmaSpec {
    pub psi: f64,
    pub xi: f64,
    /// Target marginal variance.
    pub scale_s: f64,
    pub length: usize,
    pub burn_in: usize,
}

impl ArmaSpec {
    /// The study setting `psi = xi`, `s = 10`, 100-step burn-in.
    pub fn symmetric(psi: f64, length: usize) -> Self {
        Self { psi, xi: psi, scale_s: 10.0, length, burn_in: 100 }
    }

    /// Innovation standard deviation giving marginal variance `scale_s`.
    pub fn innovation_sd(&self) -> f64 {
        let (p, x) = (self.psi, self.xi);
        (self.scale_s * (1.0 - p * p) / (1.0 + 2.0 * p * x + x * x)).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.psi.is_nan() || self.psi.abs() >= 1.0 {
            return Err(Error::Nonstationary(self.psi.abs()));
        }
        if !(self.scale_s > 0.0 && self.scale_s.is_finite()) || !self.xi.is_finite() {
            return Err(Error::InvalidParameter("ARMA scale must be positive and coefficients finite".into()));
        }
        Ok(())
    }
}

pub fn gen_arma_noise(spec: &ArmaSpec, seed: RngSeed) -> Result<Vec<f64>> {
    spec.validate()?;
    arma_from(spec, &mut seed.rng_stream(0))
}

fn arma_from(spec: &ArmaSpec, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let sd = spec.innovation_sd();
    let mut out = Vec::with_capacity(spec.length);
    let (mut e, mut z_prev) = (0.0, 0.0);
    for i in 0..spec.burn_in + spec.length {
        let z: f64 = sd * rng.sample::<f64, _>(StandardNormal);
        e = spec.psi * e + z + spec.xi * z_prev;
        z_prev = z;
        if i >= spec.burn_in {
            out.push(e);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FriedmanSpec {
    pub length: usize,
}

pub const FRIEDMAN_FEATURES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FriedmanRow {
    pub features: [f64; FRIEDMAN_FEATURES],
    pub mean: f64,
    pub outcome: f64,
}

/// `10 sin(pi x1 x2) + 20 (x3 - 1/2)^2 + 10 x4 + 5 x5`; `x6` is ignored.
pub fn friedman_mean(x: &[f64; FRIEDMAN_FEATURES]) -> f64 {
    10.0 * (std::f64::consts::PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

/// Uniform features on stream 1, ARMA noise on stream 0.
pub fn gen_friedman(spec: &FriedmanSpec, arma: &ArmaSpec, seed: RngSeed) -> Result<Vec<FriedmanRow>> {
    let noise_spec = ArmaSpec { length: spec.length, ..*arma };
    let noise = gen_arma_noise(&noise_spec, seed)?;
    let mut rng = seed.rng_stream(1);
    Ok(noise
        .into_iter()
        .map(|eps| {
            let features: [f64; FRIEDMAN_FEATURES] = std::array::from_fn(|_| rng.gen::<f64>());
            let mean = friedman_mean(&features);
            FriedmanRow { features, mean, outcome: mean + eps }
        })
        .collect())
}

/// Point predictor that knows the regression function.
pub fn oracle_predictor(features: &[f64; FRIEDMAN_FEATURES]) -> f64 {
    friedman_mean(features)
}

/// Gaussian outcomes around zero whose scale jumps after `shift_point`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftSpec {
    pub length: usize,
    pub base_sigma: f64,
    pub shift_delta: f64,
    pub shift_point: usize,
}

impl ShiftSpec {
    pub fn new(shift_delta: f64) -> Self {
        Self { length: 500, base_sigma: 0.2, shift_delta, shift_point: 250 }
    }

    /// Standard deviation at 1-based step `t`.
    pub fn sigma(&self, t: usize) -> f64 {
        if t > self.shift_point {
            self.base_sigma + self.shift_delta
        } else {
            self.base_sigma
        }
    }
}

/// `(prediction, outcome)` pairs with prediction identically zero.
pub fn gen_shift_stream(spec: &ShiftSpec, seed: RngSeed) -> Vec<(f64, f64)> {
    let mut rng = seed.rng_stream(0);
    (1..=spec.length)
        .map(|t| {
            let z: f64 = rng.sample(StandardNormal);
            (0.0, spec.sigma(t) * z)
        })
        .collect()
}

/// Largest absolute residual in `window`, floored at [`MIN_MAX_RADIUS`].
pub fn estimate_d(residuals: &[f64], window: EvalRange) -> Result<MaxRadius> {
    let w = window.slice(residuals)?;
    let d = w.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    if !d.is_finite() {
        return Err(Error::InvalidParameter("residuals must be finite".into()));
    }
    if d < MIN_MAX_RADIUS {
        log::warn!("residuals in {}..={} are all zero; flooring D at {MIN_MAX_RADIUS}", window.start, window.end);
        return MaxRadius::new(MIN_MAX_RADIUS);
    }
    MaxRadius::new(d)
}

/// Recursive least squares on `[1, x]` with a ridge prior.
#[derive(Debug, Clone)]
pub struct OnlineRidge {
    weights: Vec<f64>,
    /// Inverse of the regularized Gram matrix, row-major.
    inv: Vec<f64>,
    dim: usize,
}

impl OnlineRidge {
    pub fn new(features: usize, lambda: f64) -> Self {
        assert!(lambda > 0.0);
        let dim = features + 1;
        let mut inv = vec![0.0; dim * dim];
        for i in 0..dim {
            inv[i * dim + i] = 1.0 / lambda;
        }
        Self { weights: vec![0.0; dim], inv, dim }
    }

    fn augmented(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len() + 1, self.dim);
        std::iter::once(1.0).chain(x.iter().copied()).collect()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.augmented(x).iter().zip(&self.weights).map(|(a, b)| a * b).sum()
    }

    /// Sherman-Morrison update with the realized pair.
    pub fn update(&mut self, x: &[f64], y: f64) {
        let z = self.augmented(x);
        let d = self.dim;
        let pz: Vec<f64> = (0..d).map(|i| (0..d).map(|j| self.inv[i * d + j] * z[j]).sum()).collect();
        let denom = 1.0 + z.iter().zip(&pz).map(|(a, b)| a * b).sum::<f64>();
        let resid = y - self.predict(x);
        for (w, p) in self.weights.iter_mut().zip(&pz) {
            *w += p * resid / denom;
        }
        for i in 0..d {
            for j in 0..d {
                self.inv[i * d + j] -= pz[i] * pz[j] / denom;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn innovation_variance_example() {
        let s = ArmaSpec::symmetric(0.1, 10);
        assert_relative_eq!(s.innovation_sd().powi(2), 9.9 / 1.03, max_relative = 1e-12);
        let s = ArmaSpec::symmetric(0.0, 10);
        assert_relative_eq!(s.innovation_sd().powi(2), 10.0, max_relative = 1e-15);
    }

    #[test]
    fn rejects_nonstationary() {
        assert_eq!(gen_arma_noise(&ArmaSpec::symmetric(1.0, 5), RngSeed(1)), Err(Error::Nonstationary(1.0)));
    }

    #[test]
    fn long_run_variance() {
        for psi in [0.1, 0.8, 0.9] {
            let x = gen_arma_noise(&ArmaSpec::symmetric(psi, 100_000), RngSeed(7)).unwrap();
            let v = variance(&x);
            assert!((v / 10.0 - 1.0).abs() < 0.05, "psi={psi} var={v}");
        }
    }

    #[test]
    fn seeds_are_deterministic() {
        let s = ArmaSpec::symmetric(0.5, 50);
        assert_eq!(gen_arma_noise(&s, RngSeed(3)).unwrap(), gen_arma_noise(&s, RngSeed(3)).unwrap());
        assert_ne!(gen_arma_noise(&s, RngSeed(3)).unwrap(), gen_arma_noise(&s, RngSeed(4)).unwrap());
        let sh = ShiftSpec::new(0.5);
        assert_eq!(gen_shift_stream(&sh, RngSeed(9)), gen_shift_stream(&sh, RngSeed(9)));
    }

    #[test]
    fn friedman_examples() {
        assert_eq!(friedman_mean(&[0.0; 6]), 5.0);
        assert_relative_eq!(friedman_mean(&[0.5, 1.0, 0.5, 0.0, 0.0, 0.0]), 10.0, max_relative = 1e-15);
        assert_eq!(friedman_mean(&[0.3, 0.2, 0.9, 0.4, 0.1, 0.0]), friedman_mean(&[0.3, 0.2, 0.9, 0.4, 0.1, 0.77]));
        let rows = gen_friedman(&FriedmanSpec { length: 200 }, &ArmaSpec::symmetric(0.1, 0), RngSeed(1)).unwrap();
        assert_eq!(rows.len(), 200);
        for r in &rows {
            assert_eq!(oracle_predictor(&r.features), r.mean);
            assert!(r.features.iter().all(|x| (0.0..1.0).contains(x)));
        }
    }

    #[test]
    fn shift_stream_shape() {
        let s = gen_shift_stream(&ShiftSpec::new(0.0), RngSeed(1));
        assert_eq!(s.len(), 500);
        assert!(s.iter().all(|(p, _)| *p == 0.0));
    }

    #[test]
    fn d_examples() {
        assert_eq!(estimate_d(&[1.0, -3.0, 2.0], EvalRange::full(3)).unwrap().get(), 3.0);
        assert_eq!(estimate_d(&[0.0; 4], EvalRange::full(4)).unwrap().get(), MIN_MAX_RADIUS);
        assert_eq!(estimate_d(&[1.0, -0.4], EvalRange::new(2, 2)).unwrap().get(), 0.4);
        assert!(estimate_d(&[1.0], EvalRange::new(2, 2)).is_err());
    }

    #[test]
    fn ridge_recovers_linear_map() {
        let mut m = OnlineRidge::new(2, 1e-6);
        let mut rng = RngSeed(5).rng();
        for _ in 0..200 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            m.update(&x, 1.0 + 2.0 * x[0] - 3.0 * x[1]);
        }
        assert_relative_eq!(m.predict(&[0.5, 0.5]), 0.5, epsilon = 1e-6);
    }
}
