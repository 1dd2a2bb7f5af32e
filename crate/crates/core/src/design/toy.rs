use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{Design, GaussianMeanBatch, Model, ParamDims, ParamDraws};
use crate::numeric::dist::Distribution;
use crate::numeric::rng::StreamRng;
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `y_i ~ N(θ x_i, σ²)` with known `σ²` and prior `θ ~ N(m₀, v₀)`.
///
/// The posterior is normal in closed form, which makes this the reference
/// model for checking the Monte Carlo estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugateNormalMean {
    pub prior_mean: f64,
    pub prior_var: f64,
    pub noise_var: f64,
}

impl ConjugateNormalMean {
    pub fn new(prior_mean: f64, prior_var: f64, noise_var: f64) -> Result<Self> {
        if !(prior_var > 0.0 && noise_var > 0.0 && prior_mean.is_finite()) {
            return Err(Error::DomainError(
                "prior and noise variances must be positive".into(),
            ));
        }
        Ok(ConjugateNormalMean {
            prior_mean,
            prior_var,
            noise_var,
        })
    }

    /// Posterior precision for settings `xs`.
    pub fn posterior_precision(&self, xs: &[f64]) -> f64 {
        1.0 / self.prior_var + xs.iter().map(|x| x * x).sum::<f64>() / self.noise_var
    }

    pub fn posterior_mean(&self, xs: &[f64], y: &[f64]) -> f64 {
        let s: f64 = xs.iter().zip(y).map(|(x, y)| x * y).sum();
        (self.prior_mean / self.prior_var + s / self.noise_var) / self.posterior_precision(xs)
    }

    /// Preposterior risk `E[var(θ | y)]`, constant in `y` for this model.
    pub fn posterior_variance(&self, xs: &[f64]) -> f64 {
        1.0 / self.posterior_precision(xs)
    }
}

impl Model for ConjugateNormalMean {
    type Setup = Vec<f64>;
    type Batch = GaussianMeanBatch;

    fn dims(&self, _setup: &Vec<f64>) -> ParamDims {
        ParamDims {
            interest: 1,
            nuisance: 0,
        }
    }

    fn setup(&self, design: &Design) -> Result<Vec<f64>> {
        if design.k() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: design.k(),
            });
        }
        Ok(design.column(0))
    }

    fn n_obs(&self, setup: &Vec<f64>) -> usize {
        setup.len()
    }

    fn sample_prior(
        &self,
        _setup: &Vec<f64>,
        rng: &mut StreamRng,
        params: &mut [f64],
    ) -> Result<()> {
        params[0] = Distribution::Normal {
            mean: self.prior_mean,
            var: self.prior_var,
        }
        .draw(rng);
        Ok(())
    }

    fn sample_response(
        &self,
        setup: &Vec<f64>,
        params: &[f64],
        rng: &mut StreamRng,
        y: &mut [f64],
    ) -> Result<()> {
        for (yi, x) in y.iter_mut().zip(setup) {
            *yi = Distribution::Normal {
                mean: params[0] * x,
                var: self.noise_var,
            }
            .draw(rng);
        }
        Ok(())
    }

    fn log_likelihood(&self, setup: &Vec<f64>, params: &[f64], y: &[f64]) -> f64 {
        let ss: f64 = setup
            .iter()
            .zip(y)
            .map(|(x, y)| (y - params[0] * x).powi(2))
            .sum();
        -0.5 * setup.len() as f64 * (LN_2PI + self.noise_var.ln()) - 0.5 * ss / self.noise_var
    }

    fn prepare_batch(&self, setup: &Vec<f64>, draws: &ParamDraws) -> Result<GaussianMeanBatch> {
        Ok(GaussianMeanBatch::build(
            setup.len(),
            draws.len(),
            |j, out| {
                let t = draws.row(j)[0];
                for (o, x) in out.iter_mut().zip(setup) {
                    *o = t * x;
                }
            },
            |_| self.noise_var,
        ))
    }

    fn batch_log_likelihood(
        &self,
        _setup: &Vec<f64>,
        batch: &GaussianMeanBatch,
        _draws: &ParamDraws,
        y: &[f64],
        out: &mut [f64],
    ) {
        batch.log_likelihood(y, out);
    }

    fn has_closed_posterior(&self) -> bool {
        true
    }

    fn posterior_neg_log_density(
        &self,
        setup: &Vec<f64>,
        y: &[f64],
        interest: &[f64],
    ) -> Option<Result<f64>> {
        let p = self.posterior_precision(setup);
        let m = self.posterior_mean(setup, y);
        Some(Ok(
            0.5 * (LN_2PI - p.ln()) + 0.5 * p * (interest[0] - m).powi(2)
        ))
    }

    fn posterior_entropy(&self, setup: &Vec<f64>, _y: &[f64]) -> Option<Result<f64>> {
        let p = self.posterior_precision(setup);
        Some(Ok(0.5 * (LN_2PI + 1.0 - p.ln())))
    }
}
