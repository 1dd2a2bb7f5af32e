use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::ParamDraws;
use crate::numeric::matrix::Matrix;
use crate::{Error, Result};

/// Self-normalised importance sampling summary of the interest parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SnisMoments {
    pub mean: Vec<f64>,
    /// Diagonal of the weighted second-moment matrix `Σ w θθᵀ`.
    pub second_diag: Vec<f64>,
    pub ess: f64,
}

impl SnisMoments {
    /// `tr var(θ | y)` estimated from the weighted moments.
    pub fn trace_variance(&self) -> f64 {
        self.mean
            .iter()
            .zip(&self.second_diag)
            .map(|(m, s)| (s - m * m).max(0.0))
            .sum()
    }
}

/// Weighted interest-parameter moments from prior draws and their log-likelihoods.
///
/// Weights are formed in log space after subtracting the maximum. Draws with a
/// non-finite log-likelihood get zero weight.
pub fn snis_from_log_weights(draws: &ParamDraws, log_weights: &[f64]) -> Result<SnisMoments> {
    let p = draws.dims.interest;
    let max = log_weights
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::AllWeightsDegenerate { ess: 0.0 });
    }
    let mut mean = vec![0.0; p];
    let mut second = vec![0.0; p];
    let (mut sw, mut sw2) = (0.0, 0.0);
    for (j, &lw) in log_weights.iter().enumerate() {
        if !lw.is_finite() {
            continue;
        }
        let w = (lw - max).exp();
        if w == 0.0 {
            continue;
        }
        sw += w;
        sw2 += w * w;
        for (i, &t) in draws.interest(j).iter().enumerate() {
            mean[i] += w * t;
            second[i] += w * t * t;
        }
    }
    for (m, s) in mean.iter_mut().zip(second.iter_mut()) {
        *m /= sw;
        *s /= sw;
    }
    Ok(SnisMoments {
        mean,
        second_diag: second,
        ess: sw * sw / sw2,
    })
}

/// Posterior mean, full second-moment matrix and effective sample size of the
/// interest parameters, using the prior draws as the proposal.
pub fn snis_posterior_moments(
    draws: &ParamDraws,
    log_lik: impl Fn(&[f64]) -> f64,
) -> Result<(Vec<f64>, Matrix, f64)> {
    if draws.len() < 2 {
        return Err(Error::DomainError(
            "importance sampling needs at least two draws".into(),
        ));
    }
    let lw: Vec<f64> = (0..draws.len()).map(|j| log_lik(draws.row(j))).collect();
    let summary = snis_from_log_weights(draws, &lw)?;
    let max = lw
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let p = draws.dims.interest;
    let mut second = Matrix::zeros(p, p);
    let mut sw = 0.0;
    for (j, &l) in lw.iter().enumerate() {
        if !l.is_finite() {
            continue;
        }
        let w = (l - max).exp();
        sw += w;
        let t = draws.interest(j);
        for a in 0..p {
            for b in 0..p {
                second[(a, b)] += w * t[a] * t[b];
            }
        }
    }
    Ok((summary.mean, second.scale(1.0 / sw), summary.ess))
}
