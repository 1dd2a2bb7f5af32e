//! Prior and noise distributions with explicit-stream sampling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use rand::Rng;
use rand_distr::{Distribution as _, Exp, Gamma, StandardNormal};

use super::matrix::SpdFactor;
use super::rng::RandomStream;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Exponential {
        rate: f64,
    },
    /// `IG(a/2, b/2)`: density ∝ `x^{−a/2−1} exp(−b/(2x))`, mean `b/(a−2)`.
    InverseGamma {
        a: f64,
        b: f64,
    },
    Normal {
        mean: f64,
        var: f64,
    },
    MultivariateNormal {
        mean: Vec<f64>,
        factor: SpdFactor,
    },
    /// Point mass, used for degenerate priors.
    Fixed(f64),
}

impl Distribution {
    pub fn dim(&self) -> usize {
        match self {
            Distribution::MultivariateNormal { mean, .. } => mean.len(),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Distribution::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Distribution::Exponential { rate } => rate.is_finite() && *rate > 0.0,
            Distribution::InverseGamma { a, b } => {
                a.is_finite() && b.is_finite() && *a > 0.0 && *b > 0.0
            }
            Distribution::Normal { mean, var } => {
                mean.is_finite() && var.is_finite() && *var >= 0.0
            }
            Distribution::MultivariateNormal { mean, factor } => {
                mean.iter().all(|m| m.is_finite()) && mean.len() == factor.dim()
            }
            Distribution::Fixed(v) => v.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DomainError(format!(
                "invalid distribution parameters: {self:?}"
            )))
        }
    }

    /// Prior mean where it exists.
    pub fn mean(&self) -> Option<f64> {
        match self {
            Distribution::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            Distribution::Exponential { rate } => Some(1.0 / rate),
            Distribution::InverseGamma { a, b } => (*a > 2.0).then(|| b / (a - 2.0)),
            Distribution::Normal { mean, .. } => Some(*mean),
            Distribution::MultivariateNormal { .. } => None,
            Distribution::Fixed(v) => Some(*v),
        }
    }

    /// Draws one scalar; callers must have validated the parameters.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Distribution::Exponential { rate } => {
                Exp::new(rate).expect("validated rate").sample(rng)
            }
            Distribution::InverseGamma { a, b } => {
                let g: f64 = Gamma::new(0.5 * a, 2.0 / b)
                    .expect("validated shape")
                    .sample(rng);
                1.0 / g
            }
            Distribution::Normal { mean, var } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + var.sqrt() * z
            }
            Distribution::Fixed(v) => v,
            Distribution::MultivariateNormal { .. } => {
                panic!("draw called on a vector distribution")
            }
        }
    }

    /// Draws one value of length `dim()` into `out`.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Distribution::MultivariateNormal { mean, factor } => {
                let z: Vec<f64> = (0..mean.len())
                    .map(|_| StandardNormal.sample(rng))
                    .collect();
                factor.mul_lower(&z, out);
                for (o, m) in out.iter_mut().zip(mean) {
                    *o += m;
                }
            }
            other => out[0] = other.draw(rng),
        }
    }
}

/// Draws `count` values from `stream`, flattened row-wise with stride `dim()`.
pub fn sample(dist: &Distribution, stream: RandomStream, count: usize) -> Result<Vec<f64>> {
    dist.validate()?;
    let d = dist.dim();
    let mut out = vec![0.0; count * d];
    let mut rng = stream.rng();
    for chunk in out.chunks_mut(d.max(1)) {
        dist.draw_into(&mut rng, chunk);
    }
    Ok(out)
}
