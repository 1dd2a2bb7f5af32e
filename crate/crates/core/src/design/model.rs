use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{Compatibility, Design};
use crate::numeric::rng::StreamRng;
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Parameter vector layout: `interest` coordinates first, then `nuisance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamDims {
    pub interest: usize,
    pub nuisance: usize,
}

impl ParamDims {
    pub fn total(&self) -> usize {
        self.interest + self.nuisance
    }
}

/// A probability model for responses at a design.
///
/// `Setup` caches design-dependent quantities (model matrices, covariance
/// factors). `Batch` caches per-draw quantities for fast repeated likelihood
/// evaluation over one fixed set of prior draws.
pub trait Model: Sync {
    type Setup: Sync;
    type Batch: Sync + Default;

    fn dims(&self, setup: &Self::Setup) -> ParamDims;

    fn setup(&self, design: &Design) -> Result<Self::Setup>;

    fn n_obs(&self, setup: &Self::Setup) -> usize;

    fn sample_prior(
        &self,
        setup: &Self::Setup,
        rng: &mut StreamRng,
        params: &mut [f64],
    ) -> Result<()>;

    fn sample_response(
        &self,
        setup: &Self::Setup,
        params: &[f64],
        rng: &mut StreamRng,
        y: &mut [f64],
    ) -> Result<()>;

    /// `log π(y | params)`; may be `-∞`.
    fn log_likelihood(&self, setup: &Self::Setup, params: &[f64], y: &[f64]) -> f64;

    fn prepare_batch(&self, _setup: &Self::Setup, _draws: &ParamDraws) -> Result<Self::Batch> {
        Ok(Self::Batch::default())
    }

    fn batch_log_likelihood(
        &self,
        setup: &Self::Setup,
        _batch: &Self::Batch,
        draws: &ParamDraws,
        y: &[f64],
        out: &mut [f64],
    ) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.log_likelihood(setup, draws.row(j), y);
        }
    }

    /// True when the two closed-form posterior methods below are implemented.
    fn has_closed_posterior(&self) -> bool {
        false
    }

    /// `−log π(interest | y)` under the marginal posterior of the interest parameters.
    fn posterior_neg_log_density(
        &self,
        _setup: &Self::Setup,
        _y: &[f64],
        _interest: &[f64],
    ) -> Option<Result<f64>> {
        None
    }

    /// Differential entropy of the marginal posterior of the interest parameters.
    fn posterior_entropy(&self, _setup: &Self::Setup, _y: &[f64]) -> Option<Result<f64>> {
        None
    }
}

/// A fixed set of parameter draws stored row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDraws {
    pub dims: ParamDims,
    data: Vec<f64>,
}

impl ParamDraws {
    pub fn from_prior<M: Model + ?Sized>(
        model: &M,
        setup: &M::Setup,
        count: usize,
        rng: &mut StreamRng,
    ) -> Result<ParamDraws> {
        let dims = model.dims(setup);
        let d = dims.total();
        let mut data = vec![0.0; count * d];
        for row in data.chunks_mut(d) {
            model.sample_prior(setup, rng, row)?;
        }
        Ok(ParamDraws { dims, data })
    }

    pub fn from_rows(dims: ParamDims, data: Vec<f64>) -> Result<ParamDraws> {
        if dims.total() == 0 || data.len() % dims.total() != 0 {
            return Err(Error::DimensionMismatch {
                expected: dims.total(),
                found: data.len(),
            });
        }
        Ok(ParamDraws { dims, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dims.total()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        let d = self.dims.total();
        &self.data[j * d..(j + 1) * d]
    }

    #[inline]
    pub fn interest(&self, j: usize) -> &[f64] {
        &self.row(j)[..self.dims.interest]
    }
}

/// Precomputed mean vectors and variances for `N(m_j, σ_j² I)` likelihoods.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaussianMeanBatch {
    n: usize,
    means: Vec<f64>,
    log_norm: Vec<f64>,
    half_precision: Vec<f64>,
}

impl GaussianMeanBatch {
    /// `mean_of(j, out)` writes the mean for draw `j`; `var_of(j)` gives `σ_j²`.
    pub fn build(
        n: usize,
        count: usize,
        mut mean_of: impl FnMut(usize, &mut [f64]),
        var_of: impl Fn(usize) -> f64,
    ) -> GaussianMeanBatch {
        let mut means = vec![0.0; n * count];
        let mut log_norm = Vec::with_capacity(count);
        let mut half_precision = Vec::with_capacity(count);
        for j in 0..count {
            mean_of(j, &mut means[j * n..(j + 1) * n]);
            let v = var_of(j);
            if v > 0.0 && v.is_finite() {
                log_norm.push(-0.5 * n as f64 * (LN_2PI + v.ln()));
                half_precision.push(0.5 / v);
            } else {
                log_norm.push(f64::NEG_INFINITY);
                half_precision.push(0.0);
            }
        }
        GaussianMeanBatch {
            n,
            means,
            log_norm,
            half_precision,
        }
    }

    pub fn log_likelihood(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (j, o) in out.iter_mut().enumerate() {
            let m = &self.means[j * n..(j + 1) * n];
            let mut ss = 0.0;
            for (a, b) in y.iter().zip(m) {
                let r = a - b;
                ss += r * r;
            }
            *o = self.log_norm[j] - self.half_precision[j] * ss;
        }
    }
}

/// A fitted model and a designer model together with how they relate.
#[derive(Debug)]
pub struct ModelPair<'a, F: ?Sized, D: ?Sized> {
    pub fitted: &'a F,
    pub designer: &'a D,
    pub compatibility: Compatibility,
}

impl<F: ?Sized, D: ?Sized> Clone for ModelPair<'_, F, D> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<F: ?Sized, D: ?Sized> Copy for ModelPair<'_, F, D> {}

impl<'a, F: Model + ?Sized, D: Model + ?Sized> ModelPair<'a, F, D> {
    /// Interest dimensions are checked against each other once a design is known.
    pub fn new(fitted: &'a F, designer: &'a D, compatibility: Compatibility) -> Self {
        ModelPair {
            fitted,
            designer,
            compatibility,
        }
    }
}

impl<'a, F: Model + ?Sized> ModelPair<'a, F, F> {
    /// The pair used for internal expected loss: the fitted model plays both roles.
    pub fn internal(fitted: &'a F) -> Self {
        ModelPair {
            fitted,
            designer: fitted,
            compatibility: Compatibility::Compatible,
        }
    }
}
