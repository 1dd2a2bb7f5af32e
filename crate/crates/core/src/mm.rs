//! Michaelis–Menten fitted model and a Gaussian-process discrepancy designer
//! model built on the Matérn(5/2) correlation.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::design::{
    mc_external_loss, mc_internal_loss, Compatibility, Design, ExpectedLossEstimate, GaussianMeanBatch, LossKind,
    LossSpec, McSizes, Model, ModelPair, ParamDims, ParamDraws,
};
use crate::numeric::dist::Distribution;
use crate::numeric::exec::Executor;
use crate::numeric::kernel::matern52;
use crate::numeric::matrix::{cholesky_logdet, Matrix, SpdFactor};
use crate::numeric::rng::{RandomStream, StreamRng};
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Default concentration scale.
pub const DEFAULT_L: f64 = 400.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmParams {
    pub theta1: f64,
    pub theta2: f64,
    pub l: f64,
}

impl MmParams {
    pub fn new(theta1: f64, theta2: f64) -> MmParams {
        MmParams { theta1, theta2, l: DEFAULT_L }
    }
}

/// `η(θ, x) = θ₁xL/(xL + θ₂)`.
#[inline]
pub fn mm_eta(params: MmParams, x: f64) -> f64 {
    let xl = x * params.l;
    params.theta1 * xl / (xl + params.theta2)
}

/// `(∂η/∂θ₁, ∂η/∂θ₂)`.
#[inline]
pub fn mm_eta_grad(params: MmParams, x: f64) -> [f64; 2] {
    let xl = x * params.l;
    let den = xl + params.theta2;
    if den == 0.0 {
        return [0.0, 0.0];
    }
    [xl / den, -params.theta1 * xl / (den * den)]
}

/// `σ²(I + ρC)` with `C_ij = c(|x_i − x_j|; α)`.
pub fn designer_covariance(sigma2: f64, rho: f64, alpha: f64, xs: &[f64]) -> Result<Matrix> {
    if !(sigma2 > 0.0 && rho >= 0.0 && alpha > 0.0) {
        return Err(Error::DomainError(alloc::format!(
            "covariance needs σ² > 0, ρ ≥ 0, α > 0; got {sigma2}, {rho}, {alpha}"
        )));
    }
    let n = xs.len();
    Ok(Matrix::from_fn(n, n, |i, j| {
        let c = if i == j { 1.0 } else { matern52((xs[i] - xs[j]).abs(), alpha) };
        sigma2 * ((i == j) as u8 as f64 + rho * c)
    }))
}

fn unit_settings(design: &Design) -> Result<Vec<f64>> {
    if design.k() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: design.k() });
    }
    let xs = design.column(0);
    if xs.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidDesign("concentrations must lie in [0, 1]".into()));
    }
    Ok(xs)
}

fn fill_eta(params: MmParams, xs: &[f64], out: &mut [f64]) {
    for (o, &x) in out.iter_mut().zip(xs) {
        *o = mm_eta(params, x);
    }
}

/// `y ~ N(η(θ, Δ), σ²I)`, `θ₁, θ₂ ~ U[20, 200]`, `σ² ~ Exp(1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MmFittedModel {
    pub l: f64,
    pub theta: [Distribution; 2],
    pub sigma2: Distribution,
}

impl Default for MmFittedModel {
    fn default() -> Self {
        let u = Distribution::Uniform { lo: 20.0, hi: 200.0 };
        MmFittedModel { l: DEFAULT_L, theta: [u.clone(), u], sigma2: Distribution::Exponential { rate: 1.0 } }
    }
}

impl MmFittedModel {
    fn params(&self, p: &[f64]) -> MmParams {
        MmParams { theta1: p[0], theta2: p[1], l: self.l }
    }

    /// Log-density of `N(η(θ), σ²I)`.
    pub fn loglik(&self, y: &[f64], theta: [f64; 2], sigma2: f64, xs: &[f64]) -> f64 {
        let p = MmParams { theta1: theta[0], theta2: theta[1], l: self.l };
        let ss: f64 = y.iter().zip(xs).map(|(v, &x)| (v - mm_eta(p, x)).powi(2)).sum();
        -0.5 * y.len() as f64 * (LN_2PI + sigma2.ln()) - 0.5 * ss / sigma2
    }
}

impl Model for MmFittedModel {
    type Setup = Vec<f64>;
    type Batch = GaussianMeanBatch;

    fn dims(&self, _setup: &Vec<f64>) -> ParamDims {
        ParamDims { interest: 2, nuisance: 1 }
    }

    fn setup(&self, design: &Design) -> Result<Vec<f64>> {
        unit_settings(design)
    }

    fn n_obs(&self, setup: &Vec<f64>) -> usize {
        setup.len()
    }

    fn sample_prior(&self, _setup: &Vec<f64>, rng: &mut StreamRng, params: &mut [f64]) -> Result<()> {
        params[0] = self.theta[0].draw(rng);
        params[1] = self.theta[1].draw(rng);
        params[2] = self.sigma2.draw(rng);
        Ok(())
    }

    fn sample_response(&self, setup: &Vec<f64>, params: &[f64], rng: &mut StreamRng, y: &mut [f64]) -> Result<()> {
        let p = self.params(params);
        for (yi, &x) in y.iter_mut().zip(setup) {
            *yi = Distribution::Normal { mean: mm_eta(p, x), var: params[2] }.draw(rng);
        }
        Ok(())
    }

    fn log_likelihood(&self, setup: &Vec<f64>, params: &[f64], y: &[f64]) -> f64 {
        self.loglik(y, [params[0], params[1]], params[2], setup)
    }

    fn prepare_batch(&self, setup: &Vec<f64>, draws: &ParamDraws) -> Result<GaussianMeanBatch> {
        Ok(GaussianMeanBatch::build(
            setup.len(),
            draws.len(),
            |j, out| fill_eta(self.params(draws.row(j)), setup, out),
            |j| draws.row(j)[2],
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
}

/// `y ~ N(η(θ, Δ), σ²(I + ρC))` with Matérn(5/2) correlation `C` of range `α`.
///
/// Parameters are laid out as `(θ₁, θ₂, σ², ρ, α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GpDiscrepancyDesigner {
    pub l: f64,
    pub theta: [Distribution; 2],
    pub sigma2: Distribution,
    pub rho: Distribution,
    pub alpha: Distribution,
}

impl Default for GpDiscrepancyDesigner {
    fn default() -> Self {
        let u = Distribution::Uniform { lo: 20.0, hi: 200.0 };
        GpDiscrepancyDesigner {
            l: DEFAULT_L,
            theta: [u.clone(), u],
            sigma2: Distribution::Exponential { rate: 1.0 },
            rho: Distribution::Exponential { rate: 1.0 },
            alpha: Distribution::Exponential { rate: 5.0 },
        }
    }
}

impl GpDiscrepancyDesigner {
    /// `σ₀²(1 + ρ₀)` from the prior means.
    pub fn variance_inflation(&self) -> Result<f64> {
        let s = self.sigma2.mean().ok_or(Error::DomainError("σ² prior has no mean".into()))?;
        let r = self.rho.mean().ok_or(Error::DomainError("ρ prior has no mean".into()))?;
        Ok(s * (1.0 + r))
    }

    fn factor(&self, params: &[f64], xs: &[f64]) -> Result<SpdFactor> {
        cholesky_logdet(&designer_covariance(params[2], params[3], params[4], xs)?)
    }

    /// Log-density of `N(η(θ), σ²(I + ρC))`.
    pub fn loglik(&self, y: &[f64], params: &[f64], xs: &[f64]) -> Result<f64> {
        let f = self.factor(params, xs)?;
        let p = MmParams { theta1: params[0], theta2: params[1], l: self.l };
        let r: Vec<f64> = y.iter().zip(xs).map(|(v, &x)| v - mm_eta(p, x)).collect();
        Ok(-0.5 * y.len() as f64 * LN_2PI - 0.5 * f.log_det() - 0.5 * f.inv_quad_form(&r)?)
    }
}

impl Model for GpDiscrepancyDesigner {
    type Setup = Vec<f64>;
    type Batch = ();

    fn dims(&self, _setup: &Vec<f64>) -> ParamDims {
        ParamDims { interest: 2, nuisance: 3 }
    }

    fn setup(&self, design: &Design) -> Result<Vec<f64>> {
        unit_settings(design)
    }

    fn n_obs(&self, setup: &Vec<f64>) -> usize {
        setup.len()
    }

    fn sample_prior(&self, _setup: &Vec<f64>, rng: &mut StreamRng, params: &mut [f64]) -> Result<()> {
        params[0] = self.theta[0].draw(rng);
        params[1] = self.theta[1].draw(rng);
        params[2] = self.sigma2.draw(rng);
        params[3] = self.rho.draw(rng);
        params[4] = self.alpha.draw(rng);
        Ok(())
    }

    fn sample_response(&self, setup: &Vec<f64>, params: &[f64], rng: &mut StreamRng, y: &mut [f64]) -> Result<()> {
        let f = self.factor(params, setup)?;
        let z: Vec<f64> =
            (0..setup.len()).map(|_| Distribution::Normal { mean: 0.0, var: 1.0 }.draw(rng)).collect();
        f.mul_lower(&z, y);
        let p = MmParams { theta1: params[0], theta2: params[1], l: self.l };
        for (yi, &x) in y.iter_mut().zip(setup) {
            *yi += mm_eta(p, x);
        }
        Ok(())
    }

    fn log_likelihood(&self, setup: &Vec<f64>, params: &[f64], y: &[f64]) -> f64 {
        self.loglik(y, params, setup).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Expected fitted log-likelihood `d(t)` under the designer at `(θ, σ², ρ)`,
/// for `t = (t₁, t₂, t_σ²)`.
pub fn kl_objective(theta: MmParams, sigma2: f64, rho: f64, xs: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
    move |t: &[f64]| {
        let tp = MmParams { theta1: t[0], theta2: t[1], l: theta.l };
        let n = xs.len() as f64;
        let ss: f64 = xs.iter().map(|&x| (mm_eta(theta, x) - mm_eta(tp, x)).powi(2)).sum();
        -0.5 * n * LN_2PI - 0.5 * n * t[2].ln() - ss / (2.0 * t[2]) - n * sigma2 * (1.0 + rho) / (2.0 * t[2])
    }
}

/// `tr[(Σᵢ gᵢgᵢᵀ)⁻¹]` with `gᵢ = ∂η(θ, xᵢ)/∂θ`, or `None` when singular.
pub fn gradient_information_trace(params: MmParams, xs: &[f64]) -> Option<f64> {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for &x in xs {
        let g = mm_eta_grad(params, x);
        a += g[0] * g[0];
        b += g[0] * g[1];
        c += g[1] * g[1];
    }
    let det = a * c - b * b;
    // Relative threshold: collinear gradients leave only rounding noise.
    if !(det > 1e-12 * a * c) {
        return None;
    }
    Some((a + c) / det)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MmObjective {
    ExternalSquaredError,
    ExternalTraceVariance,
    InternalSquaredError,
}

impl MmObjective {
    pub fn name(self) -> &'static str {
        match self {
            MmObjective::ExternalSquaredError => "ext-SE",
            MmObjective::ExternalTraceVariance => "ext-TV",
            MmObjective::InternalSquaredError => "int-SE",
        }
    }
}

/// Nested Monte Carlo estimate of one of the Michaelis–Menten objectives.
pub fn mm_objectives<E: Executor + ?Sized>(
    kind: MmObjective,
    fitted: &MmFittedModel,
    designer: &GpDiscrepancyDesigner,
    design: &Design,
    sizes: McSizes,
    stream: RandomStream,
    exec: &E,
) -> Result<ExpectedLossEstimate> {
    let pair = ModelPair::new(fitted, designer, Compatibility::Compatible);
    match kind {
        MmObjective::ExternalSquaredError => {
            mc_external_loss(pair, LossSpec::new(LossKind::SquaredError), design, sizes, stream, exec)
        }
        MmObjective::ExternalTraceVariance => {
            mc_external_loss(pair, LossSpec::new(LossKind::TraceVariance), design, sizes, stream, exec)
        }
        MmObjective::InternalSquaredError => {
            mc_internal_loss(pair, LossSpec::new(LossKind::SquaredError), design, sizes, stream, exec)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MmAsymptotic {
    /// External trace variance: designer prior, scale `σ₀²(1 + ρ₀)`.
    External,
    /// Internal squared error: fitted prior, scale `E(σ² | F)`.
    Internal,
}

/// Large-sample objective `E_θ[s · tr((Σᵢ gᵢgᵢᵀ)⁻¹)]`; `+∞` when the
/// gradient outer-product sum is singular for any sampled `θ`.
pub fn mm_asymptotic<E: Executor + ?Sized>(
    kind: MmAsymptotic,
    fitted: &MmFittedModel,
    designer: &GpDiscrepancyDesigner,
    design: &Design,
    outer: usize,
    stream: RandomStream,
    exec: &E,
) -> Result<f64> {
    let xs = unit_settings(design)?;
    let (prior, scale, l) = match kind {
        MmAsymptotic::External => (&designer.theta, designer.variance_inflation()?, designer.l),
        MmAsymptotic::Internal => {
            let s = fitted.sigma2.mean().ok_or(Error::DomainError("σ² prior has no mean".into()))?;
            (&fitted.theta, s, fitted.l)
        }
    };
    for d in prior.iter() {
        d.validate()?;
    }
    let values: Vec<Option<f64>> = exec.map_collect(outer, |b| {
        let mut rng = stream.substream(b as u64).rng();
        let p = MmParams { theta1: prior[0].draw(&mut rng), theta2: prior[1].draw(&mut rng), l };
        gradient_information_trace(p, &xs)
    });
    let mut total = 0.0;
    for v in values {
        match v {
            Some(t) => total += scale * t,
            None => return Ok(f64::INFINITY),
        }
    }
    Ok(total / outer.max(1) as f64)
}

/// Designer parameters with `ρ` fixed, for building reduced designer models.
pub fn without_discrepancy(designer: &GpDiscrepancyDesigner) -> GpDiscrepancyDesigner {
    GpDiscrepancyDesigner { rho: Distribution::Fixed(0.0), ..designer.clone() }
}
