//! Model-averaged cubic B-spline regression with an unknown number of basis
//! functions, and the predictive squared-error loss.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::design::{summarize, Design, ExpectedLossEstimate};
use crate::mm::{mm_eta, MmParams, DEFAULT_L};
use crate::numeric::dist::Distribution;
use crate::numeric::exec::Executor;
use crate::numeric::matrix::{cholesky_logdet, dot, Matrix, SpdFactor};
use crate::numeric::quadrature::QuadratureRule;
use crate::numeric::rng::RandomStream;
use crate::{Error, Result};

/// Smallest basis count for cubic splines.
pub const MIN_BASIS: usize = 4;

/// Clamped cubic B-spline basis with `m − 4` equally spaced interior knots on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    m: usize,
    knots: Vec<f64>,
}

impl SplineBasis {
    pub fn new(m: usize) -> Result<SplineBasis> {
        if m < MIN_BASIS {
            return Err(Error::DomainError(alloc::format!("cubic splines need m >= 4, got {m}")));
        }
        let interior = m - 4;
        let mut knots = vec![0.0; 4];
        for i in 1..=interior {
            knots.push(i as f64 / (interior + 1) as f64);
        }
        knots.extend_from_slice(&[1.0; 4]);
        Ok(SplineBasis { m, knots })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Writes all `m` basis values at `x` into `out`.
    pub fn eval(&self, x: f64, out: &mut [f64]) -> Result<()> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::DomainError(alloc::format!("spline argument {x} outside [0, 1]")));
        }
        let t = &self.knots;
        // Knot span with t[s] <= x < t[s+1]; x = 1 belongs to the last span.
        let mut s = 3;
        while s + 1 < self.m && x >= t[s + 1] {
            s += 1;
        }
        // de Boor's triangular scheme for the four nonzero functions.
        let mut nvals = [0.0f64; 4];
        let mut left = [0.0f64; 4];
        let mut right = [0.0f64; 4];
        nvals[0] = 1.0;
        for j in 1..4 {
            left[j] = x - t[s + 1 - j];
            right[j] = t[s + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { nvals[r] / denom };
                nvals[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            nvals[j] = saved;
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for (r, v) in nvals.iter().enumerate() {
            out[s - 3 + r] = *v;
        }
        Ok(())
    }
}

/// `G_m`: basis values at the design points (one row per run).
pub fn basis_matrix(design: &Design, m: usize) -> Result<Matrix> {
    if design.k() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: design.k() });
    }
    let basis = SplineBasis::new(m)?;
    let n = design.n();
    let mut g = Matrix::zeros(n, m);
    for i in 0..n {
        basis.eval(design.get(i, 0), g.row_mut(i))?;
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplinePrior {
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for SplinePrior {
    fn default() -> Self {
        SplinePrior { kappa: 1e6, a: 6.0, b: 4.0 }
    }
}

/// Per-`m` quantities that depend on the design only.
#[derive(Debug, Clone)]
struct SplineComponent {
    m: usize,
    r_factor: SpdFactor,
    /// Maps `y` to posterior-mean coefficients: `(κ⁻¹I + GᵀG)⁻¹Gᵀ`.
    coef_map: Matrix,
    /// Maps `y` to the posterior mean at the quadrature nodes.
    node_map: Matrix,
}

/// Design-dependent cache for the model-averaged spline posterior.
#[derive(Debug, Clone)]
pub struct SplineFit {
    prior: SplinePrior,
    n: usize,
    components: Vec<SplineComponent>,
    rule: QuadratureRule,
    /// Basis values at quadrature nodes, per component.
    node_basis: Vec<Matrix>,
}

impl SplineFit {
    /// Prepares every model `m ∈ {4, …, n}` for `design`.
    pub fn new(design: &Design, prior: &SplinePrior, rule: &QuadratureRule) -> Result<SplineFit> {
        let n = design.n();
        if n < MIN_BASIS {
            return Err(Error::InvalidDesign(alloc::format!("spline models need n >= 4, got {n}")));
        }
        if !(prior.kappa > 0.0 && prior.a > 0.0 && prior.b > 0.0) {
            return Err(Error::DomainError("spline prior parameters must be positive".into()));
        }
        Self::with_models(design, prior, rule, MIN_BASIS..=n)
    }

    /// Restricts the model set, which amounts to a prior putting all mass on `ms`.
    pub fn with_models(
        design: &Design,
        prior: &SplinePrior,
        rule: &QuadratureRule,
        ms: impl IntoIterator<Item = usize>,
    ) -> Result<SplineFit> {
        let n = design.n();
        let mut components = Vec::new();
        let mut node_basis = Vec::new();
        for m in ms {
            if m < MIN_BASIS || m > n {
                return Err(Error::DomainError(alloc::format!("basis count {m} outside [4, {n}]")));
            }
            let g = basis_matrix(design, m)?;
            let mut r = g.matmul(&g.transpose())?.scale(prior.kappa);
            r.add_diag(1.0);
            let r_factor = cholesky_logdet(&r.symmetrize())?;
            let mut ridge = g.gram();
            ridge.add_diag(1.0 / prior.kappa);
            let coef_map = cholesky_logdet(&ridge)?.solve_matrix(&g.transpose())?;
            let basis = SplineBasis::new(m)?;
            let mut nb = Matrix::zeros(rule.len(), m);
            for (q, &x) in rule.nodes().iter().enumerate() {
                basis.eval(x, nb.row_mut(q))?;
            }
            let node_map = nb.matmul(&coef_map)?;
            components.push(SplineComponent { m, r_factor, coef_map, node_map });
            node_basis.push(nb);
        }
        if components.is_empty() {
            return Err(Error::DomainError("empty model set".into()));
        }
        Ok(SplineFit { prior: prior.clone(), n, components, rule: rule.clone(), node_basis })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn models(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.m).collect()
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// `π(m | y)` over [`Self::models`], normalised in log space.
    pub fn model_posterior(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("responses".into()));
        }
        let expo = 0.5 * (self.prior.a + self.n as f64);
        let mut logs = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let quad = c.r_factor.inv_quad_form(y)?;
            logs.push(-0.5 * c.r_factor.log_det() - expo * (self.prior.b + quad).ln());
        }
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(probs)
    }

    /// Posterior-mean coefficients of each model.
    pub fn coefficients(&self, y: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.components.iter().map(|c| c.coef_map.mat_vec(y)).collect()
    }

    /// Model-averaged posterior mean at the quadrature nodes using `probs`.
    pub fn mean_at_nodes_with(&self, y: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.rule.len()];
        for (c, &p) in self.components.iter().zip(probs) {
            let v = c.node_map.mat_vec(y)?;
            out.iter_mut().zip(v).for_each(|(o, v)| *o += p * v);
        }
        Ok(out)
    }

    pub fn mean_at_nodes(&self, y: &[f64]) -> Result<Vec<f64>> {
        let probs = self.model_posterior(y)?;
        self.mean_at_nodes_with(y, &probs)
    }

    /// Model-averaged posterior mean of `μ(x)`.
    pub fn model_averaged_mean(&self, x: f64, y: &[f64]) -> Result<f64> {
        let probs = self.model_posterior(y)?;
        self.model_averaged_mean_with(x, y, &probs)
    }

    /// As [`Self::model_averaged_mean`] with the model probabilities held fixed.
    pub fn model_averaged_mean_with(&self, x: f64, y: &[f64], probs: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (c, &p) in self.components.iter().zip(probs) {
            let basis = SplineBasis::new(c.m)?;
            let mut g = vec![0.0; c.m];
            basis.eval(x, &mut g)?;
            total += p * dot(&g, &c.coef_map.mat_vec(y)?);
        }
        Ok(total)
    }

    /// `∫(μ(x) − E[μ(x) | y])² dx` with the truth given at the quadrature nodes.
    pub fn predictive_se_at_nodes(&self, y: &[f64], truth_at_nodes: &[f64]) -> Result<f64> {
        let mean = self.mean_at_nodes(y)?;
        let total: f64 = self
            .rule
            .weights()
            .iter()
            .zip(truth_at_nodes.iter().zip(mean))
            .map(|(w, (t, m))| w * (t - m) * (t - m))
            .sum();
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::NonFiniteValue("predictive squared error".into()))
        }
    }

    /// Predictive squared-error loss against a true mean function.
    pub fn predictive_se_loss(&self, y: &[f64], true_mu: impl Fn(f64) -> f64) -> Result<f64> {
        let truth: Vec<f64> = self.rule.nodes().iter().map(|&x| true_mu(x)).collect();
        self.predictive_se_at_nodes(y, &truth)
    }
}

/// Michaelis–Menten curve with normal noise, used as the designer model.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineDesigner {
    pub xi: [Distribution; 2],
    /// `IG(a/2, b/2)` noise variance.
    pub sigma2: Distribution,
    pub l: f64,
}

impl Default for SplineDesigner {
    fn default() -> Self {
        let u = Distribution::Uniform { lo: 20.0, hi: 200.0 };
        SplineDesigner { xi: [u.clone(), u], sigma2: Distribution::InverseGamma { a: 6.0, b: 4.0 }, l: DEFAULT_L }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Internal,
    External,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Internal => "int-PSE",
            Frame::External => "ext-PSE",
        }
    }
}

/// Monte Carlo expected predictive squared-error loss.
///
/// Sample `b` uses `stream.substream(b)`. Internally `(m, σ², γ)` are drawn
/// from the fitted prior and the truth is the drawn spline; externally the
/// truth is a Michaelis–Menten curve from the designer prior.
pub fn pse_expected_loss<E: Executor + ?Sized>(
    frame: Frame,
    design: &Design,
    prior: &SplinePrior,
    designer: &SplineDesigner,
    rule: &QuadratureRule,
    outer: usize,
    stream: RandomStream,
    exec: &E,
) -> Result<ExpectedLossEstimate> {
    let fit = SplineFit::new(design, prior, rule)?;
    pse_expected_loss_with(frame, &fit, design, designer, outer, stream, exec)
}

/// As [`pse_expected_loss`] with a prepared fit.
pub fn pse_expected_loss_with<E: Executor + ?Sized>(
    frame: Frame,
    fit: &SplineFit,
    design: &Design,
    designer: &SplineDesigner,
    outer: usize,
    stream: RandomStream,
    exec: &E,
) -> Result<ExpectedLossEstimate> {
    let xs = design.column(0);
    let n = xs.len();
    let models = fit.models();
    let fitted_sigma2 = Distribution::InverseGamma { a: fit.prior.a, b: fit.prior.b };
    fitted_sigma2.validate()?;
    designer.sigma2.validate()?;
    let basis_at_design: Vec<Matrix> = models.iter().map(|&m| basis_matrix(design, m)).collect::<Result<_>>()?;
    let losses: Vec<Result<f64>> = exec.map_collect(outer, |b| {
        let mut rng = stream.substream(b as u64).rng();
        let mut y = vec![0.0; n];
        let truth = match frame {
            Frame::Internal => {
                let idx = (Distribution::Uniform { lo: 0.0, hi: models.len() as f64 }.draw(&mut rng) as usize)
                    .min(models.len() - 1);
                let s2 = fitted_sigma2.draw(&mut rng);
                let sd = (s2 * fit.prior.kappa).sqrt();
                let gamma: Vec<f64> = (0..models[idx])
                    .map(|_| sd * Distribution::Normal { mean: 0.0, var: 1.0 }.draw(&mut rng))
                    .collect();
                let mean = basis_at_design[idx].mat_vec(&gamma)?;
                for (yi, m) in y.iter_mut().zip(mean) {
                    *yi = Distribution::Normal { mean: m, var: s2 }.draw(&mut rng);
                }
                fit.node_basis[idx].mat_vec(&gamma)?
            }
            Frame::External => {
                let p = MmParams { theta1: designer.xi[0].draw(&mut rng), theta2: designer.xi[1].draw(&mut rng), l: designer.l };
                let s2 = designer.sigma2.draw(&mut rng);
                for (yi, &x) in y.iter_mut().zip(&xs) {
                    *yi = Distribution::Normal { mean: mm_eta(p, x), var: s2 }.draw(&mut rng);
                }
                fit.rule.nodes().iter().map(|&x| mm_eta(p, x)).collect()
            }
        };
        fit.predictive_se_at_nodes(&y, &truth)
    });
    let losses: Vec<f64> = losses.into_iter().collect::<Result<_>>()?;
    summarize(&losses, 0, stream.root_seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cox–de Boor recursion with the 0/0 = 0 convention.
    fn cox_de_boor(t: &[f64], i: usize, k: usize, x: f64, m: usize) -> f64 {
        if k == 0 {
            let last = i == m - 1 && x == 1.0;
            return if (t[i] <= x && x < t[i + 1]) || (last && t[i] < t[i + 1]) { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = t[i + k] - t[i];
        if d1 > 0.0 {
            v += (x - t[i]) / d1 * cox_de_boor(t, i, k - 1, x, m);
        }
        let d2 = t[i + k + 1] - t[i + 1];
        if d2 > 0.0 {
            v += (t[i + k + 1] - x) / d2 * cox_de_boor(t, i + 1, k - 1, x, m);
        }
        v
    }

    #[test]
    fn matches_recursive_definition() {
        for m in 4..=9 {
            let basis = SplineBasis::new(m).unwrap();
            let mut out = vec![0.0; m];
            for step in 0..=50 {
                let x = step as f64 / 50.0;
                basis.eval(x, &mut out).unwrap();
                for j in 0..m {
                    let want = cox_de_boor(basis.knots(), j, 3, x, m);
                    assert!((out[j] - want).abs() < 1e-10, "m={m} j={j} x={x}: {} vs {want}", out[j]);
                }
                assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(out.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn bernstein_endpoint() {
        let basis = SplineBasis::new(4).unwrap();
        let mut out = vec![0.0; 4];
        basis.eval(0.0, &mut out).unwrap();
        assert_eq!(out, [1.0, 0.0, 0.0, 0.0]);
        basis.eval(1.0, &mut out).unwrap();
        assert_eq!(out, [0.0, 0.0, 0.0, 1.0]);
        basis.eval(0.5, &mut out).unwrap();
        assert!((out[1] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn rejects_outside_unit_interval() {
        let basis = SplineBasis::new(5).unwrap();
        assert!(basis.eval(1.5, &mut [0.0; 5]).is_err());
    }
}
