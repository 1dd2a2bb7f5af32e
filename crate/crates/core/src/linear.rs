//! Conjugate normal-inverse-gamma linear model, the full-treatment designer
//! model and the closed-form design objectives built from them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::design::{Design, EfficiencyScale, GaussianMeanBatch, LossKind, Model, ParamDims, ParamDraws};
use crate::numeric::dist::Distribution;
use crate::numeric::matrix::{cholesky_logdet, Matrix, SpdFactor};
use crate::numeric::rng::StreamRng;
use crate::numeric::special::f_quantile;
use crate::{Error, Result};

/// Default tolerance (max-norm) for treating two runs as the same treatment.
pub const DUPLICATE_TOL: f64 = 1e-9;

/// Polynomial model terms used to build `X` from a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelTerms {
    /// Intercept and main effects.
    FirstOrder,
    /// Intercept, main effects, pure quadratics and two-factor interactions.
    SecondOrder,
}

impl ModelTerms {
    /// Number of columns for `k` variables.
    pub fn p(self, k: usize) -> usize {
        match self {
            ModelTerms::FirstOrder => 1 + k,
            ModelTerms::SecondOrder => 1 + 2 * k + k * (k - 1) / 2,
        }
    }

    pub fn expand(self, x: &[f64], out: &mut Vec<f64>) {
        out.push(1.0);
        out.extend_from_slice(x);
        if self == ModelTerms::SecondOrder {
            out.extend(x.iter().map(|v| v * v));
            for i in 0..x.len() {
                for j in i + 1..x.len() {
                    out.push(x[i] * x[j]);
                }
            }
        }
    }

    pub fn model_matrix(self, design: &Design) -> Matrix {
        let p = self.p(design.k());
        let mut data = Vec::with_capacity(design.n() * p);
        for i in 0..design.n() {
            self.expand(design.run(i), &mut data);
        }
        Matrix::from_row_major(design.n(), p, data).expect("term count matches")
    }
}

/// Normal-inverse-gamma prior: `γ | σ² ~ N(μ, σ²V)`, `σ² ~ IG(a/2, b/2)`.
///
/// `v = None` encodes the noninformative limit `V⁻¹ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NigPrior {
    pub mu: Vec<f64>,
    pub v: Option<Matrix>,
    pub a: f64,
    pub b: f64,
}

impl NigPrior {
    pub fn informative(mu: Vec<f64>, v: Matrix, a: f64, b: f64) -> Result<NigPrior> {
        if v.rows() != mu.len() || v.cols() != mu.len() {
            return Err(Error::DimensionMismatch { expected: mu.len(), found: v.rows() });
        }
        cholesky_logdet(&v)?;
        check_ab(a, b)?;
        Ok(NigPrior { mu, v: Some(v), a, b })
    }

    pub fn noninformative(p: usize, a: f64, b: f64) -> Result<NigPrior> {
        if !(a >= 0.0 && b >= 0.0) {
            return Err(Error::DomainError(format!("prior degrees a = {a}, b = {b} must be nonnegative")));
        }
        Ok(NigPrior { mu: vec![0.0; p], v: None, a, b })
    }

    pub fn p(&self) -> usize {
        self.mu.len()
    }

    pub fn is_noninformative(&self) -> bool {
        self.v.is_none()
    }
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::DomainError(format!("prior degrees a = {a}, b = {b} must be positive")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NigPosterior {
    pub mu_hat: Vec<f64>,
    pub v_hat: Matrix,
    pub a_hat: f64,
    pub b_hat: f64,
}

/// Conjugate update of a normal-inverse-gamma prior.
pub fn nig_posterior(x: &Matrix, y: &[f64], prior: &NigPrior) -> Result<NigPosterior> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if prior.p() != p {
        return Err(Error::DimensionMismatch { expected: p, found: prior.p() });
    }
    let mut precision = x.gram();
    let mut rhs = x.tr_vec(y)?;
    if let Some(v) = &prior.v {
        let vf = cholesky_logdet(v)?;
        let v_inv = vf.inverse();
        precision = precision.add(&v_inv)?;
        let shift = v_inv.mat_vec(&prior.mu)?;
        rhs.iter_mut().zip(shift).for_each(|(r, s)| *r += s);
    }
    let pf = strict_factor(&precision)?;
    let mu_hat = pf.solve(&rhs)?;
    let v_hat = pf.inverse();
    let sf_inv = sigma_f_inverse(x, prior)?;
    let resid: Vec<f64> = {
        let xm = x.mat_vec(&prior.mu)?;
        y.iter().zip(xm).map(|(a, b)| a - b).collect()
    };
    let b_hat = prior.b + sf_inv.quad_form(&resid)?;
    Ok(NigPosterior { mu_hat, v_hat, a_hat: prior.a + n as f64, b_hat })
}

/// Cholesky that treats a jitter-rescued factor as singular.
fn strict_factor(a: &Matrix) -> Result<SpdFactor> {
    let f = cholesky_logdet(a)?;
    if f.jittered() {
        return Err(Error::SingularInformation);
    }
    Ok(f)
}

/// `Σ_F⁻¹` with `Σ_F = I + XVXᵀ`; `I − H_X` in the noninformative limit.
pub fn sigma_f_inverse(x: &Matrix, prior: &NigPrior) -> Result<Matrix> {
    let n = x.rows();
    match &prior.v {
        Some(v) => {
            let mut s = x.matmul(v)?.matmul(&x.transpose())?;
            s.add_diag(1.0);
            Ok(cholesky_logdet(&s.symmetrize())?.inverse())
        }
        None => {
            let h = hat_matrix(x)?;
            Ok(Matrix::identity(n).sub(&h)?)
        }
    }
}

/// `H_X = X(XᵀX)⁻¹Xᵀ`.
pub fn hat_matrix(x: &Matrix) -> Result<Matrix> {
    let f = strict_factor(&x.gram())?;
    let sol = f.solve_matrix(&x.transpose())?;
    Ok(x.matmul(&sol)?.symmetrize())
}

/// `V̂_F` for a design, which does not depend on the responses.
pub fn posterior_scale_matrix(x: &Matrix, prior: &NigPrior) -> Result<SpdFactor> {
    let mut precision = x.gram();
    if let Some(v) = &prior.v {
        precision = precision.add(&cholesky_logdet(v)?.inverse())?;
    }
    strict_factor(&precision)
}

/// Run-to-treatment map of a design.
#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentStructure {
    /// `n × q` indicator matrix.
    pub z: Matrix,
    pub q: usize,
    /// Pure-error degrees of freedom `n − q`.
    pub d: usize,
    pub replications: Vec<usize>,
    /// Treatment index of each run.
    pub labels: Vec<usize>,
}

/// Groups runs that agree within `tol` in every coordinate.
///
/// Each run joins the first earlier treatment whose representative is within
/// `tol`, so labels follow first appearance.
pub fn treatment_structure(design: &Design, tol: f64) -> TreatmentStructure {
    let n = design.n();
    let mut reps: Vec<usize> = Vec::new();
    let mut labels = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::new();
    for i in 0..n {
        let row = design.run(i);
        let found = reps.iter().position(|&r| {
            design.run(r).iter().zip(row).all(|(a, b)| (a - b).abs() <= tol)
        });
        match found {
            Some(l) => {
                labels.push(l);
                counts[l] += 1;
            }
            None => {
                labels.push(reps.len());
                reps.push(i);
                counts.push(1);
            }
        }
    }
    let q = reps.len();
    let mut z = Matrix::zeros(n, q);
    for (i, &l) in labels.iter().enumerate() {
        z[(i, l)] = 1.0;
    }
    TreatmentStructure { z, q, d: n - q, replications: counts, labels }
}

/// First two moments of the responses under a designer model.
pub trait MomentDesigner {
    fn moments(&self, design: &Design) -> Result<(Vec<f64>, Matrix)>;
}

/// Fitted model `y ~ N(Xγ, σ²I)` with a normal-inverse-gamma prior.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFittedModel {
    pub terms: ModelTerms,
    pub prior: NigPrior,
}

impl LinearFittedModel {
    pub fn new(terms: ModelTerms, prior: NigPrior) -> LinearFittedModel {
        LinearFittedModel { terms, prior }
    }

    fn model_matrix(&self, design: &Design) -> Result<Matrix> {
        let x = self.terms.model_matrix(design);
        if x.cols() != self.prior.p() {
            return Err(Error::DimensionMismatch { expected: self.prior.p(), found: x.cols() });
        }
        Ok(x)
    }

    /// The fitted model's own marginal response moments `(Xμ, b Σ_F/(a − 2))`.
    pub fn marginal_moments(&self, design: &Design) -> Result<(Vec<f64>, Matrix)> {
        let v = self.prior.v.as_ref().ok_or(Error::DomainError(
            "marginal moments need an informative prior".into(),
        ))?;
        if !(self.prior.a > 2.0) {
            return Err(Error::DegreesOfFreedomError { dof: self.prior.a });
        }
        let x = self.model_matrix(design)?;
        let mut s = x.matmul(v)?.matmul(&x.transpose())?;
        s.add_diag(1.0);
        Ok((x.mat_vec(&self.prior.mu)?, s.symmetrize().scale(self.prior.b / (self.prior.a - 2.0))))
    }
}

impl MomentDesigner for LinearFittedModel {
    fn moments(&self, design: &Design) -> Result<(Vec<f64>, Matrix)> {
        self.marginal_moments(design)
    }
}

#[derive(Debug, Clone)]
pub struct LinearSetup {
    pub x: Matrix,
    v_factor: Option<SpdFactor>,
}

impl Model for LinearFittedModel {
    type Setup = LinearSetup;
    type Batch = GaussianMeanBatch;

    fn dims(&self, _setup: &LinearSetup) -> ParamDims {
        ParamDims { interest: self.prior.p(), nuisance: 1 }
    }

    fn setup(&self, design: &Design) -> Result<LinearSetup> {
        let x = self.model_matrix(design)?;
        let v_factor = self.prior.v.as_ref().map(cholesky_logdet).transpose()?;
        Ok(LinearSetup { x, v_factor })
    }

    fn n_obs(&self, setup: &LinearSetup) -> usize {
        setup.x.rows()
    }

    fn sample_prior(&self, setup: &LinearSetup, rng: &mut StreamRng, params: &mut [f64]) -> Result<()> {
        let vf = setup.v_factor.as_ref().ok_or(Error::UnsupportedLossForModel(
            "sampling needs an informative prior",
        ))?;
        check_ab(self.prior.a, self.prior.b)?;
        let p = self.prior.p();
        let s2 = Distribution::InverseGamma { a: self.prior.a, b: self.prior.b }.draw(rng);
        let z: Vec<f64> = (0..p).map(|_| Distribution::Normal { mean: 0.0, var: 1.0 }.draw(rng)).collect();
        vf.mul_lower(&z, &mut params[..p]);
        let s = s2.sqrt();
        for (g, m) in params[..p].iter_mut().zip(&self.prior.mu) {
            *g = m + s * *g;
        }
        params[p] = s2;
        Ok(())
    }

    fn sample_response(&self, setup: &LinearSetup, params: &[f64], rng: &mut StreamRng, y: &mut [f64]) -> Result<()> {
        let p = self.prior.p();
        let mean = setup.x.mat_vec(&params[..p])?;
        for (yi, m) in y.iter_mut().zip(mean) {
            *yi = Distribution::Normal { mean: m, var: params[p] }.draw(rng);
        }
        Ok(())
    }

    fn log_likelihood(&self, setup: &LinearSetup, params: &[f64], y: &[f64]) -> f64 {
        let p = self.prior.p();
        let s2 = params[p];
        let mean = setup.x.mat_vec(&params[..p]).expect("dimension");
        let ss: f64 = y.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
        let n = y.len() as f64;
        -0.5 * n * (core::f64::consts::TAU.ln() + s2.ln()) - 0.5 * ss / s2
    }

    fn prepare_batch(&self, setup: &LinearSetup, draws: &ParamDraws) -> Result<GaussianMeanBatch> {
        let p = self.prior.p();
        let x = &setup.x;
        Ok(GaussianMeanBatch::build(
            x.rows(),
            draws.len(),
            |j, out| {
                let g = &draws.row(j)[..p];
                for (i, o) in out.iter_mut().enumerate() {
                    *o = x.row(i).iter().zip(g).map(|(a, b)| a * b).sum();
                }
            },
            |j| draws.row(j)[p],
        ))
    }

    fn batch_log_likelihood(
        &self,
        _setup: &LinearSetup,
        batch: &GaussianMeanBatch,
        _draws: &ParamDraws,
        y: &[f64],
        out: &mut [f64],
    ) {
        batch.log_likelihood(y, out);
    }
}

/// Designer model giving every unique treatment its own mean:
/// `y ~ N(Zτ, σ²I)`, `τ | σ² ~ N(μ_D 1_q, σ²κ(ZᵀZ)⁻¹)`, `σ² ~ IG(a/2, b/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullTreatmentDesigner {
    pub kappa: f64,
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub duplicate_tol: f64,
}

impl FullTreatmentDesigner {
    pub fn new(kappa: f64, a: f64, b: f64) -> Result<FullTreatmentDesigner> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::DomainError(format!("kappa must be positive, got {kappa}")));
        }
        check_ab(a, b)?;
        Ok(FullTreatmentDesigner { kappa, mu: 0.0, a, b, duplicate_tol: DUPLICATE_TOL })
    }

    fn sigma2_mean(&self) -> Result<f64> {
        if !(self.a > 2.0) {
            return Err(Error::DegreesOfFreedomError { dof: self.a });
        }
        Ok(self.b / (self.a - 2.0))
    }
}

impl MomentDesigner for FullTreatmentDesigner {
    /// `m_D = μ_D 1_n`, `Σ_D = b/(a − 2)·(I + κH_Z)`.
    fn moments(&self, design: &Design) -> Result<(Vec<f64>, Matrix)> {
        let s2 = self.sigma2_mean()?;
        let ts = treatment_structure(design, self.duplicate_tol);
        let n = design.n();
        let cov = Matrix::from_fn(n, n, |i, j| {
            let same = ts.labels[i] == ts.labels[j];
            let h = if same { 1.0 / ts.replications[ts.labels[i]] as f64 } else { 0.0 };
            s2 * ((i == j) as u8 as f64 + self.kappa * h)
        });
        Ok((vec![self.mu; n], cov))
    }
}

impl Model for FullTreatmentDesigner {
    type Setup = TreatmentStructure;
    type Batch = ();

    fn dims(&self, setup: &TreatmentStructure) -> ParamDims {
        ParamDims { interest: setup.q, nuisance: 1 }
    }

    fn setup(&self, design: &Design) -> Result<TreatmentStructure> {
        Ok(treatment_structure(design, self.duplicate_tol))
    }

    fn n_obs(&self, setup: &TreatmentStructure) -> usize {
        setup.labels.len()
    }

    fn sample_prior(&self, setup: &TreatmentStructure, rng: &mut StreamRng, params: &mut [f64]) -> Result<()> {
        let s2 = Distribution::InverseGamma { a: self.a, b: self.b }.draw(rng);
        // ZᵀZ is diagonal, so the treatment effects are independent.
        for (t, &r) in params[..setup.q].iter_mut().zip(&setup.replications) {
            *t = Distribution::Normal { mean: self.mu, var: s2 * self.kappa / r as f64 }.draw(rng);
        }
        params[setup.q] = s2;
        Ok(())
    }

    fn sample_response(
        &self,
        setup: &TreatmentStructure,
        params: &[f64],
        rng: &mut StreamRng,
        y: &mut [f64],
    ) -> Result<()> {
        let s2 = params[setup.q];
        for (yi, &l) in y.iter_mut().zip(&setup.labels) {
            *yi = Distribution::Normal { mean: params[l], var: s2 }.draw(rng);
        }
        Ok(())
    }

    fn log_likelihood(&self, setup: &TreatmentStructure, params: &[f64], y: &[f64]) -> f64 {
        let s2 = params[setup.q];
        let ss: f64 = y.iter().zip(&setup.labels).map(|(v, &l)| (v - params[l]).powi(2)).sum();
        -0.5 * y.len() as f64 * (core::f64::consts::TAU.ln() + s2.ln()) - 0.5 * ss / s2
    }
}

/// `E_D(b̂_F) = b_F + ‖m_D − Xμ_F‖²_{Σ_F⁻¹} + tr(Σ_D Σ_F⁻¹)`.
pub fn expected_bhat(x: &Matrix, prior: &NigPrior, m_d: &[f64], sigma_d: &Matrix) -> Result<f64> {
    let sf_inv = sigma_f_inverse(x, prior)?;
    let xm = x.mat_vec(&prior.mu)?;
    let r: Vec<f64> = m_d.iter().zip(xm).map(|(a, b)| a - b).collect();
    let quad = sf_inv.quad_form(&r)?;
    let n = x.rows();
    let mut tr = 0.0;
    for i in 0..n {
        for j in 0..n {
            tr += sigma_d[(i, j)] * sf_inv[(j, i)];
        }
    }
    Ok(prior.b + quad + tr)
}

fn closed_loss_kind(kind: LossKind) -> Result<bool> {
    match kind {
        LossKind::SquaredError => Ok(true),
        LossKind::SelfInformation => Ok(false),
        _ => Err(Error::UnsupportedLossForModel("closed forms exist for self-information and squared error")),
    }
}

/// External expected loss under designer moments, with design-independent
/// constants dropped from the self-information form.
///
/// Squared error: `E_D(b̂)/(â − 2)·tr V̂`. Self-information uses the delta
/// approximation `½log|V̂| + (p/2)·log E_D(b̂)`.
pub fn external_loss_closed(
    kind: LossKind,
    design: &Design,
    fitted: &LinearFittedModel,
    designer: &dyn MomentDesigner,
) -> Result<f64> {
    let se = closed_loss_kind(kind)?;
    let x = fitted.model_matrix(design)?;
    let (m_d, sigma_d) = designer.moments(design)?;
    let e_b = expected_bhat(&x, &fitted.prior, &m_d, &sigma_d)?;
    let vf = posterior_scale_matrix(&x, &fitted.prior)?;
    if se {
        let a_hat = fitted.prior.a + design.n() as f64;
        if !(a_hat > 2.0) {
            return Err(Error::DegreesOfFreedomError { dof: a_hat });
        }
        Ok(e_b / (a_hat - 2.0) * vf.trace_inverse())
    } else {
        let p = x.cols() as f64;
        Ok(-0.5 * vf.log_det() + 0.5 * p * e_b.ln())
    }
}

/// Internal expected loss: `b/(a − 2)·tr V̂` or `½log|V̂|` (constant dropped).
pub fn internal_loss_closed(kind: LossKind, design: &Design, fitted: &LinearFittedModel) -> Result<f64> {
    let se = closed_loss_kind(kind)?;
    let x = fitted.model_matrix(design)?;
    let vf = posterior_scale_matrix(&x, &fitted.prior)?;
    if se {
        if !(fitted.prior.a > 2.0) {
            return Err(Error::DegreesOfFreedomError { dof: fitted.prior.a });
        }
        Ok(fitted.prior.b / (fitted.prior.a - 2.0) * vf.trace_inverse())
    } else {
        Ok(-0.5 * vf.log_det())
    }
}

/// `b_D/(a_D − 2)·[(1 + κ)(n − p) − κd]` for a noninformative fitted prior.
pub fn expected_bhat_fulltreatment(design: &Design, kappa: f64, b_d: f64, a_d: f64, p: usize) -> Result<f64> {
    if !(a_d > 2.0) {
        return Err(Error::DegreesOfFreedomError { dof: a_d });
    }
    let d = treatment_structure(design, DUPLICATE_TOL).d as f64;
    let n = design.n() as f64;
    Ok(b_d / (a_d - 2.0) * ((1.0 + kappa) * (n - p as f64) - kappa * d))
}

/// Design criteria for the linear model under a full-treatment designer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearObjective {
    /// External self-information under noninformative priors.
    DE,
    /// External squared error under noninformative priors.
    AE,
    D,
    A,
    /// D-criterion scaled by an F quantile on the pure-error degrees of freedom.
    DP { alpha: f64 },
    /// A-criterion scaled by an F quantile on the pure-error degrees of freedom.
    AP { alpha: f64 },
}

impl LinearObjective {
    /// Scale on which efficiencies are reported for this criterion.
    pub fn efficiency_scale(self, p: usize) -> EfficiencyScale {
        match self {
            LinearObjective::DE | LinearObjective::D | LinearObjective::DP { .. } => {
                EfficiencyScale::Log { p: p as f64 }
            }
            _ => EfficiencyScale::Ratio,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LinearObjective::DE => "DE",
            LinearObjective::AE => "AE",
            LinearObjective::D => "D",
            LinearObjective::A => "A",
            LinearObjective::DP { .. } => "DP",
            LinearObjective::AP { .. } => "AP",
        }
    }
}

/// Objective value of a design; `+∞` marks an inadmissible design.
pub fn objective(kind: LinearObjective, design: &Design, terms: ModelTerms, kappa: f64) -> f64 {
    objective_checked(kind, design, terms, kappa).unwrap_or(f64::INFINITY)
}

fn objective_checked(kind: LinearObjective, design: &Design, terms: ModelTerms, kappa: f64) -> Result<f64> {
    let x = terms.model_matrix(design);
    let (n, p) = (x.rows(), x.cols());
    if n < p {
        return Err(Error::SingularInformation);
    }
    let f = strict_factor(&x.gram())?;
    let log_det = f.log_det();
    let d = treatment_structure(design, DUPLICATE_TOL).d;
    let bracket = || {
        let v = (1.0 + kappa) * (n - p) as f64 - kappa * d as f64;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::DomainError("nonpositive replication bracket".into()))
        }
    };
    let pure_error = || if d >= 1 { Ok(d as f64) } else { Err(Error::DegreesOfFreedomError { dof: 0.0 }) };
    let value = match kind {
        LinearObjective::DE => p as f64 * bracket()?.ln() - log_det,
        LinearObjective::AE => bracket()? * f.trace_inverse(),
        LinearObjective::D => -log_det,
        LinearObjective::A => f.trace_inverse(),
        LinearObjective::DP { alpha } => p as f64 * f_quantile(p as f64, pure_error()?, 1.0 - alpha)?.ln() - log_det,
        LinearObjective::AP { alpha } => f_quantile(1.0, pure_error()?, 1.0 - alpha)? * f.trace_inverse(),
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteValue("objective".into()))
    }
}
