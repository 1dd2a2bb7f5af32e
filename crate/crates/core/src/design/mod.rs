//! Designs, loss functions and the generic nested Monte Carlo estimators.

mod mc;
mod model;
mod snis;
mod toy;

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::numeric::matrix::Matrix;
use crate::{Error, Result};

pub use mc::{mc_external_loss, mc_internal_loss, summarize, McSizes};
pub use model::{GaussianMeanBatch, Model, ModelPair, ParamDims, ParamDraws};
pub use snis::{snis_from_log_weights, snis_posterior_moments, SnisMoments};
pub use toy::ConjugateNormalMean;

/// An `n × k` matrix of treatment settings together with per-column bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    points: Matrix,
    bounds: Vec<(f64, f64)>,
}

impl Design {
    pub fn new(points: Matrix, bounds: Vec<(f64, f64)>) -> Result<Design> {
        if points.rows() == 0 || points.cols() == 0 {
            return Err(Error::InvalidDesign(
                "design needs at least one run and one variable".into(),
            ));
        }
        if bounds.len() != points.cols() {
            return Err(Error::DimensionMismatch {
                expected: points.cols(),
                found: bounds.len(),
            });
        }
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidDesign(format!(
                    "column {j} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        for i in 0..points.rows() {
            for (j, &(lo, hi)) in bounds.iter().enumerate() {
                let v = points[(i, j)];
                if !(v >= lo && v <= hi) {
                    return Err(Error::InvalidDesign(format!(
                        "entry ({i}, {j}) = {v} outside [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(Design { points, bounds })
    }

    /// Same bounds `[lo, hi]` for every column.
    pub fn with_uniform_bounds(points: Matrix, lo: f64, hi: f64) -> Result<Design> {
        let k = points.cols();
        Design::new(points, alloc::vec![(lo, hi); k])
    }

    /// One-variable design from a list of settings.
    pub fn from_column(xs: &[f64], lo: f64, hi: f64) -> Result<Design> {
        let m = Matrix::from_row_major(xs.len(), 1, xs.to_vec())?;
        Design::with_uniform_bounds(m, lo, hi)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.points.rows()
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.points.cols()
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.points[(i, j)]
    }

    pub fn run(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    /// Values of the single variable of a `k = 1` design.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.points.column(j)
    }

    /// Replaces one entry, checking it against the column bounds.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let (lo, hi) = self.bounds[j];
        if !(value >= lo && value <= hi) {
            return Err(Error::InvalidDesign(format!(
                "value {value} outside [{lo}, {hi}]"
            )));
        }
        self.points[(i, j)] = value;
        Ok(())
    }

    /// Copy with entry `(i, j)` replaced.
    pub fn with_entry(&self, i: usize, j: usize, value: f64) -> Result<Design> {
        let mut d = self.clone();
        d.set(i, j, value)?;
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    SelfInformation,
    SquaredError,
    Entropy,
    TraceVariance,
    PredictiveSquaredError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossRole {
    /// Depends on the unknown parameters as well as the data.
    Generator,
    /// A fitted-posterior expectation of a generator; depends on the data only.
    Composite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LossSpec {
    pub kind: LossKind,
    pub role: LossRole,
}

impl LossSpec {
    pub fn new(kind: LossKind) -> LossSpec {
        let role = match kind {
            LossKind::SelfInformation
            | LossKind::SquaredError
            | LossKind::PredictiveSquaredError => LossRole::Generator,
            LossKind::Entropy | LossKind::TraceVariance => LossRole::Composite,
        };
        LossSpec { kind, role }
    }

    /// The composite partner of a generator loss, if it has one.
    pub fn composite(self) -> Option<LossSpec> {
        match self.kind {
            LossKind::SelfInformation => Some(LossSpec::new(LossKind::Entropy)),
            LossKind::SquaredError => Some(LossSpec::new(LossKind::TraceVariance)),
            LossKind::Entropy | LossKind::TraceVariance => Some(self),
            LossKind::PredictiveSquaredError => None,
        }
    }
}

impl From<LossKind> for LossSpec {
    fn from(kind: LossKind) -> Self {
        LossSpec::new(kind)
    }
}

/// How the interest parameters of the fitted and designer models relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compatibility {
    /// No shared parameters.
    Disjoint,
    /// Every fitted interest parameter is a designer parameter.
    Compatible,
    /// Some but not all parameters shared.
    Partial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedLossEstimate {
    pub value: f64,
    pub mc_standard_error: f64,
    pub outer_samples: usize,
    pub inner_samples: usize,
    pub root_seed: u64,
    /// Set when the standard error could not be estimated (a single sample).
    pub degenerate: bool,
    /// Outer samples whose inner effective sample size fell below 1% of the inner size.
    pub low_ess_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EfficiencyScale {
    /// `100·exp{(reference − candidate)/p}` for log-determinant style losses.
    Log { p: f64 },
    /// `100·reference/candidate`.
    Ratio,
}

/// Efficiency of a candidate relative to a reference, in percent.
pub fn efficiency(reference_loss: f64, candidate_loss: f64, scale: EfficiencyScale) -> Result<f64> {
    if !reference_loss.is_finite() || !candidate_loss.is_finite() {
        return Err(Error::NonFiniteValue("efficiency inputs".into()));
    }
    match scale {
        EfficiencyScale::Log { p } => {
            if !(p >= 1.0) {
                return Err(Error::DomainError(format!(
                    "log-scale efficiency needs p >= 1, got {p}"
                )));
            }
            Ok(100.0 * ((reference_loss - candidate_loss) / p).exp())
        }
        EfficiencyScale::Ratio => {
            if !(candidate_loss > 0.0) {
                return Err(Error::DomainError(format!(
                    "ratio efficiency needs a positive candidate loss, got {candidate_loss}"
                )));
            }
            Ok(100.0 * reference_loss / candidate_loss)
        }
    }
}
