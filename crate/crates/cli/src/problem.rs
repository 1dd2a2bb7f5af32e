use altdesign_core::design::McSizes;
use altdesign_core::linear::{self, ModelTerms};
use altdesign_core::mm::{self, GpDiscrepancyDesigner, MmAsymptotic, MmFittedModel, MmObjective};
use altdesign_core::numeric::{Distribution, QuadratureRule};
use altdesign_core::optimizer::ObjectiveValue;
use altdesign_core::spline::{self, Frame, SplineDesigner, SplineFit, SplinePrior};
use altdesign_core::{Design, EfficiencyScale, Executor, RandomStream};

use crate::config::{ObjectiveName, ResolvedConfig, Scenario};

/// The models of one scenario, ready to evaluate any of its objectives.
pub enum Problem {
    Linear {
        terms: ModelTerms,
        kappa: f64,
        alpha: Option<f64>,
        p: usize,
    },
    MichaelisMenten {
        fitted: MmFittedModel,
        designer: GpDiscrepancyDesigner,
        sizes: McSizes,
    },
    Spline {
        prior: SplinePrior,
        designer: SplineDesigner,
        rule: QuadratureRule,
        outer: usize,
    },
}

impl Problem {
    pub fn new(cfg: &ResolvedConfig) -> Problem {
        match cfg.scenario {
            Scenario::LinearFulltreatment => {
                let l = cfg.linear.clone().unwrap_or_default();
                let terms = ModelTerms::from(l.terms);
                let kappa = l.kappa.expect("resolved configuration sets kappa");
                Problem::Linear { terms, kappa, alpha: l.alpha, p: terms.p(cfg.k) }
            }
            Scenario::MichaelisMenten => {
                let m = cfg.michaelis_menten.clone().unwrap_or_default();
                let u = Distribution::Uniform { lo: m.theta_prior.lo, hi: m.theta_prior.hi };
                let theta = [u.clone(), u];
                let fitted = MmFittedModel {
                    l: m.scale_l,
                    theta: theta.clone(),
                    sigma2: Distribution::Exponential { rate: m.sigma2_rate },
                };
                let designer = GpDiscrepancyDesigner {
                    l: m.scale_l,
                    theta,
                    sigma2: Distribution::Exponential { rate: m.designer_sigma2_rate },
                    rho: Distribution::Exponential { rate: m.designer_rho_rate },
                    alpha: Distribution::Exponential { rate: m.designer_alpha_rate },
                };
                let mc = cfg.mc.expect("resolved Monte Carlo sizes");
                Problem::MichaelisMenten { fitted, designer, sizes: McSizes { outer: mc.outer, inner: mc.inner } }
            }
            Scenario::CubicSpline => {
                let s = cfg.spline.clone().unwrap_or_default();
                let xi = Distribution::Uniform { lo: s.designer_xi_prior.lo, hi: s.designer_xi_prior.hi };
                Problem::Spline {
                    prior: SplinePrior { kappa: s.kappa, a: s.a, b: s.b },
                    designer: SplineDesigner {
                        xi: [xi.clone(), xi],
                        sigma2: Distribution::InverseGamma { a: s.designer_a, b: s.designer_b },
                        l: s.scale_l,
                    },
                    rule: QuadratureRule::gauss_legendre(s.quadrature_nodes),
                    outer: cfg.mc.expect("resolved Monte Carlo sizes").outer,
                }
            }
        }
    }

    pub fn scale(&self, objective: ObjectiveName) -> EfficiencyScale {
        match (self, objective) {
            (Problem::Linear { p, .. }, ObjectiveName::DE | ObjectiveName::D | ObjectiveName::DP) => {
                EfficiencyScale::Log { p: *p as f64 }
            }
            _ => EfficiencyScale::Ratio,
        }
    }

    /// Evaluates `objective`; `+∞` values mark inadmissible designs.
    pub fn evaluate<E: Executor + ?Sized>(
        &self,
        objective: ObjectiveName,
        design: &Design,
        stream: RandomStream,
        exec: &E,
    ) -> altdesign_core::Result<ObjectiveValue> {
        let estimate = |r: altdesign_core::Result<altdesign_core::ExpectedLossEstimate>| {
            r.map(|e| ObjectiveValue { value: e.value, se: e.mc_standard_error })
        };
        match self {
            Problem::Linear { terms, kappa, alpha, .. } => {
                let kind = objective.linear(*alpha).expect("objective validated against scenario");
                Ok(ObjectiveValue::exact(linear::objective(kind, design, *terms, *kappa)))
            }
            Problem::MichaelisMenten { fitted, designer, sizes } => {
                let nested = |kind| estimate(mm::mm_objectives(kind, fitted, designer, design, *sizes, stream, exec));
                let asym = |kind| {
                    mm::mm_asymptotic(kind, fitted, designer, design, sizes.outer, stream, exec).map(ObjectiveValue::exact)
                };
                match objective {
                    ObjectiveName::ExtSe => nested(MmObjective::ExternalSquaredError),
                    ObjectiveName::ExtTv => nested(MmObjective::ExternalTraceVariance),
                    ObjectiveName::IntSe => nested(MmObjective::InternalSquaredError),
                    ObjectiveName::ExtTvAsymptotic => asym(MmAsymptotic::External),
                    ObjectiveName::IntSeAsymptotic => asym(MmAsymptotic::Internal),
                    _ => unreachable!("objective validated against scenario"),
                }
            }
            Problem::Spline { prior, designer, rule, outer } => {
                let frame = match objective {
                    ObjectiveName::IntPse => Frame::Internal,
                    ObjectiveName::ExtPse => Frame::External,
                    _ => unreachable!("objective validated against scenario"),
                };
                let fit = SplineFit::new(design, prior, rule)?;
                estimate(spline::pse_expected_loss_with(frame, &fit, design, designer, *outer, stream, exec))
            }
        }
    }

    /// Search objective: evaluation failures count as inadmissible designs.
    pub fn search_value<E: Executor + ?Sized>(
        &self,
        objective: ObjectiveName,
        design: &Design,
        stream: RandomStream,
        exec: &E,
    ) -> ObjectiveValue {
        match self.evaluate(objective, design, stream, exec) {
            Ok(v) if !v.value.is_nan() => v,
            _ => ObjectiveValue::infeasible(),
        }
    }
}
