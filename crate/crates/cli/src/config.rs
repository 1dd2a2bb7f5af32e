use altdesign_core::linear::{LinearObjective, ModelTerms};
use altdesign_core::optimizer::ExchangeConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    LinearFulltreatment,
    MichaelisMenten,
    CubicSpline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Desk,
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Terms {
    FirstOrder,
    SecondOrder,
}

impl From<Terms> for ModelTerms {
    fn from(t: Terms) -> ModelTerms {
        match t {
            Terms::FirstOrder => ModelTerms::FirstOrder,
            Terms::SecondOrder => ModelTerms::SecondOrder,
        }
    }
}

/// Criteria understood by the CLI; which ones apply depends on the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveName {
    DE,
    AE,
    D,
    A,
    DP,
    AP,
    #[serde(rename = "ext-SE")]
    ExtSe,
    #[serde(rename = "ext-TV")]
    ExtTv,
    #[serde(rename = "int-SE")]
    IntSe,
    #[serde(rename = "ext-TV-asymptotic")]
    ExtTvAsymptotic,
    #[serde(rename = "int-SE-asymptotic")]
    IntSeAsymptotic,
    #[serde(rename = "int-PSE")]
    IntPse,
    #[serde(rename = "ext-PSE")]
    ExtPse,
}

impl ObjectiveName {
    pub fn label(self) -> &'static str {
        match self {
            ObjectiveName::DE => "DE",
            ObjectiveName::AE => "AE",
            ObjectiveName::D => "D",
            ObjectiveName::A => "A",
            ObjectiveName::DP => "DP",
            ObjectiveName::AP => "AP",
            ObjectiveName::ExtSe => "ext-SE",
            ObjectiveName::ExtTv => "ext-TV",
            ObjectiveName::IntSe => "int-SE",
            ObjectiveName::ExtTvAsymptotic => "ext-TV-asymptotic",
            ObjectiveName::IntSeAsymptotic => "int-SE-asymptotic",
            ObjectiveName::IntPse => "int-PSE",
            ObjectiveName::ExtPse => "ext-PSE",
        }
    }

    fn scenario(self) -> Scenario {
        use ObjectiveName::*;
        match self {
            DE | AE | D | A | DP | AP => Scenario::LinearFulltreatment,
            ExtSe | ExtTv | IntSe | ExtTvAsymptotic | IntSeAsymptotic => Scenario::MichaelisMenten,
            IntPse | ExtPse => Scenario::CubicSpline,
        }
    }

    /// The linear criterion, or `None` for other scenarios and for DP/AP without `alpha`.
    pub fn linear(self, alpha: Option<f64>) -> Option<LinearObjective> {
        Some(match self {
            ObjectiveName::DE => LinearObjective::DE,
            ObjectiveName::AE => LinearObjective::AE,
            ObjectiveName::D => LinearObjective::D,
            ObjectiveName::A => LinearObjective::A,
            ObjectiveName::DP => LinearObjective::DP { alpha: alpha? },
            ObjectiveName::AP => LinearObjective::AP { alpha: alpha? },
            _ => return None,
        })
    }

    fn needs_alpha(self) -> bool {
        matches!(self, ObjectiveName::DP | ObjectiveName::AP)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSettings {
    #[serde(default = "LinearSettings::default_terms")]
    pub terms: Terms,
    /// Treatment prior scale; resolves to `n` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Significance level of the DP/AP F quantiles; required by those objectives only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl LinearSettings {
    fn default_terms() -> Terms {
        Terms::SecondOrder
    }
}

impl Default for LinearSettings {
    fn default() -> Self {
        LinearSettings { terms: Self::default_terms(), kappa: None, alpha: None }
    }
}

/// `lo`/`hi` of a uniform prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformRange {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MichaelisMentenSettings {
    pub scale_l: f64,
    /// Fitted prior for both rate parameters.
    pub theta_prior: UniformRange,
    /// Rate of the exponential fitted prior on σ².
    pub sigma2_rate: f64,
    /// Rates of the exponential designer priors.
    pub designer_sigma2_rate: f64,
    pub designer_rho_rate: f64,
    pub designer_alpha_rate: f64,
}

impl Default for MichaelisMentenSettings {
    fn default() -> Self {
        MichaelisMentenSettings {
            scale_l: 400.0,
            theta_prior: UniformRange { lo: 20.0, hi: 200.0 },
            sigma2_rate: 1.0,
            designer_sigma2_rate: 1.0,
            designer_rho_rate: 1.0,
            designer_alpha_rate: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplineSettings {
    pub kappa: f64,
    pub a: f64,
    pub b: f64,
    pub designer_a: f64,
    pub designer_b: f64,
    pub designer_xi_prior: UniformRange,
    pub scale_l: f64,
    pub quadrature_nodes: usize,
}

impl Default for SplineSettings {
    fn default() -> Self {
        SplineSettings {
            kappa: 1e6,
            a: 6.0,
            b: 4.0,
            designer_a: 6.0,
            designer_b: 4.0,
            designer_xi_prior: UniformRange { lo: 20.0, hi: 200.0 },
            scale_l: 400.0,
            quadrature_nodes: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub outer: usize,
    pub inner: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSettings {
    pub grid_points_per_variable: usize,
    pub sweeps_max: usize,
    pub restarts: usize,
    pub improvement_tolerance: f64,
    pub se_fraction: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let c = ExchangeConfig::default();
        OptimizerSettings {
            grid_points_per_variable: c.grid_points_per_variable,
            sweeps_max: c.sweeps_max,
            restarts: c.restarts,
            improvement_tolerance: c.improvement_tolerance,
            se_fraction: c.se_fraction,
        }
    }
}

/// A scenario as read from JSON. Optional fields are filled by [`ScenarioConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub objectives: Option<Vec<ObjectiveName>>,
    #[serde(default)]
    pub linear: Option<LinearSettings>,
    #[serde(default)]
    pub michaelis_menten: Option<MichaelisMentenSettings>,
    #[serde(default)]
    pub spline: Option<SplineSettings>,
    #[serde(default)]
    pub mc: Option<McSettings>,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub root_seed: u64,
    #[serde(default = "default_scale")]
    pub scale: Scale,
}

fn default_scale() -> Scale {
    Scale::Desk
}

/// A validated configuration with every default materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub k: usize,
    pub objectives: Vec<ObjectiveName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub michaelis_menten: Option<MichaelisMentenSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spline: Option<SplineSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSettings>,
    pub optimizer: OptimizerSettings,
    pub root_seed: u64,
    pub scale: Scale,
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive and finite, got {v}")))
    }
}

fn range(path: &str, r: UniformRange) -> Result<(), CliError> {
    if r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi {
        Ok(())
    } else {
        Err(invalid(path, "requires finite lo < hi"))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<ScenarioConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn resolve(self) -> Result<ResolvedConfig, CliError> {
        let scenario = self.scenario;
        let k = match (scenario, self.k) {
            (Scenario::LinearFulltreatment, k) => k.unwrap_or(3),
            (_, None) | (_, Some(1)) => 1,
            (_, Some(k)) => return Err(invalid("k", format!("this scenario has one variable, got {k}"))),
        };
        let objectives = match self.objectives {
            Some(o) => o,
            None => match scenario {
                Scenario::LinearFulltreatment => vec![ObjectiveName::DE, ObjectiveName::AE, ObjectiveName::D, ObjectiveName::A],
                Scenario::MichaelisMenten => vec![ObjectiveName::ExtSe, ObjectiveName::ExtTv, ObjectiveName::IntSe],
                Scenario::CubicSpline => vec![ObjectiveName::IntPse, ObjectiveName::ExtPse],
            },
        };
        let is = |s| scenario == s;
        let cfg = ResolvedConfig {
            scenario,
            n: self.n,
            k,
            objectives,
            linear: is(Scenario::LinearFulltreatment).then(|| {
                let l = self.linear.clone().unwrap_or_default();
                LinearSettings { kappa: Some(l.kappa.unwrap_or(self.n as f64)), ..l }
            }),
            michaelis_menten: is(Scenario::MichaelisMenten).then(|| self.michaelis_menten.clone().unwrap_or_default()),
            spline: is(Scenario::CubicSpline).then(|| self.spline.clone().unwrap_or_default()),
            mc: match scenario {
                Scenario::LinearFulltreatment => None,
                Scenario::MichaelisMenten => Some(self.mc.unwrap_or(McSettings { outer: 2000, inner: 2000 })),
                Scenario::CubicSpline => Some(self.mc.unwrap_or(McSettings { outer: 500, inner: 0 })),
            },
            optimizer: self.optimizer,
            root_seed: self.root_seed,
            scale: self.scale,
        };
        for (name, present) in [
            ("linear", self.linear.is_some()),
            ("michaelis_menten", self.michaelis_menten.is_some()),
            ("spline", self.spline.is_some()),
        ] {
            let owner = match name {
                "linear" => Scenario::LinearFulltreatment,
                "michaelis_menten" => Scenario::MichaelisMenten,
                _ => Scenario::CubicSpline,
            };
            if present && owner != scenario {
                return Err(invalid(name, "section does not apply to this scenario"));
            }
        }
        if scenario == Scenario::LinearFulltreatment && self.mc.is_some() {
            return Err(invalid("mc", "closed-form scenario takes no Monte Carlo sizes"));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ResolvedConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        if self.objectives.is_empty() {
            return Err(invalid("objectives", "at least one objective is required"));
        }
        for (i, o) in self.objectives.iter().enumerate() {
            if o.scenario() != self.scenario {
                return Err(invalid(&format!("objectives[{i}]"), format!("{} does not apply to this scenario", o.label())));
            }
            if self.objectives[..i].contains(o) {
                return Err(invalid(&format!("objectives[{i}]"), "duplicate objective"));
            }
        }
        if let Some(l) = &self.linear {
            match l.kappa {
                Some(k) if k >= 0.0 && k.is_finite() => {}
                Some(_) => return Err(invalid("linear.kappa", "must be nonnegative")),
                None => return Err(invalid("linear.kappa", "missing from resolved configuration")),
            }
            match l.alpha {
                Some(a) if !(a > 0.0 && a < 1.0) => return Err(invalid("linear.alpha", "must lie in (0, 1)")),
                None if self.objectives.iter().any(|o| o.needs_alpha()) => {
                    return Err(invalid("linear.alpha", "required by the DP and AP objectives"))
                }
                _ => {}
            }
            let p = ModelTerms::from(l.terms).p(self.k);
            if self.n < p {
                return Err(invalid("n", format!("must be at least the parameter count {p}")));
            }
        }
        if let Some(m) = &self.michaelis_menten {
            positive("michaelis_menten.scale_l", m.scale_l)?;
            range("michaelis_menten.theta_prior", m.theta_prior)?;
            if m.theta_prior.lo <= 0.0 {
                return Err(invalid("michaelis_menten.theta_prior.lo", "must be positive"));
            }
            positive("michaelis_menten.sigma2_rate", m.sigma2_rate)?;
            positive("michaelis_menten.designer_sigma2_rate", m.designer_sigma2_rate)?;
            positive("michaelis_menten.designer_rho_rate", m.designer_rho_rate)?;
            positive("michaelis_menten.designer_alpha_rate", m.designer_alpha_rate)?;
            if self.n < 2 {
                return Err(invalid("n", "must be at least 2"));
            }
        }
        if let Some(s) = &self.spline {
            positive("spline.kappa", s.kappa)?;
            positive("spline.a", s.a)?;
            positive("spline.b", s.b)?;
            positive("spline.designer_a", s.designer_a)?;
            positive("spline.designer_b", s.designer_b)?;
            positive("spline.scale_l", s.scale_l)?;
            range("spline.designer_xi_prior", s.designer_xi_prior)?;
            if s.quadrature_nodes < 2 {
                return Err(invalid("spline.quadrature_nodes", "must be at least 2"));
            }
            if self.n < 4 {
                return Err(invalid("n", "spline models need at least 4 runs"));
            }
        }
        if let Some(mc) = &self.mc {
            if mc.outer == 0 {
                return Err(invalid("mc.outer", "must be at least 1"));
            }
            if self.scenario == Scenario::MichaelisMenten && mc.inner < 2 {
                return Err(invalid("mc.inner", "must be at least 2"));
            }
        }
        let o = &self.optimizer;
        if o.grid_points_per_variable < 2 {
            return Err(invalid("optimizer.grid_points_per_variable", "must be at least 2"));
        }
        if o.sweeps_max == 0 {
            return Err(invalid("optimizer.sweeps_max", "must be at least 1"));
        }
        if o.restarts == 0 {
            return Err(invalid("optimizer.restarts", "must be at least 1"));
        }
        if !(o.improvement_tolerance >= 0.0) {
            return Err(invalid("optimizer.improvement_tolerance", "must be nonnegative"));
        }
        if !(o.se_fraction >= 0.0) {
            return Err(invalid("optimizer.se_fraction", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn exchange(&self) -> ExchangeConfig {
        let o = &self.optimizer;
        ExchangeConfig {
            grid_points_per_variable: o.grid_points_per_variable,
            sweeps_max: o.sweeps_max,
            restarts: o.restarts,
            improvement_tolerance: o.improvement_tolerance,
            se_fraction: o.se_fraction,
            root_seed: self.root_seed,
        }
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self.scenario {
            Scenario::LinearFulltreatment => vec![(-1.0, 1.0); self.k],
            _ => vec![(0.0, 1.0)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_n_names_field() {
        let err = ScenarioConfig::from_json(r#"{"scenario":"michaelis-menten"}"#).unwrap_err();
        assert!(err.to_string().contains("`n`"), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        let err = ScenarioConfig::from_json(r#"{"scenario":"cubic-spline","n":10,"bogus":1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn defaults_materialized() {
        let cfg = ScenarioConfig::from_json(r#"{"scenario":"linear-fulltreatment","n":16}"#).unwrap().resolve().unwrap();
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.linear.as_ref().unwrap().kappa, Some(16.0));
        assert_eq!(cfg.objectives.len(), 4);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ResolvedConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn kappa_defaults_to_run_count() {
        let cfg = ScenarioConfig::from_json(r#"{"scenario":"linear-fulltreatment","n":20}"#).unwrap().resolve().unwrap();
        assert_eq!(cfg.linear.unwrap().kappa, Some(20.0));
    }

    #[test]
    fn pure_error_objectives_need_alpha() {
        let text = r#"{"scenario":"linear-fulltreatment","n":16,"objectives":["D","DP"]}"#;
        let err = ScenarioConfig::from_json(text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("linear.alpha: required"), "{err}");
        let text = r#"{"scenario":"linear-fulltreatment","n":16,"objectives":["D","DP"],"linear":{"alpha":0.05}}"#;
        assert!(ScenarioConfig::from_json(text).unwrap().resolve().is_ok());
    }

    #[test]
    fn foreign_objective_reports_path() {
        let err = ScenarioConfig::from_json(r#"{"scenario":"cubic-spline","n":10,"objectives":["int-PSE","DE"]}"#)
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(err.to_string().contains("objectives[1]"));
    }

    #[test]
    fn too_few_runs_for_model() {
        let err = ScenarioConfig::from_json(r#"{"scenario":"linear-fulltreatment","n":5}"#).unwrap().resolve().unwrap_err();
        assert!(err.to_string().starts_with("n:") || err.to_string().contains(" n:"), "{err}");
    }
}
