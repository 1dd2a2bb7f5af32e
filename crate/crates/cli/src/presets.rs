use crate::config::{
    LinearSettings, McSettings, MichaelisMentenSettings, ObjectiveName, OptimizerSettings, ResolvedConfig, Scale,
    Scenario, SplineSettings,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    GtLinear,
    MichaelisMenten,
    CubicSpline,
}

/// Fully resolved configuration of a reproduction preset.
pub fn preset_config(preset: Preset, scale: Scale, root_seed: u64) -> ResolvedConfig {
    let paper = scale == Scale::Paper;
    match preset {
        Preset::GtLinear => ResolvedConfig {
            scenario: Scenario::LinearFulltreatment,
            n: 16,
            k: 3,
            objectives: vec![ObjectiveName::DE, ObjectiveName::AE, ObjectiveName::D, ObjectiveName::A],
            linear: Some(LinearSettings { kappa: Some(16.0), ..LinearSettings::default() }),
            michaelis_menten: None,
            spline: None,
            mc: None,
            optimizer: OptimizerSettings { restarts: if paper { 100 } else { 10 }, ..OptimizerSettings::default() },
            root_seed,
            scale,
        },
        Preset::MichaelisMenten => ResolvedConfig {
            scenario: Scenario::MichaelisMenten,
            n: if paper { 20 } else { 10 },
            k: 1,
            objectives: vec![ObjectiveName::ExtSe, ObjectiveName::ExtTv, ObjectiveName::IntSe],
            linear: None,
            michaelis_menten: Some(MichaelisMentenSettings::default()),
            spline: None,
            mc: Some(if paper { McSettings { outer: 20_000, inner: 20_000 } } else { McSettings { outer: 2000, inner: 2000 } }),
            optimizer: OptimizerSettings {
                restarts: if paper { 10 } else { 2 },
                sweeps_max: if paper { 20 } else { 6 },
                ..OptimizerSettings::default()
            },
            root_seed,
            scale,
        },
        Preset::CubicSpline => ResolvedConfig {
            scenario: Scenario::CubicSpline,
            n: 10,
            k: 1,
            objectives: vec![ObjectiveName::IntPse, ObjectiveName::ExtPse],
            linear: None,
            michaelis_menten: None,
            spline: Some(SplineSettings::default()),
            mc: Some(if paper { McSettings { outer: 20_000, inner: 0 } } else { McSettings { outer: 500, inner: 0 } }),
            optimizer: OptimizerSettings {
                restarts: if paper { 10 } else { 3 },
                ..OptimizerSettings::default()
            },
            root_seed,
            scale,
        },
    }
}
