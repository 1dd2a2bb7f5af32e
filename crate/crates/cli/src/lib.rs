//! Command-line front end: scenario configuration, design search,
//! evaluation reports and reproduction presets.

pub mod config;
pub mod error;
pub mod exec;
pub mod io;
pub mod pipeline;
pub mod presets;
pub mod problem;
pub mod report;
pub mod run;

pub use config::{ResolvedConfig, Scale, ScenarioConfig};
pub use error::CliError;
pub use exec::RayonExecutor;
