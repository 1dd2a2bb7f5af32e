use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{ResolvedConfig, Scale, ScenarioConfig};
use crate::error::CliError;
use crate::exec::RayonExecutor;
use crate::io::{read_design_csv, read_text, write_design_csv, write_text};
use crate::pipeline::{run_evaluate, run_search, Outcome};
use crate::presets::{preset_config, Preset};

pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";

/// Seed used by `reproduce` when none is given.
pub const DEFAULT_PRESET_SEED: u64 = 1;

pub fn executor(threads: usize) -> Result<RayonExecutor, CliError> {
    RayonExecutor::new(threads).map_err(|e| CliError::Config(format!("threads: {e}")))
}

fn guard_scale(scale: Scale, confirmed: bool) -> Result<(), CliError> {
    if scale == Scale::Paper && !confirmed {
        return Err(CliError::Config(
            "scale: paper-scale runs take hours; pass --confirm-paper-scale to proceed".into(),
        ));
    }
    Ok(())
}

pub fn load_config(path: &Path, seed: Option<u64>, scale: Option<Scale>) -> Result<ResolvedConfig, CliError> {
    let text = read_text(path).map_err(|e| CliError::Config(e.to_string()))?;
    let mut cfg = ScenarioConfig::from_json(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .resolve()?;
    if let Some(s) = seed {
        cfg.root_seed = s;
    }
    if let Some(s) = scale {
        cfg.scale = s;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

fn write_outcome(out: &Path, outcome: &Outcome, design_dir: Option<&Path>) -> Result<(), CliError> {
    if let Some(dir) = design_dir {
        create_dir(dir)?;
        for (label, d) in &outcome.designs {
            write_design_csv(&dir.join(format!("{label}.csv")), d)?;
        }
    }
    write_text(&out.join(REPORT_FILE), &outcome.report.to_json())?;
    let timing = serde_json::to_string_pretty(&outcome.timing).expect("timing serializes");
    write_text(&out.join(TIMING_FILE), &(timing + "\n"))
}

fn finish(out: &Path, outcome: Outcome, design_dir: Option<&Path>) -> Result<(), CliError> {
    write_outcome(out, &outcome, design_dir)?;
    match outcome.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn cmd_design(
    config: &Path,
    out: &Path,
    seed: Option<u64>,
    scale: Option<Scale>,
    confirm: bool,
    threads: usize,
) -> Result<(), CliError> {
    let cfg = load_config(config, seed, scale)?;
    guard_scale(cfg.scale, confirm)?;
    let exec = executor(threads)?;
    create_dir(out)?;
    let outcome = run_search("design", &cfg, &exec, exec.threads());
    finish(out, outcome, Some(out))
}

pub fn cmd_evaluate(
    config: &Path,
    designs: &[PathBuf],
    out: &Path,
    seed: Option<u64>,
    threads: usize,
) -> Result<(), CliError> {
    let cfg = load_config(config, seed, None)?;
    if designs.is_empty() {
        return Err(CliError::Config("at least one --design file is required".into()));
    }
    let bounds = cfg.bounds();
    let mut loaded = Vec::new();
    for path in designs {
        let d = read_design_csv(path, cfg.n, &bounds)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "design".into());
        let dup = loaded.iter().filter(|(l, _, _): &&(String, String, _)| l == &stem || l.starts_with(&format!("{stem}#"))).count();
        let label = if dup == 0 { stem } else { format!("{stem}#{}", dup + 1) };
        loaded.push((label, path.display().to_string(), d));
    }
    let exec = executor(threads)?;
    create_dir(out)?;
    let outcome = run_evaluate(&cfg, &loaded, &exec, exec.threads());
    finish(out, outcome, None)
}

pub fn cmd_reproduce(
    preset: Preset,
    out: &Path,
    seed: Option<u64>,
    scale: Scale,
    confirm: bool,
    threads: usize,
) -> Result<(), CliError> {
    guard_scale(scale, confirm)?;
    let cfg = preset_config(preset, scale, seed.unwrap_or(DEFAULT_PRESET_SEED));
    cfg.validate()?;
    let exec = executor(threads)?;
    create_dir(out)?;
    let outcome = run_search("reproduce", &cfg, &exec, exec.threads());
    finish(out, outcome, Some(&out.join("designs")))
}
