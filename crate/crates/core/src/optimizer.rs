//! Grid coordinate exchange with common random numbers and multistart.
//!
//! Every objective evaluation within one search uses the same
//! [`RandomStream`], so a stochastic objective becomes a deterministic
//! function of the design and accepted moves can only lower it.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::design::Design;
use crate::numeric::exec::Executor;
use crate::numeric::matrix::Matrix;
use crate::numeric::rng::RandomStream;
use crate::{Error, Result};

/// Substream of the root seed that drives objective evaluations.
pub const OBJECTIVE_STREAM: u64 = 0;
/// Substream of the root seed whose children generate initial designs.
pub const INITIAL_STREAM: u64 = 1;

/// An objective value with its Monte Carlo standard error (0 if exact).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub se: f64,
}

impl ObjectiveValue {
    pub fn exact(value: f64) -> ObjectiveValue {
        ObjectiveValue { value, se: 0.0 }
    }

    pub fn infeasible() -> ObjectiveValue {
        ObjectiveValue { value: f64::INFINITY, se: 0.0 }
    }
}

/// A design criterion to be minimised; `+∞` marks an inadmissible design.
pub trait DesignObjective: Sync {
    fn evaluate(&self, design: &Design, stream: RandomStream) -> ObjectiveValue;
}

impl<F> DesignObjective for F
where
    F: Fn(&Design, RandomStream) -> ObjectiveValue + Sync,
{
    fn evaluate(&self, design: &Design, stream: RandomStream) -> ObjectiveValue {
        self(design, stream)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeConfig {
    pub grid_points_per_variable: usize,
    pub sweeps_max: usize,
    pub restarts: usize,
    /// Minimum improvement for deterministic objectives.
    pub improvement_tolerance: f64,
    /// Multiple of the pooled standard error a stochastic improvement must exceed.
    pub se_fraction: f64,
    pub root_seed: u64,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        ExchangeConfig {
            grid_points_per_variable: 21,
            sweeps_max: 20,
            restarts: 10,
            improvement_tolerance: 1e-9,
            se_fraction: 0.1,
            root_seed: 0,
        }
    }
}

impl ExchangeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points_per_variable < 2 || self.sweeps_max == 0 || self.restarts == 0 {
            return Err(Error::DomainError("grid needs >= 2 points; sweeps and restarts >= 1".into()));
        }
        if !(self.improvement_tolerance >= 0.0 && self.se_fraction >= 0.0) {
            return Err(Error::DomainError("tolerances must be nonnegative".into()));
        }
        Ok(())
    }

    /// The candidate grid for each column: equally spaced, bounds included exactly.
    pub fn grids(&self, bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
        bounds.iter().map(|&(lo, hi)| grid(lo, hi, self.grid_points_per_variable)).collect()
    }

    /// The stream shared by every objective evaluation of a run.
    pub fn objective_stream(&self) -> RandomStream {
        RandomStream::new(self.root_seed).substream(OBJECTIVE_STREAM)
    }
}

/// `count` equally spaced points from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let last = count - 1;
    (0..count)
        .map(|i| (lo * (last - i) as f64 + hi * i as f64) / last as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrace {
    pub initial_value: f64,
    /// Objective after each sweep.
    pub sweep_values: Vec<f64>,
    pub accepted: usize,
    pub evaluations: usize,
    pub final_design: Design,
    pub final_value: ObjectiveValue,
    /// A full sweep accepted nothing before `sweeps_max` ran out.
    pub converged: bool,
}

fn improves(current: ObjectiveValue, candidate: ObjectiveValue, config: &ExchangeConfig) -> bool {
    let pooled = (0.5 * (current.se * current.se + candidate.se * candidate.se)).sqrt();
    let threshold = config.improvement_tolerance.max(config.se_fraction * pooled);
    if current.value.is_infinite() {
        return candidate.value.is_finite();
    }
    current.value - candidate.value > threshold
}

/// Coordinate exchange from `initial` over the configured grid.
///
/// For each entry `(i, j)` every grid value is evaluated under `stream`; the
/// best (first on ties) replaces the incumbent if it improves by more than
/// the acceptance threshold. Stops after a sweep without acceptance.
pub fn coordinate_exchange<O, E>(
    objective: &O,
    initial: &Design,
    config: &ExchangeConfig,
    stream: RandomStream,
    exec: &E,
) -> Result<(Design, SearchTrace)>
where
    O: DesignObjective + ?Sized,
    E: Executor + ?Sized,
{
    config.validate()?;
    let grids = config.grids(initial.bounds());
    let mut current = initial.clone();
    let mut value = objective.evaluate(&current, stream);
    let mut evaluations = 1;
    if !value.value.is_finite() {
        return Err(Error::InfeasibleStart);
    }
    let initial_value = value.value;
    let mut sweep_values = Vec::new();
    let mut accepted = 0;
    let mut converged = false;
    for _ in 0..config.sweeps_max {
        let mut changed = false;
        for i in 0..current.n() {
            for (j, g) in grids.iter().enumerate() {
                let base = &current;
                let values: Vec<ObjectiveValue> = exec.map_collect(g.len(), |c| {
                    if g[c] == base.get(i, j) {
                        return ObjectiveValue::infeasible();
                    }
                    match base.with_entry(i, j, g[c]) {
                        Ok(d) => objective.evaluate(&d, stream),
                        Err(_) => ObjectiveValue::infeasible(),
                    }
                });
                evaluations += g.len();
                let mut best: Option<usize> = None;
                for (c, v) in values.iter().enumerate() {
                    if v.value.is_nan() {
                        continue;
                    }
                    if best.map_or(true, |b| v.value < values[b].value) {
                        best = Some(c);
                    }
                }
                if let Some(b) = best {
                    if improves(value, values[b], config) {
                        current.set(i, j, g[b])?;
                        value = values[b];
                        accepted += 1;
                        changed = true;
                    }
                }
            }
        }
        sweep_values.push(value.value);
        if !changed {
            converged = true;
            break;
        }
    }
    let trace = SearchTrace {
        initial_value,
        sweep_values,
        accepted,
        evaluations,
        final_design: current.clone(),
        final_value: value,
        converged,
    };
    Ok((current, trace))
}

/// Uniform random design on the grid, drawn from `stream`.
pub fn random_grid_design(n: usize, bounds: &[(f64, f64)], config: &ExchangeConfig, stream: RandomStream) -> Result<Design> {
    use rand::Rng;
    let grids = config.grids(bounds);
    let mut rng = stream.rng();
    let k = bounds.len();
    let points = Matrix::from_fn(n, k, |_, j| grids[j][rng.random_range(0..grids[j].len())]);
    Design::new(points, bounds.to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartResult {
    pub best: Design,
    pub best_trace: SearchTrace,
    pub best_index: usize,
    /// One entry per restart; `None` when that start was infeasible.
    pub traces: Vec<Option<SearchTrace>>,
}

/// Runs [`coordinate_exchange`] from `config.restarts` initial designs.
///
/// Initial design `r` comes from `design_sampler` on substream `r` of
/// [`INITIAL_STREAM`]; all restarts share the objective stream, so their
/// final values are directly comparable. Ties go to the lowest index.
pub fn multistart<O, S, E>(objective: &O, design_sampler: S, config: &ExchangeConfig, exec: &E) -> Result<MultistartResult>
where
    O: DesignObjective + ?Sized,
    S: Fn(RandomStream) -> Result<Design>,
    E: Executor + ?Sized,
{
    config.validate()?;
    let init = RandomStream::new(config.root_seed).substream(INITIAL_STREAM);
    let stream = config.objective_stream();
    let mut traces = Vec::with_capacity(config.restarts);
    let mut best: Option<(usize, Design, SearchTrace)> = None;
    for r in 0..config.restarts {
        let start = design_sampler(init.substream(r as u64))?;
        match coordinate_exchange(objective, &start, config, stream, exec) {
            Ok((d, t)) => {
                let better = best.as_ref().map_or(true, |(_, _, bt)| t.final_value.value < bt.final_value.value);
                traces.push(Some(t.clone()));
                if better {
                    best = Some((r, d, t));
                }
            }
            Err(Error::InfeasibleStart) => traces.push(None),
            Err(e) => return Err(e),
        }
    }
    let (best_index, best, best_trace) = best.ok_or(Error::InfeasibleStart)?;
    Ok(MultistartResult { best, best_trace, best_index, traces })
}
