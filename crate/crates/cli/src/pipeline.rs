use std::time::Instant;

use altdesign_core::linear::{treatment_structure, DUPLICATE_TOL};
use altdesign_core::optimizer::{coordinate_exchange, multistart, random_grid_design, ObjectiveValue, SearchTrace};
use altdesign_core::{efficiency, Design, EfficiencyScale, Executor, RandomStream};

use crate::config::{ObjectiveName, ResolvedConfig};
use crate::error::CliError;
use crate::problem::Problem;
use crate::report::{
    DesignReport, EfficiencyMatrix, Failure, ObjectiveInfo, Report, SearchSummary, StageTiming, Status, Timing,
    ValueEntry,
};

/// Bound on cross-seeding rounds; each round strictly lowers some objective on a finite grid.
const MAX_CROSS_ROUNDS: usize = 10;

pub struct Outcome {
    pub report: Report,
    pub designs: Vec<(String, Design)>,
    pub timing: Timing,
    pub error: Option<CliError>,
}

struct Stopwatch {
    start: Instant,
    timing: Timing,
}

impl Stopwatch {
    fn new(threads: usize) -> Stopwatch {
        Stopwatch { start: Instant::now(), timing: Timing { threads, ..Timing::default() } }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timing.stages.push(StageTiming { stage: stage.into(), seconds: t.elapsed().as_secs_f64() });
        out
    }

    fn finish(mut self) -> Timing {
        self.timing.total_seconds = self.start.elapsed().as_secs_f64();
        self.timing
    }
}

fn objective_infos(problem: &Problem, objectives: &[ObjectiveName]) -> Vec<ObjectiveInfo> {
    objectives
        .iter()
        .map(|&o| match problem.scale(o) {
            EfficiencyScale::Log { p } => ObjectiveInfo { name: o.label().into(), efficiency_scale: "log".into(), p: Some(p) },
            EfficiencyScale::Ratio => ObjectiveInfo { name: o.label().into(), efficiency_scale: "ratio".into(), p: None },
        })
        .collect()
}

fn evaluate_row<E: Executor>(
    problem: &Problem,
    objectives: &[ObjectiveName],
    design: &Design,
    stream: RandomStream,
    exec: &E,
    label: &str,
) -> Result<Vec<ObjectiveValue>, CliError> {
    objectives
        .iter()
        .map(|&o| {
            problem
                .evaluate(o, design, stream, exec)
                .map_err(CliError::numerical(format!("evaluate {} on {label}", o.label())))
        })
        .collect()
}

fn design_report(label: &str, source: &str, design: &Design, objectives: &[ObjectiveName], values: &[ObjectiveValue]) -> DesignReport {
    let ts = treatment_structure(design, DUPLICATE_TOL);
    DesignReport {
        label: label.into(),
        source: source.into(),
        q: ts.q,
        d: ts.d,
        points: (0..design.n()).map(|i| design.run(i).to_vec()).collect(),
        values: objectives
            .iter()
            .zip(values)
            .map(|(o, v)| ValueEntry {
                objective: o.label().into(),
                value: v.value.is_finite().then_some(v.value),
                se: v.se,
            })
            .collect(),
        search: None,
    }
}

fn summary(trace: &SearchTrace, best_restart: usize, restart_values: Vec<Option<f64>>) -> SearchSummary {
    SearchSummary {
        best_restart,
        restart_values,
        sweeps: trace.sweep_values.len(),
        evaluations: trace.evaluations,
        converged: trace.converged,
        cross_seeded_from: None,
    }
}

/// Percent efficiency of each row design against `reference[j]` under objective `j`.
fn efficiency_matrix(
    problem: &Problem,
    objectives: &[ObjectiveName],
    labels: &[String],
    values: &[Vec<ObjectiveValue>],
    reference: &[f64],
) -> EfficiencyMatrix {
    let percent = values
        .iter()
        .map(|row| {
            objectives
                .iter()
                .enumerate()
                .map(|(j, &o)| efficiency(reference[j], row[j].value, problem.scale(o)).ok())
                .collect()
        })
        .collect();
    EfficiencyMatrix {
        rows: labels.to_vec(),
        columns: objectives.iter().map(|o| o.label().to_string()).collect(),
        percent,
    }
}

fn fail(report: &mut Report, err: &CliError) {
    report.status = Status::Failed;
    let stage = match err {
        CliError::Numerical { stage, .. } => stage.clone(),
        _ => String::new(),
    };
    report.failure = Some(Failure { stage, error: err.name().into(), message: err.to_string() });
}

/// Searches for an optimal design under every configured objective, then
/// cross-evaluates them.
///
/// After the searches, any objective for which another objective's design
/// scores better restarts its exchange from that design, so each design is the
/// best of the set under its own objective and the efficiency diagonal is 100.
pub fn run_search<E: Executor>(command: &str, cfg: &ResolvedConfig, exec: &E, threads: usize) -> Outcome {
    let mut clock = Stopwatch::new(threads);
    let problem = Problem::new(cfg);
    let objectives = cfg.objectives.clone();
    let exchange = cfg.exchange();
    let bounds = cfg.bounds();
    let stream = exchange.objective_stream();
    let mut report = Report::new(command, cfg.clone());
    report.objectives = objective_infos(&problem, &objectives);
    let labels: Vec<String> = objectives.iter().map(|o| format!("{}-optimal", o.label())).collect();

    let mut designs: Vec<Design> = Vec::new();
    let mut summaries: Vec<SearchSummary> = Vec::new();
    let mut error = None;
    for &o in &objectives {
        let stage = format!("search {}", o.label());
        let obj = |d: &Design, s: RandomStream| problem.search_value(o, d, s, exec);
        let sampler = |s| random_grid_design(cfg.n, &bounds, &exchange, s);
        let result = clock.time(&stage, || multistart(&obj, sampler, &exchange, exec));
        match result {
            Ok(r) => {
                let restart_values: Vec<Option<f64>> =
                    r.traces.iter().map(|t| t.as_ref().map(|t| t.final_value.value)).collect();
                eprintln!("{stage}: best {:.6} from restart {} of {}", r.best_trace.final_value.value, r.best_index, exchange.restarts);
                summaries.push(summary(&r.best_trace, r.best_index, restart_values));
                designs.push(r.best);
            }
            Err(e) => {
                error = Some(CliError::numerical(stage)(e));
                break;
            }
        }
    }

    let mut values: Vec<Vec<ObjectiveValue>> = Vec::new();
    if error.is_none() {
        let evaluated = clock.time("cross-evaluate", || {
            designs
                .iter()
                .zip(&labels)
                .map(|(d, l)| evaluate_row(&problem, &objectives, d, stream, exec, l))
                .collect::<Result<Vec<_>, _>>()
        });
        match evaluated {
            Ok(v) => values = v,
            Err(e) => error = Some(e),
        }
    }

    if error.is_none() {
        let cross = clock.time("cross-seed", || {
            for _ in 0..MAX_CROSS_ROUNDS {
                let mut changed = false;
                for j in 0..objectives.len() {
                    let own = values[j][j].value;
                    let better = (0..designs.len()).filter(|&i| values[i][j].value < own).min_by(|&a, &b| {
                        values[a][j].value.total_cmp(&values[b][j].value).then(a.cmp(&b))
                    });
                    let Some(i) = better else { continue };
                    let o = objectives[j];
                    let obj = |d: &Design, s: RandomStream| problem.search_value(o, d, s, exec);
                    let (polished, trace) = coordinate_exchange(&obj, &designs[i], &exchange, stream, exec)
                        .map_err(CliError::numerical(format!("cross-seed {}", o.label())))?;
                    eprintln!("cross-seed {}: {:.6} from {} improved to {:.6}", o.label(), own, labels[i], trace.final_value.value);
                    let from = labels[i].clone();
                    values[j] = evaluate_row(&problem, &objectives, &polished, stream, exec, &labels[j])?;
                    designs[j] = polished;
                    let s = &mut summaries[j];
                    s.sweeps = trace.sweep_values.len();
                    s.evaluations += trace.evaluations;
                    s.converged = trace.converged;
                    s.cross_seeded_from = Some(from);
                    changed = true;
                }
                if !changed {
                    break;
                }
            }
            Ok::<(), CliError>(())
        });
        if let Err(e) = cross {
            error = Some(e);
        }
    }

    for (j, d) in designs.iter().enumerate() {
        let row: &[ObjectiveValue] = values.get(j).map(Vec::as_slice).unwrap_or(&[]);
        let mut dr = design_report(&labels[j], &format!("search {}", objectives[j].label()), d, &objectives, row);
        dr.search = Some(summaries[j].clone());
        report.designs.push(dr);
    }
    if let Some(e) = &error {
        fail(&mut report, e);
    } else {
        let reference: Vec<f64> = (0..objectives.len()).map(|j| values[j][j].value).collect();
        report.efficiency = Some(efficiency_matrix(&problem, &objectives, &labels, &values, &reference));
    }
    Outcome {
        report,
        designs: labels.into_iter().zip(designs).collect(),
        timing: clock.finish(),
        error,
    }
}

/// Evaluates given designs under every configured objective; efficiencies are
/// relative to the best of the supplied designs for each objective.
pub fn run_evaluate<E: Executor>(
    cfg: &ResolvedConfig,
    designs: &[(String, String, Design)],
    exec: &E,
    threads: usize,
) -> Outcome {
    let mut clock = Stopwatch::new(threads);
    let problem = Problem::new(cfg);
    let objectives = cfg.objectives.clone();
    let stream = cfg.exchange().objective_stream();
    let mut report = Report::new("evaluate", cfg.clone());
    report.objectives = objective_infos(&problem, &objectives);
    let evaluated = clock.time("evaluate", || {
        designs
            .iter()
            .map(|(label, _, d)| evaluate_row(&problem, &objectives, d, stream, exec, label))
            .collect::<Result<Vec<_>, _>>()
    });
    let mut error = None;
    match evaluated {
        Ok(values) => {
            for ((label, source, d), row) in designs.iter().zip(&values) {
                report.designs.push(design_report(label, source, d, &objectives, row));
            }
            let reference: Vec<f64> = (0..objectives.len())
                .map(|j| values.iter().map(|r| r[j].value).fold(f64::INFINITY, f64::min))
                .collect();
            let labels: Vec<String> = designs.iter().map(|(l, _, _)| l.clone()).collect();
            report.efficiency = Some(efficiency_matrix(&problem, &objectives, &labels, &values, &reference));
        }
        Err(e) => {
            fail(&mut report, &e);
            error = Some(e);
        }
    }
    Outcome {
        report,
        designs: designs.iter().map(|(l, _, d)| (l.clone(), d.clone())).collect(),
        timing: clock.finish(),
        error,
    }
}
