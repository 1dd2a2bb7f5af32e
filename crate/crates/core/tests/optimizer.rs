use altdesign_core::linear::{objective, LinearObjective, ModelTerms};
use altdesign_core::optimizer::{
    coordinate_exchange, grid, multistart, random_grid_design, ExchangeConfig, ObjectiveValue,
};
use altdesign_core::{Design, Executor, RandomStream, Sequential};

struct Reversed;

impl Executor for Reversed {
    fn map_collect<T: Send, F: Fn(usize) -> T + Sync + Send>(&self, len: usize, f: F) -> Vec<T> {
        let mut out: Vec<(usize, T)> = (0..len).rev().map(|i| (i, f(i))).collect();
        out.sort_by_key(|p| p.0);
        out.into_iter().map(|p| p.1).collect()
    }
}

fn config(points: usize, restarts: usize, seed: u64) -> ExchangeConfig {
    ExchangeConfig { grid_points_per_variable: points, restarts, root_seed: seed, ..ExchangeConfig::default() }
}

fn a_criterion(d: &Design, _: RandomStream) -> ObjectiveValue {
    ObjectiveValue::exact(objective(LinearObjective::A, d, ModelTerms::FirstOrder, 0.0))
}

/// Global minimum at (0.6, −0.6); a shallower basin near (−0.6, 0.6).
fn two_basin(d: &Design, _: RandomStream) -> ObjectiveValue {
    let (a, b) = (d.get(0, 0), d.get(1, 0));
    let g = |x: f64, y: f64, cx: f64, cy: f64| ((x - cx).powi(2) + (y - cy).powi(2)) / 0.1;
    ObjectiveValue::exact(-2.0 * (-g(a, b, 0.6, -0.6)).exp() - 1.5 * (-g(a, b, -0.6, 0.6)).exp())
}

fn sampler(n: usize, cfg: &ExchangeConfig) -> impl Fn(RandomStream) -> altdesign_core::Result<Design> + '_ {
    move |s| random_grid_design(n, &[(-1.0, 1.0)], cfg, s)
}

#[test]
fn two_run_a_optimal_design_is_the_endpoints() {
    let cfg = config(21, 5, 3);
    let r = multistart(&a_criterion, sampler(2, &cfg), &cfg, &Sequential).unwrap();
    let mut xs = r.best.column(0);
    xs.sort_by(f64::total_cmp);
    assert_eq!(xs, vec![-1.0, 1.0]);
    assert!((r.best_trace.final_value.value - 1.0).abs() < 1e-12);
}

#[test]
fn multistart_finds_the_exhaustive_optimum() {
    let cfg = config(11, 10, 7);
    let g = grid(-1.0, 1.0, 11);
    let mut best = f64::INFINITY;
    for &a in &g {
        for &b in &g {
            let d = Design::from_column(&[a, b], -1.0, 1.0).unwrap();
            best = best.min(two_basin(&d, RandomStream::new(0)).value);
        }
    }
    let r = multistart(&two_basin, sampler(2, &cfg), &cfg, &Sequential).unwrap();
    assert_eq!(r.best_trace.final_value.value, best);
    assert_eq!(r.traces.len(), 10);
}

#[test]
fn exchange_from_an_optimum_is_idempotent() {
    let cfg = config(11, 1, 0);
    let start = random_grid_design(2, &[(-1.0, 1.0)], &cfg, RandomStream::new(4)).unwrap();
    let s = cfg.objective_stream();
    let (d1, t1) = coordinate_exchange(&two_basin, &start, &cfg, s, &Sequential).unwrap();
    let (d2, t2) = coordinate_exchange(&two_basin, &d1, &cfg, s, &Sequential).unwrap();
    assert_eq!(d1, d2);
    assert_eq!(t2.accepted, 0);
    assert!(t2.converged);
    assert_eq!(t1.final_value, t2.final_value);
}

#[test]
fn sweeps_never_increase_the_objective() {
    let cfg = config(9, 1, 0);
    let start = Design::from_column(&[0.0, 0.0, 0.0, 0.25], -1.0, 1.0).unwrap();
    let (_, t) = coordinate_exchange(&a_criterion, &start, &cfg, cfg.objective_stream(), &Sequential).unwrap();
    let mut last = t.initial_value;
    for v in &t.sweep_values {
        assert!(*v <= last);
        last = *v;
    }
}

#[test]
fn designs_stay_on_the_grid() {
    let cfg = config(7, 4, 11);
    let g = grid(-1.0, 1.0, 7);
    let r = multistart(&a_criterion, sampler(5, &cfg), &cfg, &Sequential).unwrap();
    for trace in r.traces.iter().flatten() {
        for x in trace.final_design.column(0) {
            assert!(g.contains(&x), "{x}");
        }
    }
    assert_eq!(g.first(), Some(&-1.0));
    assert_eq!(g.last(), Some(&1.0));
    assert_eq!(grid(-1.0, 1.0, 21)[10], 0.0);
}

#[test]
fn search_is_reproducible_and_executor_independent() {
    let cfg = config(11, 6, 42);
    let a = multistart(&a_criterion, sampler(4, &cfg), &cfg, &Sequential).unwrap();
    let b = multistart(&a_criterion, sampler(4, &cfg), &cfg, &Sequential).unwrap();
    let c = multistart(&a_criterion, sampler(4, &cfg), &cfg, &Reversed).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.best, c.best);
    assert_eq!(a.best_index, c.best_index);
    let other = multistart(&a_criterion, sampler(4, &config(11, 6, 43)), &config(11, 6, 43), &Sequential).unwrap();
    let starts = |r: &altdesign_core::optimizer::MultistartResult| {
        r.traces.iter().flatten().map(|t| t.initial_value).collect::<Vec<_>>()
    };
    assert_ne!(starts(&a), starts(&other));
}

#[test]
fn infeasible_starts_are_skipped() {
    let cfg = config(5, 3, 0);
    let all_bad = |_: &Design, _: RandomStream| ObjectiveValue::infeasible();
    assert!(multistart(&all_bad, sampler(3, &cfg), &cfg, &Sequential).is_err());
}

#[test]
fn invalid_configuration_is_rejected() {
    let cfg = ExchangeConfig { grid_points_per_variable: 1, ..ExchangeConfig::default() };
    let d = Design::from_column(&[0.0, 1.0], -1.0, 1.0).unwrap();
    assert!(coordinate_exchange(&a_criterion, &d, &cfg, cfg.objective_stream(), &Sequential).is_err());
}
