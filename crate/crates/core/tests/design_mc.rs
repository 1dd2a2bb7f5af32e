use altdesign_core::design::{
    snis_from_log_weights, ConjugateNormalMean, LossRole, McSizes, ParamDims, ParamDraws,
};
use altdesign_core::{
    efficiency, mc_external_loss, mc_internal_loss, Compatibility, Design, EfficiencyScale, Error, Executor,
    LossKind, LossSpec, ModelPair, RandomStream, Sequential,
};

/// Splits indices over scoped threads, in reverse chunk order, then reassembles.
struct Scoped(usize);

impl Executor for Scoped {
    fn map_collect<T: Send, F: Fn(usize) -> T + Sync + Send>(&self, len: usize, f: F) -> Vec<T> {
        let chunk = len.div_ceil(self.0.max(1)).max(1);
        let starts: Vec<usize> = (0..len).step_by(chunk).collect();
        let mut parts: Vec<(usize, Vec<T>)> = std::thread::scope(|s| {
            let handles: Vec<_> = starts
                .iter()
                .rev()
                .map(|&a| {
                    let f = &f;
                    s.spawn(move || (a, (a..(a + chunk).min(len)).map(f).collect::<Vec<T>>()))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        parts.sort_by_key(|p| p.0);
        parts.into_iter().flat_map(|p| p.1).collect()
    }
}

fn column(xs: &[f64]) -> Design {
    Design::from_column(xs, -1.0, 1.0).unwrap()
}

fn draws(values: &[f64]) -> ParamDraws {
    ParamDraws::from_rows(ParamDims { interest: 1, nuisance: 0 }, values.to_vec()).unwrap()
}

#[test]
fn uniform_weights_give_sample_moments() {
    let v = [1.0, 2.0, 4.0, 7.0];
    let m = snis_from_log_weights(&draws(&v), &[-3.0; 4]).unwrap();
    assert!((m.mean[0] - 3.5).abs() < 1e-15);
    assert!((m.second_diag[0] - 17.5).abs() < 1e-13);
    assert!((m.ess - 4.0).abs() < 1e-12);
    assert!((m.trace_variance() - 5.25).abs() < 1e-12);
}

#[test]
fn dominant_weight_collapses_to_its_draw() {
    let m = snis_from_log_weights(&draws(&[5.0, -1.0, 3.0]), &[0.0, -800.0, -900.0]).unwrap();
    assert_eq!(m.mean[0], 5.0);
    assert!((m.ess - 1.0).abs() < 1e-12);
    assert!(m.trace_variance().abs() < 1e-12);
}

#[test]
fn no_finite_weight_is_degenerate() {
    let e = snis_from_log_weights(&draws(&[1.0, 2.0]), &[f64::NEG_INFINITY, f64::NAN]).unwrap_err();
    assert!(matches!(e, Error::AllWeightsDegenerate { .. }));
}

#[test]
fn internal_squared_error_matches_posterior_variance() {
    let toy = ConjugateNormalMean::new(0.0, 1.0, 1.0).unwrap();
    let xs = [1.0, 1.0];
    let oracle = 1.0 / (1.0 / 1.0 + 2.0 / 1.0);
    for seed in 0..3 {
        let e = mc_internal_loss(
            ModelPair::internal(&toy),
            LossKind::SquaredError.into(),
            &column(&xs),
            McSizes::equal(4000),
            RandomStream::new(seed),
            &Sequential,
        )
        .unwrap();
        assert!((e.value - oracle).abs() <= 3.0 * e.mc_standard_error + 0.01 * oracle, "{e:?}");
        assert!(e.low_ess_count * 100 < e.outer_samples, "{}", e.low_ess_count);
    }
}

#[test]
fn internal_squared_error_and_trace_variance_agree() {
    let toy = ConjugateNormalMean::new(0.5, 2.0, 0.5).unwrap();
    let d = column(&[0.2, -0.7, 1.0]);
    let s = RandomStream::new(4);
    let est = |kind: LossKind| {
        mc_internal_loss(ModelPair::internal(&toy), kind.into(), &d, McSizes::equal(3000), s, &Sequential).unwrap()
    };
    let se = est(LossKind::SquaredError);
    let tv = est(LossKind::TraceVariance);
    let oracle = toy.posterior_variance(&d.column(0));
    assert!((tv.value - oracle).abs() < 0.02 * oracle, "TV {} vs {oracle}", tv.value);
    assert!((se.value - tv.value).abs() <= 3.0 * (se.mc_standard_error + tv.mc_standard_error));
}

#[test]
fn closed_form_losses_match_normal_formulas() {
    let toy = ConjugateNormalMean::new(0.0, 1.0, 0.25).unwrap();
    let xs = [0.5, -0.5, 1.0];
    let v = toy.posterior_variance(&xs);
    let s = RandomStream::new(9);
    let ent = mc_internal_loss(
        ModelPair::internal(&toy),
        LossKind::Entropy.into(),
        &column(&xs),
        McSizes::equal(50),
        s,
        &Sequential,
    )
    .unwrap();
    let expected = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * v).ln();
    assert!((ent.value - expected).abs() < 1e-12);
    let si = mc_internal_loss(
        ModelPair::internal(&toy),
        LossKind::SelfInformation.into(),
        &column(&xs),
        McSizes::equal(4000),
        s,
        &Sequential,
    )
    .unwrap();
    assert!((si.value - expected).abs() <= 3.0 * si.mc_standard_error);
}

#[test]
fn single_outer_sample_is_degenerate() {
    let toy = ConjugateNormalMean::new(0.0, 1.0, 1.0).unwrap();
    let e = mc_internal_loss(
        ModelPair::internal(&toy),
        LossKind::SquaredError.into(),
        &column(&[1.0]),
        McSizes { outer: 1, inner: 500 },
        RandomStream::new(2),
        &Sequential,
    )
    .unwrap();
    assert!(e.degenerate);
    assert_eq!(e.mc_standard_error, 0.0);
    assert_eq!(e.outer_samples, 1);
    assert!(e.value >= 0.0);
}

#[test]
fn external_loss_dominates_designer_internal_loss() {
    let fitted = ConjugateNormalMean::new(0.0, 1.0, 1.0).unwrap();
    let designer = ConjugateNormalMean::new(0.0, 4.0, 1.0).unwrap();
    let d = column(&[1.0, -1.0, 0.5]);
    for seed in 0..20 {
        let s = RandomStream::new(seed);
        let sizes = McSizes::equal(800);
        let pair = ModelPair::new(&fitted, &designer, Compatibility::Compatible);
        let df = mc_external_loss(pair, LossKind::SquaredError.into(), &d, sizes, s, &Sequential).unwrap();
        let dd = mc_internal_loss(
            ModelPair::internal(&designer),
            LossKind::SquaredError.into(),
            &d,
            sizes,
            s,
            &Sequential,
        )
        .unwrap();
        assert!(df.value + 3.0 * df.mc_standard_error >= dd.value - 3.0 * dd.mc_standard_error, "seed {seed}");
    }
}

#[test]
fn identical_models_give_identical_external_and_internal_losses() {
    let toy = ConjugateNormalMean::new(0.3, 1.5, 0.7).unwrap();
    let twin = toy;
    let d = column(&[0.4, 0.9]);
    let s = RandomStream::new(17);
    let sizes = McSizes::equal(1000);
    let df = mc_external_loss(
        ModelPair::new(&toy, &twin, Compatibility::Compatible),
        LossKind::SquaredError.into(),
        &d,
        sizes,
        s,
        &Sequential,
    )
    .unwrap();
    let ff = mc_internal_loss(ModelPair::internal(&toy), LossKind::SquaredError.into(), &d, sizes, s, &Sequential).unwrap();
    assert!((df.value - ff.value).abs() <= 3.0 * ff.mc_standard_error);
}

#[test]
fn disjoint_generator_losses_use_their_composite() {
    let fitted = ConjugateNormalMean::new(0.0, 1.0, 1.0).unwrap();
    let designer = ConjugateNormalMean::new(1.0, 2.0, 0.5).unwrap();
    let d = column(&[0.3, 0.8, -0.2]);
    let pair = ModelPair::new(&fitted, &designer, Compatibility::Disjoint);
    let s = RandomStream::new(5);
    let sizes = McSizes::equal(300);
    let run = |kind: LossKind| mc_external_loss(pair, kind.into(), &d, sizes, s, &Sequential).unwrap().value;
    assert_eq!(run(LossKind::SquaredError), run(LossKind::TraceVariance));
    assert_eq!(run(LossKind::SelfInformation), run(LossKind::Entropy));
    assert_eq!(LossSpec::new(LossKind::SquaredError).composite().unwrap().kind, LossKind::TraceVariance);
    assert_eq!(LossSpec::new(LossKind::TraceVariance).role, LossRole::Composite);
}

#[test]
fn unsupported_combinations_are_rejected() {
    let toy = ConjugateNormalMean::new(0.0, 1.0, 1.0).unwrap();
    let d = column(&[0.5]);
    let s = RandomStream::new(1);
    let sizes = McSizes::equal(10);
    let partial = ModelPair::new(&toy, &toy, Compatibility::Partial);
    let e = mc_external_loss(partial, LossKind::SquaredError.into(), &d, sizes, s, &Sequential).unwrap_err();
    assert!(matches!(e, Error::IncompatibleLoss(_)));
    let e = mc_external_loss(partial, LossKind::PredictiveSquaredError.into(), &d, sizes, s, &Sequential).unwrap_err();
    assert!(matches!(e, Error::UnsupportedLossForModel(_)));
}

#[test]
fn more_informative_designs_have_lower_squared_error() {
    let toy = ConjugateNormalMean::new(0.0, 1.0, 1.0).unwrap();
    let s = RandomStream::new(8);
    let mut last = f64::INFINITY;
    for x in [0.1, 0.4, 0.7, 1.0] {
        let v = mc_internal_loss(
            ModelPair::internal(&toy),
            LossKind::TraceVariance.into(),
            &column(&[x, x]),
            McSizes::equal(2000),
            s,
            &Sequential,
        )
        .unwrap()
        .value;
        assert!(v < last);
        last = v;
    }
}

#[test]
fn estimates_do_not_depend_on_the_executor() {
    let fitted = ConjugateNormalMean::new(0.0, 1.0, 1.0).unwrap();
    let designer = ConjugateNormalMean::new(0.5, 3.0, 1.0).unwrap();
    let pair = ModelPair::new(&fitted, &designer, Compatibility::Compatible);
    let d = column(&[0.1, 0.5, 0.9]);
    let s = RandomStream::new(21);
    let sizes = McSizes { outer: 257, inner: 300 };
    let seq = mc_external_loss(pair, LossKind::SquaredError.into(), &d, sizes, s, &Sequential).unwrap();
    for threads in [2, 3, 8] {
        let par = mc_external_loss(pair, LossKind::SquaredError.into(), &d, sizes, s, &Scoped(threads)).unwrap();
        assert_eq!(seq, par);
    }
    let again = mc_external_loss(pair, LossKind::SquaredError.into(), &d, sizes, s, &Sequential).unwrap();
    assert_eq!(seq, again);
}

#[test]
fn efficiency_round_trips_reported_percentages() {
    let p = 10.0;
    let gap = p * (1.0f64 / 0.85).ln();
    let e = efficiency(3.0, 3.0 + gap, EfficiencyScale::Log { p }).unwrap();
    assert!((e - 85.0).abs() < 1e-10);
    assert_eq!(efficiency(1.0, 2.0, EfficiencyScale::Ratio).unwrap(), 50.0);
    assert_eq!(efficiency(2.5, 2.5, EfficiencyScale::Log { p }).unwrap(), 100.0);
}
