use altdesign_core::asymptotic::{kl_project, KL_TOLERANCE};
use altdesign_core::design::McSizes;
use altdesign_core::mm::{
    designer_covariance, kl_objective, mm_asymptotic, mm_eta, mm_eta_grad, mm_objectives, without_discrepancy,
    GpDiscrepancyDesigner, MmAsymptotic, MmFittedModel, MmObjective, MmParams,
};
use altdesign_core::numeric::Distribution;
use altdesign_core::{Design, RandomStream, Sequential};

fn unit(xs: &[f64]) -> Design {
    Design::from_column(xs, 0.0, 1.0).unwrap()
}

/// Gaussian elimination with partial pivoting; returns `(log|det|, A⁻¹b)`.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> (f64, Vec<f64>) {
    let n = b.len();
    let mut log_det = 0.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        b.swap(c, piv);
        log_det += a[c][c].abs().ln();
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    (log_det, x)
}

fn matern(d: f64, alpha: f64) -> f64 {
    let r = d / alpha;
    (1.0 + r + r * r / 3.0) * (-r).exp()
}

#[test]
fn eta_gradient_matches_finite_differences() {
    for &(t1, t2, x) in &[(50.0, 120.0, 0.3), (180.0, 25.0, 0.05), (90.0, 90.0, 1.0)] {
        let g = mm_eta_grad(MmParams::new(t1, t2), x);
        let h = 1e-5;
        let d1 = (mm_eta(MmParams::new(t1 + h, t2), x) - mm_eta(MmParams::new(t1 - h, t2), x)) / (2.0 * h);
        let d2 = (mm_eta(MmParams::new(t1, t2 + h), x) - mm_eta(MmParams::new(t1, t2 - h), x)) / (2.0 * h);
        assert!((g[0] - d1).abs() < 1e-8 * d1.abs().max(1.0));
        assert!((g[1] - d2).abs() < 1e-8 * d2.abs().max(1.0));
    }
}

#[test]
fn designer_log_likelihood_matches_dense_oracle() {
    let xs: [f64; 5] = [0.05, 0.2, 0.21, 0.6, 1.0];
    let y = [10.0, 30.0, 31.5, 60.0, 70.0];
    let params = [90.0, 60.0, 1.7, 0.8, 0.15];
    let p = MmParams::new(params[0], params[1]);
    let a: Vec<Vec<f64>> = (0..5)
        .map(|i| {
            (0..5)
                .map(|j| params[2] * (((i == j) as u8 as f64) + params[3] * matern((xs[i] - xs[j]).abs(), params[4])))
                .collect()
        })
        .collect();
    let r: Vec<f64> = y.iter().zip(&xs).map(|(v, &x)| v - mm_eta(p, x)).collect();
    let (log_det, sol) = solve(a.clone(), r.clone());
    let quad: f64 = r.iter().zip(&sol).map(|(u, v)| u * v).sum();
    let oracle = -2.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * quad;
    let got = GpDiscrepancyDesigner::default().loglik(&y, &params, &xs).unwrap();
    assert!((got - oracle).abs() < 1e-10 * oracle.abs(), "{got} vs {oracle}");
    let cov = designer_covariance(params[2], params[3], params[4], &xs).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert!((cov[(i, j)] - a[i][j]).abs() < 1e-13);
        }
    }
}

#[test]
fn zero_discrepancy_designer_is_the_fitted_likelihood() {
    let xs = [0.1, 0.3, 0.3, 0.9];
    let y = [20.0, 40.0, 45.0, 75.0];
    let fitted = MmFittedModel::default();
    let designer = GpDiscrepancyDesigner::default();
    for alpha in [0.05, 0.5] {
        let a = designer.loglik(&y, &[80.0, 70.0, 2.0, 0.0, alpha], &xs).unwrap();
        let b = fitted.loglik(&y, [80.0, 70.0], 2.0, &xs);
        assert!((a - b).abs() < 1e-10 * b.abs());
    }
}

#[test]
fn uninformative_design_leaves_the_prior_variance() {
    let fitted = MmFittedModel::default();
    let designer = GpDiscrepancyDesigner::default();
    let d = unit(&[0.0]);
    let e = mm_objectives(
        MmObjective::InternalSquaredError,
        &fitted,
        &designer,
        &d,
        McSizes::equal(4000),
        RandomStream::new(12),
        &Sequential,
    )
    .unwrap();
    // Two independent U[20, 200] coordinates: 2·180²/12.
    let oracle = 5400.0;
    assert!((e.value - oracle).abs() <= 3.0 * e.mc_standard_error + 0.01 * oracle, "{e:?}");
    let ext = mm_objectives(
        MmObjective::ExternalTraceVariance,
        &fitted,
        &designer,
        &d,
        McSizes::equal(4000),
        RandomStream::new(12),
        &Sequential,
    )
    .unwrap();
    assert!((ext.value - oracle).abs() <= 0.01 * oracle, "{ext:?}");
}

#[test]
fn zero_discrepancy_external_matches_internal() {
    let fitted = MmFittedModel::default();
    let designer = without_discrepancy(&GpDiscrepancyDesigner::default());
    let d = unit(&[0.05, 0.3, 1.0]);
    let s = RandomStream::new(5);
    let sizes = McSizes::equal(600);
    let ext = mm_objectives(MmObjective::ExternalSquaredError, &fitted, &designer, &d, sizes, s, &Sequential).unwrap();
    let int = mm_objectives(MmObjective::InternalSquaredError, &fitted, &designer, &d, sizes, s, &Sequential).unwrap();
    assert!((ext.value - int.value).abs() <= 3.0 * (ext.mc_standard_error + int.mc_standard_error), "{ext:?} {int:?}");
}

#[test]
fn external_and_internal_objectives_rank_designs_alike() {
    let fitted = MmFittedModel::default();
    let designer = GpDiscrepancyDesigner::default();
    let designs = [
        unit(&[0.05, 0.15, 0.3, 1.0, 1.0]),
        unit(&[0.01, 0.01, 0.02, 0.02, 0.03]),
        unit(&[1.0, 1.0, 1.0, 1.0, 0.9]),
    ];
    let s = RandomStream::new(3);
    let sizes = McSizes::equal(400);
    let best = |kind| {
        let v: Vec<f64> = designs
            .iter()
            .map(|d| mm_objectives(kind, &fitted, &designer, d, sizes, s, &Sequential).unwrap().value)
            .collect();
        (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap()
    };
    assert_eq!(best(MmObjective::ExternalTraceVariance), 0);
    assert_eq!(best(MmObjective::InternalSquaredError), 0);
}

#[test]
fn kl_projection_inflates_the_variance() {
    let xs = [0.02, 0.1, 0.1, 0.4, 1.0];
    for &(t1, t2, s2, rho) in &[(60.0, 150.0, 1.0, 1.0), (190.0, 30.0, 0.3, 2.5)] {
        let d = kl_objective(MmParams::new(t1, t2), s2, rho, &xs);
        let r = kl_project(d, &[100.0, 100.0, 1.0], &[true, true, true], KL_TOLERANCE, 10_000).unwrap();
        let want = [t1, t2, s2 * (1.0 + rho)];
        for (g, w) in r.beta_tilde.iter().zip(want) {
            assert!((g - w).abs() < 1e-3 * w, "{:?} vs {want:?}", r.beta_tilde);
        }
    }
}

#[test]
fn asymptotic_objectives_differ_by_the_variance_scale() {
    let fitted = MmFittedModel::default();
    let designer = GpDiscrepancyDesigner::default();
    let d = unit(&[0.03, 0.1, 0.3, 1.0]);
    let s = RandomStream::new(2);
    let ext = mm_asymptotic(MmAsymptotic::External, &fitted, &designer, &d, 500, s, &Sequential).unwrap();
    let int = mm_asymptotic(MmAsymptotic::Internal, &fitted, &designer, &d, 500, s, &Sequential).unwrap();
    assert!((ext / int - 2.0).abs() < 1e-10);
    let single = unit(&[0.5, 0.5]);
    assert_eq!(mm_asymptotic(MmAsymptotic::External, &fitted, &designer, &single, 10, s, &Sequential).unwrap(), f64::INFINITY);
    let rho_free = GpDiscrepancyDesigner { rho: Distribution::Fixed(0.0), ..designer };
    let ext0 = mm_asymptotic(MmAsymptotic::External, &fitted, &rho_free, &d, 500, s, &Sequential).unwrap();
    assert!((ext0 - int).abs() < 1e-10 * int);
}

#[test]
fn concentrations_outside_the_unit_interval_are_rejected() {
    let d = Design::from_column(&[0.5, 1.5], 0.0, 2.0).unwrap();
    let e = mm_objectives(
        MmObjective::InternalSquaredError,
        &MmFittedModel::default(),
        &GpDiscrepancyDesigner::default(),
        &d,
        McSizes::equal(10),
        RandomStream::new(0),
        &Sequential,
    );
    assert!(matches!(e, Err(altdesign_core::Error::InvalidDesign(_))));
}
