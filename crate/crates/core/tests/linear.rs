use altdesign_core::linear::{
    expected_bhat, expected_bhat_fulltreatment, external_loss_closed, hat_matrix, internal_loss_closed,
    nig_posterior, objective, treatment_structure, FullTreatmentDesigner, LinearFittedModel, LinearObjective,
    MomentDesigner, ModelTerms, NigPrior, DUPLICATE_TOL,
};
use altdesign_core::{Design, LossKind, Matrix};
use proptest::prelude::*;

const LEVELS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

fn design(rows: &[Vec<f64>]) -> Design {
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    Design::with_uniform_bounds(Matrix::from_rows(&refs).unwrap(), -1.0, 1.0).unwrap()
}

fn level_design(n: usize, k: usize) -> impl Strategy<Value = Design> {
    prop::collection::vec(prop::collection::vec(0usize..LEVELS.len(), k), n)
        .prop_map(|rows| design(&rows.iter().map(|r| r.iter().map(|&i| LEVELS[i]).collect()).collect::<Vec<_>>()))
}

/// Cholesky pivots relative to the Gram diagonal; rejects numerically collinear columns.
fn full_rank(d: &Design, terms: ModelTerms) -> bool {
    let g = terms.model_matrix(d).gram();
    let Ok(f) = altdesign_core::numeric::cholesky_logdet(&g) else { return false };
    let scale = g.diag().into_iter().fold(0.0, f64::max);
    !f.jittered() && f.lower().diag().into_iter().all(|l| l * l > 1e-8 * scale)
}

fn example() -> (Design, Matrix, Vec<f64>, NigPrior) {
    let d = Design::from_column(&[-1.0, -0.6, -0.1, 0.3, 0.8, 1.0], -1.0, 1.0).unwrap();
    let x = ModelTerms::FirstOrder.model_matrix(&d);
    let y = vec![-0.9, -0.2, 0.4, 0.1, 1.3, 0.9];
    let v = Matrix::from_rows(&[&[1.5, 0.2], &[0.2, 0.8]]).unwrap();
    let prior = NigPrior::informative(vec![0.2, 0.5], v, 4.0, 1.5).unwrap();
    (d, x, y, prior)
}

#[test]
fn posterior_mean_matches_grid_integration() {
    let (_, x, y, prior) = example();
    let post = nig_posterior(&x, &y, &prior).unwrap();
    let v_inv = {
        let v = prior.v.as_ref().unwrap();
        let det = v[(0, 0)] * v[(1, 1)] - v[(0, 1)] * v[(1, 0)];
        [[v[(1, 1)] / det, -v[(0, 1)] / det], [-v[(1, 0)] / det, v[(0, 0)] / det]]
    };
    let (n, p) = (x.rows() as f64, 2.0);
    let log_density = |g: [f64; 2]| {
        let dg = [g[0] - prior.mu[0], g[1] - prior.mu[1]];
        let q: f64 = (0..2).map(|i| (0..2).map(|j| dg[i] * v_inv[i][j] * dg[j]).sum::<f64>()).sum();
        let ss: f64 = (0..x.rows()).map(|i| (y[i] - x[(i, 0)] * g[0] - x[(i, 1)] * g[1]).powi(2)).sum();
        -0.5 * (prior.a + n + p) * (prior.b + q + ss).ln()
    };
    let m = 801;
    let half = 3.0;
    let (mut w_sum, mut m0, mut m1, mut second) = (0.0, 0.0, 0.0, 0.0);
    let peak = log_density([post.mu_hat[0], post.mu_hat[1]]);
    for i in 0..m {
        for j in 0..m {
            let g = [
                post.mu_hat[0] - half + 2.0 * half * i as f64 / (m - 1) as f64,
                post.mu_hat[1] - half + 2.0 * half * j as f64 / (m - 1) as f64,
            ];
            let w = (log_density(g) - peak).exp();
            w_sum += w;
            m0 += w * g[0];
            m1 += w * g[1];
            second += w * (g[0] - post.mu_hat[0]).powi(2);
        }
    }
    assert!((m0 / w_sum - post.mu_hat[0]).abs() < 1e-6);
    assert!((m1 / w_sum - post.mu_hat[1]).abs() < 1e-6);
    // Marginal posterior of γ is Student-t with â degrees of freedom and scale b̂/â·V̂.
    let var0 = post.b_hat / (post.a_hat - 2.0) * post.v_hat[(0, 0)];
    assert!((second / w_sum - var0).abs() < 1e-3 * var0, "{} vs {var0}", second / w_sum);
}

#[test]
fn b_hat_is_the_penalized_residual_sum_of_squares() {
    let (_, x, y, prior) = example();
    let post = nig_posterior(&x, &y, &prior).unwrap();
    let g = &post.mu_hat;
    let v_inv = prior.v.as_ref().unwrap();
    let dg: Vec<f64> = g.iter().zip(&prior.mu).map(|(a, b)| a - b).collect();
    let v = altdesign_core::numeric::cholesky_logdet(v_inv).unwrap();
    let q = v.inv_quad_form(&dg).unwrap();
    let ss: f64 = (0..x.rows()).map(|i| (y[i] - x[(i, 0)] * g[0] - x[(i, 1)] * g[1]).powi(2)).sum();
    assert!((post.b_hat - (prior.b + q + ss)).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hat_matrices_of_nested_models_trace_to_p(d in level_design(14, 3)) {
        let terms = ModelTerms::SecondOrder;
        prop_assume!(full_rank(&d, terms));
        let x = terms.model_matrix(&d);
        let hx = hat_matrix(&x).unwrap();
        let hz = hat_matrix(&treatment_structure(&d, DUPLICATE_TOL).z).unwrap();
        let tr = hx.matmul(&hz).unwrap().trace();
        prop_assert!((tr - x.cols() as f64).abs() <= 1e-8, "trace {}", tr);
    }

    #[test]
    fn general_moments_agree_with_full_treatment_closed_form(d in level_design(12, 2), kappa in 0.5f64..30.0) {
        let terms = ModelTerms::SecondOrder;
        prop_assume!(full_rank(&d, terms));
        let x = terms.model_matrix(&d);
        let prior = NigPrior::noninformative(x.cols(), 0.0, 0.0).unwrap();
        let designer = FullTreatmentDesigner::new(kappa, 5.0, 3.0).unwrap();
        let (m, s) = designer.moments(&d).unwrap();
        let general = expected_bhat(&x, &prior, &m, &s).unwrap();
        let closed = expected_bhat_fulltreatment(&d, kappa, 3.0, 5.0, x.cols()).unwrap();
        prop_assert!((general - closed).abs() <= 1e-8 * closed.abs(), "{} vs {}", general, closed);
    }

    #[test]
    fn objectives_ignore_run_order(d in level_design(12, 3), seed in any::<u64>()) {
        let terms = ModelTerms::SecondOrder;
        let mut order: Vec<usize> = (0..d.n()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled = design(&order.iter().map(|&i| d.run(i).to_vec()).collect::<Vec<_>>());
        for kind in [LinearObjective::DE, LinearObjective::AE, LinearObjective::D, LinearObjective::A,
                     LinearObjective::DP { alpha: 0.05 }, LinearObjective::AP { alpha: 0.05 }] {
            let a = objective(kind, &d, terms, 16.0);
            let b = objective(kind, &shuffled, terms, 16.0);
            prop_assert!(a == b || (a - b).abs() <= 1e-9 * a.abs().max(1.0), "{:?}: {} vs {}", kind, a, b);
        }
    }

    #[test]
    fn designer_expectation_of_b_hat_is_at_least_b(d in level_design(10, 2), kappa in 0.0f64..20.0) {
        let terms = ModelTerms::FirstOrder;
        prop_assume!(full_rank(&d, terms));
        let x = terms.model_matrix(&d);
        let v = Matrix::identity(x.cols()).scale(2.0);
        let prior = NigPrior::informative(vec![0.3, -0.2, 0.1], v, 4.0, 1.7).unwrap();
        let designer = FullTreatmentDesigner::new(kappa.max(1e-3), 6.0, 2.0).unwrap();
        let (m, s) = designer.moments(&d).unwrap();
        prop_assert!(expected_bhat(&x, &prior, &m, &s).unwrap() >= prior.b);
    }
}

fn replicated(d_target: usize) -> Design {
    // 12 runs on the 3×3 grid plus centre replicates; d grows with the replicates.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for a in [-1.0, 0.0, 1.0] {
        for b in [-1.0, 0.0, 1.0] {
            rows.push(vec![a, b]);
        }
    }
    let distinct = [[0.5, 0.5], [-0.5, 0.5], [0.5, -0.5]];
    for i in 0..3 {
        rows.push(if i < d_target { vec![0.0, 0.0] } else { distinct[i].to_vec() });
    }
    design(&rows)
}

#[test]
fn replication_bracket_separates_de_from_d() {
    let terms = ModelTerms::SecondOrder;
    let kappa = 16.0;
    let p = terms.p(2) as f64;
    let mut last = f64::INFINITY;
    for d_target in 0..3 {
        let d = replicated(d_target);
        assert_eq!(treatment_structure(&d, DUPLICATE_TOL).d, d_target);
        let diff = objective(LinearObjective::DE, &d, terms, kappa) - objective(LinearObjective::D, &d, terms, kappa);
        let bracket = (1.0 + kappa) * (d.n() as f64 - p) - kappa * d_target as f64;
        assert!((diff - p * bracket.ln()).abs() < 1e-10);
        assert!(diff < last);
        last = diff;
        let ratio = objective(LinearObjective::AE, &d, terms, kappa) / objective(LinearObjective::A, &d, terms, kappa);
        assert!((ratio - bracket).abs() < 1e-9 * bracket);
    }
}

#[test]
fn zero_kappa_ranks_like_classical_criteria() {
    let terms = ModelTerms::SecondOrder;
    let designs: Vec<Design> = (0..3).map(replicated).collect();
    let offset = terms.p(2) as f64 * (12.0 - terms.p(2) as f64).ln();
    for d in &designs {
        let de = objective(LinearObjective::DE, d, terms, 0.0);
        assert!((de - objective(LinearObjective::D, d, terms, 0.0) - offset).abs() < 1e-10);
        let ae = objective(LinearObjective::AE, d, terms, 0.0);
        assert!((ae - 6.0 * objective(LinearObjective::A, d, terms, 0.0)).abs() < 1e-10 * ae);
    }
}

#[test]
fn pure_error_objectives_need_replication() {
    let terms = ModelTerms::SecondOrder;
    let d = replicated(0);
    assert_eq!(objective(LinearObjective::DP { alpha: 0.05 }, &d, terms, 16.0), f64::INFINITY);
    assert!(objective(LinearObjective::DP { alpha: 0.05 }, &replicated(2), terms, 16.0).is_finite());
}

#[test]
fn fitted_model_as_its_own_designer() {
    let (d, x, _, prior) = example();
    let fitted = LinearFittedModel::new(ModelTerms::FirstOrder, prior.clone());
    let (m, s) = fitted.marginal_moments(&d).unwrap();
    let e_b = expected_bhat(&x, &prior, &m, &s).unwrap();
    let n = x.rows() as f64;
    assert!((e_b - prior.b * (1.0 + n / (prior.a - 2.0))).abs() < 1e-12 * e_b);
    let ext = external_loss_closed(LossKind::SquaredError, &d, &fitted, &fitted).unwrap();
    let int = internal_loss_closed(LossKind::SquaredError, &d, &fitted).unwrap();
    assert!((ext - int).abs() < 1e-12 * int);
}
