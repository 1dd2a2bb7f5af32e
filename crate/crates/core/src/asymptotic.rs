//! Large-sample approximations to the external expected loss: the KL
//! projection of the designer likelihood onto the fitted model, the sandwich
//! matrices at that projection and the closed-form objectives built from them.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::design::{summarize, ExpectedLossEstimate};
use crate::numeric::dist::Distribution;
use crate::numeric::exec::Executor;
use crate::numeric::matrix::{cholesky_logdet, dot, Matrix, SpdFactor};
use crate::numeric::rng::RandomStream;
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Default simplex-diameter tolerance for [`kl_project`].
pub const KL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct KlProjection {
    pub beta_tilde: Vec<f64>,
    pub objective_value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Maximises `d` by Nelder–Mead, then restarts once from the best vertex.
///
/// Coordinates flagged in `positive` are optimised on the log scale. The
/// simplex diameter is measured in the transformed coordinates. When
/// `max_iter` is exhausted the best point so far is returned with
/// `converged = false`.
pub fn kl_project(
    d: impl Fn(&[f64]) -> f64,
    start: &[f64],
    positive: &[bool],
    tolerance: f64,
    max_iter: usize,
) -> Result<KlProjection> {
    let p = start.len();
    if positive.len() != p {
        return Err(Error::DimensionMismatch { expected: p, found: positive.len() });
    }
    if p == 0 {
        return Err(Error::DomainError("empty parameter vector".into()));
    }
    let to_internal = |t: &[f64]| -> Vec<f64> {
        t.iter().zip(positive).map(|(&v, &pos)| if pos { v.ln() } else { v }).collect()
    };
    let to_external = |u: &[f64]| -> Vec<f64> {
        u.iter().zip(positive).map(|(&v, &pos)| if pos { v.exp() } else { v }).collect()
    };
    if start.iter().zip(positive).any(|(&v, &pos)| pos && !(v > 0.0)) {
        return Err(Error::DomainError("positive coordinate started at a nonpositive value".into()));
    }
    let cost = |u: &[f64]| -> f64 {
        let v = -d(&to_external(u));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let u0 = to_internal(start);
    let f0 = cost(&u0);
    if !f0.is_finite() {
        return Err(Error::NonFiniteObjective { theta: start.to_vec() });
    }
    let first = nelder_mead(&cost, &u0, tolerance, max_iter);
    let second = nelder_mead(&cost, &first.point, tolerance, max_iter.saturating_sub(first.iterations));
    let best = if second.value <= first.value { &second } else { &first };
    Ok(KlProjection {
        beta_tilde: to_external(&best.point),
        objective_value: -best.value,
        converged: first.converged && second.converged,
        iterations: first.iterations + second.iterations,
    })
}

struct NmResult {
    point: Vec<f64>,
    value: f64,
    converged: bool,
    iterations: usize,
}

fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, start: &[f64], tol: f64, max_iter: usize) -> NmResult {
    let p = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..p {
        let mut v = start.to_vec();
        let step = if v[i].abs() > 1e-3 { 0.1 * v[i].abs() } else { 0.1 };
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut order: Vec<usize> = (0..=p).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter < tol {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> =
            (0..p).map(|j| simplex[..p].iter().map(|v| v[j]).sum::<f64>() / p as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[p]).map(|(c, w)| c + t * (w - c)).collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[p] = xe;
                values[p] = fe;
            } else {
                simplex[p] = xr;
                values[p] = fr;
            }
        } else if fr < values[p - 1] {
            simplex[p] = xr;
            values[p] = fr;
        } else {
            let (xc, fc) = if fr < values[p] {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < values[p].min(fr) {
                simplex[p] = xc;
                values[p] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=p {
                    simplex[i] = simplex[i].iter().zip(&best).map(|(v, b)| b + 0.5 * (v - b)).collect();
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=p).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    NmResult { point: simplex[best].clone(), value: values[best], converged, iterations }
}

/// Sandwich matrices at the KL projection, with interest parameters ordered
/// `(γ, θ)` and `p_gamma` fitted-only coordinates first.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichMatrices {
    pub i_tilde: Matrix,
    pub j_tilde: Matrix,
    /// `Ĩ⁻¹J̃Ĩ⁻¹`.
    pub k_tilde: Matrix,
    pub i_gg: Matrix,
    pub i_gt: Matrix,
    pub i_tt: Matrix,
    pub k_tt: Matrix,
    /// `(Ĩ_θθ − Ĩ_θγĨ_γγ⁻¹Ĩ_γθ)⁻¹`.
    pub t_theta: Matrix,
    /// `I + Ĩ_θγĨ_γγ⁻¹Ĩ_γγ⁻¹Ĩ_γθ`.
    pub s_theta: Matrix,
    /// `Ĩ_γγ⁻¹Ĩ_γθ`.
    pub p2: Matrix,
    pub p_gamma: usize,
    pub p_theta: usize,
    i_factor: SpdFactor,
}

impl SandwichMatrices {
    pub fn p(&self) -> usize {
        self.p_gamma + self.p_theta
    }

    pub fn log_det_i(&self) -> f64 {
        self.i_factor.log_det()
    }

    pub fn trace_i_inverse(&self) -> f64 {
        self.i_factor.trace_inverse()
    }

    pub fn i_inverse(&self) -> Matrix {
        self.i_factor.inverse()
    }
}

/// Builds the sandwich matrices from `Ĩ` and `J̃` evaluated at the projection.
pub fn sandwich(i_tilde: &Matrix, j_tilde: &Matrix, p_gamma: usize) -> Result<SandwichMatrices> {
    let p = i_tilde.rows();
    if !i_tilde.is_square() || j_tilde.rows() != p || j_tilde.cols() != p {
        return Err(Error::DimensionMismatch { expected: p, found: j_tilde.rows() });
    }
    if p_gamma > p {
        return Err(Error::DimensionMismatch { expected: p, found: p_gamma });
    }
    let i_factor = cholesky_logdet(i_tilde)?;
    if i_factor.jittered() {
        return Err(Error::NotPositiveDefinite { pivot: p });
    }
    let j_sym = j_tilde.symmetrize();
    // K = I⁻¹ (I⁻¹ J)ᵀ because J is symmetric.
    let ij = i_factor.solve_matrix(&j_sym)?;
    let k_tilde = i_factor.solve_matrix(&ij.transpose())?.symmetrize();
    let pt = p - p_gamma;
    let i_gg = i_tilde.block(0, 0, p_gamma, p_gamma);
    let i_gt = i_tilde.block(0, p_gamma, p_gamma, pt);
    let i_tt = i_tilde.block(p_gamma, p_gamma, pt, pt);
    let k_tt = k_tilde.block(p_gamma, p_gamma, pt, pt);
    let (schur, p2) = if p_gamma == 0 {
        (i_tt.clone(), Matrix::zeros(0, pt))
    } else {
        let gf = cholesky_logdet(&i_gg)?;
        let p2 = gf.solve_matrix(&i_gt)?;
        (i_tt.sub(&i_gt.transpose().matmul(&p2)?)?.symmetrize(), p2)
    };
    let t_theta = cholesky_logdet(&schur)?.inverse();
    let mut s_theta = if p_gamma == 0 { Matrix::zeros(pt, pt) } else { p2.gram() };
    s_theta.add_diag(1.0);
    Ok(SandwichMatrices {
        i_tilde: i_tilde.clone(),
        j_tilde: j_sym,
        k_tilde,
        i_gg,
        i_gt,
        i_tt,
        k_tt,
        t_theta,
        s_theta,
        p2,
        p_gamma,
        p_theta: pt,
        i_factor,
    })
}

/// Closed-form approximate objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ApproxForm {
    GeneratorSelfInformation,
    GeneratorSquaredError,
    CompositeEntropy,
    CompositeTraceVariance,
    /// Reads `mats.i_tilde` as the fitted model's own information.
    InternalD,
    /// Reads `mats.i_tilde` as the fitted model's own information.
    InternalA,
}

/// Evaluates an approximate objective at designer parameter `theta` with
/// projection `theta_tilde` (both of length `p_theta`).
pub fn table2_objective(form: ApproxForm, theta: &[f64], theta_tilde: &[f64], mats: &SandwichMatrices) -> Result<f64> {
    let pt = mats.p_theta;
    if theta.len() != pt || theta_tilde.len() != pt {
        return Err(Error::DimensionMismatch { expected: pt, found: theta.len() });
    }
    let p = mats.p() as f64;
    let n_si = 0.5 * p * LN_2PI;
    let diff: Vec<f64> = theta.iter().zip(theta_tilde).map(|(a, b)| a - b).collect();
    let value = match form {
        ApproxForm::GeneratorSelfInformation => {
            let tf = cholesky_logdet(&mats.t_theta)?;
            let bias = tf.inv_quad_form(&diff)?;
            let gap = tf.solve_matrix(&mats.k_tt)?.trace();
            n_si - 0.5 * mats.log_det_i() + 0.5 * bias + 0.5 * gap + 0.5 * mats.p_gamma as f64
        }
        ApproxForm::GeneratorSquaredError => {
            let bias = mats.s_theta.quad_form(&diff)?;
            let gap = mats.s_theta.matmul(&mats.k_tt.sub(&mats.t_theta)?)?.trace();
            mats.trace_i_inverse() + bias + gap
        }
        ApproxForm::CompositeEntropy | ApproxForm::InternalD => n_si - 0.5 * mats.log_det_i() + 0.5 * p,
        ApproxForm::CompositeTraceVariance | ApproxForm::InternalA => mats.trace_i_inverse(),
    };
    Ok(value)
}

/// Monte Carlo average of `objective(θ)` over independent prior components.
///
/// Draw `b` comes from `stream.substream(b)`; results are reduced in index order.
pub fn approx_expected_loss<E: Executor + ?Sized>(
    prior: &[Distribution],
    objective: impl Fn(&[f64]) -> f64 + Sync + Send,
    outer: usize,
    stream: RandomStream,
    exec: &E,
) -> Result<ExpectedLossEstimate> {
    for d in prior {
        d.validate()?;
        if d.dim() != 1 {
            return Err(Error::DomainError("prior components must be scalar".into()));
        }
    }
    let values: Vec<Result<f64>> = exec.map_collect(outer, |b| {
        let mut rng = stream.substream(b as u64).rng();
        let theta: Vec<f64> = prior.iter().map(|d| d.draw(&mut rng)).collect();
        let v = objective(&theta);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteObjective { theta })
        }
    });
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    summarize(&values, 0, stream.root_seed, 0)
}

/// `‖v‖²_A` helper used by tests and model modules.
pub fn weighted_norm2(a: &Matrix, v: &[f64]) -> Result<f64> {
    Ok(dot(v, &a.mat_vec(v)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(seed: u64, n: usize) -> Matrix {
        let mut s = seed;
        let m = Matrix::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        });
        let mut a = m.gram();
        a.add_diag(0.5);
        a
    }

    fn gauss_jordan_inverse(a: &Matrix) -> Matrix {
        let n = a.rows();
        let mut m = a.clone();
        let mut inv = Matrix::identity(n);
        for c in 0..n {
            let piv = m[(c, c)];
            for j in 0..n {
                m[(c, j)] /= piv;
                inv[(c, j)] /= piv;
            }
            for i in 0..n {
                if i != c {
                    let f = m[(i, c)];
                    for j in 0..n {
                        m[(i, j)] -= f * m[(c, j)];
                        inv[(i, j)] -= f * inv[(c, j)];
                    }
                }
            }
        }
        inv
    }

    #[test]
    fn identical_models_give_inverse_information() {
        let i = spd(1, 4);
        let m = sandwich(&i, &i, 1).unwrap();
        let diff = m.k_tilde.sub(&m.i_inverse()).unwrap().max_abs();
        assert!(diff < 1e-10);
    }

    #[test]
    fn empty_gamma_partition() {
        let i = spd(2, 3);
        let m = sandwich(&i, &spd(3, 3), 0).unwrap();
        let inv = gauss_jordan_inverse(&i);
        assert!(m.t_theta.sub(&inv).unwrap().max_abs() < 1e-10);
        assert!(m.s_theta.sub(&Matrix::identity(3)).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn k_matches_triple_product() {
        for seed in 0..5 {
            let (i, j) = (spd(10 + seed, 5), spd(20 + seed, 5));
            let m = sandwich(&i, &j, 2).unwrap();
            let inv = gauss_jordan_inverse(&i);
            let oracle = inv.matmul(&j).unwrap().matmul(&inv).unwrap();
            let rel = m.k_tilde.sub(&oracle).unwrap().max_abs() / oracle.max_abs();
            assert!(rel < 1e-8);
        }
    }

    #[test]
    fn block_trace_identity() {
        for seed in 0..5 {
            let i = spd(30 + seed, 5);
            let m = sandwich(&i, &i, 2).unwrap();
            let gg_inv = gauss_jordan_inverse(&m.i_gg);
            let a = gg_inv.matmul(&m.i_gt).unwrap();
            let extra = a.matmul(&m.t_theta).unwrap().matmul(&a.transpose()).unwrap();
            let lhs = gg_inv.trace() + extra.trace() + m.t_theta.trace();
            assert!((lhs - m.trace_i_inverse()).abs() < 1e-8 * lhs);
        }
    }

    #[test]
    fn identical_models_collapse_generator_forms() {
        let i = spd(40, 2);
        let m = sandwich(&i, &i, 1).unwrap();
        let t = [0.3];
        let se = table2_objective(ApproxForm::GeneratorSquaredError, &t, &t, &m).unwrap();
        let tv = table2_objective(ApproxForm::CompositeTraceVariance, &t, &t, &m).unwrap();
        assert!((se - tv).abs() < 1e-10);
        let si = table2_objective(ApproxForm::GeneratorSelfInformation, &t, &t, &m).unwrap();
        let en = table2_objective(ApproxForm::CompositeEntropy, &t, &t, &m).unwrap();
        assert!((si - en).abs() < 1e-10);
    }

    #[test]
    fn nelder_mead_finds_quadratic_optimum() {
        let d = |t: &[f64]| -((t[0] - 1.5).powi(2) + 2.0 * (t[1] + 0.5).powi(2));
        let r = kl_project(d, &[0.0, 0.0], &[false, false], 1e-10, 5000).unwrap();
        assert!(r.converged);
        assert!((r.beta_tilde[0] - 1.5).abs() < 1e-6 && (r.beta_tilde[1] + 0.5).abs() < 1e-6);
    }
}
