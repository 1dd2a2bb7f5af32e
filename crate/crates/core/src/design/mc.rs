use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::snis::snis_from_log_weights;
use super::{
    Compatibility, Design, ExpectedLossEstimate, LossKind, LossSpec, Model, ModelPair, ParamDraws,
};
use crate::numeric::exec::Executor;
use crate::numeric::rng::RandomStream;
use crate::{Error, Result};

/// Substream index for the shared inner prior draws.
pub const INNER_STREAM: u64 = 0;
/// Substream index whose children drive the outer samples.
pub const OUTER_STREAM: u64 = 1;

/// Outer (`B`) and inner (`B̃`) Monte Carlo sample sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSizes {
    pub outer: usize,
    pub inner: usize,
}

impl McSizes {
    pub fn equal(size: usize) -> McSizes {
        McSizes {
            outer: size,
            inner: size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Evaluation {
    /// Squared distance between the designer interest draw and the SNIS mean.
    SnisSquaredError,
    SnisTraceVariance,
    NegLogDensity,
    Entropy,
}

fn resolve<F: Model + ?Sized>(
    loss: LossSpec,
    compatibility: Compatibility,
    fitted: &F,
) -> Result<Evaluation> {
    let closed = |e: Evaluation| {
        if fitted.has_closed_posterior() {
            Ok(e)
        } else {
            Err(Error::UnsupportedLossForModel(
                "density-based loss needs a closed-form fitted posterior",
            ))
        }
    };
    // With no shared parameters a generator loss is evaluated through its
    // fitted-posterior expectation, i.e. its composite partner.
    match (loss.kind, compatibility) {
        (LossKind::TraceVariance, _) => Ok(Evaluation::SnisTraceVariance),
        (LossKind::SquaredError, Compatibility::Compatible) => Ok(Evaluation::SnisSquaredError),
        (LossKind::SquaredError, Compatibility::Disjoint) => Ok(Evaluation::SnisTraceVariance),
        (LossKind::Entropy, _) => closed(Evaluation::Entropy),
        (LossKind::SelfInformation, Compatibility::Compatible) => closed(Evaluation::NegLogDensity),
        (LossKind::SelfInformation, Compatibility::Disjoint) => closed(Evaluation::Entropy),
        (LossKind::SquaredError | LossKind::SelfInformation, Compatibility::Partial) => {
            Err(Error::IncompatibleLoss(
                "generator losses need fully shared or fully disjoint parameters",
            ))
        }
        (LossKind::PredictiveSquaredError, _) => Err(Error::UnsupportedLossForModel(
            "predictive squared error is specific to the spline model",
        )),
    }
}

/// Monte Carlo mean and standard error of per-outer-sample losses, summed in index order.
pub fn summarize(
    losses: &[f64],
    inner: usize,
    root_seed: u64,
    low_ess_count: usize,
) -> Result<ExpectedLossEstimate> {
    let b = losses.len();
    if b == 0 {
        return Err(Error::DomainError("no Monte Carlo samples".into()));
    }
    let mean = losses.iter().sum::<f64>() / b as f64;
    if !mean.is_finite() {
        return Err(Error::NonFiniteValue("expected loss estimate".into()));
    }
    let (se, degenerate) = if b == 1 {
        (0.0, true)
    } else {
        let ss: f64 = losses.iter().map(|l| (l - mean) * (l - mean)).sum();
        ((ss / (b as f64 - 1.0)).sqrt() / (b as f64).sqrt(), false)
    };
    Ok(ExpectedLossEstimate {
        value: mean,
        mc_standard_error: se,
        outer_samples: b,
        inner_samples: inner,
        root_seed,
        degenerate,
        low_ess_count,
    })
}

/// Nested Monte Carlo estimate of the external expected loss.
///
/// Outer sample `b` draws parameters and responses from the designer model on
/// `stream.substream(OUTER_STREAM).substream(b)`. One set of `sizes.inner`
/// fitted-prior draws, taken from `stream.substream(INNER_STREAM)`, is shared
/// by every outer sample.
pub fn mc_external_loss<F, D, E>(
    pair: ModelPair<'_, F, D>,
    loss: LossSpec,
    design: &Design,
    sizes: McSizes,
    stream: RandomStream,
    exec: &E,
) -> Result<ExpectedLossEstimate>
where
    F: Model + ?Sized,
    D: Model + ?Sized,
    E: Executor + ?Sized,
{
    if sizes.outer == 0 {
        return Err(Error::DomainError(
            "outer sample size must be positive".into(),
        ));
    }
    let evaluation = resolve(loss, pair.compatibility, pair.fitted)?;
    let snis = matches!(
        evaluation,
        Evaluation::SnisSquaredError | Evaluation::SnisTraceVariance
    );
    if snis && sizes.inner < 2 {
        return Err(Error::DomainError(
            "inner sample size must be at least 2".into(),
        ));
    }
    let fitted = pair.fitted;
    let designer = pair.designer;
    let fsetup = fitted.setup(design)?;
    let dsetup = designer.setup(design)?;
    let n = designer.n_obs(&dsetup);
    if fitted.n_obs(&fsetup) != n {
        return Err(Error::DimensionMismatch {
            expected: fitted.n_obs(&fsetup),
            found: n,
        });
    }
    let (draws, batch) = if snis {
        let mut rng = stream.substream(INNER_STREAM).rng();
        let draws = ParamDraws::from_prior(fitted, &fsetup, sizes.inner, &mut rng)?;
        let batch = fitted.prepare_batch(&fsetup, &draws)?;
        (Some(draws), Some(batch))
    } else {
        (None, None)
    };
    let ddim = designer.dims(&dsetup);
    let interest = fitted.dims(&fsetup).interest;
    if pair.compatibility == Compatibility::Compatible && interest != ddim.interest {
        return Err(Error::DimensionMismatch {
            expected: interest,
            found: ddim.interest,
        });
    }
    let low_ess_threshold = 0.01 * sizes.inner as f64;
    let outer = stream.substream(OUTER_STREAM);

    let results: Vec<Result<(f64, bool)>> = exec.map_collect(sizes.outer, |b| {
        let mut rng = outer.substream(b as u64).rng();
        let mut theta = vec![0.0; ddim.total()];
        let mut y = vec![0.0; n];
        designer.sample_prior(&dsetup, &mut rng, &mut theta)?;
        designer.sample_response(&dsetup, &theta, &mut rng, &mut y)?;
        match evaluation {
            Evaluation::SnisSquaredError | Evaluation::SnisTraceVariance => {
                let draws = draws.as_ref().expect("inner draws");
                let mut lw = vec![0.0; draws.len()];
                fitted.batch_log_likelihood(
                    &fsetup,
                    batch.as_ref().expect("batch"),
                    draws,
                    &y,
                    &mut lw,
                );
                let m = snis_from_log_weights(draws, &lw)?;
                let low = m.ess < low_ess_threshold;
                let value = if evaluation == Evaluation::SnisSquaredError {
                    theta[..interest]
                        .iter()
                        .zip(&m.mean)
                        .map(|(t, e)| (t - e) * (t - e))
                        .sum()
                } else {
                    m.trace_variance()
                };
                Ok((value, low))
            }
            Evaluation::NegLogDensity => {
                let v = fitted
                    .posterior_neg_log_density(&fsetup, &y, &theta[..interest])
                    .ok_or(Error::UnsupportedLossForModel(
                        "closed posterior density missing",
                    ))??;
                Ok((v, false))
            }
            Evaluation::Entropy => {
                let v = fitted.posterior_entropy(&fsetup, &y).ok_or(
                    Error::UnsupportedLossForModel("closed posterior entropy missing"),
                )??;
                Ok((v, false))
            }
        }
    });

    let mut losses = Vec::with_capacity(results.len());
    let mut low = 0;
    for r in results {
        let (v, l) = r?;
        losses.push(v);
        low += l as usize;
    }
    summarize(
        &losses,
        if snis { sizes.inner } else { 0 },
        stream.root_seed,
        low,
    )
}

/// Nested Monte Carlo estimate of the internal expected loss of `pair.fitted`.
///
/// Uses the same substream layout as [`mc_external_loss`], so with identical
/// fitted and designer models the two estimates coincide.
pub fn mc_internal_loss<F, D, E>(
    pair: ModelPair<'_, F, D>,
    loss: LossSpec,
    design: &Design,
    sizes: McSizes,
    stream: RandomStream,
    exec: &E,
) -> Result<ExpectedLossEstimate>
where
    F: Model + ?Sized,
    D: Model + ?Sized,
    E: Executor + ?Sized,
{
    mc_external_loss(
        ModelPair::internal(pair.fitted),
        loss,
        design,
        sizes,
        stream,
        exec,
    )
}
