//! Empirical check of the high-probability lower bound on sub-strata counts.

use lmc_core::analysis::{optimal_proportions, sigma_k_sum, stratum_sigmas};
use lmc_core::rng::mix_seed;
use lmc_core::{
    lemma3_lower_bound, lmc_ucb, ConfidenceSource, Error as CoreError, Integrand, LmcUcbConfig,
    QuadratureGrid, RngSpec,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::with_pool;
use crate::error::{HarnessError, Result};

const LEMMA3_TAG: u64 = 0x4c33;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Lemma3Outcome {
    Checked {
        reps: usize,
        passes: usize,
        pass_rate: f64,
        /// Per-stratum lower bound on `S_k`.
        bound: Vec<f64>,
    },
    /// Every stratum has zero variation, so the optimal proportions are undefined.
    NotApplicable,
}

impl Lemma3Outcome {
    pub fn pass_rate(&self) -> Option<f64> {
        match self {
            Lemma3Outcome::Checked { pass_rate, .. } => Some(*pass_rate),
            Lemma3Outcome::NotApplicable => None,
        }
    }
}

/// Fraction of `reps` runs in which every stratum gets at least its bound.
/// The bound uses the true per-stratum standard deviations (by quadrature) and
/// the gradient bound from `cfg`, falling back to the integrand's own.
pub fn verify_lemma3(
    f: &Integrand,
    cfg: &LmcUcbConfig,
    reps: usize,
    seed: u64,
    workers: usize,
) -> Result<Lemma3Outcome> {
    let (partition, _) = cfg.validate(f.dim())?;
    let grad_bound = match cfg.confidence {
        ConfidenceSource::GradBound(l) => l,
        ConfidenceSource::Override(_) => f.grad_bound().ok_or_else(|| {
            HarnessError::Config(format!("`{}` has no gradient bound; pass --L", f.name()))
        })?,
    };
    let grid = QuadratureGrid::gauss_legendre(if f.dim() == 1 { 256 } else { 32 });
    let sigma = stratum_sigmas(f, &partition, &grid);
    let weights = vec![partition.weight(); partition.len()];
    let lambda = match optimal_proportions(&sigma, &weights, f.dim()) {
        Ok(l) => l,
        Err(CoreError::AllZeroVariation) => return Ok(Lemma3Outcome::NotApplicable),
        Err(e) => return Err(e.into()),
    };
    let total = sigma_k_sum(&sigma, &weights, f.dim())?;
    let bound = lemma3_lower_bound(&lambda, total, cfg, grad_bound, f.dim());
    let base = mix_seed(&[seed, LEMMA3_TAG, cfg.budget]);
    let hits: Vec<lmc_core::Result<bool>> = with_pool(workers, || {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let report = lmc_ucb(f, cfg, RngSpec::new(base, r as u64))?;
                Ok(report
                    .strata
                    .iter()
                    .zip(&bound)
                    .all(|(s, &b)| s.substrata as f64 >= b))
            })
            .collect()
    })?;
    let passes = hits
        .into_iter()
        .collect::<lmc_core::Result<Vec<_>>>()?
        .into_iter()
        .filter(|&ok| ok)
        .count();
    Ok(Lemma3Outcome::Checked {
        reps,
        passes,
        pass_rate: passes as f64 / reps as f64,
        bound,
    })
}
