//! Replicated MSE measurement over a budget sweep.

use lmc_core::analysis::{sigma_big, uniform_constant};
use lmc_core::numeric::CompensatedSum;
use lmc_core::rng::mix_seed;
use lmc_core::{
    crude_mc, lmc_ucb, uniform_stratified, Error as CoreError, EstimateReport, Integrand,
    LmcUcbConfig, QuadratureGrid, RngSpec,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EstimatorKind, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::lemma3::{verify_lemma3, Lemma3Outcome};
use crate::rates::{fit_rate, RateFit};

/// One `(estimator, n)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub estimator: EstimatorKind,
    pub n: u64,
    pub mse: f64,
    pub mse_stderr: f64,
    pub samples_used_mean: f64,
    /// `Σ / n^(1+2/d)`.
    pub oracle_bound: Option<f64>,
    /// `(1/12) ∫ ||∇f||² / n^(1+2/d)`.
    pub uniform_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPoint {
    pub estimator: EstimatorKind,
    pub n: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub estimator: EstimatorKind,
    pub fit: RateFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Point {
    pub n: u64,
    pub outcome: Lemma3Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub function: String,
    pub dim: usize,
    pub exact_integral: f64,
    pub reps: usize,
    pub sigma_big: Option<f64>,
    pub uniform_constant: Option<f64>,
    pub rows: Vec<BenchmarkRow>,
    pub skipped: Vec<SkippedPoint>,
    pub slopes: Vec<SlopeReport>,
    pub lemma3: Vec<Lemma3Point>,
}

impl BenchmarkReport {
    pub fn row(&self, estimator: EstimatorKind, n: u64) -> Option<&BenchmarkRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.n == n)
    }

    pub fn slope(&self, estimator: EstimatorKind) -> Option<&RateFit> {
        self.slopes
            .iter()
            .find(|s| s.estimator == estimator)
            .map(|s| &s.fit)
    }
}

/// Quadrature grid used for oracle constants in dimension `dim`.
pub fn oracle_grid(dim: usize) -> QuadratureGrid {
    match dim {
        1 => QuadratureGrid::gauss_legendre(1 << 16),
        2 => QuadratureGrid::gauss_legendre(512),
        3 => QuadratureGrid::gauss_legendre(64),
        _ => QuadratureGrid::gauss_legendre(8),
    }
}

/// Seed for replication `r` of `estimator` at budget `n`.
pub fn replication_rng(root: u64, estimator: EstimatorKind, n: u64, r: usize) -> RngSpec {
    RngSpec::new(mix_seed(&[root, estimator.tag(), n]), r as u64)
}

pub(crate) fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

enum Plan {
    Run(Box<dyn Fn(RngSpec) -> lmc_core::Result<EstimateReport> + Send + Sync>),
    Skip(String),
}

fn plan_for(cfg: &ExperimentConfig, f: &Integrand, kind: EstimatorKind, n: u64) -> Result<Plan> {
    let f = f.clone();
    Ok(match kind {
        EstimatorKind::Crude => Plan::Run(Box::new(move |rng| crude_mc(&f, n, rng))),
        EstimatorKind::Uniform => {
            let k =
                usize::try_from(n).map_err(|_| HarnessError::Config(format!("n={n} too large")))?;
            lmc_core::HyperCubePartition::new(f.dim(), k)?;
            Plan::Run(Box::new(move |rng| uniform_stratified(&f, n, rng)))
        }
        EstimatorKind::Lmcucb => {
            let strata = cfg.strata.strata(n, f.dim());
            let lmc = LmcUcbConfig::new(strata, n, cfg.delta.delta(n), cfg.confidence(&f)?)
                .with_leftover(cfg.leftover);
            match lmc.validate(f.dim()) {
                Ok(_) => Plan::Run(Box::new(move |rng| lmc_ucb(&f, &lmc, rng))),
                Err(CoreError::NotPerfectPower { .. }) => {
                    return Err(HarnessError::Config(format!(
                        "K={strata} is not a perfect power"
                    )));
                }
                Err(e) => Plan::Skip(e.to_string()),
            }
        }
    })
}

/// Runs every selected estimator at every budget, `reps` seeded replications each.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchmarkReport> {
    let f = cfg.integrand()?;
    let mu = f
        .exact_integral()
        .ok_or_else(|| CoreError::MissingExactIntegral(f.name().to_string()))?;
    let dim = f.dim();
    let grid = oracle_grid(dim);
    let (big, uniform) = if f.has_gradient() {
        (
            Some(sigma_big(&f, &grid)?),
            Some(uniform_constant(&f, &grid)?),
        )
    } else {
        (None, None)
    };

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut lemma3 = Vec::new();
    for &kind in &cfg.estimators {
        for &n in &cfg.budgets {
            let run = match plan_for(cfg, &f, kind, n)? {
                Plan::Run(run) => run,
                Plan::Skip(reason) => {
                    skipped.push(SkippedPoint {
                        estimator: kind,
                        n,
                        reason,
                    });
                    continue;
                }
            };
            let outcomes: Vec<lmc_core::Result<(f64, u64)>> = with_pool(cfg.workers, || {
                (0..cfg.reps)
                    .into_par_iter()
                    .map(|r| {
                        let rep = run(replication_rng(cfg.seed, kind, n, r))?;
                        Ok((rep.estimate - mu, rep.samples_used))
                    })
                    .collect()
            })?;
            let outcomes = outcomes.into_iter().collect::<lmc_core::Result<Vec<_>>>()?;
            let scale = (n as f64).powf(1.0 + 2.0 / dim as f64);
            rows.push(summarise(
                kind,
                n,
                &outcomes,
                big.map(|s| s / scale),
                uniform.map(|u| u / scale),
            ));
            if kind == EstimatorKind::Lmcucb && cfg.lemma3 {
                let strata = cfg.strata.strata(n, dim);
                let lmc = LmcUcbConfig::new(strata, n, cfg.delta.delta(n), cfg.confidence(&f)?)
                    .with_leftover(cfg.leftover);
                let outcome = verify_lemma3(&f, &lmc, cfg.reps, cfg.seed, cfg.workers)?;
                lemma3.push(Lemma3Point { n, outcome });
            }
        }
    }

    let slopes = cfg
        .estimators
        .iter()
        .filter_map(|&kind| {
            let points: Vec<(u64, f64)> = rows
                .iter()
                .filter(|r| r.estimator == kind)
                .map(|r| (r.n, r.mse))
                .collect();
            fit_rate(&points).ok().map(|fit| SlopeReport {
                estimator: kind,
                fit,
            })
        })
        .collect();

    Ok(BenchmarkReport {
        function: f.name().to_string(),
        dim,
        exact_integral: mu,
        reps: cfg.reps,
        sigma_big: big,
        uniform_constant: uniform,
        rows,
        skipped,
        slopes,
        lemma3,
    })
}

fn summarise(
    estimator: EstimatorKind,
    n: u64,
    outcomes: &[(f64, u64)],
    oracle_bound: Option<f64>,
    uniform_bound: Option<f64>,
) -> BenchmarkRow {
    let reps = outcomes.len() as f64;
    let sq: Vec<f64> = outcomes.iter().map(|(e, _)| e * e).collect();
    let mse = sq.iter().copied().collect::<CompensatedSum>().value() / reps;
    let var = sq
        .iter()
        .map(|s| (s - mse) * (s - mse))
        .collect::<CompensatedSum>()
        .value()
        / (reps - 1.0);
    let used = outcomes
        .iter()
        .map(|&(_, u)| u as f64)
        .collect::<CompensatedSum>()
        .value()
        / reps;
    BenchmarkRow {
        estimator,
        n,
        mse,
        mse_stderr: (var / reps).sqrt(),
        samples_used_mean: used,
        oracle_bound,
        uniform_bound,
    }
}
