//! LMC-UCB: two-layer adaptive stratified sampling.
//!
//! The cube is cut into `K` equal strata. Each stratum is first split into
//! `S̄` sub-strata with one point each; the empirical standard deviations of
//! those points, inflated by a confidence term, decide how finely each
//! stratum is re-split (`S_k` sub-strata, one point each) for the final
//! estimate. Strata that keep `S_k = S̄` reuse their initialization points.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EstimateReport, SampleLedger, StratumReport};
use crate::error::{Error, Result};
use crate::geometry::{sample_subcell, HyperCubePartition, SubStratification};
use crate::integrand::Integrand;
use crate::numeric::{exact_root, floor_root_f64, floor_root_scaled, CompensatedSum};
use crate::rng::{tag, RngSpec};

/// Where the confidence scale `A` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceSource {
    /// Bound `L` on `||grad f||_2`; `A = 2 L sqrt(d) sqrt(log(2K/delta))`.
    GradBound(f64),
    /// Use this `A` directly.
    Override(f64),
}

/// What to do with budget left over after rounding sub-strata counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeftoverPolicy {
    #[default]
    Discard,
    /// Spend it on uniform points over the whole cube, pooled per sub-stratum.
    UniformRefill,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmcUcbConfig {
    pub strata: usize,
    pub budget: u64,
    pub delta: f64,
    pub confidence: ConfidenceSource,
    pub leftover: LeftoverPolicy,
}

impl LmcUcbConfig {
    pub fn new(strata: usize, budget: u64, delta: f64, confidence: ConfidenceSource) -> Self {
        Self {
            strata,
            budget,
            delta,
            confidence,
            leftover: LeftoverPolicy::Discard,
        }
    }

    pub fn with_leftover(mut self, leftover: LeftoverPolicy) -> Self {
        self.leftover = leftover;
        self
    }

    /// Confidence scale `A` in dimension `dim`.
    pub fn scale(&self, dim: usize) -> f64 {
        match self.confidence {
            ConfidenceSource::GradBound(l) => confidence_scale(l, self.strata, self.delta, dim),
            ConfidenceSource::Override(a) => a,
        }
    }

    /// Checks the configuration for dimension `dim`; returns the partition and `S̄`.
    pub fn validate(&self, dim: usize) -> Result<(HyperCubePartition, u64)> {
        let partition = HyperCubePartition::new(dim, self.strata)?;
        let k = self.strata as u64;
        if self.budget < 4 * k {
            return Err(Error::InvalidConfig(format!(
                "budget n={} is below 4K={}",
                self.budget,
                4 * k
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta={} is not in (0, 1)",
                self.delta
            )));
        }
        match self.confidence {
            ConfidenceSource::GradBound(v) | ConfidenceSource::Override(v)
                if !(v >= 0.0 && v.is_finite()) =>
            {
                return Err(Error::InvalidConfig(format!(
                    "confidence parameter {v} must be finite and non-negative"
                )));
            }
            _ => {}
        }
        let s = sbar(self.budget, k, dim);
        if s < 2 {
            return Err(Error::InvalidConfig(format!(
                "n={} K={} d={dim} gives S̄={s}; need n/K >= 2^(d+1)",
                self.budget, self.strata
            )));
        }
        Ok((partition, s))
    }
}

/// `S̄ = floor((n/K)^(1/(d+1)))^d`, with the root taken on the exact rational `n/K`.
pub fn sbar(n: u64, strata: u64, dim: usize) -> u64 {
    let m = floor_root_scaled(n as u128, strata.max(1) as u128, dim as u32 + 1);
    m.saturating_pow(dim as u32)
}

/// `A = 2 L sqrt(d) sqrt(log(2K/delta))`.
pub fn confidence_scale(grad_bound: f64, strata: usize, delta: f64, dim: usize) -> f64 {
    2.0 * grad_bound * (dim as f64).sqrt() * (2.0 * strata as f64 / delta).ln().sqrt()
}

/// Unbiased sample standard deviation.
pub fn empirical_std(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    let n = samples.len() as f64;
    let anchor = samples[0];
    let mean = anchor + crate::numeric::sum(samples.iter().map(|v| v - anchor)) / n;
    let ss = crate::numeric::sum(samples.iter().map(|v| (v - mean) * (v - mean)));
    Ok((ss / (n - 1.0)).sqrt())
}

/// Sub-strata counts decided after initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerPlan {
    pub sbar: u64,
    /// `S_k`, each a perfect `d`-th power and at least `S̄`.
    pub counts: Vec<u64>,
    /// Real-valued quotas `C_k` before rounding.
    pub quotas: Vec<f64>,
}

impl TwoLayerPlan {
    /// Points the plan spends: `K S̄` for initialization plus the strata re-split beyond `S̄`.
    pub fn spent(&self) -> u64 {
        self.sbar * self.counts.len() as u64
            + self.counts.iter().filter(|&&s| s > self.sbar).sum::<u64>()
    }
}

/// Sub-strata counts from per-stratum empirical standard deviations.
///
/// `C_k ∝ w_k^(d/(d+1)) (σ̂_k + A (w_k/S̄)^(1/d) / sqrt(S̄))^(d/(d+1))`, scaled
/// to `n - K S̄`; `S_k = max(floor(C_k^(1/d))^d, S̄)`. If every weight term is
/// zero the quotas fall back to `(n - K S̄)/K`.
pub fn allocate(sigma_hat: &[f64], cfg: &LmcUcbConfig, sbar: u64, dim: usize) -> TwoLayerPlan {
    let k = sigma_hat.len();
    let w = 1.0 / k as f64;
    let a = cfg.scale(dim);
    let d = dim as f64;
    let expo = d / (d + 1.0);
    let sb = sbar as f64;
    let bonus = a * (w / sb).powf(1.0 / d) * (1.0 / sb).sqrt();
    let terms: Vec<f64> = sigma_hat
        .iter()
        .map(|&s| w.powf(expo) * (s + bonus).powf(expo))
        .collect();
    let total = crate::numeric::sum(terms.iter().copied());
    let remaining = cfg.budget.saturating_sub(sbar * k as u64) as f64;
    let quotas: Vec<f64> = if total > 0.0 {
        terms.iter().map(|t| t / total * remaining).collect()
    } else {
        vec![remaining / k as f64; k]
    };
    let counts = quotas
        .iter()
        .map(|&c| {
            floor_root_f64(c, dim as u32)
                .saturating_pow(dim as u32)
                .max(sbar)
        })
        .collect();
    TwoLayerPlan {
        sbar,
        counts,
        quotas,
    }
}

/// Per-stratum lower bound on `S_k` holding with probability at least `1 - delta`:
/// `max(λ_k (n - 7 (L+1) d^(3/2) sqrt(log(K/δ)) (1 + 1/Σ_K) K^(1/(d+1)) n^(d/(d+1))), S̄)`.
pub fn lemma3_lower_bound(
    lambda: &[f64],
    sigma_k_sum: f64,
    cfg: &LmcUcbConfig,
    grad_bound: f64,
    dim: usize,
) -> Vec<f64> {
    let d = dim as f64;
    let n = cfg.budget as f64;
    let k = cfg.strata as f64;
    let penalty = 7.0
        * (grad_bound + 1.0)
        * d.powf(1.5)
        * (k / cfg.delta).ln().sqrt()
        * (1.0 + 1.0 / sigma_k_sum)
        * k.powf(1.0 / (d + 1.0))
        * n.powf(d / (d + 1.0));
    let floor = sbar(cfg.budget, cfg.strata as u64, dim) as f64;
    lambda
        .iter()
        .map(|&l| (l * (n - penalty)).max(floor))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Initialization,
    Main,
    Leftover,
}

/// A sampled point with the phase that drew it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x: Vec<f64>,
    pub value: f64,
    pub stratum: usize,
    pub phase: Phase,
}

/// Runs LMC-UCB once.
pub fn lmc_ucb(f: &Integrand, cfg: &LmcUcbConfig, rng: RngSpec) -> Result<EstimateReport> {
    run(f, cfg, rng, None)
}

/// Runs LMC-UCB once and also returns every point it drew.
pub fn lmc_ucb_traced(
    f: &Integrand,
    cfg: &LmcUcbConfig,
    rng: RngSpec,
) -> Result<(EstimateReport, Vec<TracePoint>)> {
    let mut trace = Vec::new();
    let report = run(f, cfg, rng, Some(&mut trace))?;
    Ok((report, trace))
}

#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    deviation: f64,
    count: u32,
}

fn run(
    f: &Integrand,
    cfg: &LmcUcbConfig,
    rng: RngSpec,
    mut trace: Option<&mut Vec<TracePoint>>,
) -> Result<EstimateReport> {
    let dim = f.dim();
    let (partition, sbar) = cfg.validate(dim)?;
    let strata = partition.len();
    let l = partition.cells_per_axis();
    let init_side = exact_root(sbar, dim as u32).expect("S̄ is a d-th power by construction");
    let mut x = vec![0.0; dim];
    let record = |trace: &mut Option<&mut Vec<TracePoint>>, x: &[f64], v, k, phase| {
        if let Some(t) = trace.as_deref_mut() {
            t.push(TracePoint {
                x: x.to_vec(),
                value: v,
                stratum: k,
                phase,
            });
        }
    };

    let coords: Vec<Vec<u64>> = (0..strata)
        .map(|k| partition.coords(k).expect("k < K"))
        .collect();
    let mut init_values: Vec<Vec<f64>> = Vec::with_capacity(strata);
    for (k, c) in coords.iter().enumerate() {
        let mut r = rng.substream(&[tag::INIT, k as u64]);
        let values: Vec<f64> = (0..sbar)
            .map(|i| {
                sample_subcell(c, l, init_side, i, &mut r, &mut x);
                let v = f.eval(&x);
                record(&mut trace, &x, v, k, Phase::Initialization);
                v
            })
            .collect();
        init_values.push(values);
    }
    let anchor = init_values[0][0];
    let sigma_hat = init_values
        .iter()
        .map(|v| empirical_std(v))
        .collect::<Result<Vec<_>>>()?;

    let plan = allocate(&sigma_hat, cfg, sbar, dim);
    let mut points: Vec<u64> = vec![sbar; strata];
    let mut cells: Vec<Vec<Cell>> = Vec::with_capacity(strata);
    let mut main = 0;
    for (k, c) in coords.iter().enumerate() {
        let s_k = plan.counts[k];
        if s_k > sbar {
            let side = exact_root(s_k, dim as u32).expect("S_k is a d-th power by construction");
            let mut r = rng.substream(&[tag::MAIN, k as u64]);
            let fresh = (0..s_k)
                .map(|i| {
                    sample_subcell(c, l, side, i, &mut r, &mut x);
                    let v = f.eval(&x);
                    record(&mut trace, &x, v, k, Phase::Main);
                    Cell {
                        deviation: v - anchor,
                        count: 1,
                    }
                })
                .collect();
            cells.push(fresh);
            points[k] += s_k;
            main += s_k;
        } else {
            cells.push(
                init_values[k]
                    .iter()
                    .map(|&v| Cell {
                        deviation: v - anchor,
                        count: 1,
                    })
                    .collect(),
            );
        }
    }

    let initialization = sbar * strata as u64;
    let mut leftover = 0;
    if cfg.leftover == LeftoverPolicy::UniformRefill {
        let layout = SubStratification::new(
            partition.clone(),
            plan.counts.iter().map(|&s| s as usize).collect(),
        )?;
        let remaining = cfg.budget - initialization - main;
        let mut r = rng.substream(&[tag::LEFTOVER]);
        for _ in 0..remaining {
            x.iter_mut().for_each(|v| *v = r.random::<f64>());
            let (k, i) = layout.locate(&x);
            let v = f.eval(&x);
            record(&mut trace, &x, v, k, Phase::Leftover);
            let cell = &mut cells[k][i];
            cell.deviation += v - anchor;
            cell.count += 1;
            points[k] += 1;
        }
        leftover = remaining;
    }

    let w = partition.weight();
    let mut total = CompensatedSum::new();
    for (k, stratum) in cells.iter().enumerate() {
        let inner: CompensatedSum = stratum
            .iter()
            .map(|c| c.deviation / c.count as f64)
            .collect();
        total.add(w * inner.value() / plan.counts[k] as f64);
    }
    let ledger = SampleLedger {
        initialization,
        main,
        leftover,
    };
    debug_assert!(ledger.total() <= cfg.budget);
    Ok(EstimateReport {
        estimate: anchor + total.value(),
        budget: cfg.budget,
        samples_used: ledger.total(),
        ledger,
        sbar: Some(sbar),
        confidence_scale: Some(cfg.scale(dim)),
        strata: (0..strata)
            .map(|k| StratumReport {
                sigma_hat: sigma_hat[k],
                substrata: plan.counts[k],
                points: points[k],
                quota: plan.quotas[k],
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrand::by_name;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn sbar_examples() {
        assert_eq!(sbar(10, 10, 1), 1);
        assert_eq!(sbar(64, 64, 3), 1);
        assert_eq!(sbar(100, 10, 1), 3);
        assert_eq!(sbar(1600, 16, 2), 16);
        assert_eq!(sbar(100, 1, 1), 10);
        assert_eq!(sbar(104, 2, 1), 7);
        // (n/K) = 8 = 2^3 exactly for d = 2
        assert_eq!(sbar(8, 1, 2), 4);
    }

    #[test]
    fn confidence_scale_examples() {
        assert_eq!(confidence_scale(0.0, 5, 0.1, 3), 0.0);
        let delta = 2.0 / std::f64::consts::E;
        assert!(close(confidence_scale(1.0, 1, delta, 1), 2.0, 1e-14));
        let expected = 4.0 * 1600f64.ln().sqrt();
        assert!(close(confidence_scale(1.0, 8, 0.01, 4), expected, 1e-14));
        assert!(close(expected, 10.8649, 1e-5));
    }

    #[test]
    fn empirical_std_examples() {
        assert_eq!(empirical_std(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert!(close(
            empirical_std(&[0.0, 1.0]).unwrap(),
            0.5f64.sqrt(),
            1e-15
        ));
        assert_eq!(empirical_std(&[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(empirical_std(&[1.0]), Err(Error::TooFewSamples(1)));
    }

    #[test]
    fn allocate_single_stratum_takes_the_rest() {
        let cfg = LmcUcbConfig::new(1, 100, 0.1, ConfidenceSource::GradBound(1.0));
        for s in [0.0, 0.3, 7.0] {
            let plan = allocate(&[s], &cfg, 10, 1);
            assert_eq!(plan.quotas, vec![90.0]);
            assert_eq!(plan.counts, vec![90]);
        }
    }

    #[test]
    fn allocate_symmetric_and_hand_example() {
        let cfg = LmcUcbConfig::new(4, 1000, 0.1, ConfidenceSource::GradBound(1.0));
        let plan = allocate(&[0.5; 4], &cfg, 4, 1);
        assert!(plan.quotas.iter().all(|&c| close(c, 246.0, 1e-12)));

        let cfg = LmcUcbConfig::new(2, 104, 0.1, ConfidenceSource::Override(0.0));
        let sb = sbar(104, 2, 1);
        assert_eq!(sb, 7);
        let plan = allocate(&[1.0, 4.0], &cfg, sb, 1);
        assert!(close(plan.quotas[0], 30.0, 1e-12));
        assert!(close(plan.quotas[1], 60.0, 1e-12));
        assert_eq!(plan.counts, vec![30, 60]);
        assert_eq!(plan.spent(), 104);
    }

    #[test]
    fn allocate_zero_scale_and_zero_sigma_falls_back_to_uniform() {
        let cfg = LmcUcbConfig::new(4, 100, 0.1, ConfidenceSource::Override(0.0));
        let plan = allocate(&[0.0; 4], &cfg, 4, 1);
        assert_eq!(plan.quotas, vec![21.0; 4]);
        assert_eq!(plan.counts, vec![21; 4]);
    }

    #[test]
    fn allocate_rounds_to_powers_and_respects_sbar() {
        let cfg = LmcUcbConfig::new(4, 2000, 0.1, ConfidenceSource::Override(0.0));
        let plan = allocate(&[0.01, 1.0, 2.0, 0.0], &cfg, 16, 2);
        for &s in &plan.counts {
            assert!(s >= 16);
            assert!(exact_root(s, 2).is_some());
        }
        assert_eq!(plan.counts[3], 16);
        assert!(plan.spent() <= 2000);
    }

    #[test]
    fn large_scale_drives_quotas_uniform() {
        let cfg = LmcUcbConfig::new(4, 1000, 0.1, ConfidenceSource::Override(1e9));
        let plan = allocate(&[0.0, 1.0, 5.0, 10.0], &cfg, 4, 1);
        for c in plan.quotas {
            assert!(close(c, 246.0, 1e-6), "{c}");
        }
    }

    #[test]
    fn config_validation() {
        let ok = LmcUcbConfig::new(10, 100, 0.1, ConfidenceSource::GradBound(1.0));
        assert_eq!(ok.validate(1).unwrap().1, 3);
        let small = LmcUcbConfig::new(10, 39, 0.1, ConfidenceSource::GradBound(1.0));
        assert!(matches!(small.validate(1), Err(Error::InvalidConfig(_))));
        let not_power = LmcUcbConfig::new(10, 1000, 0.1, ConfidenceSource::GradBound(1.0));
        assert!(matches!(
            not_power.validate(2),
            Err(Error::NotPerfectPower { .. })
        ));
        // n >= 4K but S̄ = 1 in d = 2
        let thin = LmcUcbConfig::new(4, 16, 0.1, ConfidenceSource::GradBound(1.0));
        assert!(matches!(thin.validate(2), Err(Error::InvalidConfig(_))));
        let bad_delta = LmcUcbConfig::new(1, 100, 1.0, ConfidenceSource::GradBound(1.0));
        assert!(bad_delta.validate(1).is_err());
        let bad_a = LmcUcbConfig::new(1, 100, 0.5, ConfidenceSource::Override(f64::NAN));
        assert!(bad_a.validate(1).is_err());
    }

    #[test]
    fn single_stratum_run_spends_whole_budget() {
        let f = by_name("linear1d").unwrap();
        let cfg = LmcUcbConfig::new(1, 100, 0.1, ConfidenceSource::GradBound(1.0));
        let r = lmc_ucb(&f, &cfg, RngSpec::new(5, 0)).unwrap();
        assert_eq!(r.sbar, Some(10));
        assert_eq!(r.strata[0].substrata, 90);
        assert_eq!(r.samples_used, 100);
        assert_eq!(
            r.ledger,
            SampleLedger {
                initialization: 10,
                main: 90,
                leftover: 0
            }
        );
    }

    #[test]
    fn constant_integrand_is_exact_under_both_policies() {
        for policy in [LeftoverPolicy::Discard, LeftoverPolicy::UniformRefill] {
            let f = Integrand::constant(2, 0.1);
            let cfg = LmcUcbConfig::new(4, 500, 0.1, ConfidenceSource::GradBound(1.0))
                .with_leftover(policy);
            let r = lmc_ucb(&f, &cfg, RngSpec::new(5, 0)).unwrap();
            assert_eq!(r.estimate, 0.1);
            assert!(r.strata.iter().all(|s| s.sigma_hat == 0.0));
        }
    }

    #[test]
    fn refill_spends_the_full_budget() {
        let f = by_name("oscillator1d").unwrap();
        let cfg = LmcUcbConfig::new(10, 100, 0.1, ConfidenceSource::Override(10.0))
            .with_leftover(LeftoverPolicy::UniformRefill);
        let (r, trace) = lmc_ucb_traced(&f, &cfg, RngSpec::new(1, 1)).unwrap();
        assert_eq!(r.samples_used, 100);
        assert_eq!(trace.len(), 100);
        assert_eq!(
            r.ledger.leftover,
            trace.iter().filter(|t| t.phase == Phase::Leftover).count() as u64
        );
        let per_stratum: u64 = r.strata.iter().map(|s| s.points).sum();
        assert_eq!(per_stratum, 100);
    }

    #[test]
    fn traced_points_stay_in_their_stratum() {
        let f = by_name("sinprod2d").unwrap();
        let cfg = LmcUcbConfig::new(
            4,
            400,
            0.1,
            ConfidenceSource::GradBound(std::f64::consts::PI),
        );
        let (r, trace) = lmc_ucb_traced(&f, &cfg, RngSpec::new(2, 0)).unwrap();
        let p = HyperCubePartition::new(2, 4).unwrap();
        for t in &trace {
            assert!(p.stratum_box(t.stratum).unwrap().contains(&t.x));
        }
        assert_eq!(trace.len() as u64, r.samples_used);
    }

    #[test]
    fn lemma3_bound_examples() {
        let cfg = LmcUcbConfig::new(4, 100, 0.05, ConfidenceSource::GradBound(1.0));
        let b = lemma3_lower_bound(&[0.25; 4], 0.5, &cfg, 1.0, 1);
        assert!(b.iter().all(|&v| v == sbar(100, 4, 1) as f64));

        let cfg = LmcUcbConfig::new(1, 1_000_000, 0.05, ConfidenceSource::GradBound(1.0));
        let b = lemma3_lower_bound(&[1.0], 2.0, &cfg, 1.0, 1);
        let expected = 1e6 - 7.0 * 2.0 * (1.0f64 / 0.05).ln().sqrt() * 1.5 * 1e3;
        assert!(close(b[0], expected, 1e-12));
    }
}
