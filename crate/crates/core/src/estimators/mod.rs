//! Sampling estimators under a shared budget ledger.
//!
//! Every estimator is a pure function of `(integrand, configuration, RngSpec)`,
//! so replications can run on any number of threads.
//!
//! Means are accumulated as deviations from the first evaluation, which makes
//! every estimator return a constant integrand's value bit-exactly.

mod lmc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_subcell, HyperCubePartition};
use crate::integrand::Integrand;
use crate::numeric::CompensatedSum;
use crate::rng::{tag, RngSpec};

pub use lmc::{
    allocate, confidence_scale, empirical_std, lemma3_lower_bound, lmc_ucb, lmc_ucb_traced, sbar,
    ConfidenceSource, LeftoverPolicy, LmcUcbConfig, Phase, TracePoint, TwoLayerPlan,
};

/// Points spent per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleLedger {
    pub initialization: u64,
    pub main: u64,
    pub leftover: u64,
}

impl SampleLedger {
    pub fn total(&self) -> u64 {
        self.initialization + self.main + self.leftover
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    /// Empirical standard deviation after initialization.
    pub sigma_hat: f64,
    /// Sub-strata count `S_k`.
    pub substrata: u64,
    /// Points drawn inside the stratum over all phases.
    pub points: u64,
    /// Pre-rounding quota `C_k`.
    pub quota: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub budget: u64,
    pub samples_used: u64,
    pub ledger: SampleLedger,
    /// Initialization sub-strata per stratum (adaptive runs only).
    pub sbar: Option<u64>,
    pub confidence_scale: Option<f64>,
    pub strata: Vec<StratumReport>,
}

impl EstimateReport {
    fn single_phase(estimate: f64, n: u64) -> Self {
        Self {
            estimate,
            budget: n,
            samples_used: n,
            ledger: SampleLedger {
                initialization: 0,
                main: n,
                leftover: 0,
            },
            sbar: None,
            confidence_scale: None,
            strata: Vec::new(),
        }
    }
}

/// Running mean anchored at the first value it sees.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct AnchoredMean {
    anchor: Option<f64>,
    deviations: CompensatedSum,
    count: u64,
}

impl AnchoredMean {
    pub(crate) fn push(&mut self, v: f64) {
        let a = *self.anchor.get_or_insert(v);
        self.deviations.add(v - a);
        self.count += 1;
    }

    pub(crate) fn mean(&self) -> f64 {
        match self.anchor {
            Some(a) => a + self.deviations.value() / self.count as f64,
            None => 0.0,
        }
    }
}

/// `(1/n) sum f(U_i)` with `U_i` i.i.d. uniform on `[0,1]^d`.
pub fn crude_mc(f: &Integrand, n: u64, rng: RngSpec) -> Result<EstimateReport> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "crude Monte-Carlo needs n >= 1".into(),
        ));
    }
    let mut r = rng.substream(&[tag::CRUDE]);
    let mut x = vec![0.0; f.dim()];
    let mut acc = AnchoredMean::default();
    for _ in 0..n {
        x.iter_mut().for_each(|v| *v = r.random::<f64>());
        acc.push(f.eval(&x));
    }
    Ok(EstimateReport::single_phase(acc.mean(), n))
}

/// One uniform point in each of `n` equal hyper-cubes; `n` must be a perfect `d`-th power.
pub fn uniform_stratified(f: &Integrand, n: u64, rng: RngSpec) -> Result<EstimateReport> {
    let strata =
        usize::try_from(n).map_err(|_| Error::InvalidConfig(format!("n={n} too large")))?;
    let partition = HyperCubePartition::new(f.dim(), strata)?;
    let l = partition.cells_per_axis();
    let mut r = rng.substream(&[tag::UNIFORM]);
    let mut x = vec![0.0; f.dim()];
    let mut coords = vec![0u64; f.dim()];
    let mut acc = AnchoredMean::default();
    for k in 0..n {
        let mut rest = k;
        for c in coords.iter_mut().rev() {
            *c = rest % l;
            rest /= l;
        }
        sample_subcell(&coords, l, 1, 0, &mut r, &mut x);
        acc.push(f.eval(&x));
    }
    Ok(EstimateReport::single_phase(acc.mean(), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrand::by_name;

    #[test]
    fn constants_are_exact() {
        for c in [0.1, -3.7, 1e-300, 12345.678] {
            let f = Integrand::constant(2, c);
            assert_eq!(crude_mc(&f, 37, RngSpec::new(1, 2)).unwrap().estimate, c);
            assert_eq!(
                uniform_stratified(&f, 49, RngSpec::new(1, 2))
                    .unwrap()
                    .estimate,
                c
            );
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let f = by_name("oscillator1d").unwrap();
        let a = crude_mc(&f, 1000, RngSpec::new(9, 1)).unwrap();
        let b = crude_mc(&f, 1000, RngSpec::new(9, 1)).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        let c = crude_mc(&f, 1000, RngSpec::new(9, 2)).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn uniform_stratified_rejects_non_powers() {
        let f = by_name("sinprod2d").unwrap();
        assert_eq!(
            uniform_stratified(&f, 10, RngSpec::new(0, 0)).unwrap_err(),
            Error::NotPerfectPower { value: 10, dim: 2 }
        );
        assert!(crude_mc(&f, 0, RngSpec::new(0, 0)).is_err());
    }

    #[test]
    fn ledgers_account_for_every_point() {
        let f = by_name("sinprod2d").unwrap();
        let r = uniform_stratified(&f, 64, RngSpec::new(3, 0)).unwrap();
        assert_eq!(r.samples_used, 64);
        assert_eq!(r.ledger.total(), 64);
        assert!((r.estimate - 4.0 / (std::f64::consts::PI.powi(2))).abs() < 0.05);
    }
}
