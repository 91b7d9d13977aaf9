//! Adaptive two-layer stratified Monte-Carlo integration on `[0,1]^d`.
//!
//! The crate is organised around four pieces:
//!
//! * [`geometry`]: equal hyper-cubic partitions of the unit cube and their
//!   per-stratum sub-partitions, with row-major indexing and point location.
//! * [`integrand`]: the integrand model and a named corpus of test functions.
//! * [`estimators`]: crude Monte-Carlo, uniform stratified Monte-Carlo and the
//!   adaptive LMC-UCB sampler, all driven by a seeded [`rng::RngSpec`].
//! * [`analysis`]: deterministic oracle quantities computed by quadrature
//!   (oracle constants, optimal proportions, pseudo-risk and pseudo-regret).

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod integrand;
pub mod numeric;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use estimators::{
    allocate, confidence_scale, crude_mc, empirical_std, lemma3_lower_bound, lmc_ucb,
    lmc_ucb_traced, sbar, uniform_stratified, ConfidenceSource, EstimateReport, LeftoverPolicy,
    LmcUcbConfig, Phase, SampleLedger, StratumReport, TracePoint, TwoLayerPlan,
};
pub use geometry::{HyperBox, HyperCubePartition, SubStratification};
pub use integrand::{corpus, Integrand, PiecewiseLinearSpec};
pub use quadrature::{QuadratureGrid, QuadratureRule};
pub use rng::RngSpec;
