//! Experiment configuration: a flat key-value JSON file, overridable flag by flag.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use lmc_core::integrand::by_name;
use lmc_core::numeric::floor_root;
use lmc_core::{ConfidenceSource, Integrand, LeftoverPolicy};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Crude,
    Uniform,
    Lmcucb,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [Self::Crude, Self::Uniform, Self::Lmcucb];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Crude => "crude",
            Self::Uniform => "uniform",
            Self::Lmcucb => "lmcucb",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        match self {
            Self::Crude => 1,
            Self::Uniform => 2,
            Self::Lmcucb => 3,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "crude" => Ok(Self::Crude),
            "uniform" => Ok(Self::Uniform),
            "lmcucb" | "lmc-ucb" | "lmc" => Ok(Self::Lmcucb),
            other => Err(HarnessError::Config(format!("unknown estimator `{other}`"))),
        }
    }
}

/// Number of strata for LMC-UCB at budget `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrataPolicy {
    Fixed(usize),
    /// `K_n = floor(sqrt(n)^(1/d))^d`.
    Theorem4,
}

impl StrataPolicy {
    pub fn strata(self, n: u64, dim: usize) -> usize {
        match self {
            Self::Fixed(k) => k,
            Self::Theorem4 => theorem4_strata(n, dim),
        }
    }
}

/// `floor(sqrt(n)^(1/d))^d`: the largest `m^d` with `(m^d)^2 <= n`.
pub fn theorem4_strata(n: u64, dim: usize) -> usize {
    let m = floor_root(n, 2 * dim as u32);
    m.pow(dim as u32) as usize
}

impl FromStr for StrataPolicy {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "theorem4" | "auto" => Ok(Self::Theorem4),
            v => v.parse().map(Self::Fixed).map_err(|_| {
                HarnessError::Config(format!("--K expects an integer or `theorem4`, got `{v}`"))
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolicy {
    Fixed(f64),
    /// `delta_n = 1 / n^2`.
    InverseSquare,
}

impl DeltaPolicy {
    pub fn delta(self, n: u64) -> f64 {
        match self {
            Self::Fixed(d) => d,
            Self::InverseSquare => 1.0 / (n as f64 * n as f64),
        }
    }
}

impl FromStr for DeltaPolicy {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inv_n2" | "1/n^2" => Ok(Self::InverseSquare),
            v => v.parse().map(Self::Fixed).map_err(|_| {
                HarnessError::Config(format!("--delta expects a number or `inv_n2`, got `{v}`"))
            }),
        }
    }
}

/// Where LMC-UCB's confidence scale comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleSource {
    /// Gradient bound `L`; `None` uses the integrand's declared bound.
    FromL(Option<f64>),
    Override(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            v => Err(HarnessError::Config(format!("unknown format `{v}`"))),
        }
    }
}

fn parse_leftover(s: &str) -> Result<LeftoverPolicy> {
    match s.trim() {
        "discard" => Ok(LeftoverPolicy::Discard),
        "uniform_refill" | "refill" => Ok(LeftoverPolicy::UniformRefill),
        v => Err(HarnessError::Config(format!(
            "unknown leftover policy `{v}`"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub function: String,
    pub dim: usize,
    pub estimators: Vec<EstimatorKind>,
    pub budgets: Vec<u64>,
    pub reps: usize,
    pub delta: DeltaPolicy,
    pub strata: StrataPolicy,
    pub scale: ScaleSource,
    pub leftover: LeftoverPolicy,
    pub seed: u64,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
    /// Also measure the sub-strata lower-bound pass rate at every LMC-UCB budget.
    pub lemma3: bool,
}

impl ExperimentConfig {
    pub fn new(function: impl Into<String>, budgets: Vec<u64>, reps: usize) -> Self {
        Self {
            function: function.into(),
            dim: 0,
            estimators: EstimatorKind::ALL.to_vec(),
            budgets,
            reps,
            delta: DeltaPolicy::Fixed(0.05),
            strata: StrataPolicy::Theorem4,
            scale: ScaleSource::FromL(None),
            leftover: LeftoverPolicy::Discard,
            seed: 0,
            workers: 0,
            lemma3: false,
        }
    }

    /// Looks the integrand up and checks the configuration against it.
    pub fn integrand(&self) -> Result<Integrand> {
        let f = resolve_function(&self.function, self.dim)?;
        if self.reps < 2 {
            return Err(HarnessError::Config(format!(
                "need reps >= 2, got {}",
                self.reps
            )));
        }
        if self.budgets.is_empty() || self.budgets.contains(&0) {
            return Err(HarnessError::Config(
                "budgets must be positive and non-empty".into(),
            ));
        }
        if self.estimators.is_empty() {
            return Err(HarnessError::Config("no estimator selected".into()));
        }
        if let StrataPolicy::Fixed(k) = self.strata {
            lmc_core::HyperCubePartition::new(f.dim(), k)?;
        }
        Ok(f)
    }

    pub fn confidence(&self, f: &Integrand) -> Result<ConfidenceSource> {
        match self.scale {
            ScaleSource::Override(a) => Ok(ConfidenceSource::Override(a)),
            ScaleSource::FromL(Some(l)) => Ok(ConfidenceSource::GradBound(l)),
            ScaleSource::FromL(None) => {
                f.grad_bound()
                    .map(ConfidenceSource::GradBound)
                    .ok_or_else(|| {
                        HarnessError::Config(format!(
                            "`{}` has no gradient bound; pass --L or --A",
                            f.name()
                        ))
                    })
            }
        }
    }
}

/// Corpus lookup; `dim` (if non-zero) must match the integrand's dimension,
/// except for `constant`, which is built in any dimension.
pub fn resolve_function(name: &str, dim: usize) -> Result<Integrand> {
    if name == "constant" {
        return Ok(Integrand::constant(dim.max(1), 1.0));
    }
    let f = by_name(name).ok_or_else(|| HarnessError::UnknownFunction(name.to_string()))?;
    if dim != 0 && dim != f.dim() {
        return Err(HarnessError::Config(format!(
            "`{name}` is {}-dimensional, --d {dim} given",
            f.dim()
        )));
    }
    Ok(f)
}

/// Number or string, for JSON keys that accept either.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Num(f64),
    Str(String),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Num(v) => write!(f, "{v}"),
            Scalar::Str(s) => f.write_str(s),
        }
    }
}

/// Flat key-value settings shared by the config file and the command line.
/// Keys match the long flag names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSettings {
    #[serde(rename = "fn")]
    pub function: Option<String>,
    pub d: Option<usize>,
    pub n: Option<u64>,
    pub budgets: Option<Vec<u64>>,
    pub reps: Option<usize>,
    #[serde(rename = "K")]
    pub strata: Option<Scalar>,
    pub delta: Option<Scalar>,
    #[serde(rename = "L")]
    pub grad_bound: Option<f64>,
    #[serde(rename = "A")]
    pub scale: Option<f64>,
    pub leftover: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<String>,
    pub format: Option<String>,
    pub estimators: Option<Vec<String>>,
    pub estimator: Option<String>,
    pub lemma3: Option<bool>,
}

impl RawSettings {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// `other`'s set keys win.
    pub fn overridden_by(self, other: RawSettings) -> RawSettings {
        macro_rules! pick {
            ($($field:ident),*) => {
                RawSettings { $($field: other.$field.or(self.$field)),* }
            };
        }
        pick!(
            function, d, n, budgets, reps, strata, delta, grad_bound, scale, leftover, seed,
            workers, out, format, estimators, estimator, lemma3
        )
    }

    pub fn strata_policy(&self) -> Result<StrataPolicy> {
        match &self.strata {
            None => Ok(StrataPolicy::Theorem4),
            Some(v) => v.to_string().parse(),
        }
    }

    pub fn delta_policy(&self) -> Result<DeltaPolicy> {
        let p = match &self.delta {
            None => DeltaPolicy::Fixed(0.05),
            Some(v) => v.to_string().parse()?,
        };
        if let DeltaPolicy::Fixed(d) = p {
            if !(d > 0.0 && d < 1.0) {
                return Err(HarnessError::Config(format!(
                    "delta must be in (0, 1), got {d}"
                )));
            }
        }
        Ok(p)
    }

    pub fn scale_source(&self) -> Result<ScaleSource> {
        match (self.grad_bound, self.scale) {
            (Some(_), Some(_)) => Err(HarnessError::Config("set only one of --L and --A".into())),
            (_, Some(a)) => Ok(ScaleSource::Override(a)),
            (l, None) => Ok(ScaleSource::FromL(l)),
        }
    }

    pub fn leftover_policy(&self) -> Result<LeftoverPolicy> {
        self.leftover
            .as_deref()
            .map_or(Ok(LeftoverPolicy::Discard), parse_leftover)
    }

    pub fn output_format(&self) -> Result<OutputFormat> {
        match self.format.as_deref() {
            Some(f) => f.parse(),
            None => match self.out.as_deref() {
                Some(p) if p.ends_with(".json") => Ok(OutputFormat::Json),
                _ => Ok(OutputFormat::Csv),
            },
        }
    }

    pub fn function_name(&self) -> Result<&str> {
        self.function
            .as_deref()
            .ok_or_else(|| HarnessError::Config("--fn is required".into()))
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let budgets = match (&self.budgets, self.n) {
            (Some(b), _) => b.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => return Err(HarnessError::Config("--budgets is required".into())),
        };
        let estimators = match &self.estimators {
            Some(list) => list.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?,
            None => EstimatorKind::ALL.to_vec(),
        };
        let cfg = ExperimentConfig {
            function: self.function_name()?.to_string(),
            dim: self.d.unwrap_or(0),
            estimators,
            budgets,
            reps: self.reps.unwrap_or(1000),
            delta: self.delta_policy()?,
            strata: self.strata_policy()?,
            scale: self.scale_source()?,
            leftover: self.leftover_policy()?,
            seed: self.seed.unwrap_or(0),
            workers: self.workers.unwrap_or(0),
            lemma3: self.lemma3.unwrap_or(false),
        };
        cfg.integrand()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem4_strata_examples() {
        assert_eq!(theorem4_strata(100, 1), 10);
        assert_eq!(theorem4_strata(99, 1), 9);
        assert_eq!(theorem4_strata(400, 1), 20);
        assert_eq!(theorem4_strata(10_000, 2), 100);
        // sqrt(1000) = 31.6 -> 5^2 = 25 <= 31.6 < 36
        assert_eq!(theorem4_strata(1000, 2), 25);
        assert_eq!(theorem4_strata(64, 3), 8);
        assert_eq!(theorem4_strata(63, 3), 1);
    }

    #[test]
    fn flag_values_parse() {
        assert_eq!(
            "theorem4".parse::<StrataPolicy>().unwrap(),
            StrataPolicy::Theorem4
        );
        assert_eq!(
            "16".parse::<StrataPolicy>().unwrap(),
            StrataPolicy::Fixed(16)
        );
        assert!("x".parse::<StrataPolicy>().is_err());
        assert_eq!("inv_n2".parse::<DeltaPolicy>().unwrap().delta(10), 0.01);
        assert_eq!(
            "lmc-ucb".parse::<EstimatorKind>().unwrap(),
            EstimatorKind::Lmcucb
        );
    }

    #[test]
    fn file_keys_are_overridden_by_flags() {
        let file: RawSettings = serde_json::from_str(
            r#"{"fn": "linear1d", "budgets": [100, 400], "reps": 50, "K": "theorem4", "delta": 0.1, "A": 10}"#,
        )
        .unwrap();
        let flags = RawSettings {
            reps: Some(7),
            strata: Some(Scalar::Num(4.0)),
            ..Default::default()
        };
        let merged = file.overridden_by(flags);
        let cfg = merged.experiment().unwrap();
        assert_eq!(cfg.reps, 7);
        assert_eq!(cfg.budgets, vec![100, 400]);
        assert_eq!(cfg.strata, StrataPolicy::Fixed(4));
        assert_eq!(cfg.scale, ScaleSource::Override(10.0));
        assert_eq!(cfg.delta, DeltaPolicy::Fixed(0.1));
    }

    #[test]
    fn bad_settings_are_config_errors() {
        let unknown: std::result::Result<RawSettings, _> = serde_json::from_str(r#"{"bogus": 1}"#);
        assert!(unknown.is_err());
        let both = RawSettings {
            function: Some("linear1d".into()),
            budgets: Some(vec![100]),
            grad_bound: Some(1.0),
            scale: Some(2.0),
            ..Default::default()
        };
        assert_eq!(both.experiment().unwrap_err().exit_code(), 2);
        let dim = RawSettings {
            function: Some("linear1d".into()),
            d: Some(2),
            budgets: Some(vec![100]),
            ..Default::default()
        };
        assert_eq!(dim.experiment().unwrap_err().exit_code(), 2);
        let k = RawSettings {
            function: Some("sinprod2d".into()),
            strata: Some(Scalar::Num(10.0)),
            budgets: Some(vec![100]),
            ..Default::default()
        };
        assert_eq!(k.experiment().unwrap_err().exit_code(), 2);
    }
}
