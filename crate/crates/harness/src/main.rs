use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lmc_core::analysis::oracle_summary;
use lmc_core::{
    crude_mc, lmc_ucb, uniform_stratified, EstimateReport, HyperCubePartition, LmcUcbConfig,
    RngSpec,
};
use lmc_harness::bench::{oracle_grid, run_benchmark};
use lmc_harness::config::{
    resolve_function, theorem4_strata, EstimatorKind, RawSettings, Scalar, StrataPolicy,
};
use lmc_harness::emit::{emit, parse_csv, write_output};
use lmc_harness::{fit_rate, verify_lemma3, HarnessError, Lemma3Outcome, Result};

#[derive(Parser)]
#[command(
    name = "lmc",
    version,
    about = "Adaptive stratified Monte-Carlo integration on [0,1]^d"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one estimate and print it with its sample ledger.
    Integrate(Flags),
    /// Sweep budgets and estimators; write per-(estimator, n) MSE as CSV or JSON.
    Benchmark(Flags),
    /// Fit log-log MSE slopes from a CSV written by `benchmark`.
    Rates { csv: PathBuf },
    /// Print oracle constants for a function and stratum count.
    Oracle(Flags),
    /// Measure how often every stratum meets the sub-strata lower bound.
    #[command(name = "verify-lemma3")]
    VerifyLemma3(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// Flat JSON file with default values for any of these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "fn")]
    function: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    n: Option<u64>,
    /// Comma-separated budget list.
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<u64>>,
    #[arg(long)]
    reps: Option<usize>,
    /// Stratum count, or `theorem4` for floor(sqrt(n)^(1/d))^d.
    #[arg(long = "K")]
    strata: Option<String>,
    /// Confidence level, or `inv_n2` for 1/n^2.
    #[arg(long)]
    delta: Option<String>,
    /// Gradient-norm bound.
    #[arg(long = "L")]
    grad_bound: Option<f64>,
    /// Confidence scale, overriding the one derived from L.
    #[arg(long = "A")]
    scale: Option<f64>,
    /// `discard` or `uniform_refill`.
    #[arg(long)]
    leftover: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
    /// Comma-separated subset of crude,uniform,lmcucb.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// Single estimator for `integrate`.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    lemma3: bool,
}

impl Flags {
    fn settings(self) -> Result<RawSettings> {
        let base = match &self.config {
            Some(p) => RawSettings::from_json_file(p)?,
            None => RawSettings::default(),
        };
        let flags = RawSettings {
            function: self.function,
            d: self.d,
            n: self.n,
            budgets: self.budgets,
            reps: self.reps,
            strata: self.strata.map(Scalar::Str),
            delta: self.delta.map(Scalar::Str),
            grad_bound: self.grad_bound,
            scale: self.scale,
            leftover: self.leftover,
            seed: self.seed,
            workers: self.workers,
            out: self.out.map(|p| p.to_string_lossy().into_owned()),
            format: self.format,
            estimators: self.estimators,
            estimator: self.estimator,
            lemma3: self.lemma3.then_some(true),
        };
        Ok(base.overridden_by(flags))
    }
}

fn lmc_config(s: &RawSettings, n: u64) -> Result<(lmc_core::Integrand, LmcUcbConfig)> {
    let cfg = s.clone().overridden_by(RawSettings {
        budgets: Some(vec![n]),
        reps: Some(s.reps.unwrap_or(2).max(2)),
        ..Default::default()
    });
    let exp = cfg.experiment()?;
    let f = exp.integrand()?;
    let strata = exp.strata.strata(n, f.dim());
    let lmc = LmcUcbConfig::new(strata, n, exp.delta.delta(n), exp.confidence(&f)?)
        .with_leftover(exp.leftover);
    Ok((f, lmc))
}

fn print_report(name: &str, exact: Option<f64>, r: &EstimateReport) {
    println!("function      {name}");
    println!("estimate      {:.17e}", r.estimate);
    if let Some(mu) = exact {
        println!("exact         {mu:.17e}");
        println!("error         {:.6e}", r.estimate - mu);
    }
    println!("budget        {}", r.budget);
    println!("samples_used  {}", r.samples_used);
    println!(
        "ledger        init={} main={} leftover={}",
        r.ledger.initialization, r.ledger.main, r.ledger.leftover
    );
    if let Some(sbar) = r.sbar {
        println!("sbar          {sbar}");
    }
    if let Some(a) = r.confidence_scale {
        println!("A             {a:.6}");
    }
    if !r.strata.is_empty() {
        println!(
            "{:>6} {:>14} {:>8} {:>8} {:>12}",
            "k", "sigma_hat", "S_k", "points", "quota"
        );
        for (k, s) in r.strata.iter().enumerate() {
            println!(
                "{k:>6} {:>14.6e} {:>8} {:>8} {:>12.3}",
                s.sigma_hat, s.substrata, s.points, s.quota
            );
        }
    }
}

fn integrate(flags: Flags) -> Result<()> {
    let s = flags.settings()?;
    let n =
        s.n.or_else(|| s.budgets.as_ref().and_then(|b| b.first().copied()))
            .ok_or_else(|| HarnessError::Config("--n is required".into()))?;
    let kind: EstimatorKind = s.estimator.as_deref().unwrap_or("lmcucb").parse()?;
    let rng = RngSpec::new(s.seed.unwrap_or(0), 0);
    let (f, report) = match kind {
        EstimatorKind::Lmcucb => {
            let (f, cfg) = lmc_config(&s, n)?;
            let r = lmc_ucb(&f, &cfg, rng)?;
            (f, r)
        }
        EstimatorKind::Crude => {
            let f = resolve_function(s.function_name()?, s.d.unwrap_or(0))?;
            let r = crude_mc(&f, n, rng)?;
            (f, r)
        }
        EstimatorKind::Uniform => {
            let f = resolve_function(s.function_name()?, s.d.unwrap_or(0))?;
            let r = uniform_stratified(&f, n, rng)?;
            (f, r)
        }
    };
    print_report(f.name(), f.exact_integral(), &report);
    Ok(())
}

fn benchmark(flags: Flags) -> Result<()> {
    let s = flags.settings()?;
    let cfg = s.experiment()?;
    let report = run_benchmark(&cfg)?;
    let bytes = emit(&report, s.output_format()?)?;
    write_output(&bytes, s.out.as_deref().map(std::path::Path::new))?;
    for skip in &report.skipped {
        eprintln!("skipped {} n={}: {}", skip.estimator, skip.n, skip.reason);
    }
    Ok(())
}

fn rates(csv: PathBuf) -> Result<()> {
    let rows = parse_csv(&std::fs::read(&csv)?)?;
    let mut kinds: Vec<EstimatorKind> = rows.iter().map(|r| r.estimator).collect();
    kinds.sort();
    kinds.dedup();
    println!("estimator,slope,ci_low,ci_high,intercept,points");
    for kind in kinds {
        let pts: Vec<(u64, f64)> = rows
            .iter()
            .filter(|r| r.estimator == kind)
            .map(|r| (r.n, r.mse))
            .collect();
        let fit = fit_rate(&pts)?;
        println!(
            "{kind},{:.6},{:.6},{:.6},{:.6},{}",
            fit.slope, fit.slope_ci.0, fit.slope_ci.1, fit.intercept, fit.points
        );
    }
    Ok(())
}

fn oracle(flags: Flags) -> Result<()> {
    let s = flags.settings()?;
    let f = resolve_function(s.function_name()?, s.d.unwrap_or(0))?;
    let n = s.n.unwrap_or(1000);
    let strata = match s.strata_policy()? {
        StrataPolicy::Fixed(k) => k,
        StrataPolicy::Theorem4 => theorem4_strata(n, f.dim()),
    };
    let partition = HyperCubePartition::new(f.dim(), strata)?;
    let summary = oracle_summary(&f, &partition, n, &oracle_grid(f.dim()))?;
    let d = f.dim() as f64;
    println!("function          {}", f.name());
    println!("K                 {strata}");
    println!("Sigma             {:.17e}", summary.sigma_big);
    println!("Sigma_K           {:.17e}", summary.sigma_k_sum);
    println!("uniform_constant  {:.17e}", summary.uniform_constant);
    println!("n                 {n}");
    println!("oracle_risk       {:.17e}", summary.oracle_risk);
    println!(
        "Sigma/n^(1+2/d)   {:.17e}",
        summary.sigma_big / (n as f64).powf(1.0 + 2.0 / d)
    );
    match &summary.lambda {
        Some(l) => {
            println!("{:>6} {:>14} {:>14}", "k", "sigma_k", "lambda_k");
            for (k, (s, l)) in summary.sigma.iter().zip(l).enumerate() {
                println!("{k:>6} {s:>14.6e} {l:>14.6e}");
            }
        }
        None => println!("lambda            undefined (all sigma_k = 0)"),
    }
    Ok(())
}

fn lemma3(flags: Flags) -> Result<()> {
    let s = flags.settings()?;
    let n =
        s.n.ok_or_else(|| HarnessError::Config("--n is required".into()))?;
    let reps = s.reps.unwrap_or(2000);
    let (f, cfg) = lmc_config(&s, n)?;
    let outcome = verify_lemma3(&f, &cfg, reps, s.seed.unwrap_or(0), s.workers.unwrap_or(0))?;
    match outcome {
        Lemma3Outcome::Checked {
            reps,
            passes,
            pass_rate,
            bound,
        } => {
            let delta = cfg.delta;
            let floor = 1.0 - delta - 3.0 * (delta * (1.0 - delta) / reps as f64).sqrt();
            println!("function   {}", f.name());
            println!("n          {n}");
            println!("K          {}", cfg.strata);
            println!("delta      {delta}");
            println!("passes     {passes}/{reps}");
            println!("pass_rate  {pass_rate:.6}");
            println!("threshold  {floor:.6}");
            println!("bound      {:?}", bound);
        }
        Lemma3Outcome::NotApplicable => {
            println!("not applicable: every stratum has zero variation")
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Integrate(f) => integrate(f),
        Command::Benchmark(f) => benchmark(f),
        Command::Rates { csv } => rates(csv),
        Command::Oracle(f) => oracle(f),
        Command::VerifyLemma3(f) => lemma3(f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
