//! Log-log convergence-rate fitting.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval on the slope.
    pub slope_ci: (f64, f64),
    pub points: usize,
}

/// Least-squares fit of `ln mse = intercept + slope ln n`.
///
/// Needs at least 4 distinct budgets with `max n / min n >= 10` and positive MSEs.
pub fn fit_rate(points: &[(u64, f64)]) -> Result<RateFit> {
    if let Some(&(_, bad)) = points.iter().find(|(_, m)| m.is_nan() || *m <= 0.0) {
        return Err(HarnessError::NonPositiveMse(bad));
    }
    let mut ns: Vec<u64> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    let (lo, hi) = (
        ns.first().copied().unwrap_or(0),
        ns.last().copied().unwrap_or(0),
    );
    if ns.len() < 4 || lo == 0 || (hi as f64) < 10.0 * lo as f64 {
        return Err(HarnessError::InsufficientSpan(format!("{ns:?}")));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = (rss / (m - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, m - 2.0)
        .expect("at least 2 degrees of freedom")
        .inverse_cdf(0.975);
    Ok(RateFit {
        slope,
        intercept,
        slope_ci: (slope - t * se, slope + t * se),
        points: points.len(),
    })
}
