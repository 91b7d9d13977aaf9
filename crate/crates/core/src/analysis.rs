//! Deterministic oracle quantities computed by quadrature.
//!
//! `Σ = (1/12) (∫ ||∇f||^(d/(d+1)))^(2(d+1)/d)` is the asymptotic floor of the
//! normalised risk of an oracle that knows every stratum's standard deviation;
//! `(1/12) ∫ ||∇f||²` is the matching constant for uniform stratification.
//! Quadrature grids automatically pick up the integrand's declared split points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::TwoLayerPlan;
use crate::geometry::{HyperBox, HyperCubePartition};
use crate::integrand::Integrand;
use crate::numeric::sum;
use crate::quadrature::QuadratureGrid;

fn grid_for(f: &Integrand, grid: &QuadratureGrid) -> Result<QuadratureGrid> {
    grid.clone().with_splits(f.splits().iter().copied())
}

/// `∫ ||∇f(x)||_2^p dx` over `[0,1]^d`.
pub fn grad_norm_integral(f: &Integrand, p: f64, grid: &QuadratureGrid) -> Result<f64> {
    if !f.has_gradient() {
        return Err(Error::MissingGradient(f.name().to_string()));
    }
    let grid = grid_for(f, grid)?;
    let mut scratch = vec![0.0; f.dim()];
    Ok(grid.integrate(&HyperBox::unit(f.dim()), |x| {
        f.grad_norm_into(x, &mut scratch)
            .expect("gradient checked above")
            .powf(p)
    }))
}

/// Oracle constant `Σ`.
pub fn sigma_big(f: &Integrand, grid: &QuadratureGrid) -> Result<f64> {
    let d = f.dim() as f64;
    let inner = grad_norm_integral(f, d / (d + 1.0), grid)?;
    Ok(inner.powf(2.0 * (d + 1.0) / d) / 12.0)
}

/// Uniform-stratification constant `(1/12) ∫ ||∇f||²`.
pub fn uniform_constant(f: &Integrand, grid: &QuadratureGrid) -> Result<f64> {
    Ok(grad_norm_integral(f, 2.0, grid)? / 12.0)
}

/// Mean of `f` over `bx`.
pub fn stratum_mean(f: &Integrand, bx: &HyperBox, grid: &QuadratureGrid) -> f64 {
    let grid = grid_for(f, grid).expect("integrand splits lie in (0, 1)");
    grid.integrate(bx, |x| f.eval(x)) / bx.measure()
}

/// Standard deviation of `f(X)` for `X` uniform on `bx`.
///
/// # Panics
/// If the grid has fewer than 32 nodes per axis.
pub fn stratum_sigma(f: &Integrand, bx: &HyperBox, grid: &QuadratureGrid) -> f64 {
    assert!(
        grid.nodes_per_axis >= 32,
        "stratum_sigma needs at least 32 nodes per axis"
    );
    let grid = grid_for(f, grid).expect("integrand splits lie in (0, 1)");
    let vol = bx.measure();
    let mean = grid.integrate(bx, |x| f.eval(x)) / vol;
    let var = grid.integrate(bx, |x| {
        let dv = f.eval(x) - mean;
        dv * dv
    }) / vol;
    var.max(0.0).sqrt()
}

/// `σ_k` for every stratum of `partition`.
pub fn stratum_sigmas(
    f: &Integrand,
    partition: &HyperCubePartition,
    grid: &QuadratureGrid,
) -> Vec<f64> {
    (0..partition.len())
        .map(|k| stratum_sigma(f, &partition.stratum_box(k).expect("k < K"), grid))
        .collect()
}

fn check_shapes(sigma: &[f64], weights: &[f64]) -> Result<()> {
    if sigma.len() != weights.len() || sigma.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} standard deviations, {} weights",
            sigma.len(),
            weights.len()
        )));
    }
    Ok(())
}

/// `Σ_K = Σ_k (w_k σ_k)^(d/(d+1))`.
pub fn sigma_k_sum(sigma: &[f64], weights: &[f64], dim: usize) -> Result<f64> {
    check_shapes(sigma, weights)?;
    let e = dim as f64 / (dim as f64 + 1.0);
    Ok(sum(sigma.iter().zip(weights).map(|(s, w)| (w * s).powf(e))))
}

/// Optimal proportions `λ_k ∝ (w_k σ_k)^(d/(d+1))`.
pub fn optimal_proportions(sigma: &[f64], weights: &[f64], dim: usize) -> Result<Vec<f64>> {
    let total = sigma_k_sum(sigma, weights, dim)?;
    if total <= 0.0 {
        return Err(Error::AllZeroVariation);
    }
    let e = dim as f64 / (dim as f64 + 1.0);
    Ok(sigma
        .iter()
        .zip(weights)
        .map(|(s, w)| (w * s).powf(e) / total)
        .collect())
}

/// `Σ_k Σ_i (w_k / S_k)² σ²_{k,i}` for an integer plan.
pub fn pseudo_risk(sigma_sub: &[Vec<f64>], plan: &TwoLayerPlan) -> Result<f64> {
    if sigma_sub.len() != plan.counts.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} strata of sub-sigmas for a {}-stratum plan",
            sigma_sub.len(),
            plan.counts.len()
        )));
    }
    let w = 1.0 / plan.counts.len() as f64;
    let mut terms = Vec::new();
    for (k, (subs, &s_k)) in sigma_sub.iter().zip(&plan.counts).enumerate() {
        if subs.len() as u64 != s_k {
            return Err(Error::ShapeMismatch(format!(
                "stratum {k}: {} sub-sigmas for S_k={s_k}",
                subs.len()
            )));
        }
        let c = (w / s_k as f64).powi(2);
        terms.extend(subs.iter().map(|s| c * s * s));
    }
    Ok(sum(terms))
}

/// Pseudo-risk with real-valued counts, for strata whose sub-strata standard
/// deviations scale as `σ_k S_k^(-1/d)` (exact for piecewise-linear integrands):
/// `Σ_k w_k² σ_k² S_k^(-1-2/d)`. Strata with `σ_k = 0` contribute nothing.
pub fn pseudo_risk_scaled(
    sigma: &[f64],
    weights: &[f64],
    counts: &[f64],
    dim: usize,
) -> Result<f64> {
    check_shapes(sigma, weights)?;
    if counts.len() != sigma.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} counts for {} strata",
            counts.len(),
            sigma.len()
        )));
    }
    let e = 1.0 + 2.0 / dim as f64;
    Ok(sum(sigma
        .iter()
        .zip(weights)
        .zip(counts)
        .filter(|((s, _), _)| **s > 0.0)
        .map(|((s, w), c)| (w * s).powi(2) / c.powf(e))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRisk {
    /// `(Σ_K)^(2(d+1)/d) / n^(1+2/d)`.
    pub risk: f64,
    /// Unrounded oracle counts `S*_k = λ_k n`.
    pub counts: Vec<f64>,
}

/// Oracle pseudo-risk and allocation for budget `n`.
pub fn oracle_risk(sigma: &[f64], weights: &[f64], n: f64, dim: usize) -> Result<OracleRisk> {
    let total = sigma_k_sum(sigma, weights, dim)?;
    let d = dim as f64;
    let counts = match optimal_proportions(sigma, weights, dim) {
        Ok(lambda) => lambda.iter().map(|l| l * n).collect(),
        Err(Error::AllZeroVariation) => vec![n / sigma.len() as f64; sigma.len()],
        Err(e) => return Err(e),
    };
    Ok(OracleRisk {
        risk: total.powf(2.0 * (d + 1.0) / d) / n.powf(1.0 + 2.0 / d),
        counts,
    })
}

/// `risk - Σ / n^(1+2/d)`.
pub fn pseudo_regret(risk: f64, sigma_big: f64, n: f64, dim: usize) -> f64 {
    risk - sigma_big / n.powf(1.0 + 2.0 / dim as f64)
}

/// Pointwise oracle sampling density `||∇f(x)||^(d/(d+1)) / ∫ ||∇f||^(d/(d+1))`.
/// A plotting aid; no estimator uses it.
pub fn optimal_density(
    f: &Integrand,
    points: &[Vec<f64>],
    grid: &QuadratureGrid,
) -> Result<Vec<f64>> {
    let d = f.dim() as f64;
    let e = d / (d + 1.0);
    let norm = grad_norm_integral(f, e, grid)?;
    let mut scratch = vec![0.0; f.dim()];
    points
        .iter()
        .map(|x| {
            let g = f.grad_norm_into(x, &mut scratch)?;
            Ok(if norm > 0.0 { g.powf(e) / norm } else { 1.0 })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub sigma_big: f64,
    pub sigma_k_sum: f64,
    /// `None` when every stratum has zero variation.
    pub lambda: Option<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub uniform_constant: f64,
    pub budget: u64,
    pub oracle_risk: f64,
}

/// Oracle quantities of `f` on `partition` for budget `n`.
pub fn oracle_summary(
    f: &Integrand,
    partition: &HyperCubePartition,
    n: u64,
    grid: &QuadratureGrid,
) -> Result<OracleSummary> {
    if partition.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: partition.dim(),
        });
    }
    let dim = f.dim();
    let sigma = stratum_sigmas(f, partition, grid);
    let weights = vec![partition.weight(); partition.len()];
    let lambda = match optimal_proportions(&sigma, &weights, dim) {
        Ok(l) => Some(l),
        Err(Error::AllZeroVariation) => None,
        Err(e) => return Err(e),
    };
    Ok(OracleSummary {
        sigma_big: sigma_big(f, grid)?,
        sigma_k_sum: sigma_k_sum(&sigma, &weights, dim)?,
        lambda,
        uniform_constant: uniform_constant(f, grid)?,
        budget: n,
        oracle_risk: oracle_risk(&sigma, &weights, n as f64, dim)?.risk,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrand::{by_name, PiecewiseLinearSpec};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn grad_norm_integral_examples() {
        let g = QuadratureGrid::gauss_legendre(4096);
        assert_eq!(
            grad_norm_integral(&Integrand::constant(1, 2.0), 0.5, &g).unwrap(),
            0.0
        );
        assert!(
            rel(
                grad_norm_integral(&by_name("linear1d").unwrap(), 0.5, &g).unwrap(),
                1.0
            ) < 1e-14
        );
        let q = grad_norm_integral(&by_name("quadratic1d").unwrap(), 0.5, &g).unwrap();
        assert!(rel(q, 2.0 * 2f64.sqrt() / 3.0) < 1e-7, "{q}");
        let bare = Integrand::new("bare", 1, |x| x[0]);
        assert_eq!(
            grad_norm_integral(&bare, 1.0, &g),
            Err(Error::MissingGradient("bare".into()))
        );
        let fd = bare.with_fd_gradient(1e-5);
        assert!(rel(grad_norm_integral(&fd, 1.0, &g).unwrap(), 1.0) < 1e-9);
    }

    #[test]
    fn sigma_big_and_uniform_constant_examples() {
        let g = QuadratureGrid::gauss_legendre(4096);
        let lin = by_name("linear1d").unwrap();
        assert!(rel(sigma_big(&lin, &g).unwrap(), 1.0 / 12.0) < 1e-12);
        assert!(rel(uniform_constant(&lin, &g).unwrap(), 1.0 / 12.0) < 1e-12);
        let quad = by_name("quadratic1d").unwrap();
        assert!(rel(sigma_big(&quad, &g).unwrap(), 16.0 / 243.0) < 1e-6);
        assert!(rel(uniform_constant(&quad, &g).unwrap(), 1.0 / 9.0) < 1e-12);
        let c = Integrand::constant(2, 1.0);
        assert_eq!(
            sigma_big(&c, &QuadratureGrid::gauss_legendre(64)).unwrap(),
            0.0
        );
        assert_eq!(
            uniform_constant(&c, &QuadratureGrid::gauss_legendre(64)).unwrap(),
            0.0
        );
    }

    #[test]
    fn stratum_sigma_examples() {
        let g = QuadratureGrid::gauss_legendre(64);
        let c = Integrand::constant(2, 3.0);
        let bx = HyperBox {
            lower: vec![0.1, 0.2],
            upper: vec![0.3, 0.4],
        };
        assert_eq!(stratum_sigma(&c, &bx, &g), 0.0);
        let lin = by_name("linear1d").unwrap();
        assert!(
            rel(
                stratum_sigma(&lin, &HyperBox::unit(1), &g),
                (1.0f64 / 12.0).sqrt()
            ) < 1e-13
        );
    }

    #[test]
    fn optimal_proportions_examples() {
        let eq = optimal_proportions(&[2.0; 5], &[0.2; 5], 3).unwrap();
        assert!(eq.iter().all(|&l| (l - 0.2).abs() < 1e-15));
        let l = optimal_proportions(&[1.0, 4.0], &[0.5, 0.5], 1).unwrap();
        assert!((l[0] - 1.0 / 3.0).abs() < 1e-15 && (l[1] - 2.0 / 3.0).abs() < 1e-15);
        let l = optimal_proportions(&[1.0, 8.0], &[0.5, 0.5], 2).unwrap();
        assert!((l[0] - 0.2).abs() < 1e-15 && (l[1] - 0.8).abs() < 1e-15);
        assert_eq!(
            optimal_proportions(&[0.0, 0.0], &[0.5, 0.5], 1),
            Err(Error::AllZeroVariation)
        );
        assert!(optimal_proportions(&[1.0], &[0.5, 0.5], 1).is_err());
    }

    #[test]
    fn pseudo_risk_examples() {
        let plan = TwoLayerPlan {
            sbar: 1,
            counts: vec![2, 1],
            quotas: vec![2.0, 1.0],
        };
        assert_eq!(pseudo_risk(&[vec![0.0; 2], vec![0.0]], &plan).unwrap(), 0.0);
        assert!(pseudo_risk(&[vec![0.0; 2]], &plan).is_err());
        assert!(pseudo_risk(&[vec![0.0; 3], vec![0.0]], &plan).is_err());

        // K = 1, theta = 1, S = 4: four sub-strata with sigma^2 = (1/12)(1/4)^2
        let spec = PiecewiseLinearSpec::new(
            HyperCubePartition::new(1, 1).unwrap(),
            vec![vec![1.0]],
            vec![0.0],
        )
        .unwrap();
        let sub = spec.sigma(0).unwrap() / 4.0;
        let plan = TwoLayerPlan {
            sbar: 4,
            counts: vec![4],
            quotas: vec![4.0],
        };
        let r = pseudo_risk(&[vec![sub; 4]], &plan).unwrap();
        assert!(rel(r, 1.0 / 768.0) < 1e-14);
        let scaled = pseudo_risk_scaled(&[spec.sigma(0).unwrap()], &[1.0], &[4.0], 1).unwrap();
        assert!(rel(scaled, 1.0 / 768.0) < 1e-14);
    }

    #[test]
    fn oracle_risk_examples() {
        let r = oracle_risk(&[1.0], &[1.0], 100.0, 1).unwrap();
        assert!(rel(r.risk, 1e-6) < 1e-13);
        assert_eq!(r.counts, vec![100.0]);

        // equal slopes: oracle equals uniform allocation
        let sig = [0.3; 4];
        let w = [0.25; 4];
        let o = oracle_risk(&sig, &w, 400.0, 1).unwrap();
        let u = pseudo_risk_scaled(&sig, &w, &[100.0; 4], 1).unwrap();
        assert!(rel(o.risk, u) < 1e-13);
    }

    #[test]
    fn pseudo_regret_examples() {
        assert_eq!(pseudo_regret(2.0 / 1000.0, 2.0, 10.0, 1), 0.0);
        let sig = [0.1, 0.4];
        let w = [0.5, 0.5];
        let uniform = pseudo_risk_scaled(&sig, &w, &[50.0, 50.0], 1).unwrap();
        let oracle = oracle_risk(&sig, &w, 100.0, 1).unwrap().risk;
        assert!(uniform > oracle);
    }

    #[test]
    fn density_integrates_to_one() {
        let f = by_name("quadratic1d").unwrap();
        let g = QuadratureGrid::gauss_legendre(1024);
        let xs: Vec<Vec<f64>> = (0..2000).map(|i| vec![(i as f64 + 0.5) / 2000.0]).collect();
        let dens = optimal_density(&f, &xs, &g).unwrap();
        let mass: f64 = dens.iter().sum::<f64>() / 2000.0;
        assert!((mass - 1.0).abs() < 1e-4);
    }
}
