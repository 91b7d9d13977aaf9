//! Integrands on `[0,1]^d` and the named test corpus.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::HyperCubePartition;

pub type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Integral of the oscillator `sin(1/(x+0.1)) + 1{x>0.9} sin(1/(x-0.7))` on `[0,1]`.
///
/// Composite 8-point Gauss-Legendre with 2^20 nodes, split at 0.9; agrees
/// with a 30-digit adaptive reference to 1e-16.
pub const OSCILLATOR_INTEGRAL: f64 = 0.524_309_003_835_742_2;

/// `1.1 * max |f'|` of the oscillator over the grid `{j / 10^6}`.
pub const OSCILLATOR_GRAD_BOUND: f64 = 99.869_985_619_878_8;

/// A real function on `[0,1]^d` with optional analytic side information.
#[derive(Clone)]
pub struct Integrand {
    name: String,
    dim: usize,
    eval: EvalFn,
    gradient: Option<GradientFn>,
    exact_integral: Option<f64>,
    grad_bound: Option<f64>,
    splits: Vec<f64>,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrand")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("gradient", &self.gradient.is_some())
            .field("exact_integral", &self.exact_integral)
            .field("grad_bound", &self.grad_bound)
            .finish()
    }
}

impl Integrand {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            gradient: None,
            exact_integral: None,
            grad_bound: None,
            splits: Vec::new(),
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    pub fn with_exact_integral(mut self, value: f64) -> Self {
        self.exact_integral = Some(value);
        self
    }

    /// Uniform bound on the Euclidean norm of the gradient.
    pub fn with_grad_bound(mut self, bound: f64) -> Self {
        self.grad_bound = Some(bound);
        self
    }

    /// Coordinates (shared by all axes) where the integrand or its gradient jumps.
    pub fn with_splits(mut self, splits: impl IntoIterator<Item = f64>) -> Self {
        self.splits.extend(splits);
        self
    }

    /// Replaces any gradient by central finite differences of `eval` with step `h`.
    pub fn with_fd_gradient(mut self, h: f64) -> Self {
        let eval = self.eval.clone();
        self.gradient = Some(Arc::new(move |x: &[f64], out: &mut [f64]| {
            let mut probe = x.to_vec();
            for j in 0..x.len() {
                probe[j] = x[j] + h;
                let fp = eval(&probe);
                probe[j] = x[j] - h;
                let fm = eval(&probe);
                probe[j] = x[j];
                out[j] = (fp - fm) / (2.0 * h);
            }
        }));
        self
    }

    /// `f(x) = c` on `[0,1]^dim`.
    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(format!("constant{dim}d"), dim, move |_| c)
            .with_gradient(|_, g| g.fill(0.0))
            .with_exact_integral(c)
            .with_grad_bound(0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let g = self.gradient.as_ref()?;
        let mut out = vec![0.0; self.dim];
        g(x, &mut out);
        Some(out)
    }

    /// `||grad f(x)||_2`, writing the gradient into `scratch`.
    pub fn grad_norm_into(&self, x: &[f64], scratch: &mut [f64]) -> Result<f64> {
        let g = self
            .gradient
            .as_ref()
            .ok_or_else(|| Error::MissingGradient(self.name.clone()))?;
        g(x, scratch);
        Ok(scratch.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    pub fn exact_integral(&self) -> Option<f64> {
        self.exact_integral
    }

    pub fn grad_bound(&self) -> Option<f64> {
        self.grad_bound
    }

    pub fn splits(&self) -> &[f64] {
        &self.splits
    }
}

fn oscillator(x: f64) -> f64 {
    let base = (1.0 / (x + 0.1)).sin();
    if x > 0.9 {
        base + (1.0 / (x - 0.7)).sin()
    } else {
        base
    }
}

fn oscillator_derivative(x: f64) -> f64 {
    let u = x + 0.1;
    let base = -(1.0 / u).cos() / (u * u);
    if x > 0.9 {
        let v = x - 0.7;
        base - (1.0 / v).cos() / (v * v)
    } else {
        base
    }
}

/// `sin(1/(x+0.1)) + 1{x > 0.9} sin(1/(x-0.7))` on `[0,1]`.
pub fn oscillator1d() -> Integrand {
    Integrand::new("oscillator1d", 1, |x| oscillator(x[0]))
        .with_gradient(|x, g| g[0] = oscillator_derivative(x[0]))
        .with_exact_integral(OSCILLATOR_INTEGRAL)
        .with_grad_bound(OSCILLATOR_GRAD_BOUND)
        .with_splits([0.9])
}

pub fn linear1d() -> Integrand {
    Integrand::new("linear1d", 1, |x| x[0])
        .with_gradient(|_, g| g[0] = 1.0)
        .with_exact_integral(0.5)
        .with_grad_bound(1.0)
}

pub fn quadratic1d() -> Integrand {
    Integrand::new("quadratic1d", 1, |x| x[0] * x[0])
        .with_gradient(|x, g| g[0] = 2.0 * x[0])
        .with_exact_integral(1.0 / 3.0)
        .with_grad_bound(2.0)
}

/// `sin(pi x1) sin(pi x2)`.
pub fn sinprod2d() -> Integrand {
    Integrand::new("sinprod2d", 2, |x| (PI * x[0]).sin() * (PI * x[1]).sin())
        .with_gradient(|x, g| {
            let (s0, c0) = (PI * x[0]).sin_cos();
            let (s1, c1) = (PI * x[1]).sin_cos();
            g[0] = PI * c0 * s1;
            g[1] = PI * s0 * c1;
        })
        .with_exact_integral(4.0 / (PI * PI))
        .with_grad_bound(PI)
}

/// Four linear pieces on `[0,1]` with slopes 1, 4, 0.5, 8.
pub fn piecewise1d() -> Integrand {
    PiecewiseLinearSpec::new(
        HyperCubePartition::new(1, 4).expect("4 strata in 1-d"),
        vec![vec![1.0], vec![4.0], vec![0.5], vec![8.0]],
        vec![0.0, -1.0, 0.25, -5.0],
    )
    .expect("consistent shapes")
    .into_integrand("piecewise1d")
}

/// Sixteen linear pieces on `[0,1]^2`.
pub fn piecewise2d() -> Integrand {
    let partition = HyperCubePartition::new(2, 16).expect("16 strata in 2-d");
    let slopes = (0..16)
        .map(|k| {
            let k = k as f64;
            vec![
                (0.7 * k).sin() * 3.0,
                (1.3 * k + 0.4).cos() * (1.0 + k / 4.0),
            ]
        })
        .collect();
    let offsets = (0..16).map(|k| 0.1 * k as f64).collect();
    PiecewiseLinearSpec::new(partition, slopes, offsets)
        .expect("consistent shapes")
        .into_integrand("piecewise2d")
}

/// Every named member of the test corpus.
pub fn corpus() -> Vec<Integrand> {
    vec![
        oscillator1d(),
        linear1d(),
        quadratic1d(),
        sinprod2d(),
        piecewise1d(),
        piecewise2d(),
        Integrand::constant(1, 1.0),
        Integrand::constant(2, 1.0),
    ]
}

/// Corpus lookup by name. `constant<d>d` is accepted for any `d >= 1`.
pub fn by_name(name: &str) -> Option<Integrand> {
    if let Some(found) = corpus().into_iter().find(|f| f.name() == name) {
        return Some(found);
    }
    let d: usize = name
        .strip_prefix("constant")?
        .strip_suffix('d')?
        .parse()
        .ok()?;
    (d >= 1).then(|| Integrand::constant(d, 1.0))
}

/// `f(x) = <theta_k, x> + rho_k` on stratum `k` of an equal hyper-cubic partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearSpec {
    partition: HyperCubePartition,
    slopes: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl PiecewiseLinearSpec {
    pub fn new(
        partition: HyperCubePartition,
        slopes: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    ) -> Result<Self> {
        let k = partition.len();
        if slopes.len() != k || offsets.len() != k {
            return Err(Error::ShapeMismatch(format!(
                "{} slopes and {} offsets for {k} strata",
                slopes.len(),
                offsets.len()
            )));
        }
        if let Some(bad) = slopes.iter().find(|s| s.len() != partition.dim()) {
            return Err(Error::DimensionMismatch {
                expected: partition.dim(),
                got: bad.len(),
            });
        }
        Ok(Self {
            partition,
            slopes,
            offsets,
        })
    }

    pub fn partition(&self) -> &HyperCubePartition {
        &self.partition
    }

    pub fn slope(&self, k: usize) -> &[f64] {
        &self.slopes[k]
    }

    pub fn offset(&self, k: usize) -> f64 {
        self.offsets[k]
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let k = self.partition.locate(x);
        self.eval_on(k, x)
    }

    /// Evaluates the affine piece of stratum `k` at `x`.
    pub fn eval_on(&self, k: usize, x: &[f64]) -> f64 {
        self.slopes[k]
            .iter()
            .zip(x)
            .map(|(t, v)| t * v)
            .sum::<f64>()
            + self.offsets[k]
    }

    /// Per-stratum standard deviation `||theta_k|| w_k^(1/d) / (2 sqrt 3)`.
    pub fn sigma(&self, k: usize) -> Result<f64> {
        if k >= self.partition.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.partition.len(),
            });
        }
        let norm = self.slopes[k].iter().map(|t| t * t).sum::<f64>().sqrt();
        let side = 1.0 / self.partition.cells_per_axis() as f64;
        Ok(norm * side / (2.0 * 3f64.sqrt()))
    }

    pub fn sigmas(&self) -> Vec<f64> {
        (0..self.partition.len())
            .map(|k| self.sigma(k).expect("k in range"))
            .collect()
    }

    fn exact_integral(&self) -> f64 {
        let w = self.partition.weight();
        crate::numeric::sum((0..self.partition.len()).map(|k| {
            let center = self.partition.stratum_box(k).expect("k in range").center();
            w * self.eval_on(k, &center)
        }))
    }

    pub fn into_integrand(self, name: impl Into<String>) -> Integrand {
        let dim = self.partition.dim();
        let l = self.partition.cells_per_axis();
        let exact = self.exact_integral();
        let bound = self
            .slopes
            .iter()
            .map(|s| s.iter().map(|t| t * t).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let splits: Vec<f64> = (1..l).map(|i| i as f64 / l as f64).collect();
        let spec = Arc::new(self);
        let grad_spec = spec.clone();
        Integrand::new(name, dim, move |x| spec.eval(x))
            .with_gradient(move |x, g| {
                let k = grad_spec.partition.locate(x);
                g.copy_from_slice(&grad_spec.slopes[k]);
            })
            .with_exact_integral(exact)
            .with_grad_bound(bound)
            .with_splits(splits)
    }
}

/// `sigma_k` of a piecewise-linear integrand.
pub fn pl_sigma_k(spec: &PiecewiseLinearSpec, k: usize) -> Result<f64> {
    spec.sigma(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_examples() {
        let lin = by_name("linear1d").unwrap();
        assert_eq!(lin.eval(&[0.25]), 0.25);
        assert_eq!(
            by_name("quadratic1d").unwrap().exact_integral(),
            Some(1.0 / 3.0)
        );
        assert_eq!(
            by_name("sinprod2d").unwrap().exact_integral(),
            Some(4.0 / (PI * PI))
        );
        assert_eq!(by_name("constant3d").unwrap().dim(), 3);
        assert!(by_name("nope").is_none());
        let names: Vec<_> = corpus().iter().map(|f| f.name().to_string()).collect();
        let mut dedup = names.clone();
        dedup.dedup();
        assert_eq!(names, dedup);
    }

    #[test]
    fn oscillator_indicator_is_strict() {
        let f = oscillator1d();
        assert_eq!(f.eval(&[0.9]), (1.0f64 / 1.0).sin());
        assert!(f.eval(&[0.900_001]) != (1.0f64 / 1.000_001).sin());
    }

    #[test]
    fn pl_sigma_examples() {
        let p = HyperCubePartition::new(1, 1).unwrap();
        let spec = PiecewiseLinearSpec::new(p, vec![vec![0.0]], vec![3.0]).unwrap();
        assert_eq!(pl_sigma_k(&spec, 0).unwrap(), 0.0);

        let p = HyperCubePartition::new(1, 1).unwrap();
        let spec = PiecewiseLinearSpec::new(p, vec![vec![1.0]], vec![0.0]).unwrap();
        assert!((pl_sigma_k(&spec, 0).unwrap() - 0.288_675_134_594_812_9).abs() < 1e-12);

        let p = HyperCubePartition::new(2, 4).unwrap();
        let slopes = vec![vec![3.0, 4.0]; 4];
        let spec = PiecewiseLinearSpec::new(p, slopes, vec![0.0; 4]).unwrap();
        assert!((pl_sigma_k(&spec, 2).unwrap() - 0.721_687_836_487_032_2).abs() < 1e-12);
        assert!(matches!(
            pl_sigma_k(&spec, 4),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn pl_eval_matches_affine_piece() {
        let f = by_name("piecewise1d").unwrap();
        assert_eq!(f.eval(&[0.3]), 4.0 * 0.3 - 1.0);
        assert_eq!(f.eval(&[0.25]), 0.25);
        assert_eq!(f.gradient(&[0.8]).unwrap(), vec![8.0]);
    }

    #[test]
    fn pl_shape_errors() {
        let p = HyperCubePartition::new(2, 4).unwrap();
        assert!(
            PiecewiseLinearSpec::new(p.clone(), vec![vec![1.0, 2.0]; 3], vec![0.0; 4]).is_err()
        );
        assert_eq!(
            PiecewiseLinearSpec::new(p, vec![vec![1.0]; 4], vec![0.0; 4]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
    }
}
