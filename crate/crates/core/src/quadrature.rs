//! Composite tensor-product quadrature on axis-aligned boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HyperBox;
use crate::numeric::CompensatedSum;

/// Points per Gauss-Legendre panel.
pub const GAUSS_LEGENDRE_ORDER: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    Midpoint,
    GaussLegendre,
}

/// `m` nodes per axis (so `m^d` in total), optionally broken at interior
/// split coordinates shared by every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes_per_axis: usize,
    pub rule: QuadratureRule,
    splits: Vec<f64>,
}

impl QuadratureGrid {
    pub fn gauss_legendre(nodes_per_axis: usize) -> Self {
        Self {
            nodes_per_axis: nodes_per_axis.max(1),
            rule: QuadratureRule::GaussLegendre,
            splits: Vec::new(),
        }
    }

    pub fn midpoint(nodes_per_axis: usize) -> Self {
        Self {
            nodes_per_axis: nodes_per_axis.max(1),
            rule: QuadratureRule::Midpoint,
            splits: Vec::new(),
        }
    }

    pub fn splits(&self) -> &[f64] {
        &self.splits
    }

    /// Adds split points; each must lie strictly inside `(0, 1)`.
    pub fn with_splits(mut self, splits: impl IntoIterator<Item = f64>) -> Result<Self> {
        for s in splits {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "quadrature split {s} is not inside (0, 1)"
                )));
            }
            self.splits.push(s);
        }
        self.splits.sort_by(f64::total_cmp);
        self.splits.dedup();
        Ok(self)
    }

    /// Nodes and weights for `[lo, hi]`; about `nodes_per_axis` nodes in total,
    /// with panel edges at every split inside the interval.
    pub fn axis_rule(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut edges = vec![lo];
        edges.extend(self.splits.iter().copied().filter(|&s| s > lo && s < hi));
        edges.push(hi);
        let (per_panel, panels_total) = match self.rule {
            QuadratureRule::Midpoint => (1, self.nodes_per_axis),
            QuadratureRule::GaussLegendre => (
                GAUSS_LEGENDRE_ORDER,
                self.nodes_per_axis.div_ceil(GAUSS_LEGENDRE_ORDER),
            ),
        };
        let reference = match self.rule {
            QuadratureRule::Midpoint => vec![(0.0, 2.0)],
            QuadratureRule::GaussLegendre => gauss_legendre_nodes(per_panel),
        };
        let span = hi - lo;
        let mut out = Vec::with_capacity(panels_total * per_panel + edges.len() * per_panel);
        for seg in edges.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let panels = ((panels_total as f64 * (b - a) / span).round() as usize).max(1);
            let h = (b - a) / panels as f64;
            for p in 0..panels {
                let left = a + p as f64 * h;
                for &(t, w) in &reference {
                    out.push((left + 0.5 * h * (t + 1.0), 0.5 * h * w));
                }
            }
        }
        out
    }

    /// Tensor-product quadrature of `f` over `bx`.
    pub fn integrate(&self, bx: &HyperBox, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let rules: Vec<Vec<(f64, f64)>> = bx
            .lower
            .iter()
            .zip(&bx.upper)
            .map(|(&lo, &hi)| self.axis_rule(lo, hi))
            .collect();
        let dim = rules.len();
        let mut idx = vec![0usize; dim];
        let mut x: Vec<f64> = rules.iter().map(|r| r[0].0).collect();
        let mut acc = CompensatedSum::new();
        loop {
            let w: f64 = idx.iter().zip(&rules).map(|(&i, r)| r[i].1).product();
            acc.add(w * f(&x));
            let mut j = dim;
            loop {
                if j == 0 {
                    return acc.value();
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < rules[j].len() {
                    x[j] = rules[j][idx[j]].0;
                    break;
                }
                idx[j] = 0;
                x[j] = rules[j][0].0;
            }
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}
