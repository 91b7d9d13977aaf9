//! Equal hyper-cubic partitions of `[0,1]^d` and their sub-partitions.
//!
//! Cells of both layers are indexed row-major over their lattice coordinates
//! (the first axis is the most significant digit). A point lying on a shared
//! face belongs to the cell with the smaller coordinate on that axis, so
//! every cell is `(a, b]` along each axis except the first, which is `[0, b]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{checked_pow, exact_root};

/// Axis-aligned box inside the unit cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl HyperBox {
    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn measure(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    /// Membership under the lower-index tie rule.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .lower
                .iter()
                .zip(&self.upper)
                .zip(x)
                .all(|((&lo, &hi), &v)| (lo < v || (lo == 0.0 && v == 0.0)) && v <= hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
            .collect()
    }
}

/// Index of the cell containing `x` among `cells` equal cells of `[0,1]`,
/// with bounds `i / cells` and ties going to the lower cell.
pub fn axis_cell(x: f64, cells: u64) -> u64 {
    let c = cells as f64;
    let mut i = ((x * c).ceil() - 1.0).clamp(0.0, c - 1.0) as u64;
    while i > 0 && x <= i as f64 / c {
        i -= 1;
    }
    while i + 1 < cells && x > (i + 1) as f64 / c {
        i += 1;
    }
    i
}

fn decompose(mut index: u64, base: u64, dim: usize, out: &mut [u64]) {
    for j in (0..dim).rev() {
        out[j] = index % base;
        index /= base;
    }
}

fn compose(coords: impl Iterator<Item = u64>, base: u64) -> u64 {
    coords.fold(0, |acc, c| acc * base + c)
}

/// Partition of `[0,1]^d` into `K = l^d` equal hyper-cubes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperCubePartition {
    dim: usize,
    cells_per_axis: u64,
    strata: usize,
}

impl HyperCubePartition {
    /// Partition with `strata` cells; fails unless `strata` is a perfect `dim`-th power.
    pub fn new(dim: usize, strata: usize) -> Result<Self> {
        if dim == 0 || strata == 0 {
            return Err(Error::InvalidConfig(format!(
                "partition needs d >= 1 and K >= 1, got d={dim}, K={strata}"
            )));
        }
        let l = exact_root(strata as u64, dim as u32).ok_or(Error::NotPerfectPower {
            value: strata as u64,
            dim,
        })?;
        Ok(Self {
            dim,
            cells_per_axis: l,
            strata,
        })
    }

    pub fn with_cells_per_axis(dim: usize, cells_per_axis: u64) -> Result<Self> {
        if dim == 0 || cells_per_axis == 0 {
            return Err(Error::InvalidConfig(format!(
                "partition needs d >= 1 and l >= 1, got d={dim}, l={cells_per_axis}"
            )));
        }
        let strata = checked_pow(cells_per_axis, dim as u32)
            .and_then(|k| usize::try_from(k).ok())
            .ok_or_else(|| Error::InvalidConfig(format!("{cells_per_axis}^{dim} overflows")))?;
        Ok(Self {
            dim,
            cells_per_axis,
            strata,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> u64 {
        self.cells_per_axis
    }

    /// Number of strata `K`.
    pub fn len(&self) -> usize {
        self.strata
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure `w_k = 1/K` of every stratum.
    pub fn weight(&self) -> f64 {
        1.0 / self.strata as f64
    }

    pub fn coords(&self, k: usize) -> Result<Vec<u64>> {
        self.check(k)?;
        let mut out = vec![0; self.dim];
        decompose(k as u64, self.cells_per_axis, self.dim, &mut out);
        Ok(out)
    }

    pub fn index_of(&self, coords: &[u64]) -> usize {
        compose(coords.iter().copied(), self.cells_per_axis) as usize
    }

    pub fn stratum_box(&self, k: usize) -> Result<HyperBox> {
        let coords = self.coords(k)?;
        let l = self.cells_per_axis as f64;
        Ok(HyperBox {
            lower: coords.iter().map(|&c| c as f64 / l).collect(),
            upper: coords.iter().map(|&c| (c + 1) as f64 / l).collect(),
        })
    }

    /// Stratum containing `x`.
    pub fn locate(&self, x: &[f64]) -> usize {
        debug_assert_eq!(x.len(), self.dim);
        compose(
            x.iter().map(|&v| axis_cell(v, self.cells_per_axis)),
            self.cells_per_axis,
        ) as usize
    }

    fn check(&self, k: usize) -> Result<()> {
        if k < self.strata {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: k,
                len: self.strata,
            })
        }
    }
}

/// Per-stratum sub-partition: stratum `k` is split into `S_k = m_k^d` equal hyper-cubes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubStratification {
    parent: HyperCubePartition,
    counts: Vec<usize>,
    sides: Vec<u64>,
}

impl SubStratification {
    pub fn new(parent: HyperCubePartition, counts: Vec<usize>) -> Result<Self> {
        if counts.len() != parent.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} sub-strata counts for {} strata",
                counts.len(),
                parent.len()
            )));
        }
        let dim = parent.dim();
        let sides = counts
            .iter()
            .map(|&s| match exact_root(s as u64, dim as u32) {
                Some(m) if m >= 1 => Ok(m),
                _ => Err(Error::NotPerfectPower {
                    value: s as u64,
                    dim,
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            parent,
            counts,
            sides,
        })
    }

    /// Same count `s` in every stratum.
    pub fn uniform(parent: HyperCubePartition, s: usize) -> Result<Self> {
        let counts = vec![s; parent.len()];
        Self::new(parent, counts)
    }

    pub fn parent(&self) -> &HyperCubePartition {
        &self.parent
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Sub-cells per axis `m_k` in stratum `k`.
    pub fn side(&self, k: usize) -> u64 {
        self.sides[k]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Measure `w_k / S_k` of a sub-stratum of stratum `k`.
    pub fn sub_weight(&self, k: usize) -> f64 {
        self.parent.weight() / self.counts[k] as f64
    }

    pub fn substratum_box(&self, k: usize, i: usize) -> Result<HyperBox> {
        let coarse = self.parent.coords(k)?;
        if i >= self.counts[k] {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.counts[k],
            });
        }
        let m = self.sides[k];
        let res = (self.parent.cells_per_axis() * m) as f64;
        let mut fine = vec![0; self.parent.dim()];
        decompose(i as u64, m, fine.len(), &mut fine);
        Ok(HyperBox {
            lower: coarse
                .iter()
                .zip(&fine)
                .map(|(&c, &s)| (c * m + s) as f64 / res)
                .collect(),
            upper: coarse
                .iter()
                .zip(&fine)
                .map(|(&c, &s)| (c * m + s + 1) as f64 / res)
                .collect(),
        })
    }

    /// `(k, i)` of the sub-stratum containing `x`.
    pub fn locate(&self, x: &[f64]) -> (usize, usize) {
        let k = self.parent.locate(x);
        (k, self.locate_within(k, x))
    }

    /// Sub-stratum index of `x` inside stratum `k` (which must contain `x`).
    pub fn locate_within(&self, k: usize, x: &[f64]) -> usize {
        let l = self.parent.cells_per_axis();
        let m = self.sides[k];
        let mut coarse = vec![0; x.len()];
        decompose(k as u64, l, x.len(), &mut coarse);
        let sub = x
            .iter()
            .zip(&coarse)
            .map(|(&v, &c)| axis_cell(v, l * m).saturating_sub(c * m).min(m - 1));
        compose(sub, m) as usize
    }
}

/// Fills `out` with a uniform point of sub-cell `i` of a stratum whose lattice
/// coordinates are `coarse`, when each stratum is cut into `m` cells per axis
/// and the coarse lattice has `l` cells per axis.
pub(crate) fn sample_subcell<R: Rng + ?Sized>(
    coarse: &[u64],
    l: u64,
    m: u64,
    i: u64,
    rng: &mut R,
    out: &mut [f64],
) {
    let res = (l * m) as f64;
    let mut rest = i;
    for j in (0..coarse.len()).rev() {
        let s = rest % m;
        rest /= m;
        let g = (coarse[j] * m + s) as f64;
        out[j] = (g + rng.random::<f64>()) / res;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;

    #[test]
    fn make_partition_examples() {
        let p = HyperCubePartition::new(1, 10).unwrap();
        assert_eq!(p.cells_per_axis(), 10);
        for k in 0..10 {
            let b = p.stratum_box(k).unwrap();
            assert_eq!(b.lower[0], k as f64 / 10.0);
            assert_eq!(b.upper[0], (k + 1) as f64 / 10.0);
        }
        let p = HyperCubePartition::new(2, 16).unwrap();
        assert_eq!(p.cells_per_axis(), 4);
        assert!((p.stratum_box(5).unwrap().measure() - 1.0 / 16.0).abs() < 1e-15);
        assert_eq!(
            HyperCubePartition::new(2, 10),
            Err(Error::NotPerfectPower { value: 10, dim: 2 })
        );
        assert_eq!(HyperCubePartition::new(3, 27).unwrap().cells_per_axis(), 3);
    }

    #[test]
    fn stratum_box_examples() {
        let p = HyperCubePartition::new(1, 10).unwrap();
        assert_eq!(p.stratum_box(0).unwrap().lower, vec![0.0]);
        assert_eq!(p.stratum_box(0).unwrap().upper, vec![0.1]);
        assert_eq!(p.stratum_box(9).unwrap().lower, vec![0.9]);
        assert_eq!(p.stratum_box(9).unwrap().upper, vec![1.0]);
        let p = HyperCubePartition::new(2, 4).unwrap();
        let b = p.stratum_box(3).unwrap();
        assert_eq!((b.lower, b.upper), (vec![0.5, 0.5], vec![1.0, 1.0]));
        let b = p.stratum_box(1).unwrap();
        assert_eq!((b.lower, b.upper), (vec![0.0, 0.5], vec![0.5, 1.0]));
        assert_eq!(
            p.stratum_box(4),
            Err(Error::IndexOutOfRange { index: 4, len: 4 })
        );
    }

    #[test]
    fn substratum_box_examples() {
        let s = SubStratification::uniform(HyperCubePartition::new(1, 1).unwrap(), 4).unwrap();
        let b = s.substratum_box(0, 2).unwrap();
        assert_eq!((b.lower, b.upper), (vec![0.5], vec![0.75]));

        let s = SubStratification::new(HyperCubePartition::new(1, 4).unwrap(), vec![1, 2, 1, 1])
            .unwrap();
        let b = s.substratum_box(1, 0).unwrap();
        assert_eq!((b.lower, b.upper), (vec![0.25], vec![0.375]));

        let s = SubStratification::uniform(HyperCubePartition::new(2, 1).unwrap(), 4).unwrap();
        let b = s.substratum_box(0, 0).unwrap();
        assert_eq!((b.lower, b.upper), (vec![0.0, 0.0], vec![0.5, 0.5]));
        assert!(matches!(
            s.substratum_box(0, 4),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn sub_counts_must_be_perfect_powers() {
        let p = HyperCubePartition::new(2, 4).unwrap();
        assert_eq!(
            SubStratification::new(p.clone(), vec![4, 9, 3, 1]),
            Err(Error::NotPerfectPower { value: 3, dim: 2 })
        );
        assert!(SubStratification::new(p.clone(), vec![4, 9]).is_err());
        assert!(SubStratification::new(p, vec![4, 9, 0, 1]).is_err());
    }

    #[test]
    fn boundary_ties_go_to_lower_index() {
        let p = HyperCubePartition::new(1, 10).unwrap();
        assert_eq!(p.locate(&[0.0]), 0);
        assert_eq!(p.locate(&[0.1]), 0);
        assert_eq!(p.locate(&[0.3]), 2);
        assert_eq!(p.locate(&[1.0]), 9);
        assert_eq!(axis_cell(0.5, 2), 0);
        assert_eq!(axis_cell(0.500_000_000_000_1, 2), 1);
    }

    #[test]
    fn sampled_subcell_points_lie_in_their_box() {
        let p = HyperCubePartition::new(2, 9).unwrap();
        let s = SubStratification::new(p, vec![4, 1, 9, 16, 4, 1, 25, 4, 1]).unwrap();
        let mut rng = RngSpec::new(1, 0).substream(&[]);
        let mut x = [0.0; 2];
        for k in 0..9 {
            let coarse = s.parent().coords(k).unwrap();
            for i in 0..s.counts()[k] {
                let b = s.substratum_box(k, i).unwrap();
                for _ in 0..20 {
                    sample_subcell(&coarse, 3, s.side(k), i as u64, &mut rng, &mut x);
                    assert!(b
                        .lower
                        .iter()
                        .zip(&b.upper)
                        .zip(&x)
                        .all(|((lo, hi), v)| lo <= v && v <= hi));
                }
            }
        }
    }
}
