use crate::error::{invalid, Error, Result};
use crate::geometry::{Bbox, P3};

/// Default cap on grid nodes.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Uniform Cartesian grid `lo + i·h` over a bounding box. Linear indices run
/// with the first axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    lo: P3,
    h: f64,
    counts: [usize; 3],
}

impl Grid {
    pub fn new(bbox: &Bbox, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid("h", format!("grid spacing must be positive, got {h}")));
        }
        let mut counts = [1usize; 3];
        for k in 0..bbox.dim() {
            let len = bbox.hi[k] - bbox.lo[k];
            let n = (len / h + 1e-9).floor();
            if n > 1e9 {
                return Err(Error::BudgetExceeded { points: usize::MAX, budget: DEFAULT_NODE_BUDGET });
            }
            counts[k] = n as usize + 1;
        }
        Ok(Grid { dim: bbox.dim(), lo: bbox.lo, h, counts })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn check_budget(&self, budget: usize) -> Result<()> {
        let points = self.len();
        if points > budget {
            return Err(Error::BudgetExceeded { points, budget });
        }
        Ok(())
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.counts[..axis].iter().product()
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let i0 = idx % self.counts[0];
        let rest = idx / self.counts[0];
        [i0, rest % self.counts[1], rest / self.counts[1]]
    }

    #[inline]
    pub(crate) fn point_p(&self, idx: usize) -> P3 {
        let m = self.multi_index(idx);
        let mut p = [0.0; 3];
        for k in 0..self.dim {
            p[k] = self.lo[k] + m[k] as f64 * self.h;
        }
        p
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.point_p(idx)[..self.dim].to_vec()
    }

    /// Neighbor of `idx` one step along `axis` (`forward` or backward).
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let m = self.multi_index(idx)[axis];
        let s = self.stride(axis);
        if forward {
            (m + 1 < self.counts[axis]).then_some(idx + s)
        } else {
            (m > 0).then(|| idx - s)
        }
    }

    /// Index of the node at integer offset `off` from `idx`, if on the grid.
    pub fn offset(&self, idx: usize, off: &[i64; 3]) -> Option<usize> {
        let m = self.multi_index(idx);
        let mut out = 0usize;
        let mut stride = 1usize;
        for k in 0..3 {
            let v = m[k] as i64 + off[k];
            if v < 0 || v >= self.counts[k] as i64 {
                return None;
            }
            out += v as usize * stride;
            stride *= self.counts[k];
        }
        Some(out)
    }

    /// Same nodes, checked with a relative tolerance on the spacing.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim
            && self.counts == other.counts
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && (0..self.dim).all(|k| (self.lo[k] - other.lo[k]).abs() <= 1e-12 * self.h.max(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_nodes() {
        let g = Grid::new(&Bbox::new(&[0.0], &[1.0]).unwrap(), 0.25).unwrap();
        assert_eq!(g.len(), 5);
        let xs: Vec<f64> = (0..5).map(|i| g.point(i)[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn square_indexing() {
        let g = Grid::new(&Bbox::new(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0 / 256.0).unwrap();
        assert_eq!(g.counts(), &[257, 257]);
        let idx = 3 + 257 * 7;
        assert_eq!(g.point(idx), vec![3.0 / 256.0, 7.0 / 256.0]);
        assert_eq!(g.neighbor(idx, 1, true), Some(idx + 257));
        assert_eq!(g.neighbor(0, 0, false), None);
        assert_eq!(g.offset(idx, &[-1, 1, 0]), Some(idx - 1 + 257));
        // Last node lands exactly on the far edge.
        assert_eq!(g.point(g.len() - 1), vec![1.0, 1.0]);
    }

    #[test]
    fn budget() {
        let g = Grid::new(&Bbox::new(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.01).unwrap();
        assert!(g.check_budget(100).is_err());
        assert!(g.check_budget(20_000).is_ok());
    }
}
