use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Domain, P3};
use crate::grid::{Grid, DEFAULT_NODE_BUDGET};

/// Which grid nodes carry unknowns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InteriorRule {
    /// Every node in `Ω`.
    #[default]
    Member,
    /// Nodes whose open grid star (the support of the multilinear hat
    /// function) lies in `Ω`, judged on the axis-parallel segments of length
    /// `2h` through the `3^d` neighborhood: the segments through the node must
    /// lie in `Ω`, the ones on the star's boundary in its closure. Grid
    /// functions supported on these nodes interpolate into `H¹₀(Ω)`.
    Conforming,
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|p| v[p]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().with_min_len(4096).enumerate().for_each(|(i, yi)| {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
        });
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                x[i] * c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum::<f64>()
            })
            .sum()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                m[(i, j)] = a;
            }
        }
        m
    }

    /// Smallest column index per row.
    pub(crate) fn first_cols(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.row(i).0.first().copied().unwrap_or(i).min(i)).collect()
    }
}

/// Finite-difference `−Δ` with Dirichlet conditions imposed by dropping
/// every node that is not an unknown.
#[derive(Clone, Debug)]
pub struct GridOperator {
    grid: Grid,
    rule: InteriorRule,
    /// Grid index of each unknown.
    nodes: Vec<usize>,
    /// Unknown of each grid index, `u32::MAX` when absent.
    rows: Vec<u32>,
    matrix: Csr,
    domain_hash: u64,
}

const ABSENT: u32 = u32::MAX;

pub fn assemble(dom: &Domain, h: f64) -> Result<GridOperator> {
    assemble_with(dom, h, InteriorRule::Member, DEFAULT_NODE_BUDGET)
}

pub fn assemble_with(dom: &Domain, h: f64, rule: InteriorRule, budget: usize) -> Result<GridOperator> {
    let grid = Grid::new(dom.bbox(), h)?;
    grid.check_budget(budget)?;
    let mask = interior_mask(dom, &grid, rule);
    let dim = grid.dim();

    // Unknowns ordered with the longest axis slowest to keep the profile narrow.
    let mut axes: Vec<usize> = (0..dim).collect();
    axes.sort_by_key(|&k| grid.counts()[k]);
    let key = |idx: usize| {
        let m = grid.multi_index(idx);
        let mut key = 0usize;
        for &k in axes.iter().rev() {
            key = key * grid.counts()[k] + m[k];
        }
        key
    };
    let mut nodes: Vec<usize> = (0..grid.len()).filter(|&i| mask[i]).collect();
    if nodes.is_empty() {
        return Err(Error::EmptyInterior);
    }
    if nodes.len() >= ABSENT as usize {
        return Err(Error::BudgetExceeded { points: nodes.len(), budget: ABSENT as usize - 1 });
    }
    nodes.sort_by_key(|&i| key(i));
    let mut rows = vec![ABSENT; grid.len()];
    for (r, &g) in nodes.iter().enumerate() {
        rows[g] = r as u32;
    }

    let inv_h2 = 1.0 / (h * h);
    let diag = 2.0 * dim as f64 * inv_h2;
    let entries: Vec<Vec<(usize, f64)>> = nodes
        .par_iter()
        .with_min_len(1024)
        .map(|&g| {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * dim + 1);
            row.push((rows[g] as usize, diag));
            for axis in 0..dim {
                for fwd in [false, true] {
                    if let Some(nb) = grid.neighbor(g, axis, fwd) {
                        if rows[nb] != ABSENT {
                            row.push((rows[nb] as usize, -inv_h2));
                        }
                    }
                }
            }
            row.sort_unstable_by_key(|e| e.0);
            row
        })
        .collect();
    let mut row_ptr = Vec::with_capacity(nodes.len() + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for row in entries {
        for (c, v) in row {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    let matrix = Csr { n: nodes.len(), row_ptr, cols, vals };
    Ok(GridOperator { grid, rule, nodes, rows, matrix, domain_hash: domain_hash(dom) })
}

fn interior_mask(dom: &Domain, grid: &Grid, rule: InteriorRule) -> Vec<bool> {
    let h = grid.h();
    let dim = grid.dim();
    (0..grid.len())
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| {
            let p = grid.point_p(i);
            if !dom.contains_p(&p) {
                return false;
            }
            match rule {
                InteriorRule::Member => true,
                InteriorRule::Conforming => star_inside(dom, &p, h, dim),
            }
        })
        .collect()
}

fn star_inside(dom: &Domain, p: &P3, h: f64, dim: usize) -> bool {
    let slack = 1e-9 * h;
    for axis in 0..dim {
        let mut dir = [0.0; 3];
        dir[axis] = 1.0;
        let others = 3usize.pow(dim as u32 - 1);
        for o in 0..others {
            let mut base = *p;
            let mut m = o;
            let mut on_boundary = false;
            for k in (0..dim).filter(|&k| k != axis) {
                let s = (m % 3) as f64 - 1.0;
                on_boundary |= s != 0.0;
                base[k] += s * h;
                m /= 3;
            }
            let spans = dom.spans_p(&base, &dir, on_boundary);
            if !spans.iter().any(|&(a, b)| a <= -h + slack && b >= h - slack) {
                return false;
            }
        }
    }
    true
}

/// FNV-1a hash of the domain's description, used to tag results.
pub fn domain_hash(dom: &Domain) -> u64 {
    let text = format!("{:?}|{:?}|{:?}", dom.tree(), dom.bbox(), dom.exit_method());
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl GridOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn rule(&self) -> InteriorRule {
        self.rule
    }

    /// Number of unknowns.
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }

    pub fn domain_hash(&self) -> u64 {
        self.domain_hash
    }

    /// Grid index of each unknown.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn row_of(&self, grid_index: usize) -> Option<usize> {
        match self.rows.get(grid_index) {
            Some(&r) if r != ABSENT => Some(r as usize),
            _ => None,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.matvec(x, y)
    }

    /// Scatters a vector of unknowns onto the full grid, zero elsewhere.
    pub fn to_grid(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (r, &g) in self.nodes.iter().enumerate() {
            out[g] = v[r];
        }
        out
    }

    /// Gathers the unknowns from a full-grid vector.
    pub fn from_grid(&self, u: &[f64]) -> Vec<f64> {
        self.nodes.iter().map(|&g| u[g]).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim()).all(|i| {
            let (c, v) = self.matrix.row(i);
            c.iter().zip(v).all(|(&j, &a)| self.matrix.get(j, i) == a)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom(text: &str) -> Domain {
        Domain::from_json(text).unwrap()
    }

    #[test]
    fn interval_tridiagonal() {
        let op = assemble(&dom(r#"{"dim": 1, "tree": {"box": [[0, 1]]}}"#), 0.25).unwrap();
        assert_eq!(op.dim(), 3);
        let m = op.matrix().to_dense();
        for i in 0..3 {
            assert_eq!(m[(i, i)], 32.0);
            if i + 1 < 3 {
                assert_eq!(m[(i, i + 1)], -16.0);
                assert_eq!(m[(i + 1, i)], -16.0);
            }
        }
        assert_eq!(m[(0, 2)], 0.0);
    }

    #[test]
    fn square_single_node() {
        let op = assemble(&dom(r#"{"dim": 2, "tree": {"box": [[0, 1], [0, 1]]}}"#), 0.5).unwrap();
        assert_eq!(op.dim(), 1);
        assert_eq!(op.get(0, 0), 16.0);
    }

    #[test]
    fn l_shape_count() {
        let l = dom(r#"{"dim": 2, "tree": {"op": "difference", "a": {"box": [[0, 2], [0, 2]]}, "b": {"box": [[1, 2], [1, 2]]}}}"#);
        let op = assemble(&l, 0.5).unwrap();
        assert_eq!(op.dim(), 5);
        assert!(op.is_symmetric());
    }

    #[test]
    fn empty_interior_is_an_error() {
        let tiny = dom(r#"{"dim": 2, "tree": {"box": [[0, 0.1], [0, 0.1]]}}"#);
        assert!(matches!(assemble(&tiny, 0.1), Err(Error::EmptyInterior)));
    }

    #[test]
    fn conforming_drops_nodes_next_to_a_curved_boundary() {
        let disk = dom(r#"{"dim": 2, "tree": {"ball": {"center": [0, 0], "radius": 1}}}"#);
        let member = assemble(&disk, 0.1).unwrap();
        let conf = assemble_with(&disk, 0.1, InteriorRule::Conforming, DEFAULT_NODE_BUDGET).unwrap();
        assert!(conf.dim() < member.dim());
        for &g in conf.nodes() {
            let p = conf.grid().point(g);
            assert!((p[0].hypot(p[1])) < 1.0 - 0.05);
        }
        // On a box every member node has its star inside.
        let sq = dom(r#"{"dim": 2, "tree": {"box": [[0, 1], [0, 1]]}}"#);
        let a = assemble(&sq, 0.125).unwrap();
        let b = assemble_with(&sq, 0.125, InteriorRule::Conforming, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(a.dim(), b.dim());
    }

    #[test]
    fn budget_is_enforced() {
        let sq = dom(r#"{"dim": 2, "tree": {"box": [[0, 1], [0, 1]]}}"#);
        assert!(matches!(
            assemble_with(&sq, 0.01, InteriorRule::Member, 100),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
