use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use super::ldl::{ProfileLdl, DEFAULT_FACTOR_BYTES};
use super::operator::{assemble, Csr, GridOperator};
use crate::error::{invalid, Error, Result};
use crate::fmt;
use crate::geometry::Domain;
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    Dense,
    ShiftInvert,
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Relative residual `‖Ax − θx‖ / |θ|` required of every pair.
    pub tol: f64,
    pub block: usize,
    /// Largest dimension handled by the dense solver.
    pub dense_max: usize,
    pub max_iter: usize,
    pub factor_bytes: usize,
    /// Most eigenvalues targeted by one shift.
    pub slice: usize,
    pub vectors: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            block: 4,
            dense_max: 2000,
            max_iter: 400,
            factor_bytes: DEFAULT_FACTOR_BYTES,
            slice: 24,
            vectors: true,
        }
    }
}

/// Lowest part of the discrete spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralResult {
    #[serde(serialize_with = "fmt::real_vec")]
    pub eigenvalues: Vec<f64>,
    #[serde(serialize_with = "fmt::real_vec")]
    pub residuals: Vec<f64>,
    pub k: usize,
    #[serde(serialize_with = "fmt::real")]
    pub h: f64,
    #[serde(serialize_with = "fmt::hex")]
    pub domain_hash: u64,
    pub method: SolverMethod,
    /// Every eigenvalue `≤` this value is in the list.
    #[serde(serialize_with = "fmt::real")]
    pub complete_through: f64,
    #[serde(skip)]
    eigenvectors: Option<Vec<Vec<f64>>>,
    #[serde(skip)]
    grid: Grid,
    #[serde(skip)]
    nodes: Vec<usize>,
}

impl SpectralResult {
    pub fn largest(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn has_vectors(&self) -> bool {
        self.eigenvectors.is_some()
    }

    /// `j`-th eigenvector (zero-based) on the unknowns, unit `ℓ²` norm.
    pub fn eigenvector(&self, j: usize) -> Option<&[f64]> {
        self.eigenvectors.as_ref()?.get(j).map(|v| v.as_slice())
    }

    /// `j`-th eigenvector scattered onto the full grid.
    pub fn eigenvector_on_grid(&self, j: usize) -> Option<Vec<f64>> {
        let v = self.eigenvector(j)?;
        let mut out = vec![0.0; self.grid.len()];
        for (r, &g) in self.nodes.iter().enumerate() {
            out[g] = v[r];
        }
        Some(out)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Grid index of each unknown.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn drop_vectors(&mut self) {
        self.eigenvectors = None;
    }

    /// `index,eigenvalue` rows, one-based index, 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,eigenvalue")?;
        for (i, v) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, fmt::sig(*v, 12))?;
        }
        Ok(())
    }
}

/// The `k` smallest eigenvalues with eigenvectors.
pub fn eigenvalues(op: &GridOperator, k: usize) -> Result<SpectralResult> {
    eigenvalues_with(op, k, &EigenOptions::default())
}

pub fn eigenvalues_with(op: &GridOperator, k: usize, opts: &EigenOptions) -> Result<SpectralResult> {
    let n = op.dim();
    if k < 1 || k > n {
        return Err(invalid("k", format!("need 1 <= k <= {n}, got {k}")));
    }
    if n <= opts.dense_max {
        let (vals, vecs, res) = dense(op.matrix(), opts.vectors)?;
        let complete = if k == n { f64::INFINITY } else { vals[k - 1] };
        return Ok(finish(op, SolverMethod::Dense, vals, vecs, res, k, complete));
    }
    let a = op.matrix();
    let fac = ProfileLdl::factor(a, 0.0, opts.factor_bytes)?;
    let mut block = opts.block.max(1);
    for _ in 0..3 {
        let pairs = shift_invert(a, &fac, 0.0, Want::Lowest(k), block, opts)?;
        let top = pairs[k - 1].0;
        // Inertia just below the k-th value certifies that nothing was skipped.
        let probe = top * (1.0 - 10.0 * opts.tol);
        let below = ProfileLdl::factor(a, probe, opts.factor_bytes)?.negative_count();
        if below <= k - 1 {
            let (vals, vecs, res) = unzip(pairs, k, opts.vectors);
            return Ok(finish(op, SolverMethod::ShiftInvert, vals, vecs, res, k, top));
        }
        block *= 2;
    }
    Err(Error::NoConvergence(format!("shift-invert solve kept missing eigenvalues below the {k}-th")))
}

/// All eigenvalues `≤ lambda` plus at least the next one.
pub fn eigenvalues_covering(op: &GridOperator, lambda: f64, opts: &EigenOptions) -> Result<SpectralResult> {
    if !(lambda >= 0.0) {
        return Err(invalid("lambda", format!("must be nonnegative, got {lambda}")));
    }
    let n = op.dim();
    let a = op.matrix();
    if n <= opts.dense_max {
        let (vals, vecs, res) = dense(a, opts.vectors)?;
        let count = vals.iter().filter(|&&v| v <= lambda).count();
        let k = (count + 1).min(n);
        let complete = if k == n { f64::INFINITY } else { vals[k - 1] };
        return Ok(finish(op, SolverMethod::Dense, vals, vecs, res, k, complete));
    }
    let mut counter = Counter { a, bytes: opts.factor_bytes };
    let (target_lo, c_lambda) = counter.count_above(lambda * (1.0 + 1e-12) + f64::MIN_POSITIVE)?;
    let want_total = (c_lambda + 1).min(n);
    let mut top = (lambda * 1.05).max(target_lo * 1.0001).max(1.0);
    let mut c_top = counter.count(top)?;
    while c_top < want_total {
        top *= 1.25;
        c_top = counter.count(top)?;
    }
    let mut slices = Vec::new();
    split(&mut counter, 0.0, top, 0, c_top, opts.slice.max(1), &mut slices)?;
    let mut pairs: Vec<(f64, Vec<f64>, f64)> = Vec::with_capacity(c_top);
    for (lo, hi, count) in slices {
        if count == 0 {
            continue;
        }
        let (sigma, fac) = counter.factor_near(0.5 * (lo + hi))?;
        let found = shift_invert(a, &fac, sigma, Want::Window { lo, hi, count }, opts.block.max(1), opts)?;
        pairs.extend(found);
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    if pairs.len() != c_top {
        return Err(Error::NoConvergence(format!("found {} eigenvalues below {top}, inertia says {c_top}", pairs.len())));
    }
    let k = pairs.len();
    let (vals, vecs, res) = unzip(pairs, k, opts.vectors);
    let complete = top.min(vals[k - 1]);
    Ok(finish(op, SolverMethod::ShiftInvert, vals, vecs, res, k, complete))
}

/// `λ₁` of the grid operator at spacing `h`.
pub fn lambda_min(dom: &Domain, h: f64) -> Result<f64> {
    let op = assemble(dom, h)?;
    let opts = EigenOptions { vectors: false, ..EigenOptions::default() };
    Ok(eigenvalues_with(&op, 1, &opts)?.eigenvalues[0])
}

fn finish(
    op: &GridOperator,
    method: SolverMethod,
    mut vals: Vec<f64>,
    mut vecs: Option<Vec<Vec<f64>>>,
    mut res: Vec<f64>,
    k: usize,
    complete_through: f64,
) -> SpectralResult {
    vals.truncate(k);
    res.truncate(k);
    if let Some(v) = vecs.as_mut() {
        v.truncate(k);
    }
    SpectralResult {
        eigenvalues: vals,
        residuals: res,
        k,
        h: op.h(),
        domain_hash: op.domain_hash(),
        method,
        complete_through,
        eigenvectors: vecs,
        grid: op.grid().clone(),
        nodes: op.nodes().to_vec(),
    }
}

type Pair = (f64, Vec<f64>, f64);

fn unzip(pairs: Vec<Pair>, k: usize, vectors: bool) -> (Vec<f64>, Option<Vec<Vec<f64>>>, Vec<f64>) {
    let mut vals = Vec::with_capacity(k);
    let mut vecs = Vec::with_capacity(if vectors { k } else { 0 });
    let mut res = Vec::with_capacity(k);
    for (t, v, r) in pairs.into_iter().take(k) {
        vals.push(t);
        res.push(r);
        if vectors {
            vecs.push(v);
        }
    }
    (vals, vectors.then_some(vecs), res)
}

fn dense(a: &Csr, vectors: bool) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>, Vec<f64>)> {
    let m = a.to_dense();
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0)
        .ok_or_else(|| Error::NoConvergence("dense symmetric eigensolver".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vals = Vec::with_capacity(n);
    let mut vecs = Vec::with_capacity(n);
    let mut res = Vec::with_capacity(n);
    for &i in &order {
        let theta = eig.eigenvalues[i];
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        fix_sign(&mut v);
        res.push(residual(a, &v, theta));
        vals.push(theta);
        if vectors {
            vecs.push(v);
        }
    }
    Ok((vals, vectors.then_some(vecs), res))
}

fn residual(a: &Csr, v: &[f64], theta: f64) -> f64 {
    let av = a.apply(v);
    let r: f64 = av.iter().zip(v).map(|(y, x)| (y - theta * x).powi(2)).sum::<f64>().sqrt();
    let nv = norm(v);
    r / (theta.abs() * nv).max(f64::MIN_POSITIVE)
}

/// Largest-magnitude entry made positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best * (1.0 + 1e-9) {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn vdot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Counter<'a> {
    a: &'a Csr,
    bytes: usize,
}

impl Counter<'_> {
    /// Number of eigenvalues `< s`.
    fn count(&mut self, s: f64) -> Result<usize> {
        Ok(self.factor_near(s)?.1.negative_count())
    }

    /// Count at `s`, nudged upward past any exact pivot failure.
    fn count_above(&mut self, s: f64) -> Result<(f64, usize)> {
        let (s, f) = self.factor_near(s)?;
        Ok((s, f.negative_count()))
    }

    fn factor_near(&mut self, s: f64) -> Result<(f64, ProfileLdl)> {
        let mut shift = s;
        for _ in 0..8 {
            match ProfileLdl::factor(self.a, shift, self.bytes) {
                Ok(f) => return Ok((shift, f)),
                Err(Error::NoConvergence(_)) => shift += 1e-9 * shift.abs().max(1.0),
                Err(e) => return Err(e),
            }
        }
        Err(Error::NoConvergence(format!("no nonsingular shift near {s}")))
    }
}

fn split(c: &mut Counter, lo: f64, hi: f64, clo: usize, chi: usize, max: usize, out: &mut Vec<(f64, f64, usize)>) -> Result<()> {
    if chi - clo <= max || hi - lo <= 1e-9 * hi.abs().max(1.0) {
        out.push((lo, hi, chi - clo));
        return Ok(());
    }
    let (mid, cm) = c.count_above(0.5 * (lo + hi))?;
    split(c, lo, mid, clo, cm, max, out)?;
    split(c, mid, hi, cm, chi, max, out)
}

#[derive(Clone, Copy, Debug)]
enum Want {
    /// The `k` smallest eigenvalues; the shift lies below the spectrum.
    Lowest(usize),
    /// All `count` eigenvalues in `[lo, hi)`.
    Window { lo: f64, hi: f64, count: usize },
}

/// Subspace expansion by shift-invert steps with Rayleigh-Ritz on `A`
/// itself, so residuals are exact regardless of the inner solves.
fn shift_invert(a: &Csr, fac: &ProfileLdl, sigma: f64, want: Want, block: usize, opts: &EigenOptions) -> Result<Vec<Pair>> {
    let n = a.dim();
    let needed = match want {
        Want::Lowest(k) => k,
        Want::Window { count, .. } => count,
    };
    let m_max = (3 * needed).max(needed + 4 * block).max(20).min(n);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut a_basis: Vec<Vec<f64>> = Vec::new();
    let mut h = DMatrix::<f64>::zeros(0, 0);
    let mut rng = crate::rng::stream(0x5eed, needed as u64);

    let mut fresh: Vec<Vec<f64>> = (0..block.max(needed.min(2 * block)))
        .map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect())
        .collect();
    let mut last_res = Vec::new();
    for _ in 0..opts.max_iter {
        for mut w in fresh.drain(..) {
            fac.solve(&mut w);
            if append(&mut basis, w) {
                a_basis.push(a.apply(basis.last().expect("appended")));
            }
        }
        h = extend_projection(&h, &basis, &a_basis);
        let eig = SymmetricEigen::new(h.clone());
        let m = basis.len();
        let mut order: Vec<usize> = (0..m).collect();
        match want {
            Want::Lowest(_) => order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j])),
            Want::Window { .. } => order.sort_by(|&i, &j| {
                (eig.eigenvalues[i] - sigma).abs().total_cmp(&(eig.eigenvalues[j] - sigma).abs())
            }),
        }
        let consider = (needed + 2 * block).min(m);
        let mut ritz: Vec<(f64, Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(consider);
        for &i in order.iter().take(consider) {
            let theta = eig.eigenvalues[i];
            let y = eig.eigenvectors.column(i);
            let mut x = vec![0.0; n];
            let mut ax = vec![0.0; n];
            for (c, &yc) in y.iter().enumerate() {
                axpy_into(&mut x, yc, &basis[c]);
                axpy_into(&mut ax, yc, &a_basis[c]);
            }
            let r = ax.iter().zip(&x).map(|(p, q)| (p - theta * q).powi(2)).sum::<f64>().sqrt();
            let rel = r / (theta.abs() * norm(&x)).max(f64::MIN_POSITIVE);
            ritz.push((theta, x, ax, rel));
        }
        let converged = |t: &(f64, Vec<f64>, Vec<f64>, f64)| t.3 <= opts.tol;
        let done = match want {
            Want::Lowest(k) => ritz.len() >= k && ritz[..k].iter().all(converged),
            Want::Window { lo, hi, count } => {
                ritz.iter().filter(|t| converged(t) && t.0 >= lo && t.0 < hi).count() >= count
            }
        };
        last_res = ritz.iter().map(|t| t.3).collect();
        if done {
            let mut out: Vec<Pair> = match want {
                Want::Lowest(k) => ritz.into_iter().take(k).map(|(t, x, _, r)| (t, x, r)).collect(),
                Want::Window { lo, hi, .. } => ritz
                    .into_iter()
                    .filter(|t| t.3 <= opts.tol && t.0 >= lo && t.0 < hi)
                    .map(|(t, x, _, r)| (t, x, r))
                    .collect(),
            };
            out.sort_by(|p, q| p.0.total_cmp(&q.0));
            if let Want::Window { count, .. } = want {
                out.truncate(count);
            }
            for p in out.iter_mut() {
                let nx = norm(&p.1);
                p.1.iter_mut().for_each(|v| *v /= nx);
                fix_sign(&mut p.1);
            }
            return Ok(out);
        }
        let mut pick: Vec<Vec<f64>> = ritz
            .iter()
            .filter(|t| !converged(t))
            .take(block)
            .map(|t| t.1.clone())
            .collect();
        if pick.is_empty() {
            pick = (0..block).map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()).collect();
        }
        if basis.len() + pick.len() > m_max {
            let keep = ritz.len().min(m_max.saturating_sub(pick.len())).max(1);
            basis = ritz.iter().take(keep).map(|t| t.1.clone()).collect();
            a_basis = ritz.iter().take(keep).map(|t| t.2.clone()).collect();
            reorthonormalize(&mut basis, &mut a_basis);
            h = DMatrix::zeros(0, 0);
        }
        fresh = pick;
    }
    Err(Error::NoConvergence(format!(
        "shift-invert at {sigma} after {} steps; residuals {:?}",
        opts.max_iter, last_res
    )))
}

fn axpy_into(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Two rounds of Gram-Schmidt; appends the normalized remainder unless it
/// is numerically dependent on the basis.
fn append(basis: &mut Vec<Vec<f64>>, mut w: Vec<f64>) -> bool {
    let n0 = norm(&w);
    if n0 == 0.0 || !n0.is_finite() {
        return false;
    }
    for _ in 0..2 {
        for b in basis.iter() {
            let c = vdot(b, &w);
            axpy_into(&mut w, -c, b);
        }
    }
    let n1 = norm(&w);
    if n1 <= 1e-10 * n0 {
        return false;
    }
    w.iter_mut().for_each(|x| *x /= n1);
    basis.push(w);
    true
}

/// Restores orthonormality of restarted Ritz vectors, carrying `A·basis`.
fn reorthonormalize(basis: &mut Vec<Vec<f64>>, a_basis: &mut Vec<Vec<f64>>) {
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
    let mut aqs: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
    for (v, av) in basis.drain(..).zip(a_basis.drain(..)) {
        let (mut w, mut aw) = (v, av);
        for _ in 0..2 {
            for (q, aq) in qs.iter().zip(&aqs) {
                let c = vdot(q, &w);
                axpy_into(&mut w, -c, q);
                axpy_into(&mut aw, -c, aq);
            }
        }
        let nw = norm(&w);
        if nw > 1e-10 {
            w.iter_mut().for_each(|x| *x /= nw);
            aw.iter_mut().for_each(|x| *x /= nw);
            qs.push(w);
            aqs.push(aw);
        }
    }
    *basis = qs;
    *a_basis = aqs;
}

/// `Vᵀ A V`, reusing the leading block of `old`.
fn extend_projection(old: &DMatrix<f64>, basis: &[Vec<f64>], a_basis: &[Vec<f64>]) -> DMatrix<f64> {
    let m = basis.len();
    let m0 = old.nrows();
    let mut h = DMatrix::zeros(m, m);
    for i in 0..m0 {
        for j in 0..m0 {
            h[(i, j)] = old[(i, j)];
        }
    }
    for j in m0..m {
        for i in 0..=j {
            let v = vdot(&basis[i], &a_basis[j]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}
