//! Envelope `LDLᵀ` factorization of `A − σI` without pivoting.

use super::operator::Csr;
use crate::error::{Error, Result};

/// Default cap on factor storage in bytes.
pub const DEFAULT_FACTOR_BYTES: usize = 2_500_000_000;

pub(crate) struct ProfileLdl {
    first: Vec<usize>,
    start: Vec<usize>,
    l: Vec<f64>,
    d: Vec<f64>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

impl ProfileLdl {
    pub(crate) fn factor(a: &Csr, shift: f64, max_bytes: usize) -> Result<Self> {
        let n = a.dim();
        let first = a.first_cols();
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0usize;
        for (i, &f) in first.iter().enumerate() {
            start.push(total);
            total += i - f;
        }
        start.push(total);
        if total * 8 > max_bytes {
            return Err(Error::BudgetExceeded { points: total, budget: max_bytes / 8 });
        }
        let mut l = vec![0.0; total];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let f = first[i];
            let (done, rest) = l.split_at_mut(start[i]);
            let row = &mut rest[..i - f];
            let mut diag = -shift;
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    row[j - f] = v;
                } else if j == i {
                    diag += v;
                }
            }
            for j in f..i {
                let fj = first[j];
                let s = f.max(fj);
                let lj = &done[start[j]..start[j + 1]];
                let t = dot(&row[s - f..j - f], &lj[s - fj..]);
                row[j - f] -= t;
            }
            for j in f..i {
                let t = row[j - f];
                let lij = t / d[j];
                diag -= t * lij;
                row[j - f] = lij;
            }
            if diag == 0.0 || !diag.is_finite() {
                return Err(Error::NoConvergence(format!("zero pivot at row {i} for shift {shift}")));
            }
            d[i] = diag;
        }
        Ok(ProfileLdl { first, start, l, d })
    }

    /// Number of eigenvalues of `A` below the shift (Sylvester inertia).
    pub(crate) fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    /// Overwrites `b` with `(A − σI)⁻¹ b`.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n {
            let f = self.first[i];
            let li = &self.l[self.start[i]..self.start[i + 1]];
            b[i] -= dot(li, &b[f..i]);
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let f = self.first[i];
            let li = &self.l[self.start[i]..self.start[i + 1]];
            let x = b[i];
            for (bk, &lk) in b[f..i].iter_mut().zip(li) {
                *bk -= lk * x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::spectral::assemble;

    #[test]
    fn solves_and_counts() {
        let dom = Domain::from_json(r#"{"dim": 2, "tree": {"op": "difference", "a": {"box": [[0, 2], [0, 2]]}, "b": {"box": [[1, 2], [1, 2]]}}}"#).unwrap();
        let op = assemble(&dom, 0.125).unwrap();
        let a = op.matrix();
        let dense = a.to_dense();
        let eig = nalgebra::SymmetricEigen::new(dense.clone());
        for shift in [0.0, 30.0, 95.5] {
            let f = ProfileLdl::factor(a, shift, DEFAULT_FACTOR_BYTES).unwrap();
            let below = eig.eigenvalues.iter().filter(|&&v| v < shift).count();
            assert_eq!(f.negative_count(), below);
            let b: Vec<f64> = (0..a.dim()).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
            let mut x = b.clone();
            f.solve(&mut x);
            let ax = a.apply(&x);
            let err: f64 = ax.iter().zip(&x).zip(&b).map(|((y, xi), bi)| (y - shift * xi - bi).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "shift {shift}: {err}");
        }
    }
}
