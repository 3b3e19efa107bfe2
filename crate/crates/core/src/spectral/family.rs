//! Test functions for the discrete Hardy inequality and the two-grid check.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Domain, SphereRule};
use crate::grid::Grid;
use crate::hardy_field::{delta_field, DeltaField};
use crate::report::BoundReport;

use super::bounds::{hardy_quadratic_check, hardy_sides, two_grid_tolerance};
use super::eigen::{eigenvalues_with, EigenOptions};
use super::operator::{assemble_with, GridOperator, InteriorRule};

/// Multilinear interpolation of a grid function onto the grid of half the
/// spacing over the same box.
pub fn prolong(coarse: &Grid, u: &[f64], fine: &Grid) -> Result<Vec<f64>> {
    let dim = coarse.dim();
    let nested = fine.dim() == dim
        && (2.0 * fine.h() - coarse.h()).abs() <= 1e-12 * coarse.h()
        && coarse.point(0).iter().zip(fine.point(0)).all(|(a, b)| (a - b).abs() <= 1e-12 * coarse.h().max(1.0));
    if !nested || u.len() != coarse.len() {
        return Err(Error::GridMismatch("prolongation needs nested grids".into()));
    }
    let cc = coarse.counts();
    let mut out = vec![0.0; fine.len()];
    for (f, slot) in out.iter_mut().enumerate() {
        let m = fine.multi_index(f);
        let mut acc = 0.0;
        for corner in 0..1usize << dim {
            let mut idx = 0usize;
            let mut stride = 1usize;
            let mut weight = 1.0;
            let mut valid = true;
            for k in 0..dim {
                let c = if m[k] % 2 == 0 {
                    if corner >> k & 1 == 1 {
                        valid = false;
                        break;
                    }
                    m[k] / 2
                } else {
                    weight *= 0.5;
                    m[k] / 2 + (corner >> k & 1)
                };
                if c >= cc[k] {
                    valid = false;
                    break;
                }
                idx += c * stride;
                stride *= cc[k];
            }
            if valid {
                acc += weight * u[idx];
            }
        }
        *slot = acc;
    }
    Ok(out)
}

/// Random trigonometric polynomial `Σ a_k Π sin(k_j π (x_j − lo_j)/L_j)`,
/// frequencies `1..=max_freq` per axis, amplitudes uniform in `[−1, 1]`
/// divided by `|k|²`, sampled on the unknowns of `op` and zero elsewhere.
pub fn band_limited(op: &GridOperator, dom: &Domain, max_freq: usize, seed: u64, index: u64) -> Vec<f64> {
    let dim = op.grid().dim();
    let lo = dom.bbox().lo().to_vec();
    let len = dom.bbox().lengths();
    let mut rng = crate::rng::stream(seed, crate::rng::tag(&[0xba4d, index]));
    let nf = max_freq.max(1);
    let terms = nf.pow(dim as u32);
    let modes: Vec<([usize; 3], f64)> = (0..terms)
        .map(|t| {
            let mut k = [0usize; 3];
            let mut m = t;
            let mut k2 = 0.0;
            for kk in k.iter_mut().take(dim) {
                *kk = m % nf + 1;
                m /= nf;
                k2 += (*kk * *kk) as f64;
            }
            (k, (2.0 * rng.gen::<f64>() - 1.0) / k2)
        })
        .collect();
    let mut u = vec![0.0; op.grid().len()];
    for &g in op.nodes() {
        let p = op.grid().point(g);
        u[g] = modes
            .iter()
            .map(|(k, a)| {
                a * (0..dim)
                    .map(|j| (k[j] as f64 * std::f64::consts::PI * (p[j] - lo[j]) / len[j]).sin())
                    .product::<f64>()
            })
            .sum();
    }
    u
}

#[derive(Clone, Debug)]
pub struct HardySuiteOptions {
    pub eigenfunctions: usize,
    pub random: usize,
    pub max_freq: usize,
    pub seed: u64,
}

impl Default for HardySuiteOptions {
    fn default() -> Self {
        HardySuiteOptions { eigenfunctions: 5, random: 20, max_freq: 4, seed: 0 }
    }
}

/// Hardy checks at spacing `h` for the lowest eigenfunctions of the
/// conforming operator and random band-limited functions. Each test function
/// is also interpolated to `h/2`; the two ratios give the slack
/// `tol_h = 2|ratio(h) − ratio(h/2)| + 1e−6`.
pub fn hardy_suite(dom: &Domain, h: f64, rule: &SphereRule, opts: &HardySuiteOptions) -> Result<Vec<BoundReport>> {
    let coarse = delta_field(dom, h, rule)?;
    let fine = delta_field(dom, h / 2.0, rule)?;
    hardy_suite_fields(dom, &coarse, &fine, opts)
}

pub fn hardy_suite_fields(dom: &Domain, coarse: &DeltaField, fine: &DeltaField, opts: &HardySuiteOptions) -> Result<Vec<BoundReport>> {
    let h = coarse.h();
    let op = assemble_with(dom, h, InteriorRule::Conforming, crate::grid::DEFAULT_NODE_BUDGET)?;
    let mut cases: Vec<(String, Vec<f64>)> = Vec::new();
    let k = opts.eigenfunctions.min(op.dim());
    if k > 0 {
        let res = eigenvalues_with(&op, k, &EigenOptions::default())?;
        for j in 0..k {
            cases.push((format!("eigenfunction_{}", j + 1), res.eigenvector_on_grid(j).ok_or(Error::MissingEigenvectors)?));
        }
    }
    for r in 0..opts.random {
        cases.push((format!("band_limited_{}", r + 1), band_limited(&op, dom, opts.max_freq, opts.seed, r as u64)));
    }
    if cases.is_empty() {
        return Err(invalid("hardy_suite", "no test functions requested"));
    }
    cases
        .into_iter()
        .map(|(name, u)| {
            let u_fine = prolong(coarse.grid(), &u, fine.grid())?;
            let (l1, r1) = hardy_sides(coarse, &u)?;
            let (l2, r2) = hardy_sides(fine, &u_fine)?;
            let (ratio_h, ratio_half) = (l1 / r1, l2 / r2);
            let tol_h = two_grid_tolerance(ratio_h, ratio_half);
            let mut rep = hardy_quadratic_check(coarse, &u, tol_h)?
                .derive("ratio_half", ratio_half)
                .note(name);
            rep.seed = Some(opts.seed);
            Ok(rep)
        })
        .collect()
}
