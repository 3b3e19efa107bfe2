//! Ball overlaps `|Ω ∩ B_ρ(x)| / |B_ρ(x)|`, their supremum over `x ∈ Ω`, and
//! the radius `ρ_θ` at which that supremum first drops to `θ`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fmt;
use crate::geometry::{pad, Domain, P3};
use crate::grid::Grid;
use crate::report::{BoundReport, Relation};
use crate::rng;

/// Default number of independent sample partitions per estimate.
pub const DEFAULT_PARTITIONS: usize = 8;
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapMethod {
    MonteCarlo,
    Grid,
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapEstimate {
    #[serde(serialize_with = "fmt::real")]
    pub value: f64,
    #[serde(serialize_with = "fmt::real")]
    pub stderr: f64,
    pub samples: usize,
    pub method: OverlapMethod,
}

/// Sampling configuration shared by the Monte Carlo routines.
#[derive(Clone, Copy, Debug)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub partitions: usize,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        McConfig { samples, seed, partitions: DEFAULT_PARTITIONS }
    }
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig::new(DEFAULT_SAMPLES, 0)
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < 1000 {
        return Err(invalid("samples", format!("need at least 1000, got {samples}")));
    }
    Ok(())
}

/// Uniform sample in the unit ball by rejection from the cube.
#[inline]
fn unit_ball_sample<R: Rng>(rng: &mut R, dim: usize) -> P3 {
    loop {
        let mut p = [0.0; 3];
        let mut r2 = 0.0;
        for c in p.iter_mut().take(dim) {
            *c = 2.0 * rng.gen::<f64>() - 1.0;
            r2 += *c * *c;
        }
        if r2 < 1.0 {
            return p;
        }
    }
}

/// Monte Carlo overlap on stream `stream`; deterministic in
/// `(seed, stream, samples, partitions)`.
pub(crate) fn overlap_mc(dom: &Domain, x: &P3, rho: f64, cfg: &McConfig, stream: u64) -> OverlapEstimate {
    let dim = dom.dim();
    let parts = cfg.partitions.max(1);
    let base = cfg.samples / parts;
    let extra = cfg.samples % parts;
    let hits: usize = (0..parts)
        .into_par_iter()
        .map(|p| {
            let n = base + usize::from(p < extra);
            let mut r = rng::stream(cfg.seed, rng::tag(&[stream, p as u64]));
            let mut hits = 0usize;
            for _ in 0..n {
                let u = unit_ball_sample(&mut r, dim);
                let q = [x[0] + rho * u[0], x[1] + rho * u[1], x[2] + rho * u[2]];
                hits += usize::from(dom.contains_p(&q));
            }
            hits
        })
        .sum();
    let n = cfg.samples as f64;
    let value = hits as f64 / n;
    OverlapEstimate {
        value,
        stderr: (value * (1.0 - value) / n).sqrt(),
        samples: cfg.samples,
        method: OverlapMethod::MonteCarlo,
    }
}

/// Monte Carlo estimate of `|Ω ∩ B_ρ(x)| / |B_ρ(x)|`. `x` need not lie in `Ω`.
pub fn ball_overlap(dom: &Domain, x: &[f64], rho: f64, samples: usize, seed: u64) -> Result<OverlapEstimate> {
    ball_overlap_with(dom, x, rho, &McConfig::new(samples, seed))
}

pub fn ball_overlap_with(dom: &Domain, x: &[f64], rho: f64, cfg: &McConfig) -> Result<OverlapEstimate> {
    if x.len() != dom.dim() {
        return Err(Error::DimensionMismatch { expected: dom.dim(), got: x.len() });
    }
    if !(rho > 0.0) {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    check_samples(cfg.samples)?;
    Ok(overlap_mc(dom, &pad(x)?, rho, cfg, 0))
}

/// Midpoint-rule overlap on `cells` subdivisions per axis of the ball's
/// bounding cube. `stderr` is half the ball-volume fraction of cells whose
/// corners disagree on membership, so it vanishes when the ball is resolved
/// exactly.
pub fn ball_overlap_grid(dom: &Domain, x: &[f64], rho: f64, cells: usize) -> Result<OverlapEstimate> {
    if x.len() != dom.dim() {
        return Err(Error::DimensionMismatch { expected: dom.dim(), got: x.len() });
    }
    if !(rho > 0.0) || cells < 2 {
        return Err(invalid("rho", "need rho > 0 and at least 2 cells"));
    }
    let dim = dom.dim();
    let c = pad(x)?;
    let step = 2.0 * rho / cells as f64;
    let total = cells.pow(dim as u32);
    let (mut inside_ball, mut hits, mut mixed) = (0usize, 0usize, 0usize);
    for idx in 0..total {
        let mut m = idx;
        let mut p = [0.0; 3];
        let mut r2 = 0.0;
        for k in 0..dim {
            let i = m % cells;
            m /= cells;
            p[k] = -rho + (i as f64 + 0.5) * step;
            r2 += p[k] * p[k];
        }
        if r2 >= rho * rho {
            continue;
        }
        inside_ball += 1;
        let q = [c[0] + p[0], c[1] + p[1], c[2] + p[2]];
        let hit = dom.contains_p(&q);
        hits += usize::from(hit);
        let corners_disagree = (0..1usize << dim).any(|mask| {
            let mut v = q;
            for k in 0..dim {
                v[k] += if mask >> k & 1 == 1 { 0.5 * step } else { -0.5 * step };
            }
            dom.contains_p(&v) != hit
        });
        mixed += usize::from(corners_disagree);
    }
    let n = inside_ball.max(1) as f64;
    Ok(OverlapEstimate {
        value: hits as f64 / n,
        stderr: 0.5 * mixed as f64 / n,
        samples: inside_ball,
        method: OverlapMethod::Grid,
    })
}

/// Checks `|Ω ∩ B_ρ(x)| ≥ (1 − ρ²/(d δ(x)²)) |B_ρ(x)|`. Estimates within three
/// standard errors of the bound are redone with ten times the samples.
pub fn lemma1_check(dom: &Domain, x: &[f64], rho: f64, delta_x: f64, samples: usize, seed: u64) -> Result<BoundReport> {
    lemma1_check_with(dom, x, rho, delta_x, &McConfig::new(samples, seed))
}

pub fn lemma1_check_with(dom: &Domain, x: &[f64], rho: f64, delta_x: f64, cfg: &McConfig) -> Result<BoundReport> {
    if !dom.contains(x)? {
        return Err(Error::NotInDomain(x.to_vec()));
    }
    if !(delta_x > 0.0) {
        return Err(invalid("delta_x", "must be positive"));
    }
    let d = dom.dim() as f64;
    let rhs = (1.0 - rho * rho / (d * delta_x * delta_x)).max(0.0);
    let mut est = ball_overlap_with(dom, x, rho, cfg)?;
    let mut cfg_used = *cfg;
    if est.stderr > 0.0 && (est.value - rhs).abs() < 3.0 * est.stderr {
        cfg_used.samples = cfg.samples * 10;
        est = overlap_mc(dom, &pad(x)?, rho, &cfg_used, 1);
    }
    let pass = est.value >= rhs - 3.0 * est.stderr;
    let mut r = BoundReport::new("lemma1", rhs, est.value, Relation::BoundBelow)
        .param("rho", rho)
        .param("delta", delta_x)
        .tol("stderr_multiple", 3.0)
        .with_pass(Some(pass));
    if rhs == 0.0 {
        r = r.note("bound is vacuous (rho >= sqrt(d) * delta)");
    }
    r.stderr = Some(est.stderr);
    r.samples = Some(cfg_used.samples);
    r.seed = Some(cfg.seed);
    Ok(r)
}

/// Approximate `sup_{x ∈ Ω} |Ω ∩ B_ρ(x)| / |B_ρ(x)|`.
#[derive(Clone, Debug, Serialize)]
pub struct SupOverlap {
    #[serde(serialize_with = "fmt::real")]
    pub rho: f64,
    /// Independent re-estimate at the maximizer.
    pub estimate: OverlapEstimate,
    #[serde(serialize_with = "fmt::real_vec")]
    pub argmax: Vec<f64>,
    #[serde(serialize_with = "fmt::real")]
    pub grid_h: f64,
    /// Lipschitz slack `d · grid_h / ρ` for points the grid may have missed.
    #[serde(serialize_with = "fmt::real")]
    pub slack: f64,
    pub candidates: usize,
}

/// Scans grid nodes of the bounding box that lie in `Ω` with a reduced
/// sample count, refines once on the half-spaced grid around the best node,
/// then re-estimates the winner with the full sample count on a fresh stream.
pub fn sup_overlap_ratio(dom: &Domain, rho: f64, grid_h: f64, samples: usize, seed: u64) -> Result<SupOverlap> {
    sup_overlap_ratio_with(dom, rho, grid_h, &McConfig::new(samples, seed))
}

pub fn sup_overlap_ratio_with(dom: &Domain, rho: f64, grid_h: f64, cfg: &McConfig) -> Result<SupOverlap> {
    if !(rho > 0.0) {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    if !(grid_h > 0.0 && grid_h <= rho / 2.0 * (1.0 + 1e-12)) {
        return Err(invalid("grid_h", format!("need 0 < grid_h <= rho/2, got {grid_h} for rho {rho}")));
    }
    check_samples(cfg.samples)?;
    let dim = dom.dim();
    let grid = Grid::new(dom.bbox(), grid_h)?;
    let nodes: Vec<usize> = (0..grid.len()).filter(|&i| dom.contains_p(&grid.point_p(i))).collect();
    if nodes.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let coarse = McConfig { samples: (cfg.samples / 16).max(1000), ..*cfg };
    let rho_tag = rho.to_bits();

    let mut best: Option<(P3, OverlapEstimate)> = None;
    for &i in &nodes {
        let p = grid.point_p(i);
        let est = overlap_mc(dom, &p, rho, &coarse, rng::tag(&[1, rho_tag, i as u64]));
        let full = est.value >= 1.0;
        if best.as_ref().map_or(true, |(_, b)| est.value > b.value) {
            best = Some((p, est));
        }
        if full {
            break;
        }
    }
    let (mut arg, mut top) = best.expect("nonempty");

    if top.value < 1.0 {
        let center = arg;
        let offsets = 3usize.pow(dim as u32);
        for (j, o) in (0..offsets).enumerate() {
            let mut q = center;
            let mut m = o;
            let mut zero = true;
            for c in q.iter_mut().take(dim) {
                let s = (m % 3) as f64 - 1.0;
                m /= 3;
                zero &= s == 0.0;
                *c += s * 0.5 * grid_h;
            }
            if zero || !dom.contains_p(&q) {
                continue;
            }
            let est = overlap_mc(dom, &q, rho, &coarse, rng::tag(&[2, rho_tag, j as u64]));
            if est.value > top.value {
                top = est;
                arg = q;
            }
        }
    }

    let estimate = overlap_mc(dom, &arg, rho, cfg, rng::tag(&[3, rho_tag]));
    Ok(SupOverlap {
        rho,
        estimate,
        argmax: arg[..dim].to_vec(),
        grid_h,
        slack: dim as f64 * grid_h / rho,
        candidates: nodes.len(),
    })
}

#[derive(Clone, Debug)]
pub struct RhoThetaOptions {
    pub mc: McConfig,
    /// Search spacing for a given `ρ`; default `min(ρ/2, shortest bbox side / 16)`.
    pub grid_h: Option<f64>,
}

impl Default for RhoThetaOptions {
    fn default() -> Self {
        RhoThetaOptions { mc: McConfig::default(), grid_h: None }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoSample {
    #[serde(serialize_with = "fmt::real")]
    pub rho: f64,
    #[serde(serialize_with = "fmt::real")]
    pub ratio: f64,
    #[serde(serialize_with = "fmt::real")]
    pub stderr: f64,
    #[serde(serialize_with = "fmt::real_vec")]
    pub argmax: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoTheta {
    #[serde(serialize_with = "fmt::real")]
    pub theta: f64,
    /// First `ρ` on the grid with sup ratio `≤ θ`; `None` means `+∞`.
    #[serde(serialize_with = "fmt::real_opt")]
    pub value: Option<f64>,
    /// Grid radii after the first crossing whose sup ratio exceeds `θ` again.
    #[serde(serialize_with = "fmt::real_vec")]
    pub later_violations: Vec<f64>,
    pub sweep: Vec<RhoSample>,
    pub seed: u64,
}

/// `ρ_θ = inf{ρ : sup_x |Ω ∩ B_ρ(x)|/|B_ρ(x)| ≤ θ}` by an explicit scan of
/// `rho_grid`. Monotonicity in `ρ` is not assumed.
pub fn rho_theta(dom: &Domain, theta: f64, rho_grid: &[f64], opts: &RhoThetaOptions) -> Result<RhoTheta> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid("theta", format!("must lie in (0, 1), got {theta}")));
    }
    if rho_grid.is_empty() || rho_grid.windows(2).any(|w| !(w[0] < w[1])) || !(rho_grid[0] > 0.0) {
        return Err(invalid("rho_grid", "must be nonempty, positive and strictly ascending"));
    }
    let side = dom.bbox().lengths().into_iter().fold(f64::INFINITY, f64::min);
    let mut sweep = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let gh = opts.grid_h.unwrap_or(f64::INFINITY).min(rho / 2.0).min(side / 16.0);
        let sup = sup_overlap_ratio_with(dom, rho, gh, &opts.mc)?;
        let mut est = sup.estimate;
        if est.stderr > 0.0 && (est.value - theta).abs() < 3.0 * est.stderr {
            let fine = McConfig { samples: opts.mc.samples * 10, ..opts.mc };
            est = overlap_mc(dom, &pad(&sup.argmax)?, rho, &fine, rng::tag(&[4, rho.to_bits()]));
        }
        sweep.push(RhoSample { rho, ratio: est.value, stderr: est.stderr, argmax: sup.argmax });
    }
    let first = sweep.iter().position(|s| s.ratio <= theta);
    let later_violations = match first {
        Some(i) => sweep[i + 1..].iter().filter(|s| s.ratio > theta).map(|s| s.rho).collect(),
        None => Vec::new(),
    };
    Ok(RhoTheta {
        theta,
        value: first.map(|i| sweep[i].rho),
        later_violations,
        sweep,
        seed: opts.mc.seed,
    })
}

/// `count` equispaced radii `diam(bbox)·i/count`, `i = 1..=count`.
pub fn default_rho_grid(dom: &Domain, count: usize) -> Vec<f64> {
    let diam = dom.bbox().diameter();
    (1..=count).map(|i| diam * i as f64 / count as f64).collect()
}

/// Monte Carlo `|Ω|` from uniform samples in the bounding box; returns
/// `(volume, stderr)`.
pub fn volume(dom: &Domain, cfg: &McConfig) -> Result<(f64, f64)> {
    check_samples(cfg.samples)?;
    let b = *dom.bbox();
    let dim = dom.dim();
    let box_vol: f64 = b.lengths().iter().product();
    let parts = cfg.partitions.max(1);
    let hits: usize = (0..parts)
        .into_par_iter()
        .map(|p| {
            let n = cfg.samples / parts + usize::from(p < cfg.samples % parts);
            let mut r = rng::stream(cfg.seed, rng::tag(&[0x766f6c, p as u64]));
            (0..n)
                .filter(|_| {
                    let mut q = [0.0; 3];
                    for k in 0..dim {
                        q[k] = b.lo[k] + (b.hi[k] - b.lo[k]) * r.gen::<f64>();
                    }
                    dom.contains_p(&q)
                })
                .count()
        })
        .sum();
    let f = hits as f64 / cfg.samples as f64;
    Ok((f * box_vol, box_vol * (f * (1.0 - f) / cfg.samples as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dom(text: &str) -> Domain {
        Domain::from_json(text).unwrap()
    }

    fn square() -> Domain {
        dom(r#"{"dim": 2, "tree": {"box": [[0, 1], [0, 1]]}}"#)
    }

    fn disk() -> Domain {
        dom(r#"{"dim": 2, "tree": {"ball": {"center": [0, 0], "radius": 1}}}"#)
    }

    fn interval() -> Domain {
        dom(r#"{"dim": 1, "tree": {"box": [[0, 1]]}}"#)
    }

    #[test]
    fn contained_ball() {
        let e = ball_overlap(&disk(), &[0.0, 0.0], 0.5, 10_000, 1).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.stderr, 0.0);
        let g = ball_overlap_grid(&disk(), &[0.0, 0.0], 0.5, 64).unwrap();
        assert_eq!((g.value, g.stderr), (1.0, 0.0));
    }

    #[test]
    fn half_plane_and_corner() {
        let hp = dom(r#"{"dim": 2, "tree": {"halfspace": {"normal": [0, 1], "offset": 0}}, "bbox": [[-2, 2], [0, 2]]}"#);
        let e = ball_overlap(&hp, &[0.0, 0.0], 1.0, 100_000, 5).unwrap();
        assert!((e.value - 0.5).abs() <= 3.0 * e.stderr, "{e:?}");
        let e = ball_overlap(&square(), &[0.0, 0.0], 0.1, 100_000, 6).unwrap();
        assert!((e.value - 0.25).abs() <= 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn deterministic_for_seed() {
        let a = ball_overlap(&square(), &[0.1, 0.2], 0.3, 5000, 11).unwrap();
        let b = ball_overlap(&square(), &[0.1, 0.2], 0.3, 5000, 11).unwrap();
        let c = ball_overlap(&square(), &[0.1, 0.2], 0.3, 5000, 12).unwrap();
        assert_eq!(a.value, b.value);
        assert_ne!(a.value, c.value);
        assert!(ball_overlap(&square(), &[0.1, 0.2], 0.3, 999, 11).is_err());
    }

    #[test]
    fn lemma1_examples() {
        let r = lemma1_check(&disk(), &[0.0, 0.0], 0.5, 0.5f64.sqrt(), 10_000, 2).unwrap();
        assert!((r.bound_value - 0.75).abs() < 1e-12);
        assert_eq!(r.reference_value, 1.0);
        assert_eq!(r.pass, Some(true));

        let r = lemma1_check(&interval(), &[0.5], 0.4, 0.5, 10_000, 2).unwrap();
        assert!((r.bound_value - 0.36).abs() < 1e-12);
        assert_eq!(r.reference_value, 1.0);
        assert_eq!(r.pass, Some(true));

        let r = lemma1_check(&square(), &[0.1, 0.1], 0.5, 0.2, 10_000, 2).unwrap();
        assert_eq!(r.bound_value, 0.0);
        assert_eq!(r.pass, Some(true));
        let row = serde_json::to_value(r.row()).unwrap();
        for key in ["lhs", "rhs", "stderr", "samples", "seed", "pass"] {
            assert!(row.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn sup_examples() {
        let s = sup_overlap_ratio(&square(), 1.0, 0.5, 100_000, 3).unwrap();
        assert!((s.estimate.value - 1.0 / PI).abs() < 0.01, "{s:?}");
        let s = sup_overlap_ratio(&disk(), 0.5, 0.25, 10_000, 3).unwrap();
        assert_eq!(s.estimate.value, 1.0);
        let s = sup_overlap_ratio(&interval(), 1.0, 0.5, 100_000, 3).unwrap();
        assert!((s.estimate.value - 0.5).abs() < 0.01, "{s:?}");
        assert!(sup_overlap_ratio(&square(), 1.0, 0.6, 10_000, 3).is_err());
    }

    #[test]
    fn rho_theta_rejects_bad_theta() {
        assert!(rho_theta(&square(), 1.0, &[0.5], &RhoThetaOptions::default()).is_err());
        assert!(rho_theta(&square(), 0.0, &[0.5], &RhoThetaOptions::default()).is_err());
        assert!(rho_theta(&square(), 0.5, &[0.6, 0.5], &RhoThetaOptions::default()).is_err());
    }

    #[test]
    fn rho_theta_disk_small_radii_never_qualify() {
        let opts = RhoThetaOptions { mc: McConfig::new(4000, 1), grid_h: None };
        let r = rho_theta(&disk(), 0.99, &[0.1, 0.3, 0.6, 1.5], &opts).unwrap();
        let v = r.value.unwrap();
        assert!(v > 1.0, "{r:?}");
    }

    #[test]
    fn volume_of_disk() {
        let (v, se) = volume(&disk(), &McConfig::new(200_000, 9)).unwrap();
        assert!((v - PI).abs() < 4.0 * se);
    }
}
