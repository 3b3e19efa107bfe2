//! Greedy maximal families of disjoint balls centered in the superlevel set
//! `E = {δ ≥ (4λ)^{-1/2}}` and the certificates that go with them.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fmt;
use crate::geometry::{pad, unit_ball_volume, Domain};
use crate::hardy_field::{superlevel_e, DeltaField};
use crate::measure::{overlap_mc, McConfig, OverlapEstimate};
use crate::report::{BoundReport, Relation};
use crate::rng;
use crate::spectral::{count_leq, SpectralResult};

#[derive(Clone, Debug, Serialize)]
pub struct BallPacking {
    pub dim: usize,
    #[serde(serialize_with = "fmt::real")]
    pub rho: f64,
    #[serde(serialize_with = "fmt::real")]
    pub lambda: f64,
    #[serde(serialize_with = "fmt::real")]
    pub theta: f64,
    /// `ρ = c₁ λ^{-1/2}`.
    #[serde(serialize_with = "fmt::real")]
    pub c1: f64,
    pub centers: Vec<Vec<f64>>,
    pub overlaps: Vec<OverlapEstimate>,
    /// Lattice spacing when centers are restricted to `sℤ^d`.
    #[serde(serialize_with = "fmt::real_opt")]
    pub lattice_spacing: Option<f64>,
    #[serde(serialize_with = "fmt::real")]
    pub h: f64,
    pub seed: u64,
    /// Points offered to the greedy pass, in the order they were tried.
    #[serde(skip)]
    pub candidates: Vec<Vec<f64>>,
    /// Grid points of `E`.
    #[serde(skip)]
    pub e_points: Vec<Vec<f64>>,
    /// Grid measure `#E · h^d`.
    #[serde(serialize_with = "fmt::real")]
    pub e_measure: f64,
}

impl BallPacking {
    /// Number of balls `M`.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Smallest estimated overlap `|Ω ∩ B|/|B|` over the balls.
    pub fn min_overlap(&self) -> Option<f64> {
        self.overlaps.iter().map(|o| o.value).reduce(f64::min)
    }

    /// CSV rows `m, x1.., overlap, stderr`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let coords: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        writeln!(out, "m,{},overlap,stderr", coords.join(","))?;
        for (m, (c, o)) in self.centers.iter().zip(&self.overlaps).enumerate() {
            let xs: Vec<String> = c.iter().map(|v| fmt::sig(*v, 12)).collect();
            writeln!(out, "{},{},{},{}", m + 1, xs.join(","), fmt::sig(o.value, 12), fmt::sig(o.stderr, 12))?;
        }
        Ok(())
    }

    /// JSON header `{lambda, theta, rho, M, c2_implied, seed}`.
    pub fn header(&self, c2_implied: Option<f64>) -> serde_json::Value {
        serde_json::json!({
            "lambda": fmt::Real(self.lambda),
            "theta": fmt::Real(self.theta),
            "rho": fmt::Real(self.rho),
            "M": self.len(),
            "c2_implied": c2_implied.map(fmt::Real),
            "lattice_spacing": self.lattice_spacing.map(fmt::Real),
            "seed": self.seed,
        })
    }
}

/// `ρ = (θd/(4λ))^{1/2}`.
pub fn packing_radius(dim: usize, lambda: f64, theta: f64) -> f64 {
    (theta * dim as f64 / (4.0 * lambda)).sqrt()
}

fn check_params(field: &DeltaField, lambda: f64, theta: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(invalid("theta", format!("must lie in (0, 1], got {theta}")));
    }
    let rho = packing_radius(field.dim(), lambda, theta);
    if field.h() > rho / 4.0 * (1.0 + 1e-12) {
        return Err(invalid("h", format!("field spacing {} exceeds rho/4 = {}", field.h(), rho / 4.0)));
    }
    Ok(rho)
}

/// Uniform hash of points into cubes of side `cell`.
struct SpatialHash {
    dim: usize,
    cell: f64,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl SpatialHash {
    fn new(dim: usize, cell: f64) -> Self {
        SpatialHash { dim, cell, buckets: HashMap::new() }
    }

    fn key(&self, p: &[f64]) -> [i64; 3] {
        let mut k = [0i64; 3];
        for j in 0..self.dim {
            k[j] = (p[j] / self.cell).floor() as i64;
        }
        k
    }

    fn insert(&mut self, p: &[f64], id: usize) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(id);
    }

    /// Ids in the `3^d` cubes around `p`.
    fn near(&self, p: &[f64]) -> impl Iterator<Item = usize> + '_ {
        let k = self.key(p);
        let dim = self.dim;
        (0..3usize.pow(dim as u32)).flat_map(move |o| {
            let mut q = k;
            let mut m = o;
            for j in q.iter_mut().take(dim) {
                *j += (m % 3) as i64 - 1;
                m /= 3;
            }
            self.buckets.get(&q).into_iter().flatten().copied()
        })
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Closed balls of radius `ρ` are disjoint when centers are `≥ 2ρ` apart.
fn disjoint(d: f64, rho: f64) -> bool {
    d >= 2.0 * rho * (1.0 - 1e-12)
}

/// Greedy pass in candidate order; returns the kept indices.
fn greedy(candidates: &[Vec<f64>], dim: usize, rho: f64) -> Vec<usize> {
    let mut hash = SpatialHash::new(dim, 2.0 * rho);
    let mut kept: Vec<usize> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        if hash.near(c).all(|k| disjoint(dist(c, &candidates[k]), rho)) {
            hash.insert(c, i);
            kept.push(i);
        }
    }
    kept
}

fn estimate_overlaps(dom: &Domain, centers: &[Vec<f64>], rho: f64, mc: &McConfig) -> Result<Vec<OverlapEstimate>> {
    let inner = McConfig { partitions: 1, ..*mc };
    centers
        .par_iter()
        .enumerate()
        .map(|(m, c)| Ok(overlap_mc(dom, &pad(c)?, rho, &inner, rng::tag(&[0x7061636b, m as u64]))))
        .collect()
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// Maximal disjoint family of balls `B_ρ(x)`, `x ∈ E`, with
/// `ρ = (θd/(4λ))^{1/2}`. Candidates are tried by decreasing `δ`, ties broken
/// lexicographically.
pub fn rozenblum_extract(dom: &Domain, field: &DeltaField, lambda: f64, theta: f64, mc: &McConfig) -> Result<BallPacking> {
    let rho = check_params(field, lambda, theta)?;
    let e = superlevel_e(field, lambda)?;
    let grid = field.grid();
    let mut order: Vec<(f64, Vec<f64>)> = e.indices.iter().map(|&i| (field.values()[i], grid.point(i))).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| lex(&a.1, &b.1)));
    let candidates: Vec<Vec<f64>> = order.into_iter().map(|(_, p)| p).collect();
    let kept = greedy(&candidates, field.dim(), rho);
    let centers: Vec<Vec<f64>> = kept.iter().map(|&i| candidates[i].clone()).collect();
    let overlaps = estimate_overlaps(dom, &centers, rho, mc)?;
    Ok(BallPacking {
        dim: field.dim(),
        rho,
        lambda,
        theta,
        c1: (theta * field.dim() as f64 / 4.0).sqrt(),
        e_points: candidates.clone(),
        candidates,
        centers,
        overlaps,
        lattice_spacing: None,
        h: field.h(),
        seed: mc.seed,
        e_measure: e.measure(field),
    })
}

/// Variant with centers on `(cλ^{-1/2})ℤ^d`: admissible centers are lattice
/// points within `ρ/2` of `E`, tried by decreasing `δ` of the nearest
/// `E`-point that admits them.
pub fn lattice_variant(dom: &Domain, field: &DeltaField, lambda: f64, theta: f64, c: f64, mc: &McConfig) -> Result<BallPacking> {
    let rho = check_params(field, lambda, theta)?;
    if !(c > 0.0) {
        return Err(invalid("c", format!("must be positive, got {c}")));
    }
    let dim = field.dim();
    let s = c / lambda.sqrt();
    if s > rho / (dim as f64).sqrt() * (1.0 + 1e-12) {
        return Err(invalid("c", format!("lattice spacing {s} exceeds rho/sqrt(d) = {}", rho / (dim as f64).sqrt())));
    }
    let e = superlevel_e(field, lambda)?;
    let grid = field.grid();
    let reach = rho / 2.0;
    let r = (reach / s).ceil() as i64;
    let mut best: HashMap<[i64; 3], (f64, f64)> = HashMap::new();
    let mut e_points = Vec::with_capacity(e.len());
    for &i in &e.indices {
        let p = grid.point(i);
        let delta = field.values()[i];
        let base: Vec<i64> = p.iter().map(|x| (x / s).round() as i64).collect();
        let span = 2 * r as usize + 1;
        for o in 0..span.pow(dim as u32) {
            let mut key = [0i64; 3];
            let mut m = o;
            let mut d2 = 0.0;
            for j in 0..dim {
                key[j] = base[j] + (m % span) as i64 - r;
                m /= span;
                let diff = key[j] as f64 * s - p[j];
                d2 += diff * diff;
            }
            let d = d2.sqrt();
            if d <= reach {
                let entry = best.entry(key).or_insert((f64::NEG_INFINITY, f64::INFINITY));
                if delta > entry.0 || (delta == entry.0 && d < entry.1) {
                    *entry = (delta, d);
                }
            }
        }
        e_points.push(p);
    }
    let mut order: Vec<([i64; 3], f64)> = best.into_iter().map(|(k, (delta, _))| (k, delta)).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let candidates: Vec<Vec<f64>> = order.iter().map(|(k, _)| (0..dim).map(|j| k[j] as f64 * s).collect()).collect();
    let kept = greedy(&candidates, dim, rho);
    let centers: Vec<Vec<f64>> = kept.iter().map(|&i| candidates[i].clone()).collect();
    let overlaps = estimate_overlaps(dom, &centers, rho, mc)?;
    Ok(BallPacking {
        dim,
        rho,
        lambda,
        theta,
        c1: (theta * dim as f64 / 4.0).sqrt(),
        candidates,
        e_points,
        centers,
        overlaps,
        lattice_spacing: Some(s),
        h: field.h(),
        seed: mc.seed,
        e_measure: e.measure(field),
    })
}

/// First pair of centers closer than `2ρ`.
fn overlapping_pair(pk: &BallPacking) -> Option<(usize, usize, f64)> {
    let mut hash = SpatialHash::new(pk.dim, 2.0 * pk.rho);
    for (i, c) in pk.centers.iter().enumerate() {
        if let Some(j) = hash.near(c).find(|&j| !disjoint(dist(c, &pk.centers[j]), pk.rho)) {
            return Some((j, i, dist(c, &pk.centers[j])));
        }
        hash.insert(c, i);
    }
    None
}

/// Largest distance from a point of `pts` to the nearest center, capped at
/// `cap` (points farther than `cap` report `∞`).
fn farthest_from_centers(pk: &BallPacking, pts: &[Vec<f64>], cap: f64) -> f64 {
    let mut hash = SpatialHash::new(pk.dim, cap);
    for (i, c) in pk.centers.iter().enumerate() {
        hash.insert(c, i);
    }
    pts.par_iter()
        .map(|p| {
            let d = hash.near(p).map(|k| dist(p, &pk.centers[k])).fold(f64::INFINITY, f64::min);
            if d <= cap {
                d
            } else {
                f64::INFINITY
            }
        })
        .reduce(|| 0.0, f64::max)
}

/// Checks disjointness, the radius formula, density, grid maximality and
/// the covering of `E` by the doubled balls, then evaluates
/// `λ^{d/2}|E| ≤ d^{d/2} ω_d θ^{d/2} M` and the implied `c₂ = M/N_≤(λ)`.
pub fn verify_packing(pk: &BallPacking, res: &SpectralResult) -> Result<BoundReport> {
    let d = pk.dim as f64;
    let count = count_leq(res, pk.lambda)?;
    let m = pk.len();
    let mut failures: Vec<String> = Vec::new();

    if let Some((i, j, dij)) = overlapping_pair(pk) {
        failures.push(format!("balls {} and {} overlap: center distance {} < 2 rho = {}", i + 1, j + 1, dij, 2.0 * pk.rho));
    }
    let rho_formula = packing_radius(pk.dim, pk.lambda, pk.theta);
    if (pk.rho - rho_formula).abs() > 1e-12 * rho_formula {
        failures.push(format!("radius {} differs from (theta d/(4 lambda))^(1/2) = {}", pk.rho, rho_formula));
    }
    if pk.lattice_spacing.is_none() {
        for (i, o) in pk.overlaps.iter().enumerate() {
            if o.value < (1.0 - pk.theta) - 3.0 * o.stderr {
                failures.push(format!("ball {} has overlap {} below 1 - theta = {}", i + 1, o.value, 1.0 - pk.theta));
                break;
            }
        }
    }
    // Every candidate that was not kept must meet a kept ball.
    let reach = farthest_from_centers(pk, &pk.candidates, 2.0 * pk.rho);
    let maximal = pk.candidates.is_empty() || !disjoint(reach, pk.rho);
    if !maximal {
        failures.push("a rejected candidate ball misses every kept ball".into());
    }
    // Doubled balls cover E; for lattice centers the offset adds up to ρ/2.
    let cover = if pk.lattice_spacing.is_some() { 2.5 } else { 2.0 } * pk.rho;
    let e_reach = if pk.e_points.is_empty() { 0.0 } else { farthest_from_centers(pk, &pk.e_points, cover) };
    if e_reach > cover * (1.0 + 1e-12) {
        failures.push(format!("some point of E is farther than {cover} from every center"));
    }

    let lhs = pk.lambda.powf(d / 2.0) * pk.e_measure;
    let rhs = d.powf(d / 2.0) * unit_ball_volume(pk.dim) * pk.theta.powf(d / 2.0) * m as f64;
    let grid_slack = (1.0 + pk.h * d.sqrt() / (2.0 * cover)).powf(d) - 1.0;
    let cover_factor = (cover / (2.0 * pk.rho)).powf(d);
    let chain_ok = lhs <= rhs * cover_factor * (1.0 + grid_slack);
    if !chain_ok {
        failures.push(format!("lambda^(d/2)|E| = {lhs} exceeds {}", rhs * cover_factor * (1.0 + grid_slack)));
    }

    let mut r = BoundReport::new("rozenblum", lhs, rhs * cover_factor, Relation::BoundBelow)
        .param("lambda", pk.lambda)
        .param("theta", pk.theta)
        .param("rho", pk.rho)
        .tol("grid_slack", grid_slack)
        .derive("M", m as f64)
        .derive("count", count as f64)
        .derive("c1", pk.c1)
        .derive("e_measure", pk.e_measure)
        .derive("e_cover_radius", e_reach)
        .with_pass(Some(failures.is_empty()));
    if let Some(s) = pk.lattice_spacing {
        r = r.param("lattice_spacing", s);
    }
    if let Some(mo) = pk.min_overlap() {
        r = r.derive("min_overlap", mo);
    }
    if count > 0 {
        r = r.derive("c2_implied", m as f64 / count as f64);
    } else {
        r = r.note("N(lambda) = 0; c2_implied undefined");
    }
    r.samples = pk.overlaps.first().map(|o| o.samples);
    r.seed = Some(pk.seed);
    r.stderr = pk.overlaps.iter().map(|o| o.stderr).reduce(f64::max);
    r.notes.extend(failures);
    Ok(r)
}

/// Checks that a packing's centers are pairwise `≥ 2ρ` apart, naming the
/// first offending pair otherwise.
pub fn check_disjoint(pk: &BallPacking) -> Result<()> {
    match overlapping_pair(pk) {
        Some((i, j, dij)) => Err(Error::PackingViolation(format!(
            "balls {} and {} at distance {dij} < {}",
            i + 1,
            j + 1,
            2.0 * pk.rho
        ))),
        None => Ok(()),
    }
}

/// Least-squares slope of `log M` against `log λ`.
pub fn growth_exponent(lambdas: &[f64], counts: &[usize]) -> f64 {
    let pts: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(counts)
        .filter(|(_, &m)| m > 0)
        .map(|(&l, &m)| (l.ln(), (m as f64).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Unique lattice keys of the centers, for tests of exact placement.
pub fn lattice_coordinates(pk: &BallPacking) -> Option<Vec<Vec<i64>>> {
    let s = pk.lattice_spacing?;
    let keys: Vec<Vec<i64>> = pk.centers.iter().map(|c| c.iter().map(|x| (x / s).round() as i64).collect()).collect();
    let unique: HashSet<&Vec<i64>> = keys.iter().collect();
    debug_assert_eq!(unique.len(), keys.len());
    Some(keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SphereRule;
    use crate::hardy_field::delta_field;
    use crate::spectral::{assemble, eigenvalues_covering, EigenOptions};

    fn dom(text: &str) -> Domain {
        Domain::from_json(text).unwrap()
    }

    fn square() -> Domain {
        dom(r#"{"dim": 2, "tree": {"box": [[0, 1], [0, 1]]}}"#)
    }

    fn spectrum(d: &Domain, h: f64, lambda: f64) -> SpectralResult {
        eigenvalues_covering(&assemble(d, h).unwrap(), lambda, &EigenOptions { vectors: false, ..EigenOptions::default() }).unwrap()
    }

    #[test]
    fn square_below_lambda1() {
        let sq = square();
        let rule = SphereRule::default_for(2).unwrap();
        let field = delta_field(&sq, 1.0 / 32.0, &rule).unwrap();
        let res = spectrum(&sq, 1.0 / 32.0, 30.0);
        let lambda = res.eigenvalues[0] / 2.0;
        let pk = rozenblum_extract(&sq, &field, lambda, 0.5, &McConfig::new(20_000, 1)).unwrap();
        assert!(pk.len() >= 1);
        assert!((pk.centers[0][0] - 0.5).abs() < 1e-12 && (pk.centers[0][1] - 0.5).abs() < 1e-12);
        assert!((pk.rho - (0.5 * 2.0 / (4.0 * lambda)).sqrt()).abs() < 1e-15);
        let r = verify_packing(&pk, &res).unwrap();
        assert_eq!(r.pass, Some(true), "{r:?}");
        assert_eq!(r.derived["count"], 0.0);
    }

    #[test]
    fn parameter_checks() {
        let sq = square();
        let field = delta_field(&sq, 1.0 / 32.0, &SphereRule::default_for(2).unwrap()).unwrap();
        let mc = McConfig::new(1000, 1);
        assert!(rozenblum_extract(&sq, &field, 10.0, 0.0, &mc).is_err());
        assert!(rozenblum_extract(&sq, &field, 10.0, 1.5, &mc).is_err());
        assert!(rozenblum_extract(&sq, &field, 1000.0, 0.5, &mc).is_err());
        assert!(lattice_variant(&sq, &field, 10.0, 0.5, 10.0, &mc).is_err());
    }

    #[test]
    fn empty_superlevel_gives_empty_packing() {
        let sq = square();
        let field = delta_field(&sq, 1.0 / 16.0, &SphereRule::default_for(2).unwrap()).unwrap();
        let pk = rozenblum_extract(&sq, &field, 1.0, 0.5, &McConfig::new(1000, 1)).unwrap();
        assert!(pk.is_empty());
        let res = spectrum(&sq, 1.0 / 16.0, 1.0);
        let r = verify_packing(&pk, &res).unwrap();
        assert_eq!(r.pass, Some(true));
        assert!(!r.derived.contains_key("c2_implied"));
        let lat = lattice_variant(&sq, &field, 1.0, 0.5, 0.1, &McConfig::new(1000, 1)).unwrap();
        assert!(lat.is_empty());
    }

    #[test]
    fn overlapping_pair_is_reported() {
        let sq = square();
        let field = delta_field(&sq, 1.0 / 64.0, &SphereRule::default_for(2).unwrap()).unwrap();
        let mut pk = rozenblum_extract(&sq, &field, 50.0, 0.5, &McConfig::new(1000, 1)).unwrap();
        let rho = pk.rho;
        pk.centers = vec![vec![0.5, 0.5], vec![0.5 + 1.9 * rho, 0.5]];
        pk.overlaps.truncate(2);
        let res = spectrum(&sq, 1.0 / 64.0, 50.0);
        let r = verify_packing(&pk, &res).unwrap();
        assert_eq!(r.pass, Some(false));
        assert!(r.notes.iter().any(|n| n.contains("balls 1 and 2 overlap")), "{:?}", r.notes);
        assert!(matches!(check_disjoint(&pk), Err(Error::PackingViolation(_))));
    }

    #[test]
    fn lattice_centers_and_count() {
        let sq = square();
        let field = delta_field(&sq, 1.0 / 128.0, &SphereRule::default_for(2).unwrap()).unwrap();
        let (lambda, theta) = (200.0, 0.5);
        let mc = McConfig::new(2000, 3);
        let free = rozenblum_extract(&sq, &field, lambda, theta, &mc).unwrap();
        let rho = free.rho;
        let c = rho / 2f64.sqrt() * lambda.sqrt();
        let lat = lattice_variant(&sq, &field, lambda, theta, c, &mc).unwrap();
        let s = lat.lattice_spacing.unwrap();
        for p in &lat.centers {
            for x in p {
                assert!((x / s - (x / s).round()).abs() < 1e-12);
            }
        }
        assert_eq!(lattice_coordinates(&lat).unwrap().len(), lat.len());
        assert!(lat.len() * 9 >= free.len(), "{} vs {}", lat.len(), free.len());
        let res = spectrum(&sq, 1.0 / 64.0, lambda);
        let r = verify_packing(&lat, &res).unwrap();
        assert_eq!(r.pass, Some(true), "{r:?}");
        let r = verify_packing(&free, &res).unwrap();
        assert_eq!(r.pass, Some(true), "{r:?}");
        assert!(r.derived["c2_implied"] > 0.0);
    }

    #[test]
    fn scaling_keeps_the_count() {
        let rule = SphereRule::default_for(2).unwrap();
        let big = dom(r#"{"dim": 2, "tree": {"box": [[0, 2], [0, 2]]}}"#);
        let mc = McConfig::new(1000, 1);
        let a = rozenblum_extract(&square(), &delta_field(&square(), 1.0 / 128.0, &rule).unwrap(), 100.0, 0.5, &mc).unwrap();
        let b = rozenblum_extract(&big, &delta_field(&big, 2.0 / 128.0, &rule).unwrap(), 25.0, 0.5, &mc).unwrap();
        assert!((b.rho - 2.0 * a.rho).abs() < 1e-12);
        assert_eq!(a.len(), b.len());
    }

    /// δ on the unit disk depends on |x| only; the chord through x in
    /// direction (cos t, sin t) has exits −p ± sqrt(p² − r² + 1), p = x·ω.
    fn disk_delta(r: f64) -> f64 {
        let n = 4000;
        let mut s = 0.0;
        for i in 0..n {
            let t = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            let p = r * t.cos();
            let q = (p * p - r * r + 1.0).sqrt();
            let dw = (q - p).min(q + p);
            s += 1.0 / (dw * dw);
        }
        (2.0 * s / n as f64).powf(-0.5)
    }

    #[test]
    fn disk_count_against_brute_force() {
        let disk = dom(r#"{"dim": 2, "tree": {"ball": {"center": [0, 0], "radius": 1}}}"#);
        let (lambda, theta) = (2000.0, 1.0);
        let field = delta_field(&disk, 1.0 / 256.0, &SphereRule::default_for(2).unwrap()).unwrap();
        let pk = rozenblum_extract(&disk, &field, lambda, theta, &McConfig::new(1000, 2)).unwrap();
        let rho = pk.rho;
        assert!((rho - (2.0 / (4.0 * lambda)).sqrt()).abs() < 1e-15);
        let inner = (pk.e_measure / std::f64::consts::PI).sqrt();
        let area_ratio = inner * inner / (2.0 * rho).powi(2);
        let m = pk.len() as f64;
        assert!(m >= area_ratio / 4.0 && m <= 4.0 * area_ratio, "{m} vs {area_ratio}");

        // Independent greedy on the grid of half the spacing.
        let threshold = (4.0 * lambda).powf(-0.5);
        let mut lo = 0.0;
        let mut hi = 1.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if disk_delta(mid) >= threshold { lo = mid } else { hi = mid }
        }
        let h = 1.0 / 512.0;
        let n = 512i64;
        let mut pts: Vec<(f64, f64, f64)> = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                let (x, y) = (i as f64 * h, j as f64 * h);
                let r = x.hypot(y);
                if r < lo {
                    pts.push((r, x, y));
                }
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
        let cell = 2.0 * rho;
        let mut buckets: HashMap<(i64, i64), Vec<(f64, f64)>> = HashMap::new();
        let mut kept = 0usize;
        for &(_, x, y) in &pts {
            let (cx, cy) = ((x / cell).floor() as i64, (y / cell).floor() as i64);
            let clear = (-1..=1).all(|a| (-1..=1).all(|b| {
                buckets.get(&(cx + a, cy + b)).map_or(true, |v| v.iter().all(|&(u, w)| (u - x).hypot(w - y) >= 2.0 * rho))
            }));
            if clear {
                buckets.entry((cx, cy)).or_default().push((x, y));
                kept += 1;
            }
        }
        let ratio = m / kept as f64;
        assert!(ratio > 0.8 && ratio < 1.25, "{m} vs brute force {kept}");
    }
}
