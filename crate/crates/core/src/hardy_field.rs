//! The mean-distance function
//! `δ(x) = (d |S^{d-1}|^{-1} ∫ d_ω(x)^{-2} dω)^{-1/2}` pointwise and on grids.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::geometry::{pad, sphere_area, Domain, SphereRule, P3};
use crate::grid::{Grid, DEFAULT_NODE_BUDGET};

/// `δ(x)` with `rule`. Directions whose line never leaves `Ω` contribute 0;
/// returns `+∞` if every sampled direction does.
pub fn delta_at(dom: &Domain, x: &[f64], rule: &SphereRule) -> Result<f64> {
    if x.len() != dom.dim() {
        return Err(Error::DimensionMismatch { expected: dom.dim(), got: x.len() });
    }
    if rule.dim() != dom.dim() {
        return Err(Error::DimensionMismatch { expected: dom.dim(), got: rule.dim() });
    }
    let p = pad(x)?;
    if !dom.contains_p(&p) {
        return Err(Error::NotInDomain(x.to_vec()));
    }
    Ok(delta_pair(dom, &p, rule, None).0)
}

fn from_mean(dim: usize, weighted_sum: f64) -> f64 {
    let mean = dim as f64 * weighted_sum / sphere_area(dim);
    if mean > 0.0 {
        mean.powf(-0.5)
    } else {
        f64::INFINITY
    }
}

/// `δ` with `rule` and, optionally, with a coarser rule for error estimates.
/// Antipodal rules evaluate each line once.
pub(crate) fn delta_pair(dom: &Domain, p: &P3, rule: &SphereRule, coarse: Option<&SphereRule>) -> (f64, Option<f64>) {
    let dim = dom.dim();
    let nodes = rule.nodes();
    let w = rule.weights();
    let n = nodes.len();
    let inv_sq = |d: f64| if d.is_finite() { 1.0 / (d * d) } else { 0.0 };

    if rule.is_antipodal() {
        let half = n / 2;
        // In 2-d the coarsened rule is the even-indexed nodes of this one.
        let shared_coarse = dim == 2 && coarse.is_some() && half % 2 == 0;
        let mut fine = 0.0;
        let mut coarse_sum = 0.0;
        for i in 0..half {
            let v = inv_sq(dom.d_omega_p(p, nodes[i].raw()));
            fine += (w[i] + w[i + half]) * v;
            if shared_coarse && i % 2 == 0 {
                coarse_sum += 2.0 * v;
            }
        }
        let fine = from_mean(dim, fine);
        let coarse = match coarse {
            None => None,
            Some(c) if shared_coarse => Some(from_mean(dim, coarse_sum * c.weights()[0])),
            Some(c) => Some(delta_pair(dom, p, c, None).0),
        };
        return (fine, coarse);
    }

    let fine: f64 = nodes.iter().zip(w).map(|(u, &c)| c * inv_sq(dom.d_omega_p(p, u.raw()))).sum();
    (from_mean(dim, fine), coarse.map(|c| delta_pair(dom, p, c, None).0))
}

/// `δ` sampled on the uniform grid over the domain's bounding box.
#[derive(Clone, Debug)]
pub struct DeltaField {
    domain: Domain,
    grid: Grid,
    /// NaN marks nodes outside `Ω`.
    values: Vec<f64>,
    rule: SphereRule,
    interior: usize,
    quad_error: f64,
}

#[derive(Clone, Debug)]
pub struct FieldOptions {
    pub budget: usize,
    /// Compare against the rule with half the nodes.
    pub estimate_error: bool,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions { budget: DEFAULT_NODE_BUDGET, estimate_error: true }
    }
}

/// Evaluates `δ` at every grid node inside `Ω`.
pub fn delta_field(dom: &Domain, h: f64, rule: &SphereRule) -> Result<DeltaField> {
    delta_field_with(dom, h, rule, &FieldOptions::default())
}

pub fn delta_field_with(dom: &Domain, h: f64, rule: &SphereRule, opts: &FieldOptions) -> Result<DeltaField> {
    let diam = dom.diameter();
    if diam > 0.0 && h > diam / 2.0 {
        return Err(invalid("h", format!("{h} exceeds diam(bbox)/2 = {}", diam / 2.0)));
    }
    if rule.dim() != dom.dim() {
        return Err(Error::DimensionMismatch { expected: dom.dim(), got: rule.dim() });
    }
    let grid = Grid::new(dom.bbox(), h)?;
    grid.check_budget(opts.budget)?;
    let coarse = if opts.estimate_error { rule.coarsened() } else { None };
    let pairs: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = grid.point_p(i);
            if !dom.contains_p(&p) {
                return (f64::NAN, 0.0);
            }
            let (fine, c) = delta_pair(dom, &p, rule, coarse.as_ref());
            let err = match c {
                Some(c) if fine.is_finite() && c.is_finite() => (fine - c).abs(),
                _ => 0.0,
            };
            (fine, err)
        })
        .collect();
    let interior = pairs.iter().filter(|(v, _)| !v.is_nan()).count();
    let quad_error = pairs.iter().map(|&(_, e)| e).fold(0.0, f64::max);
    let values = pairs.into_iter().map(|(v, _)| v).collect();
    Ok(DeltaField { domain: dom.clone(), grid, values, rule: rule.clone(), interior, quad_error })
}

impl DeltaField {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn rule(&self) -> &SphereRule {
        &self.rule
    }

    /// Raw values, NaN outside `Ω`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> Option<f64> {
        self.values.get(idx).copied().filter(|v| !v.is_nan())
    }

    pub fn is_inside(&self, idx: usize) -> bool {
        !self.values[idx].is_nan()
    }

    pub fn interior_count(&self) -> usize {
        self.interior
    }

    /// Largest `|δ_n − δ_{n/2}|` over the grid.
    pub fn quadrature_error(&self) -> f64 {
        self.quad_error
    }

    /// Indices of interior nodes.
    pub fn interior(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().enumerate().filter(|(_, v)| !v.is_nan()).map(|(i, _)| i)
    }

    pub fn max(&self) -> Option<(usize, f64)> {
        self.interior()
            .map(|i| (i, self.values[i]))
            .fold(None, |best, (i, v)| match best {
                Some((_, b)) if b >= v => best,
                _ => Some((i, v)),
            })
    }

    /// One row per grid node: coordinates, `δ` at 6 significant digits and an
    /// inside/outside flag.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.dim();
        let header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        writeln!(out, "{},delta,flag", header.join(","))?;
        for (i, &v) in self.values.iter().enumerate() {
            let coords: Vec<String> = self.grid.point(i).iter().map(|c| crate::fmt::sig(*c, 12)).collect();
            if v.is_nan() {
                writeln!(out, "{},,outside", coords.join(","))?;
            } else {
                writeln!(out, "{},{},inside", coords.join(","), crate::fmt::sig(v, 6))?;
            }
        }
        Ok(())
    }
}

/// Grid nodes of `E = {x ∈ Ω : δ(x) ≥ (4λ)^{-1/2}}`.
#[derive(Clone, Debug)]
pub struct Superlevel {
    pub lambda: f64,
    pub threshold: f64,
    pub indices: Vec<usize>,
}

pub fn superlevel_e(field: &DeltaField, lambda: f64) -> Result<Superlevel> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", format!("must be positive, got {lambda}")));
    }
    let threshold = (4.0 * lambda).powf(-0.5);
    let indices = field.interior().filter(|&i| field.values[i] >= threshold).collect();
    Ok(Superlevel { lambda, threshold, indices })
}

impl Superlevel {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Grid measure `#E · h^d`.
    pub fn measure(&self, field: &DeltaField) -> f64 {
        self.indices.len() as f64 * field.grid().cell_volume()
    }
}
