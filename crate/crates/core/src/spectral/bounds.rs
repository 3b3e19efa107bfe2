use crate::error::{invalid, Error, Result};
use crate::geometry::{unit_ball_volume, Domain};
use crate::hardy_field::DeltaField;
use crate::measure::{sup_overlap_ratio_with, McConfig};
use crate::report::{BoundReport, Relation};

use super::eigen::SpectralResult;

/// `N_≤(λ)`: computed eigenvalues in `[0, λ]`.
pub fn count_leq(res: &SpectralResult, lambda: f64) -> Result<usize> {
    if lambda > res.complete_through {
        return Err(Error::InsufficientSpectrum { largest: res.largest(), requested: lambda });
    }
    Ok(res.eigenvalues.iter().filter(|&&v| v <= lambda).count())
}

/// `(2π)^{-d} ω_d |Ω| λ^{d/2}`.
pub fn weyl_prediction(dom: &Domain, lambda: f64, vol: f64) -> f64 {
    weyl(dom.dim(), lambda, vol)
}

pub(crate) fn weyl(dim: usize, lambda: f64, vol: f64) -> f64 {
    let d = dim as f64;
    (2.0 * std::f64::consts::PI).powf(-d) * unit_ball_volume(dim) * vol * lambda.max(0.0).powf(d / 2.0)
}

/// `N_≤(λ)` beside the Weyl term; informational, no pass/fail.
pub fn weyl_report(dom: &Domain, res: &SpectralResult, lambda: f64, mc: &McConfig) -> Result<BoundReport> {
    let count = count_leq(res, lambda)?;
    let (vol, se) = crate::measure::volume(dom, mc)?;
    let pred = weyl(dom.dim(), lambda, vol);
    let mut r = BoundReport::new("weyl", pred, count as f64, Relation::BoundBelow)
        .param("lambda", lambda)
        .param("h", res.h)
        .derive("count", count as f64)
        .derive("volume", vol)
        .derive("weyl", pred);
    if pred > 0.0 {
        r = r.derive("count_over_weyl", count as f64 / pred);
    }
    r.stderr = Some(weyl(dom.dim(), lambda, se));
    r.samples = Some(mc.samples);
    r.seed = Some(mc.seed);
    Ok(r)
}

#[derive(Clone, Debug)]
pub struct LiebOptions {
    pub mc: McConfig,
    /// Search spacing for the supremum; default `min(ρ/2, shortest bbox side/16)`.
    pub grid_h: Option<f64>,
    pub tol_disc: f64,
}

impl Default for LiebOptions {
    fn default() -> Self {
        LiebOptions { mc: McConfig::default(), grid_h: None, tol_disc: 1e-2 }
    }
}

/// `d/(4ρ²) (1 − sup_x |Ω ∩ B_ρ(x)|/|B_ρ(x)|)` against `λ₁`.
pub fn lieb_bound(dom: &Domain, rho: f64, lambda1: f64, opts: &LiebOptions) -> Result<BoundReport> {
    if !(rho > 0.0) {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    let side = dom.bbox().lengths().into_iter().fold(f64::INFINITY, f64::min);
    let gh = opts.grid_h.unwrap_or(f64::INFINITY).min(rho / 2.0).min(side / 16.0);
    let sup = sup_overlap_ratio_with(dom, rho, gh, &opts.mc)?;
    let d = dom.dim() as f64;
    let scale = d / (4.0 * rho * rho);
    let bound = scale * (1.0 - sup.estimate.value);
    let mc_slack = 3.0 * scale * sup.estimate.stderr;
    let pass = bound <= lambda1 * (1.0 + opts.tol_disc) + mc_slack;
    let mut r = BoundReport::new("lieb", bound, lambda1, Relation::BoundBelow)
        .param("rho", rho)
        .tol("tol_disc", opts.tol_disc)
        .tol("mc_slack", mc_slack)
        .derive("sup_overlap", sup.estimate.value)
        .derive("grid_h", gh)
        .derive("lipschitz_slack", sup.slack)
        .with_pass(Some(pass));
    if sup.estimate.value >= 1.0 {
        r = r.note("ball fits inside the domain; bound is zero");
    }
    r.stderr = Some(sup.estimate.stderr);
    r.samples = Some(sup.estimate.samples);
    r.seed = Some(opts.mc.seed);
    Ok(r)
}

pub fn lieb_sweep(dom: &Domain, rhos: &[f64], lambda1: f64, opts: &LiebOptions) -> Result<Vec<BoundReport>> {
    rhos.iter().map(|&rho| lieb_bound(dom, rho, lambda1, opts)).collect()
}

/// Looks for a node in the support of eigenvector `j` (one-based) with
/// `λ_j ≥ 1/(4δ(x)²)`; the witness is the support node of largest `δ`.
pub fn remark2_witness_check(field: &DeltaField, res: &SpectralResult, j: usize, tol: f64) -> Result<BoundReport> {
    if j < 1 || j > res.k {
        return Err(invalid("j", format!("need 1 <= j <= {}, got {j}", res.k)));
    }
    if !field.grid().same_as(res.grid()) {
        return Err(Error::GridMismatch("field and spectrum use different grids".into()));
    }
    let v = res.eigenvector(j - 1).ok_or(Error::MissingEigenvectors)?;
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let lambda = res.eigenvalues[j - 1];
    let mut best: Option<(usize, f64)> = None;
    for (r, &g) in res.nodes().iter().enumerate() {
        if v[r].abs() <= 1e-12 * vmax {
            continue;
        }
        let Some(delta) = field.get(g) else { continue };
        if best.map_or(true, |(_, b)| delta > b) {
            best = Some((g, delta));
        }
    }
    let (g, delta) = best.ok_or(Error::EmptyInterior)?;
    let margin = lambda * 4.0 * delta * delta - 1.0;
    let mut r = BoundReport::new("remark2", 1.0 / (4.0 * delta * delta), lambda, Relation::BoundBelow)
        .param("j", j as f64)
        .param("lambda", lambda)
        .tol("margin", tol)
        .derive("delta_witness", delta)
        .derive("margin", margin)
        .with_pass(Some(margin >= -tol));
    for (k, c) in field.grid().point(g).into_iter().enumerate() {
        r = r.derive(&format!("witness_x{}", k + 1), c);
    }
    Ok(r)
}

/// Forward-difference energy `Σ|∇_h u|² h^d` and weighted mass
/// `¼ Σ δ(x_i)^{-2} u_i² h^d` of a grid function.
pub fn hardy_sides(field: &DeltaField, u: &[f64]) -> Result<(f64, f64)> {
    let grid = field.grid();
    if u.len() != grid.len() {
        return Err(Error::GridMismatch(format!("u has {} values, grid has {} nodes", u.len(), grid.len())));
    }
    let h = grid.h();
    let dim = grid.dim();
    let mut energy = 0.0;
    let mut mass = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        if !field.is_inside(i) {
            if ui != 0.0 {
                return Err(invalid("u", format!("nonzero at grid node {i} outside the domain")));
            }
            // Differences from outside nodes into the domain.
            for axis in 0..dim {
                if let Some(nb) = grid.neighbor(i, axis, true) {
                    energy += u[nb] * u[nb];
                }
            }
            continue;
        }
        for axis in 0..dim {
            let next = grid.neighbor(i, axis, true).map_or(0.0, |nb| u[nb]);
            energy += (next - ui).powi(2);
            if grid.neighbor(i, axis, false).is_none() {
                energy += ui * ui;
            }
        }
        let delta = field.values()[i];
        mass += ui * ui / (delta * delta);
    }
    let hd = grid.cell_volume();
    Ok((energy * hd / (h * h), 0.25 * mass * hd))
}

/// `∫|∇u|² ≥ ¼∫δ^{-2}|u|²` for one grid function; passes when the ratio is
/// at least `1 − tol_h`.
pub fn hardy_quadratic_check(field: &DeltaField, u: &[f64], tol_h: f64) -> Result<BoundReport> {
    let (lhs, rhs) = hardy_sides(field, u)?;
    let mut r = BoundReport::new("hardy", rhs, lhs, Relation::BoundBelow)
        .param("h", field.h())
        .tol("tol_h", tol_h);
    r.pass = if lhs == 0.0 && rhs == 0.0 {
        r.notes.push("u vanishes identically; check is vacuous".into());
        None
    } else {
        Some(lhs >= (1.0 - tol_h) * rhs)
    };
    r = r.derive("ratio", if rhs > 0.0 { lhs / rhs } else { f64::NAN });
    Ok(r)
}

/// Two-grid slack `2|ratio(h) − ratio(h/2)| + 1e-6`.
pub fn two_grid_tolerance(ratio_h: f64, ratio_half: f64) -> f64 {
    2.0 * (ratio_h - ratio_half).abs() + 1e-6
}

/// `Σ_k (μ − λ_k)_+^γ` over the computed spectrum; `γ = 0` counts `λ_k < μ`.
pub fn riesz_mean(res: &SpectralResult, mu: f64, gamma: f64) -> Result<f64> {
    if !(mu > 0.0) || !(gamma >= 0.0) {
        return Err(invalid("mu", "need mu > 0 and gamma >= 0"));
    }
    if mu > res.complete_through {
        return Err(Error::InsufficientSpectrum { largest: res.largest(), requested: mu });
    }
    Ok(res
        .eigenvalues
        .iter()
        .filter(|&&l| mu - l > 0.0)
        .map(|&l| if gamma == 0.0 { 1.0 } else { (mu - l).powf(gamma) })
        .sum())
}

/// Grid quadrature of `(λ − 1/(4δ²))_+^p` over the interior nodes.
pub fn positive_part_integral(field: &DeltaField, lambda: f64, p: f64) -> f64 {
    let hd = field.grid().cell_volume();
    field
        .interior()
        .map(|i| {
            let delta = field.values()[i];
            let v = lambda - 0.25 / (delta * delta);
            if v > 0.0 {
                v.powf(p)
            } else {
                0.0
            }
        })
        .sum::<f64>()
        * hd
}

/// `L_d ∫ (λ − 1/(4δ²))_+^{d/2}`, with the implied constant `N_≤(λ)/∫…` when a
/// spectrum is supplied.
pub fn floss_rhs(field: &DeltaField, lambda: f64, constant: f64, res: Option<&SpectralResult>) -> Result<BoundReport> {
    if !(lambda > 0.0) || !(constant > 0.0) {
        return Err(invalid("lambda", "need lambda > 0 and constant > 0"));
    }
    let d = field.dim();
    let integral = positive_part_integral(field, lambda, d as f64 / 2.0);
    let rhs = constant * integral;
    let count = res.map(|r| count_leq(r, lambda)).transpose()?;
    let reference = count.map_or(f64::NAN, |c| c as f64);
    let mut r = BoundReport::new("floss", rhs, reference, Relation::BoundAbove)
        .param("lambda", lambda)
        .param("constant", constant)
        .param("h", field.h())
        .derive("integral", integral);
    if let Some(c) = count {
        r = r.derive("count", c as f64);
        if integral > 0.0 {
            r = r.derive("implied_constant", c as f64 / integral);
        }
    }
    if d < 3 {
        r = r.note("outside the theorem's stated range (d >= 3)");
    }
    if integral == 0.0 {
        r = r.note("lambda below 1/(4 max delta^2); integral vanishes");
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug)]
pub struct RieszOptions {
    pub constant: f64,
    /// `μ = factor · λ` in the chained counting bound.
    pub factor: f64,
}

impl Default for RieszOptions {
    fn default() -> Self {
        RieszOptions { constant: 1.0, factor: 2.0 }
    }
}

/// Two-dimensional Riesz-mean bound `L ∫ (μ − 1/(4δ²))_+^{γ+1}` paired with
/// the computed Riesz mean, and the counting bound `N_≤(λ) ≤ λ^{-γ}·rhs` at
/// `μ = factor·λ`.
pub fn riesz_bound_rhs_2d(
    field: &DeltaField,
    mu: f64,
    gamma: f64,
    opts: &RieszOptions,
    res: Option<&SpectralResult>,
) -> Result<BoundReport> {
    if field.dim() != 2 {
        return Err(Error::UnsupportedDimension(field.dim()));
    }
    if !(gamma > 0.0) {
        return Err(invalid("gamma", format!("must be positive, got {gamma}")));
    }
    if !(mu > 0.0) || !(opts.constant > 0.0) || !(opts.factor > 0.0) {
        return Err(invalid("mu", "need mu, constant and factor positive"));
    }
    let integral = positive_part_integral(field, mu, gamma + 1.0);
    let rhs = opts.constant * integral;
    let lambda = mu / opts.factor;
    let mean = res.map(|r| riesz_mean(r, mu, gamma)).transpose()?;
    let mut r = BoundReport::new("riesz2d", rhs, mean.unwrap_or(f64::NAN), Relation::BoundAbove)
        .param("mu", mu)
        .param("gamma", gamma)
        .param("constant", opts.constant)
        .param("factor", opts.factor)
        .param("h", field.h())
        .derive("integral", integral)
        .derive("chain_count_bound", lambda.powf(-gamma) * rhs);
    if let (Some(m), Some(res)) = (mean, res) {
        let count = count_leq(res, lambda)?;
        r = r.derive("riesz_mean", m).derive("count", count as f64).derive("chain_lhs", lambda.powf(-gamma) * m);
        if integral > 0.0 {
            r = r.derive("implied_constant", m / integral);
        }
    }
    if integral == 0.0 {
        r = r.note("mu below 1/(4 max delta^2); integral vanishes");
    }
    Ok(r)
}
