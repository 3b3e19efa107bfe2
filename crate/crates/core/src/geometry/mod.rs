//! Open sets in ℝ¹, ℝ², ℝ³ and directional exit distances.

mod config;
mod csg;
mod sphere;

pub use config::{parse_tree, DomainConfig};
pub use csg::{Node, Primitive};
pub use sphere::{default_nodes, sphere_area, unit_ball_volume, SphereRule};

pub(crate) use csg::{axpy, dot, Spans, P3};

use crate::error::{invalid, Error, Result};

/// A direction on `S^{d-1}`, zero-padded to three components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitDirection {
    dim: usize,
    v: P3,
}

impl UnitDirection {
    /// Checks that `components` has unit norm within 1e-12.
    pub fn new(components: &[f64]) -> Result<Self> {
        let v = pad(components)?;
        let norm = dot(&v, &v).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(invalid("direction", format!("norm is {norm}, expected 1")));
        }
        Ok(UnitDirection { dim: components.len(), v })
    }

    pub fn normalized(components: &[f64]) -> Result<Self> {
        let v = pad(components)?;
        let norm = dot(&v, &v).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(invalid("direction", "cannot normalize a zero or non-finite vector"));
        }
        Ok(UnitDirection { dim: components.len(), v: [v[0] / norm, v[1] / norm, v[2] / norm] })
    }

    pub fn axis(dim: usize, k: usize) -> Self {
        let mut v = [0.0; 3];
        v[k] = 1.0;
        UnitDirection { dim, v }
    }

    pub(crate) fn from_raw(dim: usize, v: P3) -> Self {
        UnitDirection { dim, v }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[f64] {
        &self.v[..self.dim]
    }

    pub(crate) fn raw(&self) -> &P3 {
        &self.v
    }

    pub fn neg(&self) -> Self {
        UnitDirection { dim: self.dim, v: [-self.v[0], -self.v[1], -self.v[2]] }
    }
}

pub(crate) fn pad(x: &[f64]) -> Result<P3> {
    if x.is_empty() || x.len() > 3 {
        return Err(Error::UnsupportedDimension(x.len()));
    }
    let mut p = [0.0; 3];
    p[..x.len()].copy_from_slice(x);
    Ok(p)
}

/// Axis-aligned box, stored zero-padded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bbox {
    pub(crate) dim: usize,
    pub(crate) lo: P3,
    pub(crate) hi: P3,
}

impl Bbox {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        let (l, h) = (pad(lo)?, pad(hi)?);
        for k in 0..lo.len() {
            if !(l[k] < h[k]) || !l[k].is_finite() || !h[k].is_finite() {
                return Err(invalid("bbox", format!("axis {k}: need finite lo < hi")));
            }
        }
        Ok(Bbox { dim: lo.len(), lo: l, hi: h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    pub fn lengths(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.hi[k] - self.lo[k]).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.lengths().iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    pub(crate) fn contains_closed(&self, x: &P3) -> bool {
        (0..self.dim).all(|k| self.lo[k] <= x[k] && x[k] <= self.hi[k])
    }

    /// Distance from `x` along `d` to where the ray leaves the closed box.
    pub(crate) fn exit_param(&self, x: &P3, d: &P3) -> f64 {
        let mut t = f64::INFINITY;
        for k in 0..self.dim {
            if d[k] > 0.0 {
                t = t.min((self.hi[k] - x[k]) / d[k]);
            } else if d[k] < 0.0 {
                t = t.min((self.lo[k] - x[k]) / d[k]);
            }
        }
        t.max(0.0)
    }
}

/// How ray-exit distances are computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExitMethod {
    /// Interval algebra on the CSG tree; exact up to rounding.
    #[default]
    Exact,
    /// March with `ray_step`, then bisect.
    March,
}

/// An open set `Ω ⊂ ℝ^d` described by a CSG tree.
#[derive(Clone, Debug)]
pub struct Domain {
    dim: usize,
    tree: Node,
    bbox: Bbox,
    bounded: bool,
    ray_step: f64,
    exit: ExitMethod,
    name: Option<String>,
}

impl Domain {
    /// `bbox` may be omitted for bounded trees; it is required otherwise.
    pub fn new(dim: usize, tree: Node, bbox: Option<Bbox>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let tree_bounds = tree.bounds();
        let bounded = tree_bounds.is_some();
        let bbox = match (bbox, tree_bounds) {
            (Some(b), _) => {
                if b.dim != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: b.dim });
                }
                b
            }
            (None, Some((lo, hi))) => {
                let mut b = Bbox { dim, lo: [0.0; 3], hi: [0.0; 3] };
                for k in 0..dim {
                    b.lo[k] = lo[k];
                    b.hi[k] = hi[k];
                    if !(lo[k] <= hi[k]) {
                        // Empty tree: keep a degenerate but finite box.
                        b.lo[k] = 0.0;
                        b.hi[k] = 0.0;
                    }
                }
                b
            }
            (None, None) => return Err(Error::Unbounded),
        };
        let diam = bbox.diameter();
        let ray_step = if diam > 0.0 { diam / 1024.0 } else { 1e-3 };
        Ok(Domain { dim, tree, bbox, bounded, ray_step, exit: ExitMethod::Exact, name: None })
    }

    pub fn with_ray_step(mut self, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(invalid("ray_step", "must be positive"));
        }
        self.ray_step = step;
        Ok(self)
    }

    pub fn with_exit_method(mut self, exit: ExitMethod) -> Self {
        self.exit = exit;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Parses the JSON domain description.
    pub fn from_json(text: &str) -> Result<Self> {
        DomainConfig::from_json(text)?.build()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tree(&self) -> &Node {
        &self.tree
    }

    pub fn bbox(&self) -> &Bbox {
        &self.bbox
    }

    pub fn is_bounded(&self) -> bool {
        self.bounded
    }

    pub fn ray_step(&self) -> f64 {
        self.ray_step
    }

    pub fn exit_method(&self) -> ExitMethod {
        self.exit
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn diameter(&self) -> f64 {
        self.bbox.diameter()
    }

    fn point(&self, x: &[f64]) -> Result<P3> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        pad(x)
    }

    fn direction(&self, w: &UnitDirection) -> Result<()> {
        if w.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: w.dim });
        }
        Ok(())
    }

    /// `x ∈ Ω`; boundary points are not contained.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.contains_p(&self.point(x)?))
    }

    #[inline]
    pub(crate) fn contains_p(&self, x: &P3) -> bool {
        self.tree.contains(x, false)
    }

    /// `τ(x, ω) = inf{t > 0 : x + tω ∉ Ω}`.
    pub fn exit_distance_one_sided(&self, x: &[f64], w: &UnitDirection) -> Result<f64> {
        let p = self.point(x)?;
        self.direction(w)?;
        if !self.contains_p(&p) {
            return Err(Error::NotInDomain(x.to_vec()));
        }
        Ok(match self.exit {
            ExitMethod::Exact => self.chord_p(&p, w.raw()).1,
            ExitMethod::March => self.march_p(&p, w.raw()),
        })
    }

    /// `d_ω(x) = min(τ(x, ω), τ(x, -ω))`, `+∞` when the whole line lies in `Ω`.
    pub fn d_omega(&self, x: &[f64], w: &UnitDirection) -> Result<f64> {
        let p = self.point(x)?;
        self.direction(w)?;
        if !self.contains_p(&p) {
            return Err(Error::NotInDomain(x.to_vec()));
        }
        Ok(self.d_omega_p(&p, w.raw()))
    }

    #[inline]
    pub(crate) fn d_omega_p(&self, x: &P3, d: &P3) -> f64 {
        match self.exit {
            ExitMethod::Exact => {
                let (back, fwd) = self.chord_p(x, d);
                back.min(fwd)
            }
            ExitMethod::March => {
                let neg = [-d[0], -d[1], -d[2]];
                self.march_p(x, d).min(self.march_p(x, &neg))
            }
        }
    }

    /// Exit distances `(τ(x, -d), τ(x, d))` from the exact line trace.
    pub(crate) fn chord_p(&self, x: &P3, d: &P3) -> (f64, f64) {
        let spans = self.tree.spans(x, d, false);
        if let Some(&(a, b)) = spans.iter().find(|s| s.0 < 0.0 && 0.0 < s.1) {
            return (-a, b);
        }
        // Rounding put x on the edge of its own span; fall back to marching.
        let neg = [-d[0], -d[1], -d[2]];
        (self.march_p(x, &neg), self.march_p(x, d))
    }

    /// Line trace of the open set (`closed = false`) or of its closure.
    pub(crate) fn spans_p(&self, x: &P3, d: &P3, closed: bool) -> Spans {
        self.tree.spans(x, d, closed)
    }

    /// Ray marching with step `ray_step`, refined by bisection to
    /// `1e-10 · diam(bbox)`.
    pub(crate) fn march_p(&self, x: &P3, d: &P3) -> f64 {
        let step = self.ray_step;
        let tol = 1e-10 * self.diameter().max(f64::MIN_POSITIVE);
        let t_box = self.bbox.exit_param(x, d);
        let mut t = 0.0;
        loop {
            let mut next = t + step;
            // Beyond the box of a bounded set every point is outside.
            if next > t_box && !self.bounded {
                if self.contains_p(&axpy(x, t_box, d)) {
                    return f64::INFINITY;
                }
                next = t_box;
            }
            if !self.contains_p(&axpy(x, next, d)) {
                let (mut lo, mut hi) = (t, next);
                while hi - lo > tol {
                    let mid = 0.5 * (lo + hi);
                    if self.contains_p(&axpy(x, mid, d)) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
            t = next;
        }
    }

    /// Checks that no sampled point outside the bbox belongs to `Ω`.
    pub fn check_bbox(&self, samples: usize, seed: u64) -> bool {
        use rand::Rng;
        if !self.bounded {
            return true;
        }
        let mut rng = crate::rng::stream(seed, 0xb0b0);
        let b = &self.bbox;
        (0..samples).all(|_| {
            let mut p = [0.0; 3];
            for k in 0..self.dim {
                let len = b.hi[k] - b.lo[k];
                p[k] = b.lo[k] - len + 3.0 * len * rng.gen::<f64>();
            }
            b.contains_closed(&p) || !self.contains_p(&p)
        })
    }
}
