//! Constructive solid geometry over convex primitives.
//!
//! Every primitive is convex, so its trace on a line is a single interval.
//! The CSG operators then reduce to interval-list algebra, which gives exact
//! ray-exit distances for arbitrary trees. Points are stored zero-padded to
//! three coordinates; the padding never changes a dot product.

use smallvec::SmallVec;

pub(crate) type P3 = [f64; 3];

/// Sorted, pairwise disjoint intervals `(start, end)` of a line parameter.
pub(crate) type Spans = SmallVec<[(f64, f64); 8]>;

#[inline]
pub(crate) fn dot(a: &P3, b: &P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn axpy(x: &P3, t: f64, d: &P3) -> P3 {
    [x[0] + t * d[0], x[1] + t * d[1], x[2] + t * d[2]]
}

#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    /// Axis-aligned box `lo < x < hi`. Unused axes hold infinite bounds.
    Box { lo: P3, hi: P3 },
    Ball { center: P3, radius: f64 },
    /// `{x : normal · x > offset}`.
    HalfSpace { normal: P3, offset: f64 },
    /// Convex polygon in the plane, counter-clockwise.
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Prim(Primitive),
    Union(Vec<Node>),
    Intersection(Vec<Node>),
    /// `a` minus the closure of `b`.
    Difference(Box<Node>, Box<Node>),
    /// Exterior of the closure.
    Complement(Box<Node>),
}

/// Parameter interval of `{t : lo < s + t v < hi}` (or `<=` when closed).
#[inline]
fn slab(s: f64, v: f64, lo: f64, hi: f64, closed: bool) -> Option<(f64, f64)> {
    if v == 0.0 {
        let inside = if closed { lo <= s && s <= hi } else { lo < s && s < hi };
        return inside.then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let a = (lo - s) / v;
    let b = (hi - s) / v;
    Some(if a < b { (a, b) } else { (b, a) })
}

#[inline]
fn half_line(sd: f64, rhs: f64, closed: bool) -> Option<(f64, f64)> {
    // {t : sd * t > rhs}
    if sd == 0.0 {
        let inside = if closed { rhs <= 0.0 } else { rhs < 0.0 };
        return inside.then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let t0 = rhs / sd;
    Some(if sd > 0.0 { (t0, f64::INFINITY) } else { (f64::NEG_INFINITY, t0) })
}

#[inline]
fn meet(acc: (f64, f64), next: (f64, f64), closed: bool) -> Option<(f64, f64)> {
    let a = acc.0.max(next.0);
    let b = acc.1.min(next.1);
    let keep = if closed { a <= b } else { a < b };
    keep.then_some((a, b))
}

impl Primitive {
    pub(crate) fn contains(&self, x: &P3, closed: bool) -> bool {
        match self {
            Primitive::Box { lo, hi } => (0..3).all(|k| {
                if closed {
                    lo[k] <= x[k] && x[k] <= hi[k]
                } else {
                    lo[k] < x[k] && x[k] < hi[k]
                }
            }),
            Primitive::Ball { center, radius } => {
                let r2: f64 = (0..3).map(|k| (x[k] - center[k]).powi(2)).sum();
                if closed {
                    r2 <= radius * radius
                } else {
                    r2 < radius * radius
                }
            }
            Primitive::HalfSpace { normal, offset } => {
                let s = dot(normal, x);
                if closed {
                    s >= *offset
                } else {
                    s > *offset
                }
            }
            Primitive::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let cross = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
                    if closed {
                        cross >= 0.0
                    } else {
                        cross > 0.0
                    }
                })
            }
        }
    }

    /// Trace of the primitive on the line `x + t d`.
    pub(crate) fn span(&self, x: &P3, d: &P3, closed: bool) -> Option<(f64, f64)> {
        match self {
            Primitive::Box { lo, hi } => {
                let mut acc = (f64::NEG_INFINITY, f64::INFINITY);
                for k in 0..3 {
                    acc = meet(acc, slab(x[k], d[k], lo[k], hi[k], closed)?, closed)?;
                }
                Some(acc)
            }
            Primitive::Ball { center, radius } => {
                let w = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
                let a = dot(d, d);
                let b = dot(d, &w);
                let c = dot(&w, &w) - radius * radius;
                if a == 0.0 {
                    let inside = if closed { c <= 0.0 } else { c < 0.0 };
                    return inside.then_some((f64::NEG_INFINITY, f64::INFINITY));
                }
                let disc = b * b - a * c;
                if disc < 0.0 || (!closed && disc == 0.0) {
                    return None;
                }
                // Stable roots of a t^2 + 2 b t + c.
                let q = -(b + b.signum() * disc.sqrt());
                let (t0, t1) = if q == 0.0 {
                    (0.0, 0.0)
                } else {
                    let r0 = q / a;
                    let r1 = c / q;
                    if r0 < r1 {
                        (r0, r1)
                    } else {
                        (r1, r0)
                    }
                };
                Some((t0, t1))
            }
            Primitive::HalfSpace { normal, offset } => {
                half_line(dot(normal, d), offset - dot(normal, x), closed)
            }
            Primitive::Polygon { vertices } => {
                let n = vertices.len();
                let mut acc = (f64::NEG_INFINITY, f64::INFINITY);
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let e = [b[0] - a[0], b[1] - a[1]];
                    // inward normal (-e_y, e_x); {t : n.(x + t d - a) > 0}
                    let nx = -e[1];
                    let ny = e[0];
                    let sd = nx * d[0] + ny * d[1];
                    let s0 = nx * (x[0] - a[0]) + ny * (x[1] - a[1]);
                    acc = meet(acc, half_line(sd, -s0, closed)?, closed)?;
                }
                Some(acc)
            }
        }
    }

    /// Bounding box, `None` when unbounded.
    pub(crate) fn bounds(&self) -> Option<(P3, P3)> {
        match self {
            Primitive::Box { lo, hi } => Some((*lo, *hi)),
            Primitive::Ball { center, radius } => Some((
                [center[0] - radius, center[1] - radius, center[2] - radius],
                [center[0] + radius, center[1] + radius, center[2] + radius],
            )),
            Primitive::HalfSpace { .. } => None,
            Primitive::Polygon { vertices } => {
                let mut lo = [f64::INFINITY, f64::INFINITY, 0.0];
                let mut hi = [f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                Some((lo, hi))
            }
        }
    }
}

fn merge_sorted(items: &mut Spans, closed: bool) {
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Spans::new();
    for &(a, b) in items.iter() {
        match out.last_mut() {
            Some(last) if (closed && a <= last.1) || (!closed && a < last.1) => {
                last.1 = last.1.max(b);
            }
            _ => out.push((a, b)),
        }
    }
    *items = out;
}

fn intersect(a: &Spans, b: &Spans, closed: bool) -> Spans {
    let mut out = Spans::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if let Some(s) = meet(a[i], b[j], closed) {
            out.push(s);
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Complement on the real line. Open input gives closed gaps and vice versa.
fn complement(spans: &Spans, input_closed: bool) -> Spans {
    let mut out = Spans::new();
    let mut cursor = f64::NEG_INFINITY;
    for &(a, b) in spans {
        let keep = if input_closed { cursor < a } else { cursor <= a };
        if keep && !(cursor == f64::NEG_INFINITY && a == f64::NEG_INFINITY) {
            out.push((cursor, a));
        }
        cursor = cursor.max(b);
    }
    if cursor < f64::INFINITY {
        out.push((cursor, f64::INFINITY));
    }
    out
}

impl Node {
    /// Membership in the open set (`closed = false`) or in its closure.
    pub(crate) fn contains(&self, x: &P3, closed: bool) -> bool {
        match self {
            Node::Prim(p) => p.contains(x, closed),
            Node::Union(items) => items.iter().any(|n| n.contains(x, closed)),
            Node::Intersection(items) => items.iter().all(|n| n.contains(x, closed)),
            Node::Difference(a, b) => a.contains(x, closed) && !b.contains(x, !closed),
            Node::Complement(a) => !a.contains(x, !closed),
        }
    }

    /// Trace of the set on the line `x + t d` as sorted disjoint intervals.
    pub(crate) fn spans(&self, x: &P3, d: &P3, closed: bool) -> Spans {
        match self {
            Node::Prim(p) => p.span(x, d, closed).into_iter().collect(),
            Node::Union(items) => {
                let mut all = Spans::new();
                for n in items {
                    all.extend(n.spans(x, d, closed));
                }
                merge_sorted(&mut all, closed);
                all
            }
            Node::Intersection(items) => {
                let mut iter = items.iter();
                let Some(first) = iter.next() else {
                    return Spans::new();
                };
                let mut acc = first.spans(x, d, closed);
                for n in iter {
                    if acc.is_empty() {
                        break;
                    }
                    acc = intersect(&acc, &n.spans(x, d, closed), closed);
                }
                acc
            }
            Node::Difference(a, b) => {
                let sa = a.spans(x, d, closed);
                if sa.is_empty() {
                    return sa;
                }
                let sb = complement(&b.spans(x, d, !closed), !closed);
                intersect(&sa, &sb, closed)
            }
            Node::Complement(a) => complement(&a.spans(x, d, !closed), !closed),
        }
    }

    pub(crate) fn bounds(&self) -> Option<(P3, P3)> {
        match self {
            Node::Prim(p) => p.bounds(),
            Node::Union(items) => {
                let mut acc: Option<(P3, P3)> = None;
                for n in items {
                    let (lo, hi) = n.bounds()?;
                    acc = Some(match acc {
                        None => (lo, hi),
                        Some((l, h)) => (
                            [l[0].min(lo[0]), l[1].min(lo[1]), l[2].min(lo[2])],
                            [h[0].max(hi[0]), h[1].max(hi[1]), h[2].max(hi[2])],
                        ),
                    });
                }
                acc
            }
            Node::Intersection(items) => {
                let mut acc: Option<(P3, P3)> = None;
                for (lo, hi) in items.iter().filter_map(Node::bounds) {
                    acc = Some(match acc {
                        None => (lo, hi),
                        Some((l, h)) => (
                            [l[0].max(lo[0]), l[1].max(lo[1]), l[2].max(lo[2])],
                            [h[0].min(hi[0]), h[1].min(hi[1]), h[2].min(hi[2])],
                        ),
                    });
                }
                acc
            }
            Node::Difference(a, _) => a.bounds(),
            Node::Complement(_) => None,
        }
    }
}
