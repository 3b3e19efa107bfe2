//! JSON domain descriptions.
//!
//! ```json
//! {"dim": 2,
//!  "tree": {"op": "difference",
//!           "a": {"box": [[0, 1], [0, 1]]},
//!           "b": {"ball": {"center": [0.5, 0.5], "radius": 0.2}}},
//!  "ray_step": 0.001}
//! ```
//!
//! Leaves are `box`, `ball`, `halfspace` (`{normal, offset}` meaning
//! `normal·x > offset`) and `polygon` (convex, 2-d). Inner nodes carry `op`
//! (`union`, `intersection`, `difference`, `complement`) with children in
//! `a`/`b` or an `items` array.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::csg::{Node, Primitive, P3};
use super::{Bbox, Domain, ExitMethod};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    pub dim: usize,
    pub tree: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ray_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn err(path: &str, reason: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), reason: reason.into() }
}

impl DomainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| err(&format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self> {
        let obj = value.as_object().ok_or_else(|| err("", "expected a JSON object"))?;
        for key in ["dim", "tree"] {
            if !obj.contains_key(key) {
                return Err(err(key, "missing required field"));
            }
        }
        serde_json::from_value(value.clone()).map_err(|e| err("", e.to_string()))
    }

    pub fn build(&self) -> Result<Domain> {
        if !(1..=3).contains(&self.dim) {
            return Err(err("dim", format!("must be 1, 2 or 3, got {}", self.dim)));
        }
        let tree = parse_tree(&self.tree, self.dim)?;
        let bbox = match &self.bbox {
            None => None,
            Some(axes) => {
                if axes.len() != self.dim {
                    return Err(err("bbox", format!("expected {} [lo, hi] pairs", self.dim)));
                }
                let lo: Vec<f64> = axes.iter().map(|a| a[0]).collect();
                let hi: Vec<f64> = axes.iter().map(|a| a[1]).collect();
                Some(Bbox::new(&lo, &hi).map_err(|e| err("bbox", e.to_string()))?)
            }
        };
        let mut dom = Domain::new(self.dim, tree, bbox)?;
        if let Some(step) = self.ray_step {
            dom = dom.with_ray_step(step).map_err(|e| err("ray_step", e.to_string()))?;
        }
        match self.exit.as_deref() {
            None | Some("exact") => {}
            Some("march") => dom = dom.with_exit_method(ExitMethod::March),
            Some(other) => return Err(err("exit", format!("unknown method `{other}`"))),
        }
        if let Some(name) = &self.name {
            dom = dom.with_name(name.clone());
        }
        Ok(dom)
    }
}

/// Parses a CSG tree for dimension `dim`.
pub fn parse_tree(value: &Value, dim: usize) -> Result<Node> {
    parse_node(value, dim, "tree")
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| err(path, "expected a finite number"))
}

fn vector(v: &Value, dim: usize, path: &str) -> Result<P3> {
    let arr = v.as_array().ok_or_else(|| err(path, "expected an array"))?;
    if arr.len() != dim {
        return Err(err(path, format!("expected {dim} coordinates, got {}", arr.len())));
    }
    let mut p = [0.0; 3];
    for (k, c) in arr.iter().enumerate() {
        p[k] = number(c, &format!("{path}[{k}]"))?;
    }
    Ok(p)
}

fn child(obj: &serde_json::Map<String, Value>, key: &str, dim: usize, path: &str) -> Result<Node> {
    let v = obj.get(key).ok_or_else(|| err(&format!("{path}.{key}"), "missing operand"))?;
    parse_node(v, dim, &format!("{path}.{key}"))
}

fn children(obj: &serde_json::Map<String, Value>, dim: usize, path: &str) -> Result<Vec<Node>> {
    if let Some(items) = obj.get("items") {
        let arr = items
            .as_array()
            .ok_or_else(|| err(&format!("{path}.items"), "expected an array"))?;
        if arr.is_empty() {
            return Err(err(&format!("{path}.items"), "needs at least one operand"));
        }
        arr.iter()
            .enumerate()
            .map(|(i, v)| parse_node(v, dim, &format!("{path}.items[{i}]")))
            .collect()
    } else {
        Ok(vec![child(obj, "a", dim, path)?, child(obj, "b", dim, path)?])
    }
}

fn parse_node(value: &Value, dim: usize, path: &str) -> Result<Node> {
    let obj = value.as_object().ok_or_else(|| err(path, "expected an object"))?;
    if let Some(op) = obj.get("op") {
        let op = op.as_str().ok_or_else(|| err(&format!("{path}.op"), "expected a string"))?;
        return match op {
            "union" => Ok(Node::Union(children(obj, dim, path)?)),
            "intersection" => Ok(Node::Intersection(children(obj, dim, path)?)),
            "difference" => Ok(Node::Difference(
                Box::new(child(obj, "a", dim, path)?),
                Box::new(child(obj, "b", dim, path)?),
            )),
            "complement" => Ok(Node::Complement(Box::new(child(obj, "a", dim, path)?))),
            other => Err(err(&format!("{path}.op"), format!("unknown operation `{other}`"))),
        };
    }
    if let Some(b) = obj.get("box") {
        let p = format!("{path}.box");
        let axes = b.as_array().ok_or_else(|| err(&p, "expected [[lo, hi], ...]"))?;
        if axes.len() != dim {
            return Err(err(&p, format!("expected {dim} [lo, hi] pairs, got {}", axes.len())));
        }
        let mut lo = [f64::NEG_INFINITY; 3];
        let mut hi = [f64::INFINITY; 3];
        for (k, axis) in axes.iter().enumerate() {
            let pk = format!("{p}[{k}]");
            let pair = axis.as_array().filter(|a| a.len() == 2).ok_or_else(|| err(&pk, "expected [lo, hi]"))?;
            lo[k] = number(&pair[0], &pk)?;
            hi[k] = number(&pair[1], &pk)?;
            if !(lo[k] < hi[k]) {
                return Err(err(&pk, "need lo < hi"));
            }
        }
        return Ok(Node::Prim(Primitive::Box { lo, hi }));
    }
    if let Some(b) = obj.get("ball") {
        let p = format!("{path}.ball");
        let center = vector(b.get("center").unwrap_or(&Value::Null), dim, &format!("{p}.center"))?;
        let radius = number(b.get("radius").unwrap_or(&Value::Null), &format!("{p}.radius"))?;
        if radius <= 0.0 {
            return Err(err(&format!("{p}.radius"), "must be positive"));
        }
        return Ok(Node::Prim(Primitive::Ball { center, radius }));
    }
    if let Some(h) = obj.get("halfspace") {
        let p = format!("{path}.halfspace");
        let normal = vector(h.get("normal").unwrap_or(&Value::Null), dim, &format!("{p}.normal"))?;
        if normal.iter().all(|&c| c == 0.0) {
            return Err(err(&format!("{p}.normal"), "must be nonzero"));
        }
        let offset = number(h.get("offset").unwrap_or(&Value::from(0.0)), &format!("{p}.offset"))?;
        return Ok(Node::Prim(Primitive::HalfSpace { normal, offset }));
    }
    if let Some(poly) = obj.get("polygon") {
        let p = format!("{path}.polygon");
        if dim != 2 {
            return Err(err(&p, "polygons are only supported in 2-d"));
        }
        let pts = poly.as_array().ok_or_else(|| err(&p, "expected [[x, y], ...]"))?;
        let mut vertices = Vec::with_capacity(pts.len());
        for (i, v) in pts.iter().enumerate() {
            let q = vector(v, 2, &format!("{p}[{i}]"))?;
            vertices.push([q[0], q[1]]);
        }
        return Ok(Node::Prim(Primitive::Polygon { vertices: convex_ccw(vertices, &p)? }));
    }
    Err(err(path, "expected one of `op`, `box`, `ball`, `halfspace`, `polygon`"))
}

/// Orients a convex polygon counter-clockwise; rejects non-convex input.
fn convex_ccw(mut v: Vec<[f64; 2]>, path: &str) -> Result<Vec<[f64; 2]>> {
    let n = v.len();
    if n < 3 {
        return Err(err(path, "needs at least 3 vertices"));
    }
    let cross = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
    };
    let turns: Vec<f64> = (0..n).map(|i| cross(v[i], v[(i + 1) % n], v[(i + 2) % n])).collect();
    let pos = turns.iter().filter(|&&t| t > 0.0).count();
    let neg = turns.iter().filter(|&&t| t < 0.0).count();
    if pos > 0 && neg > 0 {
        return Err(err(path, "polygon is not convex; build it as a union of convex pieces"));
    }
    if pos == 0 && neg == 0 {
        return Err(err(path, "polygon is degenerate"));
    }
    if neg > 0 {
        v.reverse();
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_dim_names_the_field() {
        let e = DomainConfig::from_json(r#"{"tree": {"box": [[0, 1]]}}"#).unwrap_err();
        assert!(e.to_string().contains("`dim`"), "{e}");
    }

    #[test]
    fn bad_leaf_reports_path() {
        let e = Domain::from_json(
            r#"{"dim": 2, "tree": {"op": "union", "items": [{"box": [[0, 1], [0, 1]]}, {"ball": {"center": [0], "radius": 1}}]}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("tree.items[1].ball.center"), "{e}");
    }

    #[test]
    fn clockwise_polygon_is_reoriented() {
        let d = Domain::from_json(r#"{"dim": 2, "tree": {"polygon": [[0, 0], [0, 1], [1, 1], [1, 0]]}}"#)
            .unwrap();
        assert!(d.contains(&[0.5, 0.5]).unwrap());
        let e = Domain::from_json(r#"{"dim": 2, "tree": {"polygon": [[0, 0], [2, 0], [1, 0.2], [1, 2]]}}"#);
        assert!(e.is_err());
    }

    #[test]
    fn config_round_trips_through_serde() {
        let text = r#"{"dim": 1, "tree": {"box": [[0, 1]]}, "ray_step": 0.01, "name": "interval"}"#;
        let cfg = DomainConfig::from_json(text).unwrap();
        let again = DomainConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
        let dom = cfg.build().unwrap();
        assert_eq!(dom.ray_step(), 0.01);
        assert_eq!(dom.name(), Some("interval"));
    }
}
