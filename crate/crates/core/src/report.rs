use std::collections::BTreeMap;

use serde::Serialize;

use crate::fmt;

/// Which side of the inequality the bound sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Expected `bound_value <= reference_value`.
    BoundBelow,
    /// Expected `bound_value >= reference_value`.
    BoundAbove,
}

/// Outcome of evaluating one inequality: the bound, the quantity it bounds,
/// their ratio and the parameters that produced them.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub name: String,
    #[serde(serialize_with = "fmt::real")]
    pub bound_value: f64,
    #[serde(serialize_with = "fmt::real")]
    pub reference_value: f64,
    /// `bound_value / reference_value`, NaN when the reference is zero.
    #[serde(serialize_with = "fmt::real")]
    pub ratio: f64,
    pub relation: Relation,
    #[serde(serialize_with = "fmt::real_map")]
    pub parameters: BTreeMap<String, f64>,
    #[serde(serialize_with = "fmt::real_map")]
    pub tolerances: BTreeMap<String, f64>,
    /// Derived quantities such as implied constants.
    #[serde(serialize_with = "fmt::real_map")]
    pub derived: BTreeMap<String, f64>,
    #[serde(serialize_with = "fmt::real_opt", skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `None` when the check is vacuous or informational only.
    pub pass: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, bound_value: f64, reference_value: f64, relation: Relation) -> Self {
        let ratio = if reference_value != 0.0 { bound_value / reference_value } else { f64::NAN };
        BoundReport {
            name: name.into(),
            bound_value,
            reference_value,
            ratio,
            relation,
            parameters: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            derived: BTreeMap::new(),
            stderr: None,
            samples: None,
            seed: None,
            pass: None,
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn tol(mut self, key: &str, value: f64) -> Self {
        self.tolerances.insert(key.to_string(), value);
        self
    }

    pub fn derive(mut self, key: &str, value: f64) -> Self {
        self.derived.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn with_pass(mut self, pass: Option<bool>) -> Self {
        self.pass = pass;
        self
    }

    pub fn passed(&self) -> bool {
        self.pass != Some(false)
    }

    /// Compact `{lhs, rhs, stderr, samples, seed, pass}` row. `lhs` is the side
    /// the inequality claims to be larger.
    pub fn row(&self) -> ReportRow {
        let (lhs, rhs) = match self.relation {
            Relation::BoundBelow => (self.reference_value, self.bound_value),
            Relation::BoundAbove => (self.bound_value, self.reference_value),
        };
        ReportRow {
            name: self.name.clone(),
            lhs,
            rhs,
            stderr: self.stderr.unwrap_or(0.0),
            samples: self.samples.unwrap_or(0),
            seed: self.seed.unwrap_or(0),
            pass: self.pass,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub name: String,
    #[serde(serialize_with = "fmt::real")]
    pub lhs: f64,
    #[serde(serialize_with = "fmt::real")]
    pub rhs: f64,
    #[serde(serialize_with = "fmt::real")]
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub pass: Option<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_and_row() {
        let r = BoundReport::new("lieb", 0.5, 2.0, Relation::BoundBelow).with_pass(Some(true));
        assert_eq!(r.ratio, 0.25);
        let row = r.row();
        assert_eq!((row.lhs, row.rhs), (2.0, 0.5));
        let zero = BoundReport::new("x", 1.0, 0.0, Relation::BoundBelow);
        assert!(zero.ratio.is_nan());
        let json = serde_json::to_value(&zero).unwrap();
        assert_eq!(json["ratio"], "nan");
    }
}
