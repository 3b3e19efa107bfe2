use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

use super::UnitDirection;

/// `|S^{d-1}|`: 2, 2π, 4π.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

/// Volume of the unit ball `ω_d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => f64::NAN,
    }
}

/// Quadrature rule on the unit sphere `S^{d-1}`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    dim: usize,
    nodes: Vec<UnitDirection>,
    weights: Vec<f64>,
    /// Node `i + n/2` is the antipode of node `i`.
    antipodal: bool,
}

/// Relative tolerance for the `∫ ω_d² = |S|/d` check performed on construction.
const EXACTNESS_TOL: f64 = 1e-3;

impl SphereRule {
    /// Standard rule: the pair `±1` in 1-d, `n` equispaced angles in 2-d, `n`
    /// Fibonacci-spiral points in 3-d. Weights are uniform.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("n", format!("need at least 2 nodes, got {n}")));
        }
        let rule = match dim {
            1 => SphereRule {
                dim,
                nodes: vec![UnitDirection::axis(1, 0), UnitDirection::axis(1, 0).neg()],
                weights: vec![1.0, 1.0],
                antipodal: true,
            },
            2 => {
                let nodes = (0..n)
                    .map(|i| {
                        let a = 2.0 * PI * i as f64 / n as f64;
                        UnitDirection::from_raw(2, [a.cos(), a.sin(), 0.0])
                    })
                    .collect();
                SphereRule {
                    dim,
                    nodes,
                    weights: vec![2.0 * PI / n as f64; n],
                    antipodal: n % 2 == 0,
                }
            }
            3 => {
                if n < 64 {
                    return Err(invalid("n", format!("3-d rules need n >= 64, got {n}")));
                }
                let golden = PI * (3.0 - 5f64.sqrt());
                let nodes = (0..n)
                    .map(|i| {
                        let z = 1.0 - (2 * i + 1) as f64 / n as f64;
                        let r = (1.0 - z * z).sqrt();
                        let a = golden * i as f64;
                        UnitDirection::from_raw(3, [r * a.cos(), r * a.sin(), z])
                    })
                    .collect();
                SphereRule {
                    dim,
                    nodes,
                    weights: vec![4.0 * PI / n as f64; n],
                    antipodal: false,
                }
            }
            d => return Err(Error::UnsupportedDimension(d)),
        };
        let err = rule.exactness_error();
        if err > EXACTNESS_TOL {
            return Err(invalid(
                "n",
                format!("rule fails the ω_d² exactness check (relative error {err:.3e})"),
            ));
        }
        Ok(rule)
    }

    /// Default node counts: 2, 720, 2048 for d = 1, 2, 3.
    pub fn default_for(dim: usize) -> Result<Self> {
        Self::new(dim, default_nodes(dim)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[UnitDirection] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_antipodal(&self) -> bool {
        self.antipodal
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `∑ w_i f(ω_i)`.
    pub fn integrate(&self, f: impl Fn(&UnitDirection) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(w, &c)| c * f(w)).sum()
    }

    /// Relative error of the rule on `ω ↦ ω_d²` against `|S^{d-1}|/d`.
    pub fn exactness_error(&self) -> f64 {
        let d = self.dim;
        let exact = sphere_area(d) / d as f64;
        let got = self.integrate(|w| w.components()[d - 1].powi(2));
        ((got - exact) / exact).abs()
    }

    /// The rule with half as many nodes, used for quadrature error estimates.
    /// `None` when no coarser rule exists.
    pub fn coarsened(&self) -> Option<SphereRule> {
        match self.dim {
            1 => None,
            2 if self.len() >= 4 && self.len() % 2 == 0 => {
                let nodes: Vec<_> = self.nodes.iter().step_by(2).cloned().collect();
                let n = nodes.len();
                Some(SphereRule {
                    dim: 2,
                    nodes,
                    weights: vec![2.0 * PI / n as f64; n],
                    antipodal: n % 2 == 0,
                })
            }
            d => SphereRule::new(d, self.len() / 2).ok(),
        }
    }
}

pub fn default_nodes(dim: usize) -> Result<usize> {
    match dim {
        1 => Ok(2),
        2 => Ok(720),
        3 => Ok(2048),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_rule() {
        let r = SphereRule::new(1, 2).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.nodes()[0].components(), &[1.0]);
        assert_eq!(r.nodes()[1].components(), &[-1.0]);
        assert_eq!(r.weights(), &[1.0, 1.0]);
    }

    #[test]
    fn four_angles() {
        let r = SphereRule::new(2, 4).unwrap();
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (node, e) in r.nodes().iter().zip(expect) {
            let c = node.components();
            assert!((c[0] - e[0]).abs() < 1e-15 && (c[1] - e[1]).abs() < 1e-15);
        }
        assert!(r.weights().iter().all(|&w| (w - PI / 2.0).abs() < 1e-15));
        assert!((r.weight_sum() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn fibonacci_second_moment() {
        let r = SphereRule::new(3, 512).unwrap();
        let got = r.integrate(|w| w.components()[2].powi(2));
        let exact = 4.0 * PI / 3.0;
        assert!(((got - exact) / exact).abs() < 1e-3);
        // Default size meets the tighter invariant.
        let r = SphereRule::default_for(3).unwrap();
        assert!(r.exactness_error() < 1e-6);
        assert!((r.weight_sum() / (4.0 * PI) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(SphereRule::new(3, 63).is_err());
        assert!(SphereRule::new(2, 1).is_err());
        assert!(matches!(SphereRule::new(4, 100), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn nodes_are_unit() {
        for (d, n) in [(2, 37), (3, 200)] {
            for w in SphereRule::new(d, n).unwrap().nodes() {
                let norm: f64 = w.components().iter().map(|c| c * c).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }
}
