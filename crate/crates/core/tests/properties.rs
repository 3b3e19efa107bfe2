use approx::assert_relative_eq;
use proptest::prelude::*;

use hardy_spectral::{delta_at, Domain, SphereRule, UnitDirection};

fn l_shape() -> Domain {
    Domain::from_json(r#"{"dim": 2, "tree": {"op": "difference", "a": {"box": [[0, 2], [0, 2]]}, "b": {"box": [[1, 2], [1, 2]]}}}"#).unwrap()
}

fn scaled(kind: &str, s: f64) -> Domain {
    let json = match kind {
        "disk" => format!(r#"{{"dim": 2, "tree": {{"ball": {{"center": [{c}, {c}], "radius": {s}}}}}}}"#, c = 0.3 * s),
        _ => format!(r#"{{"dim": 2, "tree": {{"box": [[0, {s}], [0, {s}]]}}}}"#),
    };
    Domain::from_json(&json).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn d_omega_symmetric_and_positive(x in 0.01f64..1.99, y in 0.01f64..0.99, a in 0.0f64..std::f64::consts::TAU) {
        let dom = l_shape();
        let w = UnitDirection::new(&[a.cos(), a.sin()]).unwrap();
        let fwd = dom.d_omega(&[x, y], &w).unwrap();
        let back = dom.d_omega(&[x, y], &w.neg()).unwrap();
        prop_assert_eq!(fwd, back);
        prop_assert!(fwd > 0.0);
    }

    #[test]
    fn exits_grow_with_the_domain(
        x in 0.3f64..0.7, y in 0.3f64..0.7, a in 0.0f64..std::f64::consts::TAU, grow in 0.0f64..0.5,
    ) {
        let inner = Domain::from_json(r#"{"dim": 2, "tree": {"box": [[0.2, 0.8], [0.2, 0.8]]}}"#).unwrap();
        let outer = Domain::from_json(&format!(
            r#"{{"dim": 2, "tree": {{"box": [[{lo}, {hi}], [0.2, {hi}]]}}}}"#, lo = 0.2 - grow, hi = 0.8 + grow
        )).unwrap();
        let w = UnitDirection::new(&[a.cos(), a.sin()]).unwrap();
        let t_in = inner.exit_distance_one_sided(&[x, y], &w).unwrap();
        let t_out = outer.exit_distance_one_sided(&[x, y], &w).unwrap();
        prop_assert!(t_in <= t_out + 1e-12);
        let rule = SphereRule::new(2, 180).unwrap();
        prop_assert!(delta_at(&inner, &[x, y], &rule).unwrap() <= delta_at(&outer, &[x, y], &rule).unwrap() + 1e-12);
    }

    #[test]
    fn delta_scales_with_the_domain(u in 0.05f64..0.95, v in 0.05f64..0.95, disk in any::<bool>(), big in any::<bool>()) {
        let kind = if disk { "disk" } else { "square" };
        let s = if big { 2.0 } else { 0.5 };
        let base = scaled(kind, 1.0);
        let (x, y) = if disk { (0.3 + 0.6 * (u - 0.5), 0.3 + 0.6 * (v - 0.5)) } else { (u, v) };
        let rule = SphereRule::default_for(2).unwrap();
        let d1 = delta_at(&base, &[x, y], &rule).unwrap();
        let ds = delta_at(&scaled(kind, s), &[s * x, s * y], &rule).unwrap();
        assert_relative_eq!(ds, s * d1, max_relative = 1e-9);
    }

    #[test]
    fn delta_below_largest_exit(x in 0.01f64..1.99, y in 0.01f64..0.99) {
        let dom = l_shape();
        let rule = SphereRule::new(2, 360).unwrap();
        let delta = delta_at(&dom, &[x, y], &rule).unwrap();
        let widest = rule.nodes().iter().map(|w| dom.d_omega(&[x, y], w).unwrap()).fold(0.0, f64::max);
        prop_assert!(delta <= widest * (1.0 + 1e-12));
    }
}
