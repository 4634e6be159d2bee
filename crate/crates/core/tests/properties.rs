use std::sync::Arc;

use proptest::prelude::*;

use hypfill::cone::{cone_distance, ConePoint};
use hypfill::extension::{build_phi_set, phi_eval};
use hypfill::filling::{build_filling, FillingParams};
use hypfill::gromov::cross_difference;
use hypfill::metric::{generate_space, separated_net, snowflake, FiniteMetricSpace, SpaceKind};
use hypfill::qsmap::{qs_check, PointMap, PowerControl};

fn kind() -> impl Strategy<Value = SpaceKind> {
    prop_oneof![Just(SpaceKind::Line), Just(SpaceKind::Circle), Just(SpaceKind::Cantor), Just(SpaceKind::Random)]
}

fn any_space() -> impl Strategy<Value = FiniteMetricSpace> {
    (kind(), 3usize..14, 0u64..1000).prop_map(|(k, n, seed)| generate_space(k, n, seed).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nets_are_separated_and_maximal(s in any_space(), frac in 0.01f64..1.5) {
        let r = frac * s.diam();
        let net = separated_net(&s, r).unwrap();
        prop_assert_eq!(net[0], 0);
        for (i, &p) in net.iter().enumerate() {
            for &q in &net[i + 1..] {
                prop_assert!(s.dist(p, q) >= r);
            }
        }
        for x in 0..s.len() {
            prop_assert!(net.iter().any(|&c| s.dist(x, c) < r));
        }
    }

    #[test]
    fn snowflakes_compose(s in any_space(), a in 0.1f64..1.0, b in 0.1f64..1.0) {
        let twice = snowflake(&snowflake(&s, a).unwrap(), b).unwrap();
        let once = snowflake(&s, a * b).unwrap();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let (x, y) = (twice.dist(i, j), once.dist(i, j));
                prop_assert!((x - y).abs() <= 1e-12 * y.max(f64::MIN_POSITIVE));
            }
        }
    }

    #[test]
    fn generation_is_deterministic(k in kind(), n in 3usize..20, seed in 0u64..1000) {
        prop_assert_eq!(generate_space(k, n, seed).unwrap(), generate_space(k, n, seed).unwrap());
    }

    #[test]
    fn cone_metric_is_a_metric(
        s in any_space(),
        picks in prop::array::uniform3((0usize..1000, -12.0f64..6.0)),
    ) {
        let [p, q, r] = picks.map(|(i, u)| ConePoint::new(i % s.len(), u.exp2()).unwrap());
        let d = |a, b| cone_distance(&s, a, b).unwrap();
        prop_assert!(d(p, q) >= 0.0);
        prop_assert_eq!(d(p, q), d(q, p));
        prop_assert!(d(p, r) <= (d(p, q) + d(q, r)) * (1.0 + 1e-9));
    }

    #[test]
    fn cone_vertical_scaling_and_monotonicity(s in any_space(), i in 0usize..1000, u in -20.0f64..20.0, v in -20.0f64..20.0) {
        let z = i % s.len();
        let (a, b) = (u.exp2(), v.exp2());
        let rho = cone_distance(&s, ConePoint::new(z, a).unwrap(), ConePoint::new(z, b).unwrap()).unwrap();
        prop_assert_eq!(rho, (a.ln() - b.ln()).abs());
        // at a common scale, ρ grows with the base distance
        let w = (z + 1) % s.len();
        let x = (z + 2) % s.len();
        let t = a;
        let near = cone_distance(&s, ConePoint::new(z, t).unwrap(), ConePoint::new(w, t).unwrap()).unwrap();
        let far = cone_distance(&s, ConePoint::new(z, t).unwrap(), ConePoint::new(x, t).unwrap()).unwrap();
        if s.dist(z, w) <= s.dist(z, x) {
            prop_assert!(near <= far);
        } else {
            prop_assert!(near >= far);
        }
    }

    #[test]
    fn phi_is_monotone(s in any_space(), eps in 0.3f64..1.0, seed in 0u64..50) {
        let s = Arc::new(s);
        let target = Arc::new(snowflake(&s, eps).unwrap());
        let map = PointMap::random(s.clone(), target, seed).unwrap();
        for table in build_phi_set(&map).unwrap() {
            let lo = table.knots[0].0 - 4.0;
            let hi = table.knots[table.knots.len() - 1].0 + 4.0;
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=200 {
                let v = phi_eval(&table, lo + (hi - lo) * i as f64 / 200.0);
                prop_assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn qs_verdict_is_scale_invariant(s in any_space(), seed in 0u64..50, c in 0.01f64..100.0, theta in 1.0f64..3.0, lambda in 1.0f64..20.0) {
        let s = Arc::new(s);
        let map = PointMap::random(s.clone(), s.clone(), seed).unwrap();
        let ctrl = PowerControl::symmetric(theta, lambda).unwrap();
        let scaled_target = map.with_target(Arc::new(s.rescaled(c).unwrap())).unwrap();
        let scaled_source = PointMap::new(Arc::new(s.rescaled(c).unwrap()), s.clone(), map.forward().to_vec()).unwrap();
        let base = qs_check(&map, &ctrl);
        let r1 = qs_check(&scaled_target, &ctrl);
        let r2 = qs_check(&scaled_source, &ctrl);
        prop_assert!((base.worst_ratio - r1.worst_ratio).abs() <= 1e-9 * base.worst_ratio);
        prop_assert!((base.worst_ratio - r2.worst_ratio).abs() <= 1e-9 * base.worst_ratio);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn filling_structure(s in any_space(), alpha in 1.5f64..3.0, extra in 0.1f64..2.0, margin in 0i32..4) {
        let tau = FillingParams::tau_bound(alpha) + extra;
        let g = build_filling(&s, &FillingParams::new(alpha, tau).with_margin(margin)).unwrap();
        prop_assert!(g.check_invariants().all());
        let n = g.vertex_count();
        for v in 0..n {
            for w in 0..n {
                let dh = (g.vertex(v).height - g.vertex(w).height).unsigned_abs();
                prop_assert!(dh <= g.dist_ids(v, w));
            }
        }
        for z in 0..s.len() {
            let ray = g.anchored_ray(z).unwrap();
            prop_assert_eq!(ray.len() as i32, g.n_max() - g.n_min() + 1);
            for (off, &v) in ray.iter().enumerate() {
                let vert = g.vertex(v);
                prop_assert_eq!(vert.height, g.n_min() + off as i32);
                prop_assert!(s.dist(z, vert.center) < g.radius(v));
                if off > 0 {
                    prop_assert_eq!(g.dist_ids(ray[off - 1], v), 1);
                }
            }
        }
    }

    #[test]
    fn cross_difference_antisymmetry(s in any_space(), picks in prop::array::uniform5(0usize..10_000)) {
        let g = build_filling(&s, &FillingParams::new(2.0, 4.0)).unwrap();
        let [x, y, z, u, o] = picks.map(|i| i % g.vertex_count());
        let c = cross_difference(&g, x, y, z, u, o).unwrap();
        // swapping the middle pair negates the expression
        let swapped = cross_difference(&g, x, z, y, u, o).unwrap();
        prop_assert!((c + swapped).abs() < 1e-12);
        let mirrored = cross_difference(&g, u, z, y, x, o).unwrap();
        prop_assert!((c - mirrored).abs() < 1e-12);
    }
}
