use std::f64::consts::PI;

use hybridtomo::microlocal::{
    is_elliptic_single, line_angle, line_distance, loss_angles, loss_directions, normal_symbol, predicted_streak_angles_deg,
    principal_symbol, project_to_characteristic, symbol, trace_bicharacteristic, ConstantGradient, SymbolQuery, TraceMode,
    TraceOptions, ANGULAR_SAMPLES,
};
use proptest::prelude::*;

fn unit(a: f64) -> [f64; 2] {
    [a.cos(), a.sin()]
}

fn gradient() -> impl Strategy<Value = [f64; 2]> {
    (0.0..2.0 * PI, 0.2f64..3.0).prop_map(|(a, r)| [r * a.cos(), r * a.sin()])
}

fn covector() -> impl Strategy<Value = [f64; 2]> {
    (0.0..2.0 * PI, 0.1f64..10.0).prop_map(|(a, r)| [r * a.cos(), r * a.sin()])
}

proptest! {
    #[test]
    fn principal_symbol_is_homogeneous_of_degree_zero(g in gradient(), xi in covector(), p in 0.2f64..5.0) {
        let base = principal_symbol(&SymbolQuery::new([0.0, 0.0], xi, vec![g], p).unwrap(), 0).unwrap();
        for c in [1e-3, 1.0, 1e3] {
            let q = SymbolQuery::new([0.0, 0.0], [c * xi[0], c * xi[1]], vec![g], p).unwrap();
            let v = principal_symbol(&q, 0).unwrap();
            prop_assert!((v - base).abs() <= 1e-12 * base.abs().max(1.0));
        }
    }

    #[test]
    fn normal_symbol_is_the_sum_of_squares_for_unit_gradients(
        angles in proptest::collection::vec(0.0..2.0 * PI, 1..5),
        xi in covector(),
        p in 0.2f64..5.0,
    ) {
        let gs: Vec<[f64; 2]> = angles.iter().map(|a| unit(*a)).collect();
        let q = SymbolQuery::new([0.1, -0.2], xi, gs.clone(), p).unwrap();
        let sum: f64 = (0..gs.len()).map(|j| principal_symbol(&q, j).unwrap().powi(2)).sum();
        prop_assert!((normal_symbol(&q).unwrap() - sum).abs() < 1e-12);
    }

    #[test]
    fn loss_directions_are_symmetric_under_sign_flip(g in gradient(), p in 1.0f64..5.0) {
        let a = loss_angles(&[g], p).unwrap();
        let b = loss_angles(&[[-g[0], -g[1]]], p).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(line_distance(*x, *y) < 1e-9);
            prop_assert!((0.0..PI).contains(x));
        }
        for d in loss_directions(&[g], p).unwrap() {
            prop_assert!((d[0].hypot(d[1]) - 1.0).abs() < 1e-12);
            prop_assert!(symbol(g, d, p).unwrap().abs() < 1e-9 * g[0].hypot(g[1]).powf(p));
            prop_assert!(symbol(g, [-d[0], -d[1]], p).unwrap().abs() < 1e-9 * g[0].hypot(g[1]).powf(p));
        }
    }

    #[test]
    fn empty_loss_set_iff_normal_symbol_stays_positive(
        angles in proptest::collection::vec(0.0..PI, 1..4),
        p in prop_oneof![0.2f64..0.95, 1.05f64..5.0],
    ) {
        let gs: Vec<[f64; 2]> = angles.iter().map(|a| unit(*a)).collect();
        let loss = loss_angles(&gs, p).unwrap();
        if loss.is_empty() {
            // Away from the cone intersections the grid minimum is bounded
            // below; sample it densely.
            let min = (0..ANGULAR_SAMPLES)
                .map(|k| {
                    let a = PI * k as f64 / ANGULAR_SAMPLES as f64;
                    normal_symbol(&SymbolQuery::new([0.0, 0.0], unit(a), gs.clone(), p).unwrap()).unwrap()
                })
                .fold(f64::INFINITY, f64::min);
            prop_assert!(min > 0.0);
        } else {
            for a in loss {
                let q = SymbolQuery::new([0.0, 0.0], unit(a), gs.clone(), p).unwrap();
                prop_assert!(normal_symbol(&q).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn bicharacteristics_are_perpendicular_to_xi(g in gradient(), p in 1.2f64..5.0, seed in 0.0..PI, sign in prop::bool::ANY) {
        let g0 = g;
        let xi = project_to_characteristic(g0, unit(seed), p).unwrap();
        let xi = if sign { xi } else { [-xi[0], -xi[1]] };
        let f = ConstantGradient(g0);
        let opts = TraceOptions { step: 2.5e-4, max_steps: 400, drift_tol: 1e-6 };
        let tr = trace_bicharacteristic([0.05, -0.1], xi, &[&f], p, TraceMode::Single(0), &opts, None).unwrap();
        prop_assert!(tr.max_perpendicularity < 1e-8);
        prop_assert!(tr.max_symbol < 1e-8);
    }
}

#[test]
fn ellipticity_matches_the_p_below_one_criterion_on_random_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let g = unit(rng.random_range(0.0..2.0 * PI));
        let g = [g[0] * rng.random_range(0.1..3.0), g[1] * rng.random_range(0.1..3.0)];
        let xi = unit(rng.random_range(0.0..2.0 * PI));
        let p = rng.random_range(0.1..5.0);
        let v = is_elliptic_single(g, p).unwrap();
        let s = symbol(g, xi, p).unwrap();
        if v.elliptic != (p < 1.0) || (p < 1.0 && s <= 0.0) {
            mismatches += 1;
        }
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn predicted_directions_are_loss_directions_turned_by_a_right_angle() {
    for p in [1.5, 2.0, 3.0, 4.0] {
        for theta in [0.0f64, 22.5, 45.0, 100.0] {
            let g = unit(theta.to_radians());
            let loss = loss_angles(&[g], p).unwrap();
            let pred = predicted_streak_angles_deg(&[g], p).unwrap();
            assert_eq!(loss.len(), pred.len());
            for l in &loss {
                let turned = line_angle(unit(l + PI / 2.0));
                assert!(pred.iter().any(|d| line_distance(d.to_radians(), turned) < 1e-9));
            }
        }
    }
}
