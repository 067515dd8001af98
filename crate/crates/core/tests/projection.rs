mod common;

use common::*;
use rand::Rng;
use stomo_core::math::{dist, dot, norm};
use stomo_core::oracle::seeded_rng;
use stomo_core::projection::{
    project_ball, project_box, project_halfspaces, project_simplex, Domain, Halfspace,
};
use stomo_core::Error;

const INSTANCES: usize = 100;
const PAIRS: usize = 1000;

fn assert_close(a: &[f64], b: &[f64], tol: f64, what: &str) {
    let e = dist(a, b);
    assert!(e <= tol, "{what}: {a:?} vs {b:?} (distance {e:e})");
}

#[test]
fn ball_matches_kkt_enumeration() {
    let mut rng = seeded_rng(1, 0);
    for _ in 0..INSTANCES {
        let d = rng.random_range(1..=4);
        let r = rng.random_range(0.1..3.0);
        let x = random_vec(&mut rng, d, 4.0);
        let p = project_ball(&x, r);
        assert_close(&p, &ball_kkt(&x, r), 1e-6, "ball");
        assert!(norm(&p) <= r + 1e-9);
    }
}

#[test]
fn box_matches_kkt_enumeration() {
    let mut rng = seeded_rng(2, 0);
    for _ in 0..INSTANCES {
        let d = rng.random_range(1..=4);
        let lo = random_vec(&mut rng, d, 1.0);
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.0..2.0)).collect();
        let x = random_vec(&mut rng, d, 3.0);
        assert_close(&project_box(&x, &lo, &hi).unwrap(), &box_kkt(&x, &lo, &hi), 1e-6, "box");
    }
}

#[test]
fn box_rejects_inverted_bounds() {
    assert!(project_box(&[0.0], &[1.0], &[0.0]).is_err());
    assert!(project_box(&[0.0, 1.0], &[0.0], &[1.0]).is_err());
}

#[test]
fn simplex_matches_support_enumeration() {
    let mut rng = seeded_rng(3, 0);
    for _ in 0..INSTANCES {
        let d = rng.random_range(1..=4);
        let x = random_vec(&mut rng, d, 2.0);
        let p = project_simplex(&x);
        assert_close(&p, &simplex_kkt(&x), 1e-6, "simplex");
        assert!(p.iter().all(|&v| v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn three_halfspaces_match_active_set_enumeration() {
    let mut rng = seeded_rng(4, 0);
    for _ in 0..INSTANCES {
        let d = rng.random_range(2..=4);
        let hs = random_halfspaces(&mut rng, d, 3);
        let x = random_vec(&mut rng, d, 3.0);
        // Radius far outside the region of interest leaves the ball inactive.
        let p = project_halfspaces(&x, &hs, 1e3).unwrap();
        assert_close(&p, &halfspaces_kkt(&x, &hs), 1e-6, "halfspaces");
        assert!(hs.iter().all(|h| h.violation(&p) <= 1e-8));
    }
}

#[test]
fn halfspaces_with_active_ball_satisfy_the_variational_inequality() {
    let mut rng = seeded_rng(5, 0);
    let r = 1.0;
    for _ in 0..INSTANCES {
        let d = rng.random_range(2..=4);
        let hs = random_halfspaces(&mut rng, d, 3);
        let x = random_vec(&mut rng, d, 3.0);
        let p = project_halfspaces(&x, &hs, r).unwrap();
        assert!(norm(&p) <= r + 1e-8 && hs.iter().all(|h| h.violation(&p) <= 1e-8));
        let residual: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
        let mut checked = 0;
        while checked < 200 {
            let z = Domain::Ball { radius: r }.sample(&mut rng, d, false);
            if hs.iter().any(|h| h.violation(&z) > 0.0) {
                continue;
            }
            checked += 1;
            let dz: Vec<f64> = z.iter().zip(&p).map(|(a, b)| a - b).collect();
            assert!(dot(&residual, &dz) <= 1e-6, "not a projection: {x:?} -> {p:?}");
        }
    }
}

#[test]
fn empty_intersection_is_an_error() {
    let hs = vec![Halfspace::new(vec![1.0, 0.0], -2.0)];
    assert!(matches!(project_halfspaces(&[0.0, 0.0], &hs, 1.0), Err(Error::Infeasible(_))));
}

fn check_operator(name: &str, seed: u64, d: usize, p: impl Fn(&[f64]) -> Vec<f64>) {
    let mut rng = seeded_rng(seed, 1);
    for _ in 0..PAIRS {
        let x = random_vec(&mut rng, d, 3.0);
        let y = random_vec(&mut rng, d, 3.0);
        let (px, py) = (p(&x), p(&y));
        assert!(dist(&px, &py) <= dist(&x, &y) + 1e-9, "{name} expands {x:?}, {y:?}");
        assert_close(&p(&px), &px, 1e-9, name);
    }
}

#[test]
fn operators_are_nonexpansive_and_idempotent() {
    check_operator("ball", 10, 4, |x| project_ball(x, 1.5));
    check_operator("simplex", 11, 4, project_simplex);
    let lo = [-1.0, -0.5, 0.0, -2.0];
    let hi = [1.0, 0.5, 0.2, 0.0];
    check_operator("box", 12, 4, |x| project_box(x, &lo, &hi).unwrap());
    let hs = random_halfspaces(&mut seeded_rng(13, 0), 3, 3);
    check_operator("halfspaces", 13, 3, |x| project_halfspaces(x, &hs, 2.0).unwrap());
}

mod properties {
    use proptest::prelude::*;
    use stomo_core::math::norm;
    use stomo_core::projection::{project_ball, project_box, project_simplex};

    proptest! {
        #[test]
        fn simplex_output_is_a_distribution(x in prop::collection::vec(-1e3f64..1e3, 1..12)) {
            let p = project_simplex(&x);
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn ball_output_is_inside(x in prop::collection::vec(-1e6f64..1e6, 1..12), r in 1e-3f64..1e3) {
            prop_assert!(norm(&project_ball(&x, r)) <= r + 1e-9);
        }

        #[test]
        fn clamp_is_idempotent(x in prop::collection::vec(-10f64..10.0, 3), lo in -5f64..0.0, width in 0f64..5.0) {
            let lo = vec![lo; 3];
            let hi: Vec<f64> = lo.iter().map(|l| l + width).collect();
            let once = project_box(&x, &lo, &hi).unwrap();
            prop_assert_eq!(project_box(&once, &lo, &hi).unwrap(), once);
        }
    }
}
