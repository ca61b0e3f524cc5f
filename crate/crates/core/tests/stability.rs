//! Lens membership is locally constant away from the lens boundary: moving
//! both centres by less than delta cannot change it when the membership
//! inequalities hold with slack above 3 delta.

use lensdepth::depth::in_lens;
use lensdepth::sampling::{random_unit_vector, substream};
use lensdepth::{distance, MetricSpace, Point};
use rand::Rng;

/// Smallest distance of the membership test from flipping.
fn margin(x: &Point, y1: &Point, y2: &Point, space: &MetricSpace) -> f64 {
    let d = |a: &Point, b: &Point| distance(a, b, space).unwrap();
    let (a, b, r) = (d(x, y1), d(x, y2), d(y1, y2));
    if a <= r && b <= r {
        (r - a).min(r - b)
    } else {
        (a - r).max(b - r)
    }
}

fn perturb(p: &[f64], delta: f64, rng: &mut impl Rng) -> Vec<f64> {
    let dir = random_unit_vector(p.len(), rng);
    let size = rng.random_range(0.0..delta);
    p.iter().zip(dir).map(|(a, u)| a + size * u).collect()
}

#[test]
fn euclidean_membership_is_stable() {
    let space = MetricSpace::Euclidean { dim: 2 };
    let mut rng = substream(17, 0);
    let mut checked = 0;
    while checked < 2000 {
        let mut pt = || vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let (x, y1, y2) = (pt(), pt(), pt());
        let delta = rng.random_range(0.001..0.05);
        let (px, p1, p2) = (Point::real(x), Point::real(y1.clone()), Point::real(y2.clone()));
        if margin(&px, &p1, &p2, &space) <= 3.0 * delta {
            continue;
        }
        checked += 1;
        let inside = in_lens(&px, &p1, &p2, &space).unwrap();
        for _ in 0..50 {
            let q1 = Point::real(perturb(&y1, delta, &mut rng));
            let q2 = Point::real(perturb(&y2, delta, &mut rng));
            assert_eq!(in_lens(&px, &q1, &q2, &space).unwrap(), inside);
        }
    }
}

#[test]
fn sphere_membership_is_stable() {
    let space = MetricSpace::Sphere { dim: 3 };
    let mut rng = substream(18, 0);
    let mut checked = 0;
    while checked < 1000 {
        let x = Point::unit(random_unit_vector(3, &mut rng)).unwrap();
        let y1 = random_unit_vector(3, &mut rng);
        let y2 = random_unit_vector(3, &mut rng);
        let delta = rng.random_range(0.001..0.05);
        let (p1, p2) = (Point::unit(y1.clone()).unwrap(), Point::unit(y2.clone()).unwrap());
        if margin(&x, &p1, &p2, &space) <= 3.0 * delta {
            continue;
        }
        checked += 1;
        let inside = in_lens(&x, &p1, &p2, &space).unwrap();
        for _ in 0..50 {
            // a chord of length < delta is an arc shorter than about delta
            let move_on_sphere = |y: &[f64], rng: &mut rand_chacha::ChaCha8Rng| {
                let v = perturb(y, delta * 0.99, rng);
                let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                Point::unit(v.into_iter().map(|c| c / n).collect::<Vec<_>>()).unwrap()
            };
            let q1 = move_on_sphere(&y1, &mut rng);
            let q2 = move_on_sphere(&y2, &mut rng);
            assert!(distance(&q1, &p1, &space).unwrap() < delta);
            assert_eq!(in_lens(&x, &q1, &q2, &space).unwrap(), inside);
        }
    }
}
