//! Randomized invariants for the distance and excess primitives.

use proptest::prelude::*;
use svi_core::geometry::{
    dist_point_set, excess, excess_identities, ConeSpec, ConvexBody, Vector,
};

fn vertices(b: &ConvexBody) -> &[Vector] {
    match b {
        ConvexBody::Polytope(vs) => vs,
        _ => unreachable!("strategy only builds polytopes"),
    }
}

/// Convex combinations of a polytope's vertices on a barycentric grid,
/// vertices included.
fn dense_cover(b: &ConvexBody, steps: usize) -> Vec<Vector> {
    let vs = vertices(b);
    let mut pts = Vec::new();
    match vs.len() {
        1 => pts.push(vs[0].clone()),
        2 => {
            for i in 0..=steps {
                let t = i as f64 / steps as f64;
                pts.push(vs[0].scale(1.0 - t).add(&vs[1].scale(t)));
            }
        }
        _ => {
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let (a, b_) = (i as f64 / steps as f64, j as f64 / steps as f64);
                    let c = 1.0 - a - b_;
                    pts.push(vs[0].scale(a).add(&vs[1].scale(b_)).add(&vs[2].scale(c)));
                }
            }
        }
    }
    pts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // e(A, C) ≤ e(A, B) + e(B, C) for bounded sets.
    #[test]
    fn excess_triangle_inequality(
        dim in 1usize..=3,
        seed_a in prop::collection::vec(-5.0f64..5.0, 9),
        seed_b in prop::collection::vec(-5.0f64..5.0, 9),
        seed_c in prop::collection::vec(-5.0f64..5.0, 9),
    ) {
        let poly = |chunk: &[f64]| {
            let vs: Vec<Vector> = chunk
                .chunks(dim)
                .take(3)
                .map(|c| Vector::new(c.to_vec()).unwrap())
                .collect();
            ConvexBody::polytope(vs).unwrap()
        };
        let (a, b, c) = (poly(&seed_a), poly(&seed_b), poly(&seed_c));
        let eac = excess(&a, &c).unwrap();
        let eab = excess(&a, &b).unwrap();
        let ebc = excess(&b, &c).unwrap();
        prop_assert!(eac <= eab + ebc + 1e-9, "e(A,C)={eac} > e(A,B)+e(B,C)={}", eab + ebc);
    }

    // The vertex maximum used by `excess` agrees with brute-force sampling of
    // the whole polytope (distance to a convex set is convex, so the sup over
    // the hull is attained at a vertex).
    #[test]
    fn excess_matches_dense_sampling(
        dim in 1usize..=3,
        a_seed in prop::collection::vec(-5.0f64..5.0, 9),
        b_seed in prop::collection::vec(-5.0f64..5.0, 9),
    ) {
        let poly = |chunk: &[f64]| {
            let vs: Vec<Vector> = chunk
                .chunks(dim)
                .take(3)
                .map(|c| Vector::new(c.to_vec()).unwrap())
                .collect();
            ConvexBody::polytope(vs).unwrap()
        };
        let (a, b) = (poly(&a_seed), poly(&b_seed));
        let fast = excess(&a, &b).unwrap();
        let mut slow: f64 = 0.0;
        for p in dense_cover(&a, 20) {
            slow = slow.max(dist_point_set(&p, &b).unwrap());
        }
        prop_assert!(slow <= fast + 1e-9, "sample beats vertex max: {slow} > {fast}");
        prop_assert!((fast - slow).abs() <= 1e-6, "vertex max {fast} vs dense {slow}");
    }

    // e(S + C, C) = e(S, C) and e(B(S, r), C) = e(S, C) + r when e(S, C) > 0,
    // each side computed through an independent code path.
    #[test]
    fn shift_and_enlargement_identities(
        dim in 1usize..=3,
        s_seed in prop::collection::vec(-5.0f64..5.0, 9),
        r in 0.01f64..2.0,
    ) {
        let vs: Vec<Vector> = s_seed
            .chunks(dim)
            .take(3)
            .map(|c| Vector::new(c.to_vec()).unwrap())
            .collect();
        let s = ConvexBody::polytope(vs).unwrap();
        let cone = ConeSpec::orthant(dim).unwrap();
        let ids = excess_identities(&s, &cone, r).unwrap();
        let (lhs, rhs) = ids.sum.unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9, "sum identity {lhs} vs {rhs}");
        if let Some((el, er)) = ids.enlargement {
            prop_assert!((el - er).abs() <= 1e-9, "enlargement identity {el} vs {er}");
        }
    }

    // e(A, B) = 0 exactly when every vertex of A lies in B.
    #[test]
    fn zero_excess_characterizes_containment(
        dim in 1usize..=3,
        a_seed in prop::collection::vec(-5.0f64..5.0, 9),
    ) {
        let vs: Vec<Vector> = a_seed
            .chunks(dim)
            .take(3)
            .map(|c| Vector::new(c.to_vec()).unwrap())
            .collect();
        let a = ConvexBody::polytope(vs.clone()).unwrap();
        let cone_body = ConeSpec::orthant(dim).unwrap().as_body();
        let e = excess(&a, &cone_body).unwrap();
        let max_vertex_dist = vs
            .iter()
            .map(|v| dist_point_set(v, &cone_body).unwrap())
            .fold(0.0f64, f64::max);
        prop_assert!((e - max_vertex_dist).abs() <= 1e-12);
        prop_assert_eq!(e == 0.0, vs.iter().all(|v| dist_point_set(v, &cone_body).unwrap() == 0.0));
    }
}

#[test]
fn triangle_inequality_with_mixed_body_kinds() {
    let a = ConvexBody::polytope(vec![
        Vector::new(vec![2.0, -1.0]).unwrap(),
        Vector::new(vec![-1.0, 3.0]).unwrap(),
    ])
    .unwrap();
    let b = ConvexBody::enlargement(a.clone(), 0.5).unwrap();
    let c = ConeSpec::orthant(2).unwrap().as_body();
    let eac = excess(&a, &c).unwrap();
    let eab = excess(&a, &b).unwrap();
    let ebc = excess(&b, &c).unwrap();
    assert!(eac <= eab + ebc + 1e-9);
    assert_eq!(eab, 0.0);
}
