//! Randomized invariants for matrix-fan slice maps: the merit of a fan is
//! positively homogeneous and convex in the unknown.

use proptest::prelude::*;
use svi_core::geometry::{ConeSpec, Vector};
use svi_core::increase::Mat;
use svi_core::setmaps::SetMap;

fn fan_and_cone(dim: usize, entries: &[f64], n_mats: usize) -> (SetMap, ConeSpec) {
    let mut mats = Vec::with_capacity(n_mats);
    for k in 0..n_mats {
        let start = k * dim * dim;
        mats.push(Mat::new(dim, dim, entries[start..start + dim * dim].to_vec()).unwrap());
    }
    let map = SetMap::fan(mats, 1).unwrap();
    (map, ConeSpec::orthant(dim).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn merit_is_positively_homogeneous(
        dim in 1usize..=3,
        entries in prop::collection::vec(-3.0f64..3.0, 18),
        x_seed in prop::collection::vec(-4.0f64..4.0, 3),
        n_mats in 1usize..=2,
    ) {
        let (map, cone) = fan_and_cone(dim, &entries, n_mats);
        let p = Vector::scalar(0.0);
        let x = Vector::new(x_seed[..dim].to_vec()).unwrap();
        let base = map.phi(&cone, &p, &x).unwrap();
        for t in [0.5, 2.0, 7.0] {
            let scaled = map.phi(&cone, &p, &x.scale(t)).unwrap();
            prop_assert!(
                (scaled - t * base).abs() <= 1e-9 * (1.0 + t * base),
                "phi(t x) = {scaled} vs t phi(x) = {}", t * base
            );
        }
    }

    #[test]
    fn merit_is_convex_along_segments(
        dim in 1usize..=3,
        entries in prop::collection::vec(-3.0f64..3.0, 18),
        x_seed in prop::collection::vec(-4.0f64..4.0, 3),
        y_seed in prop::collection::vec(-4.0f64..4.0, 3),
        lambda in 0.0f64..1.0,
        n_mats in 1usize..=2,
    ) {
        let (map, cone) = fan_and_cone(dim, &entries, n_mats);
        let p = Vector::scalar(0.0);
        let x = Vector::new(x_seed[..dim].to_vec()).unwrap();
        let y = Vector::new(y_seed[..dim].to_vec()).unwrap();
        let mid = x.scale(lambda).add(&y.scale(1.0 - lambda));
        let fx = map.phi(&cone, &p, &x).unwrap();
        let fy = map.phi(&cone, &p, &y).unwrap();
        let fm = map.phi(&cone, &p, &mid).unwrap();
        prop_assert!(
            fm <= lambda * fx + (1.0 - lambda) * fy + 1e-9,
            "phi(segment) = {fm} > chord {}", lambda * fx + (1.0 - lambda) * fy
        );
    }
}

#[test]
fn zero_maps_to_zero() {
    let map = SetMap::fan(vec![Mat::diag(&[2.0, -3.0])], 1).unwrap();
    let cone = ConeSpec::orthant(2).unwrap();
    let phi0 = map
        .phi(&cone, &Vector::scalar(0.0), &Vector::zeros(2))
        .unwrap();
    assert_eq!(phi0, 0.0);
}
