//! Randomized consistency between certified increase rates and measured
//! slopes: wherever a rate α is certified, the merit must descend at speed at
//! least α − 1 at every infeasible point.

use proptest::prelude::*;
use svi_core::config::{EstimatorConfig, Tolerances};
use svi_core::geometry::{ConeSpec, Vector, WindowBox};
use svi_core::increase::check_c_increase;
use svi_core::setmaps::{InclusionInstance, SetMap};
use svi_core::slopes::{merit_fn, strong_slope};

fn sc(x: f64) -> Vector {
    Vector::scalar(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    // f(p, x) = a x − d x² + b p is concave and increasing on the window, so
    // the slice map F(p, ·) = [f, ∞) admits the rate 1 + (minimum slope).
    #[test]
    fn certified_rate_lower_bounds_measured_slopes(
        a in 1.0f64..2.0,
        d in 0.0f64..0.2,
        b in 0.5f64..1.5,
    ) {
        let cfg = EstimatorConfig::default();
        let map = SetMap::epigraph(&format!("{a} * x - {d} * x^2 + {b} * p"), 1, 1, true).unwrap();
        let cone = ConeSpec::orthant(1).unwrap();
        let window = WindowBox::new(vec![-2.0], vec![2.0]).unwrap();
        let inst = InclusionInstance::new(
            map,
            cone,
            sc(0.0),
            sc(0.0),
            WindowBox::new(vec![-0.5], vec![0.5]).unwrap(),
            window.clone(),
            Tolerances::default(),
        )
        .unwrap();

        // Minimum slope of f(p̄, ·) on the window is attained at the right
        // edge; certify strictly below 1 + that.
        let min_slope = a - 2.0 * d * 2.0;
        let alpha = 1.0 + 0.75 * min_slope;
        let cert = check_c_increase(
            &|x: &Vector| inst.map().evaluate(inst.pbar(), x),
            inst.cone(),
            alpha,
            inst.x_window(),
            &cfg,
            None,
        )
        .unwrap();
        prop_assert!(cert.valid(), "alpha {alpha} refused: {:?}", cert.failures.first());

        // Measured descent at sampled infeasible points.
        let psi = merit_fn(inst.map(), inst.cone(), inst.pbar());
        let mut checked = 0;
        for x in inst.x_window().lattice(21) {
            let merit = inst.phi_at(inst.pbar(), &x).unwrap();
            if !(merit > 1e-6 && merit.is_finite()) {
                continue;
            }
            let s = strong_slope(&psi, &x, &cfg).unwrap();
            prop_assert!(
                s.value >= (alpha - 1.0) * 0.9,
                "slope {} at x = {} under rate {alpha}",
                s.value,
                x.at(0)
            );
            checked += 1;
        }
        prop_assert!(checked >= 5, "only {checked} infeasible samples");

        // A rate beyond 1 + max slope is impossible for this family; the
        // checker must refuse it.
        let max_slope = a + 2.0 * d * 2.0;
        let too_much = 1.0 + max_slope + 0.5;
        let refused = check_c_increase(
            &|x: &Vector| inst.map().evaluate(inst.pbar(), x),
            inst.cone(),
            too_much,
            inst.x_window(),
            &cfg,
            None,
        )
        .unwrap();
        prop_assert!(!refused.valid(), "rate {too_much} wrongly accepted");
    }
}
