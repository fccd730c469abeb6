//! Accuracy of the principal-branch Lambert W evaluation.

use proptest::prelude::*;
use wpt_mec_core::lambert_w0;
use wpt_mec_core::lambertw::BRANCH_POINT;

fn identity_residual(x: f64) -> f64 {
    let w = lambert_w0(x).unwrap().value;
    (w * w.exp() - x).abs() / x.abs().max(1.0)
}

#[test]
fn identity_on_log_spaced_grid() {
    let n = 10_000;
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let t = k as f64 / (n - 1) as f64;
        // Offsets from the branch point, from 1e-14 up to 1e12 + 1/e.
        let x = BRANCH_POINT + 10f64.powf(-14.0 + 26.0 * t);
        worst = worst.max(identity_residual(x.min(1e12)));
    }
    assert!(worst <= 1e-12, "worst residual {worst:e}");
}

#[test]
fn omega_constant() {
    assert!((lambert_w0(1.0).unwrap().value - 0.5671432904).abs() <= 1e-9);
}

#[test]
fn branch_point_and_origin() {
    assert!((lambert_w0(BRANCH_POINT).unwrap().value + 1.0).abs() <= 1e-6);
    assert_eq!(lambert_w0(0.0).unwrap().value, 0.0);
    assert!(lambert_w0(BRANCH_POINT - 1e-6).is_err());
}

proptest! {
    #[test]
    fn identity_holds_for_random_arguments(e in -14.0f64..12.0) {
        let x = BRANCH_POINT + 10f64.powf(e);
        prop_assert!(identity_residual(x) <= 1e-12);
    }

    #[test]
    fn increasing(e in -14.0f64..11.0, d in 1e-3f64..1.0) {
        let x = BRANCH_POINT + 10f64.powf(e);
        let y = BRANCH_POINT + 10f64.powf(e + d);
        prop_assert!(lambert_w0(y).unwrap().value > lambert_w0(x).unwrap().value);
    }
}
