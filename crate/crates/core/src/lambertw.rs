//! Principal branch `W₀` of the Lambert W function.

use core::f64::consts::E;

use crate::error::{Error, Result};

/// `−1/e`, the branch point of `W₀`.
pub const BRANCH_POINT: f64 = -1.0 / E;

/// Arguments this far below the branch point are clamped onto it.
pub const BRANCH_SLACK: f64 = 1e-12;

const MAX_ITERATIONS: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W0Result {
    pub value: f64,
    pub iterations: u32,
    /// `|W e^W − x| / max(1, |x|)`.
    pub residual: f64,
}

fn residual(w: f64, x: f64) -> f64 {
    (w * libm::exp(w) - x).abs() / x.abs().max(1.0)
}

/// Evaluate `W₀(x)` for `x ≥ −1/e` by Halley iteration.
pub fn lambert_w0(x: f64) -> Result<W0Result> {
    if x.is_nan() || x < BRANCH_POINT - BRANCH_SLACK {
        return Err(Error::Domain { x });
    }
    if x == f64::INFINITY {
        return Ok(W0Result { value: f64::INFINITY, iterations: 0, residual: 0.0 });
    }
    if x <= BRANCH_POINT {
        return Ok(W0Result { value: -1.0, iterations: 0, residual: residual(-1.0, x) });
    }
    if x == 0.0 {
        return Ok(W0Result { value: 0.0, iterations: 0, residual: 0.0 });
    }

    let mut w = initial_guess(x);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let ew = libm::exp(w);
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 <= 0.0 {
            // Landed on the branch point; the series guess is already the answer.
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if !(w > -1.0) {
            w = -1.0 + f64::EPSILON;
        }
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(W0Result { value: w, iterations, residual: residual(w, x) })
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        // Series about the branch point in p = sqrt(2(ex + 1)).
        let p = libm::sqrt((2.0 * (E * x + 1.0)).max(0.0));
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        libm::log1p(x)
    } else {
        let l1 = libm::log(x);
        let l2 = libm::log(l1);
        l1 - l2 + l2 / l1
    }
}

/// `v e^v − (e^v − 1)`, accurate for small `v`.
fn branch_offset_fn(v: f64) -> f64 {
    if v.abs() < 0.1 {
        // Σ_{n≥2} (n−1) vⁿ / n!
        let mut term = v * v / 2.0;
        let mut sum = term;
        let mut n = 2.0;
        while n < 20.0 {
            term *= v / (n + 1.0);
            sum += term * n;
            if (term * n).abs() < 1e-18 * sum.abs() {
                break;
            }
            n += 1.0;
        }
        sum
    } else {
        v * libm::exp(v) - libm::expm1(v)
    }
}

/// `1 + W₀((d − 1)/e)` for `d ≥ 0`.
///
/// The offset form keeps full relative precision when the argument sits just
/// above the branch point (`d → 0`), where forming `(d − 1)/e` first and then
/// adding one back would cancel.
pub fn w0_plus_one(d: f64) -> f64 {
    if !(d > 0.0) {
        return 0.0;
    }
    if d >= 0.5 {
        return match lambert_w0((d - 1.0) / E) {
            Ok(r) => 1.0 + r.value,
            Err(_) => 0.0,
        };
    }
    // Newton on h(v) = d with h convex increasing: from sqrt(2d) the iterates
    // decrease monotonically onto the root.
    let mut v = libm::sqrt(2.0 * d);
    for _ in 0..MAX_ITERATIONS {
        let h = branch_offset_fn(v) - d;
        let step = h / (v * libm::exp(v));
        v -= step;
        if step.abs() <= 2.0 * f64::EPSILON * v {
            break;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection oracle on w·e^w = x over [-1, hi].
    fn bisect(x: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0_f64, 1.0_f64.max(libm::log(x.max(1.0)) + 1.0));
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid * libm::exp(mid) < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn known_values() {
        assert_eq!(lambert_w0(0.0).unwrap().value, 0.0);
        assert!((lambert_w0(E).unwrap().value - 1.0).abs() < 1e-15);
        assert_eq!(lambert_w0(BRANCH_POINT).unwrap().value, -1.0);
        let omega = lambert_w0(1.0).unwrap().value;
        assert!((omega - 0.567_143_290_409_783_8).abs() < 1e-15);
        assert!((omega - bisect(1.0)).abs() < 1e-15);
    }

    #[test]
    fn domain() {
        assert!(matches!(lambert_w0(-0.5), Err(Error::Domain { .. })));
        assert!(matches!(lambert_w0(f64::NAN), Err(Error::Domain { .. })));
        assert_eq!(lambert_w0(BRANCH_POINT - 0.5e-12).unwrap().value, -1.0);
    }

    #[test]
    fn agrees_with_bisection() {
        for &x in &[-0.367, -0.3, -0.1, 1e-8, 0.5, 2.0, 10.0, 1e3, 1e8, 1e12] {
            let w = lambert_w0(x).unwrap();
            assert!((w.value - bisect(x)).abs() <= 1e-12 * (1.0 + w.value.abs()), "x = {x}");
            assert!(w.residual <= 1e-12, "x = {x}: {}", w.residual);
        }
    }

    #[test]
    fn shifted_form_matches_direct() {
        for &d in &[1e-14, 1e-10, 1e-6, 1e-3, 0.1, 0.49, 0.5, 1.0, 7.0, 1e6] {
            let v = w0_plus_one(d);
            // defining identity written in the offset variable
            let lhs = branch_offset_fn(v);
            assert!((lhs - d).abs() <= 1e-13 * d, "d = {d}: {lhs}");
            if d >= 1e-3 {
                let direct = 1.0 + lambert_w0((d - 1.0) / E).unwrap().value;
                assert!((v - direct).abs() <= 1e-9 * v, "d = {d}: {v} vs {direct}");
            }
        }
        assert_eq!(w0_plus_one(0.0), 0.0);
    }
}
